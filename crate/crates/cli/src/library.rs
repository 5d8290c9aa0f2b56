//! Scenarios shipped with the binary and the critical-time sweep.

use rayon::prelude::*;

use crate::config::{parse_value, Scenario};
use crate::error::CliError;
use crate::plan::Plan;
use crate::run::{run_plan, Table};

pub struct Bundled {
    pub name: &'static str,
    pub summary: &'static str,
    pub text: &'static str,
}

pub const BUNDLED: &[Bundled] = &[
    Bundled {
        name: "bsv_thermal",
        summary: "BSV under a uniform thermal bath: PPT eigenvalues and critical time",
        text: include_str!("../scenarios/bsv_thermal.cfg"),
    },
    Bundled {
        name: "single_photon_thermal",
        summary: "weak-homodyne single photon with thermal damping of the photon modes",
        text: include_str!("../scenarios/single_photon_thermal.cfg"),
    },
    Bundled {
        name: "bsv_generation",
        summary: "squeezed pairs generated from vacuum (second-order moments)",
        text: include_str!("../scenarios/bsv_generation.cfg"),
    },
    Bundled {
        name: "fock_splitting",
        summary: "Fock state on a beamsplitter: Mandel and cross-mode Q parameters",
        text: include_str!("../scenarios/fock_splitting.cfg"),
    },
];

/// Name of the built-in sweep that is not a single scenario.
pub const SWEEP: &str = "critical_time_sweep";

pub fn bundled(name: &str) -> Option<&'static Bundled> {
    BUNDLED.iter().find(|b| b.name == name)
}

pub fn names() -> Vec<&'static str> {
    BUNDLED.iter().map(|b| b.name).chain([SWEEP]).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepParams {
    pub n_min: f64,
    pub n_max: f64,
    pub points: usize,
    pub gains: Vec<f64>,
    pub t_max: f64,
    pub samples: usize,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams { n_min: 0.05, n_max: 1.0, points: 20, gains: vec![0.1, 0.5, 1.0, 3.0], t_max: 6.0, samples: 121 }
    }
}

impl SweepParams {
    pub fn from_overrides(overrides: &[String]) -> Result<Self, CliError> {
        let mut p = SweepParams::default();
        for o in overrides {
            let (k, raw) = o
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("parameter `{o}` is not of the form key=value")))?;
            let v = parse_value(raw.trim());
            let bad = || CliError::config(k, format!("invalid value `{raw}`"));
            let num = |v: &toml::Value| v.as_float().or_else(|| v.as_integer().map(|i| i as f64)).ok_or_else(bad);
            let count = |v: &toml::Value| v.as_integer().and_then(|i| usize::try_from(i).ok()).ok_or_else(bad);
            match k.trim() {
                "n_min" => p.n_min = num(&v)?,
                "n_max" => p.n_max = num(&v)?,
                "points" => p.points = count(&v)?,
                "t_max" => p.t_max = num(&v)?,
                "samples" => p.samples = count(&v)?,
                "gains" => p.gains = v.as_array().ok_or_else(bad)?.iter().map(num).collect::<Result<_, _>>()?,
                other => return Err(CliError::config(other, "unknown sweep parameter")),
            }
        }
        if !(p.n_min > 0.0 && p.n_max >= p.n_min) || p.points == 0 {
            return Err(CliError::Config("sweep needs 0 < n_min <= n_max and points >= 1".into()));
        }
        Ok(p)
    }

    pub fn n_values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.n_min];
        }
        (0..self.points)
            .map(|k| {
                let f = k as f64 / (self.points - 1) as f64;
                self.n_min * (1.0 - f) + self.n_max * f
            })
            .collect()
    }
}

fn critical_time_of(base: &str, n_omega: f64, extra: &[String], p: &SweepParams, dt: Option<f64>) -> Result<f64, CliError> {
    let mut overrides = vec![
        format!("pipeline.0.bath.n_omega={n_omega}"),
        "observables=[\"critical_time\"]".to_string(),
        format!("time.t_max={}", p.t_max),
        format!("time.samples={}", p.samples),
    ];
    overrides.extend_from_slice(extra);
    let s = Scenario::from_toml_with(base, &overrides)?;
    let t = run_plan(&Plan::new(&s)?, dt)?;
    Ok(t.rows[0][1])
}

/// Critical time against bath occupation for the single photon and for BSV
/// at each gain. Cells stay `nan` when no crossing occurs before `t_max`.
pub fn critical_time_sweep(p: &SweepParams, dt: Option<f64>) -> Result<Table, CliError> {
    let photon = bundled("single_photon_thermal").expect("bundled").text;
    let bsv = bundled("bsv_thermal").expect("bundled").text;
    let ns = p.n_values();
    let jobs: Vec<(usize, usize)> = (0..ns.len()).flat_map(|i| (0..=p.gains.len()).map(move |s| (i, s))).collect();
    let values: Vec<f64> = jobs
        .par_iter()
        .map(|&(i, s)| match s {
            0 => critical_time_of(photon, ns[i], &[], p, dt),
            _ => critical_time_of(bsv, ns[i], &[format!("initial.0.gain={}", p.gains[s - 1])], p, dt),
        })
        .collect::<Result<_, _>>()?;
    let width = p.gains.len() + 1;
    let mut columns = vec!["n_omega".to_string(), "tc_single_photon".to_string()];
    columns.extend(p.gains.iter().map(|g| format!("tc_bsv_gain_{g}")));
    let rows = ns
        .iter()
        .enumerate()
        .map(|(i, &n)| std::iter::once(n).chain(values[i * width..(i + 1) * width].iter().copied()).collect())
        .collect();
    Ok(Table { columns, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_bundled_scenario_round_trips() {
        for b in BUNDLED {
            let s = Scenario::from_toml(b.text).unwrap_or_else(|e| panic!("{}: {e}", b.name));
            let again = Scenario::from_toml(&s.to_toml().unwrap()).unwrap();
            assert_eq!(s, again, "{}", b.name);
            Plan::new(&s).unwrap_or_else(|e| panic!("{}: {e}", b.name));
        }
    }

    #[test]
    fn sweep_parameters() {
        let p = SweepParams::from_overrides(&["gains=[0.2, 1]".into(), "points=3".into(), "n_max=0.25".into()]).unwrap();
        assert_eq!(p.gains, vec![0.2, 1.0]);
        assert!(p.n_values().iter().zip([0.05, 0.15, 0.25]).all(|(a, b)| (a - b).abs() < 1e-15));
        assert!(SweepParams::from_overrides(&["gain=1".into()]).is_err());
        assert!(SweepParams::from_overrides(&["points=-1".into()]).is_err());
    }
}
