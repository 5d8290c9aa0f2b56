//! Scenario files.
//!
//! A scenario is a TOML document. Mode numbers are one-based everywhere in the
//! file and converted to zero-based indices when the scenario is lowered into
//! library types. Unknown keys are rejected.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub n_modes: usize,
    #[serde(default)]
    pub observables: Vec<ObservableSpec>,
    pub time: TimeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bipartition: Option<BipartitionSpec>,
    /// Components placed on consecutive modes, in order.
    pub initial: Vec<InitialSpec>,
    #[serde(default)]
    pub pipeline: Vec<Step>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub t_max: f64,
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BipartitionSpec {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

/// A complex number written as `0.5` or `[0.5, -0.1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Complex {
    Real(f64),
    Pair([f64; 2]),
}

impl Complex {
    pub fn value(self) -> rsf::C64 {
        match self {
            Complex::Real(x) => rsf::C64::new(x, 0.0),
            Complex::Pair([re, im]) => rsf::C64::new(re, im),
        }
    }
}

/// Matrix element `(i, j)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub i: usize,
    pub j: usize,
    pub value: Complex,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorEntry {
    pub k: usize,
    pub value: Complex,
}

fn four_modes() -> [usize; 4] {
    [1, 2, 3, 4]
}

fn two_modes() -> [usize; 2] {
    [1, 2]
}

fn four() -> usize {
    4
}

fn two() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Vacuum {
        n_modes: usize,
    },
    Fock {
        occupations: Vec<usize>,
    },
    Coherent {
        amplitudes: Vec<Complex>,
    },
    Thermal {
        nbar: Vec<f64>,
    },
    Bsv {
        gain: f64,
        #[serde(default = "four_modes")]
        modes: [usize; 4],
        #[serde(default = "four")]
        n_modes: usize,
    },
    SinglePhoton {
        #[serde(default = "two_modes")]
        modes: [usize; 2],
        #[serde(default = "two")]
        n_modes: usize,
    },
    WeakHomodyne {
        alpha: f64,
        #[serde(default = "four_modes")]
        modes: [usize; 4],
        #[serde(default = "four")]
        n_modes: usize,
    },
}

fn unit_rate() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSpec {
    pub n_omega: f64,
    #[serde(default = "unit_rate")]
    pub gamma_omega: f64,
    /// All modes when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseRateSpec {
    pub mode: usize,
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatteringSpec {
    pub kappa: f64,
    /// Full mode matrix; entries not listed are zero.
    pub u: Vec<Entry>,
}

/// One evolution segment. `h`, `gamma_up` and `gamma_down` list the upper
/// triangle and are completed Hermitian; `squeezing` is completed symmetric.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSpec {
    /// Runs to the end of the time grid when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub h: Vec<Entry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub xi: Vec<VectorEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gamma_up: Vec<Entry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gamma_down: Vec<Entry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bath: Option<BathSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<PhaseRateSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scattering: Vec<ScatteringSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub squeezing: Vec<Entry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum Step {
    Evolve(EvolveSpec),
    Beamsplitter(BeamsplitterSpec),
    Phase(PhaseSpec),
    Efficiency(EfficiencySpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamsplitterSpec {
    pub modes: [usize; 2],
    pub transmission: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpec {
    pub mode: usize,
    pub shift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EfficiencySpec {
    pub eta: Vec<f64>,
}

/// Requested output columns, written as `"ppt"`, `"mandel_q(1)"`, `"gen_q(1,2)"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ObservableSpec {
    Ppt,
    CriticalTime,
    CovariancePpt,
    MandelQ(usize),
    GenQ(usize, usize),
    Entropy,
    Occupations,
}

impl fmt::Display for ObservableSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObservableSpec::Ppt => write!(f, "ppt"),
            ObservableSpec::CriticalTime => write!(f, "critical_time"),
            ObservableSpec::CovariancePpt => write!(f, "covariance_ppt"),
            ObservableSpec::MandelQ(i) => write!(f, "mandel_q({i})"),
            ObservableSpec::GenQ(i, j) => write!(f, "gen_q({i},{j})"),
            ObservableSpec::Entropy => write!(f, "entropy"),
            ObservableSpec::Occupations => write!(f, "occupations"),
        }
    }
}

impl FromStr for ObservableSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let args = |name: &str| -> Option<Vec<usize>> {
            let inner = s.strip_prefix(name)?.strip_prefix('(')?.strip_suffix(')')?;
            inner.split(',').map(|a| a.parse().ok()).collect()
        };
        match s.as_str() {
            "ppt" => return Ok(ObservableSpec::Ppt),
            "critical_time" => return Ok(ObservableSpec::CriticalTime),
            "covariance_ppt" => return Ok(ObservableSpec::CovariancePpt),
            "entropy" => return Ok(ObservableSpec::Entropy),
            "occupations" => return Ok(ObservableSpec::Occupations),
            _ => {}
        }
        match (args("mandel_q").as_deref(), args("gen_q").as_deref()) {
            (Some([i]), _) => Ok(ObservableSpec::MandelQ(*i)),
            (_, Some([i, j])) => Ok(ObservableSpec::GenQ(*i, *j)),
            _ => Err(format!("unknown observable `{s}`")),
        }
    }
}

impl TryFrom<String> for ObservableSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<ObservableSpec> for String {
    fn from(o: ObservableSpec) -> String {
        o.to_string()
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Parses `text`, applies `key.path=value` overrides and deserializes.
    pub fn from_toml_with(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        if overrides.is_empty() {
            return Self::from_toml(text);
        }
        let mut doc: toml::Value = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        Scenario::deserialize(doc).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(format!("cannot serialize scenario: {e}")))
    }
}

/// Parses the right-hand side of an override as a TOML value, falling back to
/// a bare string.
pub fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// `pipeline.0.bath.n_omega=0.5`: numeric segments index arrays.
pub fn apply_override(doc: &mut toml::Value, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{spec}` is not of the form key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    let mut node = doc;
    for (depth, key) in keys.iter().enumerate() {
        let last = depth + 1 == keys.len();
        let missing = || CliError::Config(format!("override `{path}`: no key `{key}`"));
        node = match node {
            toml::Value::Array(items) => {
                let i: usize = key.parse().map_err(|_| missing())?;
                items.get_mut(i).ok_or_else(missing)?
            }
            toml::Value::Table(t) => {
                if last {
                    t.entry(key.to_string()).or_insert(toml::Value::Boolean(false))
                } else {
                    t.get_mut(*key).ok_or_else(missing)?
                }
            }
            _ => return Err(missing()),
        };
    }
    *node = parse_value(raw.trim());
    Ok(())
}
