//! Cross-check of the moment path against a truncated Fock-space run.

use std::fmt;

use rsf::fock::FockOptions;
use rsf::{reduce_from_fock, CMat, SecondOrderState};

use crate::error::{CliError, Context};
use crate::plan::Plan;
use crate::run::{initial_sim, moments_backend, walk, Fock, Sim};

/// Largest deviation found in one block.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockReport {
    pub block: &'static str,
    pub max_deviation: f64,
    pub t: f64,
    pub row: usize,
    pub col: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub cutoff: usize,
    pub tol: f64,
    pub blocks: Vec<BlockReport>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.blocks.iter().all(|b| b.max_deviation <= self.tol)
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "oracle check at cutoff {}, tolerance {:e}", self.cutoff, self.tol)?;
        for b in &self.blocks {
            let verdict = if b.max_deviation <= self.tol { "ok" } else { "FAIL" };
            writeln!(
                f,
                "  {:<6} {:>10.3e}  worst [{},{}] at t = {}  {verdict}",
                b.block, b.max_deviation, b.row, b.col, b.t
            )?;
        }
        write!(f, "{}", if self.passed() { "all blocks within tolerance" } else { "some blocks exceed the tolerance" })
    }
}

fn update(reports: &mut Vec<BlockReport>, block: &'static str, a: &CMat, b: &CMat, t: f64) {
    let (mut worst, mut at) = (0.0, (0, 0));
    for c in 0..a.ncols() {
        for r in 0..a.nrows() {
            let d = (a[(r, c)] - b[(r, c)]).norm();
            if d > worst {
                worst = d;
                at = (r, c);
            }
        }
    }
    match reports.iter_mut().find(|r| r.block == block) {
        Some(r) if r.max_deviation >= worst => {}
        Some(r) => *r = BlockReport { block, max_deviation: worst, t, row: at.0, col: at.1 },
        None => reports.push(BlockReport { block, max_deviation: worst, t, row: at.0, col: at.1 }),
    }
}

/// Runs the pipeline on moments and on a Fock space truncated at `cutoff`
/// and reports the worst deviation per block over the time grid.
pub fn oracle_check(plan: &Plan, cutoff: usize, tol: f64, dt: Option<f64>) -> Result<OracleReport, CliError> {
    let moments = walk(plan, &moments_backend(plan, dt), initial_sim(plan)?)?;
    let fock_backend = Fock { opts: FockOptions { dt: dt.or(plan.dt), ..FockOptions::default() } };
    let fock = walk(plan, &fock_backend, plan.initial_fock(cutoff)?)?;
    let mut blocks = Vec::new();
    for ((&t, m), f) in plan.grid.iter().zip(&moments.states).zip(&fock.states) {
        let ctx = || format!("reducing the oracle state at t = {t}");
        let r = reduce_from_fock(f).context(ctx)?;
        let a = m.reduced();
        let alpha = |x: &rsf::CVec| CMat::from_column_slice(x.len(), 1, x.as_slice());
        update(&mut blocks, "rho", &a.rho, &r.rho, t);
        update(&mut blocks, "alpha", &alpha(&a.alpha), &alpha(&r.alpha), t);
        update(&mut blocks, "r", &a.r, &r.r, t);
        update(&mut blocks, "rho4", &a.rho4, &r.rho4, t);
        update(&mut blocks, "beta", &a.beta, &r.beta, t);
        if let Sim::Second(s) = m {
            let o = SecondOrderState::from_fock(f).context(ctx)?;
            update(&mut blocks, "m", &s.m, &o.m, t);
            update(&mut blocks, "q", &s.q, &o.q, t);
            update(&mut blocks, "zeta", &s.zeta, &o.zeta, t);
        }
    }
    Ok(OracleReport { cutoff, tol, blocks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Scenario;

    #[test]
    fn pumped_lossy_beamsplitter_matches_the_oracle() {
        let text = r#"
n_modes = 2
[time]
t_max = 0.4
samples = 5
[[initial]]
preset = "fock"
occupations = [1, 0]
[[pipeline]]
step = "beamsplitter"
modes = [1, 2]
transmission = 0.3
[[pipeline]]
step = "evolve"
duration = 0.2
xi = [{ k = 2, value = [0.05, 0.02] }]
h = [{ i = 1, j = 2, value = [0.4, 0.1] }]
gamma_down = [{ i = 1, j = 1, value = 0.5 }]
[[pipeline]]
step = "efficiency"
eta = [0.8, 0.6]
[[pipeline]]
step = "evolve"
bath = { n_omega = 0.01 }
"#;
        let plan = Plan::new(&Scenario::from_toml(text).unwrap()).unwrap();
        let report = oracle_check(&plan, 6, 1e-6, None).unwrap();
        assert!(report.passed(), "{report}");
        assert_eq!(report.blocks.len(), 5);
        // too small a cutoff shows up as a failing block
        let coarse = oracle_check(&plan, 2, 1e-6, None);
        assert!(coarse.map(|r| !r.passed()).unwrap_or(true));
    }
}
