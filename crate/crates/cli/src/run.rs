//! Pipeline execution and observable tables.

use rsf::entanglement::{critical_time_by, ppt_of};
use rsf::evolution::IntegrateOptions;
use rsf::fock::{apply_mode_unitary_fock, detector_efficiency_fock, evolve_fock, FockOptions};
use rsf::{
    apply_mode_unitary, covariance_from_reduced, covariance_ppt, detector_efficiency, gen_q, integrate,
    integrate_second_order, mandel_q, rsf_entropy, CMat, FockState, GeneratorSpec, ReducedState, RsfError,
    Schedule, SecondOrderState,
};

use crate::config::ObservableSpec;
use crate::error::{CliError, Context};
use crate::plan::{Plan, PlanStep};

/// Grid points closer than this to a step boundary belong to it.
const TIME_EPS: f64 = 1e-12;

/// State carried along the pipeline: the enlarged moments while squeezing
/// segments remain, the plain reduced state afterwards.
#[derive(Clone, Debug)]
pub enum Sim {
    Reduced(ReducedState),
    Second(SecondOrderState),
}

impl Sim {
    pub fn reduced(&self) -> &ReducedState {
        match self {
            Sim::Reduced(r) => r,
            Sim::Second(s) => &s.base,
        }
    }
}

/// How a pipeline is carried out: on moments or on a truncated Fock space.
pub trait Backend {
    type State: Clone;

    /// States at `times` measured from the start of the segment.
    fn evolve(&self, s: &Self::State, g: &GeneratorSpec, second_order: bool, times: &[f64]) -> rsf::Result<Vec<Self::State>>;
    fn unitary(&self, s: &Self::State, u: &CMat) -> rsf::Result<Self::State>;
    fn efficiency(&self, s: &Self::State, eta: &[f64]) -> rsf::Result<Self::State>;
}

pub struct Moments {
    pub opts: IntegrateOptions,
}

impl Backend for Moments {
    type State = Sim;

    fn evolve(&self, s: &Sim, g: &GeneratorSpec, second_order: bool, times: &[f64]) -> rsf::Result<Vec<Sim>> {
        let sched = Schedule::constant(g.clone());
        match (s, second_order) {
            (Sim::Second(x), true) => {
                Ok(integrate_second_order(x, &sched, times, self.opts)?.into_iter().map(Sim::Second).collect())
            }
            (Sim::Reduced(_), true) => Err(RsfError::Unsupported("squeezing segment on a reduced state".into())),
            (_, false) => Ok(integrate(s.reduced(), &sched, times, self.opts)?.into_iter().map(Sim::Reduced).collect()),
        }
    }

    fn unitary(&self, s: &Sim, u: &CMat) -> rsf::Result<Sim> {
        Ok(Sim::Reduced(apply_mode_unitary(s.reduced(), u)?))
    }

    fn efficiency(&self, s: &Sim, eta: &[f64]) -> rsf::Result<Sim> {
        Ok(Sim::Reduced(detector_efficiency(s.reduced(), eta)?))
    }
}

pub struct Fock {
    pub opts: FockOptions,
}

impl Backend for Fock {
    type State = FockState;

    fn evolve(&self, s: &FockState, g: &GeneratorSpec, _: bool, times: &[f64]) -> rsf::Result<Vec<FockState>> {
        evolve_fock(s, &Schedule::constant(g.clone()), times, self.opts)
    }

    fn unitary(&self, s: &FockState, u: &CMat) -> rsf::Result<FockState> {
        apply_mode_unitary_fock(s, u)
    }

    fn efficiency(&self, s: &FockState, eta: &[f64]) -> rsf::Result<FockState> {
        detector_efficiency_fock(s, eta)
    }
}

/// Evolution step covering `[start, end)`.
#[derive(Clone, Debug)]
pub struct Span {
    pub start: f64,
    pub end: f64,
    pub step: usize,
}

pub struct Walk<S> {
    /// One state per grid time.
    pub states: Vec<S>,
    pub spans: Vec<Span>,
    /// Times at which instantaneous elements act.
    pub element_times: Vec<f64>,
}

/// Runs the pipeline and records the state at every grid time. A grid time
/// that coincides with an optical element sees the state after it.
pub fn walk<B: Backend>(plan: &Plan, backend: &B, initial: B::State) -> Result<Walk<B::State>, CliError> {
    let grid = &plan.grid;
    let mut out = Walk { states: Vec::with_capacity(grid.len()), spans: Vec::new(), element_times: Vec::new() };
    let mut state = initial;
    let mut t = 0.0;
    let mut next = 0;
    for (k, step) in plan.steps.iter().enumerate() {
        let ctx = || format!("pipeline[{k}] at t = {t}");
        match step {
            PlanStep::Evolve { generator, duration, second_order } => {
                let end = t + duration;
                let mut times: Vec<f64> = Vec::new();
                while next + times.len() < grid.len() && grid[next + times.len()] < end - TIME_EPS {
                    times.push((grid[next + times.len()] - t).max(0.0));
                }
                let recorded = times.len();
                if end.is_finite() {
                    times.push(duration.to_owned());
                }
                let mut traj = backend.evolve(&state, generator, *second_order, &times).context(ctx)?;
                if let Some(last) = traj.last() {
                    state = last.clone();
                }
                traj.truncate(recorded);
                out.states.extend(traj);
                next += recorded;
                out.spans.push(Span { start: t, end, step: k });
                t = end;
            }
            PlanStep::Unitary { u } => {
                state = backend.unitary(&state, u).context(ctx)?;
                out.element_times.push(t);
            }
            PlanStep::Efficiency(eta) => {
                state = backend.efficiency(&state, eta).context(ctx)?;
                out.element_times.push(t);
            }
        }
    }
    while next < grid.len() {
        if (grid[next] - t).abs() > TIME_EPS * t.max(1.0) {
            return Err(CliError::config("time.t_max", format!("grid time {} lies beyond the pipeline end {t}", grid[next])));
        }
        out.states.push(state.clone());
        next += 1;
    }
    Ok(out)
}

/// Result table with a leading `t` column.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Errors that depend on the state at one time and leave an empty cell.
fn cell(r: rsf::Result<f64>) -> Result<f64, RsfError> {
    match r {
        Ok(v) => Ok(v),
        Err(RsfError::EmptyMode { .. } | RsfError::TracelessState(_)) => Ok(f64::NAN),
        Err(e) => Err(e),
    }
}

fn columns(plan: &Plan) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    for o in &plan.observables {
        match *o {
            ObservableSpec::Ppt => {
                let (da, db) = plan.bipartition.as_ref().expect("validated").dims();
                cols.push("ppt_min".into());
                cols.extend((1..=da * db).map(|k| format!("ppt_eig_{k}")));
            }
            ObservableSpec::CriticalTime => cols.push("critical_time".into()),
            ObservableSpec::CovariancePpt => cols.push("cov_ppt_min".into()),
            ObservableSpec::MandelQ(i) => cols.push(format!("mandel_q_{i}")),
            ObservableSpec::GenQ(i, j) => cols.push(format!("gen_q_{i}_{j}")),
            ObservableSpec::Entropy => cols.push("entropy".into()),
            ObservableSpec::Occupations => cols.extend((1..=plan.n_modes).map(|k| format!("n_{k}"))),
        }
    }
    cols
}

fn row(plan: &Plan, t: f64, rs: &ReducedState, t_c: f64) -> rsf::Result<Vec<f64>> {
    let mut out = vec![t];
    for o in &plan.observables {
        match *o {
            ObservableSpec::Ppt => {
                let bp = plan.bipartition.as_ref().expect("validated");
                let (da, db) = bp.dims();
                match ppt_of(rs, bp) {
                    Ok(rep) => {
                        out.push(rep.min_eigenvalue);
                        out.extend(rep.eigenvalues);
                    }
                    Err(RsfError::TracelessState(_)) => out.extend(std::iter::repeat(f64::NAN).take(da * db + 1)),
                    Err(e) => return Err(e),
                }
            }
            ObservableSpec::CriticalTime => out.push(t_c),
            ObservableSpec::CovariancePpt => {
                let v = covariance_from_reduced(rs)?;
                let ev = covariance_ppt(&v, plan.bipartition.as_ref().expect("validated"))?;
                out.push(ev.into_iter().fold(f64::INFINITY, f64::min));
            }
            ObservableSpec::MandelQ(i) => out.push(cell(mandel_q(rs, i - 1))?),
            ObservableSpec::GenQ(i, j) => out.push(cell(gen_q(rs, i - 1, j - 1))?),
            ObservableSpec::Entropy => out.push(rsf_entropy(rs)?),
            ObservableSpec::Occupations => out.extend((0..plan.n_modes).map(|k| rs.rho[(k, k)].re)),
        }
    }
    Ok(out)
}

fn min_ppt(plan: &Plan, s: &Sim) -> rsf::Result<f64> {
    cell(ppt_of(s.reduced(), plan.bipartition.as_ref().expect("validated")).map(|r| r.min_eigenvalue))
}

/// Advances a moment state from `from` to `to` across evolution spans only.
fn advance(plan: &Plan, backend: &Moments, spans: &[Span], s: &Sim, from: f64, to: f64) -> rsf::Result<Sim> {
    let mut s = s.clone();
    for span in spans {
        let (lo, hi) = (from.max(span.start), to.min(span.end));
        if hi <= lo {
            continue;
        }
        let PlanStep::Evolve { generator, second_order, .. } = &plan.steps[span.step] else { unreachable!() };
        s = backend.evolve(&s, generator, *second_order, &[hi - lo])?.pop().expect("one time requested");
    }
    Ok(s)
}

/// First sign change of the smallest PPT eigenvalue, refined to `1e-8`. A
/// change across an optical element is attributed to the element.
fn critical_time(plan: &Plan, backend: &Moments, w: &Walk<Sim>) -> rsf::Result<f64> {
    let lambdas: Vec<f64> = w.states.iter().map(|s| min_ppt(plan, s)).collect::<rsf::Result<_>>()?;
    let g = &plan.grid;
    for k in 1..lambdas.len() {
        let (a, b) = (lambdas[k - 1], lambdas[k]);
        if a.is_nan() || b.is_nan() || (a < 0.0) == (b < 0.0) {
            continue;
        }
        if let Some(&te) = w.element_times.iter().find(|&&te| te > g[k - 1] && te <= g[k] + TIME_EPS) {
            return Ok(te);
        }
        let t = critical_time_by(
            &g[k - 1..=k],
            &w.states[k - 1..=k],
            |s| min_ppt(plan, s),
            |s, from, to| advance(plan, backend, &w.spans, s, from, to),
            1e-8,
        )?;
        return Ok(t.unwrap_or(f64::NAN));
    }
    Ok(f64::NAN)
}

pub fn initial_sim(plan: &Plan) -> Result<Sim, CliError> {
    Ok(if plan.needs_second_order() { Sim::Second(plan.initial_second_order()?) } else { Sim::Reduced(plan.initial_reduced()?) })
}

pub fn moments_backend(plan: &Plan, dt: Option<f64>) -> Moments {
    Moments { opts: IntegrateOptions { dt: dt.or(plan.dt) } }
}

/// Integrates the moment equations and evaluates every requested column.
pub fn run_plan(plan: &Plan, dt: Option<f64>) -> Result<Table, CliError> {
    let backend = moments_backend(plan, dt);
    let w = walk(plan, &backend, initial_sim(plan)?)?;
    let t_c = if plan.observables.contains(&ObservableSpec::CriticalTime) {
        critical_time(plan, &backend, &w).context(|| "critical time".into())?
    } else {
        f64::NAN
    };
    let rows = plan
        .grid
        .iter()
        .zip(&w.states)
        .map(|(&t, s)| row(plan, t, s.reduced(), t_c).context(|| format!("observables at t = {t}")))
        .collect::<Result<_, _>>()?;
    Ok(Table { columns: columns(plan), rows })
}
