//! PPT on the reduced two-qudit state, the covariance-matrix criterion,
//! Mandel-type parameters and the RSF entropy.

use crate::error::{dim_err, Result, RsfError};
use crate::evolution::{advance_schedule, rhs, IntegrateOptions, Schedule};
use crate::state::{normalize_projected, partial_transpose_second, project_bipartition, Bipartition, ReducedState, TwoQuditState};
use crate::tensor::{hermitian_eigenvalues, hermiticity_defect, idx};
use crate::{tol, CMat, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Entangled,
    /// Smallest eigenvalue in `[-DETECT, 0)`: too close to zero to call.
    InconclusiveNegative,
    NotDetected,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PptReport {
    pub eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
    pub entangled: bool,
    pub verdict: Verdict,
    pub trace_norm: f64,
}

fn verdict(min: f64) -> Verdict {
    if min < -tol::DETECT {
        Verdict::Entangled
    } else if min < 0.0 {
        Verdict::InconclusiveNegative
    } else {
        Verdict::NotDetected
    }
}

pub fn ppt_report(s: &TwoQuditState, dims: (usize, usize)) -> Result<PptReport> {
    if dims != (s.dim_a, s.dim_b) || s.matrix.nrows() != dims.0 * dims.1 {
        return Err(dim_err("ppt_report", format!("{:?}", (s.dim_a, s.dim_b)), format!("{dims:?}")));
    }
    let defect = hermiticity_defect(&s.matrix);
    if defect > tol::HERMITICITY_GUARD {
        return Err(RsfError::HermiticityDefect(defect));
    }
    let sym = TwoQuditState { matrix: crate::tensor::hermitian_part(&s.matrix), ..s.clone() };
    let eigenvalues = hermitian_eigenvalues(&partial_transpose_second(&sym));
    let min = eigenvalues[0];
    Ok(PptReport {
        min_eigenvalue: min,
        entangled: min < -tol::DETECT,
        verdict: verdict(min),
        trace_norm: s.trace_norm,
        eigenvalues,
    })
}

/// Projects, normalizes and runs PPT in one go.
pub fn ppt_of(rs: &ReducedState, bp: &Bipartition) -> Result<PptReport> {
    let s = normalize_projected(&project_bipartition(rs, bp)?, bp.dims())?;
    ppt_report(&s, bp.dims())
}

/// Locates the first sign change of `lambda` along a sampled trajectory and
/// refines it by bisection, re-integrating with `step` from the bracket start.
pub fn critical_time_by<S, L, A>(times: &[f64], states: &[S], lambda: L, step: A, t_tol: f64) -> Result<Option<f64>>
where
    S: Clone,
    L: Fn(&S) -> Result<f64>,
    A: Fn(&S, f64, f64) -> Result<S>,
{
    if times.len() != states.len() {
        return Err(dim_err("critical_time", times.len(), states.len()));
    }
    let negative = |x: f64| x < 0.0;
    let mut prev: Option<(f64, bool)> = None;
    for (k, s) in states.iter().enumerate() {
        let v = lambda(s)?;
        if let Some((_, was)) = prev {
            if negative(v) != was {
                let (mut lo, mut hi) = (times[k - 1], times[k]);
                let mut s_lo = states[k - 1].clone();
                while hi - lo > t_tol {
                    let mid = 0.5 * (lo + hi);
                    let s_mid = step(&s_lo, lo, mid)?;
                    if negative(lambda(&s_mid)?) == was {
                        lo = mid;
                        s_lo = s_mid;
                    } else {
                        hi = mid;
                    }
                }
                return Ok(Some(0.5 * (lo + hi)));
            }
        }
        prev = Some((v, negative(v)));
    }
    Ok(None)
}

/// First zero crossing of the smallest PPT eigenvalue, to within `1e-8`.
pub fn critical_time(
    times: &[f64],
    traj: &[ReducedState],
    bp: &Bipartition,
    schedule: &Schedule,
    opts: IntegrateOptions,
) -> Result<Option<f64>> {
    critical_time_by(
        times,
        traj,
        |s| Ok(ppt_of(s, bp)?.min_eigenvalue),
        |s, from, to| advance_schedule(s, schedule, from, to, opts, &|x: &ReducedState, g| rhs(x, g)),
        1e-8,
    )
}

/// Quadrature covariance matrix in the order `(x_1, p_1, …, x_N, p_N)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix {
    pub v: nalgebra::DMatrix<f64>,
}

pub fn covariance_from_reduced(rs: &ReducedState) -> Result<CovarianceMatrix> {
    rs.check_dims()?;
    let n = rs.n_modes;
    let a = &rs.alpha;
    let rho_c = &rs.rho - a * a.adjoint();
    let r_c = &rs.r - a * a.transpose();
    let mut v = nalgebra::DMatrix::<f64>::zeros(2 * n, 2 * n);
    for k in 0..n {
        for l in 0..n {
            let d = if k == l { 0.5 } else { 0.0 };
            v[(2 * k, 2 * l)] = (r_c[(k, l)] + rho_c[(k, l)]).re + d;
            v[(2 * k + 1, 2 * l + 1)] = (rho_c[(k, l)] - r_c[(k, l)]).re + d;
            let xp = (r_c[(k, l)] - rho_c[(k, l)]).im;
            v[(2 * k, 2 * l + 1)] = xp;
            v[(2 * l + 1, 2 * k)] = xp;
        }
    }
    Ok(CovarianceMatrix { v })
}

/// Eigenvalues of `Q V Q − (i/2) J`, with `Q` flipping the momenta of `B`.
pub fn covariance_ppt(v: &CovarianceMatrix, bp: &Bipartition) -> Result<Vec<f64>> {
    let dim = v.v.nrows();
    if dim % 2 != 0 || v.v.ncols() != dim {
        return Err(dim_err("covariance_ppt", "even square matrix", format!("{}x{}", dim, v.v.ncols())));
    }
    let n = dim / 2;
    bp.check_range(n)?;
    if let Some(k) = (0..n).find(|&k| bp.party_of(k).is_none()) {
        return Err(RsfError::InvalidParameter(format!("mode {k} belongs to neither party")));
    }
    let q: Vec<f64> = (0..dim)
        .map(|p| if p % 2 == 1 && bp.party_of(p / 2) == Some('B') { -1.0 } else { 1.0 })
        .collect();
    let m = CMat::from_fn(dim, dim, |r, c| {
        let mut z = C64::new(q[r] * v.v[(r, c)] * q[c], 0.0);
        if r / 2 == c / 2 && r != c {
            // J = ⊕ [[0, 1], [-1, 0]]
            let j = if r % 2 == 0 { 1.0 } else { -1.0 };
            z -= C64::new(0.0, 0.5 * j);
        }
        z
    });
    Ok(hermitian_eigenvalues(&m))
}

fn occupation(rs: &ReducedState, i: usize) -> Result<f64> {
    if i >= rs.n_modes {
        return Err(RsfError::IndexOutOfRange { index: i, n_modes: rs.n_modes });
    }
    let occ = rs.rho[(i, i)].re;
    if occ <= tol::STRUCT {
        return Err(RsfError::EmptyMode { mode: i, occupation: occ });
    }
    Ok(occ)
}

/// `(⟨n_i²⟩ − ⟨n_i⟩²)/⟨n_i⟩ − 1`
pub fn mandel_q(rs: &ReducedState, i: usize) -> Result<f64> {
    gen_q(rs, i, i)
}

/// `(⟨a_i† a_j a_j† a_i⟩ − |ρ_ij|²)/⟨n_i⟩ − 1`
pub fn gen_q(rs: &ReducedState, i: usize, j: usize) -> Result<f64> {
    let occ = occupation(rs, i)?;
    if j >= rs.n_modes {
        return Err(RsfError::IndexOutOfRange { index: j, n_modes: rs.n_modes });
    }
    let n = rs.n_modes;
    let corr = rs.rho4[(idx(n, j, i), idx(n, i, j))] - rs.rho[(j, i)] * rs.rho[(i, j)];
    Ok(corr.re / occ - 1.0)
}

/// `Σ (λ+1) ln(λ+1) − λ ln λ` over the spectrum of `ρ − |α⟩⟨α|`.
pub fn rsf_entropy(rs: &ReducedState) -> Result<f64> {
    rs.check_dims()?;
    let rho_a = &rs.rho - &rs.alpha * rs.alpha.adjoint();
    let xlnx = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
    Ok(hermitian_eigenvalues(&rho_a)
        .into_iter()
        .map(|l| l.max(0.0))
        .map(|l| xlnx(l + 1.0) - xlnx(l))
        .sum())
}
