//! Passive optical elements, detector loss and mode diagonalization.

use crate::error::{dim_err, Result, RsfError};
use crate::evolution::GeneratorSpec;
use crate::state::ReducedState;
use crate::tensor::{check_square, identity, idx, is_unitary, kron};
use crate::{CMat, C64};

/// Identity except `[[√T, i√R], [i√R, √T]]` on modes `i`, `j`.
pub fn beamsplitter_unitary(t_coeff: f64, i: usize, j: usize, n_modes: usize) -> Result<CMat> {
    if !(0.0..=1.0).contains(&t_coeff) {
        return Err(RsfError::InvalidParameter(format!("transmissivity {t_coeff} outside [0, 1]")));
    }
    for k in [i, j] {
        if k >= n_modes {
            return Err(RsfError::IndexOutOfRange { index: k, n_modes });
        }
    }
    if i == j {
        return Err(RsfError::InvalidParameter("beamsplitter needs two distinct modes".into()));
    }
    let t = C64::new(t_coeff.sqrt(), 0.0);
    let r = C64::new(0.0, (1.0 - t_coeff).sqrt());
    let mut u = identity(n_modes);
    u[(i, i)] = t;
    u[(j, j)] = t;
    u[(i, j)] = r;
    u[(j, i)] = r;
    Ok(u)
}

/// Transforms every block under `a → u a`.
pub fn apply_mode_unitary(rs: &ReducedState, u: &CMat) -> Result<ReducedState> {
    check_square("mode unitary", u, rs.n_modes)?;
    if !is_unitary(u, 1e-9) {
        return Err(RsfError::InvalidParameter("mode matrix is not unitary".into()));
    }
    Ok(transform(rs, u))
}

fn transform(rs: &ReducedState, u: &CMat) -> ReducedState {
    let uu = kron(u, u);
    ReducedState {
        n_modes: rs.n_modes,
        rho: u * &rs.rho * u.adjoint(),
        alpha: u * &rs.alpha,
        r: u * &rs.r * u.transpose(),
        rho4: &uu * &rs.rho4 * uu.adjoint(),
        beta: &uu * &rs.beta * u.adjoint(),
    }
}

/// Mode matrix of [`phase_shifter`].
pub fn phase_unitary(n: usize, i: usize, dphi: f64) -> Result<CMat> {
    if i >= n {
        return Err(RsfError::IndexOutOfRange { index: i, n_modes: n });
    }
    Ok(phase_matrix(n, i, dphi))
}

fn phase_matrix(n: usize, i: usize, dphi: f64) -> CMat {
    let mut u = identity(n);
    u[(i, i)] = C64::from_polar(1.0, -dphi);
    u
}

/// Instantaneous phase shift of mode `i`, equal to evolving under
/// `dphi · n̂_i` for unit time.
pub fn phase_shifter(rs: &ReducedState, i: usize, dphi: f64) -> Result<ReducedState> {
    if i >= rs.n_modes {
        return Err(RsfError::IndexOutOfRange { index: i, n_modes: rs.n_modes });
    }
    Ok(transform(rs, &phase_matrix(rs.n_modes, i, dphi)))
}

/// Splits `g` into the pieces before, during and after a phase-gain window
/// `[t0, te)` in which `phi_rate · n̂_i` is added to the Hamiltonian.
///
/// Returns `(generator, duration)` pairs covering `[0, te)`; append further
/// pieces for the time after the window.
pub fn phase_segment(g: &GeneratorSpec, i: usize, phi_rate: f64, t0: f64, te: f64) -> Result<Vec<(GeneratorSpec, f64)>> {
    let n = g.n_modes();
    if i >= n {
        return Err(RsfError::IndexOutOfRange { index: i, n_modes: n });
    }
    if !(t0 >= 0.0) || !(te > t0) {
        return Err(RsfError::InvalidParameter(format!("phase window [{t0}, {te}) is empty")));
    }
    let mut shifted = g.clone();
    shifted.h[(i, i)] += C64::new(phi_rate, 0.0);
    let mut out = Vec::new();
    if t0 > 0.0 {
        out.push((g.clone(), t0));
    }
    out.push((shifted, te - t0));
    Ok(out)
}

/// Loss in front of detectors of efficiency `etas`.
///
/// Normal-ordered moments scale by `√η` per operator; `rho4` additionally
/// picks up `δ_im (1 − η_i) √(η_j η_n) ρ[j,n]` from its commutator part.
pub fn detector_efficiency(rs: &ReducedState, etas: &[f64]) -> Result<ReducedState> {
    let n = rs.n_modes;
    if etas.len() != n {
        return Err(dim_err("detector_efficiency", n, etas.len()));
    }
    if let Some(e) = etas.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        return Err(RsfError::InvalidParameter(format!("efficiency {e} outside [0, 1]")));
    }
    let s: Vec<f64> = etas.iter().map(|e| e.sqrt()).collect();
    let mut out = rs.clone();
    for k in 0..n {
        out.alpha[k] *= s[k];
        for l in 0..n {
            out.rho[(k, l)] *= s[k] * s[l];
            out.r[(k, l)] *= s[k] * s[l];
        }
    }
    for b in 0..n {
        for c in 0..n {
            for a in 0..n {
                out.beta[(idx(n, b, c), a)] *= s[a] * s[b] * s[c];
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for nn in 0..n {
                for m in 0..n {
                    let e = (idx(n, i, j), idx(n, nn, m));
                    let mut v = rs.rho4[e] * (s[i] * s[j] * s[nn] * s[m]);
                    if i == m {
                        v += rs.rho[(j, nn)] * ((1.0 - etas[i]) * s[j] * s[nn]);
                    }
                    out.rho4[e] = v;
                }
            }
        }
    }
    Ok(out)
}

/// `u_d` with `u_d h u_d† = h_d` diagonal and ascending.
pub fn diagonalize_hamiltonian(h: &CMat) -> Result<(CMat, CMat)> {
    let n = h.nrows();
    check_square("h", h, n)?;
    let defect = crate::tensor::hermiticity_defect(h);
    if defect > crate::tol::STRUCT {
        return Err(RsfError::HermiticityDefect(defect));
    }
    let eig = crate::tensor::hermitian_part(h).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let v = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    let h_d = CMat::from_diagonal(&nalgebra::DVector::from_fn(n, |k, _| C64::new(eig.eigenvalues[order[k]], 0.0)));
    Ok((v.adjoint(), h_d))
}
