//! Analytic reduced states of the preset fields, and reduction of truncated
//! Fock states.

use crate::error::{Result, RsfError};
use crate::fock::FockState;
use crate::state::ReducedState;
use crate::{tol, CMat, CVec, C64};

/// Preset states. Mode indices are zero-based.
#[derive(Clone, Debug, PartialEq)]
pub enum StatePreset {
    Vacuum { n_modes: usize },
    Fock { occupations: Vec<usize> },
    Coherent { amplitudes: Vec<C64> },
    Thermal { nbar: Vec<f64> },
    /// Two-mode squeezed pairs `(m0, m3)` and `(m1, m2)` with opposite sign,
    /// `cosh⁻²Γ Σ tanhⁿΓ/n! (a†_{m0} a†_{m3} − a†_{m1} a†_{m2})ⁿ |0⟩`.
    Bsv { gain: f64, modes: [usize; 4], n_modes: usize },
    /// `(a†_{m0} + a†_{m1})|0⟩/√2`
    SinglePhotonSplit { modes: [usize; 2], n_modes: usize },
    /// A photon split over `m0, m2` and coherent amplitude `alpha` in `m1, m3`.
    SinglePhotonWeakHomodyne { alpha: f64, modes: [usize; 4], n_modes: usize },
}

impl StatePreset {
    pub fn n_modes(&self) -> usize {
        match self {
            StatePreset::Vacuum { n_modes }
            | StatePreset::Bsv { n_modes, .. }
            | StatePreset::SinglePhotonSplit { n_modes, .. }
            | StatePreset::SinglePhotonWeakHomodyne { n_modes, .. } => *n_modes,
            StatePreset::Fock { occupations } => occupations.len(),
            StatePreset::Coherent { amplitudes } => amplitudes.len(),
            StatePreset::Thermal { nbar } => nbar.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_modes();
        if n == 0 {
            return Err(RsfError::InvalidParameter("preset needs at least one mode".into()));
        }
        let distinct = |modes: &[usize]| -> Result<()> {
            for (p, &k) in modes.iter().enumerate() {
                if k >= n {
                    return Err(RsfError::IndexOutOfRange { index: k, n_modes: n });
                }
                if modes[..p].contains(&k) {
                    return Err(RsfError::OverlappingModes(k));
                }
            }
            Ok(())
        };
        match self {
            StatePreset::Thermal { nbar } if nbar.iter().any(|x| !(*x >= 0.0)) => {
                Err(RsfError::InvalidParameter("thermal occupations must be non-negative".into()))
            }
            StatePreset::Coherent { amplitudes } if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) => {
                Err(RsfError::InvalidParameter("coherent amplitudes must be finite".into()))
            }
            StatePreset::Bsv { gain, modes, .. } => {
                if !(*gain >= 0.0) || !gain.is_finite() {
                    return Err(RsfError::InvalidParameter(format!("gain {gain} must be finite and non-negative")));
                }
                distinct(modes)
            }
            StatePreset::SinglePhotonSplit { modes, .. } => distinct(modes),
            StatePreset::SinglePhotonWeakHomodyne { alpha, modes, .. } => {
                if !alpha.is_finite() {
                    return Err(RsfError::InvalidParameter("alpha must be finite".into()));
                }
                distinct(modes)
            }
            _ => Ok(()),
        }
    }
}

fn count(modes: &[usize], k: usize) -> usize {
    modes.iter().filter(|&&m| m == k).count()
}

fn falling(n: usize, p: usize) -> f64 {
    if p > n {
        0.0
    } else {
        (0..p).map(|i| (n - i) as f64).product()
    }
}

/// Normal-ordered moment of a product state from per-mode moments
/// `f(k, p, q) = ⟨a_k†^p a_k^q⟩`.
fn product_normal<F>(n: usize, c: &[usize], d: &[usize], f: F) -> C64
where
    F: Fn(usize, usize, usize) -> C64,
{
    (0..n).map(|k| f(k, count(c, k), count(d, k))).product()
}

/// Normal-ordered moments of a Gaussian state with mean `alpha`, centered
/// `⟨b_l† b_k⟩ = rho_c[k,l]` and `⟨b_l b_k⟩ = r_c[k,l]`.
pub fn gaussian_normal(alpha: &CVec, rho_c: &CMat, r_c: &CMat, c: &[usize], d: &[usize]) -> C64 {
    // operators as (is_creation, mode)
    let ops: Vec<(bool, usize)> = c.iter().map(|&k| (true, k)).chain(d.iter().map(|&k| (false, k))).collect();
    let mean = |(cr, k): (bool, usize)| if cr { alpha[k].conj() } else { alpha[k] };
    let pair = |(c1, k1): (bool, usize), (c2, k2): (bool, usize)| match (c1, c2) {
        (true, true) => r_c[(k1, k2)].conj(),
        (false, false) => r_c[(k2, k1)],
        (true, false) => rho_c[(k2, k1)],
        (false, true) => rho_c[(k1, k2)],
    };
    fn wick(rest: &[(bool, usize)], pair: &dyn Fn((bool, usize), (bool, usize)) -> C64) -> C64 {
        if rest.is_empty() {
            return C64::new(1.0, 0.0);
        }
        if rest.len() % 2 == 1 {
            return C64::new(0.0, 0.0);
        }
        let first = rest[0];
        let mut acc = C64::new(0.0, 0.0);
        for p in 1..rest.len() {
            let mut others: Vec<(bool, usize)> = rest[1..].to_vec();
            let partner = others.remove(p - 1);
            acc += pair(first, partner) * wick(&others, pair);
        }
        acc
    }
    let m = ops.len();
    let mut total = C64::new(0.0, 0.0);
    for mask in 0u32..(1 << m) {
        let mut prefactor = C64::new(1.0, 0.0);
        let mut rest = Vec::new();
        for (p, &op) in ops.iter().enumerate() {
            if mask & (1 << p) != 0 {
                prefactor *= mean(op);
            } else {
                rest.push(op);
            }
        }
        if prefactor.norm() == 0.0 {
            continue;
        }
        total += prefactor * wick(&rest, &pair);
    }
    total
}

/// Normal-ordered moment function `(c, d) ↦ ⟨a†_{c_1}… a_{d_1}…⟩` of a preset,
/// valid at any order.
pub fn preset_normal(preset: &StatePreset) -> Result<Box<dyn Fn(&[usize], &[usize]) -> C64>> {
    preset.validate()?;
    let n = preset.n_modes();
    let zero = C64::new(0.0, 0.0);
    Ok(match preset.clone() {
        StatePreset::Vacuum { .. } => Box::new(move |c, d| if c.is_empty() && d.is_empty() { C64::new(1.0, 0.0) } else { zero }),
        StatePreset::Fock { occupations } => Box::new(move |c, d| {
            product_normal(n, c, d, |k, p, q| if p == q { C64::new(falling(occupations[k], p), 0.0) } else { zero })
        }),
        StatePreset::Coherent { amplitudes } => Box::new(move |c, d| {
            product_normal(n, c, d, |k, p, q| amplitudes[k].conj().powu(p as u32) * amplitudes[k].powu(q as u32))
        }),
        StatePreset::Thermal { nbar } => Box::new(move |c, d| {
            product_normal(n, c, d, |k, p, q| {
                if p == q {
                    C64::new(falling(p, p) * nbar[k].powi(p as i32), 0.0)
                } else {
                    zero
                }
            })
        }),
        StatePreset::Bsv { gain, modes, .. } => {
            let (s, c) = (gain.sinh(), gain.cosh());
            let mut rho_c = CMat::zeros(n, n);
            for &k in &modes {
                rho_c[(k, k)] = C64::new(s * s, 0.0);
            }
            let mut r_c = CMat::zeros(n, n);
            for (x, y, sign) in [(modes[0], modes[3], 1.0), (modes[1], modes[2], -1.0)] {
                r_c[(x, y)] = C64::new(sign * s * c, 0.0);
                r_c[(y, x)] = r_c[(x, y)];
            }
            let alpha = CVec::zeros(n);
            Box::new(move |cr, an| gaussian_normal(&alpha, &rho_c, &r_c, cr, an))
        }
        StatePreset::SinglePhotonSplit { modes, .. } => Box::new(move |c, d| split_photon_normal(&modes, c, d)),
        StatePreset::SinglePhotonWeakHomodyne { alpha, modes, .. } => {
            let photon = [modes[0], modes[2]];
            let coherent = [modes[1], modes[3]];
            let a = C64::new(alpha, 0.0);
            Box::new(move |c, d| {
                let in_photon = |k: &&usize| photon.contains(k);
                let pc: Vec<usize> = c.iter().filter(in_photon).copied().collect();
                let pd: Vec<usize> = d.iter().filter(in_photon).copied().collect();
                let mut v = split_photon_normal(&photon, &pc, &pd);
                for &k in c.iter().chain(d) {
                    if coherent.contains(&k) {
                        v *= a;
                    } else if !photon.contains(&k) {
                        v = zero;
                    }
                }
                v
            })
        }
    })
}

/// Analytic reduced state of a preset.
pub fn build(preset: &StatePreset) -> Result<ReducedState> {
    let f = preset_normal(preset)?;
    ReducedState::from_normal(preset.n_modes(), |c, d| Ok(f(c, d)))
}

fn split_photon_normal(modes: &[usize; 2], c: &[usize], d: &[usize]) -> C64 {
    match (c, d) {
        ([], []) => C64::new(1.0, 0.0),
        ([x], [y]) if modes.contains(x) && modes.contains(y) => C64::new(0.5, 0.0),
        _ => C64::new(0.0, 0.0),
    }
}

/// Traces the truncated state against ladder-operator products in the exact
/// operator order of each block definition.
pub fn reduce_from_fock(f: &FockState) -> Result<ReducedState> {
    let space = f.space();
    let n = space.n_modes();
    for k in 0..n {
        if space.cutoffs()[k] < 2 {
            let occ = f.expect(&[crate::state::Ladder::Create(k), crate::state::Ladder::Annihilate(k)])?;
            if occ.re > tol::STRUCT {
                return Err(RsfError::InvalidParameter(format!(
                    "mode {k} is populated but its cutoff {} leaves no room for fourth-order moments",
                    space.cutoffs()[k]
                )));
            }
        }
    }
    let leak = f.edge_population();
    if leak > tol::LEAKAGE_WARN {
        log::warn!("population {leak:e} sits at the Fock cutoff; reduced moments are truncation-limited");
    }
    ReducedState::from_moments(n, |ops| f.expect(ops))
}
