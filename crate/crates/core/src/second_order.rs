//! Evolution with squeezing: the reduced blocks plus `m`, `q` and `zeta`.

use crate::error::{dim_err, Result};
use crate::evolution::{integrate_with, GeneratorSpec, IntegrateOptions, Schedule};
use crate::factory::{preset_normal, StatePreset};
use crate::fock::FockState;
use crate::moments::NormalMoments;
use crate::ode::OdeState;
use crate::state::{eval_normal_ordered, Ladder, ReducedState};
use crate::tensor::{add_scaled, check_square, idx};
use crate::{CMat, C64};

/// Reduced state closed under quadratic squeezing Hamiltonians.
///
/// `m[idx(k2,k4), idx(k1,k3)] = ⟨a_{k1}† a_{k2} a_{k3} a_{k4}⟩`,
/// `q[idx(k2,k4), idx(k1,k3)] = ⟨a_{k1} a_{k2} a_{k3} a_{k4}⟩`,
/// `zeta[idx(k2,k3), k1] = ⟨a_{k1} a_{k2} a_{k3}⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondOrderState {
    pub base: ReducedState,
    pub m: CMat,
    pub q: CMat,
    pub zeta: CMat,
}

impl SecondOrderState {
    pub fn vacuum(n: usize) -> Self {
        SecondOrderState {
            base: ReducedState::vacuum(n),
            m: CMat::zeros(n * n, n * n),
            q: CMat::zeros(n * n, n * n),
            zeta: CMat::zeros(n * n, n),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.base.n_modes
    }

    pub fn check_dims(&self) -> Result<()> {
        self.base.check_dims()?;
        let n = self.n_modes();
        check_square("m", &self.m, n * n)?;
        check_square("q", &self.q, n * n)?;
        if self.zeta.shape() != (n * n, n) {
            return Err(dim_err("zeta", format!("{}x{}", n * n, n), format!("{:?}", self.zeta.shape())));
        }
        Ok(())
    }

    /// Builds every block from normal-ordered moments `f(c, d)` of order ≤ 4.
    pub fn from_normal<F>(n: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(&[usize], &[usize]) -> Result<C64>,
    {
        let base = ReducedState::from_normal(n, &mut f)?;
        let mut s = SecondOrderState { base, ..Self::vacuum(n) };
        for k1 in 0..n {
            for k2 in 0..n {
                for k3 in 0..n {
                    s.zeta[(idx(n, k2, k3), k1)] = f(&[], &[k1, k2, k3])?;
                    for k4 in 0..n {
                        let (row, col) = (idx(n, k2, k4), idx(n, k1, k3));
                        s.m[(row, col)] = f(&[k1], &[k2, k3, k4])?;
                        s.q[(row, col)] = f(&[], &[k1, k2, k3, k4])?;
                    }
                }
            }
        }
        Ok(s)
    }

    pub fn from_preset(preset: &StatePreset) -> Result<Self> {
        let f = preset_normal(preset)?;
        Self::from_normal(preset.n_modes(), |c, d| Ok(f(c, d)))
    }

    /// Reduction of a truncated Fock state.
    pub fn from_fock(f: &FockState) -> Result<Self> {
        let base = crate::factory::reduce_from_fock(f)?;
        let n = base.n_modes;
        let mut s = Self::from_normal(n, |c, d| {
            let ops: Vec<Ladder> =
                c.iter().map(|&k| Ladder::Create(k)).chain(d.iter().map(|&k| Ladder::Annihilate(k))).collect();
            f.expect(&ops)
        })?;
        s.base = base;
        Ok(s)
    }

    /// Normal-ordered moment with at most four operators in total.
    pub fn normal(&self, c: &[usize], d: &[usize]) -> Result<C64> {
        let n = self.n_modes();
        let conj_of = |c: &[usize], d: &[usize]| -> Result<C64> { Ok(self.normal(d, c)?.conj()) };
        match (c.len(), d.len()) {
            (0, 3) => Ok(self.zeta[(idx(n, d[1], d[2]), d[0])]),
            (1, 3) => Ok(self.m[(idx(n, d[0], d[2]), idx(n, c[0], d[1]))]),
            (0, 4) => Ok(self.q[(idx(n, d[1], d[3]), idx(n, d[0], d[2]))]),
            (3, 0) | (3, 1) | (4, 0) => conj_of(c, d),
            _ => self.base.normal(c, d),
        }
    }

    pub fn moment(&self, ops: &[Ladder]) -> Result<C64> {
        eval_normal_ordered(ops, &mut |c: &[usize], d: &[usize]| self.normal(c, d))
    }

    fn to_moments(&self) -> Result<NormalMoments> {
        self.check_dims()?;
        NormalMoments::from_fn(self.n_modes(), |c, d| self.normal(c, d))
    }

    /// Inverse of [`Self::to_moments`] for derivatives. The block map is
    /// linear and the constant moment has no derivative, so `dρ₄ = dG + δ dρ`
    /// comes out of the same contraction rule.
    fn from_moment_derivative(dm: &NormalMoments) -> Result<Self> {
        Self::from_normal(dm.n_modes(), |c, d| Ok(dm.get(c, d)))
    }

    pub fn max_deviation(&self, other: &Self) -> f64 {
        let d = |a: &CMat, b: &CMat| crate::tensor::max_abs_diff(a, b);
        self.base
            .max_deviation(&other.base)
            .max(d(&self.m, &other.m))
            .max(d(&self.q, &other.q))
            .max(d(&self.zeta, &other.zeta))
    }
}

impl OdeState for SecondOrderState {
    fn axpy(&mut self, a: f64, x: &Self) {
        self.base.axpy(a, &x.base);
        add_scaled(self.m.as_mut_slice(), a, x.m.as_slice());
        add_scaled(self.q.as_mut_slice(), a, x.q.as_slice());
        add_scaled(self.zeta.as_mut_slice(), a, x.zeta.as_slice());
    }

    fn non_finite_block(&self) -> Option<&'static str> {
        let bad = |m: &CMat| m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite());
        self.base.non_finite_block().or_else(|| {
            [("m", &self.m), ("q", &self.q), ("zeta", &self.zeta)]
                .into_iter()
                .find(|(_, m)| bad(m))
                .map(|(name, _)| name)
        })
    }
}

/// Time derivative of every block under a generator that may include `hs`.
pub fn rhs_second_order(s: &SecondOrderState, g: &GeneratorSpec) -> Result<SecondOrderState> {
    let n = s.n_modes();
    g.check(n)?;
    let dm = s.to_moments()?.derivative(g)?;
    SecondOrderState::from_moment_derivative(&dm)
}

/// Fixed-step RK4 integration of the enlarged state.
pub fn integrate_second_order(
    initial: &SecondOrderState,
    schedule: &Schedule,
    t_grid: &[f64],
    opts: IntegrateOptions,
) -> Result<Vec<SecondOrderState>> {
    initial.check_dims()?;
    for seg in schedule.segments() {
        seg.generator.check(initial.n_modes())?;
    }
    integrate_with(initial, schedule, t_grid, opts, |s, g| {
        SecondOrderState::from_moment_derivative(&s.to_moments()?.derivative(g)?)
    })
}

/// Squeezing matrix of `γ (a†_{m0} a†_{m3} − a†_{m1} a†_{m2}) + h.c.`.
pub fn bsv_squeezing(gamma: f64, modes: [usize; 4], n_modes: usize) -> CMat {
    let mut hs = CMat::zeros(n_modes, n_modes);
    for (x, y, sign) in [(modes[0], modes[3], 1.0), (modes[1], modes[2], -1.0)] {
        hs[(x, y)] = C64::new(0.5 * sign * gamma, 0.0);
        hs[(y, x)] = hs[(x, y)];
    }
    hs
}
