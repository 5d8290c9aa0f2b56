//! Reduced state, bipartition projection and the normalized two-qudit state.

use crate::error::{dim_err, Result, RsfError};
use crate::ode::OdeState;
use crate::tensor::{add_scaled, check_square, idx};
use crate::{tol, CMat, CVec, C64};

/// Moments of an `N`-mode field up to fourth order.
///
/// * `rho[(k, l)] = ⟨a_l† a_k⟩`
/// * `alpha[k] = ⟨a_k⟩`
/// * `r[(k, l)] = ⟨a_l a_k⟩`
/// * `rho4[(idx(i, j), idx(n, m))] = ⟨a_n† a_i a_m† a_j⟩`
/// * `beta[(idx(b, c), a)] = ⟨a_a† a_b a_c⟩`
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedState {
    pub n_modes: usize,
    pub rho: CMat,
    pub alpha: CVec,
    pub r: CMat,
    pub rho4: CMat,
    pub beta: CMat,
}

/// A single ladder operator inside an ordered product.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    Create(usize),
    Annihilate(usize),
}

impl Ladder {
    pub fn mode(self) -> usize {
        match self {
            Ladder::Create(k) | Ladder::Annihilate(k) => k,
        }
    }

    fn shifted(self, by: usize) -> Self {
        match self {
            Ladder::Create(k) => Ladder::Create(k - by),
            Ladder::Annihilate(k) => Ladder::Annihilate(k - by),
        }
    }
}

/// Evaluates `⟨ops⟩` by commuting annihilators to the right; `normal(c, d)`
/// supplies the normal-ordered moments.
pub fn eval_normal_ordered<F>(ops: &[Ladder], normal: &mut F) -> Result<C64>
where
    F: FnMut(&[usize], &[usize]) -> Result<C64>,
{
    if let Some(p) = ops
        .windows(2)
        .position(|w| matches!((w[0], w[1]), (Ladder::Annihilate(_), Ladder::Create(_))))
    {
        let mut swapped = ops.to_vec();
        swapped.swap(p, p + 1);
        let mut v = eval_normal_ordered(&swapped, normal)?;
        if ops[p].mode() == ops[p + 1].mode() {
            let mut contracted = ops.to_vec();
            contracted.drain(p..p + 2);
            v += eval_normal_ordered(&contracted, normal)?;
        }
        return Ok(v);
    }
    let c: Vec<usize> = ops
        .iter()
        .filter_map(|o| matches!(o, Ladder::Create(_)).then(|| o.mode()))
        .collect();
    let d: Vec<usize> = ops
        .iter()
        .filter_map(|o| matches!(o, Ladder::Annihilate(_)).then(|| o.mode()))
        .collect();
    normal(&c, &d)
}

pub const BLOCKS: [&str; 5] = ["rho", "alpha", "r", "rho4", "beta"];

impl ReducedState {
    pub fn vacuum(n: usize) -> Self {
        ReducedState {
            n_modes: n,
            rho: CMat::zeros(n, n),
            alpha: CVec::zeros(n),
            r: CMat::zeros(n, n),
            rho4: CMat::zeros(n * n, n * n),
            beta: CMat::zeros(n * n, n),
        }
    }

    /// Builds every block from a function returning `⟨ops⟩` for an ordered
    /// product of at most four ladder operators.
    pub fn from_moments<F>(n: usize, mut moment: F) -> Result<Self>
    where
        F: FnMut(&[Ladder]) -> Result<C64>,
    {
        use Ladder::{Annihilate as A, Create as Cr};
        let mut s = Self::vacuum(n);
        for k in 0..n {
            s.alpha[k] = moment(&[A(k)])?;
            for l in 0..n {
                s.rho[(k, l)] = moment(&[Cr(l), A(k)])?;
                s.r[(k, l)] = moment(&[A(l), A(k)])?;
            }
        }
        for b in 0..n {
            for c in 0..n {
                for a in 0..n {
                    s.beta[(idx(n, b, c), a)] = moment(&[Cr(a), A(b), A(c)])?;
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for nn in 0..n {
                    for m in 0..n {
                        s.rho4[(idx(n, i, j), idx(n, nn, m))] = moment(&[Cr(nn), A(i), Cr(m), A(j)])?;
                    }
                }
            }
        }
        Ok(s)
    }

    /// Normal-ordered moment `⟨a†_{c_1}…a†_{c_p} a_{d_1}…a_{d_q}⟩` for `p, q ≤ 2`.
    pub fn normal(&self, c: &[usize], d: &[usize]) -> Result<C64> {
        let n = self.n_modes;
        if let Some(&k) = c.iter().chain(d).find(|&&k| k >= n) {
            return Err(RsfError::IndexOutOfRange { index: k, n_modes: n });
        }
        Ok(match (c, d) {
            ([], []) => C64::new(1.0, 0.0),
            ([], [d0]) => self.alpha[*d0],
            ([c0], []) => self.alpha[*c0].conj(),
            ([c0], [d0]) => self.rho[(*d0, *c0)],
            ([], [d0, d1]) => self.r[(*d1, *d0)],
            ([c0, c1], []) => self.r[(*c0, *c1)].conj(),
            ([c0], [d0, d1]) => self.beta[(idx(n, *d0, *d1), *c0)],
            ([c0, c1], [d0]) => self.beta[(idx(n, *c1, *c0), *d0)].conj(),
            ([c0, c1], [d0, d1]) => {
                let mut v = self.rho4[(idx(n, *d0, *d1), idx(n, *c0, *c1))];
                if d0 == c1 {
                    v -= self.rho[(*d1, *c0)];
                }
                v
            }
            _ => {
                return Err(RsfError::Unsupported(format!(
                    "moment with {} creation and {} annihilation operators",
                    c.len(),
                    d.len()
                )))
            }
        })
    }

    /// Expectation of an arbitrary ordered product, normal-ordered on the fly.
    pub fn moment(&self, ops: &[Ladder]) -> Result<C64> {
        eval_normal_ordered(ops, &mut |c: &[usize], d: &[usize]| self.normal(c, d))
    }

    /// Builds every block from normal-ordered moments `f(c, d)`.
    pub fn from_normal<F>(n: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(&[usize], &[usize]) -> Result<C64>,
    {
        Self::from_moments(n, |ops| eval_normal_ordered(ops, &mut f))
    }

    /// Moments of the listed modes only (a partial trace over the rest).
    pub fn restrict(&self, modes: &[usize]) -> Result<Self> {
        let n = self.n_modes;
        for &k in modes {
            if k >= n {
                return Err(RsfError::IndexOutOfRange { index: k, n_modes: n });
            }
        }
        let m = modes.len();
        let pair = |p: usize| idx(n, modes[p / m], modes[p % m]);
        Ok(ReducedState {
            n_modes: m,
            rho: CMat::from_fn(m, m, |a, b| self.rho[(modes[a], modes[b])]),
            alpha: CVec::from_fn(m, |a, _| self.alpha[modes[a]]),
            r: CMat::from_fn(m, m, |a, b| self.r[(modes[a], modes[b])]),
            rho4: CMat::from_fn(m * m, m * m, |a, b| self.rho4[(pair(a), pair(b))]),
            beta: CMat::from_fn(m * m, m, |a, b| self.beta[(pair(a), modes[b])]),
        })
    }

    /// Relabels modes so that old mode `k` becomes mode `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n_modes;
        if perm.len() != n {
            return Err(dim_err("permuted", n, perm.len()));
        }
        let mut inverse = vec![usize::MAX; n];
        for (old, &new) in perm.iter().enumerate() {
            if new >= n {
                return Err(RsfError::IndexOutOfRange { index: new, n_modes: n });
            }
            if inverse[new] != usize::MAX {
                return Err(RsfError::OverlappingModes(new));
            }
            inverse[new] = old;
        }
        self.restrict(&inverse)
    }

    pub fn check_dims(&self) -> Result<()> {
        let n = self.n_modes;
        check_square("rho", &self.rho, n)?;
        check_square("r", &self.r, n)?;
        check_square("rho4", &self.rho4, n * n)?;
        if self.alpha.len() != n {
            return Err(dim_err("alpha", n, self.alpha.len()));
        }
        if self.beta.nrows() != n * n || self.beta.ncols() != n {
            return Err(dim_err(
                "beta",
                format!("{}x{}", n * n, n),
                format!("{}x{}", self.beta.nrows(), self.beta.ncols()),
            ));
        }
        Ok(())
    }

    /// Largest absolute deviation per block, in the order of [`BLOCKS`].
    pub fn block_deviation(&self, other: &Self) -> [f64; 5] {
        use crate::tensor::max_abs_diff;
        [
            max_abs_diff(&self.rho, &other.rho),
            self.alpha
                .iter()
                .zip(other.alpha.iter())
                .fold(0.0, |acc, (a, b)| acc.max((a - b).norm())),
            max_abs_diff(&self.r, &other.r),
            max_abs_diff(&self.rho4, &other.rho4),
            max_abs_diff(&self.beta, &other.beta),
        ]
    }

    pub fn max_deviation(&self, other: &Self) -> f64 {
        self.block_deviation(other).into_iter().fold(0.0, f64::max)
    }

    pub fn total_number(&self) -> f64 {
        self.rho.trace().re
    }
}

impl OdeState for ReducedState {
    fn axpy(&mut self, a: f64, x: &Self) {
        add_scaled(self.rho.as_mut_slice(), a, x.rho.as_slice());
        add_scaled(self.alpha.as_mut_slice(), a, x.alpha.as_slice());
        add_scaled(self.r.as_mut_slice(), a, x.r.as_slice());
        add_scaled(self.rho4.as_mut_slice(), a, x.rho4.as_slice());
        add_scaled(self.beta.as_mut_slice(), a, x.beta.as_slice());
    }

    fn non_finite_block(&self) -> Option<&'static str> {
        let bad = |m: &[C64]| m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite());
        if bad(self.rho.as_slice()) {
            Some("rho")
        } else if bad(self.alpha.as_slice()) {
            Some("alpha")
        } else if bad(self.r.as_slice()) {
            Some("r")
        } else if bad(self.rho4.as_slice()) {
            Some("rho4")
        } else if bad(self.beta.as_slice()) {
            Some("beta")
        } else {
            None
        }
    }
}

/// Two disjoint, non-empty sets of zero-based mode indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bipartition {
    set_a: Vec<usize>,
    set_b: Vec<usize>,
}

impl Bipartition {
    pub fn new(a: &[usize], b: &[usize]) -> Result<Self> {
        let mut set_a = a.to_vec();
        let mut set_b = b.to_vec();
        set_a.sort_unstable();
        set_b.sort_unstable();
        set_a.dedup();
        set_b.dedup();
        if set_a.is_empty() || set_b.is_empty() {
            return Err(RsfError::InvalidParameter("bipartition sets must be non-empty".into()));
        }
        if let Some(&k) = set_a.iter().find(|k| set_b.binary_search(k).is_ok()) {
            return Err(RsfError::OverlappingModes(k));
        }
        Ok(Bipartition { set_a, set_b })
    }

    pub fn set_a(&self) -> &[usize] {
        &self.set_a
    }

    pub fn set_b(&self) -> &[usize] {
        &self.set_b
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.set_a.len(), self.set_b.len())
    }

    pub fn party_of(&self, k: usize) -> Option<char> {
        if self.set_a.binary_search(&k).is_ok() {
            Some('A')
        } else if self.set_b.binary_search(&k).is_ok() {
            Some('B')
        } else {
            None
        }
    }

    pub(crate) fn check_range(&self, n: usize) -> Result<()> {
        match self.set_a.iter().chain(&self.set_b).find(|&&k| k >= n) {
            Some(&k) => Err(RsfError::IndexOutOfRange { index: k, n_modes: n }),
            None => Ok(()),
        }
    }

    /// Composite indices `idx(i, j)`, `i ∈ A` major, `j ∈ B` minor.
    pub(crate) fn pairs(&self, n: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.set_a.len() * self.set_b.len());
        for &i in &self.set_a {
            for &j in &self.set_b {
                out.push(idx(n, i, j));
            }
        }
        out
    }
}

/// Trace-normalized projection of `rho4` onto `A × B` pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoQuditState {
    pub dim_a: usize,
    pub dim_b: usize,
    pub matrix: CMat,
    pub trace_norm: f64,
}

/// The block `Π ρ₄ Π` on the dense `d_A·d_B` space.
pub fn project_bipartition(rs: &ReducedState, bp: &Bipartition) -> Result<CMat> {
    bp.check_range(rs.n_modes)?;
    let p = bp.pairs(rs.n_modes);
    Ok(CMat::from_fn(p.len(), p.len(), |a, b| rs.rho4[(p[a], p[b])]))
}

pub fn normalize_projected(m: &CMat, dims: (usize, usize)) -> Result<TwoQuditState> {
    if !m.is_square() || m.nrows() != dims.0 * dims.1 {
        return Err(dim_err(
            "normalize_projected",
            format!("{0}x{0}", dims.0 * dims.1),
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    let tr = m.trace();
    if tr.norm() <= tol::TRACE {
        return Err(RsfError::TracelessState(tr.norm()));
    }
    Ok(TwoQuditState {
        dim_a: dims.0,
        dim_b: dims.1,
        matrix: m.unscale(tr.re),
        trace_norm: tr.re,
    })
}

/// `((a,b),(a',b')) ↦ ((a,b'),(a',b))`.
pub fn partial_transpose_second(s: &TwoQuditState) -> CMat {
    let db = s.dim_b;
    CMat::from_fn(s.matrix.nrows(), s.matrix.ncols(), |r, c| {
        let (a, b) = (r / db, r % db);
        let (a2, b2) = (c / db, c % db);
        s.matrix[(a * db + b2, a2 * db + b)]
    })
}

/// Additive (`Σ o_{kl} a_k† a_l`) or fourth-order
/// (`Σ o a†_{k1} a_{k2} a†_{k3} a_{k4}`, stored at `(idx(k1,k3), idx(k2,k4))`)
/// observable.
#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    Additive(CMat),
    FourthOrder(CMat),
}

pub fn expectation(rs: &ReducedState, o: &Observable) -> Result<C64> {
    let n = rs.n_modes;
    match o {
        Observable::Additive(m) => {
            check_square("additive observable", m, n)?;
            Ok((&rs.rho * m).trace())
        }
        Observable::FourthOrder(m) => {
            check_square("fourth-order observable", m, n * n)?;
            Ok((&rs.rho4 * m).trace())
        }
    }
}

/// Reduced state of `a ⊗ b`; modes of `a` come first.
pub fn compose_product(a: &ReducedState, b: &ReducedState) -> Result<ReducedState> {
    a.check_dims()?;
    b.check_dims()?;
    let na = a.n_modes;
    ReducedState::from_moments(na + b.n_modes, |ops| {
        let (in_a, in_b): (Vec<Ladder>, Vec<Ladder>) = ops.iter().partition(|o| o.mode() < na);
        let in_b: Vec<Ladder> = in_b.into_iter().map(|o| o.shifted(na)).collect();
        Ok(a.moment(&in_a)? * b.moment(&in_b)?)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn coherent(alpha: &[C64]) -> ReducedState {
        ReducedState::from_normal(alpha.len(), |cr, an| {
            let v = cr.iter().map(|&k| alpha[k].conj()).product::<C64>();
            Ok(v * an.iter().map(|&k| alpha[k]).product::<C64>())
        })
        .unwrap()
    }

    #[test]
    fn vacuum_moments_of_any_product() {
        let v = ReducedState::vacuum(2);
        use Ladder::*;
        assert_eq!(v.moment(&[Annihilate(0), Create(0)]).unwrap(), c(1.0, 0.0));
        assert_eq!(v.moment(&[Annihilate(0), Create(1)]).unwrap(), c(0.0, 0.0));
        assert_eq!(v.moment(&[Annihilate(1), Annihilate(1), Create(1), Create(1)]).unwrap(), c(2.0, 0.0));
        assert_eq!(
            v.moment(&[Annihilate(1), Annihilate(1), Annihilate(0)]).unwrap_err(),
            RsfError::Unsupported("moment with 0 creation and 3 annihilation operators".into())
        );
    }

    #[test]
    fn vacuum_composition_is_vacuum() {
        let v = compose_product(&ReducedState::vacuum(1), &ReducedState::vacuum(2)).unwrap();
        assert_eq!(v, ReducedState::vacuum(3));
    }

    #[test]
    fn coherent_pair_composition_factorizes() {
        let a1 = c(0.3, 0.4);
        let a2 = c(-0.7, 0.1);
        let s = compose_product(&coherent(&[a1]), &coherent(&[a2])).unwrap();
        let n12 = s.rho4[(idx(2, 0, 1), idx(2, 0, 1))];
        assert!((n12 - c(a1.norm_sqr() * a2.norm_sqr(), 0.0)).norm() < 1e-14);
        assert!((s.rho[(0, 1)] - a1 * a2.conj()).norm() < 1e-14);
        assert!((s.r[(1, 0)] - a1 * a2).norm() < 1e-14);
    }

    #[test]
    fn restrict_then_permute_roundtrip() {
        let s = compose_product(&coherent(&[c(0.1, 0.0)]), &coherent(&[c(0.0, 0.2), c(0.5, 0.0)])).unwrap();
        let p = s.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(p.alpha[2], s.alpha[0]);
        assert_eq!(p.permuted(&[1, 2, 0]).unwrap(), s);
        assert!(s.permuted(&[0, 0, 1]).is_err());
    }

    #[test]
    fn bipartition_validation() {
        assert_eq!(Bipartition::new(&[0, 1], &[1, 2]).unwrap_err(), RsfError::OverlappingModes(1));
        assert!(Bipartition::new(&[], &[1]).is_err());
        let bp = Bipartition::new(&[1, 0], &[3, 2]).unwrap();
        assert_eq!(bp.set_a(), &[0, 1]);
        assert_eq!(bp.pairs(4), vec![2, 3, 6, 7]);
    }

    #[test]
    fn vacuum_projects_to_zero_and_cannot_be_normalized() {
        let bp = Bipartition::new(&[0, 1], &[2, 3]).unwrap();
        let p = project_bipartition(&ReducedState::vacuum(4), &bp).unwrap();
        assert_eq!(p, CMat::zeros(4, 4));
        assert!(matches!(normalize_projected(&p, (2, 2)), Err(RsfError::TracelessState(_))));
        let out_of_range = Bipartition::new(&[0], &[5]).unwrap();
        assert!(project_bipartition(&ReducedState::vacuum(4), &out_of_range).is_err());
    }

    #[test]
    fn unit_trace_is_left_alone() {
        let m = CMat::identity(4, 4).unscale(4.0);
        let s = normalize_projected(&m, (2, 2)).unwrap();
        assert_eq!(s.matrix, m);
        assert_eq!(partial_transpose_second(&s), m);
    }

    #[test]
    fn partial_transpose_of_product_transposes_second_factor() {
        let a = CMat::from_row_slice(2, 2, &[c(0.6, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.4, 0.0)]);
        let b = CMat::from_row_slice(2, 2, &[c(0.3, 0.0), c(0.0, 0.4), c(0.0, -0.4), c(0.7, 0.0)]);
        let s = TwoQuditState { dim_a: 2, dim_b: 2, matrix: a.kronecker(&b), trace_norm: 1.0 };
        assert_eq!(partial_transpose_second(&s), a.kronecker(&b.transpose()));
    }

    #[test]
    fn expectation_rejects_wrong_rank() {
        let v = ReducedState::vacuum(2);
        assert!(expectation(&v, &Observable::Additive(CMat::zeros(4, 4))).is_err());
        assert_eq!(expectation(&v, &Observable::FourthOrder(CMat::zeros(4, 4))).unwrap(), c(0.0, 0.0));
    }
}
