//! Truncated Fock-space reference implementation of the GKLS master equation.
//!
//! Basis states are ordered with the occupation of mode 0 as the most
//! significant digit. Ladder operators act on basis indices directly; no dense
//! operator matrices are formed except on request.

use crate::error::{dim_err, Result, RsfError};
use crate::evolution::{default_step, GeneratorSpec, Schedule};
use crate::factory::StatePreset;
use crate::ode::{advance, OdeState};
use crate::state::Ladder;
use crate::tensor::add_scaled;
use crate::{tol, CMat, CVec, C64};

/// Largest dimension allowed for a density-matrix representation.
pub const MIXED_DIM_LIMIT: usize = 4096;
/// Largest dimension allowed for a state-vector representation.
pub const PURE_DIM_LIMIT: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FockSpace {
    cutoffs: Vec<usize>,
    strides: Vec<usize>,
    dim: usize,
}

impl FockSpace {
    pub fn new(cutoffs: &[usize]) -> Result<Self> {
        if cutoffs.is_empty() {
            return Err(RsfError::InvalidParameter("Fock space needs at least one mode".into()));
        }
        let mut strides = vec![1usize; cutoffs.len()];
        let mut dim = 1usize;
        for k in (0..cutoffs.len()).rev() {
            strides[k] = dim;
            dim = dim
                .checked_mul(cutoffs[k] + 1)
                .filter(|&d| d <= PURE_DIM_LIMIT)
                .ok_or(RsfError::SpaceTooLarge { dim: usize::MAX, limit: PURE_DIM_LIMIT })?;
        }
        Ok(FockSpace { cutoffs: cutoffs.to_vec(), strides, dim })
    }

    pub fn uniform(n_modes: usize, cutoff: usize) -> Result<Self> {
        Self::new(&vec![cutoff; n_modes])
    }

    pub fn n_modes(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn occupation(&self, b: usize, k: usize) -> usize {
        (b / self.strides[k]) % (self.cutoffs[k] + 1)
    }

    pub fn occupations(&self, b: usize) -> Vec<usize> {
        (0..self.n_modes()).map(|k| self.occupation(b, k)).collect()
    }

    pub fn index(&self, occ: &[usize]) -> Option<usize> {
        if occ.len() != self.n_modes() {
            return None;
        }
        let mut b = 0;
        for (k, &n) in occ.iter().enumerate() {
            if n > self.cutoffs[k] {
                return None;
            }
            b += n * self.strides[k];
        }
        Some(b)
    }

    pub fn total_number(&self, b: usize) -> usize {
        (0..self.n_modes()).map(|k| self.occupation(b, k)).sum()
    }

    /// Whether some mode of basis state `b` sits at its cutoff.
    pub fn on_edge(&self, b: usize) -> bool {
        (0..self.n_modes()).any(|k| self.occupation(b, k) == self.cutoffs[k])
    }

    /// Applies the ordered product `ops` (rightmost first) to basis state `b`.
    pub fn apply_monomial(&self, ops: &[Ladder], b: usize) -> Option<(usize, f64)> {
        let mut b = b;
        let mut coeff = 1.0;
        for op in ops.iter().rev() {
            match *op {
                Ladder::Annihilate(k) => {
                    let n = self.occupation(b, k);
                    if n == 0 {
                        return None;
                    }
                    coeff *= (n as f64).sqrt();
                    b -= self.strides[k];
                }
                Ladder::Create(k) => {
                    let n = self.occupation(b, k);
                    if n == self.cutoffs[k] {
                        return None;
                    }
                    coeff *= ((n + 1) as f64).sqrt();
                    b += self.strides[k];
                }
            }
        }
        Some((b, coeff))
    }

    /// Dense annihilation and creation matrices of mode `k`.
    pub fn ladder_dense(&self, k: usize) -> (CMat, CMat) {
        let mut a = CMat::zeros(self.dim, self.dim);
        for b in 0..self.dim {
            if let Some((to, c)) = self.apply_monomial(&[Ladder::Annihilate(k)], b) {
                a[(to, b)] = C64::new(c, 0.0);
            }
        }
        let ad = a.adjoint();
        (a, ad)
    }
}

/// Per-mode `(a_k, a_k†)` as dense matrices.
pub fn ladder_ops(n_modes: usize, cutoffs: &[usize]) -> Result<Vec<(CMat, CMat)>> {
    if cutoffs.len() != n_modes {
        return Err(dim_err("ladder_ops", n_modes, cutoffs.len()));
    }
    let space = FockSpace::new(cutoffs)?;
    if space.dim() > MIXED_DIM_LIMIT {
        return Err(RsfError::SpaceTooLarge { dim: space.dim(), limit: MIXED_DIM_LIMIT });
    }
    Ok((0..n_modes).map(|k| space.ladder_dense(k)).collect())
}

/// Row-compressed sparse operator.
#[derive(Clone, Debug)]
pub struct SparseOp {
    dim: usize,
    rows: Vec<Vec<(usize, C64)>>,
}

impl SparseOp {
    fn from_triplets(dim: usize, mut t: Vec<(usize, usize, C64)>) -> Self {
        t.sort_by_key(|&(r, c, _)| (r, c));
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); dim];
        for (r, c, v) in t {
            match rows[r].last_mut() {
                Some((lc, lv)) if *lc == c => *lv += v,
                _ => rows[r].push((c, v)),
            }
        }
        for row in &mut rows {
            row.retain(|(_, v)| v.norm() > 0.0);
        }
        SparseOp { dim, rows }
    }

    /// `Σ coeff · monomial` over the truncated basis.
    fn from_terms(space: &FockSpace, terms: &[(C64, Vec<Ladder>)]) -> Self {
        let mut t = Vec::new();
        for (coeff, ops) in terms {
            if coeff.norm() == 0.0 {
                continue;
            }
            for b in 0..space.dim() {
                if let Some((to, c)) = space.apply_monomial(ops, b) {
                    t.push((to, b, coeff * c));
                }
            }
        }
        Self::from_triplets(space.dim(), t)
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn mul_vec(&self, x: &CVec) -> CVec {
        CVec::from_fn(self.dim, |r, _| self.rows[r].iter().map(|&(c, v)| v * x[c]).sum())
    }

    /// `self · m`, column by column.
    fn left_mul(&self, m: &CMat) -> CMat {
        let nr = m.nrows();
        let mut out = CMat::zeros(self.dim, m.ncols());
        let src = m.as_slice();
        let dst = out.as_mut_slice();
        for j in 0..m.ncols() {
            let s = &src[j * nr..(j + 1) * nr];
            let d = &mut dst[j * self.dim..(j + 1) * self.dim];
            for (r, row) in self.rows.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for &(c, v) in row {
                    acc += v * s[c];
                }
                d[r] = acc;
            }
        }
        out
    }

    /// `m · self†`, accumulating whole columns.
    fn right_mul_adjoint(&self, m: &CMat) -> CMat {
        let nr = m.nrows();
        let mut out = CMat::zeros(nr, self.dim);
        let src = m.as_slice();
        let dst = out.as_mut_slice();
        for (j, row) in self.rows.iter().enumerate() {
            let d = &mut dst[j * nr..(j + 1) * nr];
            for &(l, v) in row {
                let w = v.conj();
                for (x, y) in d.iter_mut().zip(&src[l * nr..(l + 1) * nr]) {
                    *x += w * y;
                }
            }
        }
        out
    }
}

/// Truncated Fock state: a state vector for Hamiltonian-only dynamics or a
/// density matrix otherwise.
#[derive(Clone, Debug, PartialEq)]
pub enum FockState {
    Pure { space: FockSpace, psi: CVec },
    Mixed { space: FockSpace, rho: CMat },
}

impl FockState {
    pub fn pure(space: FockSpace, psi: CVec) -> Result<Self> {
        if psi.len() != space.dim() {
            return Err(dim_err("FockState::pure", space.dim(), psi.len()));
        }
        Ok(FockState::Pure { space, psi })
    }

    pub fn mixed(space: FockSpace, rho: CMat) -> Result<Self> {
        if space.dim() > MIXED_DIM_LIMIT {
            return Err(RsfError::SpaceTooLarge { dim: space.dim(), limit: MIXED_DIM_LIMIT });
        }
        crate::tensor::check_square("FockState::mixed", &rho, space.dim())?;
        Ok(FockState::Mixed { space, rho })
    }

    pub fn basis(space: FockSpace, occ: &[usize]) -> Result<Self> {
        let b = space.index(occ).ok_or_else(|| {
            RsfError::InvalidParameter(format!("occupations {occ:?} exceed cutoffs {:?}", space.cutoffs()))
        })?;
        let mut psi = CVec::zeros(space.dim());
        psi[b] = C64::new(1.0, 0.0);
        Self::pure(space, psi)
    }

    pub fn space(&self) -> &FockSpace {
        match self {
            FockState::Pure { space, .. } | FockState::Mixed { space, .. } => space,
        }
    }

    pub fn to_mixed(&self) -> Result<Self> {
        match self {
            FockState::Pure { space, psi } => Self::mixed(space.clone(), psi * psi.adjoint()),
            m => Ok(m.clone()),
        }
    }

    pub fn density_matrix(&self) -> Result<CMat> {
        match self.to_mixed()? {
            FockState::Mixed { rho, .. } => Ok(rho),
            FockState::Pure { .. } => unreachable!(),
        }
    }

    pub fn trace(&self) -> f64 {
        match self {
            FockState::Pure { psi, .. } => psi.norm_squared(),
            FockState::Mixed { rho, .. } => rho.trace().re,
        }
    }

    fn population(&self, b: usize) -> f64 {
        match self {
            FockState::Pure { psi, .. } => psi[b].norm_sqr(),
            FockState::Mixed { rho, .. } => rho[(b, b)].re,
        }
    }

    /// Population of basis states with some mode at its cutoff.
    pub fn edge_population(&self) -> f64 {
        let space = self.space();
        (0..space.dim()).filter(|&b| space.on_edge(b)).map(|b| self.population(b)).sum()
    }

    pub fn normalized(&self) -> Self {
        let t = self.trace();
        match self {
            FockState::Pure { space, psi } => FockState::Pure { space: space.clone(), psi: psi.unscale(t.sqrt()) },
            FockState::Mixed { space, rho } => FockState::Mixed { space: space.clone(), rho: rho.unscale(t) },
        }
    }

    /// `tr(ops · ρ)` for an ordered product of ladder operators.
    pub fn expect(&self, ops: &[Ladder]) -> Result<C64> {
        let space = self.space();
        if let Some(k) = ops.iter().map(|o| o.mode()).find(|&k| k >= space.n_modes()) {
            return Err(RsfError::IndexOutOfRange { index: k, n_modes: space.n_modes() });
        }
        let mut acc = C64::new(0.0, 0.0);
        for b in 0..space.dim() {
            if let Some((to, c)) = space.apply_monomial(ops, b) {
                acc += c * match self {
                    FockState::Pure { psi, .. } => psi[to].conj() * psi[b],
                    FockState::Mixed { rho, .. } => rho[(b, to)],
                };
            }
        }
        Ok(acc)
    }

    /// Applies a Fock-space operator given on photon-number sectors.
    fn conjugate_by(&self, u: &SectorUnitary) -> Self {
        match self {
            FockState::Pure { space, psi } => FockState::Pure { space: space.clone(), psi: u.apply_vec(psi) },
            FockState::Mixed { space, rho } => FockState::Mixed { space: space.clone(), rho: u.conjugate(rho) },
        }
    }
}

impl OdeState for FockState {
    fn axpy(&mut self, a: f64, x: &Self) {
        match (self, x) {
            (FockState::Pure { psi, .. }, FockState::Pure { psi: y, .. }) => add_scaled(psi.as_mut_slice(), a, y.as_slice()),
            (FockState::Mixed { rho, .. }, FockState::Mixed { rho: y, .. }) => add_scaled(rho.as_mut_slice(), a, y.as_slice()),
            _ => panic!("mixed and pure Fock states cannot be combined"),
        }
    }

    fn non_finite_block(&self) -> Option<&'static str> {
        let bad = |m: &[C64]| m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite());
        match self {
            FockState::Pure { psi, .. } => bad(psi.as_slice()).then_some("psi"),
            FockState::Mixed { rho, .. } => bad(rho.as_slice()).then_some("rho_F"),
        }
    }
}

/// A number-conserving Fock-space operator stored per total-photon-number
/// sector.
#[derive(Clone, Debug)]
pub struct SectorUnitary {
    sectors: Vec<(Vec<usize>, CMat)>,
}

impl SectorUnitary {
    /// Lift of a mode unitary `u`, defined by `U† a_p U = Σ_k u[p,k] a_k`.
    ///
    /// `U = exp(-iK)` with `K = Σ G[k,l] a_k† a_l` and `e^{-iG} = u`. Each
    /// sector of `K` is Hermitian and exponentiated through its eigenbasis;
    /// sectors above the smallest cutoff are affected by truncation.
    pub fn lift(space: &FockSpace, u: &CMat) -> Result<Self> {
        let n = space.n_modes();
        crate::tensor::check_square("mode unitary", u, n)?;
        if !crate::tensor::is_unitary(u, 1e-9) {
            return Err(RsfError::InvalidParameter("mode matrix is not unitary".into()));
        }
        let g = hermitian_log(u);
        let mut by_number: Vec<Vec<usize>> = Vec::new();
        for b in 0..space.dim() {
            let t = space.total_number(b);
            if by_number.len() <= t {
                by_number.resize(t + 1, Vec::new());
            }
            by_number[t].push(b);
        }
        let mut sectors = Vec::with_capacity(by_number.len());
        for basis in by_number {
            let mut pos = std::collections::HashMap::with_capacity(basis.len());
            for (p, &b) in basis.iter().enumerate() {
                pos.insert(b, p);
            }
            let d = basis.len();
            let mut k = CMat::zeros(d, d);
            for (col, &b) in basis.iter().enumerate() {
                for p in 0..n {
                    for q in 0..n {
                        let gpq = g[(p, q)];
                        if gpq.norm() == 0.0 {
                            continue;
                        }
                        if let Some((to, c)) = space.apply_monomial(&[Ladder::Create(p), Ladder::Annihilate(q)], b) {
                            k[(pos[&to], col)] += gpq * c;
                        }
                    }
                }
            }
            let eig = crate::tensor::hermitian_part(&k).symmetric_eigen();
            let phases = CMat::from_diagonal(&eig.eigenvalues.map(|x| C64::new(0.0, -x).exp()));
            let v = &eig.eigenvectors;
            sectors.push((basis, v * phases * v.adjoint()));
        }
        Ok(SectorUnitary { sectors })
    }

    fn apply_vec(&self, psi: &CVec) -> CVec {
        let mut out = CVec::zeros(psi.len());
        for (basis, u) in &self.sectors {
            let x = CVec::from_fn(basis.len(), |p, _| psi[basis[p]]);
            let y = u * x;
            for (p, &b) in basis.iter().enumerate() {
                out[b] = y[p];
            }
        }
        out
    }

    /// `U ρ U†`
    fn conjugate(&self, rho: &CMat) -> CMat {
        let mut out = CMat::zeros(rho.nrows(), rho.ncols());
        for (bi, ui) in &self.sectors {
            for (bj, uj) in &self.sectors {
                let block = CMat::from_fn(bi.len(), bj.len(), |p, q| rho[(bi[p], bj[q])]);
                let res = ui * block * uj.adjoint();
                for (p, &r) in bi.iter().enumerate() {
                    for (q, &c) in bj.iter().enumerate() {
                        out[(r, c)] = res[(p, q)];
                    }
                }
            }
        }
        out
    }
}

/// Hermitian `G` with `exp(-iG) = u` for unitary `u`.
pub fn hermitian_log(u: &CMat) -> CMat {
    let (q, t) = u.clone().schur().unpack();
    let g = CMat::from_diagonal(&t.diagonal().map(|z| C64::new(-z.arg(), 0.0)));
    crate::tensor::hermitian_part(&(&q * g * q.adjoint()))
}

/// Applies the lift of a mode unitary to a Fock state.
pub fn apply_mode_unitary_fock(f: &FockState, u: &CMat) -> Result<FockState> {
    Ok(f.conjugate_by(&SectorUnitary::lift(f.space(), u)?))
}

/// Pure loss on every mode: the amplitude of mode `k` is damped to `√η_k`.
pub fn detector_efficiency_fock(f: &FockState, etas: &[f64]) -> Result<FockState> {
    let space = f.space().clone();
    if etas.len() != space.n_modes() {
        return Err(dim_err("detector_efficiency_fock", space.n_modes(), etas.len()));
    }
    let mut rho = f.density_matrix()?;
    for (k, &eta) in etas.iter().enumerate() {
        if !(0.0..=1.0).contains(&eta) {
            return Err(RsfError::InvalidParameter(format!("efficiency {eta} outside [0, 1]")));
        }
        let cut = space.cutoffs()[k];
        let mut next = CMat::zeros(space.dim(), space.dim());
        for l in 0..=cut {
            // Kraus operator removing l photons from mode k
            let mut t = Vec::new();
            for b in 0..space.dim() {
                let n = space.occupation(b, k);
                if n < l {
                    continue;
                }
                let amp = (binomial(n, l) * eta.powi((n - l) as i32) * (1.0 - eta).powi(l as i32)).sqrt();
                t.push((b - l * space.strides[k], b, C64::new(amp, 0.0)));
            }
            let e = SparseOp::from_triplets(space.dim(), t);
            next += e.right_mul_adjoint(&e.left_mul(&rho));
        }
        rho = next;
    }
    FockState::mixed(space, rho)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Generator terms lowered to Fock-space operators once per segment.
pub struct FockGenerator {
    space: FockSpace,
    hamiltonian: SparseOp,
    effective: SparseOp,
    jumps: Vec<(f64, SparseOp)>,
    scattering: Vec<(f64, SectorUnitary)>,
}

impl FockGenerator {
    pub fn new(space: &FockSpace, g: &GeneratorSpec) -> Result<Self> {
        let n = space.n_modes();
        g.check(n)?;
        use Ladder::{Annihilate as A, Create as Cr};
        let i = C64::new(0.0, 1.0);
        let mut h_terms: Vec<(C64, Vec<Ladder>)> = Vec::new();
        for k in 0..n {
            for l in 0..n {
                h_terms.push((g.h[(k, l)], vec![Cr(k), A(l)]));
            }
            // i(ξ a† − ξ* a)
            h_terms.push((i * g.xi[k], vec![Cr(k)]));
            h_terms.push((-i * g.xi[k].conj(), vec![A(k)]));
        }
        if let Some(hs) = &g.hs {
            for k in 0..n {
                for l in 0..n {
                    h_terms.push((hs[(k, l)], vec![A(k), A(l)]));
                    h_terms.push((hs[(k, l)].conj(), vec![Cr(l), Cr(k)]));
                }
            }
        }
        let mut eff_terms = h_terms.clone();
        let half = C64::new(0.0, -0.5);
        for k in 0..n {
            for kp in 0..n {
                // down: a_k ρ a_{k'}† weighted by gamma_down[k,k']
                eff_terms.push((half * g.gamma_down[(k, kp)], vec![Cr(kp), A(k)]));
                // up: a_{k'}† ρ a_k weighted by gamma_up[k',k]
                eff_terms.push((half * g.gamma_up[(kp, k)], vec![A(k), Cr(kp)]));
            }
        }
        let mut jumps = Vec::new();
        for (mat, create) in [(&g.gamma_down, false), (&g.gamma_up, true)] {
            if crate::tensor::max_abs(mat) == 0.0 {
                continue;
            }
            let eig = crate::tensor::hermitian_part(mat).symmetric_eigen();
            for (p, &lam) in eig.eigenvalues.iter().enumerate() {
                if lam.abs() < 1e-15 {
                    continue;
                }
                let v = eig.eigenvectors.column(p);
                let terms: Vec<(C64, Vec<Ladder>)> = (0..n)
                    .map(|k| (v[k], vec![if create { Cr(k) } else { A(k) }]))
                    .collect();
                jumps.push((lam, SparseOp::from_terms(space, &terms)));
            }
        }
        let mut scattering = Vec::new();
        for (u, kappa) in &g.scattering {
            if *kappa != 0.0 {
                scattering.push((*kappa, SectorUnitary::lift(space, u)?));
            }
        }
        Ok(FockGenerator {
            space: space.clone(),
            hamiltonian: SparseOp::from_terms(space, &h_terms),
            effective: SparseOp::from_terms(space, &eff_terms),
            jumps,
            scattering,
        })
    }

    pub fn is_hamiltonian(&self) -> bool {
        self.jumps.is_empty() && self.scattering.is_empty()
    }

    pub fn rhs(&self, f: &FockState) -> Result<FockState> {
        if f.space() != &self.space {
            return Err(dim_err("gkls_rhs", format!("{:?}", self.space.cutoffs()), format!("{:?}", f.space().cutoffs())));
        }
        let mi = C64::new(0.0, -1.0);
        match f {
            FockState::Pure { space, psi } => {
                if !self.is_hamiltonian() {
                    return Err(RsfError::Unsupported(
                        "dissipative or scattering dynamics of a state vector".into(),
                    ));
                }
                Ok(FockState::Pure { space: space.clone(), psi: self.hamiltonian.mul_vec(psi) * mi })
            }
            FockState::Mixed { space, rho } => {
                let hr = self.effective.left_mul(rho);
                // ρ H_eff† = (H_eff ρ†)†
                let rh = self.effective.left_mul(&rho.adjoint()).adjoint();
                let mut d = (hr - rh) * mi;
                for (lam, l) in &self.jumps {
                    let lr = l.left_mul(rho);
                    d += l.right_mul_adjoint(&lr) * C64::new(*lam, 0.0);
                }
                for (kappa, u) in &self.scattering {
                    d += (u.conjugate(rho) - rho) * C64::new(*kappa, 0.0);
                }
                Ok(FockState::Mixed { space: space.clone(), rho: d })
            }
        }
    }
}

/// Time derivative of `f` under the full master equation.
pub fn gkls_rhs(f: &FockState, g: &GeneratorSpec) -> Result<FockState> {
    FockGenerator::new(f.space(), g)?.rhs(f)
}

#[derive(Clone, Copy, Debug)]
pub struct FockOptions {
    pub dt: Option<f64>,
    pub leakage_abort: f64,
}

impl Default for FockOptions {
    fn default() -> Self {
        FockOptions { dt: None, leakage_abort: tol::LEAKAGE_ABORT }
    }
}

/// Integrates the master equation, recording the state at each grid time.
///
/// State vectors are promoted to density matrices on the first segment that
/// is not purely Hamiltonian.
pub fn evolve_fock(initial: &FockState, schedule: &Schedule, t_grid: &[f64], opts: FockOptions) -> Result<Vec<FockState>> {
    let n = initial.space().n_modes();
    let prepared: Vec<FockGenerator> = schedule
        .segments()
        .iter()
        .map(|s| FockGenerator::new(initial.space(), &s.generator))
        .collect::<Result<_>>()?;
    let mut state = initial.clone();
    let mut out = Vec::with_capacity(t_grid.len());
    let mut t = 0.0;
    for &target in t_grid {
        if target < t {
            return Err(RsfError::InvalidParameter("time grid must be increasing".into()));
        }
        for (seg, from, to) in schedule.pieces(t, target) {
            let gen = &prepared[seg];
            if matches!(state, FockState::Pure { .. }) && !gen.is_hamiltonian() {
                state = state.to_mixed()?;
            }
            let g = &schedule.segments()[seg].generator;
            let dt = opts.dt.unwrap_or_else(|| default_step(g, n));
            state = advance(&|s: &FockState| gen.rhs(s), &state, from, to - from, dt)?;
            let leak = state.edge_population();
            if leak > opts.leakage_abort {
                return Err(RsfError::Leakage { population: leak, threshold: opts.leakage_abort, t: to });
            }
        }
        t = target;
        out.push(state.clone());
    }
    Ok(out)
}

fn coherent_amplitude(alpha: C64, n: usize) -> C64 {
    let log_fact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
    (-0.5 * alpha.norm_sqr()).exp() * alpha.powu(n as u32) * (-0.5 * log_fact).exp()
}

/// Truncated and renormalized Fock representation of a preset.
pub fn prepare(preset: &StatePreset, cutoff: usize) -> Result<FockState> {
    preset.validate()?;
    let n = preset.n_modes();
    let space = FockSpace::uniform(n, cutoff)?;
    let zero = C64::new(0.0, 0.0);
    let only = |occ: &[usize], allowed: &[usize]| occ.iter().enumerate().all(|(k, &o)| o == 0 || allowed.contains(&k));
    let amplitude: Box<dyn Fn(&[usize]) -> C64> = match preset {
        StatePreset::Vacuum { .. } => Box::new(|occ| if occ.iter().all(|&o| o == 0) { C64::new(1.0, 0.0) } else { zero }),
        StatePreset::Fock { occupations } => {
            if occupations.iter().any(|&o| o > cutoff) {
                return Err(RsfError::InvalidParameter(format!("occupations {occupations:?} exceed cutoff {cutoff}")));
            }
            let occupations = occupations.clone();
            Box::new(move |occ| if occ == occupations.as_slice() { C64::new(1.0, 0.0) } else { zero })
        }
        StatePreset::Coherent { amplitudes } => {
            let amplitudes = amplitudes.clone();
            Box::new(move |occ| occ.iter().zip(&amplitudes).map(|(&o, &a)| coherent_amplitude(a, o)).product())
        }
        StatePreset::Thermal { nbar } => {
            if space.dim() > MIXED_DIM_LIMIT {
                return Err(RsfError::SpaceTooLarge { dim: space.dim(), limit: MIXED_DIM_LIMIT });
            }
            let mut rho = CMat::zeros(space.dim(), space.dim());
            for b in 0..space.dim() {
                let w: f64 = space
                    .occupations(b)
                    .iter()
                    .zip(nbar)
                    .map(|(&o, &m)| m.powi(o as i32) / (m + 1.0).powi(o as i32 + 1))
                    .product();
                rho[(b, b)] = C64::new(w, 0.0);
            }
            return Ok(FockState::mixed(space, rho)?.normalized());
        }
        StatePreset::Bsv { gain, modes, .. } => {
            let t = gain.tanh();
            let m = *modes;
            Box::new(move |occ| {
                let (p, q) = (occ[m[0]], occ[m[1]]);
                if occ[m[3]] != p || occ[m[2]] != q || !only(occ, &m) {
                    return zero;
                }
                C64::new(t.powi(p as i32) * (-t).powi(q as i32), 0.0)
            })
        }
        StatePreset::SinglePhotonSplit { modes, .. } => {
            let m = *modes;
            Box::new(move |occ| {
                if only(occ, &m) && occ[m[0]] + occ[m[1]] == 1 {
                    C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)
                } else {
                    zero
                }
            })
        }
        StatePreset::SinglePhotonWeakHomodyne { alpha, modes, .. } => {
            let m = *modes;
            let a = C64::new(*alpha, 0.0);
            Box::new(move |occ| {
                if !only(occ, &m) || occ[m[0]] + occ[m[2]] != 1 {
                    return zero;
                }
                coherent_amplitude(a, occ[m[1]]) * coherent_amplitude(a, occ[m[3]]) * std::f64::consts::FRAC_1_SQRT_2
            })
        }
    };
    let psi = CVec::from_fn(space.dim(), |b, _| amplitude(&space.occupations(b)));
    if psi.norm() == 0.0 {
        return Err(RsfError::InvalidParameter(format!("cutoff {cutoff} leaves nothing of the state")));
    }
    Ok(FockState::pure(space, psi)?.normalized())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::max_abs_diff;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn single_mode_cutoff_one() {
        let ops = ladder_ops(1, &[1]).unwrap();
        let (a, ad) = &ops[0];
        assert_eq!(*a, CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]));
        assert_eq!(*ad, a.adjoint());
    }

    #[test]
    fn number_operator_and_commutator_edge() {
        let cut = 4;
        let ops = ladder_ops(1, &[cut]).unwrap();
        let (a, ad) = &ops[0];
        let num = ad * a;
        for k in 0..=cut {
            assert!((num[(k, k)] - c(k as f64)).norm() < 1e-14);
        }
        let comm = a * ad - ad * a;
        for k in 0..cut {
            assert!((comm[(k, k)] - c(1.0)).norm() < 1e-14);
        }
        assert!((comm[(cut, cut)] - c(-(cut as f64))).norm() < 1e-14);
    }

    #[test]
    fn basis_ordering_is_mode_zero_major() {
        let s = FockSpace::new(&[2, 1]).unwrap();
        assert_eq!(s.index(&[1, 0]), Some(2));
        assert_eq!(s.occupations(5), vec![2, 1]);
        assert_eq!(s.index(&[3, 0]), None);
    }

    #[test]
    fn amplitude_damping_rate() {
        let space = FockSpace::uniform(1, 3).unwrap();
        let f = FockState::basis(space, &[1]).unwrap().to_mixed().unwrap();
        let mut g = GeneratorSpec::zero(1);
        g.gamma_down[(0, 0)] = c(0.7);
        let d = gkls_rhs(&f, &g).unwrap();
        let dn = d.expect(&[Ladder::Create(0), Ladder::Annihilate(0)]).unwrap();
        assert!((dn - c(-0.7)).norm() < 1e-14);
    }

    #[test]
    fn vacuum_is_stationary_under_number_conserving_hamiltonian() {
        let space = FockSpace::uniform(2, 3).unwrap();
        let f = FockState::basis(space, &[0, 0]).unwrap();
        let mut g = GeneratorSpec::zero(2);
        g.h = CMat::from_row_slice(2, 2, &[c(1.0), C64::new(0.2, 0.3), C64::new(0.2, -0.3), c(-0.5)]);
        let d = gkls_rhs(&f, &g).unwrap();
        assert_eq!(d.trace(), 0.0);
    }

    #[test]
    fn lifted_beamsplitter_maps_single_photon() {
        let space = FockSpace::uniform(2, 2).unwrap();
        let f = FockState::basis(space.clone(), &[1, 0]).unwrap();
        let t: f64 = 0.3;
        let u = crate::optics::beamsplitter_unitary(t, 0, 1, 2).unwrap();
        let out = apply_mode_unitary_fock(&f, &u).unwrap();
        // U†aU = ua on moments: ⟨a_p† a_q⟩' = Σ u*_{pk} u_{ql} ⟨a_k† a_l⟩
        let n0 = out.expect(&[Ladder::Create(0), Ladder::Annihilate(0)]).unwrap();
        assert!((n0 - c(t)).norm() < 1e-12);
        let lifted = SectorUnitary::lift(&space, &u).unwrap();
        let two = FockState::basis(space, &[1, 1]).unwrap();
        let psi = match two {
            FockState::Pure { psi, .. } => lifted.apply_vec(&psi),
            _ => unreachable!(),
        };
        assert!((psi.norm_squared() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hermitian_log_inverts_exponential() {
        let u = crate::optics::beamsplitter_unitary(0.4, 0, 1, 3).unwrap();
        let g = hermitian_log(&u);
        let eig = g.clone().symmetric_eigen();
        let e = &eig.eigenvectors
            * CMat::from_diagonal(&eig.eigenvalues.map(|x| C64::new(0.0, -x).exp()))
            * eig.eigenvectors.adjoint();
        assert!(max_abs_diff(&e, &u) < 1e-12);
    }

    #[test]
    fn loss_channel_scales_occupation() {
        let space = FockSpace::uniform(1, 4).unwrap();
        let f = FockState::basis(space, &[3]).unwrap();
        let out = detector_efficiency_fock(&f, &[0.25]).unwrap();
        assert!((out.trace() - 1.0).abs() < 1e-14);
        let n = out.expect(&[Ladder::Create(0), Ladder::Annihilate(0)]).unwrap();
        assert!((n - c(0.75)).norm() < 1e-14);
    }
}
