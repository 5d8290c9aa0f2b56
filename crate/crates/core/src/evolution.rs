//! Reduced equations of motion, thermal baths and trajectory integration.

use crate::error::{dim_err, Result, RsfError};
use crate::ode::{advance, OdeState};
use crate::state::{project_bipartition, Bipartition, ReducedState};
use crate::tensor::{add_scaled, check_square, col, hermitian_norm, identity, idx, is_unitary, kron, max_abs, tau_l, tau_r};
use crate::{tol, CMat, CVec, C64};

/// Generator of the master equation in reduced form.
///
/// The Fock-space generator it stands for is
/// `H = Σ h[k,l] a_k† a_l + i Σ (ξ_k a_k† − ξ_k* a_k) + Σ (hs[k,l] a_k a_l + h.c.)`,
/// the loss term `Σ gamma_down[k,l] (a_k ρ a_l† − ½{a_l† a_k, ρ})`, the gain
/// term `Σ gamma_up[l,k] (a_l† ρ a_k − ½{a_k a_l†, ρ})` and elastic
/// scattering `Σ κ (U ρ U† − ρ)` with `U† a U = u a`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSpec {
    pub h: CMat,
    pub xi: CVec,
    pub gamma_up: CMat,
    pub gamma_down: CMat,
    pub scattering: Vec<(CMat, f64)>,
    pub hs: Option<CMat>,
}

impl GeneratorSpec {
    pub fn zero(n: usize) -> Self {
        GeneratorSpec {
            h: CMat::zeros(n, n),
            xi: CVec::zeros(n),
            gamma_up: CMat::zeros(n, n),
            gamma_down: CMat::zeros(n, n),
            scattering: Vec::new(),
            hs: None,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.h.nrows()
    }

    pub fn with_bath(mut self, bath: &ThermalBathSpec) -> Result<Self> {
        let (up, down) = bath_to_gamma(bath, self.n_modes())?;
        self.gamma_up += up;
        self.gamma_down += down;
        Ok(self)
    }

    /// Validates shapes and the physical constraints on every matrix.
    pub fn check(&self, n: usize) -> Result<()> {
        check_square("h", &self.h, n)?;
        check_square("gamma_up", &self.gamma_up, n)?;
        check_square("gamma_down", &self.gamma_down, n)?;
        if self.xi.len() != n {
            return Err(dim_err("xi", n, self.xi.len()));
        }
        let herm = |name: &str, m: &CMat| -> Result<()> {
            let d = crate::tensor::hermiticity_defect(m);
            if d > tol::STRUCT {
                return Err(RsfError::InvalidParameter(format!("{name} is not Hermitian (defect {d:e})")));
            }
            Ok(())
        };
        herm("h", &self.h)?;
        for (name, m) in [("gamma_up", &self.gamma_up), ("gamma_down", &self.gamma_down)] {
            herm(name, m)?;
            if n > 0 {
                let low = crate::tensor::hermitian_eigenvalues(m)[0];
                if low < -tol::STRUCT {
                    return Err(RsfError::InvalidParameter(format!(
                        "{name} is not positive semidefinite (eigenvalue {low:e})"
                    )));
                }
            }
        }
        for (u, kappa) in &self.scattering {
            check_square("scattering unitary", u, n)?;
            if !is_unitary(u, 1e-9) {
                return Err(RsfError::InvalidParameter("scattering matrix is not unitary".into()));
            }
            if !(*kappa >= 0.0) {
                return Err(RsfError::InvalidParameter(format!("scattering rate {kappa} is negative")));
            }
        }
        if let Some(hs) = &self.hs {
            check_square("hs", hs, n)?;
            if crate::tensor::max_abs_diff(hs, &hs.transpose()) > tol::STRUCT {
                return Err(RsfError::InvalidParameter("hs is not symmetric".into()));
            }
        }
        Ok(())
    }

    /// Matrix acting on each annihilation index: `−i h + ½(γ↑ − γ↓ᵀ)`.
    pub(crate) fn one_body(&self) -> CMat {
        let diss = (&self.gamma_up - self.gamma_down.transpose()).scale(0.5);
        self.h.map(|z| z * C64::new(0.0, -1.0)) + diss
    }
}

/// Thermal bath with Planck occupation `n_omega` coupled at rate `gamma_omega`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermalBathSpec {
    pub n_omega: f64,
    pub gamma_omega: f64,
    pub coupled_modes: Vec<usize>,
}

pub fn bath_to_gamma(b: &ThermalBathSpec, n_modes: usize) -> Result<(CMat, CMat)> {
    if !(b.n_omega >= 0.0) || !(b.gamma_omega >= 0.0) {
        return Err(RsfError::InvalidParameter(format!(
            "bath needs n_omega >= 0 and gamma_omega >= 0, got {} and {}",
            b.n_omega, b.gamma_omega
        )));
    }
    let mut up = CMat::zeros(n_modes, n_modes);
    let mut down = CMat::zeros(n_modes, n_modes);
    for &k in &b.coupled_modes {
        if k >= n_modes {
            return Err(RsfError::IndexOutOfRange { index: k, n_modes });
        }
        up[(k, k)] = C64::new(b.gamma_omega * b.n_omega, 0.0);
        down[(k, k)] = C64::new(b.gamma_omega * (b.n_omega + 1.0), 0.0);
    }
    Ok((up, down))
}

/// `0.01 / max(‖h‖ + 2‖hs‖, ‖γ↑‖ + ‖γ↓‖, Σκ, 1)`.
pub fn default_step(g: &GeneratorSpec, _n: usize) -> f64 {
    let hs = g.hs.as_ref().map_or(0.0, |m| m.norm());
    let scale = (hermitian_norm(&g.h) + 2.0 * hs)
        .max(hermitian_norm(&g.gamma_up) + hermitian_norm(&g.gamma_down))
        .max(g.scattering.iter().map(|(_, k)| k).sum())
        .max(1.0);
    0.01 / scale
}

/// Time derivative of every reduced block.
pub fn rhs(rs: &ReducedState, g: &GeneratorSpec) -> Result<ReducedState> {
    let n = rs.n_modes;
    rs.check_dims()?;
    check_square("h", &g.h, n)?;
    if g.xi.len() != n {
        return Err(dim_err("xi", n, g.xi.len()));
    }
    if g.hs.is_some() {
        return Err(RsfError::Unsupported("squeezing needs the second-order equations".into()));
    }
    let a = g.one_body();
    let ad = a.adjoint();
    let id = identity(n);
    let a2 = kron(&a, &id) + kron(&id, &a);
    let xi = &g.xi;
    let alpha = &rs.alpha;
    let gu = &g.gamma_up;
    let gdt = g.gamma_down.transpose();

    let mut d_alpha = &a * alpha + xi;
    let mut d_rho = &a * &rs.rho + &rs.rho * &ad + xi * alpha.adjoint() + alpha * xi.adjoint() + gu;
    let x = &a * &rs.r + xi * alpha.transpose();
    let mut d_r = &x + x.transpose();

    // fourth-order block
    let mut d_rho4 = &a2 * &rs.rho4 + &rs.rho4 * a2.adjoint();
    let t1 = kron(&col(xi), &rs.beta.adjoint());
    let t2 = kron(&(xi * alpha.adjoint()), &id);
    let t3 = kron(&rs.beta, &col(xi).adjoint());
    let t4 = kron(&id, &(alpha * xi.adjoint()));
    d_rho4 += &t1 + tau_l(&t1) + tau_l(&t2) + &t3 + tau_r(&t3) + tau_r(&t4);
    d_rho4 += tau_l(&kron(&rs.rho, &gdt))
        + tau_l(&kron(gu, &rs.rho))
        + kron(gu, &rs.rho)
        + kron(&rs.rho, gu)
        + tau_l(&kron(gu, &id));

    // third-order block
    let mut d_beta = &a2 * &rs.beta + &rs.beta * &ad;
    let rx = kron(&rs.rho, &col(xi));
    let r_vec = CMat::from_fn(n * n, 1, |p, _| rs.r[(p / n, p % n)]);
    d_beta += &rx + tau_l(&rx) + r_vec * xi.adjoint();
    let ga = kron(gu, &col(alpha));
    d_beta += &ga + tau_l(&ga);

    for (u, kappa) in &g.scattering {
        if *kappa == 0.0 {
            continue;
        }
        check_square("scattering unitary", u, n)?;
        let k = C64::new(*kappa, 0.0);
        let uu = kron(u, u);
        d_alpha += (u * alpha - alpha) * k;
        d_rho += (u * &rs.rho * u.adjoint() - &rs.rho) * k;
        d_r += (u * &rs.r * u.transpose() - &rs.r) * k;
        d_rho4 += (&uu * &rs.rho4 * uu.adjoint() - &rs.rho4) * k;
        d_beta += (&uu * &rs.beta * u.adjoint() - &rs.beta) * k;
    }

    Ok(ReducedState {
        n_modes: n,
        rho: d_rho,
        alpha: d_alpha,
        r: d_r,
        rho4: d_rho4,
        beta: d_beta,
    })
}

fn check_local(g: &GeneratorSpec, bp: &Bipartition) -> Result<()> {
    let n = g.n_modes();
    let group = |k: usize| bp.party_of(k).unwrap_or('C');
    let mut mats: Vec<(&'static str, &CMat)> =
        vec![("h", &g.h), ("gamma_up", &g.gamma_up), ("gamma_down", &g.gamma_down)];
    for (u, _) in &g.scattering {
        mats.push(("scattering", u));
    }
    for (which, m) in mats {
        for row in 0..n {
            for c in 0..n {
                if group(row) != group(c) && m[(row, c)].norm() > tol::STRUCT {
                    return Err(RsfError::NonlocalGenerator { which, row, col: c, value: m[(row, c)].norm() });
                }
            }
        }
    }
    if g.hs.is_some() {
        return Err(RsfError::Unsupported("squeezing does not preserve the projected block".into()));
    }
    Ok(())
}

/// Closed evolution of the projected block `p = Π ρ₄ Π` under a generator
/// that does not couple `A`, `B` and the remaining modes.
///
/// `rs` supplies `rho`, and `alpha`, `beta` when the pump is nonzero; its
/// `rho4` is ignored.
pub fn rhs_projected(p: &CMat, rs: &ReducedState, g: &GeneratorSpec, bp: &Bipartition) -> Result<CMat> {
    let n = rs.n_modes;
    bp.check_range(n)?;
    g.check(n)?;
    check_local(g, bp)?;
    let (da, db) = bp.dims();
    check_square("projected block", p, da * db)?;
    let pairs: Vec<(usize, usize)> = bp
        .set_a()
        .iter()
        .flat_map(|&i| bp.set_b().iter().map(move |&j| (i, j)))
        .collect();
    let a = g.one_body();
    let a2 = CMat::from_fn(pairs.len(), pairs.len(), |r, c| {
        let ((i, j), (i2, j2)) = (pairs[r], pairs[c]);
        let mut v = C64::new(0.0, 0.0);
        if j == j2 {
            v += a[(i, i2)];
        }
        if i == i2 {
            v += a[(j, j2)];
        }
        v
    });
    let mut d = &a2 * p + p * a2.adjoint();
    let (rho, alpha, beta, xi) = (&rs.rho, &rs.alpha, &rs.beta, &g.xi);
    let gu = &g.gamma_up;
    let gd = &g.gamma_down;
    let pumped = max_abs(&col(xi)) > 0.0;
    for (r, &(i, j)) in pairs.iter().enumerate() {
        for (c, &(nn, m)) in pairs.iter().enumerate() {
            let dl = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };
            let mut v = gd[(m, i)] * rho[(j, nn)]
                + gu[(j, nn)] * rho[(i, m)]
                + gu[(i, nn)] * rho[(j, m)]
                + rho[(i, nn)] * gu[(j, m)]
                + gu[(j, nn)] * dl(i, m);
            if pumped {
                v += xi[i] * beta[(idx(n, nn, m), j)].conj()
                    + xi[j] * beta[(idx(n, nn, m), i)].conj()
                    + xi[j] * alpha[nn].conj() * dl(i, m)
                    + beta[(idx(n, i, j), nn)] * xi[m].conj()
                    + beta[(idx(n, i, j), m)] * xi[nn].conj()
                    + alpha[j] * xi[nn].conj() * dl(i, m);
            }
            d[(r, c)] += v;
        }
    }
    for (u, kappa) in &g.scattering {
        if *kappa == 0.0 {
            continue;
        }
        let uu = CMat::from_fn(pairs.len(), pairs.len(), |r, c| {
            let ((i, j), (i2, j2)) = (pairs[r], pairs[c]);
            u[(i, i2)] * u[(j, j2)]
        });
        d += (&uu * p * uu.adjoint() - p) * C64::new(*kappa, 0.0);
    }
    Ok(d)
}

/// `(ρ, ρ^Π)` pair that evolves in closed form when the pump vanishes.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedState {
    pub rho: CMat,
    pub p: CMat,
}

impl ProjectedState {
    pub fn from_reduced(rs: &ReducedState, bp: &Bipartition) -> Result<Self> {
        Ok(ProjectedState { rho: rs.rho.clone(), p: project_bipartition(rs, bp)? })
    }
}

impl OdeState for ProjectedState {
    fn axpy(&mut self, a: f64, x: &Self) {
        add_scaled(self.rho.as_mut_slice(), a, x.rho.as_slice());
        add_scaled(self.p.as_mut_slice(), a, x.p.as_slice());
    }

    fn non_finite_block(&self) -> Option<&'static str> {
        let bad = |m: &CMat| m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite());
        if bad(&self.rho) {
            Some("rho")
        } else if bad(&self.p) {
            Some("rho_pi")
        } else {
            None
        }
    }
}

/// Derivative of a [`ProjectedState`]; requires `xi = 0`.
pub fn rhs_projected_pair(s: &ProjectedState, g: &GeneratorSpec, bp: &Bipartition) -> Result<ProjectedState> {
    let n = s.rho.nrows();
    if max_abs(&col(&g.xi)) > 0.0 {
        return Err(RsfError::Unsupported("the projected pair is not closed under pumping".into()));
    }
    let mut ctx = ReducedState::vacuum(n);
    ctx.rho = s.rho.clone();
    let dp = rhs_projected(&s.p, &ctx, g, bp)?;
    let a = g.one_body();
    let mut d_rho = &a * &s.rho + &s.rho * a.adjoint() + &g.gamma_up;
    for (u, kappa) in &g.scattering {
        d_rho += (u * &s.rho * u.adjoint() - &s.rho) * C64::new(*kappa, 0.0);
    }
    Ok(ProjectedState { rho: d_rho, p: dp })
}

/// One constant-generator piece of a schedule, active on `[start, end)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub generator: GeneratorSpec,
    pub start: f64,
    pub end: f64,
}

/// Piecewise-constant generator starting at `t = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    segments: Vec<Segment>,
}

impl Schedule {
    /// The same generator for all times.
    pub fn constant(g: GeneratorSpec) -> Self {
        Schedule { segments: vec![Segment { generator: g, start: 0.0, end: f64::INFINITY }] }
    }

    /// Consecutive pieces with the given durations; the last one may be
    /// `f64::INFINITY`.
    pub fn piecewise(pieces: Vec<(GeneratorSpec, f64)>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(RsfError::InvalidParameter("schedule needs at least one segment".into()));
        }
        let n = pieces[0].0.n_modes();
        let mut t = 0.0;
        let mut segments = Vec::with_capacity(pieces.len());
        for (g, d) in pieces {
            if !(d > 0.0) {
                return Err(RsfError::InvalidParameter(format!("segment duration {d} must be positive")));
            }
            if g.n_modes() != n {
                return Err(dim_err("schedule", n, g.n_modes()));
            }
            segments.push(Segment { generator: g, start: t, end: t + d });
            t += d;
        }
        Ok(Schedule { segments })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn end(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.end)
    }

    pub fn n_modes(&self) -> usize {
        self.segments[0].generator.n_modes()
    }

    /// Splits `[from, to]` at segment boundaries as `(segment, start, end)`.
    pub fn pieces(&self, from: f64, to: f64) -> Vec<(usize, f64, f64)> {
        let mut out = Vec::new();
        if to <= from {
            return out;
        }
        for (k, s) in self.segments.iter().enumerate() {
            let lo = from.max(s.start);
            let hi = to.min(s.end);
            if hi > lo {
                out.push((k, lo, hi));
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct IntegrateOptions {
    /// Overrides the default step bound.
    pub dt: Option<f64>,
}

/// Integrates `f` along `schedule`, recording the state at every grid time.
pub(crate) fn integrate_with<S, F>(
    initial: &S,
    schedule: &Schedule,
    t_grid: &[f64],
    opts: IntegrateOptions,
    f: F,
) -> Result<Vec<S>>
where
    S: OdeState,
    F: Fn(&S, &GeneratorSpec) -> Result<S>,
{
    let mut out = Vec::with_capacity(t_grid.len());
    let mut state = initial.clone();
    let mut t = 0.0;
    for &target in t_grid {
        if !(target >= t) {
            return Err(RsfError::InvalidParameter(format!(
                "time grid must be non-negative and increasing (got {target} after {t})"
            )));
        }
        if target > schedule.end() {
            return Err(RsfError::InvalidParameter(format!(
                "time {target} lies beyond the schedule end {}",
                schedule.end()
            )));
        }
        state = advance_schedule(&state, schedule, t, target, opts, &f)?;
        t = target;
        out.push(state.clone());
    }
    Ok(out)
}

pub(crate) fn advance_schedule<S, F>(
    state: &S,
    schedule: &Schedule,
    from: f64,
    to: f64,
    opts: IntegrateOptions,
    f: &F,
) -> Result<S>
where
    S: OdeState,
    F: Fn(&S, &GeneratorSpec) -> Result<S>,
{
    let mut state = state.clone();
    for (seg, lo, hi) in schedule.pieces(from, to) {
        let g = &schedule.segments()[seg].generator;
        let dt = opts.dt.unwrap_or_else(|| default_step(g, g.n_modes()));
        state = advance(&|s: &S| f(s, g), &state, lo, hi - lo, dt)?;
    }
    Ok(state)
}

/// Fixed-step RK4 integration of the reduced equations.
pub fn integrate(initial: &ReducedState, schedule: &Schedule, t_grid: &[f64], opts: IntegrateOptions) -> Result<Vec<ReducedState>> {
    for s in schedule.segments() {
        s.generator.check(initial.n_modes)?;
    }
    integrate_with(initial, schedule, t_grid, opts, |s, g| rhs(s, g))
}

/// Integrates only `(ρ, ρ^Π)`; requires a local, unpumped generator.
pub fn integrate_projected(
    initial: &ProjectedState,
    schedule: &Schedule,
    bp: &Bipartition,
    t_grid: &[f64],
    opts: IntegrateOptions,
) -> Result<Vec<ProjectedState>> {
    integrate_with(initial, schedule, t_grid, opts, |s, g| rhs_projected_pair(s, g, bp))
}

/// `n` equally spaced times on `[0, t_max]`.
pub fn linspace(t_max: f64, samples: usize) -> Vec<f64> {
    match samples {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..samples).map(|k| t_max * k as f64 / (samples - 1) as f64).collect(),
    }
}
