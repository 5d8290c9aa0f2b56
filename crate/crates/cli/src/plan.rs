//! Validation of a [`Scenario`] and its translation into library types.

use rsf::evolution::linspace;
use rsf::factory::preset_normal;
use rsf::fock::prepare;
use rsf::{
    bath_to_gamma, beamsplitter_unitary, phase_unitary, Bipartition, CMat, CVec, FockSpace, FockState,
    GeneratorSpec, ReducedState, SecondOrderState, StatePreset, ThermalBathSpec, C64,
};

use crate::config::{Entry, EvolveSpec, InitialSpec, ObservableSpec, Scenario, Step};
use crate::error::{CliError, Context};

#[derive(Clone, Debug)]
pub enum PlanStep {
    Evolve {
        generator: GeneratorSpec,
        duration: f64,
        /// Integrate the enlarged state that stays closed under squeezing.
        second_order: bool,
    },
    Unitary {
        u: CMat,
    },
    Efficiency(Vec<f64>),
}

/// A validated scenario with zero-based modes.
#[derive(Clone, Debug)]
pub struct Plan {
    pub n_modes: usize,
    /// `(first mode, preset on local modes)` for each initial component.
    pub components: Vec<(usize, StatePreset)>,
    pub grid: Vec<f64>,
    pub steps: Vec<PlanStep>,
    pub bipartition: Option<Bipartition>,
    pub observables: Vec<ObservableSpec>,
    pub dt: Option<f64>,
}

fn mode(key: &str, k: usize, n: usize) -> Result<usize, CliError> {
    if k == 0 || k > n {
        return Err(CliError::config(key, format!("mode {k} outside 1..={n}")));
    }
    Ok(k - 1)
}

fn modes<const M: usize>(key: &str, ks: [usize; M], n: usize) -> Result<[usize; M], CliError> {
    let mut out = [0; M];
    for (o, k) in out.iter_mut().zip(ks) {
        *o = mode(key, k, n)?;
    }
    Ok(out)
}

fn preset(spec: &InitialSpec, key: &str) -> Result<StatePreset, CliError> {
    let p = match spec {
        InitialSpec::Vacuum { n_modes } => StatePreset::Vacuum { n_modes: *n_modes },
        InitialSpec::Fock { occupations } => StatePreset::Fock { occupations: occupations.clone() },
        InitialSpec::Coherent { amplitudes } => StatePreset::Coherent { amplitudes: amplitudes.iter().map(|a| a.value()).collect() },
        InitialSpec::Thermal { nbar } => StatePreset::Thermal { nbar: nbar.clone() },
        InitialSpec::Bsv { gain, modes: m, n_modes } => StatePreset::Bsv { gain: *gain, modes: modes(key, *m, *n_modes)?, n_modes: *n_modes },
        InitialSpec::SinglePhoton { modes: m, n_modes } => StatePreset::SinglePhotonSplit { modes: modes(key, *m, *n_modes)?, n_modes: *n_modes },
        InitialSpec::WeakHomodyne { alpha, modes: m, n_modes } => {
            StatePreset::SinglePhotonWeakHomodyne { alpha: *alpha, modes: modes(key, *m, *n_modes)?, n_modes: *n_modes }
        }
    };
    p.validate().map_err(|e| CliError::config(key, e))?;
    Ok(p)
}

/// Fills a matrix from entries, mirroring each off-diagonal element.
fn matrix(key: &str, entries: &[Entry], n: usize, mirror: fn(C64) -> C64) -> Result<CMat, CliError> {
    let mut m = CMat::zeros(n, n);
    for e in entries {
        let (i, j) = (mode(key, e.i, n)?, mode(key, e.j, n)?);
        m[(i, j)] = e.value.value();
        if i != j {
            m[(j, i)] = mirror(e.value.value());
        }
    }
    Ok(m)
}

fn generator(spec: &EvolveSpec, key: &str, n: usize) -> Result<GeneratorSpec, CliError> {
    let k = |field: &str| format!("{key}.{field}");
    let mut g = GeneratorSpec::zero(n);
    g.h = matrix(&k("h"), &spec.h, n, |z| z.conj())?;
    g.gamma_up = matrix(&k("gamma_up"), &spec.gamma_up, n, |z| z.conj())?;
    g.gamma_down = matrix(&k("gamma_down"), &spec.gamma_down, n, |z| z.conj())?;
    let mut xi = CVec::zeros(n);
    for e in &spec.xi {
        xi[mode(&k("xi"), e.k, n)?] = e.value.value();
    }
    g.xi = xi;
    if let Some(b) = &spec.bath {
        let coupled = match &b.modes {
            Some(ms) => ms.iter().map(|&m| mode(&k("bath.modes"), m, n)).collect::<Result<_, _>>()?,
            None => (0..n).collect(),
        };
        let bath = ThermalBathSpec { n_omega: b.n_omega, gamma_omega: b.gamma_omega, coupled_modes: coupled };
        let (up, down) = bath_to_gamma(&bath, n).map_err(|e| CliError::config(&k("bath"), e))?;
        g.gamma_up += up;
        g.gamma_down += down;
    }
    if let Some(p) = &spec.phase {
        let i = mode(&k("phase.mode"), p.mode, n)?;
        g.h[(i, i)] += C64::new(p.rate, 0.0);
    }
    for (c, s) in spec.scattering.iter().enumerate() {
        let key = format!("{key}.scattering[{c}]");
        let mut u = CMat::zeros(n, n);
        for e in &s.u {
            u[(mode(&key, e.i, n)?, mode(&key, e.j, n)?)] = e.value.value();
        }
        g.scattering.push((u, s.kappa));
    }
    if !spec.squeezing.is_empty() {
        g.hs = Some(matrix(&k("squeezing"), &spec.squeezing, n, |z| z)?);
    }
    g.check(n).map_err(|e| CliError::config(key, e))?;
    Ok(g)
}

impl Plan {
    pub fn new(s: &Scenario) -> Result<Self, CliError> {
        let n = s.n_modes;
        if n == 0 {
            return Err(CliError::config("n_modes", "must be positive"));
        }
        if !(s.time.t_max >= 0.0 && s.time.t_max.is_finite()) || s.time.samples == 0 {
            return Err(CliError::config("time", "needs a finite t_max >= 0 and at least one sample"));
        }
        if let Some(dt) = s.time.dt {
            if !(dt > 0.0) {
                return Err(CliError::config("time.dt", format!("step {dt} must be positive")));
            }
        }

        let mut components = Vec::new();
        let mut offset = 0;
        for (c, spec) in s.initial.iter().enumerate() {
            let p = preset(spec, &format!("initial[{c}]"))?;
            let m = p.n_modes();
            components.push((offset, p));
            offset += m;
        }
        if offset != n {
            return Err(CliError::config("initial", format!("components cover {offset} modes, n_modes is {n}")));
        }

        let bipartition = match &s.bipartition {
            Some(b) => {
                let a = b.a.iter().map(|&k| mode("bipartition.a", k, n)).collect::<Result<Vec<_>, _>>()?;
                let bb = b.b.iter().map(|&k| mode("bipartition.b", k, n)).collect::<Result<Vec<_>, _>>()?;
                Some(Bipartition::new(&a, &bb).map_err(|e| CliError::config("bipartition", e))?)
            }
            None => None,
        };
        for o in &s.observables {
            let key = format!("observables: {o}");
            match *o {
                ObservableSpec::Ppt | ObservableSpec::CriticalTime => {
                    if bipartition.is_none() {
                        return Err(CliError::config(&key, "needs a [bipartition]"));
                    }
                }
                ObservableSpec::CovariancePpt => match &bipartition {
                    None => return Err(CliError::config(&key, "needs a [bipartition]")),
                    Some(bp) => {
                        if let Some(k) = (0..n).find(|&k| bp.party_of(k).is_none()) {
                            return Err(CliError::config(&key, format!("mode {} belongs to neither party", k + 1)));
                        }
                    }
                },
                ObservableSpec::MandelQ(i) => {
                    mode(&key, i, n)?;
                }
                ObservableSpec::GenQ(i, j) => {
                    mode(&key, i, n)?;
                    mode(&key, j, n)?;
                }
                ObservableSpec::Entropy | ObservableSpec::Occupations => {}
            }
        }

        let last_squeezing = s
            .pipeline
            .iter()
            .rposition(|st| matches!(st, Step::Evolve(e) if !e.squeezing.is_empty()));
        let mut steps = Vec::new();
        let mut total = 0.0;
        let mut open_ended = false;
        for (k, st) in s.pipeline.iter().enumerate() {
            let key = format!("pipeline[{k}]");
            if open_ended {
                return Err(CliError::config(&key, "follows an evolve step without duration"));
            }
            let before_squeezing = last_squeezing.is_some_and(|l| k < l);
            if before_squeezing && !matches!(st, Step::Evolve(_)) {
                return Err(CliError::config(&key, "optical elements cannot precede a squeezing segment"));
            }
            steps.push(match st {
                Step::Evolve(e) => {
                    let duration = match e.duration {
                        Some(d) if d > 0.0 && d.is_finite() => d,
                        Some(d) => return Err(CliError::config(&format!("{key}.duration"), format!("{d} is not a positive duration"))),
                        None => {
                            open_ended = true;
                            f64::INFINITY
                        }
                    };
                    total += duration;
                    PlanStep::Evolve {
                        generator: generator(e, &key, n)?,
                        duration,
                        second_order: last_squeezing.is_some_and(|l| k <= l),
                    }
                }
                Step::Beamsplitter(b) => {
                    let [i, j] = modes(&format!("{key}.modes"), b.modes, n)?;
                    PlanStep::Unitary { u: beamsplitter_unitary(b.transmission, i, j, n).map_err(|e| CliError::config(&key, e))? }
                }
                Step::Phase(p) => PlanStep::Unitary {
                    u: phase_unitary(n, mode(&format!("{key}.mode"), p.mode, n)?, p.shift).map_err(|e| CliError::config(&key, e))?,
                },
                Step::Efficiency(e) => {
                    if e.eta.len() != n || e.eta.iter().any(|x| !(0.0..=1.0).contains(x)) {
                        return Err(CliError::config(&format!("{key}.eta"), format!("needs {n} values in [0, 1]")));
                    }
                    PlanStep::Efficiency(e.eta.clone())
                }
            });
        }
        if s.time.t_max > total * (1.0 + 1e-12) {
            return Err(CliError::config("time.t_max", format!("{} exceeds the pipeline duration {total}", s.time.t_max)));
        }

        Ok(Plan {
            n_modes: n,
            components,
            grid: linspace(s.time.t_max, s.time.samples),
            steps,
            bipartition,
            observables: s.observables.clone(),
            dt: s.time.dt,
        })
    }

    pub fn needs_second_order(&self) -> bool {
        self.steps.iter().any(|s| matches!(s, PlanStep::Evolve { second_order: true, .. }))
    }

    /// Normal-ordered moments of the product initial state.
    pub fn initial_normal(&self) -> Result<impl Fn(&[usize], &[usize]) -> C64, CliError> {
        let parts = self
            .components
            .iter()
            .map(|(o, p)| Ok((*o, p.n_modes(), preset_normal(p)?)))
            .collect::<rsf::Result<Vec<_>>>()
            .context(|| "initial state".into())?;
        Ok(move |c: &[usize], d: &[usize]| {
            let local = |ks: &[usize], o: usize, m: usize| -> Vec<usize> {
                ks.iter().filter(|&&k| k >= o && k < o + m).map(|&k| k - o).collect()
            };
            parts.iter().map(|(o, m, f)| f(&local(c, *o, *m), &local(d, *o, *m))).product()
        })
    }

    pub fn initial_reduced(&self) -> Result<ReducedState, CliError> {
        let f = self.initial_normal()?;
        ReducedState::from_normal(self.n_modes, |c, d| Ok(f(c, d))).context(|| "initial state".into())
    }

    pub fn initial_second_order(&self) -> Result<SecondOrderState, CliError> {
        let f = self.initial_normal()?;
        SecondOrderState::from_normal(self.n_modes, |c, d| Ok(f(c, d))).context(|| "initial state".into())
    }

    /// Truncated product state with the same cutoff on every mode.
    pub fn initial_fock(&self, cutoff: usize) -> Result<FockState, CliError> {
        let ctx = || format!("initial Fock state at cutoff {cutoff}");
        let parts: Vec<(usize, FockState)> =
            self.components.iter().map(|(o, p)| Ok((*o, prepare(p, cutoff)?))).collect::<rsf::Result<_>>().context(ctx)?;
        let space = FockSpace::uniform(self.n_modes, cutoff).context(ctx)?;
        // basis index of every component for every global basis state
        let local: Vec<Vec<usize>> = (0..space.dim())
            .map(|b| {
                let occ = space.occupations(b);
                parts
                    .iter()
                    .map(|(o, f)| {
                        let m = f.space().n_modes();
                        f.space().index(&occ[*o..o + m]).expect("component space has the same cutoff")
                    })
                    .collect()
            })
            .collect();
        if parts.iter().all(|(_, f)| matches!(f, FockState::Pure { .. })) {
            let psi = CVec::from_fn(space.dim(), |b, _| {
                parts
                    .iter()
                    .zip(&local[b])
                    .map(|((_, f), &l)| match f {
                        FockState::Pure { psi, .. } => psi[l],
                        FockState::Mixed { .. } => unreachable!(),
                    })
                    .product()
            });
            return FockState::pure(space, psi).context(ctx);
        }
        let rhos: Vec<CMat> = parts.iter().map(|(_, f)| f.density_matrix()).collect::<rsf::Result<_>>().context(ctx)?;
        if space.dim() > rsf::fock::MIXED_DIM_LIMIT {
            return Err(CliError::Numerical {
                context: ctx(),
                source: rsf::RsfError::SpaceTooLarge { dim: space.dim(), limit: rsf::fock::MIXED_DIM_LIMIT },
            });
        }
        let rho = CMat::from_fn(space.dim(), space.dim(), |b, bp| {
            rhos.iter().enumerate().map(|(p, r)| r[(local[b][p], local[bp][p])]).product()
        });
        FockState::mixed(space, rho).context(ctx)
    }
}
