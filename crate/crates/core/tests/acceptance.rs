//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.
//!
//! Run with `cargo test -p rsf --test acceptance -- --nocapture` or simply as
//! part of `cargo test`.

mod common;

use std::f64::consts::SQRT_2;
use std::process::ExitCode;
use std::time::Instant;

use rayon::prelude::*;
use rsf::entanglement::ppt_of;
use rsf::evolution::{integrate_projected, linspace, IntegrateOptions};
use rsf::fock::{evolve_fock, prepare, FockOptions, FockSpace, FockState};
use rsf::second_order::{bsv_squeezing, integrate_second_order, SecondOrderState};
use rsf::tensor::max_abs_diff;
use rsf::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn ab() -> Bipartition {
    Bipartition::new(&[0, 1], &[2, 3]).unwrap()
}

fn bsv(gain: f64) -> StatePreset {
    StatePreset::Bsv { gain, modes: [0, 1, 2, 3], n_modes: 4 }
}

fn homodyne(alpha: f64) -> StatePreset {
    StatePreset::SinglePhotonWeakHomodyne { alpha, modes: [0, 1, 2, 3], n_modes: 4 }
}

fn bath(n_omega: f64, modes: &[usize]) -> Schedule {
    let b = ThermalBathSpec { n_omega, gamma_omega: 1.0, coupled_modes: modes.to_vec() };
    Schedule::constant(GeneratorSpec::zero(4).with_bath(&b).unwrap())
}

fn min_eig(rs: &ReducedState) -> f64 {
    ppt_of(rs, &ab()).unwrap().min_eigenvalue
}

fn rel(x: f64, y: f64) -> f64 {
    ((x - y) / y).abs()
}

/// First zero crossing of the smallest PPT eigenvalue on `[0, t_max]`.
fn integrated_tc(preset: &StatePreset, schedule: &Schedule, t_max: f64) -> Option<f64> {
    let grid = linspace(t_max, (t_max / 0.05).round() as usize + 1);
    let traj = integrate(&build(preset).unwrap(), schedule, &grid, IntegrateOptions::default()).unwrap();
    critical_time(&grid, &traj, &ab(), schedule, IntegrateOptions::default()).unwrap()
}

fn tc_single_photon(n: f64) -> f64 {
    (1.0 + (SQRT_2 - 1.0) / (2.0 * n)).ln()
}

fn tc_bsv(gain: f64, n: f64) -> f64 {
    (1.0 + (-gain).exp() * gain.sinh() / n).ln()
}

fn c1_bsv_eigenvalue() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for g in [0.1f64, 0.5, 1.0] {
        let expected = 1.0 / (1.0 - 3.0 * (2.0 * g).cosh());
        let analytic = min_eig(&build(&bsv(g)).unwrap());
        let oracle = min_eig(&reduce_from_fock(&prepare(&bsv(g), 8).unwrap()).unwrap());
        let (da, d_o) = ((analytic - expected).abs(), (oracle - expected).abs());
        ok &= da <= 1e-10 && d_o <= 1e-5;
        notes.push(format!("Γ={g}: analytic {da:.1e}, cutoff-8 {d_o:.1e}"));
    }
    outcome(ok, notes.join("; "))
}

fn c2_weak_homodyne() -> Outcome {
    let mut worst: f64 = 0.0;
    for a in [0.2f64, 0.5, 1.0] {
        let a2 = a * a;
        let expected = (a2 - (a2 * a2 + 1.0).sqrt()) / (2.0 * (a2 + 1.0));
        worst = worst.max((min_eig(&build(&homodyne(a)).unwrap()) - expected).abs());
    }
    outcome(worst <= 1e-10, format!("max deviation {worst:.1e}"))
}

fn c3_single_photon_tc() -> Outcome {
    let runs: Vec<(f64, f64, Option<f64>)> = [0.1, 0.5, 1.0]
        .into_iter()
        .flat_map(|n| [0.2, 0.8].map(move |a| (n, a)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(n, a)| (n, a, integrated_tc(&homodyne(a), &bath(n, &[0, 2]), 6.0)))
        .collect();
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for (n, _, tc) in &runs {
        match tc {
            Some(t) => worst = worst.max(rel(*t, tc_single_photon(*n))),
            None => ok = false,
        }
    }
    outcome(ok && worst <= 1e-5, format!("max relative deviation {worst:.1e} over N ∈ {{0.1,0.5,1}}, α ∈ {{0.2,0.8}}"))
}

fn c4_bsv_stationary() -> Outcome {
    let grid = linspace(5.0, 501);
    let traj = integrate(&build(&bsv(1.0)).unwrap(), &bath(0.0, &[0, 1, 2, 3]), &grid, IntegrateOptions::default()).unwrap();
    let l0 = min_eig(&traj[0]);
    let worst = traj.iter().map(|s| (min_eig(s) - l0).abs()).fold(0.0, f64::max);
    outcome(worst < 1e-8, format!("max |λ₁(t) − λ₁(0)| = {worst:.1e} on [0, 5]"))
}

fn c5_bsv_tc() -> Outcome {
    let all = [0, 1, 2, 3];
    let mut ok = true;
    let mut notes = Vec::new();

    let mut worst: f64 = 0.0;
    for (g, n) in [(0.5, 0.1), (0.5, 0.5), (1.0, 0.1), (1.0, 0.5)] {
        match integrated_tc(&bsv(g), &bath(n, &all), 8.0) {
            Some(t) => worst = worst.max(rel(t, tc_bsv(g, n))),
            None => ok = false,
        }
    }
    ok &= worst <= 1e-5;
    notes.push(format!("grid max rel {worst:.1e}"));

    // large-gain limit
    let n = 0.5;
    let limit = (1.0f64 + 1.0 / (2.0 * n)).ln();
    let gaps: Vec<f64> = [1.0, 2.0, 3.0, 4.0]
        .into_iter()
        .map(|g| integrated_tc(&bsv(g), &bath(n, &all), 8.0).map_or(f64::INFINITY, |t| rel(t, limit)))
        .collect();
    let converging = gaps.windows(2).all(|w| w[1] < w[0]) && gaps[3] < 1e-3;
    ok &= converging;
    notes.push(format!("gap to limit at Γ=1..4: {:.1e}", gaps[3]));

    // crossover with the single-photon critical time
    let n = 0.5;
    let tc_sp = integrated_tc(&homodyne(0.5), &bath(n, &[0, 2]), 6.0).unwrap_or(f64::NAN);
    let diff = |g: f64| integrated_tc(&bsv(g), &bath(n, &all), 6.0).unwrap_or(f64::INFINITY) - tc_sp;
    let (mut lo, mut hi) = (0.1, 0.5);
    let bracketed = diff(lo) < 0.0 && diff(hi) > 0.0;
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if diff(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let crossover = -(2.0 - SQRT_2).ln() / 2.0;
    let hit = bracketed && lo <= crossover && crossover <= hi;
    ok &= hit;
    notes.push(format!("crossover bracket [{lo:.5}, {hi:.5}] vs {crossover:.5}"));
    outcome(ok, notes.join("; "))
}

fn c6_thermal_limit() -> Outcome {
    let n = 0.5;
    let sched = bath(n, &[0, 1, 2, 3]);
    let s = integrate(&build(&bsv(1.0)).unwrap(), &sched, &[20.0], IntegrateOptions::default()).unwrap().remove(0);
    let pi = normalize_projected(&project_bipartition(&s, &ab()).unwrap(), (2, 2)).unwrap();
    let d_pi = max_abs_diff(&pi.matrix, &CMat::identity(4, 4).unscale(4.0));
    let d_rho = max_abs_diff(&s.rho, &CMat::identity(4, 4).scale(n));

    // the projected pair alone, integrated without the rest of ρ₄
    let bp = ab();
    let p0 = ProjectedState::from_reduced(&build(&bsv(1.0)).unwrap(), &bp).unwrap();
    let p = integrate_projected(&p0, &sched, &bp, &[20.0], IntegrateOptions::default()).unwrap().remove(0);
    let d_proj = max_abs_diff(&p.p, &project_bipartition(&s, &bp).unwrap());
    outcome(
        d_pi <= 1e-6 && d_rho <= 1e-6 && d_proj <= 1e-9,
        format!("|ρᴺ − I/4| = {d_pi:.1e}, |ρ − N·I| = {d_rho:.1e}, projected path {d_proj:.1e}"),
    )
}

fn c7_mandel() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();

    let split = build(&StatePreset::SinglePhotonSplit { modes: [0, 1], n_modes: 2 }).unwrap();
    let q_split = gen_q(&split, 0, 1).unwrap();
    let pass = (q_split - 0.5).abs() <= 1e-12;
    ok &= pass;
    notes.push(format!("split photon Q₁₂ = {q_split:+.3} (target +0.5)"));

    let coh = build(&StatePreset::Coherent { amplitudes: vec![C64::new(0.7, 0.2), C64::new(-0.4, 1.1)] }).unwrap();
    let q_coh = gen_q(&coh, 0, 1).unwrap().abs().max(gen_q(&coh, 1, 0).unwrap().abs());
    ok &= q_coh <= 1e-12;
    notes.push(format!("coherent |Q| = {q_coh:.1e}"));

    let nbar = [0.3, 0.7];
    let th = build(&StatePreset::Thermal { nbar: nbar.to_vec() }).unwrap();
    let q01 = gen_q(&th, 0, 1).unwrap();
    let q10 = gen_q(&th, 1, 0).unwrap();
    ok &= (q01 - nbar[0]).abs() <= 1e-12 && (q10 - nbar[1]).abs() <= 1e-12;
    notes.push(format!("thermal N=(0.3,0.7): Q₁₂ = {q01:.3}, Q₂₁ = {q10:.3}"));

    let mut worst: f64 = 0.0;
    for n in [0.1, 0.5, 1.0] {
        let sched = bath(n, &[0, 2]);
        let preset = StatePreset::SinglePhotonSplit { modes: [0, 2], n_modes: 4 };
        let grid = linspace(6.0, 121);
        let traj = integrate(&build(&preset).unwrap(), &sched, &grid, IntegrateOptions::default()).unwrap();
        let tc = rsf::entanglement::critical_time_by(
            &grid,
            &traj,
            |s| gen_q(s, 0, 2),
            |s, from, to| Ok(integrate(s, &sched, &[to - from], IntegrateOptions::default())?.remove(0)),
            1e-8,
        )
        .unwrap();
        worst = worst.max(tc.map_or(f64::INFINITY, |t| rel(t, tc_single_photon(n))));
    }
    ok &= worst <= 1e-5;
    notes.push(format!("Q₁₃ zero crossing vs t_c: {worst:.1e}"));
    outcome(ok, notes.join("; "))
}

fn c8_statistics_transfer() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut sum_at_3: f64 = 0.0;
    for n in 1..=3usize {
        let input = build(&StatePreset::Fock { occupations: vec![n, 0] }).unwrap();
        let q_in = mandel_q(&input, 0).unwrap();
        for t in [0.3, 0.5, 0.7] {
            let out = apply_mode_unitary(&input, &beamsplitter_unitary(t, 0, 1, 2).unwrap()).unwrap();
            let q = |i, j| gen_q(&out, i, j).unwrap();
            let sum = q(0, 1) + q(1, 0);
            worst = worst
                .max((sum - q_in).abs())
                .max((q(0, 0) - t * q_in).abs())
                .max((q(1, 1) - (1.0 - t) * q_in).abs());
            if n == 3 {
                sum_at_3 = sum_at_3.max((sum + 1.0).abs());
            }
        }
    }
    outcome(
        worst <= 1e-12 && sum_at_3 <= 1e-12,
        format!("max identity defect {worst:.1e}; |Q₁₂+Q₂₁ + 1| at n=3: {sum_at_3:.1e}"),
    )
}

fn c9_covariance_separation() -> Outcome {
    let split = build(&StatePreset::SinglePhotonSplit { modes: [0, 1], n_modes: 2 }).unwrap();
    let v = covariance_from_reduced(&split).unwrap();
    let ev = covariance_ppt(&v, &Bipartition::new(&[0], &[1]).unwrap()).unwrap();
    let expected = [(2.0 - SQRT_2) / 2.0, (2.0 - SQRT_2) / 2.0, (2.0 + SQRT_2) / 2.0, (2.0 + SQRT_2) / 2.0];
    let dev = ev.iter().zip(expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let rsf_detects = ppt_of(&build(&homodyne(0.5)).unwrap(), &ab()).unwrap().verdict == Verdict::Entangled;
    outcome(
        dev <= 1e-12 && rsf_detects,
        format!("covariance eigenvalue deviation {dev:.1e}; weak-homodyne RSF detection: {rsf_detects}"),
    )
}

fn c10_efficiency() -> Outcome {
    let mut worst: f64 = 0.0;
    for g in [0.5, 1.0] {
        let s = build(&bsv(g)).unwrap();
        let base = ppt_of(&s, &ab()).unwrap().eigenvalues;
        for eta in [0.3, 0.9] {
            let lossy = detector_efficiency(&s, &[eta; 4]).unwrap();
            let ev = ppt_of(&lossy, &ab()).unwrap().eigenvalues;
            worst = ev.iter().zip(&base).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);
        }
    }
    outcome(worst <= 1e-12, format!("max eigenvalue change {worst:.1e}"))
}

struct Scenario {
    initial: FockState,
    generator: GeneratorSpec,
}

fn random_scenario(seed: u64) -> Scenario {
    use common::*;
    use rand::Rng;
    let mut r = rng(seed);
    let (n, cutoff, photons) = match seed % 5 {
        0 | 1 => (2, 6, 2),
        2 | 3 => (3, 5, 2),
        _ => (4, 4, 1),
    };
    let space = FockSpace::uniform(n, cutoff).unwrap();
    let initial = random_low_photon_state(&mut r, &space, photons);
    let diag_dominant = |r: &mut rand_chacha::ChaCha8Rng, scale: f64| {
        let off = random_psd(r, n, 0.1 * scale);
        let d: Vec<f64> = (0..n).map(|_| r.gen_range(0.5..1.0) * scale).collect();
        off + CMat::from_diagonal(&CVec::from_iterator(n, d.into_iter().map(|x| C64::new(x, 0.0))))
    };
    let generator = GeneratorSpec {
        h: random_hermitian(&mut r, n),
        xi: random_vector(&mut r, n, 0.05),
        gamma_up: diag_dominant(&mut r, 0.01),
        gamma_down: diag_dominant(&mut r, 0.6),
        scattering: vec![(random_unitary(&mut r, n), 0.3)],
        hs: None,
    };
    Scenario { initial, generator }
}

/// Largest block deviation between the reduced path and the reduced oracle.
fn oracle_gap(sc: &Scenario) -> f64 {
    let grid: Vec<f64> = (1..=10).map(|k| 0.05 * k as f64).collect();
    let sched = Schedule::constant(sc.generator.clone());
    let rs0 = reduce_from_fock(&sc.initial).unwrap();
    let ode = integrate(&rs0, &sched, &grid, IntegrateOptions::default()).unwrap();
    let fock = evolve_fock(&sc.initial, &sched, &grid, FockOptions::default()).unwrap();
    ode.iter()
        .zip(&fock)
        .map(|(a, f)| a.max_deviation(&reduce_from_fock(f).unwrap()))
        .fold(0.0, f64::max)
}

fn c11_oracle_equivalence() -> Outcome {
    let combined: Vec<f64> = (0..20u64).into_par_iter().map(|seed| oracle_gap(&random_scenario(seed))).collect();
    let worst_combined = combined.iter().cloned().fold(0.0, f64::max);

    let base = random_scenario(100);
    let g = &base.generator;
    let zero = GeneratorSpec::zero(g.n_modes());
    let single: Vec<(&str, GeneratorSpec)> = vec![
        ("h", GeneratorSpec { h: g.h.clone(), ..zero.clone() }),
        ("xi", GeneratorSpec { xi: g.xi.clone(), ..zero.clone() }),
        ("gamma_up", GeneratorSpec { gamma_up: g.gamma_up.clone(), ..zero.clone() }),
        ("gamma_down", GeneratorSpec { gamma_down: g.gamma_down.clone(), ..zero.clone() }),
        ("scattering", GeneratorSpec { scattering: g.scattering.clone(), ..zero.clone() }),
    ];
    let termwise: Vec<(&str, f64)> = single
        .into_par_iter()
        .map(|(name, generator)| (name, oracle_gap(&Scenario { initial: base.initial.clone(), generator })))
        .collect();
    let worst_term = termwise.iter().map(|(_, d)| *d).fold(0.0, f64::max);
    let terms = termwise.iter().map(|(n, d)| format!("{n} {d:.0e}")).collect::<Vec<_>>().join(", ");
    outcome(
        worst_combined <= 1e-6 && worst_term <= 1e-6,
        format!("{} scenarios, worst {worst_combined:.1e}; term-wise: {terms}", combined.len()),
    )
}

fn bsv_projected(gain: f64) -> CMat {
    let (s2, c2) = (gain.sinh().powi(2), gain.cosh().powi(2));
    let ch = (2.0 * gain).cosh();
    let re = |x: f64| C64::new(x, 0.0);
    let mut m = CMat::zeros(4, 4);
    m[(0, 0)] = re(s2 * s2);
    m[(3, 3)] = re(s2 * s2);
    m[(1, 1)] = re(s2 * ch);
    m[(2, 2)] = re(s2 * ch);
    m[(1, 2)] = re(-s2 * c2);
    m[(2, 1)] = re(-s2 * c2);
    m
}

fn c12_second_order_generation() -> Outcome {
    let gamma = 1.0;
    let grid = linspace(0.5, 26);
    let mut g = GeneratorSpec::zero(4);
    g.hs = Some(bsv_squeezing(gamma, [0, 1, 2, 3], 4));
    let sched = Schedule::constant(g);

    let traj = integrate_second_order(&SecondOrderState::vacuum(4), &sched, &grid, IntegrateOptions::default()).unwrap();
    let mut d_rsf: f64 = 0.0;
    for (t, s) in grid.iter().zip(&traj) {
        let gain = gamma * t;
        d_rsf = d_rsf
            .max(max_abs_diff(&project_bipartition(&s.base, &ab()).unwrap(), &bsv_projected(gain)))
            .max(max_abs_diff(&s.base.rho, &CMat::identity(4, 4).scale(gain.sinh().powi(2))));
    }

    let vacuum = FockState::basis(FockSpace::uniform(4, 8).unwrap(), &[0; 4]).unwrap();
    let opts = FockOptions { leakage_abort: 1.0, ..FockOptions::default() };
    let fock = evolve_fock(&vacuum, &sched, &grid, opts).unwrap();
    let mut d_oracle: f64 = 0.0;
    let mut within_to: f64 = 0.0;
    for (t, f) in grid.iter().zip(&fock) {
        let s = reduce_from_fock(f).unwrap();
        let d = max_abs_diff(&project_bipartition(&s, &ab()).unwrap(), &bsv_projected(gamma * t));
        if d <= 1e-6 && d_oracle <= 1e-6 {
            within_to = *t;
        }
        d_oracle = d_oracle.max(d);
    }
    outcome(
        d_rsf <= 1e-6 && d_oracle <= 1e-6,
        format!("second-order path {d_rsf:.1e}; cutoff-8 oracle {d_oracle:.1e} (within 1e-6 up to γt = {within_to:.2})"),
    )
}

fn main() -> ExitCode {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("BSV PPT eigenvalue", c1_bsv_eigenvalue),
        ("weak-homodyne eigenvalue", c2_weak_homodyne),
        ("single-photon critical time", c3_single_photon_tc),
        ("BSV stationarity at T=0", c4_bsv_stationary),
        ("BSV critical time", c5_bsv_tc),
        ("thermal limit", c6_thermal_limit),
        ("Mandel / generalized Q", c7_mandel),
        ("statistics transfer", c8_statistics_transfer),
        ("covariance PPT separation", c9_covariance_separation),
        ("efficiency invariance", c10_efficiency),
        ("oracle equivalence", c11_oracle_equivalence),
        ("second-order BSV generation", c12_second_order_generation),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("[{verdict}] {:>2}. {name}: {} ({:.1}s)", k + 1, o.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
