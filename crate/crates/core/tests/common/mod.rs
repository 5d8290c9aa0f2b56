#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rsf::fock::{FockSpace, FockState};
use rsf::{CMat, CVec, GeneratorSpec, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, m: usize) -> CMat {
    CMat::from_fn(n, m, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let a = random_matrix(rng, n, n);
    (&a + a.adjoint()).scale(0.5)
}

pub fn random_psd(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> CMat {
    let a = random_matrix(rng, n, n);
    (&a * a.adjoint()).scale(scale / n as f64)
}

pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let h = random_hermitian(rng, n);
    let e = h.symmetric_eigen();
    let phases = CVec::from_iterator(n, e.eigenvalues.iter().map(|&l| C64::from_polar(1.0, 2.0 * l)));
    &e.eigenvectors * CMat::from_diagonal(&phases) * e.eigenvectors.adjoint()
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> CVec {
    CVec::from_fn(n, |_, _| c(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale)))
}

/// A generic generator with every term switched on.
pub fn random_generator(rng: &mut ChaCha8Rng, n: usize) -> GeneratorSpec {
    GeneratorSpec {
        h: random_hermitian(rng, n),
        xi: random_vector(rng, n, 0.5),
        gamma_up: random_psd(rng, n, 0.3),
        gamma_down: random_psd(rng, n, 0.6),
        scattering: vec![(random_unitary(rng, n), 0.4)],
        hs: None,
    }
}

/// Random density matrix supported on states with at most `max_total` photons.
pub fn random_low_photon_state(rng: &mut ChaCha8Rng, space: &FockSpace, max_total: usize) -> FockState {
    let support: Vec<usize> = (0..space.dim()).filter(|&b| space.total_number(b) <= max_total).collect();
    let a = random_matrix(rng, support.len(), support.len());
    let small = &a * a.adjoint();
    let mut rho = CMat::zeros(space.dim(), space.dim());
    for (p, &bp) in support.iter().enumerate() {
        for (q, &bq) in support.iter().enumerate() {
            rho[(bp, bq)] = small[(p, q)];
        }
    }
    FockState::mixed(space.clone(), rho).unwrap().normalized()
}
