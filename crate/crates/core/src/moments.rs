//! Dense normal-ordered moment tensors up to fourth order and their equations
//! of motion under a quadratic generator.
//!
//! `T(r, s)[c_1…c_r, d_1…d_s] = ⟨a†_{c_1}… a†_{c_r} a_{d_1}… a_{d_s}⟩`, stored
//! row-major with creation indices first.

use crate::error::{dim_err, Result};
use crate::evolution::GeneratorSpec;
use crate::{CMat, C64};

pub const MAX_ORDER: usize = 4;

fn slot(r: usize, s: usize) -> usize {
    let o = r + s;
    o * (o + 1) / 2 + r
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalMoments {
    n: usize,
    t: Vec<Vec<C64>>,
}

/// Splits a flat index into `len` base-`n` digits, most significant first.
fn digits(mut flat: usize, n: usize, len: usize, out: &mut [usize]) {
    for p in (0..len).rev() {
        out[p] = flat % n;
        flat /= n;
    }
}

fn flat(n: usize, ix: &[usize]) -> usize {
    ix.iter().fold(0, |acc, &k| acc * n + k)
}

impl NormalMoments {
    pub fn zeros(n: usize) -> Self {
        let mut t = Vec::new();
        for o in 0..=MAX_ORDER {
            for _ in 0..=o {
                t.push(vec![C64::new(0.0, 0.0); n.pow(o as u32)]);
            }
        }
        NormalMoments { n, t }
    }

    pub fn n_modes(&self) -> usize {
        self.n
    }

    pub fn from_fn<F>(n: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(&[usize], &[usize]) -> Result<C64>,
    {
        let mut m = Self::zeros(n);
        let mut ix = [0usize; MAX_ORDER];
        for o in 0..=MAX_ORDER {
            for r in 0..=o {
                let block = &mut m.t[slot(r, o - r)];
                for (p, v) in block.iter_mut().enumerate() {
                    digits(p, n, o, &mut ix);
                    *v = f(&ix[..r], &ix[r..o])?;
                }
            }
        }
        Ok(m)
    }

    pub fn get(&self, c: &[usize], d: &[usize]) -> C64 {
        self.t[slot(c.len(), d.len())][flat(self.n, c) * self.n.pow(d.len() as u32) + flat(self.n, d)]
    }

    pub fn block(&self, r: usize, s: usize) -> &[C64] {
        &self.t[slot(r, s)]
    }

    /// Time derivative of every tensor of order one to four.
    ///
    /// The one-body drift, pump, gain, scattering and squeezing terms act on
    /// each slot separately; the hierarchy closes because every term is at
    /// most quadratic in the ladder operators.
    pub fn derivative(&self, g: &GeneratorSpec) -> Result<Self> {
        let n = self.n;
        if g.n_modes() != n {
            return Err(dim_err("NormalMoments::derivative", n, g.n_modes()));
        }
        let a = g.one_body();
        let a_conj = a.map(|z| z.conj());
        let two_i = C64::new(0.0, 2.0);
        let hs = g.hs.as_ref();
        let mut out = Self::zeros(n);
        let mut ix = [0usize; MAX_ORDER];
        let mut buf = [0usize; MAX_ORDER + 1];
        for o in 1..=MAX_ORDER {
            for r in 0..=o {
                let s = o - r;
                let mut block = vec![C64::new(0.0, 0.0); n.pow(o as u32)];
                for (p, v) in block.iter_mut().enumerate() {
                    digits(p, n, o, &mut ix);
                    let (c, d) = ix[..o].split_at(r);
                    let mut acc = C64::new(0.0, 0.0);

                    // drift: a_p → Σ A[p,k] a_k, a_p† → Σ A*[p,k] a_k†
                    for pos in 0..o {
                        let m = if pos < r { &a_conj } else { &a };
                        buf[..o].copy_from_slice(&ix[..o]);
                        for k in 0..n {
                            let coeff = m[(ix[pos], k)];
                            if coeff != C64::new(0.0, 0.0) {
                                buf[pos] = k;
                                acc += coeff * self.t[slot(r, s)][flat(n, &buf[..o])];
                            }
                        }
                    }

                    // pump
                    for j in 0..s {
                        acc += g.xi[d[j]] * self.get(c, &without(d, &[j]));
                    }
                    for i in 0..r {
                        acc += g.xi[c[i]].conj() * self.get(&without(c, &[i]), d);
                    }

                    // gain source
                    for i in 0..r {
                        for j in 0..s {
                            let gu = g.gamma_up[(d[j], c[i])];
                            if gu != C64::new(0.0, 0.0) {
                                acc += gu * self.get(&without(c, &[i]), &without(d, &[j]));
                            }
                        }
                    }

                    if let Some(hs) = hs {
                        acc += self.squeezing_term(hs, c, d, two_i);
                    }
                    *v = acc;
                }
                out.t[slot(r, s)] = block;
            }
        }
        for (u, kappa) in &g.scattering {
            if *kappa == 0.0 {
                continue;
            }
            let u_conj = u.map(|z| z.conj());
            for o in 1..=MAX_ORDER {
                for r in 0..=o {
                    let mut t = self.t[slot(r, o - r)].clone();
                    for pos in 0..o {
                        t = transform_slot(&t, n, o, pos, if pos < r { &u_conj } else { u });
                    }
                    let dst = &mut out.t[slot(r, o - r)];
                    for ((x, y), z) in dst.iter_mut().zip(&t).zip(&self.t[slot(r, o - r)]) {
                        *x += (y - z) * *kappa;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Squeezing contribution to `d/dt T(c; d)`:
    /// `a_p → −2i Σ hs*[p,k] a_k†` and `a_p† → 2i Σ hs[p,k] a_k`, normal-ordered.
    fn squeezing_term(&self, hs: &CMat, c: &[usize], d: &[usize], two_i: C64) -> C64 {
        let n = self.n;
        let (r, s) = (c.len(), d.len());
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..s {
            let d_rest = without(d, &[j]);
            let mut c_more = c.to_vec();
            c_more.push(0);
            for k in 0..n {
                let h = hs[(d[j], k)].conj();
                if h != C64::new(0.0, 0.0) {
                    c_more[r] = k;
                    acc -= two_i * h * self.get(&c_more, &d_rest);
                }
            }
            for l in 0..j {
                let h = hs[(d[j], d[l])].conj();
                if h != C64::new(0.0, 0.0) {
                    acc -= two_i * h * self.get(c, &without(d, &[l, j]));
                }
            }
        }
        for i in 0..r {
            let c_rest = without(c, &[i]);
            let mut d_more = d.to_vec();
            d_more.push(0);
            for k in 0..n {
                let h = hs[(c[i], k)];
                if h != C64::new(0.0, 0.0) {
                    d_more[s] = k;
                    acc += two_i * h * self.get(&c_rest, &d_more);
                }
            }
            for l in i + 1..r {
                let h = hs[(c[i], c[l])];
                if h != C64::new(0.0, 0.0) {
                    acc += two_i * h * self.get(&without(c, &[i, l]), d);
                }
            }
        }
        acc
    }
}

fn without(v: &[usize], drop: &[usize]) -> Vec<usize> {
    v.iter().enumerate().filter(|(p, _)| !drop.contains(p)).map(|(_, &k)| k).collect()
}

/// `t'[…, i, …] = Σ_k m[i, k] t[…, k, …]` on slot `pos` of an order-`o` tensor.
fn transform_slot(t: &[C64], n: usize, o: usize, pos: usize, m: &CMat) -> Vec<C64> {
    let stride = n.pow((o - pos - 1) as u32);
    let mut out = vec![C64::new(0.0, 0.0); t.len()];
    for (p, v) in out.iter_mut().enumerate() {
        let i = (p / stride) % n;
        let base = p - i * stride;
        *v = (0..n).map(|k| m[(i, k)] * t[base + k * stride]).sum();
    }
    out
}
