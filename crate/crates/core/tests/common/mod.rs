//! Independent reference implementations used by the integration tests.
//! Nothing here calls the library's transforms or products.

#![allow(dead_code)]

use mbsim_core::integrate::{make_initial, InitialSpec};
use mbsim_core::{Grid, SimConfig, State};
use mbsim_core::Complex64;

pub fn wavenumber(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Modes in storage order: row-major, axis 0 slowest.
pub fn modes(dim: usize, n: usize) -> Vec<Vec<i64>> {
    let total = n.pow(dim as u32);
    (0..total)
        .map(|flat| {
            let mut k = vec![0; dim];
            let mut r = flat;
            for a in (0..dim).rev() {
                k[a] = wavenumber(r % n, n);
                r /= n;
            }
            k
        })
        .collect()
}

pub fn index_of(k: &[i64], n: usize) -> Option<usize> {
    let half = (n / 2) as i64;
    let mut idx = 0;
    for &c in k {
        if c < -half || c >= half {
            return None;
        }
        let i = if c >= 0 { c } else { c + n as i64 } as usize;
        idx = idx * n + i;
    }
    Some(idx)
}

pub fn k2(k: &[i64]) -> i64 {
    k.iter().map(|c| c * c).sum()
}

fn kept(k: &[i64], n: usize) -> bool {
    k.iter().all(|&c| 3 * c.unsigned_abs() < n as u64)
}

/// `Σ_{p+q=k} Σ_a v̂_a(p) (i q_a) ĝ(q) w(k, q)` for every mode `k` that
/// survives the two-thirds filter and lies in `|k| ≤ radius`.
pub fn transport_oracle<W>(v: &[&[Complex64]], g: &[Complex64], dim: usize, n: usize, radius: f64, w: W) -> Vec<Complex64>
where
    W: Fn(&[i64], &[i64]) -> f64,
{
    let ms = modes(dim, n);
    let mut out = vec![Complex64::new(0.0, 0.0); ms.len()];
    for (ip, p) in ms.iter().enumerate() {
        let vp: Vec<Complex64> = v.iter().map(|c| c[ip]).collect();
        if vp.iter().all(|z| z.norm() == 0.0) {
            continue;
        }
        for (iq, q) in ms.iter().enumerate() {
            let gq = g[iq];
            if gq.norm() == 0.0 {
                continue;
            }
            let k: Vec<i64> = p.iter().zip(q).map(|(a, b)| a + b).collect();
            if !kept(&k, n) || (k2(&k) as f64) > radius * radius {
                continue;
            }
            let ik = index_of(&k, n).unwrap();
            let mut dot = Complex64::new(0.0, 0.0);
            for a in 0..dim {
                dot += vp[a] * Complex64::new(0.0, q[a] as f64) * gq;
            }
            out[ik] += dot * w(&k, q);
        }
    }
    out
}

/// Direct `O(N^{2 dim})` forward DFT with normalized measure.
pub fn direct_dft(samples: &[f64], dim: usize, n: usize) -> Vec<Complex64> {
    let ms = modes(dim, n);
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let pts: Vec<Vec<f64>> = (0..ms.len())
        .map(|flat| {
            let mut x = vec![0.0; dim];
            let mut r = flat;
            for a in (0..dim).rev() {
                x[a] = (r % n) as f64 * h;
                r /= n;
            }
            x
        })
        .collect();
    let scale = 1.0 / ms.len() as f64;
    ms.iter()
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (x, f) in pts.iter().zip(samples) {
                let phase: f64 = k.iter().zip(x).map(|(a, b)| *a as f64 * b).sum();
                acc += Complex64::from_polar(*f, -phase);
            }
            acc * scale
        })
        .collect()
}

/// `Σ_k (1 + |k|²)^s |c_k|²` by a plain loop.
pub fn naive_hs_sq(c: &[Complex64], dim: usize, n: usize, s: f64) -> f64 {
    modes(dim, n)
        .iter()
        .zip(c)
        .map(|(k, z)| (1.0 + k2(k) as f64).powf(s) * z.norm_sqr())
        .sum()
}

pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Random admissible state: solenoidal `u`, `b` and scalar `θ` inside the
/// ball of `cfg`.
pub fn random_state(cfg: &SimConfig, seed: u64, theta: f64, b: f64) -> State {
    let mut spec = InitialSpec::random_band(1.0, seed).with_perturbations(theta, b);
    spec.spectrum_exponent = 1.0;
    make_initial(&spec, cfg).unwrap()
}

pub fn sim(dim: usize, n: usize, radius: f64) -> SimConfig {
    let s = if dim == 2 { 2.5 } else { 3.0 };
    SimConfig::new(Grid::new(dim, n).unwrap(), radius, s, 1.0).unwrap()
}
