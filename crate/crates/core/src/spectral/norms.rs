//! Norm suite. Spectral norms are weighted coefficient sums; physical-space
//! norms use the grid samples as quadrature nodes with normalized measure.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fft::inverse_transform;
use super::field::{Components, SpectralScalar};
use super::grid::Grid;
use super::ops::{bessel_weight, lp_block, LpBlockIndex};
use crate::error::{Error, Result};
use crate::reduce::{pairwise_sum, pairwise_sum_by};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NormSpec {
    L2,
    Hs(f64),
    Lp(f64),
    Linf,
    Besov0InfInf,
    BmoApprox,
}

/// The three norm flavors used for blow-up monitoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormFlavor {
    Linf,
    Besov,
    Bmo,
}

impl NormFlavor {
    pub const ALL: [NormFlavor; 3] = [NormFlavor::Linf, NormFlavor::Besov, NormFlavor::Bmo];

    pub fn index(self) -> usize {
        match self {
            NormFlavor::Linf => 0,
            NormFlavor::Besov => 1,
            NormFlavor::Bmo => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NormFlavor::Linf => "linf",
            NormFlavor::Besov => "besov",
            NormFlavor::Bmo => "bmo",
        }
    }
}

impl std::str::FromStr for NormFlavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linf" => Ok(NormFlavor::Linf),
            "besov" => Ok(NormFlavor::Besov),
            "bmo" => Ok(NormFlavor::Bmo),
            other => Err(Error::Config(format!(
                "unknown norm flavor '{other}' (expected linf, besov or bmo)"
            ))),
        }
    }
}

pub fn norm<C: Components + ?Sized>(f: &C, spec: NormSpec) -> Result<f64> {
    let comps = f.components();
    match spec {
        NormSpec::L2 => Ok(weighted_sq(comps, 0.0).sqrt()),
        NormSpec::Hs(s) => Ok(weighted_sq(comps, s).sqrt()),
        NormSpec::Lp(p) => {
            if !(p >= 1.0) {
                return Err(Error::Config(format!("Lp exponent must be ≥ 1, got {p}")));
            }
            let phys = render(comps);
            if p.is_infinite() {
                Ok(linf_phys(&phys))
            } else {
                Ok(lp_phys(&phys, p))
            }
        }
        NormSpec::Linf => Ok(linf_phys(&render(comps))),
        NormSpec::Besov0InfInf => Ok(besov_sup(comps)),
        NormSpec::BmoApprox => Ok(bmo_phys(comps[0].grid(), &render(comps))),
    }
}

/// `Σ_k (1+|k|²)^s |f̂(k)|²` summed over components.
pub fn weighted_sq(comps: &[SpectralScalar], s: f64) -> f64 {
    let per: Vec<f64> = comps
        .iter()
        .map(|c| {
            let g = c.grid();
            let coeffs = c.coeffs();
            pairwise_sum_by(coeffs.len(), |i| {
                let w = if s == 0.0 { 1.0 } else { bessel_weight(g, i, 2.0 * s) };
                coeffs[i].norm_sqr() * w
            })
        })
        .collect();
    pairwise_sum(&per)
}

pub fn render(comps: &[SpectralScalar]) -> Vec<Vec<f64>> {
    comps.par_iter().map(inverse_transform).collect()
}

/// Pointwise Euclidean magnitude of rendered components.
pub fn magnitude(phys: &[Vec<f64>]) -> Vec<f64> {
    if phys.len() == 1 {
        return phys[0].iter().map(|v| v.abs()).collect();
    }
    let n = phys[0].len();
    (0..n)
        .map(|i| phys.iter().map(|c| c[i] * c[i]).fold(0.0, |a, b| a + b).sqrt())
        .collect()
}

pub fn linf_phys(phys: &[Vec<f64>]) -> f64 {
    magnitude(phys).into_iter().fold(0.0, f64::max)
}

pub fn lp_phys(phys: &[Vec<f64>], p: f64) -> f64 {
    let mag = magnitude(phys);
    let n = mag.len();
    let mean = pairwise_sum_by(n, |i| mag[i].powf(p)) / n as f64;
    mean.powf(1.0 / p)
}

/// `sup_j ‖Δ_j f‖_{L∞}` over the sharp dyadic blocks.
pub fn besov_sup(comps: &[SpectralScalar]) -> f64 {
    let g = comps[0].grid();
    LpBlockIndex::all_for(g)
        .into_par_iter()
        .map(|j| {
            let blocks: Vec<SpectralScalar> = comps.iter().map(|c| lp_block(c, j)).collect();
            if blocks.iter().all(|b| b.max_abs_coeff() == 0.0) {
                0.0
            } else {
                linf_phys(&render(&blocks))
            }
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(0.0, f64::max)
}

/// Dyadic mean oscillation of rendered components.
///
/// Cubes have side `2π/2^m` for every `m` whose cube still spans at least
/// two grid points per axis, at all aligned positions. The global mean is
/// removed first.
pub fn bmo_phys(grid: Grid, phys: &[Vec<f64>]) -> f64 {
    let n = grid.n();
    let dim = grid.dim();
    let total = grid.len();
    let centered: Vec<Vec<f64>> = phys
        .iter()
        .map(|c| {
            let mean = pairwise_sum(c) / total as f64;
            c.iter().map(|v| v - mean).collect()
        })
        .collect();

    let mut best = 0.0_f64;
    let mut cubes_per_axis = 1usize;
    while n.is_multiple_of(cubes_per_axis) && n / cubes_per_axis >= 2 {
        let side = n / cubes_per_axis;
        let ncubes = cubes_per_axis.pow(dim as u32);
        let level = (0..ncubes)
            .into_par_iter()
            .map(|cube| cube_oscillation(&centered, n, dim, side, cubes_per_axis, cube))
            .collect::<Vec<f64>>()
            .into_iter()
            .fold(0.0, f64::max);
        best = best.max(level);
        cubes_per_axis *= 2;
    }
    best
}

fn cube_points(n: usize, dim: usize, side: usize, per_axis: usize, cube: usize) -> Vec<usize> {
    let mut origin = [0usize; 3];
    let mut rem = cube;
    for a in (0..dim).rev() {
        origin[a] = (rem % per_axis) * side;
        rem /= per_axis;
    }
    let count = side.pow(dim as u32);
    (0..count)
        .map(|local| {
            let mut r = local;
            let mut idx = 0;
            let mut offs = [0usize; 3];
            for a in (0..dim).rev() {
                offs[a] = r % side;
                r /= side;
            }
            for a in 0..dim {
                idx = idx * n + origin[a] + offs[a];
            }
            idx
        })
        .collect()
}

fn cube_oscillation(
    phys: &[Vec<f64>],
    n: usize,
    dim: usize,
    side: usize,
    per_axis: usize,
    cube: usize,
) -> f64 {
    let pts = cube_points(n, dim, side, per_axis, cube);
    let m = pts.len() as f64;
    let means: Vec<f64> = phys
        .iter()
        .map(|c| pts.iter().map(|&i| c[i]).fold(0.0, |a, b| a + b) / m)
        .collect();
    let osc = pts
        .iter()
        .map(|&i| {
            phys.iter()
                .zip(&means)
                .map(|(c, mu)| (c[i] - mu) * (c[i] - mu))
                .fold(0.0, |a, b| a + b)
                .sqrt()
        })
        .fold(0.0, |a, b| a + b);
    osc / m
}

/// `{L∞, B⁰∞∞, BMO}` of one field, rendering only once for the physical
/// norms.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NormTriple {
    pub linf: f64,
    pub besov: f64,
    pub bmo: f64,
}

impl NormTriple {
    pub fn of<C: Components + ?Sized>(f: &C) -> Self {
        let comps = f.components();
        let phys = render(comps);
        Self {
            linf: linf_phys(&phys),
            besov: besov_sup(comps),
            bmo: bmo_phys(comps[0].grid(), &phys),
        }
    }

    pub fn get(&self, flavor: NormFlavor) -> f64 {
        match flavor {
            NormFlavor::Linf => self.linf,
            NormFlavor::Besov => self.besov,
            NormFlavor::Bmo => self.bmo,
        }
    }
}
