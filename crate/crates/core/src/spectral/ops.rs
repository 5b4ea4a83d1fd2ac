//! Fourier multipliers: Bessel potential, truncation, Leray projection,
//! exact spectral derivatives and sharp Littlewood–Paley blocks.

use rustfft::num_complex::Complex64;

use super::field::{Components, SpectralScalar, SpectralVector};
use super::grid::Grid;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `J^s f`: multiplies `coeff(k)` by `(1 + |k|²)^{s/2}`.
pub fn bessel_potential(f: &SpectralScalar, s: f64) -> SpectralScalar {
    if s == 0.0 {
        return f.clone();
    }
    let g = f.grid();
    let coeffs = f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(idx, c)| c * bessel_weight(g, idx, s))
        .collect();
    SpectralScalar::from_raw(g, coeffs)
}

#[inline]
pub(crate) fn bessel_weight(g: Grid, idx: usize, s: f64) -> f64 {
    (1.0 + g.k2(idx) as f64).powf(0.5 * s)
}

pub fn bessel_potential_vector(v: &SpectralVector, s: f64) -> SpectralVector {
    v.map_components(|c| bessel_potential(c, s))
}

/// Closed-ball membership `|k| ≤ radius`.
#[inline]
pub fn in_ball(g: Grid, idx: usize, radius: f64) -> bool {
    (g.k2(idx) as f64) <= radius * radius
}

fn check_radius(radius: f64) -> Result<()> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::Config(format!(
            "truncation radius must be positive and finite, got {radius}"
        )));
    }
    Ok(())
}

/// `S_R f`: zeros every mode with `|k| > radius`.
pub fn truncate(f: &SpectralScalar, radius: f64) -> Result<SpectralScalar> {
    check_radius(radius)?;
    let g = f.grid();
    Ok(f.mask(|idx| in_ball(g, idx, radius)))
}

pub fn truncate_vector(v: &SpectralVector, radius: f64) -> Result<SpectralVector> {
    check_radius(radius)?;
    let g = v.grid();
    Ok(v.map_components(|c| c.mask(|idx| in_ball(g, idx, radius))))
}

/// Zeros modes with any `3|k_i| ≥ N`.
pub fn dealias(f: &SpectralScalar) -> SpectralScalar {
    let g = f.grid();
    f.mask(|idx| g.dealias_keep(idx))
}

/// Projects onto divergence-free fields: `v̂ - k (k·v̂)/|k|²` for `k ≠ 0`.
pub fn leray_project(v: &SpectralVector) -> SpectralVector {
    let g = v.grid();
    let dim = g.dim();
    let mut out: Vec<Vec<Complex64>> = v.components().iter().map(|c| c.coeffs().to_vec()).collect();
    for idx in 0..g.len() {
        let k2 = g.k2(idx);
        if k2 == 0 {
            continue;
        }
        let k = g.mode(idx);
        let mut dot = ZERO;
        for a in 0..dim {
            dot += out[a][idx] * k[a] as f64;
        }
        let scale = dot / k2 as f64;
        for a in 0..dim {
            out[a][idx] -= scale * k[a] as f64;
        }
    }
    let comps = out
        .into_iter()
        .map(|c| SpectralScalar::from_raw(g, c))
        .collect();
    SpectralVector::from_parts(comps, true).certify()
}

/// `∂_axis f`, i.e. multiplication by `i k_axis`.
pub fn partial(f: &SpectralScalar, axis: usize) -> SpectralScalar {
    let g = f.grid();
    let coeffs = f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            let ka = g.mode(idx)[axis] as f64;
            Complex64::new(-c.im * ka, c.re * ka)
        })
        .collect();
    SpectralScalar::from_raw(g, coeffs)
}

pub fn gradient(f: &SpectralScalar) -> SpectralVector {
    let g = f.grid();
    let comps = (0..g.dim()).map(|a| partial(f, a)).collect();
    SpectralVector::from_parts(comps, false)
}

pub fn divergence(v: &SpectralVector) -> SpectralScalar {
    let g = v.grid();
    let mut acc = vec![ZERO; g.len()];
    for (a, c) in v.components().iter().enumerate() {
        let d = partial(c, a);
        for (x, y) in acc.iter_mut().zip(d.coeffs()) {
            *x += y;
        }
    }
    SpectralScalar::from_raw(g, acc)
}

/// Curl of a vector field. In 2D the result is the scalar vorticity
/// `∂₁v₂ - ∂₂v₁`.
pub fn curl(v: &SpectralVector) -> Field {
    let c = v.components();
    match c.len() {
        2 => Field::Scalar(partial(&c[1], 0).sub(&partial(&c[0], 1))),
        _ => {
            let x = partial(&c[2], 1).sub(&partial(&c[1], 2));
            let y = partial(&c[0], 2).sub(&partial(&c[2], 0));
            let z = partial(&c[1], 0).sub(&partial(&c[0], 1));
            Field::Vector(SpectralVector::from_parts(vec![x, y, z], true).certify())
        }
    }
}

/// `(d·∇) f` for a constant direction `d`.
pub fn directional(f: &SpectralScalar, direction: &[f64]) -> SpectralScalar {
    let g = f.grid();
    let mut out = SpectralScalar::zeros(g);
    for (a, &da) in direction.iter().enumerate().take(g.dim()) {
        if da != 0.0 {
            out = out.axpy(da, &partial(f, a));
        }
    }
    out
}

/// Scalar or vector field, for operations that accept either rank.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Scalar(SpectralScalar),
    Vector(SpectralVector),
}

impl Components for Field {
    fn components(&self) -> &[SpectralScalar] {
        Field::components(self)
    }
}

impl Field {
    pub fn components(&self) -> &[SpectralScalar] {
        match self {
            Field::Scalar(s) => std::slice::from_ref(s),
            Field::Vector(v) => v.components(),
        }
    }

    pub fn rank(&self) -> usize {
        match self {
            Field::Scalar(_) => 0,
            Field::Vector(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiffOp {
    Gradient,
    Divergence,
    Curl,
    Directional([f64; 3]),
}

/// Rank-checked dispatch over the differential operators.
pub fn differential(f: &Field, op: DiffOp) -> Result<Field> {
    match (op, f) {
        (DiffOp::Gradient, Field::Scalar(s)) => Ok(Field::Vector(gradient(s))),
        (DiffOp::Divergence, Field::Vector(v)) => Ok(Field::Scalar(divergence(v))),
        (DiffOp::Curl, Field::Vector(v)) => Ok(curl(v)),
        (DiffOp::Directional(d), Field::Scalar(s)) => Ok(Field::Scalar(directional(s, &d))),
        (DiffOp::Directional(d), Field::Vector(v)) => Ok(Field::Vector(SpectralVector::from_parts(
            v.components().iter().map(|c| directional(c, &d)).collect(),
            v.is_certified(),
        ))),
        (op, f) => Err(Error::Usage(format!(
            "{op:?} is not defined for a rank-{} field",
            f.rank()
        ))),
    }
}

/// Index of a sharp dyadic annulus: `-1` is `|k| ≤ 1`, `j ≥ 0` is
/// `2^j < |k| ≤ 2^{j+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LpBlockIndex(i32);

impl LpBlockIndex {
    pub fn new(j: i32) -> Result<Self> {
        if j < -1 {
            return Err(Error::Usage(format!("block index must be ≥ -1, got {j}")));
        }
        Ok(Self(j))
    }

    pub fn get(self) -> i32 {
        self.0
    }

    /// Block containing a mode with squared norm `k2`.
    pub fn of_k2(k2: i64) -> Self {
        if k2 <= 1 {
            return Self(-1);
        }
        // smallest j with k2 ≤ 4^{j+1}
        let mut j = 0;
        while k2 > 1i64 << (2 * (j + 1)) {
            j += 1;
        }
        Self(j)
    }

    pub fn contains(self, k2: i64) -> bool {
        Self::of_k2(k2) == self
    }

    /// Every block that can be occupied on `grid`, in increasing order.
    pub fn all_for(grid: Grid) -> Vec<Self> {
        let kmax2 = {
            let h = (grid.n() / 2) as i64;
            h * h * grid.dim() as i64
        };
        let top = Self::of_k2(kmax2).0;
        (-1..=top).map(Self).collect()
    }
}

/// `Δ_j f`: restriction to one sharp dyadic annulus.
pub fn lp_block(f: &SpectralScalar, j: LpBlockIndex) -> SpectralScalar {
    let g = f.grid();
    f.mask(|idx| j.contains(g.k2(idx)))
}
