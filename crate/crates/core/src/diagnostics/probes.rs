//! Empirical ratios for the harmonic-analysis inequalities. None of these
//! assert a constant; they report the measured quotient.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::commutator_js;
use crate::error::{Error, Result};
use crate::reduce::pairwise_sum_by;
use crate::spectral::{
    bessel_potential, bessel_potential_vector, gradient, norm, norms, Components, Field,
    NormSpec, SpectralScalar, SpectralVector,
};

use super::jacobian_linf;

/// Means below this fraction of the largest coefficient count as zero.
const MEAN_NOISE: f64 = 1e-13;

fn log_plus(a: f64) -> f64 {
    if a >= 1.0 {
        a.ln()
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogSobolevProbe {
    pub linf: f64,
    pub bmo: f64,
    /// `‖J^s f‖_{L^p}`.
    pub wsp: f64,
    pub ratio: f64,
}

/// `‖f‖∞ / (1 + ‖f‖_BMO (1 + log⁺ ‖J^s f‖_{L^p}))` for mean-zero `f`.
pub fn probe_log_sobolev(f: &SpectralScalar, s: f64, p: f64) -> Result<LogSobolevProbe> {
    let dim = f.grid().dim() as f64;
    if !(s * p > dim) || !(p >= 1.0) {
        return Err(Error::Config(format!(
            "log-Sobolev probe needs p ≥ 1 and s·p > {dim}, got s = {s}, p = {p}"
        )));
    }
    let mean = f.coeff(&[0, 0, 0][..f.grid().dim()]);
    if mean.norm() > MEAN_NOISE * f.max_abs_coeff() {
        return Err(Error::Contract("log-Sobolev probe expects a mean-zero field".into()));
    }
    let mut f = f.clone();
    f.set_mode(&[0, 0, 0][..f.grid().dim()], Complex64::new(0.0, 0.0))?;
    let f = &f;
    if f.max_abs_coeff() == 0.0 {
        return Err(Error::Data("ratio undefined for the zero field".into()));
    }
    let phys = norms::render(f.components());
    let linf = norms::linf_phys(&phys);
    let bmo = norms::bmo_phys(f.grid(), &phys);
    let wsp = norm(&bessel_potential(f, s), NormSpec::Lp(p))?;
    let ratio = linf / (1.0 + bmo * (1.0 + log_plus(wsp)));
    Ok(LogSobolevProbe { linf, bmo, wsp, ratio })
}

/// `(‖f‖_{H^{s'}}, ‖f‖_{L²}^{1−s'/s} ‖f‖_{H^s}^{s'/s})` for `0 ≤ s' ≤ s`.
pub fn probe_interpolation<C: Components + ?Sized>(f: &C, s_prime: f64, s: f64) -> Result<(f64, f64)> {
    if !(s > 0.0) || !(0.0..=s).contains(&s_prime) {
        return Err(Error::Config(format!(
            "interpolation needs 0 ≤ s' ≤ s and s > 0, got s' = {s_prime}, s = {s}"
        )));
    }
    let lhs = norm(f, NormSpec::Hs(s_prime))?;
    let theta = s_prime / s;
    let l2 = norm(f, NormSpec::L2)?;
    let hs = norm(f, NormSpec::Hs(s))?;
    Ok((lhs, l2.powf(1.0 - theta) * hs.powf(theta)))
}

/// Gagliardo–Nirenberg exponent for `‖∇g‖_{L^p} ≲ ‖g‖_{L²}^{1−a} ‖D³g‖_{L²}^a`,
/// `a = (dim/2 − dim/p + 1)/3`; requires `2 ≤ p < ∞`.
pub fn gn_exponent(dim: usize, p: f64) -> Result<f64> {
    if !(p >= 2.0) || !p.is_finite() {
        return Err(Error::Config(format!("Gagliardo–Nirenberg probe needs 2 ≤ p < ∞, got {p}")));
    }
    let d = dim as f64;
    Ok((d / 2.0 - d / p + 1.0) / 3.0)
}

/// `‖D³g‖_{L²}` with the homogeneous multiplier `|k|³`.
fn homogeneous_h3(g: &SpectralScalar) -> f64 {
    let grid = g.grid();
    pairwise_sum_by(grid.len(), |i| {
        let k2 = grid.k2(i) as f64;
        k2 * k2 * k2 * g.coeffs()[i].norm_sqr()
    })
    .sqrt()
}

/// `‖∇g‖_{L^p} / (‖g‖_{L²}^{1−a} ‖D³g‖_{L²}^a)`.
pub fn probe_gagliardo_nirenberg(g: &SpectralScalar, p: f64) -> Result<f64> {
    let a = gn_exponent(g.grid().dim(), p)?;
    let num = norm(&gradient(g), NormSpec::Lp(p))?;
    let den = g.l2_sq().sqrt().powf(1.0 - a) * homogeneous_h3(g).powf(a);
    if !(den > 0.0) {
        return Err(Error::Data("ratio undefined for a constant field".into()));
    }
    Ok(num / den)
}

/// `‖[J^s,f]∇g‖_{L²} / (‖∇f‖∞ ‖J^{s−1}∇g‖_{L²} + ‖J^s f‖_{L²} ‖∇g‖∞)`.
pub fn kato_ponce_ratio(f: &SpectralVector, g: &SpectralScalar, s: f64) -> Result<f64> {
    let comm = commutator_js(f, &Field::Scalar(g.clone()), s)?;
    let num = norm(comm.components(), NormSpec::L2)?;
    let grad_g = gradient(g);
    let den = jacobian_linf(f) * bessel_potential_vector(&grad_g, s - 1.0).l2_sq().sqrt()
        + norm(f, NormSpec::Hs(s))? * norm(&grad_g, NormSpec::Linf)?;
    if !(den > 0.0) {
        return Err(Error::Data("ratio undefined: bound vanishes".into()));
    }
    Ok(num / den)
}
