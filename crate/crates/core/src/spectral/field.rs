use rustfft::num_complex::Complex64;

use super::grid::{Grid, Mode};
use crate::error::{Error, Result};
use crate::reduce::pairwise_sum_by;

/// Relative threshold below which a vector field counts as divergence free.
pub const SOLENOIDAL_TOL: f64 = 1e-10;

/// Fourier coefficients of a real scalar field on the torus.
///
/// Coefficients are Fourier-series amplitudes: a constant field `c` has
/// `coeff(0) = c`, and `‖f‖²_{L²}` (normalized measure) equals the plain sum
/// of `|coeff|²`. `coeff(-k) = conj(coeff(k))` holds exactly and oddball
/// (Nyquist) modes are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralScalar {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralScalar {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Builds a field from raw coefficients, enforcing Hermitian symmetry
    /// and clearing oddball modes.
    pub fn from_coeffs(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::Data(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Data("non-finite spectral coefficient".into()));
        }
        let mut f = Self { grid, coeffs };
        f.symmetrize();
        Ok(f)
    }

    /// Wraps coefficients that are already exactly Hermitian with zero
    /// oddball modes. Callers inside the crate guarantee this.
    pub(crate) fn from_raw(grid: Grid, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        Self { grid, coeffs }
    }

    /// Accepts coefficients only if they already satisfy the invariants
    /// bit-for-bit. Used when loading checkpoints.
    pub fn from_coeffs_exact(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        let f = Self::from_raw(grid, coeffs);
        if f.coeffs.len() != grid.len() {
            return Err(Error::Data("coefficient count does not match grid".into()));
        }
        for idx in 0..grid.len() {
            let c = f.coeffs[idx];
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(Error::Data("non-finite spectral coefficient".into()));
            }
            if grid.is_oddball(idx) {
                if c != Complex64::new(0.0, 0.0) {
                    return Err(Error::Data("nonzero oddball mode".into()));
                }
            } else if f.coeffs[grid.neg_index(idx)] != c.conj() {
                return Err(Error::Data("coefficients are not Hermitian".into()));
            }
        }
        Ok(f)
    }

    /// Sets `coeff(k) = c` and `coeff(-k) = conj(c)`. For `k = 0` only the
    /// real part is kept.
    pub fn set_mode(&mut self, k: &[i64], c: Complex64) -> Result<()> {
        let idx = self
            .grid
            .index_of(k)
            .ok_or_else(|| Error::Usage(format!("mode {k:?} outside lattice")))?;
        if self.grid.is_oddball(idx) {
            return Err(Error::Usage(format!("mode {k:?} is an oddball mode")));
        }
        let neg = self.grid.neg_index(idx);
        if neg == idx {
            self.coeffs[idx] = Complex64::new(c.re, 0.0);
        } else {
            self.coeffs[idx] = c;
            self.coeffs[neg] = c.conj();
        }
        Ok(())
    }

    pub fn coeff(&self, k: &[i64]) -> Complex64 {
        self.grid
            .index_of(k)
            .map(|i| self.coeffs[i])
            .unwrap_or_default()
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Replaces each coefficient pair by its Hermitian average.
    pub(crate) fn symmetrize(&mut self) {
        let g = self.grid;
        for idx in 0..g.len() {
            if g.is_oddball(idx) {
                self.coeffs[idx] = Complex64::new(0.0, 0.0);
                continue;
            }
            let neg = g.neg_index(idx);
            if neg < idx {
                continue;
            }
            if neg == idx {
                self.coeffs[idx].im = 0.0;
            } else {
                let avg = (self.coeffs[idx] + self.coeffs[neg].conj()) * 0.5;
                self.coeffs[idx] = avg;
                self.coeffs[neg] = avg.conj();
            }
        }
    }

    /// Largest `|coeff(k) - conj(coeff(-k))|` over the lattice.
    pub fn hermitian_defect(&self) -> f64 {
        let g = self.grid;
        (0..g.len())
            .map(|idx| {
                if g.is_oddball(idx) {
                    self.coeffs[idx].norm()
                } else {
                    (self.coeffs[idx] - self.coeffs[g.neg_index(idx)].conj()).norm()
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Real `L²` inner product `(f, g)`.
    pub fn inner(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        pairwise_sum_by(self.coeffs.len(), |i| {
            let a = self.coeffs[i];
            let b = other.coeffs[i];
            a.re * b.re + a.im * b.im
        })
    }

    pub fn l2_sq(&self) -> f64 {
        self.inner(self)
    }

    pub fn scale(&self, a: f64) -> Self {
        Self::from_raw(self.grid, self.coeffs.iter().map(|c| c * a).collect())
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        Self::from_raw(
            self.grid,
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(x, y)| x + y * a)
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(-1.0, other)
    }

    /// Multiplies each coefficient by a real multiplier that is even in `k`.
    pub fn map_real_multiplier<F>(&self, m: F) -> Self
    where
        F: Fn(Mode) -> f64,
    {
        let g = self.grid;
        Self::from_raw(
            g,
            self.coeffs
                .iter()
                .enumerate()
                .map(|(idx, c)| c * m(g.mode(idx)))
                .collect(),
        )
    }

    /// Keeps coefficients where `keep(idx)` holds, zeroing the rest.
    pub(crate) fn mask<F>(&self, keep: F) -> Self
    where
        F: Fn(usize) -> bool,
    {
        Self::from_raw(
            self.grid,
            self.coeffs
                .iter()
                .enumerate()
                .map(|(idx, &c)| if keep(idx) { c } else { Complex64::new(0.0, 0.0) })
                .collect(),
        )
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest `|k|²` carrying a nonzero coefficient.
    pub fn support_k2(&self) -> i64 {
        let g = self.grid;
        (0..g.len())
            .filter(|&i| self.coeffs[i] != Complex64::new(0.0, 0.0))
            .map(|i| g.k2(i))
            .max()
            .unwrap_or(0)
    }
}

/// A `dim`-tuple of scalar fields with a divergence-free certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVector {
    comps: Vec<SpectralScalar>,
    solenoidal: bool,
}

impl SpectralVector {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            comps: vec![SpectralScalar::zeros(grid); grid.dim()],
            solenoidal: true,
        }
    }

    /// Builds an uncertified vector. Call [`SpectralVector::certify`] to
    /// check and record solenoidality.
    pub fn new(comps: Vec<SpectralScalar>) -> Result<Self> {
        let grid = comps
            .first()
            .map(|c| c.grid())
            .ok_or_else(|| Error::Usage("vector needs at least one component".into()))?;
        if comps.len() != grid.dim() || comps.iter().any(|c| c.grid() != grid) {
            return Err(Error::Usage(format!(
                "vector needs {} components on one grid",
                grid.dim()
            )));
        }
        Ok(Self {
            comps,
            solenoidal: false,
        })
    }

    pub(crate) fn from_parts(comps: Vec<SpectralScalar>, solenoidal: bool) -> Self {
        Self { comps, solenoidal }
    }

    pub fn grid(&self) -> Grid {
        self.comps[0].grid()
    }

    pub fn components(&self) -> &[SpectralScalar] {
        &self.comps
    }

    pub fn into_components(self) -> Vec<SpectralScalar> {
        self.comps
    }

    pub fn component(&self, i: usize) -> &SpectralScalar {
        &self.comps[i]
    }

    /// Whether the certificate is set.
    pub fn is_certified(&self) -> bool {
        self.solenoidal
    }

    /// `max_k |k·v̂(k)| / max_k |v̂(k)|`, or 0 for the zero field.
    pub fn divergence_ratio(&self) -> f64 {
        let g = self.grid();
        let mut max_div = 0.0_f64;
        let mut max_v = 0.0_f64;
        for idx in 0..g.len() {
            let k = g.mode(idx);
            let mut dot = Complex64::new(0.0, 0.0);
            let mut mag2 = 0.0;
            for (a, c) in self.comps.iter().enumerate() {
                let v = c.coeffs()[idx];
                dot += v * k[a] as f64;
                mag2 += v.norm_sqr();
            }
            max_div = max_div.max(dot.norm());
            max_v = max_v.max(mag2.sqrt());
        }
        if max_v == 0.0 {
            0.0
        } else {
            max_div / max_v
        }
    }

    /// Recomputes the divergence certificate.
    pub fn certify(mut self) -> Self {
        self.solenoidal = self.divergence_ratio() <= SOLENOIDAL_TOL;
        self
    }

    pub fn inner(&self, other: &Self) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.inner(b))
            .fold(0.0, |acc, x| acc + x)
    }

    pub fn l2_sq(&self) -> f64 {
        self.inner(self)
    }

    /// Linear combinations of certified fields keep the certificate; the
    /// resulting divergence is bounded by rounding of the inputs.
    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        Self {
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(x, y)| x.axpy(a, y))
                .collect(),
            solenoidal: self.solenoidal && other.solenoidal,
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            comps: self.comps.iter().map(|c| c.scale(a)).collect(),
            solenoidal: self.solenoidal,
        }
    }

    pub fn map_components<F>(&self, f: F) -> Self
    where
        F: Fn(&SpectralScalar) -> SpectralScalar,
    {
        Self {
            comps: self.comps.iter().map(f).collect(),
            solenoidal: self.solenoidal,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(SpectralScalar::is_finite)
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.comps
            .iter()
            .map(SpectralScalar::hermitian_defect)
            .fold(0.0, f64::max)
    }
}

/// Anything made of scalar components: a scalar (one component) or a vector.
pub trait Components {
    fn components(&self) -> &[SpectralScalar];

    fn grid(&self) -> Grid {
        self.components()[0].grid()
    }
}

impl Components for SpectralScalar {
    fn components(&self) -> &[SpectralScalar] {
        std::slice::from_ref(self)
    }
}

impl Components for [SpectralScalar] {
    fn components(&self) -> &[SpectralScalar] {
        self
    }
}

impl Components for SpectralVector {
    fn components(&self) -> &[SpectralScalar] {
        &self.comps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g2() -> Grid {
        Grid::new(2, 8).unwrap()
    }

    #[test]
    fn set_mode_writes_partner() {
        let mut f = SpectralScalar::zeros(g2());
        f.set_mode(&[1, 2], Complex64::new(0.5, -0.25)).unwrap();
        assert_eq!(f.coeff(&[-1, -2]), Complex64::new(0.5, 0.25));
        assert_eq!(f.hermitian_defect(), 0.0);
        assert!(f.set_mode(&[-4, 0], Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn from_coeffs_symmetrizes_and_clears_oddball() {
        let g = g2();
        let coeffs = (0..g.len()).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let f = SpectralScalar::from_coeffs(g, coeffs).unwrap();
        assert_eq!(f.hermitian_defect(), 0.0);
        assert_eq!(f.coeff(&[-4, 1]), Complex64::new(0.0, 0.0));
        assert_eq!(f.coeff(&[0, 0]).im, 0.0);
    }

    #[test]
    fn from_coeffs_rejects_nan() {
        let g = g2();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); g.len()];
        coeffs[3].re = f64::NAN;
        assert!(matches!(
            SpectralScalar::from_coeffs(g, coeffs),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn exact_loader_rejects_asymmetric() {
        let g = g2();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); g.len()];
        coeffs[g.index_of(&[1, 0]).unwrap()] = Complex64::new(1.0, 0.0);
        assert!(SpectralScalar::from_coeffs_exact(g, coeffs).is_err());
    }

    #[test]
    fn divergence_ratio_of_parallel_mode() {
        let g = g2();
        let mut vx = SpectralScalar::zeros(g);
        vx.set_mode(&[1, 0], Complex64::new(1.0, 0.0)).unwrap();
        let v = SpectralVector::new(vec![vx, SpectralScalar::zeros(g)]).unwrap();
        assert_eq!(v.divergence_ratio(), 1.0);
        assert!(!v.certify().is_certified());
    }
}
