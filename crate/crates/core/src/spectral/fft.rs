//! Physical <-> spectral transforms built on separable 1D FFTs.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use super::field::{SpectralScalar, SpectralVector};
use super::grid::Grid;
use crate::error::{Error, Result};

type PlanCache = Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>;

fn plan(n: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<PlanCache> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (n, direction == FftDirection::Forward);
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(key)
        .or_insert_with(|| FftPlanner::new().plan_fft(n, direction))
        .clone()
}

/// Unnormalized in-place N-dimensional FFT.
pub(crate) fn fft_nd(grid: Grid, data: &mut [Complex64], direction: FftDirection) {
    let n = grid.n();
    let dim = grid.dim();
    let fft = plan(n, direction);
    let total = grid.len();
    let mut lines = vec![Complex64::new(0.0, 0.0); total];
    for axis in 0..dim {
        // stride between consecutive entries along `axis`
        let stride = n.pow((dim - 1 - axis) as u32);
        if stride == 1 {
            data.par_chunks_mut(n).for_each_init(
                || vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()],
                |scratch, line| fft.process_with_scratch(line, scratch),
            );
            continue;
        }
        // gather every line along `axis` into contiguous storage
        let block = stride * n;
        lines
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(line, out)| {
                let outer = line / stride;
                let inner = line % stride;
                let base = outer * block + inner;
                for (j, o) in out.iter_mut().enumerate() {
                    *o = data[base + j * stride];
                }
            });
        lines.par_chunks_mut(n).for_each_init(
            || vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()],
            |scratch, line| fft.process_with_scratch(line, scratch),
        );
        for (line, src) in lines.chunks(n).enumerate() {
            let outer = line / stride;
            let inner = line % stride;
            let base = outer * block + inner;
            for (j, v) in src.iter().enumerate() {
                data[base + j * stride] = *v;
            }
        }
    }
}

/// Transforms real samples on the `N^dim` grid to Fourier coefficients.
///
/// Coefficients are `(1/N^dim) Σ_x f(x) e^{-i k·x}`, symmetrized so that
/// Hermitian symmetry holds exactly; Nyquist content is discarded.
pub fn forward_transform(grid: Grid, samples: &[f64]) -> Result<SpectralScalar> {
    if samples.len() != grid.len() {
        return Err(Error::Data(format!(
            "expected {} samples, got {}",
            grid.len(),
            samples.len()
        )));
    }
    if let Some(pos) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::Data(format!("non-finite sample at index {pos}")));
    }
    let mut data: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(grid, &mut data, FftDirection::Forward);
    let scale = 1.0 / grid.len() as f64;
    data.par_iter_mut().for_each(|c| *c *= scale);
    let mut f = SpectralScalar::from_raw(grid, data);
    f.symmetrize();
    Ok(f)
}

/// Renders a field to its real samples on the physical grid.
pub fn inverse_transform(f: &SpectralScalar) -> Vec<f64> {
    let grid = f.grid();
    let mut data = f.coeffs().to_vec();
    fft_nd(grid, &mut data, FftDirection::Inverse);
    data.into_iter().map(|c| c.re).collect()
}

/// Renders every component of a vector field.
pub fn inverse_vector(v: &SpectralVector) -> Vec<Vec<f64>> {
    v.components().par_iter().map(inverse_transform).collect()
}

/// Samples an analytic function on the grid and transforms it.
pub fn sample<F>(grid: Grid, f: F) -> Result<SpectralScalar>
where
    F: Fn([f64; 3]) -> f64 + Sync,
{
    let samples: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| f(grid.point(i)))
        .collect();
    forward_transform(grid, &samples)
}
