use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic grid on `[0, 2π)^dim`.
///
/// Mode storage follows FFT order along each axis: index `i` holds wave
/// number `i` for `i < N/2` and `i - N` otherwise, so `-N/2` is the single
/// Nyquist entry. Arrays are row-major with axis 0 slowest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: usize,
}

pub type Mode = [i64; 3];

impl Grid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Config(format!("dimension must be 2 or 3, got {dim}")));
        }
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "points per axis must be even and at least 8, got {n}"
            )));
        }
        Ok(Self { dim, n })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of lattice modes (equal to the number of grid points).
    #[inline]
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.n as f64
    }

    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    #[inline]
    fn axis_index(&self, k: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if k < -half || k >= half {
            return None;
        }
        Some(if k >= 0 { k as usize } else { (k + self.n as i64) as usize })
    }

    /// Per-axis storage indices of a flat index.
    #[inline]
    pub fn split(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        match self.dim {
            2 => [idx / n, idx % n, 0],
            _ => [idx / (n * n), (idx / n) % n, idx % n],
        }
    }

    /// Integer mode vector at a flat index; unused trailing entries are 0.
    #[inline]
    pub fn mode(&self, idx: usize) -> Mode {
        let s = self.split(idx);
        let mut k = [0i64; 3];
        for a in 0..self.dim {
            k[a] = self.wavenumber(s[a]);
        }
        k
    }

    /// Flat index of a mode, or `None` if it lies outside the lattice.
    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.dim {
            return None;
        }
        let mut idx = 0;
        for &ka in k {
            idx = idx * self.n + self.axis_index(ka)?;
        }
        Some(idx)
    }

    #[inline]
    pub fn k2(&self, idx: usize) -> i64 {
        let k = self.mode(idx);
        k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
    }

    /// True when any component equals `-N/2`.
    #[inline]
    pub fn is_oddball(&self, idx: usize) -> bool {
        let s = self.split(idx);
        s[..self.dim].contains(&(self.n / 2))
    }

    /// Flat index of `-k`. Oddball modes map to themselves.
    #[inline]
    pub fn neg_index(&self, idx: usize) -> usize {
        let s = self.split(idx);
        let mut out = 0;
        for &i in &s[..self.dim] {
            out = out * self.n + (self.n - i) % self.n;
        }
        out
    }

    /// Largest per-axis wave number retained by the two-thirds rule.
    ///
    /// Modes are kept when `3|k_i| < N`, so products of two retained fields
    /// only alias onto discarded modes.
    pub fn dealias_kmax(&self) -> i64 {
        ((self.n as i64) - 1) / 3
    }

    #[inline]
    pub fn dealias_keep(&self, idx: usize) -> bool {
        let kmax = self.dealias_kmax();
        let k = self.mode(idx);
        k[..self.dim].iter().all(|&ki| ki.abs() <= kmax)
    }

    /// Coordinates of a physical grid point.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let s = self.split(idx);
        let h = self.spacing();
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = h * s[a] as f64;
        }
        x
    }

    /// Radius of the smallest closed ball containing every lattice mode.
    pub fn max_radius(&self) -> f64 {
        (self.n as f64 / 2.0) * (self.dim as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(Grid::new(1, 8).is_err());
        assert!(Grid::new(2, 6).is_err());
        assert!(Grid::new(3, 9).is_err());
        assert!(Grid::new(3, 8).is_ok());
    }

    #[test]
    fn index_mode_roundtrip() {
        for g in [Grid::new(2, 8).unwrap(), Grid::new(3, 8).unwrap()] {
            for idx in 0..g.len() {
                let k = g.mode(idx);
                assert_eq!(g.index_of(&k[..g.dim()]), Some(idx));
                let neg = g.neg_index(idx);
                if !g.is_oddball(idx) {
                    let kn = g.mode(neg);
                    for a in 0..3 {
                        assert_eq!(kn[a], -k[a]);
                    }
                }
            }
        }
    }

    #[test]
    fn nyquist_is_present_and_oddball() {
        let g = Grid::new(2, 8).unwrap();
        let idx = g.index_of(&[-4, 0]).unwrap();
        assert!(g.is_oddball(idx));
        assert!(g.index_of(&[4, 0]).is_none());
    }

    #[test]
    fn dealias_rule_edges() {
        assert_eq!(Grid::new(2, 8).unwrap().dealias_kmax(), 2);
        assert_eq!(Grid::new(2, 64).unwrap().dealias_kmax(), 21);
        assert_eq!(Grid::new(2, 48).unwrap().dealias_kmax(), 15);
        assert_eq!(Grid::new(2, 128).unwrap().dealias_kmax(), 42);
    }
}
