//! `MBSPEC01` checkpoint container.
//!
//! Layout: 8 magic bytes, a little-endian `u64` header length, the JSON
//! header, then one array per named field. Each array holds `N^dim`
//! coefficients in storage (FFT) order as little-endian `f64` pairs
//! `(re, im)`.

use std::path::Path;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::SpectralScalar;
use super::grid::Grid;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"MBSPEC01";
const MAX_HEADER: u64 = 64 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub dim: usize,
    pub n: usize,
    pub radius: f64,
    pub s: f64,
    pub t: f64,
    /// Bit pattern of `t`; authoritative when reading.
    pub t_bits: u64,
    pub field_names: Vec<String>,
    pub mode_order: String,
    /// Free-form payload (run configuration, step counter, accumulators).
    #[serde(default)]
    pub extra: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub meta: CheckpointMeta,
    pub fields: Vec<SpectralScalar>,
}

impl Checkpoint {
    pub fn new(
        grid: Grid,
        radius: f64,
        s: f64,
        t: f64,
        named: Vec<(String, SpectralScalar)>,
        extra: serde_json::Value,
    ) -> Result<Self> {
        if named.iter().any(|(_, f)| f.grid() != grid) {
            return Err(Error::Usage("checkpoint fields must share one grid".into()));
        }
        let (field_names, fields) = named.into_iter().unzip();
        Ok(Self {
            meta: CheckpointMeta {
                dim: grid.dim(),
                n: grid.n(),
                radius,
                s,
                t,
                t_bits: t.to_bits(),
                field_names,
                mode_order: "fft-row-major".into(),
                extra,
            },
            fields,
        })
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.meta.dim, self.meta.n)
    }

    pub fn time(&self) -> f64 {
        f64::from_bits(self.meta.t_bits)
    }

    pub fn field(&self, name: &str) -> Option<&SpectralScalar> {
        self.meta
            .field_names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.fields[i])
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&self.meta)?;
        let per = self.fields.first().map(|f| f.coeffs().len()).unwrap_or(0);
        let mut out = Vec::with_capacity(16 + header.len() + self.fields.len() * per * 16);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for f in &self.fields {
            for c in f.coeffs() {
                out.extend_from_slice(&c.re.to_le_bytes());
                out.extend_from_slice(&c.im.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8], origin: &str) -> Result<Self> {
        let bad = |reason: String| Error::Container {
            path: origin.to_string(),
            reason,
        };
        if bytes.len() < 16 {
            return Err(bad(format!("file is {} bytes, shorter than the preamble", bytes.len())));
        }
        if &bytes[..8] != MAGIC {
            return Err(bad("missing MBSPEC01 magic".into()));
        }
        let hlen = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
        if hlen > MAX_HEADER || 16 + hlen > bytes.len() as u64 {
            return Err(bad(format!("header length {hlen} exceeds file size")));
        }
        let hend = 16 + hlen as usize;
        let meta: CheckpointMeta = serde_json::from_slice(&bytes[16..hend])
            .map_err(|e| bad(format!("malformed JSON header: {e}")))?;
        let grid = Grid::new(meta.dim, meta.n).map_err(|e| bad(e.to_string()))?;
        let per = grid.len() * 16;
        let expected = per * meta.field_names.len();
        let payload = &bytes[hend..];
        if payload.len() != expected {
            return Err(bad(format!(
                "payload is {} bytes, header promises {expected}",
                payload.len()
            )));
        }
        let mut fields = Vec::with_capacity(meta.field_names.len());
        for (i, name) in meta.field_names.iter().enumerate() {
            let chunk = &payload[i * per..(i + 1) * per];
            let coeffs = chunk
                .chunks_exact(16)
                .map(|b| {
                    Complex64::new(
                        f64::from_le_bytes(b[..8].try_into().unwrap()),
                        f64::from_le_bytes(b[8..].try_into().unwrap()),
                    )
                })
                .collect();
            let f = SpectralScalar::from_coeffs_exact(grid, coeffs)
                .map_err(|e| bad(format!("field '{name}': {e}")))?;
            fields.push(f);
        }
        Ok(Self { meta, fields })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, &path.display().to_string())
    }
}
