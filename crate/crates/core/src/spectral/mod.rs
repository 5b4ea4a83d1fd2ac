//! Fourier-space foundation on the periodic torus.

pub mod checkpoint;
pub mod fft;
pub mod field;
pub mod grid;
pub mod norms;
pub mod ops;

pub use checkpoint::{Checkpoint, CheckpointMeta};
pub use fft::{forward_transform, inverse_transform, inverse_vector, sample};
pub use field::{Components, SpectralScalar, SpectralVector, SOLENOIDAL_TOL};
pub use grid::{Grid, Mode};
pub use norms::{norm, NormFlavor, NormSpec, NormTriple};
pub use ops::{
    bessel_potential, bessel_potential_vector, curl, dealias, differential, directional,
    divergence, gradient, in_ball, leray_project, lp_block, partial, truncate, truncate_vector,
    DiffOp, Field, LpBlockIndex,
};
