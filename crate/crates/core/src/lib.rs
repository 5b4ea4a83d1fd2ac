//! Pseudo-spectral simulation of the ideal magnetic Bénard system on the
//! periodic torus, with energy, convergence and blow-up diagnostics.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod integrate;
pub mod reduce;
pub mod spectral;

pub use diagnostics::{DiagRecord, Monitor, Verdicts};
pub use dynamics::{Coupling, DtPolicy, SimConfig, State, Tendency};
pub use error::{Error, Result};
pub use integrate::{InitialSpec, RunConfig, RunOutcome, RunReport};
pub use rustfft::num_complex::Complex64;
pub use spectral::{Field, Grid, NormFlavor, NormSpec, SpectralScalar, SpectralVector};
