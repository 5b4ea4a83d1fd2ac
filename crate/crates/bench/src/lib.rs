//! Fixtures shared by the benchmarks.

use mbsim_core::integrate::{make_initial, InitialSpec};
use mbsim_core::{Grid, SimConfig, State};

/// A 2D configuration at the largest radius the dealiasing rule allows.
pub fn config_2d(n: usize) -> SimConfig {
    let grid = Grid::new(2, n).expect("grid");
    SimConfig::new(grid, grid.dealias_kmax() as f64, 2.5, 1.0).expect("config")
}

/// A 3D configuration at the largest radius the dealiasing rule allows.
pub fn config_3d(n: usize) -> SimConfig {
    let grid = Grid::new(3, n).expect("grid");
    SimConfig::new(grid, grid.dealias_kmax() as f64, 3.0, 1.0).expect("config")
}

/// A random band-limited state with temperature and magnetic perturbations.
pub fn state(cfg: &SimConfig, seed: u64) -> State {
    let spec = InitialSpec::random_band(1.0, seed).with_perturbations(0.5, 0.5);
    make_initial(&spec, cfg).expect("initial state")
}
