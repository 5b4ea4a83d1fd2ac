//! Right-hand side of the Fourier-truncated ideal magnetic Bénard system.
//!
//! Nonlinear products are evaluated pseudo-spectrally: operands are
//! rendered on the grid, multiplied pointwise, transformed back, dealiased
//! with the two-thirds rule and truncated to the ball `|k| ≤ R`. Pressure is
//! removed by Leray projection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::spectral::{
    bessel_potential, dealias, forward_transform, in_ball, inverse_transform, leray_project,
    partial, truncate, Field, Grid, SpectralScalar, SpectralVector, SOLENOIDAL_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DealiasRule {
    /// Zero every mode with `3|k_i| ≥ N` after each pointwise product.
    TwoThirds,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DtPolicy {
    Fixed { dt: f64 },
    Cfl { c_max: f64, dt_max: f64 },
}

/// Whether temperature and velocity exchange energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// Buoyancy `θ e_n` in the momentum equation and `u·e_n` in the
    /// temperature equation.
    #[default]
    Benard,
    /// Both exchange terms dropped; `θ` is passively advected and
    /// `(u, b)` evolve as ideal MHD.
    Passive,
}

impl Default for DtPolicy {
    fn default() -> Self {
        DtPolicy::Cfl {
            c_max: 0.5,
            dt_max: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub grid: Grid,
    /// Truncation radius `R`.
    pub radius: f64,
    /// Sobolev index `s`, strictly above `dim/2 + 1`.
    pub sobolev_s: f64,
    /// Zero-based index of the buoyancy axis `e_n`.
    pub buoyancy_axis: usize,
    #[serde(default)]
    pub coupling: Coupling,
    pub dealias: DealiasRule,
    pub dt_policy: DtPolicy,
    pub t_end: f64,
}

impl SimConfig {
    /// Config with the buoyancy axis set to the last coordinate and the
    /// default CFL policy.
    pub fn new(grid: Grid, radius: f64, sobolev_s: f64, t_end: f64) -> Result<Self> {
        let cfg = Self {
            grid,
            radius,
            sobolev_s,
            buoyancy_axis: grid.dim() - 1,
            coupling: Coupling::Benard,
            dealias: DealiasRule::TwoThirds,
            dt_policy: DtPolicy::default(),
            t_end,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_dt(mut self, policy: DtPolicy) -> Result<Self> {
        self.dt_policy = policy;
        self.validate()?;
        Ok(self)
    }

    pub fn with_coupling(mut self, coupling: Coupling) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.grid.dim();
        let n = self.grid.n();
        if !(self.sobolev_s > dim as f64 / 2.0 + 1.0) {
            return Err(Error::Config(format!(
                "Sobolev index s = {} must exceed dim/2 + 1 = {}",
                self.sobolev_s,
                dim as f64 / 2.0 + 1.0
            )));
        }
        if !(self.radius > 0.0) {
            return Err(Error::Config(format!(
                "truncation radius must be positive, got {}",
                self.radius
            )));
        }
        if self.radius > n as f64 / 3.0 || self.radius.floor() as i64 > self.grid.dealias_kmax() {
            return Err(Error::Config(format!(
                "truncation radius {} exceeds the two-thirds limit for N = {n} (max {})",
                self.radius,
                self.grid.dealias_kmax()
            )));
        }
        if self.buoyancy_axis >= dim {
            return Err(Error::Config(format!(
                "buoyancy axis {} out of range for dim {dim}",
                self.buoyancy_axis
            )));
        }
        match self.dt_policy {
            DtPolicy::Fixed { dt } if !(dt > 0.0 && dt.is_finite()) => {
                return Err(Error::Config(format!("fixed dt must be positive, got {dt}")))
            }
            DtPolicy::Cfl { c_max, dt_max } if !(c_max > 0.0 && dt_max > 0.0) => {
                return Err(Error::Config(format!(
                    "CFL policy needs positive c_max and dt_max, got {c_max}, {dt_max}"
                )))
            }
            _ => {}
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be ≥ 0, got {}", self.t_end)));
        }
        Ok(())
    }

    fn buoyancy_dir(&self) -> usize {
        self.buoyancy_axis
    }
}

/// Velocity, temperature and magnetic field at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: SpectralVector,
    pub theta: SpectralScalar,
    pub b: SpectralVector,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tendency {
    pub du: SpectralVector,
    pub dtheta: SpectralScalar,
    pub db: SpectralVector,
}

impl State {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            u: SpectralVector::zeros(grid),
            theta: SpectralScalar::zeros(grid),
            b: SpectralVector::zeros(grid),
            t: 0.0,
        }
    }

    pub fn grid(&self) -> Grid {
        self.theta.grid()
    }

    /// `self + a * tendency`, keeping `t`.
    pub fn advance(&self, a: f64, k: &Tendency) -> Self {
        Self {
            u: self.u.axpy(a, &k.du),
            theta: self.theta.axpy(a, &k.dtheta),
            b: self.b.axpy(a, &k.db),
            t: self.t,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.theta.is_finite() && self.b.is_finite()
    }

    fn all_components(&self) -> impl Iterator<Item = &SpectralScalar> {
        self.u
            .components()
            .iter()
            .chain(std::iter::once(&self.theta))
            .chain(self.b.components())
    }

    /// Sum of squared coefficient magnitudes outside the ball `|k| ≤ R`.
    pub fn mass_outside_ball(&self, radius: f64) -> f64 {
        let g = self.grid();
        self.all_components()
            .map(|c| {
                c.coeffs()
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !in_ball(g, *i, radius))
                    .map(|(_, z)| z.norm_sqr())
                    .fold(0.0, |a, b| a + b)
            })
            .fold(0.0, |a, b| a + b)
    }

    /// Checks solenoidality of `u`, `b` and support inside the ball.
    pub fn check_invariants(&self, cfg: &SimConfig) -> Result<()> {
        if self.grid() != cfg.grid {
            return Err(Error::Config("state grid does not match configuration".into()));
        }
        for (name, v) in [("u", &self.u), ("b", &self.b)] {
            let r = v.divergence_ratio();
            if r > SOLENOIDAL_TOL {
                return Err(Error::Contract(format!(
                    "{name} is not solenoidal (divergence ratio {r:.3e})"
                )));
            }
        }
        let outside = self.mass_outside_ball(cfg.radius);
        if outside != 0.0 {
            return Err(Error::Contract(format!(
                "state has energy {outside:.3e} outside the truncation ball"
            )));
        }
        Ok(())
    }

    /// Component fields by checkpoint name: `u0..`, `theta`, `b0..`.
    pub fn named_fields(&self) -> Vec<(String, SpectralScalar)> {
        let mut out = Vec::new();
        for (i, c) in self.u.components().iter().enumerate() {
            out.push((format!("u{i}"), c.clone()));
        }
        out.push(("theta".into(), self.theta.clone()));
        for (i, c) in self.b.components().iter().enumerate() {
            out.push((format!("b{i}"), c.clone()));
        }
        out
    }

    pub fn from_named_fields(
        grid: Grid,
        t: f64,
        lookup: impl Fn(&str) -> Option<SpectralScalar>,
    ) -> Result<Self> {
        let get = |name: String| {
            lookup(&name).ok_or_else(|| Error::Data(format!("missing field '{name}'")))
        };
        let u = (0..grid.dim())
            .map(|i| get(format!("u{i}")))
            .collect::<Result<Vec<_>>>()?;
        let b = (0..grid.dim())
            .map(|i| get(format!("b{i}")))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            u: SpectralVector::new(u)?.certify(),
            theta: get("theta".into())?,
            b: SpectralVector::new(b)?.certify(),
            t,
        })
    }

    /// Hex SHA-256 over every coefficient bit pattern and `t`.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.t.to_bits().to_le_bytes());
        for c in self.all_components() {
            for z in c.coeffs() {
                h.update(z.re.to_bits().to_le_bytes());
                h.update(z.im.to_bits().to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl Tendency {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            du: SpectralVector::zeros(grid),
            dtheta: SpectralScalar::zeros(grid),
            db: SpectralVector::zeros(grid),
        }
    }

    /// `(du, u) + (dθ, θ) + (db, b)`.
    pub fn pair(&self, state: &State) -> f64 {
        self.du.inner(&state.u) + self.dtheta.inner(&state.theta) + self.db.inner(&state.b)
    }
}

/// Pointwise product returned to spectral space, dealiased and optionally
/// truncated.
fn finish(grid: Grid, phys: Vec<f64>, radius: Option<f64>) -> Result<SpectralScalar> {
    let f = dealias(&forward_transform(grid, &phys)?);
    match radius {
        Some(r) => truncate(&f, r),
        None => Ok(f),
    }
}

/// Physical-space samples of a transporting vector field.
struct Rendered {
    comps: Vec<Vec<f64>>,
}

impl Rendered {
    fn new(v: &SpectralVector) -> Self {
        Self {
            comps: v.components().par_iter().map(inverse_transform).collect(),
        }
    }
}

/// Rendered gradient `∂_j g` of a scalar.
fn rendered_gradient(g: &SpectralScalar) -> Vec<Vec<f64>> {
    (0..g.grid().dim())
        .into_par_iter()
        .map(|a| inverse_transform(&partial(g, a)))
        .collect()
}

/// `Σ_j v_j ∂_j g` pointwise.
fn transport_product(v: &Rendered, grad: &[Vec<f64>]) -> Vec<f64> {
    let n = grad[0].len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            v.comps
                .iter()
                .zip(grad)
                .map(|(vc, gc)| vc[i] * gc[i])
                .fold(0.0, |a, b| a + b)
        })
        .collect()
}

fn require_solenoidal(v: &SpectralVector, what: &str) -> Result<()> {
    let r = v.divergence_ratio();
    if r > SOLENOIDAL_TOL {
        return Err(Error::Contract(format!(
            "{what} must be solenoidal (divergence ratio {r:.3e})"
        )));
    }
    Ok(())
}

fn same_grid(a: Grid, b: Grid, cfg: &SimConfig) -> Result<()> {
    if a != cfg.grid || b != cfg.grid {
        return Err(Error::Config("operands are not on the configured grid".into()));
    }
    Ok(())
}

/// `S_R[(v·∇) g]` for a scalar `g`.
pub fn advect_scalar(v: &SpectralVector, g: &SpectralScalar, cfg: &SimConfig) -> Result<SpectralScalar> {
    same_grid(v.grid(), g.grid(), cfg)?;
    require_solenoidal(v, "transporting field")?;
    let rv = Rendered::new(v);
    advect_rendered(&rv, &rendered_gradient(g), cfg)
}

fn advect_rendered(rv: &Rendered, grad: &[Vec<f64>], cfg: &SimConfig) -> Result<SpectralScalar> {
    finish(cfg.grid, transport_product(rv, grad), Some(cfg.radius))
}

/// `S_R[(v·∇) w]` for a vector `w`, componentwise.
pub fn advect_vector(v: &SpectralVector, w: &SpectralVector, cfg: &SimConfig) -> Result<SpectralVector> {
    same_grid(v.grid(), w.grid(), cfg)?;
    require_solenoidal(v, "transporting field")?;
    let rv = Rendered::new(v);
    let comps = w
        .components()
        .iter()
        .map(|c| advect_rendered(&rv, &rendered_gradient(c), cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralVector::from_parts(comps, false))
}

/// Rank-generic advection.
pub fn advect(v: &SpectralVector, g: &Field, cfg: &SimConfig) -> Result<Field> {
    match g {
        Field::Scalar(s) => advect_scalar(v, s, cfg).map(Field::Scalar),
        Field::Vector(w) => advect_vector(v, w, cfg).map(Field::Vector),
    }
}

/// Divergence form `S_R[∇·(v ⊗ g)]`; equals [`advect_scalar`] for
/// solenoidal `v`.
pub fn advect_divergence_form(
    v: &SpectralVector,
    g: &SpectralScalar,
    cfg: &SimConfig,
) -> Result<SpectralScalar> {
    same_grid(v.grid(), g.grid(), cfg)?;
    let grid = cfg.grid;
    let rv = Rendered::new(v);
    let rg = inverse_transform(g);
    let mut acc = SpectralScalar::zeros(grid);
    for (a, vc) in rv.comps.iter().enumerate() {
        let prod: Vec<f64> = vc.iter().zip(&rg).map(|(x, y)| x * y).collect();
        let flux = dealias(&forward_transform(grid, &prod)?);
        acc = acc.add(&partial(&flux, a));
    }
    truncate(&acc, cfg.radius)
}

/// Tendency of the truncated system.
///
/// `du = P(-S_R[(u·∇)u] + S_R[(b·∇)b] + S_R[θ e_n])`,
/// `dθ = -S_R[(u·∇)θ] + S_R[u·e_n]`,
/// `db = -S_R[(u·∇)b] + S_R[(b·∇)u]`.
pub fn rhs(state: &State, cfg: &SimConfig) -> Result<Tendency> {
    let grid = cfg.grid;
    same_grid(state.grid(), state.u.grid(), cfg)?;
    same_grid(state.b.grid(), state.theta.grid(), cfg)?;
    require_solenoidal(&state.u, "velocity")?;
    require_solenoidal(&state.b, "magnetic field")?;
    let dim = grid.dim();
    let axis = cfg.buoyancy_dir();

    let (ru, rb) = rayon::join(|| Rendered::new(&state.u), || Rendered::new(&state.b));
    let grad_u: Vec<Vec<Vec<f64>>> = state.u.components().iter().map(rendered_gradient).collect();
    let grad_b: Vec<Vec<Vec<f64>>> = state.b.components().iter().map(rendered_gradient).collect();
    let grad_theta = rendered_gradient(&state.theta);

    // six families of products, assembled in a fixed order afterwards
    let jobs: Vec<(usize, usize)> = (0..dim)
        .flat_map(|i| [(0, i), (1, i), (3, i), (4, i)])
        .chain(std::iter::once((2, 0)))
        .collect();
    let products = jobs
        .par_iter()
        .map(|&(kind, i)| {
            let (v, grad) = match kind {
                0 => (&ru, &grad_u[i]),
                1 => (&rb, &grad_b[i]),
                2 => (&ru, &grad_theta),
                3 => (&ru, &grad_b[i]),
                _ => (&rb, &grad_u[i]),
            };
            advect_rendered(v, grad, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let pick = |kind: usize, i: usize| {
        let pos = jobs.iter().position(|&j| j == (kind, i)).unwrap();
        &products[pos]
    };

    let coupled = cfg.coupling == Coupling::Benard;
    let buoyancy = truncate(&state.theta, cfg.radius)?;
    let mut du = Vec::with_capacity(dim);
    let mut db = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut c = pick(1, i).sub(pick(0, i));
        if coupled && i == axis {
            c = c.add(&buoyancy);
        }
        du.push(c);
        db.push(pick(4, i).sub(pick(3, i)));
    }
    let du = leray_project(&SpectralVector::from_parts(du, false));
    let db = SpectralVector::from_parts(db, false).certify();
    let dtheta = if coupled {
        truncate(&state.u.components()[axis], cfg.radius)?.sub(pick(2, 0))
    } else {
        pick(2, 0).scale(-1.0)
    };
    Ok(Tendency { du, dtheta, db })
}

/// Buoyancy work `(θ e_n, u) + (u·e_n, θ)`; zero without coupling.
pub fn buoyancy_exchange(state: &State, cfg: &SimConfig) -> f64 {
    if cfg.coupling == Coupling::Passive {
        return 0.0;
    }
    let un = &state.u.components()[cfg.buoyancy_dir()];
    2.0 * state.theta.inner(un)
}

/// Content outside the dealias-safe region below this fraction of the
/// largest coefficient is treated as rounding noise and dropped.
const DEALIAS_NOISE: f64 = 1e-13;

fn dealias_safe(f: &SpectralScalar, what: &str) -> Result<SpectralScalar> {
    let g = f.grid();
    let floor = DEALIAS_NOISE * f.max_abs_coeff();
    let bad = f
        .coeffs()
        .iter()
        .enumerate()
        .any(|(i, c)| !g.dealias_keep(i) && c.norm() > floor);
    if bad {
        return Err(Error::Contract(format!(
            "{what} has modes outside the dealias-safe region 3|k_i| < N"
        )));
    }
    Ok(dealias(f))
}

/// `[J^s, f]∇g = J^s((f·∇)g) − (f·∇)(J^s g)` with both products dealiased.
///
/// `f` need not be solenoidal. A vector `g` is handled componentwise.
pub fn commutator_js(f: &SpectralVector, g: &Field, s: f64) -> Result<Field> {
    let grid = f.grid();
    let f = SpectralVector::from_parts(
        f.components()
            .iter()
            .map(|c| dealias_safe(c, "f"))
            .collect::<Result<Vec<_>>>()?,
        false,
    );
    let g_comps = g
        .components()
        .iter()
        .map(|c| {
            if c.grid() != grid {
                return Err(Error::Config("commutator operands on different grids".into()));
            }
            dealias_safe(c, "g")
        })
        .collect::<Result<Vec<_>>>()?;
    let rf = Rendered::new(&f);
    let one = |c: &SpectralScalar| -> Result<SpectralScalar> {
        let plain = finish(grid, transport_product(&rf, &rendered_gradient(c)), None)?;
        let lifted = bessel_potential(c, s);
        let inner = finish(grid, transport_product(&rf, &rendered_gradient(&lifted)), None)?;
        Ok(bessel_potential(&plain, s).sub(&inner))
    };
    match g {
        Field::Scalar(_) => one(&g_comps[0]).map(Field::Scalar),
        Field::Vector(_) => Ok(Field::Vector(SpectralVector::from_parts(
            g_comps.iter().map(one).collect::<Result<Vec<_>>>()?,
            false,
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{sample, truncate_vector};
    use rustfft::num_complex::Complex64;

    fn cfg2(n: usize, r: f64) -> SimConfig {
        SimConfig::new(Grid::new(2, n).unwrap(), r, 2.5, 1.0).unwrap()
    }

    #[test]
    fn config_validation() {
        let g = Grid::new(2, 64).unwrap();
        assert!(SimConfig::new(g, 21.0, 2.5, 1.0).is_ok());
        assert!(matches!(SimConfig::new(g, 22.0, 2.5, 1.0), Err(Error::Config(_))));
        assert!(matches!(SimConfig::new(g, 10.0, 2.0, 1.0), Err(Error::Config(_))));
        assert!(SimConfig::new(Grid::new(3, 16).unwrap(), 5.0, 2.5, 1.0).is_err());
        assert!(SimConfig::new(Grid::new(3, 16).unwrap(), 5.0, 2.6, 1.0).is_ok());
        let c = SimConfig::new(g, 10.0, 2.5, 1.0).unwrap();
        assert!(c.with_dt(DtPolicy::Fixed { dt: 0.0 }).is_err());
    }

    #[test]
    fn zero_velocity_gives_zero_transport() {
        let cfg = cfg2(16, 5.0);
        let g = sample(cfg.grid, |x| x[0].sin() * x[1].cos()).unwrap();
        let out = advect_scalar(&SpectralVector::zeros(cfg.grid), &g, &cfg).unwrap();
        assert_eq!(out.max_abs_coeff(), 0.0);
    }

    #[test]
    fn constant_velocity_is_pure_phase() {
        let cfg = cfg2(16, 5.0);
        let grid = cfg.grid;
        let c = [0.7, -1.3];
        let vx = sample(grid, |_| c[0]).unwrap();
        let vy = sample(grid, |_| c[1]).unwrap();
        let v = SpectralVector::new(vec![vx, vy]).unwrap();
        let mut g = SpectralScalar::zeros(grid);
        g.set_mode(&[2, -1], Complex64::new(0.4, 0.1)).unwrap();
        let out = advect_scalar(&v, &g, &cfg).unwrap();
        let ck = c[0] * 2.0 - c[1];
        let expect = Complex64::new(0.0, ck) * Complex64::new(0.4, 0.1);
        assert!((out.coeff(&[2, -1]) - expect).norm() < 1e-14);
    }

    #[test]
    fn non_solenoidal_transport_rejected() {
        let cfg = cfg2(16, 5.0);
        let grid = cfg.grid;
        let vx = sample(grid, |x| x[0].sin()).unwrap();
        let v = SpectralVector::new(vec![vx, SpectralScalar::zeros(grid)]).unwrap();
        let g = SpectralScalar::zeros(grid);
        assert!(matches!(advect_scalar(&v, &g, &cfg), Err(Error::Contract(_))));
    }

    #[test]
    fn pure_buoyancy_state() {
        let cfg = cfg2(16, 5.0);
        let grid = cfg.grid;
        let theta = truncate(&sample(grid, |x| x[0].cos() + (x[0] + x[1]).sin()).unwrap(), 5.0).unwrap();
        let state = State {
            theta: theta.clone(),
            ..State::zeros(grid)
        };
        let k = rhs(&state, &cfg).unwrap();
        assert_eq!(k.dtheta.max_abs_coeff(), 0.0);
        assert_eq!(k.db.components()[0].max_abs_coeff(), 0.0);
        let expect = leray_project(
            &SpectralVector::new(vec![SpectralScalar::zeros(grid), theta]).unwrap(),
        );
        for (a, b) in k.du.components().iter().zip(expect.components()) {
            assert!(a.sub(b).max_abs_coeff() < 1e-15);
        }
    }

    #[test]
    fn passive_coupling_reduces_to_euler() {
        let cfg = cfg2(16, 5.0).with_coupling(Coupling::Passive);
        let grid = cfg.grid;
        let u = leray_project(
            &truncate_vector(
                &SpectralVector::new(vec![
                    sample(grid, |x| (x[1] + 0.3).sin() + (2.0 * x[0]).cos() * x[1].sin()).unwrap(),
                    sample(grid, |x| x[0].cos() * (x[0] - x[1]).sin()).unwrap(),
                ])
                .unwrap(),
                5.0,
            )
            .unwrap(),
        );
        let state = State { u, ..State::zeros(grid) };
        let k = rhs(&state, &cfg).unwrap();
        assert_eq!(k.dtheta.max_abs_coeff(), 0.0);
        assert_eq!(k.db.components()[1].max_abs_coeff(), 0.0);
        assert!(k.du.components()[0].max_abs_coeff() > 0.0);
        // with coupling the same state feeds temperature through u·e_n
        let k = rhs(&state, &cfg2(16, 5.0)).unwrap();
        assert!(k.dtheta.max_abs_coeff() > 0.0);
    }

    #[test]
    fn commutator_vanishes_for_constant_f_and_s_zero() {
        let grid = Grid::new(2, 16).unwrap();
        let f = SpectralVector::new(vec![
            sample(grid, |_| 0.3).unwrap(),
            sample(grid, |_| -2.0).unwrap(),
        ])
        .unwrap();
        let g = Field::Scalar(sample(grid, |x| (2.0 * x[0]).sin() * x[1].cos()).unwrap());
        let c = commutator_js(&f, &g, 2.5).unwrap();
        assert!(c.components()[0].max_abs_coeff() < 1e-13);
        let f2 = SpectralVector::new(vec![
            sample(grid, |x| x[1].sin()).unwrap(),
            sample(grid, |x| x[0].cos()).unwrap(),
        ])
        .unwrap();
        let c0 = commutator_js(&f2, &g, 0.0).unwrap();
        assert_eq!(c0.components()[0].max_abs_coeff(), 0.0);
    }

    #[test]
    fn commutator_rejects_unsafe_support() {
        let grid = Grid::new(2, 8).unwrap();
        let mut g = SpectralScalar::zeros(grid);
        g.set_mode(&[3, 0], Complex64::new(1.0, 0.0)).unwrap();
        let f = SpectralVector::zeros(grid);
        assert!(matches!(
            commutator_js(&f, &Field::Scalar(g), 1.0),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn digest_changes_with_time() {
        let s = State::zeros(Grid::new(2, 8).unwrap());
        let mut s2 = s.clone();
        s2.t = 1.0;
        assert_ne!(s.digest(), s2.digest());
        assert_eq!(s.digest(), s.clone().digest());
    }
}
