//! Energy functionals and bounds, blow-up integrals, run monitoring and
//! inequality probes.

mod csv;
pub mod probes;

pub use csv::{parse_csv, CsvWriter, CSV_HEADER};

use serde::{Deserialize, Serialize};

use crate::dynamics::{buoyancy_exchange, rhs, SimConfig, State};
use crate::error::{Error, Result};
use crate::spectral::{
    curl, gradient, norms, partial, Components, NormFlavor, NormTriple, SpectralScalar,
    SpectralVector,
};

/// `Y = ‖u‖² + ‖θ‖² + ‖b‖²` and `X` the same in `H^s`.
pub fn energy_functionals(state: &State, s: f64) -> (f64, f64) {
    let y = state.u.l2_sq() + state.theta.l2_sq() + state.b.l2_sq();
    let x = norms::weighted_sq(state.u.components(), s)
        + norms::weighted_sq(state.theta.components(), s)
        + norms::weighted_sq(state.b.components(), s);
    (y, x)
}

/// `(du,u) + (dθ,θ) + (db,b) − (θe_n,u) − (u·e_n,θ)`.
pub fn energy_identity_residual(state: &State, cfg: &SimConfig) -> Result<f64> {
    let k = rhs(state, cfg)?;
    Ok(k.pair(state) - buoyancy_exchange(state, cfg))
}

/// Allowance on top of `e^{2t}` in [`l2_growth_bound_check`].
pub const L2_GROWTH_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthVerdict {
    pub pass: bool,
    /// `max_t Y(t) / (Y(0) e^{2t}) − 1`; negative means slack.
    pub worst_margin: f64,
    pub samples: usize,
}

/// Checks `Y(t) ≤ Y(0) e^{2(t−t₀)} (1 + tol)` on `(t, Y)` samples.
pub fn l2_growth_bound_check(samples: &[(f64, f64)], tol: f64) -> Result<GrowthVerdict> {
    let Some(&(t0, y0)) = samples.first() else {
        return Err(Error::Usage("growth check needs at least one sample".into()));
    };
    let mut growth = GrowthTracker::new(t0, y0);
    for &(t, y) in samples {
        growth.push(t, y);
    }
    Ok(growth.verdict(tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct GrowthTracker {
    t0: f64,
    y0: f64,
    worst: f64,
    violated_at_zero: bool,
    samples: usize,
}

impl GrowthTracker {
    fn new(t0: f64, y0: f64) -> Self {
        Self {
            t0,
            y0,
            worst: f64::MIN,
            violated_at_zero: false,
            samples: 0,
        }
    }

    fn push(&mut self, t: f64, y: f64) {
        self.samples += 1;
        if self.y0 == 0.0 {
            if y > 0.0 {
                self.violated_at_zero = true;
            }
            self.worst = self.worst.max(0.0);
            return;
        }
        let margin = y / (self.y0 * (2.0 * (t - self.t0)).exp()) - 1.0;
        self.worst = self.worst.max(margin);
    }

    fn verdict(&self, tol: f64) -> GrowthVerdict {
        GrowthVerdict {
            pass: !self.violated_at_zero && self.worst <= tol,
            worst_margin: self.worst,
            samples: self.samples,
        }
    }
}

/// Outcome of the Bihari comparison bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BihariBound {
    Finite(f64),
    Blown,
}

/// `((3/2)C² + X₀) / (1 − ((3/2)C² + X₀)((3/2) + C) t)`, or `Blown` once the
/// denominator is no longer positive.
pub fn bihari_bound(x0: f64, c: f64, t: f64) -> Result<BihariBound> {
    if !(t >= 0.0) {
        return Err(Error::Usage(format!("time must be ≥ 0, got {t}")));
    }
    if !(x0 >= 0.0) || !(c > 0.0) {
        return Err(Error::Usage(format!(
            "need X0 ≥ 0 and C > 0, got X0 = {x0}, C = {c}"
        )));
    }
    let a = 1.5 * c * c + x0;
    let denom = 1.0 - a * (1.5 + c) * t;
    Ok(if denom > 0.0 {
        BihariBound::Finite(a / denom)
    } else {
        BihariBound::Blown
    })
}

/// Norm triples of vorticity, current and temperature gradient.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BkmIntegrands {
    pub vorticity: NormTriple,
    pub current: NormTriple,
    pub grad_theta: NormTriple,
}

impl BkmIntegrands {
    /// `‖∇×u‖ + ‖∇θ‖ + ‖∇×b‖` per flavor.
    pub fn full(&self) -> [f64; 3] {
        NormFlavor::ALL.map(|f| self.vorticity.get(f) + self.grad_theta.get(f) + self.current.get(f))
    }

    /// `‖∇×u‖ + ‖∇×b‖` per flavor.
    pub fn relaxed(&self) -> [f64; 3] {
        NormFlavor::ALL.map(|f| self.vorticity.get(f) + self.current.get(f))
    }
}

pub fn bkm_integrands(state: &State) -> BkmIntegrands {
    let (vorticity, (current, grad_theta)) = rayon::join(
        || NormTriple::of(&curl(&state.u)),
        || {
            rayon::join(
                || NormTriple::of(&curl(&state.b)),
                || NormTriple::of(&gradient(&state.theta)),
            )
        },
    );
    BkmIntegrands {
        vorticity,
        current,
        grad_theta,
    }
}

/// `max_x |∇v(x)|` with the Frobenius norm of the Jacobian.
pub fn jacobian_linf(v: &SpectralVector) -> f64 {
    let dim = v.grid().dim();
    let entries: Vec<SpectralScalar> = v
        .components()
        .iter()
        .flat_map(|c| (0..dim).map(move |a| partial(c, a)))
        .collect();
    norms::linf_phys(&norms::render(&entries))
}

/// Trapezoidal integral of a sampled scalar.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Trapezoid {
    last: Option<(f64, f64)>,
    pub integral: f64,
}

impl Trapezoid {
    pub fn push(&mut self, t: f64, v: f64) -> Result<()> {
        if let Some((tp, vp)) = self.last {
            if !(t > tp) {
                return Err(Error::Usage(format!(
                    "sample time {t} does not advance past {tp}"
                )));
            }
            self.integral += 0.5 * (t - tp) * (v + vp);
        }
        self.last = Some((t, v));
        Ok(())
    }

    pub fn last_time(&self) -> Option<f64> {
        self.last.map(|(t, _)| t)
    }
}

/// Time integrals of the blow-up integrands for all three flavors plus
/// `∫‖∇u‖∞`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BkmAccumulator {
    pub full: [Trapezoid; 3],
    pub relaxed: [Trapezoid; 3],
    pub grad_u: Trapezoid,
}

impl BkmAccumulator {
    pub fn full_integrals(&self) -> [f64; 3] {
        self.full.map(|q| q.integral)
    }

    pub fn relaxed_integrals(&self) -> [f64; 3] {
        self.relaxed.map(|q| q.integral)
    }
}

/// Trapezoidal update with a new sample at time `t`.
pub fn bkm_accumulate(
    acc: &BkmAccumulator,
    t: f64,
    sample: &BkmIntegrands,
    grad_u_linf: f64,
) -> Result<BkmAccumulator> {
    let mut next = *acc;
    let full = sample.full();
    let relaxed = sample.relaxed();
    for i in 0..3 {
        next.full[i].push(t, full[i])?;
        next.relaxed[i].push(t, relaxed[i])?;
    }
    next.grad_u.push(t, grad_u_linf)?;
    Ok(next)
}

/// Largest admissible bootstrap constant.
pub const BOOTSTRAP_K_MAX: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapVerdict {
    pub pass: bool,
    /// Smallest `K` with `‖∇θ(t)‖∞ ≤ K ‖∇θ₀‖∞ exp(∫‖∇u‖∞)` on all samples;
    /// `None` when `∇θ₀ = 0` but `∇θ` later became nonzero.
    pub k_fit: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
struct BootstrapTracker {
    initial: Option<f64>,
    k: f64,
    unbounded: bool,
}

impl BootstrapTracker {
    fn push(&mut self, grad_theta_linf: f64, grad_u_integral: f64) {
        let g0 = *self.initial.get_or_insert(grad_theta_linf);
        if g0 == 0.0 {
            if grad_theta_linf > 0.0 {
                self.unbounded = true;
            } else {
                self.k = self.k.max(1.0);
            }
            return;
        }
        self.k = self.k.max(grad_theta_linf / (g0 * grad_u_integral.exp()));
    }

    fn verdict(&self) -> BootstrapVerdict {
        if self.unbounded {
            return BootstrapVerdict { pass: false, k_fit: None };
        }
        BootstrapVerdict {
            pass: self.k < BOOTSTRAP_K_MAX,
            k_fit: Some(self.k),
        }
    }
}

/// Fits the bootstrap constant over `(‖∇θ‖∞, ∫‖∇u‖∞)` samples.
pub fn gradtheta_bootstrap_check(records: &[DiagRecord]) -> Result<BootstrapVerdict> {
    if records.is_empty() {
        return Err(Error::Usage("bootstrap check needs at least one sample".into()));
    }
    let mut tr = BootstrapTracker::default();
    for r in records {
        tr.push(r.grad_theta.linf, r.grad_u_integral);
    }
    Ok(tr.verdict())
}

/// One diagnostic sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagRecord {
    pub step: u64,
    pub t: f64,
    pub y: f64,
    pub x: f64,
    pub vorticity: NormTriple,
    pub current: NormTriple,
    pub grad_theta: NormTriple,
    pub grad_u_linf: f64,
    /// Accumulated full integrals, indexed by [`NormFlavor::index`].
    pub bkm_full: [f64; 3],
    pub bkm_relaxed: [f64; 3],
    pub grad_u_integral: f64,
    pub energy_residual: f64,
    pub div_u: f64,
    pub div_b: f64,
}

impl DiagRecord {
    pub fn is_finite(&self) -> bool {
        let triples = [self.vorticity, self.current, self.grad_theta]
            .iter()
            .all(|n| n.linf.is_finite() && n.besov.is_finite() && n.bmo.is_finite());
        triples
            && [self.t, self.y, self.x, self.grad_u_linf, self.grad_u_integral, self.energy_residual]
                .iter()
                .chain(&self.bkm_full)
                .chain(&self.bkm_relaxed)
                .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BkmVerdict {
    pub flavor: NormFlavor,
    pub full: f64,
    pub relaxed: f64,
    pub finite: bool,
    pub monotone: bool,
    pub relaxed_below_full: bool,
}

/// Run-level verdicts maintained by [`Monitor`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    pub samples: usize,
    pub l2_growth: GrowthVerdict,
    pub bootstrap: BootstrapVerdict,
    pub bkm: BkmVerdict,
    /// `max |residual| / X` over samples.
    pub max_energy_residual_rel: f64,
    pub max_divergence_ratio: f64,
    /// Largest `BMO / L∞` over all sampled fields.
    pub max_bmo_over_linf: f64,
}

/// Serializable monitor state; restoring it continues accumulation exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorState {
    s: f64,
    flavor: NormFlavor,
    acc: BkmAccumulator,
    growth: Option<GrowthTracker>,
    bootstrap: BootstrapTracker,
    reference_hs: Option<f64>,
    reference_x: Option<f64>,
    samples: usize,
    monotone: bool,
    relaxed_below_full: bool,
    finite: bool,
    max_residual_rel: f64,
    max_div: f64,
    max_bmo_ratio: f64,
}

/// Streams samples of a trajectory into records and verdicts.
#[derive(Debug, Clone, PartialEq)]
pub struct Monitor {
    st: MonitorState,
}

impl Monitor {
    pub fn new(s: f64, flavor: NormFlavor) -> Self {
        Self {
            st: MonitorState {
                s,
                flavor,
                acc: BkmAccumulator::default(),
                growth: None,
                bootstrap: BootstrapTracker::default(),
                reference_hs: None,
                reference_x: None,
                samples: 0,
                monotone: true,
                relaxed_below_full: true,
                finite: true,
                max_residual_rel: 0.0,
                max_div: 0.0,
                max_bmo_ratio: 0.0,
            },
        }
    }

    pub fn restore(state: MonitorState) -> Self {
        Self { st: state }
    }

    pub fn snapshot(&self) -> MonitorState {
        self.st.clone()
    }

    pub fn flavor(&self) -> NormFlavor {
        self.st.flavor
    }

    /// `‖u‖_{H^s}` at the first sample.
    pub fn reference_velocity_hs(&self) -> Option<f64> {
        self.st.reference_hs
    }

    /// `X` at the first sample.
    pub fn reference_x(&self) -> Option<f64> {
        self.st.reference_x
    }

    pub fn sample(&mut self, state: &State, cfg: &SimConfig, step: u64) -> Result<DiagRecord> {
        let s = self.st.s;
        let ((y, x), (integrands, (grad_u, residual))) = rayon::join(
            || energy_functionals(state, s),
            || {
                rayon::join(
                    || bkm_integrands(state),
                    || {
                        rayon::join(
                            || jacobian_linf(&state.u),
                            || energy_identity_residual(state, cfg),
                        )
                    },
                )
            },
        );
        let residual = residual?;
        let acc = bkm_accumulate(&self.st.acc, state.t, &integrands, grad_u)?;

        let st = &mut self.st;
        let prev_full = st.acc.full_integrals();
        let prev_relaxed = st.acc.relaxed_integrals();
        st.acc = acc;
        let full = acc.full_integrals();
        let relaxed = acc.relaxed_integrals();
        for i in 0..3 {
            st.monotone &= full[i] >= prev_full[i] && relaxed[i] >= prev_relaxed[i];
            st.relaxed_below_full &= relaxed[i] <= full[i];
        }
        if st.reference_hs.is_none() {
            st.reference_hs = Some(norms::weighted_sq(state.u.components(), s).sqrt());
            st.reference_x = Some(x);
        }
        st.growth.get_or_insert(GrowthTracker::new(state.t, y)).push(state.t, y);
        st.bootstrap.push(integrands.grad_theta.linf, acc.grad_u.integral);
        st.samples += 1;
        if x > 0.0 {
            st.max_residual_rel = st.max_residual_rel.max(residual.abs() / x);
        }
        let (div_u, div_b) = (state.u.divergence_ratio(), state.b.divergence_ratio());
        st.max_div = st.max_div.max(div_u).max(div_b);
        for n in [integrands.vorticity, integrands.current, integrands.grad_theta] {
            if n.linf > 0.0 {
                st.max_bmo_ratio = st.max_bmo_ratio.max(n.bmo / n.linf);
            }
        }

        let rec = DiagRecord {
            step,
            t: state.t,
            y,
            x,
            vorticity: integrands.vorticity,
            current: integrands.current,
            grad_theta: integrands.grad_theta,
            grad_u_linf: grad_u,
            bkm_full: full,
            bkm_relaxed: relaxed,
            grad_u_integral: acc.grad_u.integral,
            energy_residual: residual,
            div_u,
            div_b,
        };
        st.finite &= rec.is_finite();
        Ok(rec)
    }

    pub fn verdicts(&self) -> Verdicts {
        let st = &self.st;
        let i = st.flavor.index();
        Verdicts {
            samples: st.samples,
            l2_growth: st
                .growth
                .map(|g| g.verdict(L2_GROWTH_TOL))
                .unwrap_or(GrowthVerdict { pass: true, worst_margin: 0.0, samples: 0 }),
            bootstrap: st.bootstrap.verdict(),
            bkm: BkmVerdict {
                flavor: st.flavor,
                full: st.acc.full[i].integral,
                relaxed: st.acc.relaxed[i].integral,
                finite: st.finite,
                monotone: st.monotone,
                relaxed_below_full: st.relaxed_below_full,
            },
            max_energy_residual_rel: st.max_residual_rel,
            max_divergence_ratio: st.max_div,
            max_bmo_over_linf: st.max_bmo_ratio,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::{make_initial, InitialSpec};
    use crate::spectral::{sample, Grid};
    use rustfft::num_complex::Complex64;

    #[test]
    fn bihari_examples() {
        assert_eq!(bihari_bound(1.0, 1.0, 0.0).unwrap(), BihariBound::Finite(2.5));
        match bihari_bound(1.0, 1.0, 0.1).unwrap() {
            BihariBound::Finite(v) => assert!((v - 2.5 / 0.375).abs() < 1e-14),
            BihariBound::Blown => panic!(),
        }
        let pole = 1.0 / (2.5 * 2.5);
        assert_eq!(bihari_bound(1.0, 1.0, pole).unwrap(), BihariBound::Blown);
        assert!(matches!(bihari_bound(1.0, 1.0, -1.0), Err(Error::Usage(_))));
    }

    #[test]
    fn trapezoid_constant_and_regression() {
        let mut q = Trapezoid::default();
        q.push(1.0, 3.0).unwrap();
        q.push(1.25, 3.0).unwrap();
        assert_eq!(q.integral, 0.75);
        assert!(matches!(q.push(1.25, 3.0), Err(Error::Usage(_))));
    }

    #[test]
    fn single_mode_energies() {
        let g = Grid::new(2, 16).unwrap();
        let mut st = State::zeros(g);
        let mut c = SpectralScalar::zeros(g);
        c.set_mode(&[0, 2], Complex64::new(0.5, 0.0)).unwrap();
        st.u = SpectralVector::new(vec![c, SpectralScalar::zeros(g)]).unwrap().certify();
        let (y, x) = energy_functionals(&st, 3.0);
        assert_eq!(y, 2.0 * 0.25);
        assert!((x - y * 125.0).abs() < 1e-13);
    }

    #[test]
    fn taylor_green_vorticity_max() {
        let cfg = SimConfig::new(Grid::new(2, 16).unwrap(), 5.0, 2.5, 0.1).unwrap();
        let st = make_initial(&InitialSpec::taylor_green(), &cfg).unwrap();
        let n = bkm_integrands(&st);
        assert!((n.vorticity.linf - 2.0).abs() < 1e-13);
        assert_eq!(n.grad_theta, NormTriple::default());
    }

    #[test]
    fn gradient_field_has_no_vorticity() {
        let g = Grid::new(2, 16).unwrap();
        let phi = sample(g, |x| (2.0 * x[0]).sin() * x[1].cos()).unwrap();
        let mut st = State::zeros(g);
        st.u = gradient(&phi);
        let n = bkm_integrands(&st);
        assert!(n.vorticity.linf < 1e-14);
    }

    #[test]
    fn bootstrap_zero_gradient() {
        let mut tr = BootstrapTracker::default();
        tr.push(0.0, 0.0);
        tr.push(0.0, 1.0);
        assert_eq!(tr.verdict(), BootstrapVerdict { pass: true, k_fit: Some(1.0) });
        tr.push(1e-3, 1.0);
        assert!(!tr.verdict().pass);
    }

    #[test]
    fn growth_single_sample_passes() {
        let v = l2_growth_bound_check(&[(0.0, 2.0)], L2_GROWTH_TOL).unwrap();
        assert!(v.pass);
        assert!(l2_growth_bound_check(&[], L2_GROWTH_TOL).is_err());
    }
}
