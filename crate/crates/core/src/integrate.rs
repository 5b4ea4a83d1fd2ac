//! Initial data, RK4 stepping, CFL control and the run loop.

use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{DiagRecord, Monitor, MonitorState, Verdicts};
use crate::dynamics::{rhs, DtPolicy, SimConfig, State, Tendency};
use crate::error::{Error, Result};
use crate::spectral::{
    leray_project, norm, norms, truncate, truncate_vector, Checkpoint, Grid, NormFlavor,
    NormSpec, SpectralScalar, SpectralVector,
};

/// Relative growth of `‖u‖_{H^s}` treated as numerical blow-up.
pub const RUNAWAY_FACTOR: f64 = 1e6;
const CFL_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitKind {
    /// `u = A (sin x cos y, −cos x sin y)` in 2D, or
    /// `A (sin x cos y cos z, −cos x sin y cos z, 0)` in 3D.
    TaylorGreen { amplitude: f64 },
    /// Random solenoidal velocity with spectrum `|k|^{-a}`, scaled so the
    /// untruncated datum has `‖u₀‖_{H^s} = hs_target`.
    RandomBand { hs_target: f64 },
    FromCheckpoint { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialSpec {
    pub kind: InitKind,
    /// `‖θ₀‖_{L²}` of the random temperature perturbation.
    pub theta_amplitude: f64,
    /// `‖b₀‖_{L²}` of the random magnetic perturbation.
    pub b_amplitude: f64,
    pub seed: u64,
    /// Spectral decay exponent `a` of synthesized fields.
    pub spectrum_exponent: f64,
    /// Cutoff radius of synthesized spectra; `None` means the dealias limit.
    pub band_radius: Option<f64>,
}

impl InitialSpec {
    pub fn taylor_green() -> Self {
        Self {
            kind: InitKind::TaylorGreen { amplitude: 1.0 },
            theta_amplitude: 0.0,
            b_amplitude: 0.0,
            seed: 0,
            spectrum_exponent: 4.0,
            band_radius: None,
        }
    }

    pub fn random_band(hs_target: f64, seed: u64) -> Self {
        Self {
            kind: InitKind::RandomBand { hs_target },
            seed,
            ..Self::taylor_green()
        }
    }

    pub fn with_perturbations(mut self, theta: f64, b: f64) -> Self {
        self.theta_amplitude = theta;
        self.b_amplitude = b;
        self
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Representative modes of `{k : 0 < |k| ≤ radius}` in a grid-independent
/// order: lexicographic over the box `[-K, K]^dim`, first nonzero entry
/// positive.
fn band_modes(dim: usize, radius: f64) -> Vec<Vec<i64>> {
    let kk = radius.floor() as i64;
    let side = (2 * kk + 1) as usize;
    let total = side.pow(dim as u32);
    let mut out = Vec::new();
    for flat in 0..total {
        let mut r = flat;
        let mut k = vec![0i64; dim];
        for a in (0..dim).rev() {
            k[a] = (r % side) as i64 - kk;
            r /= side;
        }
        let first = k.iter().copied().find(|&x| x != 0);
        let k2: i64 = k.iter().map(|x| x * x).sum();
        if matches!(first, Some(f) if f > 0) && (k2 as f64) <= radius * radius {
            out.push(k);
        }
    }
    out
}

fn band_field(grid: Grid, exponent: f64, radius: f64, rng: &mut ChaCha8Rng) -> SpectralScalar {
    let mut f = SpectralScalar::zeros(grid);
    for k in band_modes(grid.dim(), radius) {
        // always draw so the sequence does not depend on the grid
        let phase: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
        let k2: i64 = k.iter().map(|x| x * x).sum();
        let amp = (k2 as f64).powf(-0.5 * exponent);
        if let Some(idx) = grid.index_of(&k) {
            if !grid.is_oddball(idx) {
                f.set_mode(&k, Complex64::from_polar(amp, phase)).unwrap();
            }
        }
    }
    f
}

/// Mean-zero random scalar with spectrum `|k|^{-a}` on `0 < |k| ≤ radius`.
pub fn random_band_scalar(grid: Grid, exponent: f64, radius: f64, seed: u64, stream: u64) -> SpectralScalar {
    band_field(grid, exponent, radius, &mut rng_for(seed, stream))
}

/// Mean-zero random solenoidal vector with spectrum `|k|^{-a}`.
pub fn random_band_vector(grid: Grid, exponent: f64, radius: f64, seed: u64, stream: u64) -> SpectralVector {
    let mut rng = rng_for(seed, stream);
    let comps = (0..grid.dim())
        .map(|_| band_field(grid, exponent, radius, &mut rng))
        .collect();
    leray_project(&SpectralVector::new(comps).unwrap())
}

/// Random vector without projection, for probes that do not need
/// solenoidality.
pub fn random_band_vector_free(grid: Grid, exponent: f64, radius: f64, seed: u64, stream: u64) -> SpectralVector {
    let mut rng = rng_for(seed, stream);
    let comps = (0..grid.dim())
        .map(|_| band_field(grid, exponent, radius, &mut rng))
        .collect();
    SpectralVector::new(comps).unwrap()
}

fn rescale_to<F: Fn(&SpectralVector) -> f64>(v: SpectralVector, target: f64, measure: F) -> Result<SpectralVector> {
    if target == 0.0 {
        return Ok(SpectralVector::zeros(v.grid()));
    }
    let current = measure(&v);
    if !(current > 0.0) {
        return Err(Error::Config(
            "norm target unreachable: synthesized spectrum is empty".into(),
        ));
    }
    Ok(v.scale(target / current))
}

/// Taylor–Green velocity assembled from its exact Fourier coefficients, so
/// the divergence vanishes identically.
fn taylor_green(grid: Grid, amplitude: f64) -> Result<SpectralVector> {
    let dim = grid.dim();
    let mut u0 = SpectralScalar::zeros(grid);
    let mut u1 = SpectralScalar::zeros(grid);
    let q = amplitude / (1u32 << dim) as f64;
    // sin x ∏cos = Σ_{±} (a / 2^dim i) e^{i k·x} with a = k_0, and similarly
    // for −cos x sin y ∏cos with b = k_1
    for flat in 0..(1usize << dim) {
        let k: Vec<i64> = (0..dim).map(|a| if flat >> a & 1 == 1 { -1 } else { 1 }).collect();
        if k[0] < 0 {
            continue;
        }
        u0.set_mode(&k, Complex64::new(0.0, -q * k[0] as f64))?;
        u1.set_mode(&k, Complex64::new(0.0, q * k[1] as f64))?;
    }
    let mut comps = vec![u0, u1];
    if dim == 3 {
        comps.push(SpectralScalar::zeros(grid));
    }
    Ok(SpectralVector::new(comps)?.certify())
}

/// Untruncated initial datum `(u₀, θ₀, b₀)`.
pub fn initial_datum(spec: &InitialSpec, cfg: &SimConfig) -> Result<State> {
    let grid = cfg.grid;
    let band = spec
        .band_radius
        .unwrap_or(grid.dealias_kmax() as f64);
    if !(band > 0.0) {
        return Err(Error::Config(format!("band radius must be positive, got {band}")));
    }
    let a = spec.spectrum_exponent;
    let u = match &spec.kind {
        InitKind::TaylorGreen { amplitude } => taylor_green(grid, *amplitude)?,
        InitKind::RandomBand { hs_target } => {
            if !(*hs_target >= 0.0) {
                return Err(Error::Config(format!("H^s target must be ≥ 0, got {hs_target}")));
            }
            let raw = random_band_vector(grid, a, band, spec.seed, 0);
            let s = cfg.sobolev_s;
            rescale_to(raw, *hs_target, |v| norm(v, NormSpec::Hs(s)).unwrap())?
        }
        InitKind::FromCheckpoint { path } => {
            let ck = Checkpoint::read(path)?;
            return state_from_checkpoint(&ck, cfg);
        }
    };
    let theta = {
        let raw = random_band_scalar(grid, a, band, spec.seed, 1);
        if spec.theta_amplitude == 0.0 {
            SpectralScalar::zeros(grid)
        } else {
            let l2 = raw.l2_sq().sqrt();
            if !(l2 > 0.0) {
                return Err(Error::Config(
                    "norm target unreachable: synthesized spectrum is empty".into(),
                ));
            }
            raw.scale(spec.theta_amplitude / l2)
        }
    };
    let b = rescale_to(random_band_vector(grid, a, band, spec.seed, 2), spec.b_amplitude, |v| {
        v.l2_sq().sqrt()
    })?;
    Ok(State { u, theta, b, t: 0.0 })
}

/// Initial state `(S_R u₀, S_R θ₀, S_R b₀)`, Leray-projected.
pub fn make_initial(spec: &InitialSpec, cfg: &SimConfig) -> Result<State> {
    cfg.validate()?;
    if let InitKind::FromCheckpoint { path } = &spec.kind {
        let ck = Checkpoint::read(path)?;
        return state_from_checkpoint(&ck, cfg);
    }
    let datum = initial_datum(spec, cfg)?;
    truncate_state(&datum, cfg.radius)
}

/// Applies `S_R` and the Leray projector to every field.
pub fn truncate_state(state: &State, radius: f64) -> Result<State> {
    Ok(State {
        u: leray_project(&truncate_vector(&state.u, radius)?),
        theta: truncate(&state.theta, radius)?,
        b: leray_project(&truncate_vector(&state.b, radius)?),
        t: state.t,
    })
}

pub fn state_from_checkpoint(ck: &Checkpoint, cfg: &SimConfig) -> Result<State> {
    let grid = ck.grid()?;
    if grid != cfg.grid {
        return Err(Error::Config(format!(
            "checkpoint grid {}^{} does not match configured {}^{}",
            grid.n(),
            grid.dim(),
            cfg.grid.n(),
            cfg.grid.dim()
        )));
    }
    let state = State::from_named_fields(grid, ck.time(), |name| ck.field(name).cloned())?;
    state.check_invariants(cfg)?;
    Ok(state)
}

/// One classical RK4 step of `dX/dt = f(X)`.
pub fn rk4_step_with<F>(state: &State, dt: f64, f: F) -> Result<State>
where
    F: Fn(&State) -> Result<Tendency>,
{
    let k1 = f(state)?;
    let k2 = f(&state.advance(0.5 * dt, &k1))?;
    let k3 = f(&state.advance(0.5 * dt, &k2))?;
    let k4 = f(&state.advance(dt, &k3))?;
    let mut next = state
        .advance(dt / 6.0, &k1)
        .advance(dt / 3.0, &k2)
        .advance(dt / 3.0, &k3)
        .advance(dt / 6.0, &k4);
    next.t = state.t + dt;
    Ok(next)
}

/// RK4 step of the truncated system with post-step certification.
pub fn step_rk4(state: &State, dt: f64, cfg: &SimConfig) -> Result<State> {
    if !(dt > 0.0) {
        return Err(Error::Usage(format!("time step must be positive, got {dt}")));
    }
    let next = rk4_step_with(state, dt, |s| rhs(s, cfg)).map_err(|e| match e {
        Error::Contract(reason) => Error::Instability { t: state.t, reason },
        other => other,
    })?;
    if !next.is_finite() {
        return Err(Error::Instability {
            t: next.t,
            reason: "non-finite coefficient".into(),
        });
    }
    let next = State {
        u: next.u.certify(),
        b: next.b.certify(),
        ..next
    };
    if !next.u.is_certified() || !next.b.is_certified() {
        return Err(Error::Instability {
            t: next.t,
            reason: "divergence certificate lost".into(),
        });
    }
    Ok(next)
}

/// `max_x (|u(x)| + |b(x)|)` on the grid.
pub fn max_speed(state: &State) -> f64 {
    let mu = norms::magnitude(&norms::render(state.u.components()));
    let mb = norms::magnitude(&norms::render(state.b.components()));
    mu.iter().zip(&mb).map(|(a, b)| a + b).fold(0.0, f64::max)
}

/// `min(dt_max, c_max Δx / (V + ε₀))`; for a fixed policy returns its `dt`.
pub fn cfl_dt(state: &State, cfg: &SimConfig) -> f64 {
    match cfg.dt_policy {
        DtPolicy::Fixed { dt } => dt,
        DtPolicy::Cfl { c_max, dt_max } => {
            let v = max_speed(state);
            dt_max.min(c_max * cfg.grid.spacing() / (v + CFL_EPS))
        }
    }
}

/// One entry per accepted step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub t: f64,
    pub dt: f64,
    pub state_hash: String,
    pub cfl_speed: f64,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub sim: SimConfig,
    pub init: InitialSpec,
    /// Diagnostic cadence in steps.
    pub diag_every: u64,
    /// Checkpoint cadence in steps; must be a multiple of `diag_every`.
    pub checkpoint_every: Option<u64>,
    pub norm_flavor: NormFlavor,
    /// Record a [`StepRecord`] for every step.
    #[serde(default)]
    pub record_steps: bool,
}

impl RunConfig {
    pub fn new(sim: SimConfig, init: InitialSpec) -> Self {
        Self {
            sim,
            init,
            diag_every: 1,
            checkpoint_every: None,
            norm_flavor: NormFlavor::Besov,
            record_steps: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        if self.diag_every == 0 {
            return Err(Error::Config("diag_every must be at least 1".into()));
        }
        if let Some(c) = self.checkpoint_every {
            if c == 0 || c % self.diag_every != 0 {
                return Err(Error::Config(format!(
                    "checkpoint_every ({c}) must be a positive multiple of diag_every ({})",
                    self.diag_every
                )));
            }
        }
        Ok(())
    }
}

/// Receives run output as it is produced.
pub trait RunSink {
    fn diagnostic(&mut self, _record: &DiagRecord) -> Result<()> {
        Ok(())
    }

    fn checkpoint(&mut self, _checkpoint: &Checkpoint, _step: u64) -> Result<()> {
        Ok(())
    }

    fn step(&mut self, _record: &StepRecord) -> Result<()> {
        Ok(())
    }
}

/// Sink that keeps everything in memory.
#[derive(Debug, Default)]
pub struct MemorySink {
    pub records: Vec<DiagRecord>,
    pub checkpoints: Vec<(u64, Checkpoint)>,
    pub steps: Vec<StepRecord>,
}

impl RunSink for MemorySink {
    fn diagnostic(&mut self, record: &DiagRecord) -> Result<()> {
        self.records.push(record.clone());
        Ok(())
    }

    fn checkpoint(&mut self, checkpoint: &Checkpoint, step: u64) -> Result<()> {
        self.checkpoints.push((step, checkpoint.clone()));
        Ok(())
    }

    fn step(&mut self, record: &StepRecord) -> Result<()> {
        self.steps.push(record.clone());
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "reason")]
pub enum Termination {
    Completed,
    Instability { t: f64, detail: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub start_step: u64,
    pub steps: u64,
    pub t_start: f64,
    pub t_final: f64,
    pub samples: usize,
    pub wall_time_s: f64,
    pub termination: Termination,
    pub verdicts: Verdicts,
    pub final_state_hash: String,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub state: State,
    pub report: RunReport,
}

impl RunOutcome {
    pub fn is_healthy(&self) -> bool {
        self.report.termination == Termination::Completed
    }
}

/// Payload stored in a checkpoint's `extra` header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointExtra {
    pub run: RunConfig,
    pub step: u64,
    /// Monitor after sampling this state; resumption continues from here.
    pub monitor: MonitorState,
    /// Monitor just before sampling this state; replaying the sample from
    /// here reproduces the run's record.
    pub monitor_prior: MonitorState,
}

fn make_checkpoint(
    state: &State,
    run: &RunConfig,
    step: u64,
    monitor: &Monitor,
    prior: MonitorState,
) -> Result<Checkpoint> {
    let extra = CheckpointExtra {
        run: run.clone(),
        step,
        monitor: monitor.snapshot(),
        monitor_prior: prior,
    };
    Checkpoint::new(
        state.grid(),
        run.sim.radius,
        run.sim.sobolev_s,
        state.t,
        state.named_fields(),
        serde_json::to_value(extra)?,
    )
}

/// Runs from the configured initial data to `t_end`.
pub fn run(config: &RunConfig, sink: &mut dyn RunSink) -> Result<RunOutcome> {
    config.validate()?;
    let state = make_initial(&config.init, &config.sim)?;
    let monitor = Monitor::new(config.sim.sobolev_s, config.norm_flavor);
    drive(config, state, 0, monitor, true, sink)
}

/// Continues a run from a checkpoint written by [`run`], optionally with a
/// new end time.
pub fn resume(checkpoint: &Checkpoint, t_end: Option<f64>, sink: &mut dyn RunSink) -> Result<RunOutcome> {
    let extra = checkpoint_extra(checkpoint)?;
    let mut config = extra.run;
    if let Some(t) = t_end {
        config.sim.t_end = t;
    }
    config.validate()?;
    let state = state_from_checkpoint(checkpoint, &config.sim)?;
    let monitor = Monitor::restore(extra.monitor);
    drive(&config, state, extra.step, monitor, false, sink)
}

fn checkpoint_extra(checkpoint: &Checkpoint) -> Result<CheckpointExtra> {
    serde_json::from_value(checkpoint.meta.extra.clone())
        .map_err(|e| Error::Data(format!("checkpoint carries no run metadata: {e}")))
}

/// Recomputes the diagnostic record of each checkpoint by replaying its
/// sample from the stored monitor state. Checkpoints are processed in step
/// order; verdicts are those after the last one.
pub fn analyze_checkpoints(checkpoints: &[Checkpoint]) -> Result<(RunConfig, Vec<DiagRecord>, Verdicts)> {
    let mut items = checkpoints
        .iter()
        .map(|ck| Ok((checkpoint_extra(ck)?, ck)))
        .collect::<Result<Vec<_>>>()?;
    if items.is_empty() {
        return Err(Error::Usage("no checkpoints to analyze".into()));
    }
    items.sort_by_key(|(e, _)| e.step);
    let mut records = Vec::new();
    let mut verdicts = None;
    for (extra, ck) in &items {
        let state = state_from_checkpoint(ck, &extra.run.sim)?;
        let mut monitor = Monitor::restore(extra.monitor_prior.clone());
        records.push(monitor.sample(&state, &extra.run.sim, extra.step)?);
        verdicts = Some(monitor.verdicts());
    }
    let config = items.last().unwrap().0.run.clone();
    Ok((config, records, verdicts.unwrap()))
}

/// Time remaining below this fraction of `dt` counts as arrival.
const ARRIVAL_SLACK: f64 = 1e-9;

fn drive(
    config: &RunConfig,
    mut state: State,
    start_step: u64,
    mut monitor: Monitor,
    emit_first: bool,
    sink: &mut dyn RunSink,
) -> Result<RunOutcome> {
    let started = Instant::now();
    let cfg = &config.sim;
    let t_start = state.t;
    let mut step = start_step;
    let mut samples = 0usize;
    let mut last_sampled = None;

    let reference_hs = if let Some(r) = monitor.reference_velocity_hs() {
        r
    } else {
        norm(&state.u, NormSpec::Hs(cfg.sobolev_s))?
    };
    let x0 = monitor.reference_x();

    let mut prior = monitor.snapshot();
    if emit_first {
        let rec = monitor.sample(&state, cfg, step)?;
        sink.diagnostic(&rec)?;
        samples += 1;
        last_sampled = Some(step);
        if config.checkpoint_every.is_some() {
            sink.checkpoint(&make_checkpoint(&state, config, step, &monitor, prior.clone())?, step)?;
        }
    }
    let runaway = {
        let base = if reference_hs > 0.0 { reference_hs } else { x0.unwrap_or(0.0).sqrt() };
        if base > 0.0 {
            Some(RUNAWAY_FACTOR * base)
        } else {
            None
        }
    };

    let mut termination = Termination::Completed;
    loop {
        let remaining = cfg.t_end - state.t;
        let nominal = cfl_dt(&state, cfg);
        if remaining <= ARRIVAL_SLACK * nominal {
            break;
        }
        let dt = nominal.min(remaining);
        let next = match step_rk4(&state, dt, cfg) {
            Ok(s) => s,
            Err(Error::Instability { t, reason }) => {
                termination = Termination::Instability { t, detail: reason };
                break;
            }
            Err(e) => return Err(e),
        };
        if let Some(limit) = runaway {
            let hs = norm(&next.u, NormSpec::Hs(cfg.sobolev_s))?;
            if !(hs <= limit) {
                termination = Termination::Instability {
                    t: next.t,
                    detail: format!("velocity H^s norm {hs:.3e} exceeds runaway limit {limit:.3e}"),
                };
                break;
            }
        }
        state = next;
        step += 1;
        if config.record_steps {
            sink.step(&StepRecord {
                step,
                t: state.t,
                dt,
                state_hash: state.digest(),
                cfl_speed: max_speed(&state),
            })?;
        }
        let arrived = cfg.t_end - state.t <= ARRIVAL_SLACK * nominal;
        if step.is_multiple_of(config.diag_every) || arrived {
            prior = monitor.snapshot();
            let rec = monitor.sample(&state, cfg, step)?;
            sink.diagnostic(&rec)?;
            samples += 1;
            last_sampled = Some(step);
        }
        if let Some(every) = config.checkpoint_every {
            if step.is_multiple_of(every) || (arrived && last_sampled == Some(step)) {
                sink.checkpoint(&make_checkpoint(&state, config, step, &monitor, prior.clone())?, step)?;
            }
        }
    }

    let report = RunReport {
        config: config.clone(),
        start_step,
        steps: step - start_step,
        t_start,
        t_final: state.t,
        samples,
        wall_time_s: started.elapsed().as_secs_f64(),
        termination,
        verdicts: monitor.verdicts(),
        final_state_hash: state.digest(),
    };
    Ok(RunOutcome { state, report })
}
