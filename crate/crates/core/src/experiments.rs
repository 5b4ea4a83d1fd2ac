//! Scripted studies: Cauchy-in-R convergence, truncation decay, blow-up
//! monitoring campaigns and inequality probe ensembles.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::probes::{
    kato_ponce_ratio, probe_gagliardo_nirenberg, probe_interpolation, probe_log_sobolev,
};
use crate::diagnostics::{CsvWriter, DiagRecord, Verdicts};
use crate::dynamics::{DtPolicy, SimConfig, State};
use crate::error::{Error, Result};
use crate::integrate::{
    cfl_dt, make_initial, random_band_scalar, random_band_vector_free, run, state_from_checkpoint,
    InitialSpec, MemorySink, RunConfig, RunReport, Termination,
};
use crate::spectral::{norm, truncate, Grid, NormFlavor, NormSpec, SpectralScalar};

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

fn check_increasing(r_list: &[f64]) -> Result<()> {
    if r_list.is_empty() {
        return Err(Error::Config("R list is empty".into()));
    }
    if r_list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config(format!("R list must be strictly increasing, got {r_list:?}")));
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Writes `records` as CSV with the embedded configuration.
pub fn write_csv(path: &Path, config_json: &str, flavor: NormFlavor, records: &[DiagRecord]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = CsvWriter::new(std::io::BufWriter::new(file), config_json, flavor)
        .map_err(|e| Error::io(path, e))?;
    for r in records {
        w.write(r).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Empirical decay rate of `D(R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum DecayFit {
    /// All differences vanish: the truncations coincide.
    Exact,
    Fitted(f64),
    /// Too few nonzero differences to fit.
    Undefined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePair {
    pub r: f64,
    pub r_next: f64,
    /// `sup_t ‖u^R − u^{R'}‖_{L²}` and likewise for `θ`, `b`.
    pub sup_u: f64,
    pub sup_theta: f64,
    pub sup_b: f64,
    /// `sup_t` of the summed difference.
    pub d: f64,
    /// `sup_t ‖·‖_{H^{s'}}` of the summed difference, measured.
    pub d_hs_prime: f64,
    /// `sup_t` of the interpolation bound `‖·‖_{L²}^{1−s'/s} ‖·‖_{H^s}^{s'/s}`.
    pub d_hs_prime_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub r_list: Vec<f64>,
    pub pairs: Vec<ConvergencePair>,
    pub eps_hat: DecayFit,
    /// Admissible range `(0, s − 1)` for the decay exponent.
    pub eps_range: (f64, f64),
    pub monotone_decreasing: bool,
    pub s_prime: f64,
    pub dt: f64,
    pub sample_every: u64,
    pub sample_times: Vec<f64>,
    pub member_terminations: Vec<Termination>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSpec {
    pub sim: SimConfig,
    pub init: InitialSpec,
    pub r_list: Vec<f64>,
    /// Sampling cadence in steps.
    pub sample_every: u64,
    /// Target index of the interpolation lift, `0 ≤ s' ≤ s`.
    pub s_prime: f64,
}

/// Member output of a convergence study.
pub struct ConvergenceMember {
    pub radius: f64,
    pub report: RunReport,
    pub records: Vec<DiagRecord>,
    pub states: Vec<State>,
}

fn run_member(spec: &ConvergenceSpec, radius: f64, dt: f64) -> Result<ConvergenceMember> {
    let mut sim = spec.sim.clone();
    sim.radius = radius;
    sim.dt_policy = DtPolicy::Fixed { dt };
    let mut rc = RunConfig::new(sim.clone(), spec.init.clone());
    rc.diag_every = spec.sample_every;
    rc.checkpoint_every = Some(spec.sample_every);
    let mut sink = MemorySink::default();
    let out = run(&rc, &mut sink)?;
    let states = sink
        .checkpoints
        .iter()
        .map(|(_, ck)| state_from_checkpoint(ck, &sim))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceMember {
        radius,
        report: out.report,
        records: sink.records,
        states,
    })
}

/// Runs one initial datum at every `R` in `r_list` on the shared grid and
/// compares consecutive members.
///
/// A CFL policy in the template is replaced by the fixed step it yields on
/// the largest-`R` initial state so that all members share sample times.
pub fn convergence_study(spec: &ConvergenceSpec) -> Result<(ConvergenceReport, Vec<ConvergenceMember>)> {
    check_increasing(&spec.r_list)?;
    if spec.sample_every == 0 {
        return Err(Error::Config("sample_every must be at least 1".into()));
    }
    let s = spec.sim.sobolev_s;
    if !(0.0..=s).contains(&spec.s_prime) {
        return Err(Error::Config(format!("s' must lie in [0, {s}], got {}", spec.s_prime)));
    }
    for &r in &spec.r_list {
        let mut c = spec.sim.clone();
        c.radius = r;
        c.validate()?;
    }
    let dt = match spec.sim.dt_policy {
        DtPolicy::Fixed { dt } => dt,
        DtPolicy::Cfl { .. } => {
            let mut c = spec.sim.clone();
            c.radius = *spec.r_list.last().unwrap();
            cfl_dt(&make_initial(&spec.init, &c)?, &c)
        }
    };

    let members = spec
        .r_list
        .par_iter()
        .map(|&r| run_member(spec, r, dt))
        .collect::<Result<Vec<_>>>()?;

    let sample_times: Vec<f64> = members[0].states.iter().map(|st| st.t).collect();
    let mut pairs = Vec::new();
    for w in members.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let common = a.states.len().min(b.states.len());
        let mut p = ConvergencePair {
            r: a.radius,
            r_next: b.radius,
            sup_u: 0.0,
            sup_theta: 0.0,
            sup_b: 0.0,
            d: 0.0,
            d_hs_prime: 0.0,
            d_hs_prime_bound: 0.0,
        };
        for (x, y) in a.states[..common].iter().zip(&b.states[..common]) {
            let du = x.u.axpy(-1.0, &y.u);
            let dth = x.theta.sub(&y.theta);
            let db = x.b.axpy(-1.0, &y.b);
            let nu = du.l2_sq().sqrt();
            let nt = dth.l2_sq().sqrt();
            let nb = db.l2_sq().sqrt();
            p.sup_u = p.sup_u.max(nu);
            p.sup_theta = p.sup_theta.max(nt);
            p.sup_b = p.sup_b.max(nb);
            p.d = p.d.max(nu + nt + nb);
            let mut lifted = 0.0;
            let mut bound = 0.0;
            for f in [du.components(), std::slice::from_ref(&dth), db.components()] {
                let (l, r) = probe_interpolation(f, spec.s_prime, s)?;
                lifted += l;
                bound += r;
            }
            p.d_hs_prime = p.d_hs_prime.max(lifted);
            p.d_hs_prime_bound = p.d_hs_prime_bound.max(bound);
        }
        pairs.push(p);
    }
    let positive: Vec<(f64, f64)> = pairs.iter().filter(|p| p.d > 0.0).map(|p| (p.r, p.d)).collect();
    let eps_hat = if pairs.iter().all(|p| p.d == 0.0) {
        DecayFit::Exact
    } else {
        match log_log_slope(&positive) {
            Some(slope) => DecayFit::Fitted(-slope),
            None => DecayFit::Undefined,
        }
    };
    let monotone_decreasing = pairs.windows(2).all(|w| w[1].d < w[0].d);
    let report = ConvergenceReport {
        r_list: spec.r_list.clone(),
        pairs,
        eps_hat,
        eps_range: (0.0, s - 1.0),
        monotone_decreasing,
        s_prime: spec.s_prime,
        dt,
        sample_every: spec.sample_every,
        sample_times,
        member_terminations: members.iter().map(|m| m.report.termination.clone()).collect(),
    };
    Ok((report, members))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationDecayReport {
    pub s: f64,
    pub k: f64,
    pub r_list: Vec<f64>,
    /// `‖S_R f − f‖_{H^s}`.
    pub errors: Vec<f64>,
    /// `‖f‖_{H^{s+k}} R^{−k}`.
    pub bounds: Vec<f64>,
    pub bound_holds: bool,
    /// Fitted decay order of the errors; `None` when fewer than two are
    /// nonzero.
    pub fitted_order: Option<f64>,
}

/// Slack on the sharp-cutoff bound, covering rounding in the sums.
pub const DECAY_BOUND_SLACK: f64 = 1e-10;

/// Measures `‖S_R f − f‖_{H^s}` against `‖f‖_{H^{s+k}} R^{−k}`.
pub fn truncation_decay_of(f: &SpectralScalar, s: f64, k: f64, r_list: &[f64]) -> Result<TruncationDecayReport> {
    check_increasing(r_list)?;
    let top = norm(f, NormSpec::Hs(s + k))?;
    let mut errors = Vec::new();
    let mut bounds = Vec::new();
    for &r in r_list {
        errors.push(norm(&truncate(f, r)?.sub(f), NormSpec::Hs(s))?);
        bounds.push(top * r.powf(-k));
    }
    let bound_holds = errors
        .iter()
        .zip(&bounds)
        .all(|(e, b)| *e <= b * (1.0 + DECAY_BOUND_SLACK));
    let pts: Vec<(f64, f64)> = r_list
        .iter()
        .zip(&errors)
        .filter(|(_, e)| **e > 0.0)
        .map(|(r, e)| (*r, *e))
        .collect();
    Ok(TruncationDecayReport {
        s,
        k,
        r_list: r_list.to_vec(),
        errors,
        bounds,
        bound_holds,
        fitted_order: log_log_slope(&pts).map(|v| -v),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationDecaySpec {
    pub grid: Grid,
    /// Spectral decay exponent `a` of the synthetic field.
    pub exponent: f64,
    pub s: f64,
    pub k: f64,
    pub r_list: Vec<f64>,
    pub seed: u64,
}

/// Synthesizes `f` with spectrum `|k|^{−a}` on the whole non-Nyquist lattice
/// and measures its truncation decay.
pub fn truncation_decay_study(spec: &TruncationDecaySpec) -> Result<TruncationDecayReport> {
    let dim = spec.grid.dim() as f64;
    let need = spec.s + spec.k + dim / 2.0;
    if !(spec.exponent > need) {
        return Err(Error::Config(format!(
            "spectrum exponent {} does not place f in H^(s+k); need a > {need}",
            spec.exponent
        )));
    }
    let radius = (spec.grid.n() / 2 - 1) as f64 * dim.sqrt();
    let f = random_band_scalar(spec.grid, spec.exponent, radius, spec.seed, 0);
    truncation_decay_of(&f, spec.s, spec.k, &spec.r_list)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BkmStatus {
    /// Integrals finite and the solver finished healthily.
    Satisfied,
    /// The solver flagged numerical blow-up before `t_end`.
    NumericalBlowup,
    NotEstablished,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlowupReport {
    pub status: BkmStatus,
    pub verdict: String,
    pub flavor: NormFlavor,
    /// `(t, full, relaxed)` for the selected flavor at each sample.
    pub profile: Vec<(f64, f64, f64)>,
    pub instability_time: Option<f64>,
    pub run: Option<RunReport>,
    pub verdicts: Option<Verdicts>,
    pub error: Option<String>,
}

/// Executes one monitored run and classifies it.
pub fn blowup_study(config: &RunConfig) -> (BlowupReport, Vec<DiagRecord>) {
    let mut sink = MemorySink::default();
    let flavor = config.norm_flavor;
    let outcome = match run(config, &mut sink) {
        Ok(o) => o,
        Err(e) => {
            let report = BlowupReport {
                status: BkmStatus::NotEstablished,
                verdict: format!("run failed: {e}"),
                flavor,
                profile: Vec::new(),
                instability_time: None,
                run: None,
                verdicts: None,
                error: Some(e.to_string()),
            };
            return (report, sink.records);
        }
    };
    let i = flavor.index();
    let profile = sink
        .records
        .iter()
        .map(|r| (r.t, r.bkm_full[i], r.bkm_relaxed[i]))
        .collect();
    let v = outcome.report.verdicts;
    let (status, instability_time) = match &outcome.report.termination {
        Termination::Instability { t, .. } => (BkmStatus::NumericalBlowup, Some(*t)),
        Termination::Completed if v.bkm.finite && v.bkm.monotone => (BkmStatus::Satisfied, None),
        Termination::Completed => (BkmStatus::NotEstablished, None),
    };
    let verdict = match status {
        BkmStatus::Satisfied => format!(
            "continuation criterion satisfied on [0, {}]",
            outcome.report.t_final
        ),
        BkmStatus::NumericalBlowup => format!(
            "numerical blow-up flagged at t = {}",
            instability_time.unwrap()
        ),
        BkmStatus::NotEstablished => "continuation criterion not established".into(),
    };
    let report = BlowupReport {
        status,
        verdict,
        flavor,
        profile,
        instability_time,
        run: Some(outcome.report),
        verdicts: Some(v),
        error: None,
    };
    (report, sink.records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    KatoPonce,
    LogSobolev,
    Interpolation,
    GagliardoNirenberg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub kind: ProbeKind,
    pub dim: usize,
    /// Grid sizes to compare.
    pub n_list: Vec<usize>,
    pub count: usize,
    /// Smoothness index (`s` for Kato–Ponce and log-Sobolev, `s` of the
    /// interpolation pair).
    pub s: f64,
    /// Integrability `p` (log-Sobolev, Gagliardo–Nirenberg) or the lower
    /// index `s'` for interpolation.
    pub p: f64,
    /// Spectral support radius of the random fields; must be dealias-safe
    /// for products on the smallest grid when probing commutators.
    pub band: f64,
    pub exponent: f64,
    pub seed: u64,
}

impl ProbeSpec {
    pub fn new(kind: ProbeKind, dim: usize) -> Self {
        Self {
            kind,
            dim,
            n_list: vec![16, 32],
            count: 100,
            s: 2.5,
            p: 4.0,
            band: 2.5,
            exponent: 1.0,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeGridResult {
    pub n: usize,
    pub max_ratio: f64,
    pub mean_ratio: f64,
    pub min_ratio: f64,
    /// For interpolation: number of fields with `lhs > rhs`.
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub spec: ProbeSpec,
    pub grids: Vec<ProbeGridResult>,
    /// `max_ratio(N_last) / max_ratio(N_first) − 1`.
    pub max_ratio_growth: f64,
}

fn probe_member(spec: &ProbeSpec, grid: Grid, i: usize) -> Result<(f64, bool)> {
    let seed = spec.seed.wrapping_add(i as u64);
    match spec.kind {
        ProbeKind::KatoPonce => {
            let f = random_band_vector_free(grid, spec.exponent, spec.band, seed, 0);
            let g = random_band_scalar(grid, spec.exponent, spec.band, seed, 1);
            Ok((kato_ponce_ratio(&f, &g, spec.s)?, false))
        }
        ProbeKind::LogSobolev => {
            let f = random_band_scalar(grid, spec.exponent, spec.band, seed, 0);
            Ok((probe_log_sobolev(&f, spec.s, spec.p)?.ratio, false))
        }
        ProbeKind::GagliardoNirenberg => {
            let f = random_band_scalar(grid, spec.exponent, spec.band, seed, 0);
            Ok((probe_gagliardo_nirenberg(&f, spec.p)?, false))
        }
        ProbeKind::Interpolation => {
            let f = random_band_scalar(grid, spec.exponent, spec.band, seed, 0);
            let (l, r) = probe_interpolation(&f, spec.p, spec.s)?;
            Ok((l / r, l > r))
        }
    }
}

/// Evaluates the probe over `count` seeded fields on each grid. Fields are
/// generated grid-independently, so the same member is the same function on
/// every grid.
pub fn probe_ensemble(spec: &ProbeSpec) -> Result<ProbeReport> {
    if spec.count == 0 || spec.n_list.is_empty() {
        return Err(Error::Config("probe needs count ≥ 1 and at least one grid".into()));
    }
    let mut grids = Vec::new();
    for &n in &spec.n_list {
        let grid = Grid::new(spec.dim, n)?;
        let vals = (0..spec.count)
            .into_par_iter()
            .map(|i| probe_member(spec, grid, i))
            .collect::<Result<Vec<_>>>()?;
        let ratios: Vec<f64> = vals.iter().map(|v| v.0).collect();
        grids.push(ProbeGridResult {
            n,
            max_ratio: ratios.iter().copied().fold(f64::MIN, f64::max),
            mean_ratio: crate::reduce::pairwise_sum(&ratios) / ratios.len() as f64,
            min_ratio: ratios.iter().copied().fold(f64::MAX, f64::min),
            violations: vals.iter().filter(|v| v.1).count(),
        });
    }
    let first = grids.first().unwrap().max_ratio;
    let last = grids.last().unwrap().max_ratio;
    Ok(ProbeReport {
        spec: spec.clone(),
        grids,
        max_ratio_growth: last / first - 1.0,
    })
}

/// JSON study manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "study")]
pub enum StudyManifest {
    Convergence(ConvergenceSpec),
    TruncationDecay(TruncationDecaySpec),
    Blowup(RunConfig),
    Probe(ProbeSpec),
}

impl StudyManifest {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid study manifest: {e}")))
    }
}

/// Runs a study and writes `manifest.json`, per-run CSVs and
/// `summary.json` under `out_dir`. Returns the summary.
pub fn run_study(manifest: &StudyManifest, out_dir: &Path) -> Result<serde_json::Value> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    write_json(&out_dir.join("manifest.json"), manifest)?;
    let summary = match manifest {
        StudyManifest::Convergence(spec) => {
            let (report, members) = convergence_study(spec)?;
            for m in &members {
                let cfg = serde_json::to_string(&m.report.config)?;
                let path = out_dir.join(format!("run_R{}.csv", m.radius));
                write_csv(&path, &cfg, m.report.config.norm_flavor, &m.records)?;
            }
            serde_json::to_value(report)?
        }
        StudyManifest::TruncationDecay(spec) => serde_json::to_value(truncation_decay_study(spec)?)?,
        StudyManifest::Blowup(cfg) => {
            let (report, records) = blowup_study(cfg);
            let cfg_json = serde_json::to_string(cfg)?;
            write_csv(&out_dir.join("run.csv"), &cfg_json, cfg.norm_flavor, &records)?;
            serde_json::to_value(report)?
        }
        StudyManifest::Probe(spec) => serde_json::to_value(probe_ensemble(spec)?)?,
    };
    let wrapped = serde_json::json!({ "manifest": manifest, "summary": summary });
    write_json(&out_dir.join("summary.json"), &wrapped)?;
    Ok(summary)
}
