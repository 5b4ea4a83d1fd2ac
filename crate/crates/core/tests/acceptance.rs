//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use mbsim_core::diagnostics::{
    energy_identity_residual, l2_growth_bound_check, CsvWriter, Trapezoid, L2_GROWTH_TOL,
};
use mbsim_core::dynamics::{advect_scalar, advect_vector, commutator_js};
use mbsim_core::experiments::{
    blowup_study, convergence_study, probe_ensemble, truncation_decay_study, BkmStatus,
    ConvergenceSpec, DecayFit, ProbeKind, ProbeSpec, TruncationDecaySpec,
};
use mbsim_core::integrate::{
    make_initial, random_band_scalar, random_band_vector_free, run, step_rk4, InitialSpec,
    MemorySink, Termination,
};
use mbsim_core::spectral::NormFlavor;
use mbsim_core::{
    Complex64, Coupling, DtPolicy, Field, Grid, RunConfig, SimConfig, SpectralScalar, SpectralVector, State,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{max_abs, max_diff, random_state, sim, transport_oracle};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn coeff_slices(v: &SpectralVector) -> Vec<&[Complex64]> {
    v.components().iter().map(|c| c.coeffs()).collect()
}

// 1
fn oracle_equivalence() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    let mut check = |cfg: &SimConfig, v: &SpectralVector, g: &SpectralScalar| {
        let got = advect_scalar(v, g, cfg).unwrap();
        let n = cfg.grid.n();
        let want = transport_oracle(&coeff_slices(v), g.coeffs(), cfg.grid.dim(), n, cfg.radius, |_, _| 1.0);
        assert!(max_abs(&want) > 1e-6, "oracle case is trivial");
        worst = worst.max(max_diff(got.coeffs(), &want));
        cases += 1;
    };
    let c2 = sim(2, 8, 2.5);
    let tg = make_initial(&InitialSpec::taylor_green(), &c2).unwrap();
    let tg_full = advect_vector(&tg.u, &tg.u, &c2).unwrap();
    for (i, comp) in tg.u.components().iter().enumerate() {
        check(&c2, &tg.u, comp);
        assert_eq!(tg_full.components()[i], advect_scalar(&tg.u, comp, &c2).unwrap());
    }
    for (cfg, seeds) in [(sim(2, 8, 2.5), 0..5u64), (sim(3, 8, 2.5), 10..13u64)] {
        for seed in seeds {
            let st = random_state(&cfg, seed, 0.7, 0.9);
            check(&cfg, &st.u, &st.theta);
            for c in st.b.components() {
                check(&cfg, &st.u, c);
                check(&cfg, &st.b, c);
            }
            for c in st.u.components() {
                check(&cfg, &st.u, c);
                check(&cfg, &st.b, c);
            }
        }
    }
    verdict(worst < 1e-12, format!("{cases} products, max mode error {worst:.2e}"))
}

// 2
fn cancellation_suite() -> Verdict {
    let mut worst_energy: f64 = 0.0;
    let mut worst_anti: f64 = 0.0;
    let mut count = 0;
    for (cfg, seeds) in [(sim(2, 16, 5.0), 0..100u64), (sim(3, 12, 3.5), 100..200u64)] {
        for seed in seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let st = random_state(&cfg, seed, rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0));
            let (_, x) = mbsim_core::diagnostics::energy_functionals(&st, cfg.sobolev_s);
            let r = energy_identity_residual(&st, &cfg).unwrap();
            worst_energy = worst_energy.max(r.abs() / x);
            let bb = advect_vector(&st.b, &st.b, &cfg).unwrap();
            let bu = advect_vector(&st.b, &st.u, &cfg).unwrap();
            let anti = bb.inner(&st.u) + bu.inner(&st.b);
            worst_anti = worst_anti.max(anti.abs() / x);
            count += 1;
        }
    }
    verdict(
        worst_energy < 1e-10 && worst_anti < 1e-10,
        format!("{count} states, energy residual/X {worst_energy:.2e}, antisymmetry/X {worst_anti:.2e}"),
    )
}

// 3
fn ideal_mhd_conservation() -> Verdict {
    let sim = SimConfig::new(Grid::new(2, 64).unwrap(), 21.0, 2.5, 1.0)
        .unwrap()
        .with_dt(DtPolicy::Fixed { dt: 1e-3 })
        .unwrap()
        .with_coupling(Coupling::Passive);
    let init = InitialSpec::taylor_green().with_perturbations(0.0, 0.1);
    let mut rc = RunConfig::new(sim, init);
    rc.diag_every = 10;
    let start = Instant::now();
    let mut sink = MemorySink::default();
    let out = run(&rc, &mut sink).unwrap();
    let elapsed = start.elapsed();
    let y0 = sink.records[0].y;
    let theta_zero = out.state.theta.max_abs_coeff() == 0.0;
    let drift = sink.records.iter().map(|r| (r.y - y0).abs() / y0).fold(0.0, f64::max);
    let div = sink.records.iter().map(|r| r.div_u.max(r.div_b)).fold(0.0, f64::max);
    let ok = out.is_healthy()
        && theta_zero
        && (out.report.t_final - 1.0).abs() < 1e-12
        && drift < 1e-8
        && div < 1e-10
        && elapsed < Duration::from_secs(120);
    verdict(
        ok,
        format!(
            "{} steps, {} samples, max |ΔY|/Y0 {drift:.2e}, max divergence ratio {div:.2e}, {:.1}s",
            out.report.steps,
            sink.records.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn benard_run(n: usize, radius: f64, t_end: f64) -> (RunConfig, MemorySink, mbsim_core::RunOutcome) {
    let sim = SimConfig::new(Grid::new(2, n).unwrap(), radius, 2.5, t_end).unwrap();
    let init = InitialSpec::taylor_green().with_perturbations(0.5, 0.1);
    let mut rc = RunConfig::new(sim, init);
    rc.diag_every = 5;
    let mut sink = MemorySink::default();
    let out = run(&rc, &mut sink).unwrap();
    (rc, sink, out)
}

// 4
fn l2_growth_bound() -> Verdict {
    let (_, sink, out) = benard_run(32, 10.0, 1.0);
    let samples: Vec<(f64, f64)> = sink.records.iter().map(|r| (r.t, r.y)).collect();
    let v = l2_growth_bound_check(&samples, L2_GROWTH_TOL).unwrap();
    let y_end = samples.last().unwrap().1 / samples[0].1;
    verdict(
        out.is_healthy() && v.pass && out.report.verdicts.l2_growth.pass,
        format!(
            "{} samples to t = {}, worst margin {:.3e}, Y(1)/Y(0) = {y_end:.6}",
            v.samples, out.report.t_final, v.worst_margin
        ),
    )
}

fn distance(a: &State, b: &State) -> f64 {
    (a.u.axpy(-1.0, &b.u).l2_sq() + a.theta.sub(&b.theta).l2_sq() + a.b.axpy(-1.0, &b.b).l2_sq()).sqrt()
}

fn integrate_fixed(st: &State, cfg: &SimConfig, dt: f64, steps: usize) -> State {
    let mut s = st.clone();
    for _ in 0..steps {
        s = step_rk4(&s, dt, cfg).unwrap();
    }
    s
}

// 5
fn rk4_order() -> Verdict {
    let cfg = sim(2, 32, 10.0);
    let mut spec = InitialSpec::random_band(4.0, 17).with_perturbations(1.0, 0.5);
    spec.spectrum_exponent = 3.0;
    let x0 = make_initial(&spec, &cfg).unwrap();
    let t = 0.5;
    let sols: Vec<State> = [10usize, 20, 40]
        .iter()
        .map(|&m| integrate_fixed(&x0, &cfg, t / m as f64, m))
        .collect();
    let e1 = distance(&sols[0], &sols[1]);
    let e2 = distance(&sols[1], &sols[2]);
    let order = (e1 / e2).log2();
    verdict(
        (order - 4.0).abs() <= 0.2,
        format!("dt = 0.05/0.025/0.0125, differences {e1:.3e}, {e2:.3e}, order {order:.3}"),
    )
}

// 6
fn truncation_decay() -> Verdict {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for k in [1.0, 2.0] {
        let s = 1.5;
        let spec = TruncationDecaySpec {
            grid: Grid::new(2, 256).unwrap(),
            exponent: s + k + 1.0 + 0.51,
            s,
            k,
            r_list: vec![4.0, 8.0, 16.0, 32.0],
            seed: 5,
        };
        let rep = truncation_decay_study(&spec).unwrap();
        let order = rep.fitted_order.unwrap();
        ok &= rep.bound_holds && order >= k - 0.1;
        parts.push(format!("k = {k}: order {order:.3}, bound {}", if rep.bound_holds { "holds" } else { "violated" }));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(30);
    verdict(ok, format!("{}; {:.1}s", parts.join("; "), elapsed.as_secs_f64()))
}

// 7
fn cauchy_in_r() -> Verdict {
    let sim = SimConfig::new(Grid::new(2, 128).unwrap(), 32.0, 2.5, 0.5)
        .unwrap()
        .with_dt(DtPolicy::Fixed { dt: 2e-3 })
        .unwrap();
    let init = InitialSpec::random_band(1.0, 2024).with_perturbations(0.1, 0.1);
    let spec = ConvergenceSpec {
        sim,
        init,
        r_list: vec![8.0, 16.0, 32.0],
        sample_every: 25,
        s_prime: 1.0,
    };
    let start = Instant::now();
    let (rep, _) = convergence_study(&spec).unwrap();
    let elapsed = start.elapsed();
    let archive = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance_convergence.json");
    std::fs::write(&archive, serde_json::to_string_pretty(&rep).unwrap()).unwrap();
    let eps = match rep.eps_hat {
        DecayFit::Fitted(e) => e,
        _ => f64::NAN,
    };
    let healthy = rep.member_terminations.iter().all(|t| *t == Termination::Completed);
    let ds: Vec<String> = rep.pairs.iter().map(|p| format!("D({}) = {:.6e}", p.r, p.d)).collect();
    verdict(
        healthy && rep.monotone_decreasing && eps > 0.0 && elapsed < Duration::from_secs(600),
        format!(
            "{}, eps_hat = {eps:.4}, {:.1}s, archived to {}",
            ds.join(", "),
            elapsed.as_secs_f64(),
            archive.display()
        ),
    )
}

// 8
fn commutator_identity() -> Verdict {
    let grid = Grid::new(2, 8).unwrap();
    let mut worst: f64 = 0.0;
    for seed in 0..10u64 {
        let f = random_band_vector_free(grid, 1.0, 2.0, seed, 0);
        let g = random_band_scalar(grid, 1.0, 2.0, seed, 1);
        for s in [2.5, 1.3, -0.7] {
            let got = commutator_js(&f, &Field::Scalar(g.clone()), s).unwrap();
            let w = |k: &[i64], q: &[i64]| {
                (1.0 + common::k2(k) as f64).powf(s / 2.0) - (1.0 + common::k2(q) as f64).powf(s / 2.0)
            };
            let want = transport_oracle(&coeff_slices(&f), g.coeffs(), 2, 8, f64::INFINITY, w);
            worst = worst.max(max_diff(got.components()[0].coeffs(), &want));
        }
    }
    let rep = probe_ensemble(&ProbeSpec::new(ProbeKind::KatoPonce, 2)).unwrap();
    let growth = rep.max_ratio_growth;
    verdict(
        worst < 1e-12 && growth < 0.1,
        format!(
            "oracle max error {worst:.2e}; Kato-Ponce max ratio {:.4} (N=16) -> {:.4} (N=32), growth {:+.2}%",
            rep.grids[0].max_ratio,
            rep.grids[1].max_ratio,
            100.0 * growth
        ),
    )
}

// 9
fn interpolation_exactness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let grid = Grid::new(2, 8).unwrap();
    let mut violations = 0;
    let mut worst: f64 = f64::MIN;
    for _ in 0..10_000 {
        let coeffs: Vec<Complex64> = (0..grid.len())
            .map(|_| {
                let scale = rng.gen::<f64>().powi(3);
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale
            })
            .collect();
        let f = SpectralScalar::from_coeffs(grid, coeffs).unwrap();
        let s = rng.gen_range(0.1..5.0);
        let sp = rng.gen_range(0.0..s);
        let (l, r) = mbsim_core::diagnostics::probes::probe_interpolation(&f, sp, s).unwrap();
        worst = worst.max(l / r - 1.0);
        if l > r * (1.0 + 1e-12) {
            violations += 1;
        }
    }
    let mut eq_worst: f64 = 0.0;
    for _ in 0..200 {
        let k = [rng.gen_range(-3..4i64), rng.gen_range(-3..4i64)];
        let mut f = SpectralScalar::zeros(grid);
        f.set_mode(&k, Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))).unwrap();
        if f.max_abs_coeff() == 0.0 {
            continue;
        }
        let s = rng.gen_range(0.1..5.0);
        let (l, r) = mbsim_core::diagnostics::probes::probe_interpolation(&f, rng.gen_range(0.0..s), s).unwrap();
        eq_worst = eq_worst.max((l - r).abs() / r);
    }
    verdict(
        violations == 0 && eq_worst < 1e-12,
        format!("10000 fields, {violations} violations (max lhs/rhs - 1 = {worst:.2e}); single-mode equality error {eq_worst:.2e}"),
    )
}

// 10
fn bkm_plumbing() -> Verdict {
    let sim = SimConfig::new(Grid::new(2, 32).unwrap(), 10.0, 2.5, 1.0).unwrap();
    let mut rc = RunConfig::new(sim, InitialSpec::taylor_green().with_perturbations(0.1, 0.05));
    rc.diag_every = 5;
    let (rep, records) = blowup_study(&rc);
    let mut monotone = true;
    let mut relaxed_ok = true;
    for w in records.windows(2) {
        for i in 0..3 {
            monotone &= w[1].bkm_full[i] >= w[0].bkm_full[i] && w[1].bkm_relaxed[i] >= w[0].bkm_relaxed[i];
        }
    }
    for r in &records {
        for i in 0..3 {
            relaxed_ok &= r.bkm_relaxed[i] <= r.bkm_full[i] && r.bkm_full[i].is_finite();
        }
    }
    let v = rep.verdicts.unwrap();
    let bmo_ok = v.max_bmo_over_linf <= 2.0;

    // linear integrand: exact; smooth integrand: second order
    let mut lin = Trapezoid::default();
    for i in 0..=10 {
        let t = 0.1 * i as f64;
        lin.push(t, 3.0 * t + 1.0).unwrap();
    }
    let lin_err = (lin.integral - 2.5).abs();
    let quad = |m: usize| {
        let mut q = Trapezoid::default();
        for i in 0..=m {
            let t = i as f64 / m as f64;
            q.push(t, t.exp()).unwrap();
        }
        (q.integral - (1f64.exp() - 1.0)).abs()
    };
    let order = (quad(20) / quad(40)).log2();
    let trap_ok = lin_err < 1e-14 && (order - 2.0).abs() < 0.05;

    let i = NormFlavor::Besov.index();
    let last = records.last().unwrap();
    verdict(
        rep.status == BkmStatus::Satisfied && monotone && relaxed_ok && bmo_ok && trap_ok,
        format!(
            "'{}', besov full {:.4} relaxed {:.4}, max BMO/Linf {:.3}, trapezoid linear error {lin_err:.1e} order {order:.3}",
            rep.verdict, last.bkm_full[i], last.bkm_relaxed[i], v.max_bmo_over_linf
        ),
    )
}

fn csv_of_run(rc: &RunConfig) -> String {
    let mut sink = MemorySink::default();
    run(rc, &mut sink).unwrap();
    let mut w = CsvWriter::new(Vec::new(), &serde_json::to_string(rc).unwrap(), rc.norm_flavor).unwrap();
    for r in &sink.records {
        w.write(r).unwrap();
    }
    String::from_utf8(w.into_inner()).unwrap()
}

// 11
fn determinism() -> Verdict {
    let sim = SimConfig::new(Grid::new(2, 128).unwrap(), 40.0, 2.5, 5e-3)
        .unwrap()
        .with_dt(DtPolicy::Fixed { dt: 1e-3 })
        .unwrap();
    let rc = RunConfig::new(sim, InitialSpec::random_band(1.0, 77).with_perturbations(0.3, 0.2));
    let in_pool = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| csv_of_run(&rc))
    };
    let a = in_pool(1);
    let b = in_pool(1);
    let c = in_pool(4);
    verdict(
        a == b && a == c,
        format!(
            "{} CSV bytes; repeat {}, 1 vs 4 workers {}",
            a.len(),
            if a == b { "identical" } else { "DIFFERENT" },
            if a == c { "identical" } else { "DIFFERENT" }
        ),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 11] = [
        ("oracle equivalence of nonlinearities", oracle_equivalence),
        ("cancellation suite", cancellation_suite),
        ("ideal-MHD energy conservation", ideal_mhd_conservation),
        ("L2 growth bound", l2_growth_bound),
        ("RK4 order", rk4_order),
        ("truncation decay", truncation_decay),
        ("Cauchy in R", cauchy_in_r),
        ("commutator identity and Kato-Ponce ensemble", commutator_identity),
        ("interpolation exactness", interpolation_exactness),
        ("BKM plumbing", bkm_plumbing),
        ("determinism", determinism),
    ];
    let filter: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !filter.is_empty() && !filter.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        if !v.pass {
            failed += 1;
        }
        println!(
            "[{}] criterion {n:>2}: {name} ({:.1}s): {}",
            if v.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            v.detail
        );
    }
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
