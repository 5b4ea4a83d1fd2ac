mod config;

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use mbsim_core::diagnostics::CsvWriter;
use mbsim_core::experiments::{run_study, StudyManifest};
use mbsim_core::integrate::{analyze_checkpoints, resume, run, RunSink};
use mbsim_core::spectral::Checkpoint;
use mbsim_core::{DiagRecord, Error, NormFlavor, Result, RunConfig, RunOutcome};

use config::ConfigFile;

#[derive(Parser)]
#[command(name = "mbsim", version, about = "Ideal magnetic Bénard pseudo-spectral simulator")]
#[command(after_help = "Exit status: 0 success, 1 domain error, 2 usage error.")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory [default: `out_dir` from the config, else ./out]
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Checkpoint cadence in steps (multiple of the diagnostic cadence)
    #[arg(long, global = true)]
    checkpoint_every: Option<u64>,

    /// Diagnostic cadence in steps [default: 10]
    #[arg(long, global = true)]
    diag_every: Option<u64>,

    /// Norm flavor of the headline blow-up integral [default: besov]
    #[arg(long, global = true, value_parser = ["linf", "besov", "bmo"])]
    norm_flavor: Option<String>,

    /// Random seed override
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation from a `key = value` config file
    #[command(after_help = config_help())]
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Continue a run from one of its checkpoints
    Resume {
        #[arg(long)]
        checkpoint: PathBuf,
        /// New final time [default: the original t_end]
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Run a convergence, truncation-decay or blow-up study manifest (JSON)
    Converge {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run an inequality probe ensemble manifest (JSON)
    Probe {
        #[arg(long)]
        config: PathBuf,
    },
    /// Recompute diagnostics and verdicts from stored checkpoints
    Analyze {
        /// Checkpoint files or directories containing `*.mbspec`
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
}

fn config_help() -> String {
    config::grammar_help()
}

/// Writes diagnostics and checkpoints as the run produces them.
struct FileSink {
    csv: CsvWriter<BufWriter<fs::File>>,
    csv_path: PathBuf,
    checkpoint_dir: PathBuf,
}

impl FileSink {
    fn create(out_dir: &Path, run: &RunConfig) -> anyhow::Result<Self> {
        fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
        let csv_path = out_dir.join("diagnostics.csv");
        let file = fs::File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?;
        let cfg = serde_json::to_string(run)?;
        let csv = CsvWriter::new(BufWriter::new(file), &cfg, run.norm_flavor)?;
        Ok(Self {
            csv,
            csv_path,
            checkpoint_dir: out_dir.join("checkpoints"),
        })
    }
}

impl RunSink for FileSink {
    fn diagnostic(&mut self, record: &DiagRecord) -> Result<()> {
        self.csv.write(record).map_err(|e| Error::io(&self.csv_path, e))
    }

    fn checkpoint(&mut self, checkpoint: &Checkpoint, step: u64) -> Result<()> {
        fs::create_dir_all(&self.checkpoint_dir).map_err(|e| Error::io(&self.checkpoint_dir, e))?;
        checkpoint.write(&self.checkpoint_dir.join(format!("step_{step:08}.mbspec")))
    }
}

fn finish_run(out_dir: &Path, mut sink: FileSink, outcome: &RunOutcome) -> anyhow::Result<()> {
    sink.csv.flush()?;
    let path = out_dir.join("report.json");
    fs::write(&path, serde_json::to_string_pretty(&outcome.report)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    let r = &outcome.report;
    println!(
        "{} steps, t = {}, termination: {}, BKM ({}) full = {:.6e}",
        r.steps,
        r.t_final,
        serde_json::to_string(&r.termination)?,
        r.verdicts.bkm.flavor.name(),
        r.verdicts.bkm.full
    );
    Ok(())
}

fn apply_overrides(cli: &Cli, rc: &mut RunConfig) -> Result<()> {
    if let Some(d) = cli.diag_every {
        rc.diag_every = d;
    }
    if let Some(c) = cli.checkpoint_every {
        rc.checkpoint_every = Some(c);
    }
    if let Some(f) = &cli.norm_flavor {
        rc.norm_flavor = f.parse::<NormFlavor>()?;
    }
    if let Some(s) = cli.seed {
        rc.init.seed = s;
    }
    rc.validate()
}

fn checkpoint_files(paths: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("reading {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|q| q.extension().is_some_and(|x| x == "mbspec"))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn execute(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Run { config } => {
            let text = fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
            let file = ConfigFile::parse(&text)?;
            let mut rc = file.run_config()?;
            apply_overrides(cli, &mut rc)?;
            let out_dir = cli.out_dir.clone().map_or_else(|| file.out_dir(), Ok)?;
            let mut sink = FileSink::create(&out_dir, &rc)?;
            let outcome = run(&rc, &mut sink)?;
            finish_run(&out_dir, sink, &outcome)
        }
        Command::Resume { checkpoint, t_end } => {
            let ck = Checkpoint::read(checkpoint)?;
            let out_dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
            let mut rc: RunConfig = serde_json::from_value(ck.meta.extra["run"].clone())
                .map_err(|e| Error::Data(format!("checkpoint carries no run metadata: {e}")))?;
            if let Some(t) = t_end {
                rc.sim.t_end = *t;
            }
            let mut sink = FileSink::create(&out_dir, &rc)?;
            let outcome = resume(&ck, *t_end, &mut sink)?;
            finish_run(&out_dir, sink, &outcome)
        }
        Command::Converge { config } | Command::Probe { config } => {
            let text = fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
            let mut manifest = StudyManifest::from_json(&text)?;
            let is_probe = matches!(cli.command, Command::Probe { .. });
            if is_probe != matches!(manifest, StudyManifest::Probe(_)) {
                return Err(Error::Usage(if is_probe {
                    "probe expects a manifest with \"study\": \"probe\"".into()
                } else {
                    "use the probe subcommand for probe manifests".into()
                })
                .into());
            }
            if let Some(seed) = cli.seed {
                match &mut manifest {
                    StudyManifest::Convergence(s) => s.init.seed = seed,
                    StudyManifest::TruncationDecay(s) => s.seed = seed,
                    StudyManifest::Blowup(rc) => rc.init.seed = seed,
                    StudyManifest::Probe(p) => p.seed = seed,
                }
            }
            let out_dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
            let summary = run_study(&manifest, &out_dir)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(())
        }
        Command::Analyze { paths } => {
            let files = checkpoint_files(paths)?;
            let cks = files.iter().map(|p| Checkpoint::read(p)).collect::<Result<Vec<_>>>()?;
            let (rc, records, verdicts) = analyze_checkpoints(&cks)?;
            let out_dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
            fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            let flavor = match &cli.norm_flavor {
                Some(f) => f.parse::<NormFlavor>()?,
                None => rc.norm_flavor,
            };
            mbsim_core::experiments::write_csv(
                &out_dir.join("analysis.csv"),
                &serde_json::to_string(&rc)?,
                flavor,
                &records,
            )?;
            let summary = serde_json::json!({ "config": rc, "checkpoints": files, "verdicts": verdicts });
            let path = out_dir.join("analysis.json");
            fs::write(&path, serde_json::to_string_pretty(&summary)? + "\n")
                .with_context(|| format!("writing {}", path.display()))?;
            println!("analyzed {} checkpoints", records.len());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = matches!(e.downcast_ref::<Error>(), Some(Error::Usage(_)));
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}
