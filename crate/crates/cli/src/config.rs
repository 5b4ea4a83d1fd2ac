//! `key = value` run configuration files.
//!
//! Grammar: one `key = value` pair per line; `#` starts a comment; blank
//! lines are ignored; keys may appear once. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::PathBuf;

use mbsim_core::integrate::InitKind;
use mbsim_core::{Coupling, DtPolicy, Error, Grid, InitialSpec, NormFlavor, Result, RunConfig, SimConfig};

/// Accepted keys with their defaults (`None` marks a required key).
pub const KEYS: &[(&str, Option<&str>, &str)] = &[
    ("dim", None, "spatial dimension, 2 or 3"),
    ("n", None, "grid points per axis (even, ≥ 8)"),
    ("radius", None, "truncation radius R (≤ N/3)"),
    ("s", Some("2.5"), "Sobolev index, > dim/2 + 1"),
    ("t_end", None, "final time"),
    ("buoyancy_axis", Some("last"), "0-based axis of e_n"),
    ("coupling", Some("benard"), "benard | passive (drop buoyancy exchange)"),
    ("dt", Some("cfl"), "fixed step, or 'cfl' for CFL control"),
    ("cfl_c_max", Some("0.5"), "CFL number"),
    ("cfl_dt_max", Some("0.01"), "CFL step cap"),
    ("init", Some("taylor_green"), "taylor_green | random_band | checkpoint"),
    ("amplitude", Some("1.0"), "Taylor-Green amplitude"),
    ("hs_target", Some("1.0"), "random_band: ‖u₀‖_{H^s}"),
    ("checkpoint_path", Some(""), "init = checkpoint: source file"),
    ("theta_amplitude", Some("0.0"), "‖θ₀‖_{L²}"),
    ("b_amplitude", Some("0.0"), "‖b₀‖_{L²}"),
    ("seed", Some("0"), "random seed"),
    ("spectrum_exponent", Some("4.0"), "decay exponent of random spectra"),
    ("band_radius", Some("auto"), "support radius of random spectra"),
    ("diag_every", Some("10"), "diagnostic cadence in steps"),
    ("checkpoint_every", Some("none"), "checkpoint cadence in steps"),
    ("norm_flavor", Some("besov"), "linf | besov | bmo"),
    ("out_dir", Some("out"), "output directory"),
];

/// Parsed `key = value` document.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.iter().any(|(name, _, _)| *name == k) {
                return Err(Error::Config(format!("line {}: unknown key '{k}'", n + 1)));
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{k}'", n + 1)));
            }
        }
        Ok(Self { entries })
    }

    fn raw(&self, key: &str) -> Result<String> {
        if let Some(v) = self.entries.get(key) {
            return Ok(v.clone());
        }
        let (_, default, _) = KEYS.iter().find(|(k, _, _)| *k == key).unwrap();
        default
            .map(str::to_string)
            .ok_or_else(|| Error::Config(format!("missing required key '{key}'")))
    }

    fn parse_as<T: std::str::FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.raw(key)?;
        v.parse()
            .map_err(|e| Error::Config(format!("key '{key}': cannot parse '{v}': {e}")))
    }

    pub fn out_dir(&self) -> Result<PathBuf> {
        Ok(PathBuf::from(self.raw("out_dir")?))
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        let dim: usize = self.parse_as("dim")?;
        let grid = Grid::new(dim, self.parse_as("n")?)?;
        let mut sim = SimConfig::new(grid, self.parse_as("radius")?, self.parse_as("s")?, self.parse_as("t_end")?)?;
        let axis = self.raw("buoyancy_axis")?;
        if axis != "last" {
            sim.buoyancy_axis = self.parse_as("buoyancy_axis")?;
        }
        sim.coupling = match self.raw("coupling")?.as_str() {
            "benard" => Coupling::Benard,
            "passive" => Coupling::Passive,
            other => return Err(Error::Config(format!("unknown coupling '{other}'"))),
        };
        sim.dt_policy = if self.raw("dt")? == "cfl" {
            DtPolicy::Cfl {
                c_max: self.parse_as("cfl_c_max")?,
                dt_max: self.parse_as("cfl_dt_max")?,
            }
        } else {
            DtPolicy::Fixed { dt: self.parse_as("dt")? }
        };
        sim.validate()?;

        let kind = match self.raw("init")?.as_str() {
            "taylor_green" => InitKind::TaylorGreen { amplitude: self.parse_as("amplitude")? },
            "random_band" => InitKind::RandomBand { hs_target: self.parse_as("hs_target")? },
            "checkpoint" => {
                let p = self.raw("checkpoint_path")?;
                if p.is_empty() {
                    return Err(Error::Config("init = checkpoint needs checkpoint_path".into()));
                }
                InitKind::FromCheckpoint { path: PathBuf::from(p) }
            }
            other => return Err(Error::Config(format!("unknown init kind '{other}'"))),
        };
        let band = self.raw("band_radius")?;
        let init = InitialSpec {
            kind,
            theta_amplitude: self.parse_as("theta_amplitude")?,
            b_amplitude: self.parse_as("b_amplitude")?,
            seed: self.parse_as("seed")?,
            spectrum_exponent: self.parse_as("spectrum_exponent")?,
            band_radius: if band == "auto" { None } else { Some(self.parse_as("band_radius")?) },
        };
        let mut rc = RunConfig::new(sim, init);
        rc.diag_every = self.parse_as("diag_every")?;
        let ck = self.raw("checkpoint_every")?;
        rc.checkpoint_every = if ck == "none" { None } else { Some(self.parse_as("checkpoint_every")?) };
        rc.norm_flavor = self.parse_as::<NormFlavor>("norm_flavor")?;
        rc.validate()?;
        Ok(rc)
    }
}

/// Help text listing every key and its default.
pub fn grammar_help() -> String {
    let mut s = String::from("Config file keys (`key = value`, `#` comments):\n");
    for (k, d, what) in KEYS {
        let d = d.map(|d| format!(" [default: {d}]")).unwrap_or_else(|| " [required]".into());
        s.push_str(&format!("  {k:<18} {what}{d}\n"));
    }
    s
}
