use std::io::Write;

use super::DiagRecord;
use crate::error::{Error, Result};
use crate::spectral::NormFlavor;

pub const CSV_HEADER: [&str; 15] = [
    "t",
    "Y",
    "X",
    "vort_linf",
    "vort_besov",
    "vort_bmo",
    "current_linf",
    "current_besov",
    "current_bmo",
    "gradtheta_linf",
    "gradtheta_besov",
    "gradtheta_bmo",
    "bkm_full",
    "bkm_relaxed",
    "energy_residual",
];

/// Time-series writer. The first line is `# config: <json>`, then the
/// header, then one row per record with 17 significant digits.
pub struct CsvWriter<W: Write> {
    out: W,
    flavor: NormFlavor,
}

impl<W: Write> CsvWriter<W> {
    pub fn new(mut out: W, config_json: &str, flavor: NormFlavor) -> std::io::Result<Self> {
        writeln!(out, "# config: {config_json}")?;
        writeln!(out, "{}", CSV_HEADER.join(","))?;
        Ok(Self { out, flavor })
    }

    pub fn write(&mut self, r: &DiagRecord) -> std::io::Result<()> {
        let i = self.flavor.index();
        let row = [
            r.t,
            r.y,
            r.x,
            r.vorticity.linf,
            r.vorticity.besov,
            r.vorticity.bmo,
            r.current.linf,
            r.current.besov,
            r.current.bmo,
            r.grad_theta.linf,
            r.grad_theta.besov,
            r.grad_theta.bmo,
            r.bkm_full[i],
            r.bkm_relaxed[i],
            r.energy_residual,
        ];
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(self.out, "{}", cells.join(","))
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        self.out.flush()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// Parses a diagnostics CSV into its config line and numeric rows.
pub fn parse_csv(text: &str) -> Result<(Option<String>, Vec<Vec<f64>>)> {
    let mut config = None;
    let mut rows = Vec::new();
    let mut header_seen = false;
    for (n, line) in text.lines().enumerate() {
        if let Some(rest) = line.strip_prefix("# config: ") {
            config = Some(rest.to_string());
            continue;
        }
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            if line != CSV_HEADER.join(",") {
                return Err(Error::Data(format!("unexpected CSV header '{line}'")));
            }
            header_seen = true;
            continue;
        }
        let row = line
            .split(',')
            .map(|c| {
                c.parse::<f64>()
                    .map_err(|e| Error::Data(format!("line {}: {e}", n + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != CSV_HEADER.len() {
            return Err(Error::Data(format!("line {}: expected {} columns", n + 1, CSV_HEADER.len())));
        }
        rows.push(row);
    }
    Ok((config, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::NormTriple;

    #[test]
    fn rows_round_trip_exactly() {
        let r = DiagRecord {
            step: 3,
            t: 0.1 + 0.2,
            y: 1.0 / 3.0,
            x: std::f64::consts::PI,
            vorticity: NormTriple { linf: 2.0, besov: 1.5, bmo: 0.7 },
            current: NormTriple::default(),
            grad_theta: NormTriple::default(),
            grad_u_linf: 1.0,
            bkm_full: [1e-300, 2.0, 3.0],
            bkm_relaxed: [0.0, 1.0, 2.0],
            grad_u_integral: 0.0,
            energy_residual: -1.2345678901234567e-17,
            div_u: 0.0,
            div_b: 0.0,
        };
        let mut w = CsvWriter::new(Vec::new(), "{}", NormFlavor::Besov).unwrap();
        w.write(&r).unwrap();
        let text = String::from_utf8(w.into_inner()).unwrap();
        let (cfg, rows) = parse_csv(&text).unwrap();
        assert_eq!(cfg.as_deref(), Some("{}"));
        assert_eq!(rows[0][0].to_bits(), r.t.to_bits());
        assert_eq!(rows[0][1].to_bits(), r.y.to_bits());
        assert_eq!(rows[0][12], 2.0);
        assert_eq!(rows[0][14].to_bits(), r.energy_residual.to_bits());
    }
}
