//! Trajectory CSV, prep-history CSV and the JSONL event log.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use quench_core::{Complex64, RunStatus, TrajectoryRecord64};
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const TRAJECTORY_HEADER: [&str; 13] = [
    "step",
    "time",
    "energy_re",
    "energy_im",
    "energy_var",
    "update_norm",
    "param_norm",
    "residual",
    "rank_kept",
    "s_eig_min",
    "s_eig_max",
    "fidelity_ed",
    "status",
];

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Header line for a trajectory with the given observable columns.
pub fn trajectory_header(observables: &[String]) -> String {
    let mut cols: Vec<&str> = TRAJECTORY_HEADER.to_vec();
    cols.extend(observables.iter().map(String::as_str));
    cols.join(",")
}

pub fn trajectory_row(r: &TrajectoryRecord64) -> String {
    let mut cols = vec![
        r.step.to_string(),
        fmt_f64(r.time),
        fmt_f64(r.energy.re),
        fmt_f64(r.energy.im),
        fmt_f64(r.energy_variance),
        fmt_f64(r.update_norm),
        fmt_f64(r.param_norm),
        fmt_f64(r.residual),
        r.rank_kept.map(|k| k.to_string()).unwrap_or_default(),
        fmt_f64(r.spectrum_min),
        fmt_f64(r.spectrum_max),
        r.fidelity_ed.map(fmt_f64).unwrap_or_default(),
        r.status.as_str().to_string(),
    ];
    cols.extend(r.observables.iter().map(|(_, v)| fmt_f64(*v)));
    cols.join(",")
}

pub fn write_trajectory_csv<W: Write>(mut out: W, observables: &[String], records: &[TrajectoryRecord64]) -> std::io::Result<()> {
    writeln!(out, "{}", trajectory_header(observables))?;
    for r in records {
        writeln!(out, "{}", trajectory_row(r))?;
    }
    out.flush()
}

/// Writes one row per record. Observable columns follow the names carried by
/// the records (or `observables` for an empty trajectory).
pub fn emit_trajectory_csv(records: &[TrajectoryRecord64], observables: &[String], path: &Path) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    write_trajectory_csv(BufWriter::new(file), observables, records).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn field<T: std::str::FromStr>(line: usize, name: &str, s: &str) -> CliResult<T> {
    s.parse()
        .map_err(|_| CliError::Io(format!("trajectory line {line}: bad {name} value {s:?}")))
}

fn optional<T: std::str::FromStr>(line: usize, name: &str, s: &str) -> CliResult<Option<T>> {
    if s.is_empty() {
        Ok(None)
    } else {
        field(line, name, s).map(Some)
    }
}

/// Reads a trajectory CSV back; returns the observable names and the records.
pub fn parse_trajectory_csv(text: &str) -> CliResult<(Vec<String>, Vec<TrajectoryRecord64>)> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| CliError::Io("empty trajectory file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < TRAJECTORY_HEADER.len() || cols[..TRAJECTORY_HEADER.len()] != TRAJECTORY_HEADER {
        return Err(CliError::Io(format!("unexpected trajectory header {header:?}")));
    }
    let names: Vec<String> = cols[TRAJECTORY_HEADER.len()..].iter().map(|s| s.to_string()).collect();
    let mut records = Vec::new();
    for (k, line) in lines.enumerate() {
        let ln = k + 2;
        let v: Vec<&str> = line.split(',').collect();
        if v.len() != cols.len() {
            return Err(CliError::Io(format!(
                "trajectory line {ln}: {} columns, expected {}",
                v.len(),
                cols.len()
            )));
        }
        let status = RunStatus::parse(v[12]).ok_or_else(|| CliError::Io(format!("trajectory line {ln}: bad status {:?}", v[12])))?;
        let observables = names
            .iter()
            .zip(&v[13..])
            .map(|(n, s)| Ok((n.clone(), field(ln, n, s)?)))
            .collect::<CliResult<Vec<_>>>()?;
        records.push(TrajectoryRecord64 {
            step: field(ln, "step", v[0])?,
            time: field(ln, "time", v[1])?,
            energy: Complex64::new(field(ln, "energy_re", v[2])?, field(ln, "energy_im", v[3])?),
            energy_variance: field(ln, "energy_var", v[4])?,
            update_norm: field(ln, "update_norm", v[5])?,
            param_norm: field(ln, "param_norm", v[6])?,
            residual: field(ln, "residual", v[7])?,
            rank_kept: optional(ln, "rank_kept", v[8])?,
            spectrum_min: field(ln, "s_eig_min", v[9])?,
            spectrum_max: field(ln, "s_eig_max", v[10])?,
            fidelity_ed: optional(ln, "fidelity_ed", v[11])?,
            observables,
            status,
        });
    }
    Ok((names, records))
}

pub fn write_prep_history(history: &[(usize, f64)], path: &Path) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut out = BufWriter::new(file);
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    writeln!(out, "iter,infidelity").map_err(io)?;
    for (it, v) in history {
        writeln!(out, "{it},{}", fmt_f64(*v)).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Append-only JSON-lines log; a disabled log swallows events.
pub struct EventLog {
    out: Option<BufWriter<File>>,
}

impl EventLog {
    pub fn create(path: &Path) -> CliResult<Self> {
        let file = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(Self {
            out: Some(BufWriter::new(file)),
        })
    }

    pub fn disabled() -> Self {
        Self { out: None }
    }

    pub fn emit(&mut self, event: &str, mut body: Value) -> CliResult<()> {
        let Some(out) = self.out.as_mut() else {
            return Ok(());
        };
        if let Value::Object(map) = &mut body {
            map.insert("event".into(), Value::String(event.into()));
        }
        writeln!(out, "{body}")?;
        out.flush()?;
        Ok(())
    }
}

/// JSON has no NaN or infinity; those become null.
pub fn json_f64(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(step: usize, fid: Option<f64>, rank: Option<usize>) -> TrajectoryRecord64 {
        TrajectoryRecord64 {
            step,
            time: 0.1 * step as f64,
            energy: Complex64::new(-1.0 / 3.0, 1e-17),
            energy_variance: std::f64::consts::PI,
            update_norm: 2.0f64.sqrt(),
            param_norm: 1e300,
            residual: 5e-324,
            rank_kept: rank,
            spectrum_min: -0.0,
            spectrum_max: f64::NAN,
            fidelity_ed: fid,
            observables: vec![("mx".into(), 0.1 + 0.2), ("czz".into(), f64::INFINITY)],
            status: RunStatus::Ok,
        }
    }

    #[test]
    fn header_is_exact() {
        assert_eq!(
            trajectory_header(&[]),
            "step,time,energy_re,energy_im,energy_var,update_norm,param_norm,residual,rank_kept,s_eig_min,s_eig_max,fidelity_ed,status"
        );
        assert!(trajectory_header(&["mx".into()]).ends_with(",status,mx"));
    }

    #[test]
    fn empty_trajectory_is_header_only() {
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &[], &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert_eq!(parse_trajectory_csv(&text).unwrap().1.len(), 0);
    }

    #[test]
    fn rows_round_trip_bit_exactly() {
        let records = vec![record(0, Some(0.12345678901234568), Some(7)), record(1, None, None)];
        let names = vec!["mx".to_string(), "czz".to_string()];
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &names, &records).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let (parsed_names, parsed) = parse_trajectory_csv(&text).unwrap();
        assert_eq!(parsed_names, names);
        for (a, b) in records.iter().zip(&parsed) {
            assert_eq!(a.time.to_bits(), b.time.to_bits());
            assert_eq!(a.energy.re.to_bits(), b.energy.re.to_bits());
            assert_eq!(a.energy.im.to_bits(), b.energy.im.to_bits());
            assert_eq!(a.energy_variance.to_bits(), b.energy_variance.to_bits());
            assert_eq!(a.update_norm.to_bits(), b.update_norm.to_bits());
            assert_eq!(a.param_norm.to_bits(), b.param_norm.to_bits());
            assert_eq!(a.residual.to_bits(), b.residual.to_bits());
            assert_eq!(a.spectrum_min.to_bits(), b.spectrum_min.to_bits());
            assert!(b.spectrum_max.is_nan());
            assert_eq!(a.fidelity_ed.map(f64::to_bits), b.fidelity_ed.map(f64::to_bits));
            assert_eq!(a.rank_kept, b.rank_kept);
            assert_eq!(a.observables[0].1.to_bits(), b.observables[0].1.to_bits());
            assert_eq!(b.observables[1].1, f64::INFINITY);
        }
    }

    #[test]
    fn absent_fidelity_is_an_empty_field() {
        let row = trajectory_row(&record(3, None, Some(2)));
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[11], "");
        assert_eq!(cols[8], "2");
        assert_eq!(cols[12], "ok");
    }

    #[test]
    fn seventeen_significant_digits() {
        let s = fmt_f64(0.1);
        let mantissa = s.split('e').next().unwrap().replace(['.', '-'], "");
        assert_eq!(mantissa.len(), 17);
    }
}
