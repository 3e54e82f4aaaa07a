//! Report serialization.
//!
//! * `table` — `points.csv`, one row per grid point, columns from [`table_columns`].
//! * `structured` — `report.json`, the whole [`Report`].
//! * `plotdata` — whitespace-separated `.dat` files with a `#` header line:
//!   `eigenvalues.dat`, `foci.dat` (focal sheets as point clouds) and `screens.dat`.
//!
//! Output depends only on the report, so identical reports give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::analysis::{PointRecord, Report};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Table,
    Structured,
    Plotdata,
    All,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "table" => Ok(Format::Table),
            "structured" => Ok(Format::Structured),
            "plotdata" => Ok(Format::Plotdata),
            "all" => Ok(Format::All),
            other => Err(format!("unknown format `{other}` (expected table, structured, plotdata or all)")),
        }
    }
}

fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Column names of `points.csv`, in order.
///
/// `p` parameters, ambient dimension `n`, screen labels in report order:
/// `index, u0…u{p−1}, x0…x{n−1}, error, classification, umbilic_factor, lambda_norm,
/// eig1…eig{n−2}, I1…I{n−2}, P1…P{n−2}, sectional_min, sectional_max, generator_identity_residual,
/// finite_foci, foci_at_infinity, focus_s1…, connection_integrable`, then for each screen
/// `<label>:status, <label>:reason, <label>:gauge_residual, <label>:integrable, <label>:level_set_residual`.
pub fn table_columns(report: &Report) -> Vec<String> {
    let p = report.config.grid.counts.len();
    let n = report.config.metric.dim();
    let m = n - 2;
    let mut cols = vec!["index".to_string()];
    cols.extend((0..p).map(|k| format!("u{k}")));
    cols.extend((0..n).map(|k| format!("x{k}")));
    cols.extend(["error", "classification", "umbilic_factor", "lambda_norm"].map(String::from));
    cols.extend((1..=m).map(|k| format!("eig{k}")));
    cols.extend((1..=m).map(|k| format!("I{k}")));
    cols.extend((1..=m).map(|k| format!("P{k}")));
    cols.extend(
        [
            "sectional_min",
            "sectional_max",
            "generator_identity_residual",
            "finite_foci",
            "foci_at_infinity",
        ]
        .map(String::from),
    );
    cols.extend((1..=m).map(|k| format!("focus_s{k}")));
    cols.push("connection_integrable".into());
    for label in screen_labels(report) {
        for field in ["status", "reason", "gauge_residual", "integrable", "level_set_residual"] {
            cols.push(format!("{label}:{field}"));
        }
    }
    cols
}

fn screen_labels(report: &Report) -> Vec<String> {
    let mut labels: Vec<String> = Vec::new();
    for p in &report.points {
        for s in &p.screens {
            if !labels.contains(&s.label) {
                labels.push(s.label.clone());
            }
        }
    }
    labels
}

fn table_row(p: &PointRecord, m: usize, labels: &[String]) -> Vec<String> {
    let mut row = vec![p.index.to_string()];
    row.extend(p.params.iter().copied().map(num));
    row.extend(p.point.iter().copied().map(num));
    row.push(p.error.clone().unwrap_or_default());
    let pad = |v: Option<&Vec<f64>>| -> Vec<String> {
        (0..m)
            .map(|k| v.and_then(|v| v.get(k).copied()).map(num).unwrap_or_default())
            .collect()
    };
    match &p.shape {
        Some(s) => {
            row.push(s.classification.into());
            row.push(opt(s.umbilic_factor));
            row.push(num(s.lambda_norm));
        }
        None => row.extend([String::new(), String::new(), String::new()]),
    }
    row.extend(pad(p.shape.as_ref().map(|s| &s.eigenvalues)));
    row.extend(pad(p.invariants.as_ref().map(|i| &i.elementary)));
    row.extend(pad(p.invariants.as_ref().map(|i| &i.power_sums)));
    let range = p.sectional.as_ref().and_then(|s| s.range);
    row.push(opt(range.map(|r| r.0)));
    row.push(opt(range.map(|r| r.1)));
    row.push(opt(p.sectional.as_ref().and_then(|s| s.generator_identity_residual)));
    match &p.foci {
        Some(f) => {
            row.push(f.set.foci.iter().map(|x| x.multiplicity).sum::<usize>().to_string());
            row.push(f.set.at_infinity.to_string());
            let s: Vec<f64> = f
                .set
                .foci
                .iter()
                .flat_map(|x| std::iter::repeat_n(x.s, x.multiplicity))
                .collect();
            row.extend(pad(Some(&s)));
        }
        None => {
            row.extend([String::new(), String::new()]);
            row.extend(pad(None));
        }
    }
    row.push(p.connection.as_ref().map(|c| c.integrable.to_string()).unwrap_or_default());
    for label in labels {
        match p.screens.iter().find(|s| &s.label == label) {
            Some(s) => {
                row.push(s.status.into());
                row.push(s.reason.unwrap_or_default().into());
                row.push(opt(s.gauge_residual));
                row.push(s.integrable.map(|b| b.to_string()).unwrap_or_default());
                row.push(opt(s.level_set_residual));
            }
            None => row.extend(std::iter::repeat_n(String::new(), 5)),
        }
    }
    row
}

pub fn table_bytes(report: &Report) -> Result<Vec<u8>> {
    let m = report.config.metric.dim() - 2;
    let labels = screen_labels(report);
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(table_columns(report)).map_err(io)?;
    for p in &report.points {
        w.write_record(table_row(p, m, &labels)).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

pub fn structured_bytes(report: &Report) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(report).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    out.push(b'\n');
    Ok(out)
}

/// `(file name, contents)` of every plot-data file.
pub fn plotdata_files(report: &Report) -> Vec<(&'static str, String)> {
    let p = report.config.grid.counts.len();
    let n = report.config.metric.dim();
    let m = n - 2;
    let u_cols: Vec<String> = (0..p).map(|k| format!("u{k}")).collect();

    let mut eig = format!("# index {} {}\n", u_cols.join(" "), (1..=m).map(|k| format!("eig{k}")).collect::<Vec<_>>().join(" "));
    let mut foci = format!(
        "# index {} sheet s multiplicity {} jacobian\n",
        u_cols.join(" "),
        (0..n).map(|k| format!("F{k}")).collect::<Vec<_>>().join(" ")
    );
    let mut screens = format!("# index {} label status gauge_residual\n", u_cols.join(" "));
    for rec in &report.points {
        let u = rec.params.iter().map(|x| num(*x)).collect::<Vec<_>>().join(" ");
        if let Some(s) = &rec.shape {
            let e = s.eigenvalues.iter().map(|x| num(*x)).collect::<Vec<_>>().join(" ");
            let _ = writeln!(eig, "{} {u} {e}", rec.index);
        }
        if let Some(f) = &rec.foci {
            for (sheet, x) in f.set.foci.iter().enumerate() {
                let pt = x.point.iter().map(|c| num(*c)).collect::<Vec<_>>().join(" ");
                let _ = writeln!(
                    foci,
                    "{} {u} {} {} {} {pt} {}",
                    rec.index,
                    sheet + 1,
                    num(x.s),
                    x.multiplicity,
                    num(x.jacobian)
                );
            }
        }
        for s in &rec.screens {
            let _ = writeln!(
                screens,
                "{} {u} {} {} {}",
                rec.index,
                s.label,
                s.reason.unwrap_or(s.status),
                s.gauge_residual.map(num).unwrap_or_else(|| "nan".into())
            );
        }
    }
    vec![("eigenvalues.dat", eig), ("foci.dat", foci), ("screens.dat", screens)]
}

/// Writes the requested format into `dir`, returning the files written.
pub fn emit(report: &Report, format: Format, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, bytes: &[u8]| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, bytes)?;
        written.push(path);
        Ok(())
    };
    if matches!(format, Format::Table | Format::All) {
        put("points.csv", &table_bytes(report)?)?;
    }
    if matches!(format, Format::Structured | Format::All) {
        put("report.json", &structured_bytes(report)?)?;
    }
    if matches!(format, Format::Plotdata | Format::All) {
        for (name, text) in plotdata_files(report) {
            put(name, text.as_bytes())?;
        }
    }
    Ok(written)
}
