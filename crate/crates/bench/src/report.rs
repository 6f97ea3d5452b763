//! Aggregate rows, CSV output with parse-back, and the plain-text table.

use std::fmt::Write as _;
use std::path::Path;

use crate::experiment::{Algorithm, Cell, Family, TrialOutcome};
use crate::{usage, BenchError, Result};

/// Summary of one algorithm on one cell, matching the table columns.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub family: String,
    pub algorithm: String,
    pub n: usize,
    pub m: Option<usize>,
    pub r: usize,
    pub s: Option<usize>,
    pub lambda: Option<f64>,
    pub trials: usize,
    pub success_pct: f64,
    pub fval_max: f64,
    pub fval_min: f64,
    pub iter_s: Option<f64>,
    pub iter_f: Option<f64>,
    pub cpu_s: Option<f64>,
    pub cpu_f: Option<f64>,
    /// Mean restarts among solved trials (random-restart factorization only).
    pub init_no_s: Option<f64>,
}

pub const CSV_COLUMNS: [&str; 16] = [
    "family",
    "algorithm",
    "n",
    "m",
    "r",
    "s",
    "lambda",
    "trials",
    "success_pct",
    "fval_max",
    "fval_min",
    "iter_s",
    "iter_f",
    "cpu_s",
    "cpu_f",
    "init_no_s",
];

const EMPTY: &str = "-";

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

pub fn aggregate(family: Family, alg: Algorithm, cell: &Cell, outcomes: &[TrialOutcome]) -> AggregateRow {
    let solved = || outcomes.iter().filter(|o| o.success);
    let failed = || outcomes.iter().filter(|o| !o.success);
    let n_solved = solved().count();
    AggregateRow {
        family: family.name().to_string(),
        algorithm: alg.name().to_string(),
        n: cell.n,
        m: cell.m,
        r: cell.r,
        s: cell.s,
        lambda: cell.lambda,
        trials: outcomes.len(),
        success_pct: if outcomes.is_empty() {
            0.0
        } else {
            100.0 * n_solved as f64 / outcomes.len() as f64
        },
        fval_max: outcomes.iter().map(|o| o.fval).fold(f64::NAN, f64::max),
        fval_min: outcomes.iter().map(|o| o.fval).fold(f64::NAN, f64::min),
        iter_s: mean(solved().map(|o| o.iters as f64)),
        iter_f: mean(failed().map(|o| o.iters as f64)),
        cpu_s: mean(solved().map(|o| o.cpu)),
        cpu_f: mean(failed().map(|o| o.cpu)),
        init_no_s: if family == Family::CpRandomInit {
            mean(solved().map(|o| o.inits as f64))
        } else {
            None
        },
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| EMPTY.to_string(), |v| v.to_string())
}

impl AggregateRow {
    /// CSV fields in [`CSV_COLUMNS`] order; floats use the shortest representation
    /// that parses back to the same value.
    pub fn csv_fields(&self) -> Vec<String> {
        vec![
            self.family.clone(),
            self.algorithm.clone(),
            self.n.to_string(),
            opt(self.m),
            self.r.to_string(),
            opt(self.s),
            opt(self.lambda),
            self.trials.to_string(),
            self.success_pct.to_string(),
            self.fval_max.to_string(),
            self.fval_min.to_string(),
            opt(self.iter_s),
            opt(self.iter_f),
            opt(self.cpu_s),
            opt(self.cpu_f),
            opt(self.init_no_s),
        ]
    }

    pub fn from_csv_fields(fields: &[&str]) -> Result<Self> {
        if fields.len() != CSV_COLUMNS.len() {
            return Err(usage(format!(
                "expected {} CSV fields, found {}",
                CSV_COLUMNS.len(),
                fields.len()
            )));
        }
        fn num<T: std::str::FromStr>(s: &str, col: &str) -> Result<T> {
            s.parse().map_err(|_| usage(format!("bad value '{s}' in column {col}")))
        }
        fn maybe<T: std::str::FromStr>(s: &str, col: &str) -> Result<Option<T>> {
            if s == EMPTY {
                Ok(None)
            } else {
                num(s, col).map(Some)
            }
        }
        let c = &CSV_COLUMNS;
        Ok(Self {
            family: fields[0].to_string(),
            algorithm: fields[1].to_string(),
            n: num(fields[2], c[2])?,
            m: maybe(fields[3], c[3])?,
            r: num(fields[4], c[4])?,
            s: maybe(fields[5], c[5])?,
            lambda: maybe(fields[6], c[6])?,
            trials: num(fields[7], c[7])?,
            success_pct: num(fields[8], c[8])?,
            fval_max: num(fields[9], c[9])?,
            fval_min: num(fields[10], c[10])?,
            iter_s: maybe(fields[11], c[11])?,
            iter_f: maybe(fields[12], c[12])?,
            cpu_s: maybe(fields[13], c[13])?,
            cpu_f: maybe(fields[14], c[14])?,
            init_no_s: maybe(fields[15], c[15])?,
        })
    }
}

pub fn write_csv<W: std::io::Write>(out: W, rows: &[AggregateRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for row in rows {
        w.write_record(row.csv_fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| {
        BenchError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })?;
    write_csv(std::io::BufWriter::new(file), rows)
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<AggregateRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != CSV_COLUMNS {
        return Err(usage(format!("unexpected CSV header {header:?}")));
    }
    rd.records()
        .map(|rec| {
            let rec = rec?;
            let fields: Vec<&str> = rec.iter().collect();
            AggregateRow::from_csv_fields(&fields)
        })
        .collect()
}

/// `%.0e` as printed by C and MATLAB: `2e-33`, `0e+00`, `1e+01`.
pub fn format_sci0(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{v:.0e}");
    match s.split_once('e') {
        Some((mantissa, exp)) => {
            let e: i32 = exp.parse().unwrap_or(0);
            let sign = if e < 0 { '-' } else { '+' };
            format!("{mantissa}e{sign}{:02}", e.abs())
        }
        None => s,
    }
}

fn cell_or_dash(v: Option<f64>, f: impl Fn(f64) -> String) -> String {
    v.map_or_else(|| EMPTY.to_string(), f)
}

/// Aligned table in the layout of the published result tables.
pub fn format_table(rows: &[AggregateRow]) -> String {
    let header = [
        "family", "alg", "n", "m", "r", "s", "lambda", "success(%)", "fval_max", "fval_min",
        "iter_s", "iter_f", "CPU_s", "CPU_f", "InitNo_s",
    ];
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.family.clone(),
                r.algorithm.clone(),
                r.n.to_string(),
                opt(r.m),
                r.r.to_string(),
                opt(r.s),
                cell_or_dash(r.lambda, |l| format!("{l:.2}")),
                format!("{:.0}", r.success_pct),
                format_sci0(r.fval_max),
                format_sci0(r.fval_min),
                cell_or_dash(r.iter_s, |v| format!("{v:.0}")),
                cell_or_dash(r.iter_f, |v| format!("{v:.0}")),
                cell_or_dash(r.cpu_s, |v| format!("{v:.4}")),
                cell_or_dash(r.cpu_f, |v| format!("{v:.4}")),
                cell_or_dash(r.init_no_s, |v| format!("{v:.1}")),
            ]
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|j| body.iter().map(|row| row[j].len()).chain([header[j].len()]).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    let mut line = |cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(j, (c, w))| if j < 2 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&header.map(str::to_string));
    for row in &body {
        line(row);
    }
    out
}
