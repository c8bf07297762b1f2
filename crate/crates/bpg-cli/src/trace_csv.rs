//! Trace CSV emission and parsing.
//!
//! Floats are written with 17 significant digits so a parse recovers the
//! exact bits. Absent metrics are empty fields, flags are `0`/`1`, and the
//! iterate coordinates follow the fixed columns as `x1 … xd`.

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use bpg_core::solvers::{IterRecord, Trace};

pub const FIXED_COLUMNS: [&str; 12] = [
    "iter",
    "s",
    "k",
    "psi",
    "norm_G",
    "norm_D",
    "norm_restricted_G",
    "step",
    "dist_boundary",
    "samples",
    "flag_boundary",
    "flag_prox_boundary",
];

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub s: usize,
    pub k: usize,
    pub psi: f64,
    pub norm_g: Option<f64>,
    pub norm_d: Option<f64>,
    pub norm_restricted_g: Option<f64>,
    pub step: f64,
    pub dist_boundary: Option<f64>,
    pub samples: u64,
    pub flag_boundary: bool,
    pub flag_prox_boundary: bool,
    pub x: Vec<f64>,
}

impl From<&IterRecord> for TraceRow {
    fn from(r: &IterRecord) -> Self {
        TraceRow {
            iter: r.iter,
            s: r.s,
            k: r.k,
            psi: r.psi,
            norm_g: r.norm_g,
            norm_d: r.norm_d,
            norm_restricted_g: r.norm_restricted_g,
            step: r.step,
            dist_boundary: r.dist_boundary,
            samples: r.samples,
            flag_boundary: r.flags.hit_boundary,
            flag_prox_boundary: r.flags.prox_on_boundary,
            x: r.x.clone(),
        }
    }
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

pub fn header(dim: usize) -> Vec<String> {
    FIXED_COLUMNS
        .iter()
        .map(|c| c.to_string())
        .chain((1..=dim).map(|i| format!("x{i}")))
        .collect()
}

pub fn write_trace_csv<W: Write>(trace: &Trace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(trace.dim))?;
    for r in &trace.records {
        let mut row = vec![
            r.iter.to_string(),
            r.s.to_string(),
            r.k.to_string(),
            fmt_f64(r.psi),
            fmt_opt(r.norm_g),
            fmt_opt(r.norm_d),
            fmt_opt(r.norm_restricted_g),
            fmt_f64(r.step),
            fmt_opt(r.dist_boundary),
            r.samples.to_string(),
            flag(r.flags.hit_boundary).to_string(),
            flag(r.flags.prox_on_boundary).to_string(),
        ];
        row.extend(r.x.iter().map(|v| fmt_f64(*v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn trace_csv_bytes(trace: &Trace) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_trace_csv(trace, &mut buf)?;
    Ok(buf)
}

pub fn emit_trace_csv(trace: &Trace, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_trace_csv(trace, std::io::BufWriter::new(file)).with_context(|| format!("writing {}", path.display()))
}

pub fn read_trace_csv<R: Read>(input: R) -> Result<Vec<TraceRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let head = rd.headers()?.clone();
    if head.len() < FIXED_COLUMNS.len() || head.iter().zip(FIXED_COLUMNS).any(|(a, b)| a != b) {
        bail!("unexpected trace header: {:?}", head.iter().collect::<Vec<_>>());
    }
    let dim = head.len() - FIXED_COLUMNS.len();
    let mut rows = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec?;
        let ctx = |col: &str| format!("row {} column {col}", line + 1);
        let num = |i: usize| -> Result<f64> { rec[i].parse::<f64>().with_context(|| ctx(FIXED_COLUMNS[i])) };
        let opt = |i: usize| -> Result<Option<f64>> {
            if rec[i].is_empty() {
                Ok(None)
            } else {
                num(i).map(Some)
            }
        };
        let int = |i: usize| -> Result<u64> { rec[i].parse::<u64>().with_context(|| ctx(FIXED_COLUMNS[i])) };
        let bit = |i: usize| -> Result<bool> {
            match &rec[i] {
                "0" => Ok(false),
                "1" => Ok(true),
                other => bail!("{}: expected 0 or 1, got {other:?}", ctx(FIXED_COLUMNS[i])),
            }
        };
        let x = (0..dim)
            .map(|j| {
                let i = FIXED_COLUMNS.len() + j;
                rec[i]
                    .parse::<f64>()
                    .with_context(|| format!("row {} column x{}", line + 1, j + 1))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(TraceRow {
            iter: int(0)? as usize,
            s: int(1)? as usize,
            k: int(2)? as usize,
            psi: num(3)?,
            norm_g: opt(4)?,
            norm_d: opt(5)?,
            norm_restricted_g: opt(6)?,
            step: num(7)?,
            dist_boundary: opt(8)?,
            samples: int(9)?,
            flag_boundary: bit(10)?,
            flag_prox_boundary: bit(11)?,
            x,
        });
    }
    Ok(rows)
}

pub fn parse_trace_csv(path: &Path) -> Result<Vec<TraceRow>> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_trace_csv(std::io::BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))
}

pub fn rows(trace: &Trace) -> Vec<TraceRow> {
    trace.records.iter().map(TraceRow::from).collect()
}
