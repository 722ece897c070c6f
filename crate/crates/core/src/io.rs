//! CSV artifacts. Every float is written with 17 significant digits so that
//! values read back are bit-identical, and records end in a bare LF.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::{CreatorStrategy, UserStrategy};
use crate::qlearn::LearningTrace;
use crate::replicator::equilibria::{EquilibriumRecord, Stability};
use crate::replicator::{ReplicatorState, Trajectory};

pub const TRAJECTORY_HEADER: [&str; 7] = ["t", "x", "y", "z", "w", "dtg", "alpha"];
pub const EQUILIBRIUM_HEADER: [&str; 6] = ["label", "coords", "feasible", "reason", "eigenvalues", "stability"];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(field: &str, column: &str) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Csv(format!("column {column}: {field:?} is not a number")))
}

fn parse_bool(field: &str, column: &str) -> Result<bool> {
    match field.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::Csv(format!("column {column}: {field:?} is not true/false"))),
    }
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).from_reader(r)
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[String]) -> Result<()> {
    let found: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if found != expected {
        return Err(Error::Csv(format!("expected columns {expected:?}, found {found:?}")));
    }
    Ok(())
}

fn owned(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

fn flush<W: Write>(mut wtr: csv::Writer<W>) -> Result<()> {
    wtr.flush().map_err(|e| Error::Csv(e.to_string()))
}

pub fn write_trajectory<W: Write>(out: W, trajectory: &Trajectory) -> Result<()> {
    let mut wtr = writer(out);
    wtr.write_record(TRAJECTORY_HEADER)?;
    for (t, s) in trajectory.times.iter().zip(&trajectory.states) {
        wtr.write_record([*t, s.x, s.y, s.z, s.w, s.dtg(), s.alpha].map(fmt_f64))?;
    }
    flush(wtr)
}

/// `(t, state)` pairs. The `dtg` column must match `1 - x - y - z - w`.
pub fn read_trajectory<R: Read>(input: R) -> Result<Vec<(f64, ReplicatorState)>> {
    let mut rdr = reader(input);
    check_header(&mut rdr, &owned(&TRAJECTORY_HEADER))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let v: Vec<f64> = rec
            .iter()
            .zip(TRAJECTORY_HEADER)
            .map(|(f, c)| parse_f64(f, c))
            .collect::<Result<_>>()?;
        let s = ReplicatorState::new(v[1], v[2], v[3], v[4], v[6]);
        if (s.dtg() - v[5]).abs() > 1e-9 {
            return Err(Error::Csv(format!("dtg column {} disagrees with 1-x-y-z-w = {}", v[5], s.dtg())));
        }
        out.push((v[0], s));
    }
    Ok(out)
}

/// One parsed row of the equilibrium CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumRow {
    pub label: String,
    pub coords: [f64; 5],
    pub feasible: bool,
    pub reason: String,
    pub eigenvalues: Vec<Complex64>,
    pub stability: Stability,
}

fn join_coords(s: &ReplicatorState) -> String {
    [s.x, s.y, s.z, s.w, s.alpha].map(fmt_f64).join(";")
}

fn join_eigenvalues(eigs: &[Complex64]) -> String {
    eigs.iter().map(|e| format!("{}:{}", fmt_f64(e.re), fmt_f64(e.im))).collect::<Vec<_>>().join(";")
}

pub fn write_equilibria<W: Write>(out: W, records: &[EquilibriumRecord]) -> Result<()> {
    let mut wtr = writer(out);
    wtr.write_record(EQUILIBRIUM_HEADER)?;
    for r in records {
        wtr.write_record([
            r.display_label(),
            join_coords(&r.state),
            r.feasible.to_string(),
            r.reason.clone(),
            join_eigenvalues(&r.eigenvalues),
            r.stability.to_string(),
        ])?;
    }
    flush(wtr)
}

pub fn read_equilibria<R: Read>(input: R) -> Result<Vec<EquilibriumRow>> {
    let mut rdr = reader(input);
    check_header(&mut rdr, &owned(&EQUILIBRIUM_HEADER))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let coords: Vec<f64> = rec[1].split(';').map(|f| parse_f64(f, "coords")).collect::<Result<_>>()?;
        let coords: [f64; 5] = coords
            .try_into()
            .map_err(|v: Vec<f64>| Error::Csv(format!("coords has {} entries, expected 5", v.len())))?;
        let eigenvalues = if rec[4].is_empty() {
            Vec::new()
        } else {
            rec[4]
                .split(';')
                .map(|pair| {
                    let (re, im) = pair
                        .split_once(':')
                        .ok_or_else(|| Error::Csv(format!("eigenvalue {pair:?} is not re:im")))?;
                    Ok(Complex64::new(parse_f64(re, "eigenvalues")?, parse_f64(im, "eigenvalues")?))
                })
                .collect::<Result<_>>()?
        };
        out.push(EquilibriumRow {
            label: rec[0].to_string(),
            coords,
            feasible: parse_bool(&rec[2], "feasible")?,
            reason: rec[3].to_string(),
            eigenvalues,
            stability: rec[5].parse()?,
        });
    }
    Ok(out)
}

pub fn q_trace_header() -> Vec<String> {
    let mut h = vec!["episode".to_string()];
    h.extend(UserStrategy::ALL.iter().map(|s| format!("user_{s}")));
    h.extend(CreatorStrategy::ALL.iter().map(|s| format!("creator_{s}")));
    h.push("creator_coop_fraction".into());
    h
}

pub fn write_q_trace<W: Write>(out: W, trace: &LearningTrace) -> Result<()> {
    let mut wtr = writer(out);
    wtr.write_record(q_trace_header())?;
    for (e, (u, c)) in trace.users.iter().zip(&trace.creators).enumerate() {
        let mut row = vec![(e + 1).to_string()];
        row.extend(u.iter().chain(c).map(|x| fmt_f64(*x)));
        row.push(fmt_f64(c[0]));
        wtr.write_record(&row)?;
    }
    flush(wtr)
}

pub fn read_q_trace<R: Read>(input: R) -> Result<LearningTrace> {
    let mut rdr = reader(input);
    let header = q_trace_header();
    check_header(&mut rdr, &header)?;
    let mut trace = LearningTrace { users: Vec::new(), creators: Vec::new() };
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let episode: usize = rec[0].parse().map_err(|_| Error::Csv(format!("bad episode {:?}", &rec[0])))?;
        if episode != i + 1 {
            return Err(Error::Csv(format!("episode {episode} out of order")));
        }
        let v: Vec<f64> = (1..header.len()).map(|k| parse_f64(&rec[k], &header[k])).collect::<Result<_>>()?;
        if v[7] != v[5] {
            return Err(Error::Csv("creator_coop_fraction differs from creator_C".into()));
        }
        trace.users.push([v[0], v[1], v[2], v[3], v[4]]);
        trace.creators.push([v[5], v[6]]);
    }
    Ok(trace)
}

/// Metrics of one finite-population grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteRow {
    pub eps: f64,
    pub v: f64,
    /// Values of any swept axes other than `eps` and `v`, in header order.
    pub extra: Vec<f64>,
    pub trust_enabled: bool,
    pub stationary: Vec<f64>,
    pub coop_freq: f64,
    pub adoption_level: f64,
}

pub fn finite_header(extra_axes: &[String], states: usize) -> Vec<String> {
    let mut h = vec!["eps".to_string(), "v".to_string()];
    h.extend(extra_axes.iter().cloned());
    h.push("trust_enabled".into());
    h.extend((0..states).map(|i| format!("stationary_p{i}")));
    h.push("coop_freq".into());
    h.push("adoption_level".into());
    h
}

pub fn write_finite_rows<W: Write>(out: W, extra_axes: &[String], states: usize, rows: &[FiniteRow]) -> Result<()> {
    let mut wtr = writer(out);
    wtr.write_record(finite_header(extra_axes, states))?;
    for r in rows {
        if r.stationary.len() != states || r.extra.len() != extra_axes.len() {
            return Err(Error::Csv("row does not match the declared columns".into()));
        }
        let mut row = vec![fmt_f64(r.eps), fmt_f64(r.v)];
        row.extend(r.extra.iter().map(|x| fmt_f64(*x)));
        row.push(r.trust_enabled.to_string());
        row.extend(r.stationary.iter().map(|x| fmt_f64(*x)));
        row.push(fmt_f64(r.coop_freq));
        row.push(fmt_f64(r.adoption_level));
        wtr.write_record(&row)?;
    }
    flush(wtr)
}

/// Reads a finite sweep CSV; the extra axes and state count are inferred
/// from the header.
pub fn read_finite_rows<R: Read>(input: R) -> Result<(Vec<String>, Vec<FiniteRow>)> {
    let mut rdr = reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let trust_col = header
        .iter()
        .position(|h| h == "trust_enabled")
        .ok_or_else(|| Error::Csv("missing trust_enabled column".into()))?;
    if trust_col < 2 {
        return Err(Error::Csv("eps and v must precede trust_enabled".into()));
    }
    let extra_axes = header[2..trust_col].to_vec();
    let states = header.len().saturating_sub(trust_col + 3);
    if header != finite_header(&extra_axes, states) {
        return Err(Error::Csv(format!("unexpected finite sweep columns {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let num = |k: usize| parse_f64(&rec[k], &header[k]);
        rows.push(FiniteRow {
            eps: num(0)?,
            v: num(1)?,
            extra: (2..trust_col).map(num).collect::<Result<_>>()?,
            trust_enabled: parse_bool(&rec[trust_col], "trust_enabled")?,
            stationary: (trust_col + 1..trust_col + 1 + states).map(num).collect::<Result<_>>()?,
            coop_freq: num(trust_col + 1 + states)?,
            adoption_level: num(trust_col + 2 + states)?,
        });
    }
    Ok((extra_axes, rows))
}

/// A plain numeric table with a header, used for sweep summaries that have
/// no dedicated schema (adoption differences, replicator and Q-learning
/// end states).
#[derive(Debug, Clone, PartialEq)]
pub struct NumericTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn write_numeric_table<W: Write>(out: W, table: &NumericTable) -> Result<()> {
    let mut wtr = writer(out);
    wtr.write_record(&table.header)?;
    for r in &table.rows {
        if r.len() != table.header.len() {
            return Err(Error::Csv("row length differs from header".into()));
        }
        wtr.write_record(r.iter().map(|x| fmt_f64(*x)))?;
    }
    flush(wtr)
}

pub fn read_numeric_table<R: Read>(input: R) -> Result<NumericTable> {
    let mut rdr = reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        rows.push(rec.iter().zip(&header).map(|(f, c)| parse_f64(f, c)).collect::<Result<_>>()?);
    }
    Ok(NumericTable { header, rows })
}
