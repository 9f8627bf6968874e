use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde_json::{Map, Value};

use super::run::{Trajectory, TrajectoryRow};
use crate::error::{OscError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    JsonLines,
}

impl FromStr for OutputFormat {
    type Err = OscError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "jsonl" | "json-lines" | "jsonlines" => Ok(OutputFormat::JsonLines),
            other => Err(OscError::Config(format!(
                "unknown output format {other:?}; expected csv or jsonl"
            ))),
        }
    }
}

/// Column names `n, t, x0.., v0.., <energies>`.
pub fn header(traj: &Trajectory) -> Vec<String> {
    let mut cols = vec!["n".to_string(), "t".to_string()];
    cols.extend((0..traj.dim).map(|i| format!("x{i}")));
    cols.extend((0..traj.dim).map(|i| format!("v{i}")));
    cols.extend(traj.energy_labels.iter().cloned());
    cols
}

/// 17 significant digits, enough to round-trip every `f64`.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn row_values(row: &TrajectoryRow) -> impl Iterator<Item = f64> + '_ {
    std::iter::once(row.t)
        .chain(row.x.iter().copied())
        .chain(row.v.iter().copied())
        .chain(row.energies.iter().copied())
}

pub fn to_csv(traj: &Trajectory) -> String {
    let mut out = header(traj).join(",");
    out.push('\n');
    for row in &traj.rows {
        let _ = write!(out, "{}", row.n);
        for v in row_values(row) {
            out.push(',');
            out.push_str(&fmt_f64(v));
        }
        out.push('\n');
    }
    out
}

pub fn to_json_lines(traj: &Trajectory) -> String {
    let cols = header(traj);
    let mut out = String::new();
    for row in &traj.rows {
        let mut map = Map::new();
        map.insert(cols[0].clone(), Value::from(row.n));
        for (name, v) in cols[1..].iter().zip(row_values(row)) {
            let value = serde_json::Number::from_f64(v)
                .map(Value::Number)
                .unwrap_or_else(|| Value::String(fmt_f64(v)));
            map.insert(name.clone(), value);
        }
        out.push_str(&Value::Object(map).to_string());
        out.push('\n');
    }
    out
}

pub fn serialize(traj: &Trajectory, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => to_csv(traj),
        OutputFormat::JsonLines => to_json_lines(traj),
    }
}

/// Writes to `path`, attaching the path to any I/O error.
pub fn write_trajectory(traj: &Trajectory, format: OutputFormat, path: &Path) -> Result<()> {
    let io = |source| OscError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(serialize(traj, format).as_bytes())
        .map_err(io)?;
    f.flush().map_err(io)
}

/// Splits a header into `(dim, energy labels)`.
fn layout(cols: &[String]) -> Result<(usize, Vec<String>)> {
    if cols.len() < 2 || cols[0] != "n" || cols[1] != "t" {
        return Err(OscError::Config(
            "trajectory header must start with n,t".into(),
        ));
    }
    let dim = cols.iter().filter(|c| is_indexed(c, 'x')).count();
    let vdim = cols.iter().filter(|c| is_indexed(c, 'v')).count();
    if dim != vdim {
        return Err(OscError::Config(
            "header has unequal x and v columns".into(),
        ));
    }
    let energies = cols[2 + 2 * dim..].to_vec();
    Ok((dim, energies))
}

fn is_indexed(col: &str, prefix: char) -> bool {
    col.strip_prefix(prefix)
        .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
}

fn build_row(n: usize, values: &[f64], dim: usize) -> TrajectoryRow {
    TrajectoryRow {
        n,
        t: values[0],
        x: values[1..1 + dim].to_vec(),
        v: values[1 + dim..1 + 2 * dim].to_vec(),
        energies: values[1 + 2 * dim..].to_vec(),
    }
}

pub fn parse_csv(text: &str) -> Result<Trajectory> {
    let mut lines = text.lines();
    let cols: Vec<String> = lines
        .next()
        .ok_or_else(|| OscError::Config("empty CSV".into()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let (dim, energy_labels) = layout(&cols)?;
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(OscError::Config(format!(
                "CSV line {} has {} fields, expected {}",
                i + 2,
                fields.len(),
                cols.len()
            )));
        }
        let n = fields[0]
            .parse()
            .map_err(|e| OscError::Config(format!("bad row index on line {}: {e}", i + 2)))?;
        let values = fields[1..]
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| OscError::Config(format!("bad number on line {}: {e}", i + 2)))?;
        rows.push(build_row(n, &values, dim));
    }
    Ok(Trajectory {
        dim,
        energy_labels,
        rows,
    })
}

pub fn parse_json_lines(text: &str) -> Result<Trajectory> {
    let mut cols: Option<Vec<String>> = None;
    let mut layout_info = None;
    let mut rows = Vec::new();
    for (i, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let map: Map<String, Value> = serde_json::from_str(line)
            .map_err(|e| OscError::Config(format!("bad JSON on line {}: {e}", i + 1)))?;
        let keys = cols.get_or_insert_with(|| column_order(&map));
        let (dim, _) = match &layout_info {
            Some(l) => l,
            None => layout_info.insert(layout(keys)?),
        };
        let get = |k: &str| -> Result<f64> {
            match map.get(k) {
                Some(Value::Number(x)) => x
                    .as_f64()
                    .ok_or_else(|| OscError::Config(format!("field {k} is not a float"))),
                Some(Value::String(s)) => s
                    .parse()
                    .map_err(|_| OscError::Config(format!("field {k} is not a float"))),
                _ => Err(OscError::Config(format!("line {} lacks field {k}", i + 1))),
            }
        };
        let n = map
            .get("n")
            .and_then(Value::as_u64)
            .ok_or_else(|| OscError::Config(format!("line {} lacks integer n", i + 1)))?;
        let values = keys[1..]
            .iter()
            .map(|k| get(k))
            .collect::<Result<Vec<_>>>()?;
        rows.push(build_row(n as usize, &values, *dim));
    }
    let (dim, energy_labels) = layout_info.unwrap_or((0, Vec::new()));
    Ok(Trajectory {
        dim,
        energy_labels,
        rows,
    })
}

/// Recovers `n, t, x.., v.., energies` ordering from a record whose keys
/// may be sorted.
fn column_order(map: &Map<String, Value>) -> Vec<String> {
    let mut xs: Vec<&String> = map.keys().filter(|k| is_indexed(k, 'x')).collect();
    let mut vs: Vec<&String> = map.keys().filter(|k| is_indexed(k, 'v')).collect();
    let index = |k: &&String| k[1..].parse::<usize>().unwrap_or(usize::MAX);
    xs.sort_by_key(index);
    vs.sort_by_key(index);
    let mut energies: Vec<&String> = map
        .keys()
        .filter(|k| *k != "n" && *k != "t" && !is_indexed(k, 'x') && !is_indexed(k, 'v'))
        .collect();
    energies.sort();
    let mut cols = vec!["n".to_string(), "t".to_string()];
    cols.extend(xs.into_iter().cloned());
    cols.extend(vs.into_iter().cloned());
    cols.extend(energies.into_iter().cloned());
    cols
}

pub fn parse(text: &str, format: OutputFormat) -> Result<Trajectory> {
    match format {
        OutputFormat::Csv => parse_csv(text),
        OutputFormat::JsonLines => parse_json_lines(text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Trajectory {
        Trajectory {
            dim: 2,
            energy_labels: vec!["I".into()],
            rows: vec![
                TrajectoryRow {
                    n: 0,
                    t: 0.0,
                    x: vec![1.0, -0.1],
                    v: vec![1.0 / 3.0, 2.5e-300],
                    energies: vec![std::f64::consts::PI],
                },
                TrajectoryRow {
                    n: 1,
                    t: 0.1,
                    x: vec![0.1 + 0.2, -1e17],
                    v: vec![f64::MIN_POSITIVE, -0.0],
                    energies: vec![7.0],
                },
            ],
        }
    }

    #[test]
    fn csv_header_and_rows() {
        let mut t = sample();
        t.rows.truncate(1);
        let csv = to_csv(&t);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "n,t,x0,x1,v0,v1,I");
    }

    #[test]
    fn round_trips_are_bitwise() {
        let t = sample();
        for format in [OutputFormat::Csv, OutputFormat::JsonLines] {
            let back = parse(&serialize(&t, format), format).unwrap();
            assert_eq!(back.dim, t.dim);
            assert_eq!(back.energy_labels, t.energy_labels);
            for (a, b) in back.rows.iter().zip(&t.rows) {
                let bits =
                    |r: &TrajectoryRow| -> Vec<u64> { row_values(r).map(f64::to_bits).collect() };
                assert_eq!(bits(a), bits(b), "{format:?}");
                assert_eq!(a.n, b.n);
            }
        }
    }

    #[test]
    fn unknown_format_rejected() {
        assert!(matches!(
            "xml".parse::<OutputFormat>(),
            Err(OscError::Config(_))
        ));
    }
}
