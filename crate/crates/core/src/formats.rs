//! On-disk formats: binary wave-function files, trajectory CSV, and atomic
//! output helpers. Every number is written with 17 significant digits so
//! text outputs round-trip exactly and are byte-deterministic.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{
    separation, ComplexField, Degree, PolarGrid, Termination, TrajectoryRecord, Vec2,
    VortexConfiguration,
};

pub const FIELD_MAGIC: &[u8; 4] = b"GPF1";
pub const FIELD_VERSION: u32 = 1;
pub const FIELD_HEADER_LEN: usize = 24;

/// Formats `x` with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `bytes` to `target`, or to stdout when `target` is `-`. Files are
/// written to a temporary sibling and renamed into place.
pub fn write_output(target: &str, bytes: &[u8]) -> Result<()> {
    if target == "-" {
        let mut out = std::io::stdout().lock();
        out.write_all(bytes)?;
        out.flush()?;
        return Ok(());
    }
    let path = Path::new(target);
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn encode_field(field: &ComplexField) -> Vec<u8> {
    let grid = field.grid();
    let mut out = Vec::with_capacity(FIELD_HEADER_LEN + 16 * grid.len());
    out.extend_from_slice(FIELD_MAGIC);
    out.extend_from_slice(&FIELD_VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.n_r() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.n_theta() as u32).to_le_bytes());
    out.extend_from_slice(&[0u8; 8]);
    for v in field.values() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

pub fn decode_field(bytes: &[u8]) -> Result<ComplexField> {
    const KIND: &str = "field file";
    if bytes.len() < FIELD_HEADER_LEN {
        return Err(Error::format(KIND, format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != FIELD_MAGIC {
        return Err(Error::format(KIND, format!("bad magic {:?}", &bytes[..4])));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let version = word(4);
    if version != FIELD_VERSION {
        return Err(Error::format(KIND, format!("unsupported version {version}")));
    }
    let (n_r, n_theta) = (word(8) as usize, word(12) as usize);
    let grid = PolarGrid::new(n_r, n_theta).map_err(|e| Error::format(KIND, e.to_string()))?;
    let expected = FIELD_HEADER_LEN + 16 * grid.len();
    if bytes.len() != expected {
        return Err(Error::format(
            KIND,
            format!("size {} does not match {expected} for a {grid} grid", bytes.len()),
        ));
    }
    let values = bytes[FIELD_HEADER_LEN..]
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    ComplexField::new(grid, values).map_err(|e| Error::format(KIND, e.to_string()))
}

pub fn write_field(target: &str, field: &ComplexField) -> Result<()> {
    write_output(target, &encode_field(field))
}

pub fn read_field(path: impl AsRef<Path>) -> Result<ComplexField> {
    decode_field(&std::fs::read(path)?)
}

pub fn encode_trajectory(record: &TrajectoryRecord) -> String {
    let n = record.states.first().map_or(0, |s| s.len());
    let mut out = String::from("t");
    for j in 1..=n {
        write!(out, ",a{j}x,a{j}y").unwrap();
    }
    out.push_str(",W\n");
    for ((t, state), w) in record.times.iter().zip(&record.states).zip(&record.renormalized_energy) {
        out.push_str(&num(*t));
        for p in state.positions() {
            write!(out, ",{},{}", num(p.x), num(p.y)).unwrap();
        }
        writeln!(out, ",{}", num(*w)).unwrap();
    }
    let degrees: Vec<String> = record
        .states
        .first()
        .map(|s| s.degrees().iter().map(|d| d.as_i32().to_string()).collect())
        .unwrap_or_default();
    writeln!(out, "# termination={}", record.termination.as_str()).unwrap();
    writeln!(out, "# dt={}", num(record.dt)).unwrap();
    writeln!(out, "# n_modes={}", record.n_modes).unwrap();
    writeln!(out, "# degrees={}", degrees.join(",")).unwrap();
    out
}

pub fn decode_trajectory(text: &str) -> Result<TrajectoryRecord> {
    const KIND: &str = "trajectory file";
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::format(KIND, "empty input"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 2 || cols[0] != "t" || cols[cols.len() - 1] != "W" || !cols.len().is_multiple_of(2) {
        return Err(Error::format(KIND, format!("bad header {header:?}")));
    }
    let n = (cols.len() - 2) / 2;
    for j in 0..n {
        if cols[1 + 2 * j] != format!("a{}x", j + 1) || cols[2 + 2 * j] != format!("a{}y", j + 1) {
            return Err(Error::format(KIND, format!("bad header {header:?}")));
        }
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let (mut termination, mut dt, mut n_modes, mut degrees) = (None, None, None, None);
    for (lineno, line) in lines.enumerate() {
        let lineno = lineno + 2;
        if let Some(meta) = line.strip_prefix('#') {
            let (key, value) = meta
                .trim()
                .split_once('=')
                .ok_or_else(|| Error::format(KIND, format!("line {lineno}: bad metadata {line:?}")))?;
            let bad = |e: &dyn std::fmt::Display| Error::format(KIND, format!("line {lineno}: {key}: {e}"));
            match key {
                "termination" => termination = Some(value.parse::<Termination>().map_err(|e| bad(&e))?),
                "dt" => dt = Some(value.parse::<f64>().map_err(|e| bad(&e))?),
                "n_modes" => n_modes = Some(value.parse::<usize>().map_err(|e| bad(&e))?),
                "degrees" => {
                    let d: Vec<Degree> = value
                        .split(',')
                        .filter(|s| !s.is_empty())
                        .map(|s| {
                            let v: i64 = s.trim().parse().map_err(|e| bad(&e))?;
                            Degree::try_from(v).map_err(|e| bad(&e))
                        })
                        .collect::<Result<_>>()?;
                    degrees = Some(d);
                }
                _ => {}
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::format(KIND, format!("line {lineno}: {e}")))?;
        if row.len() != cols.len() {
            return Err(Error::format(
                KIND,
                format!("line {lineno}: {} fields, expected {}", row.len(), cols.len()),
            ));
        }
        rows.push(row);
    }
    let missing = |what: &str| Error::format(KIND, format!("missing '# {what}=' line"));
    let termination = termination.ok_or_else(|| missing("termination"))?;
    let dt = dt.ok_or_else(|| missing("dt"))?;
    let n_modes = n_modes.ok_or_else(|| missing("n_modes"))?;
    let degrees = degrees.ok_or_else(|| missing("degrees"))?;
    if degrees.len() != n {
        return Err(Error::format(KIND, format!("{} degrees for {n} vortices", degrees.len())));
    }
    if rows.is_empty() {
        return Err(Error::format(KIND, "no rows"));
    }
    let mut record = TrajectoryRecord {
        times: Vec::with_capacity(rows.len()),
        states: Vec::with_capacity(rows.len()),
        renormalized_energy: Vec::with_capacity(rows.len()),
        min_separation: Vec::with_capacity(rows.len()),
        termination,
        dt,
        n_modes,
    };
    for row in rows {
        let positions: Vec<Vec2> = (0..n).map(|j| Vec2::new(row[1 + 2 * j], row[2 + 2 * j])).collect();
        let state = VortexConfiguration::new(positions, degrees.clone())
            .map_err(|e| Error::format(KIND, e.to_string()))?;
        if let Some(&last) = record.times.last() {
            if row[0] <= last {
                return Err(Error::format(KIND, "times are not strictly increasing"));
            }
        }
        record.times.push(row[0]);
        record.min_separation.push(separation(&state));
        record.states.push(state);
        record.renormalized_energy.push(row[cols.len() - 1]);
    }
    Ok(record)
}

pub fn read_trajectory(path: impl AsRef<Path>) -> Result<TrajectoryRecord> {
    decode_trajectory(&std::fs::read_to_string(path)?)
}
