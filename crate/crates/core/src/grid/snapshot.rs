//! Field snapshot files.
//!
//! Binary layout:
//!
//! ```text
//! IBFLOW <n1> <n2> <h> <count>\n
//! <name>\n<n1*n2 little-endian f64, row-major>      (repeated `count` times)
//! ```
//!
//! The CSV emitter writes one line per `j`, holding the `n1` values of that row.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{GridSpec, ScalarField};
use crate::error::{Error, Result};

const MAGIC: &str = "IBFLOW";

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub spec: GridSpec,
    pub channels: Vec<(String, ScalarField)>,
}

impl Snapshot {
    pub fn channel(&self, name: &str) -> Option<&ScalarField> {
        self.channels.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }
}

pub fn write_snapshot_to<W: Write>(mut w: W, channels: &[(&str, &ScalarField)]) -> std::io::Result<()> {
    let spec = match channels.first() {
        Some((_, f)) => f.spec(),
        None => {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidInput,
                "snapshot needs at least one channel",
            ))
        }
    };
    writeln!(w, "{MAGIC} {} {} {} {}", spec.n1(), spec.n2(), spec.h(), channels.len())?;
    for (name, field) in channels {
        if field.spec() != spec {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidInput,
                format!("channel `{name}` is on a different grid"),
            ));
        }
        if name.contains(['\n', '\r']) || name.is_empty() {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidInput,
                format!("invalid channel name {name:?}"),
            ));
        }
        writeln!(w, "{name}")?;
        for v in field.values() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()
}

pub fn write_snapshot(path: &Path, channels: &[(&str, &ScalarField)]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_snapshot_to(BufWriter::new(file), channels).map_err(|e| Error::io(path, e))
}

fn bad_data(msg: impl Into<String>) -> std::io::Error {
    std::io::Error::new(std::io::ErrorKind::InvalidData, msg.into())
}

pub fn read_snapshot_from<R: Read>(r: R) -> std::io::Result<Snapshot> {
    let mut r = BufReader::new(r);
    let mut header = String::new();
    r.read_line(&mut header)?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 5 || parts[0] != MAGIC {
        return Err(bad_data(format!("bad snapshot header {header:?}")));
    }
    let parse_usize = |s: &str| s.parse::<usize>().map_err(|e| bad_data(format!("{s}: {e}")));
    let n1 = parse_usize(parts[1])?;
    let n2 = parse_usize(parts[2])?;
    let h: f64 = parts[3].parse().map_err(|e| bad_data(format!("{}: {e}", parts[3])))?;
    let count = parse_usize(parts[4])?;
    let spec = GridSpec::new(n1, n2, h).map_err(|e| bad_data(e.to_string()))?;

    let mut channels = Vec::with_capacity(count);
    let mut buf = vec![0u8; 8 * spec.len()];
    for _ in 0..count {
        let mut name = String::new();
        r.read_line(&mut name)?;
        let name = name.trim_end_matches(['\n', '\r']).to_string();
        if name.is_empty() {
            return Err(bad_data("missing channel name"));
        }
        r.read_exact(&mut buf)?;
        let values = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let field = ScalarField::from_values(spec, values).map_err(|e| bad_data(e.to_string()))?;
        channels.push((name, field));
    }
    Ok(Snapshot { spec, channels })
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_snapshot_from(file).map_err(|e| Error::io(path, e))
}

pub fn write_field_csv_to<W: Write>(mut w: W, field: &ScalarField) -> std::io::Result<()> {
    let n1 = field.spec().n1();
    for row in field.values().chunks(n1) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()
}

pub fn write_field_csv(path: &Path, field: &ScalarField) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_field_csv_to(BufWriter::new(file), field).map_err(|e| Error::io(path, e))
}
