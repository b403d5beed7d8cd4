//! Output rows and their CSV / JSON-lines encoding.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use lrr_core::analysis::Bound;
use serde::de::{self, DeserializeOwned, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::config::Format;
use crate::error::CliError;

/// A bound cell: a number, or the string `unbounded`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCell(pub f64);

impl BoundCell {
    pub const UNBOUNDED: &'static str = "unbounded";

    pub fn bound(self) -> Bound {
        if self.0.is_finite() {
            Bound::Finite(self.0)
        } else {
            Bound::Unbounded
        }
    }
}

impl From<Bound> for BoundCell {
    fn from(b: Bound) -> Self {
        BoundCell(b.value())
    }
}

impl Serialize for BoundCell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str(Self::UNBOUNDED)
        }
    }
}

impl<'de> Deserialize<'de> for BoundCell {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct CellVisitor;

        impl Visitor<'_> for CellVisitor {
            type Value = BoundCell;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "a number or \"{}\"", BoundCell::UNBOUNDED)
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<BoundCell, E> {
                Ok(BoundCell(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<BoundCell, E> {
                Ok(BoundCell(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<BoundCell, E> {
                Ok(BoundCell(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<BoundCell, E> {
                if v == BoundCell::UNBOUNDED {
                    return Ok(BoundCell(f64::INFINITY));
                }
                v.parse().map(BoundCell).map_err(|_| E::invalid_value(de::Unexpected::Str(v), &self))
            }
        }

        d.deserialize_any(CellVisitor)
    }
}

/// One evaluated configuration (`analyze`, and each `sweep` point).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub dim: usize,
    pub mode: String,
    pub r: u32,
    pub zeta: f64,
    pub n: Option<usize>,
    pub d: u32,
    /// Empty when the code rate is at or above capacity.
    pub p_e: Option<f64>,
    /// Largest per-mode value for vector plants.
    pub theta: Option<f64>,
    pub growth: Option<f64>,
    pub stable: bool,
    pub single_shot_bound: Option<f64>,
    pub steady_state_bound: BoundCell,
    pub empirical_error: Option<f64>,
    pub empirical_se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeRecord {
    pub dim: usize,
    pub r: u32,
    pub zeta: f64,
    pub t_samp: u32,
    pub pe_model: String,
    pub n_lo: usize,
    pub n_hi: usize,
    pub feasible_min: usize,
    pub feasible_max: usize,
    pub n_star: usize,
    pub bound_star: f64,
    pub n_heuristic: Option<usize>,
    pub bound_heuristic: Option<BoundCell>,
    pub bound_at_n_hi: BoundCell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub mean_error: f64,
    pub error_se: f64,
    pub mean_width: f64,
    pub width_se: f64,
    pub expected_width: Option<f64>,
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

/// Writes `records` to `out` (stdout when `None`).
pub fn write_records<T: Serialize>(records: &[T], format: Format, out: Option<&Path>) -> Result<(), CliError> {
    let mut sink = sink(out)?;
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(sink);
            for rec in records {
                w.serialize(rec)?;
            }
            w.flush()?;
        }
        Format::Jsonl => {
            for rec in records {
                serde_json::to_writer(&mut sink, rec)?;
                sink.write_all(b"\n")?;
            }
            sink.flush()?;
        }
    }
    Ok(())
}

pub fn read_records<T: DeserializeOwned>(path: &Path, format: Format) -> Result<Vec<T>, CliError> {
    let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    match format {
        Format::Csv => csv::Reader::from_reader(file).deserialize().map(|r| r.map_err(CliError::from)).collect(),
        Format::Jsonl => BufReader::new(file)
            .lines()
            .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
            .map(|l| Ok(serde_json::from_str(&l?)?))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_cell_round_trips_in_both_formats() {
        #[derive(Debug, PartialEq, Serialize, Deserialize)]
        struct Row {
            b: BoundCell,
            o: Option<BoundCell>,
        }
        let rows = vec![
            Row { b: BoundCell(0.1 + 0.2), o: None },
            Row { b: BoundCell(f64::INFINITY), o: Some(BoundCell(1e-300)) },
            Row { b: BoundCell(3.0), o: Some(BoundCell(f64::INFINITY)) },
        ];
        let dir = tempfile::tempdir().unwrap();
        for format in [Format::Csv, Format::Jsonl] {
            let path = dir.path().join("rows");
            write_records(&rows, format, Some(&path)).unwrap();
            let back: Vec<Row> = read_records(&path, format).unwrap();
            assert_eq!(back, rows);
        }
        let text = std::fs::read_to_string(dir.path().join("rows")).unwrap();
        assert!(text.contains("\"unbounded\""));
    }
}
