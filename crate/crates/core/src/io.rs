//! Matrix input and output: CSV text and the binary snapshot format.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::sketch::snapshot::{Snapshot, SnapshotKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Bin,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "bin" | "binary" => Ok(Self::Bin),
            other => Err(Error::InvalidArgument(format!("unknown format '{other}'"))),
        }
    }
}

/// Streams the rows of CSV data to `visit`. Every row must have the width of
/// the first; cells are parsed as decimal floats.
pub fn for_each_csv_row(
    reader: impl Read,
    header: bool,
    visit: &mut dyn FnMut(&[f64]) -> Result<()>,
) -> Result<usize> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut record = csv::StringRecord::new();
    let mut row = Vec::new();
    let mut width = None;
    let mut count = 0usize;
    loop {
        let more = rdr.read_record(&mut record).map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::Parse {
                line,
                column: 0,
                message: e.to_string(),
            }
        })?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        row.clear();
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                line,
                column: j + 1,
                message: format!("'{cell}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    column: j + 1,
                    message: format!("'{cell}' is not finite"),
                });
            }
            row.push(v);
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Parse {
                    line,
                    column: row.len().min(w) + 1,
                    message: format!("row has {} fields, expected {w}", row.len()),
                })
            }
            _ => {}
        }
        visit(&row)?;
        count += 1;
    }
    Ok(count)
}

pub fn read_csv(reader: impl Read, header: bool) -> Result<DenseMatrix> {
    let mut data = Vec::new();
    let mut cols = 0;
    let n = for_each_csv_row(reader, header, &mut |r| {
        cols = r.len();
        data.extend_from_slice(r);
        Ok(())
    })?;
    if n == 0 {
        return Err(Error::Empty("no data rows".into()));
    }
    DenseMatrix::new(n, cols, data)
}

pub fn load_matrix(path: impl AsRef<Path>, format: Format, header: bool) -> Result<DenseMatrix> {
    let path = path.as_ref();
    match format {
        Format::Csv => read_csv(File::open(path)?, header),
        Format::Bin => {
            let m = Snapshot::load(path)?.expect_kind(SnapshotKind::Matrix)?.payload;
            if m.is_empty() {
                return Err(Error::Empty("snapshot holds no data".into()));
            }
            Ok(m)
        }
    }
}

/// Writes rows with the shortest round-tripping decimal representation.
pub fn write_csv(m: &DenseMatrix, w: impl Write) -> Result<()> {
    let mut w = BufWriter::new(w);
    for r in m.iter_rows() {
        for (j, v) in r.iter().enumerate() {
            if j > 0 {
                w.write_all(b",")?;
            }
            write!(w, "{v:?}")?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_matrix(m: &DenseMatrix, path: impl AsRef<Path>, format: Format) -> Result<()> {
    match format {
        Format::Csv => write_csv(m, File::create(path)?),
        Format::Bin => Snapshot::from_matrix(m).save(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_simple_csv() {
        let m = read_csv("1,2\n3,4\n".as_bytes(), false).unwrap();
        assert_eq!(m, DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap());
        let m = read_csv("a,b\n1, 2.5e0\n".as_bytes(), true).unwrap();
        assert_eq!(m.row(0), &[1.0, 2.5]);
    }

    #[test]
    fn reports_errors_with_position() {
        assert!(matches!(read_csv("".as_bytes(), false), Err(Error::Empty(_))));
        match read_csv("1,2\n3,x\n".as_bytes(), false) {
            Err(Error::Parse { line: 2, column: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(read_csv("1,2\n3\n".as_bytes(), false), Err(Error::Parse { line: 2, .. })));
        assert!(read_csv("1,nan\n".as_bytes(), false).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let m = DenseMatrix::from_fn(4, 3, |i, j| (i as f64 + 0.1) / (j as f64 + 3.0));
        let mut buf = Vec::new();
        write_csv(&m, &mut buf).unwrap();
        assert_eq!(read_csv(&buf[..], false).unwrap(), m);
    }
}
