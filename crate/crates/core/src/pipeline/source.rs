use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::io::for_each_csv_row;
use crate::linalg::DenseMatrix;

/// A row stream that can be replayed once per pass.
pub trait RowSource {
    fn dim(&self) -> usize;

    /// Streams every row, in order, to `visit`.
    fn pass(&mut self, visit: &mut dyn FnMut(&[f64]) -> Result<()>) -> Result<()>;
}

/// In-memory matrix; every pass replays its rows.
pub struct MatrixSource<'a> {
    m: &'a DenseMatrix,
}

impl<'a> MatrixSource<'a> {
    pub fn new(m: &'a DenseMatrix) -> Self {
        Self { m }
    }
}

impl RowSource for MatrixSource<'_> {
    fn dim(&self) -> usize {
        self.m.cols()
    }

    fn pass(&mut self, visit: &mut dyn FnMut(&[f64]) -> Result<()>) -> Result<()> {
        self.m.iter_rows().try_for_each(visit)
    }
}

/// CSV file re-read from disk on every pass.
pub struct CsvSource {
    path: PathBuf,
    header: bool,
    d: usize,
}

impl CsvSource {
    /// Opens the file once to learn the row width.
    pub fn open(path: impl Into<PathBuf>, header: bool) -> Result<Self> {
        let path = path.into();
        let mut d = None;
        let probe = for_each_csv_row(BufReader::new(File::open(&path)?), header, &mut |r| {
            d = Some(r.len());
            // Stop after the first row.
            Err(Error::Empty(String::new()))
        });
        match (probe, d) {
            (_, Some(d)) => Ok(Self { path, header, d }),
            (Err(e), None) => Err(e),
            (Ok(_), None) => Err(Error::Empty(format!("{} has no data rows", path.display()))),
        }
    }
}

impl RowSource for CsvSource {
    fn dim(&self) -> usize {
        self.d
    }

    fn pass(&mut self, visit: &mut dyn FnMut(&[f64]) -> Result<()>) -> Result<()> {
        let d = self.d;
        let mut row_no = 0usize;
        for_each_csv_row(BufReader::new(File::open(&self.path)?), self.header, &mut |r| {
            if r.len() != d {
                return Err(Error::WidthMismatch {
                    row: row_no,
                    expected: d,
                    got: r.len(),
                });
            }
            row_no += 1;
            visit(r)
        })?;
        Ok(())
    }
}

/// Wraps a source and counts the passes made over it.
pub struct CountingSource<S> {
    inner: S,
    passes: usize,
}

impl<S: RowSource> CountingSource<S> {
    pub fn new(inner: S) -> Self {
        Self { inner, passes: 0 }
    }

    pub fn passes(&self) -> usize {
        self.passes
    }
}

impl<S: RowSource> RowSource for CountingSource<S> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn pass(&mut self, visit: &mut dyn FnMut(&[f64]) -> Result<()>) -> Result<()> {
        self.passes += 1;
        self.inner.pass(visit)
    }
}

impl<S: RowSource + ?Sized> RowSource for &mut S {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn pass(&mut self, visit: &mut dyn FnMut(&[f64]) -> Result<()>) -> Result<()> {
        (**self).pass(visit)
    }
}
