//! Little-endian binary snapshots of matrices and sketch states.
//!
//! Layout (version 1): magic `SKAN`, `u16` version, `u8` kind, then `u64`
//! fields `ell, d, seed, rows, cols, aux`, then `rows·cols` `f64` values in
//! row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::sketch::covariance::ProjectedCovariance;
use crate::sketch::fd::FdState;
use crate::sketch::sampling::ColumnPlan;

pub const MAGIC: &[u8; 4] = b"SKAN";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum SnapshotKind {
    Matrix = 0,
    Fd = 1,
    ProjectedCovariance = 2,
    ColumnPlan = 3,
    ColumnCovariance = 4,
}

impl SnapshotKind {
    fn from_u8(v: u8) -> Result<Self> {
        Ok(match v {
            0 => Self::Matrix,
            1 => Self::Fd,
            2 => Self::ProjectedCovariance,
            3 => Self::ColumnPlan,
            4 => Self::ColumnCovariance,
            other => return Err(Error::Snapshot(format!("unknown snapshot kind {other}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub kind: SnapshotKind,
    pub ell: u64,
    pub d: u64,
    pub seed: u64,
    /// Kind-specific extra field (FD shrink count, hash independence, ...).
    pub aux: u64,
    pub payload: DenseMatrix,
}

impl Snapshot {
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&[self.kind as u8])?;
        for v in [
            self.ell,
            self.d,
            self.seed,
            self.payload.rows() as u64,
            self.payload.cols() as u64,
            self.aux,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in self.payload.as_slice() {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(truncated)?;
        if &magic != MAGIC {
            return Err(Error::Snapshot("bad magic, not a SKAN file".into()));
        }
        let mut b2 = [0u8; 2];
        r.read_exact(&mut b2).map_err(truncated)?;
        let version = u16::from_le_bytes(b2);
        if version != VERSION {
            return Err(Error::Snapshot(format!("unsupported version {version}")));
        }
        let mut b1 = [0u8; 1];
        r.read_exact(&mut b1).map_err(truncated)?;
        let kind = SnapshotKind::from_u8(b1[0])?;
        let mut fields = [0u64; 6];
        let mut b8 = [0u8; 8];
        for f in fields.iter_mut() {
            r.read_exact(&mut b8).map_err(truncated)?;
            *f = u64::from_le_bytes(b8);
        }
        let [ell, d, seed, rows, cols, aux] = fields;
        let len = rows
            .checked_mul(cols)
            .filter(|&l| l <= (isize::MAX as u64) / 8)
            .ok_or_else(|| Error::Snapshot(format!("implausible payload {rows}x{cols}")))?;
        let mut bytes = Vec::new();
        r.by_ref().take(len * 8).read_to_end(&mut bytes)?;
        if bytes.len() as u64 != len * 8 {
            return Err(Error::Snapshot("truncated payload".into()));
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::Snapshot("trailing bytes after payload".into()));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let payload = DenseMatrix::new(rows as usize, cols as usize, data)?;
        Ok(Self {
            kind,
            ell,
            d,
            seed,
            aux,
            payload,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }

    pub fn expect_kind(self, kind: SnapshotKind) -> Result<Self> {
        if self.kind != kind {
            return Err(Error::Snapshot(format!("expected a {kind:?} snapshot, found {:?}", self.kind)));
        }
        Ok(self)
    }

    pub fn from_matrix(m: &DenseMatrix) -> Self {
        Self {
            kind: SnapshotKind::Matrix,
            ell: 0,
            d: m.cols() as u64,
            seed: 0,
            aux: 0,
            payload: m.clone(),
        }
    }

    pub fn from_fd(fd: &FdState) -> Self {
        Self {
            kind: SnapshotKind::Fd,
            ell: fd.ell() as u64,
            d: fd.dim() as u64,
            seed: 0,
            aux: fd.shrink_count(),
            payload: fd.sketch().clone(),
        }
    }

    pub fn into_fd(self) -> Result<FdState> {
        let s = self.expect_kind(SnapshotKind::Fd)?;
        FdState::from_parts(s.ell as usize, s.payload, s.aux)
    }

    /// Random-projection covariance; `seed`/`aux` identify the projector.
    pub fn from_projected(cov: &ProjectedCovariance, d: usize, seed: u64, independence: usize) -> Self {
        Self {
            kind: SnapshotKind::ProjectedCovariance,
            ell: cov.ell() as u64,
            d: d as u64,
            seed,
            aux: independence as u64,
            payload: cov.matrix(),
        }
    }

    pub fn from_column_covariance(cov: &ProjectedCovariance, plan: &ColumnPlan) -> Self {
        Self {
            kind: SnapshotKind::ColumnCovariance,
            ell: cov.ell() as u64,
            d: plan.dim() as u64,
            seed: plan.seed(),
            aux: 0,
            payload: cov.matrix(),
        }
    }

    /// Payload is one row: `ℓ` sampled indices followed by `d` column masses.
    pub fn from_plan(plan: &ColumnPlan) -> Self {
        let mut row: Vec<f64> = plan.indices().iter().map(|&j| j as f64).collect();
        row.extend_from_slice(plan.col_masses());
        let cols = row.len();
        Self {
            kind: SnapshotKind::ColumnPlan,
            ell: plan.ell() as u64,
            d: plan.dim() as u64,
            seed: plan.seed(),
            aux: 0,
            payload: DenseMatrix::new(1, cols, row).expect("finite plan"),
        }
    }

    pub fn into_plan(self) -> Result<ColumnPlan> {
        let s = self.expect_kind(SnapshotKind::ColumnPlan)?;
        let (ell, d) = (s.ell as usize, s.d as usize);
        if s.payload.rows() != 1 || s.payload.cols() != ell + d {
            return Err(Error::Snapshot("column plan payload has the wrong size".into()));
        }
        let row = s.payload.row(0);
        let indices = row[..ell]
            .iter()
            .map(|&v| {
                if v >= 0.0 && v.fract() == 0.0 && (v as usize) < d {
                    Ok(v as usize)
                } else {
                    Err(Error::Snapshot(format!("bad column index {v}")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        ColumnPlan::new(indices, row[ell..].to_vec(), s.seed)
    }
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Snapshot("truncated header".into())
    } else {
        Error::Io(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sketch::fd::fd_sketch;
    use crate::sketch::sampling::column_sample_plan;

    fn bytes(s: &Snapshot) -> Vec<u8> {
        let mut v = Vec::new();
        s.write_to(&mut v).unwrap();
        v
    }

    #[test]
    fn matrix_round_trip_is_byte_exact() {
        let m = DenseMatrix::from_fn(3, 4, |i, j| (i as f64 - j as f64) / 3.0);
        let b = bytes(&Snapshot::from_matrix(&m));
        assert_eq!(&b[..4], b"SKAN");
        assert_eq!(b.len(), 4 + 2 + 1 + 6 * 8 + 12 * 8);
        let back = Snapshot::read_from(&b[..]).unwrap();
        assert_eq!(back.payload, m);
        assert_eq!(bytes(&back), b);
    }

    #[test]
    fn fd_and_plan_round_trip() {
        let a = DenseMatrix::from_fn(30, 5, |i, j| ((i * 13 + j * 7) % 11) as f64 - 5.0);
        let fd = fd_sketch(&a, 3).unwrap();
        let back = Snapshot::read_from(&bytes(&Snapshot::from_fd(&fd))[..]).unwrap().into_fd().unwrap();
        assert_eq!(back, fd);
        let plan = column_sample_plan(&a, 6, 2).unwrap();
        let back = Snapshot::read_from(&bytes(&Snapshot::from_plan(&plan))[..])
            .unwrap()
            .into_plan()
            .unwrap();
        assert_eq!(back, plan);
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let m = DenseMatrix::identity(2);
        let b = bytes(&Snapshot::from_matrix(&m));
        assert!(Snapshot::read_from(&b[..b.len() - 1]).is_err());
        assert!(Snapshot::read_from(&b[..10]).is_err());
        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(Snapshot::read_from(&bad[..]).is_err());
        let mut long = b.clone();
        long.push(0);
        assert!(Snapshot::read_from(&long[..]).is_err());
        assert!(Snapshot::read_from(&b[..]).unwrap().into_fd().is_err());
    }
}
