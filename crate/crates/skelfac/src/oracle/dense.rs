//! Dense-matrix oracle and the "DMAT" file format.

use super::LinearOracle;
use crate::error::{Error, Result};
use crate::mat::Mat;
use std::io::{Read, Write};
use std::path::Path;

/// Ground-truth oracle over an explicitly stored square matrix.
pub struct DenseOracle {
    m: Mat,
}

impl DenseOracle {
    pub fn new(m: Mat) -> DenseOracle {
        assert_eq!(m.nrows(), m.ncols(), "dense oracle requires a square matrix");
        DenseOracle { m }
    }

    pub fn from_file(path: &Path) -> Result<DenseOracle> {
        let m = read_dmat(path)?;
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                context: format!("dense file is {}x{}, need square", m.nrows(), m.ncols()),
            });
        }
        Ok(DenseOracle::new(m))
    }

    pub fn matrix(&self) -> &Mat {
        &self.m
    }
}

impl LinearOracle for DenseOracle {
    fn dim(&self) -> usize {
        self.m.nrows()
    }
    fn apply(&self, x: &Mat) -> Mat {
        self.m.mul(x)
    }
    fn apply_adjoint(&self, x: &Mat) -> Mat {
        self.m.t_mul(x)
    }
    fn has_entries(&self) -> bool {
        true
    }
    fn entry(&self, i: usize, j: usize) -> Option<f64> {
        Some(self.m[(i, j)])
    }
}

const DMAT_MAGIC: &[u8; 4] = b"DMAT";

/// Read a matrix from the raw "DMAT" format: a 16-byte header (magic
/// `DMAT`, u32 rows, u32 cols, u32 reserved, all little-endian) followed by
/// rows*cols f64 entries in column-major order.
pub fn read_dmat(path: &Path) -> Result<Mat> {
    let mut f = std::fs::File::open(path)?;
    let mut header = [0u8; 16];
    f.read_exact(&mut header)?;
    if &header[0..4] != DMAT_MAGIC {
        return Err(Error::Format("bad DMAT magic".into()));
    }
    let rows = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let mut buf = Vec::new();
    f.read_to_end(&mut buf)?;
    if buf.len() != rows * cols * 8 {
        return Err(Error::Format(format!(
            "DMAT payload is {} bytes, expected {}",
            buf.len(),
            rows * cols * 8
        )));
    }
    let data = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Mat::from_col_major(rows, cols, data))
}

/// Write a matrix in the "DMAT" format; see [`read_dmat`].
pub fn write_dmat(path: &Path, m: &Mat) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(DMAT_MAGIC)?;
    f.write_all(&(m.nrows() as u32).to_le_bytes())?;
    f.write_all(&(m.ncols() as u32).to_le_bytes())?;
    f.write_all(&0u32.to_le_bytes())?;
    for v in m.data() {
        f.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}
