//! Versioned binary container for factorizations (magic "RSRS").
//!
//! Layout, all little-endian: magic, u32 version, u64 n, u64 step count,
//! then per-step records (ids, index vectors as u32 arrays, blocks as f64
//! arrays), then the final skeleton and its factored block. Round trips are
//! bit-exact.

use super::{Diagnostics, EliminationStep, SkelFactorization};
use crate::error::{Error, Result};
use crate::linalg::{ElimBlock, LuFactors};
use crate::mat::Mat;
use std::path::Path;

const MAGIC: &[u8; 4] = b"RSRS";
const VERSION: u32 = 1;

pub fn save(path: &Path, f: &SkelFactorization) -> Result<()> {
    let bytes = to_bytes(f);
    std::fs::write(path, bytes)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<SkelFactorization> {
    let bytes = std::fs::read(path)?;
    from_bytes(&bytes)
}

pub fn to_bytes(f: &SkelFactorization) -> Vec<u8> {
    let mut w = Vec::new();
    w.extend_from_slice(MAGIC);
    put_u32(&mut w, VERSION);
    put_u64(&mut w, f.n as u64);
    put_u64(&mut w, f.steps.len() as u64);
    for step in &f.steps {
        put_u32(&mut w, step.box_id as u32);
        put_u32(&mut w, step.level as u32);
        put_idx(&mut w, &step.idx_resid);
        put_idx(&mut w, &step.idx_skel);
        put_opt_elim(&mut w, &step.interp_rows);
        put_opt_elim(&mut w, &step.interp_cols);
        put_opt_elim(&mut w, &step.elim_rows);
        put_opt_elim(&mut w, &step.elim_cols);
        put_lu(&mut w, &step.pivot_lu);
    }
    put_idx(&mut w, &f.skel);
    put_lu(&mut w, &f.final_lu);
    put_u64(&mut w, f.level_atols.len() as u64);
    for &a in &f.level_atols {
        put_f64(&mut w, a);
    }
    w
}

pub fn from_bytes(bytes: &[u8]) -> Result<SkelFactorization> {
    let mut r = Cursor { bytes, pos: 0 };
    let magic = r.take(4)?;
    if magic != MAGIC {
        return Err(Error::Format("bad RSRS magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported RSRS version {version}")));
    }
    let n = r.u64()? as usize;
    let n_steps = r.u64()? as usize;
    let mut steps = Vec::with_capacity(n_steps);
    for _ in 0..n_steps {
        let box_id = r.u32()? as usize;
        let level = r.u32()? as usize;
        let idx_resid = r.idx()?;
        let idx_skel = r.idx()?;
        let interp_rows = r.opt_elim()?;
        let interp_cols = r.opt_elim()?;
        let elim_rows = r.opt_elim()?;
        let elim_cols = r.opt_elim()?;
        let pivot_lu = r.lu()?;
        steps.push(EliminationStep {
            box_id,
            level,
            idx_resid,
            idx_skel,
            interp_rows,
            interp_cols,
            elim_rows,
            elim_cols,
            pivot_lu,
        });
    }
    let skel = r.idx()?;
    let final_lu = r.lu()?;
    let n_atols = r.u64()? as usize;
    let mut level_atols = Vec::with_capacity(n_atols);
    for _ in 0..n_atols {
        level_atols.push(r.f64()?);
    }
    if r.pos != bytes.len() {
        return Err(Error::Format("trailing bytes in RSRS container".into()));
    }
    Ok(SkelFactorization {
        n,
        steps,
        skel,
        final_lu,
        level_atols,
        diagnostics: Diagnostics::default(),
    })
}

fn put_u32(w: &mut Vec<u8>, v: u32) {
    w.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(w: &mut Vec<u8>, v: u64) {
    w.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(w: &mut Vec<u8>, v: f64) {
    w.extend_from_slice(&v.to_le_bytes());
}

fn put_idx(w: &mut Vec<u8>, idx: &[usize]) {
    put_u64(w, idx.len() as u64);
    for &i in idx {
        put_u32(w, i as u32);
    }
}

fn put_mat(w: &mut Vec<u8>, m: &Mat) {
    put_u64(w, m.nrows() as u64);
    put_u64(w, m.ncols() as u64);
    for v in m.data() {
        put_f64(w, *v);
    }
}

fn put_opt_elim(w: &mut Vec<u8>, e: &Option<ElimBlock>) {
    match e {
        None => w.push(0),
        Some(e) => {
            w.push(1);
            put_idx(w, &e.rows);
            put_idx(w, &e.cols);
            put_mat(w, &e.coeffs);
        }
    }
}

fn put_lu(w: &mut Vec<u8>, lu: &LuFactors) {
    let (m, swaps) = lu.raw_parts();
    put_mat(w, m);
    put_idx(w, swaps);
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format("truncated RSRS container".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn idx(&mut self) -> Result<Vec<usize>> {
        let len = self.u64()? as usize;
        let mut v = Vec::with_capacity(len);
        for _ in 0..len {
            v.push(self.u32()? as usize);
        }
        Ok(v)
    }

    fn mat(&mut self) -> Result<Mat> {
        let nr = self.u64()? as usize;
        let nc = self.u64()? as usize;
        let mut data = Vec::with_capacity(nr * nc);
        for _ in 0..nr * nc {
            data.push(self.f64()?);
        }
        Ok(Mat::from_col_major(nr, nc, data))
    }

    fn opt_elim(&mut self) -> Result<Option<ElimBlock>> {
        let tag = self.take(1)?[0];
        match tag {
            0 => Ok(None),
            1 => {
                let rows = self.idx()?;
                let cols = self.idx()?;
                let coeffs = self.mat()?;
                Ok(Some(ElimBlock::new(coeffs, rows, cols)))
            }
            t => Err(Error::Format(format!("bad option tag {t}"))),
        }
    }

    fn lu(&mut self) -> Result<LuFactors> {
        let m = self.mat()?;
        let swaps = self.idx()?;
        if swaps.len() != m.nrows() || m.nrows() != m.ncols() {
            return Err(Error::Format("inconsistent LU record".into()));
        }
        Ok(LuFactors::from_raw_parts(m, swaps))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bad_magic_is_rejected() {
        assert!(matches!(from_bytes(b"XXXX"), Err(Error::Format(_))));
    }

    #[test]
    fn truncation_is_detected() {
        let f = SkelFactorization {
            n: 3,
            steps: vec![],
            skel: vec![0, 1, 2],
            final_lu: LuFactors::factor(&Mat::identity(3)).unwrap(),
            level_atols: vec![1e-6],
            diagnostics: Diagnostics::default(),
        };
        let bytes = to_bytes(&f);
        assert!(from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let back = from_bytes(&bytes).unwrap();
        assert_eq!(to_bytes(&back), bytes);
    }
}
