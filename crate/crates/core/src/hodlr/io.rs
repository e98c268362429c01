//! Binary format, all integers and floats little-endian:
//!
//! ```text
//! "QSH1" | u64 rows | u64 cols | u32 block_size | node...
//! leaf:   u8 0 | u64 r | u64 c | r*c f64 (row-major)
//! branch: u8 1 | A21 | A12 | A11 node | A22 node
//!   factor: u32 rank | u64 rows | u64 cols | U (rows x rank) | V (cols x rank), row-major
//! ```
//! `block_size` records the largest leaf dimension in the tree.

use std::io::{Read, Write};

use super::{HodlrMatrix, LowRank};
use crate::linalg::DenseMatrix;
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"QSH1";

pub fn serialize<W: Write>(h: &HodlrMatrix, mut sink: W) -> Result<()> {
    let mut leaf_max = 0usize;
    h.visit_leaves(&mut |_, l| leaf_max = leaf_max.max(l.nrows()));
    sink.write_all(MAGIC)?;
    sink.write_all(&(h.rows() as u64).to_le_bytes())?;
    sink.write_all(&(h.cols() as u64).to_le_bytes())?;
    sink.write_all(&(leaf_max as u32).to_le_bytes())?;
    write_node(h, &mut sink)
}

fn write_matrix<W: Write>(m: &DenseMatrix, sink: &mut W) -> Result<()> {
    let mut buf = Vec::with_capacity(8 * m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            buf.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
    sink.write_all(&buf)?;
    Ok(())
}

fn write_factor<W: Write>(lr: &LowRank, sink: &mut W) -> Result<()> {
    sink.write_all(&(lr.rank() as u32).to_le_bytes())?;
    sink.write_all(&(lr.rows() as u64).to_le_bytes())?;
    sink.write_all(&(lr.cols() as u64).to_le_bytes())?;
    write_matrix(&lr.u, sink)?;
    write_matrix(&lr.v, sink)
}

fn write_node<W: Write>(h: &HodlrMatrix, sink: &mut W) -> Result<()> {
    match h {
        HodlrMatrix::Leaf(d) => {
            sink.write_all(&[0u8])?;
            sink.write_all(&(d.nrows() as u64).to_le_bytes())?;
            sink.write_all(&(d.ncols() as u64).to_le_bytes())?;
            write_matrix(d, sink)
        }
        HodlrMatrix::Node(nd) => {
            sink.write_all(&[1u8])?;
            write_factor(&nd.a21, sink)?;
            write_factor(&nd.a12, sink)?;
            write_node(&nd.a11, sink)?;
            write_node(&nd.a22, sink)
        }
    }
}

struct Reader<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> Reader<R> {
    fn fail<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Format { offset: self.offset, msg: msg.into() })
    }

    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        match self.inner.read_exact(&mut buf) {
            Ok(()) => {
                self.offset += N as u64;
                Ok(buf)
            }
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => self.fail("truncated stream"),
            Err(e) => Err(e.into()),
        }
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn u64(&mut self) -> Result<usize> {
        let v = u64::from_le_bytes(self.bytes()?);
        usize::try_from(v).or_else(|_| self.fail(format!("dimension {v} too large")))
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<DenseMatrix> {
        if rows.checked_mul(cols).is_none_or(|len| len > (1 << 34)) {
            return self.fail(format!("implausible block size {rows}x{cols}"));
        }
        let mut m = DenseMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f64::from_le_bytes(self.bytes()?);
            }
        }
        Ok(m)
    }

    fn factor(&mut self, rows: usize, cols: usize) -> Result<LowRank> {
        let at = self.offset;
        let rank = self.u32()? as usize;
        let (r, c) = (self.u64()?, self.u64()?);
        if (r, c) != (rows, cols) {
            return Err(Error::Format {
                offset: at,
                msg: format!("factor is {r}x{c}, expected {rows}x{cols}"),
            });
        }
        if rank > rows.min(cols) {
            return Err(Error::Format { offset: at, msg: format!("rank {rank} exceeds block dimensions") });
        }
        let u = self.matrix(rows, rank)?;
        let v = self.matrix(cols, rank)?;
        Ok(LowRank::new(u, v))
    }

    fn node(&mut self, n: usize, depth: usize) -> Result<HodlrMatrix> {
        if depth > 64 {
            return self.fail("tree too deep");
        }
        let at = self.offset;
        match self.u8()? {
            0 => {
                let (r, c) = (self.u64()?, self.u64()?);
                if (r, c) != (n, n) {
                    return Err(Error::Format { offset: at, msg: format!("leaf is {r}x{c}, expected {n}x{n}") });
                }
                Ok(HodlrMatrix::Leaf(self.matrix(r, c)?))
            }
            1 => {
                let a21_at = self.offset;
                // the split is recovered from the A21 factor dimensions
                let _rank = self.u32()?;
                let (n2, n1) = (self.u64()?, self.u64()?);
                if n1 + n2 != n || n1 == 0 || n2 == 0 {
                    return Err(Error::Format { offset: a21_at, msg: format!("bad split {n1}+{n2} of {n}") });
                }
                // rewind logically: re-parse the factor with known dims
                let rank = _rank as usize;
                if rank > n1.min(n2) {
                    return Err(Error::Format { offset: a21_at, msg: format!("rank {rank} exceeds block dimensions") });
                }
                let a21 = LowRank::new(self.matrix(n2, rank)?, self.matrix(n1, rank)?);
                let a12 = self.factor(n1, n2)?;
                let a11 = self.node(n1, depth + 1)?;
                let a22 = self.node(n2, depth + 1)?;
                Ok(HodlrMatrix::node(a11, a12, a21, a22))
            }
            tag => Err(Error::Format { offset: at, msg: format!("unknown node tag {tag}") }),
        }
    }
}

pub fn deserialize<R: Read>(source: R) -> Result<HodlrMatrix> {
    let mut r = Reader { inner: source, offset: 0 };
    let magic = r.bytes::<4>()?;
    if &magic != MAGIC {
        return Err(Error::Format { offset: 0, msg: format!("bad magic {magic:?}") });
    }
    let rows = r.u64()?;
    let cols = r.u64()?;
    if rows != cols {
        return Err(Error::Format { offset: 12, msg: format!("non-square {rows}x{cols}") });
    }
    let _block_size = r.u32()?;
    r.node(rows, 0)
}
