//! Binary field snapshots: magic `QGF1`, little-endian `u32 n`, then
//! `f64` period, alpha, kappa, dispersion and time, then `n*n` samples.

use std::io::{Read, Write};

use super::{Grid, RealField};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"QGF1";

/// Scalar metadata stored next to the samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotHeader {
    pub n: u32,
    pub length: f64,
    pub alpha: f64,
    pub kappa: f64,
    pub dispersion: f64,
    pub time: f64,
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub field: RealField,
}

pub fn write_snapshot(mut w: impl Write, field: &RealField, alpha: f64, kappa: f64, dispersion: f64, time: f64) -> Result<()> {
    let g = field.grid();
    let n = u32::try_from(g.n()).map_err(|_| Error::Format("grid too large".into()))?;
    let mut buf = Vec::with_capacity(4 + 4 + 5 * 8 + 8 * g.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&n.to_le_bytes());
    for v in [g.length(), alpha, kappa, dispersion, time] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for v in field.samples() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_snapshot(mut r: impl Read) -> Result<Snapshot> {
    let mut head = [0u8; 48];
    r.read_exact(&mut head).map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    if &head[0..4] != MAGIC {
        return Err(Error::Format(format!("bad magic {:?}", &head[0..4])));
    }
    let n = u32::from_le_bytes(head[4..8].try_into().expect("4 bytes"));
    let f = |k: usize| f64::from_le_bytes(head[8 + 8 * k..16 + 8 * k].try_into().expect("8 bytes"));
    let header = SnapshotHeader { n, length: f(0), alpha: f(1), kappa: f(2), dispersion: f(3), time: f(4) };
    let grid = Grid::new(n as usize, header.length)?;
    let mut body = vec![0u8; 8 * grid.len()];
    r.read_exact(&mut body).map_err(|e| Error::Format(format!("truncated samples: {e}")))?;
    let samples = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let field = RealField::new(&grid, samples)?;
    Ok(Snapshot { header, field })
}
