//! Binary dump and CSV export of scalar fields.
//!
//! Binary layout (little endian): `b"FBLB"`, version `u32`, dim `u32`,
//! resolution `u32 × dim`, origin `f64 × dim`, extent `f64 × dim`, then the
//! values in node order.

use std::io::{Read, Write};

use super::{Grid, ScalarField};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"FBLB";
pub const VERSION: u32 = 1;

pub fn write_binary<W: Write>(field: &ScalarField, mut out: W) -> Result<()> {
    let g = field.grid();
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(g.dim() as u32).to_le_bytes())?;
    for &n in g.resolution() {
        out.write_all(&(n as u32).to_le_bytes())?;
    }
    for &o in g.origin() {
        out.write_all(&o.to_le_bytes())?;
    }
    for &e in g.extent() {
        out.write_all(&e.to_le_bytes())?;
    }
    for &v in field.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_binary<R: Read>(mut input: R) -> Result<ScalarField> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a field dump (bad magic)".into()));
    }
    let version = read_u32(&mut input)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported dump version {version}")));
    }
    let dim = read_u32(&mut input)? as usize;
    if !(1..=3).contains(&dim) {
        return Err(Error::Format(format!("bad dimension {dim}")));
    }
    let resolution = (0..dim)
        .map(|_| read_u32(&mut input).map(|n| n as usize))
        .collect::<Result<Vec<_>>>()?;
    let origin = (0..dim)
        .map(|_| read_f64(&mut input))
        .collect::<Result<Vec<_>>>()?;
    let extent = (0..dim)
        .map(|_| read_f64(&mut input))
        .collect::<Result<Vec<_>>>()?;
    let grid = Grid::new(&origin, &extent, &resolution)?;
    let values = (0..grid.len())
        .map(|_| read_f64(&mut input))
        .collect::<Result<Vec<_>>>()?;
    ScalarField::new(grid, values)
}

/// One row per node: coordinates followed by the value.
pub fn write_csv<W: Write>(field: &ScalarField, mut out: W) -> Result<()> {
    let g = field.grid();
    let header: Vec<String> = (1..=g.dim()).map(|a| format!("x{a}")).collect();
    writeln!(out, "{},value", header.join(","))?;
    let mut x = vec![0.0; g.dim()];
    for (i, v) in field.values().iter().enumerate() {
        g.node_into(i, &mut x);
        for c in &x {
            write!(out, "{c},")?;
        }
        writeln!(out, "{v}")?;
    }
    Ok(())
}
