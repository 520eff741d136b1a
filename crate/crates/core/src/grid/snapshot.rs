//! State snapshots.
//!
//! CSV: header `x,re,im,abs2`, one row per grid point.
//!
//! Binary, all little-endian: `n: u64`, `L: f64`, `t: f64`, then `n` pairs of
//! `(re: f64, im: f64)`.

use std::io::{self, Read, Write};

use num_complex::Complex64;

use super::{make_grid, WaveFunction};

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub state: WaveFunction,
}

pub fn write_snapshot_csv<W: Write>(mut w: W, psi: &WaveFunction) -> io::Result<()> {
    writeln!(w, "x,re,im,abs2")?;
    for (i, a) in psi.amplitudes().iter().enumerate() {
        writeln!(w, "{},{},{},{}", psi.grid().x(i), a.re, a.im, a.norm_sqr())?;
    }
    Ok(())
}

pub fn write_snapshot_binary<W: Write>(mut w: W, psi: &WaveFunction, time: f64) -> io::Result<()> {
    let grid = psi.grid();
    w.write_all(&(grid.n() as u64).to_le_bytes())?;
    w.write_all(&grid.length().to_le_bytes())?;
    w.write_all(&time.to_le_bytes())?;
    for a in psi.amplitudes() {
        w.write_all(&a.re.to_le_bytes())?;
        w.write_all(&a.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_f64<R: Read>(r: &mut R) -> io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Reads a binary snapshot; the grid is rebuilt with the given padding factor.
pub fn read_snapshot_binary<R: Read>(mut r: R, padding: usize) -> io::Result<Snapshot> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    let n = u64::from_le_bytes(b) as usize;
    let length = read_f64(&mut r)?;
    let time = read_f64(&mut r)?;
    let grid = make_grid(n, length, padding)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
    let mut amps = Vec::with_capacity(n);
    for _ in 0..n {
        let re = read_f64(&mut r)?;
        let im = read_f64(&mut r)?;
        amps.push(Complex64::new(re, im));
    }
    let state = WaveFunction::new(grid, amps)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
    Ok(Snapshot { time, state })
}
