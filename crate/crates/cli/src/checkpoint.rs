//! Binary checkpoint format, little-endian:
//!
//! ```text
//! magic   "HLIM" (4 bytes)
//! version u32
//! N1, N2, N3 u32
//! L1, L2  f64
//! eps     f64     (0 for a primitive-equations state)
//! t       f64
//! count   u32     (number of fields)
//! fields  count * N1*N2*N3 complex coefficients (re, im as f64),
//!         k1-major order; (vx, vy) or (vx, vy, w)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rustfft::num_complex::Complex64;

use hydrolim_core::field::{Parity, SpectralField};
use hydrolim_core::symmetry::HorizontalField;
use hydrolim_core::{Error, Grid, PeState, Result, SnsState};

const MAGIC: &[u8; 4] = b"HLIM";
const VERSION: u32 = 1;

#[derive(Debug)]
pub enum Checkpoint {
    Pe(PeState),
    Sns(SnsState),
}

fn io_err(what: &str, e: std::io::Error) -> Error {
    Error::Config(format!("checkpoint {what}: {e}"))
}

fn write_header<W: Write>(
    w: &mut W,
    grid: &Grid,
    eps: f64,
    t: f64,
    count: u32,
) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    let [n1, n2, n3] = grid.n();
    w.write_u32::<LittleEndian>(n1 as u32)?;
    w.write_u32::<LittleEndian>(n2 as u32)?;
    w.write_u32::<LittleEndian>(n3 as u32)?;
    w.write_f64::<LittleEndian>(grid.l1())?;
    w.write_f64::<LittleEndian>(grid.l2())?;
    w.write_f64::<LittleEndian>(eps)?;
    w.write_f64::<LittleEndian>(t)?;
    w.write_u32::<LittleEndian>(count)?;
    Ok(())
}

fn write_field<W: Write>(w: &mut W, f: &SpectralField) -> std::io::Result<()> {
    for c in f.coeffs() {
        w.write_f64::<LittleEndian>(c.re)?;
        w.write_f64::<LittleEndian>(c.im)?;
    }
    Ok(())
}

pub fn write_pe(path: &Path, state: &PeState) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| io_err("create", e))?);
    write_header(&mut w, state.grid(), 0.0, state.t, 2).map_err(|e| io_err("write", e))?;
    write_field(&mut w, &state.v.x).map_err(|e| io_err("write", e))?;
    write_field(&mut w, &state.v.y).map_err(|e| io_err("write", e))?;
    w.flush().map_err(|e| io_err("flush", e))?;
    Ok(())
}

pub fn write_sns(path: &Path, state: &SnsState) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| io_err("create", e))?);
    write_header(&mut w, state.grid(), state.eps, state.t, 3).map_err(|e| io_err("write", e))?;
    write_field(&mut w, &state.v.x).map_err(|e| io_err("write", e))?;
    write_field(&mut w, &state.v.y).map_err(|e| io_err("write", e))?;
    write_field(&mut w, &state.w).map_err(|e| io_err("write", e))?;
    w.flush().map_err(|e| io_err("flush", e))?;
    Ok(())
}

pub fn read(path: &Path) -> Result<Checkpoint> {
    let mut r = BufReader::new(File::open(path).map_err(|e| io_err("open", e))?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|e| io_err("read", e))?;
    if &magic != MAGIC {
        return Err(Error::Config(format!(
            "not a checkpoint file: bad magic {magic:?}"
        )));
    }
    let version = r.read_u32::<LittleEndian>().map_err(|e| io_err("read", e))?;
    if version != VERSION {
        return Err(Error::Config(format!(
            "unsupported checkpoint version {version} (expected {VERSION})"
        )));
    }
    let n1 = r.read_u32::<LittleEndian>().map_err(|e| io_err("read", e))? as usize;
    let n2 = r.read_u32::<LittleEndian>().map_err(|e| io_err("read", e))? as usize;
    let n3 = r.read_u32::<LittleEndian>().map_err(|e| io_err("read", e))? as usize;
    let l1 = r.read_f64::<LittleEndian>().map_err(|e| io_err("read", e))?;
    let l2 = r.read_f64::<LittleEndian>().map_err(|e| io_err("read", e))?;
    let eps = r.read_f64::<LittleEndian>().map_err(|e| io_err("read", e))?;
    let t = r.read_f64::<LittleEndian>().map_err(|e| io_err("read", e))?;
    let count = r.read_u32::<LittleEndian>().map_err(|e| io_err("read", e))?;
    let grid = Grid::new(n1, n2, n3, l1, l2)?;

    let mut read_field = |parity: Parity| -> Result<SpectralField> {
        let mut coeff = Vec::with_capacity(grid.size());
        for _ in 0..grid.size() {
            let re = r.read_f64::<LittleEndian>().map_err(|e| io_err("read", e))?;
            let im = r.read_f64::<LittleEndian>().map_err(|e| io_err("read", e))?;
            coeff.push(Complex64::new(re, im));
        }
        SpectralField::from_coeffs(&grid, coeff, parity)
    };

    match count {
        2 => {
            let x = read_field(Parity::Even)?;
            let y = read_field(Parity::Even)?;
            Ok(Checkpoint::Pe(PeState::new(HorizontalField { x, y }, t)?))
        }
        3 => {
            let x = read_field(Parity::Even)?;
            let y = read_field(Parity::Even)?;
            let w = read_field(Parity::Odd)?;
            Ok(Checkpoint::Sns(SnsState::new(
                HorizontalField { x, y },
                w,
                eps,
                t,
            )?))
        }
        other => Err(Error::Config(format!(
            "unexpected field count {other} in checkpoint"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hydrolim_core::symmetry::{make_initial_data, InitialDataRecipe};

    #[test]
    fn pe_round_trip_is_exact() {
        let g = Grid::new(8, 8, 8, 1.0, 2.0).unwrap();
        let state = make_initial_data(&InitialDataRecipe::random(1.0, 3), &g).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pe.hlim");
        write_pe(&path, &state).unwrap();
        match read(&path).unwrap() {
            Checkpoint::Pe(back) => {
                assert_eq!(back.grid().n(), g.n());
                for (a, b) in state.v.x.coeffs().iter().zip(back.v.x.coeffs()) {
                    assert_eq!(a.re.to_bits(), b.re.to_bits());
                    assert_eq!(a.im.to_bits(), b.im.to_bits());
                }
            }
            _ => panic!("expected PE checkpoint"),
        }
    }

    #[test]
    fn sns_round_trip_preserves_eps_and_w() {
        let g = Grid::new(8, 8, 8, 1.0, 1.0).unwrap();
        let v0 = make_initial_data(&InitialDataRecipe::random(1.0, 9), &g).unwrap();
        let state = SnsState::from_initial(&v0, 0.125).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sns.hlim");
        write_sns(&path, &state).unwrap();
        match read(&path).unwrap() {
            Checkpoint::Sns(back) => {
                assert_eq!(back.eps, 0.125);
                for (a, b) in state.w.coeffs().iter().zip(back.w.coeffs()) {
                    assert_eq!(a.re.to_bits(), b.re.to_bits());
                }
            }
            _ => panic!("expected scaled-system checkpoint"),
        }
    }

    #[test]
    fn rejects_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.hlim");
        std::fs::write(&path, b"NOPEnope").unwrap();
        assert!(read(&path).is_err());
    }
}
