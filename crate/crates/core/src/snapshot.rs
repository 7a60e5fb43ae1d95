//! Field snapshot files: one JSON header line, then the coefficients as
//! little-endian f64 (re, im) pairs in ascending-wavevector order, j1-major.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::SpectralGrid;
use crate::scalar::Scalar;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GridHeader {
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "Nx")]
    pub nx: usize,
    #[serde(rename = "Ny")]
    pub ny: usize,
    #[serde(rename = "Nz")]
    pub nz: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SnapshotHeader {
    pub grid: GridHeader,
    pub name: String,
    pub time: f64,
}

fn ascending_wavevectors(nx: usize, ny: usize, nz: usize) -> impl Iterator<Item = [i64; 3]> {
    let half = |n: usize| -(n as i64) / 2..(n as i64) / 2;
    half(nx).flat_map(move |j1| half(ny).flat_map(move |j2| half(nz).map(move |j3| [j1, j2, j3])))
}

pub fn write_field<T: Scalar>(
    path: &Path,
    name: &str,
    time: T,
    field: &SpectralField<T>,
) -> Result<()> {
    let grid = field.grid();
    let header = SnapshotHeader {
        grid: GridHeader {
            l: grid.l().to_f64().unwrap(),
            nx: grid.nx(),
            ny: grid.ny(),
            nz: grid.nz(),
        },
        name: name.to_string(),
        time: time.to_f64().unwrap(),
    };
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, &header)
        .map_err(|e| Error::Snapshot(format!("header encode: {e}")))?;
    w.write_all(b"\n")?;
    for j in ascending_wavevectors(grid.nx(), grid.ny(), grid.nz()) {
        let c = field.coeff_at(j).expect("full index set is resolved");
        w.write_all(&c.re.to_f64().unwrap().to_le_bytes())?;
        w.write_all(&c.im.to_f64().unwrap().to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field<T: Scalar>(path: &Path) -> Result<(SnapshotHeader, SpectralField<T>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header_bytes = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        let n = r.read(&mut byte)?;
        if n == 0 {
            return Err(Error::Snapshot("missing header line".into()));
        }
        if byte[0] == b'\n' {
            break;
        }
        header_bytes.push(byte[0]);
        if header_bytes.len() > 1 << 16 {
            return Err(Error::Snapshot("header line too long".into()));
        }
    }
    let header: SnapshotHeader = serde_json::from_slice(&header_bytes)
        .map_err(|e| Error::Snapshot(format!("header decode: {e}")))?;
    let grid = SpectralGrid::<T>::new(
        T::lit(header.grid.l),
        header.grid.nx,
        header.grid.ny,
        header.grid.nz,
    )?;
    let mut field = SpectralField::zeros(&grid);
    let mut buf = [0u8; 16];
    for j in ascending_wavevectors(grid.nx(), grid.ny(), grid.nz()) {
        r.read_exact(&mut buf)
            .map_err(|e| Error::Snapshot(format!("truncated coefficient array at {j:?}: {e}")))?;
        let re = f64::from_le_bytes(buf[0..8].try_into().unwrap());
        let im = f64::from_le_bytes(buf[8..16].try_into().unwrap());
        let idx = grid.index_of_wavevector(j).expect("full index set");
        field.coeffs_mut()[idx] = Complex::new(T::lit(re), T::lit(im));
    }
    if r.read(&mut byte)? != 0 {
        return Err(Error::Snapshot(
            "trailing bytes after coefficient array".into(),
        ));
    }
    Ok((header, field))
}
