//! `HWNLS1` binary snapshots.
//!
//! Little-endian layout:
//!
//! | bytes        | content                                   |
//! |--------------|-------------------------------------------|
//! | 6            | magic `HWNLS1`                            |
//! | 4 + 4        | `nx`, `ny` as u32                         |
//! | 8 + 8 + 8    | `lx`, `ly`, `time` as f64                 |
//! | 16 nx ny     | samples as interleaved `(re, im)` f64, x fastest |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{Field, GridSpec};

pub const MAGIC: &[u8; 6] = b"HWNLS1";
pub const HEADER_LEN: usize = 6 + 4 + 4 + 8 * 3;

/// Size in bytes of a snapshot on the given grid.
pub fn snapshot_len(grid: &GridSpec) -> usize {
    HEADER_LEN + 16 * grid.len()
}

pub fn encode_snapshot(time: f64, f: &Field) -> Vec<u8> {
    let g = f.grid();
    let mut buf = Vec::with_capacity(snapshot_len(g));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(g.nx() as u32).to_le_bytes());
    buf.extend_from_slice(&(g.ny() as u32).to_le_bytes());
    buf.extend_from_slice(&g.lx().to_le_bytes());
    buf.extend_from_slice(&g.ly().to_le_bytes());
    buf.extend_from_slice(&time.to_le_bytes());
    for z in f.values() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    buf
}

struct Cursor<'a> {
    data: &'a [u8],
    offset: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.data.len() < self.offset + n {
            return Err(Error::Format {
                offset: self.offset as u64,
                message: format!(
                    "truncated while reading {what}: need {n} bytes, {} left",
                    self.data.len() - self.offset
                ),
            });
        }
        let out = &self.data[self.offset..self.offset + n];
        self.offset += n;
        Ok(out)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

/// Parses a snapshot; returns `(time, field)`.
pub fn decode_snapshot(data: &[u8]) -> Result<(f64, Field)> {
    let mut cur = Cursor { data, offset: 0 };
    let magic = cur.take(6, "magic")?;
    if magic != MAGIC {
        return Err(Error::Format {
            offset: 0,
            message: format!("bad magic {:?}", String::from_utf8_lossy(magic)),
        });
    }
    let nx = cur.u32("nx")? as usize;
    let ny = cur.u32("ny")? as usize;
    let lx = cur.f64("lx")?;
    let ly = cur.f64("ly")?;
    let grid = GridSpec::new(nx, ny, lx, ly).map_err(|e| Error::Format {
        offset: 6,
        message: e.to_string(),
    })?;
    let time = cur.f64("time")?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let re = cur.f64("sample")?;
        let im = cur.f64("sample")?;
        values.push(Complex64::new(re, im));
    }
    if cur.offset != data.len() {
        return Err(Error::Format {
            offset: cur.offset as u64,
            message: format!("{} trailing bytes", data.len() - cur.offset),
        });
    }
    let field = Field::new(grid, values).map_err(|e| Error::Format {
        offset: HEADER_LEN as u64,
        message: e.to_string(),
    })?;
    Ok((time, field))
}

pub fn write_snapshot(path: &Path, time: f64, f: &Field) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&encode_snapshot(time, f))?;
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<(f64, Field)> {
    let mut data = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut data)?;
    decode_snapshot(&data)
}
