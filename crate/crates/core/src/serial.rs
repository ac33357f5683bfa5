//! On-disk forms of compressed vectors.
//!
//! Binary layout (all integers little-endian):
//!
//! ```text
//! magic   b"FTTV"
//! version u32 = 1
//! d       u32
//! ranks   (d+1) × u32            r_0..r_d
//! cores   d × { slice0, slice1 } column-major f64 (re, im) pairs,
//!         slice p has shape r_{p-1} × r_p
//! ```
//!
//! The JSON form is a human-readable debug dump of the same data.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lin::CMat;
use crate::train::Core;
use crate::tt::TTVector;

const MAGIC: &[u8; 4] = b"FTTV";
const VERSION: u32 = 1;

pub fn write_tt<W: Write>(v: &TTVector, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(v.mode_count() as u32).to_le_bytes())?;
    for r in v.ranks() {
        w.write_all(&(r as u32).to_le_bytes())?;
    }
    for core in v.cores() {
        for slice in &core.slices {
            for z in slice.iter() {
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn read_tt<R: Read>(mut r: R) -> Result<TTVector> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::BadFormat("bad magic, not a TT vector file".into()));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)?;
    let version = u32::from_le_bytes(u32buf);
    if version != VERSION {
        return Err(Error::BadFormat(format!("unsupported version {version}")));
    }
    r.read_exact(&mut u32buf)?;
    let d = u32::from_le_bytes(u32buf) as usize;
    if d == 0 || d > 63 {
        return Err(Error::BadFormat(format!("implausible mode count {d}")));
    }
    let mut ranks = Vec::with_capacity(d + 1);
    for _ in 0..=d {
        r.read_exact(&mut u32buf)?;
        let rank = u32::from_le_bytes(u32buf) as usize;
        if rank == 0 || rank > (1 << 24) {
            return Err(Error::BadFormat(format!("implausible rank {rank}")));
        }
        ranks.push(rank);
    }
    if ranks[0] != 1 || ranks[d] != 1 {
        return Err(Error::BadFormat("border ranks must be 1".into()));
    }
    let mut f64buf = [0u8; 8];
    let mut read_f64 = |r: &mut R| -> Result<f64> {
        r.read_exact(&mut f64buf)?;
        Ok(f64::from_le_bytes(f64buf))
    };
    let mut cores = Vec::with_capacity(d);
    for p in 0..d {
        let (rows, cols) = (ranks[p], ranks[p + 1]);
        let mut slices = Vec::with_capacity(2);
        for _ in 0..2 {
            let mut m = CMat::zeros(rows, cols);
            for j in 0..cols {
                for i in 0..rows {
                    let re = read_f64(&mut r)?;
                    let im = read_f64(&mut r)?;
                    m[(i, j)] = Complex64::new(re, im);
                }
            }
            slices.push(m);
        }
        let s1 = slices.pop().unwrap();
        let s0 = slices.pop().unwrap();
        cores.push(Core::new(s0, s1));
    }
    Ok(TTVector::from_cores(cores))
}

pub fn save_tt(v: &TTVector, path: &Path) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_tt(v, &mut file)?;
    Ok(())
}

pub fn load_tt(path: &Path) -> Result<TTVector> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    read_tt(file)
}

#[derive(Serialize, Deserialize)]
struct CoreDebug {
    /// column-major `[re, im]` pairs
    s0: Vec<Vec<[f64; 2]>>,
    s1: Vec<Vec<[f64; 2]>>,
}

#[derive(Serialize, Deserialize)]
struct TTDebug {
    d: usize,
    ranks: Vec<usize>,
    cores: Vec<CoreDebug>,
}

/// JSON debug form of the same payload.
pub fn to_debug_json(v: &TTVector) -> String {
    let dump_slice = |m: &CMat| -> Vec<Vec<[f64; 2]>> {
        (0..m.ncols())
            .map(|j| (0..m.nrows()).map(|i| [m[(i, j)].re, m[(i, j)].im]).collect())
            .collect()
    };
    let debug = TTDebug {
        d: v.mode_count(),
        ranks: v.ranks(),
        cores: v
            .cores()
            .iter()
            .map(|c| CoreDebug {
                s0: dump_slice(&c.slices[0]),
                s1: dump_slice(&c.slices[1]),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&debug).expect("plain data serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tt::Tolerance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn binary_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let v = TTVector::random_complex(9, 5, &mut rng)
            .round(&Tolerance::new(1e-10).unwrap())
            .unwrap();
        let mut buf = Vec::new();
        write_tt(&v, &mut buf).unwrap();
        let back = read_tt(buf.as_slice()).unwrap();
        assert_eq!(back.ranks(), v.ranks());
        let a = v.materialize().unwrap();
        let b = back.materialize().unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x == y), "bit-exact payload");
    }

    #[test]
    fn rejects_corrupt_header() {
        assert!(matches!(
            read_tt(&b"NOPE\x01\x00\x00\x00"[..]),
            Err(Error::BadFormat(_))
        ));
        let v = TTVector::ones(3).unwrap();
        let mut buf = Vec::new();
        write_tt(&v, &mut buf).unwrap();
        buf[4] = 9; // version
        assert!(matches!(read_tt(buf.as_slice()), Err(Error::BadFormat(_))));
        let mut buf2 = Vec::new();
        write_tt(&v, &mut buf2).unwrap();
        buf2.truncate(buf2.len() - 3);
        assert!(read_tt(buf2.as_slice()).is_err());
    }

    #[test]
    fn debug_json_contains_ranks() {
        let v = TTVector::ones(4).unwrap();
        let text = to_debug_json(&v);
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["d"], 4);
        assert_eq!(parsed["ranks"].as_array().unwrap().len(), 5);
    }
}
