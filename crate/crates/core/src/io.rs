//! Field files: a little-endian binary container and a plain CSV dump.
//!
//! Binary layout: 32-byte header (`PSQF`, version, nx, np as `u32`, zero padding),
//! then `x_min x_max p_min p_max hbar reserved` as `f64`, then interleaved
//! `re, im` samples in x-major order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::{PhaseField, PhaseGrid, Repr};

pub const MAGIC: &[u8; 4] = b"PSQF";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 32;

pub fn encode_binary(f: &PhaseField) -> Result<Vec<u8>> {
    if f.repr() != Repr::PHASE {
        return Err(Error::Representation("phase representation"));
    }
    let g = f.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 48 + 16 * g.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(g.nx() as u32).to_le_bytes());
    out.extend_from_slice(&(g.np() as u32).to_le_bytes());
    out.resize(HEADER_LEN, 0);
    for v in [g.x.min, g.x.max, g.p.min, g.p.max, g.hbar(), 0.0] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for z in f.data() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_binary(bytes: &[u8]) -> Result<PhaseField> {
    if bytes.len() < HEADER_LEN + 48 || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing PSQF header".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let (nx, np) = (u32_at(8) as usize, u32_at(12) as usize);
    let meta: Vec<f64> = (0..6).map(|k| f64_at(HEADER_LEN + 8 * k)).collect();
    let grid = PhaseGrid::new(nx, np, (meta[0], meta[1]), (meta[2], meta[3]), meta[4])?;
    let body = &bytes[HEADER_LEN + 48..];
    if body.len() != 16 * grid.len() {
        return Err(Error::Format(format!(
            "expected {} samples, found {} bytes",
            grid.len(),
            body.len()
        )));
    }
    let data = body
        .chunks_exact(16)
        .map(|c| {
            C64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    PhaseField::from_vec(&grid, Repr::PHASE, data)
}

pub fn write_binary(path: &Path, f: &PhaseField) -> Result<()> {
    let bytes = encode_binary(f)?;
    File::create(path)?.write_all(&bytes)?;
    Ok(())
}

pub fn read_binary(path: &Path) -> Result<PhaseField> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    decode_binary(&bytes)
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn encode_csv(f: &PhaseField) -> Result<String> {
    if f.repr() != Repr::PHASE {
        return Err(Error::Representation("phase representation"));
    }
    let g = f.grid();
    let mut s = format!(
        "# hbar={} nx={} np={} x_span={},{} p_span={},{}\nx,p,re,im\n",
        fmt_f64(g.hbar()),
        g.nx(),
        g.np(),
        fmt_f64(g.x.min),
        fmt_f64(g.x.max),
        fmt_f64(g.p.min),
        fmt_f64(g.p.max)
    );
    for i in 0..g.nx() {
        for j in 0..g.np() {
            let z = f.at(i, j);
            s.push_str(&format!(
                "{},{},{},{}\n",
                fmt_f64(g.x.point(i)),
                fmt_f64(g.p.point(j)),
                fmt_f64(z.re),
                fmt_f64(z.im)
            ));
        }
    }
    Ok(s)
}

pub fn write_csv(path: &Path, f: &PhaseField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(encode_csv(f)?.as_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<PhaseField> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty csv".into()))??;
    let mut hbar = None;
    let (mut nx, mut np) = (None, None);
    let (mut xs, mut ps) = (None, None);
    for tok in header.trim_start_matches('#').split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("bad header token {tok}")))?;
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Format(format!("bad number {s}")))
        };
        let pair = |s: &str| -> Result<(f64, f64)> {
            let (a, b) = s
                .split_once(',')
                .ok_or_else(|| Error::Format(format!("bad span {s}")))?;
            Ok((num(a)?, num(b)?))
        };
        match k {
            "hbar" => hbar = Some(num(v)?),
            "nx" => nx = Some(num(v)? as usize),
            "np" => np = Some(num(v)? as usize),
            "x_span" => xs = Some(pair(v)?),
            "p_span" => ps = Some(pair(v)?),
            _ => {}
        }
    }
    let missing = || Error::Format("incomplete csv header".into());
    let grid = PhaseGrid::new(
        nx.ok_or_else(missing)?,
        np.ok_or_else(missing)?,
        xs.ok_or_else(missing)?,
        ps.ok_or_else(missing)?,
        hbar.ok_or_else(missing)?,
    )?;
    lines.next();
    let mut data = Vec::with_capacity(grid.len());
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(Error::Format(format!("bad row {line}")));
        }
        let re = cols[2]
            .parse::<f64>()
            .map_err(|e| Error::Format(e.to_string()))?;
        let im = cols[3]
            .parse::<f64>()
            .map_err(|e| Error::Format(e.to_string()))?;
        data.push(C64::new(re, im));
    }
    PhaseField::from_vec(&grid, Repr::PHASE, data)
}

/// Blocks of `x p re im` separated by blank lines, the layout gnuplot's `splot` expects.
pub fn encode_dat(f: &PhaseField) -> String {
    let g = f.grid();
    let mut s = String::new();
    for i in 0..g.nx() {
        for j in 0..g.np() {
            let z = f.at(i, j);
            s.push_str(&format!(
                "{} {} {} {}\n",
                fmt_f64(g.x.point(i)),
                fmt_f64(g.p.point(j)),
                fmt_f64(z.re),
                fmt_f64(z.im)
            ));
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PhaseField {
        let g = PhaseGrid::new(8, 4, (-2.0, 2.0), (-1.0, 3.0), 0.3).unwrap();
        PhaseField::from_fn(&g, |x, p| C64::new(x.sin() / 3.0, p * 1e-17 + 0.1))
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let f = sample();
        let bytes = encode_binary(&f).unwrap();
        assert_eq!(&bytes[..4], b"PSQF");
        assert_eq!(bytes.len(), 32 + 48 + 16 * 32);
        let g = decode_binary(&bytes).unwrap();
        assert_eq!(g.grid(), f.grid());
        assert_eq!(g.data(), f.data());
    }

    #[test]
    fn binary_rejects_garbage() {
        assert!(decode_binary(b"nope").is_err());
        let mut bytes = encode_binary(&sample()).unwrap();
        bytes.truncate(bytes.len() - 1);
        assert!(decode_binary(&bytes).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let f = sample();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        write_csv(&path, &f).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# hbar="));
        assert!(text.lines().nth(1).unwrap() == "x,p,re,im");
        let g = read_csv(&path).unwrap();
        assert_eq!(g.grid(), f.grid());
        assert_eq!(g.data(), f.data());
    }
}
