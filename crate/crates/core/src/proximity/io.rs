//! Kernel matrix files (`NYK1` text, `NYKB` binary) and label files.
//!
//! Text values are written with Rust's shortest round-trip float
//! formatting, so a text file re-read and re-written is value-exact.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::proximity::SimilarityMatrix;

pub const TEXT_MAGIC: &str = "NYK1";
pub const BINARY_MAGIC: &[u8; 4] = b"NYKB";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFormat {
    Text,
    Binary,
}

impl KernelFormat {
    /// `Binary` for `.nykb` extensions, `Text` otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("nykb") => KernelFormat::Binary,
            _ => KernelFormat::Text,
        }
    }
}

pub fn write_text<W: Write>(k: &SimilarityMatrix, w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    let n = k.n();
    writeln!(w, "{TEXT_MAGIC} {n}")?;
    for i in 0..n {
        for j in 0..n {
            if j > 0 {
                w.write_all(b" ")?;
            }
            write_float(&mut w, k.get(i, j))?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest round-trip form, switching to exponent notation for very
/// large or small magnitudes.
pub fn write_float<W: Write>(w: &mut W, v: f64) -> std::io::Result<()> {
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) || !a.is_finite() {
        write!(w, "{v}")
    } else {
        write!(w, "{v:e}")
    }
}

pub fn format_float(v: f64) -> String {
    let mut buf = Vec::new();
    write_float(&mut buf, v).expect("writing to a Vec");
    String::from_utf8(buf).expect("ascii")
}

pub fn write_binary<W: Write>(k: &SimilarityMatrix, w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    let n = k.n();
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&(n as u64).to_le_bytes())?;
    for i in 0..n {
        for j in 0..n {
            w.write_all(&k.get(i, j).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads either format, dispatching on the leading magic bytes.
pub fn read_kernel<R: Read>(r: R) -> Result<SimilarityMatrix> {
    let mut r = BufReader::new(r);
    let head = r.fill_buf()?;
    if head.len() >= 4 && &head[..4] == BINARY_MAGIC {
        read_binary_body(r)
    } else {
        read_text_body(r)
    }
}

fn read_binary_body<R: Read>(mut r: R) -> Result<SimilarityMatrix> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    let mut count = [0u8; 8];
    r.read_exact(&mut count)?;
    let n = u64::from_le_bytes(count) as usize;
    let total = n
        .checked_mul(n)
        .ok_or_else(|| Error::parse(0, "binary kernel size overflows"))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != total * 8 {
        return Err(Error::parse(
            0,
            format!("expected {} payload bytes, found {}", total * 8, bytes.len()),
        ));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    SimilarityMatrix::from_row_major(n, values)
}

fn read_text_body<R: BufRead>(r: R) -> Result<SimilarityMatrix> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty kernel file"))??;
    let mut parts = header.split_whitespace();
    if parts.next() != Some(TEXT_MAGIC) {
        return Err(Error::parse(1, format!("expected '{TEXT_MAGIC} <n>' header")));
    }
    let n: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::parse(1, "missing or invalid object count"))?;
    let mut values = Vec::with_capacity(n * n);
    let mut row = 0;
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 2;
        if row == n {
            return Err(Error::parse(lineno, "more rows than declared"));
        }
        let before = values.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(lineno, format!("invalid number '{tok}'")))?;
            values.push(v);
        }
        if values.len() - before != n {
            return Err(Error::parse(
                lineno,
                format!("expected {n} values, found {}", values.len() - before),
            ));
        }
        row += 1;
    }
    if row != n {
        return Err(Error::parse(row + 2, format!("expected {n} rows, found {row}")));
    }
    SimilarityMatrix::from_row_major(n, values)
}

pub fn load_kernel(path: &Path) -> Result<SimilarityMatrix> {
    read_kernel(fs::File::open(path)?)
}

pub fn save_kernel(k: &SimilarityMatrix, path: &Path, format: KernelFormat) -> Result<()> {
    let file = fs::File::create(path)?;
    match format {
        KernelFormat::Text => write_text(k, file),
        KernelFormat::Binary => write_binary(k, file),
    }
}

pub fn read_labels<R: Read>(r: R) -> Result<Vec<i64>> {
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        out.push(
            t.parse()
                .map_err(|_| Error::parse(idx + 1, format!("invalid label '{t}'")))?,
        );
    }
    Ok(out)
}

pub fn write_labels<W: Write>(labels: &[i64], w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    for l in labels {
        writeln!(w, "{l}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_labels(path: &Path) -> Result<Vec<i64>> {
    read_labels(fs::File::open(path)?)
}

pub fn save_labels(labels: &[i64], path: &Path) -> Result<()> {
    write_labels(labels, fs::File::create(path)?)
}
