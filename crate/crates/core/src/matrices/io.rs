//! Text formats for matrices.
//!
//! Complex scalars are written as `re+imj` (`1.5e0-2e-1j`); the parser also
//! accepts a bare real part, a bare imaginary part (`2j`) and `i` in place of
//! `j`. CSV holds one matrix row per line. JSON uses the envelope
//! `{rows, cols, format, bandwidth?, data}` where `data` is a list of rows of
//! complex strings; band matrices store their `2d + 1` slots per row.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{BandMatrix, DenseMatrix};
use crate::error::{Error, Result};
use crate::C64;

/// Formats a complex scalar as `re+imj` with round-trip precision.
pub fn format_complex(z: C64) -> String {
    let im = if z.im.is_sign_negative() { format!("{:e}", z.im) } else { format!("+{:e}", z.im) };
    format!("{:e}{im}j", z.re)
}

/// Parses `re+imj`, `re-imj`, `re`, `imj` (with `i` accepted for `j`).
pub fn parse_complex(s: &str) -> Result<C64> {
    let t = s.trim();
    let err = || Error::Parse(format!("not a complex number: {s:?}"));
    if t.is_empty() {
        return Err(err());
    }
    let Some(body) = t.strip_suffix(['j', 'i', 'J', 'I']) else {
        return t.parse::<f64>().map(|re| C64::new(re, 0.0)).map_err(|_| err());
    };
    // split at the last sign that does not start the string or an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let parse_im = |p: &str| match p {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        _ => p.parse::<f64>().map_err(|_| err()),
    };
    match split {
        Some(k) => {
            let re = body[..k].parse::<f64>().map_err(|_| err())?;
            Ok(C64::new(re, parse_im(&body[k..])?))
        }
        None => Ok(C64::new(0.0, parse_im(body)?)),
    }
}

/// Writes a dense matrix as CSV, one row per line.
pub fn write_matrix_csv<W: Write>(m: &DenseMatrix, w: W) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for row in m.as_array().rows() {
        wr.write_record(row.iter().map(|&z| format_complex(z)))?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_matrix_csv<R: Read>(r: R) -> Result<DenseMatrix> {
    let mut rd = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        rows.push(rec.iter().map(parse_complex).collect::<Result<Vec<_>>>()?);
    }
    DenseMatrix::from_rows(&rows)
}

/// Dense or band matrix as read from or written to a file.
#[derive(Debug, Clone, PartialEq)]
pub enum StoredMatrix {
    Dense(DenseMatrix),
    Band(BandMatrix),
}

impl StoredMatrix {
    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            StoredMatrix::Dense(m) => m.clone(),
            StoredMatrix::Band(b) => b.to_dense(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    rows: usize,
    cols: usize,
    format: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bandwidth: Option<usize>,
    data: Vec<Vec<String>>,
}

fn format_rows<'a>(rows: impl Iterator<Item = &'a [C64]>) -> Vec<Vec<String>> {
    rows.map(|r| r.iter().map(|&z| format_complex(z)).collect()).collect()
}

pub fn to_json(m: &StoredMatrix) -> Result<String> {
    let env = match m {
        StoredMatrix::Dense(d) => {
            let rows: Vec<Vec<C64>> = d.as_array().rows().into_iter().map(|r| r.to_vec()).collect();
            Envelope {
                rows: d.rows(),
                cols: d.cols(),
                format: "dense".into(),
                bandwidth: None,
                data: format_rows(rows.iter().map(Vec::as_slice)),
            }
        }
        StoredMatrix::Band(b) => {
            let w = 2 * b.bandwidth() + 1;
            Envelope {
                rows: b.n(),
                cols: b.n(),
                format: "band".into(),
                bandwidth: Some(b.bandwidth()),
                data: format_rows(b.raw().chunks(w)),
            }
        }
    };
    Ok(serde_json::to_string(&env)?)
}

pub fn from_json(s: &str) -> Result<StoredMatrix> {
    let env: Envelope = serde_json::from_str(s)?;
    let rows = env
        .data
        .iter()
        .map(|r| r.iter().map(|x| parse_complex(x)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    match env.format.as_str() {
        "dense" => {
            let m = DenseMatrix::from_rows(&rows)?;
            if m.rows() != env.rows || (env.rows > 0 && m.cols() != env.cols) {
                return Err(Error::Parse("dense envelope shape mismatch".into()));
            }
            Ok(StoredMatrix::Dense(m))
        }
        "band" => {
            let d = env.bandwidth.ok_or_else(|| Error::Parse("band envelope without bandwidth".into()))?;
            if rows.len() != env.rows || env.rows != env.cols {
                return Err(Error::Parse("band envelope shape mismatch".into()));
            }
            BandMatrix::from_raw(env.rows, d, rows.into_iter().flatten().collect()).map(StoredMatrix::Band)
        }
        other => Err(Error::Parse(format!("unknown matrix format {other:?}"))),
    }
}
