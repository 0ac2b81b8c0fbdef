//! On-disk formats: ATNB attention tensors, ATNM dense matrices, alignment JSON
//! and the CSV exports.
//!
//! ATNB layout: the line `ATNB1`, one compact JSON header line
//! `{"dims":[L,H,T,T],"dtype":"f32","layout":"row-major","n_prompt":n,"n_generated":m}`,
//! then `L*H*T*T` little-endian `f32` values. ATNM follows the same convention
//! with magic `ATNM1`, dims `[n_rows, n_cols]`, `f64` payload, and the row flags
//! encoded as a string of `S`/`Z`/`U`.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::Deserialize;

use crate::data::alignment::TokenAlignment;
use crate::data::matrix::{Granularity, InteractionMatrix, RowFlag, VisualAttention};
use crate::data::tensor::{AttentionTensor, INGEST_ROW_TOLERANCE};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const ATNB_MAGIC: &str = "ATNB1";
pub const ATNM_MAGIC: &str = "ATNM1";

/// Writes `bytes` to `path` through a temporary sibling file, so a failed write
/// never leaves a partial file at `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn atnb_header(t: &AttentionTensor<f32>) -> String {
    let total = t.total();
    format!(
        "{{\"dims\":[{},{},{},{}],\"dtype\":\"f32\",\"layout\":\"row-major\",\"n_prompt\":{},\"n_generated\":{}}}",
        t.layers(),
        t.heads(),
        total,
        total,
        t.n_prompt(),
        t.n_generated()
    )
}

/// Serializes a tensor to the ATNB byte layout.
pub fn encode_attention_tensor(t: &AttentionTensor<f32>) -> Vec<u8> {
    let header = atnb_header(t);
    let mut out = Vec::with_capacity(ATNB_MAGIC.len() + header.len() + 2 + t.values().len() * 4);
    out.extend_from_slice(ATNB_MAGIC.as_bytes());
    out.push(b'\n');
    out.extend_from_slice(header.as_bytes());
    out.push(b'\n');
    for v in t.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_attention_tensor(t: &AttentionTensor<f32>, path: &Path) -> Result<()> {
    write_atomic(path, &encode_attention_tensor(t))
}

#[derive(Deserialize)]
struct AtnbHeader {
    dims: Vec<usize>,
    dtype: String,
    layout: String,
    n_prompt: usize,
    n_generated: usize,
}

fn read_line(reader: &mut impl BufRead, what: &str) -> Result<String> {
    let mut line = Vec::new();
    reader
        .read_until(b'\n', &mut line)
        .map_err(|e| Error::Header(format!("reading {what}: {e}")))?;
    if line.last() != Some(&b'\n') {
        return Err(Error::Header(format!("truncated {what}")));
    }
    line.pop();
    String::from_utf8(line).map_err(|_| Error::Header(format!("{what} is not UTF-8")))
}

/// Parses ATNB bytes, validating tensor invariants at the ingest tolerance.
pub fn decode_attention_tensor(bytes: &[u8]) -> Result<AttentionTensor<f32>> {
    let mut reader = BufReader::new(bytes);
    let magic = read_line(&mut reader, "magic line")?;
    if magic != ATNB_MAGIC {
        return Err(Error::Header(format!("bad magic {magic:?}")));
    }
    let header_text = read_line(&mut reader, "header line")?;
    let header: AtnbHeader =
        serde_json::from_str(&header_text).map_err(|e| Error::Header(e.to_string()))?;
    if header.dtype != "f32" {
        return Err(Error::Header(format!("unsupported dtype {:?}", header.dtype)));
    }
    if header.layout != "row-major" {
        return Err(Error::Header(format!("unsupported layout {:?}", header.layout)));
    }
    let [layers, heads, rows, cols] = header.dims[..] else {
        return Err(Error::Header(format!("expected 4 dims, got {:?}", header.dims)));
    };
    let total = header.n_prompt + header.n_generated;
    if rows != total || cols != total {
        return Err(Error::Header(format!(
            "dims {:?} disagree with n_prompt + n_generated = {total}",
            header.dims
        )));
    }
    let mut payload = Vec::new();
    reader
        .read_to_end(&mut payload)
        .map_err(|e| Error::Header(e.to_string()))?;
    let expected = layers
        .checked_mul(heads)
        .and_then(|x| x.checked_mul(total))
        .and_then(|x| x.checked_mul(total))
        .and_then(|x| x.checked_mul(4))
        .ok_or_else(|| Error::Header("dims overflow".into()))?;
    if payload.len() != expected {
        return Err(Error::PayloadSize {
            expected,
            actual: payload.len(),
        });
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    AttentionTensor::new(
        layers,
        heads,
        header.n_prompt,
        header.n_generated,
        values,
        INGEST_ROW_TOLERANCE,
    )
}

pub fn read_attention_tensor(path: &Path) -> Result<AttentionTensor<f32>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_attention_tensor(&bytes)
}

pub fn read_alignment(path: &Path) -> Result<TokenAlignment> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TokenAlignment::from_json(&text)
}

pub fn write_alignment(a: &TokenAlignment, path: &Path) -> Result<()> {
    write_atomic(path, a.to_json().as_bytes())
}

fn granularity_name(g: Granularity) -> &'static str {
    match g {
        Granularity::Token => "token",
        Granularity::Line => "line",
    }
}

pub fn encode_matrix<T: Scalar>(m: &InteractionMatrix<T>) -> Vec<u8> {
    let flags: String = m.row_flags().iter().map(|f| f.code()).collect();
    let header = format!(
        "{{\"dims\":[{},{}],\"dtype\":\"f64\",\"layout\":\"row-major\",\"granularity\":\"{}\",\"row_flags\":\"{}\"}}",
        m.n_rows(),
        m.n_cols(),
        granularity_name(m.granularity()),
        flags
    );
    let mut out = Vec::with_capacity(header.len() + 8 + m.values().len() * 8);
    out.extend_from_slice(ATNM_MAGIC.as_bytes());
    out.push(b'\n');
    out.extend_from_slice(header.as_bytes());
    out.push(b'\n');
    for v in m.values() {
        out.extend_from_slice(&v.as_f64().to_le_bytes());
    }
    out
}

#[derive(Deserialize)]
struct AtnmHeader {
    dims: Vec<usize>,
    dtype: String,
    layout: String,
    granularity: Granularity,
    row_flags: String,
}

pub fn decode_matrix(bytes: &[u8]) -> Result<InteractionMatrix<f64>> {
    let mut reader = BufReader::new(bytes);
    let magic = read_line(&mut reader, "magic line")?;
    if magic != ATNM_MAGIC {
        return Err(Error::Header(format!("bad magic {magic:?}")));
    }
    let header_text = read_line(&mut reader, "header line")?;
    let header: AtnmHeader =
        serde_json::from_str(&header_text).map_err(|e| Error::Header(e.to_string()))?;
    if header.dtype != "f64" || header.layout != "row-major" {
        return Err(Error::Header(format!(
            "unsupported dtype/layout {}/{}",
            header.dtype, header.layout
        )));
    }
    let [rows, cols] = header.dims[..] else {
        return Err(Error::Header(format!("expected 2 dims, got {:?}", header.dims)));
    };
    let flags = header
        .row_flags
        .chars()
        .map(|c| RowFlag::from_code(c).ok_or_else(|| Error::Header(format!("bad row flag {c:?}"))))
        .collect::<Result<Vec<_>>>()?;
    let mut payload = Vec::new();
    reader
        .read_to_end(&mut payload)
        .map_err(|e| Error::Header(e.to_string()))?;
    if payload.len() != rows * cols * 8 {
        return Err(Error::PayloadSize {
            expected: rows * cols * 8,
            actual: payload.len(),
        });
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    InteractionMatrix::from_parts(rows, cols, header.granularity, values, flags)
}

pub fn write_matrix<T: Scalar>(m: &InteractionMatrix<T>, path: &Path) -> Result<()> {
    write_atomic(path, &encode_matrix(m))
}

pub fn read_matrix(path: &Path) -> Result<InteractionMatrix<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_matrix(&bytes)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Sparse `row,col,value` CSV listing only non-zero entries.
pub fn matrix_to_csv<T: Scalar>(m: &InteractionMatrix<T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["row", "col", "value"]).map_err(csv_err)?;
    for r in 0..m.n_rows() {
        for (c, v) in m.row(r).iter().enumerate() {
            if !v.is_zero() {
                w.write_record([r.to_string(), c.to_string(), v.as_f64().to_string()])
                    .map_err(csv_err)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// `char_index,char,weight` CSV for a character vector over `a`'s prompt.
pub fn visual_to_csv<T: Scalar>(v: &VisualAttention<T>, a: &TokenAlignment) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["char_index", "char", "weight"]).map_err(csv_err)?;
    for ((k, ch), weight) in a.prompt().chars().enumerate().zip(v.values()) {
        w.write_record([k.to_string(), ch.to_string(), weight.as_f64().to_string()])
            .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth::synth_attention;

    fn tiny() -> AttentionTensor<f32> {
        AttentionTensor::new(1, 1, 2, 0, vec![1.0, 0.0, 0.5, 0.5], 1e-6).unwrap()
    }

    #[test]
    fn tiny_tensor_byte_layout() {
        let bytes = encode_attention_tensor(&tiny());
        let header = r#"{"dims":[1,1,2,2],"dtype":"f32","layout":"row-major","n_prompt":2,"n_generated":0}"#;
        // magic line + header line + 4 f32 values
        assert_eq!(header.len(), 82);
        assert_eq!(bytes.len(), 105);
        assert_eq!(&bytes[..6], b"ATNB1\n");
        assert_eq!(&bytes[6..88], header.as_bytes());
        assert_eq!(bytes[88], b'\n');
        assert_eq!(&bytes[89..93], &1.0f32.to_le_bytes());
        assert_eq!(decode_attention_tensor(&bytes).unwrap(), tiny());
    }

    #[test]
    fn row_sum_error_names_offender() {
        let mut bytes = encode_attention_tensor(&tiny());
        let n = bytes.len();
        bytes[n - 8..n - 4].copy_from_slice(&0.6f32.to_le_bytes());
        bytes[n - 4..].copy_from_slice(&0.6f32.to_le_bytes());
        let err = decode_attention_tensor(&bytes).unwrap_err();
        assert!(matches!(err, Error::RowSum { layer: 1, head: 1, row: 2, .. }), "{err}");
    }

    #[test]
    fn payload_and_header_errors() {
        let bytes = encode_attention_tensor(&tiny());
        let err = decode_attention_tensor(&bytes[..bytes.len() - 1]).unwrap_err();
        assert!(matches!(err, Error::PayloadSize { expected: 16, actual: 15 }));
        assert!(matches!(
            decode_attention_tensor(b"ATNB2\n{}\n").unwrap_err(),
            Error::Header(_)
        ));
        assert!(matches!(
            decode_attention_tensor(b"ATNB1\n{\"dims\":[1,1,2,2]}\n").unwrap_err(),
            Error::Header(_)
        ));
        let mut upper = encode_attention_tensor(&tiny());
        upper[93..97].copy_from_slice(&0.1f32.to_le_bytes());
        assert!(matches!(
            decode_attention_tensor(&upper).unwrap_err(),
            Error::UpperTriangle { row: 1, col: 2, .. }
        ));
    }

    #[test]
    fn unwritable_path_leaves_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing").join("t.atnb");
        assert!(write_attention_tensor(&tiny(), &path).is_err());
        assert!(!path.exists());
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.atnb");
        let t = synth_attention::<f32>(4, 2, 3, 6, 2);
        write_attention_tensor(&t, &path).unwrap();
        assert_eq!(read_attention_tensor(&path).unwrap(), t);
    }

    #[test]
    fn matrix_round_trip_keeps_flags() {
        let m = InteractionMatrix::from_parts(
            2,
            3,
            Granularity::Line,
            vec![0.0, 0.0, 0.0, 0.25, 0.25, 0.5],
            vec![RowFlag::Zero, RowFlag::Stochastic],
        )
        .unwrap();
        let back = decode_matrix(&encode_matrix(&m)).unwrap();
        assert_eq!(back, m);
        let csv = matrix_to_csv(&m).unwrap();
        assert_eq!(csv, "row,col,value\n1,0,0.25\n1,1,0.25\n1,2,0.5\n");
    }
}
