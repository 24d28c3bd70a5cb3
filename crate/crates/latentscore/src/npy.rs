//! Minimal NPY codec for 2-D little-endian float arrays.
//!
//! Supports exactly what the latent-cloud interchange needs: version 1.0 or
//! 2.0 headers, C order, dtype `<f4` or `<f8`, shape `(n, d)`. Anything else
//! is rejected rather than coerced. Files are written in numpy's own v1.0
//! layout (64-byte aligned header, space padding, trailing newline) so a
//! load/save cycle on a numpy-written `<f8` file is byte-identical.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8; 6] = b"\x93NUMPY";

pub struct NpyArray {
    pub rows: usize,
    pub cols: usize,
    /// Row-major values.
    pub data: Vec<f64>,
}

pub fn read_npy(path: &Path) -> Result<NpyArray> {
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    parse_npy(&bytes).map_err(|msg| Error::Parse {
        path: path.to_path_buf(),
        row: 0,
        col: 0,
        msg,
    })
}

fn parse_npy(bytes: &[u8]) -> std::result::Result<NpyArray, String> {
    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err("not an NPY file (bad magic)".into());
    }
    let (major, minor) = (bytes[6], bytes[7]);
    let (header_len, header_start) = match (major, minor) {
        (1, 0) => (u16::from_le_bytes([bytes[8], bytes[9]]) as usize, 10),
        (2, 0) => {
            if bytes.len() < 12 {
                return Err("truncated v2.0 header length".into());
            }
            (
                u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize,
                12,
            )
        }
        _ => return Err(format!("unsupported NPY version {major}.{minor}")),
    };
    let header_end = header_start + header_len;
    if bytes.len() < header_end {
        return Err("truncated NPY header".into());
    }
    let header = std::str::from_utf8(&bytes[header_start..header_end])
        .map_err(|_| "NPY header is not ASCII".to_string())?;

    let descr = dict_value(header, "descr")?;
    let elem_size = match descr.trim_matches(['\'', '"']) {
        "<f4" => 4,
        "<f8" => 8,
        other => return Err(format!("unsupported dtype {other:?}, expected <f4 or <f8")),
    };
    let fortran = dict_value(header, "fortran_order")?;
    if fortran != "False" {
        return Err("fortran_order arrays are not supported".into());
    }
    let shape = dict_value(header, "shape")?;
    let dims: Vec<usize> = shape
        .trim_matches(['(', ')'])
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| format!("bad shape entry {s:?}"))
        })
        .collect::<std::result::Result<_, _>>()?;
    if dims.len() != 2 {
        return Err(format!("expected a 2-D array, got shape {shape}"));
    }
    let (rows, cols) = (dims[0], dims[1]);
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(elem_size))
        .ok_or("shape overflow")?;
    let payload = &bytes[header_end..];
    if payload.len() != expected {
        return Err(format!(
            "payload is {} bytes, expected {expected} for shape ({rows}, {cols})",
            payload.len()
        ));
    }
    let mut data = Vec::with_capacity(rows * cols);
    match elem_size {
        4 => {
            for chunk in payload.chunks_exact(4) {
                data.push(f32::from_le_bytes(chunk.try_into().unwrap()) as f64);
            }
        }
        _ => {
            for chunk in payload.chunks_exact(8) {
                data.push(f64::from_le_bytes(chunk.try_into().unwrap()));
            }
        }
    }
    Ok(NpyArray { rows, cols, data })
}

/// Extracts the value substring for `key` from the python-dict header text.
fn dict_value(header: &str, key: &str) -> std::result::Result<String, String> {
    let pat = format!("'{key}':");
    let start = header
        .find(&pat)
        .ok_or_else(|| format!("header missing key {key:?}"))?
        + pat.len();
    let rest = header[start..].trim_start();
    let end = if rest.starts_with('(') {
        rest.find(')').map(|i| i + 1).ok_or("unbalanced shape tuple")?
    } else {
        rest.find(',').unwrap_or(rest.len())
    };
    Ok(rest[..end].trim().trim_end_matches(',').to_string())
}

/// Serializes row-major f64 data as NPY v1.0 `<f8`, C order.
pub fn encode_npy(rows: usize, cols: usize, data: &[f64]) -> Vec<u8> {
    assert_eq!(data.len(), rows * cols);
    let dict = format!("{{'descr': '<f8', 'fortran_order': False, 'shape': ({rows}, {cols}), }}");
    let unpadded = MAGIC.len() + 4 + dict.len() + 1;
    let padding = (64 - unpadded % 64) % 64;
    let header_len = (dict.len() + padding + 1) as u16;

    let mut out = Vec::with_capacity(unpadded + padding + data.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1u8, 0u8]);
    out.extend_from_slice(&header_len.to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out.extend(std::iter::repeat_n(b' ', padding));
    out.push(b'\n');
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_npy(path: &Path, rows: usize, cols: usize, data: &[f64]) -> Result<()> {
    std::fs::write(path, encode_npy(rows, cols, data)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// numpy's own byte layout for `np.arange(8.).reshape(4, 2)`.
    fn numpy_fixture() -> Vec<u8> {
        let dict = "{'descr': '<f8', 'fortran_order': False, 'shape': (4, 2), }";
        let mut bytes = Vec::new();
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&[1u8, 0u8]);
        bytes.extend_from_slice(&118u16.to_le_bytes());
        bytes.extend_from_slice(dict.as_bytes());
        bytes.extend(std::iter::repeat_n(b' ', 118 - dict.len() - 1));
        bytes.push(b'\n');
        for i in 0..8 {
            bytes.extend_from_slice(&(i as f64).to_le_bytes());
        }
        bytes
    }

    #[test]
    fn parses_numpy_written_file() {
        let arr = parse_npy(&numpy_fixture()).unwrap();
        assert_eq!((arr.rows, arr.cols), (4, 2));
        assert_eq!(arr.data, (0..8).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn encode_matches_numpy_bytes() {
        let data: Vec<f64> = (0..8).map(|i| i as f64).collect();
        assert_eq!(encode_npy(4, 2, &data), numpy_fixture());
    }

    #[test]
    fn rejects_fortran_order() {
        let fixture = numpy_fixture();
        let text = String::from_utf8_lossy(&fixture).replace("False", "True ");
        let err = parse_npy(text.as_bytes()).unwrap_err();
        assert!(err.contains("fortran_order"));
    }

    #[test]
    fn rejects_non_2d() {
        let dict = "{'descr': '<f8', 'fortran_order': False, 'shape': (8,), }";
        let mut bytes = Vec::new();
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&[1u8, 0u8]);
        bytes.extend_from_slice(&(dict.len() as u16 + 1).to_le_bytes());
        bytes.extend_from_slice(dict.as_bytes());
        bytes.push(b'\n');
        for i in 0..8 {
            bytes.extend_from_slice(&(i as f64).to_le_bytes());
        }
        assert!(parse_npy(&bytes).unwrap_err().contains("2-D"));
    }

    #[test]
    fn rejects_integer_dtype() {
        let fixture = numpy_fixture();
        let text = String::from_utf8_lossy(&fixture).replace("<f8", "<i8");
        assert!(parse_npy(text.as_bytes()).unwrap_err().contains("dtype"));
    }

    #[test]
    fn reads_f32_payload() {
        let dict = "{'descr': '<f4', 'fortran_order': False, 'shape': (2, 2), }";
        let mut bytes = Vec::new();
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&[1u8, 0u8]);
        bytes.extend_from_slice(&(dict.len() as u16 + 1).to_le_bytes());
        bytes.extend_from_slice(dict.as_bytes());
        bytes.push(b'\n');
        for v in [1.5f32, -2.0, 0.25, 4.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let arr = parse_npy(&bytes).unwrap();
        assert_eq!(arr.data, vec![1.5, -2.0, 0.25, 4.0]);
    }
}
