//! File formats: the `.cgrid` complex raster, binary PGM ingestion, and
//! atomic file writes.
//!
//! `.cgrid` layout:
//!
//! ```text
//! bytes 0..8    magic  b"CGRID\0\0\x01"
//! bytes 8..12   header length L, u32 little-endian
//! bytes 12..12+L UTF-8 JSON {"height","width","dtype":"c128","order":"row-major"}
//! remainder     height*width pairs of little-endian f64 (re, im), row-major
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linop::{ImageGrid, MaskSpec};

pub const CGRID_MAGIC: [u8; 8] = *b"CGRID\0\0\x01";

#[derive(Debug, Serialize, Deserialize)]
struct CgridHeader {
    height: usize,
    width: usize,
    dtype: String,
    order: String,
}

pub fn encode_cgrid(grid: &ImageGrid) -> Vec<u8> {
    let header = serde_json::to_vec(&CgridHeader {
        height: grid.height(),
        width: grid.width(),
        dtype: "c128".into(),
        order: "row-major".into(),
    })
    .expect("header serializes");
    let mut out = Vec::with_capacity(12 + header.len() + 16 * grid.len());
    out.extend_from_slice(&CGRID_MAGIC);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    for z in grid.data() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

fn cgrid_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        kind: "cgrid",
        offset,
        message: message.into(),
    }
}

pub fn decode_cgrid(bytes: &[u8]) -> Result<ImageGrid> {
    if bytes.len() < 8 {
        return Err(cgrid_err(bytes.len(), "file shorter than magic"));
    }
    if let Some(i) = (0..8).find(|&i| bytes[i] != CGRID_MAGIC[i]) {
        return Err(cgrid_err(i, "bad magic"));
    }
    if bytes.len() < 12 {
        return Err(cgrid_err(bytes.len(), "missing header length"));
    }
    let hlen = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let payload_start = 12usize
        .checked_add(hlen)
        .filter(|&end| end <= bytes.len())
        .ok_or_else(|| cgrid_err(bytes.len(), format!("header of {hlen} bytes truncated")))?;
    let header: CgridHeader = serde_json::from_slice(&bytes[12..payload_start])
        .map_err(|e| cgrid_err(12, format!("invalid header JSON: {e}")))?;
    if header.dtype != "c128" {
        return Err(cgrid_err(12, format!("unsupported dtype {:?}", header.dtype)));
    }
    if header.order != "row-major" {
        return Err(cgrid_err(12, format!("unsupported order {:?}", header.order)));
    }
    if header.height == 0 || header.width == 0 {
        return Err(cgrid_err(12, "zero dimension"));
    }
    let n = header
        .height
        .checked_mul(header.width)
        .and_then(|n| n.checked_mul(16))
        .ok_or_else(|| cgrid_err(12, "dimensions overflow"))?;
    let payload = &bytes[payload_start..];
    if payload.len() < n {
        return Err(cgrid_err(
            bytes.len(),
            format!("payload truncated: expected {n} bytes, found {}", payload.len()),
        ));
    }
    if payload.len() > n {
        return Err(cgrid_err(payload_start + n, "trailing bytes after payload"));
    }
    let mut data = Vec::with_capacity(n / 16);
    for (i, chunk) in payload.chunks_exact(16).enumerate() {
        let re = f64::from_le_bytes(chunk[..8].try_into().unwrap());
        let im = f64::from_le_bytes(chunk[8..].try_into().unwrap());
        if !re.is_finite() || !im.is_finite() {
            return Err(cgrid_err(payload_start + 16 * i, "non-finite sample"));
        }
        data.push(Complex64::new(re, im));
    }
    ImageGrid::new(header.height, header.width, data)
}

fn pgm_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        kind: "pgm",
        offset,
        message: message.into(),
    }
}

/// Binary (P5) PGM, 8- or 16-bit. Samples are divided by maxval.
pub fn decode_pgm(bytes: &[u8]) -> Result<ImageGrid> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(pgm_err(0, "expected P5 magic"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(pgm_err(pos, "header truncated")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(pgm_err(pos, "expected decimal header field"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .unwrap()
            .parse()
            .map_err(|_| pgm_err(start, "header field out of range"))?;
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(pgm_err(pos, "zero dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(pgm_err(pos, format!("maxval {maxval} outside 1..=65535")));
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(pgm_err(pos, "missing whitespace after maxval")),
    }
    let bytes_per = if maxval < 256 { 1 } else { 2 };
    let need = width * height * bytes_per;
    let payload = &bytes[pos..];
    if payload.len() < need {
        return Err(pgm_err(bytes.len(), format!("raster truncated: expected {need} bytes")));
    }
    let scale = 1.0 / maxval as f64;
    let data = payload[..need]
        .chunks_exact(bytes_per)
        .map(|s| {
            let v = if bytes_per == 1 {
                s[0] as f64
            } else {
                u16::from_be_bytes([s[0], s[1]]) as f64
            };
            Complex64::new(v * scale, 0.0)
        })
        .collect();
    ImageGrid::new(height, width, data)
}

/// 16-bit P5 PGM of real values in `[0, 1]` (clamped).
pub fn encode_pgm16(values: &[f64], height: usize, width: usize) -> Vec<u8> {
    assert_eq!(values.len(), height * width);
    let mut out = format!("P5\n{width} {height}\n65535\n").into_bytes();
    for &v in values {
        let q = (v.clamp(0.0, 1.0) * 65535.0).round() as u16;
        out.extend_from_slice(&q.to_be_bytes());
    }
    out
}

/// Decodes either format by magic.
pub fn decode_image(bytes: &[u8]) -> Result<ImageGrid> {
    if bytes.starts_with(b"P5") {
        decode_pgm(bytes)
    } else {
        decode_cgrid(bytes)
    }
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn load_cgrid(path: &Path) -> Result<ImageGrid> {
    decode_cgrid(&read_bytes(path)?)
}

pub fn save_cgrid(path: &Path, grid: &ImageGrid) -> Result<()> {
    write_atomic(path, &encode_cgrid(grid))
}

pub fn load_mask(path: &Path) -> Result<MaskSpec> {
    Ok(serde_json::from_slice(&read_bytes(path)?)?)
}

pub fn save_mask(path: &Path, mask: &MaskSpec) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(mask)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Writes to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::param(format!("{} has no file name", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}
