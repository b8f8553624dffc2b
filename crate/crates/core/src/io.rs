//! On-disk scan and label files.
//!
//! * `<name>.bin`: packed little-endian `f32` quadruples `(x, y, z, intensity)`,
//!   16 bytes per point.
//! * `<name>.label`: packed little-endian `u32`, 4 bytes per point, semantic id
//!   in the low 16 bits.
//! * `<name>.conf` (optional, domain-adaptation targets only): packed
//!   little-endian `f32` pseudo-label confidences, 4 bytes per point.
//!
//! Writes go through a temp file in the destination directory followed by a
//! rename, so an interrupted run never leaves a half-written file behind.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{DecodeError, Error, Result};
use crate::geometry::Point;
use crate::scan::{Label, Scan};

pub const POINT_RECORD_SIZE: usize = 16;
pub const LABEL_RECORD_SIZE: usize = 4;

fn check_record_size(bytes: &[u8], record_size: usize) -> Result<(), DecodeError> {
    if !bytes.len().is_multiple_of(record_size) {
        return Err(DecodeError::Truncated {
            len: bytes.len(),
            record_size,
            offset: bytes.len() - bytes.len() % record_size,
        });
    }
    Ok(())
}

#[inline]
fn f32_at(bytes: &[u8], at: usize) -> f32 {
    f32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

pub fn decode_points(bytes: &[u8]) -> Result<Vec<Point>, DecodeError> {
    check_record_size(bytes, POINT_RECORD_SIZE)?;
    bytes
        .chunks_exact(POINT_RECORD_SIZE)
        .enumerate()
        .map(|(i, rec)| {
            let p = Point::new(f32_at(rec, 0), f32_at(rec, 4), f32_at(rec, 8), f32_at(rec, 12));
            if p.is_finite() {
                Ok(p)
            } else {
                Err(DecodeError::NonFinite {
                    offset: i * POINT_RECORD_SIZE,
                })
            }
        })
        .collect()
}

pub fn decode_labels(bytes: &[u8]) -> Result<Vec<Label>, DecodeError> {
    check_record_size(bytes, LABEL_RECORD_SIZE)?;
    Ok(bytes
        .chunks_exact(LABEL_RECORD_SIZE)
        .map(|rec| Label(u32::from_le_bytes([rec[0], rec[1], rec[2], rec[3]])))
        .collect())
}

pub fn decode_confidences(bytes: &[u8]) -> Result<Vec<f32>, DecodeError> {
    check_record_size(bytes, LABEL_RECORD_SIZE)?;
    bytes
        .chunks_exact(LABEL_RECORD_SIZE)
        .enumerate()
        .map(|(i, rec)| {
            let c = f32_at(rec, 0);
            if c.is_finite() {
                Ok(c)
            } else {
                Err(DecodeError::NonFinite {
                    offset: i * LABEL_RECORD_SIZE,
                })
            }
        })
        .collect()
}

pub fn encode_points(points: &[Point]) -> Vec<u8> {
    let mut out = Vec::with_capacity(points.len() * POINT_RECORD_SIZE);
    for p in points {
        out.extend_from_slice(&p.x.to_le_bytes());
        out.extend_from_slice(&p.y.to_le_bytes());
        out.extend_from_slice(&p.z.to_le_bytes());
        out.extend_from_slice(&p.intensity.to_le_bytes());
    }
    out
}

pub fn encode_labels(labels: &[Label]) -> Vec<u8> {
    labels.iter().flat_map(|l| l.0.to_le_bytes()).collect()
}

pub fn encode_confidences(confidences: &[f32]) -> Vec<u8> {
    confidences.iter().flat_map(|c| c.to_le_bytes()).collect()
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn decode_at<T>(path: &Path, res: Result<T, DecodeError>) -> Result<T> {
    res.map_err(|source| Error::Decode {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_points(path: &Path) -> Result<Vec<Point>> {
    let bytes = read_bytes(path)?;
    decode_at(path, decode_points(&bytes))
}

pub fn read_labels(path: &Path) -> Result<Vec<Label>> {
    let bytes = read_bytes(path)?;
    decode_at(path, decode_labels(&bytes))
}

pub fn read_confidences(path: &Path) -> Result<Vec<f32>> {
    let bytes = read_bytes(path)?;
    decode_at(path, decode_confidences(&bytes))
}

/// Reads a scan and, when given, its label file. Without a label file every
/// point gets [`Label::UNLABELED`].
pub fn read_scan(scan_path: &Path, label_path: Option<&Path>) -> Result<Scan> {
    let points = read_points(scan_path)?;
    let Some(label_path) = label_path else {
        return Ok(Scan::unlabeled(points));
    };
    let labels = read_labels(label_path)?;
    if labels.len() != points.len() {
        return Err(Error::CountMismatch {
            scan: scan_path.to_path_buf(),
            label: label_path.to_path_buf(),
            points: points.len(),
            labels: labels.len(),
        });
    }
    Scan::new(points, labels)
}

/// Writes `bytes` to `path` via a sibling temp file and rename. Creates the
/// parent directory if needed.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn write_scan(scan: &Scan, scan_path: &Path, label_path: &Path) -> Result<()> {
    write_atomic(scan_path, &encode_points(scan.points()))?;
    write_atomic(label_path, &encode_labels(scan.labels()))
}
