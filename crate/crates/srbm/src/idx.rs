//! IDX files (the MNIST container format), raw or gzip-compressed.

use std::fs;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// Grayscale images, row-major pixels of each image stored back to back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

impl RawImages {
    pub fn image(&self, n: usize) -> &[u8] {
        let len = self.rows * self.cols;
        &self.pixels[n * len..(n + 1) * len]
    }
}

/// Reads a file, inflating it when it starts with the gzip magic.
pub fn read_maybe_gzip(path: &Path) -> Result<Vec<u8>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(bytes.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(bytes)
    }
}

fn be_u32(bytes: &[u8], offset: usize, path: &Path, field: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("four bytes")))
        .ok_or_else(|| Error::format(path, format!("file too short for the {field} header field ({} bytes)", bytes.len())))
}

fn check_magic(bytes: &[u8], expected: u32, path: &Path) -> Result<()> {
    let magic = be_u32(bytes, 0, path, "magic")?;
    if magic != expected {
        return Err(Error::format(path, format!("bad magic 0x{magic:08x}, expected 0x{expected:08x}")));
    }
    Ok(())
}

fn check_payload(bytes: &[u8], header: usize, expected: usize, path: &Path) -> Result<()> {
    let actual = bytes.len() - header;
    if actual != expected {
        return Err(Error::format(path, format!("payload has {actual} bytes, expected {expected}")));
    }
    Ok(())
}

pub fn parse_idx_images(bytes: &[u8], path: &Path) -> Result<RawImages> {
    check_magic(bytes, IMAGES_MAGIC, path)?;
    let count = be_u32(bytes, 4, path, "count")? as usize;
    let rows = be_u32(bytes, 8, path, "rows")? as usize;
    let cols = be_u32(bytes, 12, path, "cols")? as usize;
    if rows == 0 || cols == 0 {
        return Err(Error::format(path, format!("degenerate image size {rows}x{cols}")));
    }
    check_payload(bytes, 16, count * rows * cols, path)?;
    Ok(RawImages {
        count,
        rows,
        cols,
        pixels: bytes[16..].to_vec(),
    })
}

pub fn parse_idx_labels(bytes: &[u8], path: &Path) -> Result<Vec<u8>> {
    check_magic(bytes, LABELS_MAGIC, path)?;
    let count = be_u32(bytes, 4, path, "count")? as usize;
    check_payload(bytes, 8, count, path)?;
    let labels = bytes[8..].to_vec();
    if let Some(n) = labels.iter().position(|&l| l > 9) {
        return Err(Error::format(path, format!("label {} at index {n} is outside 0-9", labels[n])));
    }
    Ok(labels)
}

pub fn load_idx_images(path: &Path) -> Result<RawImages> {
    parse_idx_images(&read_maybe_gzip(path)?, path)
}

pub fn load_idx_labels(path: &Path) -> Result<Vec<u8>> {
    parse_idx_labels(&read_maybe_gzip(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn images_file(count: u32, rows: u32, cols: u32, payload: usize) -> Vec<u8> {
        let mut v = Vec::new();
        for x in [IMAGES_MAGIC, count, rows, cols] {
            v.extend_from_slice(&x.to_be_bytes());
        }
        v.extend((0..payload).map(|n| n as u8));
        v
    }

    #[test]
    fn parses_images() {
        let bytes = images_file(2, 2, 3, 12);
        let img = parse_idx_images(&bytes, Path::new("x")).unwrap();
        assert_eq!((img.count, img.rows, img.cols), (2, 2, 3));
        assert_eq!(img.image(1), &[6, 7, 8, 9, 10, 11]);
    }

    #[test]
    fn rejects_label_magic_for_images() {
        let mut bytes = images_file(1, 1, 1, 1);
        bytes[3] = 0x01;
        let err = parse_idx_images(&bytes, Path::new("x")).unwrap_err().to_string();
        assert!(err.contains("bad magic 0x00000801"), "{err}");
    }

    #[test]
    fn truncated_payload_reports_sizes() {
        let bytes = images_file(2, 2, 2, 5);
        let err = parse_idx_images(&bytes, Path::new("x")).unwrap_err().to_string();
        assert!(err.contains("payload has 5 bytes, expected 8"), "{err}");
    }

    #[test]
    fn labels() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
        bytes.extend_from_slice(&3u32.to_be_bytes());
        bytes.extend_from_slice(&[4, 0, 9]);
        assert_eq!(parse_idx_labels(&bytes, Path::new("l")).unwrap(), vec![4, 0, 9]);
        bytes[10] = 10;
        assert!(parse_idx_labels(&bytes, Path::new("l")).is_err());
        assert!(parse_idx_labels(&[], Path::new("l")).is_err());
        assert!(parse_idx_labels(&images_file(1, 1, 1, 1), Path::new("l")).is_err());
    }

    #[test]
    fn reads_gzip() {
        use flate2::write::GzEncoder;
        use std::io::Write;
        let bytes = images_file(1, 2, 2, 4);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.gz");
        let mut enc = GzEncoder::new(Vec::new(), flate2::Compression::default());
        enc.write_all(&bytes).unwrap();
        fs::write(&path, enc.finish().unwrap()).unwrap();
        assert_eq!(load_idx_images(&path).unwrap().pixels, vec![0, 1, 2, 3]);
    }
}
