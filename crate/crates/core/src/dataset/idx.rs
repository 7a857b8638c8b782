//! IDX files (the MNIST container format): big-endian u32 header fields,
//! then raw unsigned bytes. Gzip-compressed files are accepted transparently.

use std::fs;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use super::Dataset;
use crate::error::{Error, Result};

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;
const MAX_LABEL: u8 = 9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    /// `count` images of `rows * cols` bytes, each flattened row-major.
    pub pixels: Vec<u8>,
}

impl IdxImages {
    pub fn image(&self, i: usize) -> &[u8] {
        let n = self.rows * self.cols;
        &self.pixels[i * n..(i + 1) * n]
    }
}

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::format(path, format!("bad gzip stream: {e}")))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn header(bytes: &[u8], fields: usize, path: &Path) -> Result<Vec<u32>> {
    if bytes.len() < 4 * fields {
        return Err(Error::format(path, "truncated header"));
    }
    Ok(bytes[..4 * fields]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

pub fn parse_idx_images(bytes: &[u8], path: &Path) -> Result<IdxImages> {
    let h = header(bytes, 4, path)?;
    if h[0] != IMAGE_MAGIC {
        return Err(Error::format(
            path,
            format!("magic {:#010x}, expected {IMAGE_MAGIC:#010x}", h[0]),
        ));
    }
    let (count, rows, cols) = (h[1] as usize, h[2] as usize, h[3] as usize);
    let expected = count * rows * cols;
    let payload = &bytes[16..];
    if payload.len() != expected {
        return Err(Error::format(
            path,
            format!("payload is {} bytes, header implies {expected}", payload.len()),
        ));
    }
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels: payload.to_vec(),
    })
}

pub fn parse_idx_labels(bytes: &[u8], path: &Path) -> Result<Vec<u8>> {
    let h = header(bytes, 2, path)?;
    if h[0] != LABEL_MAGIC {
        return Err(Error::format(
            path,
            format!("magic {:#010x}, expected {LABEL_MAGIC:#010x}", h[0]),
        ));
    }
    let payload = &bytes[8..];
    if payload.len() != h[1] as usize {
        return Err(Error::format(
            path,
            format!("{} label bytes, header says {}", payload.len(), h[1]),
        ));
    }
    if let Some(bad) = payload.iter().find(|&&b| b > MAX_LABEL) {
        return Err(Error::format(path, format!("label byte {bad} exceeds {MAX_LABEL}")));
    }
    Ok(payload.to_vec())
}

pub fn load_idx_images(path: impl AsRef<Path>) -> Result<IdxImages> {
    let path = path.as_ref();
    parse_idx_images(&read_maybe_gz(path)?, path)
}

pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    parse_idx_labels(&read_maybe_gz(path)?, path)
}

pub fn encode_idx_images(images: &IdxImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    for field in [
        IMAGE_MAGIC,
        images.count as u32,
        images.rows as u32,
        images.cols as u32,
    ] {
        out.extend_from_slice(&field.to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Uncompressed output.
pub fn write_idx_images(path: impl AsRef<Path>, images: &IdxImages) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_idx_images(images)).map_err(|e| Error::io(path, e))
}

pub fn write_idx_labels(path: impl AsRef<Path>, labels: &[u8]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_idx_labels(labels)).map_err(|e| Error::io(path, e))
}

/// Join images with labels into a 10-class dataset of raw byte values
/// (not yet normalized). Instance id = position in the files.
pub fn pair_idx(images: &IdxImages, labels: &[u8]) -> Result<Dataset> {
    if images.count != labels.len() {
        return Err(Error::Pairing(format!(
            "{} images but {} labels",
            images.count,
            labels.len()
        )));
    }
    Dataset::new(
        images.rows * images.cols,
        MAX_LABEL as usize + 1,
        (0..images.count as u32).collect(),
        images.pixels.iter().map(|&b| f64::from(b)).collect(),
        labels.iter().map(|&b| u32::from(b)).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture_images() -> Vec<u8> {
        let mut b = vec![0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2];
        b.extend_from_slice(&[0, 1, 2, 3, 252, 253, 254, 255]);
        b
    }

    #[test]
    fn parses_image_fixture() {
        let imgs = parse_idx_images(&fixture_images(), Path::new("fx")).unwrap();
        assert_eq!((imgs.count, imgs.rows, imgs.cols), (2, 2, 2));
        assert_eq!(imgs.image(1), &[252, 253, 254, 255]);
    }

    #[test]
    fn wrong_magic_is_a_format_error() {
        let mut b = fixture_images();
        b[3] = 0x01;
        assert!(matches!(
            parse_idx_images(&b, Path::new("fx")),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn truncated_payload_is_a_format_error() {
        let b = fixture_images();
        assert!(parse_idx_images(&b[..b.len() - 1], Path::new("fx")).is_err());
        assert!(parse_idx_images(&b[..10], Path::new("fx")).is_err());
    }

    #[test]
    fn parses_labels() {
        let b = encode_idx_labels(&[3, 1, 4]);
        assert_eq!(parse_idx_labels(&b, Path::new("fx")).unwrap(), vec![3, 1, 4]);
        let bad = encode_idx_labels(&[3, 10]);
        assert!(parse_idx_labels(&bad, Path::new("fx")).is_err());
        let mut short = encode_idx_labels(&[3, 1, 4]);
        short.pop();
        assert!(parse_idx_labels(&short, Path::new("fx")).is_err());
    }

    #[test]
    fn pairing_count_mismatch() {
        let imgs = parse_idx_images(&fixture_images(), Path::new("fx")).unwrap();
        assert!(matches!(pair_idx(&imgs, &[1, 2, 3]), Err(Error::Pairing(_))));
        let d = pair_idx(&imgs, &[1, 2]).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.features(1), &[252.0, 253.0, 254.0, 255.0]);
        assert_eq!(d.ids(), &[0, 1]);
    }
}
