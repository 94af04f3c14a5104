//! Raster containers shared by every module, plus binary PGM (P5) I/O and the
//! seed encoding used for label maps on disk.
//!
//! All grids are row-major with `idx = row * cols + col`, coordinates 0-based.

use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Pixel value written for background seeds in seed-encoded rasters.
pub const SEED_BACKGROUND: u16 = 128;
/// Pixel value written for foreground seeds in seed-encoded rasters.
pub const SEED_FOREGROUND: u16 = 255;
/// Pixel value written for unlabelled pixels.
pub const SEED_UNLABELLED: u16 = 0;

fn check_dims(rows: usize, cols: usize, len: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidDimensions(format!(
            "{rows}x{cols} grid must have at least one row and one column"
        )));
    }
    if rows.checked_mul(cols) != Some(len) {
        return Err(Error::InvalidDimensions(format!(
            "{rows}x{cols} grid expects {} values, got {len}",
            rows.saturating_mul(cols)
        )));
    }
    Ok(())
}

/// The fixed part of a P5 stream, readable without touching pixel data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PgmHeader {
    pub rows: usize,
    pub cols: usize,
    pub maxval: u16,
    /// Byte offset of the first sample.
    pub data_offset: usize,
}

impl PgmHeader {
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let mut reader = HeaderReader { bytes, pos: 0 };
        if bytes.len() < 2 || &bytes[..2] != b"P5" {
            return Err(Error::format(0, "missing P5 magic number"));
        }
        reader.pos = 2;
        let (cols, _) = reader.token("width")?;
        let (rows, _) = reader.token("height")?;
        let (maxval, maxval_offset) = reader.token("maxval")?;
        if maxval == 0 || maxval > 65535 {
            return Err(Error::format(
                maxval_offset,
                format!("maxval {maxval} outside 1..=65535"),
            ));
        }
        if cols == 0 || rows == 0 {
            return Err(Error::format(
                maxval_offset,
                format!("zero-sized image {cols}x{rows}"),
            ));
        }
        match bytes.get(reader.pos) {
            Some(b) if b.is_ascii_whitespace() => reader.pos += 1,
            Some(_) => {
                return Err(Error::format(
                    reader.pos,
                    "expected single whitespace after maxval",
                ))
            }
            None => return Err(Error::format(reader.pos, "unexpected end of pixel data")),
        }
        Ok(Self {
            rows,
            cols,
            maxval: maxval as u16,
            data_offset: reader.pos,
        })
    }
}

/// Gray-scale image with non-negative integer intensities.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    rows: usize,
    cols: usize,
    max_representable: u16,
    pixels: Vec<u16>,
}

impl GrayImage {
    pub fn new(rows: usize, cols: usize, max_representable: u16, pixels: Vec<u16>) -> Result<Self> {
        check_dims(rows, cols, pixels.len())?;
        if max_representable == 0 {
            return Err(Error::InvalidParameter(
                "max_representable must be at least 1".into(),
            ));
        }
        if let Some(pos) = pixels.iter().position(|&p| p > max_representable) {
            return Err(Error::InvalidParameter(format!(
                "pixel ({},{}) = {} exceeds max_representable {}",
                pos / cols,
                pos % cols,
                pixels[pos],
                max_representable
            )));
        }
        Ok(Self {
            rows,
            cols,
            max_representable,
            pixels,
        })
    }

    /// 8-bit image (`max_representable = 255`).
    pub fn from_u8(rows: usize, cols: usize, pixels: &[u8]) -> Result<Self> {
        Self::new(rows, cols, 255, pixels.iter().map(|&p| u16::from(p)).collect())
    }

    pub fn filled(rows: usize, cols: usize, max_representable: u16, value: u16) -> Result<Self> {
        Self::new(rows, cols, max_representable, vec![value; rows.saturating_mul(cols)])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn max_representable(&self) -> u16 {
        self.max_representable
    }

    pub fn pixels(&self) -> &[u16] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.pixels[row * self.cols + col]
    }

    /// Largest intensity actually present in the image.
    pub fn max_value(&self) -> u16 {
        self.pixels.iter().copied().max().unwrap_or(0)
    }

    /// Decode a binary PGM (P5) byte stream.
    pub fn from_pgm_bytes(bytes: &[u8]) -> Result<Self> {
        let PgmHeader { rows, cols, maxval, data_offset: start } = PgmHeader::parse(bytes)?;
        let count = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::format(0, "image dimensions overflow"))?;
        let sample_bytes = if maxval < 256 { 1 } else { 2 };
        let needed = count
            .checked_mul(sample_bytes)
            .ok_or_else(|| Error::format(start, "image dimensions overflow"))?;
        let body = &bytes[start..];
        if body.len() < needed {
            return Err(Error::format(
                start + body.len(),
                "unexpected end of pixel data",
            ));
        }
        let pixels: Vec<u16> = if sample_bytes == 1 {
            body[..needed].iter().map(|&b| u16::from(b)).collect()
        } else {
            body[..needed]
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]))
                .collect()
        };
        if let Some(pos) = pixels.iter().position(|&p| p > maxval) {
            return Err(Error::format(
                start + pos * sample_bytes,
                format!("sample {} exceeds maxval {maxval}", pixels[pos]),
            ));
        }
        Ok(Self {
            rows,
            cols,
            max_representable: maxval,
            pixels,
        })
    }

    /// Encode as binary PGM: `P5\n<cols> <rows>\n<maxval>\n` followed by raw samples.
    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        let header = format!("P5\n{} {}\n{}\n", self.cols, self.rows, self.max_representable);
        let wide = self.max_representable >= 256;
        let mut out = Vec::with_capacity(header.len() + self.pixels.len() * if wide { 2 } else { 1 });
        out.extend_from_slice(header.as_bytes());
        if wide {
            for &p in &self.pixels {
                out.extend_from_slice(&p.to_be_bytes());
            }
        } else {
            out.extend(self.pixels.iter().map(|&p| p as u8));
        }
        out
    }
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    /// Next decimal header field and the byte offset where it starts.
    fn token(&mut self, what: &str) -> Result<(usize, usize)> {
        let before = self.pos;
        self.skip_whitespace_and_comments();
        if self.pos == before {
            return Err(Error::format(
                self.pos,
                format!("expected whitespace before {what}"),
            ));
        }
        let start = self.pos;
        let mut value: usize = 0;
        while let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_digit() {
                break;
            }
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add(usize::from(b - b'0')))
                .ok_or_else(|| Error::format(start, format!("{what} overflows")))?;
            self.pos += 1;
        }
        if self.pos == start {
            return Err(match self.bytes.get(self.pos) {
                None => Error::format(self.pos, format!("unexpected end of header reading {what}")),
                Some(_) => Error::format(self.pos, format!("expected decimal {what}")),
            });
        }
        Ok((value, start))
    }
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let bytes = fs::read(path)?;
    GrayImage::from_pgm_bytes(&bytes)
}

pub fn save_pgm(image: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, image.to_pgm_bytes())?;
    Ok(())
}

/// Per-pixel label: background, unlabelled or foreground.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[repr(i8)]
pub enum Label {
    Background = -1,
    #[default]
    Unlabelled = 0,
    Foreground = 1,
}

impl Label {
    pub fn value(self) -> i8 {
        self as i8
    }

    pub fn from_value(v: i8) -> Option<Self> {
        match v {
            -1 => Some(Label::Background),
            0 => Some(Label::Unlabelled),
            1 => Some(Label::Foreground),
            _ => None,
        }
    }

    pub fn is_labelled(self) -> bool {
        self != Label::Unlabelled
    }

    fn encode(self) -> u16 {
        match self {
            Label::Background => SEED_BACKGROUND,
            Label::Unlabelled => SEED_UNLABELLED,
            Label::Foreground => SEED_FOREGROUND,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Grid over {−1, 0, +1}; used both for seeds and for segmentation output.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelMap {
    rows: usize,
    cols: usize,
    labels: Vec<Label>,
}

impl LabelMap {
    pub fn new(rows: usize, cols: usize, labels: Vec<Label>) -> Result<Self> {
        check_dims(rows, cols, labels.len())?;
        Ok(Self { rows, cols, labels })
    }

    pub fn unlabelled(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![Label::Unlabelled; rows.saturating_mul(cols)])
    }

    /// Build from raw −1/0/+1 values.
    pub fn from_values(rows: usize, cols: usize, values: &[i8]) -> Result<Self> {
        let labels = values
            .iter()
            .enumerate()
            .map(|(idx, &v)| {
                Label::from_value(v).ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "label {v} at ({},{}) not in {{-1,0,1}}",
                        idx / cols.max(1),
                        idx % cols.max(1)
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows, cols, labels)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn labels_mut(&mut self) -> &mut [Label] {
        &mut self.labels
    }

    pub fn values(&self) -> Vec<i8> {
        self.labels.iter().map(|l| l.value()).collect()
    }

    pub fn get(&self, row: usize, col: usize) -> Label {
        self.labels[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, label: Label) {
        self.labels[row * self.cols + col] = label;
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn has_seeds(&self) -> bool {
        self.labels.iter().any(|l| l.is_labelled())
    }

    /// Pixels carrying `label`, as a mask.
    pub fn mask_of(&self, label: Label) -> Mask {
        Mask {
            rows: self.rows,
            cols: self.cols,
            bits: self.labels.iter().map(|&l| l == label).collect(),
        }
    }

    pub fn foreground_mask(&self) -> Mask {
        self.mask_of(Label::Foreground)
    }
}

/// Seed-encode a label map: unlabelled → 0, background → 128, foreground → 255.
pub fn encode_labelmap(labels: &LabelMap) -> GrayImage {
    GrayImage {
        rows: labels.rows,
        cols: labels.cols,
        max_representable: 255,
        pixels: labels.labels.iter().map(|l| l.encode()).collect(),
    }
}

/// Inverse of [`encode_labelmap`]; any pixel outside {0, 128, 255} is rejected.
pub fn decode_labelmap(image: &GrayImage) -> Result<LabelMap> {
    let labels = image
        .pixels
        .iter()
        .enumerate()
        .map(|(idx, &p)| match p {
            SEED_UNLABELLED => Ok(Label::Unlabelled),
            SEED_BACKGROUND => Ok(Label::Background),
            SEED_FOREGROUND => Ok(Label::Foreground),
            value => Err(Error::InvalidSeedEncoding {
                row: idx / image.cols,
                col: idx % image.cols,
                value,
            }),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LabelMap {
        rows: image.rows,
        cols: image.cols,
        labels,
    })
}

/// Per-pixel confidences in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMap {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
}

impl WeightMap {
    pub fn new(rows: usize, cols: usize, weights: Vec<f64>) -> Result<Self> {
        check_dims(rows, cols, weights.len())?;
        if let Some(pos) = weights.iter().position(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::InvalidParameter(format!(
                "weight {} at index {pos} outside [0,1]",
                weights[pos]
            )));
        }
        Ok(Self { rows, cols, weights })
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, weights: Vec<f64>) -> Self {
        debug_assert_eq!(rows * cols, weights.len());
        Self { rows, cols, weights }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.cols + col]
    }
}

/// Binary raster (ground truth, segmentation output, seed regions).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(rows: usize, cols: usize, bits: Vec<bool>) -> Result<Self> {
        check_dims(rows, cols, bits.len())?;
        Ok(Self { rows, cols, bits })
    }

    pub fn empty(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![false; rows.saturating_mul(cols)])
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let mut bits = Vec::with_capacity(rows.saturating_mul(cols));
        for r in 0..rows {
            for c in 0..cols {
                bits.push(f(r, c));
            }
        }
        Self::new(rows, cols, bits)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.bits[row * self.cols + col] = value;
    }

    pub fn area(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty_mask(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn intersects(&self, other: &Mask) -> bool {
        self.bits.iter().zip(&other.bits).any(|(&a, &b)| a && b)
    }

    /// True when every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    pub fn iter_set(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let cols = self.cols;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(idx, _)| (idx / cols, idx % cols))
    }

    /// 0/255 raster, the on-disk form of ground-truth masks.
    pub fn to_image(&self) -> GrayImage {
        GrayImage {
            rows: self.rows,
            cols: self.cols,
            max_representable: 255,
            pixels: self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect(),
        }
    }

    /// Any non-zero pixel is considered set.
    pub fn from_image(image: &GrayImage) -> Self {
        Self {
            rows: image.rows,
            cols: image.cols,
            bits: image.pixels.iter().map(|&p| p != 0).collect(),
        }
    }
}

pub(crate) fn ensure_same_dims(left: (usize, usize), right: (usize, usize)) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::mismatch(left, right))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decodes_small_header() {
        let mut bytes = b"P5\n3 2\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3, 4, 5, 6]);
        let img = GrayImage::from_pgm_bytes(&bytes).unwrap();
        assert_eq!(img.dims(), (2, 3));
        assert_eq!(img.max_representable(), 255);
        assert_eq!(img.pixels(), &[1, 2, 3, 4, 5, 6]);
        assert_eq!(img.get(1, 0), 4);
    }

    #[test]
    fn decodes_sixteen_bit_big_endian() {
        let mut bytes = b"P5 2 1 65535\n".to_vec();
        bytes.extend_from_slice(&[0x01, 0x02, 0xff, 0xfe]);
        let img = GrayImage::from_pgm_bytes(&bytes).unwrap();
        assert_eq!(img.max_representable(), 65535);
        assert_eq!(img.pixels(), &[0x0102, 0xfffe]);
    }

    #[test]
    fn header_comments_are_skipped() {
        let mut bytes = b"P5\n# made by hand\n2 1\n# depth\n255\n".to_vec();
        bytes.extend_from_slice(&[9, 8]);
        let img = GrayImage::from_pgm_bytes(&bytes).unwrap();
        assert_eq!(img.pixels(), &[9, 8]);
    }

    #[test]
    fn truncated_body_reports_offset() {
        let mut bytes = b"P5\n3 2\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3]);
        let err = GrayImage::from_pgm_bytes(&bytes).unwrap_err();
        match err {
            Error::Format { offset, message } => {
                assert_eq!(offset, 14);
                assert_eq!(message, "unexpected end of pixel data");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_maxval_and_magic() {
        assert!(matches!(
            GrayImage::from_pgm_bytes(b"P5\n1 1\n0\n\0"),
            Err(Error::Format { offset: 7, .. })
        ));
        assert!(matches!(
            GrayImage::from_pgm_bytes(b"P5\n1 1\n65536\n\0\0"),
            Err(Error::Format { .. })
        ));
        assert!(matches!(
            GrayImage::from_pgm_bytes(b"P2\n1 1\n255\n0"),
            Err(Error::Format { offset: 0, .. })
        ));
        assert!(matches!(
            GrayImage::from_pgm_bytes(b"P5\n1 x\n255\n0"),
            Err(Error::Format { offset: 5, .. })
        ));
    }

    #[test]
    fn single_pixel_encoding_is_minimal() {
        let img = GrayImage::from_u8(1, 1, &[0]).unwrap();
        assert_eq!(img.to_pgm_bytes(), b"P5\n1 1\n255\n\0".to_vec());
    }

    #[test]
    fn save_to_unwritable_path_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let img = GrayImage::from_u8(1, 1, &[0]).unwrap();
        let err = save_pgm(&img, dir.path().join("missing").join("x.pgm")).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let img = GrayImage::new(2, 2, 1000, vec![0, 1, 999, 1000]).unwrap();
        save_pgm(&img, &path).unwrap();
        assert_eq!(load_pgm(&path).unwrap(), img);
    }

    #[test]
    fn seed_codec() {
        let zero = GrayImage::filled(2, 2, 255, 0).unwrap();
        let labels = decode_labelmap(&zero).unwrap();
        assert!(labels.labels().iter().all(|&l| l == Label::Unlabelled));

        let img = GrayImage::from_u8(1, 3, &[128, 255, 0]).unwrap();
        let labels = decode_labelmap(&img).unwrap();
        assert_eq!(labels.values(), vec![-1, 1, 0]);
        assert_eq!(encode_labelmap(&labels), img);

        let bad = GrayImage::from_u8(2, 2, &[0, 0, 0, 7]).unwrap();
        let err = decode_labelmap(&bad).unwrap_err();
        assert_eq!(err.to_string(), "invalid seed encoding at (1,1): pixel value 7");
    }

    #[test]
    fn construction_invariants() {
        assert!(GrayImage::new(0, 3, 255, vec![]).is_err());
        assert!(GrayImage::new(2, 2, 255, vec![0; 3]).is_err());
        assert!(GrayImage::new(1, 1, 10, vec![11]).is_err());
        assert!(LabelMap::from_values(1, 2, &[0, 2]).is_err());
        assert!(WeightMap::new(1, 1, vec![1.5]).is_err());
    }

    #[test]
    fn row_major_addressing() {
        let img = GrayImage::from_u8(2, 3, &[0, 1, 2, 3, 4, 5]).unwrap();
        let mask = Mask::from_fn(2, 3, |r, c| img.get(r, c) as usize == r * 3 + c).unwrap();
        assert_eq!(mask.area(), 6);
        let mut labels = LabelMap::unlabelled(2, 3).unwrap();
        labels.set(1, 2, Label::Foreground);
        assert_eq!(labels.labels()[5], Label::Foreground);
        assert_eq!(labels.foreground_mask().iter_set().collect::<Vec<_>>(), vec![(1, 2)]);
    }

    fn arb_image() -> impl Strategy<Value = GrayImage> {
        (1usize..12, 1usize..12, prop_oneof![Just(255u16), Just(65535u16), 1u16..5000])
            .prop_flat_map(|(r, c, maxv)| {
                proptest::collection::vec(0..=maxv, r * c)
                    .prop_map(move |px| GrayImage::new(r, c, maxv, px).unwrap())
            })
    }

    proptest! {
        #[test]
        fn pgm_round_trip(img in arb_image()) {
            let back = GrayImage::from_pgm_bytes(&img.to_pgm_bytes()).unwrap();
            prop_assert_eq!(back, img);
        }

        #[test]
        fn label_round_trip(r in 1usize..10, c in 1usize..10, seed in any::<u64>()) {
            let values: Vec<i8> = (0..r * c)
                .map(|i| ((seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64) >> 33) % 3) as i8 - 1)
                .collect();
            let labels = LabelMap::from_values(r, c, &values).unwrap();
            let encoded = encode_labelmap(&labels);
            prop_assert_eq!(&decode_labelmap(&encoded).unwrap(), &labels);
            prop_assert_eq!(encode_labelmap(&decode_labelmap(&encoded).unwrap()), encoded);
        }
    }
}
