use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use serde::{Deserialize, Serialize};

use super::{blank_card, Dataset, DatasetError, Recipe, Task};
use crate::encoding::{DataPoint, Input, Label};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

/// An IDX rank-3 `u8` tensor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxImages {
    pub n: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

impl IdxImages {
    pub fn image(&self, i: usize) -> &[u8] {
        let sz = self.rows * self.cols;
        &self.pixels[i * sz..(i + 1) * sz]
    }

    /// Uncompressed IDX encoding.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.pixels.len());
        for v in [IMAGES_MAGIC, self.n as u32, self.rows as u32, self.cols as u32] {
            out.extend_from_slice(&v.to_be_bytes());
        }
        out.extend_from_slice(&self.pixels);
        out
    }
}

/// Reads a file, transparently inflating gzip.
fn read_maybe_gz(path: &Path) -> Result<Vec<u8>, DatasetError> {
    let raw = fs::read(path).map_err(|e| DatasetError::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..]).read_to_end(&mut out).map_err(|e| DatasetError::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], at: usize) -> Result<u32, DatasetError> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| DatasetError::Idx("truncated header".into()))
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages, DatasetError> {
    let magic = be_u32(bytes, 0)?;
    if magic != IMAGES_MAGIC {
        return Err(DatasetError::Idx(format!("image magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}")));
    }
    let (n, rows, cols) = (be_u32(bytes, 4)? as usize, be_u32(bytes, 8)? as usize, be_u32(bytes, 12)? as usize);
    let need = n * rows * cols;
    let payload = &bytes[16..];
    if payload.len() != need {
        return Err(DatasetError::Idx(format!("{n}x{rows}x{cols} needs {need} bytes, found {}", payload.len())));
    }
    Ok(IdxImages { n, rows, cols, pixels: payload.to_vec() })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>, DatasetError> {
    let magic = be_u32(bytes, 0)?;
    if magic != LABELS_MAGIC {
        return Err(DatasetError::Idx(format!("label magic {magic:#010x}, expected {LABELS_MAGIC:#010x}")));
    }
    let n = be_u32(bytes, 4)? as usize;
    let payload = &bytes[8..];
    if payload.len() != n {
        return Err(DatasetError::Idx(format!("{n} labels declared, {} present", payload.len())));
    }
    Ok(payload.to_vec())
}

pub fn read_idx_images(path: &Path) -> Result<IdxImages, DatasetError> {
    parse_idx_images(&read_maybe_gz(path)?)
}

pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>, DatasetError> {
    parse_idx_labels(&read_maybe_gz(path)?)
}

/// Bilinear resampling with pixel-centre alignment and edge clamping.
pub fn bilinear_resize(src: &[f64], h: usize, w: usize, oh: usize, ow: usize) -> Vec<f64> {
    let coord = |o: usize, n_out: usize, n_in: usize| {
        let s = ((o as f64 + 0.5) * n_in as f64 / n_out as f64 - 0.5).clamp(0.0, (n_in - 1) as f64);
        let i0 = s.floor() as usize;
        (i0, (i0 + 1).min(n_in - 1), s - i0 as f64)
    };
    let mut out = Vec::with_capacity(oh * ow);
    for y in 0..oh {
        let (y0, y1, fy) = coord(y, oh, h);
        for x in 0..ow {
            let (x0, x1, fx) = coord(x, ow, w);
            let top = src[y0 * w + x0] * (1.0 - fx) + src[y0 * w + x1] * fx;
            let bot = src[y1 * w + x0] * (1.0 - fx) + src[y1 * w + x1] * fx;
            out.push(top * (1.0 - fy) + bot * fy);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MnistOptions {
    /// Digits kept; digit `classes[k]` becomes class `k`.
    pub classes: Vec<u8>,
    /// Output side length after resizing.
    #[serde(default = "default_side")]
    pub side: usize,
}

fn default_side() -> usize {
    16
}

/// Loads, filters to `options.classes` and resizes every image to
/// `side × side` features in `[0, 1]`.
pub fn load_mnist_idx(images: &Path, labels: &Path, options: &MnistOptions) -> Result<Dataset, DatasetError> {
    let imgs = read_idx_images(images)?;
    let labs = read_idx_labels(labels)?;
    if imgs.n != labs.len() {
        return Err(DatasetError::Idx(format!("{} images but {} labels", imgs.n, labs.len())));
    }
    if options.classes.len() < 2 || options.side == 0 {
        return Err(DatasetError::Invalid("need at least two classes and a positive side".into()));
    }
    let samples = (0..imgs.n)
        .filter_map(|i| {
            let k = options.classes.iter().position(|&c| c == labs[i])?;
            let px: Vec<f64> = imgs.image(i).iter().map(|&p| p as f64 / 255.0).collect();
            let x = bilinear_resize(&px, imgs.rows, imgs.cols, options.side, options.side);
            Some(DataPoint { input: Input::Features(x), label: Label::Class(k) })
        })
        .collect();
    let task = if options.classes.len() == 2 { Task::Binary } else { Task::Multiclass(options.classes.len()) };
    let card = blank_card(
        "mnist",
        &images.display().to_string(),
        &format!(
            "digits {:?}; pixels / 255; {}x{} bilinear resize to {s}x{s}",
            options.classes,
            imgs.rows,
            imgs.cols,
            s = options.side
        ),
        Recipe::Mnist { images: PathBuf::from(images), labels: PathBuf::from(labels), options: options.clone() },
    );
    Ok(Dataset::new(samples, task, card))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn root() -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist")
    }

    #[test]
    fn header_errors() {
        assert!(matches!(parse_idx_images(&[0, 0, 8, 1, 0, 0, 0, 0]), Err(DatasetError::Idx(_))));
        let mut truncated = IdxImages { n: 2, rows: 2, cols: 2, pixels: vec![1; 8] }.to_bytes();
        truncated.pop();
        assert!(parse_idx_images(&truncated).is_err());
        assert!(parse_idx_labels(&[0, 0, 8, 1, 0, 0, 0, 2, 1]).is_err());
        assert_eq!(parse_idx_labels(&[0, 0, 8, 1, 0, 0, 0, 2, 1, 7]).unwrap(), vec![1, 7]);
    }

    #[test]
    fn resize_examples() {
        assert_eq!(bilinear_resize(&[0.0; 784], 28, 28, 16, 16), vec![0.0; 256]);
        let ones = bilinear_resize(&[1.0; 784], 28, 28, 16, 16);
        assert!(ones.iter().all(|v| (v - 1.0).abs() < 1e-15));
        // same size is the identity
        let ramp: Vec<f64> = (0..12).map(|v| v as f64).collect();
        assert_eq!(bilinear_resize(&ramp, 3, 4, 3, 4), ramp);
        // 2x2 -> 1x1 averages
        assert_eq!(bilinear_resize(&[0.0, 1.0, 2.0, 3.0], 2, 2, 1, 1), vec![1.5]);
    }

    #[test]
    fn image_payload_round_trips() {
        let path = root().join("t10k-images-idx3-ubyte.gz");
        let imgs = read_idx_images(&path).unwrap();
        assert_eq!((imgs.n, imgs.rows, imgs.cols), (10_000, 28, 28));
        assert_eq!(imgs.to_bytes(), read_maybe_gz(&path).unwrap());
    }

    #[test]
    fn class_counts_and_corner() {
        let opts = MnistOptions { classes: vec![0, 1], side: 16 };
        let test = load_mnist_idx(&root().join("t10k-images-idx3-ubyte.gz"), &root().join("t10k-labels-idx1-ubyte.gz"), &opts)
            .unwrap();
        assert_eq!(test.len(), 2115);
        assert_eq!(test.n_features(), 256);
        // the top-left resized pixel only sees the blank image border
        assert!(test.samples.iter().all(|s| matches!(&s.input, Input::Features(x) if x[0] == 0.0)));
    }
}
