//! IDX image files, two-class subsets, and synthetic samples.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{sample_ball, Dataset, Example};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

/// Grayscale images stored row-major, one byte per pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawImageSet {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
    pub labels: Vec<u8>,
}

impl RawImageSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let size = self.rows * self.cols;
        &self.pixels[i * size..(i + 1) * size]
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn u32(&mut self, what: &str) -> Result<u32> {
        let chunk = self.bytes.get(self.pos..self.pos + 4).ok_or_else(|| Error::Idx {
            offset: self.pos,
            message: format!("file ends inside the {what} field"),
        })?;
        self.pos += 4;
        Ok(u32::from_be_bytes(chunk.try_into().expect("four bytes")))
    }

    fn magic(&mut self, expected: u32) -> Result<()> {
        let at = self.pos;
        let got = self.u32("magic")?;
        if got != expected {
            return Err(Error::Idx { offset: at, message: format!("magic {got}, expected {expected}") });
        }
        Ok(())
    }

    fn body(&self, len: usize) -> Result<&[u8]> {
        let end = self.pos + len;
        if self.bytes.len() < end {
            return Err(Error::Idx {
                offset: self.bytes.len(),
                message: format!("truncated data: need {len} bytes from offset {}, file has {}", self.pos, self.bytes.len()),
            });
        }
        Ok(&self.bytes[self.pos..end])
    }
}

/// Parses an IDX image file (`0x00000803`, count, rows, cols, pixels).
pub fn parse_idx_images(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let mut r = Reader { bytes, pos: 0 };
    r.magic(IMAGE_MAGIC)?;
    let count = r.u32("image count")? as usize;
    let rows = r.u32("row count")? as usize;
    let cols = r.u32("column count")? as usize;
    let pixels = r.body(count * rows * cols)?.to_vec();
    Ok((rows, cols, pixels))
}

/// Parses an IDX label file (`0x00000801`, count, labels).
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let mut r = Reader { bytes, pos: 0 };
    r.magic(LABEL_MAGIC)?;
    let count = r.u32("label count")? as usize;
    Ok(r.body(count)?.to_vec())
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<RawImageSet> {
    let (rows, cols, pixels) = parse_idx_images(&read(images_path.as_ref())?)?;
    let labels = parse_idx_labels(&read(labels_path.as_ref())?)?;
    let images = pixels.len().checked_div(rows * cols).unwrap_or(0);
    if images != labels.len() {
        return Err(Error::Idx {
            offset: 4,
            message: format!("{images} images but {} labels", labels.len()),
        });
    }
    Ok(RawImageSet { rows, cols, pixels, labels })
}

pub fn encode_idx(set: &RawImageSet) -> (Vec<u8>, Vec<u8>) {
    let mut images = Vec::with_capacity(16 + set.pixels.len());
    for v in [IMAGE_MAGIC, set.len() as u32, set.rows as u32, set.cols as u32] {
        images.extend_from_slice(&v.to_be_bytes());
    }
    images.extend_from_slice(&set.pixels);
    let mut labels = Vec::with_capacity(8 + set.labels.len());
    for v in [LABEL_MAGIC, set.len() as u32] {
        labels.extend_from_slice(&v.to_be_bytes());
    }
    labels.extend_from_slice(&set.labels);
    (images, labels)
}

pub fn write_idx(set: &RawImageSet, images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<()> {
    let (images, labels) = encode_idx(set);
    for (path, bytes) in [(images_path.as_ref(), images), (labels_path.as_ref(), labels)] {
        fs::write(path, bytes).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    }
    Ok(())
}

/// The MNIST directory: `$MNIST_DIR`, else `data/mnist` at the workspace root.
pub fn mnist_dir() -> PathBuf {
    std::env::var_os("MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"))
}

/// Loads the `train` or `t10k` split from [`mnist_dir`].
pub fn load_mnist(split: &str) -> Result<RawImageSet> {
    let dir = mnist_dir();
    load_idx(dir.join(format!("{split}-images-idx3-ubyte")), dir.join(format!("{split}-labels-idx1-ubyte")))
}

/// Rows of `class_a` and `class_b`, relabelled 0 and 1, pixels mapped to
/// `[0, 1]`. With `scale`, features are further divided by the largest
/// feature norm so every `||x|| <= 1`.
pub fn binary_subset(raw: &RawImageSet, class_a: u8, class_b: u8, scale: bool) -> Result<Dataset> {
    if class_a == class_b {
        return Err(Error::contract("binary subset needs two distinct classes"));
    }
    let mut examples = Vec::new();
    for (i, &label) in raw.labels.iter().enumerate() {
        let y = match label {
            l if l == class_a => 0,
            l if l == class_b => 1,
            _ => continue,
        };
        examples.push(Example::classified(pixels(raw.image(i)), y));
    }
    for (class, y) in [(class_a, 0), (class_b, 1)] {
        if !examples.iter().any(|e| e.class() == Some(y)) {
            return Err(Error::contract(format!("class {class} has no examples")));
        }
    }
    if scale {
        let max = examples
            .iter()
            .map(|e| e.features.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        if max > 0.0 {
            for e in &mut examples {
                e.features.iter_mut().for_each(|v| *v /= max);
            }
        }
    }
    Dataset::new(examples)
}

/// The first `limit` rows with their digit labels, pixels mapped to `[0, 1]`.
pub fn multiclass(raw: &RawImageSet, limit: usize) -> Result<Dataset> {
    let n = limit.min(raw.len());
    Dataset::new((0..n).map(|i| Example::classified(pixels(raw.image(i)), raw.labels[i] as usize)).collect())
}

fn pixels(bytes: &[u8]) -> Vec<f64> {
    bytes.iter().map(|&p| p as f64 / 255.0).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SynthKind {
    /// Target points drawn uniformly from the ball of this radius.
    QuadraticTargets { radius: f64 },
    /// Two Gaussian blobs at `+-(margin/2) e_1` with isotropic `noise`.
    SeparableLogistic { margin: f64, noise: f64 },
}

/// Deterministic synthetic sample of `n` examples in dimension `d`.
pub fn synth_dataset(kind: SynthKind, n: usize, d: usize, seed: u64) -> Result<Dataset> {
    if n == 0 || d == 0 {
        return Err(Error::contract("synthetic data needs n >= 1 and d >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let examples = (0..n)
        .map(|_| match kind {
            SynthKind::QuadraticTargets { radius } => Example::target(sample_ball(&vec![0.0; d], radius, &mut rng)),
            SynthKind::SeparableLogistic { margin, noise } => {
                let y = usize::from(rng.random::<bool>());
                let mut x: Vec<f64> = (0..d)
                    .map(|_| noise * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
                    .collect();
                x[0] += if y == 1 { margin / 2.0 } else { -margin / 2.0 };
                Example::classified(x, y)
            }
        })
        .collect();
    Dataset::new(examples)
}
