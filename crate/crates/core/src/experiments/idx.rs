//! IDX containers: big-endian `u32` magic, `u32` dimensions, then `u8` data.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{BigEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::network::{Dataset, Targets};
use crate::numerics::Matrix;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(io_err(path))
}

fn read_header(r: &mut impl Read, path: &Path, magic: u32, dims: usize) -> Result<Vec<usize>> {
    let found = r.read_u32::<BigEndian>().map_err(io_err(path))?;
    if found != magic {
        return Err(format_err(
            path,
            format!("magic 0x{found:08x}, expected 0x{magic:08x}"),
        ));
    }
    (0..dims)
        .map(|_| {
            r.read_u32::<BigEndian>()
                .map(|v| v as usize)
                .map_err(io_err(path))
        })
        .collect()
}

/// Images as rows of `rows·cols` pixels scaled to `[0, 1]`.
pub fn read_idx_images(path: &Path, limit: Option<usize>) -> Result<Matrix> {
    let mut r = open(path)?;
    let dims = read_header(&mut r, path, IMAGES_MAGIC, 3)?;
    let (count, d) = (dims[0], dims[1] * dims[2]);
    if count == 0 || d == 0 {
        return Err(format_err(path, "empty image container"));
    }
    let take = limit.map_or(count, |l| l.min(count));
    let mut raw = vec![0u8; take * d];
    r.read_exact(&mut raw).map_err(io_err(path))?;
    let pixels = raw.into_iter().map(|b| b as f64 / 255.0).collect();
    Matrix::new(take, d, pixels)
}

pub fn read_idx_labels(path: &Path, limit: Option<usize>) -> Result<Vec<u32>> {
    let mut r = open(path)?;
    let count = read_header(&mut r, path, LABELS_MAGIC, 1)?[0];
    let take = limit.map_or(count, |l| l.min(count));
    let mut raw = vec![0u8; take];
    r.read_exact(&mut raw).map_err(io_err(path))?;
    Ok(raw.into_iter().map(u32::from).collect())
}

fn header_count(path: &Path, magic: u32) -> Result<usize> {
    let mut r = open(path)?;
    Ok(read_header(&mut r, path, magic, 1)?[0])
}

/// Loads an image/label pair as a classification dataset with
/// `max(label)+1` classes (at least 10, the digit count).
pub fn load_idx(images: &Path, labels: &Path) -> Result<Dataset> {
    load_idx_subset(images, labels, None)
}

/// Like [`load_idx`], keeping only the first `limit` examples.
pub fn load_idx_subset(images: &Path, labels: &Path, limit: Option<usize>) -> Result<Dataset> {
    let (ni, nl) = (
        header_count(images, IMAGES_MAGIC)?,
        header_count(labels, LABELS_MAGIC)?,
    );
    if ni != nl {
        return Err(format_err(
            labels,
            format!("{nl} labels for {ni} images in {}", images.display()),
        ));
    }
    let x = read_idx_images(images, limit)?;
    let y = read_idx_labels(labels, limit)?;
    let classes = y.iter().copied().max().map_or(10, |m| (m as usize + 1).max(10));
    Dataset::new(x, Targets::Classes { labels: y, classes })
}

/// Writes an IDX3 image file from `[0,1]` pixels (rounded to `u8`).
pub fn write_idx_images(path: &Path, images: &Matrix, rows: usize, cols: usize) -> Result<()> {
    if rows * cols != images.cols() {
        return Err(Error::invalid(format!(
            "{rows}x{cols} images need {} columns, got {}",
            rows * cols,
            images.cols()
        )));
    }
    let write = || -> io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_u32::<BigEndian>(IMAGES_MAGIC)?;
        for v in [images.rows(), rows, cols] {
            w.write_u32::<BigEndian>(v as u32)?;
        }
        let bytes: Vec<u8> = images
            .as_slice()
            .iter()
            .map(|&p| (p.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        w.write_all(&bytes)?;
        w.flush()
    };
    write().map_err(io_err(path))
}

pub fn write_idx_labels(path: &Path, labels: &[u32]) -> Result<()> {
    if let Some(bad) = labels.iter().find(|&&l| l > 255) {
        return Err(Error::invalid(format!("label {bad} does not fit in a byte")));
    }
    let write = || -> io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_u32::<BigEndian>(LABELS_MAGIC)?;
        w.write_u32::<BigEndian>(labels.len() as u32)?;
        w.write_all(&labels.iter().map(|&l| l as u8).collect::<Vec<_>>())?;
        w.flush()
    };
    write().map_err(io_err(path))
}
