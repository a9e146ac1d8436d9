//! IDX ingestion (the MNIST container format): big-endian dimensions,
//! unsigned-byte pixels scaled to [0, 1], magic 0x00000803 for images and
//! 0x00000801 for labels.

use std::fs;
use std::path::Path;

use splitz_core::data::Dataset;
use splitz_core::matrix::Matrix;

use crate::error::CliError;

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn read_u32_be(bytes: &[u8], offset: usize) -> Result<u32, String> {
    let end = offset + 4;
    if end > bytes.len() {
        return Err("truncated file".into());
    }
    Ok(u32::from_be_bytes([
        bytes[offset],
        bytes[offset + 1],
        bytes[offset + 2],
        bytes[offset + 3],
    ]))
}

pub(crate) fn parse_idx_images(bytes: &[u8]) -> Result<(usize, usize, usize, Vec<f64>), String> {
    let magic = read_u32_be(bytes, 0)?;
    if magic != IMAGES_MAGIC {
        return Err(format!("bad image magic 0x{magic:08x}"));
    }
    let count = read_u32_be(bytes, 4)? as usize;
    let rows = read_u32_be(bytes, 8)? as usize;
    let cols = read_u32_be(bytes, 12)? as usize;
    let expected = 16 + count * rows * cols;
    if bytes.len() < expected {
        return Err(format!(
            "truncated image data: {} bytes, expected {expected}",
            bytes.len()
        ));
    }
    let pixels = bytes[16..expected]
        .iter()
        .map(|&b| b as f64 / 255.0)
        .collect();
    Ok((count, rows, cols, pixels))
}

pub(crate) fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<usize>, String> {
    let magic = read_u32_be(bytes, 0)?;
    if magic != LABELS_MAGIC {
        return Err(format!("bad label magic 0x{magic:08x}"));
    }
    let count = read_u32_be(bytes, 4)? as usize;
    let expected = 8 + count;
    if bytes.len() < expected {
        return Err(format!(
            "truncated label data: {} bytes, expected {expected}",
            bytes.len()
        ));
    }
    Ok(bytes[8..expected].iter().map(|&b| b as usize).collect())
}

/// Load an image/label IDX pair into a dataset with pixels in [0, 1].
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset, CliError> {
    let image_bytes = fs::read(images_path)
        .map_err(|e| CliError::io(images_path.display().to_string(), e))?;
    let (count, rows, cols, pixels) = parse_idx_images(&image_bytes)
        .map_err(|m| CliError::format(images_path.display().to_string(), m))?;
    let label_bytes = fs::read(labels_path)
        .map_err(|e| CliError::io(labels_path.display().to_string(), e))?;
    let labels = parse_idx_labels(&label_bytes)
        .map_err(|m| CliError::format(labels_path.display().to_string(), m))?;
    if labels.len() != count {
        return Err(CliError::format(
            labels_path.display().to_string(),
            format!("{} labels for {count} images", labels.len()),
        ));
    }
    let num_classes = labels.iter().max().copied().unwrap_or(0) + 1;
    let features = Matrix::new(count, rows * cols, pixels)
        .map_err(|e| CliError::format(images_path.display().to_string(), e.to_string()))?;
    Ok(Dataset::new(features, labels, num_classes.max(2))?)
}
