//! CIFAR-10 binary batches: 1 label byte followed by 3072 pixel bytes
//! (1024 red, 1024 green, 1024 blue, each 32×32 row-major).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::{Dataset, ImageTensor};

pub const CIFAR_RECORD_BYTES: usize = 1 + 3 * 32 * 32;

pub const CIFAR10_CLASSES: [&str; 10] = [
    "airplane",
    "automobile",
    "bird",
    "cat",
    "deer",
    "dog",
    "frog",
    "horse",
    "ship",
    "truck",
];

/// Loads one batch file, or every `*.bin` file of a directory in name order.
///
/// Ids are `<file name>#<record index>`; labels are CIFAR-10 class names.
pub fn load_cifar_binary(path: &Path) -> Result<Dataset> {
    let files = if path.is_dir() {
        let mut files: Vec<_> = fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "bin"))
            .collect();
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };
    let mut images = Vec::new();
    let mut labels = BTreeMap::new();
    for file in &files {
        let bytes = fs::read(file)?;
        let name = file
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        decode_records(&bytes, &name, &mut images, &mut labels)?;
    }
    if images.is_empty() {
        return Err(Error::format(0, format!("no CIFAR records in {}", path.display())));
    }
    Dataset::new(images, labels, format!("cifar:{}", path.display()))
}

fn decode_records(
    bytes: &[u8],
    file: &str,
    images: &mut Vec<ImageTensor>,
    labels: &mut BTreeMap<String, String>,
) -> Result<()> {
    let whole = bytes.len() / CIFAR_RECORD_BYTES * CIFAR_RECORD_BYTES;
    if whole != bytes.len() {
        return Err(Error::format(
            whole as u64,
            format!(
                "{file}: truncated record ({} of {CIFAR_RECORD_BYTES} bytes)",
                bytes.len() - whole
            ),
        ));
    }
    for (i, record) in bytes.chunks_exact(CIFAR_RECORD_BYTES).enumerate() {
        let offset = (i * CIFAR_RECORD_BYTES) as u64;
        let label = *CIFAR10_CLASSES
            .get(record[0] as usize)
            .ok_or_else(|| Error::format(offset, format!("{file}: label byte {}", record[0])))?;
        let id = format!("{file}#{i}");
        let pixels = record[1..].iter().map(|&b| f64::from(b) / 255.0).collect();
        labels.insert(id.clone(), label.to_owned());
        images.push(ImageTensor::from_parts_unchecked(id, 3, 32, 32, pixels));
    }
    Ok(())
}

/// Encodes a 3×32×32 image as one record (pixels rounded to 8 bits).
pub fn encode_cifar_record(label: u8, image: &ImageTensor) -> Result<Vec<u8>> {
    if (image.channels(), image.height(), image.width()) != (3, 32, 32) {
        return Err(Error::Shape(format!(
            "CIFAR records are 3×32×32, got {:?}",
            image.shape()
        )));
    }
    let mut out = Vec::with_capacity(CIFAR_RECORD_BYTES);
    out.push(label);
    out.extend(image.pixels().iter().map(|&p| (p * 255.0).round() as u8));
    Ok(out)
}
