//! Procedural datasets for tests, demos and sanity checks.

use rand::Rng;

use crate::error::Result;
use crate::seed;

use super::{Dataset, ImageTensor};

/// Top half bright, bottom half dark, with per-pixel jitter. Every rotation
/// lights a different side, so the rotation task is easy.
pub fn banded_image(id: impl Into<String>, channels: usize, size: usize, rng: &mut impl Rng) -> ImageTensor {
    let mut pixels = Vec::with_capacity(channels * size * size);
    for _ in 0..channels {
        for y in 0..size {
            for _ in 0..size {
                let v = if 2 * y < size {
                    rng.gen_range(0.75..=1.0)
                } else {
                    rng.gen_range(0.0..=0.25)
                };
                pixels.push(v);
            }
        }
    }
    ImageTensor::new(id, channels, size, size, pixels).expect("pixels in range")
}

/// Unstructured mid-grey noise.
pub fn noise_image(id: impl Into<String>, channels: usize, size: usize, rng: &mut impl Rng) -> ImageTensor {
    let pixels = (0..channels * size * size)
        .map(|_| rng.gen_range(0.35..=0.65))
        .collect();
    ImageTensor::new(id, channels, size, size, pixels).expect("pixels in range")
}

/// Pixels drawn independently from U[0,1].
pub fn uniform_image(id: impl Into<String>, channels: usize, height: usize, width: usize, rng: &mut impl Rng) -> ImageTensor {
    let pixels = (0..channels * height * width).map(|_| rng.gen::<f64>()).collect();
    ImageTensor::new(id, channels, height, width, pixels).expect("pixels in range")
}

/// A main dataset of banded images (`seen_count`) and a separate pool of
/// noise images (`unseen_count`) to draw never-seen images from.
pub fn separable_fixture(
    seen_count: usize,
    unseen_count: usize,
    channels: usize,
    size: usize,
    seed_value: u64,
) -> Result<(Dataset, Dataset)> {
    let mut rng = seed::stream(seed_value, "fixture-seen", 0);
    let seen = (0..seen_count)
        .map(|i| banded_image(format!("band{i:04}"), channels, size, &mut rng))
        .collect();
    let mut rng = seed::stream(seed_value, "fixture-unseen", 0);
    let unseen = (0..unseen_count)
        .map(|i| noise_image(format!("noise{i:04}"), channels, size, &mut rng))
        .collect();
    Ok((
        Dataset::unlabeled(seen, "synthetic:banded")?,
        Dataset::unlabeled(unseen, "synthetic:noise")?,
    ))
}

/// Mixed dataset: `banded_count` banded images followed by `noise_count`
/// noise images, labelled `banded` / `noise`.
pub fn mixed_fixture(
    banded_count: usize,
    noise_count: usize,
    channels: usize,
    size: usize,
    seed_value: u64,
) -> Result<Dataset> {
    let (seen, unseen) = separable_fixture(banded_count, noise_count, channels, size, seed_value)?;
    let mut labels = std::collections::BTreeMap::new();
    let mut images = Vec::new();
    for img in seen.images() {
        labels.insert(img.id().to_owned(), "banded".to_owned());
        images.push(img.clone());
    }
    for img in unseen.images() {
        labels.insert(img.id().to_owned(), "noise".to_owned());
        images.push(img.clone());
    }
    Dataset::new(images, labels, "synthetic:mixed")
}
