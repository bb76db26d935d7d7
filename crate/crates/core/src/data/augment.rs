use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seed;

use super::ImageTensor;

/// Axis-aligned rectangle in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EraseRect {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
}

/// The random decisions behind one call of [`augment_for_regression`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentPlan {
    pub flip: bool,
    pub erase: Option<EraseRect>,
    pub noise_seed: u64,
}

const ERASE_AREA: (f64, f64) = (0.02, 0.20);
const ERASE_ASPECT: (f64, f64) = (0.3, 1.0 / 0.3);

/// Horizontal flip with probability ½, then with probability ½ one random
/// rectangle covering nominally 2–20 % of the image is replaced by uniform
/// noise. Rectangles are clamped to at least one pixel and to the image.
pub fn plan_augmentation(height: usize, width: usize, seed_value: u64) -> AugmentPlan {
    let mut rng = seed::rng(seed_value);
    let flip = rng.gen::<f64>() < 0.5;
    let erase_draw = rng.gen::<f64>() < 0.5;
    let erase = erase_draw.then(|| {
        let area = (height * width) as f64 * rng.gen_range(ERASE_AREA.0..ERASE_AREA.1);
        let log_aspect = rng.gen_range(ERASE_ASPECT.0.ln()..ERASE_ASPECT.1.ln());
        let aspect = log_aspect.exp();
        let eh = ((area * aspect).sqrt().round() as usize).clamp(1, height);
        let ew = ((area / aspect).sqrt().round() as usize).clamp(1, width);
        EraseRect {
            top: rng.gen_range(0..=height - eh),
            left: rng.gen_range(0..=width - ew),
            height: eh,
            width: ew,
        }
    });
    AugmentPlan {
        flip,
        erase,
        noise_seed: rng.gen(),
    }
}

/// Mirrors every row.
pub fn hflip(image: &ImageTensor) -> ImageTensor {
    let w = image.width();
    let pixels = image
        .pixels()
        .chunks_exact(w)
        .flat_map(|row| row.iter().rev().copied())
        .collect();
    ImageTensor::from_parts_unchecked(
        image.id().to_owned(),
        image.channels(),
        image.height(),
        w,
        pixels,
    )
}

/// Applies the augmentation plan derived from `seed_value`.
pub fn augment_for_regression(image: &ImageTensor, seed_value: u64) -> ImageTensor {
    let plan = plan_augmentation(image.height(), image.width(), seed_value);
    apply(image, &plan)
}

fn apply(image: &ImageTensor, plan: &AugmentPlan) -> ImageTensor {
    let mut out = if plan.flip { hflip(image) } else { image.clone() };
    if let Some(rect) = plan.erase {
        let mut rng = seed::rng(plan.noise_seed);
        let (h, w) = (image.height(), image.width());
        for c in 0..image.channels() {
            for y in rect.top..rect.top + rect.height {
                for x in rect.left..rect.left + rect.width {
                    out.pixels[c * h * w + y * w + x] = rng.gen::<f64>();
                }
            }
        }
    }
    out
}
