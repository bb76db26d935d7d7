use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::ImageTensor;

/// Counter-clockwise rotation by a multiple of 90°.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rotation {
    R0,
    R90,
    R180,
    R270,
}

impl Rotation {
    pub const ALL: [Rotation; 4] = [Rotation::R0, Rotation::R90, Rotation::R180, Rotation::R270];

    pub fn index(self) -> usize {
        match self {
            Rotation::R0 => 0,
            Rotation::R90 => 1,
            Rotation::R180 => 2,
            Rotation::R270 => 3,
        }
    }

    pub fn degrees(self) -> u32 {
        90 * self.index() as u32
    }
}

/// Lossless pixel permutation. 90° and 270° need a square image.
pub fn rotate(image: &ImageTensor, rotation: Rotation) -> Result<ImageTensor> {
    let (h, w) = (image.height(), image.width());
    if matches!(rotation, Rotation::R90 | Rotation::R270) && h != w {
        return Err(Error::Shape(format!(
            "{}° rotation of non-square {h}×{w} image {}",
            rotation.degrees(),
            image.id()
        )));
    }
    if rotation == Rotation::R0 {
        return Ok(image.clone());
    }
    let mut pixels = Vec::with_capacity(image.pixels().len());
    for c in 0..image.channels() {
        let plane = image.plane(c);
        for i in 0..h {
            for j in 0..w {
                let src = match rotation {
                    Rotation::R0 => i * w + j,
                    Rotation::R90 => j * w + (w - 1 - i),
                    Rotation::R180 => (h - 1 - i) * w + (w - 1 - j),
                    Rotation::R270 => (h - 1 - j) * w + i,
                };
                pixels.push(plane[src]);
            }
        }
    }
    Ok(ImageTensor::from_parts_unchecked(
        image.id().to_owned(),
        image.channels(),
        h,
        w,
        pixels,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use rand::Rng;

    fn random_image(rng: &mut impl Rng, c: usize, h: usize, w: usize) -> ImageTensor {
        let pixels = (0..c * h * w).map(|_| rng.gen::<f64>()).collect();
        ImageTensor::new("r", c, h, w, pixels).unwrap()
    }

    #[test]
    fn quarter_turn_is_counter_clockwise() {
        let img = ImageTensor::new("q", 1, 2, 2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let r = rotate(&img, Rotation::R90).unwrap();
        assert_eq!(r.pixels(), &[0.2, 0.4, 0.1, 0.3]);
    }

    #[test]
    fn half_turn_is_involution_on_any_shape() {
        let mut rng = seed::rng(4);
        let img = random_image(&mut rng, 3, 5, 7);
        let twice = rotate(&rotate(&img, Rotation::R180).unwrap(), Rotation::R180).unwrap();
        assert_eq!(twice, img);
        assert_eq!(rotate(&img, Rotation::R0).unwrap(), img);
    }

    #[test]
    fn four_quarter_turns_is_identity() {
        let mut rng = seed::rng(5);
        let img = random_image(&mut rng, 2, 8, 8);
        let mut r = img.clone();
        for _ in 0..4 {
            r = rotate(&r, Rotation::R90).unwrap();
        }
        assert_eq!(r, img);
        let back = rotate(&rotate(&img, Rotation::R90).unwrap(), Rotation::R270).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn non_square_quarter_turn_fails() {
        let img = ImageTensor::new("n", 1, 2, 3, vec![0.0; 6]).unwrap();
        assert!(matches!(rotate(&img, Rotation::R90), Err(Error::Shape(_))));
        assert!(matches!(rotate(&img, Rotation::R270), Err(Error::Shape(_))));
    }

    #[test]
    fn rotation_preserves_pixel_multiset() {
        let mut rng = seed::rng(6);
        let img = random_image(&mut rng, 3, 6, 6);
        let mut sorted = img.pixels().to_vec();
        sorted.sort_by(f64::total_cmp);
        for r in Rotation::ALL {
            let mut got = rotate(&img, r).unwrap().pixels().to_vec();
            got.sort_by(f64::total_cmp);
            assert_eq!(got, sorted);
        }
    }
}
