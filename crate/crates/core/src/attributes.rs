//! Per-image attributes: HSV means, global contrast factor, colorfulness and
//! grayscale entropy.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::ImageTensor;
use crate::error::{Error, Result};

pub const ATTRIBUTE_NAMES: [&str; 6] = ["hue", "saturation", "value", "contrast", "colorfulness", "entropy"];

/// Rec.601 luma weights.
const LUMA: [f64; 3] = [0.299, 0.587, 0.114];
const GCF_LEVELS: usize = 9;
const GAMMA: f64 = 2.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributeVector {
    /// Circular mean hue in degrees; `None` when the hues cancel out or the
    /// image has no chromatic pixel.
    pub hue: Option<f64>,
    pub saturation: f64,
    pub value: f64,
    pub contrast: f64,
    pub colorfulness: f64,
    pub entropy: f64,
}

impl AttributeVector {
    /// Value by name in [`ATTRIBUTE_NAMES`] order; hue may be missing.
    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "hue" => self.hue,
            "saturation" => Some(self.saturation),
            "value" => Some(self.value),
            "contrast" => Some(self.contrast),
            "colorfulness" => Some(self.colorfulness),
            "entropy" => Some(self.entropy),
            _ => None,
        }
    }
}

fn check_rgb(image: &ImageTensor) -> Result<()> {
    if image.channels() != 3 {
        return Err(Error::Usage(format!(
            "{} has {} channels, RGB needed",
            image.id(),
            image.channels()
        )));
    }
    Ok(())
}

fn rgb_pixels(image: &ImageTensor) -> impl Iterator<Item = [f64; 3]> + '_ {
    let (r, g, b) = (image.plane(0), image.plane(1), image.plane(2));
    (0..r.len()).map(move |i| [r[i], g[i], b[i]])
}

/// Hexcone RGB → HSV; hue is `None` for achromatic pixels.
pub fn rgb_to_hsv([r, g, b]: [f64; 3]) -> (Option<f64>, f64, f64) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let saturation = if max > 0.0 { delta / max } else { 0.0 };
    let hue = (delta > 0.0).then(|| {
        let h = if max == r {
            60.0 * ((g - b) / delta)
        } else if max == g {
            60.0 * ((b - r) / delta + 2.0)
        } else {
            60.0 * ((r - g) / delta + 4.0)
        };
        h.rem_euclid(360.0)
    });
    (hue, saturation, max)
}

fn wrap_degrees(angle: f64) -> f64 {
    let d = angle.rem_euclid(360.0);
    if d >= 360.0 {
        0.0
    } else {
        d
    }
}

/// `(hue, saturation, value)` means; hue is averaged as unit vectors over
/// chromatic pixels.
pub fn hsv_stats(image: &ImageTensor) -> Result<(Option<f64>, f64, f64)> {
    check_rgb(image)?;
    let (mut sx, mut sy, mut chromatic) = (0.0, 0.0, 0usize);
    let (mut s_sum, mut v_sum) = (0.0, 0.0);
    let mut count = 0usize;
    for px in rgb_pixels(image) {
        let (h, s, v) = rgb_to_hsv(px);
        if let Some(h) = h {
            let rad = h.to_radians();
            sx += rad.cos();
            sy += rad.sin();
            chromatic += 1;
        }
        s_sum += s;
        v_sum += v;
        count += 1;
    }
    let hue = if chromatic == 0 {
        None
    } else {
        let (mx, my) = (sx / chromatic as f64, sy / chromatic as f64);
        (mx.hypot(my) >= 1e-9).then(|| wrap_degrees(my.atan2(mx).to_degrees()))
    };
    Ok((hue, s_sum / count as f64, v_sum / count as f64))
}

/// Rec.601 gray plane in [0, 1]; single-channel images are returned as is.
pub fn grayscale(image: &ImageTensor) -> Result<Vec<f64>> {
    match image.channels() {
        1 => Ok(image.plane(0).to_vec()),
        3 => Ok(rgb_pixels(image)
            .map(|[r, g, b]| LUMA[0] * r + LUMA[1] * g + LUMA[2] * b)
            .collect()),
        c => Err(Error::Usage(format!("{} has {c} channels", image.id()))),
    }
}

/// Mean over pixels of the average absolute difference to 4-neighbours.
fn local_contrast(l: &[f64], h: usize, w: usize) -> f64 {
    if h < 2 || w < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..h {
        for j in 0..w {
            let c = l[i * w + j];
            let mut sum = 0.0;
            let mut n = 0.0;
            if i > 0 {
                sum += (c - l[(i - 1) * w + j]).abs();
                n += 1.0;
            }
            if i + 1 < h {
                sum += (c - l[(i + 1) * w + j]).abs();
                n += 1.0;
            }
            if j > 0 {
                sum += (c - l[i * w + j - 1]).abs();
                n += 1.0;
            }
            if j + 1 < w {
                sum += (c - l[i * w + j + 1]).abs();
                n += 1.0;
            }
            total += sum / n;
        }
    }
    total / (h * w) as f64
}

/// Averages 2×2 blocks; a trailing odd row or column is dropped.
fn halve(values: &[f64], h: usize, w: usize) -> (Vec<f64>, usize, usize) {
    let (nh, nw) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(nh * nw);
    for i in 0..nh {
        for j in 0..nw {
            let at = |di: usize, dj: usize| values[(2 * i + di) * w + 2 * j + dj];
            out.push((at(0, 0) + at(0, 1) + at(1, 0) + at(1, 1)) / 4.0);
        }
    }
    (out, nh, nw)
}

pub fn gcf_weight(level: usize) -> f64 {
    let x = level as f64 / GCF_LEVELS as f64;
    (-0.406385 * x + 0.334573) * x + 0.0877526
}

/// Global contrast factor over 9 resolutions of perceptual luminance
/// `100·√linear`, with `linear = gray^2.2` block-averaged between levels.
pub fn global_contrast(image: &ImageTensor) -> Result<f64> {
    let mut linear: Vec<f64> = grayscale(image)?.iter().map(|g| g.powf(GAMMA)).collect();
    let (mut h, mut w) = (image.height(), image.width());
    let mut gcf = 0.0;
    for level in 1..=GCF_LEVELS {
        let l: Vec<f64> = linear.iter().map(|v| 100.0 * v.sqrt()).collect();
        gcf += gcf_weight(level) * local_contrast(&l, h, w);
        if h < 2 || w < 2 {
            break;
        }
        (linear, h, w) = halve(&linear, h, w);
    }
    Ok(gcf)
}

/// Hasler–Süsstrunk colorfulness on the 0–255 scale.
pub fn colorfulness(image: &ImageTensor) -> Result<f64> {
    check_rgb(image)?;
    let (mut rg, mut yb): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    for [r, g, b] in rgb_pixels(image) {
        let (r, g, b) = (255.0 * r, 255.0 * g, 255.0 * b);
        rg.push(r - g);
        yb.push(0.5 * (r + g) - b);
    }
    let stats = |xs: &[f64]| {
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        (mean, var)
    };
    let (m_rg, v_rg) = stats(&rg);
    let (m_yb, v_yb) = stats(&yb);
    Ok((v_rg + v_yb).sqrt() + 0.3 * (m_rg * m_rg + m_yb * m_yb).sqrt())
}

/// 8-bit gray level with round-half-up.
pub fn gray_level(gray: f64) -> usize {
    ((gray * 255.0 + 0.5).floor()).clamp(0.0, 255.0) as usize
}

/// Shannon entropy in bits of the 256-bin gray histogram.
pub fn entropy(image: &ImageTensor) -> Result<f64> {
    let gray = grayscale(image)?;
    let mut hist = [0usize; 256];
    for g in &gray {
        hist[gray_level(*g)] += 1;
    }
    let n = gray.len() as f64;
    Ok(hist
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum::<f64>()
        .max(0.0))
}

fn as_rgb(image: &ImageTensor) -> Result<ImageTensor> {
    match image.channels() {
        3 => Ok(image.clone()),
        1 => {
            let plane = image.plane(0);
            let pixels = plane.iter().chain(plane).chain(plane).copied().collect();
            ImageTensor::new(image.id(), 3, image.height(), image.width(), pixels)
        }
        c => Err(Error::Usage(format!("{} has {c} channels", image.id()))),
    }
}

/// All attributes; single-channel images are treated as gray RGB.
pub fn extract(image: &ImageTensor) -> Result<AttributeVector> {
    let rgb = as_rgb(image)?;
    let (hue, saturation, value) = hsv_stats(&rgb)?;
    Ok(AttributeVector {
        hue,
        saturation,
        value,
        contrast: global_contrast(image)?,
        colorfulness: colorfulness(&rgb)?,
        entropy: entropy(image)?,
    })
}

pub fn write_attribute_csv<W: Write>(out: W, rows: &[(String, AttributeVector)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["image_id"];
    header.extend(ATTRIBUTE_NAMES);
    w.write_record(&header)?;
    for (id, a) in rows {
        let hue = a.hue.map_or_else(|| "n/a".to_owned(), |h| h.to_string());
        w.write_record([
            id.clone(),
            hue,
            a.saturation.to_string(),
            a.value.to_string(),
            a.contrast.to_string(),
            a.colorfulness.to_string(),
            a.entropy.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{rotate, Rotation};
    use crate::seed;
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn rgb(h: usize, w: usize, f: impl Fn(usize) -> [f64; 3]) -> ImageTensor {
        let n = h * w;
        let mut pixels = vec![0.0; 3 * n];
        for i in 0..n {
            let p = f(i);
            for c in 0..3 {
                pixels[c * n + i] = p[c];
            }
        }
        ImageTensor::new("t", 3, h, w, pixels).unwrap()
    }

    fn random_rgb(h: usize, w: usize, seed_value: u64) -> ImageTensor {
        let mut rng = seed::rng(seed_value);
        let pixels = (0..3 * h * w).map(|_| rng.gen::<f64>()).collect();
        ImageTensor::new("r", 3, h, w, pixels).unwrap()
    }

    #[test]
    fn hsv_trivial_cases() {
        let red = rgb(2, 3, |_| [1.0, 0.0, 0.0]);
        let (h, s, v) = hsv_stats(&red).unwrap();
        assert_eq!((h, s, v), (Some(0.0), 1.0, 1.0));
        let gray = rgb(2, 2, |_| [0.5; 3]);
        assert_eq!(hsv_stats(&gray).unwrap(), (None, 0.0, 0.5));
        let gray1 = ImageTensor::new("g", 1, 2, 2, vec![0.5; 4]).unwrap();
        assert!(matches!(hsv_stats(&gray1), Err(Error::Usage(_))));
    }

    #[test]
    fn opposite_hues_cancel() {
        let img = rgb(1, 2, |i| if i == 0 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 1.0] });
        assert_eq!(hsv_stats(&img).unwrap().0, None);
    }

    #[test]
    fn primary_hues() {
        for (px, hue) in [([0.0, 1.0, 0.0], 120.0), ([0.0, 0.0, 1.0], 240.0), ([1.0, 0.0, 1.0], 300.0)] {
            let (h, _, _) = rgb_to_hsv(px);
            assert!((h.unwrap() - hue).abs() < 1e-12);
        }
    }

    #[test]
    fn gcf_trivial() {
        assert_eq!(global_contrast(&rgb(16, 16, |_| [0.3, 0.6, 0.2])).unwrap(), 0.0);
        assert_eq!(global_contrast(&rgb(1, 1, |_| [0.3, 0.6, 0.2])).unwrap(), 0.0);
    }

    #[test]
    fn gcf_two_by_two_checkerboard() {
        // pixels (0,0),(1,1) white, others black: every pixel differs from
        // both neighbours by 100, so C1 = 100; level 2 is 1×1 → 0.
        let img = ImageTensor::new("c", 1, 2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let w1 = (-0.406385 / 9.0 + 0.334573) / 9.0 + 0.0877526;
        assert!((global_contrast(&img).unwrap() - 100.0 * w1).abs() < 1e-12);
    }

    #[test]
    fn gcf_weights_are_positive() {
        for i in 1..=9 {
            assert!(gcf_weight(i) > 0.0);
        }
    }

    #[test]
    fn colorfulness_cases() {
        assert_eq!(colorfulness(&rgb(3, 3, |i| [i as f64 / 9.0; 3])).unwrap(), 0.0);
        // half red, half green: rg = ±255 (mean 0, var 255²), yb = 127.5
        let img = rgb(2, 2, |i| if i < 2 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] });
        let expected = 255.0 + 0.3 * 127.5;
        assert!((colorfulness(&img).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn entropy_cases() {
        assert_eq!(entropy(&rgb(4, 4, |_| [0.2, 0.4, 0.9])).unwrap(), 0.0);
        let levels = ImageTensor::new("u", 1, 16, 16, (0..256).map(|k| k as f64 / 255.0).collect()).unwrap();
        assert_eq!(entropy(&levels).unwrap(), 8.0);
        let rgb_levels = rgb(16, 16, |k| [k as f64 / 255.0; 3]);
        assert_eq!(entropy(&rgb_levels).unwrap(), 8.0);
        let two = ImageTensor::new("b", 1, 1, 2, vec![0.0, 1.0]).unwrap();
        assert_eq!(entropy(&two).unwrap(), 1.0);
    }

    #[test]
    fn round_half_up() {
        assert_eq!(gray_level(0.5 / 255.0), 1);
        assert_eq!(gray_level(0.0), 0);
        assert_eq!(gray_level(1.0), 255);
    }

    #[test]
    fn permutation_invariance() {
        let img = random_rgb(5, 6, 3);
        let n = 30;
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut seed::rng(4));
        let shuffled = rgb(5, 6, |i| {
            let j = perm[i];
            [img.plane(0)[j], img.plane(1)[j], img.plane(2)[j]]
        });
        let (a, b) = (extract(&img).unwrap(), extract(&shuffled).unwrap());
        assert_eq!(a.entropy, b.entropy);
        assert!((a.colorfulness - b.colorfulness).abs() < 1e-9);
        assert!((a.saturation - b.saturation).abs() < 1e-12);
        assert!((a.value - b.value).abs() < 1e-12);
        assert!((a.hue.unwrap() - b.hue.unwrap()).abs() < 1e-9);
    }

    #[test]
    fn half_turn_invariance() {
        for s in 0..10 {
            let img = random_rgb(16, 16, s);
            let turned = rotate(&img, Rotation::R180).unwrap();
            let (a, b) = (extract(&img).unwrap(), extract(&turned).unwrap());
            for name in ATTRIBUTE_NAMES {
                let (x, y) = (a.get(name).unwrap(), b.get(name).unwrap());
                assert!((x - y).abs() < 1e-9, "{name}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn value_complement() {
        let mut rng = seed::rng(5);
        let px: Vec<f64> = (0..20).map(|_| rng.gen()).collect();
        let img = ImageTensor::new("g", 1, 4, 5, px.clone()).unwrap();
        let inv = ImageTensor::new("g", 1, 4, 5, px.iter().map(|p| 1.0 - p).collect()).unwrap();
        let (a, b) = (extract(&img).unwrap(), extract(&inv).unwrap());
        assert!((a.value - (1.0 - b.value)).abs() < 1e-12);
    }

    #[test]
    fn ranges() {
        for s in 0..20 {
            let a = extract(&random_rgb(7, 9, s)).unwrap();
            let h = a.hue.unwrap();
            assert!((0.0..360.0).contains(&h));
            assert!((0.0..=1.0).contains(&a.saturation) && (0.0..=1.0).contains(&a.value));
            assert!(a.contrast >= 0.0 && a.colorfulness >= 0.0);
            assert!((0.0..=8.0).contains(&a.entropy));
        }
    }

    #[test]
    fn csv_format() {
        let gray = extract(&rgb(2, 2, |_| [0.5; 3])).unwrap();
        let mut buf = Vec::new();
        write_attribute_csv(&mut buf, &[("x".into(), gray)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("image_id,hue,saturation,value,contrast,colorfulness,entropy"));
        assert_eq!(lines.next(), Some("x,n/a,0,0.5,0,0,0"));
    }
}
