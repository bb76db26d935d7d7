//! Slow, straightforward reference implementations used as test oracles.
//! None of them call into the library's numeric code.

#![allow(dead_code)]

use memmeter_core::data::ImageTensor;
use rand::Rng;

/// Random image with pixel values either continuous or on the 8-bit grid.
pub fn random_image(id: &str, channels: usize, h: usize, w: usize, rng: &mut impl Rng) -> ImageTensor {
    let quantized = rng.gen_bool(0.5);
    let pixels = (0..channels * h * w)
        .map(|_| {
            if quantized {
                f64::from(rng.gen_range(0u8..=255)) / 255.0
            } else {
                rng.gen::<f64>()
            }
        })
        .collect();
    ImageTensor::new(id, channels, h, w, pixels).unwrap()
}

/// Ranks with ties doubled so they stay integral: 2·rank = 2·#less + #equal + 1.
pub fn doubled_ranks(values: &[i64]) -> Vec<i64> {
    values
        .iter()
        .map(|v| {
            let less = values.iter().filter(|u| *u < v).count() as i64;
            let equal = values.iter().filter(|u| *u == v).count() as i64;
            2 * less + equal + 1
        })
        .collect()
}

/// Spearman ρ of integer data with exact integer sums; `None` if either
/// side is constant.
pub fn spearman_integer(xs: &[i64], ys: &[i64]) -> Option<f64> {
    let (rx, ry) = (doubled_ranks(xs), doubled_ranks(ys));
    let n = xs.len() as i64;
    // Work in n·(2r) so means are integers: sum of doubled ranks = n(n+1).
    let mean2 = n + 1;
    let (mut sxy, mut sxx, mut syy) = (0i64, 0i64, 0i64);
    for (a, b) in rx.iter().zip(&ry) {
        let (dx, dy) = (a - mean2, b - mean2);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0 || syy == 0 {
        return None;
    }
    Some(sxy as f64 / ((sxx as f64) * (syy as f64)).sqrt())
}

/// 1-based mid-ranks by counting.
pub fn mid_ranks_by_counting(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|v| {
            let less = values.iter().filter(|u| *u < v).count();
            let equal = values.iter().filter(|u| *u == v).count();
            less as f64 + (equal as f64 + 1.0) / 2.0
        })
        .collect()
}

pub fn spearman_by_counting(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let (rx, ry) = (mid_ranks_by_counting(xs), mid_ranks_by_counting(ys));
    let n = xs.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mean) * (b - mean)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mean) * (a - mean)).sum();
    let vy: f64 = ry.iter().map(|b| (b - mean) * (b - mean)).sum();
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / (vx * vy).sqrt())
}

/// One record for the binning oracle: `(id, probabilities, true class)`.
pub type RawRecord = (String, Vec<f64>, usize);

/// RMS calibration error with `bins` equal-count bins; bin sizes come from
/// repeatedly taking ⌈remaining records / remaining bins⌉.
pub fn rms_by_explicit_bins(records: &[RawRecord], bins: usize) -> f64 {
    let mut rows: Vec<(f64, bool, &str)> = records
        .iter()
        .map(|(id, probs, truth)| {
            let mut best = 0;
            for k in 0..probs.len() {
                if probs[k] > probs[best] {
                    best = k;
                }
            }
            (probs[best], best == *truth, id.as_str())
        })
        .collect();
    rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.2.cmp(b.2)));
    let n = rows.len();
    let bins = bins.min(n);
    let mut total = 0.0;
    let mut start = 0;
    for k in 0..bins {
        let remaining = n - start;
        let size = remaining.div_ceil(bins - k);
        let mut conf = 0.0;
        let mut hits = 0.0;
        for row in &rows[start..start + size] {
            conf += row.0;
            if row.1 {
                hits += 1.0;
            }
        }
        let gap = conf / size as f64 - hits / size as f64;
        total += gap * gap * size as f64;
        start += size;
    }
    (total / n as f64).sqrt()
}

fn rgb_at(img: &ImageTensor, i: usize, j: usize) -> [f64; 3] {
    let w = img.width();
    let c = |k: usize| img.pixels()[k * img.height() * w + i * w + j];
    if img.channels() == 1 {
        [c(0), c(0), c(0)]
    } else {
        [c(0), c(1), c(2)]
    }
}

/// `(hue, saturation, value)` with hue as the circular mean over chromatic
/// pixels, computed per pixel from sorted channels.
pub fn hsv_oracle(img: &ImageTensor) -> (Option<f64>, f64, f64) {
    let (mut cx, mut cy, mut chroma_px) = (0.0, 0.0, 0.0);
    let (mut s, mut v, mut count) = (0.0, 0.0, 0.0);
    for i in 0..img.height() {
        for j in 0..img.width() {
            let [r, g, b] = rgb_at(img, i, j);
            let mut sorted = [r, g, b];
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let (lo, hi) = (sorted[0], sorted[2]);
            let chroma = hi - lo;
            v += hi;
            s += if hi == 0.0 { 0.0 } else { chroma / hi };
            count += 1.0;
            if chroma > 0.0 {
                let sector = if hi == r {
                    ((g - b) / chroma).rem_euclid(6.0)
                } else if hi == g {
                    (b - r) / chroma + 2.0
                } else {
                    (r - g) / chroma + 4.0
                };
                let angle = (sector * 60.0).to_radians();
                cx += angle.cos();
                cy += angle.sin();
                chroma_px += 1.0;
            }
        }
    }
    let hue = if chroma_px == 0.0 {
        None
    } else {
        let (mx, my) = (cx / chroma_px, cy / chroma_px);
        if (mx * mx + my * my).sqrt() < 1e-9 {
            None
        } else {
            let mut deg = my.atan2(mx).to_degrees();
            if deg < 0.0 {
                deg += 360.0;
            }
            Some(if deg >= 360.0 { 0.0 } else { deg })
        }
    };
    (hue, s / count, v / count)
}

fn gray_at(img: &ImageTensor, i: usize, j: usize) -> f64 {
    let [r, g, b] = rgb_at(img, i, j);
    if img.channels() == 1 {
        r
    } else {
        0.299 * r + 0.587 * g + 0.114 * b
    }
}

/// Global contrast factor on a 2-D grid, nine levels, weights from the
/// quadratic in i/9.
pub fn gcf_oracle(img: &ImageTensor) -> f64 {
    let mut linear: Vec<Vec<f64>> = (0..img.height())
        .map(|i| (0..img.width()).map(|j| gray_at(img, i, j).powf(2.2)).collect())
        .collect();
    let mut total = 0.0;
    for level in 1..=9 {
        let h = linear.len();
        let w = linear.first().map_or(0, Vec::len);
        let x = level as f64 / 9.0;
        let weight = -0.406385 * x * x + 0.334573 * x + 0.0877526;
        if h >= 2 && w >= 2 {
            let l = |i: usize, j: usize| 100.0 * linear[i][j].sqrt();
            let mut sum = 0.0;
            for i in 0..h {
                for j in 0..w {
                    let mut diffs = Vec::new();
                    for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                        let (ni, nj) = (i as i64 + di, j as i64 + dj);
                        if ni >= 0 && nj >= 0 && (ni as usize) < h && (nj as usize) < w {
                            diffs.push((l(i, j) - l(ni as usize, nj as usize)).abs());
                        }
                    }
                    sum += diffs.iter().sum::<f64>() / diffs.len() as f64;
                }
            }
            total += weight * sum / (h * w) as f64;
        } else {
            break;
        }
        linear = (0..h / 2)
            .map(|i| {
                (0..w / 2)
                    .map(|j| {
                        (linear[2 * i][2 * j]
                            + linear[2 * i][2 * j + 1]
                            + linear[2 * i + 1][2 * j]
                            + linear[2 * i + 1][2 * j + 1])
                            / 4.0
                    })
                    .collect()
            })
            .collect();
    }
    total
}

pub fn colorfulness_oracle(img: &ImageTensor) -> f64 {
    let mut rg = Vec::new();
    let mut yb = Vec::new();
    for i in 0..img.height() {
        for j in 0..img.width() {
            let [r, g, b] = rgb_at(img, i, j);
            rg.push(255.0 * r - 255.0 * g);
            yb.push((255.0 * r + 255.0 * g) / 2.0 - 255.0 * b);
        }
    }
    let n = rg.len() as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
    let (mrg, myb) = (mean(&rg), mean(&yb));
    let var = |v: &[f64], m: f64| v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    let sd_root = (var(&rg, mrg) + var(&yb, myb)).sqrt();
    let mean_root = (mrg * mrg + myb * myb).sqrt();
    sd_root + 0.3 * mean_root
}

pub fn entropy_oracle(img: &ImageTensor) -> f64 {
    let mut counts = std::collections::HashMap::new();
    let mut n = 0.0;
    for i in 0..img.height() {
        for j in 0..img.width() {
            let level = (gray_at(img, i, j) * 255.0).round() as i64;
            *counts.entry(level.clamp(0, 255)).or_insert(0.0) += 1.0;
            n += 1.0;
        }
    }
    let mut h = 0.0;
    for c in counts.values() {
        let p: f64 = c / n;
        h -= p * p.log2();
    }
    h.max(0.0)
}
