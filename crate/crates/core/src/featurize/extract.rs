//! Built-in 120-dimensional image descriptor.
//!
//! Layout, in order:
//!
//! | range    | block                                                        |
//! |----------|--------------------------------------------------------------|
//! | 0..64    | intensity histogram, bin = value / 4, sums to 1              |
//! | 64..96   | Sobel orientation histogram, magnitude weighted, sums to 1   |
//! | 96..112  | ink (value / 255) in 16 equal-area annuli about the center   |
//! | 112..120 | ink fraction, centroid x, centroid y, var x, var y, cov xy,  |
//! |          | perimeter, connected components                              |
//!
//! The scalar block uses the mask `value > 127` and normalized pixel-center
//! coordinates `(x + 0.5) / W`. Variances are scaled by 4 and the covariance
//! mapped through `(4 c + 1) / 2`, all landing in [0, 1]. Perimeter counts
//! 4-neighbour mask transitions over the number of adjacent pixel pairs.
//! Components are 4-connected, capped at 255 and divided by 255. An empty
//! mask yields centroid 0.5, zero spread and covariance 0.5. Orientation and
//! annulus blocks are all zero when they carry no mass.

use super::FeatureVector;
use crate::morphogen::Image;

pub const INTENSITY_BINS: usize = 64;
pub const ORIENTATION_BINS: usize = 32;
pub const RADIAL_BINS: usize = 16;
pub const SCALAR_STATS: usize = 8;
pub const BUILTIN_DIM: usize = INTENSITY_BINS + ORIENTATION_BINS + RADIAL_BINS + SCALAR_STATS;

pub fn extract_features(img: &Image) -> FeatureVector {
    let mut values = Vec::with_capacity(BUILTIN_DIM);
    values.extend(intensity_histogram(img));
    values.extend(orientation_histogram(img));
    values.extend(radial_density(img));
    values.extend(shape_stats(img));
    debug_assert_eq!(values.len(), BUILTIN_DIM);
    FeatureVector::builtin(values)
}

fn normalize_in_place(bins: &mut [f64]) {
    let total: f64 = bins.iter().sum();
    if total > 0.0 {
        bins.iter_mut().for_each(|b| *b /= total);
    }
}

fn intensity_histogram(img: &Image) -> Vec<f64> {
    let mut bins = vec![0.0; INTENSITY_BINS];
    for &p in img.pixels() {
        bins[(p >> 2) as usize] += 1.0;
    }
    normalize_in_place(&mut bins);
    bins
}

fn orientation_histogram(img: &Image) -> Vec<f64> {
    let mut bins = vec![0.0; ORIENTATION_BINS];
    let (w, h) = (img.width(), img.height());
    let at = |x: usize, y: usize| img.get(x, y) as f64;
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            let mag = gx.hypot(gy);
            if mag > 0.0 {
                let theta = gy.atan2(gx);
                let bin = ((theta + std::f64::consts::PI) / (2.0 * std::f64::consts::PI)
                    * ORIENTATION_BINS as f64)
                    .floor() as usize;
                bins[bin % ORIENTATION_BINS] += mag;
            }
        }
    }
    normalize_in_place(&mut bins);
    bins
}

fn radial_density(img: &Image) -> Vec<f64> {
    let mut bins = vec![0.0; RADIAL_BINS];
    let (cx, cy) = (img.width() as f64 / 2.0, img.height() as f64 / 2.0);
    let r2_max = cx * cx + cy * cy;
    for y in 0..img.height() {
        let dy = y as f64 + 0.5 - cy;
        for x in 0..img.width() {
            let p = img.get(x, y);
            if p == 0 {
                continue;
            }
            let dx = x as f64 + 0.5 - cx;
            let bin = ((dx * dx + dy * dy) / r2_max * RADIAL_BINS as f64).floor() as usize;
            bins[bin.min(RADIAL_BINS - 1)] += p as f64 / 255.0;
        }
    }
    normalize_in_place(&mut bins);
    bins
}

fn shape_stats(img: &Image) -> [f64; SCALAR_STATS] {
    let (w, h) = (img.width(), img.height());
    let mask: Vec<bool> = img.pixels().iter().map(|&p| p > 127).collect();
    let lit = mask.iter().filter(|&&m| m).count();
    let n = (w * h) as f64;

    let (mut sx, mut sy) = (0.0, 0.0);
    for y in 0..h {
        for x in 0..w {
            if mask[y * w + x] {
                sx += (x as f64 + 0.5) / w as f64;
                sy += (y as f64 + 0.5) / h as f64;
            }
        }
    }
    let (mut cx, mut cy, mut vxx, mut vyy, mut vxy) = (0.5, 0.5, 0.0, 0.0, 0.0);
    if lit > 0 {
        let m = lit as f64;
        cx = sx / m;
        cy = sy / m;
        for y in 0..h {
            for x in 0..w {
                if mask[y * w + x] {
                    let dx = (x as f64 + 0.5) / w as f64 - cx;
                    let dy = (y as f64 + 0.5) / h as f64 - cy;
                    vxx += dx * dx;
                    vyy += dy * dy;
                    vxy += dx * dy;
                }
            }
        }
        vxx /= m;
        vyy /= m;
        vxy /= m;
    }

    let mut transitions = 0usize;
    for y in 0..h {
        for x in 0..w {
            let m = mask[y * w + x];
            if x + 1 < w && m != mask[y * w + x + 1] {
                transitions += 1;
            }
            if y + 1 < h && m != mask[(y + 1) * w + x] {
                transitions += 1;
            }
        }
    }
    let pairs = ((w - 1) * h + w * (h - 1)).max(1) as f64;

    [
        lit as f64 / n,
        cx,
        cy,
        (4.0 * vxx).min(1.0),
        (4.0 * vyy).min(1.0),
        ((4.0 * vxy + 1.0) / 2.0).clamp(0.0, 1.0),
        transitions as f64 / pairs,
        component_count(&mask, w, h).min(255) as f64 / 255.0,
    ]
}

fn component_count(mask: &[bool], w: usize, h: usize) -> usize {
    let mut seen = vec![false; mask.len()];
    let mut stack = Vec::new();
    let mut count = 0;
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if mask[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block_sum(v: &[f64], lo: usize, hi: usize) -> f64 {
        v[lo..hi].iter().sum()
    }

    #[test]
    fn black_image() {
        let f = extract_features(&Image::new(128, 128));
        let v = f.values();
        assert_eq!(v.len(), BUILTIN_DIM);
        assert_eq!(v[0], 1.0);
        assert!(v[1..64].iter().all(|&x| x == 0.0));
        assert!(v[64..112].iter().all(|&x| x == 0.0));
        assert_eq!(v[112], 0.0);
    }

    #[test]
    fn radial_bins_survive_half_turn() {
        let mut img = Image::new(128, 128);
        for (i, (x, y)) in [(10, 20), (64, 64), (100, 3), (70, 90), (5, 120)]
            .into_iter()
            .enumerate()
        {
            img.set(x, y, 40 * (i as u8 + 1));
        }
        let mut rotated = Image::new(128, 128);
        for y in 0..128 {
            for x in 0..128 {
                rotated.set(127 - x, 127 - y, img.get(x, y));
            }
        }
        let a = extract_features(&img);
        let b = extract_features(&rotated);
        assert_eq!(a.values()[96..112], b.values()[96..112]);
    }

    #[test]
    fn histogram_blocks_sum_to_one() {
        let mut img = Image::new(128, 128);
        for y in 0..128 {
            for x in 0..128 {
                img.set(x, y, ((x * 7 + y * 3) % 256) as u8);
            }
        }
        let v = extract_features(&img).values().to_vec();
        assert!((block_sum(&v, 0, 64) - 1.0).abs() < 1e-9);
        assert!((block_sum(&v, 64, 96) - 1.0).abs() < 1e-9);
        assert!((block_sum(&v, 96, 112) - 1.0).abs() < 1e-9);
        assert!(v[112..].iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn counts_components() {
        let mut mask = vec![false; 25];
        for i in [0, 1, 5, 12, 24, 23] {
            mask[i] = true;
        }
        assert_eq!(component_count(&mask, 5, 5), 3);
    }
}
