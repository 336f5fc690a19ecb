//! Structural similarity with the usual 11×11 Gaussian window (σ = 1.5),
//! `K1 = 0.01`, `K2 = 0.03` and dynamic range 1.
//!
//! Local statistics are computed only where the window fits entirely inside
//! the image, and the index is the mean over those positions.

use crate::error::{FsiError, Result};
use crate::field::RealField;

#[derive(Clone, Debug, PartialEq)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub dynamic_range: f64,
    pub k1: f64,
    pub k2: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            dynamic_range: 1.0,
            k1: 0.01,
            k2: 0.03,
        }
    }
}

impl SsimParams {
    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }

    /// Normalized 1-D kernel; the 2-D window is its outer product.
    pub fn kernel(&self) -> Vec<f64> {
        let half = (self.window / 2) as f64;
        let raw: Vec<f64> = (0..self.window)
            .map(|i| {
                let d = i as f64 - half;
                (-(d * d) / (2.0 * self.sigma * self.sigma)).exp()
            })
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / total).collect()
    }
}

/// Separable "valid" filtering.
fn filter_valid(src: &[f64], w: usize, h: usize, k: &[f64]) -> (Vec<f64>, usize, usize) {
    let kw = k.len();
    let (ow, oh) = (w + 1 - kw, h + 1 - kw);
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            tmp[y * ow + x] = k.iter().zip(&row[x..x + kw]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = k
                .iter()
                .enumerate()
                .map(|(j, kv)| kv * tmp[(y + j) * ow + x])
                .sum();
        }
    }
    (out, ow, oh)
}

/// Per-position SSIM values over the valid region.
pub fn ssim_map(a: &RealField, b: &RealField, params: &SsimParams) -> Result<RealField> {
    a.check_same_shape(b)?;
    let (w, h) = (a.width(), a.height());
    if w < params.window || h < params.window {
        return Err(FsiError::InvalidDimension(format!(
            "{w}x{h} is smaller than the {0}x{0} SSIM window",
            params.window
        )));
    }
    let k = params.kernel();
    let (ad, bd) = (a.data(), b.data());
    let aa: Vec<f64> = ad.iter().map(|v| v * v).collect();
    let bb: Vec<f64> = bd.iter().map(|v| v * v).collect();
    let ab: Vec<f64> = ad.iter().zip(bd).map(|(x, y)| x * y).collect();

    let (mu_a, ow, oh) = filter_valid(ad, w, h, &k);
    let (mu_b, _, _) = filter_valid(bd, w, h, &k);
    let (e_aa, _, _) = filter_valid(&aa, w, h, &k);
    let (e_bb, _, _) = filter_valid(&bb, w, h, &k);
    let (e_ab, _, _) = filter_valid(&ab, w, h, &k);

    let (c1, c2) = (params.c1(), params.c2());
    let values = (0..ow * oh)
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let var_a = e_aa[i] - ma * ma;
            let var_b = e_bb[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2))
        })
        .collect();
    RealField::new(ow, oh, values)
}

/// Mean SSIM.
pub fn ssim(a: &RealField, b: &RealField, params: &SsimParams) -> Result<f64> {
    Ok(ssim_map(a, b, params)?.mean())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> RealField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        RealField::from_fn(n, n, |_, _| rng.random::<f64>())
    }

    #[test]
    fn window_is_normalized() {
        let k = SsimParams::default().kernel();
        assert_eq!(k.len(), 11);
        let total: f64 = k.iter().flat_map(|a| k.iter().map(move |b| a * b)).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn identical_images_score_one() {
        let a = random(32, 1);
        let s = ssim(&a, &a, &SsimParams::default()).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverted_binary_image_is_negative() {
        let a = RealField::from_fn(32, 32, |x, y| ((x / 2 + y / 3) % 2) as f64);
        let inv = a.map(|v| 1.0 - v);
        assert!(ssim(&a, &inv, &SsimParams::default()).unwrap() < 0.0);
    }

    #[test]
    fn symmetric_and_bounded() {
        let a = random(24, 2);
        let b = random(24, 3);
        let p = SsimParams::default();
        let ab = ssim(&a, &b, &p).unwrap();
        let ba = ssim(&b, &a, &p).unwrap();
        assert!((ab - ba).abs() < 1e-12);
        assert!((-1.0..=1.0).contains(&ab));
    }

    #[test]
    fn matches_reference_implementation() {
        // Value produced by scikit-image's structural_similarity with
        // gaussian_weights=True, sigma=1.5, use_sample_covariance=False.
        let a = RealField::from_fn(48, 40, |x, y| {
            ((x as f64 * 0.3).sin() + (y as f64 * 0.2).cos() + 2.0) / 4.0
        });
        let b = RealField::from_fn(48, 40, |x, y| {
            (a.get(x, y) + 0.1 * (x as f64 * y as f64 * 0.01).sin()).clamp(0.0, 1.0)
        });
        let s = ssim(&a, &b, &SsimParams::default()).unwrap();
        assert!((s - 0.910_648_081_809_067_3).abs() < 1e-9, "{s}");
    }

    #[test]
    fn too_small_or_mismatched() {
        let p = SsimParams::default();
        assert!(ssim(&random(8, 1), &random(8, 2), &p).is_err());
        assert!(ssim(&random(16, 1), &random(12, 2), &p).is_err());
    }
}
