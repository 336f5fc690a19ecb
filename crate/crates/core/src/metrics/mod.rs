//! Image quality and resolution metrics.

mod ssim;
mod usaf;

pub use ssim::{ssim, ssim_map, SsimParams};
pub use usaf::{
    bar_resolvable, finest_resolvable, render_usaf_chart, usaf_resolution, BarOrientation,
    BarTriplet, ElementResolution, Resolvability, UsafChart, RESOLVABLE_CONTRAST,
};

use crate::error::Result;
use crate::field::RealField;

/// `10·log10(1/MSE)` for unit dynamic range; `f64::INFINITY` for identical
/// images.
pub fn psnr(a: &RealField, b: &RealField) -> Result<f64> {
    a.check_same_shape(b)?;
    let mse = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.data().len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (1.0 / mse).log10())
}

/// Separable Gaussian blur with clamp-to-edge borders.
pub fn gaussian_blur(field: &RealField, sigma: f64) -> RealField {
    if sigma <= 0.0 {
        return field.clone();
    }
    let radius = (4.0 * sigma).ceil() as i64;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    let kernel: Vec<f64> = kernel.into_iter().map(|v| v / total).collect();
    let (w, h) = (field.width() as i64, field.height() as i64);
    let horiz = RealField::from_fn(w as usize, h as usize, |x, y| {
        kernel
            .iter()
            .enumerate()
            .map(|(j, k)| {
                let xx = (x as i64 + j as i64 - radius).clamp(0, w - 1) as usize;
                k * field.get(xx, y)
            })
            .sum()
    });
    RealField::from_fn(w as usize, h as usize, |x, y| {
        kernel
            .iter()
            .enumerate()
            .map(|(j, k)| {
                let yy = (y as i64 + j as i64 - radius).clamp(0, h - 1) as usize;
                k * horiz.get(x, yy)
            })
            .sum()
    })
}
