//! Frequency indexing and the 2-D discrete Fourier transform.
//!
//! Conventions used throughout the crate:
//!
//! * `u` counts cycles along `x` (columns) and `v` along `y` (rows); a
//!   full-plane coefficient lives at `v * n + u`.
//! * The forward transform is unnormalized,
//!   `C(u,v) = Σ_x Σ_y I(x,y)·exp(−j2π(ux+vy)/n)`, and the inverse carries the
//!   `1/n²` factor.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{FsiError, Result};
use crate::field::{RealField, SceneImage};

/// Integer cycle indices of a Fourier basis function on an `n`×`n` grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FrequencyPair {
    pub u: usize,
    pub v: usize,
}

impl FrequencyPair {
    pub const DC: FrequencyPair = FrequencyPair { u: 0, v: 0 };

    pub const fn new(u: usize, v: usize) -> Self {
        Self { u, v }
    }

    pub fn validate(self, n: usize) -> Result<Self> {
        if self.u >= n || self.v >= n {
            return Err(FsiError::InvalidFrequency {
                u: self.u,
                v: self.v,
                n,
            });
        }
        Ok(self)
    }

    /// The partner `(−u mod n, −v mod n)` whose coefficient is the complex
    /// conjugate of this one for real images.
    pub fn conjugate(self, n: usize) -> Self {
        Self {
            u: (n - self.u) % n,
            v: (n - self.v) % n,
        }
    }

    pub fn is_self_conjugate(self, n: usize) -> bool {
        self.conjugate(n) == self
    }

    /// Signed frequencies in `(−n/2, n/2]`.
    pub fn centered(self, n: usize) -> (i64, i64) {
        let half = n / 2;
        let c = |k: usize| {
            if k <= half {
                k as i64
            } else {
                k as i64 - n as i64
            }
        };
        (c(self.u), c(self.v))
    }

    /// Euclidean distance from the spectrum centre in centered coordinates.
    pub fn radius(self, n: usize) -> f64 {
        let (a, b) = self.centered(n);
        ((a * a + b * b) as f64).sqrt()
    }

    #[inline]
    pub fn full_index(self, n: usize) -> usize {
        self.v * n + self.u
    }

    /// Normalized frequencies `(u/n, v/n)`.
    pub fn normalized(self, n: usize) -> (f64, f64) {
        (self.u as f64 / n as f64, self.v as f64 / n as f64)
    }
}

/// One representative per conjugate pair of a real `n`×`n` spectrum, plus the
/// four self-conjugate points, in lexicographic `(u, v)` order.
///
/// A pair `(u, v)` is the representative when `0 < v < n/2`, or when
/// `v ∈ {0, n/2}` and `u ≤ n/2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HalfPlaneMap {
    n: usize,
    entries: Vec<FrequencyPair>,
    // full-plane index -> half-plane index of its representative
    lookup: Vec<u32>,
}

impl HalfPlaneMap {
    pub fn new(n: usize) -> Result<Self> {
        validate_side(n)?;
        let half = n / 2;
        let mut entries = Vec::with_capacity(n * n / 2 + 2);
        for u in 0..n {
            for v in 0..n {
                if is_representative(u, v, half) {
                    entries.push(FrequencyPair::new(u, v));
                }
            }
        }
        debug_assert_eq!(entries.len(), n * n / 2 + 2);

        let mut lookup = vec![u32::MAX; n * n];
        for (idx, &p) in entries.iter().enumerate() {
            lookup[p.full_index(n)] = idx as u32;
            lookup[p.conjugate(n).full_index(n)] = idx as u32;
        }
        debug_assert!(lookup.iter().all(|&i| i != u32::MAX));
        Ok(Self { n, entries, lookup })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of non-redundant frequencies, `n²/2 + 2`.
    #[inline]
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    #[inline]
    pub fn entries(&self) -> &[FrequencyPair] {
        &self.entries
    }

    #[inline]
    pub fn entry(&self, index: usize) -> FrequencyPair {
        self.entries[index]
    }

    /// Half-plane index covering `p`, whether `p` is the representative or its
    /// conjugate partner.
    #[inline]
    pub fn index_of(&self, p: FrequencyPair) -> usize {
        self.lookup[p.full_index(self.n)] as usize
    }

    /// Index of `p` only if `p` itself is the stored representative.
    pub fn representative_index(&self, p: FrequencyPair) -> Option<usize> {
        if p.u >= self.n || p.v >= self.n {
            return None;
        }
        let idx = self.index_of(p);
        (self.entries[idx] == p).then_some(idx)
    }

    pub fn is_self_conjugate(&self, index: usize) -> bool {
        self.entries[index].is_self_conjugate(self.n)
    }

    pub fn dc_index(&self) -> usize {
        self.index_of(FrequencyPair::DC)
    }
}

fn is_representative(u: usize, v: usize, half: usize) -> bool {
    (v > 0 && v < half) || ((v == 0 || v == half) && u <= half)
}

pub(crate) fn validate_side(n: usize) -> Result<()> {
    if n < SceneImage::MIN_SIDE || !n.is_multiple_of(2) {
        return Err(FsiError::InvalidDimension(format!(
            "side length {n} must be even and at least {}",
            SceneImage::MIN_SIDE
        )));
    }
    Ok(())
}

/// Complex coefficients over all `n²` frequency pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct FullSpectrum {
    n: usize,
    coefficients: Vec<Complex64>,
}

impl FullSpectrum {
    pub fn new(n: usize, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != n * n {
            return Err(FsiError::mismatch(n * n, coefficients.len()));
        }
        Ok(Self { n, coefficients })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            coefficients: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, p: FrequencyPair) -> Complex64 {
        self.coefficients[p.full_index(self.n)]
    }

    #[inline]
    pub fn set(&mut self, p: FrequencyPair, value: Complex64) {
        let n = self.n;
        self.coefficients[p.full_index(n)] = value;
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coefficients
    }

    /// Largest `|C(p) − conj(C(p*))|` relative to the largest modulus.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let n = self.n;
        let scale = self
            .coefficients
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for v in 0..n {
            for u in 0..n {
                let p = FrequencyPair::new(u, v);
                let d = (self.get(p) - self.get(p.conjugate(n)).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst / scale
    }
}

/// Planned 2-D transforms for one side length.
///
/// Rows are transformed first, then columns; both passes are sequential so
/// repeated calls are bit-identical.
pub struct Dft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    transpose_buf: Vec<Complex64>,
}

impl std::fmt::Debug for Dft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dft2").field("n", &self.n).finish()
    }
}

impl Dft2 {
    pub fn new(n: usize) -> Result<Self> {
        validate_side(n)?;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Ok(Self {
            n,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            transpose_buf: vec![Complex64::new(0.0, 0.0); n * n],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Unnormalized forward transform of a real field, in place on `buf`.
    pub fn forward_in_place(&mut self, buf: &mut [Complex64]) {
        let fft = Arc::clone(&self.forward);
        self.transform_2d(buf, fft.as_ref());
    }

    /// Inverse transform including the `1/n²` factor, in place on `buf`.
    pub fn inverse_in_place(&mut self, buf: &mut [Complex64]) {
        let fft = Arc::clone(&self.inverse);
        self.transform_2d(buf, fft.as_ref());
        let scale = 1.0 / (self.n * self.n) as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
    }

    pub fn forward(&mut self, field: &RealField) -> Result<FullSpectrum> {
        self.check(field)?;
        let mut buf: Vec<Complex64> = field
            .data()
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        self.forward_in_place(&mut buf);
        Ok(FullSpectrum {
            n: self.n,
            coefficients: buf,
        })
    }

    /// Real part of the inverse transform.
    pub fn inverse_real(&mut self, spectrum: &FullSpectrum) -> Result<RealField> {
        Ok(self.inverse_with_residue(spectrum)?.0)
    }

    /// Real part of the inverse transform together with the largest discarded
    /// imaginary component.
    pub fn inverse_with_residue(&mut self, spectrum: &FullSpectrum) -> Result<(RealField, f64)> {
        if spectrum.n != self.n {
            return Err(FsiError::mismatch(self.n, spectrum.n));
        }
        let mut buf = spectrum.coefficients.clone();
        self.inverse_in_place(&mut buf);
        let residue = buf.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
        let data = buf.into_iter().map(|c| c.re).collect();
        Ok((RealField::new(self.n, self.n, data)?, residue))
    }

    fn check(&self, field: &RealField) -> Result<()> {
        if field.width() != self.n || field.height() != self.n {
            return Err(FsiError::mismatch(
                format!("{0}x{0}", self.n),
                format!("{}x{}", field.width(), field.height()),
            ));
        }
        Ok(())
    }

    fn transform_2d(&mut self, buf: &mut [Complex64], fft: &dyn Fft<f64>) {
        assert_eq!(buf.len(), self.n * self.n);
        // Each row is an independent length-n transform (x -> u).
        fft.process_with_scratch(buf, &mut self.scratch);
        transpose(buf, &mut self.transpose_buf, self.n);
        // Columns, now laid out as rows (y -> v).
        fft.process_with_scratch(&mut self.transpose_buf, &mut self.scratch);
        transpose(&self.transpose_buf, buf, self.n);
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    for y in 0..n {
        for x in 0..n {
            dst[x * n + y] = src[y * n + x];
        }
    }
}

/// Unnormalized forward 2-D DFT of a square scene.
pub fn forward_dft(image: &SceneImage) -> Result<FullSpectrum> {
    forward_dft_field(image.field())
}

/// Forward DFT of an arbitrary square real field.
pub fn forward_dft_field(field: &RealField) -> Result<FullSpectrum> {
    let n = field.side()?;
    Dft2::new(n)?.forward(field)
}

/// Inverse 2-D DFT (with the `1/n²` factor), real part taken.
pub fn inverse_dft(spectrum: &FullSpectrum) -> Result<RealField> {
    Dft2::new(spectrum.n())?.inverse_real(spectrum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(n: usize, seed: u64) -> RealField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        RealField::from_fn(n, n, |_, _| rng.random::<f64>())
    }

    // O(n^4) reference transform.
    fn naive_dft(field: &RealField) -> Vec<Complex64> {
        let n = field.width();
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for v in 0..n {
            for u in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for y in 0..n {
                    for x in 0..n {
                        let phase =
                            -2.0 * std::f64::consts::PI * ((u * x + v * y) % n) as f64 / n as f64;
                        acc += Complex64::from_polar(field.get(x, y), phase);
                    }
                }
                out[v * n + u] = acc;
            }
        }
        out
    }

    fn brute_force_half_plane_count(n: usize) -> usize {
        let mut seen = vec![false; n * n];
        let mut count = 0;
        for v in 0..n {
            for u in 0..n {
                let p = FrequencyPair::new(u, v);
                if !seen[p.full_index(n)] {
                    count += 1;
                    seen[p.full_index(n)] = true;
                    seen[p.conjugate(n).full_index(n)] = true;
                }
            }
        }
        count
    }

    #[test]
    fn half_plane_sizes() {
        assert_eq!(HalfPlaneMap::new(4).unwrap().len(), 10);
        assert_eq!(HalfPlaneMap::new(256).unwrap().len(), 32_770);
        assert!(matches!(
            HalfPlaneMap::new(2),
            Err(FsiError::InvalidDimension(_))
        ));
        assert!(HalfPlaneMap::new(7).is_err());
    }

    #[test]
    fn half_plane_matches_brute_force_and_covers_plane() {
        for n in (4..=16).step_by(2) {
            let map = HalfPlaneMap::new(n).unwrap();
            assert_eq!(map.len(), brute_force_half_plane_count(n));
            let mut hits = vec![0usize; n * n];
            for &p in map.entries() {
                hits[p.full_index(n)] += 1;
                if !p.is_self_conjugate(n) {
                    hits[p.conjugate(n).full_index(n)] += 1;
                    assert!(map.representative_index(p.conjugate(n)).is_none());
                }
            }
            assert!(hits.iter().all(|&h| h == 1), "n={n}");
            let selfconj = map
                .entries()
                .iter()
                .filter(|p| p.is_self_conjugate(n))
                .count();
            assert_eq!(selfconj, 4);
        }
        for n in (18..=512).step_by(2) {
            assert_eq!(HalfPlaneMap::new(n).unwrap().len(), n * n / 2 + 2);
        }
    }

    #[test]
    fn entries_are_lexicographic() {
        let map = HalfPlaneMap::new(16).unwrap();
        assert!(map.entries().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(map.entry(0), FrequencyPair::DC);
        assert_eq!(map.dc_index(), 0);
    }

    #[test]
    fn dft_of_constant_is_dc_only() {
        let n = 8;
        let c = 0.3;
        let spec = forward_dft(&SceneImage::constant(n, c).unwrap()).unwrap();
        let dc = c * (n * n) as f64;
        assert!((spec.get(FrequencyPair::DC) - dc).norm() < 1e-12);
        for (i, coeff) in spec.coefficients().iter().enumerate().skip(1) {
            assert!(coeff.norm() < 1e-9 * dc, "index {i}");
        }
    }

    #[test]
    fn dft_of_delta_is_flat() {
        let mut f = RealField::zeros(8, 8);
        f.set(0, 0, 1.0);
        let spec = forward_dft_field(&f).unwrap();
        for c in spec.coefficients() {
            assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn dft_matches_naive_oracle() {
        for (n, seed) in [(4, 1u64), (8, 2), (10, 3)] {
            let f = random_field(n, seed);
            let fast = forward_dft_field(&f).unwrap();
            let slow = naive_dft(&f);
            let scale = slow.iter().map(|c| c.norm()).fold(0.0, f64::max);
            for (a, b) in fast.coefficients().iter().zip(&slow) {
                assert!((a - b).norm() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        let f = random_field(16, 7);
        let spec = forward_dft_field(&f).unwrap();
        let back = inverse_dft(&spec).unwrap();
        assert!(back.max_abs_diff(&f) < 1e-10);

        let energy: f64 = f.data().iter().map(|v| v * v).sum();
        let spec_energy: f64 = spec
            .coefficients()
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            / 256.0;
        assert!((energy - spec_energy).abs() <= 1e-9 * energy);
    }

    #[test]
    fn inverse_of_dc_spike_is_unit_field() {
        let n = 8;
        let mut spec = FullSpectrum::zeros(n);
        spec.set(FrequencyPair::DC, Complex64::new((n * n) as f64, 0.0));
        let f = inverse_dft(&spec).unwrap();
        assert!(f.data().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn real_input_gives_conjugate_symmetric_spectrum() {
        let spec = forward_dft_field(&random_field(12, 9)).unwrap();
        assert!(spec.conjugate_asymmetry() < 1e-10);
    }

    #[test]
    fn dft_is_linear() {
        let a = random_field(8, 11);
        let b = random_field(8, 12);
        let (alpha, beta) = (0.7, -1.3);
        let mix = RealField::from_fn(8, 8, |x, y| alpha * a.get(x, y) + beta * b.get(x, y));
        let fa = forward_dft_field(&a).unwrap();
        let fb = forward_dft_field(&b).unwrap();
        let fm = forward_dft_field(&mix).unwrap();
        let scale = fm
            .coefficients()
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        for i in 0..64 {
            let expect = fa.coefficients()[i] * alpha + fb.coefficients()[i] * beta;
            assert!((fm.coefficients()[i] - expect).norm() <= 1e-10 * scale);
        }
    }
}
