//! Real-valued 2-D grids and the validated scene image built on top of them.
//!
//! All grids are stored row-major: the pixel at column `x`, row `y` lives at
//! `data[y * width + x]`.

use crate::error::{FsiError, Result};

/// A real-valued grid with no range restriction.
///
/// Reconstructions, patterns and intermediate fields use this type; only
/// [`SceneImage`] enforces the `[0, 1]` intensity range.
#[derive(Clone, Debug, PartialEq)]
pub struct RealField {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl RealField {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(FsiError::mismatch(
                format!("{} samples", width * height),
                format!("{} samples", data.len()),
            ));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Builds a field by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    /// Side length of a square field, or an error when the field is not square.
    pub fn side(&self) -> Result<usize> {
        if self.width != self.height {
            return Err(FsiError::InvalidDimension(format!(
                "expected a square field, got {}x{}",
                self.width, self.height
            )));
        }
        Ok(self.width)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn clamped01(&self) -> Self {
        self.map(|v| v.clamp(0.0, 1.0))
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    pub fn same_shape(&self, other: &RealField) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_same_shape(&self, other: &RealField) -> Result<()> {
        if !self.same_shape(other) {
            return Err(FsiError::mismatch(
                format!("{}x{}", self.width, self.height),
                format!("{}x{}", other.width, other.height),
            ));
        }
        Ok(())
    }

    /// Largest absolute pointwise difference. Panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &RealField) -> f64 {
        assert!(self.same_shape(other), "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `‖self − reference‖₂ / ‖reference‖₂`. Panics on shape mismatch.
    pub fn relative_l2_error(&self, reference: &RealField) -> f64 {
        assert!(self.same_shape(reference), "shape mismatch");
        let (num, den) = self
            .data
            .iter()
            .zip(&reference.data)
            .fold((0.0, 0.0), |(n, d), (a, b)| {
                (n + (a - b) * (a - b), d + b * b)
            });
        (num / den).sqrt()
    }

    /// Copies the `w`×`h` block whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self> {
        if x0 + w > self.width || y0 + h > self.height {
            return Err(FsiError::InvalidDimension(format!(
                "crop {w}x{h}+{x0}+{y0} exceeds {}x{}",
                self.width, self.height
            )));
        }
        Ok(Self::from_fn(w, h, |x, y| self.get(x0 + x, y0 + y)))
    }

    /// Halves both dimensions by averaging 2×2 blocks.
    pub fn downsample2(&self) -> Result<Self> {
        if !self.width.is_multiple_of(2) || !self.height.is_multiple_of(2) {
            return Err(FsiError::InvalidDimension(format!(
                "cannot halve {}x{}",
                self.width, self.height
            )));
        }
        Ok(Self::from_fn(self.width / 2, self.height / 2, |x, y| {
            0.25 * (self.get(2 * x, 2 * y)
                + self.get(2 * x + 1, 2 * y)
                + self.get(2 * x, 2 * y + 1)
                + self.get(2 * x + 1, 2 * y + 1))
        }))
    }
}

/// A grayscale scene: even dimensions of at least 4 and intensities in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneImage(RealField);

impl SceneImage {
    pub const MIN_SIDE: usize = 4;

    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        Self::from_field(RealField::new(width, height, pixels)?)
    }

    pub fn from_field(field: RealField) -> Result<Self> {
        for (name, len) in [("width", field.width), ("height", field.height)] {
            if len < Self::MIN_SIDE || len % 2 != 0 {
                return Err(FsiError::InvalidDimension(format!(
                    "{name} {len} must be even and at least {}",
                    Self::MIN_SIDE
                )));
            }
        }
        if let Some(bad) = field.data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(FsiError::OutOfRange {
                name: "pixel",
                value: *bad,
                reason: "scene intensities must lie in [0, 1]",
            });
        }
        Ok(Self(field))
    }

    /// Square scene filled with `value`.
    pub fn constant(n: usize, value: f64) -> Result<Self> {
        Self::from_field(RealField::filled(n, n, value))
    }

    pub fn field(&self) -> &RealField {
        &self.0
    }

    pub fn into_field(self) -> RealField {
        self.0
    }

    pub fn width(&self) -> usize {
        self.0.width
    }

    pub fn height(&self) -> usize {
        self.0.height
    }

    pub fn side(&self) -> Result<usize> {
        self.0.side()
    }

    pub fn pixels(&self) -> &[f64] {
        &self.0.data
    }

    pub fn downsample2(&self) -> Result<Self> {
        Self::from_field(self.0.downsample2()?)
    }
}

impl AsRef<RealField> for SceneImage {
    fn as_ref(&self) -> &RealField {
        &self.0
    }
}
