//! Fourier basis patterns, 3-step phase-shift sets and the binary export path.

use std::f64::consts::PI;

use crate::error::{FsiError, Result};
use crate::field::RealField;
use crate::spectrum::{validate_side, FrequencyPair};

/// Initial phase of step `i` (1-based) in a 3-step set: `2(i−1)π/3`.
pub fn phase_step(i: usize) -> f64 {
    assert!((1..=3).contains(&i), "phase step must be 1, 2 or 3");
    2.0 * (i - 1) as f64 * PI / 3.0
}

/// A grayscale sinusoidal pattern `½ + ½·cos(2π(ux+vy)/n + φ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Pattern {
    pub n: usize,
    pub phase: f64,
    pub frequency: FrequencyPair,
    pub values: RealField,
}

/// Three patterns of one frequency at phases 0, 2π/3 and 4π/3.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseShiftSet {
    pub frequency: FrequencyPair,
    pub patterns: [Pattern; 3],
}

/// Lookup of `½ + ½·cos(2πm/n + φ)` for `m` in `0..n`.
///
/// `(ux + vy) mod n` indexes the table, which keeps the argument of the cosine
/// in `[0, 2π)` regardless of frequency.
#[derive(Clone, Debug)]
pub(crate) struct CosineTable {
    n: usize,
    values: Vec<f64>,
}

impl CosineTable {
    pub(crate) fn new(n: usize, phase: f64) -> Self {
        let values = (0..n)
            .map(|m| 0.5 + 0.5 * (2.0 * PI * m as f64 / n as f64 + phase).cos())
            .collect();
        Self { n, values }
    }

    #[inline]
    pub(crate) fn at(&self, frequency: FrequencyPair, x: usize, y: usize) -> f64 {
        self.values[(frequency.u * x + frequency.v * y) % self.n]
    }

    #[inline]
    pub(crate) fn values_at(&self, m: usize) -> f64 {
        self.values[m]
    }
}

pub fn fourier_pattern(n: usize, frequency: FrequencyPair, phase: f64) -> Result<Pattern> {
    validate_side(n)?;
    frequency.validate(n)?;
    if !phase.is_finite() {
        return Err(FsiError::InvalidInput(format!(
            "phase {phase} is not finite"
        )));
    }
    let table = CosineTable::new(n, phase);
    let values = RealField::from_fn(n, n, |x, y| table.at(frequency, x, y));
    Ok(Pattern {
        n,
        phase,
        frequency,
        values,
    })
}

pub fn phase_shift_set(n: usize, frequency: FrequencyPair) -> Result<PhaseShiftSet> {
    Ok(PhaseShiftSet {
        frequency,
        patterns: [
            fourier_pattern(n, frequency, phase_step(1))?,
            fourier_pattern(n, frequency, phase_step(2))?,
            fourier_pattern(n, frequency, phase_step(3))?,
        ],
    })
}

/// A dithered binary pattern, twice the side length of its source.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryPattern {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl BinaryPattern {
    pub const MAGIC: &'static [u8; 4] = b"FSIB";

    pub fn mean(&self) -> f64 {
        self.bits.iter().filter(|&&b| b).count() as f64 / self.bits.len() as f64
    }

    /// `FSIB` magic, little-endian `u16` width and height, then the bits
    /// row-major, most significant bit first, zero-padded to a whole byte.
    pub fn to_packed(&self) -> Result<Vec<u8>> {
        let (w, h) = (
            u16::try_from(self.width)
                .map_err(|_| FsiError::InvalidDimension(format!("width {}", self.width)))?,
            u16::try_from(self.height)
                .map_err(|_| FsiError::InvalidDimension(format!("height {}", self.height)))?,
        );
        let mut out = Vec::with_capacity(8 + self.bits.len().div_ceil(8));
        out.extend_from_slice(Self::MAGIC);
        out.extend_from_slice(&w.to_le_bytes());
        out.extend_from_slice(&h.to_le_bytes());
        for chunk in self.bits.chunks(8) {
            let mut byte = 0u8;
            for (i, &bit) in chunk.iter().enumerate() {
                if bit {
                    byte |= 0x80 >> i;
                }
            }
            out.push(byte);
        }
        Ok(out)
    }

    pub fn from_packed(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 || &bytes[..4] != Self::MAGIC {
            return Err(FsiError::parse("binary pattern", "missing FSIB header"));
        }
        let width = u16::from_le_bytes([bytes[4], bytes[5]]) as usize;
        let height = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
        let count = width * height;
        let body = &bytes[8..];
        if body.len() != count.div_ceil(8) {
            return Err(FsiError::parse(
                "binary pattern",
                format!(
                    "expected {} payload bytes, got {}",
                    count.div_ceil(8),
                    body.len()
                ),
            ));
        }
        let bits = (0..count)
            .map(|i| body[i / 8] & (0x80 >> (i % 8)) != 0)
            .collect();
        Ok(Self {
            width,
            height,
            bits,
        })
    }
}

fn catmull_rom(t: f64) -> f64 {
    const A: f64 = -0.5;
    let t = t.abs();
    if t <= 1.0 {
        ((A + 2.0) * t - (A + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((A * t - 5.0 * A) * t + 8.0 * A) * t - 4.0 * A
    } else {
        0.0
    }
}

/// Bicubic (Catmull–Rom) ×2 upsampling with clamp-to-edge sampling.
///
/// Output pixel centres are aligned with input pixel centres, so output index
/// `X` samples source coordinate `(X + ½)/2 − ½`.
pub fn upsample2_bicubic(src: &RealField) -> RealField {
    let (w, h) = (src.width(), src.height());
    // Each output coordinate has the same four taps in every row/column.
    let taps = |len: usize| -> Vec<([usize; 4], [f64; 4])> {
        (0..2 * len)
            .map(|out| {
                let s = (out as f64 + 0.5) / 2.0 - 0.5;
                let base = s.floor();
                let mut idx = [0usize; 4];
                let mut wts = [0.0; 4];
                for k in 0..4 {
                    let pos = base as i64 - 1 + k as i64;
                    idx[k] = pos.clamp(0, len as i64 - 1) as usize;
                    wts[k] = catmull_rom(s - pos as f64);
                }
                (idx, wts)
            })
            .collect()
    };
    let tx = taps(w);
    let ty = taps(h);

    // Horizontal pass.
    let mut tmp = RealField::zeros(2 * w, h);
    for y in 0..h {
        for (x, (idx, wts)) in tx.iter().enumerate() {
            let v: f64 = (0..4).map(|k| wts[k] * src.get(idx[k], y)).sum();
            tmp.set(x, y, v);
        }
    }
    // Vertical pass.
    let mut out = RealField::zeros(2 * w, 2 * h);
    for (y, (idx, wts)) in ty.iter().enumerate() {
        for x in 0..2 * w {
            let v: f64 = (0..4).map(|k| wts[k] * tmp.get(x, idx[k])).sum();
            out.set(x, y, v);
        }
    }
    out
}

/// Floyd–Steinberg error diffusion with a plain left-to-right raster scan and
/// a threshold of ½.
pub fn floyd_steinberg(field: &RealField) -> BinaryPattern {
    let (w, h) = (field.width(), field.height());
    let mut work = field.data().to_vec();
    let mut bits = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let old = work[i];
            let on = old >= 0.5;
            bits[i] = on;
            let err = old - if on { 1.0 } else { 0.0 };
            if x + 1 < w {
                work[i + 1] += err * 7.0 / 16.0;
            }
            if y + 1 < h {
                if x > 0 {
                    work[i + w - 1] += err * 3.0 / 16.0;
                }
                work[i + w] += err * 5.0 / 16.0;
                if x + 1 < w {
                    work[i + w + 1] += err * 1.0 / 16.0;
                }
            }
        }
    }
    BinaryPattern {
        width: w,
        height: h,
        bits,
    }
}

/// Upsample ×2 bicubically, clamp to `[0, 1]`, then dither to a binary pattern.
pub fn binarize_pattern(pattern: &Pattern) -> BinaryPattern {
    let up = upsample2_bicubic(&pattern.values).clamped01();
    floyd_steinberg(&up)
}
