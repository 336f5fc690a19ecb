//! Simulated single-pixel acquisition with 3-step phase shifting.
//!
//! Each marked frequency is probed with the three patterns of its phase-shift
//! set. The detector reading is the pattern-weighted sum of the scene, and
//! the readings combine as `(2D₁ − D₂ − D₃) + √3·j·(D₂ − D₃)`. With the
//! crate's unnormalized DFT that combination equals `1.5·C(u, v)`.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{FsiError, Result};
use crate::field::SceneImage;
use crate::io::parse_header_fields;
use crate::masks::{SamplingMask, Strategy};
use crate::patterns::{phase_step, CosineTable, Pattern};
use crate::rng;
use crate::spectrum::{FrequencyPair, HalfPlaneMap};

/// Ratio between an assembled coefficient and the forward DFT coefficient.
pub const COEFFICIENT_SCALE: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorTriple {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl DetectorTriple {
    pub fn new(d1: f64, d2: f64, d3: f64) -> Result<Self> {
        if !(d1.is_finite() && d2.is_finite() && d3.is_finite()) {
            return Err(FsiError::InvalidInput(format!(
                "non-finite detector triple ({d1}, {d2}, {d3})"
            )));
        }
        Ok(Self { d1, d2, d3 })
    }
}

/// Detector noise, added to every reading before the coefficients are formed.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum NoiseModel {
    #[default]
    None,
    /// I.i.d. zero-mean Gaussian with standard deviation `sigma` in detector
    /// units. The draw for a reading is addressed by (frequency, phase step),
    /// not by evaluation order.
    AdditiveGaussian { sigma: f64, seed: u64 },
}

impl NoiseModel {
    pub fn gaussian(sigma: f64, seed: u64) -> Result<Self> {
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(FsiError::OutOfRange {
                name: "sigma",
                value: sigma,
                reason: "noise standard deviation must be finite and >= 0",
            });
        }
        Ok(if sigma == 0.0 {
            NoiseModel::None
        } else {
            NoiseModel::AdditiveGaussian { sigma, seed }
        })
    }

    /// Noise for the reading of `frequency` at phase step `step` (1..=3).
    pub fn sample(&self, n: usize, frequency: FrequencyPair, step: usize) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::AdditiveGaussian { sigma, seed } => {
                let mut r = rng::indexed_stream(seed, frequency.full_index(n) as u64, step as u64);
                let z: f64 = StandardNormal.sample(&mut r);
                sigma * z
            }
        }
    }

    pub fn sigma(&self) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::AdditiveGaussian { sigma, .. } => sigma,
        }
    }
}

fn check_side(scene: &SceneImage, n: usize) -> Result<()> {
    if scene.width() != n || scene.height() != n {
        return Err(FsiError::mismatch(
            format!("{n}x{n}"),
            format!("{}x{}", scene.width(), scene.height()),
        ));
    }
    Ok(())
}

/// Phase step (1..=3) whose nominal phase is closest to `phase`.
fn nearest_step(phase: f64) -> usize {
    let turns = phase.rem_euclid(2.0 * std::f64::consts::PI) * 3.0 / (2.0 * std::f64::consts::PI);
    (turns.round() as usize % 3) + 1
}

/// Single-pixel reading: `Σ scene·pattern` plus one noise draw.
pub fn measure(scene: &SceneImage, pattern: &Pattern, noise: &NoiseModel) -> Result<f64> {
    check_side(scene, pattern.n)?;
    let ideal: f64 = scene
        .pixels()
        .iter()
        .zip(pattern.values.data())
        .map(|(s, p)| s * p)
        .sum();
    Ok(ideal + noise.sample(pattern.n, pattern.frequency, nearest_step(pattern.phase)))
}

/// `(2d₁ − d₂ − d₃) + √3·j·(d₂ − d₃)`.
pub fn assemble_coefficient(triple: DetectorTriple) -> Complex64 {
    let DetectorTriple { d1, d2, d3 } = triple;
    Complex64::new(2.0 * d1 - d2 - d3, 3f64.sqrt() * (d2 - d3))
}

/// One probed frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    /// Rank for Gaussian masks, canonical index otherwise.
    pub label: usize,
    pub index: usize,
    pub frequency: FrequencyPair,
    /// Absent when the spectrum was loaded from a file without readings.
    pub readings: Option<DetectorTriple>,
    pub coefficient: Complex64,
}

/// Assembled coefficients for the marked frequencies of a mask.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialSpectrum {
    n: usize,
    mask: SamplingMask,
    measurements: Vec<Measurement>,
    by_index: Vec<Option<Complex64>>,
}

impl PartialSpectrum {
    /// Pairs a mask with coefficients listed in its acquisition order.
    pub fn from_measurements(mask: SamplingMask, measurements: Vec<Measurement>) -> Result<Self> {
        let n = mask.n();
        let mut by_index = vec![None; n * n / 2 + 2];
        for m in &measurements {
            if !mask.is_marked(m.index) || by_index[m.index].is_some() {
                return Err(FsiError::InvalidInput(format!(
                    "coefficient for unmarked or repeated index {}",
                    m.index
                )));
            }
            if !(m.coefficient.re.is_finite() && m.coefficient.im.is_finite()) {
                return Err(FsiError::InvalidInput(format!(
                    "non-finite coefficient at index {}",
                    m.index
                )));
            }
            by_index[m.index] = Some(m.coefficient);
        }
        if measurements.len() != mask.marked_count() {
            return Err(FsiError::InvalidInput(format!(
                "{} coefficients for {} marked frequencies",
                measurements.len(),
                mask.marked_count()
            )));
        }
        Ok(Self {
            n,
            mask,
            measurements,
            by_index,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mask(&self) -> &SamplingMask {
        &self.mask
    }

    pub fn measurements(&self) -> &[Measurement] {
        &self.measurements
    }

    pub fn coefficient(&self, index: usize) -> Option<Complex64> {
        self.by_index[index]
    }

    /// Detector readings consumed: three per marked frequency.
    pub fn measurement_count(&self) -> usize {
        3 * self.measurements.len()
    }

    /// Measurement log: header comment, then `k,u,v,D1,D2,D3,re,im`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# fsi-spectrum v1 n={} strategy={} eta={} seed={} ordering_sha256={} measurements={}",
            self.n,
            self.mask.strategy,
            self.mask.eta,
            self.mask
                .seed
                .map_or_else(|| "none".to_string(), |s| s.to_string()),
            self.mask.ordering_hash.as_deref().unwrap_or("none"),
            self.measurement_count()
        )?;
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["k", "u", "v", "D1", "D2", "D3", "re", "im"])?;
        for m in &self.measurements {
            let d = |f: fn(&DetectorTriple) -> f64| {
                m.readings
                    .as_ref()
                    .map_or_else(String::new, |t| f(t).to_string())
            };
            w.write_record(&[
                m.label.to_string(),
                m.frequency.u.to_string(),
                m.frequency.v.to_string(),
                d(|t| t.d1),
                d(|t| t.d2),
                d(|t| t.d3),
                m.coefficient.re.to_string(),
                m.coefficient.im.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a measurement log or a plain `k,u,v,re,im` spectrum file.
    pub fn read_csv<R: BufRead>(mut input: R) -> Result<Self> {
        let mut first = String::new();
        input.read_line(&mut first)?;
        let h = parse_header_fields(&first, "fsi-spectrum")?;
        let get = |k: &str| h.get(k).map(String::as_str);
        let n: usize = get("n")
            .ok_or_else(|| FsiError::parse("spectrum", "header lacks n="))?
            .parse()
            .map_err(|e| FsiError::parse("spectrum n", format!("{e}")))?;
        let strategy: Strategy = get("strategy").unwrap_or("full").parse()?;
        let eta: f64 = get("eta")
            .unwrap_or("1")
            .parse()
            .map_err(|e| FsiError::parse("spectrum eta", format!("{e}")))?;
        let map = HalfPlaneMap::new(n)?;

        let mut reader = csv::ReaderBuilder::new().from_reader(input);
        let headers = reader.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h.trim() == name);
        let required = |name: &str| {
            col(name).ok_or_else(|| FsiError::parse("spectrum", format!("missing column {name}")))
        };
        let (ck, cu, cv, cre, cim) = (
            required("k")?,
            required("u")?,
            required("v")?,
            required("re")?,
            required("im")?,
        );
        let cd = [col("D1"), col("D2"), col("D3")];

        let mut measurements = Vec::new();
        let mut entries = Vec::new();
        for (row, rec) in reader.records().enumerate() {
            let rec = rec?;
            let field = |i: usize| -> Result<&str> {
                rec.get(i)
                    .map(str::trim)
                    .ok_or_else(|| FsiError::parse("spectrum", format!("row {} is short", row + 1)))
            };
            let int = |i: usize| -> Result<usize> {
                field(i)?
                    .parse()
                    .map_err(|e| FsiError::parse("spectrum", format!("row {}: {e}", row + 1)))
            };
            let float = |i: usize| -> Result<f64> {
                field(i)?
                    .parse()
                    .map_err(|e| FsiError::parse("spectrum", format!("row {}: {e}", row + 1)))
            };
            let p = FrequencyPair::new(int(cu)?, int(cv)?);
            let index = map.representative_index(p).ok_or_else(|| {
                FsiError::parse("spectrum", format!("({}, {}) is not canonical", p.u, p.v))
            })?;
            let readings = match cd {
                [Some(a), Some(b), Some(c)] if !field(a)?.is_empty() => {
                    Some(DetectorTriple::new(float(a)?, float(b)?, float(c)?)?)
                }
                _ => None,
            };
            let label = int(ck)?;
            entries.push((label, index));
            measurements.push(Measurement {
                label,
                index,
                frequency: p,
                readings,
                coefficient: Complex64::new(float(cre)?, float(cim)?),
            });
        }
        let mut mask = SamplingMask::from_sequence(n, &entries, strategy, eta)?;
        mask.seed = match get("seed") {
            None | Some("none") => None,
            Some(s) => Some(
                s.parse()
                    .map_err(|e| FsiError::parse("spectrum seed", format!("{e}")))?,
            ),
        };
        mask.ordering_hash = match get("ordering_sha256") {
            None | Some("none") => None,
            Some(s) => Some(s.to_string()),
        };
        Self::from_measurements(mask, measurements)
    }
}

/// Probes every marked frequency of `mask` with its phase-shift set.
///
/// Pattern values come from the same cosine tables as
/// [`crate::patterns::fourier_pattern`], so each reading equals
/// [`measure`] applied to the materialized pattern. Frequencies are processed
/// in parallel; every reading is a row-major sum and its noise draw is
/// addressed by (frequency, step), so the result does not depend on the
/// thread count.
pub fn acquire_spectrum(
    scene: &SceneImage,
    mask: &SamplingMask,
    noise: &NoiseModel,
) -> Result<PartialSpectrum> {
    let n = mask.n();
    check_side(scene, n)?;
    let map = HalfPlaneMap::new(n)?;
    let tables = [
        CosineTable::new(n, phase_step(1)),
        CosineTable::new(n, phase_step(2)),
        CosineTable::new(n, phase_step(3)),
    ];
    let entries: Vec<(usize, usize)> = mask.sequence().collect();
    let pixels = scene.pixels();

    let measurements: Vec<Measurement> = entries
        .par_iter()
        .map(|&(label, index)| {
            let f = map.entry(index);
            let mut d = [0.0f64; 3];
            for y in 0..n {
                let row = &pixels[y * n..(y + 1) * n];
                let mut phase = (f.v * y) % n;
                for &s in row {
                    d[0] += s * tables[0].values_at(phase);
                    d[1] += s * tables[1].values_at(phase);
                    d[2] += s * tables[2].values_at(phase);
                    phase += f.u;
                    if phase >= n {
                        phase -= n;
                    }
                }
            }
            for (step, reading) in d.iter_mut().enumerate() {
                *reading += noise.sample(n, f, step + 1);
            }
            let triple = DetectorTriple {
                d1: d[0],
                d2: d[1],
                d3: d[2],
            };
            Measurement {
                label,
                index,
                frequency: f,
                readings: Some(triple),
                coefficient: assemble_coefficient(triple),
            }
        })
        .collect();
    PartialSpectrum::from_measurements(mask.clone(), measurements)
}
