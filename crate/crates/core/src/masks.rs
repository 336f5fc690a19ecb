//! Sampling masks over the half-plane.
//!
//! The Gaussian random strategy walks the importance order and marks rank `k`
//! when `g(k) = exp{−[(k−1)/k_max]²/σ}` exceeds a uniform draw `r(k)` from
//! `[0, 1)`, with `σ = (2η)²/π`. Circular and radial masks are the
//! deterministic baselines.

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use image::GrayImage;
use rand::Rng;

use crate::error::{FsiError, Result};
use crate::importance::ImportanceOrder;
use crate::io::parse_header_fields;
use crate::rng;
use crate::spectrum::{FrequencyPair, HalfPlaneMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    GaussianRandom,
    Circular,
    Radial,
    Full,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::GaussianRandom => "gaussian",
            Strategy::Circular => "circular",
            Strategy::Radial => "radial",
            Strategy::Full => "full",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = FsiError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "gaussian-random" => Ok(Strategy::GaussianRandom),
            "circular" => Ok(Strategy::Circular),
            "radial" => Ok(Strategy::Radial),
            "full" => Ok(Strategy::Full),
            other => Err(FsiError::InvalidInput(format!(
                "unknown strategy '{other}'"
            ))),
        }
    }
}

/// Spread of the Gaussian for a sampling ratio `eta` in `(0, 0.5)`.
pub fn sigma_for_ratio(eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < 0.5) {
        return Err(FsiError::OutOfRange {
            name: "eta",
            value: eta,
            reason: "the Gaussian strategy requires 0 < eta < 0.5",
        });
    }
    Ok((2.0 * eta).powi(2) / std::f64::consts::PI)
}

/// `g(k)` for 1-based rank `k`.
pub fn gaussian_value(k: usize, k_max: usize, sigma: f64) -> Result<f64> {
    if k == 0 || k > k_max {
        return Err(FsiError::OutOfRange {
            name: "k",
            value: k as f64,
            reason: "rank must lie in [1, k_max]",
        });
    }
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(FsiError::OutOfRange {
            name: "sigma",
            value: sigma,
            reason: "sigma must be positive",
        });
    }
    let t = (k - 1) as f64 / k_max as f64;
    Ok((-(t * t) / sigma).exp())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianParams {
    pub sigma: f64,
    pub k_max: usize,
    pub eta: f64,
}

impl GaussianParams {
    pub fn new(eta: f64, k_max: usize) -> Result<Self> {
        Ok(Self {
            sigma: sigma_for_ratio(eta)?,
            k_max,
            eta,
        })
    }

    pub fn value(&self, k: usize) -> f64 {
        let t = (k - 1) as f64 / self.k_max as f64;
        (-(t * t) / self.sigma).exp()
    }
}

/// A set of marked half-plane frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingMask {
    n: usize,
    marked: Vec<bool>,
    /// Marked half-plane indices in acquisition order.
    sequence: Vec<usize>,
    /// Label written next to each sequence entry: the importance rank for
    /// Gaussian masks, the 1-based canonical index otherwise.
    labels: Vec<usize>,
    pub strategy: Strategy,
    pub eta: f64,
    pub seed: Option<u64>,
    pub ordering_hash: Option<String>,
}

impl SamplingMask {
    /// Mask from per-index marks; the sequence follows canonical order.
    pub fn from_marks(n: usize, marked: Vec<bool>, strategy: Strategy, eta: f64) -> Result<Self> {
        let expected = n * n / 2 + 2;
        if marked.len() != expected {
            return Err(FsiError::mismatch(expected, marked.len()));
        }
        let sequence: Vec<usize> = (0..marked.len()).filter(|&i| marked[i]).collect();
        let labels = sequence.iter().map(|&i| i + 1).collect();
        Ok(Self {
            n,
            marked,
            sequence,
            labels,
            strategy,
            eta,
            seed: None,
            ordering_hash: None,
        })
    }

    /// Mask from an explicit acquisition sequence of `(label, index)` pairs.
    pub fn from_sequence(
        n: usize,
        entries: &[(usize, usize)],
        strategy: Strategy,
        eta: f64,
    ) -> Result<Self> {
        let len = n * n / 2 + 2;
        let mut marked = vec![false; len];
        for &(_, idx) in entries {
            if idx >= len || marked[idx] {
                return Err(FsiError::InvalidInput(format!(
                    "half-plane index {idx} is out of range or repeated"
                )));
            }
            marked[idx] = true;
        }
        Ok(Self {
            n,
            marked,
            sequence: entries.iter().map(|e| e.1).collect(),
            labels: entries.iter().map(|e| e.0).collect(),
            strategy,
            eta,
            seed: None,
            ordering_hash: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn marked(&self) -> &[bool] {
        &self.marked
    }

    pub fn is_marked(&self, index: usize) -> bool {
        self.marked[index]
    }

    /// `(label, half-plane index)` in acquisition order.
    pub fn sequence(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.labels
            .iter()
            .copied()
            .zip(self.sequence.iter().copied())
    }

    pub fn marked_count(&self) -> usize {
        self.sequence.len()
    }

    /// Marked count over all `n²` coefficients.
    pub fn filling_factor(&self) -> f64 {
        self.marked_count() as f64 / (self.n * self.n) as f64
    }

    /// Twice the filling factor.
    pub fn sampling_ratio(&self) -> f64 {
        2.0 * self.filling_factor()
    }

    /// Conjugate-symmetric full-plane mask, indexed `v * n + u`.
    pub fn unfold(&self) -> Vec<bool> {
        let map = HalfPlaneMap::new(self.n).expect("mask side validated");
        let mut full = vec![false; self.n * self.n];
        for &idx in &self.sequence {
            let p = map.entry(idx);
            full[p.full_index(self.n)] = true;
            full[p.conjugate(self.n).full_index(self.n)] = true;
        }
        full
    }

    /// Full-plane rendering with the zero frequency at the image centre
    /// (pixel `(n/2, n/2)`); white marks a sampled coefficient.
    pub fn to_image(&self) -> GrayImage {
        let n = self.n;
        let full = self.unfold();
        GrayImage::from_fn(n as u32, n as u32, |x, y| {
            let u = (x as usize + n / 2) % n;
            let v = (y as usize + n / 2) % n;
            image::Luma([if full[v * n + u] { 255 } else { 0 }])
        })
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        crate::io::write_gray8(path, &self.to_image())
    }

    /// Sidecar CSV: a `#` header with the mask metadata, then
    /// `k_rank_or_index,u,v` rows in acquisition order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let map = HalfPlaneMap::new(self.n)?;
        writeln!(out, "{}", self.header_line())?;
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["k_rank_or_index", "u", "v"])?;
        for (label, idx) in self.sequence() {
            let p = map.entry(idx);
            w.write_record(&[label.to_string(), p.u.to_string(), p.v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub(crate) fn header_line(&self) -> String {
        format!(
            "# fsi-mask v1 n={} strategy={} eta={} seed={} ordering_sha256={} marked={}",
            self.n,
            self.strategy,
            self.eta,
            self.seed
                .map_or_else(|| "none".to_string(), |s| s.to_string()),
            self.ordering_hash.as_deref().unwrap_or("none"),
            self.marked_count()
        )
    }

    pub fn read_csv<R: BufRead>(mut input: R) -> Result<Self> {
        let mut first = String::new();
        input.read_line(&mut first)?;
        let h = parse_header_fields(&first, "fsi-mask")?;
        let field = |k: &str| {
            h.get(k)
                .cloned()
                .ok_or_else(|| FsiError::parse("mask", format!("header lacks {k}=")))
        };
        let n: usize = field("n")?
            .parse()
            .map_err(|e| FsiError::parse("mask n", format!("{e}")))?;
        let strategy: Strategy = field("strategy")?.parse()?;
        let eta: f64 = field("eta")?
            .parse()
            .map_err(|e| FsiError::parse("mask eta", format!("{e}")))?;
        let seed = match field("seed")?.as_str() {
            "none" => None,
            s => Some(
                s.parse()
                    .map_err(|e| FsiError::parse("mask seed", format!("{e}")))?,
            ),
        };
        let ordering_hash = match field("ordering_sha256")?.as_str() {
            "none" => None,
            s => Some(s.to_string()),
        };
        let map = HalfPlaneMap::new(n)?;
        let mut marked = vec![false; map.len()];
        let mut sequence = Vec::new();
        let mut labels = Vec::new();
        let mut reader = csv::ReaderBuilder::new().from_reader(input);
        for rec in reader.records() {
            let rec = rec?;
            let num = |i: usize| -> Result<usize> {
                rec.get(i)
                    .ok_or_else(|| FsiError::parse("mask", "short row"))?
                    .trim()
                    .parse()
                    .map_err(|e| FsiError::parse("mask", format!("{e}")))
            };
            let p = FrequencyPair::new(num(1)?, num(2)?);
            let idx = map.representative_index(p).ok_or_else(|| {
                FsiError::parse("mask", format!("({}, {}) is not canonical", p.u, p.v))
            })?;
            if marked[idx] {
                return Err(FsiError::parse(
                    "mask",
                    format!("duplicate ({}, {})", p.u, p.v),
                ));
            }
            marked[idx] = true;
            sequence.push(idx);
            labels.push(num(0)?);
        }
        Ok(Self {
            n,
            marked,
            sequence,
            labels,
            strategy,
            eta,
            seed,
            ordering_hash,
        })
    }
}

/// Target count `m = round(η·(n²/2 + 2))`, at least 1.
pub fn target_count(n: usize, eta: f64) -> usize {
    let k_max = n * n / 2 + 2;
    ((eta * k_max as f64).round() as usize).clamp(1, k_max)
}

fn check_baseline_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(FsiError::OutOfRange {
            name: "eta",
            value: eta,
            reason: "baseline strategies require 0 < eta <= 1",
        });
    }
    Ok(())
}

/// Gaussian random sampling over an importance order.
///
/// Draws `r(k)` in ascending rank from `ChaCha8Rng::seed_from_u64(seed)`, one
/// `f64` in `[0, 1)` per rank; rank `k` is marked iff `g(k) > r(k)`.
pub fn gaussian_random_mask(order: &ImportanceOrder, eta: f64, seed: u64) -> Result<SamplingMask> {
    let k_max = order.len();
    let params = GaussianParams::new(eta, k_max)?;
    let mut rng = rng::stream(seed);
    let mut marked = vec![false; k_max];
    let mut sequence = Vec::new();
    let mut labels = Vec::new();
    for k in 1..=k_max {
        let r: f64 = rng.random();
        if params.value(k) > r {
            let idx = order.index_at_rank(k);
            marked[idx] = true;
            sequence.push(idx);
            labels.push(k);
        }
    }
    Ok(SamplingMask {
        n: order.n(),
        marked,
        sequence,
        labels,
        strategy: Strategy::GaussianRandom,
        eta,
        seed: Some(seed),
        ordering_hash: Some(order.content_hash().to_string()),
    })
}

/// The `m` half-plane frequencies closest to the spectrum centre.
pub fn circular_mask(n: usize, eta: f64) -> Result<SamplingMask> {
    check_baseline_eta(eta)?;
    let map = HalfPlaneMap::new(n)?;
    let m = target_count(n, eta);
    let radii: Vec<f64> = map.entries().iter().map(|p| p.radius(n)).collect();
    let mut idx: Vec<usize> = (0..map.len()).collect();
    idx.sort_by(|&a, &b| radii[a].total_cmp(&radii[b]).then(a.cmp(&b)));
    let mut marked = vec![false; map.len()];
    for &i in &idx[..m] {
        marked[i] = true;
    }
    SamplingMask::from_marks(n, marked, Strategy::Circular, eta)
}

/// Full-plane mask of `lines` equiangular lines through the centre, at angles
/// `lπ/lines`. A frequency is on a line when its perpendicular distance, in
/// centered coordinates, is below ½.
pub fn radial_lines_full_plane(n: usize, lines: usize) -> Vec<bool> {
    assert!(lines >= 1);
    let mut full = vec![false; n * n];
    let step = std::f64::consts::PI / lines as f64;
    for v in 0..n {
        for u in 0..n {
            let (a, b) = FrequencyPair::new(u, v).centered(n);
            let (a, b) = (a as f64, b as f64);
            let on_line = if a == 0.0 && b == 0.0 {
                true
            } else {
                let alpha = b.atan2(a).rem_euclid(std::f64::consts::PI);
                let l = ((alpha / step).round() as usize) % lines;
                let theta = l as f64 * step;
                (b * theta.cos() - a * theta.sin()).abs() < 0.5
            };
            full[v * n + u] = on_line;
        }
    }
    full
}

/// Radial baseline: the fewest lines whose folded coverage reaches `m`, then
/// the farthest members are dropped until exactly `m` remain.
pub fn radial_mask(n: usize, eta: f64) -> Result<SamplingMask> {
    check_baseline_eta(eta)?;
    let map = HalfPlaneMap::new(n)?;
    let m = target_count(n, eta);
    let limit = 8 * n * n;
    let mut lines = 1;
    let mut marked = loop {
        let folded = fold_to_half_plane(&radial_lines_full_plane(n, lines), n)?;
        if folded.iter().filter(|&&b| b).count() >= m {
            break folded;
        }
        lines += 1;
        if lines > limit {
            return Err(FsiError::NumericalFailure(format!(
                "no radial line count up to {limit} covers {m} frequencies"
            )));
        }
    };
    let mut members: Vec<usize> = (0..map.len()).filter(|&i| marked[i]).collect();
    let excess = members.len() - m;
    members.sort_by(|&a, &b| {
        map.entry(b)
            .radius(n)
            .total_cmp(&map.entry(a).radius(n))
            .then(b.cmp(&a))
    });
    for &i in &members[..excess] {
        marked[i] = false;
    }
    log::debug!("radial mask n={n} eta={eta}: {lines} lines, {m} marked");
    SamplingMask::from_marks(n, marked, Strategy::Radial, eta)
}

pub fn full_mask(n: usize) -> Result<SamplingMask> {
    let map = HalfPlaneMap::new(n)?;
    SamplingMask::from_marks(n, vec![true; map.len()], Strategy::Full, 1.0)
}

/// A half-plane index is marked iff its representative or its conjugate
/// partner is set in the full-plane field.
pub fn fold_to_half_plane(full: &[bool], n: usize) -> Result<Vec<bool>> {
    if full.len() != n * n {
        return Err(FsiError::mismatch(n * n, full.len()));
    }
    let map = HalfPlaneMap::new(n)?;
    Ok(map
        .entries()
        .iter()
        .map(|&p| full[p.full_index(n)] || full[p.conjugate(n).full_index(n)])
        .collect())
}
