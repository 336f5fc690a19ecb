//! Synthetic USAF-1951 style bar chart and a numeric resolvability test.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{FsiError, Result};
use crate::field::{RealField, SceneImage};

/// Minimum Michelson contrast for a triplet to count as resolved.
pub const RESOLVABLE_CONTRAST: f64 = 0.2;

const MARGIN: usize = 4;

/// Line pairs per unit: `2^(group + (element − 1)/6)`.
pub fn usaf_resolution(group: i32, element: u32) -> Result<f64> {
    if !(1..=6).contains(&element) {
        return Err(FsiError::OutOfRange {
            name: "element",
            value: element as f64,
            reason: "must be in 1..=6",
        });
    }
    Ok(2f64.powf(group as f64 + (element as f64 - 1.0) / 6.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BarOrientation {
    /// Bars run vertically; the modulation is along x.
    Vertical,
    /// Bars run horizontally; the modulation is along y.
    Horizontal,
}

impl fmt::Display for BarOrientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Vertical => "vertical",
            Self::Horizontal => "horizontal",
        })
    }
}

/// Three bars and two gaps of equal width inside a square region of side
/// `5 · bar_width`.
#[derive(Clone, Debug, PartialEq)]
pub struct BarTriplet {
    pub group: i32,
    pub element: u32,
    pub orientation: BarOrientation,
    pub x: usize,
    pub y: usize,
    pub bar_width: usize,
}

impl BarTriplet {
    pub fn new(
        group: i32,
        element: u32,
        orientation: BarOrientation,
        x: usize,
        y: usize,
        bar_width: usize,
    ) -> Result<Self> {
        usaf_resolution(group, element)?;
        if bar_width == 0 {
            return Err(FsiError::InvalidInput(
                "bar width must be at least 1".into(),
            ));
        }
        Ok(Self {
            group,
            element,
            orientation,
            x,
            y,
            bar_width,
        })
    }

    pub fn side(&self) -> usize {
        5 * self.bar_width
    }

    pub fn resolution(&self) -> f64 {
        2f64.powf(self.group as f64 + (self.element as f64 - 1.0) / 6.0)
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.x + self.side() && y >= self.y && y < self.y + self.side()
    }

    /// True when `(x, y)` lies on one of the three bars.
    pub fn on_bar(&self, x: usize, y: usize) -> bool {
        if !self.contains(x, y) {
            return false;
        }
        let offset = match self.orientation {
            BarOrientation::Vertical => x - self.x,
            BarOrientation::Horizontal => y - self.y,
        };
        (offset / self.bar_width).is_multiple_of(2)
    }

    fn fits(&self, width: usize, height: usize) -> bool {
        self.x + self.side() <= width && self.y + self.side() <= height
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Resolvability {
    pub contrast: f64,
    pub three_peaks: bool,
    pub resolvable: bool,
}

/// Profile across the bars (averaged along their length, values clamped to
/// [0, 1]) scored by Michelson contrast between the weakest bar and the
/// brightest gap.
pub fn bar_resolvable(image: &RealField, triplet: &BarTriplet) -> Result<Resolvability> {
    if !triplet.fits(image.width(), image.height()) {
        return Err(FsiError::InvalidInput(format!(
            "triplet region {}x{} at ({}, {}) exceeds the {}x{} image",
            triplet.side(),
            triplet.side(),
            triplet.x,
            triplet.y,
            image.width(),
            image.height()
        )));
    }
    let side = triplet.side();
    let w = triplet.bar_width;
    let profile: Vec<f64> = (0..side)
        .map(|i| {
            let total: f64 = (0..side)
                .map(|j| {
                    let (x, y) = match triplet.orientation {
                        BarOrientation::Vertical => (triplet.x + i, triplet.y + j),
                        BarOrientation::Horizontal => (triplet.x + j, triplet.y + i),
                    };
                    image.get(x, y).clamp(0.0, 1.0)
                })
                .sum();
            total / side as f64
        })
        .collect();
    let band = |b: usize| &profile[b * w..(b + 1) * w];
    let peaks: Vec<f64> = [0, 2, 4]
        .iter()
        .map(|&b| band(b).iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let dips: Vec<f64> = [1, 3]
        .iter()
        .map(|&b| band(b).iter().copied().fold(f64::INFINITY, f64::min))
        .collect();
    let three_peaks = dips[0] < peaks[0].min(peaks[1]) && dips[1] < peaks[1].min(peaks[2]);
    let max = peaks.iter().copied().fold(f64::INFINITY, f64::min);
    let min = dips.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let contrast = if max + min > 0.0 {
        ((max - min) / (max + min)).max(0.0)
    } else {
        0.0
    };
    Ok(Resolvability {
        contrast,
        three_peaks,
        resolvable: three_peaks && contrast >= RESOLVABLE_CONTRAST,
    })
}

/// Rendered chart together with its geometry table.
#[derive(Clone, Debug)]
pub struct UsafChart {
    pub image: SceneImage,
    pub triplets: Vec<BarTriplet>,
    pub scale: f64,
}

/// Both orientations of one element, judged together.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementResolution {
    pub group: i32,
    pub element: u32,
    pub bar_width: usize,
    pub vertical: Resolvability,
    pub horizontal: Resolvability,
}

impl ElementResolution {
    pub fn resolvable(&self) -> bool {
        self.vertical.resolvable && self.horizontal.resolvable
    }

    pub fn contrast(&self) -> f64 {
        self.vertical.contrast.min(self.horizontal.contrast)
    }

    pub fn resolution(&self) -> f64 {
        2f64.powf(self.group as f64 + (self.element as f64 - 1.0) / 6.0)
    }
}

impl UsafChart {
    pub fn n(&self) -> usize {
        self.image.width()
    }

    /// Scores every element, coarsest first.
    pub fn evaluate(&self, image: &RealField) -> Result<Vec<ElementResolution>> {
        let scored: Vec<Resolvability> = self
            .triplets
            .par_iter()
            .map(|t| bar_resolvable(image, t))
            .collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(self.triplets.len() / 2);
        for (pair, score) in self.triplets.chunks(2).zip(scored.chunks(2)) {
            out.push(ElementResolution {
                group: pair[0].group,
                element: pair[0].element,
                bar_width: pair[0].bar_width,
                vertical: score[0],
                horizontal: score[1],
            });
        }
        Ok(out)
    }

    /// Geometry table: `group,element,orientation,x,y,width,height,bar_width_px`.
    pub fn write_geometry_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "group,element,orientation,x,y,width,height,bar_width_px"
        )?;
        for t in &self.triplets {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                t.group,
                t.element,
                t.orientation,
                t.x,
                t.y,
                t.side(),
                t.side(),
                t.bar_width
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Finest element in the unbroken run of resolvable elements starting at the
/// coarsest one. `None` when even the coarsest element fails.
pub fn finest_resolvable(elements: &[ElementResolution]) -> Option<&ElementResolution> {
    elements.iter().take_while(|e| e.resolvable()).last()
}

fn element_width(scale: f64, group: i32, element: u32) -> f64 {
    scale / 2f64.powf(group as f64 + (element as f64 - 1.0) / 6.0)
}

/// Renders bright bars on a dark background.
///
/// Group 0 element 1 has bar width `scale`; element widths shrink by 2^(1/6)
/// per step and are rounded to whole pixels (at least 1). Groups are added
/// while the finest element of the group is still at least one pixel wide.
/// Each group occupies a column; each element a row holding a vertical and a
/// horizontal triplet.
pub fn render_usaf_chart(n: usize, scale: f64) -> Result<UsafChart> {
    crate::spectrum::validate_side(n)?;
    if !scale.is_finite() || scale <= 0.0 {
        return Err(FsiError::OutOfRange {
            name: "scale",
            value: scale,
            reason: "must be positive",
        });
    }
    let mut groups = Vec::new();
    let mut g = 0;
    while element_width(scale, g, 6) >= 1.0 {
        groups.push(g);
        g += 1;
    }
    if groups.len() < 2 {
        return Err(FsiError::OutOfRange {
            name: "scale",
            value: scale,
            reason: "too small to render two groups",
        });
    }
    let widths = |g: i32| -> Vec<usize> {
        (1..=6)
            .map(|e| (element_width(scale, g, e).round() as usize).max(1))
            .collect()
    };

    // Column sizes first so the chart can be centred.
    let mut columns = Vec::new();
    for &g in &groups {
        let ws = widths(g);
        let gap = ws[0].max(2);
        let col_w = 10 * ws[0] + gap;
        let col_h: usize = ws.iter().map(|w| 5 * w).sum::<usize>()
            + ws[..5].iter().map(|w| (*w).max(2)).sum::<usize>();
        columns.push((g, ws, gap, col_w, col_h));
    }
    let col_sep = |i: usize| columns[i].1[0].max(2);
    let total_w: usize =
        columns.iter().map(|c| c.3).sum::<usize>() + (1..columns.len()).map(col_sep).sum::<usize>();
    let total_h = columns.iter().map(|c| c.4).max().unwrap_or(0);
    if total_w + 2 * MARGIN > n || total_h + 2 * MARGIN > n {
        return Err(FsiError::OutOfRange {
            name: "scale",
            value: scale,
            reason: "chart does not fit in the image",
        });
    }

    let mut triplets = Vec::new();
    let mut x0 = (n - total_w) / 2;
    let top = (n - total_h) / 2;
    for (i, (g, ws, gap, col_w, _)) in columns.iter().enumerate() {
        if i > 0 {
            x0 += col_sep(i);
        }
        let mut y = top;
        for (e, &w) in ws.iter().enumerate() {
            let element = e as u32 + 1;
            triplets.push(BarTriplet::new(
                *g,
                element,
                BarOrientation::Vertical,
                x0,
                y,
                w,
            )?);
            triplets.push(BarTriplet::new(
                *g,
                element,
                BarOrientation::Horizontal,
                x0 + 5 * w + gap,
                y,
                w,
            )?);
            y += 5 * w + w.max(2);
        }
        x0 += col_w;
    }

    let field = RealField::from_fn(n, n, |x, y| {
        if triplets.iter().any(|t| t.on_bar(x, y)) {
            1.0
        } else {
            0.0
        }
    });
    Ok(UsafChart {
        image: SceneImage::from_field(field)?,
        triplets,
        scale,
    })
}
