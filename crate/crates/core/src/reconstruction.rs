//! Image reconstruction from a partial spectrum.
//!
//! Two routes are provided: zero-filled inverse transform, and total-variation
//! minimization constrained to agree with every sampled coefficient.
//!
//! The TV route solves
//!
//! ```text
//!   minimize   Σ_pixels √((∂ₓx)² + (∂ᵧx)²)
//!   subject to F(x)(ω) = b(ω) for every sampled ω
//! ```
//!
//! with periodic forward differences, by ADMM on the splitting `d = ∇x`.
//! Each iteration shrinks `∇x + w` toward zero (the TV proximal step) and
//! then solves the least-squares fit of `∇x` to `d − w` over the constraint
//! set. Because periodic differences are diagonal in the Fourier domain, that
//! fit has a closed form: sampled coefficients are overwritten with the
//! measurements and the rest are `F(∇ᵀ(d − w))/|K|²`. Every primal iterate is
//! therefore feasible up to round-off.
//!
//! ADMM iterates are not monotone in TV, so the solver keeps the best
//! feasible iterate seen so far; the objective trace records the TV of that
//! iterate and never increases.

use num_complex::Complex64;

use crate::acquisition::{PartialSpectrum, COEFFICIENT_SCALE};
use crate::error::{FsiError, Result};
use crate::field::RealField;
use crate::spectrum::{Dft2, FullSpectrum, HalfPlaneMap};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverParams {
    pub max_iterations: usize,
    /// Bound on the relative residual of the sampled coefficients.
    pub fidelity_tolerance: f64,
    /// Shrinkage threshold of the TV proximal step; the ADMM penalty is its
    /// reciprocal.
    pub step_size: f64,
    /// Early stop when the best objective improves by less than this
    /// fraction over [`SolverParams::STALL_WINDOW`] iterations.
    pub objective_stall_tolerance: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            max_iterations: 300,
            fidelity_tolerance: 1e-8,
            step_size: 0.25,
            objective_stall_tolerance: 1e-6,
        }
    }
}

impl SolverParams {
    pub const STALL_WINDOW: usize = 10;

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(FsiError::InvalidInput("max_iterations must be >= 1".into()));
        }
        for (name, value) in [
            ("fidelity_tolerance", self.fidelity_tolerance),
            ("step_size", self.step_size),
            ("objective_stall_tolerance", self.objective_stall_tolerance),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(FsiError::OutOfRange {
                    name,
                    value,
                    reason: "solver tolerances and step size must be positive",
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionResult {
    pub image: RealField,
    pub iterations_used: usize,
    /// TV of the reported iterate: entry 0 is the zero-filled start, then one
    /// entry per iteration.
    pub objective_trace: Vec<f64>,
    pub final_fidelity_residual: f64,
    /// Largest imaginary part discarded when returning to the pixel domain.
    pub max_imaginary_residue: f64,
    /// True when the run ended on the stall criterion.
    pub stalled: bool,
}

/// Measured coefficients unfolded onto the full plane, in scene units.
///
/// Each assembled coefficient is divided by 1.5, placed at its frequency and
/// conjugated onto the partner; self-conjugate points keep the real part only.
#[derive(Clone, Debug)]
pub struct FourierConstraint {
    n: usize,
    sampled: Vec<bool>,
    target: Vec<Complex64>,
}

impl FourierConstraint {
    pub fn from_partial(partial: &PartialSpectrum) -> Result<Self> {
        let n = partial.n();
        let map = HalfPlaneMap::new(n)?;
        let mut sampled = vec![false; n * n];
        let mut target = vec![Complex64::new(0.0, 0.0); n * n];
        for m in partial.measurements() {
            let p = map.entry(m.index);
            let mut c = m.coefficient / COEFFICIENT_SCALE;
            if p.is_self_conjugate(n) {
                c.im = 0.0;
            }
            let (i, j) = (p.full_index(n), p.conjugate(n).full_index(n));
            sampled[i] = true;
            sampled[j] = true;
            target[i] = c;
            target[j] = c.conj();
        }
        Ok(Self { n, sampled, target })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_sampled(&self, full_index: usize) -> bool {
        self.sampled[full_index]
    }

    pub fn zero_filled(&self) -> FullSpectrum {
        FullSpectrum::new(self.n, self.target.clone()).expect("n*n coefficients")
    }

    /// `‖F(x)[Ω] − b[Ω]‖ / ‖b[Ω]‖` over the sampled set `Ω`.
    pub fn residual(&self, spectrum: &[Complex64]) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for ((s, t), &sampled) in spectrum.iter().zip(&self.target).zip(&self.sampled) {
            if sampled {
                num += (s - t).norm_sqr();
                den += t.norm_sqr();
            }
        }
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }
}

/// Zero-filled inverse transform ("IFT2").
pub fn reconstruct_ift(partial: &PartialSpectrum) -> Result<RealField> {
    let constraint = FourierConstraint::from_partial(partial)?;
    Dft2::new(partial.n())?.inverse_real(&constraint.zero_filled())
}

/// Isotropic total variation with periodic forward differences.
pub fn total_variation(x: &RealField) -> f64 {
    let (w, h) = (x.width(), x.height());
    let data = x.data();
    let mut tv = 0.0;
    for y in 0..h {
        let down = if y + 1 == h { 0 } else { (y + 1) * w };
        for xx in 0..w {
            let here = data[y * w + xx];
            let right = data[y * w + if xx + 1 == w { 0 } else { xx + 1 }];
            let below = data[down + xx];
            let (gx, gy) = (right - here, below - here);
            tv += (gx * gx + gy * gy).sqrt();
        }
    }
    tv
}

/// Periodic forward-difference gradient.
fn gradient(x: &[f64], n: usize, gx: &mut [f64], gy: &mut [f64]) {
    for y in 0..n {
        let down = if y + 1 == n { 0 } else { (y + 1) * n };
        for xx in 0..n {
            let i = y * n + xx;
            let right = y * n + if xx + 1 == n { 0 } else { xx + 1 };
            gx[i] = x[right] - x[i];
            gy[i] = x[down + xx] - x[i];
        }
    }
}

/// Adjoint of [`gradient`]: `(∇ᵀz)(i) = zₓ(i − eₓ) − zₓ(i) + zᵧ(i − eᵧ) − zᵧ(i)`.
fn gradient_adjoint(zx: &[f64], zy: &[f64], n: usize, out: &mut [Complex64]) {
    for y in 0..n {
        let up = if y == 0 { (n - 1) * n } else { (y - 1) * n };
        for xx in 0..n {
            let i = y * n + xx;
            let left = y * n + if xx == 0 { n - 1 } else { xx - 1 };
            let v = zx[left] - zx[i] + zy[up + xx] - zy[i];
            out[i] = Complex64::new(v, 0.0);
        }
    }
}

/// Stepwise constrained-TV solver.
pub struct CsSolver {
    n: usize,
    params: SolverParams,
    dft: Dft2,
    constraint: FourierConstraint,
    /// Eigenvalues of ∇ᵀ∇ per full-plane frequency.
    laplacian: Vec<f64>,
    x: Vec<f64>,
    dx: Vec<f64>,
    dy: Vec<f64>,
    wx: Vec<f64>,
    wy: Vec<f64>,
    gx: Vec<f64>,
    gy: Vec<f64>,
    buf: Vec<Complex64>,
    best: Vec<f64>,
    best_tv: f64,
    last_tv: f64,
    max_imaginary: f64,
    iterations: usize,
}

impl std::fmt::Debug for CsSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CsSolver")
            .field("n", &self.n)
            .field("iterations", &self.iterations)
            .field("best_tv", &self.best_tv)
            .finish()
    }
}

impl CsSolver {
    pub fn new(partial: &PartialSpectrum, params: SolverParams) -> Result<Self> {
        params.validate()?;
        let n = partial.n();
        let constraint = FourierConstraint::from_partial(partial)?;
        if !constraint.is_sampled(0) {
            return Err(FsiError::InvalidInput(
                "TV reconstruction needs the DC coefficient to be sampled".into(),
            ));
        }
        let mut dft = Dft2::new(n)?;
        let mut buf = constraint.target.clone();
        dft.inverse_in_place(&mut buf);
        let max_imaginary = buf.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
        let x: Vec<f64> = buf.iter().map(|c| c.re).collect();

        let eig: Vec<f64> = (0..n)
            .map(|k| 2.0 - 2.0 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos())
            .collect();
        let laplacian = (0..n * n).map(|i| eig[i % n] + eig[i / n]).collect();

        let mut dx = vec![0.0; n * n];
        let mut dy = vec![0.0; n * n];
        gradient(&x, n, &mut dx, &mut dy);
        let tv = tv_from_gradient(&dx, &dy);
        if !tv.is_finite() {
            return Err(FsiError::NumericalFailure(
                "non-finite initial iterate".into(),
            ));
        }
        Ok(Self {
            n,
            params,
            dft,
            constraint,
            laplacian,
            best: x.clone(),
            x,
            dx,
            dy,
            wx: vec![0.0; n * n],
            wy: vec![0.0; n * n],
            gx: vec![0.0; n * n],
            gy: vec![0.0; n * n],
            buf,
            best_tv: tv,
            last_tv: tv,
            max_imaginary,
            iterations: 0,
        })
    }

    /// Current ADMM primal iterate (always feasible).
    pub fn iterate(&self) -> RealField {
        RealField::new(self.n, self.n, self.x.clone()).expect("n*n pixels")
    }

    /// Best feasible iterate so far.
    pub fn best(&self) -> RealField {
        RealField::new(self.n, self.n, self.best.clone()).expect("n*n pixels")
    }

    pub fn best_objective(&self) -> f64 {
        self.best_tv
    }

    /// TV of the current ADMM iterate.
    pub fn current_objective(&self) -> f64 {
        self.last_tv
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn max_imaginary_residue(&self) -> f64 {
        self.max_imaginary
    }

    /// Relative residual of the sampled coefficients of `x`.
    pub fn fidelity_residual(&mut self, x: &RealField) -> f64 {
        let mut buf: Vec<Complex64> = x.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.dft.forward_in_place(&mut buf);
        self.constraint.residual(&buf)
    }

    /// One ADMM iteration: TV shrinkage, then the constrained least-squares
    /// fit in the Fourier domain.
    pub fn step(&mut self) -> Result<()> {
        let n = self.n;
        let tau = self.params.step_size;

        // d = shrink(∇x + w, τ)
        gradient(&self.x, n, &mut self.gx, &mut self.gy);
        for i in 0..n * n {
            let vx = self.gx[i] + self.wx[i];
            let vy = self.gy[i] + self.wy[i];
            let mag = (vx * vx + vy * vy).sqrt();
            let keep = if mag > tau { 1.0 - tau / mag } else { 0.0 };
            self.dx[i] = keep * vx;
            self.dy[i] = keep * vy;
        }

        // x = argmin_{F(x)[Ω]=b} ‖∇x − (d − w)‖²
        for i in 0..n * n {
            self.gx[i] = self.dx[i] - self.wx[i];
            self.gy[i] = self.dy[i] - self.wy[i];
        }
        gradient_adjoint(&self.gx, &self.gy, n, &mut self.buf);
        self.dft.forward_in_place(&mut self.buf);
        for i in 0..n * n {
            self.buf[i] = if self.constraint.sampled[i] {
                self.constraint.target[i]
            } else {
                self.buf[i] / self.laplacian[i]
            };
        }
        self.dft.inverse_in_place(&mut self.buf);
        let mut imag: f64 = 0.0;
        for (x, c) in self.x.iter_mut().zip(&self.buf) {
            *x = c.re;
            imag = imag.max(c.im.abs());
        }
        self.max_imaginary = self.max_imaginary.max(imag);

        // w += ∇x − d
        gradient(&self.x, n, &mut self.gx, &mut self.gy);
        for i in 0..n * n {
            self.wx[i] += self.gx[i] - self.dx[i];
            self.wy[i] += self.gy[i] - self.dy[i];
        }

        let tv = tv_from_gradient(&self.gx, &self.gy);
        if !tv.is_finite() {
            return Err(FsiError::NumericalFailure(format!(
                "non-finite objective at iteration {}",
                self.iterations + 1
            )));
        }
        self.last_tv = tv;
        if tv < self.best_tv {
            self.best_tv = tv;
            self.best.copy_from_slice(&self.x);
        }
        self.iterations += 1;
        Ok(())
    }

    /// Iterates until `max_iterations` or the stall criterion.
    pub fn run(mut self) -> Result<ReconstructionResult> {
        let mut trace = Vec::with_capacity(self.params.max_iterations + 1);
        trace.push(self.best_tv);
        let mut stalled = false;
        while self.iterations < self.params.max_iterations {
            self.step()?;
            trace.push(self.best_tv);
            let k = trace.len() - 1;
            if k >= SolverParams::STALL_WINDOW {
                let before = trace[k - SolverParams::STALL_WINDOW];
                let decrease = (before - self.best_tv) / before.max(f64::MIN_POSITIVE);
                if decrease < self.params.objective_stall_tolerance {
                    stalled = true;
                    break;
                }
            }
        }
        let image = self.best();
        let residual = self.fidelity_residual(&image);
        if residual > self.params.fidelity_tolerance {
            log::warn!(
                "fidelity residual {residual:e} exceeds tolerance {:e}",
                self.params.fidelity_tolerance
            );
        }
        Ok(ReconstructionResult {
            image,
            iterations_used: self.iterations,
            objective_trace: trace,
            final_fidelity_residual: residual,
            max_imaginary_residue: self.max_imaginary,
            stalled,
        })
    }
}

fn tv_from_gradient(gx: &[f64], gy: &[f64]) -> f64 {
    gx.iter().zip(gy).map(|(a, b)| (a * a + b * b).sqrt()).sum()
}

/// Constrained TV reconstruction.
pub fn reconstruct_cs(
    partial: &PartialSpectrum,
    params: &SolverParams,
) -> Result<ReconstructionResult> {
    CsSolver::new(partial, *params)?.run()
}
