//! Fourier single-pixel imaging simulation.
//!
//! Scenes are probed with three phase-shifted sinusoidal patterns per
//! Fourier coefficient, coefficients are selected by a sampling mask over
//! the conjugate-symmetric half plane, and images are recovered either by a
//! zero-filled inverse transform or by total-variation minimization subject
//! to the measured coefficients.

pub mod acquisition;
pub mod assets;
pub mod error;
pub mod field;
pub mod importance;
pub mod io;
pub mod masks;
pub mod metrics;
pub mod patterns;
pub mod reconstruction;
pub mod rng;
pub mod spectrum;

pub use acquisition::{
    acquire_spectrum, assemble_coefficient, measure, DetectorTriple, Measurement, NoiseModel,
    PartialSpectrum, COEFFICIENT_SCALE,
};
pub use error::{FsiError, Result};
pub use field::{RealField, SceneImage};
pub use importance::{
    accumulate_importance, ingest_corpus, sort_importance, Corpus, ImportanceOrder,
};
pub use masks::{
    circular_mask, full_mask, gaussian_random_mask, radial_mask, sigma_for_ratio, SamplingMask,
    Strategy,
};
pub use metrics::{psnr, ssim, SsimParams};
pub use patterns::{
    binarize_pattern, fourier_pattern, phase_shift_set, BinaryPattern, Pattern, PhaseShiftSet,
};
pub use reconstruction::{
    reconstruct_cs, reconstruct_ift, total_variation, CsSolver, ReconstructionResult, SolverParams,
};
pub use spectrum::{forward_dft, inverse_dft, FrequencyPair, FullSpectrum, HalfPlaneMap};
