use std::io::Cursor;

use fsi_core::importance::corpus_from_sources;
use fsi_core::masks::{GaussianParams, Strategy as MaskStrategy};
use fsi_core::metrics::{
    bar_resolvable, gaussian_blur, render_usaf_chart, ssim_map, usaf_resolution,
};
use fsi_core::spectrum::{forward_dft_field, HalfPlaneMap};
use fsi_core::*;
use num_complex::Complex64;
use proptest::prelude::{
    any, prop, prop_assert, prop_assert_eq, prop_oneof, proptest, Just, ProptestConfig,
};
use proptest::strategy::Strategy as _;

fn field(n: usize, values: Vec<f64>) -> RealField {
    RealField::new(n, n, values).unwrap()
}

fn scene(n: usize, values: Vec<f64>) -> SceneImage {
    SceneImage::new(n, n, values).unwrap()
}

fn pixels(n: usize) -> impl proptest::strategy::Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..=1.0f64, n * n)
}

fn naive_dft(f: &RealField, u: usize, v: usize) -> Complex64 {
    let n = f.width();
    let mut acc = Complex64::new(0.0, 0.0);
    for y in 0..n {
        for x in 0..n {
            let arg = -std::f64::consts::TAU * ((u * x + v * y) % n) as f64 / n as f64;
            acc += Complex64::from_polar(f.get(x, y), arg);
        }
    }
    acc
}

fn side() -> impl proptest::strategy::Strategy<Value = usize> {
    prop_oneof![Just(8usize), Just(16), Just(32)]
}

fn png(n: usize, values: &[u8]) -> Vec<u8> {
    let img = image::GrayImage::from_raw(n as u32, n as u32, values.to_vec()).unwrap();
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png).unwrap();
    out.into_inner()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dft_is_linear(
        (n, a, b) in side().prop_flat_map(|n| (Just(n), pixels(n), pixels(n))),
        s in -3.0..3.0f64,
        t in -3.0..3.0f64,
    ) {
        let (fa, fb) = (field(n, a), field(n, b));
        let mix = RealField::from_fn(n, n, |x, y| s * fa.get(x, y) + t * fb.get(x, y));
        let lhs = forward_dft_field(&mix).unwrap();
        let ra = forward_dft_field(&fa).unwrap();
        let rb = forward_dft_field(&fb).unwrap();
        let scale = lhs.coefficients().iter().map(|c| c.norm()).fold(1.0, f64::max);
        for ((l, x), y) in lhs.coefficients().iter().zip(ra.coefficients()).zip(rb.coefficients()) {
            prop_assert!((l - (x * s + y * t)).norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn dft_of_real_input_is_conjugate_symmetric(
        (n, a) in side().prop_flat_map(|n| (Just(n), pixels(n))),
    ) {
        let spec = forward_dft_field(&field(n, a)).unwrap();
        let scale = spec.coefficients()[0].norm().max(1.0);
        prop_assert!(spec.conjugate_asymmetry() <= 1e-10 * scale);
    }

    #[test]
    fn half_plane_partitions_the_plane(half in 2usize..=40) {
        let n = 2 * half;
        let map = HalfPlaneMap::new(n).unwrap();
        prop_assert_eq!(map.len(), n * n / 2 + 2);
        let mut seen = vec![0u8; n * n];
        for f in map.entries() {
            seen[f.full_index(n)] += 1;
            let c = f.conjugate(n);
            if c != *f {
                seen[c.full_index(n)] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn patterns_stay_in_unit_range(u in 0usize..64, v in 0usize..64, phase in 0.0..std::f64::consts::TAU) {
        let p = fourier_pattern(64, FrequencyPair::new(u, v), phase).unwrap();
        prop_assert!(p.values.data().iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn pattern_inner_product_matches_spectrum(
        a in pixels(16),
        u in 0usize..16,
        v in 0usize..16,
        phase in 0.0..std::f64::consts::TAU,
    ) {
        let img = field(16, a);
        let p = fourier_pattern(16, FrequencyPair::new(u, v), phase).unwrap();
        let inner: f64 = p.values.data().iter().zip(img.data()).map(|(x, y)| x * y).sum();
        let c = naive_dft(&img, u, v);
        let expect = img.sum() / 2.0 + 0.5 * (Complex64::from_polar(1.0, phase) * c.conj()).re;
        prop_assert!((inner - expect).abs() <= 1e-9 * expect.abs().max(1.0));
    }

    #[test]
    fn binarization_is_deterministic(u in 0usize..32, v in 0usize..32, phase in 0.0..std::f64::consts::TAU) {
        let p = fourier_pattern(32, FrequencyPair::new(u, v), phase).unwrap();
        prop_assert_eq!(binarize_pattern(&p), binarize_pattern(&p.clone()));
    }

    #[test]
    fn assembled_coefficients_are_scaled_dft(
        (n, a, marks) in side().prop_flat_map(|n| {
            (Just(n), pixels(n), prop::collection::vec(any::<bool>(), n * n / 2 + 2))
        }),
    ) {
        let s = scene(n, a);
        let mask = SamplingMask::from_marks(n, marks, MaskStrategy::Full, 1.0).unwrap();
        let partial = acquire_spectrum(&s, &mask, &NoiseModel::None).unwrap();
        for m in partial.measurements() {
            let expect = naive_dft(s.field(), m.frequency.u, m.frequency.v) * COEFFICIENT_SCALE;
            prop_assert!((m.coefficient - expect).norm() <= 1e-9 * expect.norm().max(1e-9));
        }
    }

    #[test]
    fn acquisition_is_linear_in_the_scene(
        a in pixels(16),
        b in pixels(16),
        s in 0.0..0.5f64,
        t in 0.0..0.5f64,
    ) {
        let mask = full_mask(16).unwrap();
        let (fa, fb) = (field(16, a), field(16, b));
        let mix = SceneImage::from_field(RealField::from_fn(16, 16, |x, y| s * fa.get(x, y) + t * fb.get(x, y))).unwrap();
        let acq = |img: &SceneImage| acquire_spectrum(img, &mask, &NoiseModel::None).unwrap();
        let (pm, pa, pb) = (acq(&mix), acq(&SceneImage::from_field(fa).unwrap()), acq(&SceneImage::from_field(fb).unwrap()));
        let scale = pm.measurements()[0].coefficient.norm().max(1.0);
        for ((m, x), y) in pm.measurements().iter().zip(pa.measurements()).zip(pb.measurements()) {
            let expect = x.coefficient * s + y.coefficient * t;
            prop_assert!((m.coefficient - expect).norm() <= 1e-9 * scale);
        }
    }

    #[test]
    fn noisy_acquisition_is_reproducible(a in pixels(8), seed in any::<u64>(), sigma in 0.001..0.5f64) {
        let s = scene(8, a);
        let mask = full_mask(8).unwrap();
        let noise = NoiseModel::gaussian(sigma, seed).unwrap();
        let first = acquire_spectrum(&s, &mask, &noise).unwrap();
        let second = acquire_spectrum(&s, &mask, &noise).unwrap();
        prop_assert_eq!(first, second);
    }

    #[test]
    fn importance_ignores_uniform_rescaling(
        blocks in prop::collection::vec(pixels(8), 1..5),
        c in 0.1..1.0f64,
    ) {
        let original: Vec<SceneImage> = blocks.iter().map(|b| scene(8, b.clone())).collect();
        let scaled: Vec<SceneImage> = blocks
            .iter()
            .map(|b| scene(8, b.iter().map(|v| v * c).collect()))
            .collect();
        let a = sort_importance(&accumulate_importance(&original, 8).unwrap(), 8).unwrap();
        let b = sort_importance(&accumulate_importance(&scaled, 8).unwrap(), 8).unwrap();
        prop_assert_eq!(a.order(), b.order());
        prop_assert_eq!(a.index_at_rank(1), 0);
    }

    #[test]
    fn importance_ignores_file_order(
        images in prop::collection::vec(prop::collection::vec(any::<u8>(), 64), 2..5),
        rotate in 0usize..5,
    ) {
        let sources: Vec<(String, Vec<u8>)> = images
            .iter()
            .enumerate()
            .map(|(i, px)| (format!("img{i}.png"), png(8, px)))
            .collect();
        let mut shuffled = sources.clone();
        shuffled.reverse();
        let len = shuffled.len();
        shuffled.rotate_left(rotate % len);
        let a = ImportanceOrder::from_corpus(&corpus_from_sources(&sources, 8).unwrap(), 8).unwrap();
        let b = ImportanceOrder::from_corpus(&corpus_from_sources(&shuffled, 8).unwrap(), 8).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn masks_unfold_symmetrically(eta in 0.01..0.49f64, seed in any::<u64>()) {
        let n = 32;
        let order = assets::bundled_ordering(n).unwrap();
        let target = masks::target_count(n, eta);
        let masks = [
            gaussian_random_mask(&order, eta, seed).unwrap(),
            circular_mask(n, eta).unwrap(),
            radial_mask(n, eta).unwrap(),
        ];
        prop_assert_eq!(masks[1].marked_count(), target);
        prop_assert_eq!(masks[2].marked_count(), target);
        prop_assert_eq!(&masks[0], &gaussian_random_mask(&order, eta, seed).unwrap());
        for mask in &masks {
            let full = mask.unfold();
            for v in 0..n {
                for u in 0..n {
                    let c = ((n - u) % n, (n - v) % n);
                    prop_assert_eq!(full[v * n + u], full[c.1 * n + c.0]);
                }
            }
            prop_assert!(mask.is_marked(0));
        }
    }

    #[test]
    fn cs_iterates_respect_solver_contracts(a in pixels(16), marks in prop::collection::vec(any::<bool>(), 130)) {
        let mut marks = marks;
        marks[0] = true;
        let s = scene(16, a);
        let mask = SamplingMask::from_marks(16, marks, MaskStrategy::Full, 1.0).unwrap();
        let partial = acquire_spectrum(&s, &mask, &NoiseModel::None).unwrap();
        let params = SolverParams { max_iterations: 60, ..Default::default() };
        let r = reconstruct_cs(&partial, &params).unwrap();
        prop_assert!(r.objective_trace.windows(2).all(|w| w[1] <= w[0] + 1e-9));
        prop_assert!(r.final_fidelity_residual <= 1e-8);
        prop_assert!(r.max_imaginary_residue < 1e-10);
        let again = reconstruct_cs(&partial, &params).unwrap();
        prop_assert!(again.image.max_abs_diff(&r.image) <= 1e-12);
    }

    #[test]
    fn ssim_is_bounded_and_shift_covariant(
        a in pixels(24),
        b in pixels(24),
        dx in 0usize..24,
        dy in 0usize..24,
    ) {
        let n = 24;
        let (fa, fb) = (field(n, a), field(n, b));
        let p = SsimParams::default();
        let base = ssim_map(&fa, &fb, &p).unwrap();
        prop_assert!(base.data().iter().all(|v| (-1.0..=1.0).contains(v)));
        let shift = |f: &RealField| RealField::from_fn(n, n, |x, y| f.get((x + n - dx) % n, (y + n - dy) % n));
        let moved = ssim_map(&shift(&fa), &shift(&fb), &p).unwrap();
        let w = base.width();
        // Compare only windows that do not straddle the wrap-around seam.
        for y in 0..w {
            for x in 0..w {
                let (sx, sy) = (x + n - dx, y + n - dy);
                let (ox, oy) = (sx % n, sy % n);
                if ox < w && oy < w && (x >= dx || x + 11 <= dx) && (y >= dy || y + 11 <= dy) {
                    prop_assert!((moved.get(x, y) - base.get(ox, oy)).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn usaf_resolution_is_monotone(group in -4i32..4, element in 1u32..=6) {
        let r = usaf_resolution(group, element).unwrap();
        let next = if element == 6 { usaf_resolution(group + 1, 1) } else { usaf_resolution(group, element + 1) };
        prop_assert!(next.unwrap() > r);
        prop_assert!((usaf_resolution(group + 1, element).unwrap() / r - 2.0).abs() < 1e-12);
    }
}

#[test]
fn blur_never_restores_resolvability() {
    let chart = render_usaf_chart(128, 4.0).unwrap();
    let sigmas: Vec<f64> = (0..=24).map(|i| i as f64 * 0.125).collect();
    let blurred: Vec<RealField> = sigmas
        .iter()
        .map(|&s| gaussian_blur(chart.image.field(), s))
        .collect();
    for t in &chart.triplets {
        let mut lost = false;
        for img in &blurred {
            let ok = bar_resolvable(img, t).unwrap().resolvable;
            assert!(!(lost && ok), "{t:?} became resolvable again");
            lost |= !ok;
        }
        assert!(lost, "{t:?} never lost resolvability");
    }
}

#[test]
fn marking_frequency_tracks_gaussian_profile() {
    // Per-rank frequencies are too noisy at 200 seeds; bins of 32 ranks
    // average that out.
    let n = 64;
    let order = assets::bundled_ordering(n).unwrap();
    let k_max = order.len();
    let seeds = 200u64;
    let mut hits = vec![0usize; k_max + 1];
    for seed in 0..seeds {
        for (rank, _) in gaussian_random_mask(&order, 0.1, seed).unwrap().sequence() {
            hits[rank] += 1;
        }
    }
    let g = GaussianParams::new(0.1, k_max).unwrap();
    assert_eq!(hits[1], seeds as usize);
    for start in (1..=k_max).step_by(32) {
        let ranks = start..(start + 32).min(k_max + 1);
        let len = ranks.len() as f64;
        let observed: f64 = ranks
            .clone()
            .map(|k| hits[k] as f64 / seeds as f64)
            .sum::<f64>()
            / len;
        let expected: f64 = ranks.map(|k| g.value(k)).sum::<f64>() / len;
        assert!(
            (observed - expected).abs() < 0.03,
            "ranks from {start}: {observed} vs {expected}"
        );
    }
}
