use num_complex::Complex64;
use proptest::prelude::*;
use pumpguard_core::dsp::{
    band_energy, dft_oracle, features, fft, high_band_ratio, power_spectrum, FftPlan,
    SpectrumAnalyzer,
};
use pumpguard_core::rng::WhiteNoise;
use pumpguard_core::{FrameSpec, WindowKind};

fn complex_vec() -> impl Strategy<Value = Vec<Complex64>> {
    (1u32..=10).prop_flat_map(|k| {
        prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1usize << k)
            .prop_map(|v| v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
    })
}

fn max_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fft_matches_oracle(x in complex_vec()) {
        let fast = fft(&x, false).unwrap();
        prop_assert!(max_err(&fast, &dft_oracle(&x)) < 1e-9);
    }

    #[test]
    fn fft_round_trip(x in complex_vec()) {
        let back = fft(&fft(&x, false).unwrap(), true).unwrap();
        prop_assert!(max_err(&back, &x) < 1e-9);
    }

    #[test]
    fn fft_is_linear(
        pair in (1u32..=10).prop_flat_map(|k| {
            let v = || prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1usize << k);
            (v(), v())
        }),
        a in -3.0..3.0f64,
        b in -3.0..3.0f64,
    ) {
        let to_c = |v: &[(f64, f64)]| -> Vec<Complex64> {
            v.iter().map(|&(r, i)| Complex64::new(r, i)).collect()
        };
        let (x, y) = (to_c(&pair.0), to_c(&pair.1));
        let mix: Vec<Complex64> = x.iter().zip(&y).map(|(p, q)| p * a + q * b).collect();
        let lhs = fft(&mix, false).unwrap();
        let fx = fft(&x, false).unwrap();
        let fy = fft(&y, false).unwrap();
        let rhs: Vec<Complex64> = fx.iter().zip(&fy).map(|(p, q)| p * a + q * b).collect();
        prop_assert!(max_err(&lhs, &rhs) < 1e-9);
    }

    #[test]
    fn real_input_is_conjugate_symmetric(x in prop::collection::vec(-1.0..1.0f64, 256)) {
        let c: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let big = fft(&c, false).unwrap();
        let n = big.len();
        for k in 1..n {
            prop_assert!((big[k] - big[n - k].conj()).norm() < 1e-9);
        }
    }

    #[test]
    fn parseval_for_analyzer_frames(
        x in prop::collection::vec(-1.0..1.0f64, 1024),
        hann in any::<bool>(),
    ) {
        let window = if hann { WindowKind::Hann } else { WindowKind::Rectangular };
        let spec = FrameSpec { frame_len: 1024, hop: 512, window };
        let mut an = SpectrumAnalyzer::new(spec, 48_000.0).unwrap();
        let ps = an.analyze(&x, 0).unwrap();
        let w = window.coefficients(1024);
        let energy: f64 = x.iter().zip(&w).map(|(v, c)| (v * c).powi(2)).sum();
        prop_assert!((ps.total() - energy).abs() <= 1e-9 * energy);
        prop_assert!(ps.bins.iter().all(|b| b.is_finite() && *b >= 0.0));
    }

    #[test]
    fn disjoint_bands_add_up(
        x in prop::collection::vec(-1.0..1.0f64, 512),
        mut cuts in prop::collection::vec(1usize..256, 0..8),
    ) {
        // 1 Hz bins keep every edge exactly representable.
        let ps = power_spectrum(&x, 512.0).unwrap();
        let bw = ps.bin_width;
        cuts.sort_unstable();
        cuts.dedup();
        // Edges sit halfway between bin centres so each bin lands in one band.
        let mut edges = vec![0.0];
        edges.extend(cuts.iter().map(|&c| (c as f64 - 0.5) * bw));
        edges.push(ps.nyquist());
        let sum: f64 = edges
            .windows(2)
            .map(|e| band_energy(&ps, 0.5 * (e[0] + e[1]), 0.5 * (e[1] - e[0])).unwrap())
            .sum();
        prop_assert!((sum - ps.total()).abs() <= 1e-9 * ps.total());
    }

    #[test]
    fn feature_invariants(x in prop::collection::vec(-1.0..1.0f64, 4096)) {
        let spec = FrameSpec::default();
        let mut an = SpectrumAnalyzer::new(spec, 48_000.0).unwrap();
        let ps = an.analyze(&x, 0).unwrap();
        let bands = pumpguard_core::dsp::default_bands();
        let f = features(&ps, &bands).unwrap();
        prop_assert_eq!(f.log_band_energies.len(), bands.len());
        prop_assert!((0.0..=1.0).contains(&f.high_band_ratio_4k));
        prop_assert!((0.0..=1.0).contains(&f.high_band_ratio_5k));
        prop_assert!(f.high_band_ratio_5k <= f.high_band_ratio_4k);
    }
}

fn white_frames(count: usize, n: usize) -> Vec<Vec<f64>> {
    let noise = WhiteNoise::new(99);
    (0..count)
        .map(|i| {
            let mut f = vec![0.0; n];
            noise.fill((i * n) as u64, &mut f);
            f
        })
        .collect()
}

#[test]
fn white_noise_spectrum_is_flat() {
    let n = 4096;
    let mut an = SpectrumAnalyzer::new(FrameSpec::default(), 48_000.0).unwrap();
    let mut avg = vec![0.0; n / 2 + 1];
    let frames = white_frames(100, n);
    for f in &frames {
        let ps = an.analyze(f, 0).unwrap();
        for (a, b) in avg.iter_mut().zip(&ps.bins) {
            *a += b / frames.len() as f64;
        }
    }
    // Interior bins only: DC and Nyquist are not doubled and the Hann window
    // leaks the (zero) mean into the first bins.
    let interior = &avg[2..n / 2 - 1];
    let mean = interior.iter().sum::<f64>() / interior.len() as f64;
    for (k, p) in interior.iter().enumerate() {
        let db = 10.0 * (p / mean).log10();
        assert!(db.abs() < 3.0, "bin {} deviates {db} dB", k + 2);
    }
}

#[test]
fn white_noise_ratio_at_half_nyquist() {
    let frames = white_frames(100, 4096);
    let mean = frames
        .iter()
        .map(|f| high_band_ratio(&power_spectrum(f, 48_000.0).unwrap(), 12_000.0))
        .sum::<f64>()
        / 100.0;
    assert!((mean - 0.5).abs() < 0.05, "{mean}");
}

#[test]
fn oracle_length_one_and_impulse() {
    let x = [Complex64::new(0.25, -3.0)];
    assert_eq!(dft_oracle(&x), x.to_vec());
    let imp = [1.0, 0.0, 0.0, 0.0].map(|v| Complex64::new(v, 0.0));
    for v in dft_oracle(&imp) {
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }
}

#[test]
fn plan_is_reusable() {
    let plan = FftPlan::new(64).unwrap();
    let x: Vec<Complex64> = (0..64).map(|i| Complex64::new(i as f64, 0.0)).collect();
    let mut a = x.clone();
    plan.forward(&mut a);
    let mut b = x.clone();
    plan.forward(&mut b);
    assert_eq!(a, b);
}
