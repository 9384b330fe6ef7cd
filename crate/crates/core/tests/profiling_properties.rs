use proptest::prelude::*;
use pumpguard_core::detector::{detect, FeatureStream, LabeledFrame};
use pumpguard_core::profiling::{
    calibrate_thresholds, frame_labels, segment_activity, train_profiles, TrainingContext,
};
use pumpguard_core::{
    Band, BandFeatures, DetectionConfig, FrameSpec, ProfileDb, SegmentLabel, SegmentationConfig,
    Verdict,
};

fn bands() -> Vec<Band> {
    vec![Band::new(5000.0, 250.0), Band::new(10_000.0, 250.0), Band::new(19_000.0, 250.0)]
}

fn feat(e: [f64; 3], r4: f64, r5: f64) -> BandFeatures {
    BandFeatures {
        log_band_energies: e.to_vec(),
        high_band_ratio_4k: r4,
        high_band_ratio_5k: r5,
    }
}

fn ctx() -> TrainingContext {
    TrainingContext {
        frame_spec: FrameSpec::default(),
        sample_rate: 48_000.0,
        bands: bands(),
        segmentation: SegmentationConfig::new(2.0, 0.5),
    }
}

fn stream(frames: Vec<LabeledFrame>) -> FeatureStream {
    FeatureStream {
        sample_rate: 48_000.0,
        frame_spec: FrameSpec::default(),
        bands: bands(),
        frames,
    }
}

/// A database whose profiles have mean 0 dB and std 1 dB in every band.
fn unit_db() -> ProfileDb {
    let mut features = Vec::new();
    for i in 0..200 {
        let v = if i % 2 == 0 { 1.0 } else { -1.0 };
        features.push(feat([v; 3], 0.05, 0.04));
    }
    let segs = segment_activity(
        &(0..200).map(|i| if i < 100 { 0.1 } else { 5.0 }).collect::<Vec<_>>(),
        2.0,
        0.5,
        5,
    )
    .unwrap();
    train_profiles(&features, &segs, ctx()).unwrap()
}

fn levels() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(
        prop_oneof![0.001..0.3f64, 0.3..3.0f64, 3.0..20.0f64],
        1..300,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn segments_tile_and_alternate(l in levels(), min in 1usize..8) {
        let segs = segment_activity(&l, 2.0, 0.5, min).unwrap();
        prop_assert_eq!(segs[0].start_frame, 0);
        prop_assert_eq!(segs.last().unwrap().end_frame, l.len());
        prop_assert_eq!(segs.iter().map(|s| s.len()).sum::<usize>(), l.len());
        for w in segs.windows(2) {
            prop_assert_eq!(w[0].end_frame, w[1].start_frame);
            prop_assert!(w[0].label != w[1].label);
        }
        prop_assert!(segs.iter().all(|s| s.start_frame < s.end_frame));
        prop_assert_eq!(frame_labels(&segs).len(), l.len());
    }

    #[test]
    fn segmentation_is_scale_equivariant(l in levels(), min in 1usize..8, k in 1e-3..1e3f64) {
        let a = segment_activity(&l, 2.0, 0.5, min).unwrap();
        let scaled: Vec<f64> = l.iter().map(|v| v * k).collect();
        let b = segment_activity(&scaled, 2.0 * k, 0.5 * k, min).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn calibration_scales_with_levels(
        low in prop::collection::vec(0.01..0.02f64, 20..200),
        high in prop::collection::vec(0.5..1.0f64, 20..200),
        k in 0.01..100.0f64,
    ) {
        let mut l = low.clone();
        l.extend(&high);
        let (on, off) = calibrate_thresholds(&l).unwrap();
        prop_assert!(off < on);
        prop_assert!(low.iter().all(|v| *v < off) && high.iter().all(|v| *v > on));
        let scaled: Vec<f64> = l.iter().map(|v| v * k).collect();
        let (on2, off2) = calibrate_thresholds(&scaled).unwrap();
        prop_assert!((on2 / (on * k) - 1.0).abs() < 1e-9);
        prop_assert!((off2 / (off * k) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn training_is_deterministic(
        raw in prop::collection::vec(((-90.0..0.0f64, -90.0..0.0f64, -90.0..0.0f64), 0.0..1.0f64), 120..200),
    ) {
        let features: Vec<BandFeatures> = raw
            .iter()
            .map(|&((a, b, c), r)| feat([a, b, c], r, r * 0.9))
            .collect();
        let half = features.len() / 2;
        let l: Vec<f64> = (0..features.len()).map(|i| if i < half { 0.1 } else { 5.0 }).collect();
        let segs = segment_activity(&l, 2.0, 0.5, 5).unwrap();
        let a = train_profiles(&features, &segs, ctx()).unwrap();
        let b = train_profiles(&features, &segs, ctx()).unwrap();
        prop_assert_eq!(&a, &b);
        for p in [&a.active, &a.inactive] {
            prop_assert!(p.std_db.iter().all(|s| *s >= 0.5));
            prop_assert!(p.frames >= 50);
            prop_assert_eq!(p.mean_db.len(), 3);
        }
    }

    #[test]
    fn alerts_are_debounced_and_consistent(
        zs in prop::collection::vec((0.0..8.0f64, any::<bool>(), 0.0..1.0f64), 1..400),
        k in 1usize..7,
        thr in 1.0..6.0f64,
    ) {
        let db = unit_db();
        let frames: Vec<LabeledFrame> = zs
            .iter()
            .map(|&(z, active, r)| LabeledFrame {
                features: feat([z, 0.0, -z / 2.0], r, r),
                label: if active { SegmentLabel::Active } else { SegmentLabel::Inactive },
            })
            .collect();
        let cfg = DetectionConfig { z_threshold: thr, consecutive_frames: k, ratio_margin: 0.15 };
        let alerts = detect(&stream(frames), &db, &cfg).unwrap();
        let exceeding: Vec<bool> = zs.iter().map(|&(z, _, _)| z > thr).collect();
        let runs = exceeding
            .iter()
            .enumerate()
            .filter(|&(i, &e)| e && (i == 0 || !exceeding[i - 1]))
            .count();
        prop_assert!(alerts.len() <= runs);
        for a in &alerts {
            prop_assert!(a.max_z > thr);
            prop_assert!(exceeding[a.frame_index + 1 - k..=a.frame_index].iter().all(|e| *e));
            match a.verdict {
                Verdict::Attack1Suspected => prop_assert_eq!(a.label, SegmentLabel::Active),
                Verdict::Attack2Suspected => prop_assert_eq!(a.label, SegmentLabel::Inactive),
                Verdict::UnknownAnomaly => {}
            }
        }
    }

    #[test]
    fn constant_offset_changes_nothing(
        zs in prop::collection::vec((-8.0..8.0f64, -8.0..8.0f64, any::<bool>()), 1..300),
        offset in -50.0..50.0f64,
    ) {
        let db = unit_db();
        let mut shifted = db.clone();
        for p in [&mut shifted.active, &mut shifted.inactive] {
            p.mean_db.iter_mut().for_each(|m| *m += offset);
        }
        let make = |off: f64| -> FeatureStream {
            stream(
                zs.iter()
                    .map(|&(a, b, act)| LabeledFrame {
                        features: feat([a + off, b + off, off], 0.5, 0.5),
                        label: if act { SegmentLabel::Active } else { SegmentLabel::Inactive },
                    })
                    .collect(),
            )
        };
        let cfg = DetectionConfig::default();
        let a = detect(&make(0.0), &db, &cfg).unwrap();
        let b = detect(&make(offset), &shifted, &cfg).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(x.frame_index, y.frame_index);
            prop_assert_eq!(x.verdict, y.verdict);
            prop_assert_eq!(x.offending_band_hz, y.offending_band_hz);
            prop_assert!((x.max_z - y.max_z).abs() < 1e-9);
        }
    }

    /// Streams of flat anomaly blocks: a block either exceeds a threshold
    /// entirely or not at all, so raising the threshold can only drop alerts.
    #[test]
    fn raising_threshold_never_adds_alerts_on_block_streams(
        blocks in prop::collection::vec((0.0..10.0f64, 1usize..20, 1usize..20), 1..30),
    ) {
        let db = unit_db();
        let mut frames = Vec::new();
        for &(z, len, gap) in &blocks {
            for _ in 0..len {
                frames.push(LabeledFrame { features: feat([z, 0.0, 0.0], 0.0, 0.0), label: SegmentLabel::Inactive });
            }
            for _ in 0..gap {
                frames.push(LabeledFrame { features: feat([0.0; 3], 0.0, 0.0), label: SegmentLabel::Inactive });
            }
        }
        let s = stream(frames);
        let mut last = usize::MAX;
        for thr in [1.0, 2.0, 3.0, 4.0, 6.0, 9.0] {
            let cfg = DetectionConfig { z_threshold: thr, ..DetectionConfig::default() };
            let n = detect(&s, &db, &cfg).unwrap().len();
            prop_assert!(n <= last);
            last = n;
        }
    }
}

#[test]
fn threshold_can_split_a_run() {
    // One run of ten exceeding frames at z = 3.5 except a dip to 2.5 in the
    // middle: one alert at threshold 2, two at threshold 3.
    let db = unit_db();
    let zs = [3.5, 3.5, 3.5, 3.5, 3.5, 2.5, 3.5, 3.5, 3.5, 3.5, 3.5];
    let s = stream(
        zs.iter()
            .map(|&z| LabeledFrame {
                features: feat([z, 0.0, 0.0], 0.0, 0.0),
                label: SegmentLabel::Inactive,
            })
            .collect(),
    );
    let count = |thr| {
        detect(&s, &db, &DetectionConfig { z_threshold: thr, ..DetectionConfig::default() })
            .unwrap()
            .len()
    };
    assert_eq!(count(2.0), 1);
    assert_eq!(count(3.0), 2);
}

#[test]
fn training_frames_raise_no_alerts() {
    let db = unit_db();
    let frames = (0..200)
        .map(|i| LabeledFrame {
            features: feat([if i % 2 == 0 { 1.0 } else { -1.0 }; 3], 0.05, 0.04),
            label: if i < 100 { SegmentLabel::Inactive } else { SegmentLabel::Active },
        })
        .collect();
    assert!(detect(&stream(frames), &db, &DetectionConfig::default()).unwrap().is_empty());
}
