use proptest::prelude::*;

use rope_scaling::io::{read_freqs, write_freqs, OutputFormat};
use rope_scaling::{
    apply_rotation, attention_score, build_base_table, build_table, dynamic_scale, softmax_entropy,
    DynamicScaler, PositionedPair, RopeParams, SchemeConfig, SchemeKind,
};

fn head_dim() -> impl Strategy<Value = usize> {
    prop_oneof![Just(2usize), Just(8), Just(64), Just(128)]
}

fn scheme() -> impl Strategy<Value = SchemeKind> {
    prop::sample::select(SchemeKind::ALL.to_vec())
}

fn vector(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, dim)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

proptest! {
    #[test]
    fn score_depends_only_on_offset(
        (dim, q, k) in head_dim().prop_flat_map(|d| (Just(d), vector(d), vector(d))),
        m in 0usize..40_960,
        n in 0usize..40_960,
        shift in 0usize..40_960,
    ) {
        let table = build_base_table(&RopeParams::new(10_000.0, dim, 4096).unwrap());
        let a = attention_score(&PositionedPair::new(q.clone(), k.clone(), m, n), &table).unwrap();
        let b = attention_score(&PositionedPair::new(q, k, m + shift, n + shift), &table).unwrap();
        // inputs are not unit vectors here, so allow for their norm
        prop_assert!((a - b).abs() < 1e-9 * 9.0 * dim as f64);
    }

    #[test]
    fn rotation_scales_norm_by_mscale(
        kind in scheme(),
        s in 1.0f64..64.0,
        v in vector(128),
        m in 0usize..200_000,
    ) {
        let table = build_table(&RopeParams::default(), &SchemeConfig::new(kind, s)).unwrap();
        let out = apply_rotation(&v, m, &table).unwrap();
        let expected = table.mscale() * norm(&v);
        prop_assert!((norm(&out) - expected).abs() <= 1e-10 * expected.max(1e-300));
    }

    #[test]
    fn rotations_compose(v in vector(64), m1 in 0usize..60_000, m2 in 0usize..60_000) {
        let table = build_base_table(&RopeParams::new(10_000.0, 64, 4096).unwrap());
        let twice = apply_rotation(&apply_rotation(&v, m1, &table).unwrap(), m2, &table).unwrap();
        let once = apply_rotation(&v, m1 + m2, &table).unwrap();
        for (a, b) in twice.iter().zip(&once) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn frequencies_never_increase(
        kind in scheme(),
        s in 1.0f64..128.0,
        base in 100.0f64..2e6,
        dim in (2usize..=64).prop_map(|h| 2 * h),
        trained in 64usize..32_768,
    ) {
        let params = RopeParams::new(base, dim, trained).unwrap();
        let table = build_table(&params, &SchemeConfig::new(kind, s)).unwrap();
        for e in table.entries() {
            prop_assert!(e.theta_scaled > 0.0);
            if kind == SchemeKind::NtkAware {
                let stretch = e.theta_base / e.theta_scaled;
                prop_assert!(stretch >= 1.0 - 1e-12 && stretch <= s * (1.0 + 1e-9));
            } else {
                prop_assert!(e.theta_scaled <= e.theta_base * (1.0 + 1e-15));
                prop_assert!(e.theta_scaled >= e.theta_base / s * (1.0 - 1e-15));
            }
        }
        for w in table.entries().windows(2) {
            prop_assert!(w[1].gamma <= w[0].gamma);
        }
    }

    #[test]
    fn yarn_and_by_parts_share_frequencies(s in 1.0f64..100.0, alpha in 0.0f64..4.0, width in 1.0f64..64.0) {
        let p = RopeParams::default();
        let yarn = build_table(&p, &SchemeConfig::new(SchemeKind::Yarn, s).with_ramp(alpha, alpha + width)).unwrap();
        let parts = build_table(&p, &SchemeConfig::new(SchemeKind::NtkByParts, s).with_ramp(alpha, alpha + width)).unwrap();
        prop_assert!(yarn.theta_scaled().eq(parts.theta_scaled()));
        prop_assert_eq!(parts.mscale(), 1.0);
        prop_assert_eq!(yarn.mscale(), 0.1 * s.ln() + 1.0);
    }

    #[test]
    fn entropy_is_shift_invariant_and_bounded(z in prop::collection::vec(-20.0f64..20.0, 1..200), c in -100.0f64..100.0) {
        let h = softmax_entropy(&z).unwrap();
        let shifted: Vec<f64> = z.iter().map(|x| x + c).collect();
        prop_assert!((h - softmax_entropy(&shifted).unwrap()).abs() < 1e-12);
        prop_assert!(h >= 0.0 && h <= (z.len() as f64).ln());
    }

    #[test]
    fn entropy_decreases_with_gain(z in prop::collection::vec(-5.0f64..5.0, 2..100), t1 in 0.1f64..3.0, dt in 0.0f64..3.0) {
        let t2 = t1 + dt;
        let h1 = softmax_entropy(&z.iter().map(|x| t1 * x).collect::<Vec<_>>()).unwrap();
        let h2 = softmax_entropy(&z.iter().map(|x| t2 * x).collect::<Vec<_>>()).unwrap();
        prop_assert!(h2 <= h1 + 1e-12);
    }

    #[test]
    fn dynamic_scale_is_monotone(a in 0usize..1_000_000, b in 0usize..1_000_000, l in 1usize..100_000) {
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(dynamic_scale(lo, l) <= dynamic_scale(hi, l));
        prop_assert!(dynamic_scale(lo, l) >= 1.0);
    }

    #[test]
    fn dynamic_result_ignores_visited_lengths(
        kind in scheme(),
        steps in prop::collection::vec(1usize..9000, 0..12),
        m in 0usize..4096,
        v in vector(128),
    ) {
        let params = RopeParams::default();
        let inner = SchemeConfig::new(kind, 1.0);
        let mut visited = DynamicScaler::new(params, inner).unwrap();
        let mut len = m + 1;
        for step in &steps {
            visited.rotate_cached(&v, m, len).unwrap();
            len += step;
        }
        let after = visited.rotate_cached(&v, m, len).unwrap();
        let fresh = DynamicScaler::new(params, inner).unwrap().rotate_cached(&v, m, len).unwrap();
        prop_assert_eq!(after, fresh);
    }

    #[test]
    fn csv_round_trip_is_bit_exact(kind in scheme(), s in 1.0f64..200.0, base in 2.0f64..1e7) {
        let params = RopeParams::new(base, 32, 2048).unwrap();
        let table = build_table(&params, &SchemeConfig::new(kind, s)).unwrap();
        let mut buf = Vec::new();
        write_freqs(&table, OutputFormat::Csv, &mut buf).unwrap();
        let rows = read_freqs(OutputFormat::Csv, buf.as_slice()).unwrap();
        prop_assert_eq!(rows, rope_scaling::io::freq_rows(&table));
    }
}
