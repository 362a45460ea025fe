//! Property tests for the numeric invariants the modules promise.

use proptest::prelude::*;

use soiqe::harness::srocc;
use soiqe::fusion::fuse;
use soiqe::pc::{encode, objective, Dictionary, PcHyperparams};
use soiqe::preproc::preprocess;
use soiqe::raster::{ErpImage, Grid};
use soiqe::rivalry::{block_similarity, likelihood_weights, normalize_pair};
use soiqe::viewport::{render_viewport, sample_viewpoints, Viewpoint};

fn luma_grid(width: usize, height: usize, seed: u64) -> Grid {
    let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let data = (0..width * height).map(|_| next()).collect();
    Grid::new(width, height, data).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rendered_viewports_stay_in_range(
        w in 4usize..48,
        h in 2usize..24,
        lon in 0.0f64..360.0,
        lat in -90.0f64..=90.0,
        fov in 20.0f64..170.0,
        seed in 0u64..1_000,
    ) {
        let erp = ErpImage::new(luma_grid(w, h, seed)).unwrap();
        let vp = render_viewport(&erp, Viewpoint::new(lon, lat).unwrap(), fov, 16).unwrap();
        prop_assert!(vp.luma().data().iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)));
    }

    #[test]
    fn preprocess_stays_strictly_inside_unit_interval(
        w in 2usize..32,
        h in 2usize..32,
        seed in 0u64..1_000,
    ) {
        let img = luma_grid(w, h, seed);
        let out = preprocess(&img);
        prop_assert!(out.values().data().iter().all(|v| v.is_finite() && v.abs() < 1.0));
    }

    #[test]
    fn fusion_is_a_convex_combination(
        qs in prop::collection::vec(-50.0f64..50.0, 1..12),
        ws in prop::collection::vec(0.0f64..10.0, 1..12),
    ) {
        let n = qs.len().min(ws.len());
        let records: Vec<(f64, f64, f64)> =
            (0..n).map(|i| (qs[i], ws[i], 0.5)).collect();
        let (q, weights) = fuse(&records).unwrap();
        let lo = records.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
        let hi = records.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(q >= lo - 1e-9 && q <= hi + 1e-9);
        prop_assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        // Permuting the records leaves the fused score unchanged.
        let mut rev = records.clone();
        rev.reverse();
        let (q_rev, _) = fuse(&rev).unwrap();
        prop_assert!((q - q_rev).abs() < 1e-12);

        // Scaling all weights by a common factor does not matter.
        let scaled: Vec<_> = records.iter().map(|&(q, cw, lw)| (q, cw * 123.0, lw)).collect();
        let (q_scaled, _) = fuse(&scaled).unwrap();
        prop_assert!((q - q_scaled).abs() < 1e-12);
    }

    #[test]
    fn pairwise_normalizations_sum_to_one(
        a in 0.0f64..1e6,
        b in 0.0f64..1e6,
        e_l in prop::collection::vec(-2.0f64..2.0, 4..32),
    ) {
        let (x, y) = normalize_pair(a, b);
        prop_assert!((x + y - 1.0).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&x));

        let e_r: Vec<f64> = e_l.iter().map(|v| v * 0.5 + 0.1).collect();
        let (l, r) = likelihood_weights(&e_l, &e_r);
        prop_assert!((l + r - 1.0).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&l) && (0.0..=1.0).contains(&r));
    }

    #[test]
    fn similarity_is_bounded_and_tight_only_at_equality(
        code in prop::collection::vec(-3.0f64..3.0, 1..24),
        bump in 1e-6f64..1.0,
        idx in 0usize..24,
    ) {
        let s_eq = block_similarity(&code, &code, 1e-4).unwrap();
        prop_assert_eq!(s_eq, 1.0);

        let mut other = code.clone();
        let i = idx % other.len();
        other[i] += bump;
        let s = block_similarity(&code, &other, 1e-4).unwrap();
        prop_assert!(s <= 1.0);
        prop_assert!(s < 1.0);
    }

    #[test]
    fn encode_never_beats_the_origin(
        seed in 0u64..500,
    ) {
        let dim = 16;
        let basis: Vec<f64> = luma_grid(dim * 3, 1, seed)
            .data()
            .iter()
            .map(|v| v - 0.5)
            .collect();
        let dict = Dictionary::new(4, basis, 0, String::new()).unwrap();
        let patch: Vec<f64> = luma_grid(dim, 1, seed + 1).data().iter().map(|v| v - 0.5).collect();
        let hp = PcHyperparams::default();
        let out = encode(&patch, &dict, &hp).unwrap();
        let at_zero = objective(&patch, &[0.0; 3], &dict, &hp).unwrap();
        prop_assert!(out.objective <= at_zero + 1e-12);
        prop_assert!(out.objective.is_finite());
    }

    #[test]
    fn viewpoint_count_matches_closed_form(n0 in 4u32..=48) {
        let theta = 360.0 / n0 as f64;
        let mut expected = n0 as usize;
        let mut m = 1;
        loop {
            let lat = m as f64 * theta;
            if lat >= 90.0 {
                break;
            }
            expected += 2 * (n0 as f64 * lat.to_radians().cos()).floor() as usize;
            m += 1;
        }
        expected += 2; // poles, sampled once each
        prop_assert_eq!(sample_viewpoints(n0).unwrap().len(), expected);
    }

    #[test]
    fn srocc_ignores_monotone_reparameterization(
        x in prop::collection::vec(-10.0f64..10.0, 4..20),
        y in prop::collection::vec(-10.0f64..10.0, 4..20),
    ) {
        let n = x.len().min(y.len());
        let (x, y) = (&x[..n], &y[..n]);
        prop_assume!(x.iter().any(|v| *v != x[0]));
        prop_assume!(y.iter().any(|v| *v != y[0]));
        let base = srocc(x, y).unwrap();
        let transformed: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        prop_assert_eq!(srocc(&transformed, y).unwrap(), base);
    }
}
