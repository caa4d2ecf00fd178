use avqual::metrics::{
    fisher_z_compare, outlier_ratio, pearson, rmse, rmse_epsilon, spearman, Epsilon,
};
use proptest::prelude::*;

fn oracle_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

fn oracle_ranks(x: &[f64]) -> Vec<f64> {
    // Average rank: 1 + #smaller + (#equal - 1) / 2.
    x.iter()
        .map(|v| {
            let less = x.iter().filter(|w| *w < v).count() as f64;
            let eq = x.iter().filter(|w| *w == v).count() as f64;
            1.0 + less + (eq - 1.0) / 2.0
        })
        .collect()
}

fn vectors() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (3usize..60).prop_flat_map(|n| {
        (
            prop::collection::vec(1.0f64..5.0, n),
            prop::collection::vec(1.0f64..5.0, n),
            prop::collection::vec(0.0f64..0.8, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn rmse_family_matches_definitions((p, a, ci) in vectors()) {
        let n = p.len() as f64;
        let direct = (p.iter().zip(&a).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / n).sqrt();
        let r = rmse(&p, &a).unwrap();
        prop_assert!((r - direct).abs() < 1e-9);
        let star_direct = (p.iter().zip(&a).zip(&ci)
            .map(|((x, y), c)| { let e = (x - y).abs() - c; if e > 0.0 { e * e } else { 0.0 } })
            .sum::<f64>() / n).sqrt();
        let star = rmse_epsilon(&p, &a, Epsilon::PerSample(&ci)).unwrap();
        prop_assert!((star - star_direct).abs() < 1e-9);
        prop_assert!(star <= r + 1e-15);
        let outl = p.iter().zip(&a).zip(&ci).filter(|((x, y), c)| (*x - *y).abs() > **c).count() as f64 / n;
        prop_assert!((outlier_ratio(&p, &a, &ci).unwrap() - outl).abs() < 1e-12);
    }

    #[test]
    fn correlations_match_definitions((p, a, _) in vectors()) {
        let r = pearson(&p, &a).unwrap();
        prop_assert!((r - oracle_pearson(&p, &a)).abs() < 1e-9);
        let rs = spearman(&p, &a).unwrap();
        let want = oracle_pearson(&oracle_ranks(&p), &oracle_ranks(&a));
        prop_assert!((rs - want).abs() < 1e-9);
    }

    #[test]
    fn invariances((p, a, _) in vectors(), scale in 0.01f64..100.0, shift in -50.0f64..50.0) {
        let r = pearson(&p, &a).unwrap();
        let affine: Vec<f64> = p.iter().map(|v| scale * v + shift).collect();
        prop_assert!((pearson(&affine, &a).unwrap() - r).abs() < 1e-9);
        let rs = spearman(&p, &a).unwrap();
        let monotone: Vec<f64> = p.iter().map(|v| v.powi(3) + v.exp()).collect();
        prop_assert!((spearman(&monotone, &a).unwrap() - rs).abs() < 1e-9);
    }

    #[test]
    fn rmse_star_never_exceeds_rmse((p, a, _) in vectors(), eps in 0.0f64..2.0) {
        prop_assert!(rmse_epsilon(&p, &a, Epsilon::Global(eps)).unwrap() <= rmse(&p, &a).unwrap());
    }

    #[test]
    fn fisher_p_falls_as_gap_widens(r1 in -0.9f64..0.9, g1 in 0.0f64..0.04, g2 in 0.0f64..0.04, n in 4usize..1000) {
        let (small, large) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
        let a = fisher_z_compare(r1, r1 + small, n, n).unwrap();
        let b = fisher_z_compare(r1, r1 + large, n, n).unwrap();
        prop_assert!(b.p_value <= a.p_value + 1e-15);
    }
}

#[test]
fn self_comparison_has_unit_p() {
    let s = fisher_z_compare(0.9332, 0.9332, 160, 160).unwrap();
    assert_eq!(s.p_value, 1.0);
    assert!(!s.significant_at_05);
}
