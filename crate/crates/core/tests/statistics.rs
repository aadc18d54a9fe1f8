use std::collections::BTreeMap;

use procpat_core::interest::{
    entropy, information_gain, kaplan_meier, log_rank, spearman, CdAggregation, DistanceConfig,
    DistanceModel,
};
use procpat_core::log_model::{
    AttributeDecl, AttributeKind, CaseAttributes, EventLog, LogSchema, Trace,
};
use proptest::prelude::*;

/// Rank via counting (no sorting), then the closed-form tie-aware formula.
fn rank_formula_rho(x: &[f64], y: &[f64]) -> f64 {
    let rank = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|a| {
                let less = v.iter().filter(|b| *b < a).count() as f64;
                let equal = v.iter().filter(|b| *b == a).count() as f64;
                less + (equal + 1.0) / 2.0
            })
            .collect()
    };
    let (rx, ry) = (rank(x), rank(y));
    let n = x.len() as f64;
    let c = n * ((n + 1.0) / 2.0).powi(2);
    let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| a * b).sum::<f64>() - c;
    let sxx: f64 = rx.iter().map(|a| a * a).sum::<f64>() - c;
    let syy: f64 = ry.iter().map(|a| a * a).sum::<f64>() - c;
    sxy / (sxx * syy).sqrt()
}

fn tied_vector() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0u8..6, 12).prop_map(|v| v.into_iter().map(f64::from).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn spearman_matches_rank_formula(x in tied_vector(), y in tied_vector()) {
        let s = spearman(&x, &y).unwrap();
        let constant = |v: &[f64]| v.iter().all(|a| *a == v[0]);
        if constant(&x) || constant(&y) {
            prop_assert!(s.degenerate);
            prop_assert_eq!(s.value, 0.0);
        } else {
            prop_assert!((s.value - rank_formula_rho(&x, &y)).abs() < 1e-9);
        }
    }

    #[test]
    fn spearman_self_and_monotone_invariance(x in tied_vector(), y in tied_vector()) {
        prop_assume!(x.iter().any(|a| *a != x[0]) && y.iter().any(|a| *a != y[0]));
        prop_assert!((spearman(&x, &x).unwrap().value - 1.0).abs() < 1e-12);
        let fx: Vec<f64> = x.iter().map(|a| a.exp() * 3.0 + 7.0).collect();
        let fy: Vec<f64> = y.iter().map(|a| a.powi(3)).collect();
        prop_assert!((spearman(&fx, &fy).unwrap().value - spearman(&x, &y).unwrap().value).abs() < 1e-12);
    }

    #[test]
    fn information_gain_is_bounded(f in prop::collection::vec(0u32..4, 1..40), seed in any::<u64>()) {
        let labels: Vec<u64> = (0..f.len() as u64).map(|i| (i.wrapping_mul(seed | 1) >> 7) % 3).collect();
        let ig = information_gain(&f, &labels).unwrap();
        prop_assert!(ig >= 0.0);
        prop_assert!(ig <= entropy(&labels) + 1e-12);
    }

    #[test]
    fn km_is_non_increasing_and_empirical(times in prop::collection::vec(1u8..20, 1..30)) {
        let t: Vec<f64> = times.iter().map(|&x| f64::from(x)).collect();
        let km = kaplan_meier(&t, &vec![true; t.len()]).unwrap();
        prop_assert!(km[0].survival <= 1.0);
        for w in km.windows(2) {
            prop_assert!(w[1].survival <= w[0].survival);
        }
        for p in &km {
            let surviving = t.iter().filter(|&&x| x > p.time).count() as f64 / t.len() as f64;
            prop_assert!((p.survival - surviving).abs() < 1e-12);
        }
    }
}

#[test]
fn information_gain_fixtures() {
    let ab = ["A", "A", "B", "B"];
    assert!((information_gain(&[0, 0, 1, 2], &ab).unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(
        information_gain(&[0, 0, 1, 1], &["A", "B", "A", "B"]).unwrap(),
        0.0
    );
    // H = 1; the value-0 group {A, A, B} has entropy log2(3) - 2/3, weight 3/4
    let expected = 1.0 - 0.75 * (3f64.log2() - 2.0 / 3.0);
    assert!((information_gain(&[0, 0, 0, 1], &ab).unwrap() - expected).abs() < 1e-12);
    assert!((information_gain(&[0, 1, 0, 1], &[0, 1, 0, 1]).unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(information_gain(&[5, 5, 5, 5], &ab).unwrap(), 0.0);
}

#[test]
fn independent_feature_has_zero_gain() {
    // product construction: every (feature, label) combination twice
    let mut f = Vec::new();
    let mut l = Vec::new();
    for a in 0..3u32 {
        for b in ["x", "y"] {
            for _ in 0..2 {
                f.push(a);
                l.push(b);
            }
        }
    }
    assert_eq!(information_gain(&f, &l).unwrap(), 0.0);
}

#[test]
fn spearman_hand_value_with_ties() {
    // ranks x = (1.5, 1.5, 3), y = (1, 2, 3)
    let rho = spearman(&[1.0, 1.0, 2.0], &[2.0, 3.0, 10.0]).unwrap().value;
    let direct = {
        let (rx, ry) = ([1.5, 1.5, 3.0], [1.0, 2.0, 3.0]);
        let sxy: f64 = (0..3).map(|i| (rx[i] - 2.0) * (ry[i] - 2.0)).sum();
        let sxx: f64 = rx.iter().map(|a| (a - 2.0) * (a - 2.0)).sum();
        let syy: f64 = ry.iter().map(|a| (a - 2.0) * (a - 2.0)).sum();
        sxy / (sxx * syy).sqrt()
    };
    assert!((rho - direct).abs() < 1e-12);
    assert!((direct - 3f64.sqrt() / 2.0).abs() < 1e-12);
}

#[test]
fn km_fixtures() {
    let s: Vec<f64> = kaplan_meier(&[1.0, 2.0, 3.0], &[true; 3])
        .unwrap()
        .iter()
        .map(|p| p.survival)
        .collect();
    assert_eq!(s, vec![2.0 / 3.0, 1.0 / 3.0, 0.0]);
}

#[test]
fn log_rank_fixtures() {
    let t = [1.0, 2.0, 3.0];
    let same = log_rank((&t, &[true; 3]), (&t, &[true; 3])).unwrap();
    assert_eq!(same.statistic, 0.0);
    assert_eq!(same.p_value, 1.0);

    // risk table for A = <1,2,3>, B = <10,20,30>:
    // t=1: nA 3, n 6, E 0.5,  V 0.25
    // t=2: nA 2, n 5, E 0.4,  V 0.24
    // t=3: nA 1, n 4, E 0.25, V 0.1875
    // later times have nA = 0 and contribute nothing
    let r = log_rank((&t, &[true; 3]), (&[10.0, 20.0, 30.0], &[true; 3])).unwrap();
    let stat = (3.0f64 - 1.15).powi(2) / 0.6775;
    assert!((r.statistic - stat).abs() < 1e-12);
    // P(chi2_1 > s) = erfc(sqrt(s / 2)), s = 5.0516605...
    assert!(
        (r.p_value - 0.024602349953641786).abs() < 1e-9,
        "{}",
        r.p_value
    );
    assert!(log_rank((&t, &[true; 3]), (&[], &[])).is_err());
}

fn attrs(age: Option<f64>, cats: &[(&str, &str)]) -> CaseAttributes {
    CaseAttributes {
        numeric: BTreeMap::from([("age".to_string(), age)]),
        categorical: cats
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect(),
    }
}

fn attr_log(rows: &[(Option<f64>, &str, &str)]) -> EventLog {
    let schema = LogSchema {
        case_attributes: vec![
            AttributeDecl {
                name: "age".into(),
                kind: AttributeKind::Numeric,
            },
            AttributeDecl {
                name: "sex".into(),
                kind: AttributeKind::Categorical,
            },
            AttributeDecl {
                name: "site".into(),
                kind: AttributeKind::Categorical,
            },
        ],
        ..LogSchema::default()
    };
    let traces = rows
        .iter()
        .enumerate()
        .map(|(i, (age, sex, site))| {
            let base = chrono::NaiveDate::from_ymd_opt(2020, 1, 1)
                .unwrap()
                .and_hms_opt(0, 0, 0)
                .unwrap();
            Trace {
                case_id: format!("c{i:03}"),
                events: vec![procpat_core::log_model::Event {
                    activity: "x".into(),
                    case_id: format!("c{i:03}"),
                    timestamp: base,
                    end: None,
                    attrs: BTreeMap::new(),
                }],
                case_attrs: attrs(*age, &[("sex", sex), ("site", site)]),
                outcome: Some(procpat_core::log_model::OutcomeValue::Categorical(
                    "y".into(),
                )),
            }
        })
        .collect();
    EventLog::new(traces, schema).unwrap()
}

#[test]
fn pair_distance_hand_values() {
    let log = attr_log(&[(Some(0.0), "f", "n"), (Some(10.0), "m", "s")]);
    let cat_only = DistanceModel::fit(
        &log,
        &DistanceConfig {
            numeric: Some(vec![]),
            ..Default::default()
        },
    )
    .unwrap();
    assert!((cat_only.case_pair_distance(0, 1) - 2.0 / 3.0).abs() < 1e-15);
    let num_only = DistanceModel::fit(
        &log,
        &DistanceConfig {
            categorical: Some(vec![]),
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(num_only.case_pair_distance(0, 1), 1.0);
    assert_eq!(num_only.case_pair_distance(1, 1), 0.0);
}

#[test]
fn missing_numeric_is_mean_imputed() {
    let log = attr_log(&[
        (Some(0.0), "f", "n"),
        (Some(10.0), "f", "n"),
        (None, "f", "n"),
    ]);
    let m = DistanceModel::fit(
        &log,
        &DistanceConfig {
            categorical: Some(vec![]),
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(m.case_pair_distance(0, 2), 0.5);
}

#[test]
fn case_distance_aggregations() {
    // with = {0, 1}, without = {2, 3}; every cross pair differs in exactly
    // one of the two categoricals and has equal age, so dist = 1/3
    let log = attr_log(&[
        (Some(1.0), "f", "n"),
        (Some(1.0), "m", "s"),
        (Some(1.0), "f", "s"),
        (Some(1.0), "m", "n"),
    ]);
    let cfg = DistanceConfig::default();
    let m = DistanceModel::fit(&log, &cfg).unwrap();
    let counts = [1, 2, 0, 0];
    let mean = m.case_distance(&counts, CdAggregation::PairMean).unwrap();
    let literal = m
        .case_distance(&counts, CdAggregation::TraceNormalized)
        .unwrap();
    assert!((mean.value - 1.0 / 3.0).abs() < 1e-15);
    assert!((literal.value - 4.0 * (1.0 / 3.0) / 4.0).abs() < 1e-15);
    assert!(
        m.case_distance(&[0, 0, 0, 0], CdAggregation::PairMean)
            .unwrap()
            .degenerate
    );

    let same = attr_log(&[(Some(3.0), "f", "n"); 4]);
    let m = DistanceModel::fit(&same, &cfg).unwrap();
    for agg in [CdAggregation::PairMean, CdAggregation::TraceNormalized] {
        assert_eq!(m.case_distance(&counts, agg).unwrap().value, 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn distance_properties(
        rows in prop::collection::vec((prop::option::of(0u8..50), 0u8..3, 0u8..2), 2..12),
        present in prop::collection::vec(any::<bool>(), 12),
    ) {
        let sex = ["f", "m", "x"];
        let site = ["n", "s"];
        let data: Vec<(Option<f64>, &str, &str)> = rows
            .iter()
            .map(|(a, s, t)| (a.map(f64::from), sex[*s as usize], site[*t as usize]))
            .collect();
        let log = attr_log(&data);
        let m = DistanceModel::fit(&log, &DistanceConfig::default()).unwrap();
        let n = data.len();
        for i in 0..n {
            prop_assert_eq!(m.case_pair_distance(i, i), 0.0);
            for j in 0..n {
                let d = m.case_pair_distance(i, j);
                prop_assert!((0.0..=1.0).contains(&d));
                prop_assert_eq!(d, m.case_pair_distance(j, i));
            }
        }
        // pair-mean CD is unchanged when every case is duplicated once
        let counts: Vec<u32> = (0..n).map(|i| u32::from(present[i])).collect();
        let doubled: Vec<_> = data.iter().chain(data.iter()).cloned().collect();
        let m2 = DistanceModel::fit(&attr_log(&doubled), &DistanceConfig::default()).unwrap();
        let counts2: Vec<u32> = counts.iter().chain(counts.iter()).copied().collect();
        let a = m.case_distance(&counts, CdAggregation::PairMean).unwrap();
        let b = m2.case_distance(&counts2, CdAggregation::PairMean).unwrap();
        prop_assert_eq!(a.degenerate, b.degenerate);
        prop_assert!((a.value - b.value).abs() < 1e-12, "{} vs {}", a.value, b.value);
    }
}
