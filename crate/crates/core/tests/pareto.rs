mod common;

use common::brute_pareto;
use procpat_core::interest::{InterestVector, MeasureFlags};
use procpat_core::pareto::{dominates, front_indices, pareto_front, Direction, MeasuredPattern};
use procpat_core::patterns::singleton_pattern;
use proptest::prelude::*;
use Direction::*;

const DIRS: [Direction; 3] = [Max, Max, Min];

/// Points on a coarse grid (many exact ties) or drawn continuously.
fn points(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    let coord = prop_oneof![(0u8..=8).prop_map(|k| f64::from(k) / 8.0), 0.0f64..1.0];
    prop::collection::vec(prop::collection::vec(coord, 3), n)
}

fn measured(points: &[Vec<f64>]) -> Vec<MeasuredPattern> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| MeasuredPattern {
            pattern: singleton_pattern(&format!("act_{i:04}")).unwrap(),
            interest: InterestVector {
                cc: p[0],
                oi: p[1],
                cd: p[2],
            },
            case_count: 0,
            flags: MeasureFlags::default(),
            front: false,
            error: None,
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn front_equals_brute_force(pts in points(500)) {
        let front = front_indices(&pts, &DIRS).unwrap();
        prop_assert_eq!(&front, &brute_pareto(&pts, &DIRS));

        // idempotent
        let sub: Vec<Vec<f64>> = front.iter().map(|&i| pts[i].clone()).collect();
        prop_assert_eq!(front_indices(&sub, &DIRS).unwrap(), (0..sub.len()).collect::<Vec<_>>());

        // every per-dimension optimum is attained on the front
        for (d, dir) in DIRS.iter().enumerate() {
            let key = |p: &Vec<f64>| if *dir == Max { p[d] } else { -p[d] };
            let best = pts.iter().map(key).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(front.iter().any(|&i| key(&pts[i]) == best));
        }

        // members are mutually non-dominated and dominate every non-member
        for &i in &front {
            for &j in &front {
                prop_assert!(!dominates(&pts[i], &pts[j], &DIRS).unwrap());
            }
        }
        for j in (0..pts.len()).filter(|j| front.binary_search(j).is_err()) {
            prop_assert!(front.iter().any(|&i| dominates(&pts[i], &pts[j], &DIRS).unwrap()));
        }
    }

    #[test]
    fn front_is_invariant_under_monotone_maps(pts in points(200)) {
        let front = front_indices(&pts, &DIRS).unwrap();
        // power-of-two scalings are exact, so ties and order survive
        let mapped: Vec<Vec<f64>> = pts
            .iter()
            .map(|p| vec![p[0] * 4.0, p[1] * 0.5, p[2] * 1024.0])
            .collect();
        prop_assert_eq!(front_indices(&mapped, &DIRS).unwrap(), front.clone());
        // flipping a value and its direction together changes nothing
        let flipped: Vec<Vec<f64>> = pts.iter().map(|p| vec![p[0], p[1], -p[2]]).collect();
        prop_assert_eq!(front_indices(&flipped, &[Max, Max, Max]).unwrap(), front);
    }

    #[test]
    fn measured_front_marks_members(pts in points(60), broken in prop::collection::vec(any::<bool>(), 60)) {
        let mut items = measured(&pts);
        for (m, &b) in items.iter_mut().zip(&broken) {
            if b {
                m.error = Some("failed".into());
            }
        }
        let ok: Vec<usize> = (0..pts.len()).filter(|&i| !broken[i]).collect();
        let ok_pts: Vec<Vec<f64>> = ok.iter().map(|&i| pts[i].clone()).collect();
        let expected: Vec<usize> = brute_pareto(&ok_pts, &DIRS).into_iter().map(|k| ok[k]).collect();

        let front = pareto_front(&mut items, &DIRS).unwrap();
        let flagged: Vec<usize> = (0..items.len()).filter(|&i| items[i].front).collect();
        prop_assert_eq!(&flagged, &expected);
        prop_assert_eq!(front.len(), expected.len());
        for w in front.windows(2) {
            let (a, b) = (w[0].interest.cc, w[1].interest.cc);
            prop_assert!(a > b || (a == b && w[0].pattern.id() < w[1].pattern.id()));
        }
    }
}

#[test]
fn empty_and_singleton_inputs() {
    let none: Vec<Vec<f64>> = Vec::new();
    assert!(front_indices(&none, &DIRS).unwrap().is_empty());
    assert_eq!(
        front_indices(&[vec![0.1, 0.2, 0.3]], &DIRS).unwrap(),
        vec![0]
    );
    assert!(front_indices(&[vec![0.1, 0.2]], &DIRS).is_err());
}

#[test]
fn duplicates_share_membership() {
    let pts = vec![
        vec![0.5, 0.5, 0.5],
        vec![0.5, 0.5, 0.5],
        vec![0.4, 0.5, 0.5],
    ];
    assert_eq!(front_indices(&pts, &DIRS).unwrap(), vec![0, 1]);
}
