mod common;

use std::collections::HashMap;

use common::*;
use procpat_core::patterns::{find_instances, singleton_pattern, Pattern};
use proptest::prelude::*;

const ALPHABET: [&str; 3] = ["a", "b", "c"];

/// Blocks from (label, starts-new-block) pairs; the first event always opens one.
fn blocks_strategy(max_events: usize) -> impl Strategy<Value = Vec<Vec<String>>> {
    prop::collection::vec((0..ALPHABET.len(), any::<bool>()), 1..=max_events).prop_map(|events| {
        let mut blocks: Vec<Vec<String>> = Vec::new();
        for (i, (l, fresh)) in events.into_iter().enumerate() {
            if i == 0 || fresh {
                blocks.push(Vec::new());
            }
            blocks.last_mut().unwrap().push(ALPHABET[l].to_string());
        }
        blocks
    })
}

fn pattern_strategy() -> impl Strategy<Value = Pattern> {
    (1usize..=3)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(0..ALPHABET.len(), n),
                prop::collection::vec(0usize..5, n * (n - 1) / 2),
            )
        })
        .prop_filter_map("acyclic", |(labels, choices)| {
            let labels: Vec<String> = labels
                .into_iter()
                .map(|l| ALPHABET[l].to_string())
                .collect();
            pattern_from_choices(&labels, &choices)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn matcher_equals_brute_force(blocks in blocks_strategy(8), p in pattern_strategy()) {
        let po = po_from_blocks(&blocks);
        let (labels, block_of) = flatten(&blocks);
        prop_assert_eq!(po.labels(), &labels[..]);
        let fast: Vec<Vec<usize>> = find_instances(&p, &po, 10_000)
            .unwrap()
            .into_iter()
            .map(|i| i.assignment)
            .collect();
        prop_assert_eq!(fast, brute_instances(&p, &labels, &block_of));
    }

    #[test]
    fn trace_relations_match_block_positions(blocks in blocks_strategy(10)) {
        let po = po_from_blocks(&blocks);
        let (_, block_of) = flatten(&blocks);
        for e in 0..po.len() {
            prop_assert!(po.relation(e, e).is_err());
            for e2 in 0..po.len() {
                if e != e2 {
                    prop_assert_eq!(po.relation(e, e2).unwrap(), block_relation(&block_of, e, e2));
                }
            }
        }
    }

    #[test]
    fn reachability_is_a_strict_order(blocks in blocks_strategy(12)) {
        let po = po_from_blocks(&blocks);
        let (a, r) = (po.adjacency(), po.reachability());
        for i in 0..po.len() {
            prop_assert!(!r.get(i, i));
            for j in 0..po.len() {
                prop_assert!(!a.get(i, j) || r.get(i, j));
                prop_assert!(!(r.get(i, j) && r.get(j, i)));
                for k in 0..po.len() {
                    prop_assert!(!(r.get(i, j) && r.get(j, k)) || r.get(i, k));
                }
            }
        }
    }

    #[test]
    fn ids_ignore_node_order(p in pattern_strategy(), seed in any::<u64>()) {
        let n = p.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        // node perm[i] of the copy is node i of the original
        let labels: Vec<String> = (0..n)
            .map(|j| p.label(perm.iter().position(|&x| x == j).unwrap()).to_string())
            .collect();
        let rels: Vec<_> = p
            .relations()
            .into_iter()
            .map(|(u, v, k)| (perm[u], perm[v], k))
            .collect();
        let q = Pattern::new(labels, &rels, None).unwrap();
        prop_assert_eq!(p.id(), q.id());
    }
}

#[test]
fn canonical_key_is_a_congruence() {
    let mut key_to_brute: HashMap<String, String> = HashMap::new();
    let mut brute_to_key: HashMap<String, String> = HashMap::new();
    let mut total = 0;
    for n in 1..=3 {
        for p in all_patterns(n, &ALPHABET) {
            total += 1;
            let brute = brute_canonical(&p);
            let key = p.key().to_string();
            let b = key_to_brute
                .entry(key.clone())
                .or_insert_with(|| brute.clone());
            assert_eq!(*b, brute, "equal keys for non-isomorphic patterns");
            let k = brute_to_key.entry(brute).or_insert_with(|| key.clone());
            assert_eq!(*k, key, "isomorphic patterns with different keys");
        }
    }
    // 3 singletons, 9 * 5 pairs, 27 * (125 - 16 cyclic) triples
    assert_eq!(total, 2991);
    assert_eq!(key_to_brute.len(), brute_to_key.len());
}

#[test]
fn singleton_ids_over_32_labels_are_distinct() {
    let ids: std::collections::HashSet<_> = (0..32)
        .map(|i| {
            singleton_pattern(&format!("treatment_{i}"))
                .unwrap()
                .id()
                .clone()
        })
        .collect();
    assert_eq!(ids.len(), 32);
}

#[test]
fn worked_examples() {
    let chain = po_from_blocks(&[strings(&["a"]), strings(&["b"]), strings(&["c"])]);
    let ab = Pattern::new(
        strings(&["a", "b"]),
        &[(0, 1, procpat_core::patterns::PairKind::Direct)],
        None,
    )
    .unwrap();
    let found = find_instances(&ab, &chain, 10).unwrap();
    assert_eq!(found.len(), 1);
    assert_eq!(found[0].assignment, vec![0, 1]);

    let blocks = [strings(&["a"]), strings(&["b", "c"]), strings(&["d"])];
    let po = po_from_blocks(&blocks);
    let (labels, block_of) = flatten(&blocks);
    let conc = Pattern::new(
        strings(&["b", "c"]),
        &[(0, 1, procpat_core::patterns::PairKind::Concurrent)],
        None,
    )
    .unwrap();
    let direct = Pattern::new(
        strings(&["b", "c"]),
        &[(0, 1, procpat_core::patterns::PairKind::Direct)],
        None,
    )
    .unwrap();
    assert_eq!(brute_instances(&conc, &labels, &block_of).len(), 1);
    assert_eq!(find_instances(&conc, &po, 10).unwrap().len(), 1);
    assert_eq!(brute_instances(&direct, &labels, &block_of).len(), 0);
    assert_eq!(find_instances(&direct, &po, 10).unwrap().len(), 0);
}
