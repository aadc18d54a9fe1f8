//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use chrono::{NaiveDate, TimeDelta};
use procpat_core::log_model::{CaseAttributes, Event, Trace};
use procpat_core::pareto::Direction;
use procpat_core::partial_order::{build_partial_order, OracleConfig, PoTrace, RelationKind};
use procpat_core::patterns::{PairKind, Pattern};

/// Trace whose blocks are separated by one day; block members share a time.
pub fn block_trace(case_id: &str, blocks: &[Vec<String>]) -> Trace {
    let base = NaiveDate::from_ymd_opt(2022, 5, 1)
        .unwrap()
        .and_hms_opt(9, 0, 0)
        .unwrap();
    let events = blocks
        .iter()
        .enumerate()
        .flat_map(|(b, block)| {
            block.iter().map(move |l| Event {
                activity: l.clone(),
                case_id: case_id.to_string(),
                timestamp: base + TimeDelta::days(b as i64),
                end: None,
                attrs: BTreeMap::new(),
            })
        })
        .collect();
    Trace {
        case_id: case_id.to_string(),
        events,
        case_attrs: CaseAttributes::default(),
        outcome: None,
    }
}

pub fn po_from_blocks(blocks: &[Vec<String>]) -> PoTrace {
    build_partial_order(&block_trace("t", blocks), &OracleConfig::default()).unwrap()
}

/// Flattened labels and block index per event, in event order.
pub fn flatten(blocks: &[Vec<String>]) -> (Vec<String>, Vec<usize>) {
    let mut labels = Vec::new();
    let mut block_of = Vec::new();
    for (b, block) in blocks.iter().enumerate() {
        for l in block {
            labels.push(l.clone());
            block_of.push(b);
        }
    }
    (labels, block_of)
}

/// Relation of e2 w.r.t. e read off block positions of a block chain.
pub fn block_relation(block_of: &[usize], e: usize, e2: usize) -> RelationKind {
    let (a, b) = (block_of[e] as i64, block_of[e2] as i64);
    match b - a {
        0 => RelationKind::Concurrent,
        1 => RelationKind::Direct,
        d if d > 1 => RelationKind::Eventual,
        -1 => RelationKind::InverseDirect,
        _ => RelationKind::InverseEventual,
    }
}

/// Every injective label- and relation-preserving assignment, reduced to
/// one (lexicographically smallest) assignment per event subset.
pub fn brute_instances(p: &Pattern, labels: &[String], block_of: &[usize]) -> Vec<Vec<usize>> {
    fn rec(
        p: &Pattern,
        labels: &[String],
        block_of: &[usize],
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if cur.len() == p.len() {
            let ok = (0..p.len()).all(|u| {
                labels[cur[u]] == p.label(u)
                    && (0..p.len())
                        .filter(|&v| v != u)
                        .all(|v| block_relation(block_of, cur[u], cur[v]) == p.relation(u, v))
            });
            if ok {
                out.push(cur.clone());
            }
            return;
        }
        for e in 0..labels.len() {
            if !cur.contains(&e) {
                cur.push(e);
                rec(p, labels, block_of, cur, out);
                cur.pop();
            }
        }
    }
    let mut all = Vec::new();
    rec(p, labels, block_of, &mut Vec::new(), &mut all);
    let mut by_image: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for a in all {
        let mut image = a.clone();
        image.sort_unstable();
        let slot = by_image.entry(image).or_insert_with(|| a.clone());
        if a < *slot {
            *slot = a;
        }
    }
    let mut out: Vec<Vec<usize>> = by_image.into_values().collect();
    out.sort();
    out
}

pub const PAIR_CHOICES: [(bool, PairKind); 5] = [
    (false, PairKind::Direct),
    (true, PairKind::Direct),
    (false, PairKind::Eventual),
    (true, PairKind::Eventual),
    (false, PairKind::Concurrent),
];

/// Pattern from labels and one choice index (into `PAIR_CHOICES`) per pair
/// `(u, v)`, `u < v`, in row order. `None` when cyclic.
pub fn pattern_from_choices(labels: &[String], choices: &[usize]) -> Option<Pattern> {
    let n = labels.len();
    let mut rels = Vec::new();
    let mut k = 0;
    for u in 0..n {
        for v in u + 1..n {
            let (flip, kind) = PAIR_CHOICES[choices[k]];
            rels.push(if flip { (v, u, kind) } else { (u, v, kind) });
            k += 1;
        }
    }
    Pattern::new(labels.to_vec(), &rels, None).ok()
}

/// All valid patterns with `n` nodes over `alphabet`.
pub fn all_patterns(n: usize, alphabet: &[&str]) -> Vec<Pattern> {
    let pairs = n * (n - 1) / 2;
    let mut out = Vec::new();
    let label_combos = alphabet.len().pow(n as u32);
    for lc in 0..label_combos {
        let labels: Vec<String> = (0..n)
            .map(|i| alphabet[(lc / alphabet.len().pow(i as u32)) % alphabet.len()].to_string())
            .collect();
        for rc in 0..5usize.pow(pairs as u32) {
            let choices: Vec<usize> = (0..pairs)
                .map(|i| (rc / 5usize.pow(i as u32)) % 5)
                .collect();
            if let Some(p) = pattern_from_choices(&labels, &choices) {
                out.push(p);
            }
        }
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for perm in permutations(n - 1) {
        for pos in 0..=perm.len() {
            let mut p = perm.clone();
            p.insert(pos, n - 1);
            out.push(p);
        }
    }
    out
}

/// Canonical form by minimising over every node permutation.
pub fn brute_canonical(p: &Pattern) -> String {
    let n = p.len();
    permutations(n)
        .into_iter()
        .map(|perm| {
            let mut s = String::new();
            for &u in &perm {
                s.push_str(p.label(u));
                s.push('|');
            }
            for &u in &perm {
                for &v in &perm {
                    if u != v {
                        s.push_str(&format!("{:?},", p.relation(u, v)));
                    }
                }
            }
            s
        })
        .min()
        .unwrap()
}

/// O(n²) non-dominated filter.
pub fn brute_pareto(points: &[Vec<f64>], dirs: &[Direction]) -> Vec<usize> {
    let better_eq = |a: f64, b: f64, d: Direction| match d {
        Direction::Max => a >= b,
        Direction::Min => a <= b,
    };
    let dominated = |i: usize, j: usize| {
        // does j dominate i?
        let all = (0..dirs.len()).all(|k| better_eq(points[j][k], points[i][k], dirs[k]));
        let strict = (0..dirs.len()).any(|k| points[j][k] != points[i][k]);
        all && strict
    };
    (0..points.len())
        .filter(|&i| !(0..points.len()).any(|j| j != i && dominated(i, j)))
        .collect()
}

/// Every trace of two blocks, each block holding one or two labels.
pub fn two_block_traces(alphabet: &[&str]) -> Vec<Vec<Vec<String>>> {
    let mut blocks: Vec<Vec<String>> = alphabet.iter().map(|a| vec![a.to_string()]).collect();
    for (i, a) in alphabet.iter().enumerate() {
        for b in &alphabet[i..] {
            blocks.push(vec![a.to_string(), b.to_string()]);
        }
    }
    let mut out = Vec::new();
    for x in &blocks {
        for y in &blocks {
            out.push(vec![x.clone(), y.clone()]);
        }
    }
    out
}

/// Keys of every pattern adding one node to `p` (any label of `alphabet`,
/// any relation to each existing node) that has an instance in the trace,
/// matched by brute force.
pub fn brute_extensions(
    p: &Pattern,
    blocks: &[Vec<String>],
    alphabet: &[&str],
) -> BTreeSet<String> {
    let (labels, block_of) = flatten(blocks);
    let n = p.len();
    let kinds = RelationKind::ALL.len();
    let mut out = BTreeSet::new();
    for label in alphabet {
        for code in 0..kinds.pow(n as u32) {
            let to_new: Vec<RelationKind> = (0..n)
                .map(|i| RelationKind::ALL[(code / kinds.pow(i as u32)) % kinds])
                .collect();
            let Ok(q) = p.extended(label, &to_new) else {
                continue;
            };
            if !brute_instances(&q, &labels, &block_of).is_empty() {
                out.insert(q.key().to_string());
            }
        }
    }
    out
}

pub fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}
