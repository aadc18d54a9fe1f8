//! Process patterns: labeled nodes with a typed relation for every node pair.
//!
//! A pattern stores, for each ordered node pair `(u, v)`, the
//! [`RelationKind`] of `v` with respect to `u`, using the same vocabulary as
//! [`PoTrace::relation`]. Matching a pattern against a partially ordered
//! trace therefore compares relation kinds directly.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::log_model::EventLog;
use crate::partial_order::{OracleConfig, PoLog, PoTrace, RelationKind};

/// Hard ceiling on pattern size; configurable limits sit below it.
pub const PATTERN_SIZE_LIMIT: usize = 16;
pub const DEFAULT_MAX_PATTERN_SIZE: usize = 10;
pub const DEFAULT_MAX_INSTANCES_PER_TRACE: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PatternError {
    #[error("pattern has {size} nodes, limit is {limit}")]
    PatternTooLarge { size: usize, limit: usize },
    #[error("pattern has no nodes")]
    EmptyPattern,
    #[error("node {0} has an empty label")]
    EmptyLabel(usize),
    #[error("no relation declared between nodes {0} and {1}")]
    MissingRelation(usize, usize),
    #[error("relation between nodes {0} and {1} declared twice")]
    DuplicateRelation(usize, usize),
    #[error("relation from node {0} to itself")]
    SelfRelation(usize),
    #[error("unknown node id {0}")]
    UnknownNode(String),
    #[error("direct/eventual relations form a cycle")]
    Cyclic,
    #[error("a single-node pattern cannot have a foundational pattern")]
    SingletonWithFoundational,
    #[error("trace `{case_id}` has more than {cap} instances")]
    InstanceCapExceeded { case_id: String, cap: usize },
}

/// Content hash of a pattern's canonical key.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PatternId(pub String);

impl PatternId {
    fn of_key(key: &str) -> PatternId {
        let digest = Sha256::digest(key.as_bytes());
        PatternId(hex::encode(&digest[..8]))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PatternId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Relation kinds as they appear in serialized patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairKind {
    Direct,
    Eventual,
    Concurrent,
}

impl PairKind {
    fn relation(self) -> RelationKind {
        match self {
            PairKind::Direct => RelationKind::Direct,
            PairKind::Eventual => RelationKind::Eventual,
            PairKind::Concurrent => RelationKind::Concurrent,
        }
    }
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "PatternJson", into = "PatternJson")]
pub struct Pattern {
    labels: Vec<String>,
    // n*n, rel[u*n+v] = relation of v w.r.t. u; diagonal unused
    rel: Vec<RelationKind>,
    foundational: Option<PatternId>,
    key: String,
    id: PatternId,
}

impl PartialEq for Pattern {
    fn eq(&self, other: &Pattern) -> bool {
        self.labels == other.labels
            && self.rel == other.rel
            && self.foundational == other.foundational
    }
}

impl fmt::Debug for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pattern({} {})", self.id, self.key)
    }
}

impl Pattern {
    /// Builds a pattern from labels and one relation per unordered node pair.
    /// `(u, v, Direct)` means `v` directly follows `u`.
    pub fn new(
        labels: Vec<String>,
        relations: &[(usize, usize, PairKind)],
        foundational: Option<PatternId>,
    ) -> Result<Pattern, PatternError> {
        let n = labels.len();
        let mut rel: Vec<Option<RelationKind>> = vec![None; n * n];
        for &(u, v, kind) in relations {
            if u >= n {
                return Err(PatternError::UnknownNode(u.to_string()));
            }
            if v >= n {
                return Err(PatternError::UnknownNode(v.to_string()));
            }
            if u == v {
                return Err(PatternError::SelfRelation(u));
            }
            if rel[u * n + v].is_some() {
                return Err(PatternError::DuplicateRelation(u.min(v), u.max(v)));
            }
            rel[u * n + v] = Some(kind.relation());
            rel[v * n + u] = Some(kind.relation().inverse());
        }
        let mut full = Vec::with_capacity(n * n);
        for u in 0..n {
            for v in 0..n {
                match rel[u * n + v] {
                    Some(r) => full.push(r),
                    None if u == v => full.push(RelationKind::Concurrent),
                    None => return Err(PatternError::MissingRelation(u.min(v), u.max(v))),
                }
            }
        }
        Pattern::from_matrix(labels, full, foundational)
    }

    pub fn singleton(label: &str) -> Result<Pattern, PatternError> {
        Pattern::from_matrix(
            vec![label.to_string()],
            vec![RelationKind::Concurrent],
            None,
        )
    }

    /// Adds one node; `to_new[u]` is the relation of the new node w.r.t. `u`.
    pub fn extended(&self, label: &str, to_new: &[RelationKind]) -> Result<Pattern, PatternError> {
        let n = self.len();
        assert_eq!(to_new.len(), n, "one relation per existing node");
        let m = n + 1;
        let mut rel = vec![RelationKind::Concurrent; m * m];
        for u in 0..n {
            for v in 0..n {
                rel[u * m + v] = self.rel[u * n + v];
            }
            rel[u * m + n] = to_new[u];
            rel[n * m + u] = to_new[u].inverse();
        }
        let mut labels = self.labels.clone();
        labels.push(label.to_string());
        Pattern::from_matrix(labels, rel, Some(self.id.clone()))
    }

    fn from_matrix(
        labels: Vec<String>,
        rel: Vec<RelationKind>,
        foundational: Option<PatternId>,
    ) -> Result<Pattern, PatternError> {
        let n = labels.len();
        if n == 0 {
            return Err(PatternError::EmptyPattern);
        }
        if n > PATTERN_SIZE_LIMIT {
            return Err(PatternError::PatternTooLarge {
                size: n,
                limit: PATTERN_SIZE_LIMIT,
            });
        }
        if let Some(i) = labels.iter().position(|l| l.is_empty()) {
            return Err(PatternError::EmptyLabel(i));
        }
        if n == 1 && foundational.is_some() {
            return Err(PatternError::SingletonWithFoundational);
        }
        if topological_order(n, &rel).is_none() {
            return Err(PatternError::Cyclic);
        }
        let key = canonical_key_of(&labels, &rel);
        let id = PatternId::of_key(&key);
        Ok(Pattern {
            labels,
            rel,
            foundational,
            key,
            id,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, u: usize) -> &str {
        &self.labels[u]
    }

    /// Relation of node `v` with respect to node `u` (`u != v`).
    pub fn relation(&self, u: usize, v: usize) -> RelationKind {
        debug_assert_ne!(u, v);
        self.rel[u * self.len() + v]
    }

    pub fn foundational(&self) -> Option<&PatternId> {
        self.foundational.as_ref()
    }

    pub fn id(&self) -> &PatternId {
        &self.id
    }

    pub fn key(&self) -> &str {
        &self.key
    }

    /// One entry per unordered pair, oriented along direct/eventual edges.
    pub fn relations(&self) -> Vec<(usize, usize, PairKind)> {
        let n = self.len();
        let mut out = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                out.push(match self.relation(u, v) {
                    RelationKind::Direct => (u, v, PairKind::Direct),
                    RelationKind::Eventual => (u, v, PairKind::Eventual),
                    RelationKind::Concurrent => (u, v, PairKind::Concurrent),
                    RelationKind::InverseDirect => (v, u, PairKind::Direct),
                    RelationKind::InverseEventual => (v, u, PairKind::Eventual),
                });
            }
        }
        out
    }

    /// Same structure with a different foundational link.
    pub fn with_foundational(&self, foundational: Option<PatternId>) -> Pattern {
        Pattern {
            foundational,
            ..self.clone()
        }
    }
}

/// Kahn's algorithm over direct/eventual edges, smallest index first.
fn topological_order(n: usize, rel: &[RelationKind]) -> Option<Vec<usize>> {
    let mut indegree = vec![0usize; n];
    for u in 0..n {
        for v in 0..n {
            if u != v && rel[u * n + v].is_forward() {
                indegree[v] += 1;
            }
        }
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(u) = ready.pop_first() {
        order.push(u);
        for v in 0..n {
            if u != v && rel[u * n + v].is_forward() {
                indegree[v] -= 1;
                if indegree[v] == 0 {
                    ready.insert(v);
                }
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// `twin[x]` is the smallest node interchangeable with `x`: same label, same
/// relation to every other node, and concurrent with `x`.
fn twin_representatives(labels: &[String], rel: &[RelationKind]) -> Vec<usize> {
    let n = labels.len();
    let twins = |x: usize, y: usize| {
        labels[x] == labels[y]
            && rel[x * n + y] == RelationKind::Concurrent
            && (0..n)
                .filter(|&w| w != x && w != y)
                .all(|w| rel[x * n + w] == rel[y * n + w])
    };
    (0..n)
        .map(|x| (0..x).find(|&y| twins(x, y)).unwrap_or(x))
        .collect()
}

fn relation_code(r: RelationKind) -> u8 {
    match r {
        RelationKind::Direct => b'd',
        RelationKind::Eventual => b'e',
        RelationKind::Concurrent => b'c',
        // unreachable along a topological order
        RelationKind::InverseDirect => b'D',
        RelationKind::InverseEventual => b'E',
    }
}

type Signature = (String, Vec<u8>);

struct KeySearch<'a> {
    n: usize,
    labels: &'a [String],
    rel: &'a [RelationKind],
    twin: Vec<usize>,
    order: Vec<usize>,
    placed: Vec<bool>,
    current: Vec<Signature>,
    best: Option<Vec<Signature>>,
}

impl KeySearch<'_> {
    fn signature(&self, x: usize) -> Signature {
        let codes = self
            .order
            .iter()
            .map(|&p| relation_code(self.rel[p * self.n + x]))
            .collect();
        (self.labels[x].clone(), codes)
    }

    fn available(&self, x: usize) -> bool {
        !self.placed[x]
            && (0..self.n)
                .all(|p| p == x || self.placed[p] || !self.rel[p * self.n + x].is_forward())
    }

    fn run(&mut self) {
        let k = self.order.len();
        if k == self.n {
            if self.best.as_ref().is_none_or(|b| self.current < *b) {
                self.best = Some(self.current.clone());
            }
            return;
        }
        let candidates: Vec<(usize, Signature)> = (0..self.n)
            .filter(|&x| self.available(x))
            .map(|x| (x, self.signature(x)))
            .collect();
        let Some(min_sig) = candidates.iter().map(|(_, s)| s).min().cloned() else {
            return;
        };
        if let Some(best) = &self.best {
            let prefix = self.current.iter().chain(std::iter::once(&min_sig));
            if prefix.cmp(best[..=k].iter()) == std::cmp::Ordering::Greater {
                return;
            }
        }
        let mut tried_twins = BTreeSet::new();
        for (x, sig) in candidates {
            if sig != min_sig || !tried_twins.insert(self.twin[x]) {
                continue;
            }
            self.order.push(x);
            self.placed[x] = true;
            self.current.push(sig);
            self.run();
            self.current.pop();
            self.placed[x] = false;
            self.order.pop();
        }
    }
}

fn escape_label(label: &str, out: &mut String) {
    for c in label.chars() {
        if matches!(c, '[' | ']' | '\\') {
            out.push('\\');
        }
        out.push(c);
    }
}

fn canonical_key_of(labels: &[String], rel: &[RelationKind]) -> String {
    let n = labels.len();
    let mut search = KeySearch {
        n,
        labels,
        rel,
        twin: twin_representatives(labels, rel),
        order: Vec::with_capacity(n),
        placed: vec![false; n],
        current: Vec::with_capacity(n),
        best: None,
    };
    search.run();
    let mut key = String::new();
    for (label, codes) in search
        .best
        .expect("acyclic patterns have a topological order")
    {
        escape_label(&label, &mut key);
        key.push('[');
        key.push_str(std::str::from_utf8(&codes).expect("ascii codes"));
        key.push(']');
    }
    key
}

/// Canonical form: equal for isomorphic patterns, distinct otherwise.
pub fn canonical_key(p: &Pattern) -> Result<String, PatternError> {
    if p.len() > PATTERN_SIZE_LIMIT {
        return Err(PatternError::PatternTooLarge {
            size: p.len(),
            limit: PATTERN_SIZE_LIMIT,
        });
    }
    Ok(p.key.clone())
}

pub fn singleton_pattern(activity: &str) -> Result<Pattern, PatternError> {
    Pattern::singleton(activity)
}

/// One occurrence of a pattern: `assignment[node]` is an event index of the
/// partially ordered trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternInstance {
    pub case_id: String,
    pub assignment: Vec<usize>,
}

impl PatternInstance {
    pub fn image(&self) -> BTreeSet<usize> {
        self.assignment.iter().copied().collect()
    }
}

/// Reusable matcher; precomputes the node order and twin classes.
pub struct Matcher<'p> {
    pattern: &'p Pattern,
    order: Vec<usize>,
    twin: Vec<usize>,
}

impl<'p> Matcher<'p> {
    pub fn new(pattern: &'p Pattern) -> Matcher<'p> {
        let order = topological_order(pattern.len(), &pattern.rel).expect("validated acyclic");
        Matcher {
            order,
            twin: twin_representatives(&pattern.labels, &pattern.rel),
            pattern,
        }
    }

    /// Distinct event subsets matching the pattern, each with its
    /// lexicographically smallest assignment, sorted by assignment.
    pub fn find(&self, po: &PoTrace, cap: usize) -> Result<Vec<PatternInstance>, PatternError> {
        let n = self.pattern.len();
        let candidates: Vec<&[usize]> = self
            .order
            .iter()
            .map(|&u| po.events_labeled(self.pattern.label(u)))
            .collect();
        if candidates.iter().any(|c| c.is_empty()) {
            return Ok(Vec::new());
        }
        let mut found: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
        let mut assignment = vec![usize::MAX; n];
        let mut used = vec![false; po.len()];
        self.search(
            0,
            po,
            &candidates,
            &mut assignment,
            &mut used,
            &mut found,
            cap,
        )?;
        let mut out: Vec<PatternInstance> = found
            .into_values()
            .map(|assignment| PatternInstance {
                case_id: po.case_id().to_string(),
                assignment,
            })
            .collect();
        out.sort_by(|a, b| a.assignment.cmp(&b.assignment));
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn search(
        &self,
        depth: usize,
        po: &PoTrace,
        candidates: &[&[usize]],
        assignment: &mut [usize],
        used: &mut [bool],
        found: &mut BTreeMap<Vec<usize>, Vec<usize>>,
        cap: usize,
    ) -> Result<(), PatternError> {
        if depth == self.order.len() {
            let mut image = assignment.to_vec();
            image.sort_unstable();
            let entry = found.entry(image).or_insert_with(|| assignment.to_vec());
            if *assignment < entry[..] {
                entry.copy_from_slice(assignment);
            }
            if found.len() > cap {
                return Err(PatternError::InstanceCapExceeded {
                    case_id: po.case_id().to_string(),
                    cap,
                });
            }
            return Ok(());
        }
        let u = self.order[depth];
        'next: for &e in candidates[depth] {
            if used[e] {
                continue;
            }
            for &w in &self.order[..depth] {
                let f = assignment[w];
                if self.twin[w] == self.twin[u] && ((w < u) != (f < e)) {
                    continue 'next;
                }
                if po.relation_unchecked(f, e) != self.pattern.relation(w, u) {
                    continue 'next;
                }
            }
            assignment[u] = e;
            used[e] = true;
            self.search(depth + 1, po, candidates, assignment, used, found, cap)?;
            used[e] = false;
            assignment[u] = usize::MAX;
        }
        Ok(())
    }
}

pub fn find_instances(
    p: &Pattern,
    po: &PoTrace,
    cap: usize,
) -> Result<Vec<PatternInstance>, PatternError> {
    Matcher::new(p).find(po, cap)
}

/// Instances of one pattern across a log, in canonical trace order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceIndex {
    pub pattern_id: PatternId,
    pub case_ids: Vec<String>,
    pub instances: Vec<Vec<PatternInstance>>,
    pub counts: Vec<u32>,
}

impl InstanceIndex {
    pub fn build(p: &Pattern, polog: &PoLog, cap: usize) -> Result<InstanceIndex, PatternError> {
        let matcher = Matcher::new(p);
        let instances = polog
            .traces()
            .par_iter()
            .map(|po| matcher.find(po, cap))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(InstanceIndex {
            pattern_id: p.id().clone(),
            case_ids: polog
                .traces()
                .iter()
                .map(|t| t.case_id().to_string())
                .collect(),
            counts: instances.iter().map(|v| v.len() as u32).collect(),
            instances,
        })
    }

    /// Index carrying only per-trace counts, no instance lists.
    pub fn from_counts(
        pattern_id: PatternId,
        case_ids: Vec<String>,
        counts: Vec<u32>,
    ) -> InstanceIndex {
        InstanceIndex {
            pattern_id,
            instances: vec![Vec::new(); counts.len()],
            case_ids,
            counts,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn case_count(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

pub fn instances_in_log(
    p: &Pattern,
    log: &EventLog,
    oracle: &OracleConfig,
    cap: usize,
) -> Result<InstanceIndex, PatternError> {
    InstanceIndex::build(p, &PoLog::build(log, oracle), cap)
}

/// Per-trace instance counts (the frequency vector) over a prepared log.
pub fn frequency_vector(p: &Pattern, polog: &PoLog, cap: usize) -> Result<Vec<u32>, PatternError> {
    let matcher = Matcher::new(p);
    polog
        .traces()
        .par_iter()
        .map(|po| matcher.find(po, cap).map(|v| v.len() as u32))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeJson {
    pub id: serde_json::Value,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationJson {
    pub from: serde_json::Value,
    pub to: serde_json::Value,
    pub kind: PairKind,
}

/// Wire form of a pattern. `id` and `key` are recomputed on input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<PatternId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    pub nodes: Vec<NodeJson>,
    #[serde(default)]
    pub relations: Vec<RelationJson>,
    #[serde(default)]
    pub foundational: Option<PatternId>,
}

impl TryFrom<PatternJson> for Pattern {
    type Error = PatternError;

    fn try_from(json: PatternJson) -> Result<Pattern, PatternError> {
        let mut index: HashMap<String, usize> = HashMap::new();
        for (i, node) in json.nodes.iter().enumerate() {
            if index.insert(node.id.to_string(), i).is_some() {
                return Err(PatternError::UnknownNode(format!(
                    "duplicate id {}",
                    node.id
                )));
            }
        }
        let lookup = |v: &serde_json::Value| {
            index
                .get(&v.to_string())
                .copied()
                .ok_or_else(|| PatternError::UnknownNode(v.to_string()))
        };
        let relations = json
            .relations
            .iter()
            .map(|r| Ok((lookup(&r.from)?, lookup(&r.to)?, r.kind)))
            .collect::<Result<Vec<_>, PatternError>>()?;
        Pattern::new(
            json.nodes.into_iter().map(|n| n.label).collect(),
            &relations,
            json.foundational,
        )
    }
}

impl From<Pattern> for PatternJson {
    fn from(p: Pattern) -> PatternJson {
        PatternJson {
            nodes: p
                .labels
                .iter()
                .enumerate()
                .map(|(i, l)| NodeJson {
                    id: i.into(),
                    label: l.clone(),
                })
                .collect(),
            relations: p
                .relations()
                .into_iter()
                .map(|(from, to, kind)| RelationJson {
                    from: from.into(),
                    to: to.into(),
                    kind,
                })
                .collect(),
            id: Some(p.id),
            key: Some(p.key),
            foundational: p.foundational,
        }
    }
}
