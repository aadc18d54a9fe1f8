//! Conversion of traces into partially ordered traces.
//!
//! A conversion oracle partitions the events of a trace into concurrency
//! blocks. Blocks are laid out in time order and every event of one block
//! gets an edge to every event of the next block, so the DAG is a block
//! chain: `e` reaches `e2` iff `e`'s block precedes `e2`'s block, and `e2`
//! directly follows `e` iff the blocks are consecutive.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use chrono::{NaiveDateTime, TimeDelta};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::bitmatrix::BitMatrix;
use crate::log_model::{EventLog, Trace};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PartialOrderError {
    #[error("event index {index} out of range for trace of {len} events")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("relation of an event with itself is undefined")]
    SameEvent,
    #[error("trace `{0}` has no events")]
    EmptyTrace(String),
    #[error("invalid duration `{0}`")]
    InvalidDuration(String),
}

/// A non-negative duration written as `<n><unit>` with unit in d/h/m/s/ms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Window(pub TimeDelta);

impl Window {
    pub fn days(d: i64) -> Window {
        Window(TimeDelta::days(d))
    }
}

impl FromStr for Window {
    type Err = PartialOrderError;

    fn from_str(s: &str) -> Result<Window, PartialOrderError> {
        let s = s.trim();
        let err = || PartialOrderError::InvalidDuration(s.to_string());
        if s == "0" {
            return Ok(Window::default());
        }
        let split = s.find(|c: char| !c.is_ascii_digit()).ok_or_else(err)?;
        let (num, unit) = s.split_at(split);
        let n: i64 = num.parse().map_err(|_| err())?;
        let delta = match unit {
            "d" => TimeDelta::try_days(n),
            "h" => TimeDelta::try_hours(n),
            "m" => TimeDelta::try_minutes(n),
            "s" => TimeDelta::try_seconds(n),
            "ms" => TimeDelta::try_milliseconds(n),
            _ => None,
        };
        delta.map(Window).ok_or_else(err)
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ms = self.0.num_milliseconds();
        let units = [
            (86_400_000, "d"),
            (3_600_000, "h"),
            (60_000, "m"),
            (1000, "s"),
        ];
        if ms == 0 {
            return write!(f, "0");
        }
        for (size, unit) in units {
            if ms % size == 0 {
                return write!(f, "{}{unit}", ms / size);
            }
        }
        write!(f, "{ms}ms")
    }
}

impl Serialize for Window {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Window {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Window, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    /// In-scope events whose starts lie within `window` of the group's
    /// first start are concurrent.
    StartWindow,
    /// In-scope events sharing both start day and end day are concurrent.
    SameInterval,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcurrencyRule {
    pub kind: RuleKind,
    /// Activities the rule applies to; `None` means every activity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activities: Option<BTreeSet<String>>,
    #[serde(default)]
    pub window: Window,
}

impl ConcurrencyRule {
    fn in_scope(&self, activity: &str) -> bool {
        self.activities
            .as_ref()
            .is_none_or(|set| set.contains(activity))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TiePolicy {
    /// Equal timestamps not captured by a rule form one concurrency block.
    #[default]
    Concurrent,
    /// Equal timestamps are ordered by activity label, then file order.
    Lexicographic,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub rules: Vec<ConcurrencyRule>,
    pub tie_policy: TiePolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationKind {
    Direct,
    Eventual,
    Concurrent,
    InverseDirect,
    InverseEventual,
}

impl RelationKind {
    pub const ALL: [RelationKind; 5] = [
        RelationKind::Direct,
        RelationKind::Eventual,
        RelationKind::Concurrent,
        RelationKind::InverseDirect,
        RelationKind::InverseEventual,
    ];

    pub fn inverse(self) -> RelationKind {
        match self {
            RelationKind::Direct => RelationKind::InverseDirect,
            RelationKind::Eventual => RelationKind::InverseEventual,
            RelationKind::Concurrent => RelationKind::Concurrent,
            RelationKind::InverseDirect => RelationKind::Direct,
            RelationKind::InverseEventual => RelationKind::Eventual,
        }
    }

    /// True for relations pointing forward (direct or eventual).
    pub fn is_forward(self) -> bool {
        matches!(self, RelationKind::Direct | RelationKind::Eventual)
    }
}

/// An event claimed by a rule after an earlier rule already placed it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleConflict {
    pub case_id: String,
    pub rule_index: usize,
    /// Index of the event in the original (time-sorted) trace.
    pub event: usize,
}

/// A trace recast as a block-chain DAG.
///
/// Events are stored in block order, which is the canonical event order:
/// indices used by [`PoTrace::relation`] and pattern instances refer to it.
#[derive(Debug, Clone)]
pub struct PoTrace {
    case_id: String,
    labels: Vec<String>,
    timestamps: Vec<NaiveDateTime>,
    source_index: Vec<usize>,
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
    adjacency: BitMatrix,
    reachability: BitMatrix,
    by_label: HashMap<String, Vec<usize>>,
    warnings: Vec<RuleConflict>,
}

impl PoTrace {
    pub fn case_id(&self) -> &str {
        &self.case_id
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, e: usize) -> &str {
        &self.labels[e]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn timestamp(&self, e: usize) -> NaiveDateTime {
        self.timestamps[e]
    }

    /// Position of event `e` in the original time-sorted trace.
    pub fn source_index(&self, e: usize) -> usize {
        self.source_index[e]
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_of(&self, e: usize) -> usize {
        self.block_of[e]
    }

    pub fn adjacency(&self) -> &BitMatrix {
        &self.adjacency
    }

    pub fn reachability(&self) -> &BitMatrix {
        &self.reachability
    }

    pub fn warnings(&self) -> &[RuleConflict] {
        &self.warnings
    }

    /// Events carrying the given activity label, ascending.
    pub fn events_labeled(&self, label: &str) -> &[usize] {
        self.by_label.get(label).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn relation(&self, e: usize, e2: usize) -> Result<RelationKind, PartialOrderError> {
        let len = self.len();
        for index in [e, e2] {
            if index >= len {
                return Err(PartialOrderError::IndexOutOfRange { index, len });
            }
        }
        if e == e2 {
            return Err(PartialOrderError::SameEvent);
        }
        Ok(self.relation_unchecked(e, e2))
    }

    /// Relation of `e2` with respect to `e`; indices must be valid and distinct.
    #[inline]
    pub fn relation_unchecked(&self, e: usize, e2: usize) -> RelationKind {
        if self.adjacency.get(e, e2) {
            RelationKind::Direct
        } else if self.reachability.get(e, e2) {
            RelationKind::Eventual
        } else if self.adjacency.get(e2, e) {
            RelationKind::InverseDirect
        } else if self.reachability.get(e2, e) {
            RelationKind::InverseEventual
        } else {
            RelationKind::Concurrent
        }
    }
}

fn rule_groups(rule: &ConcurrencyRule, trace: &Trace) -> Vec<Vec<usize>> {
    let scoped: Vec<usize> = (0..trace.events.len())
        .filter(|&i| rule.in_scope(&trace.events[i].activity))
        .collect();
    let mut groups = Vec::new();
    match rule.kind {
        RuleKind::StartWindow => {
            let mut i = 0;
            while i < scoped.len() {
                let anchor = trace.events[scoped[i]].timestamp;
                let mut j = i + 1;
                while j < scoped.len()
                    && trace.events[scoped[j]].timestamp - anchor <= rule.window.0
                {
                    j += 1;
                }
                if j - i >= 2 {
                    groups.push(scoped[i..j].to_vec());
                }
                i = j;
            }
        }
        RuleKind::SameInterval => {
            let mut by_days: BTreeMap<_, Vec<usize>> = BTreeMap::new();
            for &i in &scoped {
                let e = &trace.events[i];
                by_days
                    .entry((e.timestamp.date(), e.end_or_start().date()))
                    .or_default()
                    .push(i);
            }
            groups.extend(by_days.into_values().filter(|g| g.len() >= 2));
        }
    }
    groups
}

pub fn build_partial_order(
    trace: &Trace,
    oracle: &OracleConfig,
) -> Result<PoTrace, PartialOrderError> {
    let n = trace.events.len();
    if n == 0 {
        return Err(PartialOrderError::EmptyTrace(trace.case_id.clone()));
    }
    let events = &trace.events;

    let mut assigned: Vec<Option<usize>> = vec![None; n];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut warnings = Vec::new();

    // first rule wins: events already placed are skipped and reported
    for (rule_index, rule) in oracle.rules.iter().enumerate() {
        for group in rule_groups(rule, trace) {
            let mut fresh = Vec::new();
            for i in group {
                if assigned[i].is_some() {
                    warnings.push(RuleConflict {
                        case_id: trace.case_id.clone(),
                        rule_index,
                        event: i,
                    });
                } else {
                    fresh.push(i);
                }
            }
            if fresh.len() >= 2 {
                for &i in &fresh {
                    assigned[i] = Some(blocks.len());
                }
                blocks.push(fresh);
            }
        }
    }

    let rest: Vec<usize> = (0..n).filter(|&i| assigned[i].is_none()).collect();
    match oracle.tie_policy {
        TiePolicy::Concurrent => {
            let mut k = 0;
            while k < rest.len() {
                let ts = events[rest[k]].timestamp;
                let mut j = k + 1;
                while j < rest.len() && events[rest[j]].timestamp == ts {
                    j += 1;
                }
                blocks.push(rest[k..j].to_vec());
                k = j;
            }
        }
        TiePolicy::Lexicographic => blocks.extend(rest.iter().map(|&i| vec![i])),
    }

    for block in &mut blocks {
        block.sort_by_key(|&i| (events[i].timestamp, i));
    }
    let lexicographic = oracle.tie_policy == TiePolicy::Lexicographic;
    blocks.sort_by(|a, b| {
        let (ea, eb) = (&events[a[0]], &events[b[0]]);
        ea.timestamp
            .cmp(&eb.timestamp)
            .then_with(|| {
                if lexicographic {
                    ea.activity.cmp(&eb.activity)
                } else {
                    std::cmp::Ordering::Equal
                }
            })
            .then(a[0].cmp(&b[0]))
    });

    let source_index: Vec<usize> = blocks.iter().flatten().copied().collect();
    let mut block_of = vec![0; n];
    let mut canonical_blocks = Vec::with_capacity(blocks.len());
    let mut pos = 0;
    for (b, block) in blocks.iter().enumerate() {
        let ids: Vec<usize> = (pos..pos + block.len()).collect();
        for &i in &ids {
            block_of[i] = b;
        }
        pos += block.len();
        canonical_blocks.push(ids);
    }

    let mut adjacency = BitMatrix::new(n);
    for pair in canonical_blocks.windows(2) {
        for &u in &pair[0] {
            for &v in &pair[1] {
                adjacency.set(u, v);
            }
        }
    }
    let reachability = adjacency.transitive_closure();

    let labels: Vec<String> = source_index
        .iter()
        .map(|&i| events[i].activity.clone())
        .collect();
    let mut by_label: HashMap<String, Vec<usize>> = HashMap::new();
    for (e, l) in labels.iter().enumerate() {
        by_label.entry(l.clone()).or_default().push(e);
    }

    Ok(PoTrace {
        case_id: trace.case_id.clone(),
        timestamps: source_index.iter().map(|&i| events[i].timestamp).collect(),
        labels,
        source_index,
        blocks: canonical_blocks,
        block_of,
        adjacency,
        reachability,
        by_label,
        warnings,
    })
}

pub fn relation(po: &PoTrace, e: usize, e2: usize) -> Result<RelationKind, PartialOrderError> {
    po.relation(e, e2)
}

/// Partially ordered traces for a whole log, in canonical trace order.
#[derive(Debug, Clone)]
pub struct PoLog {
    traces: Vec<PoTrace>,
}

impl PoLog {
    pub fn build(log: &EventLog, oracle: &OracleConfig) -> PoLog {
        let traces = log
            .traces()
            .par_iter()
            .map(|t| build_partial_order(t, oracle).expect("event logs hold non-empty traces"))
            .collect();
        PoLog { traces }
    }

    pub fn from_traces(traces: Vec<PoTrace>) -> PoLog {
        PoLog { traces }
    }

    pub fn traces(&self) -> &[PoTrace] {
        &self.traces
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    /// Restriction to the given canonical trace positions.
    pub fn select(&self, indices: &[usize]) -> PoLog {
        PoLog {
            traces: indices.iter().map(|&i| self.traces[i].clone()).collect(),
        }
    }

    pub fn warnings(&self) -> impl Iterator<Item = &RuleConflict> {
        self.traces.iter().flat_map(|t| t.warnings.iter())
    }
}
