//! One-node pattern extensions driven by relation rules.
//!
//! An extension picks an event outside an instance's image that stands in
//! the rule's relation to the instance, and appends it as a new node whose
//! relations to every existing node are copied from the trace.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::log_model::EventLog;
use crate::partial_order::{OracleConfig, PoLog, PoTrace, RelationKind};
use crate::patterns::{
    Matcher, Pattern, PatternError, PatternInstance, DEFAULT_MAX_INSTANCES_PER_TRACE,
    DEFAULT_MAX_PATTERN_SIZE,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExtensionError {
    #[error("extending a {size}-node pattern exceeds max_pattern_size {limit}")]
    PatternTooLarge { size: usize, limit: usize },
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error("unknown extension rule `{0}`")]
    UnknownRule(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExtensionRule {
    #[serde(rename = "df")]
    DirectFollow,
    #[serde(rename = "dp")]
    DirectPrecede,
    #[serde(rename = "conc")]
    Concurrent,
    #[serde(rename = "ef")]
    EventualFollow,
    #[serde(rename = "ep")]
    EventualPrecede,
    #[serde(rename = "dc")]
    DirectContext,
}

impl ExtensionRule {
    pub const ALL: [ExtensionRule; 6] = [
        ExtensionRule::DirectFollow,
        ExtensionRule::DirectPrecede,
        ExtensionRule::Concurrent,
        ExtensionRule::EventualFollow,
        ExtensionRule::EventualPrecede,
        ExtensionRule::DirectContext,
    ];

    pub fn code(self) -> &'static str {
        match self {
            ExtensionRule::DirectFollow => "df",
            ExtensionRule::DirectPrecede => "dp",
            ExtensionRule::Concurrent => "conc",
            ExtensionRule::EventualFollow => "ef",
            ExtensionRule::EventualPrecede => "ep",
            ExtensionRule::DirectContext => "dc",
        }
    }

    /// Relations of a candidate event (w.r.t. an instance event) that this
    /// rule accepts. `dc` is handled as the union of its members.
    fn basic_relation(self) -> Option<RelationKind> {
        match self {
            ExtensionRule::DirectFollow => Some(RelationKind::Direct),
            ExtensionRule::DirectPrecede => Some(RelationKind::InverseDirect),
            ExtensionRule::Concurrent => Some(RelationKind::Concurrent),
            ExtensionRule::EventualFollow => Some(RelationKind::Eventual),
            ExtensionRule::EventualPrecede => Some(RelationKind::InverseEventual),
            ExtensionRule::DirectContext => None,
        }
    }

    fn components(self) -> &'static [ExtensionRule] {
        match self {
            ExtensionRule::DirectContext => &[
                ExtensionRule::DirectFollow,
                ExtensionRule::DirectPrecede,
                ExtensionRule::Concurrent,
            ],
            ExtensionRule::DirectFollow => &[ExtensionRule::DirectFollow],
            ExtensionRule::DirectPrecede => &[ExtensionRule::DirectPrecede],
            ExtensionRule::Concurrent => &[ExtensionRule::Concurrent],
            ExtensionRule::EventualFollow => &[ExtensionRule::EventualFollow],
            ExtensionRule::EventualPrecede => &[ExtensionRule::EventualPrecede],
        }
    }
}

impl fmt::Display for ExtensionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for ExtensionRule {
    type Err = ExtensionError;

    fn from_str(s: &str) -> Result<ExtensionRule, ExtensionError> {
        Ok(match s.trim() {
            "df" | "direct-follow" => ExtensionRule::DirectFollow,
            "dp" | "direct-precede" => ExtensionRule::DirectPrecede,
            "conc" | "concurrent" => ExtensionRule::Concurrent,
            "ef" | "eventual-follow" => ExtensionRule::EventualFollow,
            "ep" | "eventual-precede" => ExtensionRule::EventualPrecede,
            "dc" | "direct-context" => ExtensionRule::DirectContext,
            other => return Err(ExtensionError::UnknownRule(other.to_string())),
        })
    }
}

/// Whether a rule must hold for at least one or for every instance node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantifier {
    #[default]
    Any,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionLimits {
    pub max_pattern_size: usize,
    pub max_instances_per_trace: usize,
}

impl Default for ExtensionLimits {
    fn default() -> Self {
        ExtensionLimits {
            max_pattern_size: DEFAULT_MAX_PATTERN_SIZE,
            max_instances_per_trace: DEFAULT_MAX_INSTANCES_PER_TRACE,
        }
    }
}

fn qualifies(
    inst: &PatternInstance,
    po: &PoTrace,
    e: usize,
    rules: &BTreeSet<ExtensionRule>,
    quantifier: Quantifier,
) -> bool {
    rules.iter().flat_map(|r| r.components()).any(|basic| {
        let want = basic.basic_relation().expect("components are basic rules");
        let mut holds = inst
            .assignment
            .iter()
            .map(|&n| po.relation_unchecked(n, e) == want);
        match quantifier {
            Quantifier::Any => holds.any(|h| h),
            Quantifier::All => holds.all(|h| h),
        }
    })
}

/// Events qualifying under any rule in `rules`, with the relation vector of
/// each candidate w.r.t. the instance nodes.
fn qualifying_events(
    inst: &PatternInstance,
    po: &PoTrace,
    rules: &BTreeSet<ExtensionRule>,
    quantifier: Quantifier,
) -> Vec<(usize, Vec<RelationKind>)> {
    let image: HashSet<usize> = inst.assignment.iter().copied().collect();
    (0..po.len())
        .filter(|e| !image.contains(e))
        .filter(|&e| qualifies(inst, po, e, rules, quantifier))
        .map(|e| {
            let to_new = inst
                .assignment
                .iter()
                .map(|&n| po.relation_unchecked(n, e))
                .collect();
            (e, to_new)
        })
        .collect()
}

/// Extensions of `p` grown from one instance, deduplicated and sorted by key.
pub fn extend_instance(
    p: &Pattern,
    inst: &PatternInstance,
    po: &PoTrace,
    rule: ExtensionRule,
    quantifier: Quantifier,
) -> Result<Vec<Pattern>, ExtensionError> {
    let rules = BTreeSet::from([rule]);
    let mut out = BTreeMap::new();
    for (e, to_new) in qualifying_events(inst, po, &rules, quantifier) {
        let ext = p.extended(po.label(e), &to_new)?;
        out.entry(ext.key().to_string()).or_insert(ext);
    }
    Ok(out.into_values().collect())
}

fn extend_in_trace(
    p: &Pattern,
    matcher: &Matcher<'_>,
    po: &PoTrace,
    rules: &BTreeSet<ExtensionRule>,
    quantifier: Quantifier,
    cap: usize,
) -> Result<Vec<Pattern>, ExtensionError> {
    let mut seen: HashSet<(String, Vec<RelationKind>)> = HashSet::new();
    let mut out = Vec::new();
    for inst in matcher.find(po, cap)? {
        for (e, to_new) in qualifying_events(&inst, po, rules, quantifier) {
            let label = po.label(e).to_string();
            if seen.insert((label.clone(), to_new.clone())) {
                out.push(p.extended(&label, &to_new)?);
            }
        }
    }
    Ok(out)
}

/// All distinct one-node extensions of `p` over a log, sorted by canonical key.
pub fn extend_all(
    p: &Pattern,
    polog: &PoLog,
    rules: &BTreeSet<ExtensionRule>,
    quantifier: Quantifier,
    limits: &ExtensionLimits,
) -> Result<Vec<Pattern>, ExtensionError> {
    let limit = limits
        .max_pattern_size
        .min(crate::patterns::PATTERN_SIZE_LIMIT);
    if p.len() + 1 > limit {
        return Err(ExtensionError::PatternTooLarge {
            size: p.len(),
            limit,
        });
    }
    let matcher = Matcher::new(p);
    let per_trace = polog
        .traces()
        .par_iter()
        .map(|po| {
            extend_in_trace(
                p,
                &matcher,
                po,
                rules,
                quantifier,
                limits.max_instances_per_trace,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut merged = BTreeMap::new();
    for ext in per_trace.into_iter().flatten() {
        merged.entry(ext.key().to_string()).or_insert(ext);
    }
    Ok(merged.into_values().collect())
}

pub fn extend_all_in_log(
    p: &Pattern,
    log: &EventLog,
    oracle: &OracleConfig,
    rules: &BTreeSet<ExtensionRule>,
    quantifier: Quantifier,
    limits: &ExtensionLimits,
) -> Result<Vec<Pattern>, ExtensionError> {
    extend_all(p, &PoLog::build(log, oracle), rules, quantifier, limits)
}
