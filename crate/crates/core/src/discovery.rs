//! Iterative discovery sessions.
//!
//! Iteration 0 measures every alphabet singleton. Each later iteration
//! extends a selection of patterns from the previous one, measures the
//! extensions and recomputes the Pareto front. Selections may come from a
//! user (interactive mode) or be the whole front ([`auto_discover`]).

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extension::{extend_all, ExtensionError, ExtensionLimits, ExtensionRule, Quantifier};
use crate::interest::{
    dashboard_stats, DashboardData, DistanceConfig, InterestDirections, InterestError,
    MeasureConfig, Measurer,
};
use crate::log_model::EventLog;
use crate::pareto::{pareto_front, sort_for_display, MeasuredPattern, ParetoError};
use crate::partial_order::{OracleConfig, PoLog};
use crate::patterns::{
    frequency_vector, singleton_pattern, Pattern, PatternError, PatternId, DEFAULT_MAX_PATTERN_SIZE,
};

pub const DEFAULT_MAX_CANDIDATES: usize = 100_000;

#[derive(Debug, Error)]
pub enum DiscoveryError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Interest(#[from] InterestError),
    #[error(transparent)]
    Extension(#[from] ExtensionError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error(transparent)]
    Pareto(#[from] ParetoError),
    #[error("unknown pattern id `{0}` in the latest iteration")]
    UnknownPatternId(String),
    #[error("no patterns selected")]
    EmptySelection,
    #[error("no extension possible")]
    NoExtensionPossible,
    #[error("session is {0:?}, not awaiting a selection")]
    NotAwaitingSelection(SessionStatus),
    #[error("{count} candidates exceed the limit of {limit}")]
    TooManyCandidates { count: usize, limit: usize },
    #[error("replay diverged at iteration {0}")]
    ReplayMismatch(usize),
    #[error("session record: {0}")]
    Record(String),
}

/// Where the minimum case frequency filter applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterMode {
    /// Drop rare candidates before computing the front.
    #[default]
    PreFront,
    /// Compute the front on all candidates, then drop rare front members.
    PostFront,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscoveryConfig {
    pub oracle: OracleConfig,
    pub directions: InterestDirections,
    pub measure: MeasureConfig,
    pub distance: DistanceConfig,
    pub rules: BTreeSet<ExtensionRule>,
    pub quantifier: Quantifier,
    /// Iterations including the singleton iteration 0.
    pub max_iterations: usize,
    pub max_pattern_size: usize,
    pub min_case_frequency: Option<usize>,
    pub filter_mode: FilterMode,
    pub novelty_stop: bool,
    pub max_candidates: usize,
    pub seed: u64,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        DiscoveryConfig {
            oracle: OracleConfig::default(),
            directions: InterestDirections::default(),
            measure: MeasureConfig::default(),
            distance: DistanceConfig::default(),
            rules: ExtensionRule::ALL.into_iter().collect(),
            quantifier: Quantifier::Any,
            max_iterations: 3,
            max_pattern_size: DEFAULT_MAX_PATTERN_SIZE,
            min_case_frequency: None,
            filter_mode: FilterMode::PreFront,
            novelty_stop: true,
            max_candidates: DEFAULT_MAX_CANDIDATES,
            seed: 0,
        }
    }
}

impl DiscoveryConfig {
    pub fn validate(&self) -> Result<(), DiscoveryError> {
        if self.max_iterations < 1 {
            return Err(DiscoveryError::Config(
                "max_iterations must be at least 1".into(),
            ));
        }
        if self.max_pattern_size < 1 || self.max_pattern_size > crate::patterns::PATTERN_SIZE_LIMIT
        {
            return Err(DiscoveryError::Config(format!(
                "max_pattern_size must be in 1..={}",
                crate::patterns::PATTERN_SIZE_LIMIT
            )));
        }
        if self.rules.is_empty() {
            return Err(DiscoveryError::Config(
                "at least one extension rule is required".into(),
            ));
        }
        Ok(())
    }

    fn limits(&self) -> ExtensionLimits {
        ExtensionLimits {
            max_pattern_size: self.max_pattern_size,
            max_instances_per_trace: self
                .measure
                .max_instances_per_trace
                .unwrap_or(crate::patterns::DEFAULT_MAX_INSTANCES_PER_TRACE),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Iteration {
    pub index: usize,
    /// Measured candidates sorted by canonical key.
    pub candidates: Vec<MeasuredPattern>,
    /// Front members, descending coverage then id.
    pub front: Vec<PatternId>,
    /// Foundational patterns extended to produce this iteration.
    pub selected: Vec<PatternId>,
    /// Selections that were not on the previous front.
    pub off_front_selections: Vec<PatternId>,
    pub rules: Vec<ExtensionRule>,
    /// Minimum case frequency applied to this iteration, if any.
    #[serde(default)]
    pub min_case_frequency: Option<usize>,
    /// Candidates removed by the minimum case frequency filter.
    pub filtered_out: usize,
}

impl Iteration {
    pub fn candidate(&self, id: &PatternId) -> Option<&MeasuredPattern> {
        self.candidates.iter().find(|m| m.pattern.id() == id)
    }

    pub fn front_members(&self) -> Vec<&MeasuredPattern> {
        self.front
            .iter()
            .filter_map(|id| self.candidate(id))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SessionStatus {
    AwaitingSelection,
    Extending,
    Done,
}

/// Serialized session history, re-loadable for replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub config: DiscoveryConfig,
    pub cases: usize,
    pub alphabet: Vec<String>,
    pub status: SessionStatus,
    pub iterations: Vec<Iteration>,
}

pub struct DiscoverySession {
    log: Arc<EventLog>,
    polog: Arc<PoLog>,
    measurer: Measurer,
    config: DiscoveryConfig,
    iterations: Vec<Iteration>,
    status: SessionStatus,
    seen: HashSet<String>,
}

/// Keeps candidates seen in at least `min_case_frequency` cases.
pub fn threshold_filter(
    candidates: Vec<MeasuredPattern>,
    min_case_frequency: usize,
) -> Vec<MeasuredPattern> {
    candidates
        .into_iter()
        .filter(|m| m.case_count >= min_case_frequency)
        .collect()
}

impl DiscoverySession {
    pub fn new(
        log: Arc<EventLog>,
        config: DiscoveryConfig,
    ) -> Result<DiscoverySession, DiscoveryError> {
        config.validate()?;
        let polog = Arc::new(PoLog::build(&log, &config.oracle));
        let measurer = Measurer::new(&log, &config.distance, config.measure)?;
        let singletons = log
            .alphabet()
            .iter()
            .map(|a| singleton_pattern(a))
            .collect::<Result<Vec<_>, _>>()?;
        let mut session = DiscoverySession {
            log,
            polog,
            measurer,
            config,
            iterations: Vec::new(),
            status: SessionStatus::Extending,
            seen: HashSet::new(),
        };
        let iteration =
            session.build_iteration(0, singletons, Vec::new(), Vec::new(), Vec::new(), None)?;
        session.push(iteration);
        Ok(session)
    }

    pub fn log(&self) -> &Arc<EventLog> {
        &self.log
    }

    pub fn polog(&self) -> &PoLog {
        &self.polog
    }

    pub fn config(&self) -> &DiscoveryConfig {
        &self.config
    }

    pub fn status(&self) -> SessionStatus {
        self.status
    }

    pub fn iterations(&self) -> &[Iteration] {
        &self.iterations
    }

    pub fn latest(&self) -> &Iteration {
        self.iterations
            .last()
            .expect("sessions start with iteration 0")
    }

    fn push(&mut self, iteration: Iteration) {
        for m in &iteration.candidates {
            self.seen.insert(m.pattern.key().to_string());
        }
        self.iterations.push(iteration);
        self.status = if self.iterations.len() >= self.config.max_iterations {
            SessionStatus::Done
        } else {
            SessionStatus::AwaitingSelection
        };
    }

    fn build_iteration(
        &self,
        index: usize,
        patterns: Vec<Pattern>,
        selected: Vec<PatternId>,
        off_front: Vec<PatternId>,
        rules: Vec<ExtensionRule>,
        threshold: Option<usize>,
    ) -> Result<Iteration, DiscoveryError> {
        let mut candidates = self.measurer.measure_all(&self.polog, &patterns);
        candidates.sort_by(|a, b| a.pattern.key().cmp(b.pattern.key()));
        let before = candidates.len();
        if let (Some(min), FilterMode::PreFront) = (threshold, self.config.filter_mode) {
            candidates = threshold_filter(candidates, min);
        }
        let filtered_out = before - candidates.len();
        let dirs = self.config.directions.to_vec();
        let mut front = pareto_front(&mut candidates, &dirs)?;
        if let (Some(min), FilterMode::PostFront) = (threshold, self.config.filter_mode) {
            front.retain(|m| m.case_count >= min);
            let keep: HashSet<&PatternId> = front.iter().map(|m| m.pattern.id()).collect();
            for m in candidates.iter_mut() {
                m.front = keep.contains(m.pattern.id());
            }
        }
        sort_for_display(&mut front);
        Ok(Iteration {
            index,
            front: front.iter().map(|m| m.pattern.id().clone()).collect(),
            candidates,
            selected,
            off_front_selections: off_front,
            rules,
            min_case_frequency: threshold,
            filtered_out,
        })
    }

    /// Extends `selected` patterns of the latest iteration with `rules`
    /// (the configured rules when `None`) and appends the new iteration.
    pub fn step(
        &mut self,
        selected: &[PatternId],
        rules: Option<&BTreeSet<ExtensionRule>>,
    ) -> Result<&Iteration, DiscoveryError> {
        self.step_filtered(selected, rules, None)
    }

    /// Like [`DiscoverySession::step`], with a minimum case frequency that
    /// overrides the configured one for this iteration only.
    pub fn step_filtered(
        &mut self,
        selected: &[PatternId],
        rules: Option<&BTreeSet<ExtensionRule>>,
        min_case_frequency: Option<usize>,
    ) -> Result<&Iteration, DiscoveryError> {
        if self.status != SessionStatus::AwaitingSelection {
            return Err(DiscoveryError::NotAwaitingSelection(self.status));
        }
        let rules = rules.cloned().unwrap_or_else(|| self.config.rules.clone());
        if rules.is_empty() {
            return Err(DiscoveryError::Config(
                "at least one extension rule is required".into(),
            ));
        }
        let mut ids: Vec<PatternId> = Vec::new();
        for id in selected {
            if !ids.contains(id) {
                ids.push(id.clone());
            }
        }
        if ids.is_empty() {
            return Err(DiscoveryError::EmptySelection);
        }
        let latest = self.latest();
        let mut foundations = Vec::with_capacity(ids.len());
        let mut off_front = Vec::new();
        for id in &ids {
            let m = latest
                .candidate(id)
                .ok_or_else(|| DiscoveryError::UnknownPatternId(id.to_string()))?;
            if !m.front {
                off_front.push(id.clone());
            }
            foundations.push(m.pattern.clone());
        }
        self.status = SessionStatus::Extending;
        let result = self.extend_selection(&foundations, &rules);
        let patterns = match result {
            Ok(p) if p.is_empty() => {
                self.status = SessionStatus::Done;
                return Err(DiscoveryError::NoExtensionPossible);
            }
            Ok(p) => p,
            Err(e) => {
                self.status = SessionStatus::AwaitingSelection;
                return Err(e);
            }
        };
        let index = self.iterations.len();
        let threshold = min_case_frequency.or(self.config.min_case_frequency);
        let iteration = match self.build_iteration(
            index,
            patterns,
            ids,
            off_front,
            rules.into_iter().collect(),
            threshold,
        ) {
            Ok(it) => it,
            Err(e) => {
                self.status = SessionStatus::AwaitingSelection;
                return Err(e);
            }
        };
        self.push(iteration);
        Ok(self.latest())
    }

    fn extend_selection(
        &self,
        foundations: &[Pattern],
        rules: &BTreeSet<ExtensionRule>,
    ) -> Result<Vec<Pattern>, DiscoveryError> {
        let limits = self.config.limits();
        let mut merged: BTreeMap<String, Pattern> = BTreeMap::new();
        for p in foundations {
            for ext in extend_all(p, &self.polog, rules, self.config.quantifier, &limits)? {
                merged.entry(ext.key().to_string()).or_insert(ext);
            }
            if merged.len() > self.config.max_candidates {
                return Err(DiscoveryError::TooManyCandidates {
                    count: merged.len(),
                    limit: self.config.max_candidates,
                });
            }
        }
        Ok(merged.into_values().collect())
    }

    /// Marks the session finished without extending further.
    pub fn finish(&mut self) {
        self.status = SessionStatus::Done;
    }

    /// One automated round: extend the whole latest front. Returns false
    /// when discovery has ended.
    pub fn auto_step(&mut self) -> Result<bool, DiscoveryError> {
        if self.status != SessionStatus::AwaitingSelection
            || self.iterations.len() >= self.config.max_iterations
        {
            self.status = SessionStatus::Done;
            return Ok(false);
        }
        let latest = self.latest();
        let front = latest.front.clone();
        let too_large = latest
            .front_members()
            .iter()
            .any(|m| m.pattern.len() + 1 > self.config.max_pattern_size);
        if front.is_empty() || too_large {
            self.status = SessionStatus::Done;
            return Ok(false);
        }
        let seen_before = self.seen.clone();
        match self.step(&front, None) {
            Ok(_) => {}
            Err(DiscoveryError::NoExtensionPossible) => return Ok(false),
            Err(e) => return Err(e),
        }
        if self.config.novelty_stop
            && self
                .latest()
                .candidates
                .iter()
                .all(|m| seen_before.contains(m.pattern.key()))
        {
            self.iterations.pop();
            self.seen = seen_before;
            self.status = SessionStatus::Done;
            return Ok(false);
        }
        Ok(true)
    }

    pub fn run_auto(&mut self) -> Result<(), DiscoveryError> {
        while self.auto_step()? {}
        Ok(())
    }

    /// Union of all iteration fronts, deduplicated by canonical key, in
    /// iteration order.
    pub fn discovered_patterns(&self) -> Vec<MeasuredPattern> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for it in &self.iterations {
            for m in it.front_members() {
                if seen.insert(m.pattern.key().to_string()) {
                    out.push(m.clone());
                }
            }
        }
        out
    }

    /// Finds a pattern in any iteration.
    pub fn find_pattern(&self, id: &PatternId) -> Option<&MeasuredPattern> {
        self.iterations.iter().rev().find_map(|it| it.candidate(id))
    }

    pub fn dashboard(&self, id: &PatternId) -> Result<DashboardData, DiscoveryError> {
        let m = self
            .find_pattern(id)
            .ok_or_else(|| DiscoveryError::UnknownPatternId(id.to_string()))?;
        let counts = frequency_vector(&m.pattern, &self.polog, self.measurer.cap())?;
        Ok(dashboard_stats(
            &m.pattern,
            &counts,
            &self.log,
            &self.measurer,
        )?)
    }

    pub fn record(&self) -> SessionRecord {
        SessionRecord {
            config: self.config.clone(),
            cases: self.log.len(),
            alphabet: self.log.alphabet().iter().cloned().collect(),
            status: self.status,
            iterations: self.iterations.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.record()).expect("session records serialize")
    }
}

/// Runs discovery extending the full front each round until
/// `max_iterations`, size limits or novelty exhaustion.
pub fn auto_discover(
    log: Arc<EventLog>,
    config: DiscoveryConfig,
) -> Result<DiscoverySession, DiscoveryError> {
    let mut session = DiscoverySession::new(log, config)?;
    session.run_auto()?;
    Ok(session)
}

/// Re-runs the selections of a recorded session and checks that every
/// iteration comes out identical.
pub fn replay(
    log: Arc<EventLog>,
    record: &SessionRecord,
) -> Result<DiscoverySession, DiscoveryError> {
    if record.cases != log.len()
        || record.alphabet != log.alphabet().iter().cloned().collect::<Vec<_>>()
    {
        return Err(DiscoveryError::Record(
            "record was made on a different log".into(),
        ));
    }
    let mut session = DiscoverySession::new(log, record.config.clone())?;
    let Some(first) = record.iterations.first() else {
        return Err(DiscoveryError::Record("record has no iterations".into()));
    };
    if session.latest() != first {
        return Err(DiscoveryError::ReplayMismatch(0));
    }
    for recorded in &record.iterations[1..] {
        let rules: BTreeSet<ExtensionRule> = recorded.rules.iter().copied().collect();
        let produced = session.step_filtered(
            &recorded.selected,
            Some(&rules),
            recorded.min_case_frequency,
        )?;
        if produced != recorded {
            return Err(DiscoveryError::ReplayMismatch(recorded.index));
        }
    }
    if record.status == SessionStatus::Done {
        session.finish();
    }
    Ok(session)
}

pub fn parse_record(json: &str) -> Result<SessionRecord, DiscoveryError> {
    serde_json::from_str(json).map_err(|e| DiscoveryError::Record(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::log_model::{read_event_log, LogSchema, OutcomeKind};

    fn log(csv: &str, kind: OutcomeKind) -> Arc<EventLog> {
        let schema = LogSchema {
            outcome_kind: kind,
            ..LogSchema::default()
        };
        Arc::new(read_event_log(csv.as_bytes(), &schema).unwrap().0)
    }

    fn chain_ab() -> Arc<EventLog> {
        let mut csv = String::from("case_id,activity,timestamp,outcome\n");
        for c in 0..4 {
            csv.push_str(&format!(
                "c{c},a,2020-01-01T00:00:00,{c}\nc{c},b,2020-01-02T00:00:00,{c}\n"
            ));
        }
        log(&csv, OutcomeKind::Continuous)
    }

    #[test]
    fn iteration_zero_is_alphabet() {
        let s = DiscoverySession::new(chain_ab(), DiscoveryConfig::default()).unwrap();
        assert_eq!(s.iterations().len(), 1);
        assert_eq!(s.latest().candidates.len(), 2);
        assert!(s.latest().candidates.iter().all(|m| m.pattern.len() == 1));
        assert_eq!(s.status(), SessionStatus::AwaitingSelection);
    }

    #[test]
    fn chain_terminates_after_one_extension() {
        let cfg = DiscoveryConfig {
            max_iterations: 5,
            ..Default::default()
        };
        let s = auto_discover(chain_ab(), cfg).unwrap();
        assert_eq!(s.iterations().len(), 2);
        assert_eq!(s.iterations()[1].candidates.len(), 1);
        assert_eq!(s.iterations()[1].candidates[0].pattern.len(), 2);
        assert_eq!(s.status(), SessionStatus::Done);
    }

    #[test]
    fn single_iteration_is_singletons_only() {
        let cfg = DiscoveryConfig {
            max_iterations: 1,
            ..Default::default()
        };
        assert_eq!(
            auto_discover(chain_ab(), cfg.clone())
                .unwrap()
                .iterations()
                .len(),
            1
        );
        let mut s = DiscoverySession::new(chain_ab(), cfg).unwrap();
        assert_eq!(s.status(), SessionStatus::Done);
        let a = singleton_pattern("a").unwrap().id().clone();
        assert!(matches!(
            s.step(&[a], None).unwrap_err(),
            DiscoveryError::NotAwaitingSelection(SessionStatus::Done)
        ));
    }

    #[test]
    fn unknown_ids_and_exhaustion() {
        let mut s = DiscoverySession::new(chain_ab(), DiscoveryConfig::default()).unwrap();
        let err = s.step(&[PatternId("nope".into())], None).unwrap_err();
        assert!(matches!(err, DiscoveryError::UnknownPatternId(_)));
        let a = singleton_pattern("a").unwrap().id().clone();
        s.step(&[a], Some(&BTreeSet::from([ExtensionRule::DirectFollow])))
            .unwrap();
        let ab = s.latest().candidates[0].pattern.id().clone();
        assert!(matches!(
            s.step(&[ab], None).unwrap_err(),
            DiscoveryError::NoExtensionPossible
        ));
        assert_eq!(s.status(), SessionStatus::Done);
        assert_eq!(s.iterations().len(), 2);
    }

    #[test]
    fn threshold_filter_by_case_count() {
        let s = DiscoverySession::new(chain_ab(), DiscoveryConfig::default()).unwrap();
        let c = s.latest().candidates.clone();
        assert_eq!(threshold_filter(c.clone(), 0).len(), c.len());
        assert_eq!(threshold_filter(c.clone(), 4).len(), 2);
        assert!(threshold_filter(c, 5).is_empty());
    }

    #[test]
    fn record_round_trips_and_replays() {
        let s = auto_discover(chain_ab(), DiscoveryConfig::default()).unwrap();
        let record = parse_record(&s.to_json()).unwrap();
        assert_eq!(record, s.record());
        let again = replay(chain_ab(), &record).unwrap();
        assert_eq!(again.record(), s.record());
    }
}
