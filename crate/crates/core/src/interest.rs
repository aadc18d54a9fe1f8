//! Interest functions over pattern frequency vectors, plus the per-pattern
//! dashboard statistics (cohort summaries, Kaplan-Meier, log-rank).
//!
//! Every function works on a frequency vector: one instance count per trace
//! in canonical trace order. A trace is "with" the pattern when its count is
//! positive.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::log_model::{CaseAttributes, EventLog, LogError, Outcomes, MISSING_CATEGORY};
use crate::pareto::{Direction, MeasuredPattern};
use crate::partial_order::PoLog;
use crate::patterns::{frequency_vector, Pattern, PatternJson, DEFAULT_MAX_INSTANCES_PER_TRACE};

pub const DEFAULT_HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterestError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("survival times must be positive and finite, got {0}")]
    InvalidTime(f64),
    #[error("attribute `{0}` is not declared with that kind in the schema")]
    UnknownAttribute(String),
    #[error("{0}")]
    Log(String),
}

impl From<LogError> for InterestError {
    fn from(e: LogError) -> Self {
        InterestError::Log(e.to_string())
    }
}

/// Interest values in fixed order: coverage, outcome interest, case distance.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InterestVector {
    pub cc: f64,
    pub oi: f64,
    pub cd: f64,
}

impl InterestVector {
    pub const NAMES: [&'static str; 3] = ["cc", "oi", "cd"];

    pub fn values(&self) -> [f64; 3] {
        [self.cc, self.oi, self.cd]
    }

    pub fn get(&self, dim: &str) -> Option<f64> {
        match dim {
            "cc" => Some(self.cc),
            "oi" => Some(self.oi),
            "cd" => Some(self.cd),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterestDirections {
    pub cc: Direction,
    pub oi: Direction,
    pub cd: Direction,
}

impl Default for InterestDirections {
    fn default() -> Self {
        InterestDirections {
            cc: Direction::Max,
            oi: Direction::Max,
            cd: Direction::Min,
        }
    }
}

impl InterestDirections {
    pub fn to_vec(self) -> Vec<Direction> {
        vec![self.cc, self.oi, self.cd]
    }

    pub fn get(&self, dim: &str) -> Option<Direction> {
        match dim {
            "cc" => Some(self.cc),
            "oi" => Some(self.oi),
            "cd" => Some(self.cd),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MeasureFlags {
    pub oi_degenerate: bool,
    pub cd_degenerate: bool,
}

/// A statistic that may be a fallback value on degenerate input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub value: f64,
    pub degenerate: bool,
}

impl Stat {
    fn ok(value: f64) -> Stat {
        Stat {
            value,
            degenerate: false,
        }
    }

    fn degenerate() -> Stat {
        Stat {
            value: 0.0,
            degenerate: true,
        }
    }
}

fn same_len(a: usize, b: usize) -> Result<(), InterestError> {
    if a != b {
        return Err(InterestError::LengthMismatch { left: a, right: b });
    }
    Ok(())
}

/// Fraction of traces with at least one instance.
pub fn case_coverage(counts: &[u32]) -> f64 {
    if counts.is_empty() {
        return 0.0;
    }
    counts.iter().filter(|&&c| c > 0).count() as f64 / counts.len() as f64
}

/// 1-based ranks, tied values receive the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho as the Pearson correlation of average-tie ranks.
/// Constant or too-short inputs yield 0 flagged as degenerate.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Stat, InterestError> {
    same_len(x.len(), y.len())?;
    let constant = |v: &[f64]| v.iter().all(|a| *a == v[0]);
    if x.len() < 2 || constant(x) || constant(y) {
        return Ok(Stat::degenerate());
    }
    Ok(pearson(&average_ranks(x), &average_ranks(y)).map_or_else(Stat::degenerate, Stat::ok))
}

fn entropy_of_counts<'a>(counts: impl Iterator<Item = &'a usize>, total: usize) -> f64 {
    let total = total as f64;
    counts
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum()
}

/// Shannon entropy in bits.
pub fn entropy<T: Ord>(labels: &[T]) -> f64 {
    let mut counts: BTreeMap<&T, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    entropy_of_counts(counts.values(), labels.len())
}

/// `H(labels) - H(labels | feature)` in bits, feature values as symbols.
pub fn information_gain<F: Ord, L: Ord>(feature: &[F], labels: &[L]) -> Result<f64, InterestError> {
    same_len(feature.len(), labels.len())?;
    if labels.is_empty() {
        return Err(InterestError::EmptyInput);
    }
    let mut groups: BTreeMap<&F, BTreeMap<&L, usize>> = BTreeMap::new();
    for (f, l) in feature.iter().zip(labels) {
        *groups.entry(f).or_default().entry(l).or_default() += 1;
    }
    let n = labels.len() as f64;
    let conditional: f64 = groups
        .values()
        .map(|g| {
            let size: usize = g.values().sum();
            size as f64 / n * entropy_of_counts(g.values(), size)
        })
        .sum();
    Ok((entropy(labels) - conditional).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OiTransform {
    #[default]
    Raw,
    Abs,
}

/// Spearman against a continuous outcome, information gain against a
/// categorical one. A constant frequency vector is degenerate.
pub fn outcome_interest(
    counts: &[u32],
    outcomes: &Outcomes,
    transform: OiTransform,
) -> Result<Stat, InterestError> {
    same_len(counts.len(), outcomes.len())?;
    if counts.is_empty() {
        return Err(InterestError::EmptyInput);
    }
    match outcomes {
        Outcomes::Continuous(ov) => {
            let fv: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
            let mut s = spearman(ov, &fv)?;
            if transform == OiTransform::Abs {
                s.value = s.value.abs();
            }
            Ok(s)
        }
        Outcomes::Categorical(ov) => {
            if counts.iter().all(|&c| c == counts[0]) {
                return Ok(Stat::degenerate());
            }
            information_gain(counts, ov).map(Stat::ok)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CdAggregation {
    /// Mean distance over all (with, without) case pairs.
    #[default]
    PairMean,
    /// Sum over all pairs divided by the number of traces.
    TraceNormalized,
}

/// Attributes used for case distance. `None` selects every attribute of
/// that kind declared in the log schema.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistanceConfig {
    pub numeric: Option<Vec<String>>,
    pub categorical: Option<Vec<String>>,
    pub aggregation: CdAggregation,
}

/// Distance model fitted on a log: min-max scaling bounds and mean
/// imputation values per numeric attribute, and per-case encoded attributes.
#[derive(Debug, Clone)]
pub struct DistanceModel {
    numeric: Vec<String>,
    categorical: Vec<String>,
    min: Vec<f64>,
    max: Vec<f64>,
    mean: Vec<f64>,
    // n*k scaled numerics, n*m category codes
    scaled: Vec<f64>,
    codes: Vec<u32>,
    vocab: Vec<HashMap<String, u32>>,
    n: usize,
}

impl DistanceModel {
    pub fn fit(log: &EventLog, cfg: &DistanceConfig) -> Result<DistanceModel, InterestError> {
        let schema = log.schema();
        let pick = |requested: &Option<Vec<String>>,
                    declared: Vec<&str>|
         -> Result<Vec<String>, InterestError> {
            match requested {
                None => Ok(declared.into_iter().map(str::to_string).collect()),
                Some(names) => {
                    for name in names {
                        if !declared.contains(&name.as_str()) {
                            return Err(InterestError::UnknownAttribute(name.clone()));
                        }
                    }
                    Ok(names.clone())
                }
            }
        };
        let numeric = pick(&cfg.numeric, schema.numeric_attributes().collect())?;
        let categorical = pick(&cfg.categorical, schema.categorical_attributes().collect())?;
        let k = numeric.len();
        let mut min = vec![f64::INFINITY; k];
        let mut max = vec![f64::NEG_INFINITY; k];
        let mut sum = vec![0.0; k];
        let mut seen = vec![0usize; k];
        for t in log.traces() {
            for (a, name) in numeric.iter().enumerate() {
                if let Some(Some(v)) = t.case_attrs.numeric.get(name) {
                    min[a] = min[a].min(*v);
                    max[a] = max[a].max(*v);
                    sum[a] += v;
                    seen[a] += 1;
                }
            }
        }
        let mean: Vec<f64> = (0..k)
            .map(|a| {
                if seen[a] == 0 {
                    0.0
                } else {
                    sum[a] / seen[a] as f64
                }
            })
            .collect();
        for a in 0..k {
            if seen[a] == 0 {
                min[a] = 0.0;
                max[a] = 0.0;
            }
        }
        let mut model = DistanceModel {
            numeric,
            categorical,
            min,
            max,
            mean,
            scaled: Vec::new(),
            codes: Vec::new(),
            vocab: Vec::new(),
            n: log.len(),
        };
        model.vocab = vec![HashMap::new(); model.categorical.len()];
        for t in log.traces() {
            let scaled = model.scale(&t.case_attrs);
            model.scaled.extend(scaled);
            for (c, name) in model.categorical.iter().enumerate() {
                let value = t
                    .case_attrs
                    .categorical
                    .get(name)
                    .cloned()
                    .unwrap_or_else(|| MISSING_CATEGORY.to_string());
                let next = model.vocab[c].len() as u32;
                let code = *model.vocab[c].entry(value).or_insert(next);
                model.codes.push(code);
            }
        }
        Ok(model)
    }

    pub fn numeric_attributes(&self) -> &[String] {
        &self.numeric
    }

    pub fn categorical_attributes(&self) -> &[String] {
        &self.categorical
    }

    /// Min-max scaled numerics with mean imputation, clamped to [0, 1].
    pub fn scale(&self, attrs: &CaseAttributes) -> Vec<f64> {
        self.numeric
            .iter()
            .enumerate()
            .map(|(a, name)| {
                let v = attrs
                    .numeric
                    .get(name)
                    .copied()
                    .flatten()
                    .unwrap_or(self.mean[a]);
                let span = self.max[a] - self.min[a];
                if span > 0.0 {
                    ((v - self.min[a]) / span).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect()
    }

    fn combine(&self, sq_num: f64, mismatches: usize) -> f64 {
        let k = self.numeric.len();
        let d_num = if k == 0 {
            0.0
        } else {
            sq_num.sqrt() / (k as f64).sqrt()
        };
        (d_num + mismatches as f64) / (self.categorical.len() + 1) as f64
    }

    /// Distance between two attribute records, in [0, 1].
    pub fn pair_distance(&self, a: &CaseAttributes, b: &CaseAttributes) -> f64 {
        let (sa, sb) = (self.scale(a), self.scale(b));
        let sq: f64 = sa.iter().zip(&sb).map(|(x, y)| (x - y) * (x - y)).sum();
        let cat = |attrs: &CaseAttributes, name: &str| {
            attrs
                .categorical
                .get(name)
                .map(String::as_str)
                .unwrap_or(MISSING_CATEGORY)
                .to_string()
        };
        let mismatches = self
            .categorical
            .iter()
            .filter(|name| cat(a, name) != cat(b, name))
            .count();
        self.combine(sq, mismatches)
    }

    /// Distance between traces `i` and `j` of the fitted log.
    pub fn case_pair_distance(&self, i: usize, j: usize) -> f64 {
        let (k, m) = (self.numeric.len(), self.categorical.len());
        let (a, b) = (
            &self.scaled[i * k..(i + 1) * k],
            &self.scaled[j * k..(j + 1) * k],
        );
        let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        let mismatches = (0..m)
            .filter(|&c| self.codes[i * m + c] != self.codes[j * m + c])
            .count();
        self.combine(sq, mismatches)
    }

    /// Case distance between traces with and without the pattern.
    pub fn case_distance(
        &self,
        counts: &[u32],
        aggregation: CdAggregation,
    ) -> Result<Stat, InterestError> {
        same_len(counts.len(), self.n)?;
        let with: Vec<usize> = (0..self.n).filter(|&i| counts[i] > 0).collect();
        let without: Vec<usize> = (0..self.n).filter(|&i| counts[i] == 0).collect();
        if with.is_empty() || without.is_empty() {
            return Ok(Stat::degenerate());
        }
        let total: f64 = with
            .par_iter()
            .map(|&i| {
                without
                    .iter()
                    .map(|&j| self.case_pair_distance(i, j))
                    .sum::<f64>()
            })
            .collect::<Vec<f64>>()
            .into_iter()
            .sum();
        let value = match aggregation {
            CdAggregation::PairMean => total / (with.len() * without.len()) as f64,
            CdAggregation::TraceNormalized => total / self.n as f64,
        };
        Ok(Stat::ok(value))
    }
}

/// One step of a Kaplan-Meier curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KmPoint {
    pub time: f64,
    pub survival: f64,
    pub at_risk: usize,
    pub events: usize,
}

fn check_times(times: &[f64], flags: &[bool]) -> Result<(), InterestError> {
    same_len(times.len(), flags.len())?;
    if times.is_empty() {
        return Err(InterestError::EmptyInput);
    }
    if let Some(&t) = times.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(InterestError::InvalidTime(t));
    }
    Ok(())
}

/// Per distinct time: (time, events, removed from the risk set).
fn time_table(times: &[f64], flags: &[bool]) -> Vec<(f64, usize, usize)> {
    let mut table: BTreeMap<u64, (f64, usize, usize)> = BTreeMap::new();
    for (&t, &event) in times.iter().zip(flags) {
        // positive finite floats order like their bit patterns
        let row = table.entry(t.to_bits()).or_insert((t, 0, 0));
        row.1 += usize::from(event);
        row.2 += 1;
    }
    table.into_values().collect()
}

/// Product-limit survival estimate, one point per distinct time.
pub fn kaplan_meier(times: &[f64], event_flags: &[bool]) -> Result<Vec<KmPoint>, InterestError> {
    check_times(times, event_flags)?;
    let mut at_risk = times.len();
    let mut survival = 1.0;
    let mut out = Vec::new();
    for (time, events, removed) in time_table(times, event_flags) {
        if events > 0 {
            survival = survival * (at_risk - events) as f64 / at_risk as f64;
        }
        out.push(KmPoint {
            time,
            survival,
            at_risk,
            events,
        });
        at_risk -= removed;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRank {
    pub statistic: f64,
    pub p_value: f64,
}

/// Chi-square(1) upper tail.
pub fn chi2_1_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    erfc((x / 2.0).sqrt())
}

/// Two-group log-rank test with one degree of freedom.
pub fn log_rank(a: (&[f64], &[bool]), b: (&[f64], &[bool])) -> Result<LogRank, InterestError> {
    check_times(a.0, a.1)?;
    check_times(b.0, b.1)?;
    let mut rows: BTreeMap<u64, [usize; 4]> = BTreeMap::new();
    for (group, (times, flags)) in [a, b].into_iter().enumerate() {
        for (&t, &event) in times.iter().zip(flags) {
            let row = rows.entry(t.to_bits()).or_default();
            row[group] += usize::from(event);
            row[2 + group] += 1;
        }
    }
    let (mut n_a, mut n_b) = (a.0.len(), b.0.len());
    let (mut observed, mut expected, mut variance) = (0.0, 0.0, 0.0);
    for [d_a, d_b, r_a, r_b] in rows.into_values() {
        let d = d_a + d_b;
        let n = n_a + n_b;
        if d > 0 {
            let (d, n, na) = (d as f64, n as f64, n_a as f64);
            observed += d_a as f64;
            expected += d * na / n;
            if n > 1.0 {
                variance += d * (na / n) * (1.0 - na / n) * (n - d) / (n - 1.0);
            }
        }
        n_a -= r_a;
        n_b -= r_b;
    }
    if variance <= 0.0 {
        return Ok(LogRank {
            statistic: 0.0,
            p_value: 1.0,
        });
    }
    let statistic = (observed - expected).powi(2) / variance;
    Ok(LogRank {
        statistic,
        p_value: chi2_1_sf(statistic),
    })
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasureConfig {
    pub oi_transform: OiTransform,
    pub max_instances_per_trace: Option<usize>,
}

/// Scores patterns against one log.
#[derive(Debug)]
pub struct Measurer {
    outcomes: Outcomes,
    distance: DistanceModel,
    aggregation: CdAggregation,
    cfg: MeasureConfig,
    cd_cache: Mutex<HashMap<Vec<bool>, Stat>>,
}

impl Measurer {
    pub fn new(
        log: &EventLog,
        distance: &DistanceConfig,
        cfg: MeasureConfig,
    ) -> Result<Measurer, InterestError> {
        Ok(Measurer {
            outcomes: log.outcomes()?,
            distance: DistanceModel::fit(log, distance)?,
            aggregation: distance.aggregation,
            cfg,
            cd_cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn outcomes(&self) -> &Outcomes {
        &self.outcomes
    }

    pub fn distance_model(&self) -> &DistanceModel {
        &self.distance
    }

    pub fn cap(&self) -> usize {
        self.cfg
            .max_instances_per_trace
            .unwrap_or(DEFAULT_MAX_INSTANCES_PER_TRACE)
    }

    /// Interest values of a frequency vector.
    pub fn interest(
        &self,
        counts: &[u32],
    ) -> Result<(InterestVector, MeasureFlags), InterestError> {
        let oi = outcome_interest(counts, &self.outcomes, self.cfg.oi_transform)?;
        let covered: Vec<bool> = counts.iter().map(|&c| c > 0).collect();
        let cached = self
            .cd_cache
            .lock()
            .expect("cache lock")
            .get(&covered)
            .copied();
        let cd = match cached {
            Some(cd) => cd,
            None => {
                let cd = self.distance.case_distance(counts, self.aggregation)?;
                self.cd_cache
                    .lock()
                    .expect("cache lock")
                    .insert(covered, cd);
                cd
            }
        };
        Ok((
            InterestVector {
                cc: case_coverage(counts),
                oi: oi.value,
                cd: cd.value,
            },
            MeasureFlags {
                oi_degenerate: oi.degenerate,
                cd_degenerate: cd.degenerate,
            },
        ))
    }

    /// Measures one pattern; failures are recorded on the result.
    pub fn measure(&self, polog: &PoLog, p: &Pattern) -> MeasuredPattern {
        let result = frequency_vector(p, polog, self.cap())
            .map_err(|e| e.to_string())
            .and_then(|counts| {
                let (iv, flags) = self.interest(&counts).map_err(|e| e.to_string())?;
                Ok((iv, flags, counts.iter().filter(|&&c| c > 0).count()))
            });
        match result {
            Ok((interest, flags, case_count)) => MeasuredPattern {
                pattern: p.clone(),
                interest,
                case_count,
                flags,
                front: false,
                error: None,
            },
            Err(e) => MeasuredPattern {
                pattern: p.clone(),
                interest: InterestVector::default(),
                case_count: 0,
                flags: MeasureFlags::default(),
                front: false,
                error: Some(e),
            },
        }
    }

    pub fn measure_all(&self, polog: &PoLog, patterns: &[Pattern]) -> Vec<MeasuredPattern> {
        patterns
            .par_iter()
            .map(|p| self.measure(polog, p))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryShare {
    pub value: String,
    pub with: f64,
    pub without: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub min: f64,
    pub max: f64,
    pub bins: usize,
    pub with: Vec<u32>,
    pub without: Vec<u32>,
    pub with_missing: u32,
    pub without_missing: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSummary {
    pub median_with: Option<f64>,
    pub median_without: Option<f64>,
    pub class_shares: Option<Vec<CategoryShare>>,
    pub km_with: Option<Vec<KmPoint>>,
    pub km_without: Option<Vec<KmPoint>>,
    pub log_rank: Option<LogRank>,
}

/// Everything a per-pattern dashboard shows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DashboardData {
    pub pattern: PatternJson,
    pub interest: InterestVector,
    pub flags: MeasureFlags,
    pub cases_with: usize,
    pub cases_without: usize,
    pub categorical: BTreeMap<String, Vec<CategoryShare>>,
    pub numeric: BTreeMap<String, Histogram>,
    pub outcome: OutcomeSummary,
}

fn shares(values: &[&str], with: &[bool]) -> Vec<CategoryShare> {
    let n_with = with.iter().filter(|&&w| w).count();
    let n_without = with.len() - n_with;
    let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (v, &w) in values.iter().zip(with) {
        let c = counts.entry(v).or_default();
        if w {
            c.0 += 1;
        } else {
            c.1 += 1;
        }
    }
    let frac = |c: usize, n: usize| if n == 0 { 0.0 } else { c as f64 / n as f64 };
    counts
        .into_iter()
        .map(|(value, (a, b))| CategoryShare {
            value: value.to_string(),
            with: frac(a, n_with),
            without: frac(b, n_without),
        })
        .collect()
}

fn histogram(values: &[Option<f64>], with: &[bool], bins: usize) -> Histogram {
    let present = values.iter().flatten();
    let min = present.clone().copied().fold(f64::INFINITY, f64::min);
    let max = present.copied().fold(f64::NEG_INFINITY, f64::max);
    let (min, max) = if min.is_finite() {
        (min, max)
    } else {
        (0.0, 0.0)
    };
    let mut h = Histogram {
        min,
        max,
        bins,
        with: vec![0; bins],
        without: vec![0; bins],
        with_missing: 0,
        without_missing: 0,
    };
    for (v, &w) in values.iter().zip(with) {
        match v {
            None if w => h.with_missing += 1,
            None => h.without_missing += 1,
            Some(x) => {
                let bin = if max > min {
                    (((x - min) / (max - min)) * bins as f64).floor() as usize
                } else {
                    0
                };
                let bin = bin.min(bins - 1);
                if w {
                    h.with[bin] += 1;
                } else {
                    h.without[bin] += 1;
                }
            }
        }
    }
    h
}

/// Dashboard statistics for one pattern given its frequency vector.
pub fn dashboard_stats(
    p: &Pattern,
    counts: &[u32],
    log: &EventLog,
    measurer: &Measurer,
) -> Result<DashboardData, InterestError> {
    same_len(counts.len(), log.len())?;
    let with: Vec<bool> = counts.iter().map(|&c| c > 0).collect();
    let (interest, flags) = measurer.interest(counts)?;
    let model = measurer.distance_model();
    let mut categorical = BTreeMap::new();
    for name in model.categorical_attributes() {
        let values: Vec<&str> = log
            .traces()
            .iter()
            .map(|t| {
                t.case_attrs
                    .categorical
                    .get(name)
                    .map(String::as_str)
                    .unwrap_or(MISSING_CATEGORY)
            })
            .collect();
        categorical.insert(name.clone(), shares(&values, &with));
    }
    let mut numeric = BTreeMap::new();
    for name in model.numeric_attributes() {
        let values: Vec<Option<f64>> = log
            .traces()
            .iter()
            .map(|t| t.case_attrs.numeric.get(name).copied().flatten())
            .collect();
        numeric.insert(
            name.clone(),
            histogram(&values, &with, DEFAULT_HISTOGRAM_BINS),
        );
    }
    let outcome = match measurer.outcomes() {
        Outcomes::Continuous(ov) => {
            let pick = |keep: bool| -> Vec<f64> {
                ov.iter()
                    .zip(&with)
                    .filter(|(_, &w)| w == keep)
                    .map(|(v, _)| *v)
                    .collect()
            };
            let (a, b) = (pick(true), pick(false));
            let km = |v: &[f64]| kaplan_meier(v, &vec![true; v.len()]).ok();
            let log_rank = log_rank((&a, &vec![true; a.len()]), (&b, &vec![true; b.len()])).ok();
            OutcomeSummary {
                median_with: median(&a),
                median_without: median(&b),
                class_shares: None,
                km_with: km(&a),
                km_without: km(&b),
                log_rank,
            }
        }
        Outcomes::Categorical(ov) => {
            let values: Vec<&str> = ov.iter().map(String::as_str).collect();
            OutcomeSummary {
                median_with: None,
                median_without: None,
                class_shares: Some(shares(&values, &with)),
                km_with: None,
                km_without: None,
                log_rank: None,
            }
        }
    };
    let cases_with = with.iter().filter(|&&w| w).count();
    Ok(DashboardData {
        pattern: PatternJson::from(p.clone()),
        interest,
        flags,
        cases_with,
        cases_without: with.len() - cases_with,
        categorical,
        numeric,
        outcome,
    })
}
