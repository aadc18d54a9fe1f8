//! Predictive evaluation of discovered pattern sets.
//!
//! Traces are frequency-encoded (one column per pattern holding its
//! instance count), a CART tree is trained on the training folds and scored
//! by macro-F1 on the held-out fold. Pattern discovery runs on the training
//! traces of each fold only.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discovery::{auto_discover, DiscoveryConfig, DiscoveryError};
use crate::interest::InterestVector;
use crate::log_model::{EventLog, LogError, Outcomes};
use crate::pareto::{Direction, MeasuredPattern};
use crate::partial_order::PoLog;
use crate::patterns::{frequency_vector, Pattern, PatternError, PatternId};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid evaluation setup: {0}")]
    Config(String),
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error(transparent)]
    Discovery(#[from] DiscoveryError),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least two classes to train a tree")]
    SingleClass,
    #[error("class `{class}` has {count} cases, fewer than {folds} folds")]
    InsufficientClassSupport {
        class: String,
        count: usize,
        folds: usize,
    },
    #[error("k = {k} exceeds the {available} candidates")]
    KTooLarge { k: usize, available: usize },
}

/// Row-major trace × pattern count matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u32>,
    features: Vec<PatternId>,
}

impl FeatureMatrix {
    pub fn from_columns(
        features: Vec<PatternId>,
        columns: &[Vec<u32>],
        rows: usize,
    ) -> FeatureMatrix {
        let cols = columns.len();
        let mut data = vec![0; rows * cols];
        for (c, column) in columns.iter().enumerate() {
            assert_eq!(column.len(), rows, "column length");
            for (r, &v) in column.iter().enumerate() {
                data[r * cols + c] = v;
            }
        }
        FeatureMatrix {
            rows,
            cols,
            data,
            features,
        }
    }

    pub fn from_rows(rows: &[Vec<u32>]) -> FeatureMatrix {
        let cols = rows.first().map_or(0, Vec::len);
        FeatureMatrix {
            rows: rows.len(),
            cols,
            data: rows.iter().flat_map(|r| r.iter().copied()).collect(),
            features: (0..cols).map(|c| PatternId(format!("f{c}"))).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn features(&self) -> &[PatternId] {
        &self.features
    }

    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[u32] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }
}

/// One column per pattern, one row per trace of `polog`.
pub fn frequency_encode(
    patterns: &[Pattern],
    polog: &PoLog,
    cap: usize,
) -> Result<FeatureMatrix, PatternError> {
    let columns = patterns
        .iter()
        .map(|p| frequency_vector(p, polog, cap))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FeatureMatrix::from_columns(
        patterns.iter().map(|p| p.id().clone()).collect(),
        &columns,
        polog.len(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: 5,
            min_samples_leaf: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TreeNode {
    Leaf {
        class: String,
    },
    /// Goes left when `2 * x <= threshold2`, i.e. `x <= threshold2 / 2`.
    Split {
        feature: usize,
        threshold2: u64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

/// CART classifier with Gini impurity over integer features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    root: TreeNode,
    classes: Vec<String>,
}

struct Builder<'a> {
    x: &'a FeatureMatrix,
    y: &'a [usize],
    n_classes: usize,
    cfg: TreeConfig,
}

/// Split quality as the fraction `num / den` of `Σ_side Σ_k c_k² / n_side`;
/// larger means lower weighted Gini.
#[derive(Clone, Copy)]
struct Score {
    num: u128,
    den: u128,
}

impl Score {
    fn better_than(self, other: Score) -> bool {
        self.num * other.den > other.num * self.den
    }
}

fn sum_sq(counts: &[u64]) -> u128 {
    counts.iter().map(|&c| (c as u128) * (c as u128)).sum()
}

impl Builder<'_> {
    fn class_counts(&self, idx: &[usize]) -> Vec<u64> {
        let mut counts = vec![0u64; self.n_classes];
        for &i in idx {
            counts[self.y[i]] += 1;
        }
        counts
    }

    fn leaf(&self, counts: &[u64], classes: &[String]) -> TreeNode {
        // classes are sorted, so the first maximum is the smallest name
        let best = (0..counts.len())
            .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)))
            .unwrap_or(0);
        TreeNode::Leaf {
            class: classes[best].clone(),
        }
    }

    fn best_split(&self, idx: &[usize]) -> Option<(usize, u64)> {
        let min_leaf = self.cfg.min_samples_leaf.max(1);
        let total = self.class_counts(idx);
        let mut best: Option<(Score, usize, u64)> = None;
        for f in 0..self.x.cols() {
            let mut sorted: Vec<usize> = idx.to_vec();
            sorted.sort_by_key(|&i| self.x.get(i, f));
            let mut left = vec![0u64; self.n_classes];
            for pos in 0..sorted.len() - 1 {
                left[self.y[sorted[pos]]] += 1;
                let (a, b) = (self.x.get(sorted[pos], f), self.x.get(sorted[pos + 1], f));
                let n_left = pos + 1;
                let n_right = sorted.len() - n_left;
                if a == b || n_left < min_leaf || n_right < min_leaf {
                    continue;
                }
                let right: Vec<u64> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
                let (nl, nr) = (n_left as u128, n_right as u128);
                let score = Score {
                    num: sum_sq(&left) * nr + sum_sq(&right) * nl,
                    den: nl * nr,
                };
                let threshold2 = a as u64 + b as u64;
                if best.is_none_or(|(s, _, _)| score.better_than(s)) {
                    best = Some((score, f, threshold2));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn build(&self, idx: &[usize], depth: usize, classes: &[String]) -> TreeNode {
        let counts = self.class_counts(idx);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.cfg.max_depth || idx.len() < 2 * self.cfg.min_samples_leaf.max(1) {
            return self.leaf(&counts, classes);
        }
        let Some((feature, threshold2)) = self.best_split(idx) else {
            return self.leaf(&counts, classes);
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| 2 * self.x.get(i, feature) as u64 <= threshold2);
        TreeNode::Split {
            feature,
            threshold2,
            left: Box::new(self.build(&l, depth + 1, classes)),
            right: Box::new(self.build(&r, depth + 1, classes)),
        }
    }
}

impl DecisionTree {
    pub fn fit(
        x: &FeatureMatrix,
        labels: &[String],
        cfg: TreeConfig,
    ) -> Result<DecisionTree, EvalError> {
        if x.rows() != labels.len() {
            return Err(EvalError::LengthMismatch(x.rows(), labels.len()));
        }
        if labels.is_empty() {
            return Err(EvalError::Config("cannot fit a tree on zero rows".into()));
        }
        let classes: Vec<String> = labels
            .iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if classes.len() < 2 {
            return Err(EvalError::SingleClass);
        }
        let y: Vec<usize> = labels
            .iter()
            .map(|l| classes.binary_search(l).expect("class present"))
            .collect();
        let builder = Builder {
            x,
            y: &y,
            n_classes: classes.len(),
            cfg,
        };
        let idx: Vec<usize> = (0..x.rows()).collect();
        let root = builder.build(&idx, 0, &classes);
        Ok(DecisionTree { root, classes })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    pub fn predict_row(&self, row: &[u32]) -> &str {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { class } => return class,
                TreeNode::Split {
                    feature,
                    threshold2,
                    left,
                    right,
                } => {
                    node = if 2 * row[*feature] as u64 <= *threshold2 {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Vec<String> {
        (0..x.rows())
            .map(|r| self.predict_row(x.row(r)).to_string())
            .collect()
    }

    pub fn depth(&self) -> usize {
        fn depth(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + depth(left).max(depth(right)),
            }
        }
        depth(&self.root)
    }
}

/// Unweighted mean of per-class F1 over classes seen in either vector.
pub fn macro_f1(truth: &[String], predicted: &[String]) -> Result<f64, EvalError> {
    if truth.len() != predicted.len() {
        return Err(EvalError::LengthMismatch(truth.len(), predicted.len()));
    }
    let classes: BTreeSet<&String> = truth.iter().chain(predicted).collect();
    if classes.is_empty() {
        return Err(EvalError::Config("no labels".into()));
    }
    let total: f64 = classes
        .iter()
        .map(|c| {
            let mut tp = 0usize;
            let mut fp = 0usize;
            let mut fn_ = 0usize;
            for (t, p) in truth.iter().zip(predicted) {
                match (t == *c, p == *c) {
                    (true, true) => tp += 1,
                    (false, true) => fp += 1,
                    (true, false) => fn_ += 1,
                    _ => {}
                }
            }
            2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
        })
        .sum();
    Ok(total / classes.len() as f64)
}

/// Test-fold indices for stratified k-fold. Each class is shuffled with a
/// seeded RNG and dealt round-robin, continuing where the previous class
/// stopped so fold sizes stay balanced.
pub fn stratified_folds(
    labels: &[String],
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>, EvalError> {
    if k < 2 {
        return Err(EvalError::Config("need at least 2 folds".into()));
    }
    if k > labels.len() {
        return Err(EvalError::Config(format!(
            "{k} folds for {} traces",
            labels.len()
        )));
    }
    let mut by_class: BTreeMap<&String, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for members in by_class.values_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            folds[next % k].push(i);
            next += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// How features are picked from a fold's discovery run.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    /// Union of all iteration fronts.
    Pareto,
    /// Every measured candidate of every iteration.
    All,
    /// Top-K candidates by one interest dimension, K = |pareto set|.
    Single(String),
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Pareto => f.write_str("pareto"),
            Strategy::All => f.write_str("all"),
            Strategy::Single(d) => write!(f, "single:{d}"),
        }
    }
}

impl FromStr for Strategy {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Strategy, EvalError> {
        match s.trim() {
            "pareto" => Ok(Strategy::Pareto),
            "all" => Ok(Strategy::All),
            other => match other.strip_prefix("single:") {
                Some(d @ ("cc" | "oi" | "cd")) => Ok(Strategy::Single(d.to_string())),
                _ => Err(EvalError::UnknownStrategy(other.to_string())),
            },
        }
    }
}

impl Serialize for Strategy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Strategy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Strategy, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

pub fn default_strategies() -> Vec<Strategy> {
    vec![
        Strategy::Pareto,
        Strategy::All,
        Strategy::Single("cc".into()),
        Strategy::Single("oi".into()),
        Strategy::Single("cd".into()),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub folds: usize,
    pub seed: u64,
    pub strategies: Vec<Strategy>,
    pub tree: TreeConfig,
    /// Equal-frequency classes for continuous outcomes.
    pub outcome_bins: usize,
    pub discovery: DiscoveryConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            folds: 5,
            seed: 0,
            strategies: default_strategies(),
            tree: TreeConfig::default(),
            outcome_bins: 2,
            discovery: DiscoveryConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyReport {
    pub strategy: Strategy,
    pub fold_f1: Vec<f64>,
    pub fold_features: Vec<usize>,
    pub mean_f1: f64,
    pub min_f1: f64,
    pub max_f1: f64,
    pub std_f1: f64,
    pub mean_features: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub folds: usize,
    pub seed: u64,
    pub traces: usize,
    pub classes: Vec<String>,
    pub strategies: Vec<StrategyReport>,
    /// Per fold, pareto feature count over all-candidates feature count.
    pub fold_feature_ratio: Vec<f64>,
    /// Total pareto feature count over total all-candidates feature count.
    pub pareto_all_feature_ratio: Option<f64>,
}

impl EvalReport {
    pub fn strategy(&self, s: &Strategy) -> Option<&StrategyReport> {
        self.strategies.iter().find(|r| &r.strategy == s)
    }
}

fn all_candidates(session: &crate::discovery::DiscoverySession) -> Vec<MeasuredPattern> {
    let mut seen = HashSet::new();
    session
        .iterations()
        .iter()
        .flat_map(|it| it.candidates.iter())
        .filter(|m| m.error.is_none() && seen.insert(m.pattern.key().to_string()))
        .cloned()
        .collect()
}

/// The `k` best candidates along one interest dimension; ties by pattern id.
pub fn top_k_by_dimension(
    candidates: &[MeasuredPattern],
    dim: &str,
    direction: Direction,
    k: usize,
) -> Result<Vec<MeasuredPattern>, EvalError> {
    if k > candidates.len() {
        return Err(EvalError::KTooLarge {
            k,
            available: candidates.len(),
        });
    }
    if !InterestVector::NAMES.contains(&dim) {
        return Err(EvalError::UnknownStrategy(format!("single:{dim}")));
    }
    let mut ranked = candidates.to_vec();
    ranked.sort_by(|a, b| {
        let (x, y) = (
            a.interest.get(dim).unwrap_or(0.0),
            b.interest.get(dim).unwrap_or(0.0),
        );
        let ord = match direction {
            Direction::Max => y.total_cmp(&x),
            Direction::Min => x.total_cmp(&y),
        };
        ord.then_with(|| a.pattern.id().cmp(b.pattern.id()))
    });
    ranked.truncate(k);
    Ok(ranked)
}

/// Class label per trace: categorical outcomes as-is, continuous outcomes
/// binned into equal-frequency classes.
pub fn class_labels(log: &EventLog, bins: usize) -> Result<Vec<String>, EvalError> {
    match log.outcomes()? {
        Outcomes::Categorical(v) => Ok(v),
        Outcomes::Continuous(_) => match log.with_equal_frequency_classes(bins)?.outcomes()? {
            Outcomes::Categorical(v) => Ok(v),
            Outcomes::Continuous(_) => unreachable!("binning yields categories"),
        },
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Stratified k-fold comparison of feature-selection strategies.
pub fn cross_validate(log: &EventLog, cfg: &EvalConfig) -> Result<EvalReport, EvalError> {
    if cfg.strategies.is_empty() {
        return Err(EvalError::Config("no strategies requested".into()));
    }
    cfg.discovery.validate()?;
    let labels = class_labels(log, cfg.outcome_bins)?;
    let mut support: BTreeMap<&String, usize> = BTreeMap::new();
    for l in &labels {
        *support.entry(l).or_default() += 1;
    }
    if support.len() < 2 {
        return Err(EvalError::SingleClass);
    }
    if let Some((class, &count)) = support.iter().find(|(_, &c)| c < cfg.folds) {
        return Err(EvalError::InsufficientClassSupport {
            class: class.to_string(),
            count,
            folds: cfg.folds,
        });
    }
    let folds = stratified_folds(&labels, cfg.folds, cfg.seed)?;
    let polog = PoLog::build(log, &cfg.discovery.oracle);
    let cap = cfg
        .discovery
        .measure
        .max_instances_per_trace
        .unwrap_or(crate::patterns::DEFAULT_MAX_INSTANCES_PER_TRACE);
    let mut f1: BTreeMap<&Strategy, Vec<f64>> = BTreeMap::new();
    let mut sizes: BTreeMap<&Strategy, Vec<usize>> = BTreeMap::new();
    let mut pareto_all_sizes: Vec<(usize, usize)> = Vec::new();

    for test in &folds {
        let test_set: HashSet<usize> = test.iter().copied().collect();
        let train: Vec<usize> = (0..log.len()).filter(|i| !test_set.contains(i)).collect();
        let train_log = Arc::new(log.select(&train)?);
        let session = auto_discover(train_log, cfg.discovery.clone())?;
        let pareto: Vec<MeasuredPattern> = session
            .discovered_patterns()
            .into_iter()
            .filter(|m| m.error.is_none())
            .collect();
        let all = all_candidates(&session);
        pareto_all_sizes.push((pareto.len(), all.len()));

        let (train_po, test_po) = (polog.select(&train), polog.select(test));
        let train_y: Vec<String> = train.iter().map(|&i| labels[i].clone()).collect();
        let test_y: Vec<String> = test.iter().map(|&i| labels[i].clone()).collect();
        for strategy in &cfg.strategies {
            let chosen = match strategy {
                Strategy::Pareto => pareto.clone(),
                Strategy::All => all.clone(),
                Strategy::Single(dim) => {
                    let direction = cfg.discovery.directions.get(dim).unwrap_or(Direction::Max);
                    top_k_by_dimension(&all, dim, direction, pareto.len())?
                }
            };
            let patterns: Vec<Pattern> = chosen.into_iter().map(|m| m.pattern).collect();
            let x_train = frequency_encode(&patterns, &train_po, cap)?;
            let x_test = frequency_encode(&patterns, &test_po, cap)?;
            let tree = DecisionTree::fit(&x_train, &train_y, cfg.tree)?;
            f1.entry(strategy)
                .or_default()
                .push(macro_f1(&test_y, &tree.predict(&x_test))?);
            sizes.entry(strategy).or_default().push(patterns.len());
        }
    }

    let strategies = cfg
        .strategies
        .iter()
        .map(|s| {
            let fold_f1 = f1.get(s).cloned().unwrap_or_default();
            let fold_features = sizes.get(s).cloned().unwrap_or_default();
            let (mean_f1, std_f1) = mean_std(&fold_f1);
            let min_f1 = fold_f1.iter().copied().fold(f64::INFINITY, f64::min);
            let max_f1 = fold_f1.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mean_features =
                mean_std(&fold_features.iter().map(|&n| n as f64).collect::<Vec<_>>()).0;
            StrategyReport {
                strategy: s.clone(),
                fold_f1,
                fold_features,
                mean_f1,
                min_f1: min_f1.min(mean_f1),
                max_f1: max_f1.max(mean_f1),
                std_f1,
                mean_features,
            }
        })
        .collect();
    let (p_total, a_total) = pareto_all_sizes
        .iter()
        .fold((0usize, 0usize), |(p, a), (x, y)| (p + x, a + y));
    Ok(EvalReport {
        folds: cfg.folds,
        seed: cfg.seed,
        traces: log.len(),
        classes: labels
            .iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
        strategies,
        fold_feature_ratio: pareto_all_sizes
            .iter()
            .filter(|(_, a)| *a > 0)
            .map(|&(p, a)| p as f64 / a as f64)
            .collect(),
        pareto_all_feature_ratio: (a_total > 0).then(|| p_total as f64 / a_total as f64),
    })
}
