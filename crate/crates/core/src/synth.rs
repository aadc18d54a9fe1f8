//! Seeded generator for logs with a planted pattern.
//!
//! Each trace is a sequence of filler activities, one per day. With a
//! configured probability a planted pattern is inserted as consecutive
//! layers; activities of one layer share a timestamp and so become
//! concurrent under the default tie policy. The outcome depends on whether
//! the pattern was planted, optionally with label noise and a confounding
//! case attribute.

use std::collections::BTreeMap;

use chrono::{NaiveDate, NaiveDateTime, TimeDelta};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::log_model::{
    AttributeDecl, AttributeKind, CaseAttributes, Event, EventLog, LogError, LogSchema,
    OutcomeKind, OutcomeValue, Trace,
};
use crate::patterns::{PairKind, Pattern, PatternError, PatternJson};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid plant spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

/// How the outcome is derived from planting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OutcomeRule {
    /// Class `B` when planted, `A` otherwise. A `noise` fraction of traces
    /// receives a uniformly random class instead.
    Binary { noise: f64 },
    /// Normal outcome whose mean shifts by `effect` when planted.
    Continuous { base: f64, effect: f64, sd: f64 },
}

/// Categorical attribute tied to planting: with probability `strength` a
/// trace takes the value of its group, otherwise a fair coin decides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Confound {
    pub attribute: String,
    pub planted_value: String,
    pub other_value: String,
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantSpec {
    /// Planted pattern as layers; each layer directly follows the previous.
    pub layers: Vec<Vec<String>>,
    pub plant_probability: f64,
    pub filler_alphabet: Vec<String>,
    /// Inclusive range of filler events per trace.
    pub filler_count: (usize, usize),
    pub n_traces: usize,
    pub outcome: OutcomeRule,
    pub confound: Option<Confound>,
    /// Adds an independent numeric `age` and categorical `region`.
    pub background_attributes: bool,
    pub seed: u64,
}

impl Default for PlantSpec {
    fn default() -> Self {
        PlantSpec {
            layers: vec![vec!["scan".into()], vec!["chemo".into(), "radio".into()]],
            plant_probability: 0.5,
            filler_alphabet: ('a'..='h').map(|c| format!("act_{c}")).collect(),
            filler_count: (3, 6),
            n_traces: 400,
            outcome: OutcomeRule::Binary { noise: 0.05 },
            confound: None,
            background_attributes: true,
            seed: 7,
        }
    }
}

/// What the generator planted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub pattern: PatternJson,
    pub key: String,
    /// Per case, whether the pattern was planted.
    pub planted: BTreeMap<String, bool>,
    /// Cases whose class was redrawn by label noise.
    pub noisy_cases: Vec<String>,
    pub seed: u64,
}

impl PlantSpec {
    fn validate(&self) -> Result<(), SynthError> {
        let fail = |m: &str| Err(SynthError::Spec(m.to_string()));
        if self.layers.is_empty() || self.layers.iter().any(Vec::is_empty) {
            return fail("planted pattern needs non-empty layers");
        }
        if !(0.0..=1.0).contains(&self.plant_probability) {
            return fail("plant_probability must be in [0, 1]");
        }
        if self.filler_alphabet.is_empty() && self.filler_count.1 > 0 {
            return fail("filler_alphabet is empty");
        }
        if self.filler_count.0 > self.filler_count.1 {
            return fail("filler_count range is reversed");
        }
        if self.n_traces == 0 {
            return fail("n_traces must be positive");
        }
        let planted: Vec<&String> = self.layers.iter().flatten().collect();
        if planted.iter().any(|a| self.filler_alphabet.contains(a)) {
            return fail("planted activities must not be filler activities");
        }
        if let Some(c) = &self.confound {
            if !(0.0..=1.0).contains(&c.strength) {
                return fail("confound strength must be in [0, 1]");
            }
        }
        match self.outcome {
            OutcomeRule::Binary { noise } if !(0.0..=1.0).contains(&noise) => {
                fail("noise must be in [0, 1]")
            }
            OutcomeRule::Continuous { sd, .. } if !(sd >= 0.0 && sd.is_finite()) => {
                fail("sd must be finite and >= 0")
            }
            _ => Ok(()),
        }
    }

    /// The planted pattern: consecutive layers are directly related, layers
    /// further apart eventually, members of one layer concurrently.
    pub fn planted_pattern(&self) -> Result<Pattern, SynthError> {
        let mut labels = Vec::new();
        let mut layer_of = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            for a in layer {
                labels.push(a.clone());
                layer_of.push(l);
            }
        }
        let mut relations = Vec::new();
        for u in 0..labels.len() {
            for v in u + 1..labels.len() {
                let kind = match layer_of[v] - layer_of[u] {
                    0 => PairKind::Concurrent,
                    1 => PairKind::Direct,
                    _ => PairKind::Eventual,
                };
                relations.push((u, v, kind));
            }
        }
        Ok(Pattern::new(labels, &relations, None)?)
    }

    pub fn schema(&self) -> LogSchema {
        let mut attrs = Vec::new();
        if self.background_attributes {
            attrs.push(AttributeDecl {
                name: "age".into(),
                kind: AttributeKind::Numeric,
            });
            attrs.push(AttributeDecl {
                name: "region".into(),
                kind: AttributeKind::Categorical,
            });
        }
        if let Some(c) = &self.confound {
            attrs.push(AttributeDecl {
                name: c.attribute.clone(),
                kind: AttributeKind::Categorical,
            });
        }
        LogSchema {
            outcome_kind: match self.outcome {
                OutcomeRule::Binary { .. } => OutcomeKind::Categorical,
                OutcomeRule::Continuous { .. } => OutcomeKind::Continuous,
            },
            case_attributes: attrs,
            ..LogSchema::default()
        }
    }
}

fn start_time() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2020, 1, 1)
        .expect("valid date")
        .and_hms_opt(8, 0, 0)
        .expect("valid time")
}

/// Generates a log and its ground truth; identical for identical specs.
pub fn generate(spec: &PlantSpec) -> Result<(EventLog, GroundTruth), SynthError> {
    spec.validate()?;
    let pattern = spec.planted_pattern()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let width = spec.n_traces.to_string().len();
    let mut traces = Vec::with_capacity(spec.n_traces);
    let mut planted_map = BTreeMap::new();
    let mut noisy = Vec::new();

    for t in 0..spec.n_traces {
        let case_id = format!("case_{t:0width$}");
        let planted = rng.random_bool(spec.plant_probability);
        let n_fill = rng.random_range(spec.filler_count.0..=spec.filler_count.1);
        let mut layers: Vec<Vec<String>> = (0..n_fill)
            .map(|_| {
                let i = rng.random_range(0..spec.filler_alphabet.len());
                vec![spec.filler_alphabet[i].clone()]
            })
            .collect();
        if planted {
            let at = rng.random_range(0..=layers.len());
            layers.splice(at..at, spec.layers.iter().cloned());
        }
        let start = start_time() + TimeDelta::days(rng.random_range(0..365));
        let events = layers
            .iter()
            .enumerate()
            .flat_map(|(d, layer)| {
                let case_id = case_id.clone();
                layer.iter().map(move |a| Event {
                    activity: a.clone(),
                    case_id: case_id.clone(),
                    timestamp: start + TimeDelta::days(d as i64),
                    end: None,
                    attrs: BTreeMap::new(),
                })
            })
            .collect();

        let outcome = match spec.outcome {
            OutcomeRule::Binary { noise } => {
                let mut class = if planted { "B" } else { "A" };
                if rng.random_bool(noise) {
                    noisy.push(case_id.clone());
                    class = if rng.random_bool(0.5) { "B" } else { "A" };
                }
                OutcomeValue::Categorical(class.to_string())
            }
            OutcomeRule::Continuous { base, effect, sd } => {
                let mean = if planted { base + effect } else { base };
                let v = if sd > 0.0 {
                    Normal::new(mean, sd)
                        .expect("validated sd")
                        .sample(&mut rng)
                } else {
                    mean
                };
                OutcomeValue::Continuous(v)
            }
        };

        let mut case_attrs = CaseAttributes::default();
        if spec.background_attributes {
            case_attrs
                .numeric
                .insert("age".into(), Some(rng.random_range(20..=80) as f64));
            let region = if rng.random_bool(0.5) {
                "north"
            } else {
                "south"
            };
            case_attrs
                .categorical
                .insert("region".into(), region.into());
        }
        if let Some(c) = &spec.confound {
            let leaning = if planted {
                &c.planted_value
            } else {
                &c.other_value
            };
            let value = if rng.random_bool(c.strength) || rng.random_bool(0.5) {
                leaning
            } else if planted {
                &c.other_value
            } else {
                &c.planted_value
            };
            case_attrs
                .categorical
                .insert(c.attribute.clone(), value.clone());
        }

        planted_map.insert(case_id.clone(), planted);
        traces.push(Trace {
            case_id,
            events,
            case_attrs,
            outcome: Some(outcome),
        });
    }

    let log = EventLog::new(traces, spec.schema())?;
    let truth = GroundTruth {
        key: pattern.key().to_string(),
        pattern: PatternJson::from(pattern),
        planted: planted_map,
        noisy_cases: noisy,
        seed: spec.seed,
    };
    Ok((log, truth))
}
