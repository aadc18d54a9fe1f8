//! Events, traces and event logs, plus CSV ingestion and export.
//!
//! Traces are always held in canonical order (case id, lexicographic). Every
//! per-trace vector produced elsewhere in the crate (outcome vectors,
//! frequency vectors, feature matrix rows) follows that order.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Category used for a declared categorical attribute whose cell is empty.
pub const MISSING_CATEGORY: &str = "__missing__";

pub const DEFAULT_TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

#[derive(Debug, Error)]
pub enum LogError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("unparseable timestamp `{value}` at row {row}")]
    UnparseableTimestamp { row: usize, value: String },
    #[error("unparseable number `{value}` in column `{column}` at row {row}")]
    UnparseableNumber {
        row: usize,
        column: String,
        value: String,
    },
    #[error("empty activity label at row {0}")]
    EmptyActivity(usize),
    #[error("inconsistent outcome for case `{0}`")]
    InconsistentOutcome(String),
    #[error("duplicate case id `{0}`")]
    DuplicateCase(String),
    #[error("trace `{0}` has no events")]
    EmptyTrace(String),
    #[error("event log is empty")]
    EmptyLog,
    #[error("case `{0}` has no outcome")]
    MissingOutcome(String),
    #[error("schema error: {0}")]
    Schema(String),
}

/// A scalar event attribute value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Text(String),
    Missing,
}

impl Scalar {
    fn parse(cell: &str) -> Scalar {
        if cell.is_empty() {
            Scalar::Missing
        } else if let Ok(v) = cell.parse::<f64>() {
            Scalar::Number(v)
        } else {
            Scalar::Text(cell.to_string())
        }
    }

    fn render(&self) -> String {
        match self {
            Scalar::Number(v) => v.to_string(),
            Scalar::Text(s) => s.clone(),
            Scalar::Missing => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub activity: String,
    pub case_id: String,
    pub timestamp: NaiveDateTime,
    /// Completion instant, when the schema declares an end-timestamp column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<NaiveDateTime>,
    #[serde(default)]
    pub attrs: BTreeMap<String, Scalar>,
}

impl Event {
    pub fn end_or_start(&self) -> NaiveDateTime {
        self.end.unwrap_or(self.timestamp)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CaseAttributes {
    pub numeric: BTreeMap<String, Option<f64>>,
    pub categorical: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeKind {
    Continuous,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OutcomeValue {
    Continuous(f64),
    Categorical(String),
}

impl OutcomeValue {
    pub fn kind(&self) -> OutcomeKind {
        match self {
            OutcomeValue::Continuous(_) => OutcomeKind::Continuous,
            OutcomeValue::Categorical(_) => OutcomeKind::Categorical,
        }
    }

    fn render(&self) -> String {
        match self {
            OutcomeValue::Continuous(v) => v.to_string(),
            OutcomeValue::Categorical(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub case_id: String,
    pub events: Vec<Event>,
    pub case_attrs: CaseAttributes,
    pub outcome: Option<OutcomeValue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeDecl {
    pub name: String,
    pub kind: AttributeKind,
}

/// Column mapping for CSV ingestion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogSchema {
    pub case_column: String,
    pub activity_column: String,
    pub timestamp_column: String,
    pub end_timestamp_column: Option<String>,
    pub outcome_column: String,
    pub outcome_kind: OutcomeKind,
    pub case_attributes: Vec<AttributeDecl>,
    pub timestamp_format: String,
    pub delimiter: char,
}

impl Default for LogSchema {
    fn default() -> Self {
        LogSchema {
            case_column: "case_id".into(),
            activity_column: "activity".into(),
            timestamp_column: "timestamp".into(),
            end_timestamp_column: None,
            outcome_column: "outcome".into(),
            outcome_kind: OutcomeKind::Categorical,
            case_attributes: Vec::new(),
            timestamp_format: DEFAULT_TIMESTAMP_FORMAT.into(),
            delimiter: ',',
        }
    }
}

impl LogSchema {
    pub fn numeric_attributes(&self) -> impl Iterator<Item = &str> {
        self.case_attributes
            .iter()
            .filter(|a| a.kind == AttributeKind::Numeric)
            .map(|a| a.name.as_str())
    }

    pub fn categorical_attributes(&self) -> impl Iterator<Item = &str> {
        self.case_attributes
            .iter()
            .filter(|a| a.kind == AttributeKind::Categorical)
            .map(|a| a.name.as_str())
    }

    fn reserved_columns(&self) -> BTreeSet<&str> {
        let mut cols: BTreeSet<&str> = [
            self.case_column.as_str(),
            self.activity_column.as_str(),
            self.timestamp_column.as_str(),
            self.outcome_column.as_str(),
        ]
        .into_iter()
        .collect();
        if let Some(end) = &self.end_timestamp_column {
            cols.insert(end);
        }
        cols.extend(self.case_attributes.iter().map(|a| a.name.as_str()));
        cols
    }
}

/// An immutable event log with traces in canonical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    traces: Vec<Trace>,
    schema: LogSchema,
    alphabet: BTreeSet<String>,
}

/// Non-fatal observations made while loading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadWarning {
    pub case_id: String,
    pub message: String,
}

/// Outcome vector with the kind resolved.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcomes {
    Continuous(Vec<f64>),
    Categorical(Vec<String>),
}

impl Outcomes {
    pub fn len(&self) -> usize {
        match self {
            Outcomes::Continuous(v) => v.len(),
            Outcomes::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl EventLog {
    /// Builds a log from traces in any order; traces are sorted by case id.
    pub fn new(mut traces: Vec<Trace>, schema: LogSchema) -> Result<EventLog, LogError> {
        if traces.is_empty() {
            return Err(LogError::EmptyLog);
        }
        traces.sort_by(|a, b| a.case_id.cmp(&b.case_id));
        for pair in traces.windows(2) {
            if pair[0].case_id == pair[1].case_id {
                return Err(LogError::DuplicateCase(pair[0].case_id.clone()));
            }
        }
        let mut alphabet = BTreeSet::new();
        for trace in &traces {
            if trace.events.is_empty() {
                return Err(LogError::EmptyTrace(trace.case_id.clone()));
            }
            for e in &trace.events {
                alphabet.insert(e.activity.clone());
            }
        }
        Ok(EventLog {
            traces,
            schema,
            alphabet,
        })
    }

    pub fn traces(&self) -> &[Trace] {
        &self.traces
    }

    pub fn schema(&self) -> &LogSchema {
        &self.schema
    }

    pub fn alphabet(&self) -> &BTreeSet<String> {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn event_count(&self) -> usize {
        self.traces.iter().map(|t| t.events.len()).sum()
    }

    pub fn case_ids(&self) -> impl Iterator<Item = &str> {
        self.traces.iter().map(|t| t.case_id.as_str())
    }

    pub fn outcome_kind(&self) -> OutcomeKind {
        self.schema.outcome_kind
    }

    /// Sub-log restricted to the given trace positions (canonical indices).
    pub fn select(&self, indices: &[usize]) -> Result<EventLog, LogError> {
        let traces = indices.iter().map(|&i| self.traces[i].clone()).collect();
        EventLog::new(traces, self.schema.clone())
    }

    /// Typed outcome vector; fails if any case lacks an outcome.
    pub fn outcomes(&self) -> Result<Outcomes, LogError> {
        match self.schema.outcome_kind {
            OutcomeKind::Continuous => self
                .traces
                .iter()
                .map(|t| match &t.outcome {
                    Some(OutcomeValue::Continuous(v)) => Ok(*v),
                    _ => Err(LogError::MissingOutcome(t.case_id.clone())),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Outcomes::Continuous),
            OutcomeKind::Categorical => self
                .traces
                .iter()
                .map(|t| match &t.outcome {
                    Some(OutcomeValue::Categorical(v)) => Ok(v.clone()),
                    _ => Err(LogError::MissingOutcome(t.case_id.clone())),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Outcomes::Categorical),
        }
    }

    /// Replaces a continuous outcome with `classes` equal-frequency classes
    /// named `q0`, `q1`, ... (ascending value, ties broken by case id).
    pub fn with_equal_frequency_classes(&self, classes: usize) -> Result<EventLog, LogError> {
        if classes < 2 {
            return Err(LogError::Schema("binning needs at least 2 classes".into()));
        }
        let values = match self.outcomes()? {
            Outcomes::Continuous(v) => v,
            Outcomes::Categorical(_) => {
                return Err(LogError::Schema(
                    "equal-frequency binning applies to continuous outcomes".into(),
                ))
            }
        };
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let n = values.len();
        let mut traces = self.traces.clone();
        for (rank, &i) in order.iter().enumerate() {
            let class = rank * classes / n;
            traces[i].outcome = Some(OutcomeValue::Categorical(format!("q{class}")));
        }
        let mut schema = self.schema.clone();
        schema.outcome_kind = OutcomeKind::Categorical;
        EventLog::new(traces, schema)
    }
}

/// One value per trace in canonical order.
pub fn outcome_vector(log: &EventLog) -> Vec<Option<OutcomeValue>> {
    log.traces.iter().map(|t| t.outcome.clone()).collect()
}

/// Parses a timestamp with the given format, falling back to date-only input
/// under the same format and then to common ISO 8601 shapes.
pub fn parse_timestamp(value: &str, format: &str) -> Option<NaiveDateTime> {
    let value = value.trim();
    if let Ok(ts) = NaiveDateTime::parse_from_str(value, format) {
        return Some(ts);
    }
    if let Ok(d) = NaiveDate::parse_from_str(value, format) {
        return d.and_hms_opt(0, 0, 0);
    }
    for fallback in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(ts) = NaiveDateTime::parse_from_str(value, fallback) {
            return Some(ts);
        }
    }
    if let Ok(d) = NaiveDate::parse_from_str(value, "%Y-%m-%d") {
        return d.and_hms_opt(0, 0, 0);
    }
    DateTime::parse_from_rfc3339(value)
        .ok()
        .map(|dt| dt.naive_utc())
}

struct Columns {
    case: usize,
    activity: usize,
    timestamp: usize,
    end: Option<usize>,
    outcome: usize,
    attributes: Vec<(AttributeDecl, usize)>,
    extra: Vec<(String, usize)>,
}

fn resolve_columns(headers: &csv::StringRecord, schema: &LogSchema) -> Result<Columns, LogError> {
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| LogError::MissingColumn(name.to_string()))
    };
    let reserved = schema.reserved_columns();
    Ok(Columns {
        case: find(&schema.case_column)?,
        activity: find(&schema.activity_column)?,
        timestamp: find(&schema.timestamp_column)?,
        end: match &schema.end_timestamp_column {
            Some(c) => Some(find(c)?),
            None => None,
        },
        outcome: find(&schema.outcome_column)?,
        attributes: schema
            .case_attributes
            .iter()
            .map(|a| Ok((a.clone(), find(&a.name)?)))
            .collect::<Result<_, LogError>>()?,
        extra: headers
            .iter()
            .enumerate()
            .filter(|(_, h)| !reserved.contains(h))
            .map(|(i, h)| (h.to_string(), i))
            .collect(),
    })
}

struct CaseRows {
    events: Vec<Event>,
    attrs: Vec<CaseAttributes>,
    outcome: Option<OutcomeValue>,
}

pub fn load_event_log(path: &Path, schema: &LogSchema) -> Result<EventLog, LogError> {
    let file = std::fs::File::open(path)?;
    read_event_log(file, schema).map(|(log, _)| log)
}

/// Reads a CSV event log, also returning load warnings.
pub fn read_event_log<R: Read>(
    reader: R,
    schema: &LogSchema,
) -> Result<(EventLog, Vec<LoadWarning>), LogError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(u8::try_from(schema.delimiter).map_err(|_| {
            LogError::Schema(format!(
                "delimiter `{}` is not a single byte",
                schema.delimiter
            ))
        })?)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let cols = resolve_columns(&headers, schema)?;

    let mut cases: BTreeMap<String, CaseRows> = BTreeMap::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let cell = |idx: usize| record.get(idx).unwrap_or("").trim();

        let activity = cell(cols.activity);
        if activity.is_empty() {
            return Err(LogError::EmptyActivity(row));
        }
        let ts_raw = cell(cols.timestamp);
        let timestamp = parse_timestamp(ts_raw, &schema.timestamp_format).ok_or_else(|| {
            LogError::UnparseableTimestamp {
                row,
                value: ts_raw.to_string(),
            }
        })?;
        let end = match cols.end {
            Some(idx) if !cell(idx).is_empty() => Some(
                parse_timestamp(cell(idx), &schema.timestamp_format).ok_or_else(|| {
                    LogError::UnparseableTimestamp {
                        row,
                        value: cell(idx).to_string(),
                    }
                })?,
            ),
            _ => None,
        };

        let outcome_raw = cell(cols.outcome);
        let outcome = if outcome_raw.is_empty() {
            None
        } else {
            Some(match schema.outcome_kind {
                OutcomeKind::Continuous => {
                    OutcomeValue::Continuous(outcome_raw.parse().map_err(|_| {
                        LogError::UnparseableNumber {
                            row,
                            column: schema.outcome_column.clone(),
                            value: outcome_raw.to_string(),
                        }
                    })?)
                }
                OutcomeKind::Categorical => OutcomeValue::Categorical(outcome_raw.to_string()),
            })
        };

        let mut attrs = CaseAttributes::default();
        for (decl, idx) in &cols.attributes {
            let raw = cell(*idx);
            match decl.kind {
                AttributeKind::Numeric => {
                    let v = if raw.is_empty() {
                        None
                    } else {
                        Some(
                            raw.parse::<f64>()
                                .map_err(|_| LogError::UnparseableNumber {
                                    row,
                                    column: decl.name.clone(),
                                    value: raw.to_string(),
                                })?,
                        )
                    };
                    attrs.numeric.insert(decl.name.clone(), v);
                }
                AttributeKind::Categorical => {
                    let v = if raw.is_empty() {
                        MISSING_CATEGORY
                    } else {
                        raw
                    };
                    attrs.categorical.insert(decl.name.clone(), v.to_string());
                }
            }
        }

        let case_id = cell(cols.case).to_string();
        let event = Event {
            activity: activity.to_string(),
            case_id: case_id.clone(),
            timestamp,
            end,
            attrs: cols
                .extra
                .iter()
                .map(|(name, idx)| (name.clone(), Scalar::parse(cell(*idx))))
                .collect(),
        };

        let entry = cases.entry(case_id.clone()).or_insert_with(|| CaseRows {
            events: Vec::new(),
            attrs: Vec::new(),
            outcome: None,
        });
        match (&entry.outcome, outcome) {
            (_, None) => {}
            (None, Some(o)) => entry.outcome = Some(o),
            (Some(prev), Some(o)) if *prev != o => {
                return Err(LogError::InconsistentOutcome(case_id));
            }
            _ => {}
        }
        entry.events.push(event);
        entry.attrs.push(attrs);
    }

    if cases.is_empty() {
        return Err(LogError::EmptyLog);
    }

    let mut warnings = Vec::new();
    let mut traces = Vec::with_capacity(cases.len());
    for (case_id, rows) in cases {
        // stable sort keeps file order among equal timestamps
        let mut order: Vec<usize> = (0..rows.events.len()).collect();
        order.sort_by_key(|&i| rows.events[i].timestamp);
        let first = order[0];
        let case_attrs = rows.attrs[first].clone();
        if rows.attrs.iter().any(|a| *a != case_attrs) {
            warnings.push(LoadWarning {
                case_id: case_id.clone(),
                message: "case attributes differ across rows; values of the first event are used"
                    .into(),
            });
        }
        let mut events: Vec<Option<Event>> = rows.events.into_iter().map(Some).collect();
        let events = order.iter().map(|&i| events[i].take().unwrap()).collect();
        traces.push(Trace {
            case_id,
            events,
            case_attrs,
            outcome: rows.outcome,
        });
    }
    Ok((EventLog::new(traces, schema.clone())?, warnings))
}

/// Writes the log in the same CSV layout the loader reads.
pub fn write_event_log<W: Write>(log: &EventLog, writer: W) -> Result<(), LogError> {
    let schema = &log.schema;
    let mut wtr = csv::WriterBuilder::new()
        .delimiter(u8::try_from(schema.delimiter).map_err(|_| {
            LogError::Schema(format!(
                "delimiter `{}` is not a single byte",
                schema.delimiter
            ))
        })?)
        .from_writer(writer);

    let extra: BTreeSet<&str> = log
        .traces
        .iter()
        .flat_map(|t| t.events.iter())
        .flat_map(|e| e.attrs.keys().map(String::as_str))
        .collect();

    let mut header = vec![
        schema.case_column.clone(),
        schema.activity_column.clone(),
        schema.timestamp_column.clone(),
    ];
    if let Some(end) = &schema.end_timestamp_column {
        header.push(end.clone());
    }
    header.push(schema.outcome_column.clone());
    header.extend(schema.case_attributes.iter().map(|a| a.name.clone()));
    header.extend(extra.iter().map(|s| s.to_string()));
    wtr.write_record(&header)?;

    for trace in &log.traces {
        for e in &trace.events {
            let mut row = vec![
                trace.case_id.clone(),
                e.activity.clone(),
                e.timestamp.format(&schema.timestamp_format).to_string(),
            ];
            if schema.end_timestamp_column.is_some() {
                row.push(
                    e.end
                        .map(|t| t.format(&schema.timestamp_format).to_string())
                        .unwrap_or_default(),
                );
            }
            row.push(
                trace
                    .outcome
                    .as_ref()
                    .map(OutcomeValue::render)
                    .unwrap_or_default(),
            );
            for decl in &schema.case_attributes {
                let cell = match decl.kind {
                    AttributeKind::Numeric => trace
                        .case_attrs
                        .numeric
                        .get(&decl.name)
                        .copied()
                        .flatten()
                        .map(|v| v.to_string())
                        .unwrap_or_default(),
                    AttributeKind::Categorical => {
                        match trace.case_attrs.categorical.get(&decl.name) {
                            Some(v) if v != MISSING_CATEGORY => v.clone(),
                            _ => String::new(),
                        }
                    }
                };
                row.push(cell);
            }
            for name in &extra {
                row.push(e.attrs.get(*name).map(Scalar::render).unwrap_or_default());
            }
            wtr.write_record(&row)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeWarning {
    pub case_id: String,
    pub attribute: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub cases: usize,
    pub events: usize,
    pub activities: usize,
    pub missing_outcome: Vec<String>,
    pub missing_attributes: Vec<AttributeWarning>,
    pub empty_traces: Vec<String>,
}

impl ValidationReport {
    /// True when no issue was found; the summary counts are not issues.
    pub fn is_clean(&self) -> bool {
        self.missing_outcome.is_empty()
            && self.missing_attributes.is_empty()
            && self.empty_traces.is_empty()
    }
}

pub fn validate_log(log: &EventLog) -> ValidationReport {
    let mut report = ValidationReport {
        cases: log.len(),
        events: log.event_count(),
        activities: log.alphabet.len(),
        ..Default::default()
    };
    for trace in &log.traces {
        if trace.events.is_empty() {
            report.empty_traces.push(trace.case_id.clone());
        }
        if trace.outcome.is_none() {
            report.missing_outcome.push(trace.case_id.clone());
        }
        for decl in &log.schema.case_attributes {
            let missing = match decl.kind {
                AttributeKind::Numeric => {
                    !matches!(trace.case_attrs.numeric.get(&decl.name), Some(Some(_)))
                }
                AttributeKind::Categorical => match trace.case_attrs.categorical.get(&decl.name) {
                    Some(v) => v == MISSING_CATEGORY,
                    None => true,
                },
            };
            if missing {
                report.missing_attributes.push(AttributeWarning {
                    case_id: trace.case_id.clone(),
                    attribute: decl.name.clone(),
                });
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> LogSchema {
        LogSchema {
            outcome_kind: OutcomeKind::Continuous,
            case_attributes: vec![
                AttributeDecl {
                    name: "age".into(),
                    kind: AttributeKind::Numeric,
                },
                AttributeDecl {
                    name: "sex".into(),
                    kind: AttributeKind::Categorical,
                },
            ],
            ..Default::default()
        }
    }

    fn load(csv: &str) -> Result<EventLog, LogError> {
        read_event_log(csv.as_bytes(), &schema()).map(|(l, _)| l)
    }

    #[test]
    fn groups_rows_into_traces() {
        let log = load(
            "case_id,activity,timestamp,outcome,age,sex\n\
             c2,a,2020-01-01T00:00:00,5,40,F\n\
             c1,a,2020-01-01T00:00:00,3,50,M\n\
             c1,b,2020-01-02T00:00:00,3,50,M\n\
             c2,b,2020-01-03T00:00:00,5,40,F\n",
        )
        .unwrap();
        assert_eq!(log.len(), 2);
        assert!(log.traces().iter().all(|t| t.events.len() == 2));
        assert_eq!(log.case_ids().collect::<Vec<_>>(), vec!["c1", "c2"]);
    }

    #[test]
    fn sorts_shuffled_events_by_time() {
        let log = load(
            "case_id,activity,timestamp,outcome,age,sex\n\
             c1,c,2020-01-03T00:00:00,1,1,F\n\
             c1,a,2020-01-01T00:00:00,1,1,F\n\
             c1,b,2020-01-02T00:00:00,1,1,F\n",
        )
        .unwrap();
        let acts: Vec<_> = log.traces()[0]
            .events
            .iter()
            .map(|e| e.activity.as_str())
            .collect();
        assert_eq!(acts, ["a", "b", "c"]);
    }

    #[test]
    fn ties_keep_file_order() {
        let log = load(
            "case_id,activity,timestamp,outcome,age,sex\n\
             c1,z,2020-01-01T00:00:00,1,1,F\n\
             c1,a,2020-01-01T00:00:00,1,1,F\n",
        )
        .unwrap();
        assert_eq!(log.traces()[0].events[0].activity, "z");
    }

    #[test]
    fn inconsistent_outcome_is_rejected() {
        let err = load(
            "case_id,activity,timestamp,outcome,age,sex\n\
             c1,a,2020-01-01T00:00:00,3,1,F\n\
             c1,b,2020-01-02T00:00:00,5,1,F\n",
        )
        .unwrap_err();
        assert!(matches!(err, LogError::InconsistentOutcome(c) if c == "c1"));
    }

    #[test]
    fn missing_column_and_bad_timestamp() {
        let err =
            load("case_id,activity,timestamp,age,sex\nc1,a,2020-01-01T00:00:00,1,F\n").unwrap_err();
        assert!(matches!(err, LogError::MissingColumn(c) if c == "outcome"));
        let err = load(
            "case_id,activity,timestamp,outcome,age,sex\n\
             c1,a,2020-01-01T00:00:00,1,1,F\n\
             c1,a,yesterday,1,1,F\n",
        )
        .unwrap_err();
        assert!(matches!(err, LogError::UnparseableTimestamp { row: 2, .. }));
    }

    #[test]
    fn empty_log_is_an_error() {
        let err = load("case_id,activity,timestamp,outcome,age,sex\n").unwrap_err();
        assert!(matches!(err, LogError::EmptyLog));
    }

    #[test]
    fn outcome_vector_follows_case_order() {
        let mut s = schema();
        s.outcome_kind = OutcomeKind::Categorical;
        let (log, _) = read_event_log(
            "case_id,activity,timestamp,outcome,age,sex\n\
             c3,a,2020-01-01T00:00:00,good,1,F\n\
             c1,a,2020-01-01T00:00:00,bad,1,F\n\
             c2,a,2020-01-01T00:00:00,good,1,F\n"
                .as_bytes(),
            &s,
        )
        .unwrap();
        let ov: Vec<_> = outcome_vector(&log)
            .into_iter()
            .map(Option::unwrap)
            .collect();
        assert_eq!(
            ov,
            vec![
                OutcomeValue::Categorical("bad".into()),
                OutcomeValue::Categorical("good".into()),
                OutcomeValue::Categorical("good".into()),
            ]
        );
    }

    #[test]
    fn validation_reports_missing_attribute() {
        let log = load(
            "case_id,activity,timestamp,outcome,age,sex\n\
             c1,a,2020-01-01T00:00:00,1,,F\n\
             c2,a,2020-01-01T00:00:00,1,3,M\n",
        )
        .unwrap();
        let report = validate_log(&log);
        assert_eq!(
            report.missing_attributes,
            vec![AttributeWarning {
                case_id: "c1".into(),
                attribute: "age".into()
            }]
        );
        assert!(report.missing_outcome.is_empty());
        assert_eq!((report.cases, report.events, report.activities), (2, 2, 1));
    }

    #[test]
    fn clean_log_validates_clean() {
        let log =
            load("case_id,activity,timestamp,outcome,age,sex\nc1,a,2020-01-01T00:00:00,1,2,F\n")
                .unwrap();
        assert!(validate_log(&log).is_clean());
    }

    #[test]
    fn later_row_attribute_change_warns() {
        let (_, warnings) = read_event_log(
            "case_id,activity,timestamp,outcome,age,sex\n\
             c1,a,2020-01-01T00:00:00,1,2,F\n\
             c1,b,2020-01-02T00:00:00,1,3,F\n"
                .as_bytes(),
            &schema(),
        )
        .unwrap();
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn equal_frequency_binning_balances_classes() {
        let mut csv = String::from("case_id,activity,timestamp,outcome,age,sex\n");
        for i in 0..10 {
            csv.push_str(&format!(
                "c{i:02},a,2020-01-01T00:00:00,{},1,F\n",
                (i * 7) % 10
            ));
        }
        let log = load(&csv).unwrap().with_equal_frequency_classes(3).unwrap();
        let Outcomes::Categorical(labels) = log.outcomes().unwrap() else {
            panic!()
        };
        let mut counts = BTreeMap::new();
        for l in labels {
            *counts.entry(l).or_insert(0) += 1;
        }
        let max = counts.values().max().unwrap();
        let min = counts.values().min().unwrap();
        assert!(max - min <= 1);
    }
}
