//! Scoring predictions against a dataset, built-in baseline predictors, and
//! the accuracy/Δ report.
//!
//! The `base` row scores the test groups only. Every other row scores all
//! groups, and its Δ is measured against base accuracy over all groups
//! (train and test), which the report carries as `delta_reference`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::genset::{self, Dataset, GenError, QuestionRecord, Split, VariantKind};
use crate::inference::{self, InferenceError, Label};

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("missing predictions for {count} scored questions (first: {first})")]
    MissingPrediction { count: usize, first: RecordKey },
    #[error("duplicate prediction for {0}")]
    DuplicatePrediction(RecordKey),
    #[error("prediction for unknown question {0}")]
    UnknownId(RecordKey),
    #[error("unknown baseline `{0}` (expected oracle, chain-template, constant-true, constant-false, random)")]
    UnknownBaseline(String),
    #[error("no base record for group {group_id} question {question_index}")]
    MissingBaseRecord {
        group_id: u32,
        question_index: usize,
    },
    #[error(transparent)]
    Dataset(#[from] GenError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

/// Identifies one scored question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RecordKey {
    pub group_id: u32,
    pub variant: VariantKind,
    pub question_index: usize,
}

impl RecordKey {
    pub fn of(record: &QuestionRecord) -> Self {
        Self {
            group_id: record.group_id,
            variant: record.variant,
            question_index: record.question_index,
        }
    }
}

/// Renders as `group/variant/question`, the id used by the remote protocol.
impl fmt::Display for RecordKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}/{}",
            self.group_id, self.variant, self.question_index
        )
    }
}

impl FromStr for RecordKey {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split('/').collect();
        let [g, v, q] = parts[..] else {
            return Err(format!("record id `{s}` is not group/variant/question"));
        };
        Ok(Self {
            group_id: g.parse().map_err(|_| format!("bad group id in `{s}`"))?,
            variant: v.parse()?,
            question_index: q
                .parse()
                .map_err(|_| format!("bad question index in `{s}`"))?,
        })
    }
}

/// One predicted label, as stored in a prediction file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub group_id: u32,
    pub variant: VariantKind,
    pub question_index: usize,
    pub label: Label,
}

impl PredictionRecord {
    pub fn for_record(record: &QuestionRecord, label: Label) -> Self {
        Self {
            group_id: record.group_id,
            variant: record.variant,
            question_index: record.question_index,
            label,
        }
    }

    pub fn key(&self) -> RecordKey {
        RecordKey {
            group_id: self.group_id,
            variant: self.variant,
            question_index: self.question_index,
        }
    }
}

pub fn load_predictions(path: &Path) -> Result<Vec<PredictionRecord>, ScoreError> {
    let bytes = fs::read(path).map_err(|e| ScoreError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(genset::parse_jsonl(&bytes, path)?)
}

pub fn write_predictions(path: &Path, predictions: &[PredictionRecord]) -> Result<(), ScoreError> {
    fs::write(path, genset::jsonl_bytes(predictions)).map_err(|e| ScoreError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Correct and total counts with the derived accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub correct: usize,
    pub total: usize,
    /// `correct / total`, rounded to 4 decimals.
    pub accuracy: f64,
}

impl Tally {
    fn new(correct: usize, total: usize) -> Self {
        Self {
            correct,
            total,
            accuracy: ratio(correct, total),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub split: VariantKind,
    #[serde(flatten)]
    pub tally: Tally,
    /// Accuracy minus the reference accuracy, rounded to 4 decimals. Always
    /// exactly 0 on the `base` row.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub predictor: String,
    pub manifest_hash: String,
    pub rows: Vec<ReportRow>,
    /// Base accuracy over every group; the baseline for variant Δ.
    pub delta_reference: Tally,
    /// Questions without a usable prediction, scored as incorrect.
    pub unanswered: Vec<String>,
    /// Set when any question was scored without a prediction.
    pub flagged: bool,
}

impl EvalReport {
    pub fn row(&self, split: VariantKind) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.split == split)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

pub fn round4(x: f64) -> f64 {
    let r = (x * 10_000.0).round() / 10_000.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// `num / den` rounded to 4 decimals, half away from zero, without an
/// intermediate float.
fn rational_round4(num: i128, den: i128) -> f64 {
    if den == 0 {
        return 0.0;
    }
    let scaled = num * 10_000;
    let q = (scaled.abs() * 2 + den.abs()) / (den.abs() * 2);
    let signed = if (scaled < 0) != (den < 0) { -q } else { q };
    round4(signed as f64 / 10_000.0)
}

fn ratio(n: usize, d: usize) -> f64 {
    rational_round4(n as i128, d as i128)
}

/// `a/b - c/d` rounded to 4 decimals from the exact rational.
fn exact_difference(a: usize, b: usize, c: usize, d: usize) -> f64 {
    if b == 0 || d == 0 {
        return 0.0;
    }
    rational_round4(
        a as i128 * d as i128 - c as i128 * b as i128,
        b as i128 * d as i128,
    )
}

/// How questions without a prediction are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Coverage {
    /// Missing predictions are an error.
    #[default]
    Strict,
    /// Missing predictions count as incorrect and flag the report.
    Permissive,
}

/// Scores predictions that must cover every record exactly once.
pub fn score(
    dataset: &Dataset,
    predictor: &str,
    predictions: &[PredictionRecord],
) -> Result<EvalReport, ScoreError> {
    score_with(dataset, predictor, predictions, Coverage::Strict)
}

pub fn score_with(
    dataset: &Dataset,
    predictor: &str,
    predictions: &[PredictionRecord],
    coverage: Coverage,
) -> Result<EvalReport, ScoreError> {
    let gold: BTreeMap<RecordKey, (Split, Label)> = dataset
        .records()
        .map(|r| (RecordKey::of(r), (r.split, r.label)))
        .collect();
    let mut predicted: BTreeMap<RecordKey, Label> = BTreeMap::new();
    for p in predictions {
        let key = p.key();
        if !gold.contains_key(&key) {
            return Err(ScoreError::UnknownId(key));
        }
        if predicted.insert(key, p.label).is_some() {
            return Err(ScoreError::DuplicatePrediction(key));
        }
    }
    let missing: Vec<RecordKey> = gold
        .keys()
        .filter(|k| !predicted.contains_key(k))
        .copied()
        .collect();
    if coverage == Coverage::Strict {
        if let Some(&first) = missing.first() {
            return Err(ScoreError::MissingPrediction {
                count: missing.len(),
                first,
            });
        }
    }

    let mut counts: BTreeMap<VariantKind, (usize, usize)> = BTreeMap::new();
    let mut reference = (0, 0);
    for (key, (split, label)) in &gold {
        let hit = usize::from(predicted.get(key) == Some(label));
        if key.variant == VariantKind::Base {
            reference.0 += hit;
            reference.1 += 1;
            if *split == Split::Train {
                continue;
            }
        }
        let c = counts.entry(key.variant).or_default();
        c.0 += hit;
        c.1 += 1;
    }

    let rows = VariantKind::ALL
        .into_iter()
        .filter_map(|kind| {
            let &(correct, total) = counts.get(&kind).filter(|c| c.1 > 0)?;
            let delta = if kind == VariantKind::Base {
                0.0
            } else {
                exact_difference(correct, total, reference.0, reference.1)
            };
            Some(ReportRow {
                split: kind,
                tally: Tally::new(correct, total),
                delta,
            })
        })
        .collect();
    Ok(EvalReport {
        predictor: predictor.to_string(),
        manifest_hash: dataset.manifest_hash(),
        rows,
        delta_reference: Tally::new(reference.0, reference.1),
        unanswered: missing.iter().map(ToString::to_string).collect(),
        flagged: !missing.is_empty(),
    })
}

fn format_delta(d: f64) -> String {
    if d == 0.0 {
        "0.0000".into()
    } else if d > 0.0 {
        format!("+{d:.4}")
    } else {
        format!("{d:.4}")
    }
}

/// Fixed-width text table, one row per split in variant order.
pub fn render_table(report: &EvalReport) -> String {
    let width = VariantKind::ALL
        .iter()
        .map(|k| k.name().len())
        .max()
        .unwrap_or(0);
    let mut out = format!(
        "predictor: {}\nmanifest:  {}\n",
        report.predictor, report.manifest_hash
    );
    out.push_str(&format!(
        "{:<width$}  {:>6}  {:>7}  {:>9}\n",
        "split", "acc", "delta", "n"
    ));
    for row in &report.rows {
        out.push_str(&format!(
            "{:<width$}  {:.4}  {:>7}  {:>9}\n",
            row.split.name(),
            row.tally.accuracy,
            format_delta(row.delta),
            format!("{}/{}", row.tally.correct, row.tally.total),
        ));
    }
    let r = &report.delta_reference;
    out.push_str(&format!(
        "delta reference: base over all groups {:.4} ({}/{})\n",
        r.accuracy, r.correct, r.total
    ));
    if report.flagged {
        out.push_str(&format!(
            "FLAGGED: {} questions had no usable prediction and were scored incorrect\n",
            report.unanswered.len()
        ));
    }
    out
}

/// Built-in predictors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Baseline {
    /// Re-derives every answer from the record's own text.
    Oracle,
    /// Repeats the base group's answers whatever the perturbation.
    ChainTemplate,
    ConstantTrue,
    ConstantFalse,
    Random,
}

impl Baseline {
    pub const ALL: [Baseline; 5] = [
        Baseline::Oracle,
        Baseline::ChainTemplate,
        Baseline::ConstantTrue,
        Baseline::ConstantFalse,
        Baseline::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Baseline::Oracle => "oracle",
            Baseline::ChainTemplate => "chain-template",
            Baseline::ConstantTrue => "constant-true",
            Baseline::ConstantFalse => "constant-false",
            Baseline::Random => "random",
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Baseline {
    type Err = ScoreError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Baseline::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| ScoreError::UnknownBaseline(s.to_string()))
    }
}

/// Answers one record from its rendered text alone.
pub fn oracle_label(record: &QuestionRecord) -> Result<Label, ScoreError> {
    let (theory, question) = record.theory()?;
    Ok(inference::answer(&theory, &question)?)
}

/// Predictions for every record of the dataset. `seed` only affects `Random`.
pub fn run_baseline(
    dataset: &Dataset,
    baseline: Baseline,
    seed: u64,
) -> Result<Vec<PredictionRecord>, ScoreError> {
    let records: Vec<&QuestionRecord> = dataset.records().collect();
    match baseline {
        Baseline::Oracle => {
            use rayon::prelude::*;
            records
                .par_iter()
                .map(|r| Ok(PredictionRecord::for_record(r, oracle_label(r)?)))
                .collect()
        }
        Baseline::ChainTemplate => {
            let base: BTreeMap<(u32, usize), Label> = records
                .iter()
                .filter(|r| r.variant == VariantKind::Base)
                .map(|r| ((r.group_id, r.question_index), r.label))
                .collect();
            records
                .iter()
                .map(|r| {
                    let label = base.get(&(r.group_id, r.question_index)).copied().ok_or(
                        ScoreError::MissingBaseRecord {
                            group_id: r.group_id,
                            question_index: r.question_index,
                        },
                    )?;
                    Ok(PredictionRecord::for_record(r, label))
                })
                .collect()
        }
        Baseline::ConstantTrue => Ok(records
            .iter()
            .map(|r| PredictionRecord::for_record(r, Label::T))
            .collect()),
        Baseline::ConstantFalse => Ok(records
            .iter()
            .map(|r| PredictionRecord::for_record(r, Label::F))
            .collect()),
        Baseline::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(records
                .iter()
                .map(|r| PredictionRecord::for_record(r, Label::from_bool(rng.random())))
                .collect())
        }
    }
}

/// Every scored key of the dataset, sorted.
pub fn scored_keys(dataset: &Dataset) -> BTreeSet<RecordKey> {
    dataset.records().map(RecordKey::of).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genset::{generate, DatasetConfig};

    fn small() -> Dataset {
        generate(&DatasetConfig {
            groups: 5,
            train: 3,
            seed: 42,
        })
        .unwrap()
    }

    fn row(r: &EvalReport, k: VariantKind) -> (f64, f64) {
        let row = r.row(k).unwrap();
        (row.tally.accuracy, row.delta)
    }

    #[test]
    fn oracle_scores_perfectly() {
        let d = small();
        let preds = run_baseline(&d, Baseline::Oracle, 0).unwrap();
        let r = score(&d, "oracle", &preds).unwrap();
        assert_eq!(r.rows.len(), 11);
        for row in &r.rows {
            assert_eq!((row.tally.accuracy, row.delta), (1.0, 0.0), "{}", row.split);
        }
        assert_eq!(r.row(VariantKind::Base).unwrap().tally.total, 8);
        assert_eq!(r.row(VariantKind::Multi).unwrap().tally.total, 20);
        assert!(render_table(&r).lines().any(|l| l
            .split_whitespace()
            .take(3)
            .eq(["variant3", "1.0000", "0.0000"])));
    }

    #[test]
    fn chain_template_signature() {
        let d = small();
        let r = score(
            &d,
            "chain-template",
            &run_baseline(&d, Baseline::ChainTemplate, 0).unwrap(),
        )
        .unwrap();
        assert_eq!(row(&r, VariantKind::Base), (1.0, 0.0));
        assert_eq!(row(&r, VariantKind::Variant1), (1.0, 0.0));
        assert_eq!(row(&r, VariantKind::Variant2), (0.25, -0.75));
        assert_eq!(row(&r, VariantKind::Variant3), (0.0, -1.0));
        assert!(render_table(&r).lines().any(|l| l
            .split_whitespace()
            .take(3)
            .eq(["variant3", "0.0000", "-1.0000"])));
    }

    #[test]
    fn constants_and_inversion() {
        let d = small();
        let f = score(
            &d,
            "f",
            &run_baseline(&d, Baseline::ConstantFalse, 0).unwrap(),
        )
        .unwrap();
        assert_eq!(row(&f, VariantKind::Variant3).0, 1.0);
        let t = score(
            &d,
            "t",
            &run_baseline(&d, Baseline::ConstantTrue, 0).unwrap(),
        )
        .unwrap();
        assert_eq!(row(&t, VariantKind::Variant3).0, 0.0);
        let inverted: Vec<_> = run_baseline(&d, Baseline::Oracle, 0)
            .unwrap()
            .into_iter()
            .map(|p| PredictionRecord {
                label: p.label.flipped(),
                ..p
            })
            .collect();
        let inv = score(&d, "inverted", &inverted).unwrap();
        assert!(inv.rows.iter().all(|r| r.tally.accuracy == 0.0));
        assert_eq!(inv.row(VariantKind::Base).unwrap().delta, 0.0);
    }

    #[test]
    fn coverage_errors() {
        let d = small();
        let mut preds = run_baseline(&d, Baseline::Oracle, 0).unwrap();
        let extra = preds[0];
        preds.push(extra);
        assert!(matches!(
            score(&d, "x", &preds),
            Err(ScoreError::DuplicatePrediction(_))
        ));
        preds.pop();
        preds.pop();
        assert!(matches!(
            score(&d, "x", &preds),
            Err(ScoreError::MissingPrediction { count: 1, .. })
        ));
        let permissive = score_with(&d, "x", &preds, Coverage::Permissive).unwrap();
        assert!(permissive.flagged);
        assert_eq!(permissive.unanswered.len(), 1);
        preds.push(PredictionRecord {
            group_id: 999,
            ..extra
        });
        assert!(matches!(
            score(&d, "x", &preds),
            Err(ScoreError::UnknownId(_))
        ));
        assert!(matches!(
            "gpt".parse::<Baseline>(),
            Err(ScoreError::UnknownBaseline(_))
        ));
    }

    #[test]
    fn base_only_dataset_has_single_row() {
        let mut d = small();
        d.files.retain(|name, _| name.starts_with("base_"));
        let r = score(
            &d,
            "oracle",
            &run_baseline(&d, Baseline::Oracle, 0).unwrap(),
        )
        .unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].split, VariantKind::Base);
    }

    #[test]
    fn record_key_round_trips() {
        let k = RecordKey {
            group_id: 12,
            variant: VariantKind::DeMorgan,
            question_index: 3,
        };
        assert_eq!(k.to_string(), "12/variant4-de-morgan/3");
        assert_eq!(k.to_string().parse::<RecordKey>().unwrap(), k);
        assert!("1/base".parse::<RecordKey>().is_err());
    }

    #[test]
    fn report_json_round_trips() {
        let d = small();
        let r = score(
            &d,
            "random",
            &run_baseline(&d, Baseline::Random, 9).unwrap(),
        )
        .unwrap();
        assert_eq!(EvalReport::from_json(&r.to_json()).unwrap(), r);
        assert_eq!(format_delta(-0.0), "0.0000");
        assert_eq!(format_delta(0.25), "+0.2500");
        assert_eq!(exact_difference(21, 160, 0, 1), 0.1313);
        assert_eq!(exact_difference(0, 1, 21, 160), -0.1313);
        assert_eq!(ratio(1, 3), 0.3333);
        assert_eq!(ratio(2, 3), 0.6667);
    }
}
