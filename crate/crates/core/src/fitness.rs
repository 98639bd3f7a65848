//! Pipeline scoring: weighted F1, k-fold evaluation and the two fitness
//! regimes.
//!
//! In the *static* regime a pipeline is scored once with a single k-fold plan
//! and keeps that score. In the *dynamic* regime it is re-scored every
//! generation under a fresh fold plan and its fitness is the mean of every
//! score it has collected since birth, which amounts to repeated k-fold
//! cross-validation spread over the individual's lifetime.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{fold_views, stratified_kfold, DataError, Dataset, FoldPlan};
use crate::pipeline::{execute, Individual, PipelineError, PipelineTree};
use crate::seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitnessError {
    #[error("label vectors differ in length ({truth} vs {pred})")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("cannot score empty label vectors")]
    Empty,
    #[error("label {label} outside a class set of size {classes}")]
    UnknownLabel { label: usize, classes: usize },
    #[error("fold plan: {0}")]
    Folds(String),
    #[error("pipeline failed on fold {fold}: {error}")]
    Pipeline { fold: usize, error: PipelineError },
    #[error("ledger must be contiguous: expected generation {expected}, got {got}")]
    LedgerGap { expected: usize, got: usize },
}

impl From<DataError> for FitnessError {
    fn from(e: DataError) -> Self {
        FitnessError::Folds(e.to_string())
    }
}

/// Which fitness regime drives selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitnessMode {
    /// Lifetime mean of per-generation k-fold scores.
    Dynamic,
    /// One k-fold score under a fixed seed.
    Static,
}

impl fmt::Display for FitnessMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitnessMode::Dynamic => "dynamic",
            FitnessMode::Static => "static",
        })
    }
}

impl FromStr for FitnessMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "dynamic" => Ok(FitnessMode::Dynamic),
            "static" => Ok(FitnessMode::Static),
            other => Err(format!("unknown mode '{other}' (expected dynamic or static)")),
        }
    }
}

/// Support-weighted F1 over `n_classes` classes, scaled to `[0, 100]`.
///
/// A class whose precision or recall is undefined, or whose precision and
/// recall are both zero, contributes an F1 of 0.
pub fn weighted_f1(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<f64, FitnessError> {
    if y_true.len() != y_pred.len() {
        return Err(FitnessError::LengthMismatch {
            truth: y_true.len(),
            pred: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(FitnessError::Empty);
    }
    let mut tp = vec![0usize; n_classes];
    let mut predicted = vec![0usize; n_classes];
    let mut support = vec![0usize; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        for l in [t, p] {
            if l >= n_classes {
                return Err(FitnessError::UnknownLabel {
                    label: l,
                    classes: n_classes,
                });
            }
        }
        support[t] += 1;
        predicted[p] += 1;
        if t == p {
            tp[t] += 1;
        }
    }
    let mut total = 0.0;
    for c in 0..n_classes {
        if support[c] == 0 || predicted[c] == 0 || tp[c] == 0 {
            continue;
        }
        let precision = tp[c] as f64 / predicted[c] as f64;
        let recall = tp[c] as f64 / support[c] as f64;
        let f1 = 2.0 * precision * recall / (precision + recall);
        total += support[c] as f64 * f1;
    }
    Ok(100.0 * total / y_true.len() as f64)
}

/// Score of one fold of a plan: fit on the other folds, predict this one.
pub fn fold_score(t: &PipelineTree, train: &Dataset, plan: &FoldPlan, fold: usize) -> Result<f64, FitnessError> {
    let (inner_train, inner_test) = fold_views(train, plan, fold)?;
    let component_seed = seed::derive(plan.seed(), &[fold as u64]);
    let preds = execute(t, &inner_train, &inner_test, component_seed)
        .map_err(|error| FitnessError::Pipeline { fold, error })?;
    weighted_f1(inner_test.labels(), &preds, train.classes().len())
}

/// Unweighted mean of the per-fold weighted F1 under a stratified plan built
/// from `fold_seed`. Fails if the pipeline fails on any fold.
pub fn kfold_score(t: &PipelineTree, train: &Dataset, k: usize, fold_seed: u64) -> Result<f64, FitnessError> {
    let plan = stratified_kfold(train, k, fold_seed)?;
    let mut total = 0.0;
    for fold in 0..k {
        total += fold_score(t, train, &plan, fold)?;
    }
    Ok(total / k as f64)
}

/// Per-generation score history of an individual.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreLedger {
    entries: Vec<(usize, f64)>,
    failed: bool,
}

impl ScoreLedger {
    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn failed(&self) -> bool {
        self.failed
    }

    pub fn last_generation(&self) -> Option<usize> {
        self.entries.last().map(|e| e.0)
    }

    /// Arithmetic mean of every recorded score.
    pub fn mean(&self) -> Option<f64> {
        if self.entries.is_empty() {
            None
        } else {
            Some(self.entries.iter().map(|e| e.1).sum::<f64>() / self.entries.len() as f64)
        }
    }

    fn check_next(&self, birth: usize, generation: usize) -> Result<(), FitnessError> {
        let expected = self.last_generation().map_or(birth, |g| g + 1);
        if generation != expected {
            return Err(FitnessError::LedgerGap {
                expected,
                got: generation,
            });
        }
        Ok(())
    }
}

/// The two objectives: performance (maximized) and complexity (minimized).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fitness {
    pub objective1: f64,
    pub objective2: usize,
}

impl Fitness {
    /// Fitness assigned to pipelines that failed to evaluate.
    pub fn failure(max_depth: usize) -> Self {
        Self {
            objective1: 0.0,
            objective2: max_depth + 1,
        }
    }

    /// At least as good in both objectives and strictly better in one.
    pub fn dominates(&self, other: &Fitness) -> bool {
        self.objective1 >= other.objective1
            && self.objective2 <= other.objective2
            && (self.objective1 > other.objective1 || self.objective2 < other.objective2)
    }
}

/// Appends a generation's score and returns the updated lifetime fitness.
pub fn record_generation(ind: &mut Individual, score: f64, generation: usize) -> Result<f64, FitnessError> {
    ind.ledger.check_next(ind.birth_generation(), generation)?;
    ind.ledger.entries.push((generation, score));
    Ok(ind.ledger.mean().expect("non-empty ledger"))
}

/// Records a failed evaluation: a zero entry keeps the ledger contiguous and
/// the failure flag pins the individual to [`Fitness::failure`].
pub fn record_failure(ind: &mut Individual, generation: usize) -> Result<(), FitnessError> {
    ind.ledger.check_next(ind.birth_generation(), generation)?;
    ind.ledger.entries.push((generation, 0.0));
    ind.ledger.failed = true;
    Ok(())
}

/// Current fitness of an evaluated individual; `None` before the first score.
pub fn current_fitness(ind: &Individual, max_depth: usize) -> Option<Fitness> {
    if ind.ledger.failed {
        return Some(Fitness::failure(max_depth));
    }
    ind.ledger.mean().map(|objective1| Fitness {
        objective1,
        objective2: ind.tree.complexity(),
    })
}

/// Single k-fold fitness under a fixed fold seed.
pub fn static_fitness(t: &PipelineTree, train: &Dataset, k: usize, fold_seed: u64, max_depth: usize) -> Fitness {
    match kfold_score(t, train, k, fold_seed) {
        Ok(objective1) => Fitness {
            objective1,
            objective2: t.complexity(),
        },
        Err(_) => Fitness::failure(max_depth),
    }
}
