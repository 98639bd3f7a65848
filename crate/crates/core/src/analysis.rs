//! Paired comparison of the two fitness regimes.
//!
//! Each dataset is evaluated with 5x2 cross-validation: five stratified
//! halvings, each used twice with the halves swapped. Both regimes see the
//! same halves and the same per-replicate master seeds, so the only
//! difference between paired runs is the fitness function. Per-dataset means
//! are then compared across datasets with a Wilcoxon signed-rank test and a
//! Bonferroni multiplier.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::data::{train_test_split, DataError, Dataset};
use crate::evolution::{evolve_with, EvolutionConfig, EvolutionError, GenerationLog};
use crate::fitness::{kfold_score, weighted_f1, Fitness, FitnessError, FitnessMode};
use crate::pipeline::{execute, PipelineError, PipelineTree};
use crate::seed;

/// Version stamped into every JSON document written by this module.
pub const REPORT_FORMAT_VERSION: u32 = 1;
/// Runs with fewer completed generations are excluded from aggregation.
pub const MIN_GENERATIONS: usize = 2;
pub const ALPHA: f64 = 0.05;
pub const DEFAULT_BONFERRONI: f64 = 3.0;
/// Largest sample size for which the exact null distribution is used.
pub const EXACT_LIMIT: usize = 25;

const SPLIT_TAG: u64 = 0x51;
const RUN_TAG: u64 = 0x52;
const FINAL_TAG: u64 = 0x53;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Fitness(#[from] FitnessError),
    #[error("insufficient pairs: {nonzero} non-zero differences, at least 5 required")]
    InsufficientPairs { nonzero: usize },
    #[error("no dataset has usable results for both modes")]
    NoCompleteDataset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// Fewer than [`MIN_GENERATIONS`] generations finished.
    TooFewGenerations,
    /// The time budget ran out before a single generation finished.
    InsufficientBudget,
}

impl std::fmt::Display for RunStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RunStatus::Completed => "completed",
            RunStatus::TooFewGenerations => "too_few_generations",
            RunStatus::InsufficientBudget => "insufficient_budget",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Replicate {
    /// 1..=5
    pub repeat: u8,
    /// 1 = search on the first half, 2 = halves swapped.
    pub half: u8,
}

/// Outcome of one search run evaluated on its held-out half.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format_version: u32,
    pub dataset_name: String,
    pub mode: FitnessMode,
    pub replicate: Replicate,
    pub status: RunStatus,
    pub final_pipeline: String,
    /// Lifetime (dynamic) or single (static) k-fold score of the final pick.
    pub internal_score: f64,
    /// Weighted F1 of the final pick on the held-out half.
    pub external_score: f64,
    pub age: usize,
    pub birth_generation: usize,
    pub generations_completed: usize,
    pub complexity: usize,
    pub evaluations: u64,
    pub master_seed: u64,
    pub split_seed: u64,
    pub wall_seconds: f64,
}

impl RunReport {
    pub fn difference(&self) -> f64 {
        difference(self.internal_score, self.external_score)
    }

    pub fn usable(&self) -> bool {
        self.status == RunStatus::Completed
    }
}

/// Absolute gap between the internal estimate and the held-out score.
pub fn difference(internal: f64, external: f64) -> f64 {
    (internal - external).abs()
}

/// Runs one search on `train` and scores the final pick on `test`.
pub fn run_once(
    dataset_name: &str,
    train: &Dataset,
    test: &Dataset,
    cfg: &EvolutionConfig,
    replicate: Replicate,
    split_seed: u64,
    observer: impl FnMut(&GenerationLog),
) -> Result<RunReport, AnalysisError> {
    let mut report = RunReport {
        format_version: REPORT_FORMAT_VERSION,
        dataset_name: dataset_name.to_string(),
        mode: cfg.mode,
        replicate,
        status: RunStatus::InsufficientBudget,
        final_pipeline: String::new(),
        internal_score: 0.0,
        external_score: 0.0,
        age: 0,
        birth_generation: 0,
        generations_completed: 0,
        complexity: 0,
        evaluations: 0,
        master_seed: cfg.master_seed,
        split_seed,
        wall_seconds: 0.0,
    };
    let result = match evolve_with(cfg, train, observer) {
        Ok(r) => r,
        Err(EvolutionError::InsufficientBudget { .. }) => return Ok(report),
        Err(e) => return Err(e.into()),
    };
    let tree = &result.final_pick.tree;
    let preds = execute(tree, train, test, seed::derive(cfg.master_seed, &[FINAL_TAG]))?;
    report.status = if result.generations_completed >= MIN_GENERATIONS {
        RunStatus::Completed
    } else {
        RunStatus::TooFewGenerations
    };
    report.final_pipeline = tree.to_string();
    report.internal_score = result.final_fitness.objective1;
    report.external_score = weighted_f1(test.labels(), &preds, test.classes().len())?;
    report.age = result.final_age();
    report.birth_generation = result.final_pick.birth_generation();
    report.generations_completed = result.generations_completed;
    report.complexity = tree.complexity();
    report.evaluations = result.total_evaluations;
    report.wall_seconds = result.wall_seconds;
    Ok(report)
}

/// Outer split seed of repeat `repeat` (1-based).
pub fn split_seed(master_seed: u64, repeat: u8) -> u64 {
    seed::derive(master_seed, &[SPLIT_TAG, repeat as u64])
}

/// Search seed of one replicate; shared by both modes.
pub fn replicate_seed(master_seed: u64, replicate: Replicate) -> u64 {
    seed::derive(master_seed, &[RUN_TAG, replicate.repeat as u64, replicate.half as u64])
}

/// Five stratified halvings, each searched in both directions: ten reports
/// keyed (1,1), (1,2), ..., (5,2).
pub fn run_5x2(dataset_name: &str, d: &Dataset, cfg: &EvolutionConfig, mode: FitnessMode) -> Result<Vec<RunReport>, AnalysisError> {
    let mut reports = Vec::with_capacity(10);
    for repeat in 1..=5u8 {
        let split_seed = split_seed(cfg.master_seed, repeat);
        let split = train_test_split(d, 0.5, split_seed)?;
        for half in 1..=2u8 {
            let replicate = Replicate { repeat, half };
            let (train, test) = if half == 1 {
                (&split.train, &split.test)
            } else {
                (&split.test, &split.train)
            };
            let run_cfg = EvolutionConfig {
                mode,
                master_seed: replicate_seed(cfg.master_seed, replicate),
                ..cfg.clone()
            };
            reports.push(run_once(dataset_name, train, test, &run_cfg, replicate, split_seed, |_| {})?);
        }
    }
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wilcoxon {
    pub n: usize,
    pub w_plus: f64,
    pub w_minus: f64,
    /// min(W+, W-)
    pub statistic: f64,
    pub p_value: f64,
    pub exact: bool,
}

/// Mid-ranks of `values` (1-based), ties sharing the mean of their positions.
pub fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j + 2) as f64 / 2.0;
        for &o in &order[i..=j] {
            ranks[o] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided Wilcoxon signed-rank test on paired differences.
///
/// Zero differences are dropped. For up to [`EXACT_LIMIT`] remaining pairs the
/// p-value comes from the exact null distribution of the (mid-)rank sum;
/// above that a normal approximation with tie correction is used.
pub fn wilcoxon_signed_rank(diffs: &[f64]) -> Result<Wilcoxon, AnalysisError> {
    let nonzero: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    let n = nonzero.len();
    if n < 5 {
        return Err(AnalysisError::InsufficientPairs { nonzero: n });
    }
    let abs: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let ranks = mid_ranks(&abs);
    let w_plus: f64 = nonzero.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let w_minus: f64 = nonzero.iter().zip(&ranks).filter(|(d, _)| **d < 0.0).map(|(_, r)| r).sum();
    let statistic = w_plus.min(w_minus);

    let (p, exact) = if n <= EXACT_LIMIT {
        (exact_p(&ranks, statistic), true)
    } else {
        (normal_p(&abs, &ranks, statistic), false)
    };
    Ok(Wilcoxon {
        n,
        w_plus,
        w_minus,
        statistic,
        p_value: p.min(1.0),
        exact,
    })
}

/// 2 * P(W+ <= w) under the null, counting subsets of doubled (integer) ranks.
fn exact_p(ranks: &[f64], w: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0u64; total + 1];
    counts[0] = 1;
    for &r in &doubled {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    let limit = (w * 2.0).round() as usize;
    let below: u64 = counts[..=limit.min(total)].iter().sum();
    2.0 * below as f64 / (1u64 << ranks.len()) as f64
}

fn normal_p(abs: &[f64], ranks: &[f64], w: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut sorted: Vec<f64> = abs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = (w - mean) / var.sqrt();
    2.0 * Normal::new(0.0, 1.0).expect("unit normal").cdf(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dominance {
    ADominates,
    BDominates,
    None,
}

/// Pareto relation of two (performance, complexity) outcomes.
pub fn dominance_classify(a: Fitness, b: Fitness) -> Dominance {
    if a.dominates(&b) {
        Dominance::ADominates
    } else if b.dominates(&a) {
        Dominance::BDominates
    } else {
        Dominance::None
    }
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub runs_used: usize,
    pub runs_excluded: usize,
    pub external_mean: f64,
    pub external_std: f64,
    pub internal_mean: f64,
    pub difference_mean: f64,
    pub age_mean: f64,
    pub complexity_mean: f64,
    pub generations_mean: f64,
}

impl ModeSummary {
    fn from_runs(runs: &[&RunReport]) -> Option<Self> {
        let used: Vec<&&RunReport> = runs.iter().filter(|r| r.usable()).collect();
        if used.is_empty() {
            return None;
        }
        let col = |f: &dyn Fn(&RunReport) -> f64| used.iter().map(|r| f(r)).collect::<Vec<f64>>();
        let (external_mean, external_std) = mean_std(&col(&|r| r.external_score));
        Some(Self {
            runs_used: used.len(),
            runs_excluded: runs.len() - used.len(),
            external_mean,
            external_std,
            internal_mean: mean_std(&col(&|r| r.internal_score)).0,
            difference_mean: mean_std(&col(&|r| r.difference())).0,
            age_mean: mean_std(&col(&|r| r.age as f64)).0,
            complexity_mean: mean_std(&col(&|r| r.complexity as f64)).0,
            generations_mean: mean_std(&col(&|r| r.generations_completed as f64)).0,
        })
    }

    fn point(&self) -> (f64, f64) {
        (self.external_mean, self.complexity_mean)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Win,
    Loss,
    Draw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub dataset: String,
    pub dynamic: Option<ModeSummary>,
    #[serde(rename = "static")]
    pub static_: Option<ModeSummary>,
    /// Dynamic relative to static on mean held-out score; `None` when either
    /// side has no usable runs.
    pub outcome: Option<Outcome>,
    /// Dynamic (a) against static (b) on (mean external score, mean complexity).
    pub dominance: Option<Dominance>,
}

impl DatasetSummary {
    pub fn complete(&self) -> bool {
        self.dynamic.is_some() && self.static_.is_some()
    }
}

/// Significance test across datasets, paired dynamic minus static.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PairedTest {
    Computed {
        n_pairs: usize,
        statistic: f64,
        p_value: f64,
        corrected_p: f64,
        significant: bool,
        /// Mean of dynamic minus static across datasets.
        mean_shift: f64,
    },
    InsufficientPairs {
        nonzero: usize,
    },
}

impl PairedTest {
    pub fn from_pairs(dynamic: &[f64], static_: &[f64], multiplier: f64) -> Self {
        let diffs: Vec<f64> = dynamic.iter().zip(static_).map(|(a, b)| a - b).collect();
        match wilcoxon_signed_rank(&diffs) {
            Ok(w) => {
                let corrected_p = (w.p_value * multiplier).min(1.0);
                Self::Computed {
                    n_pairs: w.n,
                    statistic: w.statistic,
                    p_value: w.p_value,
                    corrected_p,
                    significant: corrected_p < ALPHA,
                    mean_shift: mean_std(&diffs).0,
                }
            }
            Err(AnalysisError::InsufficientPairs { nonzero }) => Self::InsufficientPairs { nonzero },
            Err(e) => unreachable!("wilcoxon only fails on pair count: {e}"),
        }
    }

    pub fn corrected_p(&self) -> Option<f64> {
        match self {
            PairedTest::Computed { corrected_p, .. } => Some(*corrected_p),
            PairedTest::InsufficientPairs { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub wins: usize,
    pub losses: usize,
    pub draws: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DominanceTally {
    pub dynamic_dominates: usize,
    pub static_dominates: usize,
    pub neither: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeMeans {
    pub dynamic: f64,
    #[serde(rename = "static")]
    pub static_: f64,
}

/// Cross-dataset comparison of the two regimes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonDocument {
    pub format_version: u32,
    pub alpha: f64,
    pub bonferroni_multiplier: f64,
    pub datasets: Vec<DatasetSummary>,
    /// Wins/losses/draws of dynamic against static, without per-dataset
    /// significance.
    pub tally: Tally,
    pub performance_test: PairedTest,
    pub difference_test: PairedTest,
    pub age_test: PairedTest,
    pub complexity_test: PairedTest,
    pub generations_test: PairedTest,
    pub mean_difference: ModeMeans,
    pub mean_complexity: ModeMeans,
    pub mean_age: ModeMeans,
    pub dominance: DominanceTally,
}

/// Aggregates run reports of both modes into a comparison document.
pub fn build_report(reports: &[RunReport], bonferroni_multiplier: f64) -> Result<ComparisonDocument, AnalysisError> {
    let mut names: Vec<&str> = Vec::new();
    for r in reports {
        if !names.contains(&r.dataset_name.as_str()) {
            names.push(&r.dataset_name);
        }
    }
    let mut datasets = Vec::new();
    for name in names {
        let of = |mode| {
            let mut runs: Vec<&RunReport> = reports.iter().filter(|r| r.dataset_name == name && r.mode == mode).collect();
            runs.sort_by_key(|r| r.replicate);
            ModeSummary::from_runs(&runs)
        };
        let dynamic = of(FitnessMode::Dynamic);
        let static_ = of(FitnessMode::Static);
        let (outcome, dominance) = match (&dynamic, &static_) {
            (Some(d), Some(s)) => {
                let outcome = match d.external_mean.total_cmp(&s.external_mean) {
                    std::cmp::Ordering::Greater => Outcome::Win,
                    std::cmp::Ordering::Less => Outcome::Loss,
                    std::cmp::Ordering::Equal => Outcome::Draw,
                };
                (Some(outcome), Some(dominance_of_points(d.point(), s.point())))
            }
            _ => (None, None),
        };
        datasets.push(DatasetSummary {
            dataset: name.to_string(),
            dynamic,
            static_,
            outcome,
            dominance,
        });
    }

    let complete: Vec<&DatasetSummary> = datasets.iter().filter(|d| d.complete()).collect();
    if complete.is_empty() {
        return Err(AnalysisError::NoCompleteDataset);
    }
    let pair = |f: &dyn Fn(&ModeSummary) -> f64| -> (Vec<f64>, Vec<f64>) {
        complete
            .iter()
            .map(|d| (f(d.dynamic.as_ref().unwrap()), f(d.static_.as_ref().unwrap())))
            .unzip()
    };
    let test = |f: &dyn Fn(&ModeSummary) -> f64| {
        let (a, b) = pair(f);
        PairedTest::from_pairs(&a, &b, bonferroni_multiplier)
    };
    let means = |f: &dyn Fn(&ModeSummary) -> f64| {
        let (a, b) = pair(f);
        ModeMeans {
            dynamic: mean_std(&a).0,
            static_: mean_std(&b).0,
        }
    };

    let mut tally = Tally::default();
    let mut dominance = DominanceTally::default();
    for d in &complete {
        match d.outcome {
            Some(Outcome::Win) => tally.wins += 1,
            Some(Outcome::Loss) => tally.losses += 1,
            _ => tally.draws += 1,
        }
        match d.dominance {
            Some(Dominance::ADominates) => dominance.dynamic_dominates += 1,
            Some(Dominance::BDominates) => dominance.static_dominates += 1,
            _ => dominance.neither += 1,
        }
    }

    Ok(ComparisonDocument {
        format_version: REPORT_FORMAT_VERSION,
        alpha: ALPHA,
        bonferroni_multiplier,
        performance_test: test(&|m| m.external_mean),
        difference_test: test(&|m| m.difference_mean),
        age_test: test(&|m| m.age_mean),
        complexity_test: test(&|m| m.complexity_mean),
        generations_test: test(&|m| m.generations_mean),
        mean_difference: means(&|m| m.difference_mean),
        mean_complexity: means(&|m| m.complexity_mean),
        mean_age: means(&|m| m.age_mean),
        datasets,
        tally,
        dominance,
    })
}

/// Dominance on real-valued (performance up, complexity down) points.
fn dominance_of_points(a: (f64, f64), b: (f64, f64)) -> Dominance {
    let dominates = |x: (f64, f64), y: (f64, f64)| x.0 >= y.0 && x.1 <= y.1 && (x.0 > y.0 || x.1 < y.1);
    if dominates(a, b) {
        Dominance::ADominates
    } else if dominates(b, a) {
        Dominance::BDominates
    } else {
        Dominance::None
    }
}

fn fmt_test(t: &PairedTest) -> String {
    match t {
        PairedTest::Computed {
            p_value,
            corrected_p,
            significant,
            ..
        } => format!(
            "p={p_value:.4} corrected={corrected_p:.4}{}",
            if *significant { " (significant)" } else { "" }
        ),
        PairedTest::InsufficientPairs { nonzero } => format!("insufficient pairs ({nonzero} non-zero)"),
    }
}

fn cell(s: &Option<ModeSummary>, f: impl Fn(&ModeSummary) -> String) -> String {
    s.as_ref().map_or_else(|| "-".to_string(), f)
}

/// Left-aligned columns separated by two spaces; the first row is a header
/// underlined with dashes.
pub fn align_columns(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|v| v.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, r) in rows.iter().enumerate() {
        let line: Vec<String> = r
            .iter()
            .zip(&widths)
            .map(|(v, w)| format!("{v}{}", " ".repeat(w - v.chars().count())))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * cols.saturating_sub(1)));
            out.push('\n');
        }
    }
    out
}

/// One line per run report.
pub fn render_runs(reports: &[RunReport]) -> String {
    let mut rows = vec![[
        "dataset", "mode", "replicate", "status", "internal", "external", "difference", "age", "generations",
        "complexity", "evaluations", "pipeline",
    ]
    .iter()
    .map(|h| h.to_string())
    .collect::<Vec<_>>()];
    for r in reports {
        rows.push(vec![
            r.dataset_name.clone(),
            r.mode.to_string(),
            format!("{}/{}", r.replicate.repeat, r.replicate.half),
            r.status.to_string(),
            format!("{:.2}", r.internal_score),
            format!("{:.2}", r.external_score),
            format!("{:.2}", r.difference()),
            r.age.to_string(),
            r.generations_completed.to_string(),
            r.complexity.to_string(),
            r.evaluations.to_string(),
            r.final_pipeline.clone(),
        ]);
    }
    align_columns(&rows)
}

/// Aligned-column text rendering of a comparison document.
pub fn render_table(doc: &ComparisonDocument) -> String {
    let header = [
        "dataset", "dynamic", "static", "result", "diff dyn", "diff st", "age dyn", "age st", "cplx dyn", "cplx st",
        "dominance",
    ];
    let mut rows: Vec<Vec<String>> = vec![header.iter().map(|h| h.to_string()).collect()];
    for d in &doc.datasets {
        rows.push(vec![
            d.dataset.clone(),
            cell(&d.dynamic, |m| format!("{:.2} ± {:.2}", m.external_mean, m.external_std)),
            cell(&d.static_, |m| format!("{:.2} ± {:.2}", m.external_mean, m.external_std)),
            d.outcome.map_or("-".into(), |o| format!("{o:?}").to_lowercase()),
            cell(&d.dynamic, |m| format!("{:.2}", m.difference_mean)),
            cell(&d.static_, |m| format!("{:.2}", m.difference_mean)),
            cell(&d.dynamic, |m| format!("{:.1}", m.age_mean)),
            cell(&d.static_, |m| format!("{:.1}", m.age_mean)),
            cell(&d.dynamic, |m| format!("{:.2}", m.complexity_mean)),
            cell(&d.static_, |m| format!("{:.2}", m.complexity_mean)),
            d.dominance.map_or("-".into(), |x| match x {
                Dominance::ADominates => "dynamic".into(),
                Dominance::BDominates => "static".into(),
                Dominance::None => "neither".into(),
            }),
        ]);
    }
    let mut out = align_columns(&rows);
    let t = &doc.tally;
    let _ = writeln!(out);
    let _ = writeln!(out, "wins/losses/draws (dynamic vs static): {}/{}/{}", t.wins, t.losses, t.draws);
    let _ = writeln!(out, "performance:  {}", fmt_test(&doc.performance_test));
    let _ = writeln!(out, "difference:   {}", fmt_test(&doc.difference_test));
    let _ = writeln!(out, "age:          {}", fmt_test(&doc.age_test));
    let _ = writeln!(out, "complexity:   {}", fmt_test(&doc.complexity_test));
    let _ = writeln!(out, "generations:  {}", fmt_test(&doc.generations_test));
    let _ = writeln!(
        out,
        "mean difference dynamic/static: {:.3}/{:.3}",
        doc.mean_difference.dynamic, doc.mean_difference.static_
    );
    let _ = writeln!(
        out,
        "mean complexity dynamic/static: {:.3}/{:.3}",
        doc.mean_complexity.dynamic, doc.mean_complexity.static_
    );
    let d = &doc.dominance;
    let _ = writeln!(
        out,
        "dominance: dynamic {} / static {} / neither {}",
        d.dynamic_dominates, d.static_dominates, d.neither
    );
    out
}

/// Per-dataset dominance points as CSV:
/// `dataset,obj1_a,obj2_a,obj1_b,obj2_b,dominance` with a = dynamic, b = static.
pub fn dominance_csv(doc: &ComparisonDocument) -> String {
    let mut out = String::from("dataset,obj1_a,obj2_a,obj1_b,obj2_b,dominance\n");
    for d in doc.datasets.iter().filter(|d| d.complete()) {
        let (a, b) = (d.dynamic.as_ref().unwrap(), d.static_.as_ref().unwrap());
        let dom = match d.dominance {
            Some(Dominance::ADominates) => "a_dominates",
            Some(Dominance::BDominates) => "b_dominates",
            _ => "none",
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            d.dataset, a.external_mean, a.complexity_mean, b.external_mean, b.complexity_mean, dom
        );
    }
    out
}

/// k-fold scores of two pipelines under a range of fold seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSensitivity {
    pub pipeline_a: String,
    pub pipeline_b: String,
    pub seeds: Vec<u64>,
    pub score_a: Vec<f64>,
    pub score_b: Vec<f64>,
    pub mean_a: f64,
    pub mean_b: f64,
    /// Per seed: which pipeline scored higher ("a", "b" or "tie").
    pub best: Vec<String>,
}

impl SeedSensitivity {
    /// `seed,score_a,score_b` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("seed,score_a,score_b\n");
        for ((s, a), b) in self.seeds.iter().zip(&self.score_a).zip(&self.score_b) {
            let _ = writeln!(out, "{s},{a},{b}");
        }
        out
    }
}

/// Scores two pipelines with k-fold under each seed. Failed evaluations
/// score 0.
pub fn seed_sensitivity(
    a: &PipelineTree,
    b: &PipelineTree,
    train: &Dataset,
    k: usize,
    seeds: impl IntoIterator<Item = u64>,
) -> SeedSensitivity {
    let seeds: Vec<u64> = seeds.into_iter().collect();
    let score = |t: &PipelineTree| -> Vec<f64> { seeds.iter().map(|&s| kfold_score(t, train, k, s).unwrap_or(0.0)).collect() };
    let score_a = score(a);
    let score_b = score(b);
    let best = score_a
        .iter()
        .zip(&score_b)
        .map(|(x, y)| match x.total_cmp(y) {
            std::cmp::Ordering::Greater => "a",
            std::cmp::Ordering::Less => "b",
            std::cmp::Ordering::Equal => "tie",
        })
        .map(String::from)
        .collect();
    SeedSensitivity {
        pipeline_a: a.to_string(),
        pipeline_b: b.to_string(),
        mean_a: mean_std(&score_a).0,
        mean_b: mean_std(&score_b).0,
        seeds,
        score_a,
        score_b,
        best,
    }
}
