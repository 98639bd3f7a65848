use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use evoml::analysis::{
    self, build_report, dominance_csv, render_runs, render_table, run_5x2, run_once, seed_sensitivity, ComparisonDocument,
    Replicate, RunReport, RunStatus, SeedSensitivity, REPORT_FORMAT_VERSION,
};
use evoml::data::{load_csv, train_test_split};
use evoml::{Dataset, EvolutionConfig, FitnessMode, PipelineTree};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{DatasetSource, RunConfig};
use crate::CliError;

pub const RUN_REPORT_FILE: &str = "run_report.json";
pub const RUN_REPORTS_FILE: &str = "run_reports.json";
pub const GENERATIONS_FILE: &str = "generations.jsonl";
pub const PIPELINE_FILE: &str = "final_pipeline.txt";
pub const COMPARISON_FILE: &str = "comparison.json";
pub const SENSITIVITY_FILE: &str = "seed_sensitivity.json";
/// Fold seeds used for the seed-sensitivity plot data.
pub const SENSITIVITY_SEEDS: u64 = 30;

/// Seed-sensitivity plot data for every dataset of a comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityDocument {
    pub format_version: u32,
    pub entries: Vec<SensitivityEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityEntry {
    pub dataset: String,
    #[serde(flatten)]
    pub sensitivity: SeedSensitivity,
}

/// Versioned list of run reports, as written by `compare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReportSet {
    pub format_version: u32,
    pub reports: Vec<RunReport>,
}

fn load(source: &DatasetSource) -> Result<Dataset, CliError> {
    load_csv(&source.path, &source.label).map_err(|e| CliError::Config(format!("{}: {e}", source.path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    write_file(path, &text)
}

/// Single search on a stratified train/test split; writes the run report, the
/// generation log and the final pipeline.
pub fn cmd_run(rc: &RunConfig) -> Result<RunReport, CliError> {
    let [source] = rc.datasets.as_slice() else {
        return Err(CliError::Config("run takes exactly one dataset".into()));
    };
    let d = load(source)?;
    let split_seed = analysis::split_seed(rc.evolution.master_seed, 1);
    let split = train_test_split(&d, rc.test_fraction, split_seed).map_err(|e| CliError::Config(e.to_string()))?;

    let log_path = rc.out.join(GENERATIONS_FILE);
    let mut log = BufWriter::new(File::create(&log_path).map_err(|e| CliError::io(&log_path, e))?);
    let mut log_error = None;
    let report = run_once(
        &source.name,
        &split.train,
        &split.test,
        &rc.evolution,
        Replicate { repeat: 1, half: 1 },
        split_seed,
        |g| {
            if log_error.is_none() {
                log_error = writeln!(log, "{}", g.to_json_line()).err();
            }
        },
    )?;
    if let Some(e) = log_error.or_else(|| log.flush().err()) {
        return Err(CliError::io(&log_path, e));
    }

    write_json(&rc.out.join(RUN_REPORT_FILE), &report)?;
    write_file(&rc.out.join(PIPELINE_FILE), &format!("{}\n", report.final_pipeline))?;
    match report.status {
        RunStatus::InsufficientBudget => Err(CliError::InsufficientBudget(
            rc.evolution.time_budget_seconds.unwrap_or_default(),
        )),
        RunStatus::TooFewGenerations => {
            eprintln!(
                "warning: only {} generation(s) completed; this run would be excluded from comparisons",
                report.generations_completed
            );
            Ok(report)
        }
        RunStatus::Completed => Ok(report),
    }
}

/// Paired 5x2 comparison of both modes on every dataset.
pub fn cmd_compare(rc: &RunConfig) -> Result<ComparisonDocument, CliError> {
    let needed = [FitnessMode::Dynamic, FitnessMode::Static];
    if !needed.iter().all(|m| rc.modes.contains(m)) {
        return Err(CliError::Config("compare needs both modes: --modes dynamic,static".into()));
    }
    let mut reports = Vec::new();
    let mut entries = Vec::new();
    for source in &rc.datasets {
        let d = load(source)?;
        let mut per_mode = Vec::new();
        for mode in needed {
            let runs = run_5x2(&source.name, &d, &rc.evolution, mode)?;
            for r in runs.iter().filter(|r| !r.usable()) {
                eprintln!(
                    "warning: {} {} replicate {}/{} excluded ({})",
                    r.dataset_name, r.mode, r.replicate.repeat, r.replicate.half, r.status
                );
            }
            per_mode.push(runs);
        }
        if let Some(entry) = sensitivity_entry(source, &d, &rc.evolution, &per_mode[0][0], &per_mode[1][0])? {
            entries.push(entry);
        }
        reports.extend(per_mode.into_iter().flatten());
    }

    write_json(
        &rc.out.join(RUN_REPORTS_FILE),
        &RunReportSet {
            format_version: REPORT_FORMAT_VERSION,
            reports: reports.clone(),
        },
    )?;
    let doc = build_report(&reports, rc.bonferroni)?;
    write_json(&rc.out.join(COMPARISON_FILE), &doc)?;
    write_json(
        &rc.out.join(SENSITIVITY_FILE),
        &SensitivityDocument {
            format_version: REPORT_FORMAT_VERSION,
            entries,
        },
    )?;
    render_dir(&rc.out)?;
    Ok(doc)
}

/// Scores the first replicate's two final pipelines on that replicate's
/// training half under a range of fold seeds.
fn sensitivity_entry(
    source: &DatasetSource,
    d: &Dataset,
    cfg: &EvolutionConfig,
    dynamic: &RunReport,
    static_: &RunReport,
) -> Result<Option<SensitivityEntry>, CliError> {
    if !dynamic.usable() || !static_.usable() {
        return Ok(None);
    }
    let parse = |s: &str| s.parse::<PipelineTree>().map_err(|e| CliError::Report(format!("stored pipeline '{s}': {e}")));
    let (a, b) = (parse(&dynamic.final_pipeline)?, parse(&static_.final_pipeline)?);
    let split = train_test_split(d, 0.5, dynamic.split_seed)?;
    let seeds = (0..SENSITIVITY_SEEDS).map(|i| cfg.master_seed.wrapping_add(i));
    Ok(Some(SensitivityEntry {
        dataset: source.name.clone(),
        sensitivity: seed_sensitivity(&a, &b, &split.train, cfg.k, seeds),
    }))
}

fn file_stem_safe(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

fn check_version(path: &Path, value: &Value) -> Result<(), CliError> {
    let found = value.get("format_version").and_then(Value::as_u64);
    if found != Some(REPORT_FORMAT_VERSION as u64) {
        let found = found.map_or_else(|| "missing".to_string(), |v| v.to_string());
        return Err(CliError::Report(format!(
            "{}: format version {found}, expected {REPORT_FORMAT_VERSION}",
            path.display()
        )));
    }
    if let Some(reports) = value.get("reports").and_then(Value::as_array) {
        for r in reports {
            check_version(path, r)?;
        }
    }
    Ok(())
}

fn parse_as<T: for<'de> Deserialize<'de>>(path: &Path, value: Value) -> Result<T, CliError> {
    serde_json::from_value(value).map_err(|e| CliError::Report(format!("{}: corrupt report: {e}", path.display())))
}

/// Renders text tables and plot-data CSVs from the JSON documents in `dir`.
/// Returns the files written.
pub fn render_dir(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let listing = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut files: Vec<PathBuf> = listing
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Report(format!("no report files in {}", dir.display())));
    }

    let mut runs: Vec<RunReport> = Vec::new();
    let mut comparison: Option<ComparisonDocument> = None;
    let mut sensitivity: Vec<SensitivityEntry> = Vec::new();
    for path in &files {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Report(format!("{}: corrupt report: {e}", path.display())))?;
        check_version(path, &value)?;
        if value.get("reports").is_some() {
            runs.extend(parse_as::<RunReportSet>(path, value)?.reports);
        } else if value.get("tally").is_some() {
            comparison = Some(parse_as(path, value)?);
        } else if value.get("entries").is_some() {
            sensitivity.extend(parse_as::<SensitivityDocument>(path, value)?.entries);
        } else if value.get("dataset_name").is_some() {
            runs.push(parse_as(path, value)?);
        } else {
            return Err(CliError::Report(format!("{}: not a recognised report", path.display())));
        }
    }

    let mut written = Vec::new();
    let mut emit = |name: String, contents: String| -> Result<(), CliError> {
        let path = dir.join(name);
        write_file(&path, &contents)?;
        written.push(path);
        Ok(())
    };
    if !runs.is_empty() {
        emit("runs.txt".into(), render_runs(&runs))?;
    }
    if let Some(doc) = &comparison {
        emit("comparison.txt".into(), render_table(doc))?;
        emit("dominance.csv".into(), dominance_csv(doc))?;
    }
    for e in &sensitivity {
        emit(
            format!("seed_sensitivity_{}.csv", file_stem_safe(&e.dataset)),
            e.sensitivity.to_csv(),
        )?;
    }
    Ok(written)
}
