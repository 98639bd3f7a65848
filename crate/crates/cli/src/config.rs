//! Settings resolution. Flags and config-file entries share one key space:
//! every flag `--foo-bar` has a file key `foo-bar` (or `foo_bar`), and flags
//! override file values.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use evoml::analysis::DEFAULT_BONFERRONI;
use evoml::{EvolutionConfig, FitnessMode, LabelColumn};

use crate::CliError;

pub const DEFAULT_OUT: &str = "evoml-out";
pub const DEFAULT_TEST_FRACTION: f64 = 0.5;
const DEFAULT_GENERATIONS: usize = 20;

const KEYS: &[&str] = &[
    "data",
    "label",
    "mode",
    "modes",
    "generations",
    "time-budget",
    "pop",
    "offspring",
    "k",
    "max-depth",
    "seed",
    "workers",
    "out",
    "crossover-rate",
    "test-fraction",
    "bonferroni",
];

/// Flags shared by `run` and `compare`.
#[derive(Debug, Clone, Default, Args)]
pub struct SearchFlags {
    /// CSV dataset; repeat for several datasets.
    #[arg(long, value_name = "CSV")]
    pub data: Vec<PathBuf>,
    /// Label column (name or 0-based index) per dataset, or one for all.
    /// Defaults to the last column.
    #[arg(long, value_name = "COLUMN")]
    pub label: Vec<String>,
    /// Generations to run (default 20 unless only a time budget is given).
    #[arg(long)]
    pub generations: Option<usize>,
    /// Wall-clock budget per search, in seconds.
    #[arg(long = "time-budget", value_name = "SECONDS")]
    pub time_budget: Option<f64>,
    /// Population size.
    #[arg(long)]
    pub pop: Option<usize>,
    /// Offspring per generation (defaults to the population size).
    #[arg(long)]
    pub offspring: Option<usize>,
    /// Folds of the internal cross-validation.
    #[arg(long)]
    pub k: Option<usize>,
    /// Maximum pipeline length, classifier included.
    #[arg(long = "max-depth")]
    pub max_depth: Option<usize>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for evaluation.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Probability of crossover instead of mutation.
    #[arg(long = "crossover-rate")]
    pub crossover_rate: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flat key=value file; flags take precedence.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

impl SearchFlags {
    fn entries(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        let join = |items: Vec<String>| items.join(",");
        if !self.data.is_empty() {
            v.push(("data", join(self.data.iter().map(|p| p.display().to_string()).collect())));
        }
        if !self.label.is_empty() {
            v.push(("label", join(self.label.clone())));
        }
        let mut opt = |key: &'static str, value: Option<String>| {
            if let Some(value) = value {
                v.push((key, value));
            }
        };
        opt("generations", self.generations.map(|x| x.to_string()));
        opt("time-budget", self.time_budget.map(|x| x.to_string()));
        opt("pop", self.pop.map(|x| x.to_string()));
        opt("offspring", self.offspring.map(|x| x.to_string()));
        opt("k", self.k.map(|x| x.to_string()));
        opt("max-depth", self.max_depth.map(|x| x.to_string()));
        opt("seed", self.seed.map(|x| x.to_string()));
        opt("workers", self.workers.map(|x| x.to_string()));
        opt("crossover-rate", self.crossover_rate.map(|x| x.to_string()));
        opt("out", self.out.as_ref().map(|p| p.display().to_string()));
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSource {
    pub name: String,
    pub path: PathBuf,
    pub label: LabelColumn,
}

/// Fully resolved configuration of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub datasets: Vec<DatasetSource>,
    pub evolution: EvolutionConfig,
    pub out: PathBuf,
    pub modes: Vec<FitnessMode>,
    pub test_fraction: f64,
    pub bonferroni: f64,
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("config line {}: expected key=value", i + 1)))?;
        let key = key.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Config(format!("config line {}: unknown key '{key}'", i + 1)));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn read_config(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_text(&text)
}

struct Layered(BTreeMap<String, String>);

impl Layered {
    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.0
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| CliError::Config(format!("invalid value '{v}' for {key}: {e}"))))
            .transpose()
    }

    fn list(&self, key: &str) -> Vec<String> {
        self.0.get(key).map_or_else(Vec::new, |v| {
            v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
        })
    }
}

/// Command-specific values that are not part of [`SearchFlags`].
#[derive(Debug, Clone, Default)]
pub struct Extra {
    pub mode: Option<FitnessMode>,
    pub modes: Vec<FitnessMode>,
    pub test_fraction: Option<f64>,
    pub bonferroni: Option<f64>,
}

pub fn resolve(flags: &SearchFlags, extra: &Extra) -> Result<RunConfig, CliError> {
    let mut map = match &flags.config {
        Some(p) => read_config(p)?,
        None => BTreeMap::new(),
    };
    for (k, v) in flags.entries() {
        map.insert(k.to_string(), v);
    }
    if let Some(m) = extra.mode {
        map.insert("mode".into(), m.to_string());
    }
    if !extra.modes.is_empty() {
        map.insert("modes".into(), extra.modes.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(","));
    }
    if let Some(f) = extra.test_fraction {
        map.insert("test-fraction".into(), f.to_string());
    }
    if let Some(b) = extra.bonferroni {
        map.insert("bonferroni".into(), b.to_string());
    }
    let m = Layered(map);

    let paths = m.list("data");
    if paths.is_empty() {
        return Err(CliError::Config("no dataset given (--data)".into()));
    }
    let labels = m.list("label");
    if labels.len() > 1 && labels.len() != paths.len() {
        return Err(CliError::Config(format!(
            "{} label columns for {} datasets",
            labels.len(),
            paths.len()
        )));
    }
    let mut datasets: Vec<DatasetSource> = Vec::new();
    for (i, p) in paths.iter().enumerate() {
        let path = PathBuf::from(p);
        if !path.is_file() {
            return Err(CliError::Config(format!("data file not found: {}", path.display())));
        }
        let label = match labels.get(i).or(labels.first()) {
            Some(l) => l.parse::<LabelColumn>().map_err(|e| CliError::Config(e.to_string()))?,
            None => LabelColumn::Last,
        };
        let stem = path.file_stem().map_or_else(|| format!("dataset{i}"), |s| s.to_string_lossy().into_owned());
        if datasets.iter().any(|d| d.name == stem) {
            return Err(CliError::Config(format!("two datasets share the name '{stem}'")));
        }
        datasets.push(DatasetSource { name: stem, path, label });
    }

    let defaults = EvolutionConfig::default();
    let time_budget: Option<f64> = m.get("time-budget")?;
    let generations: Option<usize> = match m.get::<usize>("generations")? {
        Some(0) => return Err(CliError::Config("generations must be at least 1".into())),
        Some(g) => Some(g),
        None if time_budget.is_some() => None,
        None => Some(DEFAULT_GENERATIONS),
    };
    let population_size = m.get("pop")?.unwrap_or(defaults.population_size);
    let evolution = EvolutionConfig {
        population_size,
        offspring_size: m.get("offspring")?.unwrap_or(population_size),
        k: m.get("k")?.unwrap_or(defaults.k),
        max_generations: generations,
        time_budget_seconds: time_budget,
        mode: m.get("mode")?.unwrap_or(defaults.mode),
        master_seed: m.get("seed")?.unwrap_or(defaults.master_seed),
        max_depth: m.get("max-depth")?.unwrap_or(defaults.max_depth),
        crossover_rate: m.get("crossover-rate")?.unwrap_or(defaults.crossover_rate),
        workers: m.get("workers")?,
        selection: defaults.selection,
    };
    evolution.validate().map_err(|e| CliError::Config(e.to_string()))?;

    let mut modes = Vec::new();
    for s in m.list("modes") {
        let mode = s.parse::<FitnessMode>().map_err(CliError::Config)?;
        if !modes.contains(&mode) {
            modes.push(mode);
        }
    }
    if modes.is_empty() {
        modes = vec![FitnessMode::Dynamic, FitnessMode::Static];
    }

    let test_fraction = m.get("test-fraction")?.unwrap_or(DEFAULT_TEST_FRACTION);
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(CliError::Config("test-fraction must lie in (0, 1)".into()));
    }
    let bonferroni = m.get("bonferroni")?.unwrap_or(DEFAULT_BONFERRONI);
    if !(bonferroni >= 1.0 && bonferroni.is_finite()) {
        return Err(CliError::Config("bonferroni multiplier must be at least 1".into()));
    }

    let out = PathBuf::from(m.0.get("out").cloned().unwrap_or_else(|| DEFAULT_OUT.to_string()));
    fs::create_dir_all(&out)
        .map_err(|e| CliError::Config(format!("output directory {} is not writable: {e}", out.display())))?;

    Ok(RunConfig {
        datasets,
        evolution,
        out,
        modes,
        test_fraction,
        bonferroni,
    })
}
