//! NSGA-II generational search over pipelines.
//!
//! Each generation:
//!
//! 1. offspring are bred from the current population by tournament selection
//!    followed by mutation or crossover;
//! 2. offspring are scored under the generation's fold seed. In dynamic mode
//!    the surviving population is re-scored under the same seed, extending
//!    each survivor's lifetime ledger; in static mode survivors keep their
//!    single score;
//! 3. NSGA-II selects the next population from population + offspring;
//! 4. the Pareto frontier is rebuilt from the new population alone.
//!
//! The fold seed of generation `g` is `master_seed + g`. All (individual,
//! fold) evaluations of a generation are independent and run on a rayon pool;
//! their results are merged in a fixed order, so the outcome does not depend
//! on the worker count.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{stratified_kfold, Dataset};
use crate::fitness::{self, current_fitness, Fitness, FitnessMode};
use crate::pipeline::{self, Individual, PipelineTree, DEFAULT_MAX_DEPTH};
use crate::seed;

const INIT_TAG: u64 = 0x1;
const VARIATION_TAG: u64 = 0x2;

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("insufficient budget: no generation completed within {budget_seconds} s")]
    InsufficientBudget { budget_seconds: f64 },
    #[error("cannot select {requested} from a pool of {available}")]
    PoolTooSmall { requested: usize, available: usize },
    #[error("individual {0} has not been evaluated")]
    NotEvaluated(u64),
    #[error("training data has {rows} rows, fewer than k = {k}")]
    TooFewRows { rows: usize, k: usize },
    #[error("worker pool: {0}")]
    Workers(String),
    #[error(transparent)]
    Fitness(#[from] fitness::FitnessError),
}

/// How the next population is chosen from population + offspring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurvivorSelection {
    #[default]
    Nsga2,
    /// Keep the current population unchanged; offspring are scored and
    /// discarded. Only useful for diagnostics, where every individual must
    /// live through the whole run.
    RetainPopulation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub offspring_size: usize,
    pub k: usize,
    pub max_generations: Option<usize>,
    pub time_budget_seconds: Option<f64>,
    pub mode: FitnessMode,
    pub master_seed: u64,
    pub max_depth: usize,
    /// Probability that an offspring comes from crossover instead of mutation.
    pub crossover_rate: f64,
    /// Worker threads for evaluation; `None` uses the global rayon pool.
    pub workers: Option<usize>,
    pub selection: SurvivorSelection,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            population_size: 24,
            offspring_size: 24,
            k: 5,
            max_generations: Some(20),
            time_budget_seconds: None,
            mode: FitnessMode::Dynamic,
            master_seed: 0,
            max_depth: DEFAULT_MAX_DEPTH,
            crossover_rate: 0.1,
            workers: None,
            selection: SurvivorSelection::Nsga2,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<(), EvolutionError> {
        let bad = |m: &str| Err(EvolutionError::InvalidConfig(m.to_string()));
        if self.population_size < 2 {
            return bad("population_size must be at least 2");
        }
        if self.offspring_size < 1 {
            return bad("offspring_size must be at least 1");
        }
        if self.k < 2 {
            return bad("k must be at least 2");
        }
        if self.max_depth < 1 {
            return bad("max_depth must be at least 1");
        }
        if self.max_generations.is_none() && self.time_budget_seconds.is_none() {
            return bad("either max_generations or time_budget_seconds must be set");
        }
        if let Some(t) = self.time_budget_seconds {
            if !(t > 0.0 && t.is_finite()) {
                return bad("time_budget_seconds must be positive");
            }
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return bad("crossover_rate must lie in [0, 1]");
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1");
        }
        Ok(())
    }

    /// Fold seed used to score individuals evaluated in `generation`.
    pub fn fold_seed(&self, generation: usize) -> u64 {
        match self.mode {
            FitnessMode::Dynamic => self.master_seed.wrapping_add(generation as u64),
            FitnessMode::Static => self.master_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierEntry {
    pub id: u64,
    pub pipeline: String,
    pub objective1: f64,
    pub objective2: usize,
    pub birth_generation: usize,
}

/// Per-generation record, emitted as one JSON line per generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationLog {
    pub generation: usize,
    /// Models trained in this generation (k per individual scored).
    pub evaluations_performed: u64,
    pub total_evaluations: u64,
    pub best_objective1: f64,
    pub frontier: Vec<FrontierEntry>,
}

impl GenerationLog {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("log serializes")
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub final_pick: Individual,
    pub final_fitness: Fitness,
    pub frontier: Vec<Individual>,
    pub population: Vec<Individual>,
    pub logs: Vec<GenerationLog>,
    pub generations_completed: usize,
    pub total_evaluations: u64,
    pub wall_seconds: f64,
}

impl EvolutionResult {
    /// Generations the final pick survived since its creation.
    pub fn final_age(&self) -> usize {
        self.final_pick.age(self.generations_completed)
    }
}

/// Models trained by a run: generation 0 scores the initial population, then
/// every generation scores the offspring (static) or offspring plus survivors
/// (dynamic).
pub fn evaluation_count(mode: FitnessMode, k: u64, generations: u64, population: u64, offspring: u64) -> u64 {
    let initial = k * population;
    match mode {
        FitnessMode::Static => k * generations * offspring + initial,
        FitnessMode::Dynamic => k * generations * (offspring + population) + initial,
    }
}

/// Models trained when every offspring is scored with `r` repeated k-fold runs.
pub fn repeated_kfold_count(r: u64, k: u64, generations: u64, offspring: u64) -> u64 {
    r * k * generations * offspring
}

/// Fronts of non-dominated points, best first. Indices within a front are
/// ascending.
pub fn fast_nondominated_sort(points: &[Fitness]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    for p in 0..n {
        for q in p + 1..n {
            if points[p].dominates(&points[q]) {
                dominated_by_me[p].push(q);
                domination_count[q] += 1;
            } else if points[q].dominates(&points[p]) {
                dominated_by_me[q].push(p);
                domination_count[p] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| domination_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated_by_me[p] {
                domination_count[q] -= 1;
                if domination_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each point in a front. Extreme points in either
/// objective get infinity; sorts are stable with index tie-breaks.
pub fn crowding_distance(front: &[Fitness]) -> Vec<f64> {
    let n = front.len();
    let mut dist = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let objectives: [&dyn Fn(&Fitness) -> f64; 2] = [&|f| f.objective1, &|f| f.objective2 as f64];
    for value in objectives {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| value(&front[a]).total_cmp(&value(&front[b])).then(a.cmp(&b)));
        let lo = value(&front[order[0]]);
        let hi = value(&front[order[n - 1]]);
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        for w in 1..n - 1 {
            let gap = value(&front[order[w + 1]]) - value(&front[order[w - 1]]);
            dist[order[w]] += gap / range;
        }
    }
    dist
}

/// Indices of the `n` survivors: whole fronts in rank order, then the cut
/// front by descending crowding distance with ties to the lower id.
pub fn nsga2_select_indices(points: &[Fitness], ids: &[u64], n: usize) -> Result<Vec<usize>, EvolutionError> {
    if points.len() < n {
        return Err(EvolutionError::PoolTooSmall {
            requested: n,
            available: points.len(),
        });
    }
    let mut chosen = Vec::with_capacity(n);
    for front in fast_nondominated_sort(points) {
        if chosen.len() == n {
            break;
        }
        if chosen.len() + front.len() <= n {
            chosen.extend_from_slice(&front);
            continue;
        }
        let members: Vec<Fitness> = front.iter().map(|&i| points[i]).collect();
        let cd = crowding_distance(&members);
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| cd[b].total_cmp(&cd[a]).then(ids[front[a]].cmp(&ids[front[b]])));
        let room = n - chosen.len();
        chosen.extend(order.into_iter().take(room).map(|j| front[j]));
    }
    Ok(chosen)
}

/// NSGA-II environmental selection over evaluated individuals.
pub fn nsga2_select(pool: Vec<Individual>, n: usize, max_depth: usize) -> Result<Vec<Individual>, EvolutionError> {
    let points = fitness_of(&pool, max_depth)?;
    let ids: Vec<u64> = pool.iter().map(|i| i.id).collect();
    let keep = nsga2_select_indices(&points, &ids, n)?;
    let mut slots: Vec<Option<Individual>> = pool.into_iter().map(Some).collect();
    Ok(keep.into_iter().map(|i| slots[i].take().expect("unique index")).collect())
}

fn fitness_of(pool: &[Individual], max_depth: usize) -> Result<Vec<Fitness>, EvolutionError> {
    pool.iter()
        .map(|i| current_fitness(i, max_depth).ok_or(EvolutionError::NotEvaluated(i.id)))
        .collect()
}

/// Non-dominated members of `population`, in population order.
pub fn frontier(population: &[Individual], max_depth: usize) -> Result<Vec<Individual>, EvolutionError> {
    let points = fitness_of(population, max_depth)?;
    let fronts = fast_nondominated_sort(&points);
    Ok(fronts
        .first()
        .map(|f| f.iter().map(|&i| population[i].clone()).collect())
        .unwrap_or_default())
}

/// Highest objective 1; ties prefer lower complexity, then lower id.
pub fn final_pick(front: &[Individual], max_depth: usize) -> Option<(Individual, Fitness)> {
    front
        .iter()
        .filter_map(|i| current_fitness(i, max_depth).map(|f| (i, f)))
        .max_by(|(a, fa), (b, fb)| {
            fa.objective1
                .total_cmp(&fb.objective1)
                .then(fb.objective2.cmp(&fa.objective2))
                .then(b.id.cmp(&a.id))
        })
        .map(|(i, f)| (i.clone(), f))
}

struct Engine<'a> {
    cfg: &'a EvolutionConfig,
    train: &'a Dataset,
    pool: Option<rayon::ThreadPool>,
    next_id: u64,
    total_evaluations: u64,
}

impl<'a> Engine<'a> {
    fn fresh(&mut self, tree: PipelineTree, generation: usize) -> Individual {
        let ind = Individual::new(self.next_id, tree, generation);
        self.next_id += 1;
        ind
    }

    /// Scores `targets` under the fold seed of `generation` and appends the
    /// result to their ledgers. Returns the number of models trained.
    fn evaluate(&mut self, targets: &mut [&mut Individual], generation: usize) -> Result<u64, EvolutionError> {
        let k = self.cfg.k;
        let plan = stratified_kfold(self.train, k, self.cfg.fold_seed(generation)).map_err(fitness::FitnessError::from)?;
        let trees: Vec<&PipelineTree> = targets.iter().map(|i| &i.tree).collect();
        let tasks: Vec<(usize, usize)> = (0..trees.len()).flat_map(|t| (0..k).map(move |f| (t, f))).collect();
        let run = || -> Vec<Option<f64>> {
            tasks
                .par_iter()
                .map(|&(t, f)| fitness::fold_score(trees[t], self.train, &plan, f).ok())
                .collect()
        };
        let scores = match &self.pool {
            Some(pool) => pool.install(run),
            None => run(),
        };
        for (t, ind) in targets.iter_mut().enumerate() {
            let folds = &scores[t * k..(t + 1) * k];
            if folds.iter().all(Option::is_some) {
                let mean = folds.iter().map(|s| s.unwrap()).sum::<f64>() / k as f64;
                fitness::record_generation(ind, mean, generation)?;
            } else {
                fitness::record_failure(ind, generation)?;
            }
        }
        let trained = (targets.len() * k) as u64;
        self.total_evaluations += trained;
        Ok(trained)
    }

    fn breed(&mut self, population: &[Individual], generation: usize) -> Result<Vec<Individual>, EvolutionError> {
        let points = fitness_of(population, self.cfg.max_depth)?;
        let mut rank = vec![0usize; population.len()];
        let mut crowding = vec![0.0; population.len()];
        for (r, front) in fast_nondominated_sort(&points).iter().enumerate() {
            let members: Vec<Fitness> = front.iter().map(|&i| points[i]).collect();
            for (&i, d) in front.iter().zip(crowding_distance(&members)) {
                rank[i] = r;
                crowding[i] = d;
            }
        }
        let better = |a: usize, b: usize| {
            let key = |i: usize| (rank[i], std::cmp::Reverse(ordered(crowding[i])), population[i].id);
            if key(a) <= key(b) {
                a
            } else {
                b
            }
        };
        let mut rng = seed::rng(seed::derive(self.cfg.master_seed, &[VARIATION_TAG, generation as u64]));
        let n = population.len();
        let mut children = Vec::with_capacity(self.cfg.offspring_size);
        for _ in 0..self.cfg.offspring_size {
            let op_seed: u64 = rng.gen();
            let tournament = |rng: &mut rand_chacha::ChaCha8Rng| better(rng.gen_range(0..n), rng.gen_range(0..n));
            let tree = if rng.gen_bool(self.cfg.crossover_rate) {
                let a = tournament(&mut rng);
                let b = tournament(&mut rng);
                pipeline::crossover(&population[a].tree, &population[b].tree, op_seed, self.cfg.max_depth)
            } else {
                let a = tournament(&mut rng);
                pipeline::mutate(&population[a].tree, op_seed, self.cfg.max_depth)
            };
            children.push(self.fresh(tree, generation));
        }
        Ok(children)
    }

    fn log(&self, population: &[Individual], generation: usize, performed: u64) -> Result<GenerationLog, EvolutionError> {
        let max_depth = self.cfg.max_depth;
        let best_objective1 = fitness_of(population, max_depth)?
            .iter()
            .map(|f| f.objective1)
            .fold(f64::NEG_INFINITY, f64::max);
        let frontier = frontier(population, max_depth)?
            .iter()
            .map(|i| {
                let f = current_fitness(i, max_depth).expect("evaluated");
                FrontierEntry {
                    id: i.id,
                    pipeline: i.tree.to_string(),
                    objective1: f.objective1,
                    objective2: f.objective2,
                    birth_generation: i.birth_generation(),
                }
            })
            .collect();
        Ok(GenerationLog {
            generation,
            evaluations_performed: performed,
            total_evaluations: self.total_evaluations,
            best_objective1,
            frontier,
        })
    }
}

/// Total-order wrapper for crowding distances (which may be infinite).
fn ordered(v: f64) -> u64 {
    let bits = v.to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | (1 << 63)
    }
}

pub fn evolve(cfg: &EvolutionConfig, train: &Dataset) -> Result<EvolutionResult, EvolutionError> {
    evolve_with(cfg, train, |_| {})
}

/// Runs the search, handing each generation's log to `observer` as soon as
/// the generation completes.
pub fn evolve_with(
    cfg: &EvolutionConfig,
    train: &Dataset,
    mut observer: impl FnMut(&GenerationLog),
) -> Result<EvolutionResult, EvolutionError> {
    cfg.validate()?;
    if train.len() < cfg.k {
        return Err(EvolutionError::TooFewRows { rows: train.len(), k: cfg.k });
    }
    let started = Instant::now();
    let pool = match cfg.workers {
        Some(w) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| EvolutionError::Workers(e.to_string()))?,
        ),
        None => None,
    };
    let mut engine = Engine {
        cfg,
        train,
        pool,
        next_id: 0,
        total_evaluations: 0,
    };

    let mut population: Vec<Individual> = (0..cfg.population_size)
        .map(|i| {
            let tree = pipeline::random_pipeline(seed::derive(cfg.master_seed, &[INIT_TAG, i as u64]), cfg.max_depth);
            engine.fresh(tree, 0)
        })
        .collect();
    let performed = engine.evaluate(&mut population.iter_mut().collect::<Vec<_>>(), 0)?;
    let mut logs = vec![engine.log(&population, 0, performed)?];
    observer(&logs[0]);

    let out_of_time = |started: &Instant| {
        cfg.time_budget_seconds
            .is_some_and(|b| started.elapsed().as_secs_f64() >= b)
    };
    let mut generation = 0;
    loop {
        if cfg.max_generations.is_some_and(|m| generation >= m) {
            break;
        }
        if out_of_time(&started) {
            if generation == 0 {
                return Err(EvolutionError::InsufficientBudget {
                    budget_seconds: cfg.time_budget_seconds.unwrap_or_default(),
                });
            }
            break;
        }
        generation += 1;
        let mut offspring = engine.breed(&population, generation)?;
        let performed = match cfg.mode {
            FitnessMode::Dynamic => {
                let mut targets: Vec<&mut Individual> = population.iter_mut().chain(offspring.iter_mut()).collect();
                engine.evaluate(&mut targets, generation)?
            }
            FitnessMode::Static => engine.evaluate(&mut offspring.iter_mut().collect::<Vec<_>>(), generation)?,
        };
        population = match cfg.selection {
            SurvivorSelection::Nsga2 => {
                let mut pool = population;
                pool.extend(offspring);
                nsga2_select(pool, cfg.population_size, cfg.max_depth)?
            }
            SurvivorSelection::RetainPopulation => population,
        };
        let log = engine.log(&population, generation, performed)?;
        observer(&log);
        logs.push(log);
    }

    let front = frontier(&population, cfg.max_depth)?;
    let (final_pick, final_fitness) = final_pick(&front, cfg.max_depth).expect("non-empty frontier");
    Ok(EvolutionResult {
        final_pick,
        final_fitness,
        frontier: front,
        population,
        logs,
        generations_completed: generation,
        total_evaluations: engine.total_evaluations,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Matrix;
    use crate::synthetic::{self, SyntheticSpec};

    fn f(o1: f64, o2: usize) -> Fitness {
        Fitness {
            objective1: o1,
            objective2: o2,
        }
    }

    fn small_data() -> Dataset {
        synthetic::generate(&SyntheticSpec {
            rows: 80,
            features: 4,
            classes: 2,
            separation: 2.0,
            label_noise: 0.1,
            seed: 3,
        })
    }

    #[test]
    fn sort_examples() {
        assert_eq!(fast_nondominated_sort(&[f(90.0, 2), f(80.0, 1), f(70.0, 3)]), vec![vec![0, 1], vec![2]]);
        assert_eq!(fast_nondominated_sort(&[f(5.0, 1); 4]), vec![vec![0, 1, 2, 3]]);
        assert_eq!(fast_nondominated_sort(&[f(50.0, 1), f(60.0, 1)]), vec![vec![1], vec![0]]);
    }

    #[test]
    fn crowding_examples() {
        assert!(crowding_distance(&[f(1.0, 1), f(2.0, 2)]).iter().all(|d| d.is_infinite()));
        let d = crowding_distance(&[f(10.0, 1), f(20.0, 2), f(30.0, 3)]);
        assert!(d[0].is_infinite() && d[2].is_infinite());
        assert_eq!(d[1], 2.0);
        let dup = crowding_distance(&[f(10.0, 2), f(10.0, 2), f(10.0, 2), f(10.0, 2)]);
        assert!(dup[0].is_infinite() && dup[3].is_infinite());
        assert_eq!((dup[1], dup[2]), (0.0, 0.0));
    }

    #[test]
    fn select_examples() {
        // a, b non-dominated; c, d dominated by both.
        let pts = [f(90.0, 2), f(80.0, 1), f(70.0, 3), f(60.0, 4)];
        assert_eq!(nsga2_select_indices(&pts, &[0, 1, 2, 3], 2).unwrap(), vec![0, 1]);
        let cut = [f(10.0, 1), f(20.0, 2), f(30.0, 3)];
        let mut picked = nsga2_select_indices(&cut, &[0, 1, 2], 2).unwrap();
        picked.sort();
        assert_eq!(picked, vec![0, 2]);
        let all = nsga2_select_indices(&pts, &[0, 1, 2, 3], 4).unwrap();
        assert_eq!(all, vec![0, 1, 2, 3]);
        assert!(matches!(
            nsga2_select_indices(&pts, &[0, 1, 2, 3], 5),
            Err(EvolutionError::PoolTooSmall { .. })
        ));
    }

    #[test]
    fn accounting_examples() {
        assert_eq!(evaluation_count(FitnessMode::Dynamic, 5, 10, 20, 20), 2000 + 100);
        assert_eq!(repeated_kfold_count(3, 5, 10, 20), 3000);
        assert!(evaluation_count(FitnessMode::Dynamic, 5, 10, 20, 20) - 100 < repeated_kfold_count(3, 5, 10, 20));
        assert_eq!(evaluation_count(FitnessMode::Static, 5, 10, 20, 20), 1000 + 100);
        assert_eq!(evaluation_count(FitnessMode::Dynamic, 5, 0, 20, 7), 100);
    }

    #[test]
    fn config_validation() {
        let ok = EvolutionConfig::default();
        assert!(ok.validate().is_ok());
        let none = EvolutionConfig {
            max_generations: None,
            time_budget_seconds: None,
            ..ok.clone()
        };
        assert!(none.validate().is_err());
        let zero_time = EvolutionConfig {
            time_budget_seconds: Some(0.0),
            ..ok.clone()
        };
        assert!(zero_time.validate().is_err());
        assert!(EvolutionConfig { population_size: 1, ..ok }.validate().is_err());
    }

    #[test]
    fn zero_generations_dynamic_equals_static() {
        let d = small_data();
        let base = EvolutionConfig {
            population_size: 6,
            offspring_size: 6,
            max_generations: Some(0),
            master_seed: 11,
            ..EvolutionConfig::default()
        };
        let dy = evolve(&base, &d).unwrap();
        let st = evolve(&EvolutionConfig { mode: FitnessMode::Static, ..base }, &d).unwrap();
        assert_eq!(dy.generations_completed, 0);
        assert_eq!(dy.final_pick.tree, st.final_pick.tree);
        assert_eq!(dy.final_fitness, st.final_fitness);
        assert_eq!(dy.total_evaluations, 30);
    }

    #[test]
    fn dynamic_ledgers_are_contiguous_and_frontier_fresh() {
        let d = small_data();
        let cfg = EvolutionConfig {
            population_size: 8,
            offspring_size: 8,
            max_generations: Some(5),
            master_seed: 2,
            ..EvolutionConfig::default()
        };
        let mut frontier_ids = Vec::new();
        let r = evolve_with(&cfg, &d, |log| frontier_ids.push(log.frontier.iter().map(|e| e.id).collect::<Vec<_>>()))
            .unwrap();
        for ind in &r.population {
            let gens: Vec<usize> = ind.ledger.entries().iter().map(|e| e.0).collect();
            let expected: Vec<usize> = (ind.birth_generation()..=r.generations_completed).collect();
            assert_eq!(gens, expected);
        }
        let pop_ids: Vec<u64> = r.population.iter().map(|i| i.id).collect();
        assert!(frontier_ids.last().unwrap().iter().all(|id| pop_ids.contains(id)));
        let best = r.frontier.iter().map(|i| current_fitness(i, 6).unwrap().objective1).fold(f64::MIN, f64::max);
        assert_eq!(r.final_fitness.objective1, best);
        assert_eq!(r.final_age(), r.generations_completed - r.final_pick.birth_generation());
    }

    #[test]
    fn static_scores_never_change() {
        let d = small_data();
        let cfg = EvolutionConfig {
            population_size: 6,
            offspring_size: 6,
            max_generations: Some(4),
            mode: FitnessMode::Static,
            ..EvolutionConfig::default()
        };
        let r = evolve(&cfg, &d).unwrap();
        for ind in &r.population {
            assert_eq!(ind.ledger.len(), 1);
            let fit = static_equivalent(&ind.tree, &d, &cfg);
            assert_eq!(current_fitness(ind, cfg.max_depth).unwrap(), fit);
        }
    }

    fn static_equivalent(t: &PipelineTree, d: &Dataset, cfg: &EvolutionConfig) -> Fitness {
        fitness::static_fitness(t, d, cfg.k, cfg.master_seed, cfg.max_depth)
    }

    #[test]
    fn replay_is_deterministic_across_workers() {
        let d = small_data();
        let cfg = EvolutionConfig {
            population_size: 6,
            offspring_size: 6,
            max_generations: Some(3),
            master_seed: 5,
            workers: Some(1),
            ..EvolutionConfig::default()
        };
        let a = evolve(&cfg, &d).unwrap();
        let b = evolve(&EvolutionConfig { workers: Some(3), ..cfg }, &d).unwrap();
        assert_eq!(a.final_pick.tree.to_string(), b.final_pick.tree.to_string());
        assert_eq!(a.logs, b.logs);
    }

    #[test]
    fn too_few_rows() {
        let d = Dataset::from_labels(Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]), &["a", "b", "a"]).unwrap();
        assert!(matches!(evolve(&EvolutionConfig::default(), &d), Err(EvolutionError::TooFewRows { .. })));
    }

    #[test]
    fn tiny_time_budget_is_insufficient() {
        let d = small_data();
        let cfg = EvolutionConfig {
            max_generations: None,
            time_budget_seconds: Some(1e-9),
            ..EvolutionConfig::default()
        };
        assert!(matches!(evolve(&cfg, &d), Err(EvolutionError::InsufficientBudget { .. })));
    }
}
