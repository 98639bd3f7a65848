//! Acceptance suite: one check per criterion, each printing a PASS/FAIL line.
//! Runs without the libtest harness so the lines always reach the console.

use std::collections::BTreeSet;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use evoml::analysis::{render_table, wilcoxon_signed_rank, ComparisonDocument, PairedTest, RunReport};
use evoml::evolution::{evaluation_count, evolve, fast_nondominated_sort, nsga2_select_indices};
use evoml::fitness::{kfold_score, weighted_f1};
use evoml::synthetic::{generate, to_csv, SyntheticSpec};
use evoml::{EvolutionConfig, Fitness, FitnessMode, SurvivorSelection};
use evoml_cli::commands::{RunReportSet, COMPARISON_FILE, RUN_REPORTS_FILE, SENSITIVITY_FILE};
use evoml_cli::{cmd_compare, resolve, Extra, SearchFlags};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

// ---------------------------------------------------------------------------
// Independent oracles

/// Weighted F1 from an explicit confusion matrix.
fn f1_oracle(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> f64 {
    let mut cm = vec![vec![0u64; n_classes]; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        cm[t][p] += 1;
    }
    let mut total = 0.0;
    for c in 0..n_classes {
        let tp = cm[c][c] as f64;
        let row: f64 = cm[c].iter().sum::<u64>() as f64;
        let col: f64 = (0..n_classes).map(|r| cm[r][c]).sum::<u64>() as f64;
        let precision = if col == 0.0 { 0.0 } else { tp / col };
        let recall = if row == 0.0 { 0.0 } else { tp / row };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        total += row * f1;
    }
    100.0 * total / y_true.len() as f64
}

fn dominates(a: &Fitness, b: &Fitness) -> bool {
    a.objective1 >= b.objective1
        && a.objective2 <= b.objective2
        && (a.objective1 > b.objective1 || a.objective2 < b.objective2)
}

/// Peels non-dominated layers by exhaustive pairwise checks.
fn brute_force_fronts(points: &[Fitness]) -> Vec<Vec<usize>> {
    let mut remaining: BTreeSet<usize> = (0..points.len()).collect();
    let mut fronts = Vec::new();
    while !remaining.is_empty() {
        let front: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| !remaining.iter().any(|&j| dominates(&points[j], &points[i])))
            .collect();
        for i in &front {
            remaining.remove(i);
        }
        fronts.push(front);
    }
    fronts
}

/// Textbook crowding distance: per objective, neighbours in (value, index)
/// order, normalised by the objective's range; extremes are infinite.
fn reference_crowding(points: &[Fitness], members: &[usize]) -> Vec<f64> {
    let n = members.len();
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let mut d = vec![0.0; n];
    for obj in 0..2 {
        let val = |m: usize| -> f64 {
            let p = &points[members[m]];
            if obj == 0 {
                p.objective1
            } else {
                p.objective2 as f64
            }
        };
        let mut keyed: Vec<(f64, usize)> = (0..n).map(|m| (val(m), m)).collect();
        keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let span = keyed[n - 1].0 - keyed[0].0;
        d[keyed[0].1] = f64::INFINITY;
        d[keyed[n - 1].1] = f64::INFINITY;
        for pos in 1..n - 1 {
            if span > 0.0 {
                d[keyed[pos].1] += (keyed[pos + 1].0 - keyed[pos - 1].0) / span;
            }
        }
    }
    d
}

fn reference_select(points: &[Fitness], ids: &[u64], n: usize) -> BTreeSet<usize> {
    let mut chosen = BTreeSet::new();
    for front in brute_force_fronts(points) {
        let room = n - chosen.len();
        if room == 0 {
            break;
        }
        if front.len() <= room {
            chosen.extend(front);
            continue;
        }
        let cd = reference_crowding(points, &front);
        let mut ranked: Vec<usize> = (0..front.len()).collect();
        ranked.sort_by(|&a, &b| cd[b].partial_cmp(&cd[a]).unwrap().then(ids[front[a]].cmp(&ids[front[b]])));
        chosen.extend(ranked[..room].iter().map(|&j| front[j]));
    }
    chosen
}

/// Two-sided p by enumerating every sign assignment of the non-zero |d| ranks.
fn enumerated_wilcoxon_p(diffs: &[f64]) -> f64 {
    let nz: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    let n = nz.len();
    let ranks: Vec<f64> = (0..n)
        .map(|i| {
            let a = nz[i].abs();
            let below = nz.iter().filter(|d| d.abs() < a).count() as f64;
            let equal = nz.iter().filter(|d| d.abs() == a).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect();
    let total: f64 = ranks.iter().sum();
    let wp: f64 = (0..n).filter(|&i| nz[i] > 0.0).map(|i| ranks[i]).sum();
    let observed = wp.min(total - wp);
    let hits = (0u32..1 << n)
        .filter(|mask| {
            let s: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
            s.min(total - s) <= observed + 1e-9
        })
        .count();
    (hits as f64 / (1u64 << n) as f64).min(1.0)
}

// ---------------------------------------------------------------------------
// Criteria

fn criterion_1() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let classes = rng.gen_range(2..=5);
        let len = rng.gen_range(1..=200);
        let t: Vec<usize> = (0..len).map(|_| rng.gen_range(0..classes)).collect();
        let p: Vec<usize> = (0..len).map(|_| rng.gen_range(0..classes)).collect();
        let got = weighted_f1(&t, &p, classes).map_err(|e| e.to_string())?;
        worst = worst.max((got - f1_oracle(&t, &p, classes)).abs());
    }
    ensure(worst <= 1e-9, format!("max deviation {worst:e}"))?;
    let example = weighted_f1(&[0, 0, 0, 1], &[0, 0, 1, 1], 2).map_err(|e| e.to_string())?;
    ensure((example * 1000.0).round() / 1000.0 == 76.667, format!("example gave {example}"))?;
    ensure((example - 230.0 / 3.0).abs() < 1e-12, format!("example {example} != 230/3"))?;
    Ok(format!("1000 pairs, max deviation {worst:.1e}; example {example:.3}"))
}

fn criterion_2() -> Check {
    let train = generate(&SyntheticSpec {
        rows: 200,
        features: 6,
        classes: 3,
        separation: 1.5,
        label_noise: 0.1,
        seed: 22,
    });
    let master = 1000;
    // Generation 0 plus five further generations: six scoring rounds with
    // fold seeds master..master+5.
    let cfg = EvolutionConfig {
        population_size: 20,
        offspring_size: 4,
        max_generations: Some(5),
        mode: FitnessMode::Dynamic,
        master_seed: master,
        selection: SurvivorSelection::RetainPopulation,
        ..EvolutionConfig::default()
    };
    let result = evolve(&cfg, &train).map_err(|e| e.to_string())?;
    ensure(result.population.len() == 20, "population changed size")?;
    let mut worst: f64 = 0.0;
    for ind in &result.population {
        ensure(ind.birth_generation() == 0, format!("individual {} is not an original", ind.id))?;
        ensure(ind.ledger.len() == 6, format!("ledger of {} has {} entries", ind.id, ind.ledger.len()))?;
        let direct: f64 = (0..6)
            .map(|s| kfold_score(&ind.tree, &train, 5, master + s).unwrap_or(0.0))
            .sum::<f64>()
            / 6.0;
        let mean = ind.ledger.mean().ok_or("empty ledger")?;
        worst = worst.max((mean - direct).abs());
    }
    ensure(worst <= 1e-9, format!("max deviation {worst:e}"))?;
    Ok(format!("20 pipelines x 6 generations, max deviation {worst:.1e}"))
}

fn criterion_3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let train = generate(&SyntheticSpec {
        rows: 60,
        features: 4,
        classes: 2,
        separation: 1.5,
        label_noise: 0.1,
        seed: 33,
    });
    for case in 0..10 {
        let cfg = EvolutionConfig {
            population_size: rng.gen_range(2..=12),
            offspring_size: rng.gen_range(1..=12),
            k: rng.gen_range(2..=5),
            max_generations: Some(rng.gen_range(0..=5)),
            mode: if rng.gen_bool(0.5) { FitnessMode::Dynamic } else { FitnessMode::Static },
            master_seed: rng.gen(),
            ..EvolutionConfig::default()
        };
        let r = evolve(&cfg, &train).map_err(|e| e.to_string())?;
        let (k, pop, off) = (cfg.k as u64, cfg.population_size as u64, cfg.offspring_size as u64);
        for log in &r.logs {
            let g = log.generation as u64;
            let expected = evaluation_count(cfg.mode, k, g, pop, off);
            ensure(
                log.total_evaluations == expected,
                format!("case {case} gen {g}: logged {} expected {expected}", log.total_evaluations),
            )?;
        }
        let g = r.generations_completed as u64;
        let closed = match cfg.mode {
            FitnessMode::Dynamic => k * g * (off + pop) + k * pop,
            FitnessMode::Static => k * g * off + k * pop,
        };
        ensure(
            r.total_evaluations == closed,
            format!("case {case}: total {} expected {closed}", r.total_evaluations),
        )?;
    }
    Ok("10 random configs match k*g*(off+pop) / k*g*off plus k*pop".into())
}

fn criterion_4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..500 {
        let len = rng.gen_range(1..=30);
        let coarse = rng.gen_bool(0.5);
        let points: Vec<Fitness> = (0..len)
            .map(|_| Fitness {
                objective1: if coarse {
                    rng.gen_range(0..6) as f64 * 10.0
                } else {
                    rng.gen_range(0.0..100.0)
                },
                objective2: rng.gen_range(1..=7),
            })
            .collect();
        let mut ids: Vec<u64> = (0..len as u64).map(|i| i * 3 + 1).collect();
        ids.shuffle(&mut rng);
        let n = rng.gen_range(1..=len);

        let fronts = fast_nondominated_sort(&points);
        let reference = brute_force_fronts(&points);
        let sorted: Vec<Vec<usize>> = fronts
            .iter()
            .map(|f| {
                let mut f = f.clone();
                f.sort_unstable();
                f
            })
            .collect();
        ensure(sorted == reference, format!("pool {case}: fronts differ"))?;
        let got: BTreeSet<usize> = nsga2_select_indices(&points, &ids, n)
            .map_err(|e| e.to_string())?
            .into_iter()
            .collect();
        ensure(got.len() == n, format!("pool {case}: selected {} of {n}", got.len()))?;
        ensure(got == reference_select(&points, &ids, n), format!("pool {case}: selection differs"))?;
    }
    Ok("500 pools match brute-force fronts and reference crowding selection".into())
}

fn criterion_5() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    let mut by_n = [0usize; 13];
    while checked < 200 {
        let n = 5 + checked % 8;
        let integer = rng.gen_bool(0.5);
        let diffs: Vec<f64> = (0..n)
            .map(|_| {
                if integer {
                    rng.gen_range(-3i32..=3) as f64
                } else {
                    rng.gen_range(-1.0..1.0)
                }
            })
            .collect();
        let Ok(w) = wilcoxon_signed_rank(&diffs) else {
            ensure(
                diffs.iter().filter(|d| **d != 0.0).count() < 5,
                format!("unexpected error on {diffs:?}"),
            )?;
            continue;
        };
        let oracle = enumerated_wilcoxon_p(&diffs);
        ensure(
            (w.p_value - oracle).abs() < 1e-12,
            format!("{diffs:?}: p {} vs enumeration {oracle}", w.p_value),
        )?;
        by_n[w.n] += 1;
        checked += 1;
    }
    let six = wilcoxon_signed_rank(&[0.3, 1.0, 2.0, 2.5, 4.0, 7.0]).map_err(|e| e.to_string())?;
    ensure(six.p_value == 0.03125, format!("n=6 all positive gave {}", six.p_value))?;
    ensure(six.statistic == 0.0, "n=6 all positive W != 0")?;
    let covered: Vec<usize> = (5..=12).filter(|&n| by_n[n] > 0).collect();
    Ok(format!(
        "200 vectors (n in {covered:?}) match enumeration; n=6 p = {}",
        six.p_value
    ))
}

fn write_dataset(dir: &Path, name: &str, spec: &SyntheticSpec) -> PathBuf {
    let path = dir.join(format!("{name}.csv"));
    fs::write(&path, to_csv(&generate(spec))).expect("write dataset");
    path
}

fn strip_timing(text: &str) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(text).expect("valid json");
    if let Some(reports) = v.get_mut("reports").and_then(|r| r.as_array_mut()) {
        for r in reports {
            r.as_object_mut().unwrap().remove("wall_seconds");
        }
    }
    v
}

fn criterion_6() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data: Vec<PathBuf> = (0..2)
        .map(|i| {
            write_dataset(
                dir.path(),
                &format!("toy{i}"),
                &SyntheticSpec {
                    rows: 80,
                    features: 4,
                    classes: 2 + i,
                    separation: 1.2,
                    label_noise: 0.1,
                    seed: 60 + i as u64,
                },
            )
        })
        .collect();
    let mut outputs = Vec::new();
    for workers in [1, 4] {
        for attempt in 0..2 {
            let out = dir.path().join(format!("w{workers}_{attempt}"));
            let flags = SearchFlags {
                data: data.clone(),
                generations: Some(3),
                pop: Some(8),
                seed: Some(66),
                workers: Some(workers),
                out: Some(out.clone()),
                ..Default::default()
            };
            let rc = resolve(&flags, &Extra::default()).map_err(|e| e.to_string())?;
            cmd_compare(&rc).map_err(|e| e.to_string())?;
            let read = |f: &str| fs::read_to_string(out.join(f)).expect("output written");
            outputs.push((workers, read(COMPARISON_FILE), read(RUN_REPORTS_FILE), read(SENSITIVITY_FILE)));
        }
    }
    let first = &outputs[0];
    for (workers, comparison, runs, sensitivity) in &outputs[1..] {
        ensure(comparison == &first.1, format!("comparison.json differs at {workers} workers"))?;
        ensure(
            strip_timing(runs) == strip_timing(&first.2),
            format!("run reports differ at {workers} workers"),
        )?;
        ensure(sensitivity == &first.3, format!("seed sensitivity differs at {workers} workers"))?;
    }
    Ok("comparison JSON byte-identical across 2 runs x {1, 4} workers".into())
}

struct Experiment {
    doc: ComparisonDocument,
    reports: Vec<RunReport>,
    table: String,
    max_depth: usize,
}

fn run_experiment() -> Result<Experiment, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let shapes = [
        (300, 6, 2, 0.10),
        (360, 8, 3, 0.12),
        (420, 10, 2, 0.15),
        (480, 12, 3, 0.18),
        (600, 8, 2, 0.20),
    ];
    let data: Vec<PathBuf> = shapes
        .iter()
        .enumerate()
        .map(|(i, &(rows, features, classes, noise))| {
            write_dataset(
                dir.path(),
                &format!("noisy{i}"),
                &SyntheticSpec {
                    rows,
                    features,
                    classes,
                    separation: 1.0,
                    label_noise: noise,
                    seed: 700 + i as u64,
                },
            )
        })
        .collect();
    let out = dir.path().join("compare");
    let flags = SearchFlags {
        data,
        generations: Some(25),
        pop: Some(24),
        k: Some(5),
        seed: Some(2024),
        out: Some(out.clone()),
        ..Default::default()
    };
    let rc = resolve(&flags, &Extra::default()).map_err(|e| e.to_string())?;
    let doc = cmd_compare(&rc).map_err(|e| e.to_string())?;
    let set: RunReportSet =
        serde_json::from_str(&fs::read_to_string(out.join(RUN_REPORTS_FILE)).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let table = fs::read_to_string(out.join("comparison.txt")).map_err(|e| e.to_string())?;
    ensure(table == render_table(&doc), "stored table differs from document")?;
    Ok(Experiment {
        doc,
        reports: set.reports,
        table,
        max_depth: rc.evolution.max_depth,
    })
}

fn criterion_7(e: &Experiment) -> Check {
    let complete = e.doc.datasets.iter().filter(|d| d.complete()).count();
    ensure(complete >= 5, format!("only {complete} complete datasets"))?;
    ensure(e.reports.len() == 100, format!("{} run reports", e.reports.len()))?;
    let (dynamic, static_) = (e.doc.mean_difference.dynamic, e.doc.mean_difference.static_);
    let p = match &e.doc.performance_test {
        PairedTest::Computed { corrected_p, .. } => format!("corrected p {corrected_p:.4}"),
        PairedTest::InsufficientPairs { nonzero } => format!("insufficient pairs ({nonzero})"),
    };
    let t = &e.doc.tally;
    ensure(
        dynamic <= static_,
        format!("mean |x-mu| dynamic {dynamic:.3} > static {static_:.3}"),
    )?;
    Ok(format!(
        "mean |x-mu| dynamic {dynamic:.3} <= static {static_:.3}; W/L/D {}/{}/{}; {p}",
        t.wins, t.losses, t.draws
    ))
}

fn criterion_8(e: &Experiment) -> Check {
    let c = &e.doc.mean_complexity;
    ensure(c.dynamic.is_finite() && c.static_.is_finite(), "mean complexity missing")?;
    let d = &e.doc.dominance;
    let total = d.dynamic_dominates + d.static_dominates + d.neither;
    ensure(total == e.doc.datasets.len(), "dominance tally does not cover every dataset")?;
    for r in &e.reports {
        ensure(
            (1..=e.max_depth).contains(&r.complexity),
            format!("complexity {} outside [1, {}]", r.complexity, e.max_depth),
        )?;
    }
    Ok(format!(
        "mean complexity dynamic {:.2} / static {:.2}; dominance {}/{}/{}",
        c.dynamic, c.static_, d.dynamic_dominates, d.static_dominates, d.neither
    ))
}

fn criterion_9(e: &Experiment) -> Check {
    for r in &e.reports {
        ensure(
            r.age == r.generations_completed - r.birth_generation,
            format!(
                "{} {} {:?}: age {} != {} - {}",
                r.dataset_name, r.mode, r.replicate, r.age, r.generations_completed, r.birth_generation
            ),
        )?;
    }
    let mean_age = e.reports.iter().map(|r| r.age as f64).sum::<f64>() / e.reports.len() as f64;
    Ok(format!("{} reports, mean final-pick age {mean_age:.2}", e.reports.len()))
}

// ---------------------------------------------------------------------------

fn guarded<T>(f: impl FnOnce() -> Result<T, String>) -> Result<T, String> {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(r) => r,
        Err(p) => Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())),
    }
}

fn report(id: u32, title: &str, limit: Option<Duration>, elapsed: Duration, outcome: Check) -> bool {
    let over = limit.is_some_and(|l| elapsed > l);
    let (status, detail) = match (&outcome, over) {
        (Ok(d), false) => ("PASS", d.clone()),
        (Ok(d), true) => ("FAIL", format!("{d}; took longer than {:?}", limit.unwrap())),
        (Err(e), _) => ("FAIL", e.clone()),
    };
    println!(
        "criterion {id} [{status}] {title} ({:.2} s): {detail}",
        elapsed.as_secs_f64()
    );
    status == "PASS"
}

fn timed<T>(f: impl FnOnce() -> Result<T, String>) -> (Duration, Result<T, String>) {
    let start = Instant::now();
    let r = guarded(f);
    (start.elapsed(), r)
}

fn main() {
    // Accept and ignore libtest arguments passed by `cargo test`.
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let selected = |id: u32| filter.is_empty() || filter.iter().any(|f| f == &id.to_string());
    let secs = Duration::from_secs;
    let mut all_pass = true;

    type Simple = (u32, &'static str, Option<Duration>, fn() -> Check);
    let simple: [Simple; 6] = [
        (1, "weighted F1 oracle", Some(secs(5)), criterion_1),
        (2, "lifetime mean equals repeated CV", Some(secs(120)), criterion_2),
        (3, "evaluation accounting", Some(secs(60)), criterion_3),
        (4, "NSGA-II oracle", Some(secs(10)), criterion_4),
        (5, "Wilcoxon oracle", None, criterion_5),
        (6, "compare determinism across worker counts", None, criterion_6),
    ];
    for (id, title, limit, f) in simple {
        if selected(id) {
            let (t, r) = timed(f);
            all_pass &= report(id, title, limit, t, r);
        }
    }

    if [7, 8, 9].into_iter().any(selected) {
        let (t, experiment) = timed(run_experiment);
        println!("noisy synthetic 5x2 experiment finished in {:.1} s", t.as_secs_f64());
        if let Ok(e) = &experiment {
            print!("{}", e.table);
        }
        let linked: [(u32, &str, Option<Duration>, fn(&Experiment) -> Check); 3] = [
            (7, "directional generalisation experiment", Some(secs(1800)), criterion_7),
            (8, "complexity neutrality check", None, criterion_8),
            (9, "age reporting", None, criterion_9),
        ];
        for (id, title, limit, f) in linked {
            if selected(id) {
                let outcome = match &experiment {
                    Ok(e) => guarded(|| f(e)),
                    Err(err) => Err(format!("experiment failed: {err}")),
                };
                all_pass &= report(id, title, limit, t, outcome);
            }
        }
    }

    if !all_pass {
        println!("acceptance: FAILED");
        std::process::exit(1);
    }
    println!("acceptance: all selected criteria passed");
}
