//! Seeded synthetic classification data for tests, benchmarks and the
//! desk-scale comparison experiment.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Matrix};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub rows: usize,
    pub features: usize,
    pub classes: usize,
    /// Scale of the class-centre offsets on the informative features, in
    /// units of the within-class standard deviation.
    pub separation: f64,
    /// Fraction of rows whose label is flipped to another class.
    pub label_noise: f64,
    pub seed: u64,
}

/// Gaussian blobs: the first `max(1, features / 2)` columns carry class
/// signal, the rest are pure noise. Classes are balanced before noise is
/// injected; exactly `round(label_noise * rows)` labels are flipped.
pub fn generate(spec: &SyntheticSpec) -> Dataset {
    assert!(spec.classes >= 2 && spec.features >= 1 && spec.rows >= 2 * spec.classes);
    let mut rng = seed::rng(spec.seed);
    let informative = (spec.features / 2).max(1);
    let centres: Vec<Vec<f64>> = (0..spec.classes)
        .map(|_| {
            (0..informative)
                .map(|_| rng.sample::<f64, _>(StandardNormal) * spec.separation)
                .collect()
        })
        .collect();

    let mut labels: Vec<usize> = (0..spec.rows).map(|i| i % spec.classes).collect();
    let mut data = Vec::with_capacity(spec.rows * spec.features);
    for &l in &labels {
        for j in 0..spec.features {
            let noise: f64 = rng.sample(StandardNormal);
            data.push(if j < informative { centres[l][j] + noise } else { noise });
        }
    }

    let flips = (spec.label_noise * spec.rows as f64).round() as usize;
    let mut rows: Vec<usize> = (0..spec.rows).collect();
    rows.shuffle(&mut rng);
    for &r in rows.iter().take(flips.min(spec.rows)) {
        let shift = rng.gen_range(1..spec.classes);
        labels[r] = (labels[r] + shift) % spec.classes;
    }

    let classes = (0..spec.classes).map(|c| format!("class_{c}")).collect();
    Dataset::new(
        Matrix::new(spec.rows, spec.features, data).expect("shape"),
        labels,
        classes,
    )
    .expect("synthetic dataset is valid")
}

/// Renders a dataset as CSV with columns `f0..fN,label`.
pub fn to_csv(d: &Dataset) -> String {
    let mut out = String::new();
    let header: Vec<String> = (0..d.n_features()).map(|j| format!("f{j}")).collect();
    out.push_str(&header.join(","));
    out.push_str(",label\n");
    for (row, &l) in d.features().iter_rows().zip(d.labels()) {
        for v in row {
            out.push_str(&format!("{v},"));
        }
        out.push_str(d.label_name(l));
        out.push('\n');
    }
    out
}
