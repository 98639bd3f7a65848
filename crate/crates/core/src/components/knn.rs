use crate::data::Matrix;

use super::argmax_first;

/// k-nearest-neighbours vote over squared Euclidean distance.
#[derive(Debug, Clone)]
pub struct Knn {
    train: Matrix,
    labels: Vec<usize>,
    n_classes: usize,
    k: usize,
    distance_weighted: bool,
}

impl Knn {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, k: usize, distance_weighted: bool) -> Self {
        Self {
            train: x.clone(),
            labels: y.to_vec(),
            n_classes,
            k: k.clamp(1, y.len()),
            distance_weighted,
        }
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        let mut dist: Vec<(f64, usize)> = self
            .train
            .iter_rows()
            .enumerate()
            .map(|(i, t)| (t.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        // Distance ties resolve to the lower training row.
        let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, by_dist);
            dist.truncate(self.k);
        }
        dist.sort_by(by_dist);

        let mut votes = vec![0.0; self.n_classes];
        let exact = dist.iter().any(|(d, _)| *d == 0.0);
        for &(d, i) in &dist {
            let w = if !self.distance_weighted {
                1.0
            } else if exact {
                // Exact matches outvote everything else.
                if d == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                1.0 / d.sqrt()
            };
            votes[self.labels[i]] += w;
        }
        argmax_first(votes)
    }
}
