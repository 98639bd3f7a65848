use crate::data::Matrix;

use super::argmax_first;

/// Gaussian naive Bayes over the classes present in training.
#[derive(Debug, Clone)]
pub struct GaussianNb {
    classes: Vec<usize>,
    log_prior: Vec<f64>,
    mean: Vec<Vec<f64>>,
    var: Vec<Vec<f64>>,
}

/// Variance floor relative to the largest feature variance.
const VAR_SMOOTHING: f64 = 1e-9;

impl GaussianNb {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize) -> Self {
        let d = x.cols();
        let n = y.len() as f64;
        let mut counts = vec![0usize; n_classes];
        let mut sums = vec![vec![0.0; d]; n_classes];
        for (row, &l) in x.iter_rows().zip(y) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(row) {
                *s += v;
            }
        }
        let classes: Vec<usize> = (0..n_classes).filter(|&c| counts[c] > 0).collect();
        let mean: Vec<Vec<f64>> = classes
            .iter()
            .map(|&c| sums[c].iter().map(|s| s / counts[c] as f64).collect())
            .collect();
        let mut var = vec![vec![0.0; d]; classes.len()];
        for (row, &l) in x.iter_rows().zip(y) {
            let ci = classes.binary_search(&l).expect("present class");
            for j in 0..d {
                let e = row[j] - mean[ci][j];
                var[ci][j] += e * e;
            }
        }
        for (ci, &c) in classes.iter().enumerate() {
            for v in &mut var[ci] {
                *v /= counts[c] as f64;
            }
        }

        let max_feature_var = (0..d)
            .map(|j| {
                let m = x.column(j).sum::<f64>() / n;
                x.column(j).map(|v| (v - m) * (v - m)).sum::<f64>() / n
            })
            .fold(0.0, f64::max);
        let eps = if max_feature_var > 0.0 {
            VAR_SMOOTHING * max_feature_var
        } else {
            VAR_SMOOTHING
        };
        for v in var.iter_mut().flatten() {
            *v += eps;
        }

        Self {
            log_prior: classes.iter().map(|&c| (counts[c] as f64 / n).ln()).collect(),
            classes,
            mean,
            var,
        }
    }

    fn joint_log_likelihood(&self, row: &[f64]) -> Vec<f64> {
        (0..self.classes.len())
            .map(|ci| {
                let ll: f64 = row
                    .iter()
                    .zip(&self.mean[ci])
                    .zip(&self.var[ci])
                    .map(|((x, m), v)| -0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (x - m) * (x - m) / v))
                    .sum();
                self.log_prior[ci] + ll
            })
            .collect()
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        self.classes[argmax_first(self.joint_log_likelihood(row))]
    }
}
