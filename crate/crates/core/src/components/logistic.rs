use crate::data::Matrix;

use super::argmax_first;

const ITERATIONS: usize = 200;

/// Multinomial logistic regression with an L2 penalty, fit by full-batch
/// gradient descent on internally standardized features.
#[derive(Debug, Clone)]
pub struct Logistic {
    classes: Vec<usize>,
    center: Vec<f64>,
    scale: Vec<f64>,
    /// Per present class: feature weights followed by the bias.
    weights: Vec<Vec<f64>>,
}

impl Logistic {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, l2: f64) -> Self {
        let n = x.rows();
        let d = x.cols();
        let mut present = vec![false; n_classes];
        for &l in y {
            present[l] = true;
        }
        let classes: Vec<usize> = (0..n_classes).filter(|&c| present[c]).collect();
        let target: Vec<usize> = y.iter().map(|l| classes.binary_search(l).unwrap()).collect();

        let center: Vec<f64> = (0..d).map(|j| x.column(j).sum::<f64>() / n as f64).collect();
        let scale: Vec<f64> = (0..d)
            .map(|j| {
                let v = x.column(j).map(|v| (v - center[j]).powi(2)).sum::<f64>() / n as f64;
                if v > 0.0 {
                    v.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let z: Vec<Vec<f64>> = x
            .iter_rows()
            .map(|r| r.iter().zip(&center).zip(&scale).map(|((v, c), s)| (v - c) / s).collect())
            .collect();

        let k = classes.len();
        let mut weights = vec![vec![0.0; d + 1]; k];
        if k < 2 {
            return Self {
                classes,
                center,
                scale,
                weights,
            };
        }

        // Softmax cross-entropy has curvature bounded by half the mean squared
        // row norm (bias included).
        let mean_sq = z.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>() + 1.0).sum::<f64>() / n as f64;
        let lr = 1.0 / (0.5 * mean_sq + l2);

        let mut grad = vec![vec![0.0; d + 1]; k];
        let mut probs = vec![0.0; k];
        for _ in 0..ITERATIONS {
            grad.iter_mut().flatten().for_each(|g| *g = 0.0);
            for (row, &t) in z.iter().zip(&target) {
                softmax(&weights, row, &mut probs);
                for c in 0..k {
                    let e = probs[c] - if c == t { 1.0 } else { 0.0 };
                    for j in 0..d {
                        grad[c][j] += e * row[j];
                    }
                    grad[c][d] += e;
                }
            }
            for c in 0..k {
                for j in 0..=d {
                    let mut g = grad[c][j] / n as f64;
                    if j < d {
                        g += l2 * weights[c][j];
                    }
                    weights[c][j] -= lr * g;
                }
            }
        }
        Self {
            classes,
            center,
            scale,
            weights,
        }
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        let d = self.center.len();
        let scores = self.weights.iter().map(|w| {
            let mut s = w[d];
            for j in 0..d {
                s += w[j] * (row[j] - self.center[j]) / self.scale[j];
            }
            s
        });
        self.classes[argmax_first(scores)]
    }
}

fn softmax(weights: &[Vec<f64>], row: &[f64], out: &mut [f64]) {
    let d = row.len();
    for (o, w) in out.iter_mut().zip(weights) {
        *o = w[d] + w[..d].iter().zip(row).map(|(a, b)| a * b).sum::<f64>();
    }
    let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for o in out.iter_mut() {
        *o = (*o - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}
