//! Feature transformers: scaling, selection and projection.

use crate::data::Matrix;

fn column_mean(x: &Matrix, j: usize) -> f64 {
    x.column(j).sum::<f64>() / x.rows() as f64
}

fn column_var(x: &Matrix, j: usize) -> f64 {
    let m = column_mean(x, j);
    x.column(j).map(|v| (v - m) * (v - m)).sum::<f64>() / x.rows() as f64
}

/// Per-column `(v - offset) / scale`.
#[derive(Debug, Clone)]
pub struct Affine {
    offset: Vec<f64>,
    scale: Vec<f64>,
}

/// Zero divisors are replaced by 1.
fn guard(s: f64) -> f64 {
    if s > 0.0 && s.is_finite() {
        s
    } else {
        1.0
    }
}

impl Affine {
    pub fn standard(x: &Matrix) -> Self {
        let cols = 0..x.cols();
        Self {
            offset: cols.clone().map(|j| column_mean(x, j)).collect(),
            scale: cols.map(|j| guard(column_var(x, j).sqrt())).collect(),
        }
    }

    pub fn min_max(x: &Matrix) -> Self {
        let (mut lo, mut hi) = (Vec::new(), Vec::new());
        for j in 0..x.cols() {
            lo.push(x.column(j).fold(f64::INFINITY, f64::min));
            hi.push(x.column(j).fold(f64::NEG_INFINITY, f64::max));
        }
        Self {
            scale: lo.iter().zip(&hi).map(|(l, h)| guard(h - l)).collect(),
            offset: lo,
        }
    }

    pub fn apply(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for i in 0..out.rows() {
            for ((v, o), s) in out.row_mut(i).iter_mut().zip(&self.offset).zip(&self.scale) {
                *v = (*v - o) / s;
            }
        }
        out
    }
}

/// Columns whose variance exceeds `threshold`. When none qualifies the single
/// highest-variance column is kept.
pub fn variance_threshold(x: &Matrix, threshold: f64) -> Vec<usize> {
    let vars: Vec<f64> = (0..x.cols()).map(|j| column_var(x, j)).collect();
    let keep: Vec<usize> = (0..x.cols()).filter(|&j| vars[j] > threshold).collect();
    if keep.is_empty() {
        vec![super::argmax_first(vars)]
    } else {
        keep
    }
}

/// One-way ANOVA F statistic of every column against the class labels.
pub fn anova_f(x: &Matrix, y: &[usize], n_classes: usize) -> Vec<f64> {
    let n = x.rows();
    let mut counts = vec![0usize; n_classes];
    for &l in y {
        counts[l] += 1;
    }
    let groups = counts.iter().filter(|&&c| c > 0).count();
    (0..x.cols())
        .map(|j| {
            if groups < 2 || n <= groups {
                return 0.0;
            }
            let grand = column_mean(x, j);
            let mut sums = vec![0.0; n_classes];
            for (v, &l) in x.column(j).zip(y) {
                sums[l] += v;
            }
            let means: Vec<f64> = sums
                .iter()
                .zip(&counts)
                .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
                .collect();
            let ssb: f64 = (0..n_classes).map(|c| counts[c] as f64 * (means[c] - grand).powi(2)).sum();
            let ssw: f64 = x.column(j).zip(y).map(|(v, &l)| (v - means[l]).powi(2)).sum();
            let between = ssb / (groups - 1) as f64;
            let within = ssw / (n - groups) as f64;
            if within > 0.0 {
                between / within
            } else if between > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .collect()
}

/// The `k` columns with the largest F statistic (ties to lower index),
/// returned in ascending column order. `k` is clamped to the column count.
pub fn select_k_best(x: &Matrix, y: &[usize], n_classes: usize, k: usize) -> Vec<usize> {
    let f = anova_f(x, y, n_classes);
    let mut order: Vec<usize> = (0..x.cols()).collect();
    order.sort_by(|&a, &b| f[b].total_cmp(&f[a]).then(a.cmp(&b)));
    order.truncate(k.clamp(1, x.cols()));
    order.sort_unstable();
    order
}

/// Principal component projection.
#[derive(Debug, Clone)]
pub struct Projection {
    mean: Vec<f64>,
    /// Unit eigenvectors of the covariance matrix, largest eigenvalue first.
    components: Vec<Vec<f64>>,
}

impl Projection {
    pub fn fit(x: &Matrix, n_components: usize) -> Self {
        let d = x.cols();
        let n = x.rows() as f64;
        let mean: Vec<f64> = (0..d).map(|j| column_mean(x, j)).collect();
        let mut cov = vec![vec![0.0; d]; d];
        for row in x.iter_rows() {
            for a in 0..d {
                let ea = row[a] - mean[a];
                for b in a..d {
                    cov[a][b] += ea * (row[b] - mean[b]);
                }
            }
        }
        for a in 0..d {
            for b in a..d {
                cov[a][b] /= n;
                cov[b][a] = cov[a][b];
            }
        }
        let (values, vectors) = jacobi_eigen(cov);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
        let components = order
            .into_iter()
            .take(n_components.clamp(1, d))
            .map(|i| {
                let mut v: Vec<f64> = (0..d).map(|r| vectors[r][i]).collect();
                // Sign convention: largest-magnitude entry positive.
                let pivot = v
                    .iter()
                    .enumerate()
                    .fold(0, |best, (j, x)| if x.abs() > v[best].abs() { j } else { best });
                if v[pivot] < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
                v
            })
            .collect();
        Self { mean, components }
    }

    pub fn apply(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.rows(), self.components.len());
        for (i, row) in x.iter_rows().enumerate() {
            for (c, comp) in self.components.iter().enumerate() {
                let v: f64 = row.iter().zip(&self.mean).zip(comp).map(|((x, m), w)| (x - m) * w).sum();
                out.set(i, c, v);
            }
        }
        out
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns the
/// eigenvalues and a matrix whose columns are the matching eigenvectors.
fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p][q] * a[p][q])
            .sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>().max(f64::MIN_POSITIVE);
        if off <= 1e-30 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Matrix {
        Matrix::from_rows(
            &(0..30)
                .map(|i| {
                    let t = i as f64;
                    vec![t, (t * 0.7).sin() * 5.0, 3.0, t * t * 0.01 - 2.0]
                })
                .collect::<Vec<_>>(),
        )
    }

    #[test]
    fn standard_scaler_normalizes() {
        let x = sample();
        let out = Affine::standard(&x).apply(&x);
        for j in 0..x.cols() {
            let m = column_mean(&out, j);
            let v = column_var(&out, j);
            assert!(m.abs() <= 1e-9);
            if j != 2 {
                assert!((v - 1.0).abs() <= 1e-9, "column {j} variance {v}");
            } else {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn min_max_in_unit_interval() {
        let x = sample();
        let out = Affine::min_max(&x).apply(&x);
        assert!(out.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn variance_threshold_drops_constant() {
        assert_eq!(variance_threshold(&sample(), 0.0), vec![0, 1, 3]);
        let flat = Matrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0]]);
        assert_eq!(variance_threshold(&flat, 0.0), vec![0]);
    }

    #[test]
    fn select_k_best_ranks_by_f_score() {
        // Column 1 separates the classes, column 0 is noise, column 2 constant.
        let x = Matrix::from_rows(&[
            vec![1.0, 0.0, 5.0],
            vec![2.0, 0.1, 5.0],
            vec![1.5, 10.0, 5.0],
            vec![1.2, 10.1, 5.0],
        ]);
        let y = [0, 0, 1, 1];
        let f = anova_f(&x, &y, 2);
        assert!(f[1] > f[0]);
        assert_eq!(f[2], 0.0);
        assert_eq!(select_k_best(&x, &y, 2, 1), vec![1]);
        assert_eq!(select_k_best(&x, &y, 2, 10), vec![0, 1, 2]);
    }

    #[test]
    fn anova_matches_hand_computation() {
        // groups {1,2,3} and {5,6,7}: SSB = 6 * 4 = 24, SSW = 4, F = 24 / (4/4) = 24
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0], vec![5.0], vec![6.0], vec![7.0]]);
        let f = anova_f(&x, &[0, 0, 0, 1, 1, 1], 2);
        assert!((f[0] - 24.0).abs() < 1e-12);
    }

    #[test]
    fn pca_rank_one_has_flat_second_component() {
        let dir = [1.0, -2.0, 0.5];
        let x = Matrix::from_rows(
            &(0..20)
                .map(|i| {
                    let t = (i as f64 * 1.3).cos() * 4.0;
                    dir.iter().map(|d| 7.0 + d * t).collect::<Vec<_>>()
                })
                .collect::<Vec<_>>(),
        );
        let p = Projection::fit(&x, 2);
        let out = p.apply(&x);
        assert_eq!(out.cols(), 2);
        assert!(column_var(&out, 1) <= 1e-9);
        assert!(column_var(&out, 0) > 1.0);
    }

    #[test]
    fn pca_clamps_to_arity() {
        let x = sample();
        assert_eq!(Projection::fit(&x, 10).apply(&x).cols(), 4);
    }

    #[test]
    fn jacobi_reconstructs_spectrum() {
        let a = vec![vec![4.0, 1.0, 0.5], vec![1.0, 3.0, 0.2], vec![0.5, 0.2, 1.0]];
        let (vals, vecs) = jacobi_eigen(a.clone());
        for k in 0..3 {
            for i in 0..3 {
                let av: f64 = (0..3).map(|j| a[i][j] * vecs[j][k]).sum();
                assert!((av - vals[k] * vecs[i][k]).abs() < 1e-10);
            }
        }
        assert!((vals.iter().sum::<f64>() - 8.0).abs() < 1e-10);
    }
}
