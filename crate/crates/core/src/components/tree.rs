//! CART decision tree with Gini impurity and axis-aligned threshold splits.

use crate::data::Matrix;

use super::modal_label;

#[derive(Debug, Clone, Copy)]
pub struct Params {
    pub max_depth: usize,
    pub min_leaf: usize,
}

#[derive(Debug, Clone)]
pub enum Node {
    Leaf(usize),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    pub fn predict(&self, row: &[f64]) -> usize {
        let mut node = self;
        loop {
            match node {
                Node::Leaf(label) => return *label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if row[*feature] <= *threshold { left } else { right },
            }
        }
    }

    #[cfg(test)]
    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, params: Params) -> Node {
    let rows: Vec<usize> = (0..x.rows()).collect();
    grow(x, y, n_classes, params, rows, 0)
}

/// n * gini = n - sum(c^2) / n
fn weighted_gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let sq: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
    n as f64 - sq / n as f64
}

struct Best {
    impurity: f64,
    feature: usize,
    threshold: f64,
}

fn grow(x: &Matrix, y: &[usize], n_classes: usize, params: Params, rows: Vec<usize>, depth: usize) -> Node {
    let labels: Vec<usize> = rows.iter().map(|&r| y[r]).collect();
    let leaf = modal_label(&labels, n_classes);
    let pure = labels.iter().all(|&l| l == labels[0]);
    let min_leaf = params.min_leaf.max(1);
    if pure || depth >= params.max_depth || rows.len() < 2 * min_leaf {
        return Node::Leaf(leaf);
    }

    let n = rows.len();
    let mut best: Option<Best> = None;
    let mut order = rows.clone();
    for feature in 0..x.cols() {
        order.sort_by(|&a, &b| x.get(a, feature).total_cmp(&x.get(b, feature)).then(a.cmp(&b)));
        let mut left = vec![0usize; n_classes];
        let mut right = vec![0usize; n_classes];
        for &r in &order {
            right[y[r]] += 1;
        }
        for pos in 1..n {
            let moved = y[order[pos - 1]];
            left[moved] += 1;
            right[moved] -= 1;
            let lo = x.get(order[pos - 1], feature);
            let hi = x.get(order[pos], feature);
            if lo == hi || pos < min_leaf || n - pos < min_leaf {
                continue;
            }
            let impurity = weighted_gini(&left, pos) + weighted_gini(&right, n - pos);
            // Strict improvement keeps the lowest feature and threshold on ties.
            if best.as_ref().is_none_or(|b| impurity < b.impurity - 1e-12) {
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(Best {
                    impurity,
                    feature,
                    threshold,
                });
            }
        }
    }

    let Some(best) = best else {
        return Node::Leaf(leaf);
    };
    let (l, r): (Vec<usize>, Vec<usize>) = rows
        .into_iter()
        .partition(|&i| x.get(i, best.feature) <= best.threshold);
    Node::Split {
        feature: best.feature,
        threshold: best.threshold,
        left: Box::new(grow(x, y, n_classes, params, l, depth + 1)),
        right: Box::new(grow(x, y, n_classes, params, r, depth + 1)),
    }
}
