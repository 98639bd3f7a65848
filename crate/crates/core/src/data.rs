//! Tabular classification data: loading, outer train/test splitting and
//! stratified k-fold planning.
//!
//! Labels are stored as indices into the dataset's ordered class set. Subsets
//! produced by splitting keep the parent's class set, so label indices stay
//! comparable across every view of the same source data.

use std::cmp::Ordering;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::seed;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("file has no data rows")]
    Empty,
    #[error("label column {0} not found in header")]
    MissingLabelColumn(String),
    #[error("row {row}, column '{column}': cannot parse '{value}' as a number")]
    ParseCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}, column '{column}': missing value")]
    MissingValue { row: usize, column: String },
    #[error("dataset has a single class '{0}'; at least two are required")]
    SingleClass(String),
    #[error("dataset has no feature columns")]
    NoFeatures,
    #[error("feature rows ({rows}) and labels ({labels}) differ in length")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("label index {0} is outside the class set")]
    UnknownLabel(usize),
    #[error("matrix shape {rows}x{cols} does not match {len} values")]
    Shape { rows: usize, cols: usize, len: usize },
    #[error("test fraction {0} must lie strictly between 0 and 1")]
    TestFraction(f64),
    #[error("class '{0}' has a single instance and cannot be stratified")]
    ClassTooSmall(String),
    #[error("k must be at least 2, got {0}")]
    InvalidK(usize),
    #[error("{rows} rows cannot be split into {k} folds")]
    TooFewRows { rows: usize, k: usize },
    #[error("fold index {index} out of range for k = {k}")]
    FoldOutOfRange { index: usize, k: usize },
    #[error("fold plan covers {plan} rows but dataset has {rows}")]
    PlanMismatch { plan: usize, rows: usize },
}

/// Dense row-major matrix of real values.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, DataError> {
        if rows * cols != data.len() {
            return Err(DataError::Shape {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from row vectors. Panics on ragged input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).map(move |i| self.get(i, j))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn select_columns(&self, columns: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.rows * columns.len());
        for row in self.iter_rows() {
            data.extend(columns.iter().map(|&j| row[j]));
        }
        Self {
            rows: self.rows,
            cols: columns.len(),
            data,
        }
    }
}

/// Labeled tabular classification data.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<usize>,
    classes: Arc<[String]>,
    class_counts: Vec<usize>,
}

impl Dataset {
    /// Builds a source dataset. Requires at least one row, one feature column
    /// and two distinct classes present among the labels.
    pub fn new(features: Matrix, labels: Vec<usize>, classes: Vec<String>) -> Result<Self, DataError> {
        let d = Self::assemble(features, labels, classes.into())?;
        if d.features.cols() == 0 {
            return Err(DataError::NoFeatures);
        }
        if d.is_empty() {
            return Err(DataError::Empty);
        }
        if d.present_classes().count() < 2 {
            let only = d.present_classes().next().unwrap_or(0);
            return Err(DataError::SingleClass(d.classes[only].clone()));
        }
        Ok(d)
    }

    /// Builds a dataset from string labels; the class set is ordered by first
    /// appearance.
    pub fn from_labels<S: AsRef<str>>(features: Matrix, labels: &[S]) -> Result<Self, DataError> {
        let mut classes: Vec<String> = Vec::new();
        let mut idx = Vec::with_capacity(labels.len());
        for l in labels {
            let l = l.as_ref();
            let i = match classes.iter().position(|c| c == l) {
                Some(i) => i,
                None => {
                    classes.push(l.to_string());
                    classes.len() - 1
                }
            };
            idx.push(i);
        }
        Self::new(features, idx, classes)
    }

    fn assemble(features: Matrix, labels: Vec<usize>, classes: Arc<[String]>) -> Result<Self, DataError> {
        if features.rows() != labels.len() {
            return Err(DataError::LengthMismatch {
                rows: features.rows(),
                labels: labels.len(),
            });
        }
        let mut class_counts = vec![0; classes.len()];
        for &l in &labels {
            *class_counts.get_mut(l).ok_or(DataError::UnknownLabel(l))? += 1;
        }
        Ok(Self {
            features,
            labels,
            classes,
            class_counts,
        })
    }

    /// A dataset over the same class set with replaced features, used when a
    /// transformer maps the feature space.
    pub fn with_features(&self, features: Matrix) -> Result<Self, DataError> {
        Self::assemble(features, self.labels.clone(), self.classes.clone())
    }

    /// Rows at `indices`, in the given order, sharing this dataset's class set.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let labels: Vec<usize> = indices.iter().map(|&i| self.labels[i]).collect();
        let mut class_counts = vec![0; self.classes.len()];
        for &l in &labels {
            class_counts[l] += 1;
        }
        Self {
            features: self.features.select_rows(indices),
            labels,
            classes: self.classes.clone(),
            class_counts,
        }
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    /// Class indices with at least one instance.
    pub fn present_classes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.classes.len()).filter(move |&c| self.class_counts[c] > 0)
    }

    pub fn label_name(&self, label: usize) -> &str {
        &self.classes[label]
    }

    /// Row indices of each class, ordered by feature values (then original
    /// position) so that grouping does not depend on file row order.
    fn canonical_class_groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.classes.len()];
        for (i, &l) in self.labels.iter().enumerate() {
            groups[l].push(i);
        }
        for g in &mut groups {
            g.sort_by(|&a, &b| lexical(self.features.row(a), self.features.row(b)).then(a.cmp(&b)));
        }
        groups
    }
}

fn lexical(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Which column of a CSV file holds the class label.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum LabelColumn {
    #[default]
    Last,
    Index(usize),
    Name(String),
}

impl fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelColumn::Last => f.write_str("<last>"),
            LabelColumn::Index(i) => write!(f, "#{i}"),
            LabelColumn::Name(n) => write!(f, "'{n}'"),
        }
    }
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    /// Integers select a zero-based column index, anything else a header name.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

/// Loads a numeric CSV file with a header row.
///
/// Rows are kept in file order and the class set is ordered by first
/// appearance. Row numbers in errors are 1-based and count data rows only.
pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file, label)
}

/// Same as [`load_csv`] over any reader.
pub fn read_csv<R: std::io::Read>(reader: R, label: &LabelColumn) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header.is_empty() || header.iter().all(|h| h.is_empty()) && header.len() == 1 {
        return Err(DataError::Empty);
    }
    let label_idx = match label {
        LabelColumn::Last => header.len() - 1,
        LabelColumn::Index(i) if *i < header.len() => *i,
        LabelColumn::Index(_) => return Err(DataError::MissingLabelColumn(label.to_string())),
        LabelColumn::Name(n) => header
            .iter()
            .position(|h| h == n)
            .ok_or_else(|| DataError::MissingLabelColumn(label.to_string()))?,
    };
    let cols = header.len() - 1;
    if cols == 0 {
        return Err(DataError::NoFeatures);
    }

    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        for (j, cell) in record.iter().enumerate() {
            if j == label_idx {
                labels.push(cell.to_string());
                continue;
            }
            let cell = cell.trim();
            if cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell == "?" {
                return Err(DataError::MissingValue {
                    row,
                    column: header[j].clone(),
                });
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => data.push(v),
                Ok(v) if v.is_nan() => {
                    return Err(DataError::MissingValue {
                        row,
                        column: header[j].clone(),
                    })
                }
                _ => {
                    return Err(DataError::ParseCell {
                        row,
                        column: header[j].clone(),
                        value: cell.to_string(),
                    })
                }
            }
        }
    }
    if labels.is_empty() {
        return Err(DataError::Empty);
    }
    let features = Matrix::new(labels.len(), cols, data)?;
    Dataset::from_labels(features, &labels)
}

/// Outer split of a dataset into a search half and a held-out half.
#[derive(Debug, Clone)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
    pub split_seed: u64,
    pub test_fraction: f64,
    /// Source row indices of `train` and `test`, ascending.
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

/// Stratified train/test split.
///
/// Each class contributes `round(test_fraction * count)` rows to the test set,
/// clamped so that both halves keep at least one instance of the class.
pub fn train_test_split(d: &Dataset, test_fraction: f64, seed: u64) -> Result<SplitPair, DataError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DataError::TestFraction(test_fraction));
    }
    let mut rng = seed::rng(seed);
    let mut test_rows = Vec::new();
    let mut train_rows = Vec::new();
    for (class, mut group) in d.canonical_class_groups().into_iter().enumerate() {
        match group.len() {
            0 => continue,
            1 => return Err(DataError::ClassTooSmall(d.classes[class].clone())),
            n => {
                group.shuffle(&mut rng);
                let n_test = ((test_fraction * n as f64).round() as usize).clamp(1, n - 1);
                test_rows.extend_from_slice(&group[..n_test]);
                train_rows.extend_from_slice(&group[n_test..]);
            }
        }
    }
    train_rows.sort_unstable();
    test_rows.sort_unstable();
    Ok(SplitPair {
        train: d.subset(&train_rows),
        test: d.subset(&test_rows),
        split_seed: seed,
        test_fraction,
        train_rows,
        test_rows,
    })
}

/// Seeded stratified assignment of rows to `k` folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    k: usize,
    seed: u64,
    assignment: Vec<usize>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Fold index of every row.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn fold_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] == fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Groups rows by class, shuffles each group with `seed` and deals them
/// round-robin into `k` folds, continuing the deal across classes. Fold sizes
/// and per-class fold counts therefore differ by at most one.
pub fn stratified_kfold(d: &Dataset, k: usize, seed: u64) -> Result<FoldPlan, DataError> {
    if k < 2 {
        return Err(DataError::InvalidK(k));
    }
    if d.len() < k {
        return Err(DataError::TooFewRows { rows: d.len(), k });
    }
    let mut rng = seed::rng(seed);
    let mut assignment = vec![0; d.len()];
    let mut next = 0;
    for mut group in d.canonical_class_groups() {
        group.shuffle(&mut rng);
        for i in group {
            assignment[i] = next % k;
            next += 1;
        }
    }
    Ok(FoldPlan { k, seed, assignment })
}

/// Internal (train, test) views for fold `fold`: the fold itself is the
/// internal test set, every other row goes to internal training.
pub fn fold_views(d: &Dataset, plan: &FoldPlan, fold: usize) -> Result<(Dataset, Dataset), DataError> {
    if fold >= plan.k {
        return Err(DataError::FoldOutOfRange { index: fold, k: plan.k });
    }
    if plan.assignment.len() != d.len() {
        return Err(DataError::PlanMismatch {
            plan: plan.assignment.len(),
            rows: d.len(),
        });
    }
    let (test, train): (Vec<usize>, Vec<usize>) = (0..d.len()).partition(|&i| plan.assignment[i] == fold);
    Ok((d.subset(&train), d.subset(&test)))
}
