//! Registry of native pipeline components.
//!
//! Classifiers can only appear at the root of a pipeline, transformers only in
//! its preprocessing chain. Every component declares a discrete grid per
//! hyperparameter; a [`ComponentSpec`] holds exactly one grid value per
//! declared hyperparameter. Component names, parameter names and grid values
//! form the public configuration vocabulary and the canonical text form of
//! pipelines.

mod knn;
mod logistic;
mod naive_bayes;
mod transformers;
mod tree;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::data::{Dataset, Matrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComponentError {
    #[error("unknown component '{0}'")]
    UnknownComponent(String),
    #[error("component '{component}' has no hyperparameter '{param}'")]
    UnknownParam { component: String, param: String },
    #[error("value '{value}' is not in the grid of {component}.{param}")]
    OffGrid {
        component: String,
        param: String,
        value: String,
    },
    #[error("cannot parse component text '{0}'")]
    Syntax(String),
    #[error("cannot fit '{0}' on an empty training set")]
    EmptyTrain(String),
    #[error("'{0}' is not a classifier")]
    NotClassifier(String),
    #[error("'{0}' is not a transformer")]
    NotTransformer(String),
    #[error("'{component}' expects {expected} features, got {got}")]
    Arity {
        component: String,
        expected: usize,
        got: usize,
    },
    #[error("'{0}' produced non-finite values")]
    NonFinite(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    Classifier,
    Transformer,
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComponentKind::Classifier => "classifier",
            ComponentKind::Transformer => "transformer",
        })
    }
}

/// One hyperparameter value from a component grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Choice(&'static str),
}

impl ParamValue {
    pub fn as_int(self) -> Option<i64> {
        match self {
            ParamValue::Int(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_real(self) -> Option<f64> {
        match self {
            ParamValue::Real(v) => Some(v),
            ParamValue::Int(v) => Some(v as f64),
            _ => None,
        }
    }

    pub fn as_choice(self) -> Option<&'static str> {
        match self {
            ParamValue::Choice(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Real(v) => write!(f, "{v}"),
            ParamValue::Choice(v) => f.write_str(v),
        }
    }
}

#[derive(Debug)]
pub struct ParamGrid {
    pub name: &'static str,
    pub values: &'static [ParamValue],
}

/// A registered component: its name, kind and hyperparameter grids.
#[derive(Debug)]
pub struct ComponentDef {
    pub name: &'static str,
    pub kind: ComponentKind,
    pub grid: &'static [ParamGrid],
}

impl ComponentDef {
    /// Number of distinct hyperparameter settings.
    pub fn grid_size(&self) -> usize {
        self.grid.iter().map(|g| g.values.len()).product()
    }
}

use ParamValue::{Choice, Int, Real};

static REGISTRY: &[ComponentDef] = &[
    ComponentDef {
        name: "decision_tree",
        kind: ComponentKind::Classifier,
        grid: &[
            ParamGrid {
                name: "max_depth",
                values: &[Int(2), Int(4), Int(8), Int(16)],
            },
            ParamGrid {
                name: "min_leaf",
                values: &[Int(1), Int(5), Int(20)],
            },
        ],
    },
    ComponentDef {
        name: "k_nearest_neighbors",
        kind: ComponentKind::Classifier,
        grid: &[
            ParamGrid {
                name: "k_neighbors",
                values: &[Int(1), Int(3), Int(5), Int(7)],
            },
            ParamGrid {
                name: "weights",
                values: &[Choice("uniform"), Choice("distance")],
            },
        ],
    },
    ComponentDef {
        name: "gaussian_naive_bayes",
        kind: ComponentKind::Classifier,
        grid: &[],
    },
    ComponentDef {
        name: "logistic_regression",
        kind: ComponentKind::Classifier,
        grid: &[ParamGrid {
            name: "l2",
            values: &[Real(0.01), Real(0.1), Real(1.0), Real(10.0)],
        }],
    },
    ComponentDef {
        name: "majority_class",
        kind: ComponentKind::Classifier,
        grid: &[],
    },
    ComponentDef {
        name: "standard_scaler",
        kind: ComponentKind::Transformer,
        grid: &[],
    },
    ComponentDef {
        name: "min_max_scaler",
        kind: ComponentKind::Transformer,
        grid: &[],
    },
    ComponentDef {
        name: "variance_threshold",
        kind: ComponentKind::Transformer,
        grid: &[ParamGrid {
            name: "threshold",
            values: &[Real(0.0), Real(0.05), Real(0.1)],
        }],
    },
    ComponentDef {
        name: "pca",
        kind: ComponentKind::Transformer,
        grid: &[ParamGrid {
            name: "n_components",
            values: &[Int(2), Int(5), Int(10)],
        }],
    },
    ComponentDef {
        name: "select_k_best",
        kind: ComponentKind::Transformer,
        grid: &[ParamGrid {
            name: "k",
            values: &[Int(2), Int(5), Int(10)],
        }],
    },
];

/// All registered components, classifiers first, in a fixed order.
pub fn registry_list() -> &'static [ComponentDef] {
    REGISTRY
}

pub fn lookup(name: &str) -> Option<&'static ComponentDef> {
    REGISTRY.iter().find(|d| d.name == name)
}

pub fn of_kind(kind: ComponentKind) -> impl Iterator<Item = &'static ComponentDef> {
    REGISTRY.iter().filter(move |d| d.kind == kind)
}

/// A registered component with one grid value chosen per hyperparameter.
#[derive(Debug, Clone)]
pub struct ComponentSpec {
    def: &'static ComponentDef,
    values: Vec<ParamValue>,
}

impl PartialEq for ComponentSpec {
    fn eq(&self, other: &Self) -> bool {
        self.def.name == other.def.name && self.values == other.values
    }
}

impl ComponentSpec {
    /// Builds a spec; parameters not listed take the first value of their grid.
    pub fn new(name: &str, params: &[(&str, ParamValue)]) -> Result<Self, ComponentError> {
        let def = lookup(name).ok_or_else(|| ComponentError::UnknownComponent(name.to_string()))?;
        let mut spec = Self::first_of(def);
        for &(p, v) in params {
            spec = spec.with_param(p, v)?;
        }
        Ok(spec)
    }

    pub fn first_of(def: &'static ComponentDef) -> Self {
        Self {
            def,
            values: def.grid.iter().map(|g| g.values[0]).collect(),
        }
    }

    /// Uniform draw over every grid.
    pub fn random<R: Rng + ?Sized>(def: &'static ComponentDef, rng: &mut R) -> Self {
        Self {
            def,
            values: def.grid.iter().map(|g| g.values[rng.gen_range(0..g.values.len())]).collect(),
        }
    }

    pub fn with_param(mut self, param: &str, value: ParamValue) -> Result<Self, ComponentError> {
        let pos = self.param_position(param)?;
        let grid = &self.def.grid[pos];
        if !grid.values.contains(&value) {
            return Err(ComponentError::OffGrid {
                component: self.def.name.to_string(),
                param: param.to_string(),
                value: value.to_string(),
            });
        }
        self.values[pos] = value;
        Ok(self)
    }

    fn param_position(&self, param: &str) -> Result<usize, ComponentError> {
        self.def
            .grid
            .iter()
            .position(|g| g.name == param)
            .ok_or_else(|| ComponentError::UnknownParam {
                component: self.def.name.to_string(),
                param: param.to_string(),
            })
    }

    pub fn def(&self) -> &'static ComponentDef {
        self.def
    }

    pub fn name(&self) -> &'static str {
        self.def.name
    }

    pub fn kind(&self) -> ComponentKind {
        self.def.kind
    }

    pub fn get(&self, param: &str) -> Option<ParamValue> {
        self.param_position(param).ok().map(|p| self.values[p])
    }

    /// (name, value) pairs in grid order.
    pub fn params(&self) -> impl Iterator<Item = (&'static str, ParamValue)> + '_ {
        self.def.grid.iter().map(|g| g.name).zip(self.values.iter().copied())
    }

    /// Indices of hyperparameters with more than one grid value.
    pub(crate) fn mutable_params(&self) -> Vec<usize> {
        (0..self.def.grid.len()).filter(|&i| self.def.grid[i].values.len() > 1).collect()
    }

    /// Resamples hyperparameter `pos` to a different grid value.
    pub(crate) fn resample_param<R: Rng + ?Sized>(&self, pos: usize, rng: &mut R) -> Self {
        let grid = self.def.grid[pos].values;
        let current = grid.iter().position(|v| *v == self.values[pos]).unwrap_or(0);
        let mut pick = rng.gen_range(0..grid.len() - 1);
        if pick >= current {
            pick += 1;
        }
        let mut out = self.clone();
        out.values[pos] = grid[pick];
        out
    }

    fn int(&self, param: &str) -> i64 {
        self.get(param).and_then(ParamValue::as_int).expect("registry int parameter")
    }

    fn real(&self, param: &str) -> f64 {
        self.get(param).and_then(ParamValue::as_real).expect("registry real parameter")
    }

    fn choice(&self, param: &str) -> &'static str {
        self.get(param).and_then(ParamValue::as_choice).expect("registry choice parameter")
    }
}

impl fmt::Display for ComponentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.def.name)?;
        for (i, (name, value)) in self.params().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{name}={value}")?;
        }
        f.write_str(")")
    }
}

impl FromStr for ComponentSpec {
    type Err = ComponentError;

    /// Parses `name(param=value,...)`; the parentheses may be omitted for
    /// components without hyperparameters.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(open) => {
                let body = s[open + 1..]
                    .strip_suffix(')')
                    .ok_or_else(|| ComponentError::Syntax(s.to_string()))?;
                (s[..open].trim(), body)
            }
            None => (s, ""),
        };
        let def = lookup(name).ok_or_else(|| ComponentError::UnknownComponent(name.to_string()))?;
        let mut spec = Self::first_of(def);
        for arg in args.split(',').map(str::trim).filter(|a| !a.is_empty()) {
            let (p, v) = arg.split_once('=').ok_or_else(|| ComponentError::Syntax(s.to_string()))?;
            let (p, v) = (p.trim(), v.trim());
            let pos = spec.param_position(p)?;
            let value = def.grid[pos]
                .values
                .iter()
                .find(|gv| gv.to_string() == v)
                .ok_or_else(|| ComponentError::OffGrid {
                    component: name.to_string(),
                    param: p.to_string(),
                    value: v.to_string(),
                })?;
            spec.values[pos] = *value;
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone)]
enum State {
    Majority(usize),
    Tree(tree::Node),
    Knn(knn::Knn),
    NaiveBayes(naive_bayes::GaussianNb),
    Logistic(logistic::Logistic),
    Affine(transformers::Affine),
    Select(Vec<usize>),
    Projection(transformers::Projection),
}

/// A component after fitting.
#[derive(Debug, Clone)]
pub struct FittedComponent {
    spec: ComponentSpec,
    state: State,
    input_arity: usize,
}

/// Fits a component on `train`.
///
/// Every registered component is deterministic; `component_seed` is accepted
/// so that stochastic components can be registered without changing callers.
pub fn fit(spec: &ComponentSpec, train: &Dataset, component_seed: u64) -> Result<FittedComponent, ComponentError> {
    let _ = component_seed;
    if train.is_empty() {
        return Err(ComponentError::EmptyTrain(spec.name().to_string()));
    }
    let x = train.features();
    let y = train.labels();
    let n_classes = train.classes().len();
    let state = match spec.name() {
        "majority_class" => State::Majority(modal_label(y, n_classes)),
        "decision_tree" => State::Tree(tree::fit(
            x,
            y,
            n_classes,
            tree::Params {
                max_depth: spec.int("max_depth") as usize,
                min_leaf: spec.int("min_leaf") as usize,
            },
        )),
        "k_nearest_neighbors" => State::Knn(knn::Knn::fit(
            x,
            y,
            n_classes,
            spec.int("k_neighbors") as usize,
            spec.choice("weights") == "distance",
        )),
        "gaussian_naive_bayes" => State::NaiveBayes(naive_bayes::GaussianNb::fit(x, y, n_classes)),
        "logistic_regression" => State::Logistic(logistic::Logistic::fit(x, y, n_classes, spec.real("l2"))),
        "standard_scaler" => State::Affine(transformers::Affine::standard(x)),
        "min_max_scaler" => State::Affine(transformers::Affine::min_max(x)),
        "variance_threshold" => State::Select(transformers::variance_threshold(x, spec.real("threshold"))),
        "pca" => State::Projection(transformers::Projection::fit(x, spec.int("n_components") as usize)),
        "select_k_best" => State::Select(transformers::select_k_best(x, y, n_classes, spec.int("k") as usize)),
        other => return Err(ComponentError::UnknownComponent(other.to_string())),
    };
    Ok(FittedComponent {
        spec: spec.clone(),
        state,
        input_arity: x.cols(),
    })
}

/// Most frequent label; ties go to the lowest class index.
pub(crate) fn modal_label(labels: &[usize], n_classes: usize) -> usize {
    let mut counts = vec![0usize; n_classes];
    for &l in labels {
        counts[l] += 1;
    }
    argmax_first(counts.iter().map(|&c| c as f64))
}

/// Index of the first maximum.
pub(crate) fn argmax_first(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

impl FittedComponent {
    pub fn spec(&self) -> &ComponentSpec {
        &self.spec
    }

    pub fn input_arity(&self) -> usize {
        self.input_arity
    }

    /// Debug rendering of the learned parameters.
    pub fn state_summary(&self) -> String {
        format!("{:?}", self.state)
    }

    fn check_arity(&self, x: &Matrix) -> Result<(), ComponentError> {
        if x.cols() != self.input_arity {
            return Err(ComponentError::Arity {
                component: self.spec.name().to_string(),
                expected: self.input_arity,
                got: x.cols(),
            });
        }
        Ok(())
    }

    /// Class indices (into the training class set) for each row of `x`.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>, ComponentError> {
        if self.spec.kind() != ComponentKind::Classifier {
            return Err(ComponentError::NotClassifier(self.spec.name().to_string()));
        }
        self.check_arity(x)?;
        Ok(match &self.state {
            State::Majority(label) => vec![*label; x.rows()],
            State::Tree(node) => x.iter_rows().map(|r| node.predict(r)).collect(),
            State::Knn(m) => x.iter_rows().map(|r| m.predict(r)).collect(),
            State::NaiveBayes(m) => x.iter_rows().map(|r| m.predict(r)).collect(),
            State::Logistic(m) => x.iter_rows().map(|r| m.predict(r)).collect(),
            _ => unreachable!("classifier state"),
        })
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix, ComponentError> {
        if self.spec.kind() != ComponentKind::Transformer {
            return Err(ComponentError::NotTransformer(self.spec.name().to_string()));
        }
        self.check_arity(x)?;
        let out = match &self.state {
            State::Affine(a) => a.apply(x),
            State::Select(cols) => x.select_columns(cols),
            State::Projection(p) => p.apply(x),
            _ => unreachable!("transformer state"),
        };
        if out.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(ComponentError::NonFinite(self.spec.name().to_string()));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Dataset;

    fn ds(rows: &[Vec<f64>], labels: &[&str]) -> Dataset {
        Dataset::from_labels(Matrix::from_rows(rows), labels).unwrap()
    }

    #[test]
    fn registry_contents() {
        let list = registry_list();
        let dt = list.iter().find(|d| d.name == "decision_tree").unwrap();
        assert_eq!(dt.kind, ComponentKind::Classifier);
        assert_eq!(dt.grid[0].name, "max_depth");
        assert_eq!(dt.grid[0].values, [Int(2), Int(4), Int(8), Int(16)]);
        assert_eq!(dt.grid[1].name, "min_leaf");
        assert_eq!(dt.grid[1].values, [Int(1), Int(5), Int(20)]);
        let ss = lookup("standard_scaler").unwrap();
        assert_eq!(ss.kind, ComponentKind::Transformer);
        assert!(ss.grid.is_empty());
        let names: Vec<_> = list.iter().map(|d| d.name).collect();
        assert_eq!(names, registry_list().iter().map(|d| d.name).collect::<Vec<_>>());
        assert_eq!(of_kind(ComponentKind::Classifier).count(), 5);
        assert_eq!(of_kind(ComponentKind::Transformer).count(), 5);
    }

    #[test]
    fn spec_text_round_trip() {
        for def in registry_list() {
            let spec = ComponentSpec::first_of(def);
            let text = spec.to_string();
            assert_eq!(text.parse::<ComponentSpec>().unwrap(), spec, "{text}");
        }
        let s: ComponentSpec = "logistic_regression(l2=0.1)".parse().unwrap();
        assert_eq!(s.get("l2"), Some(Real(0.1)));
        assert!("standard_scaler".parse::<ComponentSpec>().is_ok());
        assert!(matches!(
            "decision_tree(max_depth=3)".parse::<ComponentSpec>(),
            Err(ComponentError::OffGrid { .. })
        ));
        assert!(matches!("nope()".parse::<ComponentSpec>(), Err(ComponentError::UnknownComponent(_))));
    }

    #[test]
    fn off_grid_rejected() {
        assert!(ComponentSpec::new("pca", &[("n_components", Int(3))]).is_err());
        assert!(ComponentSpec::new("pca", &[("bogus", Int(2))]).is_err());
    }

    #[test]
    fn majority_baseline_is_constant() {
        let d = ds(
            &[vec![0.0], vec![1.0], vec![2.0], vec![3.0], vec![4.0]],
            &["A", "B", "B", "A", "B"],
        );
        let m = fit(&ComponentSpec::new("majority_class", &[]).unwrap(), &d, 0).unwrap();
        let preds = m.predict(&Matrix::from_rows(&[vec![10.0], vec![-3.0]])).unwrap();
        assert_eq!(preds, vec![1, 1]);
    }

    #[test]
    fn arity_and_kind_errors() {
        let d = ds(&[vec![0.0, 1.0], vec![1.0, 0.0]], &["A", "B"]);
        let m = fit(&ComponentSpec::new("majority_class", &[]).unwrap(), &d, 0).unwrap();
        assert!(matches!(
            m.predict(&Matrix::from_rows(&[vec![1.0]])),
            Err(ComponentError::Arity { expected: 2, got: 1, .. })
        ));
        assert!(matches!(m.transform(&Matrix::from_rows(&[vec![1.0, 2.0]])), Err(ComponentError::NotTransformer(_))));
        let s = fit(&ComponentSpec::new("standard_scaler", &[]).unwrap(), &d, 0).unwrap();
        assert!(matches!(s.predict(d.features()), Err(ComponentError::NotClassifier(_))));
    }

    #[test]
    fn fit_is_deterministic() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i as f64).sin(), (i as f64 * 0.3).cos(), i as f64]).collect();
        let labels: Vec<&str> = (0..40).map(|i| ["a", "b", "c"][i % 3]).collect();
        let d = ds(&rows, &labels);
        for def in registry_list() {
            let spec = ComponentSpec::first_of(def);
            let a = fit(&spec, &d, 1).unwrap().state_summary();
            let b = fit(&spec, &d, 1).unwrap().state_summary();
            assert_eq!(a, b, "{}", def.name);
        }
    }

    #[test]
    fn transformers_keep_at_least_one_column() {
        let rows: Vec<Vec<f64>> = (0..10).map(|_| vec![1.0, 1.0]).collect();
        let labels: Vec<&str> = (0..10).map(|i| if i < 5 { "a" } else { "b" }).collect();
        let d = ds(&rows, &labels);
        for def in of_kind(ComponentKind::Transformer) {
            for t in [ComponentSpec::first_of(def)] {
                let m = fit(&t, &d, 0).unwrap();
                let out = m.transform(d.features()).unwrap();
                assert!(out.cols() >= 1, "{}", def.name);
                assert_eq!(out.rows(), 10);
            }
        }
    }

    #[test]
    fn classifier_outputs_are_training_classes() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, (i % 4) as f64]).collect();
        let labels: Vec<&str> = (0..30).map(|i| ["x", "y"][i % 2]).collect();
        // Training subset contains only class "y" although the class set has two.
        let full = ds(&rows, &labels);
        let only_y: Vec<usize> = (0..30).filter(|i| i % 2 == 1).collect();
        let train = full.subset(&only_y);
        for def in of_kind(ComponentKind::Classifier) {
            let m = fit(&ComponentSpec::first_of(def), &train, 0).unwrap();
            let p = m.predict(full.features()).unwrap();
            assert!(p.iter().all(|&l| l == 1), "{}", def.name);
        }
    }
}
