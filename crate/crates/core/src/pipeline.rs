//! Estimator-rooted pipelines and the genetic operators over them.
//!
//! A pipeline is a single-branch tree: a classifier at the root fed by a chain
//! of transformers. `chain[0]` sees the raw features first and the root sees
//! the output of the last chain element. The canonical text form lists the
//! root first and then walks back towards the raw data:
//!
//! ```text
//! decision_tree(max_depth=4,min_leaf=5) <- pca(n_components=2) <- standard_scaler()
//! ```
//!
//! Here `standard_scaler` is applied first, then `pca`, then the tree.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::components::{self, ComponentError, ComponentKind, ComponentSpec};
use crate::data::{DataError, Dataset};
use crate::fitness::ScoreLedger;
use crate::seed;

/// Default bound on pipeline complexity (components per pipeline).
pub const DEFAULT_MAX_DEPTH: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Component(#[from] ComponentError),
    #[error("data error: {0}")]
    Data(String),
    #[error("pipeline root '{0}' is not a classifier")]
    RootNotClassifier(String),
    #[error("chain element '{0}' is not a transformer")]
    ChainNotTransformer(String),
    #[error("empty pipeline text")]
    EmptyText,
    #[error("train has {train} features but test has {test}")]
    ArityMismatch { train: usize, test: usize },
}

impl From<DataError> for PipelineError {
    fn from(e: DataError) -> Self {
        PipelineError::Data(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineTree {
    root: ComponentSpec,
    chain: Vec<ComponentSpec>,
}

impl PipelineTree {
    pub fn new(root: ComponentSpec, chain: Vec<ComponentSpec>) -> Result<Self, PipelineError> {
        if root.kind() != ComponentKind::Classifier {
            return Err(PipelineError::RootNotClassifier(root.name().to_string()));
        }
        if let Some(t) = chain.iter().find(|c| c.kind() != ComponentKind::Transformer) {
            return Err(PipelineError::ChainNotTransformer(t.name().to_string()));
        }
        Ok(Self { root, chain })
    }

    pub fn leaf(root: ComponentSpec) -> Result<Self, PipelineError> {
        Self::new(root, Vec::new())
    }

    pub fn root(&self) -> &ComponentSpec {
        &self.root
    }

    /// Transformers in application order.
    pub fn chain(&self) -> &[ComponentSpec] {
        &self.chain
    }

    /// Number of components; the second (minimized) objective.
    pub fn complexity(&self) -> usize {
        1 + self.chain.len()
    }
}

impl fmt::Display for PipelineTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)?;
        for t in self.chain.iter().rev() {
            write!(f, " <- {t}")?;
        }
        Ok(())
    }
}

impl FromStr for PipelineTree {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().is_empty() {
            return Err(PipelineError::EmptyText);
        }
        let mut parts = s.split("<-").map(str::parse::<ComponentSpec>);
        let root = parts.next().ok_or(PipelineError::EmptyText)??;
        let mut chain = parts.collect::<Result<Vec<_>, _>>()?;
        chain.reverse();
        Self::new(root, chain)
    }
}

fn random_of_kind<R: Rng + ?Sized>(kind: ComponentKind, rng: &mut R) -> ComponentSpec {
    let defs: Vec<_> = components::of_kind(kind).collect();
    ComponentSpec::random(defs[rng.gen_range(0..defs.len())], rng)
}

/// A different component of the same kind, with freshly drawn hyperparameters.
fn swap_component<R: Rng + ?Sized>(current: &ComponentSpec, rng: &mut R) -> ComponentSpec {
    let defs: Vec<_> = components::of_kind(current.kind())
        .filter(|d| d.name != current.name())
        .collect();
    ComponentSpec::random(defs[rng.gen_range(0..defs.len())], rng)
}

/// Uniform random pipeline: chain length uniform in `[0, max_depth - 1]`,
/// components and hyperparameters uniform over the registry.
pub fn random_pipeline(rng_seed: u64, max_depth: usize) -> PipelineTree {
    let mut rng = seed::rng(rng_seed);
    let len = rng.gen_range(0..max_depth.max(1));
    let chain = (0..len).map(|_| random_of_kind(ComponentKind::Transformer, &mut rng)).collect();
    let root = random_of_kind(ComponentKind::Classifier, &mut rng);
    PipelineTree { root, chain }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edit {
    Hyperparameter,
    Swap,
    Insert,
    Delete,
}

/// Edits that can change `t` without leaving `[1, max_depth]`.
pub fn applicable_edits(t: &PipelineTree, max_depth: usize) -> Vec<Edit> {
    let mut edits = Vec::with_capacity(4);
    let has_params = std::iter::once(&t.root)
        .chain(&t.chain)
        .any(|c| !c.mutable_params().is_empty());
    if has_params {
        edits.push(Edit::Hyperparameter);
    }
    edits.push(Edit::Swap);
    if t.complexity() < max_depth {
        edits.push(Edit::Insert);
    }
    if !t.chain.is_empty() {
        edits.push(Edit::Delete);
    }
    edits
}

/// Applies exactly one edit, drawn uniformly from [`applicable_edits`].
pub fn mutate(t: &PipelineTree, rng_seed: u64, max_depth: usize) -> PipelineTree {
    let mut rng = seed::rng(rng_seed);
    let edits = applicable_edits(t, max_depth);
    let edit = edits[rng.gen_range(0..edits.len())];
    mutate_with(t, edit, &mut rng)
}

pub(crate) fn mutate_with<R: Rng + ?Sized>(t: &PipelineTree, edit: Edit, rng: &mut R) -> PipelineTree {
    let mut out = t.clone();
    match edit {
        Edit::Hyperparameter => {
            // Position 0 is the root, 1.. the chain.
            let slots: Vec<usize> = (0..t.complexity())
                .filter(|&p| !out.component(p).mutable_params().is_empty())
                .collect();
            let slot = slots[rng.gen_range(0..slots.len())];
            let params = out.component(slot).mutable_params();
            let param = params[rng.gen_range(0..params.len())];
            let new = out.component(slot).resample_param(param, rng);
            *out.component_mut(slot) = new;
        }
        Edit::Swap => {
            let slot = rng.gen_range(0..t.complexity());
            let new = swap_component(out.component(slot), rng);
            *out.component_mut(slot) = new;
        }
        Edit::Insert => {
            let at = rng.gen_range(0..=out.chain.len());
            let new = random_of_kind(ComponentKind::Transformer, rng);
            out.chain.insert(at, new);
        }
        Edit::Delete => {
            let at = rng.gen_range(0..out.chain.len());
            out.chain.remove(at);
        }
    }
    out
}

impl PipelineTree {
    fn component(&self, slot: usize) -> &ComponentSpec {
        if slot == 0 {
            &self.root
        } else {
            &self.chain[slot - 1]
        }
    }

    fn component_mut(&mut self, slot: usize) -> &mut ComponentSpec {
        if slot == 0 {
            &mut self.root
        } else {
            &mut self.chain[slot - 1]
        }
    }
}

/// One-point chain crossover.
///
/// The root comes from either parent. A cut point `c` is drawn uniformly in
/// `[0, min(|a.chain|, |b.chain|)]`; the child chain is the first `c`
/// transformers of one parent followed by the transformers of the other parent
/// from position `c` on. The result is truncated to `max_depth`.
pub fn crossover(a: &PipelineTree, b: &PipelineTree, rng_seed: u64, max_depth: usize) -> PipelineTree {
    let mut rng = seed::rng(rng_seed);
    let root = if rng.gen_bool(0.5) { &a.root } else { &b.root }.clone();
    let (head, tail) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
    let cut = rng.gen_range(0..=a.chain.len().min(b.chain.len()));
    let mut chain: Vec<ComponentSpec> = head.chain[..cut].iter().chain(&tail.chain[cut..]).cloned().collect();
    chain.truncate(max_depth.saturating_sub(1));
    PipelineTree { root, chain }
}

/// Fits the pipeline on `train` and predicts class indices for `test`.
///
/// Each chain transformer is fit on the output of the previous one and
/// applied to both halves; the root is fit on the fully transformed training
/// data.
pub fn execute(
    t: &PipelineTree,
    train: &Dataset,
    test: &Dataset,
    component_seed: u64,
) -> Result<Vec<usize>, PipelineError> {
    if train.n_features() != test.n_features() {
        return Err(PipelineError::ArityMismatch {
            train: train.n_features(),
            test: test.n_features(),
        });
    }
    let mut train = train.clone();
    let mut test_x = test.features().clone();
    for (i, spec) in t.chain.iter().enumerate() {
        let fitted = components::fit(spec, &train, seed::derive(component_seed, &[i as u64]))?;
        let train_x = fitted.transform(train.features())?;
        test_x = fitted.transform(&test_x)?;
        train = train.with_features(train_x)?;
    }
    let root = components::fit(&t.root, &train, seed::derive(component_seed, &[t.chain.len() as u64]))?;
    Ok(root.predict(&test_x)?)
}

/// A pipeline together with its evaluation history.
#[derive(Debug, Clone)]
pub struct Individual {
    pub id: u64,
    pub tree: PipelineTree,
    birth_generation: usize,
    pub ledger: ScoreLedger,
}

impl Individual {
    pub fn new(id: u64, tree: PipelineTree, birth_generation: usize) -> Self {
        Self {
            id,
            tree,
            birth_generation,
            ledger: ScoreLedger::default(),
        }
    }

    pub fn birth_generation(&self) -> usize {
        self.birth_generation
    }

    pub fn age(&self, current_generation: usize) -> usize {
        current_generation.saturating_sub(self.birth_generation)
    }
}
