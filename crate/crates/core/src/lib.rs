//! Evolutionary search over classification pipelines with two fitness
//! regimes: a static single k-fold score, and a dynamic score averaged over
//! each individual's lifetime, re-drawing the folds every generation.
//!
//! The crate covers the whole stack: data handling ([`data`]), a small
//! registry of native learners ([`components`]), pipelines and genetic
//! operators ([`pipeline`]), scoring ([`fitness`]), the NSGA-II engine
//! ([`evolution`]) and the paired 5x2 comparison harness ([`analysis`]).

pub mod analysis;
pub mod components;
pub mod data;
pub mod evolution;
pub mod fitness;
pub mod pipeline;
pub mod seed;
pub mod synthetic;

pub use analysis::{ComparisonDocument, RunReport};
pub use data::{Dataset, FoldPlan, LabelColumn, Matrix, SplitPair};
pub use evolution::{EvolutionConfig, EvolutionResult, GenerationLog, SurvivorSelection};
pub use fitness::{Fitness, FitnessMode, ScoreLedger};
pub use pipeline::{Individual, PipelineTree};
