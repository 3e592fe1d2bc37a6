//! Combinatorial engineering toolkit for hierarchical modular systems.
//!
//! A system is described by a [`model::MorphModel`]: a tree whose leaves are
//! components with design alternatives (DAs) and pairwise compatibility
//! estimates. On top of that model the crate provides
//!
//! * [`hierarchy`]: building hierarchies and layered topologies from raw graphs,
//! * [`synthesis`]: composite-system synthesis (Pareto-optimal morphological
//!   cliques, bottom-up composition, multiple-choice knapsack),
//! * [`analysis`]: multicriteria ranking and bottleneck detection,
//! * [`redesign`]: budgeted improvement and aggregation of system versions,
//! * [`lifecycle`]: multistage trajectories, evolution deltas and forecasting,
//! * [`io`] and [`cli`]: the model document format, reports and the batch CLI.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod hierarchy;
pub mod io;
pub mod lifecycle;
pub mod model;
pub mod redesign;
pub mod synthesis;

pub use error::{Error, Result};
pub use model::{
    CompositeSystem, DesignAlternative, Dominance, IntervalMultisetEstimate, MorphModel,
    OrdinalScale, QualityVector, Tree, TreeNode,
};
