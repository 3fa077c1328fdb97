//! Multi-view linear predictors trained to optimize multivariate performance
//! measures (error rate, F1, PRBEP, precision/recall at k) with a
//! cutting-plane method.
//!
//! Each view `j` has its own linear discriminant `w_j`. Views are tied
//! together by a co-regularization penalty on their per-point responses, and
//! training alternates between adding the most violated label tuple to a
//! working set and re-solving each view's dual QP over that set.

pub mod data;
pub mod dual;
pub mod error;
pub mod inference;
pub mod measures;
pub mod model;
pub mod search;
pub mod synthetic;
pub mod trainer;
pub mod verify;

pub use data::{load_manifest, write_dataset, MultiViewDataset, SparseRow, View};
pub use dual::{JointFactor, OmegaFactor, ViewSubproblem, WorkingConstraint, WorkingSet};
pub use error::{Error, Result};
pub use inference::{point_scores, predict, psi, view_score, LabelTuple, ViewWeights};
pub use measures::{contingency, ContingencyTable, Measure};
pub use model::Model;
pub use search::{most_violated, most_violated_bruteforce, SearchResult};
pub use synthetic::{generate, GenSpec};
pub use trainer::{check_termination, evaluate, train, train_with_working_set, EvalReport, Status, TrainConfig, TrainState};
pub use verify::{Suite, SuiteReport};
