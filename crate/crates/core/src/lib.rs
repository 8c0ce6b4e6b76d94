//! Query-level uncertainty from a language model's layer-wise self-evaluation.
//!
//! A [`ConfidenceGrid`] of P(Yes) values (last `k` query tokens by `L`
//! layers) is collapsed into a single Internal Confidence score with
//! attenuated weights around a decision centre. The crate also provides the
//! query-level baselines it is compared against, AUROC / PRR / ECE, ROUGE-L
//! answer labeling, and threshold-sweep simulators for retrieval gating and
//! model cascading.

pub mod baselines;
pub mod cli;
pub mod confidence;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod routing;
pub mod synth;

pub use baselines::{score_all, Method, ScoreConfig, ScoredQuery};
pub use confidence::{
    attenuated_weights, internal_confidence, locality, search_decision_center, DecisionCenter, WeightProfile,
};
pub use error::{Error, Result};
pub use metrics::{EvalResult, Orientation};
pub use model::{ConfidenceGrid, DatasetManifest, QueryRecord};
pub use routing::{RoutingRecord, SweepPoint};
