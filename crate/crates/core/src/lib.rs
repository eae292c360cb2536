//! Trust-augmented user-based collaborative filtering.
//!
//! Rating similarity between users is turned into Subjective Logic opinions,
//! which are propagated one extra hop through the resulting web of trust so
//! that users without a direct similarity link can still contribute to a
//! prediction. The [`eval`] module runs the time-sliced leave-one-out
//! experiment comparing this hybrid scheme with plain collaborative filtering.

pub mod config;
pub mod dataset;
pub mod eval;
pub mod metrics;
pub mod opinion;
pub mod predictor;
pub mod report;
pub mod similarity;
pub mod trust_graph;
pub mod trust_map;

pub use dataset::{ItemId, Rating, RatingFormat, RatingsView, UserId};
pub use opinion::Opinion;
pub use trust_graph::{PredictionMode, TrustGraph};
