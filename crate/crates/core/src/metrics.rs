//! Accuracy, classification, coverage and trust-usage metrics.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{ItemId, RatingsView, UserId, MAX_STARS, MIN_STARS};
use crate::trust_graph::{PredictionMode, TrustGraph};
use crate::trust_map::EvidenceMapConfig;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("no predictions to score")]
    Empty,
}

/// Ratings at or below this value count as unsatisfactory.
pub const LOW_RATING_THRESHOLD: f64 = 2.0;

/// Confusion counts with "low rating" as the positive class.
///
/// Cell assignment (actual × predicted): low × low → `tp`, low × high → `fp`,
/// high × low → `fn`, high × high → `tn`. Note that `fp` holds the low
/// ratings the system predicted as satisfactory, which is the transpose of
/// the usual convention.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn record(&mut self, predicted: f64, actual: f64) {
        let actual_low = actual <= LOW_RATING_THRESHOLD;
        let predicted_low = predicted <= LOW_RATING_THRESHOLD;
        match (actual_low, predicted_low) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn merge(&mut self, other: &ConfusionCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }
}

/// Mean absolute error as a percentage of the rating range.
pub fn mae_percent(pairs: &[(f64, f64)]) -> Result<f64, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::Empty);
    }
    let range = (MAX_STARS - MIN_STARS) as f64;
    let total: f64 = pairs.iter().map(|(p, a)| (p - a).abs()).sum();
    Ok(100.0 * total / pairs.len() as f64 / range)
}

pub fn classify_and_count(pairs: &[(f64, f64)]) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for &(p, a) in pairs {
        c.record(p, a);
    }
    c
}

pub fn precision(c: &ConfusionCounts) -> f64 {
    if c.tp == 0 {
        0.0
    } else {
        c.tp as f64 / (c.tp + c.fp) as f64
    }
}

pub fn recall(c: &ConfusionCounts) -> f64 {
    if c.tp == 0 {
        0.0
    } else {
        c.tp as f64 / (c.tp + c.fn_) as f64
    }
}

/// Harmonic mean of precision and recall; zero when there are no true positives.
pub fn f_score(c: &ConfusionCounts) -> f64 {
    if c.tp == 0 {
        return 0.0;
    }
    let (p, r) = (precision(c), recall(c));
    2.0 * p * r / (p + r)
}

/// Prediction volumes behind the user coverage gain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UcgInputs {
    /// Predictions produced in hybrid mode.
    pub hybrid_predictions: u64,
    /// Users who received at least one hybrid prediction.
    pub hybrid_users: u64,
    pub standard_predictions: u64,
    pub standard_users: u64,
}

/// `(R_h / |A_h|) / (R_s / |A_s|) − 1`, or `None` when a denominator vanishes.
pub fn ucg(x: &UcgInputs) -> Option<f64> {
    if x.standard_users == 0 || x.standard_predictions == 0 || x.hybrid_users == 0 {
        return None;
    }
    let hybrid_rate = x.hybrid_predictions as f64 / x.hybrid_users as f64;
    let standard_rate = x.standard_predictions as f64 / x.standard_users as f64;
    Some(hybrid_rate / standard_rate - 1.0)
}

/// Mean over predictions of `trusted / (trusted + similar)`.
pub fn trust_graph_contribution(per_prediction: &[(usize, usize)]) -> Option<f64> {
    if per_prediction.is_empty() {
        return None;
    }
    let sum: f64 = per_prediction
        .iter()
        .map(|&(trusted, similar)| {
            debug_assert!(trusted + similar >= 1);
            trusted as f64 / (trusted + similar) as f64
        })
        .sum();
    Some(sum / per_prediction.len() as f64)
}

/// Pooled ratio `Σ trusted / Σ (trusted + similar)` over all predictions.
pub fn pooled_trust_ratio(per_prediction: &[(usize, usize)]) -> Option<f64> {
    let trusted: usize = per_prediction.iter().map(|p| p.0).sum();
    let all: usize = per_prediction.iter().map(|p| p.0 + p.1).sum();
    (all > 0).then(|| trusted as f64 / all as f64)
}

/// Fraction of (user, item) cells in `users × items` for which some neighbor of
/// the user (under `mode`) has rated the item.
pub fn coverage_of(
    view: &RatingsView,
    graph: &TrustGraph,
    mode: PredictionMode,
    cfg: &EvidenceMapConfig,
    users: &BTreeSet<UserId>,
    items: &BTreeSet<ItemId>,
) -> f64 {
    if users.is_empty() || items.is_empty() {
        return 0.0;
    }
    let users: Vec<UserId> = users.iter().copied().collect();
    let covered: usize = users
        .par_iter()
        .map(|&u| {
            let Ok(neighbors) = graph.neighbor_set(u, mode, cfg) else {
                return 0;
            };
            let mut reachable: BTreeSet<ItemId> = BTreeSet::new();
            for n in neighbors.keys() {
                for &(item, _) in view.user_ratings(*n).unwrap_or_default() {
                    if items.contains(&item) {
                        reachable.insert(item);
                    }
                }
            }
            reachable.len()
        })
        .sum();
    covered as f64 / (users.len() as f64 * items.len() as f64)
}

/// Coverage over all users and items of the view.
pub fn coverage(
    view: &RatingsView,
    mode: PredictionMode,
    min_overlap: usize,
    cfg: &EvidenceMapConfig,
) -> f64 {
    let graph = TrustGraph::build(view, min_overlap, cfg);
    let users = view.users().collect();
    let items = view.items().collect();
    coverage_of(view, &graph, mode, cfg, &users, &items)
}
