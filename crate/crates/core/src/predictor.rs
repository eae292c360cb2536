//! Resnick's neighborhood prediction.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{ItemId, RatingsView, UserId, MAX_STARS, MIN_STARS};
use crate::trust_graph::{Neighbor, NeighborKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PredictError {
    #[error("user {0} has no ratings in this view")]
    UnknownUser(UserId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictorConfig {
    /// Divide the weighted deviation sum by `Σ|w|`. Turning this off gives the
    /// raw weighted sum.
    pub normalize: bool,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig { normalize: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub user: UserId,
    pub item: ItemId,
    /// Prediction clamped to the rating scale.
    pub value: f64,
    /// Value before clamping.
    pub raw_value: f64,
    pub contributors_similar: usize,
    pub contributors_trusted: usize,
}

/// One neighbor's input to the weighted sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contribution {
    pub weight: f64,
    pub rating: f64,
    pub mean: f64,
}

/// `mean_a + Σ w·(r − mean) / Σ|w|` (the denominator only when normalizing).
/// `None` when there are no contributions or all weights are zero.
pub fn resnick<I>(mean_a: f64, contributions: I, normalize: bool) -> Option<f64>
where
    I: IntoIterator<Item = Contribution>,
{
    let mut num = 0.0;
    let mut den = 0.0;
    let mut any = false;
    for c in contributions {
        any = true;
        num += c.weight * (c.rating - c.mean);
        den += c.weight.abs();
    }
    if !any || den == 0.0 {
        return None;
    }
    Some(if normalize {
        mean_a + num / den
    } else {
        mean_a + num
    })
}

pub fn clamp_rating(v: f64) -> f64 {
    v.clamp(MIN_STARS as f64, MAX_STARS as f64)
}

/// Mean over all of the user's ratings in the view.
pub fn mean_rating(view: &RatingsView, u: UserId) -> Result<f64, PredictError> {
    let rs = view
        .user_ratings(u)
        .filter(|r| !r.is_empty())
        .ok_or(PredictError::UnknownUser(u))?;
    Ok(rs.iter().map(|&(_, v)| v as f64).sum::<f64>() / rs.len() as f64)
}

/// Predicts `a`'s rating of `i` from the neighbors that rated `i`.
/// `Ok(None)` when no neighbor rated the item or their weights sum to zero.
pub fn predict(
    view: &RatingsView,
    a: UserId,
    i: ItemId,
    neighbors: &BTreeMap<UserId, Neighbor>,
    cfg: &PredictorConfig,
) -> Result<Option<Prediction>, PredictError> {
    let mean_a = mean_rating(view, a)?;
    let mut similar = 0;
    let mut trusted = 0;
    let mut contributions = Vec::new();
    for (&u, n) in neighbors {
        if u == a {
            continue;
        }
        let Some(r) = view.rating(u, i) else { continue };
        match n.kind {
            NeighborKind::Similar => similar += 1,
            NeighborKind::Trusted => trusted += 1,
        }
        contributions.push(Contribution {
            weight: n.weight,
            rating: r as f64,
            mean: mean_rating(view, u)?,
        });
    }
    Ok(
        resnick(mean_a, contributions, cfg.normalize).map(|raw| Prediction {
            user: a,
            item: i,
            value: clamp_rating(raw),
            raw_value: raw,
            contributors_similar: similar,
            contributors_trusted: trusted,
        }),
    )
}
