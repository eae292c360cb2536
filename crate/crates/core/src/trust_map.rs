//! Mapping between rating similarity and trust opinions.
//!
//! Evidence from `n` co-rated items gives uncertainty `u = 1/(n+1)`; the
//! remaining mass is split by the similarity `w` as
//! `b = ½(1 − u)(1 + w^k)`, `d = 1 − b − u`. The inverse recovers `w` from
//! an opinion using the opinion's own uncertainty, so it also applies to
//! opinions produced by discounting and consensus.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::opinion::{Opinion, OpinionError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrustMapError {
    #[error("k exponent must be an odd positive integer, got {0}")]
    InvalidExponent(u32),
    #[error("similarity {0} outside [-1, 1]")]
    SimilarityOutOfRange(f64),
    #[error("vacuous opinion carries no similarity information")]
    NoInformation,
    #[error(transparent)]
    Opinion(#[from] OpinionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceMapConfig {
    k: u32,
}

impl EvidenceMapConfig {
    /// Only odd exponents keep the sign of `w` in `w^k`.
    pub fn new(k: u32) -> Result<Self, TrustMapError> {
        if k == 0 || k.is_multiple_of(2) {
            return Err(TrustMapError::InvalidExponent(k));
        }
        Ok(EvidenceMapConfig { k })
    }

    pub fn k(&self) -> u32 {
        self.k
    }
}

impl Default for EvidenceMapConfig {
    fn default() -> Self {
        EvidenceMapConfig { k: 1 }
    }
}

pub fn uncertainty_from_overlap(n: usize) -> f64 {
    1.0 / (n as f64 + 1.0)
}

pub fn opinion_from_similarity(
    w: f64,
    n: usize,
    cfg: &EvidenceMapConfig,
) -> Result<Opinion, TrustMapError> {
    if !(-1.0..=1.0).contains(&w) {
        return Err(TrustMapError::SimilarityOutOfRange(w));
    }
    let u = uncertainty_from_overlap(n);
    let b = 0.5 * (1.0 - u) * (1.0 + w.powi(cfg.k as i32));
    // b ∈ [0, 1-u] for odd k, so d is non-negative up to rounding
    let d = (1.0 - b - u).max(0.0);
    Ok(Opinion::new(b, d, u)?)
}

pub fn similarity_from_opinion(o: &Opinion, cfg: &EvidenceMapConfig) -> Result<f64, TrustMapError> {
    Opinion::new(o.belief, o.disbelief, o.uncertainty)?;
    if o.is_vacuous() {
        return Err(TrustMapError::NoInformation);
    }
    let base = (2.0 * o.belief / (1.0 - o.uncertainty) - 1.0).clamp(-1.0, 1.0);
    let w = if cfg.k == 1 {
        base
    } else {
        base.signum() * base.abs().powf(1.0 / cfg.k as f64)
    };
    Ok(w.clamp(-1.0, 1.0))
}
