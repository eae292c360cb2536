//! Pearson similarity between users over their co-rated items.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{ItemId, RatingsView, UserId};

pub const DEFAULT_MIN_OVERLAP: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimilarityError {
    #[error("user {0} has no ratings in this view")]
    UnknownUser(UserId),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityScore {
    pub w: f64,
    pub overlap: usize,
}

/// Sufficient statistics of two users' co-rated values.
///
/// Ratings are small integers, so every sum is exact and a term can be
/// removed again without any rounding.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PairStats {
    pub n: i64,
    sx: i64,
    sy: i64,
    sxx: i64,
    syy: i64,
    sxy: i64,
}

impl PairStats {
    pub fn add(&mut self, x: u8, y: u8) {
        let (x, y) = (x as i64, y as i64);
        self.n += 1;
        self.sx += x;
        self.sy += y;
        self.sxx += x * x;
        self.syy += y * y;
        self.sxy += x * y;
    }

    pub fn remove(&mut self, x: u8, y: u8) {
        let (x, y) = (x as i64, y as i64);
        self.n -= 1;
        self.sx -= x;
        self.sy -= y;
        self.sxx -= x * x;
        self.syy -= y * y;
        self.sxy -= x * y;
    }

    /// Same statistics with the roles of the two users swapped.
    pub fn swapped(&self) -> PairStats {
        PairStats {
            n: self.n,
            sx: self.sy,
            sy: self.sx,
            sxx: self.syy,
            syy: self.sxx,
            sxy: self.sxy,
        }
    }

    /// Pearson correlation, or `None` when either side has zero variance
    /// (or there are fewer than two observations).
    pub fn correlation(&self) -> Option<f64> {
        if self.n < 2 {
            return None;
        }
        let cov = self.n * self.sxy - self.sx * self.sy;
        let var_x = self.n * self.sxx - self.sx * self.sx;
        let var_y = self.n * self.syy - self.sy * self.sy;
        if var_x == 0 || var_y == 0 {
            return None;
        }
        let w = cov as f64 / ((var_x as f64) * (var_y as f64)).sqrt();
        Some(w.clamp(-1.0, 1.0))
    }

    /// Score if the pair meets the overlap rule and the correlation is defined.
    pub fn score(&self, min_overlap: usize) -> Option<SimilarityScore> {
        if (self.n as usize) < min_overlap {
            return None;
        }
        self.correlation().map(|w| SimilarityScore {
            w,
            overlap: self.n as usize,
        })
    }
}

fn ratings_of(view: &RatingsView, u: UserId) -> Result<&[(ItemId, u8)], SimilarityError> {
    view.user_ratings(u).ok_or(SimilarityError::UnknownUser(u))
}

/// Merge-walk over two item-sorted rating rows.
fn for_each_common(a: &[(ItemId, u8)], b: &[(ItemId, u8)], mut f: impl FnMut(ItemId, u8, u8)) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                f(a[i].0, a[i].1, b[j].1);
                i += 1;
                j += 1;
            }
        }
    }
}

/// Items rated by both users.
pub fn co_rated(
    view: &RatingsView,
    a: UserId,
    u: UserId,
) -> Result<BTreeSet<ItemId>, SimilarityError> {
    let (ra, ru) = (ratings_of(view, a)?, ratings_of(view, u)?);
    let mut out = BTreeSet::new();
    for_each_common(ra, ru, |item, _, _| {
        out.insert(item);
    });
    Ok(out)
}

pub fn pair_stats(view: &RatingsView, a: UserId, u: UserId) -> Result<PairStats, SimilarityError> {
    let (ra, ru) = (ratings_of(view, a)?, ratings_of(view, u)?);
    let mut stats = PairStats::default();
    for_each_common(ra, ru, |_, x, y| stats.add(x, y));
    Ok(stats)
}

/// Pearson correlation of `a` and `u` over their co-rated items, using means
/// over those items. `Ok(None)` means inadmissible: fewer than `min_overlap`
/// co-rated items, or a constant rating vector on either side.
pub fn pearson(
    view: &RatingsView,
    a: UserId,
    u: UserId,
    min_overlap: usize,
) -> Result<Option<SimilarityScore>, SimilarityError> {
    Ok(pair_stats(view, a, u)?.score(min_overlap))
}
