//! Time-sliced leave-one-out evaluation.
//!
//! Every rating of every sufficiently active user is removed in turn and
//! predicted from the rest of its window, once with direct neighbors only
//! (standard) and once with trust-derived two-hop neighbors added (hybrid).
//! The held-out rating is excluded from everything its own prediction uses:
//! the user's mean, the co-rated overlap and Pearson score of every pair it
//! belongs to, and therefore the trust edges and paths built on them.
//! Setting [`EvalConfig::fast_mode`] skips that adjustment and reuses the
//! statistics of the full window, which leaks the held-out value.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{
    cumulative_windows, first_experience_entities, slice_windows, sparsity, subsample_users,
    DatasetError, ItemId, Rating, RatingsView, UserId, Window,
};
use crate::metrics::{
    coverage_of, f_score, mae_percent, pooled_trust_ratio, trust_graph_contribution, ucg,
    ConfusionCounts, UcgInputs,
};
use crate::opinion::Opinion;
use crate::predictor::{clamp_rating, resnick, Contribution, Prediction, PredictorConfig};
use crate::similarity::{PairStats, DEFAULT_MIN_OVERLAP};
use crate::trust_graph::{combine_paths, trusted_weight, PredictionMode, TrustGraph};
use crate::trust_map::{opinion_from_similarity, EvidenceMapConfig};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("cannot build worker pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub min_overlap: usize,
    pub evidence: EvidenceMapConfig,
    pub predictor: PredictorConfig,
    /// Users with fewer ratings in the window are not evaluated.
    pub min_user_ratings: usize,
    pub fast_mode: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            min_overlap: DEFAULT_MIN_OVERLAP,
            evidence: EvidenceMapConfig::default(),
            predictor: PredictorConfig::default(),
            min_user_ratings: 10,
            fast_mode: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeSelection {
    Both,
    StandardOnly,
    HybridOnly,
}

impl ModeSelection {
    pub fn modes(self) -> &'static [PredictionMode] {
        match self {
            ModeSelection::Both => &[PredictionMode::Standard, PredictionMode::Hybrid],
            ModeSelection::StandardOnly => &[PredictionMode::Standard],
            ModeSelection::HybridOnly => &[PredictionMode::Hybrid],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModeSelection::Both => "both",
            ModeSelection::StandardOnly => "standard-only",
            ModeSelection::HybridOnly => "hybrid-only",
        }
    }
}

impl FromStr for ModeSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "both" => Ok(ModeSelection::Both),
            "standard-only" => Ok(ModeSelection::StandardOnly),
            "hybrid-only" => Ok(ModeSelection::HybridOnly),
            other => Err(format!(
                "unknown mode selection `{other}` (expected both, standard-only or hybrid-only)"
            )),
        }
    }
}

impl fmt::Display for ModeSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub eval: EvalConfig,
    pub windows: usize,
    /// Window `k` holds everything up to its end instead of its own interval.
    pub cumulative: bool,
    pub user_cap: Option<usize>,
    pub seed: u64,
    pub modes: ModeSelection,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            eval: EvalConfig::default(),
            windows: 5,
            cumulative: false,
            user_cap: None,
            seed: 42,
            modes: ModeSelection::Both,
            threads: 0,
        }
    }
}

/// Outcome of predicting one held-out rating in one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LooOutcome {
    pub held_out: Rating,
    pub prediction: Option<Prediction>,
    pub trusted_used: usize,
    pub similar_used: usize,
}

/// Both modes for one held-out rating.
#[derive(Debug, Clone, Copy, PartialEq)]
struct HeldOut {
    rating: Rating,
    standard: Option<Prediction>,
    hybrid: Option<Prediction>,
}

/// Dense per-window index used by the leave-one-out loop.
struct WindowIndex<'a> {
    view: &'a RatingsView,
    users: Vec<UserId>,
    items: Vec<ItemId>,
    rows: Vec<Vec<(u32, u8)>>,
    cols: Vec<Vec<(u32, u8)>>,
    /// Position of each user's first rating in `view.ratings()`.
    offsets: Vec<usize>,
    sums: Vec<i64>,
    means: Vec<f64>,
    /// Direct edges of the full window, sorted by neighbor index.
    adjacency: Vec<Vec<(u32, Opinion)>>,
    adjacency_bits: Vec<Vec<u64>>,
    words: usize,
}

#[derive(Debug, Clone, Copy)]
struct Link {
    opinion: Opinion,
    w: f64,
}

fn link(stats: &PairStats, cfg: &EvalConfig) -> Option<Link> {
    let s = stats.score(cfg.min_overlap)?;
    let opinion = opinion_from_similarity(s.w, s.overlap, &cfg.evidence).expect("w within [-1, 1]");
    Some(Link { opinion, w: s.w })
}

fn set_bit(bits: &mut [u64], k: usize) {
    bits[k / 64] |= 1 << (k % 64);
}

fn clear_bit(bits: &mut [u64], k: usize) {
    bits[k / 64] &= !(1 << (k % 64));
}

fn has_bit(bits: &[u64], k: usize) -> bool {
    bits[k / 64] >> (k % 64) & 1 == 1
}

impl<'a> WindowIndex<'a> {
    fn new(view: &'a RatingsView, cfg: &EvalConfig) -> Self {
        let users: Vec<UserId> = view.users().collect();
        let items: Vec<ItemId> = view.items().collect();
        let item_pos: BTreeMap<ItemId, u32> = items
            .iter()
            .enumerate()
            .map(|(k, &i)| (i, k as u32))
            .collect();
        let user_pos: BTreeMap<UserId, u32> = users
            .iter()
            .enumerate()
            .map(|(k, &u)| (u, k as u32))
            .collect();
        let rows: Vec<Vec<(u32, u8)>> = users
            .iter()
            .map(|&u| {
                view.user_ratings(u)
                    .unwrap_or_default()
                    .iter()
                    .map(|&(i, v)| (item_pos[&i], v))
                    .collect()
            })
            .collect();
        let cols: Vec<Vec<(u32, u8)>> = items
            .iter()
            .map(|&i| {
                view.item_ratings(i)
                    .unwrap_or_default()
                    .iter()
                    .map(|&(u, v)| (user_pos[&u], v))
                    .collect()
            })
            .collect();
        let offsets = rows
            .iter()
            .scan(0, |acc, r: &Vec<(u32, u8)>| {
                let start = *acc;
                *acc += r.len();
                Some(start)
            })
            .collect();
        let sums: Vec<i64> = rows
            .iter()
            .map(|r| r.iter().map(|&(_, v)| v as i64).sum())
            .collect();
        let means = sums
            .iter()
            .zip(&rows)
            .map(|(&s, r)| s as f64 / r.len() as f64)
            .collect();
        let words = users.len().div_ceil(64).max(1);
        let mut index = WindowIndex {
            view,
            users,
            items,
            rows,
            cols,
            offsets,
            sums,
            means,
            adjacency: Vec::new(),
            adjacency_bits: Vec::new(),
            words,
        };
        let adjacency: Vec<Vec<(u32, Opinion)>> = (0..index.users.len())
            .into_par_iter()
            .map(|a| {
                let stats = index.pair_stats(a);
                stats
                    .iter()
                    .enumerate()
                    .filter(|&(c, _)| c != a)
                    .filter_map(|(c, s)| link(s, cfg).map(|l| (c as u32, l.opinion)))
                    .collect()
            })
            .collect();
        index.adjacency_bits = adjacency
            .iter()
            .map(|adj| {
                let mut bits = vec![0u64; words];
                for &(c, _) in adj {
                    set_bit(&mut bits, c as usize);
                }
                bits
            })
            .collect();
        index.adjacency = adjacency;
        index
    }

    /// Co-rating statistics of user `a` with every user (indexed by position).
    fn pair_stats(&self, a: usize) -> Vec<PairStats> {
        let mut stats = vec![PairStats::default(); self.users.len()];
        for &(i, x) in &self.rows[a] {
            for &(c, y) in &self.cols[i as usize] {
                stats[c as usize].add(x, y);
            }
        }
        stats
    }

    fn edge(&self, c: usize, d: usize) -> Opinion {
        let adj = &self.adjacency[c];
        let k = adj
            .binary_search_by_key(&(d as u32), |e| e.0)
            .expect("edge present in bitset");
        adj[k].1
    }

    fn evaluate_user(&self, a: usize, cfg: &EvalConfig) -> Vec<HeldOut> {
        let stats = self.pair_stats(a);
        let links: Vec<Option<Link>> = stats
            .iter()
            .enumerate()
            .map(|(c, s)| if c == a { None } else { link(s, cfg) })
            .collect();
        let mut base_bits = vec![0u64; self.words];
        for (c, l) in links.iter().enumerate() {
            if l.is_some() {
                set_bit(&mut base_bits, c);
            }
        }
        let n_a = self.rows[a].len();
        let mut overrides: Vec<Option<Option<Link>>> = vec![None; self.users.len()];
        let mut out = Vec::with_capacity(n_a);
        for (k, &(i, r)) in self.rows[a].iter().enumerate() {
            let rating = self.view.ratings()[self.offsets[a] + k];
            debug_assert_eq!((rating.item, rating.value), (self.items[i as usize], r));
            let raters = &self.cols[i as usize];
            let mut bits = base_bits.clone();
            let mean_a = if cfg.fast_mode {
                self.means[a]
            } else {
                for &(c, y) in raters {
                    let c = c as usize;
                    if c == a || links[c].is_none() {
                        continue;
                    }
                    let mut s = stats[c];
                    s.remove(r, y);
                    let adjusted = link(&s, cfg);
                    if adjusted.is_none() {
                        clear_bit(&mut bits, c);
                    }
                    overrides[c] = Some(adjusted);
                }
                (self.sums[a] - r as i64) as f64 / (n_a - 1) as f64
            };
            let link_to = |c: usize| -> Link {
                match overrides[c] {
                    Some(l) => l.expect("only admissible links are looked up"),
                    None => links[c].expect("only admissible links are looked up"),
                }
            };

            let mut similar: Vec<Contribution> = Vec::new();
            let mut hybrid: Vec<Contribution> = Vec::new();
            let mut trusted = 0;
            let mut scratch = vec![0u64; self.words];
            for &(d, y) in raters {
                let d = d as usize;
                if d == a {
                    continue;
                }
                let contribution = |weight: f64| Contribution {
                    weight,
                    rating: y as f64,
                    mean: self.means[d],
                };
                if has_bit(&bits, d) {
                    let c = contribution(link_to(d).w);
                    similar.push(c);
                    hybrid.push(c);
                    continue;
                }
                for (w, (x, adj)) in scratch
                    .iter_mut()
                    .zip(bits.iter().zip(&self.adjacency_bits[d]))
                {
                    *w = x & adj;
                }
                let paths = scratch.iter().enumerate().flat_map(|(k, &word)| {
                    let mut word = word;
                    std::iter::from_fn(move || {
                        if word == 0 {
                            return None;
                        }
                        let bit = word.trailing_zeros() as usize;
                        word &= word - 1;
                        Some(k * 64 + bit)
                    })
                });
                let combined = combine_paths(paths.map(|c| (link_to(c).opinion, self.edge(c, d))));
                if let Some((opinion, _)) = combined {
                    if let Some(weight) = trusted_weight(&opinion, &cfg.evidence) {
                        hybrid.push(contribution(weight));
                        trusted += 1;
                    }
                }
            }
            for &(c, _) in raters {
                overrides[c as usize] = None;
            }

            let make = |contribs: Vec<Contribution>, trusted: usize| {
                let n = contribs.len();
                resnick(mean_a, contribs, cfg.predictor.normalize).map(|raw| Prediction {
                    user: rating.user,
                    item: rating.item,
                    value: clamp_rating(raw),
                    raw_value: raw,
                    contributors_similar: n - trusted,
                    contributors_trusted: trusted,
                })
            };
            out.push(HeldOut {
                rating,
                standard: make(similar, 0),
                hybrid: make(hybrid, trusted),
            });
        }
        out
    }

    fn evaluate(&self, cfg: &EvalConfig) -> Vec<HeldOut> {
        (0..self.users.len())
            .into_par_iter()
            .filter(|&a| self.rows[a].len() >= cfg.min_user_ratings.max(2))
            .map(|a| self.evaluate_user(a, cfg))
            .flatten()
            .collect()
    }
}

fn to_outcome(rating: Rating, prediction: Option<Prediction>) -> LooOutcome {
    LooOutcome {
        held_out: rating,
        prediction,
        trusted_used: prediction.map_or(0, |p| p.contributors_trusted),
        similar_used: prediction.map_or(0, |p| p.contributors_similar),
    }
}

/// Runs the leave-one-out loop over one window in one mode. Outcomes are
/// ordered by user, then item.
pub fn leave_one_out(
    view: &RatingsView,
    mode: PredictionMode,
    cfg: &EvalConfig,
) -> Vec<LooOutcome> {
    if view.is_empty() {
        return Vec::new();
    }
    WindowIndex::new(view, cfg)
        .evaluate(cfg)
        .into_iter()
        .map(|h| match mode {
            PredictionMode::Standard => to_outcome(h.rating, h.standard),
            PredictionMode::Hybrid => to_outcome(h.rating, h.hybrid),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Population {
    All,
    NewUsers,
    NewItems,
}

impl Population {
    pub const ALL: [Population; 3] = [Population::All, Population::NewUsers, Population::NewItems];

    pub fn as_str(self) -> &'static str {
        match self {
            Population::All => "all",
            Population::NewUsers => "new_users",
            Population::NewItems => "new_items",
        }
    }
}

/// Metrics for one (mode, population) cell of a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationMetrics {
    pub mode: PredictionMode,
    pub population: Population,
    /// Held-out ratings in the population.
    pub n_attempted: u64,
    /// Held-out ratings that received a prediction.
    pub n_predictions: u64,
    pub users_served: u64,
    pub coverage: f64,
    pub mae_percent: Option<f64>,
    pub fscore: f64,
    pub ucg: Option<f64>,
    pub tgc: Option<f64>,
    pub tgc_pooled: Option<f64>,
    pub confusion: ConfusionCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub ts_index: usize,
    pub window: Window,
    pub sparsity: Option<f64>,
    pub n_ratings: usize,
    pub n_users: usize,
    pub n_items: usize,
    pub new_users: usize,
    pub new_items: usize,
    pub rows: Vec<PopulationMetrics>,
}

impl WindowReport {
    pub fn get(&self, mode: PredictionMode, population: Population) -> Option<&PopulationMetrics> {
        self.rows
            .iter()
            .find(|r| r.mode == mode && r.population == population)
    }
}

#[derive(Default)]
struct Tally {
    attempted: u64,
    pairs: Vec<(f64, f64)>,
    contributors: Vec<(usize, usize)>,
    users: BTreeSet<UserId>,
}

impl Tally {
    fn add(&mut self, rating: &Rating, prediction: Option<&Prediction>) {
        self.attempted += 1;
        if let Some(p) = prediction {
            self.pairs.push((p.value, rating.value as f64));
            self.contributors
                .push((p.contributors_trusted, p.contributors_similar));
            self.users.insert(rating.user);
        }
    }
}

fn in_population(
    p: Population,
    r: &Rating,
    new_users: &BTreeSet<UserId>,
    new_items: &BTreeSet<ItemId>,
) -> bool {
    match p {
        Population::All => true,
        Population::NewUsers => new_users.contains(&r.user),
        Population::NewItems => new_items.contains(&r.item),
    }
}

/// Evaluates one window. `new_users`/`new_items` are the entities whose first
/// rating in the dataset falls in this window.
pub fn evaluate_window(
    view: &RatingsView,
    new_users: &BTreeSet<UserId>,
    new_items: &BTreeSet<ItemId>,
    cfg: &ExperimentConfig,
) -> WindowReport {
    let window = view.window();
    let new_users: BTreeSet<UserId> = new_users
        .iter()
        .copied()
        .filter(|u| view.contains_user(*u))
        .collect();
    let new_items: BTreeSet<ItemId> = new_items
        .iter()
        .copied()
        .filter(|i| view.item_ratings(*i).is_some())
        .collect();
    let modes = cfg.modes.modes();
    let held_out = if view.is_empty() {
        Vec::new()
    } else {
        WindowIndex::new(view, &cfg.eval).evaluate(&cfg.eval)
    };
    let graph = TrustGraph::build(view, cfg.eval.min_overlap, &cfg.eval.evidence);
    let all_users: BTreeSet<UserId> = view.users().collect();
    let all_items: BTreeSet<ItemId> = view.items().collect();

    let mut tallies: BTreeMap<(Population, PredictionMode), Tally> = BTreeMap::new();
    for h in &held_out {
        for p in Population::ALL {
            if !in_population(p, &h.rating, &new_users, &new_items) {
                continue;
            }
            for &mode in modes {
                let pred = match mode {
                    PredictionMode::Standard => h.standard.as_ref(),
                    PredictionMode::Hybrid => h.hybrid.as_ref(),
                };
                tallies.entry((p, mode)).or_default().add(&h.rating, pred);
            }
        }
    }

    let mut rows = Vec::new();
    for p in Population::ALL {
        let gain = match (
            tallies.get(&(p, PredictionMode::Hybrid)),
            tallies.get(&(p, PredictionMode::Standard)),
        ) {
            (Some(h), Some(s)) if cfg.modes == ModeSelection::Both => ucg(&UcgInputs {
                hybrid_predictions: h.pairs.len() as u64,
                hybrid_users: h.users.len() as u64,
                standard_predictions: s.pairs.len() as u64,
                standard_users: s.users.len() as u64,
            }),
            _ => None,
        };
        let (users, items) = match p {
            Population::All => (&all_users, &all_items),
            Population::NewUsers => (&new_users, &all_items),
            Population::NewItems => (&all_users, &new_items),
        };
        for &mode in modes {
            let empty = Tally::default();
            let t = tallies.get(&(p, mode)).unwrap_or(&empty);
            let confusion = {
                let mut c = ConfusionCounts::default();
                for &(pred, actual) in &t.pairs {
                    c.record(pred, actual);
                }
                c
            };
            rows.push(PopulationMetrics {
                mode,
                population: p,
                n_attempted: t.attempted,
                n_predictions: t.pairs.len() as u64,
                users_served: t.users.len() as u64,
                coverage: coverage_of(view, &graph, mode, &cfg.eval.evidence, users, items),
                mae_percent: mae_percent(&t.pairs).ok(),
                fscore: f_score(&confusion),
                ucg: gain,
                tgc: trust_graph_contribution(&t.contributors),
                tgc_pooled: pooled_trust_ratio(&t.contributors),
                confusion,
            });
        }
    }

    WindowReport {
        ts_index: window.index,
        window,
        sparsity: sparsity(view).ok().map(|s| s.sparsity),
        n_ratings: view.len(),
        n_users: view.num_users(),
        n_items: view.num_items(),
        new_users: new_users.len(),
        new_items: new_items.len(),
        rows,
    }
}

/// A window's view with the users and items first seen in it.
pub type WindowView = (RatingsView, BTreeSet<UserId>, BTreeSet<ItemId>);

/// The views evaluated for each window (disjoint or cumulative, then capped).
pub fn window_views(
    ratings: &[Rating],
    cfg: &ExperimentConfig,
) -> Result<Vec<WindowView>, DatasetError> {
    let disjoint = slice_windows(ratings, cfg.windows)?;
    let views = if cfg.cumulative {
        cumulative_windows(ratings, cfg.windows)?
    } else {
        disjoint.clone()
    };
    let mut out = Vec::with_capacity(views.len());
    for (k, view) in views.into_iter().enumerate() {
        let (new_users, new_items) = first_experience_entities(&disjoint, k)?;
        let view = match cfg.user_cap {
            Some(cap) => subsample_users(&view, cap, cfg.seed),
            None => view,
        };
        out.push((view, new_users, new_items));
    }
    Ok(out)
}

/// Slices the ratings into windows and evaluates each of them.
pub fn evaluate_dataset(
    ratings: &[Rating],
    cfg: &ExperimentConfig,
) -> Result<Vec<WindowReport>, EvalError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| EvalError::ThreadPool(e.to_string()))?;
    pool.install(|| {
        let views = window_views(ratings, cfg)?;
        Ok(views
            .iter()
            .enumerate()
            .map(|(k, (view, new_users, new_items))| {
                let mut report = evaluate_window(view, new_users, new_items, cfg);
                report.ts_index = k;
                report
            })
            .collect())
    })
}
