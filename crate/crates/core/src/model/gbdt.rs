//! Second-order gradient boosting with logistic loss.
//!
//! Each round computes `g = p - y` and `h = p (1 - p)` from the current
//! margins and grows `num_parallel_tree` trees on them, each on its own
//! column subsample. Splits come from an exact greedy search maximizing
//!
//! ```text
//! gain = 1/2 [GL²/(HL+λ) + GR²/(HR+λ) - (GL+GR)²/(HL+HR+λ)] - γ
//! ```
//!
//! and are kept only when the gain is positive and both children carry at
//! least `min_child_weight` hessian. Leaves output `-G/(H+λ)`; the margin
//! moves by `eta` times the mean output of the round's trees.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{midpoint, TreeNode};
use super::{Dataset, ModelError};
use crate::scalar::{sigmoid, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GbdtParams {
    pub eta: f64,
    pub max_depth: usize,
    pub min_child_weight: f64,
    pub gamma: f64,
    pub colsample_bytree: f64,
    pub num_parallel_tree: usize,
    pub lambda: f64,
    pub num_rounds: usize,
    pub seed: u64,
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams {
            eta: 0.56,
            max_depth: 20,
            min_child_weight: 1.0,
            gamma: 15.0,
            colsample_bytree: 0.5,
            num_parallel_tree: 8,
            lambda: 1.0,
            num_rounds: 100,
            seed: 42,
        }
    }
}

impl GbdtParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |what: &str| Err(ModelError::Param(what.to_string()));
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad("eta must be in (0, 1]");
        }
        if self.max_depth < 1 {
            return bad("max_depth must be at least 1");
        }
        if !(self.min_child_weight >= 0.0) || !self.min_child_weight.is_finite() {
            return bad("min_child_weight must be >= 0");
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return bad("gamma must be >= 0");
        }
        if !(self.colsample_bytree > 0.0 && self.colsample_bytree <= 1.0) {
            return bad("colsample_bytree must be in (0, 1]");
        }
        if self.num_parallel_tree < 1 {
            return bad("num_parallel_tree must be at least 1");
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return bad("lambda must be >= 0");
        }
        if self.num_rounds < 1 {
            return bad("num_rounds must be at least 1");
        }
        Ok(())
    }

    /// Number of columns each tree sees.
    pub fn columns_per_tree(&self, n_features: usize) -> usize {
        ((self.colsample_bytree * n_features as f64).ceil() as usize).clamp(1, n_features.max(1))
    }
}

/// A trained boosted ensemble.
///
/// `probability = sigmoid(base_score + Σ_rounds eta · mean(round trees))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GbdtEnsemble<T> {
    pub params: GbdtParams,
    pub feature_names: Vec<String>,
    pub base_score: T,
    pub eta: T,
    pub rounds: Vec<Vec<TreeNode<T>>>,
    pub model_version: String,
}

impl<T: Scalar> GbdtEnsemble<T> {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn margin(&self, row: &[T]) -> T {
        self.rounds
            .iter()
            .fold(self.base_score, |m, trees| m + round_step(trees, self.eta, row))
    }

    pub fn probability(&self, row: &[T]) -> Result<T, ModelError> {
        if row.len() != self.n_features() {
            return Err(ModelError::Arity {
                expected: self.n_features(),
                found: row.len(),
            });
        }
        Ok(sigmoid(self.margin(row)))
    }

    /// The model made of the first `rounds` rounds.
    pub fn truncated(&self, rounds: usize) -> Self {
        GbdtEnsemble {
            rounds: self.rounds[..rounds.min(self.rounds.len())].to_vec(),
            ..self.clone()
        }
    }

    pub fn trees(&self) -> impl Iterator<Item = &TreeNode<T>> {
        self.rounds.iter().flatten()
    }
}

/// `eta` times the mean output of one round's trees.
fn round_step<T: Scalar>(trees: &[TreeNode<T>], eta: T, row: &[T]) -> T {
    if trees.is_empty() {
        return T::zero();
    }
    let sum = trees.iter().fold(T::zero(), |acc, t| acc + t.evaluate(row));
    eta * (sum / T::of_usize(trees.len()))
}

pub fn predict<T: Scalar>(ensemble: &GbdtEnsemble<T>, row: &[T]) -> Result<T, ModelError> {
    ensemble.probability(row)
}

pub fn train<T: Scalar>(data: &Dataset<T>, params: &GbdtParams) -> Result<GbdtEnsemble<T>, ModelError> {
    params.validate()?;
    fit(data, params)
}

/// Training without parameter validation (used to exercise `eta = 0`).
pub(crate) fn fit<T: Scalar>(data: &Dataset<T>, params: &GbdtParams) -> Result<GbdtEnsemble<T>, ModelError> {
    let (pos, neg) = data.check_trainable()?;
    let n = data.len();
    let base_score = T::of((pos as f64 / neg as f64).ln());
    let eta = T::of(params.eta);
    let sorted = presort(data);
    let columns_per_tree = params.columns_per_tree(data.n_features());
    let labels: Vec<T> = data.labels().iter().map(|&y| T::of(f64::from(y))).collect();

    let mut margins = vec![base_score; n];
    let mut grad = vec![T::zero(); n];
    let mut hess = vec![T::zero(); n];
    let mut rounds = Vec::with_capacity(params.num_rounds);
    let split = SplitParams::from(params);

    for round in 0..params.num_rounds {
        for i in 0..n {
            let p = sigmoid(margins[i]);
            grad[i] = p - labels[i];
            hess[i] = p * (T::one() - p);
        }
        let grower = Grower {
            data,
            sorted: &sorted,
            grad: &grad,
            hess: &hess,
            params: split,
        };
        let trees: Vec<TreeNode<T>> = (0..params.num_parallel_tree)
            .into_par_iter()
            .map(|k| {
                let columns = sample_columns(
                    data.n_features(),
                    columns_per_tree,
                    tree_seed(params.seed, round as u64, k as u64),
                );
                grower.grow(&columns)
            })
            .collect();
        margins
            .par_iter_mut()
            .enumerate()
            .for_each(|(i, m)| *m = *m + round_step(&trees, eta, data.row(i)));
        rounds.push(trees);
    }

    let mut ensemble = GbdtEnsemble {
        params: *params,
        feature_names: data.names().to_vec(),
        base_score,
        eta,
        rounds,
        model_version: String::new(),
    };
    ensemble.model_version = super::io::fingerprint(&ensemble);
    Ok(ensemble)
}

/// One feature column in ascending order (ties by row index).
pub(crate) struct SortedColumn<T> {
    pub rows: Vec<u32>,
    pub values: Vec<T>,
}

pub(crate) fn presort<T: Scalar>(data: &Dataset<T>) -> Vec<SortedColumn<T>> {
    (0..data.n_features())
        .into_par_iter()
        .map(|f| {
            let mut rows: Vec<u32> = (0..data.len() as u32).collect();
            rows.sort_by(|&a, &b| {
                data.value(a as usize, f)
                    .partial_cmp(&data.value(b as usize, f))
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
            let values = rows.iter().map(|&r| data.value(r as usize, f)).collect();
            SortedColumn { rows, values }
        })
        .collect()
}

/// Deterministic per-tree seed, independent of scheduling order.
pub(crate) fn tree_seed(seed: u64, round: u64, tree: u64) -> u64 {
    let mut z = seed
        ^ round.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ tree.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn sample_columns(n_features: usize, take: usize, seed: u64) -> Vec<usize> {
    if take >= n_features {
        return (0..n_features).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols = index::sample(&mut rng, n_features, take).into_vec();
    cols.sort_unstable();
    cols
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SplitParams<T> {
    pub max_depth: usize,
    pub min_child_weight: T,
    pub gamma: T,
    pub lambda: T,
}

impl<T: Scalar> From<&GbdtParams> for SplitParams<T> {
    fn from(p: &GbdtParams) -> Self {
        SplitParams {
            max_depth: p.max_depth,
            min_child_weight: T::of(p.min_child_weight),
            gamma: T::of(p.gamma),
            lambda: T::of(p.lambda),
        }
    }
}

const INACTIVE: u32 = u32::MAX;

#[derive(Clone, Copy)]
struct Candidate<T> {
    feature: usize,
    threshold: T,
    gain: T,
}

#[derive(Clone, Copy)]
struct Scan<T> {
    gl: T,
    hl: T,
    last: Option<T>,
    best: Option<Candidate<T>>,
}

struct Open<T> {
    arena: usize,
    g: T,
    h: T,
}

enum Slot<T> {
    Pending,
    Leaf(T),
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
    },
}

/// Level-wise exact greedy tree construction over presorted columns.
pub(crate) struct Grower<'a, T> {
    pub data: &'a Dataset<T>,
    pub sorted: &'a [SortedColumn<T>],
    pub grad: &'a [T],
    pub hess: &'a [T],
    pub params: SplitParams<T>,
}

impl<T: Scalar> Grower<'_, T> {
    fn weight(&self, g: T, h: T) -> T {
        -g / (h + self.params.lambda)
    }

    fn score(&self, g: T, h: T) -> T {
        g * g / (h + self.params.lambda)
    }

    pub fn grow(&self, columns: &[usize]) -> TreeNode<T> {
        let n = self.data.len();
        let mut node_of = vec![0u32; n];
        let (g, h) = (0..n).fold((T::zero(), T::zero()), |(g, h), i| (g + self.grad[i], h + self.hess[i]));
        let mut arena = vec![Slot::Pending];
        let mut frontier = vec![Open { arena: 0, g, h }];
        let mut depth = 0;

        while !frontier.is_empty() {
            let best = if depth < self.params.max_depth {
                self.best_splits(columns, &node_of, &frontier)
            } else {
                vec![None; frontier.len()]
            };

            // Children of split nodes form the next level, in slot order.
            let mut routes: Vec<Option<(usize, T, u32, u32)>> = Vec::with_capacity(frontier.len());
            let mut next = Vec::new();
            for (open, cand) in frontier.iter().zip(&best) {
                match cand {
                    Some(c) if c.gain > T::zero() => {
                        let left = arena.len();
                        arena.push(Slot::Pending);
                        arena.push(Slot::Pending);
                        arena[open.arena] = Slot::Split {
                            feature: c.feature,
                            threshold: c.threshold,
                            left,
                            right: left + 1,
                        };
                        let left_slot = next.len() as u32;
                        next.push(Open { arena: left, g: T::zero(), h: T::zero() });
                        next.push(Open { arena: left + 1, g: T::zero(), h: T::zero() });
                        routes.push(Some((c.feature, c.threshold, left_slot, left_slot + 1)));
                    }
                    _ => {
                        arena[open.arena] = Slot::Leaf(self.weight(open.g, open.h));
                        routes.push(None);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            for (row, slot) in node_of.iter_mut().enumerate() {
                if *slot == INACTIVE {
                    continue;
                }
                *slot = match routes[*slot as usize] {
                    None => INACTIVE,
                    Some((feature, threshold, left, right)) => {
                        let child = if self.data.value(row, feature) < threshold { left } else { right };
                        let open = &mut next[child as usize];
                        open.g = open.g + self.grad[row];
                        open.h = open.h + self.hess[row];
                        child
                    }
                };
            }
            frontier = next;
            depth += 1;
        }
        build(&arena, 0)
    }

    fn best_splits(&self, columns: &[usize], node_of: &[u32], frontier: &[Open<T>]) -> Vec<Option<Candidate<T>>> {
        let p = &self.params;
        let parent_scores: Vec<T> = frontier.iter().map(|o| self.score(o.g, o.h)).collect();
        let mut best: Vec<Option<Candidate<T>>> = vec![None; frontier.len()];
        let empty = Scan { gl: T::zero(), hl: T::zero(), last: None, best: None };
        let mut scans = vec![empty; frontier.len()];

        for &feature in columns {
            scans.iter_mut().for_each(|s| *s = empty);
            let column = &self.sorted[feature];
            for (&row, &x) in column.rows.iter().zip(&column.values) {
                let row = row as usize;
                let slot = node_of[row];
                if slot == INACTIVE {
                    continue;
                }
                let slot = slot as usize;
                let scan = &mut scans[slot];
                if let Some(last) = scan.last {
                    if x > last {
                        let open = &frontier[slot];
                        let (gl, hl) = (scan.gl, scan.hl);
                        let (gr, hr) = (open.g - gl, open.h - hl);
                        if hl >= p.min_child_weight && hr >= p.min_child_weight {
                            let gain = T::HALF * (self.score(gl, hl) + self.score(gr, hr) - parent_scores[slot]) - p.gamma;
                            if scan.best.map_or(true, |b| gain > b.gain) {
                                scan.best = Some(Candidate { feature, threshold: midpoint(last, x), gain });
                            }
                        }
                    }
                }
                scan.gl = scan.gl + self.grad[row];
                scan.hl = scan.hl + self.hess[row];
                scan.last = Some(x);
            }
            for (slot, scan) in scans.iter().enumerate() {
                if let Some(c) = scan.best {
                    if best[slot].map_or(true, |b| c.gain > b.gain) {
                        best[slot] = Some(c);
                    }
                }
            }
        }
        best
    }
}

fn build<T: Scalar>(arena: &[Slot<T>], at: usize) -> TreeNode<T> {
    match arena[at] {
        Slot::Leaf(weight) => TreeNode::Leaf { weight },
        Slot::Split { feature, threshold, left, right } => TreeNode::Split {
            feature,
            threshold,
            missing_goes_left: true,
            left: Box::new(build(arena, left)),
            right: Box::new(build(arena, right)),
        },
        Slot::Pending => unreachable!("unresolved tree node"),
    }
}
