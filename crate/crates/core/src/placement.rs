//! Exact selection of charging-station locations.
//!
//! The problem is a maximum-weight selection under pairwise exclusion and a
//! cardinality bound: pick at most `k` candidates maximizing the summed
//! ratings while no two picked candidates conflict. It is solved exactly by
//! best-first branch and bound, with full enumeration as the oracle for
//! small instances.
//!
//! Determinism: among equal-objective optima both solvers return the
//! lexicographically smallest selection vector, and objectives are always
//! recomputed as the ascending-index dot product so the two routes agree
//! bitwise.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::paths::ConflictMatrix;
use crate::ranking::RatingVector;

#[derive(Debug, Error, PartialEq)]
pub enum PlacementError {
    #[error("ratings have length {got}, conflict matrix has {expected} candidates")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("rating {value} at candidate {index} is not a finite non-negative number")]
    InvalidRating { index: usize, value: f64 },
    #[error("{n} candidates exceed the enumeration limit of {max}")]
    InstanceTooLarge { n: usize, max: usize },
}

/// A placement instance: accumulated ratings, the conflict matrix, and the
/// station budget.
#[derive(Debug, Clone)]
pub struct PlacementProblem {
    ratings: RatingVector,
    conflicts: ConflictMatrix,
    max_stations: usize,
}

impl PlacementProblem {
    pub fn new(
        ratings: RatingVector,
        conflicts: ConflictMatrix,
        max_stations: usize,
    ) -> Result<PlacementProblem, PlacementError> {
        if ratings.len() != conflicts.n_candidates() {
            return Err(PlacementError::DimensionMismatch {
                expected: conflicts.n_candidates(),
                got: ratings.len(),
            });
        }
        if let Some((index, &value)) = ratings
            .values()
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(PlacementError::InvalidRating { index, value });
        }
        Ok(PlacementProblem {
            ratings,
            conflicts,
            max_stations,
        })
    }

    pub fn n_candidates(&self) -> usize {
        self.ratings.len()
    }

    pub fn ratings(&self) -> &[f64] {
        self.ratings.values()
    }

    pub fn conflicts(&self) -> &ConflictMatrix {
        &self.conflicts
    }

    pub fn max_stations(&self) -> usize {
        self.max_stations
    }
}

/// A selection vector with its objective and search statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementSolution {
    pub selected: Vec<bool>,
    pub objective: f64,
    pub optimal: bool,
    pub node_count: u64,
}

impl PlacementSolution {
    pub fn selected_indices(&self) -> Vec<usize> {
        self.selected
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.then_some(i))
            .collect()
    }

    pub fn selected_count(&self) -> usize {
        self.selected.iter().filter(|s| **s).count()
    }
}

/// Objective of a selection, summed in ascending candidate order. Every
/// reported objective goes through this single summation order.
pub fn selection_objective(selected: &[bool], ratings: &[f64]) -> f64 {
    selected
        .iter()
        .zip(ratings)
        .filter_map(|(s, p)| s.then_some(*p))
        .sum()
}

fn indices_objective(indices: &mut [usize], ratings: &[f64]) -> f64 {
    indices.sort_unstable();
    indices.iter().map(|&i| ratings[i]).sum()
}

#[derive(Debug, Clone, PartialEq)]
struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    fn new(n: usize) -> BitSet {
        BitSet {
            words: vec![0; n.div_ceil(64)],
        }
    }

    fn contains(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn union_with(&mut self, other: &BitSet) {
        for (w, o) in self.words.iter_mut().zip(&other.words) {
            *w |= o;
        }
    }
}

fn conflict_bitsets(conflicts: &ConflictMatrix) -> Vec<BitSet> {
    let n = conflicts.n_candidates();
    (0..n)
        .map(|i| {
            let mut set = BitSet::new(n);
            for j in 0..n {
                if conflicts.conflicting(i, j) {
                    set.insert(j);
                }
            }
            set
        })
        .collect()
}

struct SearchNode {
    bound: f64,
    serial: u64,
    depth: usize,
    budget: usize,
    partial: f64,
    chosen: Vec<usize>,
    banned: BitSet,
}

impl PartialEq for SearchNode {
    fn eq(&self, other: &Self) -> bool {
        self.serial == other.serial
    }
}
impl Eq for SearchNode {}

impl Ord for SearchNode {
    fn cmp(&self, other: &Self) -> Ordering {
        // max-heap on bound; earlier nodes first among equal bounds
        self.bound
            .total_cmp(&other.bound)
            .then(other.serial.cmp(&self.serial))
    }
}

impl PartialOrd for SearchNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Admissible bound: running sum plus the `budget` largest ratings still
/// selectable from `order[depth..]`.
fn upper_bound(
    ratings: &[f64],
    order: &[usize],
    depth: usize,
    banned: &BitSet,
    budget: usize,
    partial: f64,
) -> f64 {
    let mut bound = partial;
    let mut left = budget;
    for &c in &order[depth..] {
        if left == 0 {
            break;
        }
        if !banned.contains(c) {
            bound += ratings[c];
            left -= 1;
        }
    }
    bound
}

struct BranchOutcome {
    value: f64,
    chosen: Vec<usize>,
    nodes: u64,
}

/// Best-first branch and bound for the maximum objective reachable by
/// extending `base` with candidates from `order` (rating-descending) under
/// the remaining `budget`. `banned` carries conflicts of `base` plus any
/// candidates fixed to zero. Returns the exact maximum of the canonical
/// (ascending-index) objective together with one witness extension.
fn branch_max(
    ratings: &[f64],
    masks: &[BitSet],
    order: &[usize],
    base: &[usize],
    banned: &BitSet,
    budget: usize,
) -> BranchOutcome {
    let mut best_value = {
        let mut b = base.to_vec();
        indices_objective(&mut b, ratings)
    };
    let mut best_chosen: Vec<usize> = Vec::new();
    let mut nodes = 0u64;
    let mut serial = 0u64;
    let base_sum: f64 = base.iter().map(|&i| ratings[i]).sum();

    let mut heap = BinaryHeap::new();
    if budget > 0 && !order.is_empty() {
        let bound = upper_bound(ratings, order, 0, banned, budget, base_sum);
        if bound > best_value {
            heap.push(SearchNode {
                bound,
                serial,
                depth: 0,
                budget,
                partial: base_sum,
                chosen: Vec::new(),
                banned: banned.clone(),
            });
        }
    }

    while let Some(node) = heap.pop() {
        // best-first: once the largest bound cannot beat the incumbent,
        // nothing on the heap can
        if node.bound <= best_value {
            break;
        }
        nodes += 1;
        let mut depth = node.depth;
        while depth < order.len() && node.banned.contains(order[depth]) {
            depth += 1;
        }
        if depth == order.len() || node.budget == 0 {
            continue;
        }
        let candidate = order[depth];

        // include branch
        {
            let mut chosen = node.chosen.clone();
            chosen.push(candidate);
            let mut value_set: Vec<usize> =
                base.iter().copied().chain(chosen.iter().copied()).collect();
            let value = indices_objective(&mut value_set, ratings);
            if value > best_value {
                best_value = value;
                best_chosen = chosen.clone();
            }
            let mut child_banned = node.banned.clone();
            child_banned.union_with(&masks[candidate]);
            let child_budget = node.budget - 1;
            let partial = node.partial + ratings[candidate];
            if child_budget > 0 && depth + 1 < order.len() {
                let bound = upper_bound(
                    ratings,
                    order,
                    depth + 1,
                    &child_banned,
                    child_budget,
                    partial,
                );
                if bound > best_value {
                    serial += 1;
                    heap.push(SearchNode {
                        bound,
                        serial,
                        depth: depth + 1,
                        budget: child_budget,
                        partial,
                        chosen,
                        banned: child_banned,
                    });
                }
            }
        }

        // exclude branch
        if depth + 1 < order.len() {
            let bound = upper_bound(
                ratings,
                order,
                depth + 1,
                &node.banned,
                node.budget,
                node.partial,
            );
            if bound > best_value {
                serial += 1;
                heap.push(SearchNode {
                    bound,
                    serial,
                    depth: depth + 1,
                    budget: node.budget,
                    partial: node.partial,
                    chosen: node.chosen,
                    banned: node.banned,
                });
            }
        }
    }

    BranchOutcome {
        value: best_value,
        chosen: best_chosen,
        nodes,
    }
}

/// Candidates worth branching on: positive rating, ordered by rating
/// descending with index as tie break. Zero-rated candidates can never
/// improve the objective and the lexicographic tie break always prefers
/// leaving them out, so they are fixed to zero up front.
fn branch_order(ratings: &[f64], skip_below_index: usize, banned: &BitSet) -> Vec<usize> {
    let mut order: Vec<usize> = (skip_below_index..ratings.len())
        .filter(|&i| ratings[i] > 0.0 && !banned.contains(i))
        .collect();
    order.sort_by(|&a, &b| ratings[b].total_cmp(&ratings[a]).then(a.cmp(&b)));
    order
}

/// Globally optimal placement by branch and bound.
///
/// The optimum value is established first; a second pass then fixes the
/// selection index by index, preferring exclusion whenever the optimum is
/// still reachable, which yields the lexicographically smallest optimal
/// selection vector.
pub fn solve_exact(prob: &PlacementProblem) -> PlacementSolution {
    let n = prob.n_candidates();
    let ratings = prob.ratings();
    let masks = conflict_bitsets(prob.conflicts());
    let budget = prob.max_stations();
    let none_banned = BitSet::new(n);

    let order = branch_order(ratings, 0, &none_banned);
    let first = branch_max(ratings, &masks, &order, &[], &none_banned, budget);
    let optimum = first.value;
    let mut node_count = first.nodes;

    let mut witness = vec![false; n];
    for &c in &first.chosen {
        witness[c] = true;
    }

    let mut decided_in: Vec<usize> = Vec::new();
    let mut banned = BitSet::new(n);
    let mut selected = vec![false; n];
    for i in 0..n {
        if ratings[i] <= 0.0 || banned.contains(i) || !witness[i] {
            continue;
        }
        // the witness selects i; check whether the optimum survives x_i = 0
        let sub_order = branch_order(ratings, i + 1, &banned);
        let sub = branch_max(
            ratings,
            &masks,
            &sub_order,
            &decided_in,
            &banned,
            budget - decided_in.len(),
        );
        node_count += sub.nodes;
        if sub.value == optimum {
            witness = vec![false; n];
            for &c in decided_in.iter().chain(&sub.chosen) {
                witness[c] = true;
            }
        } else {
            selected[i] = true;
            decided_in.push(i);
            banned.union_with(&masks[i]);
        }
    }

    let objective = selection_objective(&selected, ratings);
    debug_assert_eq!(objective, optimum);
    PlacementSolution {
        selected,
        objective,
        optimal: true,
        node_count,
    }
}

/// Enumeration limit for the brute-force oracle.
pub const BRUTEFORCE_MAX_CANDIDATES: usize = 22;

/// Definitional oracle: enumerate every selection vector, keep the feasible
/// ones, and return the maximum objective with the same lexicographic tie
/// break as [`solve_exact`].
pub fn solve_bruteforce(prob: &PlacementProblem) -> Result<PlacementSolution, PlacementError> {
    let n = prob.n_candidates();
    if n > BRUTEFORCE_MAX_CANDIDATES {
        return Err(PlacementError::InstanceTooLarge {
            n,
            max: BRUTEFORCE_MAX_CANDIDATES,
        });
    }
    let ratings = prob.ratings();
    let k = prob.max_stations();
    let conflicts = prob.conflicts();
    let masks: Vec<u32> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| conflicts.conflicting(i, j))
                .fold(0u32, |m, j| m | 1 << j)
        })
        .collect();

    let mut best_mask = 0u32;
    let mut best_value = 0.0f64;
    let total = 1u64 << n;
    for raw in 0..total {
        let mask = raw as u32;
        if mask.count_ones() as usize > k {
            continue;
        }
        let mut feasible = true;
        let mut bits = mask;
        let mut value = 0.0;
        while bits != 0 {
            let i = bits.trailing_zeros() as usize;
            if mask & masks[i] != 0 {
                feasible = false;
                break;
            }
            value += ratings[i];
            bits &= bits - 1;
        }
        if !feasible {
            continue;
        }
        if value > best_value || (value == best_value && lex_less(mask, best_mask)) {
            best_value = value;
            best_mask = mask;
        }
    }

    let selected: Vec<bool> = (0..n).map(|i| best_mask >> i & 1 == 1).collect();
    let objective = selection_objective(&selected, ratings);
    Ok(PlacementSolution {
        selected,
        objective,
        optimal: true,
        node_count: total,
    })
}

/// Lexicographic order on selection vectors encoded as bit masks with bit
/// `i` = candidate `i`: the vector with 0 at the first differing index is
/// smaller.
fn lex_less(a: u32, b: u32) -> bool {
    let diff = a ^ b;
    if diff == 0 {
        return false;
    }
    let first = diff.trailing_zeros();
    a >> first & 1 == 0
}

/// Feasibility and objective report for a solution against its problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub selected_count: usize,
    pub budget_ok: bool,
    /// Selected pairs `(m, n)` with `m < n` that violate the separation
    /// constraint.
    pub conflict_violations: Vec<(usize, usize)>,
    pub objective_recomputed: f64,
    pub objective_matches: bool,
}

impl ValidationReport {
    pub fn feasible(&self) -> bool {
        self.budget_ok && self.conflict_violations.is_empty()
    }

    pub fn passes(&self) -> bool {
        self.feasible() && self.objective_matches
    }
}

/// Re-check a solution: budget, pairwise separation (applied off-diagonal
/// only), and the recomputed objective.
pub fn validate_solution(prob: &PlacementProblem, sol: &PlacementSolution) -> ValidationReport {
    assert_eq!(sol.selected.len(), prob.n_candidates());
    let selected = sol.selected_indices();
    let mut conflict_violations = Vec::new();
    for (a, &m) in selected.iter().enumerate() {
        for &n in &selected[a + 1..] {
            if prob.conflicts().conflicting(m, n) {
                conflict_violations.push((m, n));
            }
        }
    }
    let objective_recomputed = selection_objective(&sol.selected, prob.ratings());
    ValidationReport {
        selected_count: selected.len(),
        budget_ok: selected.len() <= prob.max_stations(),
        conflict_violations,
        objective_recomputed,
        objective_matches: objective_recomputed == sol.objective,
    }
}
