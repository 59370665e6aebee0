//! Problem instances and the product-chain state space.
//!
//! A state is either the origin `(0, …, 0)` or a tuple `(i_1, …, i_m)` with
//! every `i_j` in `1..=N_j`. States are ordered by ascending coordinate sum,
//! ties broken lexicographically, with the origin first. Every non-self-loop
//! transition moves to a strictly larger index, so `Id - Q` is upper
//! triangular in this order.
//!
//! Ranking within a coordinate-sum layer uses cumulative counts of bounded
//! compositions. With `y_j = i_j - 1` and `C_j(s)` the number of suffixes
//! `(y_j, …, y_{m-1})` summing to `s`, the rank of `y` inside its layer is
//! `Σ_j [P_{j+1}(r_j) - P_{j+1}(r_j - y_j)]` where `P` is the prefix sum of
//! `C` and `r_j` the sum still owed at position `j`. That makes
//! [`StateSpace::index_of`] O(m).

use crate::error::{Error, Result};
use crate::scalar::Prob;

/// Default cap on `1 + ∏ N_j`.
pub const DEFAULT_STATE_LIMIT: u64 = 10_000_000;

/// Sizes `(N_1, …, N_m)` of the parallel collections.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CollectionSpec {
    sizes: Vec<u64>,
}

impl CollectionSpec {
    pub fn new(sizes: Vec<u64>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidSpec("at least one collection is required".into()));
        }
        if let Some(pos) = sizes.iter().position(|&n| n == 0) {
            return Err(Error::InvalidSpec(format!(
                "collection {} has zero coupons",
                pos + 1
            )));
        }
        Ok(Self { sizes })
    }

    /// `m` copies of a collection with `n` coupons.
    pub fn uniform(n: u64, m: usize) -> Result<Self> {
        Self::new(vec![n; m])
    }

    pub fn sizes(&self) -> &[u64] {
        &self.sizes
    }

    /// Number of collections.
    pub fn m(&self) -> usize {
        self.sizes.len()
    }

    /// `∏ N_j`, or `None` on overflow.
    pub fn product(&self) -> Option<u64> {
        self.sizes.iter().try_fold(1u64, |acc, &n| acc.checked_mul(n))
    }

    /// `1 + ∏ N_j`, computed without overflow.
    pub fn state_count(&self) -> u128 {
        1 + self
            .sizes
            .iter()
            .try_fold(1u128, |acc, &n| acc.checked_mul(n as u128))
            .unwrap_or(u128::MAX - 1)
    }
}

impl std::fmt::Display for CollectionSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.sizes.iter().map(u64::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

/// Distinct coupon types held in each collection.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    counts: Vec<u64>,
}

impl State {
    pub fn new(counts: Vec<u64>) -> Self {
        Self { counts }
    }

    pub fn origin(m: usize) -> Self {
        Self { counts: vec![0; m] }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn is_origin(&self) -> bool {
        self.counts.iter().all(|&c| c == 0)
    }

    pub fn coordinate_sum(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// True if every coordinate of `self` is at least the matching one of `other`.
    pub fn dominates(&self, other: &State) -> bool {
        self.counts.len() == other.counts.len()
            && self.counts.iter().zip(&other.counts).all(|(a, b)| a >= b)
    }

    pub fn is_valid_for(&self, spec: &CollectionSpec) -> bool {
        self.counts.len() == spec.m()
            && (self.is_origin()
                || self
                    .counts
                    .iter()
                    .zip(spec.sizes())
                    .all(|(&c, &n)| (1..=n).contains(&c)))
    }
}

/// One outgoing transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub target: usize,
    pub prob: Prob,
}

/// Sparse outgoing edges of one state. The self-loop, when present, is first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionRow {
    pub source: usize,
    pub edges: Vec<Edge>,
}

impl TransitionRow {
    /// Probability of staying put.
    pub fn self_loop(&self) -> Prob {
        self.edges
            .iter()
            .find(|e| e.target == self.source)
            .map(|e| e.prob)
            .unwrap_or_else(|| Prob::new(0, 1))
    }

    /// Edges that leave the state.
    pub fn outgoing(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.target != self.source)
    }

    pub fn total_probability(&self) -> Prob {
        self.edges.iter().fold(Prob::new(0, 1), |acc, e| acc + e.prob)
    }
}

/// Indexed enumeration of `{origin} ∪ ∏_j {1, …, N_j}`.
#[derive(Debug, Clone)]
pub struct StateSpace {
    spec: CollectionSpec,
    len: usize,
    /// `prefix[j][s] = P_j(s)` for `j < m - 1`; the last two levels are closed form.
    prefix: Vec<Vec<u64>>,
    /// Largest attainable `Σ_{t ≥ j} y_t`.
    max_suffix_sum: Vec<u64>,
    /// `∏_{t ≥ j} N_t`.
    suffix_product: Vec<u64>,
}

/// Builds the state space with [`DEFAULT_STATE_LIMIT`].
pub fn build_space(spec: &CollectionSpec) -> Result<StateSpace> {
    StateSpace::with_limit(spec, DEFAULT_STATE_LIMIT)
}

impl StateSpace {
    pub fn with_limit(spec: &CollectionSpec, limit: u64) -> Result<Self> {
        let states = spec.state_count();
        if states > limit as u128 || states > usize::MAX as u128 {
            return Err(Error::Capacity { states, limit });
        }
        let m = spec.m();
        let sizes = spec.sizes();

        let mut max_suffix_sum = vec![0u64; m + 1];
        let mut suffix_product = vec![1u64; m + 1];
        for j in (0..m).rev() {
            max_suffix_sum[j] = max_suffix_sum[j + 1] + (sizes[j] - 1);
            suffix_product[j] = suffix_product[j + 1] * sizes[j];
        }

        let mut space = Self {
            spec: spec.clone(),
            len: states as usize,
            prefix: Vec::new(),
            max_suffix_sum,
            suffix_product,
        };

        // Tables for levels 0..m-1, built from the back.
        let mut tables: Vec<Vec<u64>> = vec![Vec::new(); m.saturating_sub(1)];
        for j in (0..m.saturating_sub(1)).rev() {
            let width = space.max_suffix_sum[j] as usize + 1;
            let d = sizes[j] - 1;
            let mut table = Vec::with_capacity(width);
            let mut running = 0u64;
            for s in 0..width as i64 {
                // C_j(s) = Σ_{v=0..d} C_{j+1}(s - v) = P_{j+1}(s) - P_{j+1}(s - d - 1)
                let count = level_prefix(&tables, &space, j + 1, s)
                    - level_prefix(&tables, &space, j + 1, s - d as i64 - 1);
                running += count;
                table.push(running);
            }
            tables[j] = table;
        }
        space.prefix = tables;
        Ok(space)
    }

    pub fn spec(&self) -> &CollectionSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn absorbing_index(&self) -> usize {
        self.len - 1
    }

    pub fn transient_count(&self) -> usize {
        self.len - 1
    }

    pub fn absorbing_state(&self) -> State {
        State::new(self.spec.sizes().to_vec())
    }

    /// `P_j(s)`: suffixes from level `j` with coordinate sum at most `s`.
    fn prefix_count(&self, j: usize, s: i64) -> u64 {
        level_prefix(&self.prefix, self, j, s)
    }

    pub fn index_of(&self, state: &State) -> Result<usize> {
        if !state.is_valid_for(&self.spec) {
            return Err(Error::InvalidState {
                state: state.counts().to_vec(),
            });
        }
        if state.is_origin() {
            return Ok(0);
        }
        let total: u64 = state.counts().iter().map(|&c| c - 1).sum();
        let mut index = 1 + self.prefix_count(0, total as i64 - 1);
        let mut remaining = total as i64;
        for (j, &c) in state.counts().iter().enumerate() {
            let y = (c - 1) as i64;
            index += self.prefix_count(j + 1, remaining) - self.prefix_count(j + 1, remaining - y);
            remaining -= y;
        }
        Ok(index as usize)
    }

    pub fn state_of(&self, index: usize) -> Result<State> {
        if index >= self.len {
            return Err(Error::IndexOutOfRange {
                index,
                len: self.len,
            });
        }
        let m = self.spec.m();
        if index == 0 {
            return Ok(State::origin(m));
        }
        let mut rank = (index - 1) as u64;

        // Layer: smallest s with P_0(s) > rank.
        let total = search_first(0, self.max_suffix_sum[0], |s| {
            self.prefix_count(0, s as i64) > rank
        });
        rank -= self.prefix_count(0, total as i64 - 1);

        let mut remaining = total as i64;
        let mut counts = Vec::with_capacity(m);
        for j in 0..m {
            let hi = (self.spec.sizes()[j] - 1).min(remaining as u64);
            let below = |v: u64| {
                self.prefix_count(j + 1, remaining) - self.prefix_count(j + 1, remaining - v as i64 - 1)
            };
            let y = search_first(0, hi, |v| below(v) > rank);
            rank -= self.prefix_count(j + 1, remaining) - self.prefix_count(j + 1, remaining - y as i64);
            remaining -= y as i64;
            counts.push(y + 1);
        }
        debug_assert_eq!(remaining, 0);
        debug_assert_eq!(rank, 0);
        Ok(State::new(counts))
    }

    /// Outgoing transitions of a state, probabilities exact.
    ///
    /// From `(i_1, …, i_m)` the chain moves to `(i_1 + α_1, …, i_m + α_m)`
    /// with probability `∏_j (1 - i_j/N_j)^{α_j} (i_j/N_j)^{1-α_j}`; only
    /// coordinates with `i_j < N_j` can advance, so zero-probability edges
    /// never appear.
    pub fn successors(&self, state: &State) -> Result<TransitionRow> {
        let source = self.index_of(state)?;
        let sizes = self.spec.sizes();
        let m = sizes.len();

        if state.is_origin() {
            let target = self.index_of(&State::new(vec![1; m]))?;
            return Ok(TransitionRow {
                source,
                edges: vec![Edge {
                    target,
                    prob: Prob::new(1, 1),
                }],
            });
        }

        let den = self.suffix_product[0];
        let counts = state.counts();
        let free: Vec<usize> = (0..m).filter(|&j| counts[j] < sizes[j]).collect();
        let mut edges = Vec::with_capacity(1 << free.len());
        let mut target = counts.to_vec();
        for mask in 0u64..(1u64 << free.len()) {
            let mut num = 1u64;
            for (bit, &j) in free.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    num *= sizes[j] - counts[j];
                    target[j] = counts[j] + 1;
                } else {
                    num *= counts[j];
                    target[j] = counts[j];
                }
            }
            // Saturated coordinates stay put with probability N_j / N_j.
            for j in (0..m).filter(|&j| counts[j] == sizes[j]) {
                num *= sizes[j];
            }
            let target_index = self.index_of(&State::new(target.clone()))?;
            edges.push(Edge {
                target: target_index,
                prob: Prob::new(num, den),
            });
        }
        Ok(TransitionRow { source, edges })
    }

    /// Transition row of the state at `index`.
    pub fn row(&self, index: usize) -> Result<TransitionRow> {
        let state = self.state_of(index)?;
        self.successors(&state)
    }

    /// All states in index order.
    pub fn states(&self) -> impl Iterator<Item = State> + '_ {
        (0..self.len).map(move |i| self.state_of(i).expect("index in range"))
    }
}

/// Cumulative suffix counts for level `j`; closed form on the last two levels.
fn level_prefix(tables: &[Vec<u64>], space: &StateSpace, j: usize, s: i64) -> u64 {
    if s < 0 {
        return 0;
    }
    let m = space.spec.m();
    if j == m {
        return 1;
    }
    if s as u64 >= space.max_suffix_sum[j] {
        return space.suffix_product[j];
    }
    if j == m - 1 {
        return s as u64 + 1;
    }
    tables[j][s as usize]
}

/// Smallest `x` in `lo..=hi` with `pred(x)`; `pred` must be monotone and hold at `hi`.
fn search_first(mut lo: u64, mut hi: u64, pred: impl Fn(u64) -> bool) -> u64 {
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}
