//! Successive-shortest-path min-cost flow for the two transportation
//! problems used in this crate:
//!
//! * [`balanced_transport`]: `n` unit supplies into `k` sinks of equal
//!   capacity (the cluster assignment step). Shortest augmenting paths are
//!   computed on the `k`-node exchange graph between sinks, so one
//!   augmentation costs `O(k^3)` plus heap maintenance instead of a search
//!   over all `n * k` arcs.
//! * [`dense_assignment`]: the unit-capacity square case (exact matching),
//!   solved with the Jonker-Volgenant shortest augmenting path method.
//!
//! Both work on integer costs, which makes the optimum exact and the
//! tie-breaking reproducible. [`CostScale`] converts real costs.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

const NONE: usize = usize::MAX;
const INF: i64 = i64::MAX / 4;

/// Fixed-point conversion for real-valued costs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostScale {
    factor: f64,
}

impl CostScale {
    /// Finest resolution used when the cost range allows it.
    pub const RESOLUTION: f64 = 1e-12;
    /// Largest integer cost produced; leaves headroom for path sums and
    /// dual drift in `i64`.
    const MAX_UNITS: f64 = (1u64 << 46) as f64;

    pub fn for_max_cost(max_cost: f64) -> CostScale {
        let fine = 1.0 / Self::RESOLUTION;
        let factor = if max_cost * fine <= Self::MAX_UNITS || max_cost <= 0.0 {
            fine
        } else {
            Self::MAX_UNITS / max_cost
        };
        CostScale { factor }
    }

    #[inline]
    pub fn units(&self, cost: f64) -> i64 {
        (cost * self.factor).round() as i64
    }

    pub fn resolution(&self) -> f64 {
        1.0 / self.factor
    }
}

/// Optimal integral assignment of `n = costs.len() / k` unit supplies to `k`
/// sinks that each accept at most `capacity` units. `costs` is row-major
/// `n x k`. Returns the sink of every supply.
///
/// Supplies are inserted in index order; each insertion augments along a
/// shortest path in the residual graph, which keeps the partial solution
/// optimal. Among equal-cost alternatives the lower supply index moves and
/// the lower sink index is chosen.
///
/// # Panics
/// If `n > k * capacity`.
pub fn balanced_transport(costs: &[i64], k: usize, capacity: usize) -> Vec<usize> {
    assert!(k > 0 && costs.len().is_multiple_of(k));
    let n = costs.len() / k;
    assert!(n <= k * capacity, "{n} supplies exceed total capacity {k}x{capacity}");
    let cost = |i: usize, h: usize| costs[i * k + h];

    let mut label = vec![NONE; n];
    let mut count = vec![0usize; k];
    // heaps[a * k + b]: members j of sink a keyed by the cost of moving j to b.
    let mut heaps: Vec<BinaryHeap<Reverse<(i64, u32)>>> = (0..k * k).map(|_| BinaryHeap::new()).collect();
    let mut weight = vec![0i64; k * k];
    let mut via = vec![NONE; k * k];
    let mut dist = vec![0i64; k];
    let mut pred = vec![NONE; k];

    let enter = |heaps: &mut Vec<BinaryHeap<Reverse<(i64, u32)>>>, j: usize, a: usize| {
        for b in (0..k).filter(|&b| b != a) {
            heaps[a * k + b].push(Reverse((cost(j, b) - cost(j, a), j as u32)));
        }
    };

    for i in 0..n {
        // Cheapest single move along each exchange arc, dropping stale entries.
        for a in 0..k {
            for b in 0..k {
                if a == b {
                    continue;
                }
                let e = a * k + b;
                let heap = &mut heaps[e];
                via[e] = NONE;
                while let Some(&Reverse((w, j))) = heap.peek() {
                    if label[j as usize] == a {
                        weight[e] = w;
                        via[e] = j as usize;
                        break;
                    }
                    heap.pop();
                }
            }
        }

        // Bellman-Ford from the new supply; the residual graph has no
        // negative cycles because the current partial flow is optimal.
        for h in 0..k {
            dist[h] = cost(i, h);
            pred[h] = NONE;
        }
        for _ in 1..k {
            let mut changed = false;
            for a in 0..k {
                if count[a] == 0 {
                    continue;
                }
                for b in 0..k {
                    let e = a * k + b;
                    if a == b || via[e] == NONE {
                        continue;
                    }
                    let nd = dist[a] + weight[e];
                    if nd < dist[b] {
                        dist[b] = nd;
                        pred[b] = a;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }

        let target = (0..k)
            .filter(|&h| count[h] < capacity)
            .min_by_key(|&h| (dist[h], h))
            .expect("spare capacity exists");
        count[target] += 1;

        let mut b = target;
        let mut hops = 0;
        while pred[b] != NONE {
            let a = pred[b];
            let j = via[a * k + b];
            label[j] = b;
            enter(&mut heaps, j, b);
            b = a;
            hops += 1;
            debug_assert!(hops < k, "predecessor cycle");
        }
        label[i] = b;
        enter(&mut heaps, i, b);
    }
    label
}

/// Minimum-cost perfect matching on a dense `n x n` integer cost function.
/// Returns `row -> column`.
// The scan loops keep their start bound while `up` moves, as in LAPJV.
#[allow(clippy::mut_range_bound, clippy::needless_range_loop)]
pub fn dense_assignment(n: usize, cost: impl Fn(usize, usize) -> i64) -> Vec<usize> {
    match n {
        0 => return Vec::new(),
        1 => return vec![0],
        _ => {}
    }
    let mut rowsol = vec![NONE; n];
    let mut colsol = vec![NONE; n];
    let mut v = vec![0i64; n];

    // Column reduction.
    let mut matches = vec![0u32; n];
    for j in (0..n).rev() {
        let mut imin = 0;
        let mut min = cost(0, j);
        for i in 1..n {
            let c = cost(i, j);
            if c < min {
                min = c;
                imin = i;
            }
        }
        v[j] = min;
        matches[imin] += 1;
        if matches[imin] == 1 {
            rowsol[imin] = j;
            colsol[j] = imin;
        } else if v[j] < v[rowsol[imin]] {
            let j1 = rowsol[imin];
            rowsol[imin] = j;
            colsol[j] = imin;
            colsol[j1] = NONE;
        } else {
            colsol[j] = NONE;
        }
    }

    // Reduction transfer.
    let mut free = Vec::new();
    for i in 0..n {
        if matches[i] == 0 {
            free.push(i);
        } else if matches[i] == 1 {
            let j1 = rowsol[i];
            let mut min = INF;
            for j in (0..n).filter(|&j| j != j1) {
                min = min.min(cost(i, j) - v[j]);
            }
            v[j1] -= min;
        }
    }

    // Shortest augmenting paths for the remaining free rows.
    let mut d = vec![0i64; n];
    let mut pred = vec![0usize; n];
    let mut collist: Vec<usize> = (0..n).collect();
    for &f in &free {
        for j in 0..n {
            d[j] = cost(f, j) - v[j];
            pred[j] = f;
            collist[j] = j;
        }
        let mut low = 0;
        let mut up = 0;
        let mut last = 0;
        let mut min = 0;
        let end_of_path;
        'search: loop {
            if up == low {
                last = low;
                min = d[collist[up]];
                up += 1;
                for k in up..n {
                    let j = collist[k];
                    let h = d[j];
                    if h <= min {
                        if h < min {
                            up = low;
                            min = h;
                        }
                        collist[k] = collist[up];
                        collist[up] = j;
                        up += 1;
                    }
                }
                for &j in &collist[low..up] {
                    if colsol[j] == NONE {
                        end_of_path = j;
                        break 'search;
                    }
                }
            }
            let j1 = collist[low];
            low += 1;
            let i = colsol[j1];
            let h = cost(i, j1) - v[j1] - min;
            for k in up..n {
                let j = collist[k];
                let v2 = cost(i, j) - v[j] - h;
                if v2 < d[j] {
                    pred[j] = i;
                    if v2 == min {
                        if colsol[j] == NONE {
                            end_of_path = j;
                            break 'search;
                        }
                        collist[k] = collist[up];
                        collist[up] = j;
                        up += 1;
                    }
                    d[j] = v2;
                }
            }
        }
        for &j in &collist[..last] {
            v[j] += d[j] - min;
        }
        let mut j = end_of_path;
        loop {
            let i = pred[j];
            colsol[j] = i;
            std::mem::swap(&mut rowsol[i], &mut j);
            if i == f {
                break;
            }
        }
    }
    rowsol
}

/// Minimum-cost perfect matching restricted at first to candidate arcs
/// `candidates[row]`, then certified on the full `n x n` cost function.
///
/// Free rows are matched by Dijkstra over reduced costs on the candidate
/// graph (a row that cannot reach a free column gets every column as a
/// candidate). Afterwards every pair is checked for dual feasibility; rows
/// with a violated arc receive the violating arcs, are freed, and are
/// matched again. The result is therefore exactly optimal on the full
/// problem, the candidate lists only steer the work.
pub fn sparse_assignment(
    n: usize,
    candidates: Vec<Vec<usize>>,
    cost: impl Fn(usize, usize) -> i64 + Sync,
) -> Vec<usize> {
    try_sparse_assignment(n, candidates, cost, u64::MAX).expect("unlimited budget")
}

/// [`sparse_assignment`] that gives up once the shortest-path searches have
/// examined more than `max_scans` arcs. Candidate lists that miss much of
/// the optimal matching make the sparse search slower than
/// [`dense_assignment`]; the budget lets callers switch over early.
pub fn try_sparse_assignment(
    n: usize,
    mut candidates: Vec<Vec<usize>>,
    cost: impl Fn(usize, usize) -> i64 + Sync,
    max_scans: u64,
) -> Option<Vec<usize>> {
    assert_eq!(candidates.len(), n);
    let mut state = SparseState {
        rowsol: vec![NONE; n],
        colsol: vec![NONE; n],
        u: vec![0; n],
        v: vec![0; n],
        dist: vec![INF; n],
        pred: vec![NONE; n],
        done: vec![false; n],
        scans: 0,
    };
    let mut free: Vec<usize> = (0..n).collect();
    loop {
        for &f in &free {
            state.augment(f, &mut candidates, &cost);
            if state.scans > max_scans {
                return None;
            }
        }
        let violations = state.violations(&cost);
        if violations.is_empty() {
            break;
        }
        free.clear();
        for (i, cols) in violations {
            candidates[i].extend(cols);
            let j = state.rowsol[i];
            state.colsol[j] = NONE;
            state.rowsol[i] = NONE;
            free.push(i);
        }
    }
    Some(state.rowsol)
}

struct SparseState {
    rowsol: Vec<usize>,
    colsol: Vec<usize>,
    u: Vec<i64>,
    v: Vec<i64>,
    dist: Vec<i64>,
    pred: Vec<usize>,
    done: Vec<bool>,
    /// Arcs examined so far.
    scans: u64,
}

impl SparseState {
    fn augment(&mut self, f: usize, candidates: &mut [Vec<usize>], cost: &impl Fn(usize, usize) -> i64) {
        let n = self.rowsol.len();
        let mut touched: Vec<usize> = Vec::new();
        let mut finalized: Vec<usize> = Vec::new();
        let mut heap: BinaryHeap<Reverse<(i64, usize)>> = BinaryHeap::new();
        let (end, total) = 'retry: loop {
            self.u[f] = candidates[f]
                .iter()
                .map(|&j| cost(f, j) - self.v[j])
                .min()
                .expect("every row has a candidate");
            self.scans += candidates[f].len() as u64;
            for &j in &candidates[f] {
                let r = cost(f, j) - self.u[f] - self.v[j];
                if r < self.dist[j] {
                    if self.dist[j] == INF {
                        touched.push(j);
                    }
                    self.dist[j] = r;
                    self.pred[j] = f;
                    heap.push(Reverse((r, j)));
                }
            }
            while let Some(Reverse((d, j))) = heap.pop() {
                if self.done[j] || d > self.dist[j] {
                    continue;
                }
                self.done[j] = true;
                finalized.push(j);
                let i = self.colsol[j];
                if i == NONE {
                    break 'retry (j, d);
                }
                self.scans += candidates[i].len() as u64;
                for &j2 in &candidates[i] {
                    if self.done[j2] {
                        continue;
                    }
                    let nd = d + cost(i, j2) - self.u[i] - self.v[j2];
                    if nd < self.dist[j2] {
                        if self.dist[j2] == INF {
                            touched.push(j2);
                        }
                        self.dist[j2] = nd;
                        self.pred[j2] = i;
                        heap.push(Reverse((nd, j2)));
                    }
                }
            }
            // No free column reachable through candidate arcs: open the row up.
            for &j in &touched {
                self.dist[j] = INF;
                self.done[j] = false;
            }
            touched.clear();
            finalized.clear();
            candidates[f] = (0..n).collect();
        };

        for &j in &finalized {
            let slack = total - self.dist[j];
            self.v[j] -= slack;
            if j != end {
                self.u[self.colsol[j]] += slack;
            }
        }
        self.u[f] += total;

        let mut j = end;
        loop {
            let i = self.pred[j];
            self.colsol[j] = i;
            let prev = self.rowsol[i];
            self.rowsol[i] = j;
            if i == f {
                break;
            }
            j = prev;
        }
        for &j in &touched {
            self.dist[j] = INF;
            self.done[j] = false;
        }
    }

    /// Rows with arcs of negative reduced cost, and those arcs.
    fn violations(&self, cost: &(impl Fn(usize, usize) -> i64 + Sync)) -> Vec<(usize, Vec<usize>)> {
        use rayon::prelude::*;
        let n = self.rowsol.len();
        (0..n)
            .into_par_iter()
            .filter_map(|i| {
                let ui = self.u[i];
                let cols: Vec<usize> = (0..n).filter(|&j| cost(i, j) - ui - self.v[j] < 0).collect();
                (!cols.is_empty()).then_some((i, cols))
            })
            .collect()
    }
}
