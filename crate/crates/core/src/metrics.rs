//! Distances between point clouds: Chamfer, exact earth mover's distance,
//! the debiased Sinkhorn divergence, and the weighted combination of the
//! transport term with Chamfer.

use rand::seq::index;
use rayon::prelude::*;

use crate::cloud::{Point3, PointCloud};
use crate::error::{Error, Result};
use crate::flow::{dense_assignment, try_sparse_assignment, CostScale};
use crate::kdtree::KdTree;
use crate::rng::RngSeed;

/// Exact matching precomputes the integer cost table up to this many points.
const COST_TABLE_LIMIT: usize = 4096;
/// Nearest neighbours (in each direction) offered as initial matching arcs.
const MATCH_CANDIDATES: usize = 12;
/// Arc scans allowed to the sparse matcher, in units of `n^2`.
const SPARSE_BUDGET: u64 = 2;

fn nearest_dist2(from: &PointCloud, to: &PointCloud) -> Vec<f64> {
    let tree = KdTree::new(to.points());
    from.points()
        .par_iter()
        .map(|&p| tree.nearest(p).expect("non-empty").1)
        .collect()
}

/// Sum of squared nearest-neighbour distances in both directions.
pub fn chamfer(x: &PointCloud, y: &PointCloud) -> f64 {
    let forward: f64 = nearest_dist2(x, y).iter().sum();
    let backward: f64 = nearest_dist2(y, x).iter().sum();
    forward + backward
}

/// A permutation pairing point `i` of one cloud with point `mapping[i]` of
/// another.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bijection {
    mapping: Vec<usize>,
}

impl Bijection {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; mapping.len()];
        for &j in &mapping {
            if j >= mapping.len() || std::mem::replace(&mut seen[j], true) {
                return Err(Error::invalid("mapping is not a permutation"));
            }
        }
        Ok(Bijection { mapping })
    }

    pub fn identity(n: usize) -> Self {
        Bijection {
            mapping: (0..n).collect(),
        }
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    /// `sum_i |x_i - y_mapping(i)|`, in index order.
    pub fn cost(&self, x: &PointCloud, y: &PointCloud) -> f64 {
        x.iter().zip(&self.mapping).map(|(p, &j)| p.dist(y.points()[j])).sum()
    }
}

/// Whether a transport cost is reported as a total over points or per
/// unit of mass (divided by the point count).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmdNorm {
    Sum,
    #[default]
    Mean,
}

/// Minimum over bijections of the summed Euclidean distance, with one
/// optimal bijection. Both clouds must have the same size.
pub fn emd_exact(x: &PointCloud, y: &PointCloud) -> Result<(f64, Bijection)> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            actual: y.len(),
        });
    }
    let (xl, xh) = x.bounding_box();
    let (yl, yh) = y.bounding_box();
    let bound = xl.min(yl).dist(xh.max(yh));
    let scale = CostScale::for_max_cost(bound);
    let (xp, yp) = (x.points(), y.points());
    let candidates = match_candidates(x, y);
    // Shortest-path work beyond this many arcs means the neighbour lists
    // miss too much of the matching; the dense solver is faster then.
    let budget = SPARSE_BUDGET * (n as u64).pow(2);
    let mapping = if n <= COST_TABLE_LIMIT {
        let mut table = vec![0i64; n * n];
        table.par_chunks_mut(n).zip(xp.par_iter()).for_each(|(row, p)| {
            for (slot, q) in row.iter_mut().zip(yp) {
                *slot = scale.units(p.dist(*q));
            }
        });
        let cost = |i: usize, j: usize| table[i * n + j];
        try_sparse_assignment(n, candidates, cost, budget).unwrap_or_else(|| dense_assignment(n, cost))
    } else {
        let cost = |i: usize, j: usize| scale.units(xp[i].dist(yp[j]));
        try_sparse_assignment(n, candidates, cost, budget).unwrap_or_else(|| dense_assignment(n, cost))
    };
    let bijection = Bijection { mapping };
    Ok((bijection.cost(x, y), bijection))
}

/// Initial arcs for exact matching: each point's nearest neighbours in the
/// other cloud, in both directions.
fn match_candidates(x: &PointCloud, y: &PointCloud) -> Vec<Vec<usize>> {
    let k = MATCH_CANDIDATES.min(y.len());
    let ytree = KdTree::new(y.points());
    let mut cands: Vec<Vec<usize>> = x
        .points()
        .par_iter()
        .map(|&p| ytree.k_nearest(p, k).into_iter().map(|(j, _)| j).collect())
        .collect();
    let xtree = KdTree::new(x.points());
    for (j, &q) in y.points().iter().enumerate() {
        for (i, _) in xtree.k_nearest(q, k) {
            if !cands[i].contains(&j) {
                cands[i].push(j);
            }
        }
    }
    cands
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornParams {
    /// Final entropic scale, in distance units.
    pub blur: f64,
    /// Factor applied to the entropic scale between annealing steps.
    pub scaling: f64,
    /// Cap on the total number of potential updates.
    pub max_iters: usize,
    /// Largest potential change (distance units) accepted as converged.
    pub tolerance: f64,
}

impl Default for SinkhornParams {
    fn default() -> Self {
        SinkhornParams {
            blur: 1e-3,
            scaling: 0.9,
            max_iters: 10_000,
            tolerance: 1e-5,
        }
    }
}

impl SinkhornParams {
    pub fn with_blur(blur: f64) -> Self {
        SinkhornParams {
            blur,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.blur > 0.0) || !self.blur.is_finite() {
            return Err(Error::invalid(format!("blur must be positive, got {}", self.blur)));
        }
        if !(self.scaling > 0.0 && self.scaling < 1.0) {
            return Err(Error::invalid(format!(
                "scaling must lie in (0, 1), got {}",
                self.scaling
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be positive"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornOutcome {
    /// Divergence per unit mass (uniform weights summing to one).
    pub value: f64,
    /// False when `max_iters` was exhausted before the potentials settled.
    pub converged: bool,
    pub iterations: usize,
}

/// Entropic scales: the pair diameter, geometric steps of `scaling`, then
/// `blur` itself.
fn epsilon_schedule(diameter: f64, blur: f64, scaling: f64) -> Vec<f64> {
    let mut eps = vec![diameter];
    let (start, stop, step) = (diameter.ln(), blur.ln(), scaling.ln());
    let mut e = start;
    while e > stop {
        eps.push(e.exp());
        e += step;
    }
    eps.push(blur);
    eps
}

/// Pairwise distances, tabulated when small enough.
enum Costs<'a> {
    Table { cols: usize, data: Vec<f64> },
    OnTheFly { from: &'a [Point3], to: &'a [Point3] },
}

impl<'a> Costs<'a> {
    const TABLE_LIMIT: usize = 1 << 24;
    const PARALLEL_MIN: usize = 1 << 16;

    fn new(from: &'a [Point3], to: &'a [Point3]) -> Self {
        if from.len() * to.len() <= Self::TABLE_LIMIT {
            let cols = to.len();
            let mut data = vec![0.0; from.len() * cols];
            data.par_chunks_mut(cols).zip(from.par_iter()).for_each(|(row, p)| {
                for (slot, q) in row.iter_mut().zip(to) {
                    *slot = p.dist(*q);
                }
            });
            Costs::Table { cols, data }
        } else {
            Costs::OnTheFly { from, to }
        }
    }

    fn rows(&self) -> usize {
        match self {
            Costs::Table { cols, data } => data.len() / cols,
            Costs::OnTheFly { from, .. } => from.len(),
        }
    }

    /// `-eps * log sum_j exp(h_j - C_ij / eps)` for every row `i`.
    fn softmin(&self, eps: f64, h: &[f64]) -> Vec<f64> {
        let inv = 1.0 / eps;
        match self {
            Costs::Table { cols, data } => {
                let row = |r: &[f64]| log_sum_exp(eps, r.iter().zip(h).map(|(c, hj)| hj - c * inv));
                if data.len() < Self::PARALLEL_MIN {
                    data.chunks(*cols).map(row).collect()
                } else {
                    data.par_chunks(*cols).map(row).collect()
                }
            }
            Costs::OnTheFly { from, to } => from
                .par_iter()
                .map(|p| log_sum_exp(eps, to.iter().zip(h).map(|(q, hj)| hj - p.dist(*q) * inv)))
                .collect(),
        }
    }
}

/// `-eps * log sum exp(t)` over the terms, which are generated twice: for
/// the maximum and for the shifted sum.
#[inline]
fn log_sum_exp(eps: f64, terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    // Terms this far below the maximum vanish in the sum anyway and would
    // otherwise hit the slow subnormal range of exp.
    let floor = max - 40.0;
    let sum: f64 = terms.filter(|&t| t > floor).map(|t| (t - max).exp()).sum();
    -eps * (max + sum.ln())
}

fn shifted(log_w: f64, potential: &[f64], eps: f64) -> Vec<f64> {
    potential.iter().map(|g| log_w + g / eps).collect()
}

fn max_change(old: &[f64], new: &[f64]) -> f64 {
    old.iter().zip(new).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Debiased Sinkhorn divergence
/// `OT_eps(X, Y) - OT_eps(X, X) / 2 - OT_eps(Y, Y) / 2` with cost `|x - y|`
/// and uniform weights.
///
/// `eps` is annealed from the pair's bounding-box diameter down to `blur`
/// by factor `scaling`, with one symmetrized update per step. The
/// potentials are then iterated at `blur` until no potential moves by more
/// than `tolerance`, or `max_iters` total updates have run.
pub fn sinkhorn_divergence(x: &PointCloud, y: &PointCloud, params: &SinkhornParams) -> Result<SinkhornOutcome> {
    params.validate()?;
    let (xp, yp) = (x.points(), y.points());
    let a_log = -(xp.len() as f64).ln();
    let b_log = -(yp.len() as f64).ln();
    let (xl, xh) = x.bounding_box();
    let (yl, yh) = y.bounding_box();
    let diameter = xl.min(yl).dist(xh.max(yh));
    if diameter == 0.0 {
        return Ok(SinkhornOutcome {
            value: 0.0,
            converged: true,
            iterations: 0,
        });
    }
    let c_xy = Costs::new(xp, yp);
    let c_yx = Costs::new(yp, xp);
    let c_xx = Costs::new(xp, xp);
    let c_yy = Costs::new(yp, yp);
    debug_assert_eq!(c_xy.rows(), xp.len());

    let schedule = epsilon_schedule(diameter.max(params.blur), params.blur, params.scaling);
    let eps0 = schedule[0];
    let mut f_ba = c_xy.softmin(eps0, &vec![b_log; yp.len()]);
    let mut g_ab = c_yx.softmin(eps0, &vec![a_log; xp.len()]);
    let mut f_aa = c_xx.softmin(eps0, &vec![a_log; xp.len()]);
    let mut g_bb = c_yy.softmin(eps0, &vec![b_log; yp.len()]);

    let average = |old: &mut Vec<f64>, new: Vec<f64>| {
        old.iter_mut().zip(new).for_each(|(o, n)| *o = 0.5 * (*o + n));
    };
    let mut iterations = 0;
    for &eps in &schedule {
        let ft_ba = c_xy.softmin(eps, &shifted(b_log, &g_ab, eps));
        let gt_ab = c_yx.softmin(eps, &shifted(a_log, &f_ba, eps));
        let ft_aa = c_xx.softmin(eps, &shifted(a_log, &f_aa, eps));
        let gt_bb = c_yy.softmin(eps, &shifted(b_log, &g_bb, eps));
        average(&mut f_ba, ft_ba);
        average(&mut g_ab, gt_ab);
        average(&mut f_aa, ft_aa);
        average(&mut g_bb, gt_bb);
        iterations += 1;
    }

    // Plain alternating updates at the target scale. Each self problem gets
    // its own potential pair so that it runs exactly the cross problem's
    // arithmetic; X == Y then cancels exactly.
    let blur = params.blur;
    let mut g_aa = f_aa.clone();
    let mut f_bb = g_bb.clone();
    let sweep = |c_fg: &Costs, c_gf: &Costs, f: &mut Vec<f64>, g: &mut Vec<f64>, f_log: f64, g_log: f64| {
        let new_f = c_fg.softmin(blur, &shifted(g_log, g, blur));
        let new_g = c_gf.softmin(blur, &shifted(f_log, &new_f, blur));
        let change = max_change(f, &new_f).max(max_change(g, &new_g));
        *f = new_f;
        *g = new_g;
        change
    };
    let mut converged = false;
    while iterations < params.max_iters {
        iterations += 1;
        let change = sweep(&c_xy, &c_yx, &mut f_ba, &mut g_ab, a_log, b_log)
            .max(sweep(&c_xx, &c_xx, &mut f_aa, &mut g_aa, a_log, a_log))
            .max(sweep(&c_yy, &c_yy, &mut f_bb, &mut g_bb, b_log, b_log));
        if change <= params.tolerance {
            converged = true;
            break;
        }
    }

    let mean = |a: &[f64]| a.iter().sum::<f64>() / a.len() as f64;
    let ot_xy = mean(&f_ba) + mean(&g_ab);
    let ot_xx = mean(&f_aa) + mean(&g_aa);
    let ot_yy = mean(&f_bb) + mean(&g_bb);
    let value = ot_xy - 0.5 * ot_xx - 0.5 * ot_yy;
    Ok(SinkhornOutcome {
        value,
        converged,
        iterations,
    })
}

/// How the transport term of the loss is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EmdMode {
    Sinkhorn(SinkhornParams),
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmdTerm {
    pub mode: EmdMode,
    pub norm: EmdNorm,
}

impl Default for EmdTerm {
    fn default() -> Self {
        EmdTerm {
            mode: EmdMode::Sinkhorn(SinkhornParams::default()),
            norm: EmdNorm::Mean,
        }
    }
}

impl EmdTerm {
    pub fn exact(norm: EmdNorm) -> Self {
        EmdTerm {
            mode: EmdMode::Exact,
            norm,
        }
    }

    pub fn evaluate(&self, x: &PointCloud, y: &PointCloud) -> Result<f64> {
        let n = x.len() as f64;
        match self.mode {
            EmdMode::Exact => {
                let (sum, _) = emd_exact(x, y)?;
                Ok(match self.norm {
                    EmdNorm::Sum => sum,
                    EmdNorm::Mean => sum / n,
                })
            }
            EmdMode::Sinkhorn(params) => {
                let mean = sinkhorn_divergence(x, y, &params)?.value;
                Ok(match self.norm {
                    EmdNorm::Sum => mean * n,
                    EmdNorm::Mean => mean,
                })
            }
        }
    }
}

/// Coefficients of the transport and Chamfer terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub alpha_emd: f64,
    pub alpha_chamfer: f64,
}

impl LossWeights {
    pub fn new(alpha_emd: f64, alpha_chamfer: f64) -> Result<Self> {
        for (name, v) in [("alpha_emd", alpha_emd), ("alpha_chamfer", alpha_chamfer)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(LossWeights {
            alpha_emd,
            alpha_chamfer,
        })
    }
}

/// `alpha_emd * EMD(X, Y) + alpha_chamfer * Chamfer(X, Y)`.
pub fn combined_loss(x: &PointCloud, y: &PointCloud, weights: &LossWeights, term: &EmdTerm) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::SizeMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    let emd = term.evaluate(x, y)?;
    Ok(weights.alpha_emd * emd + weights.alpha_chamfer * chamfer(x, y))
}

/// Unordered pair `(i, j)`, `i < j`, with the given rank in row-major order.
fn unrank_pair(mut rank: usize, count: usize) -> (usize, usize) {
    for i in 0..count {
        let row = count - 1 - i;
        if rank < row {
            return (i, i + 1 + rank);
        }
        rank -= row;
    }
    unreachable!("pair rank out of range")
}

/// Reciprocals of the largest transport and Chamfer distances over sampled
/// pairs of the dataset. When `num_pairs` covers every pair, all pairs are
/// evaluated.
pub fn calibrate_weights(
    dataset: &[PointCloud],
    num_pairs: usize,
    seed: RngSeed,
    term: &EmdTerm,
) -> Result<LossWeights> {
    let count = dataset.len();
    if count < 2 {
        return Err(Error::invalid("calibration needs at least two clouds"));
    }
    if num_pairs == 0 {
        return Err(Error::invalid("num_pairs must be positive"));
    }
    let total = count * (count - 1) / 2;
    let pairs: Vec<(usize, usize)> = if num_pairs >= total {
        (0..total).map(|r| unrank_pair(r, count)).collect()
    } else {
        let mut rng = seed.rng();
        index::sample(&mut rng, total, num_pairs)
            .into_iter()
            .map(|r| unrank_pair(r, count))
            .collect()
    };
    let values = pairs
        .par_iter()
        .map(|&(i, j)| {
            Ok((
                term.evaluate(&dataset[i], &dataset[j])?,
                chamfer(&dataset[i], &dataset[j]),
            ))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let max_emd = values.iter().map(|v| v.0).fold(0.0, f64::max);
    let max_chamfer = values.iter().map(|v| v.1).fold(0.0, f64::max);
    if max_emd <= 0.0 || max_chamfer <= 0.0 {
        return Err(Error::Degenerate(
            "every sampled pair has zero distance; the dataset has no spread to calibrate against".into(),
        ));
    }
    LossWeights::new(1.0 / max_emd, 1.0 / max_chamfer)
}
