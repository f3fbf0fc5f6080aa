//! Balanced constrained k-means: every cluster holds exactly `m = n / k`
//! points. The assignment step is a transportation problem solved exactly
//! by min-cost flow; the update step moves each centroid to its cluster mean.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use crate::cloud::{Point3, PointCloud};
use crate::error::{Error, Result};
use crate::flow::{balanced_transport, CostScale};
use crate::io::{store_cloud, CloudFormat};
use crate::rng::RngSeed;

/// Default cap on assignment/update rounds.
pub const DEFAULT_MAX_ITERS: usize = 100;
/// Centroids closer than this (per coordinate) to the previous round count
/// as unchanged.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-9;

/// Cluster label of every point; each label is used exactly `m` times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    labels: Vec<usize>,
    k: usize,
}

impl Assignment {
    /// Validates that `labels` is a balanced labeling into `k` clusters.
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 || !labels.len().is_multiple_of(k) {
            return Err(Error::NotDivisible { n: labels.len(), k });
        }
        let m = labels.len() / k;
        let mut counts = vec![0usize; k];
        for &h in &labels {
            if h >= k {
                return Err(Error::invalid(format!("label {h} out of range for k = {k}")));
            }
            counts[h] += 1;
        }
        if counts.iter().any(|&c| c != m) {
            return Err(Error::invalid(format!("unbalanced labeling: counts {counts:?}")));
        }
        Ok(Assignment { labels, k })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn cluster_size(&self) -> usize {
        self.labels.len() / self.k
    }

    /// Point indices of cluster `h` in increasing order.
    pub fn members(&self, h: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == h).collect()
    }
}

/// `sum_i 1/2 |x_i - C_label(i)|^2`, accumulated in point order.
pub fn assignment_cost(points: &PointCloud, assignment: &Assignment, centroids: &[Point3]) -> f64 {
    points
        .iter()
        .zip(assignment.labels())
        .map(|(p, &h)| 0.5 * p.dist2(centroids[h]))
        .sum()
}

/// Optimal balanced assignment of `points` to `centroids`, `m` points each.
pub fn cluster_assignment(points: &PointCloud, centroids: &[Point3], m: usize) -> Result<Assignment> {
    let k = centroids.len();
    let n = points.len();
    if k == 0 || m == 0 || n != k * m {
        return Err(Error::NotDivisible { n, k });
    }
    if let Some(h) = centroids.iter().position(|c| !c.is_finite()) {
        return Err(Error::invalid(format!("centroid {h} is not finite")));
    }
    if k == 1 {
        return Ok(Assignment { labels: vec![0; n], k });
    }
    let pts = points.points();
    let mut real = vec![0.0f64; n * k];
    real.par_chunks_mut(k).zip(pts.par_iter()).for_each(|(row, p)| {
        for (slot, c) in row.iter_mut().zip(centroids) {
            *slot = 0.5 * p.dist2(*c);
        }
    });
    let max = real.iter().copied().fold(0.0, f64::max);
    let scale = CostScale::for_max_cost(max);
    let units: Vec<i64> = real.iter().map(|&c| scale.units(c)).collect();
    let labels = balanced_transport(&units, k, m);
    Ok(Assignment { labels, k })
}

/// New centroids: the mean of each non-empty cluster, else the previous one.
pub fn cluster_update(points: &PointCloud, assignment: &Assignment, previous: &[Point3]) -> Vec<Point3> {
    let k = assignment.k();
    let mut sums = vec![Point3::default(); k];
    let mut counts = vec![0usize; k];
    for (p, &h) in points.iter().zip(assignment.labels()) {
        sums[h] = sums[h] + *p;
        counts[h] += 1;
    }
    (0..k)
        .map(|h| {
            if counts[h] > 0 {
                sums[h] * (1.0 / counts[h] as f64)
            } else {
                previous[h]
            }
        })
        .collect()
}

/// Result of balanced clustering.
#[derive(Debug, Clone)]
pub struct ClusterSet {
    pub clusters: Vec<PointCloud>,
    pub centroids: Vec<Point3>,
    pub assignment: Assignment,
    pub iterations: usize,
    /// Final assignment cost with respect to `centroids`.
    pub objective: f64,
    /// Assignment cost of every round against that round's centroids.
    pub objective_trace: Vec<f64>,
}

impl ClusterSet {
    fn build(
        points: &PointCloud,
        centroids: Vec<Point3>,
        assignment: Assignment,
        iterations: usize,
        objective_trace: Vec<f64>,
    ) -> Result<Self> {
        let clusters = (0..assignment.k())
            .map(|h| points.select(&assignment.members(h)))
            .collect::<Result<Vec<_>>>()?;
        let objective = assignment_cost(points, &assignment, &centroids);
        Ok(ClusterSet {
            clusters,
            centroids,
            assignment,
            iterations,
            objective,
            objective_trace,
        })
    }

    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn m(&self) -> usize {
        self.assignment.cluster_size()
    }

    /// Write `cluster_XXX.ply` files and `manifest.txt` into `dir`.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (h, cluster) in self.clusters.iter().enumerate() {
            store_cloud(cluster, dir.join(format!("cluster_{h:03}.ply")), CloudFormat::Ply)?;
        }
        let manifest = ClusterManifest::from(self);
        let path = dir.join("manifest.txt");
        fs::write(&path, manifest.to_string()).map_err(|e| Error::io(path, e))
    }
}

/// Line-oriented summary of a [`ClusterSet`]:
///
/// ```text
/// k 4
/// m 2048
/// iterations 7
/// objective 12.5
/// centroid 0 0.25 0.5 0.5
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterManifest {
    pub k: usize,
    pub m: usize,
    pub iterations: usize,
    pub objective: f64,
    pub centroids: Vec<Point3>,
}

impl From<&ClusterSet> for ClusterManifest {
    fn from(set: &ClusterSet) -> Self {
        ClusterManifest {
            k: set.k(),
            m: set.m(),
            iterations: set.iterations,
            objective: set.objective,
            centroids: set.centroids.clone(),
        }
    }
}

impl std::fmt::Display for ClusterManifest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut s = String::from("# cloudmorph cluster manifest\n");
        let _ = writeln!(s, "k {}", self.k);
        let _ = writeln!(s, "m {}", self.m);
        let _ = writeln!(s, "iterations {}", self.iterations);
        let _ = writeln!(s, "objective {}", self.objective);
        for (h, c) in self.centroids.iter().enumerate() {
            let _ = writeln!(s, "centroid {h} {} {} {}", c.x, c.y, c.z);
        }
        f.write_str(&s)
    }
}

impl std::str::FromStr for ClusterManifest {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: "manifest.txt".into(),
            line,
            message,
        };
        let mut out = ClusterManifest {
            k: 0,
            m: 0,
            iterations: 0,
            objective: 0.0,
            centroids: Vec::new(),
        };
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| s.parse::<f64>().map_err(|_| err(lineno, format!("bad number {s:?}")));
            let int = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| err(lineno, format!("bad integer {s:?}")))
            };
            match fields.as_slice() {
                ["k", v] => out.k = int(v)?,
                ["m", v] => out.m = int(v)?,
                ["iterations", v] => out.iterations = int(v)?,
                ["objective", v] => out.objective = num(v)?,
                ["centroid", h, x, y, z] => {
                    if int(h)? != out.centroids.len() {
                        return Err(err(lineno, "centroids out of order".into()));
                    }
                    out.centroids.push(Point3::new(num(x)?, num(y)?, num(z)?));
                }
                _ => return Err(err(lineno, format!("unrecognised entry {line:?}"))),
            }
        }
        if out.centroids.len() != out.k {
            return Err(err(
                0,
                format!("expected {} centroids, found {}", out.k, out.centroids.len()),
            ));
        }
        Ok(out)
    }
}

/// Seeded k-means++ seeding: first centroid uniform, then proportional to
/// squared distance to the nearest chosen centroid.
pub fn kmeans_plus_plus(points: &PointCloud, k: usize, seed: RngSeed) -> Vec<Point3> {
    let pts = points.points();
    let mut rng = seed.rng();
    let mut centroids = Vec::with_capacity(k);
    centroids.push(pts[rng.random_range(0..pts.len())]);
    let mut nearest: Vec<f64> = pts.iter().map(|p| p.dist2(centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = pts.len() - 1;
            for (i, w) in nearest.iter().enumerate() {
                acc += w;
                if acc > target && *w > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..pts.len())
        };
        let c = pts[pick];
        centroids.push(c);
        for (d, p) in nearest.iter_mut().zip(pts) {
            *d = d.min(p.dist2(c));
        }
    }
    centroids
}

/// Alternate optimal balanced assignment and centroid update until the
/// centroids stop moving or `max_iters` rounds have run.
pub fn constrained_kmeans(points: &PointCloud, k: usize, seed: RngSeed, max_iters: usize) -> Result<ClusterSet> {
    let n = points.len();
    if k == 0 || !n.is_multiple_of(k) {
        return Err(Error::NotDivisible { n, k });
    }
    if max_iters == 0 {
        return Err(Error::invalid("max_iters must be positive"));
    }
    let m = n / k;
    let mut centroids = kmeans_plus_plus(points, k, seed);
    let mut trace = Vec::new();
    let mut assignment = None;
    let mut iterations = 0;
    for round in 1..=max_iters {
        let current = cluster_assignment(points, &centroids, m)?;
        trace.push(assignment_cost(points, &current, &centroids));
        let updated = cluster_update(points, &current, &centroids);
        let moved = centroids
            .iter()
            .zip(&updated)
            .map(|(a, b)| (a.x - b.x).abs().max((a.y - b.y).abs()).max((a.z - b.z).abs()))
            .fold(0.0, f64::max);
        centroids = updated;
        assignment = Some(current);
        iterations = round;
        // With one cluster the assignment is forced, so the first mean is final.
        if moved <= CONVERGENCE_TOLERANCE || k == 1 {
            break;
        }
    }
    let assignment = assignment.expect("at least one round");
    ClusterSet::build(points, centroids, assignment, iterations, trace)
}

/// Cluster `points` with one assignment step against `reference`'s
/// centroids, which are reused unchanged.
pub fn assign_to_shared_centroids(points: &PointCloud, reference: &ClusterSet) -> Result<ClusterSet> {
    let expected = reference.k() * reference.m();
    if points.len() != expected {
        return Err(Error::SizeMismatch {
            expected,
            actual: points.len(),
        });
    }
    assign_to_centroids(points, &reference.centroids)
}

/// Balanced clustering of `points` against fixed `centroids`, one cluster
/// of `n / k` points per centroid.
pub fn assign_to_centroids(points: &PointCloud, centroids: &[Point3]) -> Result<ClusterSet> {
    let (n, k) = (points.len(), centroids.len());
    if k == 0 || !n.is_multiple_of(k) {
        return Err(Error::NotDivisible { n, k });
    }
    let assignment = cluster_assignment(points, centroids, n / k)?;
    let cost = assignment_cost(points, &assignment, centroids);
    ClusterSet::build(points, centroids.to_vec(), assignment, 1, vec![cost])
}
