//! Slow, obviously-correct reference implementations shared by the
//! integration tests.
#![allow(dead_code)]

use cloudmorph::{Point3, PointCloud, RngSeed};
use rand::Rng;

pub fn random_cloud(n: usize, seed: u64) -> PointCloud {
    let mut rng = RngSeed(seed).rng();
    let pts = (0..n)
        .map(|_| Point3::new(rng.random(), rng.random(), rng.random()))
        .collect();
    PointCloud::new(pts).unwrap()
}

/// All permutations of `0..n` (Heap's algorithm).
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        heap(k - 1, a, out);
        for i in 0..k - 1 {
            if k.is_multiple_of(2) {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
            heap(k - 1, a, out);
        }
    }
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    heap(n, &mut a, &mut out);
    out
}

/// Minimum total distance over all bijections, with the minimizer.
pub fn emd_brute(x: &PointCloud, y: &PointCloud) -> (f64, Vec<usize>) {
    let (xs, ys) = (x.points(), y.points());
    permutations(xs.len())
        .into_iter()
        .map(|p| {
            let cost: f64 = p.iter().enumerate().map(|(i, &j)| xs[i].dist(ys[j])).sum();
            (cost, p)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap()
}

pub fn chamfer_brute(x: &PointCloud, y: &PointCloud) -> f64 {
    let one_way = |a: &PointCloud, b: &PointCloud| -> f64 {
        a.iter()
            .map(|p| b.iter().map(|q| p.dist2(*q)).fold(f64::INFINITY, f64::min))
            .sum()
    };
    one_way(x, y) + one_way(y, x)
}

/// Every labeling of `n` points with `k` labels used `n / k` times each.
pub fn balanced_labelings(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(i: usize, n: usize, m: usize, counts: &mut Vec<usize>, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        for h in 0..counts.len() {
            if counts[h] < m {
                counts[h] += 1;
                cur.push(h);
                rec(i + 1, n, m, counts, cur, out);
                cur.pop();
                counts[h] -= 1;
            }
        }
    }
    let mut out = Vec::new();
    rec(0, n, n / k, &mut vec![0; k], &mut Vec::new(), &mut out);
    out
}

pub fn labeling_cost(points: &PointCloud, centroids: &[Point3], labels: &[usize]) -> f64 {
    points
        .iter()
        .zip(labels)
        .map(|(p, &h)| 0.5 * p.dist2(centroids[h]))
        .sum()
}

/// Cheapest balanced labeling for fixed centroids.
pub fn best_labeling(points: &PointCloud, centroids: &[Point3]) -> (f64, Vec<usize>) {
    balanced_labelings(points.len(), centroids.len())
        .into_iter()
        .map(|l| (labeling_cost(points, centroids, &l), l))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap()
}

pub fn label_means(points: &PointCloud, labels: &[usize], k: usize) -> Vec<Point3> {
    let mut sums = vec![[0.0f64; 4]; k];
    for (p, &h) in points.iter().zip(labels) {
        sums[h][0] += p.x;
        sums[h][1] += p.y;
        sums[h][2] += p.z;
        sums[h][3] += 1.0;
    }
    sums.iter()
        .map(|s| Point3::new(s[0] / s[3], s[1] / s[3], s[2] / s[3]))
        .collect()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
#[allow(clippy::needless_range_loop)]
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    let (arp, arq) = (a[r][p], a[r][q]);
                    a[r][p] = c * arp - s * arq;
                    a[r][q] = s * arp + c * arq;
                }
                for r in 0..n {
                    let (apr, aqr) = (a[p][r], a[q][r]);
                    a[p][r] = c * apr - s * aqr;
                    a[q][r] = s * apr + c * aqr;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// Distance from `p` to the segment `a`–`b`.
pub fn segment_distance(p: Point3, a: Point3, b: Point3) -> f64 {
    let ab = [b.x - a.x, b.y - a.y, b.z - a.z];
    let ap = [p.x - a.x, p.y - a.y, p.z - a.z];
    let len2: f64 = ab.iter().map(|v| v * v).sum();
    let t = if len2 > 0.0 {
        (ab.iter().zip(&ap).map(|(u, v)| u * v).sum::<f64>() / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    p.dist(b.lerp(a, t))
}

/// Four tight blobs at the corners of a square in the plane z = 0.5.
pub fn four_blobs(per_blob: usize, seed: u64) -> PointCloud {
    let mut rng = RngSeed(seed).rng();
    let mut pts = Vec::new();
    for (cx, cy) in [(0.1, 0.1), (0.9, 0.1), (0.1, 0.9), (0.9, 0.9)] {
        for _ in 0..per_blob {
            let mut jitter = || 0.04 * (rng.random::<f64>() - 0.5);
            pts.push(Point3::new(cx + jitter(), cy + jitter(), 0.5 + jitter()));
        }
    }
    PointCloud::new(pts).unwrap()
}

/// Seeds for which two-cluster balanced k-means on `cloud` (after unit-cube
/// normalization) splits it left/right and bottom/top respectively.
pub fn crossing_split_seeds(cloud: &PointCloud) -> (u64, u64) {
    let (normalized, _) = cloudmorph::normalize_unit_cube(cloud);
    let (mut left_right, mut bottom_top) = (None, None);
    for seed in 0..1000u64 {
        let set = cloudmorph::constrained_kmeans(&normalized, 2, RngSeed(seed), 100).unwrap();
        let (a, b) = (set.centroids[0], set.centroids[1]);
        let (dx, dy) = ((a.x - b.x).abs(), (a.y - b.y).abs());
        if dx > 0.5 && dy < 0.1 {
            left_right.get_or_insert(seed);
        } else if dy > 0.5 && dx < 0.1 {
            bottom_top.get_or_insert(seed);
        }
        if let (Some(l), Some(b)) = (left_right, bottom_top) {
            return (l, b);
        }
    }
    panic!("no crossing pair of splits found");
}
