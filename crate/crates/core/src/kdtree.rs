//! Static 3-d tree for exact nearest-neighbour and radius queries.

use crate::cloud::Point3;

const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        lo: usize,
        hi: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Point3>,
    index: Vec<usize>,
    nodes: Vec<Node>,
}

impl KdTree {
    pub fn new(points: &[Point3]) -> Self {
        let mut tree = KdTree {
            points: points.to_vec(),
            index: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            tree.build(0, points.len());
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn build(&mut self, lo: usize, hi: usize) -> usize {
        let id = self.nodes.len();
        if hi - lo <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { lo, hi });
            return id;
        }
        let (mut bmin, mut bmax) = (Point3::splat(f64::INFINITY), Point3::splat(f64::NEG_INFINITY));
        for &i in &self.index[lo..hi] {
            bmin = bmin.min(self.points[i]);
            bmax = bmax.max(self.points[i]);
        }
        let spread = bmax - bmin;
        let axis = if spread.x >= spread.y && spread.x >= spread.z {
            0
        } else if spread.y >= spread.z {
            1
        } else {
            2
        };
        if spread.axis(axis) == 0.0 {
            self.nodes.push(Node::Leaf { lo, hi });
            return id;
        }
        let mid = lo + (hi - lo) / 2;
        let points = &self.points;
        self.index[lo..hi]
            .select_nth_unstable_by(mid - lo, |&a, &b| points[a].axis(axis).total_cmp(&points[b].axis(axis)));
        let value = self.points[self.index[mid]].axis(axis);
        self.nodes.push(Node::Leaf { lo, hi });
        let left = self.build(lo, mid);
        let right = self.build(mid, hi);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    /// Index and squared distance of a nearest point.
    pub fn nearest(&self, q: Point3) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        self.nearest_in(0, q, &mut best);
        Some(best)
    }

    fn nearest_in(&self, node: usize, q: Point3, best: &mut (usize, f64)) {
        match self.nodes[node] {
            Node::Leaf { lo, hi } => {
                for &i in &self.index[lo..hi] {
                    let d = q.dist2(self.points[i]);
                    if d < best.1 || (d == best.1 && i < best.0) {
                        *best = (i, d);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q.axis(axis) - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.nearest_in(near, q, best);
                if diff * diff <= best.1 {
                    self.nearest_in(far, q, best);
                }
            }
        }
    }

    /// The `k` nearest points as `(index, squared distance)`, closest first.
    pub fn k_nearest(&self, q: Point3, k: usize) -> Vec<(usize, f64)> {
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        if k > 0 && !self.points.is_empty() {
            self.k_nearest_in(0, q, k, &mut best);
        }
        best.into_iter().map(|(d, i)| (i, d)).collect()
    }

    fn k_nearest_in(&self, node: usize, q: Point3, k: usize, best: &mut Vec<(f64, usize)>) {
        match self.nodes[node] {
            Node::Leaf { lo, hi } => {
                for &i in &self.index[lo..hi] {
                    let cand = (q.dist2(self.points[i]), i);
                    if best.len() < k || cand < best[best.len() - 1] {
                        let pos = best.partition_point(|b| *b < cand);
                        best.insert(pos, cand);
                        best.truncate(k);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q.axis(axis) - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.k_nearest_in(near, q, k, best);
                if best.len() < k || diff * diff <= best[best.len() - 1].0 {
                    self.k_nearest_in(far, q, k, best);
                }
            }
        }
    }

    /// Visit every point with squared distance `<= radius2`, passing
    /// `(index, squared distance)`.
    pub fn for_each_within(&self, q: Point3, radius2: f64, mut visit: impl FnMut(usize, f64)) {
        if !self.points.is_empty() {
            self.within_in(0, q, radius2, &mut visit);
        }
    }

    fn within_in(&self, node: usize, q: Point3, r2: f64, visit: &mut impl FnMut(usize, f64)) {
        match self.nodes[node] {
            Node::Leaf { lo, hi } => {
                for &i in &self.index[lo..hi] {
                    let d = q.dist2(self.points[i]);
                    if d <= r2 {
                        visit(i, d);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q.axis(axis) - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.within_in(near, q, r2, visit);
                if diff * diff <= r2 {
                    self.within_in(far, q, r2, visit);
                }
            }
        }
    }
}
