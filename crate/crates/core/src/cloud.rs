//! Points, clouds, and normalization to the unit cube.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Sub};

use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::RngSeed;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn splat(v: f64) -> Self {
        Point3::new(v, v, v)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Point3::new(a[0], a[1], a[2])
    }

    #[inline]
    pub fn axis(self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    #[inline]
    pub fn dist2(self, other: Point3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        dx * dx + dy * dy + dz * dz
    }

    #[inline]
    pub fn dist(self, other: Point3) -> f64 {
        self.dist2(other).sqrt()
    }

    pub fn norm(self) -> f64 {
        self.dist(Point3::default())
    }

    /// `t * self + (1 - t) * other`.
    #[inline]
    pub fn lerp(self, other: Point3, t: f64) -> Point3 {
        let s = 1.0 - t;
        Point3::new(
            t * self.x + s * other.x,
            t * self.y + s * other.y,
            t * self.z + s * other.z,
        )
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn min(self, o: Point3) -> Point3 {
        Point3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max(self, o: Point3) -> Point3 {
        Point3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    /// Lexicographic total order on (x, y, z).
    pub fn lex_cmp(&self, other: &Point3) -> Ordering {
        self.x
            .total_cmp(&other.x)
            .then(self.y.total_cmp(&other.y))
            .then(self.z.total_cmp(&other.z))
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// A non-empty, ordered set of finite points.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if let Some(index) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(PointCloud { points })
    }

    pub fn from_coords(coords: &[[f64; 3]]) -> Result<Self> {
        PointCloud::new(coords.iter().copied().map(Point3::from_array).collect())
    }

    /// Caller guarantees the invariants (non-empty, finite).
    pub(crate) fn from_vec_unchecked(points: Vec<Point3>) -> Self {
        debug_assert!(!points.is_empty());
        debug_assert!(points.iter().all(|p| p.is_finite()));
        PointCloud { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false; clouds are non-empty by construction.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point3> {
        self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point3> {
        self.points.iter()
    }

    pub fn bounding_box(&self) -> (Point3, Point3) {
        let first = self.points[0];
        self.points
            .iter()
            .fold((first, first), |(lo, hi), &p| (lo.min(p), hi.max(p)))
    }

    pub fn centroid(&self) -> Point3 {
        let sum = self.points.iter().fold(Point3::default(), |a, &p| a + p);
        sum * (1.0 / self.len() as f64)
    }

    /// Copy sorted lexicographically by (x, y, z).
    pub fn canonical(&self) -> PointCloud {
        let mut points = self.points.clone();
        points.sort_by(Point3::lex_cmp);
        PointCloud { points }
    }

    /// Concatenation of several clouds in order.
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a PointCloud>) -> Result<PointCloud> {
        let points: Vec<Point3> = parts.into_iter().flat_map(|c| c.points.iter().copied()).collect();
        PointCloud::new(points)
    }

    /// Gather the points at the given indices.
    pub fn select(&self, indices: &[usize]) -> Result<PointCloud> {
        PointCloud::new(indices.iter().map(|&i| self.points[i]).collect())
    }

    pub fn within_unit_cube(&self) -> bool {
        self.points
            .iter()
            .all(|p| p.to_array().iter().all(|c| (0.0..=1.0).contains(c)))
    }
}

impl<'a> IntoIterator for &'a PointCloud {
    type Item = &'a Point3;
    type IntoIter = std::slice::Iter<'a, Point3>;
    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

/// Uniform scale plus offset: `y = scale * x + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationTransform {
    pub scale: f64,
    pub offset: Point3,
}

impl NormalizationTransform {
    pub const IDENTITY: NormalizationTransform = NormalizationTransform {
        scale: 1.0,
        offset: Point3::new(0.0, 0.0, 0.0),
    };

    pub fn forward(&self, p: Point3) -> Point3 {
        p * self.scale + self.offset
    }

    pub fn inverse(&self, p: Point3) -> Point3 {
        (p - self.offset) * (1.0 / self.scale)
    }

    pub fn apply(&self, cloud: &PointCloud) -> PointCloud {
        PointCloud::from_vec_unchecked(cloud.iter().map(|&p| self.forward(p)).collect())
    }

    pub fn invert(&self, cloud: &PointCloud) -> PointCloud {
        PointCloud::from_vec_unchecked(cloud.iter().map(|&p| self.inverse(p)).collect())
    }
}

/// Map a cloud into `[0,1]^3` with one isotropic scale: the longest bounding
/// box edge becomes length 1 and the shorter axes are centred. A cloud whose
/// points all coincide is moved to the cube centre with scale 1.
pub fn normalize_unit_cube(cloud: &PointCloud) -> (PointCloud, NormalizationTransform) {
    let (lo, hi) = cloud.bounding_box();
    let extent = hi - lo;
    let longest = extent.x.max(extent.y).max(extent.z);
    if longest == 0.0 {
        let transform = NormalizationTransform {
            scale: 1.0,
            offset: Point3::splat(0.5) - lo,
        };
        let points = vec![Point3::splat(0.5); cloud.len()];
        return (PointCloud::from_vec_unchecked(points), transform);
    }
    let scale = 1.0 / longest;
    let shift = Point3::new(
        (1.0 - extent.x * scale) * 0.5,
        (1.0 - extent.y * scale) * 0.5,
        (1.0 - extent.z * scale) * 0.5,
    );
    let transform = NormalizationTransform {
        scale,
        offset: shift - lo * scale,
    };
    let points = cloud
        .iter()
        .map(|&p| {
            let q = (p - lo) * scale + shift;
            Point3::new(q.x.clamp(0.0, 1.0), q.y.clamp(0.0, 1.0), q.z.clamp(0.0, 1.0))
        })
        .collect();
    (PointCloud::from_vec_unchecked(points), transform)
}

/// Offset every coordinate by independent `N(0, sigma^2)` noise.
pub fn perturb_gaussian(cloud: &PointCloud, sigma: f64, seed: RngSeed) -> Result<PointCloud> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!(
            "noise sigma must be finite and non-negative, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(cloud.clone());
    }
    let normal = Normal::new(0.0, sigma).expect("sigma validated");
    let mut rng = seed.rng();
    let points = cloud
        .iter()
        .map(|&p| {
            let dx = normal.sample(&mut rng);
            let dy = normal.sample(&mut rng);
            let dz = normal.sample(&mut rng);
            Point3::new(p.x + dx, p.y + dy, p.z + dz)
        })
        .collect();
    Ok(PointCloud::from_vec_unchecked(points))
}

/// Multiset equality up to `tol` per coordinate after canonical sorting.
pub fn multiset_eq(a: &PointCloud, b: &PointCloud, tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let (a, b) = (a.canonical(), b.canonical());
    a.iter()
        .zip(b.iter())
        .all(|(p, q)| (p.x - q.x).abs() <= tol && (p.y - q.y).abs() <= tol && (p.z - q.z).abs() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn normalize_single_axis() {
        let c = PointCloud::from_coords(&[[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]]).unwrap();
        let (n, t) = normalize_unit_cube(&c);
        assert_eq!(n.points()[0], Point3::new(0.0, 0.5, 0.5));
        assert_eq!(n.points()[1], Point3::new(1.0, 0.5, 0.5));
        assert_eq!(t.scale, 0.5);
    }

    #[test]
    fn normalize_full_cube_is_identity() {
        let c = PointCloud::from_coords(&[[0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [0.3, 0.2, 0.9]]).unwrap();
        let (n, t) = normalize_unit_cube(&c);
        assert_eq!(n, c);
        assert_eq!(t, NormalizationTransform::IDENTITY);
    }

    #[test]
    fn normalize_degenerate_goes_to_centre() {
        let c = PointCloud::from_coords(&[[3.0, -1.0, 7.0]; 4]).unwrap();
        let (n, t) = normalize_unit_cube(&c);
        assert!(n.iter().all(|&p| p == Point3::splat(0.5)));
        assert_eq!(t.scale, 1.0);
        assert_eq!(t.inverse(Point3::splat(0.5)), Point3::new(3.0, -1.0, 7.0));
    }

    #[test]
    fn normalize_round_trip() {
        let mut rng = RngSeed(11).rng();
        let pts: Vec<Point3> = (0..100)
            .map(|_| {
                Point3::new(
                    rng.random_range(-50.0..20.0),
                    rng.random_range(3.0..4.0),
                    rng.random_range(-1e3..1e3),
                )
            })
            .collect();
        let c = PointCloud::new(pts).unwrap();
        let (n, t) = normalize_unit_cube(&c);
        let back = t.invert(&n);
        for (a, b) in c.iter().zip(back.iter()) {
            for (u, v) in a.to_array().iter().zip(b.to_array()) {
                assert!((u - v).abs() <= 1e-9 * u.abs().max(1.0), "{u} vs {v}");
            }
        }
    }

    #[test]
    fn rejects_bad_clouds() {
        assert!(matches!(PointCloud::new(vec![]), Err(Error::EmptyCloud)));
        let e = PointCloud::new(vec![Point3::default(), Point3::new(f64::NAN, 0.0, 0.0)]);
        assert!(matches!(e, Err(Error::NonFinite { index: 1 })));
    }

    #[test]
    fn perturb_zero_sigma_is_identity() {
        let c = PointCloud::from_coords(&[[0.1, 0.2, 0.3], [0.4, 0.5, 0.6]]).unwrap();
        assert_eq!(perturb_gaussian(&c, 0.0, RngSeed(1)).unwrap(), c);
        assert!(perturb_gaussian(&c, -1e-3, RngSeed(1)).is_err());
    }

    #[test]
    fn perturb_statistics_and_determinism() {
        let c = PointCloud::new(vec![Point3::splat(0.5); 10_000]).unwrap();
        let a = perturb_gaussian(&c, 1e-3, RngSeed(5)).unwrap();
        let b = perturb_gaussian(&c, 1e-3, RngSeed(5)).unwrap();
        assert_eq!(a, b);
        let offsets: Vec<f64> = a.iter().flat_map(|p| (*p - Point3::splat(0.5)).to_array()).collect();
        let mean = offsets.iter().sum::<f64>() / offsets.len() as f64;
        let var = offsets.iter().map(|o| (o - mean).powi(2)).sum::<f64>() / (offsets.len() - 1) as f64;
        let sd = var.sqrt();
        assert!((sd - 1e-3).abs() < 0.05e-3, "sd {sd}");
    }

    proptest! {
        #[test]
        fn normalized_always_in_cube(
            coords in prop::collection::vec(prop::array::uniform3(-1e4f64..1e4), 1..60)
        ) {
            let c = PointCloud::from_coords(&coords).unwrap();
            let (n, t) = normalize_unit_cube(&c);
            prop_assert!(n.within_unit_cube());
            prop_assert!(t.scale > 0.0);
        }
    }
}
