//! Gaussian kernel density of a reference cloud and density-weighted
//! resampling of a design cloud.

use std::f64::consts::PI;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;

use crate::cloud::{perturb_gaussian, Point3, PointCloud};
use crate::error::{Error, Result};
use crate::kdtree::KdTree;
use crate::rng::RngSeed;

/// Kernel bandwidth in normalized (unit cube) coordinates.
pub const DEFAULT_BANDWIDTH: f64 = 0.01;
/// Per-coordinate standard deviation of the perturbation applied to
/// resampled points: 0.1% of the unit cube edge.
pub const DEFAULT_NOISE: f64 = 0.001;

/// Relative weight below which kernel terms are skipped, measured against
/// the nearest source point's term and summed over all points.
const NEGLIGIBLE: f64 = 1e-16;

/// Isotropic Gaussian KDE `f(q) = 1/n sum_i K_sigma(q - x_i)`.
#[derive(Debug, Clone)]
pub struct Density {
    source: PointCloud,
    bandwidth: f64,
    tree: KdTree,
    log_norm: f64,
    cutoff2: f64,
}

impl Density {
    pub fn new(source: PointCloud, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::invalid(format!("bandwidth must be positive, got {bandwidth}")));
        }
        let n = source.len() as f64;
        let var = bandwidth * bandwidth;
        let log_norm = -1.5 * (2.0 * PI * var).ln() - n.ln();
        // Terms further than this beyond the nearest point are < NEGLIGIBLE / n
        // of the nearest point's term each.
        let cutoff2 = 2.0 * var * (n / NEGLIGIBLE).ln();
        let tree = KdTree::new(source.points());
        Ok(Density {
            source,
            bandwidth,
            tree,
            log_norm,
            cutoff2,
        })
    }

    pub fn source(&self) -> &PointCloud {
        &self.source
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Kernel value at its centre, `(2 pi sigma^2)^(-3/2)`.
    pub fn peak(&self) -> f64 {
        (2.0 * PI * self.bandwidth * self.bandwidth).powf(-1.5)
    }

    /// Natural log of the density. Finite wherever the density underflows.
    pub fn log_evaluate(&self, q: Point3) -> f64 {
        let (_, d0) = self.tree.nearest(q).expect("source is non-empty");
        let inv = 0.5 / (self.bandwidth * self.bandwidth);
        let mut sum = 0.0;
        self.tree.for_each_within(q, d0 + self.cutoff2, |_, d| {
            sum += (-(d - d0) * inv).exp();
        });
        self.log_norm - d0 * inv + sum.ln()
    }

    pub fn evaluate(&self, q: Point3) -> f64 {
        self.log_evaluate(q).exp()
    }
}

pub fn kde_evaluate(density: &Density, q: Point3) -> f64 {
    density.evaluate(q)
}

/// Draw `count` design points with replacement, each with probability
/// proportional to the density at that point, then perturb every
/// coordinate with `N(0, noise_sigma^2)`.
pub fn density_subsample(
    design: &PointCloud,
    density: &Density,
    count: usize,
    noise_sigma: f64,
    seed: RngSeed,
) -> Result<PointCloud> {
    if count == 0 {
        return Err(Error::invalid("sample count must be positive"));
    }
    let weights = selection_weights(design, density);
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::ZeroDensity {
            bandwidth: density.bandwidth(),
        });
    }
    let dist = WeightedIndex::new(&weights).map_err(|_| Error::ZeroDensity {
        bandwidth: density.bandwidth(),
    })?;
    let mut rng = seed.derive(0).rng();
    let picked: Vec<Point3> = (0..count).map(|_| design.points()[dist.sample(&mut rng)]).collect();
    perturb_gaussian(&PointCloud::new(picked)?, noise_sigma, seed.derive(1))
}

/// Unnormalized selection weight of every design point.
pub fn selection_weights(design: &PointCloud, density: &Density) -> Vec<f64> {
    design.points().par_iter().map(|&p| density.evaluate(p)).collect()
}

/// The design cloud resampled by the density of `x`: `|x|` points, default
/// noise.
pub fn style_source(x: &PointCloud, design: &PointCloud, bandwidth: f64, seed: RngSeed) -> Result<PointCloud> {
    style_source_with_noise(x, design, bandwidth, DEFAULT_NOISE, seed)
}

pub fn style_source_with_noise(
    x: &PointCloud,
    design: &PointCloud,
    bandwidth: f64,
    noise_sigma: f64,
    seed: RngSeed,
) -> Result<PointCloud> {
    let density = Density::new(x.clone(), bandwidth)?;
    density_subsample(design, &density, x.len(), noise_sigma, seed)
}
