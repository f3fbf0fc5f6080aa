//! Cluster-wise blending of whole clouds.
//!
//! Both inputs are normalized to the unit cube, split into `k` clusters of
//! equal size and blended cluster by cluster with an [`Embedder`]. The
//! clusters of the second cloud are assigned against the centroids of the
//! first, so cluster `i` of one cloud corresponds to cluster `i` of the
//! other. Outputs are mapped back into the first cloud's coordinates.

use rayon::prelude::*;

use crate::cloud::{normalize_unit_cube, NormalizationTransform, PointCloud};
use crate::cluster::{assign_to_shared_centroids, constrained_kmeans, ClusterSet, DEFAULT_MAX_ITERS};
use crate::density::style_source;
use crate::embed::Embedder;
use crate::error::{Error, Result};
use crate::rng::RngSeed;

/// Everything produced by one pipeline run.
#[derive(Debug, Clone)]
pub struct BlendRun {
    pub lambdas: Vec<f64>,
    /// One cloud per entry of `lambdas`, in the first input's coordinates.
    pub outputs: Vec<PointCloud>,
    pub x_normalized: PointCloud,
    pub y_normalized: PointCloud,
    /// Maps the first input into the unit cube; outputs are its inverse
    /// image.
    pub transform: NormalizationTransform,
    pub x_clusters: ClusterSet,
    pub y_clusters: ClusterSet,
    /// `pairing[i]` is the cluster of the second cloud blended with
    /// cluster `i` of the first.
    pub pairing: Vec<usize>,
}

/// Result of a style transfer: the blend plus the resampled design.
#[derive(Debug, Clone)]
pub struct StyleRun {
    pub blend: BlendRun,
    /// The design resampled by the input's density, in the input's
    /// coordinates.
    pub style_source: PointCloud,
}

/// Blend `x` towards `y` at a single weight. See [`blend_sweep`].
pub fn blend_pipeline(
    x: &PointCloud,
    y: &PointCloud,
    lambda: f64,
    k: usize,
    embedder: &dyn Embedder,
    seed: RngSeed,
) -> Result<PointCloud> {
    let mut run = blend_sweep(x, y, &[lambda], k, embedder, seed)?;
    Ok(run.outputs.pop().expect("one output per weight"))
}

/// Cluster `x` into `k` balanced clusters, assign `y` to the same
/// centroids, and blend corresponding clusters at every weight.
pub fn blend_sweep(
    x: &PointCloud,
    y: &PointCloud,
    lambdas: &[f64],
    k: usize,
    embedder: &dyn Embedder,
    seed: RngSeed,
) -> Result<BlendRun> {
    check_sizes(x, y)?;
    let (xn, transform) = normalize_unit_cube(x);
    let (yn, _) = normalize_unit_cube(y);
    blend_normalized(xn, yn, transform, lambdas, k, embedder, seed)
}

fn blend_normalized(
    xn: PointCloud,
    yn: PointCloud,
    transform: NormalizationTransform,
    lambdas: &[f64],
    k: usize,
    embedder: &dyn Embedder,
    seed: RngSeed,
) -> Result<BlendRun> {
    let x_clusters = constrained_kmeans(&xn, k, seed, DEFAULT_MAX_ITERS)?;
    let y_clusters = assign_to_shared_centroids(&yn, &x_clusters)?;
    let pairing = (0..k).collect();
    finish(xn, yn, transform, x_clusters, y_clusters, pairing, lambdas, embedder)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    x_normalized: PointCloud,
    y_normalized: PointCloud,
    transform: NormalizationTransform,
    x_clusters: ClusterSet,
    y_clusters: ClusterSet,
    pairing: Vec<usize>,
    lambdas: &[f64],
    embedder: &dyn Embedder,
) -> Result<BlendRun> {
    if lambdas.is_empty() {
        return Err(Error::invalid("at least one blending weight is required"));
    }
    let m = x_clusters.m();
    if embedder.input_size() != m {
        return Err(Error::invalid(format!(
            "embedder takes clusters of {} points but the clusters have {m}",
            embedder.input_size()
        )));
    }
    // blended[i][l]: cluster i at weight l.
    let blended: Vec<Vec<PointCloud>> = x_clusters
        .clusters
        .par_iter()
        .zip(pairing.par_iter())
        .map(|(cx, &j)| embedder.blend_many(cx, &y_clusters.clusters[j], lambdas))
        .collect::<Result<_>>()?;
    let outputs = (0..lambdas.len())
        .map(|l| {
            let merged = PointCloud::concat(blended.iter().map(|per_cluster| &per_cluster[l]))?;
            Ok(transform.invert(&merged))
        })
        .collect::<Result<_>>()?;
    Ok(BlendRun {
        lambdas: lambdas.to_vec(),
        outputs,
        x_normalized,
        y_normalized,
        transform,
        x_clusters,
        y_clusters,
        pairing,
    })
}

fn check_sizes(x: &PointCloud, y: &PointCloud) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::SizeMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    Ok(())
}

/// Resample `design` by the density of `x` and blend `x` towards the
/// result.
///
/// The design is used as given when it lies in the unit cube and is
/// normalized otherwise. The style source has `|x|` points.
#[allow(clippy::too_many_arguments)]
pub fn style_transfer_pipeline(
    x: &PointCloud,
    design: &PointCloud,
    lambdas: &[f64],
    k: usize,
    embedder: &dyn Embedder,
    bandwidth: f64,
    seed: RngSeed,
) -> Result<StyleRun> {
    let (xn, transform) = normalize_unit_cube(x);
    let design = if design.within_unit_cube() {
        design.clone()
    } else {
        normalize_unit_cube(design).0
    };
    let source = style_source(&xn, &design, bandwidth, seed)?;
    let style_original = transform.invert(&source);
    let blend = blend_normalized(xn, source, transform, lambdas, k, embedder, seed)?;
    Ok(StyleRun {
        blend,
        style_source: style_original,
    })
}

/// Greedy centroid matching: clusters of `x` in index order each take the
/// nearest unused cluster of `y`, lowest index on ties.
pub fn greedy_centroid_matching(x: &ClusterSet, y: &ClusterSet) -> Vec<usize> {
    let mut used = vec![false; y.k()];
    x.centroids
        .iter()
        .map(|c| {
            let mut best: Option<(usize, f64)> = None;
            for (j, cy) in y.centroids.iter().enumerate() {
                let d = c.dist2(*cy);
                if !used[j] && best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((j, d));
                }
            }
            let (j, _) = best.expect("as many clusters in y as in x");
            used[j] = true;
            j
        })
        .collect()
}

/// Blend after clustering both clouds independently and pairing clusters
/// by [`greedy_centroid_matching`].
///
/// Kept as a baseline: unlike [`blend_sweep`] the paired clusters need not
/// cover the same region, which shows up as displaced material.
#[allow(clippy::too_many_arguments)]
pub fn naive_match_blend(
    x: &PointCloud,
    y: &PointCloud,
    lambdas: &[f64],
    k: usize,
    embedder: &dyn Embedder,
    seed_x: RngSeed,
    seed_y: RngSeed,
) -> Result<BlendRun> {
    check_sizes(x, y)?;
    let (xn, transform) = normalize_unit_cube(x);
    let (yn, _) = normalize_unit_cube(y);
    let x_clusters = constrained_kmeans(&xn, k, seed_x, DEFAULT_MAX_ITERS)?;
    let y_clusters = constrained_kmeans(&yn, k, seed_y, DEFAULT_MAX_ITERS)?;
    let pairing = greedy_centroid_matching(&x_clusters, &y_clusters);
    finish(xn, yn, transform, x_clusters, y_clusters, pairing, lambdas, embedder)
}
