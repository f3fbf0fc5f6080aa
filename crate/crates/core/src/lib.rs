//! Cluster-wise blending and style transfer for volumetric point clouds.
//!
//! A cloud is normalized to the unit cube and split by balanced k-means
//! into clusters of equal size. A second cloud is assigned to the same
//! centroids, and corresponding clusters are blended with an [`Embedder`].
//! For style transfer the second cloud is a design cloud resampled by the
//! kernel density of the first.
//!
//! ```
//! use cloudmorph::{blend_pipeline, OtEmbedder, PointCloud, RngSeed};
//!
//! let a = PointCloud::from_coords(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 1.0]])?;
//! let b = PointCloud::from_coords(&[[0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0], [1.0, 1.0, 0.0]])?;
//! let embedder = OtEmbedder::new(2)?;
//! let mid = blend_pipeline(&a, &b, 0.5, 2, &embedder, RngSeed(7))?;
//! assert_eq!(mid.len(), 4);
//! # Ok::<(), cloudmorph::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cloud;
pub mod cluster;
pub mod datagen;
pub mod density;
pub mod embed;
pub mod error;
pub mod flow;
pub mod io;
pub mod kdtree;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod svg;

pub use cloud::{multiset_eq, normalize_unit_cube, perturb_gaussian, NormalizationTransform, Point3, PointCloud};
pub use cluster::{
    assign_to_centroids, assign_to_shared_centroids, cluster_assignment, cluster_update, constrained_kmeans,
    kmeans_plus_plus, Assignment, ClusterManifest, ClusterSet,
};
pub use density::{density_subsample, kde_evaluate, style_source, Density};
pub use embed::{pca_fit, read_latent, write_latent, Embedder, ExternalEmbedder, Latent, OtEmbedder, PcaModel};
pub use error::{Error, Result};
pub use io::{load_auto, store_auto, CloudFormat};
pub use metrics::{
    calibrate_weights, chamfer, combined_loss, emd_exact, sinkhorn_divergence, Bijection, EmdMode, EmdNorm, EmdTerm,
    LossWeights, SinkhornOutcome, SinkhornParams,
};
pub use pipeline::{blend_pipeline, blend_sweep, naive_match_blend, style_transfer_pipeline, BlendRun, StyleRun};
pub use rng::{RngSeed, DEFAULT_SEED};
pub use svg::{export_svg, SvgOptions};
