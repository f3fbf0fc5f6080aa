//! Encoder/decoder pairs with latent-space interpolation.
//!
//! An [`Embedder`] maps clouds of a fixed size into a latent vector space and
//! back. Blending two clouds means decoding a convex combination of their
//! latents. Three embedders are provided:
//!
//! * [`OtEmbedder`]: the latent is the canonically ordered coordinates, and
//!   blending moves every point along its optimal-transport match.
//! * [`PcaModel`]: a linear model over canonically ordered clusters.
//! * [`ExternalEmbedder`]: latents computed elsewhere and decoded by a
//!   [`PcaModel`].

mod external;
mod latent;
mod pca;

pub use external::{cluster_fingerprint, ExternalEmbedder};
pub use latent::{read_latent, write_latent, Latent};
pub use pca::{pca_fit, PcaModel};

use crate::cloud::{Point3, PointCloud};
use crate::error::{Error, Result};
use crate::metrics::emd_exact;

pub trait Embedder: Send + Sync {
    /// Number of points `encode` accepts.
    fn input_size(&self) -> usize;
    /// Number of points `decode` produces.
    fn output_size(&self) -> usize;
    fn latent_dim(&self) -> usize;

    fn encode(&self, cloud: &PointCloud) -> Result<Latent>;
    fn decode(&self, latent: &Latent) -> Result<PointCloud>;

    /// `decode(lambda * encode(x) + (1 - lambda) * encode(y))`.
    fn blend(&self, x: &PointCloud, y: &PointCloud, lambda: f64) -> Result<PointCloud> {
        check_blend_args(self.input_size(), x, y, lambda)?;
        let (zx, zy) = (self.encode(x)?, self.encode(y)?);
        self.decode(&zx.mix(&zy, lambda))
    }

    /// `blend` for several weights, sharing the encoding work.
    fn blend_many(&self, x: &PointCloud, y: &PointCloud, lambdas: &[f64]) -> Result<Vec<PointCloud>> {
        for &lambda in lambdas {
            check_blend_args(self.input_size(), x, y, lambda)?;
        }
        let (zx, zy) = (self.encode(x)?, self.encode(y)?);
        lambdas.iter().map(|&l| self.decode(&zx.mix(&zy, l))).collect()
    }
}

pub(crate) fn check_blend_args(n: usize, x: &PointCloud, y: &PointCloud, lambda: f64) -> Result<()> {
    for c in [x, y] {
        if c.len() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                actual: c.len(),
            });
        }
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    Ok(())
}

fn flatten(points: &[Point3]) -> Vec<f64> {
    points.iter().flat_map(|p| p.to_array()).collect()
}

fn unflatten(values: &[f64]) -> Result<PointCloud> {
    PointCloud::new(values.chunks_exact(3).map(|c| Point3::new(c[0], c[1], c[2])).collect())
}

/// Displacement interpolation between optimally matched points.
///
/// The latent of a cloud is its canonically sorted coordinate vector
/// (`d = 3n`), so encode/decode round trips are exact up to ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OtEmbedder {
    n: usize,
}

impl OtEmbedder {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("embedder size must be positive"));
        }
        Ok(OtEmbedder { n })
    }

    /// Blend and also return the matching used: output point `i` lies on
    /// the segment from `x[i]` to `y[mapping[i]]` before sorting.
    pub fn blend_matched(
        &self,
        x: &PointCloud,
        y: &PointCloud,
        lambdas: &[f64],
    ) -> Result<(Vec<PointCloud>, crate::metrics::Bijection)> {
        for &lambda in lambdas {
            check_blend_args(self.n, x, y, lambda)?;
        }
        let (_, matching) = emd_exact(x, y)?;
        let outputs = lambdas
            .iter()
            .map(|&lambda| {
                let points = x
                    .iter()
                    .zip(matching.mapping())
                    .map(|(&p, &j)| {
                        let q = y.points()[j];
                        // Coincident pairs stay put exactly.
                        if p == q {
                            p
                        } else {
                            p.lerp(q, lambda)
                        }
                    })
                    .collect();
                PointCloud::new(points).map(|c| c.canonical())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((outputs, matching))
    }
}

impl Embedder for OtEmbedder {
    fn input_size(&self) -> usize {
        self.n
    }

    fn output_size(&self) -> usize {
        self.n
    }

    fn latent_dim(&self) -> usize {
        3 * self.n
    }

    fn encode(&self, cloud: &PointCloud) -> Result<Latent> {
        if cloud.len() != self.n {
            return Err(Error::SizeMismatch {
                expected: self.n,
                actual: cloud.len(),
            });
        }
        Latent::new(flatten(cloud.canonical().points()))
    }

    fn decode(&self, latent: &Latent) -> Result<PointCloud> {
        if latent.dim() != 3 * self.n {
            return Err(Error::invalid(format!(
                "latent has dimension {}, expected {}",
                latent.dim(),
                3 * self.n
            )));
        }
        unflatten(latent.values())
    }

    fn blend(&self, x: &PointCloud, y: &PointCloud, lambda: f64) -> Result<PointCloud> {
        let (mut out, _) = self.blend_matched(x, y, &[lambda])?;
        Ok(out.pop().expect("one output per weight"))
    }

    fn blend_many(&self, x: &PointCloud, y: &PointCloud, lambdas: &[f64]) -> Result<Vec<PointCloud>> {
        self.blend_matched(x, y, lambdas).map(|(out, _)| out)
    }
}
