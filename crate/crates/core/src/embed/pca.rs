use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use super::{flatten, unflatten, Embedder, Latent};
use crate::cloud::PointCloud;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"CMPCA\0\0\x01";

/// Linear embedder: mean plus `d` orthonormal directions in the space of
/// canonically ordered, flattened clusters of `m` points.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    m: usize,
    mean: Vec<f64>,
    /// `d` rows of length `3m`.
    basis: Vec<Vec<f64>>,
}

/// Fit the mean and the top `d` principal directions of the training
/// clusters. Directions beyond the rank of the data are filled with an
/// arbitrary orthonormal completion.
pub fn pca_fit(clusters: &[PointCloud], d: usize) -> Result<PcaModel> {
    let Some(first) = clusters.first() else {
        return Err(Error::invalid("no training clusters"));
    };
    let m = first.len();
    let dim = 3 * m;
    if d == 0 || d > dim {
        return Err(Error::invalid(format!("latent dimension {d} must lie in 1..={dim}")));
    }
    if clusters.len() < d {
        return Err(Error::invalid(format!(
            "{} training clusters cannot determine {d} directions",
            clusters.len()
        )));
    }
    if let Some(c) = clusters.iter().find(|c| c.len() != m) {
        return Err(Error::SizeMismatch {
            expected: m,
            actual: c.len(),
        });
    }

    let rows: Vec<Vec<f64>> = clusters.par_iter().map(|c| flatten(c.canonical().points())).collect();
    let count = rows.len() as f64;
    let mut mean = vec![0.0; dim];
    for row in &rows {
        for (s, v) in mean.iter_mut().zip(row) {
            *s += v;
        }
    }
    mean.iter_mut().for_each(|s| *s /= count);
    let centered: Vec<Vec<f64>> = rows
        .into_iter()
        .map(|r| r.iter().zip(&mean).map(|(v, mu)| v - mu).collect())
        .collect();

    let mut basis = principal_directions(&centered, dim, d);
    complete_basis(&mut basis, dim, d);
    orthonormalize(&mut basis);
    Ok(PcaModel { m, mean, basis })
}

/// Leading eigenvectors of the scatter matrix with non-negligible
/// eigenvalues, largest first.
fn principal_directions(centered: &[Vec<f64>], dim: usize, d: usize) -> Vec<Vec<f64>> {
    let n = centered.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let use_gram = n <= dim;
    let size = if use_gram { n } else { dim };
    let mut scatter = DMatrix::<f64>::zeros(size, size);
    if use_gram {
        for i in 0..n {
            for j in 0..=i {
                let v = dot(&centered[i], &centered[j]);
                scatter[(i, j)] = v;
                scatter[(j, i)] = v;
            }
        }
    } else {
        for row in centered {
            for i in 0..dim {
                for j in 0..=i {
                    scatter[(i, j)] += row[i] * row[j];
                }
            }
        }
        for i in 0..dim {
            for j in 0..i {
                scatter[(j, i)] = scatter[(i, j)];
            }
        }
    }
    let eig = SymmetricEigen::new(scatter);
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let top = eig.eigenvalues[order[0]].max(0.0);
    let floor = top * 1e-12 * size as f64;

    let mut out = Vec::with_capacity(d);
    for &k in order.iter().take(d) {
        let lambda = eig.eigenvalues[k];
        if !(lambda > floor) {
            break;
        }
        let u = eig.eigenvectors.column(k);
        let v = if use_gram {
            // Right singular vector from the left one: X^T u / sqrt(lambda).
            let s = 1.0 / lambda.sqrt();
            let mut v = vec![0.0; dim];
            for (row, &ui) in centered.iter().zip(u.iter()) {
                for (acc, x) in v.iter_mut().zip(row) {
                    *acc += ui * x * s;
                }
            }
            v
        } else {
            u.iter().copied().collect()
        };
        out.push(v);
    }
    out
}

/// Extend `basis` to `d` orthonormal vectors using coordinate axes.
fn complete_basis(basis: &mut Vec<Vec<f64>>, dim: usize, d: usize) {
    let mut axis = 0;
    while basis.len() < d && axis < dim {
        let mut v = vec![0.0; dim];
        v[axis] = 1.0;
        axis += 1;
        for _ in 0..2 {
            for b in basis.iter() {
                let p: f64 = b.iter().zip(&v).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
}

/// Modified Gram-Schmidt, applied twice.
fn orthonormalize(basis: &mut [Vec<f64>]) {
    for _ in 0..2 {
        for i in 0..basis.len() {
            let (done, rest) = basis.split_at_mut(i);
            let v = &mut rest[0];
            for b in done.iter() {
                let p: f64 = b.iter().zip(v.iter()).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
        }
    }
}

impl PcaModel {
    pub fn cluster_size(&self) -> usize {
        self.m
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// Squared distance between each canonically ordered cluster and its
    /// reconstruction, summed.
    pub fn reconstruction_error(&self, clusters: &[PointCloud]) -> Result<f64> {
        let mut total = 0.0;
        for c in clusters {
            let back = self.decode(&self.encode(c)?)?;
            total += c
                .canonical()
                .iter()
                .zip(back.iter())
                .map(|(p, q)| p.dist2(*q))
                .sum::<f64>();
        }
        Ok(total)
    }

    /// Magic bytes, `u32` m, `u32` d, the mean, then the basis rows; all
    /// little-endian, values as `f64`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let dim = 3 * self.m;
        let mut out = Vec::with_capacity(16 + 8 * dim * (1 + self.basis.len()));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.m as u32).to_le_bytes());
        out.extend_from_slice(&(self.basis.len() as u32).to_le_bytes());
        for v in self.mean.iter().chain(self.basis.iter().flatten()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 {
            return Err(Error::Truncated {
                expected: 16,
                actual: bytes.len(),
            });
        }
        if &bytes[..8] != MAGIC {
            return Err(Error::invalid("not a PCA model file (bad magic)"));
        }
        let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("four bytes")) as usize;
        let (m, d) = (word(8), word(12));
        let dim = 3 * m;
        if m == 0 || d == 0 || d > dim {
            return Err(Error::invalid(format!("invalid model header: m = {m}, d = {d}")));
        }
        let expected = 16 + 8 * dim * (d + 1);
        if bytes.len() != expected {
            return Err(Error::Truncated {
                expected,
                actual: bytes.len(),
            });
        }
        let values: Vec<f64> = bytes[16..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("eight bytes")))
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("model contains non-finite values"));
        }
        let mean = values[..dim].to_vec();
        let basis = values[dim..].chunks_exact(dim).map(<[f64]>::to_vec).collect();
        Ok(PcaModel { m, mean, basis })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

impl Embedder for PcaModel {
    fn input_size(&self) -> usize {
        self.m
    }

    fn output_size(&self) -> usize {
        self.m
    }

    fn latent_dim(&self) -> usize {
        self.basis.len()
    }

    fn encode(&self, cloud: &PointCloud) -> Result<Latent> {
        if cloud.len() != self.m {
            return Err(Error::SizeMismatch {
                expected: self.m,
                actual: cloud.len(),
            });
        }
        let x = flatten(cloud.canonical().points());
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(v, mu)| v - mu).collect();
        Latent::new(
            self.basis
                .iter()
                .map(|b| b.iter().zip(&centered).map(|(p, q)| p * q).sum())
                .collect(),
        )
    }

    fn decode(&self, latent: &Latent) -> Result<PointCloud> {
        if latent.dim() != self.basis.len() {
            return Err(Error::invalid(format!(
                "latent has dimension {}, model expects {}",
                latent.dim(),
                self.basis.len()
            )));
        }
        let mut x = self.mean.clone();
        for (b, &z) in self.basis.iter().zip(latent.values()) {
            x.iter_mut().zip(b).for_each(|(acc, v)| *acc += z * v);
        }
        unflatten(&x)
    }
}
