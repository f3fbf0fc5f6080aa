use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::{Embedder, Latent, PcaModel};
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::io::load_auto;

/// Embedder whose encoder runs elsewhere.
///
/// Latents are registered per cluster and looked up by the cluster's
/// [`cluster_fingerprint`]; decoding goes through a [`PcaModel`] of the same
/// latent dimension.
#[derive(Debug, Clone)]
pub struct ExternalEmbedder {
    decoder: PcaModel,
    latents: HashMap<u64, Latent>,
}

/// FNV-1a hash of the cluster's coordinates rounded to `f32` and sorted
/// lexicographically, so that a cluster read back from a PLY file hashes
/// the same as the in-memory cluster it was written from.
pub fn cluster_fingerprint(cloud: &PointCloud) -> u64 {
    let mut pts: Vec<[f32; 3]> = cloud.iter().map(|p| [p.x as f32, p.y as f32, p.z as f32]).collect();
    pts.sort_by(|a, b| {
        a[0].total_cmp(&b[0])
            .then(a[1].total_cmp(&b[1]))
            .then(a[2].total_cmp(&b[2]))
    });
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in pts.iter().flatten().flat_map(|c| c.to_bits().to_le_bytes()) {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

impl ExternalEmbedder {
    pub fn new(decoder: PcaModel) -> Self {
        ExternalEmbedder {
            decoder,
            latents: HashMap::new(),
        }
    }

    pub fn decoder(&self) -> &PcaModel {
        &self.decoder
    }

    pub fn len(&self) -> usize {
        self.latents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.latents.is_empty()
    }

    pub fn insert(&mut self, cluster: &PointCloud, latent: Latent) -> Result<()> {
        if cluster.len() != self.decoder.input_size() {
            return Err(Error::SizeMismatch {
                expected: self.decoder.input_size(),
                actual: cluster.len(),
            });
        }
        if latent.dim() != self.decoder.latent_dim() {
            return Err(Error::invalid(format!(
                "latent has dimension {}, decoder expects {}",
                latent.dim(),
                self.decoder.latent_dim()
            )));
        }
        self.latents.insert(cluster_fingerprint(cluster), latent);
        Ok(())
    }

    /// Register every `NAME.lat` in `dir` against the cluster in the
    /// matching `NAME.ply`. Returns the number of latents added.
    pub fn load_dir(&mut self, dir: impl AsRef<Path>) -> Result<usize> {
        let dir = dir.as_ref();
        let mut entries: Vec<_> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
            .collect::<Result<_>>()?;
        entries.sort();
        let mut added = 0;
        for lat in entries.iter().filter(|p| p.extension().is_some_and(|e| e == "lat")) {
            let ply = lat.with_extension("ply");
            if !ply.exists() {
                return Err(Error::invalid(format!(
                    "{} has no matching cluster file {}",
                    lat.display(),
                    ply.display()
                )));
            }
            let cluster = load_auto(&ply)?;
            self.insert(&cluster, super::read_latent(lat)?)?;
            added += 1;
        }
        Ok(added)
    }
}

impl Embedder for ExternalEmbedder {
    fn input_size(&self) -> usize {
        self.decoder.input_size()
    }

    fn output_size(&self) -> usize {
        self.decoder.output_size()
    }

    fn latent_dim(&self) -> usize {
        self.decoder.latent_dim()
    }

    fn encode(&self, cloud: &PointCloud) -> Result<Latent> {
        let key = cluster_fingerprint(cloud);
        self.latents.get(&key).cloned().ok_or(Error::MissingLatent(key))
    }

    fn decode(&self, latent: &Latent) -> Result<PointCloud> {
        self.decoder.decode(latent)
    }
}
