use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// A point in an embedder's latent space.
#[derive(Debug, Clone, PartialEq)]
pub struct Latent {
    values: Vec<f64>,
}

impl Latent {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("latent dimension must be positive"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("latent entry {i} is not finite")));
        }
        Ok(Latent { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `lambda * self + (1 - lambda) * other`, componentwise.
    ///
    /// Panics if the dimensions differ.
    pub fn mix(&self, other: &Latent, lambda: f64) -> Latent {
        assert_eq!(self.dim(), other.dim(), "latent dimensions differ");
        let mu = 1.0 - lambda;
        Latent {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| lambda * a + mu * b)
                .collect(),
        }
    }

    /// Little-endian `u32` dimension followed by the `f64` entries.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 8 * self.dim());
        out.extend_from_slice(&(self.dim() as u32).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let Some(header) = bytes.get(..4) else {
            return Err(Error::Truncated {
                expected: 4,
                actual: bytes.len(),
            });
        };
        let d = u32::from_le_bytes(header.try_into().expect("four bytes")) as usize;
        if d == 0 {
            return Err(Error::invalid("latent header declares dimension 0"));
        }
        let expected = 4 + 8 * d;
        if bytes.len() < expected {
            return Err(Error::Truncated {
                expected,
                actual: bytes.len(),
            });
        }
        if bytes.len() > expected {
            return Err(Error::invalid(format!(
                "latent file has {} trailing bytes after {expected}",
                bytes.len() - expected
            )));
        }
        let values = bytes[4..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("eight bytes")))
            .collect();
        Latent::new(values)
    }
}

pub fn write_latent(latent: &Latent, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, latent.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_latent(path: impl AsRef<Path>) -> Result<Latent> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Latent::from_bytes(&bytes)
}
