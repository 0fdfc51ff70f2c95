//! Text embeddings. The local provider hashes character trigrams into a fixed
//! number of buckets, so it needs no network and is stable across platforms.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{BackendConfig, GatewayError};

pub const LOCAL_DIM: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    /// L2-normalizes `values`; an all-zero vector is rejected.
    pub fn normalized(values: Vec<f64>) -> Result<Self, GatewayError> {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(GatewayError::Domain("cannot normalize a zero vector".into()));
        }
        Ok(Self { values: values.into_iter().map(|v| v / norm).collect() })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Dot product over the shared prefix. Inputs are unit vectors, so this is the cosine.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> f64 {
    a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum()
}

pub trait Embedder: Send + Sync {
    fn embed(&self, text: &str) -> Result<EmbeddingVector, GatewayError>;
    fn dim(&self) -> usize;
    /// Identifies the provider; libraries refuse to mix embeddings from different ones.
    fn id(&self) -> String;
}

#[derive(Debug, Clone)]
pub struct LocalTrigramEmbedder {
    dim: usize,
}

impl Default for LocalTrigramEmbedder {
    fn default() -> Self {
        Self { dim: LOCAL_DIM }
    }
}

impl LocalTrigramEmbedder {
    pub fn with_dim(dim: usize) -> Self {
        Self { dim: dim.max(1) }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl Embedder for LocalTrigramEmbedder {
    fn embed(&self, text: &str) -> Result<EmbeddingVector, GatewayError> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err(GatewayError::Domain("cannot embed empty text".into()));
        }
        let chars: Vec<char> = std::iter::once(' ')
            .chain(trimmed.to_lowercase().chars())
            .chain(std::iter::once(' '))
            .collect();
        let mut counts = vec![0.0; self.dim];
        let mut buf = [0u8; 12];
        for w in chars.windows(3) {
            let mut len = 0;
            for c in w {
                len += c.encode_utf8(&mut buf[len..]).len();
            }
            counts[(fnv1a(&buf[..len]) % self.dim as u64) as usize] += 1.0;
        }
        EmbeddingVector::normalized(counts)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn id(&self) -> String {
        format!("local-trigram-{}", self.dim)
    }
}

/// Provider embeddings over `POST {base}/embeddings`.
pub struct RemoteEmbedder {
    config: BackendConfig,
    client: reqwest::blocking::Client,
    dim: usize,
}

impl RemoteEmbedder {
    pub fn new(config: BackendConfig, dim: usize) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout())
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        Ok(Self { config, client, dim })
    }
}

impl Embedder for RemoteEmbedder {
    fn embed(&self, text: &str) -> Result<EmbeddingVector, GatewayError> {
        if text.trim().is_empty() {
            return Err(GatewayError::Domain("cannot embed empty text".into()));
        }
        let base = self.config.endpoint.as_deref().ok_or_else(|| GatewayError::Config("no endpoint".into()))?;
        let url = format!("{}/embeddings", base.trim_end_matches('/'));
        let body = json!({"model": self.config.model, "input": text});
        let (value, _) = super::remote::post_with_retry(&self.client, &self.config, &url, &body)?;
        let values: Vec<f64> = value["data"][0]["embedding"]
            .as_array()
            .ok_or_else(|| GatewayError::Transport { attempts: 1, message: "embedding missing".into() })?
            .iter()
            .filter_map(Value::as_f64)
            .collect();
        EmbeddingVector::normalized(values)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn id(&self) -> String {
        format!("remote-{}-{}", self.config.model, self.dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_norm_and_deterministic() {
        let e = LocalTrigramEmbedder::default();
        let a = e.embed("dodge three times").unwrap();
        assert_eq!(a, e.embed("dodge three times").unwrap());
        assert!((a.norm() - 1.0).abs() < 1e-12);
        assert!((cosine(&a, &a) - 1.0).abs() < 1e-9);
        assert_eq!(a.dim(), 256);
    }

    #[test]
    fn empty_text_rejected() {
        assert!(LocalTrigramEmbedder::default().embed("   ").is_err());
    }
}
