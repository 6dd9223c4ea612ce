use serde::{Deserialize, Serialize};

use super::ModelError;

/// Encoder architecture. The embedding dimension equals the word vector
/// dimension because the training objective scores words by dot product.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Word vector and embedding dimension.
    pub dim: usize,
    /// Number of GLU layers.
    pub layers: usize,
    /// Kernels per GLU layer.
    pub channels: usize,
    /// Kernel width in words.
    pub kernel_width: usize,
    /// Registered aggregator name: `max_pool`, `max_k_pool`, `pad` or `mean_pool`.
    pub aggregation: String,
    /// Values kept per channel by `max_k_pool`.
    pub pool_k: usize,
    /// Fixed input length for `pad`.
    pub pad_len: usize,
    /// Layer ℓ (1-based) adds the output of layer ℓ − period when ℓ is a
    /// multiple of the period and ℓ > period. 0 disables skips.
    pub residual_period: usize,
    pub batch_norm: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            dim: 300,
            layers: 6,
            channels: 900,
            kernel_width: 3,
            aggregation: "max_k_pool".into(),
            pool_k: 3,
            pad_len: 400,
            residual_period: 2,
            batch_norm: true,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |m: &str| Err(ModelError::Config(m.to_string()));
        if self.dim == 0 {
            return fail("dim must be >= 1");
        }
        if self.layers == 0 {
            return fail("layers must be >= 1");
        }
        if self.channels == 0 {
            return fail("channels must be >= 1");
        }
        if self.kernel_width == 0 {
            return fail("kernel_width must be >= 1");
        }
        match self.aggregation.as_str() {
            "pad" if self.pad_len < self.kernel_width => fail("pad_len must be >= kernel_width"),
            "max_k_pool" if self.pool_k == 0 => fail("pool_k must be >= 1"),
            _ => Ok(()),
        }
    }

    /// Words seen by one activation of the last layer.
    pub fn receptive_field(&self) -> usize {
        1 + self.layers * (self.kernel_width - 1)
    }

    /// Whether 1-based layer `layer` receives a skip connection, and from
    /// which earlier layer.
    pub fn residual_source(&self, layer: usize) -> Option<usize> {
        let p = self.residual_period;
        (p > 0 && layer % p == 0 && layer > p).then(|| layer - p)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("model config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, ModelError> {
        toml::from_str(text).map_err(|e| ModelError::Config(e.to_string()))
    }
}
