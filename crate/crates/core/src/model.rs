//! Decoder-only transformer descriptions and inference shapes.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::doc;
use crate::error::{Error, Result};

/// Architectural hyperparameters of a decoder-only transformer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub name: String,
    pub hidden_size: u64,
    pub intermediate_size: u64,
    pub num_layers: u64,
    pub num_heads: u64,
    pub num_kv_heads: u64,
    pub vocab_size: u64,
    /// Whether the output head carries its own (untied) weight matrix.
    pub include_lm_head: bool,
}

impl ModelConfig {
    pub fn head_dim(&self) -> u64 {
        self.hidden_size / self.num_heads
    }

    /// Width of the key (or value) projection output: `d * h_kv / h`.
    pub fn kv_dim(&self) -> u64 {
        self.head_dim() * self.num_kv_heads
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("hidden_size", self.hidden_size),
            ("intermediate_size", self.intermediate_size),
            ("num_hidden_layers", self.num_layers),
            ("num_attention_heads", self.num_heads),
            ("num_key_value_heads", self.num_kv_heads),
            ("vocab_size", self.vocab_size),
        ];
        for (key, v) in dims {
            if v == 0 {
                return Err(Error::invalid_dim(key, "must be at least 1"));
            }
        }
        if !self.hidden_size.is_multiple_of(self.num_heads) {
            return Err(Error::invalid_dim(
                "num_attention_heads",
                format!(
                    "hidden_size {} is not divisible by num_attention_heads {}",
                    self.hidden_size, self.num_heads
                ),
            ));
        }
        if !self.num_heads.is_multiple_of(self.num_kv_heads) {
            return Err(Error::invalid_dim(
                "num_key_value_heads",
                format!(
                    "num_attention_heads {} is not divisible by num_key_value_heads {}",
                    self.num_heads, self.num_kv_heads
                ),
            ));
        }
        Ok(())
    }

    /// Builds a config from a parsed model-card object. `fallback_name` is
    /// used when the document carries no `name` key.
    pub fn from_json_object(obj: &Map<String, Value>, fallback_name: &str) -> Result<Self> {
        let name = doc::optional_string(obj, "name")?
            .unwrap_or(fallback_name)
            .to_string();
        let hidden_size = doc::positive_dim(obj, "hidden_size")?;
        let intermediate_size = doc::positive_dim(obj, "intermediate_size")?;
        let num_layers = doc::positive_dim(obj, "num_hidden_layers")?;
        let num_heads = doc::positive_dim(obj, "num_attention_heads")?;
        let vocab_size = doc::positive_dim(obj, "vocab_size")?;
        let num_kv_heads = doc::optional_dim(obj, "num_key_value_heads")?.unwrap_or(num_heads);
        let tied = doc::optional_bool(obj, "tie_word_embeddings")?.unwrap_or(false);

        let cfg = ModelConfig {
            name,
            hidden_size,
            intermediate_size,
            num_layers,
            num_heads,
            num_kv_heads,
            vocab_size,
            include_lm_head: !tied,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_value(value: &Value, fallback_name: &str) -> Result<Self> {
        Self::from_json_object(doc::as_object(value)?, fallback_name)
    }

    /// Model-card document form, the inverse of [`load_model_config`].
    pub fn to_document(&self) -> Value {
        serde_json::json!({
            "name": self.name,
            "hidden_size": self.hidden_size,
            "intermediate_size": self.intermediate_size,
            "num_hidden_layers": self.num_layers,
            "num_attention_heads": self.num_heads,
            "num_key_value_heads": self.num_kv_heads,
            "vocab_size": self.vocab_size,
            "tie_word_embeddings": !self.include_lm_head,
        })
    }
}

/// Parses a model-card style JSON document.
///
/// Required keys are `hidden_size`, `intermediate_size`, `num_hidden_layers`,
/// `num_attention_heads` and `vocab_size`. `num_key_value_heads` defaults to
/// the attention head count; `tie_word_embeddings` defaults to `false`.
pub fn load_model_config(document: &str) -> Result<ModelConfig> {
    let obj = doc::parse_object(document)?;
    ModelConfig::from_json_object(&obj, "custom")
}

/// Total weight count: attention and MLP projections plus two norm vectors
/// per layer, the final norm, the embedding table and (when untied) the
/// output head.
pub fn count_params(cfg: &ModelConfig) -> u64 {
    let d = cfg.hidden_size;
    let kv = cfg.kv_dim();
    let attention = 2 * d * d + 2 * d * kv;
    let mlp = 3 * d * cfg.intermediate_size;
    let norms = 2 * d;
    let per_layer = attention + mlp + norms;
    let embedding = cfg.vocab_size * d;
    let head = if cfg.include_lm_head { embedding } else { 0 };
    cfg.num_layers * per_layer + d + embedding + head
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferenceShape {
    pub batch_size: u64,
    pub prompt_len: u64,
    pub gen_len: u64,
}

impl InferenceShape {
    pub fn new(batch_size: u64, prompt_len: u64, gen_len: u64) -> Self {
        Self {
            batch_size,
            prompt_len,
            gen_len,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid_value("batch_size", "must be at least 1"));
        }
        if self.prompt_len + self.gen_len == 0 {
            return Err(Error::invalid_value(
                "prompt_len",
                "prompt_len + gen_len must be at least 1",
            ));
        }
        Ok(())
    }

    /// Number of tokens held in the KV cache once generation finishes.
    pub fn peak_context(&self) -> u64 {
        self.prompt_len + self.gen_len
    }
}

/// Inference stage. A decode step at `context_len` attends over
/// `context_len + 1` tokens: the new token's K/V are appended first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stage {
    Prefill,
    Decode { context_len: u64 },
}

impl Stage {
    pub fn label(&self) -> &'static str {
        match self {
            Stage::Prefill => "prefill",
            Stage::Decode { .. } => "decode",
        }
    }

    pub fn is_prefill(&self) -> bool {
        matches!(self, Stage::Prefill)
    }
}

/// Bit widths for weights, activations and the KV cache.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantSpec {
    pub w_bits: u8,
    pub a_bits: u8,
    pub kv_bits: u8,
}

impl Default for QuantSpec {
    fn default() -> Self {
        Self::FP16
    }
}

const WEIGHT_BITS: [u8; 5] = [1, 2, 4, 8, 16];
const ACT_BITS: [u8; 3] = [4, 8, 16];

impl QuantSpec {
    pub const FP16: QuantSpec = QuantSpec {
        w_bits: 16,
        a_bits: 16,
        kv_bits: 16,
    };

    pub fn new(w_bits: u8, a_bits: u8, kv_bits: u8) -> Self {
        Self {
            w_bits,
            a_bits,
            kv_bits,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !WEIGHT_BITS.contains(&self.w_bits) {
            return Err(Error::invalid_value("w_bits", format!("{} not in {{1,2,4,8,16}}", self.w_bits)));
        }
        if !ACT_BITS.contains(&self.a_bits) {
            return Err(Error::invalid_value("a_bits", format!("{} not in {{4,8,16}}", self.a_bits)));
        }
        if !WEIGHT_BITS.contains(&self.kv_bits) {
            return Err(Error::invalid_value("kv_bits", format!("{} not in {{1,2,4,8,16}}", self.kv_bits)));
        }
        Ok(())
    }

    pub fn weight_bytes(&self) -> f64 {
        bytes_per_element(self.w_bits)
    }

    pub fn act_bytes(&self) -> f64 {
        bytes_per_element(self.a_bits)
    }

    pub fn kv_bytes(&self) -> f64 {
        bytes_per_element(self.kv_bits)
    }

    /// `W4A16KV4`-style label.
    pub fn label(&self) -> String {
        format!("W{}A{}KV{}", self.w_bits, self.a_bits, self.kv_bits)
    }
}

/// Bytes per element; fractional below 8 bits. Multiples of 1/8 are exact in f64.
pub fn bytes_per_element(bits: u8) -> f64 {
    f64::from(bits) / 8.0
}
