//! Memory footprint: weights, KV cache and peak temporary activations.
//!
//! Temporary activations are tracked with a liveness walk over one forward
//! step in dataflow order. A tensor is allocated when its producer runs and
//! released after its last consumer; a layer's input stays live until the
//! residual add that consumes it. Newly projected keys and values go straight
//! to the KV cache and are accounted there, not as activations. Unfused
//! attention materializes the score and probability tensors; fused attention
//! never does.

use serde::{Deserialize, Serialize};

use crate::analyzer::DeploymentConfig;
use crate::graph::stage_extent;
use crate::model::{count_params, InferenceShape, ModelConfig, QuantSpec, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryBreakdown {
    pub weights: f64,
    pub kv_cache: f64,
    pub activations_peak: f64,
    pub total: f64,
}

impl MemoryBreakdown {
    fn new(weights: f64, kv_cache: f64, activations_peak: f64) -> Self {
        Self {
            weights,
            kv_cache,
            activations_peak,
            total: weights + kv_cache + activations_peak,
        }
    }
}

/// KV cache bytes for `context` tokens across the active layers.
pub fn kv_cache_bytes(model: &ModelConfig, batch: u64, context: u64, active_layers: u64, quant: &QuantSpec) -> f64 {
    2.0 * active_layers as f64 * batch as f64 * context as f64 * model.kv_dim() as f64 * quant.kv_bytes()
}

/// Memory held at a point where the KV cache holds `context` tokens.
///
/// The activation peak is the larger of the prefill step (when the prompt is
/// non-empty) and the decode step that fills the cache to `context` (when any
/// tokens are generated).
pub fn memory_footprint(model: &ModelConfig, cfg: &DeploymentConfig, context: u64) -> MemoryBreakdown {
    let active = cfg.active_layers(model);
    let weights = count_params(model) as f64 * cfg.quant.weight_bytes();
    let kv = kv_cache_bytes(model, cfg.shape.batch_size, context, active, &cfg.quant);

    let mut act: f64 = 0.0;
    if cfg.shape.prompt_len > 0 {
        act = act.max(activation_peak(model, &cfg.shape, Stage::Prefill, &cfg.quant, cfg.fused_attention));
    }
    if cfg.shape.gen_len > 0 {
        let stage = Stage::Decode {
            context_len: context.saturating_sub(1),
        };
        act = act.max(activation_peak(model, &cfg.shape, stage, &cfg.quant, cfg.fused_attention));
    }
    MemoryBreakdown::new(weights, kv, act)
}

#[derive(Default)]
struct Live {
    current: f64,
    peak: f64,
}

impl Live {
    /// Runs one op: its outputs are allocated while inputs are still live,
    /// then the tensors whose last consumer was this op are released.
    fn step(&mut self, allocated: &[f64], released: &[f64]) {
        self.current += allocated.iter().sum::<f64>();
        self.peak = self.peak.max(self.current);
        self.current -= released.iter().sum::<f64>();
    }
}

/// Peak bytes of temporary activations during one forward step.
pub fn activation_peak(
    model: &ModelConfig,
    shape: &InferenceShape,
    stage: Stage,
    quant: &QuantSpec,
    fused_attention: bool,
) -> f64 {
    let (t, s) = stage_extent(shape, stage);
    let b = shape.batch_size as f64;
    let ba = quant.act_bytes();
    let tokens = b * t as f64;
    let hidden = tokens * model.hidden_size as f64 * ba;
    let inter = tokens * model.intermediate_size as f64 * ba;
    let scores = b * model.num_heads as f64 * t as f64 * s as f64 * ba;

    let mut live = Live::default();
    // embedding -> layer input
    live.step(&[hidden], &[]);
    // Every layer sees the same live set at entry, so one layer suffices.
    live.step(&[hidden], &[]); // norm: x -> h1
    live.step(&[hidden], &[]); // q_proj: h1 -> q
    live.step(&[], &[]); // k_proj: h1 -> cache
    live.step(&[], &[hidden]); // v_proj: h1 -> cache, h1 dead
    if fused_attention {
        live.step(&[hidden], &[hidden]); // fused: q -> attn
    } else {
        live.step(&[scores], &[hidden]); // qk: q -> scores
        live.step(&[scores], &[scores]); // softmax: scores -> probs
        live.step(&[hidden], &[scores]); // sv: probs -> attn
    }
    live.step(&[hidden], &[hidden]); // o_proj: attn -> o
    live.step(&[hidden], &[hidden, hidden]); // add: o + x -> x2
    live.step(&[hidden], &[]); // norm: x2 -> h2
    live.step(&[inter], &[]); // gate_proj
    live.step(&[inter], &[hidden]); // up_proj, h2 dead
    live.step(&[hidden], &[inter, inter]); // down_proj
    live.step(&[hidden], &[hidden, hidden]); // add: m + x2 -> x3
    if model.include_lm_head {
        let logits = b * model.vocab_size as f64 * ba;
        live.step(&[logits], &[hidden, logits]);
    }
    live.peak
}
