//! Expansion of a (model, stage, shape) triple into analytical operation
//! profiles.
//!
//! Every matmul counts two operations per multiply-accumulate. Elementwise
//! costs use the per-element constants below; each elementwise op reads one
//! tensor and writes one tensor of the same size.

use serde::{Deserialize, Serialize};

use crate::model::{InferenceShape, ModelConfig, QuantSpec, Stage};

/// Operations per element of the attention score tensor.
pub const SOFTMAX_OPS_PER_ELEM: f64 = 5.0;
/// Operations per element of a normalized hidden state.
pub const NORM_OPS_PER_ELEM: f64 = 7.0;
/// Operations per element of a residual add. The residual operand is treated
/// as already resident, so an add moves two elements rather than three.
pub const ADD_OPS_PER_ELEM: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    Embedding,
    Norm,
    QProj,
    KProj,
    VProj,
    QkMatmul,
    Softmax,
    SvMatmul,
    FusedAttention,
    OProj,
    Add,
    GateProj,
    UpProj,
    DownProj,
    LmHead,
}

impl OpKind {
    pub fn name(&self) -> &'static str {
        match self {
            OpKind::Embedding => "embedding",
            OpKind::Norm => "norm",
            OpKind::QProj => "q_proj",
            OpKind::KProj => "k_proj",
            OpKind::VProj => "v_proj",
            OpKind::QkMatmul => "qk_matmul",
            OpKind::Softmax => "softmax",
            OpKind::SvMatmul => "sv_matmul",
            OpKind::FusedAttention => "fused_attention",
            OpKind::OProj => "o_proj",
            OpKind::Add => "add",
            OpKind::GateProj => "gate_proj",
            OpKind::UpProj => "up_proj",
            OpKind::DownProj => "down_proj",
            OpKind::LmHead => "lm_head",
        }
    }

    pub fn has_weights(&self) -> bool {
        matches!(
            self,
            OpKind::Embedding
                | OpKind::QProj
                | OpKind::KProj
                | OpKind::VProj
                | OpKind::OProj
                | OpKind::GateProj
                | OpKind::UpProj
                | OpKind::DownProj
                | OpKind::LmHead
        )
    }
}

impl std::fmt::Display for OpKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerScope {
    PerLayer,
    Global,
}

/// Analytical cost of one operation instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpProfile {
    pub op: OpKind,
    pub stage: Stage,
    pub ops: f64,
    pub bytes_weights: f64,
    pub bytes_act_in: f64,
    pub bytes_act_out: f64,
    pub bytes_kv: f64,
    pub instances_per_layer: u64,
    pub layer_scope: LayerScope,
}

impl OpProfile {
    pub fn total_bytes(&self) -> f64 {
        self.bytes_weights + self.bytes_act_in + self.bytes_act_out + self.bytes_kv
    }

    fn new(op: OpKind, stage: Stage) -> Self {
        Self {
            op,
            stage,
            ops: 0.0,
            bytes_weights: 0.0,
            bytes_act_in: 0.0,
            bytes_act_out: 0.0,
            bytes_kv: 0.0,
            instances_per_layer: 1,
            layer_scope: LayerScope::PerLayer,
        }
    }
}

/// Token count processed by the step and the attention span it covers.
pub fn stage_extent(shape: &InferenceShape, stage: Stage) -> (u64, u64) {
    match stage {
        Stage::Prefill => (shape.prompt_len, shape.prompt_len),
        Stage::Decode { context_len } => (1, context_len + 1),
    }
}

/// Ordered op list for one forward step, in dataflow order:
/// embedding, norm, q/k/v, qk, softmax, sv, o, add, gate/up, down, lm_head.
///
/// `norm` and `add` appear once with `instances_per_layer = 2` (the
/// pre-attention and pre-MLP instances have identical cost).
pub fn build_op_graph(
    cfg: &ModelConfig,
    shape: &InferenceShape,
    stage: Stage,
    quant: &QuantSpec,
    fused_attention: bool,
) -> Vec<OpProfile> {
    let (t, s) = stage_extent(shape, stage);
    let b = shape.batch_size as f64;
    let t = t as f64;
    let s = s as f64;
    let d = cfg.hidden_size as f64;
    let di = cfg.intermediate_size as f64;
    let dkv = cfg.kv_dim() as f64;
    let h = cfg.num_heads as f64;
    let v = cfg.vocab_size as f64;
    let (bw, ba, bkv) = (quant.weight_bytes(), quant.act_bytes(), quant.kv_bytes());

    let tokens = b * t;
    let mut out = Vec::with_capacity(14);

    let mut embedding = OpProfile::new(OpKind::Embedding, stage);
    embedding.layer_scope = LayerScope::Global;
    embedding.bytes_weights = tokens * d * bw;
    embedding.bytes_act_out = tokens * d * ba;
    out.push(embedding);

    let hidden_elems = tokens * d;
    let mut norm = OpProfile::new(OpKind::Norm, stage);
    norm.instances_per_layer = 2;
    norm.ops = NORM_OPS_PER_ELEM * hidden_elems;
    norm.bytes_act_in = hidden_elems * ba;
    norm.bytes_act_out = hidden_elems * ba;
    out.push(norm);

    let projection = |op: OpKind, k: f64, n: f64, out_bytes: f64| {
        let mut p = OpProfile::new(op, stage);
        p.ops = 2.0 * tokens * k * n;
        p.bytes_weights = k * n * bw;
        p.bytes_act_in = tokens * k * ba;
        p.bytes_act_out = tokens * n * out_bytes;
        p
    };

    out.push(projection(OpKind::QProj, d, d, ba));
    // Keys and values are written straight into the KV cache.
    out.push(projection(OpKind::KProj, d, dkv, bkv));
    out.push(projection(OpKind::VProj, d, dkv, bkv));

    let score_elems = b * h * t * s;
    let cache_read = b * s * dkv * bkv;
    let mut qk = OpProfile::new(OpKind::QkMatmul, stage);
    qk.ops = 2.0 * tokens * s * d;
    qk.bytes_act_in = tokens * d * ba;
    qk.bytes_kv = cache_read;
    qk.bytes_act_out = score_elems * ba;

    let mut softmax = OpProfile::new(OpKind::Softmax, stage);
    softmax.ops = SOFTMAX_OPS_PER_ELEM * score_elems;
    softmax.bytes_act_in = score_elems * ba;
    softmax.bytes_act_out = score_elems * ba;

    let mut sv = OpProfile::new(OpKind::SvMatmul, stage);
    sv.ops = 2.0 * tokens * s * d;
    sv.bytes_act_in = score_elems * ba;
    sv.bytes_kv = cache_read;
    sv.bytes_act_out = tokens * d * ba;

    if fused_attention {
        let mut fused = OpProfile::new(OpKind::FusedAttention, stage);
        fused.ops = qk.ops + softmax.ops + sv.ops;
        fused.bytes_act_in = qk.bytes_act_in;
        fused.bytes_kv = qk.bytes_kv + sv.bytes_kv;
        fused.bytes_act_out = sv.bytes_act_out;
        out.push(fused);
    } else {
        out.push(qk);
        out.push(softmax);
        out.push(sv);
    }

    out.push(projection(OpKind::OProj, d, d, ba));

    let mut add = OpProfile::new(OpKind::Add, stage);
    add.instances_per_layer = 2;
    add.ops = ADD_OPS_PER_ELEM * hidden_elems;
    add.bytes_act_in = hidden_elems * ba;
    add.bytes_act_out = hidden_elems * ba;
    out.push(add);

    out.push(projection(OpKind::GateProj, d, di, ba));
    out.push(projection(OpKind::UpProj, d, di, ba));
    out.push(projection(OpKind::DownProj, di, d, ba));

    if cfg.include_lm_head {
        // Logits are produced for one position per sequence.
        let mut head = OpProfile::new(OpKind::LmHead, stage);
        head.layer_scope = LayerScope::Global;
        head.ops = 2.0 * b * d * v;
        head.bytes_weights = d * v * bw;
        head.bytes_act_in = b * d * ba;
        head.bytes_act_out = b * v * ba;
        out.push(head);
    }

    out
}
