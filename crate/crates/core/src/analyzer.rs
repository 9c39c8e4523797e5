//! Per-op roofline reports and network-level aggregation.
//!
//! Within an op, compute and memory traffic overlap fully, so an op takes
//! `max(compute time, memory time)`. Ops execute one after another. Decode
//! time is an exact sum over every generated token's step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_op_graph, LayerScope, OpKind, OpProfile};
use crate::hardware::{resolve_compute_dtype, roofline_point, Bound, Datatype, HardwareSpec};
use crate::memory::{memory_footprint, MemoryBreakdown};
use crate::model::{InferenceShape, ModelConfig, QuantSpec, Stage};
use crate::par::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffloadTarget {
    Weights,
}

/// Tensors kept in a slower tier and streamed over a hardware link.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Offload {
    pub what: OffloadTarget,
    pub link: String,
}

/// Inference shape plus optimization knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeploymentConfig {
    pub shape: InferenceShape,
    pub quant: QuantSpec,
    pub fused_attention: bool,
    pub offload: Option<Offload>,
    /// Fraction of transformer layers executed, in (0, 1].
    pub active_layer_fraction: f64,
}

impl DeploymentConfig {
    pub fn new(shape: InferenceShape) -> Self {
        Self {
            shape,
            quant: QuantSpec::FP16,
            fused_attention: false,
            offload: None,
            active_layer_fraction: 1.0,
        }
    }

    pub fn with_quant(mut self, quant: QuantSpec) -> Self {
        self.quant = quant;
        self
    }

    pub fn with_fused_attention(mut self, fused: bool) -> Self {
        self.fused_attention = fused;
        self
    }

    pub fn with_weight_offload(mut self, link: impl Into<String>) -> Self {
        self.offload = Some(Offload {
            what: OffloadTarget::Weights,
            link: link.into(),
        });
        self
    }

    pub fn with_layer_fraction(mut self, fraction: f64) -> Self {
        self.active_layer_fraction = fraction;
        self
    }

    /// `round(active_layer_fraction * L)`.
    pub fn active_layers(&self, model: &ModelConfig) -> u64 {
        (self.active_layer_fraction * model.num_layers as f64).round() as u64
    }

    pub fn validate(&self, model: &ModelConfig, hw: &HardwareSpec) -> Result<()> {
        model.validate()?;
        self.shape.validate()?;
        self.quant.validate()?;
        let f = self.active_layer_fraction;
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::invalid_value("active_layer_fraction", format!("{f} is outside (0, 1]")));
        }
        if self.active_layers(model) == 0 {
            return Err(Error::invalid_value(
                "active_layer_fraction",
                format!("{f} of {} layers rounds to zero layers", model.num_layers),
            ));
        }
        if let Some(offload) = &self.offload {
            hw.link(&offload.link)?;
        }
        Ok(())
    }

    fn weights_offloaded(&self) -> bool {
        matches!(
            self.offload,
            Some(Offload {
                what: OffloadTarget::Weights,
                ..
            })
        )
    }
}

/// Roofline result for one op.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerReport {
    pub op_name: String,
    pub stage: Stage,
    pub ops: f64,
    pub total_bytes: f64,
    pub arithmetic_intensity: f64,
    pub attainable: f64,
    pub bound: Bound,
    /// Seconds for one instance.
    pub time: f64,
    pub instances: u64,
    pub scope: LayerScope,
    /// Seconds for every instance of this op in one forward step.
    pub stage_time: f64,
}

/// Executions of `op` in one forward step over `layers` layers.
fn executions(op: &OpProfile, layers: u64) -> u64 {
    match op.layer_scope {
        LayerScope::PerLayer => op.instances_per_layer * layers,
        LayerScope::Global => 1,
    }
}

struct OpCost {
    time: f64,
    point_ai: f64,
    attainable: f64,
    bound: Bound,
}

/// Precomputed per-hardware quantities shared by every op of an analysis.
struct Timing {
    peak: f64,
    bandwidth: f64,
    link_bandwidth: Option<f64>,
}

impl Timing {
    fn new(hw: &HardwareSpec, cfg: &DeploymentConfig) -> Result<(Self, Datatype)> {
        let dtype = resolve_compute_dtype(&cfg.quant, hw);
        let peak = hw.peak(dtype)?;
        let link_bandwidth = match &cfg.offload {
            Some(o) if cfg.weights_offloaded() => Some(hw.link(&o.link)?.bandwidth),
            _ => None,
        };
        Ok((
            Self {
                peak,
                bandwidth: hw.bandwidth,
                link_bandwidth,
            },
            dtype,
        ))
    }

    fn cost(&self, op: &OpProfile) -> OpCost {
        let total = op.total_bytes();
        let offloaded = if self.link_bandwidth.is_some() {
            op.bytes_weights
        } else {
            0.0
        };
        // Offloaded weights are staged through device memory, so the kernel
        // still reads every byte from it; the link transfer overlaps.
        let compute_time = op.ops / self.peak;
        let mut memory_time = total / self.bandwidth;
        if let Some(link) = self.link_bandwidth {
            memory_time = memory_time.max(offloaded / link);
        }
        let time = compute_time.max(memory_time);

        if total == 0.0 {
            let bound = if op.ops > 0.0 { Bound::Compute } else { Bound::Memory };
            let attainable = if op.ops > 0.0 { self.peak } else { 0.0 };
            return OpCost {
                time,
                point_ai: 0.0,
                attainable,
                bound,
            };
        }
        let ai = op.ops / total;
        // Bandwidth the op effectively sees once link transfers are included.
        let effective_bw = if memory_time > 0.0 {
            total / memory_time
        } else {
            self.bandwidth
        };
        let point = roofline_point(self.peak, effective_bw, ai);
        OpCost {
            time,
            point_ai: ai,
            attainable: point.attainable,
            bound: point.bound,
        }
    }

    fn report(&self, op: &OpProfile, layers: u64) -> LayerReport {
        let c = self.cost(op);
        LayerReport {
            op_name: op.op.name().to_string(),
            stage: op.stage,
            ops: op.ops,
            total_bytes: op.total_bytes(),
            arithmetic_intensity: c.point_ai,
            attainable: c.attainable,
            bound: c.bound,
            time: c.time,
            instances: op.instances_per_layer,
            scope: op.layer_scope,
            stage_time: c.time * executions(op, layers) as f64,
        }
    }
}

/// Roofline analysis of a single op instance. `stage_time` assumes one
/// active layer; [`analyze_network`] scales it by the active layer count.
pub fn analyze_op(op: &OpProfile, hw: &HardwareSpec, cfg: &DeploymentConfig) -> Result<LayerReport> {
    let (timing, _) = Timing::new(hw, cfg)?;
    Ok(timing.report(op, 1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkReport {
    pub model: String,
    pub hardware: String,
    pub compute_dtype: Datatype,
    pub active_layers: u64,
    pub prefill_latency: f64,
    /// Step latency at context `prompt_len`; absent when nothing is generated.
    pub decode_latency_first: Option<f64>,
    /// Step latency at context `prompt_len + gen_len - 1`.
    pub decode_latency_last: Option<f64>,
    pub decode_latency_total: f64,
    pub total_latency: f64,
    /// Generated tokens per second of decode time.
    pub throughput: Option<f64>,
    /// Footprint once the KV cache holds `prompt_len + gen_len` tokens.
    pub memory: MemoryBreakdown,
    pub capacity_exceeded: bool,
    /// Prefill rows, then decode rows for the first decode step.
    pub per_op: Vec<LayerReport>,
    pub bottleneck: Option<String>,
}

/// Per-stage totals over the whole generation.
#[derive(Debug, Clone, Default)]
struct StageTotals {
    bytes: f64,
    time: f64,
    /// Time per op kind, in first-seen dataflow order.
    per_op: Vec<(OpKind, f64)>,
}

impl StageTotals {
    fn add_op(&mut self, op: OpKind, time: f64) {
        match self.per_op.iter_mut().find(|(k, _)| *k == op) {
            Some((_, t)) => *t += time,
            None => self.per_op.push((op, time)),
        }
    }

    fn merge(&mut self, other: &StageTotals) {
        self.bytes += other.bytes;
        self.time += other.time;
        for (op, t) in &other.per_op {
            self.add_op(*op, *t);
        }
    }
}

struct DecodeTotals {
    totals: StageTotals,
    first: Option<f64>,
    last: Option<f64>,
}

const DECODE_CHUNK: u64 = 256;

struct Analysis<'a> {
    model: &'a ModelConfig,
    cfg: &'a DeploymentConfig,
    timing: Timing,
    layers: u64,
}

impl Analysis<'_> {
    fn graph(&self, stage: Stage) -> Vec<OpProfile> {
        build_op_graph(self.model, &self.cfg.shape, stage, &self.cfg.quant, self.cfg.fused_attention)
    }

    fn step(&self, stage: Stage) -> StageTotals {
        let mut totals = StageTotals::default();
        for op in self.graph(stage) {
            let n = executions(&op, self.layers) as f64;
            let t = self.timing.cost(&op).time * n;
            totals.bytes += op.total_bytes() * n;
            totals.time += t;
            totals.add_op(op.op, t);
        }
        totals
    }

    fn prefill(&self) -> StageTotals {
        if self.cfg.shape.prompt_len == 0 {
            return StageTotals::default();
        }
        self.step(Stage::Prefill)
    }

    /// Sums every decode step. Steps are grouped into fixed-size chunks and
    /// reduced in chunk order, so the result does not depend on `exec`.
    fn decode(&self, exec: Execution) -> DecodeTotals {
        let n_g = self.cfg.shape.gen_len;
        let n_p = self.cfg.shape.prompt_len;
        let chunks = n_g.div_ceil(DECODE_CHUNK);
        let partials = exec.map_range(chunks, |c| {
            let start = c * DECODE_CHUNK;
            let end = (start + DECODE_CHUNK).min(n_g);
            let mut totals = StageTotals::default();
            let mut first = None;
            let mut last = None;
            for i in start..end {
                let step = self.step(Stage::Decode { context_len: n_p + i });
                first.get_or_insert(step.time);
                last = Some(step.time);
                totals.merge(&step);
            }
            (totals, first, last)
        });
        let mut out = DecodeTotals {
            totals: StageTotals::default(),
            first: None,
            last: None,
        };
        for (totals, first, last) in partials {
            out.totals.merge(&totals);
            if out.first.is_none() {
                out.first = first;
            }
            if last.is_some() {
                out.last = last;
            }
        }
        out
    }
}

fn analysis<'a>(model: &'a ModelConfig, hw: &HardwareSpec, cfg: &'a DeploymentConfig) -> Result<(Analysis<'a>, Datatype)> {
    cfg.validate(model, hw)?;
    let (timing, dtype) = Timing::new(hw, cfg)?;
    Ok((
        Analysis {
            model,
            cfg,
            timing,
            layers: cfg.active_layers(model),
        },
        dtype,
    ))
}

pub fn analyze_network(model: &ModelConfig, hw: &HardwareSpec, cfg: &DeploymentConfig) -> Result<NetworkReport> {
    analyze_network_with(model, hw, cfg, Execution::default())
}

pub fn analyze_network_with(
    model: &ModelConfig,
    hw: &HardwareSpec,
    cfg: &DeploymentConfig,
    exec: Execution,
) -> Result<NetworkReport> {
    let (a, dtype) = analysis(model, hw, cfg)?;
    let shape = cfg.shape;

    let mut per_op = Vec::new();
    if shape.prompt_len > 0 {
        per_op.extend(a.graph(Stage::Prefill).iter().map(|op| a.timing.report(op, a.layers)));
    }
    if shape.gen_len > 0 {
        let first = Stage::Decode {
            context_len: shape.prompt_len,
        };
        per_op.extend(a.graph(first).iter().map(|op| a.timing.report(op, a.layers)));
    }

    let prefill = a.prefill();
    let decode = a.decode(exec);

    let mut combined = prefill.clone();
    combined.merge(&decode.totals);
    let mut bottleneck: Option<(OpKind, f64)> = None;
    for &(op, t) in &combined.per_op {
        if bottleneck.is_none_or(|(_, best)| t > best) {
            bottleneck = Some((op, t));
        }
    }

    let memory = memory_footprint(model, cfg, shape.peak_context());
    let device_resident = if cfg.weights_offloaded() {
        memory.total - memory.weights
    } else {
        memory.total
    };

    let throughput = (shape.gen_len > 0 && decode.totals.time > 0.0)
        .then(|| (shape.batch_size * shape.gen_len) as f64 / decode.totals.time);

    Ok(NetworkReport {
        model: model.name.clone(),
        hardware: hw.name.clone(),
        compute_dtype: dtype,
        active_layers: a.layers,
        prefill_latency: prefill.time,
        decode_latency_first: decode.first,
        decode_latency_last: decode.last,
        decode_latency_total: decode.totals.time,
        total_latency: prefill.time + decode.totals.time,
        throughput,
        memory,
        capacity_exceeded: device_resident > hw.capacity,
        per_op,
        bottleneck: bottleneck.map(|(op, _)| op.name().to_string()),
    })
}

/// Unfused minus fused totals for one stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionSavings {
    pub bytes_unfused: f64,
    pub bytes_fused: f64,
    pub bytes_saved: f64,
    pub time_unfused: f64,
    pub time_fused: f64,
    pub time_saved: f64,
}

impl FusionSavings {
    fn new(unfused: &StageTotals, fused: &StageTotals) -> Self {
        Self {
            bytes_unfused: unfused.bytes,
            bytes_fused: fused.bytes,
            bytes_saved: unfused.bytes - fused.bytes,
            time_unfused: unfused.time,
            time_fused: fused.time,
            time_saved: unfused.time - fused.time,
        }
    }

    pub fn relative_bytes_saved(&self) -> f64 {
        if self.bytes_unfused == 0.0 {
            0.0
        } else {
            self.bytes_saved / self.bytes_unfused
        }
    }

    pub fn relative_time_saved(&self) -> f64 {
        if self.time_unfused == 0.0 {
            0.0
        } else {
            self.time_saved / self.time_unfused
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionComparison {
    pub prefill: FusionSavings,
    pub decode: FusionSavings,
}

/// Effect of fusing the attention matmuls and softmax, per stage, over the
/// whole generation described by `cfg.shape`.
pub fn compare_fusion(model: &ModelConfig, hw: &HardwareSpec, cfg: &DeploymentConfig) -> Result<FusionComparison> {
    let unfused_cfg = cfg.clone().with_fused_attention(false);
    let fused_cfg = cfg.clone().with_fused_attention(true);
    let (unfused, _) = analysis(model, hw, &unfused_cfg)?;
    let (fused, _) = analysis(model, hw, &fused_cfg)?;
    let exec = Execution::default();
    Ok(FusionComparison {
        prefill: FusionSavings::new(&unfused.prefill(), &fused.prefill()),
        decode: FusionSavings::new(&unfused.decode(exec).totals, &fused.decode(exec).totals),
    })
}
