//! What-if sweeps over batch size, sequence length and bandwidth, and their
//! tabular export.

use serde::{Deserialize, Serialize};

use crate::analyzer::{analyze_network_with, DeploymentConfig, NetworkReport, Offload, OffloadTarget};
use crate::error::{Error, Result};
use crate::hardware::{Bound, HardwareSpec};
use crate::model::{ModelConfig, Stage};
use crate::par::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Batch,
    PromptLen,
    /// Tokens already cached when decoding starts (substitutes the prompt
    /// length; reported against decode latency).
    ContextLen,
    Bandwidth,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "batch" => Ok(SweepAxis::Batch),
            "prompt_len" | "prompt-len" => Ok(SweepAxis::PromptLen),
            "context_len" | "context-len" => Ok(SweepAxis::ContextLen),
            "bandwidth" => Ok(SweepAxis::Bandwidth),
            other => Err(Error::invalid_value("axis", format!("unknown axis `{other}`"))),
        }
    }
}

/// Which stage's latency a sweep reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricStage {
    Prefill,
    /// Mean per-token decode step latency.
    Decode,
}

impl SweepAxis {
    pub fn default_metric(&self) -> MetricStage {
        match self {
            SweepAxis::PromptLen => MetricStage::Prefill,
            _ => MetricStage::Decode,
        }
    }
}

/// Changes a variant applies on top of the base deployment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DeploymentDelta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_bits: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_bits: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kv_bits: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fused_attention: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offload_weights: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active_layer_fraction: Option<f64>,
}

impl DeploymentDelta {
    pub fn apply(&self, base: &DeploymentConfig) -> DeploymentConfig {
        let mut cfg = base.clone();
        if let Some(w) = self.w_bits {
            cfg.quant.w_bits = w;
        }
        if let Some(a) = self.a_bits {
            cfg.quant.a_bits = a;
        }
        if let Some(kv) = self.kv_bits {
            cfg.quant.kv_bits = kv;
        }
        if let Some(f) = self.fused_attention {
            cfg.fused_attention = f;
        }
        if let Some(link) = &self.offload_weights {
            cfg.offload = Some(Offload {
                what: OffloadTarget::Weights,
                link: link.clone(),
            });
        }
        if let Some(f) = self.active_layer_fraction {
            cfg.active_layer_fraction = f;
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub name: String,
    #[serde(flatten)]
    pub delta: DeploymentDelta,
}

impl Variant {
    pub fn new(name: impl Into<String>, delta: DeploymentDelta) -> Self {
        Self {
            name: name.into(),
            delta,
        }
    }
}

/// A fully resolved sweep: model and hardware are concrete.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRequest {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub model: ModelConfig,
    pub hardware: HardwareSpec,
    pub base: DeploymentConfig,
    /// Empty means a single variant named `base` with no changes.
    pub variants: Vec<Variant>,
    /// Defaults to [`SweepAxis::default_metric`].
    pub metric: Option<MetricStage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMetrics {
    pub latency_s: f64,
    pub throughput_tps: Option<f64>,
    pub memory_bytes: f64,
    pub bound: Bound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub x: f64,
    pub metrics: PointMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub points: Vec<SeriesPoint>,
}

impl SweepRequest {
    pub fn metric(&self) -> MetricStage {
        self.metric.unwrap_or_else(|| self.axis.default_metric())
    }

    fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::invalid_value("values", "at least one value is required"));
        }
        if self.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid_value("values", "must be strictly increasing"));
        }
        for &x in &self.values {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::invalid_value("values", format!("{x} is not a positive number")));
            }
            if self.axis != SweepAxis::Bandwidth && x.fract() != 0.0 {
                return Err(Error::invalid_value("values", format!("{x} is not a whole number")));
            }
        }
        Ok(())
    }

    fn variants(&self) -> Vec<Variant> {
        if self.variants.is_empty() {
            vec![Variant::new("base", DeploymentDelta::default())]
        } else {
            self.variants.clone()
        }
    }

    /// The inputs `analyze_network` sees for one variant at axis value `x`.
    pub fn point_inputs(&self, variant: &Variant, x: f64) -> (HardwareSpec, DeploymentConfig) {
        let mut hw = self.hardware.clone();
        let mut cfg = variant.delta.apply(&self.base);
        match self.axis {
            SweepAxis::Batch => cfg.shape.batch_size = x as u64,
            SweepAxis::PromptLen | SweepAxis::ContextLen => cfg.shape.prompt_len = x as u64,
            SweepAxis::Bandwidth => hw.bandwidth = x,
        }
        (hw, cfg)
    }
}

/// Reduces a network report to the metrics a sweep plots.
pub fn point_metrics(report: &NetworkReport, cfg: &DeploymentConfig, metric: MetricStage) -> Result<PointMetrics> {
    let latency_s = match metric {
        MetricStage::Prefill => {
            if cfg.shape.prompt_len == 0 {
                return Err(Error::invalid_value("prompt_len", "prefill metric needs a non-empty prompt"));
            }
            report.prefill_latency
        }
        MetricStage::Decode => {
            if cfg.shape.gen_len == 0 {
                return Err(Error::invalid_value("gen_len", "decode metric needs gen_len >= 1"));
            }
            report.decode_latency_total / cfg.shape.gen_len as f64
        }
    };
    let stage_rows = report.per_op.iter().filter(|r| match metric {
        MetricStage::Prefill => r.stage == Stage::Prefill,
        MetricStage::Decode => r.stage != Stage::Prefill,
    });
    let mut dominant: Option<(f64, Bound)> = None;
    for row in stage_rows {
        if dominant.is_none_or(|(t, _)| row.stage_time > t) {
            dominant = Some((row.stage_time, row.bound));
        }
    }
    Ok(PointMetrics {
        latency_s,
        throughput_tps: report.throughput,
        memory_bytes: report.memory.total,
        bound: dominant.map_or(Bound::Memory, |(_, b)| b),
    })
}

pub fn run_sweep(req: &SweepRequest) -> Result<Vec<Series>> {
    run_sweep_with(req, Execution::default())
}

/// Evaluates every (variant, value) point. Points may be computed in
/// parallel; series and point order always follow the request.
pub fn run_sweep_with(req: &SweepRequest, exec: Execution) -> Result<Vec<Series>> {
    req.validate()?;
    let metric = req.metric();
    let variants = req.variants();
    let jobs: Vec<(usize, f64)> = (0..variants.len())
        .flat_map(|v| req.values.iter().map(move |&x| (v, x)))
        .collect();

    let results = exec.map(&jobs, |&(v, x)| {
        let variant = &variants[v];
        let (hw, cfg) = req.point_inputs(variant, x);
        // Each point runs its decode steps sequentially; the sweep itself is
        // the parallel axis.
        analyze_network_with(&req.model, &hw, &cfg, Execution::Sequential)
            .and_then(|report| point_metrics(&report, &cfg, metric))
            .map(|metrics| SeriesPoint { x, metrics })
            .map_err(|e| Error::Variant {
                variant: variant.name.clone(),
                source: Box::new(e),
            })
    });

    let mut results = results.into_iter();
    variants
        .iter()
        .map(|variant| {
            let points = results.by_ref().take(req.values.len()).collect::<Result<Vec<_>>>()?;
            Ok(Series {
                name: variant.name.clone(),
                points,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    Csv,
    Jsonl,
}

pub const CSV_HEADER: [&str; 6] = ["variant", "x", "latency_s", "throughput_tps", "memory_bytes", "bound"];

/// One exported row; field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub variant: String,
    pub x: f64,
    pub latency_s: f64,
    pub throughput_tps: Option<f64>,
    pub memory_bytes: f64,
    pub bound: Bound,
}

fn rows(series: &[Series]) -> impl Iterator<Item = SeriesRow> + '_ {
    series.iter().flat_map(|s| {
        s.points.iter().map(|p| SeriesRow {
            variant: s.name.clone(),
            x: p.x,
            latency_s: p.metrics.latency_s,
            throughput_tps: p.metrics.throughput_tps,
            memory_bytes: p.metrics.memory_bytes,
            bound: p.metrics.bound,
        })
    })
}

/// Shortest decimal that parses back to the same f64.
fn full_precision(x: f64) -> String {
    format!("{x}")
}

/// CSV with a fixed header, or JSON lines with the same keys. Numbers are
/// written with enough digits to round-trip exactly; a missing throughput is
/// an empty CSV cell or `null`.
pub fn export_series(series: &[Series], format: ExportFormat) -> Vec<u8> {
    match format {
        ExportFormat::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
            w.write_record(CSV_HEADER).expect("in-memory write");
            for row in rows(series) {
                w.write_record([
                    row.variant,
                    full_precision(row.x),
                    full_precision(row.latency_s),
                    row.throughput_tps.map(full_precision).unwrap_or_default(),
                    full_precision(row.memory_bytes),
                    row.bound.to_string(),
                ])
                .expect("in-memory write");
            }
            w.into_inner().expect("in-memory flush")
        }
        ExportFormat::Jsonl => {
            let mut out = Vec::new();
            for row in rows(series) {
                serde_json::to_writer(&mut out, &row).expect("rows serialize");
                out.push(b'\n');
            }
            out
        }
    }
}

fn parse_f64(field: &str, s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::invalid_value(field, format!("`{s}` is not a number")))
}

/// Inverse of [`export_series`] in CSV form. Consecutive rows with the same
/// variant name form one series.
pub fn parse_series_csv(data: &[u8]) -> Result<Vec<Series>> {
    let mut reader = csv::Reader::from_reader(data);
    let header = reader.headers().map_err(|e| Error::Parse(e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let mut series: Vec<Series> = Vec::new();
    for record in reader.records() {
        let r = record.map_err(|e| Error::Parse(e.to_string()))?;
        let throughput = match &r[3] {
            "" => None,
            s => Some(parse_f64("throughput_tps", s)?),
        };
        let point = SeriesPoint {
            x: parse_f64("x", &r[1])?,
            metrics: PointMetrics {
                latency_s: parse_f64("latency_s", &r[2])?,
                throughput_tps: throughput,
                memory_bytes: parse_f64("memory_bytes", &r[4])?,
                bound: r[5].parse()?,
            },
        };
        match series.last_mut() {
            Some(s) if s.name == r[0] => s.points.push(point),
            _ => series.push(Series {
                name: r[0].to_string(),
                points: vec![point],
            }),
        }
    }
    Ok(series)
}

/// Inverse of [`export_series`] in JSONL form.
pub fn parse_series_jsonl(data: &[u8]) -> Result<Vec<Series>> {
    let text = std::str::from_utf8(data).map_err(|e| Error::Parse(e.to_string()))?;
    let mut series: Vec<Series> = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let row: SeriesRow = serde_json::from_str(line).map_err(|e| Error::Parse(e.to_string()))?;
        let point = SeriesPoint {
            x: row.x,
            metrics: PointMetrics {
                latency_s: row.latency_s,
                throughput_tps: row.throughput_tps,
                memory_bytes: row.memory_bytes,
                bound: row.bound,
            },
        };
        match series.last_mut() {
            Some(s) if s.name == row.variant => s.points.push(point),
            _ => series.push(Series {
                name: row.variant,
                points: vec![point],
            }),
        }
    }
    Ok(series)
}
