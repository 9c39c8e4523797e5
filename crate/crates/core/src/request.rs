//! Unresolved analysis and sweep requests, as accepted by the CLI and the
//! HTTP API. A model or hardware slot is either a preset id or an inline
//! document.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::analyzer::{analyze_network, DeploymentConfig, NetworkReport};
use crate::doc;
use crate::error::{Error, Result};
use crate::hardware::HardwareSpec;
use crate::model::{InferenceShape, ModelConfig, QuantSpec};
use crate::presets::PresetRegistry;
use crate::sweep::{run_sweep, MetricStage, Series, SweepAxis, SweepRequest, Variant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Slot {
    Preset(String),
    Inline(Value),
}

impl Slot {
    fn from_value(v: &Value, field: &str) -> Result<Self> {
        match v {
            Value::String(s) => Ok(Slot::Preset(s.clone())),
            Value::Object(_) => Ok(Slot::Inline(v.clone())),
            other => Err(Error::invalid_value(
                field,
                format!("expected a preset name or an inline document, got {other}"),
            )),
        }
    }

    pub fn resolve_model(&self, registry: &PresetRegistry) -> Result<ModelConfig> {
        match self {
            Slot::Preset(name) => registry.model(name),
            Slot::Inline(v) => ModelConfig::from_json_value(v, "custom"),
        }
    }

    pub fn resolve_hardware(&self, registry: &PresetRegistry) -> Result<HardwareSpec> {
        match self {
            Slot::Preset(name) => registry.hardware(name),
            Slot::Inline(v) => HardwareSpec::from_json_value(v, "custom"),
        }
    }
}

/// Deployment knobs; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimization {
    pub w_bits: u8,
    pub a_bits: u8,
    pub kv_bits: u8,
    pub fused_attention: bool,
    pub offload_weights: Option<String>,
    pub active_layer_fraction: f64,
}

impl Default for Optimization {
    fn default() -> Self {
        Self {
            w_bits: 16,
            a_bits: 16,
            kv_bits: 16,
            fused_attention: false,
            offload_weights: None,
            active_layer_fraction: 1.0,
        }
    }
}

fn small_int(obj: &Map<String, Value>, key: &str, default: u8) -> Result<u8> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(default),
        Some(v) => v
            .as_u64()
            .and_then(|n| u8::try_from(n).ok())
            .ok_or_else(|| Error::invalid_value(key, format!("expected a bit width, got {v}"))),
    }
}

fn count(obj: &Map<String, Value>, key: &str, default: Option<u64>) -> Result<u64> {
    match obj.get(key) {
        None | Some(Value::Null) => default.ok_or_else(|| Error::MissingField(key.to_string())),
        Some(v) => v
            .as_u64()
            .ok_or_else(|| Error::invalid_value(key, format!("expected a non-negative integer, got {v}"))),
    }
}

fn reject_unknown(obj: &Map<String, Value>, allowed: &[&str]) -> Result<()> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(Error::invalid_value(k, "unknown field")),
        None => Ok(()),
    }
}

impl Optimization {
    const KEYS: [&'static str; 6] = [
        "w_bits",
        "a_bits",
        "kv_bits",
        "fused_attention",
        "offload_weights",
        "active_layer_fraction",
    ];

    pub fn from_json_object(obj: &Map<String, Value>) -> Result<Self> {
        reject_unknown(obj, &Self::KEYS)?;
        let d = Self::default();
        let active_layer_fraction = match obj.get("active_layer_fraction") {
            None | Some(Value::Null) => d.active_layer_fraction,
            Some(v) => v.as_f64().ok_or_else(|| {
                Error::invalid_value("active_layer_fraction", format!("expected a number, got {v}"))
            })?,
        };
        Ok(Self {
            w_bits: small_int(obj, "w_bits", d.w_bits)?,
            a_bits: small_int(obj, "a_bits", d.a_bits)?,
            kv_bits: small_int(obj, "kv_bits", d.kv_bits)?,
            fused_attention: doc::optional_bool(obj, "fused_attention")?.unwrap_or(d.fused_attention),
            offload_weights: doc::optional_string(obj, "offload_weights")?.map(str::to_string),
            active_layer_fraction,
        })
    }

    pub fn deployment(&self, shape: InferenceShape) -> DeploymentConfig {
        let mut cfg = DeploymentConfig::new(shape)
            .with_quant(QuantSpec::new(self.w_bits, self.a_bits, self.kv_bits))
            .with_fused_attention(self.fused_attention)
            .with_layer_fraction(self.active_layer_fraction);
        if let Some(link) = &self.offload_weights {
            cfg = cfg.with_weight_offload(link.clone());
        }
        cfg
    }
}

fn shape_from_json(obj: &Map<String, Value>) -> Result<InferenceShape> {
    reject_unknown(obj, &["batch_size", "prompt_len", "gen_len"])?;
    Ok(InferenceShape {
        batch_size: count(obj, "batch_size", Some(1))?,
        prompt_len: count(obj, "prompt_len", None)?,
        gen_len: count(obj, "gen_len", Some(0))?,
    })
}

fn optional_object<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<Option<&'a Map<String, Value>>> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Object(o)) => Ok(Some(o)),
        Some(v) => Err(Error::invalid_value(key, format!("expected an object, got {v}"))),
    }
}

/// Everything needed to run one analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeRequest {
    pub model: Slot,
    pub hardware: Slot,
    pub shape: InferenceShape,
    pub optimization: Optimization,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub model: ModelConfig,
    pub hardware: HardwareSpec,
    pub deployment: DeploymentConfig,
}

impl AnalyzeRequest {
    const KEYS: [&'static str; 4] = ["model", "hardware", "shape", "optimization"];

    pub fn from_json_value(v: &Value) -> Result<Self> {
        let obj = doc::as_object(v)?;
        reject_unknown(obj, &Self::KEYS)?;
        Self::from_common(obj)
    }

    fn from_common(obj: &Map<String, Value>) -> Result<Self> {
        let model = Slot::from_value(doc::required(obj, "model")?, "model")?;
        let hardware = Slot::from_value(doc::required(obj, "hardware")?, "hardware")?;
        let shape_obj = doc::required(obj, "shape")?
            .as_object()
            .ok_or_else(|| Error::invalid_value("shape", "expected an object"))?;
        let shape = shape_from_json(shape_obj)?;
        let optimization = match optional_object(obj, "optimization")? {
            Some(o) => Optimization::from_json_object(o)?,
            None => Optimization::default(),
        };
        Ok(Self {
            model,
            hardware,
            shape,
            optimization,
        })
    }

    pub fn resolve(&self, registry: &PresetRegistry) -> Result<Resolved> {
        let model = self.model.resolve_model(registry)?;
        let hardware = self.hardware.resolve_hardware(registry)?;
        let deployment = self.optimization.deployment(self.shape);
        deployment.validate(&model, &hardware)?;
        Ok(Resolved {
            model,
            hardware,
            deployment,
        })
    }

    pub fn run(&self, registry: &PresetRegistry) -> Result<NetworkReport> {
        let r = self.resolve(registry)?;
        analyze_network(&r.model, &r.hardware, &r.deployment)
    }
}

/// A sweep over one axis for one or more named variants of a base request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: AnalyzeRequest,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub variants: Vec<Variant>,
    pub metric: Option<MetricStage>,
}

impl SweepSpec {
    /// Accepts the analyze-request keys plus `axis`, `values`, optional
    /// `variants` (`[{name, w_bits, ...}]`) and optional `metric`.
    pub fn from_json_value(v: &Value) -> Result<Self> {
        let obj = doc::as_object(v)?;
        let mut allowed = AnalyzeRequest::KEYS.to_vec();
        allowed.extend(["axis", "values", "variants", "metric"]);
        reject_unknown(obj, &allowed)?;
        let base = AnalyzeRequest::from_common(obj)?;
        let axis: SweepAxis = doc::string(obj, "axis")?.parse()?;
        let values = doc::required(obj, "values")?
            .as_array()
            .ok_or_else(|| Error::invalid_value("values", "expected a list of numbers"))?
            .iter()
            .map(|x| {
                x.as_f64()
                    .ok_or_else(|| Error::invalid_value("values", format!("`{x}` is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        let variants = match obj.get("variants") {
            None | Some(Value::Null) => Vec::new(),
            Some(list) => serde_json::from_value(list.clone())
                .map_err(|e| Error::invalid_value("variants", e.to_string()))?,
        };
        let metric = match obj.get("metric") {
            None | Some(Value::Null) => None,
            Some(m) => Some(
                serde_json::from_value(m.clone())
                    .map_err(|e| Error::invalid_value("metric", e.to_string()))?,
            ),
        };
        Ok(Self {
            base,
            axis,
            values,
            variants,
            metric,
        })
    }

    pub fn resolve(&self, registry: &PresetRegistry) -> Result<SweepRequest> {
        let model = self.base.model.resolve_model(registry)?;
        let hardware = self.base.hardware.resolve_hardware(registry)?;
        Ok(SweepRequest {
            axis: self.axis,
            values: self.values.clone(),
            model,
            hardware,
            base: self.base.optimization.deployment(self.base.shape),
            variants: self.variants.clone(),
            metric: self.metric,
        })
    }

    pub fn run(&self, registry: &PresetRegistry) -> Result<Vec<Series>> {
        run_sweep(&self.resolve(registry)?)
    }
}
