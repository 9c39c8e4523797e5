//! Analytical roofline model of decoder-only transformer inference.
//!
//! Given a [`ModelConfig`], a [`HardwareSpec`] and a [`DeploymentConfig`],
//! the crate expands each forward step into operation profiles, places every
//! op on the hardware roofline, and aggregates latency, throughput and
//! memory footprint over a whole generation.
//!
//! ```
//! use llm_roofline::{analyze_network, preset_hardware, preset_model, DeploymentConfig, InferenceShape};
//!
//! let model = preset_model("llama-2-7b").unwrap();
//! let hw = preset_hardware("nvidia-a6000").unwrap();
//! let cfg = DeploymentConfig::new(InferenceShape::new(1, 2048, 128));
//! let report = analyze_network(&model, &hw, &cfg).unwrap();
//! assert!(report.throughput.unwrap() > 0.0);
//! ```

pub mod analyzer;
mod doc;
pub mod error;
pub mod format;
pub mod graph;
pub mod hardware;
pub mod memory;
pub mod model;
pub mod par;
pub mod presets;
pub mod request;
pub mod sweep;

pub use analyzer::{
    analyze_network, analyze_network_with, analyze_op, compare_fusion, DeploymentConfig, FusionComparison,
    FusionSavings, LayerReport, NetworkReport, Offload, OffloadTarget,
};
pub use error::{Error, PresetKind, Result};
pub use graph::{build_op_graph, LayerScope, OpKind, OpProfile};
pub use hardware::{resolve_compute_dtype, Bound, Datatype, HardwareSpec, Link, RooflinePoint};
pub use memory::{activation_peak, kv_cache_bytes, memory_footprint, MemoryBreakdown};
pub use model::{count_params, load_model_config, InferenceShape, ModelConfig, QuantSpec, Stage};
pub use par::Execution;
pub use presets::{preset_hardware, preset_model, PresetRegistry, PRESET_DIR_ENV};
pub use request::{AnalyzeRequest, Optimization, Slot, SweepSpec};
pub use sweep::{
    export_series, parse_series_csv, parse_series_jsonl, run_sweep, run_sweep_with, DeploymentDelta, ExportFormat,
    MetricStage, Series, SeriesPoint, SweepAxis, SweepRequest, Variant,
};
