//! Registry of bundled model and hardware documents.
//!
//! Presets live under `presets/models/*.json` and `presets/hardware/*.json`.
//! The bundled set is compiled in; setting `LLM_ROOFLINE_PRESET_DIR` points
//! the registry at a directory with the same layout instead.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use crate::doc;
use crate::error::{Error, PresetKind, Result};
use crate::hardware::HardwareSpec;
use crate::model::ModelConfig;

pub const PRESET_DIR_ENV: &str = "LLM_ROOFLINE_PRESET_DIR";

const BUNDLED_MODELS: &[(&str, &str)] = &[
    ("llama-2-7b", include_str!("../presets/models/llama-2-7b.json")),
    ("llama-2-13b", include_str!("../presets/models/llama-2-13b.json")),
    ("llama-2-70b", include_str!("../presets/models/llama-2-70b.json")),
];

const BUNDLED_HARDWARE: &[(&str, &str)] = &[
    ("nvidia-a6000", include_str!("../presets/hardware/nvidia-a6000.json")),
    ("nvidia-a100-40gb", include_str!("../presets/hardware/nvidia-a100-40gb.json")),
    ("nvidia-h100-sxm", include_str!("../presets/hardware/nvidia-h100-sxm.json")),
];

#[derive(Debug, Clone, Default)]
pub struct PresetRegistry {
    models: BTreeMap<String, ModelConfig>,
    hardware: BTreeMap<String, HardwareSpec>,
}

impl PresetRegistry {
    pub fn bundled() -> Self {
        let mut reg = Self::default();
        for (name, text) in BUNDLED_MODELS {
            reg.insert_model_doc(name, text).expect("bundled model preset is valid");
        }
        for (name, text) in BUNDLED_HARDWARE {
            reg.insert_hardware_doc(name, text).expect("bundled hardware preset is valid");
        }
        reg
    }

    /// Loads every `*.json` under `<dir>/models` and `<dir>/hardware`. The
    /// file stem is the preset id.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let mut reg = Self::default();
        for (sub, is_model) in [("models", true), ("hardware", false)] {
            let path = dir.join(sub);
            let entries = match std::fs::read_dir(&path) {
                Ok(entries) => entries,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => continue,
                Err(e) => return Err(Error::Parse(format!("{}: {e}", path.display()))),
            };
            for entry in entries {
                let entry = entry.map_err(|e| Error::Parse(e.to_string()))?;
                let file = entry.path();
                if file.extension().and_then(|e| e.to_str()) != Some("json") {
                    continue;
                }
                let Some(stem) = file.file_stem().and_then(|s| s.to_str()) else {
                    continue;
                };
                let text = std::fs::read_to_string(&file)
                    .map_err(|e| Error::Parse(format!("{}: {e}", file.display())))?;
                if is_model {
                    reg.insert_model_doc(stem, &text)?;
                } else {
                    reg.insert_hardware_doc(stem, &text)?;
                }
            }
        }
        Ok(reg)
    }

    /// The directory named by `LLM_ROOFLINE_PRESET_DIR`, else the bundled set.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(PRESET_DIR_ENV) {
            Some(dir) => Self::from_dir(Path::new(&dir)),
            None => Ok(Self::bundled()),
        }
    }

    fn insert_model_doc(&mut self, id: &str, text: &str) -> Result<()> {
        let obj = doc::parse_object(text)?;
        let mut cfg = ModelConfig::from_json_object(&obj, id)?;
        cfg.name = id.to_string();
        self.models.insert(id.to_string(), cfg);
        Ok(())
    }

    fn insert_hardware_doc(&mut self, id: &str, text: &str) -> Result<()> {
        let obj = doc::parse_object(text)?;
        let mut hw = HardwareSpec::from_json_object(&obj, id)?;
        hw.name = id.to_string();
        self.hardware.insert(id.to_string(), hw);
        Ok(())
    }

    pub fn model(&self, name: &str) -> Result<ModelConfig> {
        self.models.get(name).cloned().ok_or_else(|| Error::UnknownPreset {
            kind: PresetKind::Model,
            name: name.to_string(),
            known: self.model_names(),
        })
    }

    pub fn hardware(&self, name: &str) -> Result<HardwareSpec> {
        self.hardware.get(name).cloned().ok_or_else(|| Error::UnknownPreset {
            kind: PresetKind::Hardware,
            name: name.to_string(),
            known: self.hardware_names(),
        })
    }

    pub fn model_names(&self) -> Vec<String> {
        self.models.keys().cloned().collect()
    }

    pub fn hardware_names(&self) -> Vec<String> {
        self.hardware.keys().cloned().collect()
    }
}

fn bundled() -> &'static PresetRegistry {
    static REGISTRY: OnceLock<PresetRegistry> = OnceLock::new();
    REGISTRY.get_or_init(PresetRegistry::bundled)
}

/// Bundled model preset by id.
pub fn preset_model(name: &str) -> Result<ModelConfig> {
    bundled().model(name)
}

/// Bundled hardware preset by id.
pub fn preset_hardware(name: &str) -> Result<HardwareSpec> {
    bundled().hardware(name)
}
