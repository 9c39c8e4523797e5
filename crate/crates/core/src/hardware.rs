//! Hardware capability descriptions and roofline math.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::doc;
use crate::error::{Error, Result};
use crate::model::QuantSpec;

/// Compute datatypes, ordered by bit width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Datatype {
    #[serde(rename = "INT4")]
    Int4,
    #[serde(rename = "FP4")]
    Fp4,
    #[serde(rename = "INT8")]
    Int8,
    #[serde(rename = "FP8")]
    Fp8,
    #[serde(rename = "FP16")]
    Fp16,
    #[serde(rename = "FP32")]
    Fp32,
}

impl Datatype {
    pub const ALL: [Datatype; 6] = [
        Datatype::Int4,
        Datatype::Fp4,
        Datatype::Int8,
        Datatype::Fp8,
        Datatype::Fp16,
        Datatype::Fp32,
    ];

    pub fn bits(&self) -> u8 {
        match self {
            Datatype::Int4 | Datatype::Fp4 => 4,
            Datatype::Int8 | Datatype::Fp8 => 8,
            Datatype::Fp16 => 16,
            Datatype::Fp32 => 32,
        }
    }

    pub fn is_integer(&self) -> bool {
        matches!(self, Datatype::Int4 | Datatype::Int8)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Datatype::Int4 => "INT4",
            Datatype::Fp4 => "FP4",
            Datatype::Int8 => "INT8",
            Datatype::Fp8 => "FP8",
            Datatype::Fp16 => "FP16",
            Datatype::Fp32 => "FP32",
        }
    }
}

impl fmt::Display for Datatype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Datatype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Datatype::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid_value("compute", format!("unknown datatype `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub name: String,
    #[serde(rename = "bandwidth_bytes_per_s")]
    pub bandwidth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardwareSpec {
    pub name: String,
    /// Main device memory bandwidth, bytes/s.
    #[serde(rename = "bandwidth_bytes_per_s")]
    pub bandwidth: f64,
    #[serde(rename = "capacity_bytes")]
    pub capacity: f64,
    /// Peak ops/s per supported datatype.
    pub compute: BTreeMap<Datatype, f64>,
    #[serde(default)]
    pub links: Vec<Link>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Memory,
    Compute,
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Bound::Memory => "memory",
            Bound::Compute => "compute",
        })
    }
}

impl FromStr for Bound {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "memory" => Ok(Bound::Memory),
            "compute" => Ok(Bound::Compute),
            other => Err(Error::invalid_value("bound", format!("unknown bound `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RooflinePoint {
    pub arithmetic_intensity: f64,
    pub attainable: f64,
    pub bound: Bound,
}

impl HardwareSpec {
    pub fn from_json_object(obj: &Map<String, Value>, fallback_name: &str) -> Result<Self> {
        let name = doc::optional_string(obj, "name")?
            .unwrap_or(fallback_name)
            .to_string();
        let bandwidth = doc::positive_number(obj, "bandwidth_bytes_per_s")?;
        let capacity = doc::positive_number(obj, "capacity_bytes")?;

        let compute_obj = doc::required(obj, "compute")?
            .as_object()
            .ok_or_else(|| Error::invalid_value("compute", "expected a map of datatype to ops/s"))?;
        let mut compute = BTreeMap::new();
        for (key, _) in compute_obj {
            let dtype: Datatype = key.parse()?;
            let peak = doc::positive_number(compute_obj, key)?;
            if compute.insert(dtype, peak).is_some() {
                return Err(Error::invalid_value("compute", format!("duplicate datatype `{key}`")));
            }
        }
        if compute.is_empty() {
            return Err(Error::invalid_value("compute", "at least one datatype is required"));
        }

        let mut links = Vec::new();
        if let Some(list) = obj.get("links").filter(|v| !v.is_null()) {
            let list = list
                .as_array()
                .ok_or_else(|| Error::invalid_value("links", "expected a list"))?;
            for entry in list {
                let entry = entry
                    .as_object()
                    .ok_or_else(|| Error::invalid_value("links", "expected {name, bandwidth_bytes_per_s}"))?;
                links.push(Link {
                    name: doc::string(entry, "name")?.to_string(),
                    bandwidth: doc::positive_number(entry, "bandwidth_bytes_per_s")?,
                });
            }
        }

        Ok(HardwareSpec {
            name,
            bandwidth,
            capacity,
            compute,
            links,
        })
    }

    pub fn from_json_value(value: &Value, fallback_name: &str) -> Result<Self> {
        Self::from_json_object(doc::as_object(value)?, fallback_name)
    }

    pub fn peak(&self, dtype: Datatype) -> Result<f64> {
        self.compute
            .get(&dtype)
            .copied()
            .ok_or(Error::UnsupportedDatatype(dtype))
    }

    pub fn supports(&self, dtype: Datatype) -> bool {
        self.compute.contains_key(&dtype)
    }

    pub fn link(&self, name: &str) -> Result<&Link> {
        self.links
            .iter()
            .find(|l| l.name == name)
            .ok_or_else(|| Error::UnknownLink(name.to_string()))
    }

    /// Arithmetic intensity at which the bandwidth diagonal meets the
    /// compute ceiling.
    pub fn turning_point(&self, dtype: Datatype) -> Result<f64> {
        Ok(self.peak(dtype)? / self.bandwidth)
    }

    /// `min(peak, ai * bandwidth)`. `effective_bandwidth` defaults to the
    /// device memory bandwidth. A point exactly at the turning point is
    /// compute-bound.
    pub fn attainable_performance(
        &self,
        dtype: Datatype,
        ai: f64,
        effective_bandwidth: Option<f64>,
    ) -> Result<RooflinePoint> {
        let peak = self.peak(dtype)?;
        let bw = effective_bandwidth.unwrap_or(self.bandwidth);
        Ok(roofline_point(peak, bw, ai))
    }
}

pub(crate) fn roofline_point(peak: f64, bandwidth: f64, ai: f64) -> RooflinePoint {
    let bound = if ai < peak / bandwidth {
        Bound::Memory
    } else {
        Bound::Compute
    };
    RooflinePoint {
        arithmetic_intensity: ai,
        attainable: (ai * bandwidth).min(peak),
        bound,
    }
}

/// Datatype the hardware multiplies in for a given quantization setting.
///
/// Equal weight and activation widths use the matching integer unit when the
/// hardware has one. Otherwise operands are cast up to the narrowest
/// supported type at least as wide as both, preferring integer units for
/// sub-16-bit widths; FP16 is the fallback.
pub fn resolve_compute_dtype(quant: &QuantSpec, hw: &HardwareSpec) -> Datatype {
    let width = quant.w_bits.max(quant.a_bits);
    if quant.w_bits == quant.a_bits {
        let matching = Datatype::ALL
            .into_iter()
            .find(|d| d.is_integer() && d.bits() == quant.w_bits);
        if let Some(d) = matching.filter(|d| hw.supports(*d)) {
            return d;
        }
    }
    let prefer_int = width < 16;
    let mut candidates: Vec<Datatype> = hw
        .compute
        .keys()
        .copied()
        .filter(|d| d.bits() >= width)
        .collect();
    candidates.sort_by_key(|d| (d.bits(), d.is_integer() != prefer_int));
    candidates.first().copied().unwrap_or(Datatype::Fp16)
}
