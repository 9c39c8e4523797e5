//! Helpers for pulling typed fields out of loosely-structured JSON documents
//! with errors that name the offending key.

use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub(crate) fn parse_object(document: &str) -> Result<Map<String, Value>> {
    let value: Value = serde_json::from_str(document).map_err(|e| Error::Parse(e.to_string()))?;
    as_object(&value).cloned()
}

pub(crate) fn as_object(value: &Value) -> Result<&Map<String, Value>> {
    value
        .as_object()
        .ok_or_else(|| Error::Parse("expected a JSON object".to_string()))
}

pub(crate) fn required<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    match obj.get(key) {
        None | Some(Value::Null) => Err(Error::MissingField(key.to_string())),
        Some(v) => Ok(v),
    }
}

/// A strictly positive integer dimension.
pub(crate) fn positive_dim(obj: &Map<String, Value>, key: &str) -> Result<u64> {
    let v = required(obj, key)?;
    match v.as_u64() {
        Some(0) => Err(Error::invalid_dim(key, "must be at least 1")),
        Some(n) => Ok(n),
        None => Err(Error::invalid_dim(key, format!("expected a positive integer, got {v}"))),
    }
}

pub(crate) fn optional_dim(obj: &Map<String, Value>, key: &str) -> Result<Option<u64>> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(_) => positive_dim(obj, key).map(Some),
    }
}

pub(crate) fn optional_bool(obj: &Map<String, Value>, key: &str) -> Result<Option<bool>> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Bool(b)) => Ok(Some(*b)),
        Some(v) => Err(Error::invalid_value(key, format!("expected a boolean, got {v}"))),
    }
}

pub(crate) fn positive_number(obj: &Map<String, Value>, key: &str) -> Result<f64> {
    let v = required(obj, key)?;
    match v.as_f64() {
        Some(x) if x.is_finite() && x > 0.0 => Ok(x),
        _ => Err(Error::invalid_value(key, format!("expected a positive number, got {v}"))),
    }
}

pub(crate) fn string<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a str> {
    let v = required(obj, key)?;
    v.as_str()
        .ok_or_else(|| Error::invalid_value(key, format!("expected a string, got {v}")))
}

pub(crate) fn optional_string<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<Option<&'a str>> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(_) => string(obj, key).map(Some),
    }
}
