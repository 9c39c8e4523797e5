//! Report rendering: unit-suffixed tables and canonical JSON.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::analyzer::{LayerReport, NetworkReport};
use crate::model::Stage;

const SUFFIXES: [(f64, &str); 5] = [(1e15, "P"), (1e12, "T"), (1e9, "G"), (1e6, "M"), (1e3, "K")];

/// Count with a power-of-1000 suffix and an integer mantissa: `69G`, `1T`,
/// `328K`. Values below 1000 print as integers when >= 10, else with up to
/// two decimals.
pub fn format_quantity(value: f64) -> String {
    if !value.is_finite() {
        return value.to_string();
    }
    let abs = value.abs();
    for (i, &(scale, suffix)) in SUFFIXES.iter().enumerate() {
        if abs >= scale {
            let mantissa = (value / scale).round();
            // 999.6K rounds to 1000K: promote to the next suffix
            if mantissa.abs() >= 1000.0 && i > 0 {
                let (up, up_suffix) = SUFFIXES[i - 1];
                return format!("{}{}", (value / up).round(), up_suffix);
            }
            return format!("{mantissa}{suffix}");
        }
    }
    format_small(value)
}

/// Arithmetic intensity as displayed in roofline tables: `1024`, `114`,
/// `1.25`, `0.99`.
pub fn format_intensity(ai: f64) -> String {
    format_small(ai)
}

fn format_small(v: f64) -> String {
    if v.abs() >= 10.0 {
        return format!("{}", v.round());
    }
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// Seconds with an SI prefix and four significant digits: `443.4us`.
pub fn format_seconds(t: f64) -> String {
    if t == 0.0 {
        return "0s".to_string();
    }
    let (scale, unit) = if t >= 1.0 {
        (1.0, "s")
    } else if t >= 1e-3 {
        (1e3, "ms")
    } else if t >= 1e-6 {
        (1e6, "us")
    } else {
        (1e9, "ns")
    };
    let v = t * scale;
    let decimals = if v >= 100.0 {
        1
    } else if v >= 10.0 {
        2
    } else {
        3
    };
    format!("{v:.decimals$}{unit}")
}

pub fn format_bytes(bytes: f64) -> String {
    format!("{}B", format_quantity(bytes))
}

/// Serializes with sorted keys. Integral floats below 2^53 print as exact
/// integers; other numbers are rounded to six significant digits.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("report types serialize");
    let mut out = String::new();
    write_canonical(&v, &mut out);
    out
}

fn write_canonical(v: &Value, out: &mut String) {
    match v {
        Value::Null | Value::Bool(_) | Value::String(_) => out.push_str(&v.to_string()),
        Value::Number(n) => {
            if n.is_u64() || n.is_i64() {
                out.push_str(&n.to_string());
            } else {
                out.push_str(&canonical_float(n.as_f64().unwrap_or(0.0)));
            }
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_canonical(&map[k], out);
            }
            out.push('}');
        }
    }
}

const EXACT_INT_LIMIT: f64 = 9_007_199_254_740_992.0;

fn canonical_float(x: f64) -> String {
    if !x.is_finite() {
        return "null".to_string();
    }
    if x.fract() == 0.0 && x.abs() < EXACT_INT_LIMIT {
        return format!("{}", x as i64);
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("valid float literal");
    let abs = rounded.abs();
    if (1e-4..1e15).contains(&abs) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

const COLUMNS: [&str; 7] = [
    "Layer Name",
    "OPs",
    "Memory Access",
    "Arithmetic Intensity",
    "Max Performance",
    "Bound",
    "Time",
];

/// The displayed cells for one op row, in table column order.
pub fn row_cells(row: &LayerReport) -> [String; 7] {
    [
        row.op_name.clone(),
        format_quantity(row.ops),
        format_quantity(row.total_bytes),
        format_intensity(row.arithmetic_intensity),
        format_quantity(row.attainable),
        row.bound.to_string(),
        format_seconds(row.time),
    ]
}

fn push_row(out: &mut String, cells: &[String], widths: &[usize]) {
    let line: Vec<String> = cells
        .iter()
        .zip(widths)
        .map(|(c, w)| format!("{c:<w$}"))
        .collect();
    out.push_str(line.join("  ").trim_end());
    out.push('\n');
}

/// Per-op listing grouped by stage, followed by a network summary.
pub fn render_table(report: &NetworkReport) -> String {
    let rows: Vec<(Stage, [String; 7])> = report.per_op.iter().map(|r| (r.stage, row_cells(r))).collect();
    let mut widths: Vec<usize> = COLUMNS.iter().map(|c| c.len()).collect();
    for (_, cells) in &rows {
        for (w, c) in widths.iter_mut().zip(cells) {
            *w = (*w).max(c.len());
        }
    }
    let rule = "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1));

    let mut out = String::new();
    push_row(&mut out, &COLUMNS.map(String::from), &widths);
    let mut current: Option<&'static str> = None;
    for (stage, cells) in &rows {
        if current != Some(stage.label()) {
            current = Some(stage.label());
            out.push_str(&rule);
            out.push('\n');
            let title = match stage {
                Stage::Prefill => "Prefill".to_string(),
                Stage::Decode { context_len } => format!("Decode (context {context_len})"),
            };
            out.push_str(&title);
            out.push('\n');
            out.push_str(&rule);
            out.push('\n');
        }
        push_row(&mut out, cells, &widths);
    }
    out.push_str(&rule);
    out.push('\n');
    out.push_str(&render_summary(report));
    out
}

fn render_summary(r: &NetworkReport) -> String {
    let mut s = String::new();
    let opt_time = |t: Option<f64>| t.map(format_seconds).unwrap_or_else(|| "-".to_string());
    let _ = writeln!(s, "Model:                {} on {}", r.model, r.hardware);
    let _ = writeln!(s, "Compute datatype:     {}", r.compute_dtype);
    let _ = writeln!(s, "Active layers:        {}", r.active_layers);
    let _ = writeln!(s, "Prefill latency:      {}", format_seconds(r.prefill_latency));
    let _ = writeln!(s, "Decode latency first: {}", opt_time(r.decode_latency_first));
    let _ = writeln!(s, "Decode latency last:  {}", opt_time(r.decode_latency_last));
    let _ = writeln!(s, "Decode latency total: {}", format_seconds(r.decode_latency_total));
    let _ = writeln!(s, "Total latency:        {}", format_seconds(r.total_latency));
    let tps = r
        .throughput
        .map(|t| format!("{t:.2} tokens/s"))
        .unwrap_or_else(|| "-".to_string());
    let _ = writeln!(s, "Throughput:           {tps}");
    let m = &r.memory;
    let _ = writeln!(
        s,
        "Memory:               {} (weights {}, kv cache {}, activations {})",
        format_bytes(m.total),
        format_bytes(m.weights),
        format_bytes(m.kv_cache),
        format_bytes(m.activations_peak)
    );
    if r.capacity_exceeded {
        let _ = writeln!(s, "WARNING: memory footprint exceeds device capacity");
    }
    let _ = writeln!(s, "Bottleneck:           {}", r.bottleneck.as_deref().unwrap_or("-"));
    s
}

/// Per-op rows as CSV with raw SI values.
pub fn render_ops_csv(report: &NetworkReport) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record([
        "stage",
        "context_len",
        "op_name",
        "ops",
        "memory_access_bytes",
        "arithmetic_intensity",
        "max_performance",
        "bound",
        "time_s",
        "instances",
        "stage_time_s",
    ])
    .expect("in-memory write");
    for r in &report.per_op {
        let context = match r.stage {
            Stage::Prefill => String::new(),
            Stage::Decode { context_len } => context_len.to_string(),
        };
        w.write_record([
            r.stage.label().to_string(),
            context,
            r.op_name.clone(),
            r.ops.to_string(),
            r.total_bytes.to_string(),
            r.arithmetic_intensity.to_string(),
            r.attainable.to_string(),
            r.bound.to_string(),
            r.time.to_string(),
            r.instances.to_string(),
            r.stage_time.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantity_suffixes() {
        assert_eq!(format_quantity(68_719_476_736.0), "69G");
        assert_eq!(format_quantity(67_108_864.0), "67M");
        assert_eq!(format_quantity(155e12), "155T");
        assert_eq!(format_quantity(1.344e12), "1T");
        assert_eq!(format_quantity(327_840.0), "328K");
        assert_eq!(format_quantity(4096.0), "4K");
        assert_eq!(format_quantity(999_600.0), "1M");
        assert_eq!(format_quantity(0.0), "0");
        assert_eq!(format_quantity(512.0), "512");
    }

    #[test]
    fn intensity_display() {
        assert_eq!(format_intensity(1024.0), "1024");
        assert_eq!(format_intensity(113.8), "114");
        assert_eq!(format_intensity(1.25), "1.25");
        assert_eq!(format_intensity(0.99174), "0.99");
        assert_eq!(format_intensity(0.99951), "1");
        assert_eq!(format_intensity(0.25), "0.25");
        assert_eq!(format_intensity(0.0), "0");
    }

    #[test]
    fn seconds_display() {
        assert_eq!(format_seconds(4.4335e-4), "443.4us");
        assert_eq!(format_seconds(0.01755), "17.55ms");
        assert_eq!(format_seconds(2.5), "2.500s");
        assert_eq!(format_seconds(0.0), "0s");
    }

    #[test]
    fn canonical_numbers() {
        assert_eq!(canonical_float(68_719_476_736.0), "68719476736");
        assert_eq!(canonical_float(0.000_443_352_753), "0.000443353");
        assert_eq!(canonical_float(1.0 / 3.0), "0.333333");
        assert_eq!(canonical_float(1.5e-7), "1.5e-7");
        assert_eq!(canonical_float(1e300), "1e300");
        assert_eq!(canonical_float(1.25), "1.25");
    }

    #[test]
    fn canonical_sorts_keys() {
        let v = serde_json::json!({"b": 1, "a": {"z": 0.5, "y": [1.0, 2.5]}});
        assert_eq!(to_canonical_json(&v), r#"{"a":{"y":[1,2.5],"z":0.5},"b":1}"#);
    }
}
