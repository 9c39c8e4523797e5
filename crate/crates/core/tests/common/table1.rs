//! Layer table for llama-2-7b, b=1, sequence 2048, FP16 on the A6000, as
//! displayed (OPs, memory access, intensity, max performance, bound).

#![allow(dead_code)]

use llm_roofline::{
    analyze_network, preset_hardware, preset_model, DeploymentConfig, InferenceShape, LayerReport, NetworkReport, Stage,
};

pub type Row = (&'static str, &'static str, &'static str, &'static str, &'static str, &'static str);

pub const PREFILL: [Row; 12] = [
    ("q_proj", "69G", "67M", "1024", "155T", "compute"),
    ("k_proj", "69G", "67M", "1024", "155T", "compute"),
    ("v_proj", "69G", "67M", "1024", "155T", "compute"),
    ("o_proj", "69G", "67M", "1024", "155T", "compute"),
    ("gate_proj", "185G", "152M", "1215", "155T", "compute"),
    ("up_proj", "185G", "152M", "1215", "155T", "compute"),
    ("down_proj", "185G", "152M", "1215", "155T", "compute"),
    ("qk_matmul", "34G", "302M", "114", "87T", "memory"),
    ("sv_matmul", "34G", "302M", "114", "87T", "memory"),
    ("softmax", "671M", "537M", "1.25", "960G", "memory"),
    ("norm", "59M", "34M", "1.75", "1T", "memory"),
    ("add", "8M", "34M", "0.25", "192G", "memory"),
];

pub const DECODE: [Row; 12] = [
    ("q_proj", "34M", "34M", "1", "768G", "memory"),
    ("k_proj", "34M", "34M", "1", "768G", "memory"),
    ("v_proj", "34M", "34M", "1", "768G", "memory"),
    ("o_proj", "34M", "34M", "1", "768G", "memory"),
    ("gate_proj", "90M", "90M", "1", "768G", "memory"),
    ("up_proj", "90M", "90M", "1", "768G", "memory"),
    ("down_proj", "90M", "90M", "1", "768G", "memory"),
    ("qk_matmul", "17M", "17M", "0.99", "762G", "memory"),
    ("sv_matmul", "17M", "17M", "0.99", "762G", "memory"),
    ("softmax", "328K", "262K", "1.25", "960G", "memory"),
    ("norm", "29K", "16K", "1.75", "1T", "memory"),
    ("add", "4K", "16K", "0.25", "192G", "memory"),
];

pub fn table1_report() -> NetworkReport {
    let model = preset_model("llama-2-7b").unwrap();
    let hw = preset_hardware("nvidia-a6000").unwrap();
    let cfg = DeploymentConfig::new(InferenceShape::new(1, 2048, 1));
    analyze_network(&model, &hw, &cfg).unwrap()
}

/// Displayed value -> (value in base units, one unit of the last digit).
fn parse_displayed(s: &str) -> (f64, f64) {
    let (num, scale) = match s.chars().last().unwrap() {
        'K' => (&s[..s.len() - 1], 1e3),
        'M' => (&s[..s.len() - 1], 1e6),
        'G' => (&s[..s.len() - 1], 1e9),
        'T' => (&s[..s.len() - 1], 1e12),
        'P' => (&s[..s.len() - 1], 1e15),
        _ => (s, 1.0),
    };
    let decimals = num.split('.').nth(1).map_or(0, str::len) as i32;
    let v: f64 = num.parse().unwrap();
    (v * scale, scale * 10f64.powi(-decimals))
}

fn within(column: &str, displayed: &str, actual: f64) -> Result<(), String> {
    let (v, unit) = parse_displayed(displayed);
    if (actual - v).abs() <= unit * (1.0 + 1e-9) {
        Ok(())
    } else {
        Err(format!("{column}: table {displayed}, got {actual}"))
    }
}

fn check_row(row: &Row, r: &LayerReport) -> Result<(), String> {
    within("ops", row.1, r.ops)?;
    within("memory access", row.2, r.total_bytes)?;
    within("intensity", row.3, r.arithmetic_intensity)?;
    within("max performance", row.4, r.attainable)?;
    if r.bound.to_string() != row.5 {
        return Err(format!("bound: table {}, got {}", row.5, r.bound));
    }
    Ok(())
}

/// One result per table row, labelled `stage/op`.
pub fn check_table1(report: &NetworkReport) -> Vec<(String, Result<(), String>)> {
    let mut out = Vec::new();
    for (prefill, rows) in [(true, &PREFILL), (false, &DECODE)] {
        for row in rows.iter() {
            let label = format!("{}/{}", if prefill { "prefill" } else { "decode" }, row.0);
            let found = report.per_op.iter().find(|r| {
                r.op_name == row.0
                    && match r.stage {
                        Stage::Prefill => prefill,
                        Stage::Decode { context_len } => !prefill && context_len == 2048,
                    }
            });
            let res = match found {
                Some(r) => check_row(row, r),
                None => Err("row missing".into()),
            };
            out.push((label, res));
        }
    }
    out
}
