use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_llm-roofline")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const TABLE1: [&str; 10] = [
    "analyze", "--model", "llama-2-7b", "--hardware", "nvidia-a6000", "--batch", "1", "--prompt-len", "2048", "--gen-len",
];

#[test]
fn table_output_has_prefill_rows() {
    let mut args = TABLE1.to_vec();
    args.extend(["0", "--format", "table"]);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    for header in ["Layer Name", "OPs", "Memory Access", "Arithmetic Intensity", "Max Performance", "Bound", "Time"] {
        assert!(out.lines().next().unwrap().contains(header));
    }
    let q = out.lines().find(|l| l.starts_with("q_proj")).unwrap();
    let cells: Vec<&str> = q.split_whitespace().collect();
    assert_eq!(&cells[..6], ["q_proj", "69G", "67M", "1024", "155T", "compute"]);
    let qk = out.lines().find(|l| l.starts_with("qk_matmul")).unwrap();
    let cells: Vec<&str> = qk.split_whitespace().collect();
    assert_eq!(&cells[..6], ["qk_matmul", "34G", "302M", "114", "87T", "memory"]);
    assert!(!out.contains("Decode (context"));
    assert!(out.contains("Prefill latency:"));
}

#[test]
fn unknown_preset_exits_3_with_candidates() {
    let o = run(&["analyze", "--model", "nope", "--hardware", "nvidia-a6000", "--prompt-len", "8"]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.contains("llama-2-7b"), "{err}");
    assert!(o.stdout.is_empty());
}

#[test]
fn bad_flags_exit_2() {
    assert_eq!(run(&["analyze", "--model", "llama-2-7b"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let o = run(&["analyze", "--model", "llama-2-7b", "--hardware", "nvidia-a6000", "--prompt-len", "8", "--w-bits", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("w_bits"));
    let o = run(&["analyze", "--model", "llama-2-7b", "--hardware", "nvidia-a6000", "--prompt-len", "8", "--offload-weights", "usb"]);
    assert_eq!(o.status.code(), Some(2));
}

fn json_run(extra: &[&str]) -> Value {
    let mut args = TABLE1.to_vec();
    args.extend(["1", "--format", "json"]);
    args.extend(extra);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn four_bit_weights_quarter_the_footprint() {
    let fp16 = json_run(&[]);
    let q = json_run(&["--w-bits", "4", "--kv-bits", "4"]);
    let w16 = fp16["memory"]["weights"].as_f64().unwrap();
    let w4 = q["memory"]["weights"].as_f64().unwrap();
    assert_eq!(w4 * 4.0, w16);
}

#[test]
fn sweep_point_matches_analyze() {
    let o = run(&[
        "analyze", "--model", "llama-2-7b", "--hardware", "nvidia-a6000", "--batch", "4", "--prompt-len", "2048",
        "--gen-len", "1", "--format", "json",
    ]);
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    let o = run(&[
        "sweep", "--model", "llama-2-7b", "--hardware", "nvidia-a6000", "--prompt-len", "2048", "--gen-len", "1",
        "--axis", "batch", "--values", "4",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let series = llm_roofline::parse_series_csv(&o.stdout).unwrap();
    let m = &series[0].points[0].metrics;
    // canonical JSON keeps six significant digits
    let close = |a: f64, b: f64| ((a - b) / b).abs() < 1e-5;
    assert!(close(m.latency_s, report["decode_latency_total"].as_f64().unwrap()));
    assert!(close(m.memory_bytes, report["memory"]["total"].as_f64().unwrap()));
    assert!(close(m.throughput_tps.unwrap(), report["throughput"].as_f64().unwrap()));
}

#[test]
fn sweep_quantization_ordering() {
    let o = run(&[
        "sweep", "--model", "llama-2-13b", "--hardware", "nvidia-a6000", "--prompt-len", "1024", "--gen-len", "1",
        "--axis", "batch", "--values", "1,1024", "--variant", "fp16:w=16", "--variant", "w8:w=8", "--variant", "w4:w=4",
        "--variant", "w2:w=2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("variant,x,latency_s,throughput_tps,memory_bytes,bound\n"));
    let s = llm_roofline::parse_series_csv(&o.stdout).unwrap();
    let lat = |i: usize, p: usize| s[i].points[p].metrics.latency_s;
    assert!(lat(1, 0) < lat(0, 0) && lat(2, 0) < lat(1, 0));
    assert!((lat(3, 1) - lat(2, 1)).abs() / lat(2, 1) < 0.05);
}

#[test]
fn sweep_input_errors_exit_2() {
    let base = ["sweep", "--model", "llama-2-7b", "--hardware", "nvidia-a6000", "--prompt-len", "16", "--gen-len", "1", "--axis", "batch"];
    let mut empty = base.to_vec();
    empty.extend(["--values", ""]);
    assert_eq!(run(&empty).status.code(), Some(2));

    let mut bad = base.to_vec();
    bad.extend(["--values", "1,2", "--variant", "x:w=4,bogus=1"]);
    let o = run(&bad);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`bogus=1`"), "{}", stderr(&o));

    let mut axis = base.to_vec();
    let last = axis.len() - 1;
    axis[last] = "heads";
    axis.extend(["--values", "1"]);
    assert_eq!(run(&axis).status.code(), Some(2));
}

#[test]
fn inline_model_file_and_preset_dir_override() {
    let dir = std::env::temp_dir().join(format!("llm-roofline-cli-{}", std::process::id()));
    std::fs::create_dir_all(dir.join("models")).unwrap();
    std::fs::create_dir_all(dir.join("hardware")).unwrap();
    let model = r#"{"hidden_size": 64, "intermediate_size": 128, "num_hidden_layers": 2,
                    "num_attention_heads": 4, "vocab_size": 100}"#;
    let file = dir.join("tiny.json");
    std::fs::write(&file, model).unwrap();
    let o = run(&["analyze", "--model", file.to_str().unwrap(), "--hardware", "nvidia-a6000", "--prompt-len", "8", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["active_layers"], 2);

    std::fs::write(dir.join("models/tiny.json"), model).unwrap();
    std::fs::write(
        dir.join("hardware/box.json"),
        r#"{"bandwidth_bytes_per_s": 1e11, "capacity_bytes": 1e10, "compute": {"FP16": 1e13}}"#,
    )
    .unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_llm-roofline"))
        .args(["analyze", "--model", "tiny", "--hardware", "box", "--prompt-len", "8", "--format", "csv"])
        .env("LLM_ROOFLINE_PRESET_DIR", &dir)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("stage,context_len,op_name,"));
    let o = Command::new(env!("CARGO_BIN_EXE_llm-roofline"))
        .args(["presets"])
        .env("LLM_ROOFLINE_PRESET_DIR", &dir)
        .output()
        .unwrap();
    assert_eq!(stdout(&o), "models:\n  tiny\nhardware:\n  box\n");
    std::fs::remove_dir_all(dir).unwrap();
}
