//! Argument parsing and dispatch. Exit codes: 0 success, 1 I/O or server
//! failure, 2 bad flags or invalid input, 3 unknown preset.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use llm_roofline::format::{render_ops_csv, render_table};
use llm_roofline::{export_series, Error, ExportFormat, PresetRegistry};
use serde_json::{json, Map, Value};

use crate::{analyze_value, report_json, sweep_value};

#[derive(Parser, Debug)]
#[command(name = "llm-roofline", version, about = "Roofline analysis of LLM inference")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Analyze one deployment and print a per-op report.
    Analyze(AnalyzeArgs),
    /// Sweep one axis for several variants and print the series.
    Sweep(SweepArgs),
    /// Run the HTTP API (and serve a viewer bundle when given).
    Serve(ServeArgs),
    /// List available model and hardware presets.
    Presets,
}

#[derive(Args, Debug)]
struct Target {
    /// Model preset id, or path to a model config JSON file.
    #[arg(long)]
    model: String,
    /// Hardware preset id, or path to a hardware JSON file.
    #[arg(long)]
    hardware: String,
    #[arg(long, default_value_t = 1)]
    batch: u64,
    #[arg(long)]
    prompt_len: u64,
    #[arg(long, default_value_t = 0)]
    gen_len: u64,
    #[arg(long, default_value_t = 16)]
    w_bits: u8,
    #[arg(long, default_value_t = 16)]
    a_bits: u8,
    #[arg(long, default_value_t = 16)]
    kv_bits: u8,
    /// Use fused (flash) attention.
    #[arg(long)]
    flash_attn: bool,
    /// Stream weights over the named hardware link.
    #[arg(long, value_name = "LINK")]
    offload_weights: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    layer_fraction: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ReportFormat {
    Table,
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    target: Target,
    #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
    format: ReportFormat,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SeriesFormat {
    Csv,
    Jsonl,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    target: Target,
    /// batch, prompt_len, context_len or bandwidth
    #[arg(long)]
    axis: String,
    /// Comma-separated, strictly increasing axis values.
    #[arg(long, allow_hyphen_values = true)]
    values: String,
    /// `name:w=4,a=8,kv=4,flash=true,frac=0.5,offload=pcie`; repeatable.
    #[arg(long = "variant")]
    variants: Vec<String>,
    /// prefill or decode; defaults to prefill for prompt_len, else decode.
    #[arg(long)]
    metric: Option<String>,
    #[arg(long, value_enum, default_value_t = SeriesFormat::Csv)]
    format: SeriesFormat,
}

#[derive(Args, Debug)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// Directory with the viewer bundle, served at `/`.
    #[arg(long)]
    static_dir: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Preset(Error),
    Io(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Io(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Preset(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_unknown_preset() {
            Failure::Preset(e)
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

/// Preset id, or the parsed contents of a JSON file when `arg` names one.
fn slot(arg: &str) -> Result<Value, Failure> {
    let path = Path::new(arg);
    if !path.is_file() {
        return Ok(Value::String(arg.to_string()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{arg}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{arg}: {e}")))
}

fn request_value(t: &Target) -> Result<Map<String, Value>, Failure> {
    let mut optimization = json!({
        "w_bits": t.w_bits,
        "a_bits": t.a_bits,
        "kv_bits": t.kv_bits,
        "fused_attention": t.flash_attn,
        "active_layer_fraction": t.layer_fraction,
    });
    if let Some(link) = &t.offload_weights {
        optimization["offload_weights"] = Value::String(link.clone());
    }
    let v = json!({
        "model": slot(&t.model)?,
        "hardware": slot(&t.hardware)?,
        "shape": {"batch_size": t.batch, "prompt_len": t.prompt_len, "gen_len": t.gen_len},
        "optimization": optimization,
    });
    match v {
        Value::Object(m) => Ok(m),
        _ => unreachable!("built as an object"),
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "1" | "yes" | "on" => Some(true),
        "false" | "0" | "no" | "off" => Some(false),
        _ => None,
    }
}

/// `name:key=value,...` into a variant document.
pub fn parse_variant(spec: &str) -> Result<Value, String> {
    let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
    if name.trim().is_empty() {
        return Err(format!("malformed variant `{spec}`: missing name"));
    }
    let mut out = Map::new();
    out.insert("name".into(), Value::String(name.to_string()));
    for token in rest.split(',').filter(|t| !t.is_empty()) {
        let bad = |why: &str| format!("malformed variant token `{token}` in `{spec}`: {why}");
        let (key, value) = token.split_once('=').ok_or_else(|| bad("expected key=value"))?;
        let bits = || value.parse::<u8>().map(Value::from).map_err(|_| bad("expected a bit width"));
        let (field, v) = match key {
            "w" => ("w_bits", bits()?),
            "a" => ("a_bits", bits()?),
            "kv" => ("kv_bits", bits()?),
            "flash" => ("fused_attention", Value::Bool(parse_bool(value).ok_or_else(|| bad("expected true or false"))?)),
            "frac" => {
                let f: f64 = value.parse().map_err(|_| bad("expected a number"))?;
                ("active_layer_fraction", json!(f))
            }
            "offload" if !value.is_empty() => ("offload_weights", Value::String(value.to_string())),
            "offload" => return Err(bad("expected a link name")),
            _ => return Err(bad("unknown key; expected w, a, kv, flash, frac or offload")),
        };
        out.insert(field.into(), v);
    }
    Ok(Value::Object(out))
}

fn parse_values(s: &str) -> Result<Vec<Value>, Failure> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map(|x| json!(x))
                .map_err(|_| Failure::Usage(format!("--values: `{t}` is not a number")))
        })
        .collect()
}

fn analyze(args: &AnalyzeArgs, registry: &PresetRegistry, out: &mut dyn Write) -> Result<(), Failure> {
    let req = Value::Object(request_value(&args.target)?);
    let report = analyze_value(&req, registry)?;
    let text = match args.format {
        ReportFormat::Table => render_table(&report),
        ReportFormat::Json => report_json(&report),
        ReportFormat::Csv => render_ops_csv(&report),
    };
    out.write_all(text.as_bytes()).map_err(|e| Failure::Io(e.to_string()))
}

fn sweep(args: &SweepArgs, registry: &PresetRegistry, out: &mut dyn Write) -> Result<(), Failure> {
    let mut req = request_value(&args.target)?;
    req.insert("axis".into(), Value::String(args.axis.clone()));
    req.insert("values".into(), Value::Array(parse_values(&args.values)?));
    let variants = args
        .variants
        .iter()
        .map(|v| parse_variant(v))
        .collect::<Result<Vec<_>, _>>()
        .map_err(Failure::Usage)?;
    req.insert("variants".into(), Value::Array(variants));
    if let Some(m) = &args.metric {
        req.insert("metric".into(), Value::String(m.clone()));
    }
    let series = sweep_value(&Value::Object(req), registry)?;
    let format = match args.format {
        SeriesFormat::Csv => ExportFormat::Csv,
        SeriesFormat::Jsonl => ExportFormat::Jsonl,
    };
    out.write_all(&export_series(&series, format))
        .map_err(|e| Failure::Io(e.to_string()))
}

fn serve(args: &ServeArgs, registry: PresetRegistry) -> Result<(), Failure> {
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Io(e.to_string()))?;
    runtime
        .block_on(crate::service::serve(registry, &args.host, args.port, args.static_dir.clone()))
        .map_err(|e| Failure::Io(e.to_string()))
}

/// Runs the CLI on `argv` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
            } else {
                let _ = out.write_all(text.as_bytes());
            }
            return e.exit_code();
        }
    };
    let registry = match PresetRegistry::from_env() {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: loading presets: {e}");
            return 1;
        }
    };
    let result = match &cli.command {
        Command::Analyze(a) => analyze(a, &registry, out),
        Command::Sweep(s) => sweep(s, &registry, out),
        Command::Serve(s) => serve(s, registry),
        Command::Presets => {
            let mut text = String::from("models:\n");
            for m in registry.model_names() {
                text.push_str(&format!("  {m}\n"));
            }
            text.push_str("hardware:\n");
            for h in registry.hardware_names() {
                text.push_str(&format!("  {h}\n"));
            }
            out.write_all(text.as_bytes()).map_err(|e| Failure::Io(e.to_string()))
        }
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            match &f {
                Failure::Preset(e) => {
                    let _ = writeln!(err, "error: {e}");
                    if let Some(known) = e.candidates() {
                        let _ = writeln!(err, "candidates:");
                        for k in known {
                            let _ = writeln!(err, "  {k}");
                        }
                    }
                }
                Failure::Usage(m) | Failure::Io(m) => {
                    let _ = writeln!(err, "error: {m}");
                }
            }
            f.code()
        }
    }
}
