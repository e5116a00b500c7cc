use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use switchprune::automaton::entropy_bits;
use switchprune::io::{self, CssDoc, IoError};
use switchprune::models::{cosim_step_matrix, pendulum_instance, stability_domain_grid, SolverMethod};
use switchprune::{
    optimal_stabilize, oracle, stabilize, stabilize_impl, Css, OracleConfig, OracleVerdict, StabilizationTrace,
    StabilizeError,
};

#[derive(Parser)]
#[command(name = "switchprune", version, about = "Stabilize constrained switched linear systems by pruning automaton edges")]
struct Cli {
    /// Print `key: value` lines instead of a JSON report.
    #[arg(long, global = true)]
    plain: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Entropy (bits) and adjacency Perron root of an automaton.
    Entropy {
        automaton: PathBuf,
    },
    /// Remove automaton edges until the system is certified stable.
    Stabilize(StabilizeArgs),
    /// Run the stability oracle once.
    Oracle {
        css: PathBuf,
        #[command(flatten)]
        oracle: OracleArgs,
    },
    /// Build the switched system of a co-simulation.
    CosimBuild(CosimArgs),
    /// Sample the stability domain of a hybrid solver on a grid (CSV).
    StabilityDomain(DomainArgs),
}

#[derive(Args, Clone)]
struct OracleArgs {
    /// Instability tolerance: cycles with growth above `1 - eps` count.
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    /// Expanded-state budget for each enumeration.
    #[arg(long, default_value_t = switchprune::DEFAULT_BUDGET)]
    budget: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest depth tried for a norm certificate.
    #[arg(long, default_value_t = 8)]
    cert_depth: usize,
    /// Steps of the random-walk search for long unstable cycles.
    #[arg(long, default_value_t = 200_000)]
    walk_budget: u64,
}

impl OracleArgs {
    fn config(&self) -> OracleConfig {
        OracleConfig {
            epsilon: self.eps,
            budget: self.budget,
            seed: self.seed,
            cert_depth: self.cert_depth,
            walk_budget: self.walk_budget,
            ..OracleConfig::default()
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Algorithm {
    /// Short-cycle batch removal, then one edge per oracle call.
    Batch,
    /// One edge per oracle call from the start.
    Greedy,
}

#[derive(Args)]
struct StabilizeArgs {
    css: PathBuf,
    /// Lift degree applied before stabilizing.
    #[arg(long, default_value_t = 0)]
    lift: usize,
    #[arg(long, value_enum, default_value = "batch")]
    algorithm: Algorithm,
    /// Search for the largest-entropy strategy hitting every unstable cycle found.
    #[arg(long)]
    optimal: bool,
    /// Stabilized automaton (default: `<input>.stabilized.json`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stabilization trace (default: `<input>.trace.json`).
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    oracle: OracleArgs,
}

#[derive(Args)]
struct CosimArgs {
    /// Built-in model and mode map.
    #[arg(long, value_parser = ["pendulum"], conflicts_with_all = ["model", "configs"])]
    preset: Option<String>,
    #[arg(long, requires = "configs")]
    model: Option<PathBuf>,
    #[arg(long, requires = "model")]
    configs: Option<PathBuf>,
    /// Output switched system.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DomainArgs {
    /// Comma-separated methods applied in order, e.g. `fe,md`.
    #[arg(long, value_delimiter = ',', value_parser = parse_method, default_value = "fe")]
    methods: Vec<SolverMethod>,
    /// Real-axis range `lo,hi`.
    #[arg(long, value_parser = parse_range, default_value = "-3,1", allow_hyphen_values = true)]
    re_range: (f64, f64),
    /// Imaginary-axis range `lo,hi`.
    #[arg(long, value_parser = parse_range, default_value = "-2,2", allow_hyphen_values = true)]
    im_range: (f64, f64),
    #[arg(long, default_value_t = 101)]
    resolution: usize,
    /// CSV file; stdout when absent (the report is then skipped).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_method(s: &str) -> Result<SolverMethod, String> {
    SolverMethod::parse(s).ok_or_else(|| format!("unknown method {s:?}"))
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected lo,hi")?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("{a}: {e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("{b}: {e}"))?;
    if !(lo < hi) {
        return Err(format!("empty range {lo}..{hi}"));
    }
    Ok((lo, hi))
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: IoError },
    #[error("{0}")]
    Input(String),
    #[error("stabilization aborted: {0}")]
    Aborted(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Aborted(_) => 3,
            _ => 2,
        }
    }
}

#[derive(Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct RunReport {
    command: &'static str,
    inputs: Vec<InputDigest>,
    config: Value,
    outputs: Value,
    wall_time_s: f64,
}

struct Run {
    command: &'static str,
    started: Instant,
    inputs: Vec<InputDigest>,
}

impl Run {
    fn new(command: &'static str) -> Self {
        Run {
            command,
            started: Instant::now(),
            inputs: Vec::new(),
        }
    }

    fn read(&mut self, path: &Path) -> Result<String, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(text.as_bytes())),
        });
        Ok(text)
    }

    fn finish(self, config: Value, outputs: Value) -> RunReport {
        RunReport {
            command: self.command,
            inputs: self.inputs,
            config,
            outputs,
            wall_time_s: self.started.elapsed().as_secs_f64(),
        }
    }
}

fn parsed<T>(path: &Path, r: Result<T, IoError>) -> Result<T, CliError> {
    r.map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn sibling(input: &Path, suffix: &str) -> PathBuf {
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("output");
    input.with_file_name(format!("{stem}.{suffix}.json"))
}

fn cmd_entropy(path: &Path) -> Result<RunReport, CliError> {
    let mut run = Run::new("entropy");
    let text = run.read(path)?;
    let g = parsed(path, io::read_automaton(&text))?;
    let root = g.perron_root();
    Ok(run.finish(
        json!({}),
        json!({
            "nodes": g.node_count(),
            "edges": g.edge_count(),
            "perron_root": root,
            "entropy_bits": entropy_bits(root),
        }),
    ))
}

fn trace_summary(t: &StabilizationTrace) -> Value {
    json!({
        "initial_perron_root": t.initial_perron_root,
        "final_perron_root": t.final_perron_root,
        "entropy_bits": t.final_entropy,
        "steps": t.steps.len(),
        "oracle_calls": t.oracle_calls,
        "removed_edges": t.removed_edges().iter().map(|e| e.to_string()).collect::<Vec<_>>(),
        "certificate": t.certificate.as_ref().map(|c| json!({"k": c.k, "norm": c.norm.label(), "value": c.value})),
    })
}

fn cmd_stabilize(args: &StabilizeArgs) -> Result<RunReport, CliError> {
    let mut run = Run::new("stabilize");
    let text = run.read(&args.css)?;
    let css = parsed(&args.css, io::read_css(&text))?;
    let lifted = css
        .graph()
        .lift(args.lift)
        .map_err(|e| CliError::Input(format!("lift {}: {e}", args.lift)))?;
    let css = css.with_graph(lifted).map_err(|e| CliError::Input(e.to_string()))?;
    let cfg = args.oracle.config();
    cfg.validate().map_err(|e| CliError::Input(e.to_string()))?;
    let out_path = args.out.clone().unwrap_or_else(|| sibling(&args.css, "stabilized"));
    let trace_path = args.trace.clone().unwrap_or_else(|| sibling(&args.css, "trace"));
    let config = json!({
        "lift": args.lift,
        "algorithm": args.algorithm,
        "optimal": args.optimal,
        "oracle": cfg,
    });

    let result = if args.optimal {
        optimal_stabilize(&css, &cfg).map(|r| {
            let summary = json!({
                "final_perron_root": r.perron_root,
                "entropy_bits": r.entropy,
                "oracle_calls": r.oracle_calls,
                "search_states": r.search_states,
                "collected_cycles": r.collected_cycles.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
                "certificate": json!({"k": r.certificate.k, "norm": r.certificate.norm.label(), "value": r.certificate.value}),
                "greedy": trace_summary(&r.greedy),
            });
            let trace = json!({"greedy": r.greedy, "optimal": summary});
            (r.css, summary, trace)
        })
    } else {
        let f = match args.algorithm {
            Algorithm::Batch => stabilize_impl,
            Algorithm::Greedy => stabilize,
        };
        f(&css, &cfg).map(|t| {
            let summary = trace_summary(&t);
            let trace = serde_json::to_value(&t).expect("traces serialize");
            (t.final_css, summary, trace)
        })
    };

    match result {
        Ok((final_css, summary, trace)) => {
            write(&out_path, &io::write_automaton(final_css.graph()))?;
            write(&trace_path, &serde_json::to_string_pretty(&trace).expect("json"))?;
            Ok(run.finish(
                config,
                json!({
                    "status": "certified",
                    "automaton": out_path.display().to_string(),
                    "trace": trace_path.display().to_string(),
                    "result": summary,
                }),
            ))
        }
        Err(StabilizeError::OracleUnknown { reason, trace }) => {
            write(&trace_path, &serde_json::to_string_pretty(&*trace).expect("json"))?;
            let report = run.finish(
                config,
                json!({"status": "aborted", "reason": reason, "trace": trace_path.display().to_string(), "result": trace_summary(&trace)}),
            );
            emit_stderr(&report);
            Err(CliError::Aborted(reason))
        }
        Err(e) => Err(CliError::Aborted(e.to_string())),
    }
}

fn cmd_oracle(path: &Path, args: &OracleArgs) -> Result<RunReport, CliError> {
    let mut run = Run::new("oracle");
    let text = run.read(path)?;
    let css = parsed(path, io::read_css(&text))?;
    let cfg = args.config();
    cfg.validate().map_err(|e| CliError::Input(e.to_string()))?;
    let verdict = oracle(&css, &cfg);
    let detail = match &verdict {
        OracleVerdict::Stable { certificate } => {
            json!({"k": certificate.k, "norm": certificate.norm.label(), "value": certificate.value})
        }
        OracleVerdict::UnstableCycle { cycle, growth } => json!({"cycle": cycle.word.to_string(), "growth": growth}),
        OracleVerdict::Unknown { reason } => json!({"reason": reason}),
    };
    Ok(run.finish(json!({"oracle": cfg}), json!({"verdict": verdict.tag(), "detail": detail})))
}

fn cmd_cosim_build(args: &CosimArgs) -> Result<RunReport, CliError> {
    let mut run = Run::new("cosim-build");
    let (css, mode_map, radii) = match (&args.preset, &args.model, &args.configs) {
        (Some(_), _, _) => {
            let inst = pendulum_instance().map_err(|e| CliError::Input(e.to_string()))?;
            let map: Vec<Value> = inst
                .modes
                .iter()
                .map(|e| json!({"label": e.label, "mode": e.mode.describe(), "config": inst.configs[e.label as usize - 1]}))
                .collect();
            (inst.css, map, inst.spectral_radii)
        }
        (None, Some(model), Some(configs)) => {
            let m = run.read(model)?;
            let pair = parsed(model, io::read_model(&m))?;
            let c = run.read(configs)?;
            let cfgs = parsed(configs, io::read_configs(&c))?;
            let mats = cfgs
                .iter()
                .map(|c| cosim_step_matrix(&pair, c))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Input(e.to_string()))?;
            let radii = mats
                .iter()
                .map(switchprune::linalg::spectral_radius)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Input(e.to_string()))?;
            let css = Css::unconstrained(mats).map_err(|e| CliError::Input(e.to_string()))?;
            let map = cfgs
                .iter()
                .enumerate()
                .map(|(i, c)| json!({"label": i + 1, "config": c}))
                .collect();
            (css, map, radii)
        }
        _ => return Err(CliError::Input("give --preset or both --model and --configs".into())),
    };
    write(&args.out, &serde_json::to_string_pretty(&CssDoc::from_css(&css)).expect("json"))?;
    Ok(run.finish(
        json!({"preset": args.preset}),
        json!({
            "css": args.out.display().to_string(),
            "modes": css.modes().len(),
            "dim": css.dim(),
            "mode_map": mode_map,
            "spectral_radii": radii,
            "unstable_labels": radii.iter().enumerate().filter(|(_, r)| **r > 1.0).map(|(i, _)| i + 1).collect::<Vec<_>>(),
        }),
    ))
}

fn cmd_stability_domain(args: &DomainArgs) -> Result<Option<RunReport>, CliError> {
    let run = Run::new("stability-domain");
    let grid = stability_domain_grid(&args.methods, args.re_range, args.im_range, args.resolution)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in &grid {
        w.serialize(p).map_err(|e| CliError::Input(e.to_string()))?;
    }
    let text = String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv");
    let Some(out) = &args.out else {
        print!("{text}");
        return Ok(None);
    };
    write(out, &text)?;
    let names: Vec<&str> = args.methods.iter().map(|m| m.short_name()).collect();
    Ok(Some(run.finish(
        json!({"methods": names, "re_range": args.re_range, "im_range": args.im_range, "resolution": args.resolution}),
        json!({"csv": out.display().to_string(), "points": grid.len(), "stable_points": grid.iter().filter(|p| p.stable).count()}),
    )))
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        other => out.push(format!("{prefix}: {other}")),
    }
}

fn render(report: &RunReport, plain: bool) -> String {
    let v = serde_json::to_value(report).expect("reports serialize");
    if plain {
        let mut lines = Vec::new();
        flatten("", &v, &mut lines);
        lines.join("\n")
    } else {
        serde_json::to_string_pretty(&v).expect("json")
    }
}

fn emit_stderr(report: &RunReport) {
    eprintln!("{}", render(report, false));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Entropy { automaton } => cmd_entropy(automaton).map(Some),
        Command::Stabilize(a) => cmd_stabilize(a).map(Some),
        Command::Oracle { css, oracle } => cmd_oracle(css, oracle).map(Some),
        Command::CosimBuild(a) => cmd_cosim_build(a).map(Some),
        Command::StabilityDomain(a) => cmd_stability_domain(a),
    };
    match result {
        Ok(Some(report)) => {
            println!("{}", render(&report, cli.plain));
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
