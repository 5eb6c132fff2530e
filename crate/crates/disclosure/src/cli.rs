//! Command-line front end: model I/O, cutoff tables, verification runs,
//! information sweeps, simulations, and one-shot checks, with CSV/JSON
//! export and a reproduction manifest per output file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::equilibrium::{
    delta_n, delta_n_exact, delta_star_frictions, delta_star_monotone, delta_star_threshold,
    verify_equilibrium, CutoffResult, EquilibriumError, Verdict,
};
use crate::information::mi_sweep;
use crate::model::{
    load_model, rational_to_f64, truncation_for_tail, Friction, FrictionSpec, GameConfig,
    SignalModel, State,
};
use crate::oneshot::{
    min_k, oneshot_receiver_beliefs, oneshot_threshold_delta_star, strategy_k_condition,
    OneShotQuantities,
};
use crate::simulate::{simulate_chain, SimOptions};
use crate::steady_state::OffPathRule;
use crate::strategy::load_strategy;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_FALSIFIED: i32 = 3;
pub const EXIT_INDETERMINATE: i32 = 4;

#[derive(Parser)]
#[command(
    name = "disclosure",
    version,
    about = "Verifiable-disclosure game engine"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cutoff table: per-signal thresholds and the refinement bounds.
    Cutoffs(CutoffsArgs),
    /// Verify a strategy as a steady-state equilibrium.
    Verify(VerifyArgs),
    /// Mutual-information sweep over a success-rate grid.
    Sweep(SweepArgs),
    /// Monte Carlo simulation of the history chain.
    Simulate(SimulateArgs),
    /// One-shot benchmark game checks.
    Oneshot(OneshotArgs),
}

#[derive(Args)]
struct CutoffsArgs {
    /// Model JSON file.
    #[arg(long)]
    model: PathBuf,
    /// Report exact fractions where the model was given as fractions.
    #[arg(long)]
    rational: bool,
    /// Message-load bounds `p_lower:p_upper` for the friction-scale bound.
    #[arg(long)]
    loads: Option<String>,
    /// Output CSV path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    model: PathBuf,
    /// Strategy JSON file.
    #[arg(long)]
    strategy: PathBuf,
    /// Constant communication success rate in (0,1).
    #[arg(long)]
    delta: Option<f64>,
    /// Message-dependent success rate `scale:p0,p1,...` (p indexed by
    /// message length; the last entry extends to longer messages).
    #[arg(long)]
    frictions: Option<String>,
    /// Truncation depth (derived from the tail tolerance when absent).
    #[arg(long)]
    trunc: Option<usize>,
    /// Truncation tail tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tail_tol: f64,
    /// Cap on disclosed totals.
    #[arg(long)]
    cap: Option<u32>,
    /// Output JSON path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    model: PathBuf,
    /// Grid `a:b:n`: n evenly spaced points from a to b inclusive.
    #[arg(long)]
    grid: String,
    #[arg(long, default_value_t = 1e-8)]
    tail_tol: f64,
    /// Insert refinement points around each interior cutoff.
    #[arg(long)]
    refine_cutoffs: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    strategy: PathBuf,
    /// World state: `high` or `low`.
    #[arg(long)]
    theta: String,
    #[arg(long)]
    delta: Option<f64>,
    /// Message-dependent success rate `scale:p0,p1,...`.
    #[arg(long)]
    frictions: Option<String>,
    #[arg(long)]
    steps: u64,
    #[arg(long, default_value_t = 10_000)]
    burn_in: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    cap: Option<u32>,
    /// Also write the per-period trace to this CSV path.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OneshotArgs {
    #[command(subcommand)]
    command: OneshotCommand,
}

#[derive(Subcommand)]
enum OneshotCommand {
    /// Smallest k making Strategy k incentive compatible.
    MinK {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 10_000)]
        k_max: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check Strategy k at one k: closed-form condition plus Bayes oracle.
    CheckK {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The one-shot threshold-equilibrium success-rate bound.
    DeltaStar {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct RunManifest {
    command: Vec<String>,
    model: String,
    config: serde_json::Value,
    seed: Option<u64>,
    outputs: Vec<String>,
    tool_version: String,
    wall_time_ms: u128,
}

struct Emitter {
    started: Instant,
    argv: Vec<String>,
}

impl Emitter {
    fn new() -> Self {
        Emitter {
            started: Instant::now(),
            argv: std::env::args().collect(),
        }
    }

    /// Writes `text` to `out` (or stdout) and, for file outputs, a
    /// `<out>.manifest.json` describing how to reproduce it.
    fn emit(
        &self,
        out: Option<&Path>,
        text: &str,
        model: &Path,
        config: serde_json::Value,
        seed: Option<u64>,
    ) -> Result<(), String> {
        match out {
            None => {
                print!("{text}");
                Ok(())
            }
            Some(path) => {
                std::fs::write(path, text)
                    .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
                let manifest = RunManifest {
                    command: self.argv.clone(),
                    model: model.display().to_string(),
                    config,
                    seed,
                    outputs: vec![path.display().to_string()],
                    tool_version: env!("CARGO_PKG_VERSION").to_string(),
                    wall_time_ms: self.started.elapsed().as_millis(),
                };
                let mpath = manifest_path(path);
                let body = canonical_json(&manifest)?;
                std::fs::write(&mpath, body)
                    .map_err(|e| format!("cannot write {}: {e}", mpath.display()))?;
                Ok(())
            }
        }
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// JSON with sorted keys, for hash-stable outputs.
fn canonical_json<T: Serialize>(value: &T) -> Result<String, String> {
    let v = serde_json::to_value(value).map_err(|e| e.to_string())?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| e.to_string())?;
    s.push('\n');
    Ok(s)
}

fn parse_friction(spec: &str) -> Result<Friction, String> {
    let (scale, loads) = spec
        .split_once(':')
        .ok_or_else(|| format!("frictions `{spec}`: expected scale:p0,p1,..."))?;
    let scale: f64 = scale
        .parse()
        .map_err(|e| format!("frictions scale `{scale}`: {e}"))?;
    let p: Result<Vec<f64>, _> = loads.split(',').map(str::parse::<f64>).collect();
    let p = p.map_err(|e| format!("frictions loads `{loads}`: {e}"))?;
    FrictionSpec::new(scale, p)
        .map(Friction::MessageDependent)
        .map_err(|e| e.to_string())
}

fn resolve_friction(delta: Option<f64>, frictions: Option<&str>) -> Result<Friction, String> {
    match (delta, frictions) {
        (Some(_), Some(_)) => Err("give either --delta or --frictions, not both".into()),
        (None, None) => Err("one of --delta or --frictions is required".into()),
        (Some(d), None) => Friction::constant(d).map_err(|e| e.to_string()),
        (None, Some(spec)) => parse_friction(spec),
    }
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("grid `{spec}`: expected a:b:n"));
    }
    let a: f64 = parts[0].parse().map_err(|e| format!("grid start: {e}"))?;
    let b: f64 = parts[1].parse().map_err(|e| format!("grid end: {e}"))?;
    let n: usize = parts[2].parse().map_err(|e| format!("grid count: {e}"))?;
    if !(a > 0.0 && b < 1.0 && a <= b) || n == 0 {
        return Err(format!("grid `{spec}`: need 0 < a <= b < 1 and n >= 1"));
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect())
}

fn parse_theta(s: &str) -> Result<State, String> {
    match s {
        "high" => Ok(State::High),
        "low" => Ok(State::Low),
        other => Err(format!("theta `{other}`: expected high or low")),
    }
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    let emitter = Emitter::new();
    let outcome = match cli.command {
        Command::Cutoffs(args) => cmd_cutoffs(&emitter, args),
        Command::Verify(args) => cmd_verify(&emitter, args),
        Command::Sweep(args) => cmd_sweep(&emitter, args),
        Command::Simulate(args) => cmd_simulate(&emitter, args),
        Command::Oneshot(args) => match args.command {
            OneshotCommand::MinK {
                model,
                delta,
                k_max,
                out,
            } => cmd_min_k(&emitter, model, delta, k_max, out),
            OneshotCommand::CheckK {
                model,
                delta,
                k,
                out,
            } => cmd_check_k(&emitter, model, delta, k, out),
            OneshotCommand::DeltaStar { model, out } => cmd_delta_star(&emitter, model, out),
        },
    };
    match outcome {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_INPUT
        }
    }
}

fn load(model: &Path) -> Result<SignalModel, String> {
    load_model(model)
}

fn cmd_cutoffs(emitter: &Emitter, args: CutoffsArgs) -> Result<i32, String> {
    let model = load(&args.model)?;
    let mut csv = String::from("n,likelihood_ratio,cutoff\n");
    for n in 1..=model.l() {
        let cutoff = delta_n(&model, n).map_err(|e| e.to_string())?;
        let cell = match cutoff {
            CutoffResult::AlwaysExists => "always".to_string(),
            CutoffResult::NeverExists => "never".to_string(),
            CutoffResult::Cutoff(d) => {
                let exact = if args.rational {
                    model.exact().and_then(|e| delta_n_exact(e, n))
                } else {
                    None
                };
                match exact {
                    Some(r) => {
                        debug_assert!((rational_to_f64(&r) - d).abs() < 1e-9);
                        r.to_string()
                    }
                    None => format!("{d:.12}"),
                }
            }
        };
        let _ = writeln!(csv, "{n},{:.12},{cell}", model.ratios()[n - 1]);
    }
    let dt = delta_star_threshold(&model).map_err(|e| e.to_string())?;
    let dm = delta_star_monotone(&model).map_err(|e| e.to_string())?;
    let _ = writeln!(csv, "delta_star_threshold,,{dt:.12}");
    let _ = writeln!(csv, "delta_star_monotone,,{dm:.12}");
    if let Some(loads) = &args.loads {
        let (lo, hi) = loads
            .split_once(':')
            .ok_or_else(|| format!("loads `{loads}`: expected p_lower:p_upper"))?;
        let lo: f64 = lo.parse().map_err(|e| format!("p_lower: {e}"))?;
        let hi: f64 = hi.parse().map_err(|e| format!("p_upper: {e}"))?;
        let ds = delta_star_frictions(&model, lo, hi).map_err(|e| e.to_string())?;
        let _ = writeln!(csv, "delta_star_frictions,,{ds:.12}");
    }
    emitter.emit(
        args.out.as_deref(),
        &csv,
        &args.model,
        serde_json::json!({"rational": args.rational, "loads": args.loads}),
        None,
    )?;
    Ok(EXIT_OK)
}

fn cmd_verify(emitter: &Emitter, args: VerifyArgs) -> Result<i32, String> {
    let model = load(&args.model)?;
    let strategy = load_strategy(&args.strategy)?;
    let friction = resolve_friction(args.delta, args.frictions.as_deref())?;
    let trunc = args
        .trunc
        .unwrap_or_else(|| truncation_for_tail(friction.delta_max(), args.tail_tol));
    let mut config = GameConfig::new(friction, trunc).with_tail_tol(args.tail_tol);
    config.cap = args.cap;
    let report = match verify_equilibrium(
        &model,
        &strategy,
        &config,
        &OffPathRule::PessimisticBelowZero,
    ) {
        Ok(r) => r,
        Err(EquilibriumError::TailTooLarge(t, tol)) => {
            eprintln!("indeterminate: tail bound {t:.3e} exceeds {tol:.3e}; raise --trunc");
            return Ok(EXIT_INDETERMINATE);
        }
        Err(e) => return Err(e.to_string()),
    };
    let body = canonical_json(&report)?;
    emitter.emit(
        args.out.as_deref(),
        &body,
        &args.model,
        serde_json::json!({
            "strategy": args.strategy.display().to_string(),
            "delta": args.delta,
            "frictions": args.frictions,
            "trunc": trunc,
            "tail_tol": args.tail_tol,
            "cap": args.cap,
        }),
        None,
    )?;
    Ok(match report.verdict {
        Verdict::StrictEquilibrium => EXIT_OK,
        Verdict::NotEquilibrium => EXIT_FALSIFIED,
        Verdict::WeakEquilibrium => EXIT_INDETERMINATE,
    })
}

fn cmd_sweep(emitter: &Emitter, args: SweepArgs) -> Result<i32, String> {
    let model = load(&args.model)?;
    let mut grid = parse_grid(&args.grid)?;
    if args.refine_cutoffs {
        let (lo, hi) = (grid[0], *grid.last().unwrap());
        for n in 2..model.l() {
            if let CutoffResult::Cutoff(d) = delta_n(&model, n).map_err(|e| e.to_string())? {
                for offset in [-1e-6, 0.0, 1e-6] {
                    let x = d + offset;
                    if x > lo && x < hi {
                        grid.push(x);
                    }
                }
            }
        }
        grid.sort_by(f64::total_cmp);
        grid.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    }
    let rows = mi_sweep(&model, &grid, args.tail_tol).map_err(|e| e.to_string())?;
    let mut csv = String::from("delta,selected_n,mutual_information_nats,tail_bound\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{:.12},{},{:.12},{:.3e}",
            r.delta, r.selected_n, r.mutual_information, r.tail_bound
        );
    }
    emitter.emit(
        args.out.as_deref(),
        &csv,
        &args.model,
        serde_json::json!({"grid": args.grid, "tail_tol": args.tail_tol,
                           "refine_cutoffs": args.refine_cutoffs}),
        None,
    )?;
    Ok(EXIT_OK)
}

fn cmd_simulate(emitter: &Emitter, args: SimulateArgs) -> Result<i32, String> {
    if args.steps == 0 {
        return Err("steps must be at least 1".into());
    }
    let model = load(&args.model)?;
    let strategy = load_strategy(&args.strategy)?;
    let state = parse_theta(&args.theta)?;
    let friction = resolve_friction(args.delta, args.frictions.as_deref())?;
    let opts = SimOptions {
        steps: args.steps,
        burn_in: args.burn_in,
        seed: args.seed,
        record_trace: args.trace.is_some(),
        record_segments: false,
    };
    let result = simulate_chain(&model, &strategy, state, &friction, args.cap, &opts)
        .map_err(|e| e.to_string())?;
    if let Some(trace_path) = &args.trace {
        let mut w = csv::Writer::from_path(trace_path)
            .map_err(|e| format!("cannot write {}: {e}", trace_path.display()))?;
        w.write_record(["period", "received", "failed_delivery"])
            .map_err(|e| e.to_string())?;
        for (t, step) in result.trace.as_ref().unwrap().iter().enumerate() {
            let h = step
                .received
                .counts()
                .iter()
                .map(u32::to_string)
                .collect::<Vec<_>>()
                .join(" ");
            w.write_record([&t.to_string(), &h, &step.failed_delivery.to_string()])
                .map_err(|e| e.to_string())?;
        }
        w.flush().map_err(|e| e.to_string())?;
    }
    let body = canonical_json(&result)?;
    emitter.emit(
        args.out.as_deref(),
        &body,
        &args.model,
        serde_json::json!({
            "strategy": args.strategy.display().to_string(),
            "theta": args.theta,
            "delta": args.delta,
            "frictions": args.frictions,
            "steps": args.steps,
            "burn_in": args.burn_in,
            "cap": args.cap,
        }),
        Some(args.seed),
    )?;
    Ok(EXIT_OK)
}

fn cmd_min_k(
    emitter: &Emitter,
    model_path: PathBuf,
    delta: f64,
    k_max: u32,
    out: Option<PathBuf>,
) -> Result<i32, String> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(format!("delta {delta} outside (0,1)"));
    }
    let model = load(&model_path)?;
    let mut csv = String::from("delta,min_k,lhs_at_min_k\n");
    let code = match min_k(&model, delta, k_max) {
        Some(k) => {
            let (_, lhs) = strategy_k_condition(&model, k, delta);
            let _ = writeln!(csv, "{delta:.12},{k},{lhs:.12}");
            EXIT_OK
        }
        None => {
            let _ = writeln!(csv, "{delta:.12},none_within_{k_max},");
            EXIT_INDETERMINATE
        }
    };
    emitter.emit(
        out.as_deref(),
        &csv,
        &model_path,
        serde_json::json!({"delta": delta, "k_max": k_max}),
        None,
    )?;
    Ok(code)
}

fn cmd_check_k(
    emitter: &Emitter,
    model_path: PathBuf,
    delta: f64,
    k: u32,
    out: Option<PathBuf>,
) -> Result<i32, String> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(format!("delta {delta} outside (0,1)"));
    }
    let model = load(&model_path)?;
    let (holds, lhs) = strategy_k_condition(&model, k, delta);
    let oracle = oneshot_receiver_beliefs(&model, k, delta, None).map_err(|e| e.to_string())?;
    let q = OneShotQuantities::new(&model, delta);
    #[derive(Serialize)]
    struct CheckReport {
        k: u32,
        delta: f64,
        condition_holds: bool,
        lhs: f64,
        likelihood_ratio_1: f64,
        quantities: OneShotQuantities,
        oracle_increasing: bool,
        oracle_above_special: bool,
        oracle_special_above_k: bool,
    }
    let all = holds && oracle.increasing && oracle.above_hbar && oracle.hbar_above_k;
    let report = CheckReport {
        k,
        delta,
        condition_holds: holds,
        lhs,
        likelihood_ratio_1: model.ratios()[0],
        quantities: q,
        oracle_increasing: oracle.increasing,
        oracle_above_special: oracle.above_hbar,
        oracle_special_above_k: oracle.hbar_above_k,
    };
    let body = canonical_json(&report)?;
    emitter.emit(
        out.as_deref(),
        &body,
        &model_path,
        serde_json::json!({"delta": delta, "k": k}),
        None,
    )?;
    Ok(if all { EXIT_OK } else { EXIT_FALSIFIED })
}

fn cmd_delta_star(
    emitter: &Emitter,
    model_path: PathBuf,
    out: Option<PathBuf>,
) -> Result<i32, String> {
    let model = load(&model_path)?;
    let ds = oneshot_threshold_delta_star(&model).map_err(|e| e.to_string())?;
    let body = format!("delta_star\n{ds:.12}\n");
    emitter.emit(
        out.as_deref(),
        &body,
        &model_path,
        serde_json::json!({}),
        None,
    )?;
    Ok(EXIT_OK)
}
