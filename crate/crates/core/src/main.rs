use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pomdp_verify::bench::{
    append_records, generate, parse_threshold, run, write_log, Family, GeneratorParams, Mode,
    RunConfig,
};
use pomdp_verify::refine::HeuristicConfig;
use pomdp_verify::triangulation::Scheme;
use pomdp_verify::{Error, Rational, Scalar};

#[derive(Parser)]
#[command(
    name = "pomdp-verify",
    version,
    about = "Sound bounds for indefinite-horizon POMDP objectives"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify a model file.
    Run(RunArgs),
    /// Write a benchmark model.
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    SingleShot,
    Refine,
    BeliefExplore,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Static,
    Dynamic,
}

#[derive(Args)]
struct RunArgs {
    model: PathBuf,
    #[arg(long, value_enum, default_value = "refine")]
    mode: ModeArg,
    /// Grid resolution for single-shot mode (default 4).
    #[arg(long)]
    resolution: Option<u64>,
    #[arg(long, default_value = "h0")]
    heuristic: String,
    #[arg(long)]
    eta_init: Option<u64>,
    #[arg(long)]
    f_res: Option<f64>,
    #[arg(long)]
    rho_z: Option<f64>,
    #[arg(long)]
    f_step: Option<f64>,
    #[arg(long)]
    rho_gap: Option<f64>,
    #[arg(long)]
    f_gap: Option<f64>,
    #[arg(long)]
    rho_sigma: Option<f64>,
    #[arg(long, value_enum)]
    triangulation: Option<SchemeArg>,
    /// Wall-time budget in seconds.
    #[arg(long, default_value_t = 60.0)]
    time: f64,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Relative gap at which to stop.
    #[arg(long, default_value_t = 1e-6)]
    gap: f64,
    /// Exact rational arithmetic.
    #[arg(long, conflicts_with = "float")]
    exact: bool,
    /// Floating-point arithmetic (default).
    #[arg(long)]
    float: bool,
    /// Threshold query such as `<=0.7`; overrides the model file.
    #[arg(long, allow_hyphen_values = true)]
    threshold: Option<String>,
    /// Cut-off beliefs lose all their edges.
    #[arg(long)]
    strict_cutoff: bool,
    /// Append the result record to this CSV file.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the iteration log as JSON lines.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    export_abstraction: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    /// grid-avoid, maze-like, refuel-lite or rocks-lite.
    family: String,
    #[arg(long, default_value_t = 3)]
    width: usize,
    #[arg(long, default_value_t = 3)]
    height: usize,
    /// Slip or sensor-error probability, decimal or fraction.
    #[arg(long, default_value = "1/10")]
    noise: String,
    /// Fuel capacity or number of rocks.
    #[arg(long, default_value_t = 2)]
    resources: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn heuristic(args: &RunArgs) -> Result<HeuristicConfig, Error> {
    let mut h = HeuristicConfig::preset(&args.heuristic)
        .ok_or_else(|| Error::Config(format!("unknown heuristic `{}`", args.heuristic)))?;
    if let Some(v) = args.eta_init {
        h.eta_init = v;
    }
    if let Some(v) = args.f_res {
        h.f_r = v;
    }
    if let Some(v) = args.rho_z {
        h.rho_z = v;
    }
    if let Some(v) = args.f_step {
        h.f_step = v;
    }
    if let Some(v) = args.rho_gap {
        h.rho_gap = v;
    }
    if let Some(v) = args.f_gap {
        h.f_gap = v;
    }
    if let Some(v) = args.rho_sigma {
        h.rho_sigma = v;
    }
    if let Some(s) = args.triangulation {
        h.scheme = match s {
            SchemeArg::Static => Scheme::Static,
            SchemeArg::Dynamic => Scheme::Dynamic,
        };
    }
    if h.eta_init == 0 || h.f_r <= 1.0 {
        return Err(Error::Config("need eta-init >= 1 and f-res > 1".into()));
    }
    Ok(h)
}

fn run_command(args: RunArgs) -> Result<ExitCode, Error> {
    if !(args.time.is_finite() && args.time > 0.0) {
        return Err(Error::Config("time must be positive".into()));
    }
    let config = RunConfig {
        mode: match args.mode {
            ModeArg::SingleShot => Mode::SingleShot,
            ModeArg::Refine => Mode::Refine,
            ModeArg::BeliefExplore => Mode::BeliefExplore,
        },
        resolution: args.resolution,
        heuristic: heuristic(&args)?,
        time: Duration::from_secs_f64(args.time),
        max_iterations: args.max_iters,
        gap_target: args.gap,
        exact: args.exact,
        threshold: args.threshold.as_deref().map(parse_threshold).transpose()?,
        strict_cutoff: args.strict_cutoff,
    };
    let text = std::fs::read_to_string(&args.model)?;
    let name = args
        .model
        .file_stem()
        .map_or_else(|| "model".to_string(), |s| s.to_string_lossy().into_owned());
    let report = run(&config, &name, &text)?;
    let r = &report.record;
    println!(
        "{}: L = {:.6}, U = {:.6}, iterations = {}, abstraction states = {}, time = {:.3} s, status = {}",
        r.model, r.lower, r.upper, r.iterations, r.abstraction_states, r.time_s, r.status
    );
    if let Some(holds) = report.threshold_holds {
        println!("threshold {}", if holds { "holds" } else { "refuted" });
    }
    if let Some(path) = &args.csv {
        append_records(path, std::slice::from_ref(r))?;
    }
    if let Some(path) = &args.log {
        write_log(path, &report.log)?;
    }
    if let Some(path) = &args.export_abstraction {
        std::fs::write(path, report.abstraction_dump.unwrap_or_default())?;
    }
    Ok(if report.threshold_holds == Some(true) {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn generate_command(args: GenerateArgs) -> Result<ExitCode, Error> {
    let family: Family = args.family.parse()?;
    let noise = Rational::parse(&args.noise)
        .ok_or_else(|| Error::Config(format!("noise `{}` is not a number", args.noise)))?;
    let params = GeneratorParams {
        width: args.width,
        height: args.height,
        noise,
        resources: args.resources,
        seed: args.seed,
    };
    let text = generate(family, &params)?;
    match &args.output {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    // Exit code 2 is reserved for a threshold that holds, so usage errors
    // exit with 1 instead of clap's default.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Run(args) => run_command(args),
        Command::Generate(args) => generate_command(args),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(1)
    })
}
