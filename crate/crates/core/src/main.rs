use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gilda::bench::{self, InitStrategy, Method, OutputFormat, SweepResult, SweepSpec};
use gilda::datagen::{generate_dataset, DataSpec};
use gilda::{
    eigenvector_solution, pmo_optimize, retract, scatter_matrices, trace_ratio_objective, two_step_optimize,
    AmbientMatrix, GildaError, OptConfig,
};

const EXIT_INVALID: u8 = 1;
const EXIT_ALL_FAILED: u8 = 2;

#[derive(Parser)]
#[command(name = "gilda", version, about = "Grassmann LDA: proxy matrix optimization vs. two-step descent")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the ambient dimension with a fixed projection rank.
    SweepD(SweepDArgs),
    /// Sweep the projection rank with a fixed ambient dimension.
    SweepR(SweepRArgs),
    /// Solve one generated instance with all three methods.
    Solve(SolveArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Desk,
    Paper,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Init {
    Eigenvector,
    Gaussian,
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long, value_enum, default_value = "desk")]
    preset: Preset,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Repetitions per sweep value.
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<usize>>,
    #[arg(long)]
    classes: Option<usize>,
    /// Points per class.
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    ecc_mean: Option<f64>,
    #[arg(long)]
    mean_std: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long, value_enum)]
    init: Option<Init>,
    /// Scale of the initial proxy relative to the start point.
    #[arg(long)]
    proxy_scale: Option<f64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Record wall-clock time per method (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct SweepDArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Projection rank held fixed across the sweep.
    #[arg(long)]
    proj: Option<usize>,
}

#[derive(Args)]
struct SweepRArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Ambient dimension held fixed across the sweep.
    #[arg(long)]
    dim: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long, default_value_t = 3)]
    proj: usize,
    #[arg(long, default_value_t = 4)]
    classes: usize,
    #[arg(long, default_value_t = 500)]
    points: usize,
    #[arg(long, default_value_t = 2.0)]
    ecc_mean: f64,
    #[arg(long, default_value_t = 1.0)]
    mean_std: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    proxy_scale: f64,
}

fn apply_common(mut spec: SweepSpec, args: &CommonArgs) -> SweepSpec {
    if let Some(reps) = args.reps {
        spec.repetitions = reps;
    }
    if let Some(values) = &args.values {
        spec.values = values.clone();
    }
    if let Some(c) = args.classes {
        spec.data.n_classes = c;
    }
    if let Some(n) = args.points {
        spec.data.n_per_class = n;
    }
    if let Some(e) = args.ecc_mean {
        spec.data.ecc_mean = e;
    }
    if let Some(s) = args.mean_std {
        spec.data.mean_std = s;
    }
    if let Some(step) = args.step {
        spec.opt.step_size = step;
    }
    if let Some(iters) = args.iters {
        spec.opt.max_iters = iters;
    }
    if let Some(tol) = args.rel_tol {
        spec.opt.rel_tol = tol;
    }
    if let Some(mu) = args.momentum {
        spec.opt.momentum = mu;
    }
    if let Some(init) = args.init {
        spec.init = match init {
            Init::Eigenvector => InitStrategy::Eigenvector,
            Init::Gaussian => InitStrategy::Gaussian,
        };
    }
    if let Some(s) = args.proxy_scale {
        spec.proxy_scale = s;
    }
    spec.record_timing = args.timing;
    spec
}

fn threads_from_env() -> usize {
    std::env::var("GILDA_THREADS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}

fn print_summary(result: &SweepResult) {
    let mut err = io::stderr().lock();
    let _ = writeln!(err, "{:>8} {:>12} {:>4} {:>14} {:>14}", "value", "method", "ok", "median", "iqr");
    for row in &result.aggregates {
        let fmt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.6e}"));
        let _ = writeln!(
            err,
            "{:>8} {:>12} {:>4} {:>14} {:>14}",
            row.sweep_value,
            row.method.as_str(),
            row.n_ok,
            fmt(row.median),
            fmt(row.iqr)
        );
    }
    let _ = writeln!(err, "{} of {} cells failed", result.failed_cells(), result.total_cells());
}

fn run_sweep_command(spec: SweepSpec, common: &CommonArgs) -> ExitCode {
    if let Err(e) = spec.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_INVALID);
    }
    let result = match bench::run_sweep_threads(&spec, threads_from_env()) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    let format = match common.format {
        Format::Csv => OutputFormat::Csv,
        Format::Json => OutputFormat::Json,
    };
    let written = match &common.out {
        Some(path) => bench::emit_results(&result, format, path),
        None => bench::write_results(&result, format, io::stdout().lock()).map_err(|e| GildaError::Io {
            path: "<stdout>".into(),
            message: e.to_string(),
        }),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_INVALID);
    }
    print_summary(&result);
    if result.all_cells_failed() {
        return ExitCode::from(EXIT_ALL_FAILED);
    }
    ExitCode::SUCCESS
}

fn solve(args: &SolveArgs) -> Result<(), GildaError> {
    let mut opt = OptConfig::default();
    if let Some(step) = args.step {
        opt.step_size = step;
    }
    if let Some(iters) = args.iters {
        opt.max_iters = iters;
    }
    opt.validate()?;
    let data = DataSpec {
        dim: args.dim,
        n_classes: args.classes,
        n_per_class: args.points,
        ecc_mean: args.ecc_mean,
        mean_std: args.mean_std,
        seed: args.seed,
    };
    let dataset = generate_dataset(&data)?;
    let scatter = scatter_matrices(&dataset);
    let eig = eigenvector_solution(&scatter, args.proj)?;
    let f_eig = trace_ratio_objective(&eig, &scatter)?;
    let init = AmbientMatrix::new(eig.as_matrix() * args.proxy_scale)?;
    let two = two_step_optimize(&scatter, &retract(&init)?, &opt)?;
    let pmo = pmo_optimize(&scatter, &init, &opt)?;

    println!("{:<12} {:>24} {:>24} {:>10}", "method", "objective", "normalized_improvement", "iterations");
    for (method, f, iters) in [
        (Method::Eigenvector, f_eig, 0),
        (Method::TwoStep, two.final_objective, two.iterations_used),
        (Method::Pmo, pmo.final_objective, pmo.iterations_used),
    ] {
        let imp = bench::normalized_improvement(f, f_eig)
            .map(bench::format_float)
            .unwrap_or_else(|e| e.code().to_string());
        println!("{:<12} {:>24} {:>24} {:>10}", method.as_str(), bench::format_float(f), imp, iters);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INVALID) } else { ExitCode::SUCCESS };
        }
    };

    match cli.command {
        Command::SweepD(args) => {
            let base = match args.common.preset {
                Preset::Desk => SweepSpec::desk_dim(args.common.seed),
                Preset::Paper => SweepSpec::paper_dim(args.common.seed),
            };
            let mut spec = apply_common(base, &args.common);
            if let Some(p) = args.proj {
                spec.fixed = p;
            }
            run_sweep_command(spec, &args.common)
        }
        Command::SweepR(args) => {
            let base = match args.common.preset {
                Preset::Desk => SweepSpec::desk_proj(args.common.seed),
                Preset::Paper => SweepSpec::paper_proj(args.common.seed),
            };
            let mut spec = apply_common(base, &args.common);
            if let Some(d) = args.dim {
                spec.fixed = d;
                spec.data.dim = d;
                if args.common.mean_std.is_none() {
                    spec.data.mean_std = 5.0 / d as f64;
                }
            }
            run_sweep_command(spec, &args.common)
        }
        Command::Solve(args) => match solve(&args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_INVALID)
            }
        },
    }
}
