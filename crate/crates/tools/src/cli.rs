//! The `hqtc` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};
use hqtc_core::experiments::{derive_seed, SeedRole};
use hqtc_core::{
    add_gmm_noise, gen_low_tubal_rank, multi_rank, psnr, rel_err, run_monte_carlo, sample_mask, solve, tubal_rank,
    NoiseModel, SolverConfig, SolverKind,
};

use crate::config::RunConfig;
use crate::error::{Result, ToolError};
use crate::io::{is_image, read_observations, read_pnm, read_tensor, write_observations, write_t3b, Observations};
use crate::report::{render_bench, to_json, write_text, BenchReport, BenchSweep, Format, MetricsRow, SolveSummary};

#[derive(Parser, Debug)]
#[command(name = "hqtc", version, about = "Robust low-tubal-rank tensor completion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// key=value run configuration
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides `master_seed` (gen, bench) or the initialisation `seed` (complete)
    #[arg(long)]
    seed: Option<u64>,
}

fn solver_parser() -> impl TypedValueParser<Value = SolverKind> {
    PossibleValuesParser::new(SolverKind::ALL.map(SolverKind::name)).map(|s| s.parse().expect("listed name"))
}

fn rank_parser(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(r) if r > 0 => Ok(r),
        _ => Err(format!("expected a positive integer, got {s:?}")),
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a ground-truth tensor and its noisy observations
    Gen {
        #[command(flatten)]
        common: Common,
        /// Use a PGM/PPM image as the ground truth
        #[arg(long, value_name = "PATH")]
        image: Option<PathBuf>,
        /// Output directory (receives truth.t3b and observations.csv)
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Complete an observation file
    Complete {
        /// Observation CSV
        observations: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = solver_parser())]
        solver: Option<SolverKind>,
        #[arg(long, value_parser = rank_parser)]
        rank: Option<usize>,
        /// Estimate (T3B)
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        /// JSON solve report [default: the estimate path with a .json extension]
        #[arg(long, value_name = "PATH")]
        report: Option<PathBuf>,
    },
    /// Monte-Carlo benchmark of the configured experiment
    Bench {
        #[command(flatten)]
        common: Common,
        /// Run only this solver
        #[arg(long, value_parser = solver_parser())]
        solver: Option<SolverKind>,
        #[arg(long, value_parser = rank_parser)]
        rank: Option<usize>,
        /// Report path [default: stdout]
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
        format: String,
    },
    /// Relative error and PSNR of an estimate
    Metrics {
        #[arg(long, value_name = "PATH")]
        truth: PathBuf,
        #[arg(long, value_name = "PATH")]
        estimate: PathBuf,
        /// Peak value [default: 1 for images (normalised units), max |truth| otherwise]
        #[arg(long)]
        i_max: Option<f64>,
        /// Output format [default: key=value lines]
        #[arg(long, value_parser = ["csv", "json"])]
        format: Option<String>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Header and ranks of a tensor, image or observation file
    Inspect { path: PathBuf },
}

/// Run with `args` (including the program name); returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    if !e.to_string().contains("Usage:") {
                        let _ = write!(err, "\n{}", Cli::command().render_usage());
                    }
                    1
                }
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.exit_code() == 1 {
                let _ = writeln!(err, "run `hqtc --help` for usage");
            }
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Gen { common, image, out: dir } => gen(&common, image.as_deref(), &dir, out),
        Command::Complete { observations, common, solver, rank, out: path, report } => {
            complete(&observations, &common, solver, rank, &path, report, out)
        }
        Command::Bench { common, solver, rank, out: path, format } => {
            bench(&common, solver, rank, path.as_deref(), parse_format(&format), out)
        }
        Command::Metrics { truth, estimate, i_max, format, out: path } => {
            metrics(&truth, &estimate, i_max, format.as_deref().map(parse_format), path.as_deref(), out)
        }
        Command::Inspect { path } => inspect(&path, out),
    }
}

fn parse_format(s: &str) -> Format {
    s.parse().expect("restricted by the argument parser")
}

fn say(out: &mut dyn Write, text: std::fmt::Arguments<'_>) -> Result<()> {
    out.write_fmt(text)
        .and_then(|_| out.write_all(b"\n"))
        .map_err(|e| ToolError::io(Path::new("<stdout>"), e))
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_text(p, text),
        None => out.write_all(text.as_bytes()).map_err(|e| ToolError::io(Path::new("<stdout>"), e)),
    }
}

fn load_config(common: &Common) -> Result<RunConfig> {
    match &common.config {
        Some(p) => RunConfig::read(p),
        None => Ok(RunConfig::default()),
    }
}

fn check_rank(rank: usize, n1: usize, n2: usize) -> Result<()> {
    if rank > n1.min(n2) {
        return Err(ToolError::Usage(format!("--rank {rank} exceeds min(n1, n2) = {}", n1.min(n2))));
    }
    Ok(())
}

fn gen(common: &Common, image: Option<&Path>, dir: &Path, out: &mut dyn Write) -> Result<()> {
    let cfg = load_config(common)?;
    let master = common.seed.unwrap_or(cfg.master_seed);
    let truth = match image {
        Some(p) => read_pnm(p)?.tensor,
        None => {
            let (n1, n2, n3) = cfg.dims;
            gen_low_tubal_rank(n1, n2, n3, cfg.true_rank, derive_seed(master, 0, SeedRole::Truth))
                .map_err(|e| ToolError::data("gen", e))?
        }
    };
    let (n1, n2, n3) = truth.dims();
    let mask = sample_mask(n1, n2, n3, cfg.fraction, derive_seed(master, 0, SeedRole::Mask))
        .map_err(|e| ToolError::data("gen", e))?;
    let noise = NoiseModel { seed: derive_seed(master, 0, SeedRole::Noise), ..cfg.noise };
    let noisy = add_gmm_noise(&truth, &mask, &noise).map_err(|e| ToolError::data("gen", e))?;
    let obs = Observations::from_tensor(&noisy, mask)?;
    std::fs::create_dir_all(dir).map_err(|e| ToolError::io(dir, e))?;
    let (truth_path, obs_path) = (dir.join("truth.t3b"), dir.join("observations.csv"));
    write_t3b(&truth_path, &truth)?;
    write_observations(&obs_path, &obs)?;
    say(out, format_args!("truth {} ({n1}x{n2}x{n3})", truth_path.display()))?;
    say(out, format_args!("observations {} ({} of {} entries)", obs_path.display(), obs.mask.count(), truth.len()))
}

fn complete(
    obs_path: &Path,
    common: &Common,
    solver: Option<SolverKind>,
    rank: Option<usize>,
    est_path: &Path,
    report: Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<()> {
    let cfg = load_config(common)?;
    let obs = read_observations(obs_path)?;
    let (n1, n2, _) = obs.values.dims();
    let kind = solver.unwrap_or(cfg.solvers[0]);
    let rank = rank.unwrap_or(cfg.solver.rank);
    check_rank(rank, n1, n2)?;
    let report_path = report.unwrap_or_else(|| est_path.with_extension("json"));
    if report_path == est_path {
        return Err(ToolError::Usage("--out and --report name the same file".into()));
    }
    let config = SolverConfig { rank, seed: common.seed.unwrap_or(cfg.solver.seed), ..cfg.solver };
    let rep = solve(kind, &obs.values, &obs.mask, &config).map_err(|source| ToolError::Solver { solver: kind, source })?;
    write_t3b(est_path, &rep.estimate)?;
    write_text(&report_path, &to_json(&SolveSummary::new(&rep, rank)))?;
    say(
        out,
        format_args!("{kind}: {} iterations ({}), {:.3} s", rep.iterations, rep.termination.name(), rep.wall_time),
    )?;
    say(out, format_args!("estimate {}", est_path.display()))?;
    say(out, format_args!("report {}", report_path.display()))
}

fn bench(
    common: &Common,
    solver: Option<SolverKind>,
    rank: Option<usize>,
    path: Option<&Path>,
    format: Format,
    out: &mut dyn Write,
) -> Result<()> {
    let mut cfg = load_config(common)?;
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(kind) = solver {
        cfg.solvers = vec![kind];
    }
    if let Some(r) = rank {
        let rows = cfg.sweep_n1.iter().copied().chain([cfg.dims.0]).min().unwrap_or(cfg.dims.0);
        check_rank(r, rows, cfg.dims.1)?;
        cfg.solver.rank = r;
    }
    let sizes: Vec<Option<usize>> = if cfg.sweep_n1.is_empty() {
        vec![None]
    } else {
        cfg.sweep_n1.iter().copied().map(Some).collect()
    };
    let mut sweeps = Vec::with_capacity(sizes.len());
    for n1 in sizes {
        let spec = cfg.experiment(n1);
        let rep = run_monte_carlo(&spec).map_err(|e| ToolError::data("bench", e))?;
        sweeps.push(BenchSweep::new(spec.dims, &rep));
    }
    let report = BenchReport { sweep: !cfg.sweep_n1.is_empty(), sweeps };
    emit(out, path, &render_bench(&report, format))
}

fn metrics(
    truth_path: &Path,
    est_path: &Path,
    i_max: Option<f64>,
    format: Option<Format>,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<()> {
    if let Some(v) = i_max.filter(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(ToolError::Usage(format!("--i-max must be positive, got {v}")));
    }
    let truth = read_tensor(truth_path)?;
    let est = read_tensor(est_path)?;
    // images are compared in normalised units, where the peak is 1
    let i_max = i_max.unwrap_or_else(|| if truth.i_max.is_some() { 1.0 } else { truth.tensor.max_abs() });
    let context = format!("comparing {} with {}", est_path.display(), truth_path.display());
    let row = MetricsRow {
        rel_err: rel_err(&est.tensor, &truth.tensor).map_err(|e| ToolError::data(context.clone(), e))?,
        psnr: Some(psnr(&est.tensor, &truth.tensor, i_max).map_err(|e| ToolError::data(context, e))?),
        i_max,
    };
    let text = match format {
        None => row.to_text(),
        Some(Format::Csv) => row.to_csv(),
        Some(Format::Json) => to_json(&row),
    };
    emit(out, path, &text)
}

fn inspect(path: &Path, out: &mut dyn Write) -> Result<()> {
    if path.extension().and_then(|e| e.to_str()) == Some("csv") {
        let obs = read_observations(path)?;
        let (n1, n2, n3) = obs.values.dims();
        say(out, format_args!("format: observations"))?;
        say(out, format_args!("dims: {n1} {n2} {n3}"))?;
        return say(out, format_args!("observed: {} ({:.4})", obs.mask.count(), obs.mask.fraction()));
    }
    let loaded = if is_image(path) {
        let img = read_pnm(path)?;
        say(out, format_args!("format: image (maxval {})", img.i_max))?;
        img.tensor
    } else {
        let t = read_tensor(path)?.tensor;
        say(out, format_args!("format: T3B1"))?;
        t
    };
    let (n1, n2, n3) = loaded.dims();
    say(out, format_args!("dims: {n1} {n2} {n3}"))?;
    say(out, format_args!("frobenius_norm: {:?}", loaded.frobenius_norm()))?;
    say(out, format_args!("max_abs: {:?}", loaded.max_abs()))?;
    let context = format!("ranks of {}", path.display());
    let tubal = tubal_rank(&loaded, None).map_err(|e| ToolError::data(context.clone(), e))?;
    let multi = multi_rank(&loaded, None).map_err(|e| ToolError::data(context, e))?;
    let multi: Vec<String> = multi.iter().map(usize::to_string).collect();
    say(out, format_args!("tubal_rank: {tubal}"))?;
    say(out, format_args!("multi_rank: {}", multi.join(" ")))
}
