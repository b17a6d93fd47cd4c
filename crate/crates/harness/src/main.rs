use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spike_harness::emit::{emit, Format};
use spike_harness::presets::{preset, PRESET_NAMES};
use spike_harness::{run_eigcheck, run_with_workers, ExperimentConfig, HarnessError, ModelSpec, Result};
use spike_spectra::sampler::parse_observations_csv;
use spike_spectra::{count_factors, tw1_cdf, tw1_quantile, EntryDistribution, EstimatorOptions};

#[derive(Parser)]
#[command(
    name = "spike-spectra",
    version,
    about = "Spiked covariance simulations and spike-count estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment from a config file or a preset.
    Run(RunArgs),
    /// Estimate the number of spikes from an observation matrix (CSV, rows are samples).
    EstimateK(EstimateArgs),
    /// Eigenvector alignment diagnostics for a population model.
    Eigcheck(EigcheckArgs),
    /// Tracy-Widom (β = 1) quantile or distribution function.
    Tw(TwArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// Use the full-size preset instead of the desk-scale one.
    #[arg(long)]
    full: bool,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long)]
    workers: Option<usize>,
    /// Override the replication count.
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    input: PathBuf,
    /// Subtract column means before forming the covariance.
    #[arg(long)]
    centered: bool,
    #[arg(long, default_value_t = 15)]
    multiplier: usize,
    /// TW1 probability for the threshold increment; 2.02 is used when absent.
    #[arg(long)]
    quantile: Option<f64>,
    #[arg(long)]
    sigma_cut: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EigcheckArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    /// standard_normal, uniform_sym or rademacher.
    #[arg(long, default_value = "standard_normal")]
    dist: String,
    #[arg(long)]
    centered: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct TwArgs {
    #[arg(long)]
    quantile: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    cdf: Option<f64>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn parse_dist(name: &str) -> Result<EntryDistribution> {
    serde_json::from_value(serde_json::Value::String(name.to_string()))
        .map_err(|_| HarnessError::Config(format!("unknown distribution `{name}`")))
}

fn run_cmd(args: RunArgs) -> Result<()> {
    let (mut config, stem) = match (&args.config, &args.preset) {
        (Some(path), _) => {
            let stem = path
                .file_stem()
                .map_or("experiment".into(), |s| s.to_string_lossy().into_owned());
            (ExperimentConfig::from_json(&read(path)?)?, stem)
        }
        (None, Some(name)) => {
            let config = preset(name, args.full).ok_or_else(|| {
                HarnessError::Config(format!(
                    "unknown preset `{name}`; available: {}",
                    PRESET_NAMES.join(", ")
                ))
            })?;
            (config, name.clone())
        }
        (None, None) => return Err(HarnessError::Config("either --config or --preset is required".into())),
    };
    if let Some(reps) = args.reps {
        config.reps = reps;
    }
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    config.validate()?;
    let result = run_with_workers(&config, args.workers)?;
    let json = config
        .outputs
        .json
        .clone()
        .unwrap_or_else(|| args.out.join(format!("{stem}.json")));
    let csv = config
        .outputs
        .csv
        .clone()
        .unwrap_or_else(|| args.out.join(format!("{stem}.csv")));
    emit(&result, Format::Json, &json)?;
    emit(&result, Format::Csv, &csv)?;
    for cell in &result.cells {
        println!(
            "{:<28} mean={:<12} var={:<12} ratio={:<8} ks={}",
            cell.label,
            fmt(cell.mean),
            fmt(cell.variance),
            fmt(cell.ratio),
            fmt(cell.ks)
        );
    }
    eprintln!(
        "wrote {} and {} ({:.1}s)",
        json.display(),
        csv.display(),
        result.runtime_secs
    );
    Ok(())
}

fn fmt(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.4}"))
}

fn estimate_cmd(args: EstimateArgs) -> Result<()> {
    let observations = parse_observations_csv(&read(&args.input)?)?;
    let mut opts = EstimatorOptions {
        index_multiplier: args.multiplier,
        sigma_cut: args.sigma_cut,
        ..EstimatorOptions::default()
    };
    if let Some(q) = args.quantile {
        opts.quantile_value = tw1_quantile(q).map_err(|e| HarnessError::Config(e.to_string()))?;
    }
    if opts.index_multiplier == 0 {
        return Err(HarnessError::Config("--multiplier must be positive".into()));
    }
    // Rows of the file are samples; the estimator wants variables by samples.
    let inference = count_factors(&observations.transpose(), args.centered, &opts)?;
    let text = serde_json::to_string_pretty(&inference)?;
    match args.out {
        Some(path) => write_text(&path, &text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn eigcheck_cmd(args: EigcheckArgs) -> Result<()> {
    let spec: ModelSpec = serde_json::from_str(&read(&args.model)?).map_err(|e| HarnessError::Config(e.to_string()))?;
    let model = spec.build()?;
    let dist = parse_dist(&args.dist)?;
    let summary = run_eigcheck(&model, args.n, args.reps, args.seed, &dist, args.centered)?;
    let text = serde_json::to_string_pretty(&summary)?;
    match args.out {
        Some(path) => write_text(&path, &text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn tw_cmd(args: TwArgs) -> Result<()> {
    if let Some(q) = args.quantile {
        let x = tw1_quantile(q).map_err(|e| HarnessError::Config(e.to_string()))?;
        println!("{x:.6}");
    } else if let Some(x) = args.cdf {
        println!("{:.8}", tw1_cdf(x));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run_cmd(args),
        Command::EstimateK(args) => estimate_cmd(args),
        Command::Eigcheck(args) => eigcheck_cmd(args),
        Command::Tw(args) => tw_cmd(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
