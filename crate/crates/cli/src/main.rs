//! Pareto front tracking experiment runner.
//!
//! `mpft run` executes a configured tracking experiment and writes the
//! archive CSV, a JSON run report, and an SVG scatter of the tracked front.
//! `mpft metrics` and `mpft sparse` re-analyze archive CSVs offline.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

mod config;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use mpft_core::archive::ParetoArchive;
use mpft_core::error::MpftError;
use mpft_core::metrics::{hypervolume, sparsity};
use mpft_core::sparsity::{sparse_regions_2d, sparse_regions_3d, RegionReport};
use mpft_core::tracker::run_mpft;
use mpft_core::types::ObjectiveVector;

#[derive(Parser)]
#[command(name = "mpft", version, about = "Multi-policy Pareto front tracking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a tracking experiment from a JSON config.
    Run {
        /// Experiment config file.
        config: PathBuf,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// RNG seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Concurrent track limit (overrides the config).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Print hypervolume and sparsity of an archive CSV.
    Metrics {
        /// Archive CSV produced by `mpft run`.
        archive: PathBuf,
        /// Reference point, comma-separated: x,y or x,y,z.
        #[arg(long = "ref", value_delimiter = ',', allow_hyphen_values = true, required = true)]
        reference: Vec<f64>,
    },
    /// Print the top-K sparse regions of an archive CSV as JSON lines.
    Sparse {
        /// Archive CSV produced by `mpft run`.
        archive: PathBuf,
        /// Number of regions to report (>= 1).
        #[arg(long)]
        k: usize,
    },
}

/// Failure with an assigned process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            out,
            seed,
            jobs,
        } => cmd_run(&config, out, seed, jobs),
        Command::Metrics { archive, reference } => cmd_metrics(&archive, &reference),
        Command::Sparse { archive, k } => cmd_sparse(&archive, k),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn cmd_run(
    config_path: &Path,
    out: Option<PathBuf>,
    seed: Option<u64>,
    jobs: Option<usize>,
) -> Result<(), Failure> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", config_path.display())))?;
    let mut experiment: ExperimentConfig = serde_json::from_str(&text).map_err(|e| {
        // serde_json reports line and column.
        Failure::usage(format!("{}: {e}", config_path.display()))
    })?;
    if let Some(seed) = seed {
        experiment.seed = seed;
    }
    if let Some(jobs) = jobs {
        experiment.jobs = Some(jobs);
    }
    let out_dir = out
        .or_else(|| experiment.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));

    let config_dir = config_path.parent().unwrap_or_else(|| Path::new("."));
    let problem = experiment
        .problem
        .build(config_dir)
        .map_err(Failure::usage)?;
    let track_config = experiment
        .track_config(problem.objectives())
        .map_err(Failure::usage)?;

    let (archive, report) = run_mpft(problem.as_ref(), &track_config)
        .map_err(|e| Failure::runtime(e.to_string()))?;

    std::fs::create_dir_all(&out_dir)
        .map_err(|e| Failure::runtime(format!("cannot create {}: {e}", out_dir.display())))?;
    let write = |name: &str, contents: &str| -> Result<(), Failure> {
        let path = out_dir.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| Failure::runtime(format!("cannot write {}: {e}", path.display())))
    };
    write("archive.csv", &archive.to_csv())?;
    let report_json = serde_json::to_string_pretty(&report)
        .map_err(|e| Failure::runtime(format!("report serialization: {e}")))?;
    write("report.json", &format!("{report_json}\n"))?;
    if experiment.write_svg {
        write("front.svg", &svg::render_front(&archive, &report.regions))?;
    }

    println!("hv={}", report.hv);
    match report.sp {
        Some(sp) => println!("sp={sp}"),
        None => println!("sp=undefined"),
    }
    println!("env_steps={}", report.env_steps);
    Ok(())
}

fn load_archive(path: &Path) -> Result<ParetoArchive, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    ParetoArchive::from_csv(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn cmd_metrics(archive_path: &Path, reference: &[f64]) -> Result<(), Failure> {
    let archive = load_archive(archive_path)?;
    let front = archive.front();
    let m = front[0].len();
    if reference.len() != m {
        return Err(Failure::usage(format!(
            "reference point has {} entries but the archive has {m} objectives",
            reference.len()
        )));
    }
    let reference = ObjectiveVector::new(reference.to_vec())
        .map_err(|e| Failure::usage(e.to_string()))?;
    let hv = hypervolume(&front, &reference).map_err(|e| Failure::usage(e.to_string()))?;
    println!("hv={hv}");
    match sparsity(&front) {
        Ok(sp) => println!("sp={sp}"),
        Err(MpftError::UndefinedMetric(_)) => println!("sp=undefined"),
        Err(e) => return Err(Failure::usage(e.to_string())),
    }
    Ok(())
}

fn cmd_sparse(archive_path: &Path, k: usize) -> Result<(), Failure> {
    if k == 0 {
        return Err(Failure::usage("--k must be at least 1"));
    }
    let archive = load_archive(archive_path)?;
    let front = archive.front();
    let regions = match front[0].len() {
        2 => sparse_regions_2d(&front, k),
        3 => sparse_regions_3d(&front, k),
        m => {
            return Err(Failure::usage(format!(
                "sparse-region detection handles 2 or 3 objectives, archive has {m}"
            )))
        }
    }
    .map_err(|e| Failure::usage(e.to_string()))?;
    for region in &regions {
        let line = serde_json::to_string(&RegionReport::from(region))
            .map_err(|e| Failure::runtime(format!("region serialization: {e}")))?;
        println!("{line}");
    }
    Ok(())
}
