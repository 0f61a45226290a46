use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use radon_spectral::design::build_grid;
use radon_spectral::estimator::evaluate_real;
use radon_spectral_sim::io::{
    self, ReconstructionRow, PROCESS_COLUMNS, RATE_COLUMNS, RECONSTRUCTION_COLUMNS,
};
use radon_spectral_sim::study::{self, CovarianceReport};
use radon_spectral_sim::{selfcheck, ExperimentConfig, SimError, Simulator};

/// Spectral cut-off reconstruction from simulated parallel-beam tomography data.
#[derive(Debug, Parser)]
#[command(name = "radon-spectral", version)]
struct Cli {
    /// Worker threads for Monte Carlo replications (outputs do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Default directory for outputs written without an explicit path.
    #[arg(long, global = true, env = "RADON_SPECTRAL_OUT")]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the detector grid (k1,k2,s,phi,weight).
    Grid {
        #[arg(long)]
        q: usize,
        #[arg(long, default_value_t = std::f64::consts::TAU)]
        ratio: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Simulate one sinogram (k1,k2,s,phi,weight,y) from the configured phantom and law.
    Simulate {
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Seed; defaults to the configured base_seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Reconstruct an image from a sinogram CSV on the polar evaluation grid.
    Reconstruct {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Residual ECDF, process, linearization gap and kernel diagonal for one data set.
    ResidualProcess {
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Observed sinogram; without it one data set is simulated (and the gap is known).
        #[arg(short, long)]
        input: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Median sup error over replications for each q.
    RateStudy {
        #[arg(short, long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write the full study (slope, oracle choices) as JSON.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Median of sqrt(n) sup |linearization gap| over replications for each q (JSON).
    Linearization {
        #[arg(short, long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Empirical versus limit covariance of the residual process (JSON).
    CovarianceCheck {
        #[arg(short, long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// SVD identity and orthonormality checks.
    Selfcheck,
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(ExperimentConfig::default()),
    }
}

fn warn_if_trivial(t: u32) {
    if t == 1 {
        eprintln!(
            "warning: bandwidth t = 1; the rate rule grows very slowly, set \"t\" or \"scale\" to override"
        );
    }
}

fn announce(path: &Path) {
    println!("{}", path.display());
}

/// Exit status 1: the run completed but a validation check failed.
struct ValidationFailure(String);

fn run(cli: Cli) -> Result<std::result::Result<(), ValidationFailure>> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    let env_dir = cli.out_dir.as_deref();
    match cli.command {
        Command::Grid { q, ratio, output } => {
            let grid = build_grid(q, ratio)?;
            let path =
                ExperimentConfig::default().output_path(output.as_deref(), env_dir, "grid.csv");
            io::with_file(&path, |w| io::write_grid(w, &grid))?;
            announce(&path);
        }
        Command::Simulate {
            config,
            seed,
            output,
        } => {
            let cfg = load_config(config.as_deref())?;
            let phantom = cfg.phantom.build()?;
            let sim = Simulator::new(&phantom, build_grid(cfg.q, cfg.ratio)?, &cfg.law)?;
            let data = sim.draw(seed.unwrap_or(cfg.base_seed))?.data;
            let path = cfg.output_path(output.as_deref(), env_dir, "sinogram.csv");
            io::with_file(&path, |w| io::write_sinogram(w, &data))?;
            announce(&path);
        }
        Command::Reconstruct {
            input,
            config,
            output,
        } => {
            let cfg = load_config(config.as_deref())?;
            let data = io::read_sinogram(
                File::open(&input).with_context(|| format!("opening {}", input.display()))?,
            )?;
            let (t, field) = study::reconstruct(&data, &cfg)?;
            warn_if_trivial(t);
            let points = cfg.eval_grid.points()?;
            let values = evaluate_real(&field, &cfg.basis()?, &points)?;
            let rows = points
                .iter()
                .zip(values)
                .map(|(p, g_hat)| ReconstructionRow {
                    r: p.r,
                    theta: p.theta,
                    g_hat,
                });
            let path = cfg.output_path(output.as_deref(), env_dir, "reconstruction.csv");
            io::with_file(&path, |w| io::write_csv(w, &RECONSTRUCTION_COLUMNS, rows))?;
            announce(&path);
        }
        Command::ResidualProcess {
            config,
            input,
            output,
        } => {
            let cfg = load_config(config.as_deref())?;
            let law = cfg.law.build()?;
            let analytic = law.as_error_law()?;
            let t_grid = cfg.t_grid.resolve(&law)?;
            let (t, rows) = match input {
                Some(path) => {
                    let data = io::read_sinogram(
                        File::open(&path).with_context(|| format!("opening {}", path.display()))?,
                    )?;
                    study::residual_process(&data, None, &cfg, analytic, &t_grid)?
                }
                None => {
                    let phantom = cfg.phantom.build()?;
                    let sim = Simulator::new(&phantom, build_grid(cfg.q, cfg.ratio)?, &cfg.law)?;
                    let s = sim.draw(cfg.base_seed)?;
                    study::residual_process(&s.data, Some(&s.errors), &cfg, analytic, &t_grid)?
                }
            };
            warn_if_trivial(t);
            let path = cfg.output_path(output.as_deref(), env_dir, "residual_process.csv");
            io::with_file(&path, |w| io::write_csv(w, &PROCESS_COLUMNS, rows))?;
            announce(&path);
        }
        Command::RateStudy {
            config,
            output,
            summary,
        } => {
            let cfg = load_config(config.as_deref())?;
            let result = study::rate_study(&cfg)?;
            for level in &result.levels {
                if level.row.t != 0 {
                    warn_if_trivial(level.row.t);
                }
            }
            eprintln!(
                "log-log slope of median sup error vs n: {:.4}",
                result.slope
            );
            let path = cfg.output_path(output.as_deref(), env_dir, "rate_study.csv");
            io::with_file(&path, |w| io::write_csv(w, &RATE_COLUMNS, result.rows()))?;
            announce(&path);
            if let Some(path) = summary {
                io::with_file(&path, |w| io::write_json(w, &result))?;
                announce(&path);
            }
        }
        Command::Linearization { config, output } => {
            let cfg = load_config(config.as_deref())?;
            let levels = study::linearization_study(&cfg)?;
            let path = cfg.output_path(output.as_deref(), env_dir, "linearization.json");
            io::with_file(&path, |w| io::write_json(w, &levels))?;
            announce(&path);
        }
        Command::CovarianceCheck { config, output } => {
            let cfg = load_config(config.as_deref())?;
            let report: CovarianceReport = study::covariance_study(&cfg)?;
            warn_if_trivial(report.t);
            let path = cfg.output_path(output.as_deref(), env_dir, "covariance.json");
            io::with_file(&path, |w| io::write_json(w, &report))?;
            announce(&path);
            eprintln!(
                "limit kernel match: {} (worst ratio {:.2}); design-normalized match: {} (worst ratio {:.2})",
                report.limit_match, report.limit_worst_ratio, report.design_match, report.design_worst_ratio
            );
            if !report.kernel_symmetric || report.kernel_min_eigenvalue < -1e-8 {
                return Ok(Err(ValidationFailure(format!(
                    "kernel matrix is not symmetric PSD (min eigenvalue {:e})",
                    report.kernel_min_eigenvalue
                ))));
            }
        }
        Command::Selfcheck => {
            let results = selfcheck::run_all()?;
            for r in &results {
                println!("{r}");
            }
            if results.iter().any(|r| !r.passed) {
                return Ok(Err(ValidationFailure("selfcheck failed".into())));
            }
        }
    }
    Ok(Ok(()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(ValidationFailure(msg))) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            // Bad input files and configurations are validation failures too.
            let validation = e.downcast_ref::<SimError>().is_some()
                || e.downcast_ref::<radon_spectral::Error>().is_some()
                || e.chain()
                    .any(|c| c.is::<SimError>() || c.is::<std::io::Error>());
            ExitCode::from(if validation { 1 } else { 2 })
        }
    }
}
