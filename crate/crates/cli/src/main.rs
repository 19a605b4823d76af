use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use bouq::calibration::{load_manifest, reference_rows, reseed, run_suite, write_suite_csv};
use bouq::config::{ExperimentConfig, Mode};
use bouq::coverage::{coverage_experiment, write_coverage_csv};
use bouq::csvio::{open, read_dataset, read_points};
use bouq::experiment::{region_table, run_optimize, trace_table, upper_cl_table, uq_table};
use bouq::Error;

#[derive(Parser)]
#[command(
    name = "bouq",
    version,
    about = "Uncertainty quantification for Bayesian optimization"
)]
struct Cli {
    /// Override the seed from the config or manifest.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for replications (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo calibration of H(M) over the rows of a manifest.
    Calibrate {
        /// TOML manifest of [[row]] tables; the bundled reference manifest if omitted.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Only run rows of these groups.
        #[arg(long)]
        group: Vec<String>,
        /// Override the replication count of every row.
        #[arg(long)]
        reps: Option<usize>,
    },
    /// Coverage of the sequential and naive intervals under UCB.
    Coverage {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Posterior mean, sd and UpperCL at query points.
    UpperCl {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Runs Bayesian optimization on a built-in objective and quantifies the result.
    Optimize {
        #[arg(long)]
        config: Option<PathBuf>,
        /// gp-sample, branin or six-hump-camel.
        #[arg(long)]
        objective: String,
        /// Writes <prefix>_trace.csv, <prefix>_region.csv and <prefix>_uq.csv.
        #[arg(long)]
        out_prefix: PathBuf,
    },
}

/// Run finished but some rows or repetitions failed.
struct Partial(usize);

fn load_config(path: Option<&Path>, mode: Mode, seed: Option<u64>) -> bouq::Result<ExperimentConfig> {
    let mut cfg = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.check_mode(mode)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_file(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> bouq::Result<()>) -> anyhow::Result<()> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    std::fs::write(path, buf).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> anyhow::Result<Option<Partial>> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Calibrate {
            manifest,
            out,
            group,
            reps,
        } => {
            let mut rows = match &manifest {
                Some(p) => load_manifest(p)?,
                None => reference_rows(),
            };
            if let Some(s) = cli.seed {
                reseed(&mut rows, s);
            }
            if !group.is_empty() {
                rows.retain(|r| group.contains(&r.group));
            }
            if let Some(n) = reps {
                if n == 0 {
                    return Err(Error::Config("--reps must be positive".into()).into());
                }
                rows.iter_mut().for_each(|r| r.config.n_replications = n);
            }
            let mut comments = vec![format!(
                "manifest = {}",
                manifest
                    .as_ref()
                    .map_or("bundled".to_string(), |p| p.display().to_string())
            )];
            if !group.is_empty() {
                comments.push(format!("groups = {}", group.join(" ")));
            }
            let outcomes = run_suite(&rows);
            write_file(&out, |b| write_suite_csv(&outcomes, &comments, b))?;
            let failed = outcomes.iter().filter(|o| o.result.is_err()).count();
            Ok((failed > 0).then_some(Partial(failed)))
        }
        Command::Coverage { config, out } => {
            let cfg = load_config(config.as_deref(), Mode::Coverage, cli.seed)?;
            let cov = cfg.coverage_config()?;
            let report = coverage_experiment(&cov)?;
            let comments = cfg.provenance_lines();
            write_file(&out, |b| write_coverage_csv(&report, &comments, b))?;
            let failed = report.failures.len();
            Ok((failed > 0).then_some(Partial(failed)))
        }
        Command::UpperCl {
            config,
            data,
            query,
            out,
        } => {
            let cfg = load_config(config.as_deref(), Mode::UpperCl, cli.seed)?;
            let p = cfg.domain()?.dim();
            let dataset = read_dataset(open(&data)?, &data.display().to_string(), Some(p))?;
            let queries = read_points(open(&query)?, &query.display().to_string(), p)?;
            let mut table = upper_cl_table(&cfg, dataset, &queries)?;
            table.comments = cfg.provenance_lines();
            table.write_file(&out)?;
            Ok(None)
        }
        Command::Optimize {
            config,
            objective,
            out_prefix,
        } => {
            let cfg = load_config(config.as_deref(), Mode::Optimize, cli.seed)?;
            let result = run_optimize(&cfg, &objective)?;
            let mut comments = cfg.provenance_lines();
            comments.push(format!("objective = {objective:?}"));
            for (suffix, mut table) in [
                ("_trace.csv", trace_table(&result.trace)),
                (
                    "_region.csv",
                    region_table(&result.region_points, &result.uq.region_mask),
                ),
                ("_uq.csv", uq_table(&result)),
            ] {
                table.comments = comments.clone();
                table.write_file(&with_suffix(&out_prefix, suffix))?;
            }
            Ok(None)
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_numerical() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(Partial(n))) => {
            eprintln!("warning: {n} rows or repetitions failed; see the output comments");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
