//! evcon: discover event concepts from tag corpora and embeddings, train a
//! concept classifier bank over precomputed image features, and evaluate
//! few-shot event recognition.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 internal invariant violation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use evcon_cli::config::PipelineConfig;
use evcon_cli::pipeline::{compare_against_raw, run_all};
use evcon_cli::stages::{
    cluster_stage, compare_stage, discover_stage, evaluate_stage, manifests_stage, score_stage,
    segment_stage, table_path, train_bank_stage,
};
use evcon_core::error::Error;
use evcon_core::eval_harness::render_table;

#[derive(Parser)]
#[command(
    name = "evcon",
    version,
    about = "Event-concept discovery, bank training and few-shot evaluation"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Flat key=value configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Re-run stages even when their outputs are fresh.
    #[arg(long, global = true)]
    force: bool,
    /// Only log errors.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Segment a tag corpus and rank segments by aggregate score.
    Segment {
        #[arg(long)]
        tags: Option<PathBuf>,
        #[arg(long)]
        ngrams: Option<PathBuf>,
        #[arg(long)]
        vrep: Option<PathBuf>,
        #[arg(long, value_name = "N")]
        max_len: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the concept pool from ranked segments and embedding neighbors.
    Discover {
        #[arg(long)]
        segments: Option<PathBuf>,
        #[arg(long)]
        events: Option<PathBuf>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        stoplist: Option<PathBuf>,
        /// Neighbors per event label.
        #[arg(long, value_name = "K")]
        k: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cluster pooled concepts in embedding space.
    Cluster {
        #[arg(long)]
        pool: Option<PathBuf>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Number of clusters.
        #[arg(long, value_name = "K")]
        k: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write per-concept training manifests with cluster-aware negatives.
    Manifests {
        #[arg(long)]
        cluster: Option<PathBuf>,
        /// Concept-to-image manifest.
        #[arg(long)]
        images: Option<PathBuf>,
        /// Feature matrix that manifest image ids must resolve in.
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        neg_ratio: Option<f64>,
        /// Output directory (one manifest file per concept).
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one logistic classifier per pooled concept.
    TrainBank {
        #[arg(long)]
        pool: Option<PathBuf>,
        /// Directory written by `manifests`.
        #[arg(long)]
        manifests: Option<PathBuf>,
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        cv_folds: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score features through a trained bank.
    Score {
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a representation under the one-shot or split protocol.
    Evaluate {
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
        /// one-shot or split.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        reps: Option<usize>,
        /// Training fraction for split mode.
        #[arg(long)]
        split: Option<f64>,
        /// Name recorded in the report.
        #[arg(long, default_value = "features")]
        representation: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate several representations with paired seeds.
    Compare {
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Repeatable: name=features-file.
        #[arg(long = "features", value_name = "NAME=FILE")]
        features: Vec<String>,
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        split: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every stage from raw inputs to the evaluation report.
    RunAll {
        /// Also compare concept scores against raw evaluation features.
        #[arg(long)]
        compare_raw: bool,
    },
    /// Validate a configuration file and echo the resolved values.
    Validate,
    /// Generate the bundled synthetic fixture into a directory.
    GenFixture {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 42)]
        pipeline_seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version through the error path too
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };

    let level = if cli.global.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Separates configuration problems (exit 1) from data problems (exit 2)
/// and internal invariant violations (exit 3).
enum CliError {
    Config(String),
    Data(Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(Error::Internal(_)) => 3,
            CliError::Data(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Data(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn load_config(global: &GlobalArgs) -> Result<PipelineConfig, CliError> {
    let mut cfg = match &global.config {
        Some(path) => PipelineConfig::load(path).map_err(|e| config_error(e.to_string()))?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// Flag value if present, else config path, else a missing-path error.
fn pick(flag: Option<PathBuf>, cfg: &PipelineConfig, key: &str) -> Result<PathBuf, CliError> {
    match flag {
        Some(p) => Ok(p),
        None => cfg
            .require(key)
            .map(Path::to_path_buf)
            .map_err(|e| config_error(e.to_string())),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = load_config(&cli.global)?;
    let quiet = cli.global.quiet;

    match cli.command {
        Command::Segment {
            tags,
            ngrams,
            vrep,
            max_len,
            out,
        } => {
            if let Some(n) = max_len {
                cfg.max_len = n;
            }
            let tags = pick(tags, &cfg, "tags")?;
            let ngrams = pick(ngrams, &cfg, "ngrams")?;
            let vrep = pick(vrep, &cfg, "visual_rep")?;
            segment_stage(&cfg, &tags, &ngrams, &vrep, &out)?;
            log::info!("wrote ranked segments to {}", out.display());
        }
        Command::Discover {
            segments,
            events,
            embeddings,
            stoplist,
            k,
            out,
        } => {
            if let Some(k) = k {
                cfg.k_neighbors = k;
            }
            let segments = match segments {
                Some(p) => p,
                None => match &cfg.out_dir {
                    Some(dir) => dir.join("segments.tsv"),
                    None => {
                        return Err(config_error(
                            "--segments is required (or set out_dir in the config)",
                        ))
                    }
                },
            };
            let events = pick(events, &cfg, "events")?;
            let embeddings = pick(embeddings, &cfg, "embeddings")?;
            let stoplist = stoplist.or_else(|| cfg.stoplist.clone());
            discover_stage(&cfg, &segments, &events, &embeddings, stoplist.as_deref(), &out)?;
            log::info!("wrote concept pool to {}", out.display());
        }
        Command::Cluster {
            pool,
            embeddings,
            k,
            out,
        } => {
            if let Some(k) = k {
                cfg.k_clusters = k;
            }
            let pool = require_flag(pool, "--pool")?;
            let embeddings = pick(embeddings, &cfg, "embeddings")?;
            cluster_stage(&cfg, &pool, &embeddings, &out)?;
            log::info!("wrote cluster assignment to {}", out.display());
        }
        Command::Manifests {
            cluster,
            images,
            features,
            neg_ratio,
            out,
        } => {
            if let Some(r) = neg_ratio {
                cfg.neg_ratio = r;
            }
            let cluster = require_flag(cluster, "--cluster")?;
            let images = pick(images, &cfg, "concept_images")?;
            let features = pick(features, &cfg, "features")?;
            let list = manifests_stage(&cfg, &cluster, &images, &features, &out)?;
            log::info!("wrote training manifests; index at {}", list.display());
        }
        Command::TrainBank {
            pool,
            manifests,
            features,
            cv_folds,
            out,
        } => {
            if let Some(f) = cv_folds {
                cfg.cv_folds = f;
            }
            let pool = require_flag(pool, "--pool")?;
            let manifests = require_flag(manifests, "--manifests")?;
            let features = pick(features, &cfg, "features")?;
            train_bank_stage(&cfg, &pool, &manifests, &features, &out)?;
            log::info!("wrote bank to {}", out.display());
        }
        Command::Score {
            bank,
            features,
            out,
        } => {
            let features = pick(features, &cfg, "eval_features")?;
            score_stage(&bank, &features, &out)?;
            log::info!("wrote concept scores to {}", out.display());
        }
        Command::Evaluate {
            features,
            labels,
            mode,
            reps,
            split,
            representation,
            out,
        } => {
            apply_eval_flags(&mut cfg, mode.as_deref(), reps, split)?;
            let features = pick(features, &cfg, "eval_features")?;
            let labels = pick(labels, &cfg, "eval_labels")?;
            let report = evaluate_stage(&cfg, &features, &labels, &representation, &out)?;
            if !quiet {
                print!("{}", render_table(std::slice::from_ref(&report)));
            }
            log::info!(
                "wrote report to {} (table: {})",
                out.display(),
                table_path(&out).display()
            );
        }
        Command::Compare {
            labels,
            features,
            mode,
            reps,
            split,
            out,
        } => {
            apply_eval_flags(&mut cfg, mode.as_deref(), reps, split)?;
            if features.len() < 2 {
                return Err(config_error(
                    "compare needs at least two --features NAME=FILE",
                ));
            }
            let mut named = Vec::with_capacity(features.len());
            for spec in &features {
                let Some((name, path)) = spec.split_once('=') else {
                    return Err(config_error(format!(
                        "--features expects NAME=FILE, got {spec:?}"
                    )));
                };
                named.push((name.to_string(), PathBuf::from(path)));
            }
            let labels = pick(labels, &cfg, "eval_labels")?;
            let reports = compare_stage(&cfg, &labels, &named, &out)?;
            if !quiet {
                print!("{}", render_table(&reports));
            }
            log::info!("wrote comparison to {}", out.display());
        }
        Command::RunAll { compare_raw } => {
            let problems = cfg.run_all_problems();
            if !problems.is_empty() {
                return Err(config_error(format!(
                    "config is not runnable:\n{}",
                    problems.join("\n")
                )));
            }
            let outcome = run_all(&cfg, cli.global.config.as_deref(), cli.global.force)?;
            for s in &outcome.stages_run {
                log::info!("ran {s}");
            }
            for s in &outcome.stages_skipped {
                log::info!("skipped {s} (fresh)");
            }
            if !quiet {
                print!("{}", render_table(std::slice::from_ref(&outcome.report)));
            }
            if compare_raw {
                let (reports, path) = compare_against_raw(&cfg)?;
                if !quiet {
                    print!("{}", render_table(&reports));
                }
                log::info!("wrote comparison to {}", path.display());
            }
            println!("report: {}", outcome.report_path.display());
        }
        Command::Validate => {
            let problems = cfg.run_all_problems();
            print!("{}", cfg.render());
            if problems.is_empty() {
                log::info!("configuration is runnable");
            } else {
                return Err(config_error(format!(
                    "config is not runnable:\n{}",
                    problems.join("\n")
                )));
            }
        }
        Command::GenFixture { out, pipeline_seed } => {
            let paths = evcon_cli::fixture::generate(
                &out,
                &evcon_cli::fixture::FixtureParams {
                    pipeline_seed,
                    ..Default::default()
                },
            )?;
            log::info!("fixture written; config at {}", paths.config.display());
            println!("{}", paths.config.display());
        }
    }
    Ok(())
}

fn apply_eval_flags(
    cfg: &mut PipelineConfig,
    mode: Option<&str>,
    reps: Option<usize>,
    split: Option<f64>,
) -> Result<(), CliError> {
    if let Some(m) = mode {
        cfg.mode = evcon_core::eval_harness::EvalMode::parse(m)
            .ok_or_else(|| config_error(format!("mode must be one-shot or split, got {m:?}")))?;
    }
    if let Some(r) = reps {
        cfg.reps = r;
    }
    if let Some(s) = split {
        cfg.split = s;
    }
    Ok(())
}

fn require_flag(value: Option<PathBuf>, flag: &str) -> Result<PathBuf, CliError> {
    value.ok_or_else(|| config_error(format!("{flag} is required")))
}
