//! End-to-end orchestration: segment -> discover -> cluster -> manifests ->
//! train-bank -> score -> evaluate, with make-style staleness: a stage is
//! skipped when its output is at least as new as every input (config file
//! included), unless --force.

use std::path::{Path, PathBuf};
use std::time::SystemTime;

use evcon_core::error::{Error, Result};
use evcon_core::eval_harness::EvalReport;

use crate::config::PipelineConfig;
use crate::stages::{
    cluster_stage, compare_stage, discover_stage, evaluate_stage, manifests_stage, score_stage,
    segment_stage, train_bank_stage, MANIFEST_LIST,
};

/// Canonical artifact paths inside the configured output directory.
pub struct Artifacts {
    pub segments: PathBuf,
    pub pool: PathBuf,
    pub clusters: PathBuf,
    pub manifests_dir: PathBuf,
    pub bank: PathBuf,
    pub scores: PathBuf,
    pub report: PathBuf,
    pub comparison: PathBuf,
}

impl Artifacts {
    pub fn in_dir(out_dir: &Path) -> Artifacts {
        Artifacts {
            segments: out_dir.join("segments.tsv"),
            pool: out_dir.join("pool.tsv"),
            clusters: out_dir.join("clusters.tsv"),
            manifests_dir: out_dir.join("manifests"),
            bank: out_dir.join("bank.json"),
            scores: out_dir.join("scores.tsv"),
            report: out_dir.join("report.tsv"),
            comparison: out_dir.join("comparison.tsv"),
        }
    }
}

fn mtime(path: &Path) -> Option<SystemTime> {
    std::fs::metadata(path).and_then(|m| m.modified()).ok()
}

/// A target is stale when it is missing or strictly older than any input.
fn stale(output: &Path, inputs: &[&Path]) -> bool {
    let Some(out_time) = mtime(output) else {
        return true;
    };
    inputs
        .iter()
        .any(|input| mtime(input).is_none_or(|t| out_time < t))
}

/// The manifests stage's freshness also depends on every file its index
/// names still being present.
fn manifests_stale(dir: &Path, inputs: &[&Path]) -> bool {
    let list = dir.join(MANIFEST_LIST);
    if stale(&list, inputs) {
        return true;
    }
    match std::fs::read_to_string(&list) {
        Err(_) => true,
        Ok(body) => body
            .lines()
            .filter(|l| !l.trim().is_empty())
            .any(|name| !dir.join(name).exists()),
    }
}

pub struct RunOutcome {
    pub report: EvalReport,
    pub report_path: PathBuf,
    pub stages_run: Vec<&'static str>,
    pub stages_skipped: Vec<&'static str>,
}

/// Runs the whole pipeline. `config_path`, when given, counts as an input
/// of every stage, so editing the config re-runs everything downstream.
pub fn run_all(
    cfg: &PipelineConfig,
    config_path: Option<&Path>,
    force: bool,
) -> Result<RunOutcome> {
    let problems = cfg.run_all_problems();
    if !problems.is_empty() {
        return Err(Error::InvalidInput(format!(
            "config is not runnable:\n{}",
            problems.join("\n")
        )));
    }
    let out_dir = cfg.require("out_dir")?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let artifacts = Artifacts::in_dir(out_dir);

    let embeddings = cfg.require("embeddings")?;
    let tags = cfg.require("tags")?;
    let ngrams = cfg.require("ngrams")?;
    let visual_rep = cfg.require("visual_rep")?;
    let events = cfg.require("events")?;
    let concept_images = cfg.require("concept_images")?;
    let features = cfg.require("features")?;
    let eval_features = cfg.require("eval_features")?;
    let eval_labels = cfg.require("eval_labels")?;
    let stoplist = cfg.stoplist.as_deref();

    let mut run = Vec::new();
    let mut skipped = Vec::new();
    let mut base_inputs: Vec<&Path> = Vec::new();
    if let Some(p) = config_path {
        base_inputs.push(p);
    }

    let stage_error = |name: &'static str, e: Error| -> Error {
        Error::InvalidInput(format!("stage {name} failed: {e}"))
    };

    // segment
    {
        let mut inputs = base_inputs.clone();
        inputs.extend([tags, ngrams, visual_rep]);
        if force || stale(&artifacts.segments, &inputs) {
            segment_stage(cfg, tags, ngrams, visual_rep, &artifacts.segments)
                .map_err(|e| stage_error("segment", e))?;
            run.push("segment");
        } else {
            skipped.push("segment");
        }
    }
    // discover
    {
        let mut inputs = base_inputs.clone();
        inputs.extend([artifacts.segments.as_path(), events, embeddings]);
        if let Some(s) = stoplist {
            inputs.push(s);
        }
        if force || stale(&artifacts.pool, &inputs) {
            discover_stage(
                cfg,
                &artifacts.segments,
                events,
                embeddings,
                stoplist,
                &artifacts.pool,
            )
            .map_err(|e| stage_error("discover", e))?;
            run.push("discover");
        } else {
            skipped.push("discover");
        }
    }
    // cluster
    {
        let mut inputs = base_inputs.clone();
        inputs.extend([artifacts.pool.as_path(), embeddings]);
        if force || stale(&artifacts.clusters, &inputs) {
            cluster_stage(cfg, &artifacts.pool, embeddings, &artifacts.clusters)
                .map_err(|e| stage_error("cluster", e))?;
            run.push("cluster");
        } else {
            skipped.push("cluster");
        }
    }
    // manifests
    {
        let mut inputs = base_inputs.clone();
        inputs.extend([artifacts.clusters.as_path(), concept_images, features]);
        if force || manifests_stale(&artifacts.manifests_dir, &inputs) {
            manifests_stage(
                cfg,
                &artifacts.clusters,
                concept_images,
                features,
                &artifacts.manifests_dir,
            )
            .map_err(|e| stage_error("manifests", e))?;
            run.push("manifests");
        } else {
            skipped.push("manifests");
        }
    }
    // train-bank
    {
        let manifest_list = artifacts.manifests_dir.join(MANIFEST_LIST);
        let mut inputs = base_inputs.clone();
        inputs.extend([
            artifacts.pool.as_path(),
            manifest_list.as_path(),
            features,
        ]);
        if force || stale(&artifacts.bank, &inputs) {
            train_bank_stage(
                cfg,
                &artifacts.pool,
                &artifacts.manifests_dir,
                features,
                &artifacts.bank,
            )
            .map_err(|e| stage_error("train-bank", e))?;
            run.push("train-bank");
        } else {
            skipped.push("train-bank");
        }
    }
    // score
    {
        let mut inputs = base_inputs.clone();
        inputs.extend([artifacts.bank.as_path(), eval_features]);
        if force || stale(&artifacts.scores, &inputs) {
            score_stage(&artifacts.bank, eval_features, &artifacts.scores)
                .map_err(|e| stage_error("score", e))?;
            run.push("score");
        } else {
            skipped.push("score");
        }
    }
    // evaluate
    let report = {
        let mut inputs = base_inputs.clone();
        inputs.extend([artifacts.scores.as_path(), eval_labels]);
        if force || stale(&artifacts.report, &inputs) {
            let report = evaluate_stage(
                cfg,
                &artifacts.scores,
                eval_labels,
                "concept-scores",
                &artifacts.report,
            )
            .map_err(|e| stage_error("evaluate", e))?;
            run.push("evaluate");
            report
        } else {
            skipped.push("evaluate");
            let mut reports = evcon_core::eval_harness::load_reports(&artifacts.report)?;
            reports.remove(0)
        }
    };

    Ok(RunOutcome {
        report,
        report_path: artifacts.report,
        stages_run: run,
        stages_skipped: skipped,
    })
}

/// Compares concept scores against the raw evaluation features under the
/// configured protocol with paired seeds. Expects `run_all` artifacts.
pub fn compare_against_raw(cfg: &PipelineConfig) -> Result<(Vec<EvalReport>, PathBuf)> {
    let out_dir = cfg.require("out_dir")?;
    let artifacts = Artifacts::in_dir(out_dir);
    let eval_features = cfg.require("eval_features")?;
    let eval_labels = cfg.require("eval_labels")?;
    let reps = vec![
        ("concept-scores".to_string(), artifacts.scores.clone()),
        ("raw-features".to_string(), eval_features.to_path_buf()),
    ];
    let reports = compare_stage(cfg, eval_labels, &reps, &artifacts.comparison)?;
    Ok((reports, artifacts.comparison))
}
