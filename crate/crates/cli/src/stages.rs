//! One function per pipeline stage. Each loads its inputs, runs the core
//! operation, and writes its artifact atomically. Subcommands and `run-all`
//! both go through these.

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

use evcon_core::concept_bank::{
    score_matrix, scores_to_matrix, train_bank_ordered, BankConfig,
};
use evcon_core::concept_clustering::{
    build_training_manifest, cluster_pool, load_cluster_assignment, load_training_manifest,
    save_cluster_assignment, save_training_manifest, KMeansParams,
};
use evcon_core::concept_discovery::{
    build_pool, load_pool, load_pool_order, nearest_neighbors, save_pool, PoolParams,
};
use evcon_core::corpus_io::{
    load_bank, load_embeddings, load_features, load_labels, load_manifest, load_ngram_counts,
    load_tag_corpus, load_visual_rep, save_bank, save_features, write_atomic, KeyPolicy,
};
use evcon_core::error::{Error, Result};
use evcon_core::eval_harness::{
    compare_representations, evaluate, render_report_records, render_table, save_reports,
    EvalConfig, EvalReport, LabeledFeatureSet,
};
use evcon_core::seeding::derive_seed;
use evcon_core::segmentation::{
    load_ranked_segments, rank_segments, save_ranked_segments, segment_tag, CorpusStickiness,
    StickinessParams,
};
use evcon_core::text::normalize_phrase;

use crate::config::PipelineConfig;

fn warn_all(warnings: &[String]) {
    for w in warnings {
        log::warn!("{w}");
    }
}

/// segment: tags + n-grams + visual-rep table -> ranked segments file.
pub fn segment_stage(
    cfg: &PipelineConfig,
    tags: &Path,
    ngrams: &Path,
    vrep: &Path,
    out: &Path,
) -> Result<()> {
    let (records, warnings) = load_tag_corpus(tags)?;
    warn_all(&warnings);
    if records.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{}: tag corpus has no usable records",
            tags.display()
        )));
    }
    let table = load_ngram_counts(ngrams)?;
    let vrep = load_visual_rep(vrep, cfg.vrep_default)?;
    let max_len = cfg.max_len.min(table.max_order());
    if max_len < cfg.max_len {
        log::warn!(
            "clamping max segment length from {} to {}: the n-gram table only covers order {}",
            cfg.max_len,
            max_len,
            table.max_order()
        );
    }
    let provider = CorpusStickiness {
        ngrams: &table,
        params: StickinessParams {
            smoothing: cfg.smoothing,
        },
    };
    let mut results = Vec::with_capacity(records.len());
    for record in &records {
        results.push(segment_tag(record, &provider, max_len)?);
    }
    let ranked = rank_segments(&results, &vrep);
    save_ranked_segments(&ranked, out)
}

fn load_stoplist(path: &Path) -> Result<HashSet<String>> {
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(body
        .lines()
        .map(normalize_phrase)
        .filter(|l| !l.is_empty())
        .collect())
}

fn load_event_list(path: &Path) -> Result<Vec<String>> {
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut events = Vec::new();
    for line in body.lines() {
        let label = normalize_phrase(line);
        if !label.is_empty() && !events.contains(&label) {
            events.push(label);
        }
    }
    if events.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{}: empty event list",
            path.display()
        )));
    }
    Ok(events)
}

/// discover: ranked segments + event list + embeddings (+ stoplist) -> pool.
pub fn discover_stage(
    cfg: &PipelineConfig,
    segments: &Path,
    events: &Path,
    embeddings: &Path,
    stoplist: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let ranked = load_ranked_segments(segments)?;
    let event_labels = load_event_list(events)?;
    let (table, warnings) = load_embeddings(embeddings, KeyPolicy::Normalize)?;
    warn_all(&warnings);
    let stop = match stoplist {
        Some(p) => load_stoplist(p)?,
        None => HashSet::new(),
    };
    let mut neighbor_lists = Vec::with_capacity(event_labels.len());
    for label in &event_labels {
        let neighbors = nearest_neighbors(&table, label, cfg.k_neighbors)?;
        neighbor_lists.push((label.clone(), neighbors));
    }
    let pool = build_pool(
        &ranked,
        &neighbor_lists,
        &table,
        &stop,
        &PoolParams {
            min_score: cfg.min_score,
            max_concepts: cfg.max_concepts,
        },
    )?;
    save_pool(&pool, out)
}

/// cluster: pool + embeddings -> cluster assignment file.
pub fn cluster_stage(
    cfg: &PipelineConfig,
    pool_path: &Path,
    embeddings: &Path,
    out: &Path,
) -> Result<()> {
    let (table, warnings) = load_embeddings(embeddings, KeyPolicy::Normalize)?;
    warn_all(&warnings);
    let pool = load_pool(pool_path, &table)?;
    let model = cluster_pool(
        &pool,
        &KMeansParams {
            k: cfg.k_clusters,
            batch_size: cfg.kmeans_batch_size,
            iterations: cfg.kmeans_iterations,
            seed: derive_seed(cfg.seed, "cluster", &[]),
        },
    )?;
    save_cluster_assignment(model.assignment(), out)
}

/// Name of the index file the manifests stage writes inside its directory.
pub const MANIFEST_LIST: &str = "manifests.list";

fn manifest_file_name(index: usize, concept: &str) -> String {
    let slug: String = concept
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { '_' })
        .collect();
    format!("{index:05}__{slug}.tsv")
}

/// manifests: cluster assignment + concept-image manifest + features ->
/// one training-manifest file per concept plus an ordered index.
pub fn manifests_stage(
    cfg: &PipelineConfig,
    cluster: &Path,
    images_path: &Path,
    features_path: &Path,
    out_dir: &Path,
) -> Result<PathBuf> {
    let assignment = load_cluster_assignment(cluster)?;
    let features = load_features(features_path)?;
    let images = load_manifest(images_path, &features)?;

    let missing: Vec<&str> = assignment
        .iter()
        .map(|(phrase, _)| phrase)
        .filter(|phrase| !images.contains(phrase))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Resolution(format!(
            "{} pooled concept(s) have no images in {}: {}",
            missing.len(),
            images_path.display(),
            missing.join(", ")
        )));
    }

    // build everything first so a failure writes nothing
    let mut manifests = Vec::with_capacity(assignment.len());
    for (i, (concept, _)) in assignment.iter().enumerate() {
        let seed = derive_seed(cfg.seed, "manifest", &[i as u64]);
        manifests.push(build_training_manifest(
            concept,
            &assignment,
            &images,
            cfg.neg_ratio,
            seed,
        )?);
    }

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written: Vec<PathBuf> = Vec::new();
    let mut index_lines = String::new();
    let outcome = (|| -> Result<()> {
        for (i, manifest) in manifests.iter().enumerate() {
            let name = manifest_file_name(i, &manifest.concept);
            let path = out_dir.join(&name);
            save_training_manifest(manifest, &path)?;
            written.push(path);
            index_lines.push_str(&name);
            index_lines.push('\n');
        }
        write_atomic(&out_dir.join(MANIFEST_LIST), &index_lines)
    })();
    if outcome.is_err() {
        for p in &written {
            let _ = std::fs::remove_file(p);
        }
    }
    outcome.map(|()| out_dir.join(MANIFEST_LIST))
}

/// train-bank: pool order + training manifests + features -> bank file.
pub fn train_bank_stage(
    cfg: &PipelineConfig,
    pool_path: &Path,
    manifests_dir: &Path,
    features_path: &Path,
    out: &Path,
) -> Result<()> {
    let order = load_pool_order(pool_path)?;
    let features = load_features(features_path)?;
    let list_path = manifests_dir.join(MANIFEST_LIST);
    let list = std::fs::read_to_string(&list_path).map_err(|e| Error::io(&list_path, e))?;
    let mut manifests = HashMap::new();
    for name in list.lines().filter(|l| !l.trim().is_empty()) {
        let manifest = load_training_manifest(&manifests_dir.join(name))?;
        manifests.insert(manifest.concept.clone(), manifest);
    }
    let bank = train_bank_ordered(
        &order,
        &manifests,
        &features,
        &BankConfig {
            cv_grid: cfg.cv_grid.clone(),
            cv_folds: cfg.cv_folds,
            tol: cfg.tol,
            max_iter: cfg.max_iter,
            seed: cfg.seed,
        },
    )?;
    save_bank(&bank, out)
}

/// score: bank + features -> concept-score matrix file.
pub fn score_stage(bank_path: &Path, features_path: &Path, out: &Path) -> Result<()> {
    let bank = load_bank(bank_path)?;
    let features = load_features(features_path)?;
    let scored = score_matrix(&bank, &features)?;
    let matrix = scores_to_matrix(&bank, &scored)?;
    save_features(&matrix, out)
}

fn eval_config(cfg: &PipelineConfig) -> EvalConfig {
    EvalConfig {
        mode: cfg.mode,
        repetitions: cfg.reps,
        split_fraction: cfg.split,
        seed: cfg.seed,
        svm_c: cfg.svm_c,
        hinge: cfg.hinge,
        tol: cfg.tol,
        max_iter: cfg.max_iter,
    }
}

/// evaluate: features + labels -> report records file plus aligned table.
/// Returns the report for display.
pub fn evaluate_stage(
    cfg: &PipelineConfig,
    features_path: &Path,
    labels_path: &Path,
    representation: &str,
    out: &Path,
) -> Result<EvalReport> {
    let mut features = load_features(features_path)?;
    features.set_labels(load_labels(labels_path)?)?;
    let data = LabeledFeatureSet::new(features)?;
    let report = evaluate(&data, &eval_config(cfg), representation)?;
    save_reports(std::slice::from_ref(&report), out)?;
    write_atomic(
        &table_path(out),
        &render_table(std::slice::from_ref(&report)),
    )?;
    Ok(report)
}

/// compare: labels + named feature files -> one report per representation,
/// identical seeds, plus a side-by-side table.
pub fn compare_stage(
    cfg: &PipelineConfig,
    labels_path: &Path,
    representations: &[(String, PathBuf)],
    out: &Path,
) -> Result<Vec<EvalReport>> {
    let labels = load_labels(labels_path)?;
    let mut loaded = Vec::with_capacity(representations.len());
    for (name, path) in representations {
        loaded.push((name.clone(), load_features(path)?));
    }
    let reports = compare_representations(&labels, &loaded, &eval_config(cfg))?;
    write_atomic(out, &render_report_records(&reports))?;
    write_atomic(&table_path(out), &render_table(&reports))?;
    Ok(reports)
}

/// The human-readable table sits next to the records file.
pub fn table_path(records: &Path) -> PathBuf {
    let mut name = records
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    name.push_str(".txt");
    records.with_file_name(name)
}
