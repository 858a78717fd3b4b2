//! Deterministic synthetic fixture: a small corpus with known structure for
//! exercising the whole pipeline end to end.
//!
//! Six events, three concepts each. Concept phrases are discoverable two
//! ways: two-word phrases appear in the tag corpus with strong bigram
//! statistics (segment route) and every concept sits next to its event
//! label in the synthetic embedding space (neighbor route).
//!
//! Image features have three blocks: an event-anchor block (one direction
//! per event), a mode block (one direction per concept slot, larger than
//! the anchor), and noise. Each concept's image cloud leans on one mode;
//! evaluation images cycle through modes, so every event class is
//! multimodal. A one-versus-one SVM trained on a single raw feature pair
//! latches onto the dominant mode axis and transfers poorly, while concept
//! classifiers, whose negatives exclude same-cluster concepts, can settle
//! on the anchor direction and generalize across modes. That is the
//! qualitative behavior the acceptance suite checks.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use evcon_core::error::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const EVENTS: [&str; 6] = ["regatta", "bonfire", "parade", "eclipse", "harvest", "derby"];

/// Two segment-route concepts per event.
const SEGMENT_CONCEPTS: [[&str; 2]; 6] = [
    ["sail boat", "crew oars"],
    ["camp flame", "night spark"],
    ["brass band", "street float"],
    ["solar corona", "shadow disc"],
    ["grain wagon", "hay bale"],
    ["track gate", "rider silks"],
];

/// One neighbor-route concept per event.
const NEIGHBOR_CONCEPTS: [&str; 6] = ["spinnaker", "kindling", "confetti", "umbra", "scythe", "jockey"];

/// Filler unigrams, three per event; they score far below min_score.
const FILLERS: [[&str; 3]; 6] = [
    ["harborline", "dockside", "windday"],
    ["dusksky", "campout", "logpile"],
    ["sidewalk", "crowdrow", "towncenter"],
    ["skywatch", "nightcold", "telescope"],
    ["fieldrow", "barnside", "autumnair"],
    ["grandstand", "betslip", "turfside"],
];

/// A sticky, visually coherent junk phrase present in every event's tags;
/// the stoplist is what keeps it out of the pool.
const STOP_PHRASE: &str = "blurry photo";

/// Unrelated phrases padding the visual-rep table so its median stays
/// meaningful for concepts the table does not cover.
const VREP_PADDING: [&str; 15] = [
    "beacon light",
    "stone arch",
    "paper lantern",
    "glass tower",
    "river bend",
    "iron bridge",
    "clock face",
    "market stall",
    "tile roof",
    "pine ridge",
    "sand dune",
    "salt flat",
    "moss wall",
    "chalk cliff",
    "fog bank",
];

pub const EMBED_DIM: usize = 8;
pub const FEATURE_DIM: usize = 12;
const ANCHOR_SCALE: f64 = 3.0;
const MODE_SCALE: f64 = 8.0;
const CLOUD_SIGMA: f64 = 0.8;
const IMAGES_PER_CONCEPT: usize = 40;
const EVAL_PER_EVENT: usize = 60;
const TAGS_PER_EVENT: usize = 24;

#[derive(Debug, Clone)]
pub struct FixtureParams {
    /// Seed for generating the data files (independent of the pipeline's
    /// master seed, which lives in the written config).
    pub data_seed: u64,
    /// Master seed written into the generated config.
    pub pipeline_seed: u64,
}

impl Default for FixtureParams {
    fn default() -> Self {
        FixtureParams {
            data_seed: 20240601,
            pipeline_seed: 42,
        }
    }
}

pub struct FixturePaths {
    pub dir: PathBuf,
    pub config: PathBuf,
    pub eval_features: PathBuf,
    pub eval_labels: PathBuf,
}

struct Gauss {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl Gauss {
    fn new(seed: u64) -> Self {
        Gauss {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Box-Muller standard normal.
    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1: f64 = self.rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = self.rng.gen_range(0.0..1.0);
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

fn concept_phrases() -> Vec<(usize, String)> {
    let mut out = Vec::new();
    for (event_idx, pair) in SEGMENT_CONCEPTS.iter().enumerate() {
        for phrase in pair {
            out.push((event_idx, phrase.to_string()));
        }
    }
    for (event_idx, word) in NEIGHBOR_CONCEPTS.iter().enumerate() {
        out.push((event_idx, word.to_string()));
    }
    out
}

/// Mode slot for the n-th image of a concept: 70% its own slot, 15% each of
/// the other two.
fn image_mode(slot: usize, n: usize) -> usize {
    match n % 20 {
        14..=16 => (slot + 1) % 3,
        17..=19 => (slot + 2) % 3,
        _ => slot,
    }
}

fn feature_vector(event_idx: usize, mode: usize, gauss: &mut Gauss) -> Vec<f64> {
    let mut v = vec![0.0; FEATURE_DIM];
    v[event_idx] = ANCHOR_SCALE;
    v[6 + mode] = MODE_SCALE;
    for x in v.iter_mut() {
        *x += CLOUD_SIGMA * gauss.next();
    }
    v
}

fn write(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

/// Generates every input file plus a ready-to-run config into `dir`.
pub fn generate(dir: &Path, params: &FixtureParams) -> Result<FixturePaths> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut gauss = Gauss::new(params.data_seed);

    // --- embeddings ---------------------------------------------------
    // labels and concepts sit on per-event anchors; fillers and the junk
    // phrase live in the noise block so they are nobody's neighbor.
    let mut embed_entries: Vec<(String, Vec<f64>)> = Vec::new();
    let anchor = |event_idx: usize, scale: f64, gauss: &mut Gauss| {
        let mut v = vec![0.0; EMBED_DIM];
        v[event_idx] = 4.0 * scale;
        for x in v.iter_mut() {
            *x += 0.05 * gauss.next();
        }
        v
    };
    for (i, label) in EVENTS.iter().enumerate() {
        embed_entries.push((label.to_string(), anchor(i, 1.0, &mut gauss)));
    }
    for (event_idx, phrase) in concept_phrases() {
        embed_entries.push((phrase, anchor(event_idx, 0.95, &mut gauss)));
    }
    let noise_vec = |gauss: &mut Gauss| {
        let mut v = vec![0.0; EMBED_DIM];
        v[6] = 3.0 + 0.2 * gauss.next();
        v[7] = 3.0 * gauss.next();
        v
    };
    for event_fillers in FILLERS.iter() {
        for word in event_fillers {
            embed_entries.push((word.to_string(), noise_vec(&mut gauss)));
        }
    }
    embed_entries.push((STOP_PHRASE.to_string(), noise_vec(&mut gauss)));
    let mut embeddings = String::new();
    let _ = writeln!(embeddings, "{} {}", embed_entries.len(), EMBED_DIM);
    for (key, v) in &embed_entries {
        embeddings.push_str(&key.replace(' ', "_"));
        for x in v {
            let _ = write!(embeddings, " {x}");
        }
        embeddings.push('\n');
    }
    let embeddings_path = dir.join("embeddings.txt");
    write(&embeddings_path, &embeddings)?;

    // --- tag corpus ----------------------------------------------------
    let mut tags = String::new();
    for (i, label) in EVENTS.iter().enumerate() {
        let [p1, p2] = SEGMENT_CONCEPTS[i];
        let (p1a, p1b) = p1.split_once(' ').expect("two-word phrase");
        let (p2a, p2b) = p2.split_once(' ').expect("two-word phrase");
        let fillers = FILLERS[i];
        for n in 0..TAGS_PER_EVENT {
            let words: Vec<&str> = match n % 4 {
                0 => vec![p1a, p1b, fillers[0]],
                1 => vec![p2a, p2b, fillers[1]],
                2 => vec![p1a, p1b, p2a, p2b],
                _ => vec![fillers[2], p1a, p1b, "blurry", "photo"],
            };
            let quoted: Vec<String> = words.iter().map(|w| format!("\"{w}\"")).collect();
            let _ = writeln!(
                tags,
                "{{\"event\": \"{label}\", \"tags\": [{}]}}",
                quoted.join(", ")
            );
        }
    }
    let tags_path = dir.join("tags.jsonl");
    write(&tags_path, &tags)?;

    // --- n-gram counts ---------------------------------------------------
    let mut ngrams = String::new();
    for pair in SEGMENT_CONCEPTS.iter() {
        for phrase in pair {
            let _ = writeln!(ngrams, "{phrase}\t800");
        }
    }
    let _ = writeln!(ngrams, "{STOP_PHRASE}\t900");
    let mut unigrams: Vec<&str> = Vec::new();
    for pair in SEGMENT_CONCEPTS.iter() {
        for phrase in pair {
            unigrams.extend(phrase.split(' '));
        }
    }
    for word in unigrams {
        let _ = writeln!(ngrams, "{word}\t600");
    }
    for event_fillers in FILLERS.iter() {
        for word in event_fillers {
            let _ = writeln!(ngrams, "{word}\t500");
        }
    }
    let _ = writeln!(ngrams, "blurry\t700");
    let _ = writeln!(ngrams, "photo\t700");
    // a sprinkling of weak crossing bigrams
    for (i, pair) in SEGMENT_CONCEPTS.iter().enumerate() {
        let second_word = pair[0].split(' ').nth(1).expect("two-word phrase");
        let _ = writeln!(ngrams, "{} {}\t5", second_word, FILLERS[i][0]);
    }
    let ngrams_path = dir.join("ngrams.tsv");
    write(&ngrams_path, &ngrams)?;

    // --- visual representativeness --------------------------------------
    // two concept phrases are deliberately absent and take the median.
    let omitted = ["hay bale", "rider silks"];
    let mut vrep = String::new();
    for pair in SEGMENT_CONCEPTS.iter() {
        for phrase in pair {
            if !omitted.contains(phrase) {
                let _ = writeln!(vrep, "{phrase}\t0.9");
            }
        }
    }
    let _ = writeln!(vrep, "{STOP_PHRASE}\t0.85");
    for event_fillers in FILLERS.iter() {
        for word in event_fillers {
            let _ = writeln!(vrep, "{word}\t0.05");
        }
    }
    for phrase in VREP_PADDING {
        let _ = writeln!(vrep, "{phrase}\t0.7");
    }
    let vrep_path = dir.join("vrep.tsv");
    write(&vrep_path, &vrep)?;

    // --- stoplist, events -------------------------------------------------
    let stoplist_path = dir.join("stoplist.txt");
    write(&stoplist_path, &format!("{STOP_PHRASE}\n"))?;
    let events_path = dir.join("events.txt");
    write(&events_path, &(EVENTS.join("\n") + "\n"))?;

    // --- concept images: manifest + features -----------------------------
    let mut manifest = String::new();
    let mut features = String::new();
    let mut feature_rows = 0usize;
    let mut feature_body = String::new();
    let all_concepts: Vec<(usize, usize, String)> = {
        let mut v = Vec::new();
        for (event_idx, pair) in SEGMENT_CONCEPTS.iter().enumerate() {
            for (slot, phrase) in pair.iter().enumerate() {
                v.push((event_idx, slot, phrase.to_string()));
            }
        }
        for (event_idx, word) in NEIGHBOR_CONCEPTS.iter().enumerate() {
            v.push((event_idx, 2, word.to_string()));
        }
        v
    };
    for (event_idx, slot, phrase) in &all_concepts {
        let mut ids = Vec::with_capacity(IMAGES_PER_CONCEPT);
        for n in 0..IMAGES_PER_CONCEPT {
            let id = format!("img_{event_idx}_{slot}_{n}");
            let mode = image_mode(*slot, n);
            let v = feature_vector(*event_idx, mode, &mut gauss);
            feature_body.push_str(&id);
            for x in &v {
                let _ = write!(feature_body, " {x}");
            }
            feature_body.push('\n');
            feature_rows += 1;
            ids.push(id);
        }
        let _ = writeln!(manifest, "{phrase}\t{}", ids.join(","));
    }
    let _ = writeln!(features, "{feature_rows} {FEATURE_DIM}");
    features.push_str(&feature_body);
    let manifest_path = dir.join("concept_images.tsv");
    write(&manifest_path, &manifest)?;
    let features_path = dir.join("features.txt");
    write(&features_path, &features)?;

    // --- evaluation set ---------------------------------------------------
    let mut eval_features = String::new();
    let _ = writeln!(
        eval_features,
        "{} {FEATURE_DIM}",
        EVENTS.len() * EVAL_PER_EVENT
    );
    let mut eval_labels = String::new();
    for (event_idx, label) in EVENTS.iter().enumerate() {
        for n in 0..EVAL_PER_EVENT {
            let id = format!("ev_{event_idx}_{n}");
            let mode = n % 3;
            let v = feature_vector(event_idx, mode, &mut gauss);
            eval_features.push_str(&id);
            for x in &v {
                let _ = write!(eval_features, " {x}");
            }
            eval_features.push('\n');
            let _ = writeln!(eval_labels, "{id}\t{label}");
        }
    }
    let eval_features_path = dir.join("eval_features.txt");
    write(&eval_features_path, &eval_features)?;
    let eval_labels_path = dir.join("eval_labels.tsv");
    write(&eval_labels_path, &eval_labels)?;

    // --- config -----------------------------------------------------------
    let config = format!(
        "# synthetic fixture configuration\n\
         embeddings = embeddings.txt\n\
         tags = tags.jsonl\n\
         ngrams = ngrams.tsv\n\
         visual_rep = vrep.tsv\n\
         events = events.txt\n\
         stoplist = stoplist.txt\n\
         concept_images = concept_images.tsv\n\
         features = features.txt\n\
         eval_features = eval_features.txt\n\
         eval_labels = eval_labels.tsv\n\
         out_dir = out\n\
         max_len = 2\n\
         min_score = 1\n\
         k_neighbors = 3\n\
         k_clusters = 6\n\
         kmeans_batch_size = 16\n\
         kmeans_iterations = 30\n\
         neg_ratio = 10\n\
         cv_folds = 5\n\
         cv_grid = 0.01,0.1,1,10\n\
         max_iter = 400\n\
         reps = 5\n\
         split = 0.7\n\
         mode = one-shot\n\
         seed = {}\n",
        params.pipeline_seed
    );
    let config_path = dir.join("config.evcon");
    write(&config_path, &config)?;

    Ok(FixturePaths {
        dir: dir.to_path_buf(),
        config: config_path,
        eval_features: eval_features_path,
        eval_labels: eval_labels_path,
    })
}
