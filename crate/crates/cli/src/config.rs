//! Engine configuration: a single key = value text file, with every value
//! overridable by a CLI flag. Unknown keys are rejected so typos surface
//! immediately.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use sellrank::simrank::PriceDirection;
use sellrank::textprep::load_stopwords;
use sellrank::topicmodel::{FoldInOptions, ModelKind};

use crate::CliError;

#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub data_dir: PathBuf,
    pub store_path: Option<PathBuf>,
    pub vocab_path: Option<PathBuf>,
    pub model_path: Option<PathBuf>,
    pub cache_path: Option<PathBuf>,
    pub forest_path: Option<PathBuf>,
    pub stopword_path: Option<PathBuf>,
    pub min_doc_freq: usize,
    pub model_kind: ModelKind,
    pub n_topics: usize,
    pub nmf_max_iters: usize,
    pub nmf_tol: f64,
    /// None applies the 50/k convention.
    pub lda_alpha: Option<f64>,
    pub lda_eta: f64,
    pub lda_sweeps: usize,
    pub lda_burn_in: usize,
    pub similarity_threshold: f64,
    pub price_direction: PriceDirection,
    pub n_trees: usize,
    /// None means floor(sqrt(feature count)).
    pub m_features: Option<usize>,
    pub min_leaf: usize,
    pub fold_max_iters: usize,
    pub fold_tol: f64,
    pub fold_sweeps: usize,
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            data_dir: PathBuf::from("data"),
            store_path: None,
            vocab_path: None,
            model_path: None,
            cache_path: None,
            forest_path: None,
            stopword_path: None,
            min_doc_freq: 2,
            model_kind: ModelKind::Nmf,
            n_topics: 50,
            nmf_max_iters: 200,
            nmf_tol: 1e-4,
            lda_alpha: None,
            lda_eta: 0.01,
            lda_sweeps: 200,
            lda_burn_in: 100,
            similarity_threshold: 0.5,
            price_direction: PriceDirection::Descending,
            n_trees: 100,
            m_features: None,
            min_leaf: 2,
            fold_max_iters: 100,
            fold_tol: 1e-6,
            fold_sweeps: 50,
            seed: 0,
        }
    }
}

impl EngineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
        let mut config = EngineConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::input(format!(
                    "config {} line {}: expected key = value",
                    path.display(),
                    lineno + 1
                ))
            })?;
            config.set(key.trim(), value.trim()).map_err(|msg| {
                CliError::input(format!(
                    "config {} line {}: {msg}",
                    path.display(),
                    lineno + 1
                ))
            })?;
        }
        Ok(config)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("bad value for {key}: {value:?}"))
        }
        match key {
            "data_dir" => self.data_dir = PathBuf::from(value),
            "store_path" => self.store_path = Some(PathBuf::from(value)),
            "vocab_path" => self.vocab_path = Some(PathBuf::from(value)),
            "model_path" => self.model_path = Some(PathBuf::from(value)),
            "cache_path" => self.cache_path = Some(PathBuf::from(value)),
            "forest_path" => self.forest_path = Some(PathBuf::from(value)),
            "stopword_path" => self.stopword_path = Some(PathBuf::from(value)),
            "min_doc_freq" => self.min_doc_freq = parse(key, value)?,
            "model_kind" => {
                self.model_kind = value
                    .parse()
                    .map_err(|_| format!("bad value for model_kind: {value:?}"))?
            }
            "n_topics" => self.n_topics = parse(key, value)?,
            "nmf_max_iters" => self.nmf_max_iters = parse(key, value)?,
            "nmf_tol" => self.nmf_tol = parse(key, value)?,
            "lda_alpha" => self.lda_alpha = Some(parse(key, value)?),
            "lda_eta" => self.lda_eta = parse(key, value)?,
            "lda_sweeps" => self.lda_sweeps = parse(key, value)?,
            "lda_burn_in" => self.lda_burn_in = parse(key, value)?,
            "similarity_threshold" => self.similarity_threshold = parse(key, value)?,
            "price_direction" => {
                self.price_direction = match value {
                    "descending" => PriceDirection::Descending,
                    "ascending" => PriceDirection::Ascending,
                    other => return Err(format!("bad price_direction {other:?}")),
                }
            }
            "n_trees" => self.n_trees = parse(key, value)?,
            "m_features" => self.m_features = Some(parse(key, value)?),
            "min_leaf" => self.min_leaf = parse(key, value)?,
            "fold_max_iters" => self.fold_max_iters = parse(key, value)?,
            "fold_tol" => self.fold_tol = parse(key, value)?,
            "fold_sweeps" => self.fold_sweeps = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            other => return Err(format!("unknown config key {other:?}")),
        }
        Ok(())
    }

    pub fn store_path(&self) -> PathBuf {
        self.store_path
            .clone()
            .unwrap_or_else(|| self.data_dir.join("store.jsonl"))
    }

    pub fn vocab_path(&self) -> PathBuf {
        self.vocab_path
            .clone()
            .unwrap_or_else(|| self.data_dir.join("vocab.tsv"))
    }

    pub fn model_path(&self) -> PathBuf {
        self.model_path
            .clone()
            .unwrap_or_else(|| self.data_dir.join("model.txt"))
    }

    pub fn cache_path(&self) -> PathBuf {
        self.cache_path
            .clone()
            .unwrap_or_else(|| self.data_dir.join("topic_cache.tsv"))
    }

    pub fn forest_path(&self) -> PathBuf {
        self.forest_path
            .clone()
            .unwrap_or_else(|| self.data_dir.join("forest.json"))
    }

    pub fn stopwords(&self) -> Result<HashSet<String>, CliError> {
        match &self.stopword_path {
            None => Ok(HashSet::new()),
            Some(path) => load_stopwords(path).map_err(|e| {
                CliError::input(format!("cannot read stopwords {}: {e}", path.display()))
            }),
        }
    }

    pub fn fold_in_options(&self) -> FoldInOptions {
        FoldInOptions {
            max_iters: self.fold_max_iters,
            tol: self.fold_tol,
            sweeps: self.fold_sweeps,
            seed: self.seed,
        }
    }
}
