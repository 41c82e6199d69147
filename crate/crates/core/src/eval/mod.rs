//! Evaluation harness: the NDPM metric, synthetic-corpus generation, and the
//! topic-count / tree-count sweep experiments.

mod ndpm;
mod synth;

pub use ndpm::{ndpm, ndpm_on_common, NdpmResult, PreferenceJudgment};
pub use synth::{
    dense_ranks, derive_judgments, generate_synthetic, GroundTruth, JudgmentKind, PriceProfile,
    QueryItem, SyntheticData, SyntheticSpec,
};

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{de::DeserializeOwned, Serialize};

use crate::simrank::{
    rank_by_criterion, Criterion, PriceDirection, Ranking, SimilarityQuery, TopicCache,
};
use crate::store::{RawRecord, StoreCatalog};
use crate::textprep::{
    build_matrix, build_vocabulary, select_features, tfidf_vector, token_ids, tokenize, Vocabulary,
};
use crate::topicmodel::{lda_train, nmf_train, FoldInOptions, LdaConfig, Model, NmfConfig};
use crate::voterank::{build_rows, train_forest, ForestConfig};
use crate::{Error, Result};

/// Text representation under evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepModelKind {
    Nmf,
    Lda,
    /// tf-idf vectors with document-frequency feature selection, no topic
    /// training; the sweep parameter is the retained feature count.
    Bow,
}

/// Knobs shared by the sweep experiments.
#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub criterion: Criterion,
    pub price_direction: PriceDirection,
    pub similarity_threshold: f64,
    pub min_doc_freq: usize,
    pub stopwords: HashSet<String>,
    pub nmf_max_iters: usize,
    pub nmf_tol: f64,
    /// None means the 50/k convention at each swept k.
    pub lda_alpha: Option<f64>,
    pub lda_eta: f64,
    pub lda_sweeps: usize,
    pub lda_burn_in: usize,
    pub fold_in: FoldInOptions,
    pub forest_min_leaf: usize,
    pub forest_m: Option<usize>,
    pub seed: u64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            criterion: Criterion::Quantity,
            price_direction: PriceDirection::Descending,
            similarity_threshold: 0.5,
            min_doc_freq: 2,
            stopwords: HashSet::new(),
            nmf_max_iters: 200,
            nmf_tol: 1e-4,
            lda_alpha: None,
            lda_eta: 0.01,
            lda_sweeps: 200,
            lda_burn_in: 100,
            fold_in: FoldInOptions::default(),
            forest_min_leaf: 2,
            forest_m: None,
            seed: 0,
        }
    }
}

/// One sweep table row: the swept parameter and the mean NDPM over the
/// queries that produced a defined score.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: usize,
    pub mean_ndpm: f64,
    pub n_queries: usize,
    pub n_skipped: usize,
}

/// Renders sweep rows as CSV with the standard header.
pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("param,mean_ndpm,n_queries,n_skipped\n");
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            row.param, row.mean_ndpm, row.n_queries, row.n_skipped
        );
    }
    out
}

fn tokenized_corpus(store: &StoreCatalog) -> Vec<Vec<String>> {
    store
        .all_docs()
        .iter()
        .map(|d| tokenize(&d.description))
        .collect()
}

/// Per-query similarity rankings for a single swept parameter: trains the
/// requested representation on the store, folds each query in, and ranks by
/// the configured criterion.
pub fn topic_rankings(
    store: &StoreCatalog,
    queries: &[QueryItem],
    kind: SweepModelKind,
    param: usize,
    opts: &SweepOptions,
) -> Result<Vec<(String, Ranking)>> {
    let corpus = tokenized_corpus(store);
    let vocab = build_vocabulary(&corpus, &opts.stopwords, opts.min_doc_freq)?;
    if vocab.is_empty() {
        return Err(Error::InvalidParameter(
            "vocabulary is empty after filtering; lower min_doc_freq".into(),
        ));
    }

    enum Rep {
        Topic(Box<Model>, Vocabulary),
        Bow(Vocabulary),
    }
    let (rep, cache) = match kind {
        SweepModelKind::Nmf => {
            let matrix = build_matrix(&corpus, &vocab);
            let cfg = NmfConfig {
                k: param,
                max_iters: opts.nmf_max_iters,
                tol: opts.nmf_tol,
                seed: opts.seed,
            };
            let model = Model::Nmf(nmf_train(&matrix, &cfg)?);
            let cache = TopicCache::from_model(store, &model, "sweep")?;
            (Rep::Topic(Box::new(model), vocab), cache)
        }
        SweepModelKind::Lda => {
            let ids: Vec<Vec<usize>> = corpus.iter().map(|t| token_ids(t, &vocab)).collect();
            let cfg = LdaConfig {
                k: param,
                alpha: opts.lda_alpha.unwrap_or(50.0 / param.max(1) as f64),
                eta: opts.lda_eta,
                n_sweeps: opts.lda_sweeps,
                burn_in: opts.lda_burn_in,
                seed: opts.seed,
            };
            let model = Model::Lda(lda_train(&ids, vocab.len(), &cfg)?);
            let cache = TopicCache::from_model(store, &model, "sweep")?;
            (Rep::Topic(Box::new(model), vocab), cache)
        }
        SweepModelKind::Bow => {
            let matrix = build_matrix(&corpus, &vocab);
            let k = param.min(vocab.len());
            let (reduced, reduced_vocab) = select_features(&matrix, &vocab, k)?;
            let cache = TopicCache::from_matrix(store, &reduced, "sweep")?;
            (Rep::Bow(reduced_vocab), cache)
        }
    };

    let mut rankings = Vec::with_capacity(queries.len());
    for query in queries {
        let tokens = tokenize(&query.description);
        let topics = match &rep {
            Rep::Topic(model, vocab) => model
                .fold_in(&tokens, vocab, &opts.fold_in)
                .weights()
                .to_vec(),
            Rep::Bow(vocab) => tfidf_vector(&tokens, vocab).to_dense(),
        };
        let ranking = rank_by_criterion(
            store,
            &cache,
            &SimilarityQuery {
                topics,
                category: query.category.clone(),
                criterion: opts.criterion,
                similarity_threshold: opts.similarity_threshold,
                price_direction: opts.price_direction,
            },
        )?;
        rankings.push((query.id.clone(), ranking));
    }
    Ok(rankings)
}

/// Per-query vote rankings from a forest of `n_trees` trained on the model's
/// topic features plus category and price.
pub fn vote_rankings(
    store: &StoreCatalog,
    model: &Model,
    vocab: &Vocabulary,
    queries: &[QueryItem],
    n_trees: usize,
    opts: &SweepOptions,
) -> Result<Vec<(String, Ranking)>> {
    let cache = TopicCache::from_model(store, model, "sweep")?;
    let (schema, rows) = build_rows(store, &cache)?;
    let forest = train_forest(
        &schema,
        &rows,
        &ForestConfig {
            n_trees,
            m: opts.forest_m,
            min_leaf: opts.forest_min_leaf,
            max_depth: None,
            seed: opts.seed,
        },
    )?;
    let mut rankings = Vec::with_capacity(queries.len());
    for query in queries {
        let tokens = tokenize(&query.description);
        let topics = model.fold_in(&tokens, vocab, &opts.fold_in);
        let votes = forest.vote_rank(topics.weights(), &query.category, query.price)?;
        rankings.push((query.id.clone(), votes.to_ranking()));
    }
    Ok(rankings)
}

fn score_rankings(
    rankings: &[(String, Ranking)],
    judgments: &[PreferenceJudgment],
) -> SweepRowBody {
    let by_id: HashMap<&str, &PreferenceJudgment> =
        judgments.iter().map(|j| (j.item_id.as_str(), j)).collect();
    let mut total = 0.0;
    let mut n_queries = 0usize;
    let mut n_skipped = 0usize;
    for (id, ranking) in rankings {
        match by_id
            .get(id.as_str())
            .and_then(|j| ndpm_on_common(ranking, j))
        {
            Some(result) => {
                total += result.score;
                n_queries += 1;
            }
            None => n_skipped += 1,
        }
    }
    let mean = if n_queries > 0 {
        total / n_queries as f64
    } else {
        f64::NAN
    };
    SweepRowBody {
        mean_ndpm: mean,
        n_queries,
        n_skipped,
    }
}

struct SweepRowBody {
    mean_ndpm: f64,
    n_queries: usize,
    n_skipped: usize,
}

/// Topic-count sweep (or feature-count sweep for the BOW baseline): one row
/// per requested parameter value.
pub fn sweep_topics(
    store: &StoreCatalog,
    queries: &[QueryItem],
    judgments: &[PreferenceJudgment],
    kind: SweepModelKind,
    params: &[usize],
    opts: &SweepOptions,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(params.len());
    for &param in params {
        let rankings = topic_rankings(store, queries, kind, param, opts)?;
        let body = score_rankings(&rankings, judgments);
        rows.push(SweepRow {
            param,
            mean_ndpm: body.mean_ndpm,
            n_queries: body.n_queries,
            n_skipped: body.n_skipped,
        });
    }
    Ok(rows)
}

/// Tree-count sweep over vote-based rankings: one row per forest size.
pub fn sweep_trees(
    store: &StoreCatalog,
    model: &Model,
    vocab: &Vocabulary,
    queries: &[QueryItem],
    judgments: &[PreferenceJudgment],
    tree_counts: &[usize],
    opts: &SweepOptions,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(tree_counts.len());
    for &n_trees in tree_counts {
        let rankings = vote_rankings(store, model, vocab, queries, n_trees, opts)?;
        let body = score_rankings(&rankings, judgments);
        rows.push(SweepRow {
            param: n_trees,
            mean_ndpm: body.mean_ndpm,
            n_queries: body.n_queries,
            n_skipped: body.n_skipped,
        });
    }
    Ok(rows)
}

/// Converts a system ranking into a judgment (used to bootstrap reference
/// files from known-good runs and in self-agreement tests). Adjacent equal
/// scores become tied ranks.
pub fn ranking_to_judgment(item_id: &str, ranking: &Ranking) -> PreferenceJudgment {
    let mut order = Vec::with_capacity(ranking.entries.len());
    let mut rank = 0u32;
    let mut last: Option<f64> = None;
    for entry in &ranking.entries {
        if last != Some(entry.score) {
            rank += 1;
            last = Some(entry.score);
        }
        order.push((entry.website.clone(), rank));
    }
    PreferenceJudgment {
        item_id: item_id.to_owned(),
        reference_order: order,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Judgment files are JSON lists of [`PreferenceJudgment`] records.
pub fn save_judgments(path: &Path, judgments: &[PreferenceJudgment]) -> Result<()> {
    write_json(path, &judgments)
}

pub fn load_judgments(path: &Path) -> Result<Vec<PreferenceJudgment>> {
    read_json(path)
}

/// Query files are JSON lists of [`QueryItem`] records.
pub fn save_queries(path: &Path, queries: &[QueryItem]) -> Result<()> {
    write_json(path, &queries)
}

pub fn load_queries(path: &Path) -> Result<Vec<QueryItem>> {
    read_json(path)
}

pub fn save_ground_truth(path: &Path, truth: &GroundTruth) -> Result<()> {
    write_json(path, truth)
}

pub fn load_ground_truth(path: &Path) -> Result<GroundTruth> {
    read_json(path)
}

pub fn load_synthetic_spec(path: &Path) -> Result<SyntheticSpec> {
    read_json(path)
}

pub fn save_synthetic_spec(path: &Path, spec: &SyntheticSpec) -> Result<()> {
    write_json(path, spec)
}

/// Renders records as the ingestion JSONL format.
pub fn records_to_jsonl(records: &[RawRecord]) -> String {
    let mut out = String::new();
    for record in records {
        let _ = writeln!(
            out,
            "{}",
            serde_json::to_string(record).expect("record serializes")
        );
    }
    out
}
