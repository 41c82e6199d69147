//! Similarity-based website ranking: cosine similarity in topic space,
//! inter-quartile average price, and single-criterion rankings (quantity or
//! average price of similar items per website).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::store::StoreCatalog;
use crate::textprep::TermDocMatrix;
use crate::topicmodel::Model;
use crate::{Error, Result};

/// Cosine similarity of two nonnegative vectors, in [0, 1].
///
/// A zero vector is maximally dissimilar to everything (similarity 0) rather
/// than NaN. The result is clamped to [0, 1] against rounding drift.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(0.0, 1.0))
}

/// Mean of the prices between the first and third quartiles (inclusive).
///
/// Quartiles use type-7 linear interpolation: index h = (n−1)·p, linear
/// between adjacent order statistics. Lists shorter than 4 fall back to the
/// plain mean. Empty input signals "no similar items".
pub fn iqr_mean(prices: &[f64]) -> Result<f64> {
    if prices.is_empty() {
        return Err(Error::NoSimilarItems);
    }
    if prices.len() < 4 {
        return Ok(prices.iter().sum::<f64>() / prices.len() as f64);
    }
    let mut sorted = prices.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_type7(&sorted, 0.25);
    let q3 = quantile_type7(&sorted, 0.75);
    let mid: Vec<f64> = sorted
        .iter()
        .copied()
        .filter(|&x| x >= q1 && x <= q3)
        .collect();
    // q1 <= q3 and n >= 4 guarantee at least one value in range
    Ok(mid.iter().sum::<f64>() / mid.len() as f64)
}

fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || lo + 1 >= sorted.len() {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Ranking criterion for [`rank_by_criterion`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Quantity,
    AveragePrice,
}

impl Criterion {
    pub fn label(&self) -> &'static str {
        match self {
            Criterion::Quantity => "quantity",
            Criterion::AveragePrice => "average_price",
        }
    }
}

/// Whether higher or lower average price ranks first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriceDirection {
    #[default]
    Descending,
    Ascending,
}

/// A ranking query: the item's topic distribution plus category and criterion.
#[derive(Debug, Clone)]
pub struct SimilarityQuery {
    pub topics: Vec<f64>,
    pub category: String,
    pub criterion: Criterion,
    /// Cosine cut for "similar" items, in [0, 1].
    pub similarity_threshold: f64,
    pub price_direction: PriceDirection,
}

/// One stored document passing the similarity cut.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarItem {
    pub doc_id: u64,
    pub similarity: f64,
    pub price: f64,
}

/// An ordered website ranking. Entries are best-first; equal scores mean the
/// ranking is indifferent between those websites (ties broken alphabetically
/// for deterministic output). `no_data` lists websites that could not be
/// scored (no similar items under a price criterion).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub criterion: String,
    pub entries: Vec<RankEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub no_data: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub website: String,
    pub score: f64,
}

impl Ranking {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("ranking serializes")
    }

    pub fn websites(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.website.as_str())
    }
}

/// Topic vectors of stored documents, computed once after training and keyed
/// by doc id. The fingerprint ties a cache to the model (or feature matrix)
/// that produced it; loaders compare fingerprints before serving queries.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicCache {
    k: usize,
    fingerprint: String,
    entries: BTreeMap<u64, Vec<f64>>,
}

impl TopicCache {
    pub fn new(k: usize, fingerprint: impl Into<String>) -> Self {
        TopicCache {
            k,
            fingerprint: fingerprint.into(),
            entries: BTreeMap::new(),
        }
    }

    /// Fills the cache from a trained model's own document factors (H columns
    /// or theta rows), which align with the store's ascending doc-id order.
    pub fn from_model(
        store: &StoreCatalog,
        model: &Model,
        fingerprint: impl Into<String>,
    ) -> Result<Self> {
        if model.n_docs() != store.doc_count() {
            return Err(Error::DimensionMismatch {
                expected: store.doc_count(),
                actual: model.n_docs(),
            });
        }
        let mut cache = TopicCache::new(model.k(), fingerprint);
        for (j, doc) in store.all_docs().iter().enumerate() {
            cache.insert(doc.doc_id, model.doc_topics(j).weights().to_vec())?;
        }
        Ok(cache)
    }

    /// Fills the cache from dense tf-idf columns (the BOW baseline path).
    pub fn from_matrix(
        store: &StoreCatalog,
        matrix: &TermDocMatrix,
        fingerprint: impl Into<String>,
    ) -> Result<Self> {
        if matrix.n_docs() != store.doc_count() {
            return Err(Error::DimensionMismatch {
                expected: store.doc_count(),
                actual: matrix.n_docs(),
            });
        }
        let mut cache = TopicCache::new(matrix.n_terms, fingerprint);
        for (j, doc) in store.all_docs().iter().enumerate() {
            cache.insert(doc.doc_id, matrix.columns[j].to_dense())?;
        }
        Ok(cache)
    }

    pub fn insert(&mut self, doc_id: u64, topics: Vec<f64>) -> Result<()> {
        if topics.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                actual: topics.len(),
            });
        }
        self.entries.insert(doc_id, topics);
        Ok(())
    }

    pub fn get(&self, doc_id: u64) -> Option<&[f64]> {
        self.entries.get(&doc_id).map(Vec::as_slice)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn to_snapshot(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "sellrank-topic-cache v1");
        let _ = writeln!(out, "fingerprint {}", self.fingerprint);
        let _ = writeln!(out, "k {}", self.k);
        let _ = writeln!(out, "n {}", self.entries.len());
        for (doc_id, topics) in &self.entries {
            let row: Vec<String> = topics.iter().map(f64::to_string).collect();
            let _ = writeln!(out, "{doc_id} {}", row.join(" "));
        }
        out
    }

    pub fn from_snapshot(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some("sellrank-topic-cache v1") {
            return Err(Error::SnapshotFormat(
                "bad topic cache header (want v1)".into(),
            ));
        }
        let fingerprint = lines
            .next()
            .and_then(|l| l.strip_prefix("fingerprint "))
            .ok_or_else(|| Error::SnapshotFormat("topic cache: missing fingerprint".into()))?
            .to_owned();
        let k: usize = lines
            .next()
            .and_then(|l| l.strip_prefix("k "))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::SnapshotFormat("topic cache: missing k".into()))?;
        let n: usize = lines
            .next()
            .and_then(|l| l.strip_prefix("n "))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::SnapshotFormat("topic cache: missing entry count".into()))?;
        let mut cache = TopicCache::new(k, fingerprint);
        for line in lines {
            let mut parts = line.split_whitespace();
            let doc_id: u64 = parts
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::SnapshotFormat("topic cache: bad doc id".into()))?;
            let topics: Vec<f64> = parts
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::SnapshotFormat(format!("topic cache: bad weight: {e}")))?;
            cache.insert(doc_id, topics)?;
        }
        if cache.entries.len() != n {
            return Err(Error::SnapshotFormat(format!(
                "topic cache truncated: header says {n} entries, found {}",
                cache.entries.len()
            )));
        }
        Ok(cache)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_snapshot())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_snapshot(&fs::read_to_string(path)?)
    }
}

/// For each website: the same-category documents whose cached topic vector
/// has cosine similarity ≥ the query threshold, with similarity and price.
/// Every known website appears in the result, possibly with an empty list.
pub fn similar_items(
    store: &StoreCatalog,
    cache: &TopicCache,
    query: &SimilarityQuery,
) -> Result<BTreeMap<String, Vec<SimilarItem>>> {
    if !(0.0..=1.0).contains(&query.similarity_threshold) {
        return Err(Error::InvalidParameter(format!(
            "similarity threshold must be in [0, 1], got {}",
            query.similarity_threshold
        )));
    }
    let mut out = BTreeMap::new();
    for website in store.websites() {
        let index = store.index(website)?;
        let mut items = Vec::new();
        for doc in index.docs() {
            if doc.category != query.category {
                continue;
            }
            let topics = cache.get(doc.doc_id).ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "topic cache has no entry for document {} — retrain or rebuild the cache",
                    doc.doc_id
                ))
            })?;
            let sim = cosine(&query.topics, topics)?;
            if sim >= query.similarity_threshold {
                items.push(SimilarItem {
                    doc_id: doc.doc_id,
                    similarity: sim,
                    price: doc.price,
                });
            }
        }
        out.insert(website.clone(), items);
    }
    Ok(out)
}

/// Ranks websites by the query criterion.
///
/// Quantity: websites ordered by how many similar items they host,
/// descending; zero-count websites close the list with score 0. Average
/// price: websites ordered by the IQR mean price of their similar items in
/// the query's direction; websites with no similar items are omitted from
/// the entries and listed under `no_data`. All ties break alphabetically.
pub fn rank_by_criterion(
    store: &StoreCatalog,
    cache: &TopicCache,
    query: &SimilarityQuery,
) -> Result<Ranking> {
    let per_site = similar_items(store, cache, query)?;
    let mut entries = Vec::new();
    let mut no_data = Vec::new();
    match query.criterion {
        Criterion::Quantity => {
            for (website, items) in &per_site {
                entries.push(RankEntry {
                    website: website.clone(),
                    score: items.len() as f64,
                });
            }
            entries.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.website.cmp(&b.website)));
        }
        Criterion::AveragePrice => {
            for (website, items) in &per_site {
                if items.is_empty() {
                    no_data.push(website.clone());
                    continue;
                }
                let prices: Vec<f64> = items.iter().map(|i| i.price).collect();
                entries.push(RankEntry {
                    website: website.clone(),
                    score: iqr_mean(&prices)?,
                });
            }
            match query.price_direction {
                PriceDirection::Descending => entries
                    .sort_by(|a, b| b.score.total_cmp(&a.score).then(a.website.cmp(&b.website))),
                PriceDirection::Ascending => entries
                    .sort_by(|a, b| a.score.total_cmp(&b.score).then(a.website.cmp(&b.website))),
            }
        }
    }
    Ok(Ranking {
        criterion: query.criterion.label().to_owned(),
        entries,
        no_data,
    })
}
