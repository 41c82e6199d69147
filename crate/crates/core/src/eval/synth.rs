//! Seeded synthetic marketplace corpus with planted structure, standing in
//! for the unavailable real crawl data.
//!
//! Each category owns a disjoint vocabulary group; each website has planted
//! category frequencies and per-category price profiles. The generator emits
//! the document stream, the realized ground-truth tables (counts, price
//! aggregates), and held-out query items; reference judgments for evaluation
//! are derived from the ground truth in place of human judges.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::PreferenceJudgment;
use crate::simrank::iqr_mean;
use crate::store::RawRecord;
use crate::{Error, Result};

/// Planted per-website per-category price model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceProfile {
    pub mean: f64,
    pub spread: f64,
}

/// Generator parameters. `category_weights[w][c]` is the unnormalized
/// probability that website `w` posts in category `c`;
/// `price_profiles[w][c]` the matching price model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub websites: Vec<String>,
    pub categories: Vec<String>,
    pub docs_per_website: usize,
    /// Size of each category's disjoint vocabulary group.
    pub words_per_topic: usize,
    /// Size of the shared filler lexicon sprinkled across all documents.
    pub common_words: usize,
    /// Probability that a token is a filler word rather than a topic word.
    pub common_word_prob: f64,
    /// Inclusive token-count range per document.
    pub doc_len: (usize, usize),
    pub category_weights: Vec<Vec<f64>>,
    pub price_profiles: Vec<Vec<PriceProfile>>,
    pub queries_per_category: usize,
    pub query_len: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(format!("synthetic spec: {msg}")));
        if self.websites.is_empty() || self.categories.is_empty() {
            return bad("websites and categories must be non-empty");
        }
        if self.words_per_topic == 0 {
            return bad("words_per_topic must be >= 1");
        }
        if !(0.0..1.0).contains(&self.common_word_prob) {
            return bad("common_word_prob must be in [0, 1)");
        }
        if self.common_word_prob > 0.0 && self.common_words == 0 {
            return bad("common_word_prob > 0 needs common_words >= 1");
        }
        if self.doc_len.0 == 0 || self.doc_len.0 > self.doc_len.1 {
            return bad("doc_len range must satisfy 1 <= min <= max");
        }
        if self.category_weights.len() != self.websites.len()
            || self.price_profiles.len() != self.websites.len()
        {
            return bad("category_weights and price_profiles need one row per website");
        }
        for (w, (weights, profiles)) in self
            .category_weights
            .iter()
            .zip(&self.price_profiles)
            .enumerate()
        {
            if weights.len() != self.categories.len() || profiles.len() != self.categories.len() {
                return bad(&format!("website {w}: need one entry per category"));
            }
            if weights.iter().any(|&x| !x.is_finite() || x < 0.0) {
                return bad(&format!("website {w}: weights must be finite and >= 0"));
            }
            if weights.iter().sum::<f64>() <= 0.0 {
                return bad(&format!("website {w}: weights must not all be zero"));
            }
            if profiles
                .iter()
                .any(|p| p.mean.is_nan() || p.mean <= 0.0 || p.spread.is_nan() || p.spread < 0.0)
            {
                return bad(&format!(
                    "website {w}: price profiles need mean > 0, spread >= 0"
                ));
            }
        }
        Ok(())
    }

    /// The disjoint vocabulary group of one category: lowercase alphanumeric
    /// tokens, stable under the engine tokenizer.
    pub fn topic_words(&self, category_idx: usize) -> Vec<String> {
        let stem: String = self.categories[category_idx]
            .to_lowercase()
            .chars()
            .filter(|c| c.is_alphanumeric())
            .collect();
        let stem = if stem.is_empty() {
            format!("cat{category_idx}")
        } else {
            stem
        };
        (0..self.words_per_topic)
            .map(|j| format!("{stem}{j}"))
            .collect()
    }

    pub fn filler_words(&self) -> Vec<String> {
        (0..self.common_words)
            .map(|j| format!("filler{j}"))
            .collect()
    }
}

/// Realized ground truth, keyed website → category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Realized document counts.
    pub counts: BTreeMap<String, BTreeMap<String, usize>>,
    /// Realized inter-quartile mean of generated prices (absent when a
    /// website posted nothing in a category).
    pub price_iqr_mean: BTreeMap<String, BTreeMap<String, f64>>,
    /// The planted price profiles, echoed for judgment derivation.
    pub price_profiles: BTreeMap<String, BTreeMap<String, PriceProfile>>,
}

/// A held-out evaluation query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryItem {
    pub id: String,
    pub description: String,
    pub category: String,
    pub price: f64,
}

/// Everything one generation run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub records: Vec<RawRecord>,
    pub truth: GroundTruth,
    pub queries: Vec<QueryItem>,
}

fn pick_weighted(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        u -= w;
        if u <= 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

fn sample_price(rng: &mut ChaCha8Rng, profile: &PriceProfile) -> f64 {
    let normal = Normal::new(profile.mean, profile.spread.max(f64::MIN_POSITIVE))
        .expect("validated profile");
    normal.sample(rng).max(1.0)
}

/// Generates the corpus, ground truth and held-out queries. Fully determined
/// by the spec (same seed, byte-identical output).
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let topic_words: Vec<Vec<String>> = (0..spec.categories.len())
        .map(|c| spec.topic_words(c))
        .collect();
    let filler = spec.filler_words();

    let mut records = Vec::with_capacity(spec.websites.len() * spec.docs_per_website);
    let mut counts: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    let mut prices: BTreeMap<String, BTreeMap<String, Vec<f64>>> = BTreeMap::new();

    for (w, website) in spec.websites.iter().enumerate() {
        for _ in 0..spec.docs_per_website {
            let c = pick_weighted(&mut rng, &spec.category_weights[w]);
            let category = &spec.categories[c];
            let len = rng.random_range(spec.doc_len.0..=spec.doc_len.1);
            let mut tokens = Vec::with_capacity(len);
            for _ in 0..len {
                if spec.common_word_prob > 0.0 && rng.random::<f64>() < spec.common_word_prob {
                    tokens.push(filler[rng.random_range(0..filler.len())].clone());
                } else {
                    let group = &topic_words[c];
                    tokens.push(group[rng.random_range(0..group.len())].clone());
                }
            }
            let price = sample_price(&mut rng, &spec.price_profiles[w][c]);
            records.push(RawRecord {
                website: website.clone(),
                description: tokens.join(" "),
                category: category.clone(),
                price,
            });
            *counts
                .entry(website.clone())
                .or_default()
                .entry(category.clone())
                .or_insert(0) += 1;
            prices
                .entry(website.clone())
                .or_default()
                .entry(category.clone())
                .or_default()
                .push(price);
        }
    }

    let mut price_iqr = BTreeMap::new();
    for (website, per_category) in &prices {
        let mut row = BTreeMap::new();
        for (category, list) in per_category {
            row.insert(category.clone(), iqr_mean(list)?);
        }
        price_iqr.insert(website.clone(), row);
    }
    let mut profiles = BTreeMap::new();
    for (w, website) in spec.websites.iter().enumerate() {
        let row: BTreeMap<String, PriceProfile> = spec
            .categories
            .iter()
            .enumerate()
            .map(|(c, cat)| (cat.clone(), spec.price_profiles[w][c]))
            .collect();
        profiles.insert(website.clone(), row);
    }

    // held-out queries: pure topic-word descriptions, prices anchored on
    // successive websites' profiles so vote judgments have signal
    let mut queries = Vec::new();
    for (c, category) in spec.categories.iter().enumerate() {
        for q in 0..spec.queries_per_category {
            let group = &topic_words[c];
            let tokens: Vec<String> = (0..spec.query_len)
                .map(|_| group[rng.random_range(0..group.len())].clone())
                .collect();
            let anchor = (q + c) % spec.websites.len();
            let price = sample_price(&mut rng, &spec.price_profiles[anchor][c]);
            queries.push(QueryItem {
                id: format!("q-{category}-{q}"),
                description: tokens.join(" "),
                category: category.clone(),
                price,
            });
        }
    }

    Ok(SyntheticData {
        records,
        truth: GroundTruth {
            counts,
            price_iqr_mean: price_iqr,
            price_profiles: profiles,
        },
        queries,
    })
}

/// Which ground-truth signal a derived judgment orders websites by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JudgmentKind {
    /// Realized same-category document counts, descending.
    Quantity,
    /// Realized same-category IQR mean price, descending.
    AveragePrice,
    /// Count × Gaussian likelihood of the query price under the planted
    /// profile, descending — the Bayes ordering for the full input.
    Votes,
}

/// Derives one reference judgment per query from the ground truth. Websites
/// with equal scores share a rank (dense ranking). Judgments that would
/// cover fewer than two websites are dropped.
pub fn derive_judgments(
    truth: &GroundTruth,
    queries: &[QueryItem],
    kind: JudgmentKind,
) -> Vec<PreferenceJudgment> {
    let mut out = Vec::new();
    for query in queries {
        let mut scored: Vec<(String, f64)> = Vec::new();
        for (website, per_category) in &truth.counts {
            let count = per_category.get(&query.category).copied().unwrap_or(0);
            match kind {
                JudgmentKind::Quantity => scored.push((website.clone(), count as f64)),
                JudgmentKind::AveragePrice => {
                    if let Some(mean) = truth
                        .price_iqr_mean
                        .get(website)
                        .and_then(|row| row.get(&query.category))
                    {
                        scored.push((website.clone(), *mean));
                    }
                }
                JudgmentKind::Votes => {
                    let profile = truth
                        .price_profiles
                        .get(website)
                        .and_then(|row| row.get(&query.category));
                    let likelihood = profile
                        .map(|p| gaussian_pdf(query.price, p.mean, p.spread))
                        .unwrap_or(0.0);
                    scored.push((website.clone(), count as f64 * likelihood));
                }
            }
        }
        if scored.len() < 2 {
            continue;
        }
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        out.push(PreferenceJudgment {
            item_id: query.id.clone(),
            reference_order: dense_ranks(&scored),
        });
    }
    out
}

/// Dense ranking of score-sorted entries: rank increments only when the
/// score strictly drops, so exactly equal scores tie.
pub fn dense_ranks(sorted: &[(String, f64)]) -> Vec<(String, u32)> {
    let mut out = Vec::with_capacity(sorted.len());
    let mut rank = 0u32;
    let mut last_score = f64::INFINITY;
    for (website, score) in sorted {
        if *score < last_score {
            rank += 1;
            last_score = *score;
        }
        out.push((website.clone(), rank));
    }
    out
}

fn gaussian_pdf(x: f64, mean: f64, spread: f64) -> f64 {
    let sigma = spread.max(f64::MIN_POSITIVE);
    let z = (x - mean) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}
