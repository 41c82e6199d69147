//! Latent Dirichlet allocation trained by collapsed Gibbs sampling.
//!
//! Documents are token-id lists (raw occurrences, not tf-idf). The sampler
//! keeps the usual count tables — document-topic, topic-term, per-topic and
//! per-document totals — and resamples each token's topic assignment from
//!
//! ```text
//! p(z = c) ∝ (n_dc + α) · (n_ct + η) / (n_c + V·η)
//! ```
//!
//! After the burn-in sweeps, counts are accumulated every sweep and the
//! beta/theta estimates are the Dirichlet-smoothed averages of those counts.
//! The token assignments kept on the model come from the final sampler state.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TopicDistribution;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LdaConfig {
    pub k: usize,
    /// Symmetric Dirichlet prior on document-topic distributions.
    pub alpha: f64,
    /// Symmetric Dirichlet prior on topic-term distributions.
    pub eta: f64,
    pub n_sweeps: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl LdaConfig {
    /// Conventional symmetric defaults: alpha = 50/k, eta = 0.01.
    pub fn new(k: usize, seed: u64) -> Self {
        LdaConfig {
            k,
            alpha: 50.0 / k.max(1) as f64,
            eta: 0.01,
            n_sweeps: 200,
            burn_in: 100,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidParameter("lda: k must be >= 1".into()));
        }
        if self.alpha.is_nan() || self.alpha <= 0.0 || self.eta.is_nan() || self.eta <= 0.0 {
            return Err(Error::InvalidParameter(
                "lda: alpha and eta must be > 0".into(),
            ));
        }
        if self.n_sweeps <= self.burn_in {
            return Err(Error::InvalidParameter(
                "lda: n_sweeps must exceed burn_in".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    /// Topic-term distributions, k × vocab_size; each row sums to 1.
    pub beta: Array2<f64>,
    /// Document-topic distributions, n_docs × k; each row sums to 1.
    pub theta: Array2<f64>,
    pub vocab_size: usize,
    /// Final-state token assignments, one list per document; empty on
    /// snapshot-loaded models.
    pub assignments: Vec<Vec<u32>>,
    pub config: LdaConfig,
}

impl LdaModel {
    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn n_docs(&self) -> usize {
        self.theta.nrows()
    }
}

/// Collapsed Gibbs sampler state, exposed so tests and diagnostics can drive
/// sweeps and inspect count tables directly.
pub struct LdaSampler {
    k: usize,
    vocab_size: usize,
    alpha: f64,
    eta: f64,
    docs: Vec<Vec<u32>>,
    z: Vec<Vec<u32>>,
    doc_topic: Array2<u32>,
    topic_term: Array2<u32>,
    topic_total: Vec<u32>,
    rng: ChaCha8Rng,
}

impl LdaSampler {
    pub fn new(corpus: &[Vec<usize>], vocab_size: usize, config: &LdaConfig) -> Result<Self> {
        config.validate()?;
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if vocab_size < 1 {
            return Err(Error::InvalidParameter(
                "lda: vocab_size must be >= 1".into(),
            ));
        }
        for (d, doc) in corpus.iter().enumerate() {
            if let Some(&t) = doc.iter().find(|&&t| t >= vocab_size) {
                return Err(Error::InvalidParameter(format!(
                    "lda: document {d} holds token id {t} >= vocab_size {vocab_size}"
                )));
            }
        }
        let k = config.k;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let docs: Vec<Vec<u32>> = corpus
            .iter()
            .map(|doc| doc.iter().map(|&t| t as u32).collect())
            .collect();
        let mut doc_topic = Array2::zeros((docs.len(), k));
        let mut topic_term = Array2::zeros((k, vocab_size));
        let mut topic_total = vec![0u32; k];
        let mut z = Vec::with_capacity(docs.len());
        for (d, doc) in docs.iter().enumerate() {
            let mut zd = Vec::with_capacity(doc.len());
            for &t in doc {
                let c = rng.random_range(0..k);
                zd.push(c as u32);
                doc_topic[(d, c)] += 1;
                topic_term[(c, t as usize)] += 1;
                topic_total[c] += 1;
            }
            z.push(zd);
        }
        Ok(LdaSampler {
            k,
            vocab_size,
            alpha: config.alpha,
            eta: config.eta,
            docs,
            z,
            doc_topic,
            topic_term,
            topic_total,
            rng,
        })
    }

    /// One full Gibbs sweep: every token's assignment is resampled once.
    pub fn sweep(&mut self) {
        let v_eta = self.vocab_size as f64 * self.eta;
        let mut weights = vec![0.0; self.k];
        for d in 0..self.docs.len() {
            for n in 0..self.docs[d].len() {
                let t = self.docs[d][n] as usize;
                let old = self.z[d][n] as usize;
                self.doc_topic[(d, old)] -= 1;
                self.topic_term[(old, t)] -= 1;
                self.topic_total[old] -= 1;

                let mut total = 0.0;
                for (c, w) in weights.iter_mut().enumerate() {
                    *w = (self.doc_topic[(d, c)] as f64 + self.alpha)
                        * (self.topic_term[(c, t)] as f64 + self.eta)
                        / (self.topic_total[c] as f64 + v_eta);
                    total += *w;
                }
                let mut u = self.rng.random::<f64>() * total;
                let mut new = self.k - 1;
                for (c, &w) in weights.iter().enumerate() {
                    u -= w;
                    if u <= 0.0 {
                        new = c;
                        break;
                    }
                }
                self.z[d][n] = new as u32;
                self.doc_topic[(d, new)] += 1;
                self.topic_term[(new, t)] += 1;
                self.topic_total[new] += 1;
            }
        }
    }

    /// Document-topic count table (n_docs × k).
    pub fn doc_topic_counts(&self) -> &Array2<u32> {
        &self.doc_topic
    }

    /// Topic-term count table (k × vocab_size).
    pub fn topic_term_counts(&self) -> &Array2<u32> {
        &self.topic_term
    }

    pub fn doc_len(&self, d: usize) -> usize {
        self.docs[d].len()
    }

    pub fn total_tokens(&self) -> usize {
        self.docs.iter().map(Vec::len).sum()
    }

    fn into_model(
        self,
        config: &LdaConfig,
        ndk_mean: Array2<f64>,
        nkt_mean: Array2<f64>,
    ) -> LdaModel {
        let n_docs = self.docs.len();
        let mut theta = Array2::zeros((n_docs, self.k));
        for d in 0..n_docs {
            let nd = self.docs[d].len() as f64;
            let denom = nd + self.k as f64 * self.alpha;
            for c in 0..self.k {
                theta[(d, c)] = (ndk_mean[(d, c)] + self.alpha) / denom;
            }
        }
        let mut beta = Array2::zeros((self.k, self.vocab_size));
        for c in 0..self.k {
            let nc: f64 = (0..self.vocab_size).map(|t| nkt_mean[(c, t)]).sum();
            let denom = nc + self.vocab_size as f64 * self.eta;
            for t in 0..self.vocab_size {
                beta[(c, t)] = (nkt_mean[(c, t)] + self.eta) / denom;
            }
        }
        LdaModel {
            beta,
            theta,
            vocab_size: self.vocab_size,
            assignments: self.z.clone(),
            config: config.clone(),
        }
    }
}

/// Trains an LDA model on raw token-id documents by collapsed Gibbs sampling.
pub fn lda_train(corpus: &[Vec<usize>], vocab_size: usize, config: &LdaConfig) -> Result<LdaModel> {
    let mut sampler = LdaSampler::new(corpus, vocab_size, config)?;
    let mut ndk_mean = Array2::<f64>::zeros(sampler.doc_topic.dim());
    let mut nkt_mean = Array2::<f64>::zeros(sampler.topic_term.dim());
    let mut samples = 0usize;
    for s in 0..config.n_sweeps {
        sampler.sweep();
        if s >= config.burn_in {
            ndk_mean.zip_mut_with(&sampler.doc_topic, |m, &c| *m += c as f64);
            nkt_mean.zip_mut_with(&sampler.topic_term, |m, &c| *m += c as f64);
            samples += 1;
        }
    }
    ndk_mean /= samples as f64;
    nkt_mean /= samples as f64;
    Ok(sampler.into_model(config, ndk_mean, nkt_mean))
}

/// Infers the topic distribution of an unseen document: Gibbs sampling over
/// the new document's assignments only, with beta frozen. Out-of-vocabulary
/// ids are ignored; an empty effective document folds to uniform. Returns the
/// smoothed, normalized topic counts of the final sweep.
pub fn lda_fold_in(
    model: &LdaModel,
    tokens: &[usize],
    n_sweeps: usize,
    seed: u64,
) -> TopicDistribution {
    let k = model.k();
    let tokens: Vec<usize> = tokens
        .iter()
        .copied()
        .filter(|&t| t < model.vocab_size)
        .collect();
    if tokens.is_empty() {
        return TopicDistribution::from_raw(vec![1.0; k]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u32; k];
    let mut z = Vec::with_capacity(tokens.len());
    for _ in &tokens {
        let c = rng.random_range(0..k);
        z.push(c);
        counts[c] += 1;
    }
    let alpha = model.config.alpha;
    let mut weights = vec![0.0; k];
    for _ in 0..n_sweeps {
        for (n, &t) in tokens.iter().enumerate() {
            let old = z[n];
            counts[old] -= 1;
            let mut total = 0.0;
            for (c, w) in weights.iter_mut().enumerate() {
                *w = (counts[c] as f64 + alpha) * model.beta[(c, t)];
                total += *w;
            }
            let mut u = rng.random::<f64>() * total;
            let mut new = k - 1;
            for (c, &w) in weights.iter().enumerate() {
                u -= w;
                if u <= 0.0 {
                    new = c;
                    break;
                }
            }
            z[n] = new;
            counts[new] += 1;
        }
    }
    TopicDistribution::from_raw(counts.iter().map(|&c| c as f64 + alpha).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Two disjoint 10-word vocabularies; documents draw exclusively from one
    /// group. Returns (corpus, group label per doc).
    pub(crate) fn separable_corpus(
        docs_per_group: usize,
        doc_len: usize,
        seed: u64,
    ) -> (Vec<Vec<usize>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut corpus = Vec::new();
        let mut groups = Vec::new();
        for g in 0..2 {
            for _ in 0..docs_per_group {
                let doc: Vec<usize> = (0..doc_len)
                    .map(|_| g * 10 + rng.random_range(0..10))
                    .collect();
                corpus.push(doc);
                groups.push(g);
            }
        }
        (corpus, groups)
    }

    fn test_config(k: usize, seed: u64) -> LdaConfig {
        LdaConfig {
            k,
            alpha: 0.1,
            eta: 0.01,
            n_sweeps: 200,
            burn_in: 150,
            seed,
        }
    }

    #[test]
    fn single_token_single_topic_is_forced() {
        let corpus = vec![vec![0, 0, 0]];
        let cfg = LdaConfig {
            k: 1,
            alpha: 0.5,
            eta: 0.5,
            n_sweeps: 5,
            burn_in: 1,
            seed: 0,
        };
        let model = lda_train(&corpus, 1, &cfg).unwrap();
        assert_relative_eq!(model.theta[(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(model.beta[(0, 0)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rows_are_probability_distributions() {
        let (corpus, _) = separable_corpus(10, 25, 3);
        let model = lda_train(&corpus, 20, &test_config(2, 3)).unwrap();
        for d in 0..model.n_docs() {
            let s: f64 = model.theta.row(d).sum();
            assert!((s - 1.0).abs() <= 1e-9, "theta row {d} sums to {s}");
        }
        for c in 0..model.k() {
            let s: f64 = model.beta.row(c).sum();
            assert!((s - 1.0).abs() <= 1e-9, "beta row {c} sums to {s}");
        }
    }

    #[test]
    fn separable_corpus_recovers_planted_partition() {
        let (corpus, groups) = separable_corpus(50, 30, 11);
        let model = lda_train(&corpus, 20, &test_config(2, 11)).unwrap();
        // every document concentrates on one topic
        for d in 0..model.n_docs() {
            let max = model.theta.row(d).iter().cloned().fold(0.0, f64::max);
            assert!(max >= 0.8, "doc {d} max mass {max}");
        }
        // topics' top-10 words split the two vocabulary groups
        let mut topic_of_group = [usize::MAX; 2];
        for c in 0..2 {
            let top = super::super::top_terms(model.beta.row(c).iter().copied(), 10);
            let in_group_1 = top.iter().filter(|(t, _)| *t >= 10).count();
            let g = usize::from(in_group_1 >= 5);
            let purity = top.iter().filter(|(t, _)| (*t >= 10) == (g == 1)).count();
            assert!(purity >= 8, "topic {c} purity {purity}/10");
            topic_of_group[g] = c;
        }
        assert_ne!(
            topic_of_group[0], topic_of_group[1],
            "topics collapsed onto one group"
        );
        // documents land on the topic matching their group
        for (d, &g) in groups.iter().enumerate() {
            let best = if model.theta[(d, 0)] > model.theta[(d, 1)] {
                0
            } else {
                1
            };
            assert_eq!(best, topic_of_group[g], "doc {d}");
        }
    }

    #[test]
    fn same_seed_is_identical() {
        let (corpus, _) = separable_corpus(5, 15, 2);
        let cfg = test_config(2, 7);
        let m1 = lda_train(&corpus, 20, &cfg).unwrap();
        let m2 = lda_train(&corpus, 20, &cfg).unwrap();
        assert_eq!(m1.beta, m2.beta);
        assert_eq!(m1.theta, m2.theta);
        assert_eq!(m1.assignments, m2.assignments);
    }

    #[test]
    fn counts_are_conserved_across_sweeps() {
        let (corpus, _) = separable_corpus(8, 12, 4);
        let cfg = test_config(3, 4);
        let mut sampler = LdaSampler::new(&corpus, 20, &cfg).unwrap();
        let total = sampler.total_tokens();
        for _ in 0..10 {
            sampler.sweep();
            for (d, doc) in corpus.iter().enumerate() {
                let nd: u32 = sampler.doc_topic_counts().row(d).sum();
                assert_eq!(nd as usize, doc.len());
            }
            let all: u32 = sampler.topic_term_counts().sum();
            assert_eq!(all as usize, total);
        }
    }

    #[test]
    fn rejects_invalid_hyperparameters() {
        let corpus = vec![vec![0]];
        let bad_alpha = LdaConfig {
            alpha: 0.0,
            ..test_config(2, 0)
        };
        assert!(lda_train(&corpus, 1, &bad_alpha).is_err());
        let bad_eta = LdaConfig {
            eta: -1.0,
            ..test_config(2, 0)
        };
        assert!(lda_train(&corpus, 1, &bad_eta).is_err());
        let bad_sweeps = LdaConfig {
            n_sweeps: 5,
            burn_in: 5,
            ..test_config(2, 0)
        };
        assert!(lda_train(&corpus, 1, &bad_sweeps).is_err());
        let bad_k = LdaConfig {
            k: 0,
            ..test_config(1, 0)
        };
        assert!(lda_train(&corpus, 1, &bad_k).is_err());
        assert!(lda_train(&[], 1, &test_config(2, 0)).is_err());
        assert!(lda_train(&[vec![9]], 3, &test_config(2, 0)).is_err());
    }

    #[test]
    fn fold_in_empty_is_uniform() {
        let (corpus, _) = separable_corpus(5, 15, 2);
        let model = lda_train(&corpus, 20, &test_config(2, 2)).unwrap();
        let dist = lda_fold_in(&model, &[], 30, 0);
        assert_eq!(dist.weights(), &[0.5, 0.5]);
        // out-of-vocabulary ids are ignored, so they fold to uniform too
        let dist = lda_fold_in(&model, &[99, 1000], 30, 0);
        assert_eq!(dist.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn fold_in_matches_planted_topic() {
        let (corpus, _) = separable_corpus(50, 30, 5);
        let model = lda_train(&corpus, 20, &test_config(2, 5)).unwrap();
        // group-0 tokens only
        let doc: Vec<usize> = vec![0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 0, 1, 2, 3, 4];
        let dist = lda_fold_in(&model, &doc, 50, 9);
        let top0 = super::super::top_terms(model.beta.row(0).iter().copied(), 10);
        let topic0_is_group0 = top0.iter().filter(|(t, _)| *t < 10).count() >= 5;
        let expected_topic = if topic0_is_group0 { 0 } else { 1 };
        assert!(
            dist.weights()[expected_topic] >= 0.8,
            "mass on planted topic: {:?}",
            dist.weights()
        );
        assert_relative_eq!(dist.weights().iter().sum::<f64>(), 1.0, epsilon = 1e-9);
    }
}
