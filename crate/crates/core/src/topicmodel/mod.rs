//! Topic models over the term-document matrix: non-negative matrix
//! factorization trained by multiplicative updates, and latent Dirichlet
//! allocation trained by collapsed Gibbs sampling.
//!
//! Both factorizations produce a word-to-topic factor and a document-to-topic
//! factor; unseen documents are inferred by fold-in (the word-to-topic factor
//! stays fixed while a fresh document column is fitted).
//!
//! NMF consumes the tf-idf matrix. LDA consumes raw term counts — its
//! multinomial likelihood is defined over counts, so feeding it tf-idf
//! weights would be ill-typed.

mod lda;
mod nmf;

pub use lda::{lda_fold_in, lda_train, LdaConfig, LdaModel, LdaSampler};
pub use nmf::{frobenius_error, nmf_fold_in, nmf_train, nmf_train_from, NmfConfig, NmfModel};

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;

use crate::textprep::{tfidf_vector, token_ids, Vocabulary};
use crate::{Error, Result};

/// A normalized per-document topic distribution: nonnegative, sums to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicDistribution {
    weights: Vec<f64>,
}

impl TopicDistribution {
    /// L1-normalizes raw nonnegative weights. A zero (or non-finite) vector
    /// maps to the uniform distribution — a document with no usable mass is
    /// treated as maximally uninformative rather than NaN.
    pub fn from_raw(raw: Vec<f64>) -> Self {
        let k = raw.len();
        let sum: f64 = raw.iter().sum();
        if !sum.is_finite() || sum <= 0.0 || raw.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return TopicDistribution {
                weights: vec![1.0 / k as f64; k],
            };
        }
        TopicDistribution {
            weights: raw.into_iter().map(|w| w / sum).collect(),
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }
}

/// Highest-weighted term ids, descending weight, ties broken by term id.
pub(crate) fn top_terms(weights: impl Iterator<Item = f64>, n: usize) -> Vec<(usize, f64)> {
    let mut ranked: Vec<(usize, f64)> = weights.enumerate().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(n);
    ranked
}

/// Which trainer produced a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Nmf,
    Lda,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Nmf => "nmf",
            ModelKind::Lda => "lda",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nmf" => Ok(ModelKind::Nmf),
            "lda" => Ok(ModelKind::Lda),
            other => Err(Error::InvalidParameter(format!(
                "unknown model kind {other:?}"
            ))),
        }
    }
}

/// Options for folding an unseen document into topic space.
#[derive(Debug, Clone)]
pub struct FoldInOptions {
    /// NMF: maximum multiplicative update iterations.
    pub max_iters: usize,
    /// NMF: relative-change stop tolerance.
    pub tol: f64,
    /// LDA: Gibbs sweeps over the new document.
    pub sweeps: usize,
    /// LDA: sampler seed.
    pub seed: u64,
}

impl Default for FoldInOptions {
    fn default() -> Self {
        FoldInOptions {
            max_iters: 100,
            tol: 1e-6,
            sweeps: 50,
            seed: 0,
        }
    }
}

/// A trained topic model of either kind, presenting the shared surface the
/// ranking layers need: fold-in, per-document distributions and top words.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Nmf(NmfModel),
    Lda(LdaModel),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Nmf(_) => ModelKind::Nmf,
            Model::Lda(_) => ModelKind::Lda,
        }
    }

    pub fn k(&self) -> usize {
        match self {
            Model::Nmf(m) => m.k(),
            Model::Lda(m) => m.k(),
        }
    }

    pub fn n_docs(&self) -> usize {
        match self {
            Model::Nmf(m) => m.n_docs(),
            Model::Lda(m) => m.n_docs(),
        }
    }

    /// Vocabulary dimension the model was trained on.
    pub fn n_terms(&self) -> usize {
        match self {
            Model::Nmf(m) => m.n_terms(),
            Model::Lda(m) => m.vocab_size,
        }
    }

    /// Weight of training document `j` under one topic: the raw H entry for
    /// NMF, the theta entry for LDA. Used to surface each topic's
    /// top-weighted documents.
    pub fn doc_weight(&self, topic: usize, j: usize) -> f64 {
        match self {
            Model::Nmf(m) => m.h[(topic, j)],
            Model::Lda(m) => m.theta[(j, topic)],
        }
    }

    /// Topic distribution of training document `j` (normalized H column for
    /// NMF, theta row for LDA).
    pub fn doc_topics(&self, j: usize) -> TopicDistribution {
        match self {
            Model::Nmf(m) => TopicDistribution::from_raw(m.h.column(j).to_vec()),
            Model::Lda(m) => TopicDistribution::from_raw(m.theta.row(j).to_vec()),
        }
    }

    /// Folds a tokenized description into topic space.
    pub fn fold_in(
        &self,
        tokens: &[String],
        vocab: &Vocabulary,
        opts: &FoldInOptions,
    ) -> TopicDistribution {
        match self {
            Model::Nmf(m) => {
                let x = tfidf_vector(tokens, vocab);
                nmf_fold_in(m, &x, opts.max_iters, opts.tol)
                    .expect("vocabulary dimension matches the trained model")
            }
            Model::Lda(m) => {
                let ids = token_ids(tokens, vocab);
                lda_fold_in(m, &ids, opts.sweeps, opts.seed)
            }
        }
    }

    /// The `n` highest-weighted term ids of one topic.
    pub fn top_words(&self, topic: usize, n: usize) -> Result<Vec<(usize, f64)>> {
        let k = self.k();
        if topic >= k {
            return Err(Error::TopicOutOfRange { topic, k });
        }
        Ok(match self {
            Model::Nmf(m) => top_terms(m.w.column(topic).iter().copied(), n),
            Model::Lda(m) => top_terms(m.beta.row(topic).iter().copied(), n),
        })
    }

    /// Serializes to the versioned text snapshot. Matrices are written
    /// row-major with dimensions in their header line; floats use the
    /// shortest round-tripping decimal form, so `load(save(m))` reproduces
    /// bit-identical fold-in outputs.
    pub fn to_snapshot(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "sellrank-model v1");
        match self {
            Model::Nmf(m) => {
                let _ = writeln!(out, "kind nmf");
                let _ = writeln!(out, "k {}", m.config.k);
                let _ = writeln!(out, "max_iters {}", m.config.max_iters);
                let _ = writeln!(out, "tol {}", m.config.tol);
                let _ = writeln!(out, "seed {}", m.config.seed);
                write_matrix(&mut out, "W", &m.w);
                write_matrix(&mut out, "H", &m.h);
                let _ = writeln!(out, "trace {}", m.objective_trace.len());
                let _ = writeln!(out, "{}", join_floats(&m.objective_trace));
            }
            Model::Lda(m) => {
                let _ = writeln!(out, "kind lda");
                let _ = writeln!(out, "k {}", m.config.k);
                let _ = writeln!(out, "alpha {}", m.config.alpha);
                let _ = writeln!(out, "eta {}", m.config.eta);
                let _ = writeln!(out, "n_sweeps {}", m.config.n_sweeps);
                let _ = writeln!(out, "burn_in {}", m.config.burn_in);
                let _ = writeln!(out, "seed {}", m.config.seed);
                write_matrix(&mut out, "beta", &m.beta);
                write_matrix(&mut out, "theta", &m.theta);
            }
        }
        out
    }

    pub fn from_snapshot(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("");
        if header != "sellrank-model v1" {
            return Err(Error::SnapshotFormat(format!(
                "bad model header (want sellrank-model v1): {header:?}"
            )));
        }
        let kind = scalar(&mut lines, "kind")?;
        match kind.as_str() {
            "nmf" => {
                let k: usize = parse_scalar(&mut lines, "k")?;
                let max_iters: usize = parse_scalar(&mut lines, "max_iters")?;
                let tol: f64 = parse_scalar(&mut lines, "tol")?;
                let seed: u64 = parse_scalar(&mut lines, "seed")?;
                let w = read_matrix(&mut lines, "W")?;
                let h = read_matrix(&mut lines, "H")?;
                let trace_len: usize = parse_scalar(&mut lines, "trace")?;
                let trace_line = lines
                    .next()
                    .ok_or_else(|| Error::SnapshotFormat("missing objective trace".into()))?;
                let objective_trace = parse_floats(trace_line, trace_len)?;
                if w.ncols() != k || h.nrows() != k {
                    return Err(Error::SnapshotFormat(
                        "factor shapes disagree with k".into(),
                    ));
                }
                Ok(Model::Nmf(NmfModel {
                    w,
                    h,
                    objective_trace,
                    config: NmfConfig {
                        k,
                        max_iters,
                        tol,
                        seed,
                    },
                }))
            }
            "lda" => {
                let k: usize = parse_scalar(&mut lines, "k")?;
                let alpha: f64 = parse_scalar(&mut lines, "alpha")?;
                let eta: f64 = parse_scalar(&mut lines, "eta")?;
                let n_sweeps: usize = parse_scalar(&mut lines, "n_sweeps")?;
                let burn_in: usize = parse_scalar(&mut lines, "burn_in")?;
                let seed: u64 = parse_scalar(&mut lines, "seed")?;
                let beta = read_matrix(&mut lines, "beta")?;
                let theta = read_matrix(&mut lines, "theta")?;
                if beta.nrows() != k || theta.ncols() != k {
                    return Err(Error::SnapshotFormat(
                        "factor shapes disagree with k".into(),
                    ));
                }
                Ok(Model::Lda(LdaModel {
                    vocab_size: beta.ncols(),
                    beta,
                    theta,
                    assignments: Vec::new(),
                    config: LdaConfig {
                        k,
                        alpha,
                        eta,
                        n_sweeps,
                        burn_in,
                        seed,
                    },
                }))
            }
            other => Err(Error::SnapshotFormat(format!(
                "unknown model kind {other:?}"
            ))),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_snapshot())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_snapshot(&fs::read_to_string(path)?)
    }
}

fn join_floats(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_floats(line: &str, expected: usize) -> Result<Vec<f64>> {
    let values: Vec<f64> = line
        .split_whitespace()
        .map(|t| t.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::SnapshotFormat(format!("bad float: {e}")))?;
    if values.len() != expected {
        return Err(Error::SnapshotFormat(format!(
            "expected {expected} values, found {}",
            values.len()
        )));
    }
    Ok(values)
}

fn write_matrix(out: &mut String, name: &str, m: &Array2<f64>) {
    let _ = writeln!(out, "matrix {name} {} {}", m.nrows(), m.ncols());
    for row in m.rows() {
        let joined = row
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        let _ = writeln!(out, "{joined}");
    }
}

fn read_matrix<'a>(lines: &mut impl Iterator<Item = &'a str>, name: &str) -> Result<Array2<f64>> {
    let header = lines
        .next()
        .ok_or_else(|| Error::SnapshotFormat(format!("missing matrix {name}")))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "matrix" || parts[1] != name {
        return Err(Error::SnapshotFormat(format!(
            "bad matrix header for {name}: {header:?}"
        )));
    }
    let rows: usize = parts[2]
        .parse()
        .map_err(|_| Error::SnapshotFormat(format!("bad row count for {name}")))?;
    let cols: usize = parts[3]
        .parse()
        .map_err(|_| Error::SnapshotFormat(format!("bad column count for {name}")))?;
    let mut data = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let line = lines
            .next()
            .ok_or_else(|| Error::SnapshotFormat(format!("matrix {name} truncated at row {r}")))?;
        data.extend(parse_floats(line, cols)?);
    }
    Array2::from_shape_vec((rows, cols), data)
        .map_err(|e| Error::SnapshotFormat(format!("matrix {name}: {e}")))
}

fn scalar<'a>(lines: &mut impl Iterator<Item = &'a str>, key: &str) -> Result<String> {
    let line = lines
        .next()
        .ok_or_else(|| Error::SnapshotFormat(format!("missing field {key}")))?;
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(' '))
        .map(str::to_owned)
        .ok_or_else(|| Error::SnapshotFormat(format!("expected field {key}, got {line:?}")))
}

fn parse_scalar<'a, T: FromStr>(lines: &mut impl Iterator<Item = &'a str>, key: &str) -> Result<T> {
    scalar(lines, key)?
        .parse()
        .map_err(|_| Error::SnapshotFormat(format!("bad value for field {key}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topic_distribution_normalizes() {
        let d = TopicDistribution::from_raw(vec![1.0, 3.0]);
        assert_eq!(d.weights(), &[0.25, 0.75]);
    }

    #[test]
    fn topic_distribution_zero_maps_to_uniform() {
        let d = TopicDistribution::from_raw(vec![0.0, 0.0, 0.0, 0.0]);
        assert_eq!(d.weights(), &[0.25; 4]);
    }

    #[test]
    fn top_terms_orders_by_weight_then_id() {
        let ranked = top_terms([0.5, 0.9, 0.5, 0.1].into_iter(), 3);
        assert_eq!(ranked, vec![(1, 0.9), (0, 0.5), (2, 0.5)]);
    }

    #[test]
    fn snapshot_rejects_garbage() {
        assert!(matches!(
            Model::from_snapshot("hello"),
            Err(Error::SnapshotFormat(_))
        ));
    }

    #[test]
    fn top_words_full_vocabulary_and_bounds() {
        let model = Model::Nmf(NmfModel {
            w: ndarray::arr2(&[[0.2, 0.0], [0.9, 0.1], [0.2, 0.5], [0.0, 0.3]]),
            h: ndarray::Array2::zeros((2, 1)),
            objective_trace: vec![0.0],
            config: NmfConfig {
                k: 2,
                max_iters: 1,
                tol: 0.0,
                seed: 0,
            },
        });
        // n = vocab size returns the whole vocabulary, weights non-increasing,
        // ties broken by the smaller term id
        let words = model.top_words(0, 4).unwrap();
        assert_eq!(words.len(), 4);
        assert_eq!(words[0], (1, 0.9));
        assert_eq!(words[1], (0, 0.2));
        assert_eq!(words[2], (2, 0.2));
        for pair in words.windows(2) {
            assert!(pair[0].1 >= pair[1].1);
        }
        assert!(model.top_words(2, 1).is_err(), "topic index out of range");
    }
}
