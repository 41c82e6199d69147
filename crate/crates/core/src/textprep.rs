//! Text preprocessing: tokenization, vocabulary construction with frequency
//! filtering, tf-idf weighting and the bag-of-words term-document matrix.
//!
//! The tf-idf weight of term `t` in document `d` is `f(t,d) * ln(N / n_t)`
//! where `N` is the corpus size and `n_t` the number of documents containing
//! `t`. The natural logarithm is fixed here; any other base rescales every
//! idf by a constant and leaves cosine similarities and rank orders
//! unchanged.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::{Error, Result};

/// Lowercases and splits text into alphanumeric runs.
///
/// A token is a maximal run of Unicode alphanumeric characters, so
/// digit-letter mixes like "32gb" stay whole while punctuation and
/// whitespace act as separators. Total function: any input is fine,
/// the output may be empty.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Vocabulary over a tokenized corpus: dense term ids, per-term document
/// frequency and the corpus size.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    term_to_id: HashMap<String, usize>,
    id_to_term: Vec<String>,
    doc_freq: Vec<usize>,
    total_docs: usize,
}

impl Vocabulary {
    /// Number of retained terms.
    pub fn len(&self) -> usize {
        self.id_to_term.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_term.is_empty()
    }

    /// Corpus size N used for idf.
    pub fn total_docs(&self) -> usize {
        self.total_docs
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.term_to_id.get(term).copied()
    }

    pub fn term(&self, id: usize) -> &str {
        &self.id_to_term[id]
    }

    /// Document frequency n_t of the term with this id.
    pub fn doc_freq(&self, id: usize) -> usize {
        self.doc_freq[id]
    }

    /// idf of a term id: ln(N / n_t).
    pub fn idf(&self, id: usize) -> f64 {
        (self.total_docs as f64 / self.doc_freq[id] as f64).ln()
    }

    /// Serializes as the versioned tab-separated snapshot:
    /// a header carrying N, then one `term<TAB>id<TAB>doc_freq` line per term.
    pub fn to_snapshot(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "sellrank-vocab v1 total_docs={}", self.total_docs);
        for (id, term) in self.id_to_term.iter().enumerate() {
            let _ = writeln!(out, "{}\t{}\t{}", term, id, self.doc_freq[id]);
        }
        out
    }

    pub fn from_snapshot(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::SnapshotFormat("empty vocabulary snapshot".into()))?;
        let total_docs = header
            .strip_prefix("sellrank-vocab v1 total_docs=")
            .and_then(|n| n.parse::<usize>().ok())
            .ok_or_else(|| {
                Error::SnapshotFormat(format!("bad vocabulary header (want v1): {header:?}"))
            })?;
        let mut term_to_id = HashMap::new();
        let mut id_to_term = Vec::new();
        let mut doc_freq = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let mut parts = line.split('\t');
            let (term, id, df) = match (parts.next(), parts.next(), parts.next()) {
                (Some(t), Some(i), Some(d)) => (t, i, d),
                _ => {
                    return Err(Error::SnapshotFormat(format!(
                        "vocabulary line {}: expected term<TAB>id<TAB>doc_freq",
                        lineno + 2
                    )))
                }
            };
            let id: usize = id.parse().map_err(|_| {
                Error::SnapshotFormat(format!("vocabulary line {}: bad id", lineno + 2))
            })?;
            let df: usize = df.parse().map_err(|_| {
                Error::SnapshotFormat(format!("vocabulary line {}: bad doc_freq", lineno + 2))
            })?;
            if id != id_to_term.len() {
                return Err(Error::SnapshotFormat(format!(
                    "vocabulary ids not dense: expected {}, got {id}",
                    id_to_term.len()
                )));
            }
            term_to_id.insert(term.to_owned(), id);
            id_to_term.push(term.to_owned());
            doc_freq.push(df);
        }
        Ok(Vocabulary {
            term_to_id,
            id_to_term,
            doc_freq,
            total_docs,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_snapshot())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_snapshot(&fs::read_to_string(path)?)
    }
}

/// Builds a vocabulary from a tokenized corpus.
///
/// Terms listed in `stopwords` are dropped, as are terms whose document
/// frequency is below `min_doc_freq` (2 removes corpus singletons). Ids are
/// assigned densely in lexicographic term order.
pub fn build_vocabulary(
    corpus: &[Vec<String>],
    stopwords: &HashSet<String>,
    min_doc_freq: usize,
) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in corpus {
        let distinct: BTreeSet<&str> = doc.iter().map(String::as_str).collect();
        for term in distinct {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    let mut term_to_id = HashMap::new();
    let mut id_to_term = Vec::new();
    let mut doc_freq = Vec::new();
    for (term, n_t) in df {
        if n_t < min_doc_freq || stopwords.contains(term) {
            continue;
        }
        term_to_id.insert(term.to_owned(), id_to_term.len());
        id_to_term.push(term.to_owned());
        doc_freq.push(n_t);
    }
    Ok(Vocabulary {
        term_to_id,
        id_to_term,
        doc_freq,
        total_docs: corpus.len(),
    })
}

/// Reads a stopword file: UTF-8, one token per line, blank lines ignored.
pub fn load_stopwords(path: &Path) -> Result<HashSet<String>> {
    let text = fs::read_to_string(path)?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect())
}

/// Sparse tf-idf document vector: (term_id, weight) pairs with strictly
/// increasing term ids.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
    dim: usize,
}

impl SparseVector {
    pub fn new(entries: Vec<(usize, f64)>, dim: usize) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.iter().all(|&(id, w)| id < dim && w.is_finite()));
        SparseVector { entries, dim }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, term_id: usize) -> f64 {
        self.entries
            .binary_search_by_key(&term_id, |&(id, _)| id)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.dim];
        for &(id, w) in &self.entries {
            dense[id] = w;
        }
        dense
    }
}

/// tf-idf vector of one document: weight(t) = f(t,d) * ln(N / n_t).
/// Out-of-vocabulary tokens are ignored.
pub fn tfidf_vector(tokens: &[String], vocab: &Vocabulary) -> SparseVector {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for token in tokens {
        if let Some(id) = vocab.id(token) {
            *counts.entry(id).or_insert(0) += 1;
        }
    }
    let entries = counts
        .into_iter()
        .map(|(id, tf)| (id, tf as f64 * vocab.idf(id)))
        .filter(|&(_, w)| w != 0.0)
        .collect();
    SparseVector::new(entries, vocab.len())
}

/// Maps tokens to vocabulary ids, dropping out-of-vocabulary tokens and
/// keeping duplicates — the raw-count document form LDA consumes.
pub fn token_ids(tokens: &[String], vocab: &Vocabulary) -> Vec<usize> {
    tokens.iter().filter_map(|t| vocab.id(t)).collect()
}

/// Term-document matrix stored document-major: one sparse tf-idf column per
/// document, n_terms rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TermDocMatrix {
    pub columns: Vec<SparseVector>,
    pub n_terms: usize,
}

impl TermDocMatrix {
    pub fn n_docs(&self) -> usize {
        self.columns.len()
    }

    /// Number of stored nonzero entries.
    pub fn nnz(&self) -> usize {
        self.columns.iter().map(|c| c.entries().len()).sum()
    }
}

/// Builds the tf-idf matrix: column j is `tfidf_vector(corpus[j], vocab)`.
pub fn build_matrix(corpus: &[Vec<String>], vocab: &Vocabulary) -> TermDocMatrix {
    let columns = corpus.iter().map(|doc| tfidf_vector(doc, vocab)).collect();
    TermDocMatrix {
        columns,
        n_terms: vocab.len(),
    }
}

/// Keeps the `k` terms with highest document frequency (ties broken by term
/// id) and re-projects the matrix onto the retained terms with dense
/// re-numbered ids. Used by the BOW-with-feature-selection baseline.
pub fn select_features(
    matrix: &TermDocMatrix,
    vocab: &Vocabulary,
    k: usize,
) -> Result<(TermDocMatrix, Vocabulary)> {
    let n = vocab.len();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "select_features: k must be in 1..={n}, got {k}"
        )));
    }
    let mut ids: Vec<usize> = (0..n).collect();
    ids.sort_by(|&a, &b| vocab.doc_freq(b).cmp(&vocab.doc_freq(a)).then(a.cmp(&b)));
    let mut kept: Vec<usize> = ids[..k].to_vec();
    kept.sort_unstable();

    let old_to_new: HashMap<usize, usize> = kept
        .iter()
        .enumerate()
        .map(|(new, &old)| (old, new))
        .collect();
    let mut term_to_id = HashMap::new();
    let mut id_to_term = Vec::new();
    let mut doc_freq = Vec::new();
    for &old in &kept {
        term_to_id.insert(vocab.term(old).to_owned(), id_to_term.len());
        id_to_term.push(vocab.term(old).to_owned());
        doc_freq.push(vocab.doc_freq(old));
    }
    let reduced_vocab = Vocabulary {
        term_to_id,
        id_to_term,
        doc_freq,
        total_docs: vocab.total_docs(),
    };

    let columns = matrix
        .columns
        .iter()
        .map(|col| {
            let entries = col
                .entries()
                .iter()
                .filter_map(|&(id, w)| old_to_new.get(&id).map(|&new| (new, w)))
                .collect();
            SparseVector::new(entries, k)
        })
        .collect();
    Ok((
        TermDocMatrix {
            columns,
            n_terms: k,
        },
        reduced_vocab,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn tokenize_lowercases() {
        assert_eq!(
            tokenize("HTC One M8 Gold"),
            toks(&["htc", "one", "m8", "gold"])
        );
    }

    #[test]
    fn tokenize_empty() {
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn tokenize_splits_on_punctuation_keeps_digit_letter_runs() {
        assert_eq!(
            tokenize("Samsung S6 32gb, like-new!"),
            toks(&["samsung", "s6", "32gb", "like", "new"])
        );
    }

    #[test]
    fn vocabulary_min_df_removes_singletons() {
        let corpus = vec![toks(&["a", "b"]), toks(&["a", "c"])];
        let vocab = build_vocabulary(&corpus, &HashSet::new(), 2).unwrap();
        assert_eq!(vocab.len(), 1);
        assert_eq!(vocab.id("a"), Some(0));
        assert_eq!(vocab.doc_freq(0), 2);
        assert_eq!(vocab.total_docs(), 2);
    }

    #[test]
    fn vocabulary_stopwords_removed() {
        let corpus = vec![toks(&["a", "b"]), toks(&["a", "c"])];
        let stop: HashSet<String> = ["a".to_string()].into_iter().collect();
        let vocab = build_vocabulary(&corpus, &stop, 2).unwrap();
        assert!(vocab.is_empty());
    }

    #[test]
    fn vocabulary_min_df_one_keeps_everything() {
        let corpus = vec![toks(&["a", "b"]), toks(&["a", "c"])];
        let vocab = build_vocabulary(&corpus, &HashSet::new(), 1).unwrap();
        assert_eq!(vocab.len(), 3);
        for t in ["a", "b", "c"] {
            assert!(vocab.id(t).is_some(), "missing {t}");
        }
    }

    #[test]
    fn vocabulary_empty_corpus_errors() {
        assert!(matches!(
            build_vocabulary(&[], &HashSet::new(), 2),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn tfidf_term_in_every_doc_has_zero_weight() {
        let corpus = vec![toks(&["a", "b"]), toks(&["a", "c"])];
        let vocab = build_vocabulary(&corpus, &HashSet::new(), 1).unwrap();
        let v = tfidf_vector(&toks(&["a"]), &vocab);
        assert_eq!(v.get(vocab.id("a").unwrap()), 0.0);
        assert!(v.entries().is_empty());
    }

    #[test]
    fn tfidf_direct_evaluation() {
        // N = 3 documents, term "x" appears in exactly one, queried doc has f = 2.
        let corpus = vec![toks(&["x", "y"]), toks(&["y"]), toks(&["y", "z"])];
        let vocab = build_vocabulary(&corpus, &HashSet::new(), 1).unwrap();
        let v = tfidf_vector(&toks(&["x", "x"]), &vocab);
        let expected = 2.0 * 3.0_f64.ln();
        assert_relative_eq!(v.get(vocab.id("x").unwrap()), expected, epsilon = 1e-12);
        assert_relative_eq!(expected, 2.1972, epsilon = 1e-4);
    }

    #[test]
    fn tfidf_out_of_vocab_tokens_ignored() {
        let corpus = vec![toks(&["a", "b"]), toks(&["a", "c"])];
        let vocab = build_vocabulary(&corpus, &HashSet::new(), 2).unwrap();
        let v = tfidf_vector(&toks(&["zzz", "b"]), &vocab);
        assert!(v.entries().is_empty());
    }

    #[test]
    fn matrix_empty_document_gives_zero_column() {
        let corpus = vec![toks(&["a", "b"]), toks(&[])];
        let vocab = build_vocabulary(&corpus, &HashSet::new(), 1).unwrap();
        let m = build_matrix(&corpus, &vocab);
        assert!(m.columns[1].entries().is_empty());
    }

    #[test]
    fn matrix_matches_hand_computed_fixture() {
        // Three docs, four surviving terms. Weights computed by hand:
        // weight = tf * ln(N / df).
        let corpus = vec![
            toks(&["red", "phone", "red"]),
            toks(&["blue", "phone"]),
            toks(&["red", "car"]),
        ];
        let vocab = build_vocabulary(&corpus, &HashSet::new(), 1).unwrap();
        // Lexicographic ids: blue=0 car=1 phone=2 red=3.
        assert_eq!(vocab.id("blue"), Some(0));
        assert_eq!(vocab.id("red"), Some(3));
        let m = build_matrix(&corpus, &vocab);
        let ln3 = 3.0_f64.ln();
        let ln15 = 1.5_f64.ln();
        let expect = [
            vec![(2, ln15), (3, 2.0 * ln15)],
            vec![(0, ln3), (2, ln15)],
            vec![(1, ln3), (3, ln15)],
        ];
        for (col, want) in m.columns.iter().zip(&expect) {
            assert_eq!(col.entries().len(), want.len());
            for (&(id, w), &(eid, ew)) in col.entries().iter().zip(want) {
                assert_eq!(id, eid);
                assert_relative_eq!(w, ew, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn select_features_full_k_is_identity() {
        let corpus = vec![toks(&["a", "b"]), toks(&["a", "c"])];
        let vocab = build_vocabulary(&corpus, &HashSet::new(), 1).unwrap();
        let m = build_matrix(&corpus, &vocab);
        let (m2, v2) = select_features(&m, &vocab, vocab.len()).unwrap();
        assert_eq!(m, m2);
        assert_eq!(vocab, v2);
    }

    #[test]
    fn select_features_keeps_highest_df() {
        let corpus = vec![toks(&["a", "b"]), toks(&["a", "c"])];
        let vocab = build_vocabulary(&corpus, &HashSet::new(), 1).unwrap();
        let m = build_matrix(&corpus, &vocab);
        let (m2, v2) = select_features(&m, &vocab, 1).unwrap();
        assert_eq!(v2.len(), 1);
        assert_eq!(v2.id("a"), Some(0));
        assert_eq!(m2.n_terms, 1);
    }

    #[test]
    fn select_features_zero_columns_stay_zero() {
        let corpus = vec![toks(&["a", "b"]), toks(&[])];
        let vocab = build_vocabulary(&corpus, &HashSet::new(), 1).unwrap();
        let m = build_matrix(&corpus, &vocab);
        let (m2, _) = select_features(&m, &vocab, 1).unwrap();
        assert!(m2.columns[1].entries().is_empty());
    }

    #[test]
    fn select_features_breaks_df_ties_by_term_id() {
        // all terms share df = 1, so the two smallest ids survive at k = 2
        let corpus = vec![toks(&["d", "c", "b", "a"])];
        let vocab = build_vocabulary(&corpus, &HashSet::new(), 1).unwrap();
        let m = build_matrix(&corpus, &vocab);
        let (_, v2) = select_features(&m, &vocab, 2).unwrap();
        assert_eq!(v2.id("a"), Some(0));
        assert_eq!(v2.id("b"), Some(1));
        assert_eq!(v2.id("c"), None);
    }

    #[test]
    fn select_features_k_out_of_range_errors() {
        let corpus = vec![toks(&["a", "b"]), toks(&["a", "c"])];
        let vocab = build_vocabulary(&corpus, &HashSet::new(), 1).unwrap();
        let m = build_matrix(&corpus, &vocab);
        assert!(select_features(&m, &vocab, 0).is_err());
        assert!(select_features(&m, &vocab, vocab.len() + 1).is_err());
    }

    #[test]
    fn vocabulary_snapshot_round_trip() {
        let corpus = vec![toks(&["a", "b", "q"]), toks(&["a", "c"])];
        let vocab = build_vocabulary(&corpus, &HashSet::new(), 1).unwrap();
        let loaded = Vocabulary::from_snapshot(&vocab.to_snapshot()).unwrap();
        assert_eq!(vocab, loaded);
    }

    #[test]
    fn vocabulary_snapshot_bad_header_errors() {
        assert!(matches!(
            Vocabulary::from_snapshot("nonsense v9\n"),
            Err(Error::SnapshotFormat(_))
        ));
    }

    proptest! {
        // Weight is zero iff the term is absent or appears in every document;
        // matrix columns always equal independent per-document tfidf calls.
        #[test]
        fn tfidf_zero_iff_absent_or_df_equals_n(docs in proptest::collection::vec(
            proptest::collection::vec("[a-e]", 0..6), 1..8)) {
            let corpus: Vec<Vec<String>> = docs;
            let vocab = build_vocabulary(&corpus, &HashSet::new(), 1).unwrap();
            let m = build_matrix(&corpus, &vocab);
            for (doc, col) in corpus.iter().zip(&m.columns) {
                prop_assert_eq!(col, &tfidf_vector(doc, &vocab));
                for id in 0..vocab.len() {
                    let present = doc.iter().any(|t| vocab.id(t) == Some(id));
                    let zero = col.get(id) == 0.0;
                    let df_is_n = vocab.doc_freq(id) == vocab.total_docs();
                    prop_assert_eq!(zero, !present || df_is_n);
                }
            }
        }

        // Linearity in tf: doubling the in-document frequency doubles the weight.
        #[test]
        fn tfidf_linear_in_term_frequency(reps in 1usize..5) {
            let corpus = vec![
                toks(&["a", "b"]),
                toks(&["b", "c"]),
                toks(&["c", "d"]),
            ];
            let vocab = build_vocabulary(&corpus, &HashSet::new(), 1).unwrap();
            let single: Vec<String> = vec!["a".to_string(); reps];
            let double: Vec<String> = vec!["a".to_string(); reps * 2];
            let w1 = tfidf_vector(&single, &vocab).get(vocab.id("a").unwrap());
            let w2 = tfidf_vector(&double, &vocab).get(vocab.id("a").unwrap());
            prop_assert!((w2 - 2.0 * w1).abs() < 1e-9);
        }
    }
}
