//! Ranking engine for choosing where to sell an item on C2C marketplaces.
//!
//! Given an item's description, category and desired price, the engine ranks
//! candidate selling websites. The pipeline:
//!
//! 1. [`store`] — embedded document store with one index per website and an
//!    inverted index over description tokens.
//! 2. [`textprep`] — tokenization, vocabulary building and tf-idf weighting.
//! 3. [`topicmodel`] — NMF (multiplicative updates) and LDA (collapsed Gibbs)
//!    factorizations of the term-document matrix, plus fold-in inference for
//!    unseen documents.
//! 4. [`simrank`] — cosine similarity in topic space; websites ranked by the
//!    quantity or inter-quartile average price of similar items.
//! 5. [`voterank`] — random forest over (topics, category, price) whose
//!    per-tree votes rank websites.
//! 6. [`eval`] — NDPM ranking metric, synthetic corpus generation and the
//!    topic-count / tree-count sweep harness.

pub mod error;
pub mod eval;
pub mod simrank;
pub mod store;
pub mod textprep;
pub mod topicmodel;
pub mod voterank;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
