//! Embedded document store: one index per website plus an inverted index
//! over description tokens, serving conjunctive term search and per-website
//! aggregation.
//!
//! The inverted index stores token presence only — term frequencies live in
//! the tf-idf matrices built by [`crate::textprep`]. Documents are the source
//! of truth: snapshots persist the documents and the index is rebuilt on
//! load.
//!
//! Single-writer, multiple-reader: `&mut self` methods (ingestion) are
//! exclusive, `&self` methods (search, aggregate, snapshot) may run
//! concurrently with each other.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::textprep::tokenize;
use crate::{Error, Result};

/// One marketplace post.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: u64,
    pub website: String,
    pub description: String,
    pub category: String,
    pub price: f64,
}

/// Raw ingestion record: one JSONL object. Unknown extra fields are ignored;
/// any `doc_id` in the input is discarded and re-keyed at ingestion.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct RawRecord {
    pub website: String,
    pub description: String,
    pub category: String,
    pub price: f64,
}

impl RawRecord {
    fn validate(&self) -> std::result::Result<(), String> {
        if self.website.trim().is_empty() {
            return Err("empty website".into());
        }
        if self.description.trim().is_empty() {
            return Err("empty description".into());
        }
        if self.category.trim().is_empty() {
            return Err("empty category".into());
        }
        if !self.price.is_finite() || self.price < 0.0 {
            return Err(format!("invalid price {}", self.price));
        }
        Ok(())
    }
}

/// Per-website index: documents plus postings from token to sorted doc ids.
#[derive(Debug, Clone, Default)]
pub struct WebsiteIndex {
    postings: BTreeMap<String, Vec<u64>>,
    docs: BTreeMap<u64, Document>,
}

impl WebsiteIndex {
    fn insert(&mut self, doc: Document) {
        for token in BTreeSet::from_iter(tokenize(&doc.description)) {
            let list = self.postings.entry(token).or_default();
            // doc ids are assigned monotonically, so pushing keeps lists sorted
            debug_assert!(list.last().is_none_or(|&last| last < doc.doc_id));
            list.push(doc.doc_id);
        }
        self.docs.insert(doc.doc_id, doc);
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn docs(&self) -> impl Iterator<Item = &Document> {
        self.docs.values()
    }

    fn postings(&self, term: &str) -> &[u64] {
        self.postings.get(term).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Outcome of one ingestion run.
#[derive(Debug, Clone, Default, Serialize)]
pub struct IngestReport {
    pub accepted: usize,
    pub rejected: usize,
    /// (1-based line number, reason) for every rejected line.
    pub errors: Vec<(usize, String)>,
}

/// Aggregation selector for [`StoreCatalog::aggregate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregateField {
    Count,
    Prices,
}

/// Aggregation result.
#[derive(Debug, Clone, PartialEq)]
pub enum Aggregate {
    Count(usize),
    Prices(Vec<f64>),
}

const STORE_FORMAT: &str = "sellrank-store";
const STORE_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct StoreHeader {
    format: String,
    version: u32,
    doc_count: usize,
    next_doc_id: u64,
}

/// The whole catalog: one [`WebsiteIndex`] per website.
#[derive(Debug, Clone, Default)]
pub struct StoreCatalog {
    indices: BTreeMap<String, WebsiteIndex>,
    websites: Vec<String>,
    next_doc_id: u64,
}

impl StoreCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Website labels in first-seen order.
    pub fn websites(&self) -> &[String] {
        &self.websites
    }

    pub fn index(&self, website: &str) -> Result<&WebsiteIndex> {
        self.indices
            .get(website)
            .ok_or_else(|| Error::UnknownWebsite(website.to_owned()))
    }

    pub fn doc_count(&self) -> usize {
        self.indices.values().map(WebsiteIndex::len).sum()
    }

    /// All documents across websites, ascending doc id. This is the canonical
    /// corpus order used when building matrices and training models.
    pub fn all_docs(&self) -> Vec<&Document> {
        let mut docs: Vec<&Document> = self.indices.values().flat_map(|i| i.docs()).collect();
        docs.sort_by_key(|d| d.doc_id);
        docs
    }

    pub fn doc(&self, doc_id: u64) -> Option<&Document> {
        self.indices.values().find_map(|i| i.docs.get(&doc_id))
    }

    /// Distinct categories across the whole store, sorted.
    pub fn categories(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self
            .indices
            .values()
            .flat_map(|i| i.docs())
            .map(|d| d.category.as_str())
            .collect();
        set.into_iter().map(str::to_owned).collect()
    }

    fn insert(&mut self, record: RawRecord) -> u64 {
        let doc_id = self.next_doc_id;
        self.next_doc_id += 1;
        if !self.indices.contains_key(&record.website) {
            self.websites.push(record.website.clone());
            self.indices
                .insert(record.website.clone(), WebsiteIndex::default());
        }
        let doc = Document {
            doc_id,
            website: record.website.clone(),
            description: record.description,
            category: record.category,
            price: record.price,
        };
        self.indices.get_mut(&record.website).unwrap().insert(doc);
        doc_id
    }

    /// Ingests a JSONL stream: one object per line with fields `website`,
    /// `description`, `category`, `price`. Malformed or invalid lines are
    /// rejected and reported with their line number; a previously unseen
    /// website simply gets a fresh index.
    pub fn ingest<R: BufRead>(&mut self, reader: R) -> Result<IngestReport> {
        let mut report = IngestReport::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<RawRecord>(&line) {
                Ok(record) => match record.validate() {
                    Ok(()) => {
                        self.insert(record);
                        report.accepted += 1;
                    }
                    Err(reason) => {
                        report.rejected += 1;
                        report.errors.push((i + 1, reason));
                    }
                },
                Err(e) => {
                    report.rejected += 1;
                    report.errors.push((i + 1, format!("malformed json: {e}")));
                }
            }
        }
        Ok(report)
    }

    /// Ingests in-memory records (used by the synthetic generator).
    pub fn ingest_records(&mut self, records: impl IntoIterator<Item = RawRecord>) -> IngestReport {
        let mut report = IngestReport::default();
        for (i, record) in records.into_iter().enumerate() {
            match record.validate() {
                Ok(()) => {
                    self.insert(record);
                    report.accepted += 1;
                }
                Err(reason) => {
                    report.rejected += 1;
                    report.errors.push((i + 1, reason));
                }
            }
        }
        report
    }

    /// Conjunctive term search on one website's inverted index: doc ids whose
    /// token sets contain every query term, ascending. An empty term list
    /// matches everything.
    pub fn search(&self, website: &str, terms: &[String]) -> Result<Vec<u64>> {
        let index = self.index(website)?;
        if terms.is_empty() {
            return Ok(index.docs.keys().copied().collect());
        }
        // Intersect postings, starting from the rarest term.
        let mut lists: Vec<&[u64]> = terms.iter().map(|t| index.postings(t)).collect();
        lists.sort_by_key(|l| l.len());
        let mut result: Vec<u64> = lists[0].to_vec();
        for list in &lists[1..] {
            if result.is_empty() {
                break;
            }
            result.retain(|id| list.binary_search(id).is_ok());
        }
        Ok(result)
    }

    /// Per-website, per-category aggregation: document count or the raw
    /// (unsorted) price list.
    pub fn aggregate(
        &self,
        website: &str,
        category: &str,
        field: AggregateField,
    ) -> Result<Aggregate> {
        let index = self.index(website)?;
        let matching = index.docs().filter(|d| d.category == category);
        Ok(match field {
            AggregateField::Count => Aggregate::Count(matching.count()),
            AggregateField::Prices => Aggregate::Prices(matching.map(|d| d.price).collect()),
        })
    }

    /// Writes the versioned snapshot: a JSON header line, then one document
    /// per line. The inverted index is rebuilt on load.
    pub fn snapshot(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        let header = StoreHeader {
            format: STORE_FORMAT.into(),
            version: STORE_VERSION,
            doc_count: self.doc_count(),
            next_doc_id: self.next_doc_id,
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        // ascending doc id == insertion order, so first-seen website order
        // survives the round trip
        for doc in self.all_docs() {
            serde_json::to_writer(&mut out, doc)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut lines = BufReader::new(File::open(path)?).lines();
        let header_line = lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::SnapshotFormat("empty store snapshot".into()))?;
        let header: StoreHeader = serde_json::from_str(&header_line)
            .map_err(|e| Error::SnapshotFormat(format!("bad store header: {e}")))?;
        if header.format != STORE_FORMAT || header.version != STORE_VERSION {
            return Err(Error::SnapshotFormat(format!(
                "unsupported store snapshot {} v{} (want {} v{})",
                header.format, header.version, STORE_FORMAT, STORE_VERSION
            )));
        }
        let mut catalog = StoreCatalog::new();
        let mut count = 0usize;
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let doc: Document = serde_json::from_str(&line).map_err(|e| {
                Error::SnapshotFormat(format!("store snapshot line {}: {e}", i + 2))
            })?;
            if !catalog.indices.contains_key(&doc.website) {
                catalog.websites.push(doc.website.clone());
                catalog
                    .indices
                    .insert(doc.website.clone(), WebsiteIndex::default());
            }
            catalog.indices.get_mut(&doc.website).unwrap().insert(doc);
            count += 1;
        }
        if count != header.doc_count {
            return Err(Error::SnapshotFormat(format!(
                "store snapshot truncated: header says {} documents, found {count}",
                header.doc_count
            )));
        }
        catalog.next_doc_id = header.next_doc_id;
        Ok(catalog)
    }
}
