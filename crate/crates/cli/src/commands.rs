//! Subcommand implementations wiring the engine modules into the
//! ingest → train → recommend → evaluate workflow.

use std::fs::{self, File};
use std::io::BufReader;
use std::path::Path;

use sha2::{Digest, Sha256};

use sellrank::eval::{
    derive_judgments, generate_synthetic, load_judgments, load_queries, load_synthetic_spec,
    records_to_jsonl, save_ground_truth, save_judgments, save_queries, sweep_to_csv, sweep_topics,
    sweep_trees, JudgmentKind, SweepModelKind, SweepOptions, SweepRow,
};
use sellrank::simrank::{rank_by_criterion, Criterion, Ranking, SimilarityQuery, TopicCache};
use sellrank::store::StoreCatalog;
use sellrank::textprep::{build_matrix, build_vocabulary, token_ids, tokenize, Vocabulary};
use sellrank::topicmodel::{lda_train, nmf_train, LdaConfig, Model, ModelKind, NmfConfig};
use sellrank::voterank::{build_rows, train_forest as grow_forest, Forest, ForestConfig};

use crate::config::EngineConfig;
use crate::{CliError, CriterionArg, EvalKindArg, RecommendMode, SweepArg};

type CliResult = Result<(), CliError>;

fn fingerprint(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| {
        CliError::missing(format!("{} ({e}) — run `sellrank train`", path.display()))
    })?;
    Ok(hex_digest(&bytes))
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn load_store(config: &EngineConfig) -> Result<StoreCatalog, CliError> {
    let path = config.store_path();
    if !path.exists() {
        return Err(CliError::missing(format!(
            "store snapshot {} — run `sellrank ingest <file>` first",
            path.display()
        )));
    }
    Ok(StoreCatalog::load(&path)?)
}

fn load_model_artifacts(config: &EngineConfig) -> Result<(Model, Vocabulary, String), CliError> {
    let model_path = config.model_path();
    if !model_path.exists() {
        return Err(CliError::missing(format!(
            "trained model {} — run `sellrank train` first",
            model_path.display()
        )));
    }
    let model = Model::load(&model_path)?;
    let vocab = Vocabulary::load(&config.vocab_path()).map_err(|e| {
        CliError::missing(format!(
            "vocabulary {} ({e}) — run `sellrank train` first",
            config.vocab_path().display()
        ))
    })?;
    if model.n_terms() != vocab.len() {
        return Err(CliError::missing(format!(
            "model {} and vocabulary {} disagree on vocabulary size ({} vs {}) — retrain",
            model_path.display(),
            config.vocab_path().display(),
            model.n_terms(),
            vocab.len()
        )));
    }
    Ok((model, vocab, fingerprint(&model_path)?))
}

fn load_cache(config: &EngineConfig, model_fingerprint: &str) -> Result<TopicCache, CliError> {
    let path = config.cache_path();
    if !path.exists() {
        return Err(CliError::missing(format!(
            "topic cache {} — run `sellrank train` first",
            path.display()
        )));
    }
    let cache = TopicCache::load(&path)?;
    if cache.fingerprint() != model_fingerprint {
        return Err(CliError::missing(format!(
            "topic cache {} was built for a different model — run `sellrank train` again",
            path.display()
        )));
    }
    Ok(cache)
}

fn ranking_table(ranking: &Ranking) -> String {
    let mut out = String::new();
    let width = ranking
        .entries
        .iter()
        .map(|e| e.website.len())
        .chain(ranking.no_data.iter().map(String::len))
        .max()
        .unwrap_or(7)
        .max(7);
    out.push_str(&format!(
        "{:<4} {:<width$} {}\n",
        "rank", "website", ranking.criterion
    ));
    for (i, entry) in ranking.entries.iter().enumerate() {
        out.push_str(&format!(
            "{:<4} {:<width$} {}\n",
            i + 1,
            entry.website,
            entry.score
        ));
    }
    for website in &ranking.no_data {
        out.push_str(&format!("{:<4} {:<width$} (no data)\n", "-", website));
    }
    out
}

pub fn ingest(config: &EngineConfig, input: &Path, json: bool) -> CliResult {
    let file = File::open(input)
        .map_err(|e| CliError::input(format!("cannot open {}: {e}", input.display())))?;
    let store_path = config.store_path();
    let mut store = if store_path.exists() {
        StoreCatalog::load(&store_path)?
    } else {
        StoreCatalog::new()
    };
    let report = store.ingest(BufReader::new(file))?;
    for (line, reason) in report.errors.iter().take(10) {
        eprintln!("line {line}: rejected ({reason})");
    }
    if report.errors.len() > 10 {
        eprintln!("... and {} more rejected lines", report.errors.len() - 10);
    }
    if report.accepted == 0 {
        return Err(CliError::input(format!(
            "no documents accepted from {} ({} rejected)",
            input.display(),
            report.rejected
        )));
    }
    if let Some(parent) = store_path.parent() {
        fs::create_dir_all(parent).map_err(anyhow::Error::new)?;
    }
    store.snapshot(&store_path)?;
    if json {
        println!(
            "{}",
            serde_json::to_string(&report).map_err(anyhow::Error::new)?
        );
    } else {
        println!(
            "accepted: {}, rejected: {}",
            report.accepted, report.rejected
        );
        println!(
            "store: {} documents across {} websites -> {}",
            store.doc_count(),
            store.websites().len(),
            store_path.display()
        );
    }
    Ok(())
}

pub fn train(config: &EngineConfig, json: bool) -> CliResult {
    let store = load_store(config)?;
    let corpus: Vec<Vec<String>> = store
        .all_docs()
        .iter()
        .map(|d| tokenize(&d.description))
        .collect();
    let vocab = build_vocabulary(&corpus, &config.stopwords()?, config.min_doc_freq)?;
    if vocab.is_empty() {
        return Err(CliError::input(
            "vocabulary is empty after filtering; lower min_doc_freq or trim the stopword list",
        ));
    }
    if let Some(parent) = config.model_path().parent() {
        fs::create_dir_all(parent).map_err(anyhow::Error::new)?;
    }
    vocab.save(&config.vocab_path())?;

    let k = config.n_topics;
    let model = match config.model_kind {
        ModelKind::Nmf => {
            let matrix = build_matrix(&corpus, &vocab);
            let cfg = NmfConfig {
                k,
                max_iters: config.nmf_max_iters,
                tol: config.nmf_tol,
                seed: config.seed,
            };
            Model::Nmf(nmf_train(&matrix, &cfg)?)
        }
        ModelKind::Lda => {
            let ids: Vec<Vec<usize>> = corpus.iter().map(|t| token_ids(t, &vocab)).collect();
            let cfg = LdaConfig {
                k,
                alpha: config.lda_alpha.unwrap_or(50.0 / k.max(1) as f64),
                eta: config.lda_eta,
                n_sweeps: config.lda_sweeps,
                burn_in: config.lda_burn_in,
                seed: config.seed,
            };
            Model::Lda(lda_train(&ids, vocab.len(), &cfg)?)
        }
    };
    model.save(&config.model_path())?;
    let fp = fingerprint(&config.model_path())?;
    let cache = TopicCache::from_model(&store, &model, fp.as_str())?;
    cache.save(&config.cache_path())?;

    if json {
        let summary = serde_json::json!({
            "kind": model.kind().to_string(),
            "k": model.k(),
            "n_docs": model.n_docs(),
            "n_terms": vocab.len(),
            "model_path": config.model_path(),
            "fingerprint": fp,
        });
        println!("{summary}");
        return Ok(());
    }
    println!(
        "trained {} model: k = {}, {} documents, {} terms",
        model.kind(),
        model.k(),
        model.n_docs(),
        vocab.len()
    );
    match &model {
        Model::Nmf(m) => {
            let trace = &m.objective_trace;
            println!(
                "objective: {:.6} -> {:.6} over {} iterations (non-increasing)",
                trace.first().unwrap(),
                trace.last().unwrap(),
                trace.len() - 1
            );
        }
        Model::Lda(m) => {
            println!(
                "gibbs sweeps: {} ({} burn-in), alpha = {}, eta = {}",
                m.config.n_sweeps, m.config.burn_in, m.config.alpha, m.config.eta
            );
        }
    }
    println!("model -> {}", config.model_path().display());
    println!(
        "topic cache ({} documents) -> {}",
        cache.len(),
        config.cache_path().display()
    );
    Ok(())
}

pub fn topics(config: &EngineConfig, words: usize, docs: usize, json: bool) -> CliResult {
    let store = load_store(config)?;
    let (model, vocab, _) = load_model_artifacts(config)?;
    if model.n_docs() != store.doc_count() {
        return Err(CliError::missing(
            "model was trained on a different store — run `sellrank train` again",
        ));
    }
    let all_docs = store.all_docs();
    let mut report = Vec::new();
    for topic in 0..model.k() {
        let top_words: Vec<(String, f64)> = model
            .top_words(topic, words)?
            .into_iter()
            .map(|(id, weight)| (vocab.term(id).to_owned(), weight))
            .collect();
        let mut weighted_docs: Vec<(usize, f64)> = (0..model.n_docs())
            .map(|j| (j, model.doc_weight(topic, j)))
            .collect();
        weighted_docs.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let top_docs: Vec<String> = weighted_docs
            .iter()
            .take(docs)
            .map(|&(j, _)| {
                let d = all_docs[j];
                let mut text = d.description.clone();
                if text.len() > 60 {
                    let cut = (0..=60)
                        .rev()
                        .find(|&i| text.is_char_boundary(i))
                        .unwrap_or(0);
                    text.truncate(cut);
                    text.push('…');
                }
                format!("[{}] {}", d.website, text)
            })
            .collect();
        report.push((topic, top_words, top_docs));
    }
    if json {
        let value: Vec<serde_json::Value> = report
            .iter()
            .map(|(topic, words, docs)| {
                serde_json::json!({
                    "topic": topic,
                    "top_words": words.iter().map(|(t, w)| serde_json::json!({"term": t, "weight": w})).collect::<Vec<_>>(),
                    "top_documents": docs,
                })
            })
            .collect();
        println!(
            "{}",
            serde_json::to_string(&value).map_err(anyhow::Error::new)?
        );
        return Ok(());
    }
    for (topic, words, docs) in report {
        let terms: Vec<String> = words.iter().map(|(t, _)| t.clone()).collect();
        println!("topic {topic}: {}", terms.join(" "));
        for doc in docs {
            println!("    {doc}");
        }
    }
    Ok(())
}

pub fn train_forest(config: &EngineConfig, json: bool) -> CliResult {
    let store = load_store(config)?;
    let (_, _, fp) = load_model_artifacts(config)?;
    let cache = load_cache(config, &fp)?;
    let (schema, rows) = build_rows(&store, &cache)?;
    let forest = grow_forest(
        &schema,
        &rows,
        &ForestConfig {
            n_trees: config.n_trees,
            m: config.m_features,
            min_leaf: config.min_leaf,
            max_depth: None,
            seed: config.seed,
        },
    )?;
    forest.save(&config.forest_path())?;
    if json {
        let summary = serde_json::json!({
            "n_trees": forest.n_trees(),
            "m": forest.m,
            "n_rows": rows.len(),
            "labels": schema.labels,
            "forest_path": config.forest_path(),
        });
        println!("{summary}");
    } else {
        println!(
            "trained forest: {} trees, m = {}, {} rows, {} websites",
            forest.n_trees(),
            forest.m,
            rows.len(),
            schema.labels.len()
        );
        println!("forest -> {}", config.forest_path().display());
    }
    Ok(())
}

pub fn recommend(
    config: &EngineConfig,
    description: &str,
    category: &str,
    price: Option<f64>,
    mode: RecommendMode,
    json: bool,
) -> CliResult {
    let store = load_store(config)?;
    let (model, vocab, fp) = load_model_artifacts(config)?;
    let tokens = tokenize(description);
    let topics = model.fold_in(&tokens, &vocab, &config.fold_in_options());

    let ranking = match mode {
        RecommendMode::Quantity | RecommendMode::AvgPrice => {
            let cache = load_cache(config, &fp)?;
            let criterion = match mode {
                RecommendMode::Quantity => Criterion::Quantity,
                _ => Criterion::AveragePrice,
            };
            rank_by_criterion(
                &store,
                &cache,
                &SimilarityQuery {
                    topics: topics.weights().to_vec(),
                    category: category.to_owned(),
                    criterion,
                    similarity_threshold: config.similarity_threshold,
                    price_direction: config.price_direction,
                },
            )?
        }
        RecommendMode::Votes => {
            let price =
                price.ok_or_else(|| CliError::input("--price is required in votes mode"))?;
            let forest_path = config.forest_path();
            if !forest_path.exists() {
                return Err(CliError::missing(format!(
                    "forest snapshot {} — run `sellrank train-forest` first",
                    forest_path.display()
                )));
            }
            let forest = Forest::load(&forest_path)?;
            forest
                .vote_rank(topics.weights(), category, price)?
                .to_ranking()
        }
    };
    if json {
        println!("{}", ranking.to_json());
    } else {
        print!("{}", ranking_table(&ranking));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    config: &EngineConfig,
    queries_path: &Path,
    judgments_path: &Path,
    sweep: SweepArg,
    values: &[usize],
    kind: Option<EvalKindArg>,
    criterion: CriterionArg,
    out: Option<&Path>,
    json: bool,
) -> CliResult {
    let store = load_store(config)?;
    let queries = load_queries(queries_path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", queries_path.display())))?;
    let judgments = load_judgments(judgments_path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", judgments_path.display())))?;
    if values.is_empty() {
        return Err(CliError::input("--values must list at least one parameter"));
    }
    if values.contains(&0) {
        return Err(CliError::input("--values entries must be >= 1"));
    }
    let opts = SweepOptions {
        criterion: match criterion {
            CriterionArg::Quantity => Criterion::Quantity,
            CriterionArg::AvgPrice => Criterion::AveragePrice,
        },
        price_direction: config.price_direction,
        similarity_threshold: config.similarity_threshold,
        min_doc_freq: config.min_doc_freq,
        stopwords: config.stopwords()?,
        nmf_max_iters: config.nmf_max_iters,
        nmf_tol: config.nmf_tol,
        lda_alpha: config.lda_alpha,
        lda_eta: config.lda_eta,
        lda_sweeps: config.lda_sweeps,
        lda_burn_in: config.lda_burn_in,
        fold_in: config.fold_in_options(),
        forest_min_leaf: config.min_leaf,
        forest_m: config.m_features,
        seed: config.seed,
    };

    let rows: Vec<SweepRow> = match sweep {
        SweepArg::Topics => {
            let sweep_kind = match kind {
                Some(EvalKindArg::Nmf) => SweepModelKind::Nmf,
                Some(EvalKindArg::Lda) => SweepModelKind::Lda,
                Some(EvalKindArg::Bow) => SweepModelKind::Bow,
                None => match config.model_kind {
                    ModelKind::Nmf => SweepModelKind::Nmf,
                    ModelKind::Lda => SweepModelKind::Lda,
                },
            };
            sweep_topics(&store, &queries, &judgments, sweep_kind, values, &opts)?
        }
        SweepArg::Trees => {
            let (model, vocab, _) = load_model_artifacts(config)?;
            if model.n_docs() != store.doc_count() {
                return Err(CliError::missing(
                    "model was trained on a different store — run `sellrank train` again",
                ));
            }
            sweep_trees(&store, &model, &vocab, &queries, &judgments, values, &opts)?
        }
    };

    let csv = sweep_to_csv(&rows);
    if let Some(path) = out {
        fs::write(path, &csv).map_err(anyhow::Error::new)?;
    }
    if json {
        println!(
            "{}",
            serde_json::to_string(&rows).map_err(anyhow::Error::new)?
        );
        return Ok(());
    }
    print!("{csv}");
    println!();
    println!(
        "{:<10} {:<12} {:<10} skipped",
        "param", "mean_ndpm", "queries"
    );
    for row in &rows {
        println!(
            "{:<10} {:<12.4} {:<10} {}",
            row.param, row.mean_ndpm, row.n_queries, row.n_skipped
        );
    }
    Ok(())
}

pub fn synth(spec_path: &Path, out_dir: &Path, json: bool) -> CliResult {
    let spec = load_synthetic_spec(spec_path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", spec_path.display())))?;
    let data = generate_synthetic(&spec)?;
    fs::create_dir_all(out_dir).map_err(anyhow::Error::new)?;
    fs::write(
        out_dir.join("corpus.jsonl"),
        records_to_jsonl(&data.records),
    )
    .map_err(anyhow::Error::new)?;
    save_ground_truth(&out_dir.join("ground_truth.json"), &data.truth)?;
    save_queries(&out_dir.join("queries.json"), &data.queries)?;
    let judgment_sets = [
        ("judgments_quantity.json", JudgmentKind::Quantity),
        ("judgments_avg_price.json", JudgmentKind::AveragePrice),
        ("judgments_votes.json", JudgmentKind::Votes),
    ];
    for (name, kind) in judgment_sets {
        let judgments = derive_judgments(&data.truth, &data.queries, kind);
        save_judgments(&out_dir.join(name), &judgments)?;
    }
    if json {
        let summary = serde_json::json!({
            "documents": data.records.len(),
            "queries": data.queries.len(),
            "websites": spec.websites.len(),
            "categories": spec.categories.len(),
            "out_dir": out_dir,
        });
        println!("{summary}");
    } else {
        println!(
            "generated {} documents, {} queries ({} websites x {} categories) -> {}",
            data.records.len(),
            data.queries.len(),
            spec.websites.len(),
            spec.categories.len(),
            out_dir.display()
        );
    }
    Ok(())
}
