//! Non-negative matrix factorization by multiplicative updates.
//!
//! Minimizes ‖A − WH‖_F subject to W ≥ 0, H ≥ 0, where A is the sparse
//! n_terms × n_docs tf-idf matrix. Each iteration applies the H update then
//! the W update:
//!
//! ```text
//! H ← H ⊙ (WᵀA) / (WᵀW H)      W ← W ⊙ (A Hᵀ) / (W H Hᵀ)
//! ```
//!
//! Denominators carry a 1e-12 epsilon: the update is undefined at exact
//! zeros, and the epsilon preserves nonnegativity and keeps exact
//! factorizations fixed points to within epsilon.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TopicDistribution;
use crate::textprep::{SparseVector, TermDocMatrix};
use crate::{Error, Result};

/// Denominator guard for the multiplicative updates.
const EPS: f64 = 1e-12;

/// Iterations between convergence checks; the stop test compares the error
/// across this window.
const CONVERGENCE_WINDOW: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct NmfConfig {
    pub k: usize,
    pub max_iters: usize,
    /// Relative decrease of ‖A − WH‖_F over a 10-iteration window below which
    /// training stops.
    pub tol: f64,
    pub seed: u64,
}

impl NmfConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        NmfConfig {
            k,
            max_iters: 200,
            tol: 1e-4,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmfModel {
    /// Word-to-topic factor, n_terms × k, entries ≥ 0.
    pub w: Array2<f64>,
    /// Document-to-topic factor, k × n_docs, entries ≥ 0.
    pub h: Array2<f64>,
    /// ‖A − WH‖_F before training and after every iteration.
    pub objective_trace: Vec<f64>,
    pub config: NmfConfig,
}

impl NmfModel {
    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn n_terms(&self) -> usize {
        self.w.nrows()
    }

    pub fn n_docs(&self) -> usize {
        self.h.ncols()
    }
}

/// Trains with seeded uniform-random initialization in (0, 1]. Strictly
/// positive starting values matter: a multiplicative update can never revive
/// an exact zero.
pub fn nmf_train(a: &TermDocMatrix, config: &NmfConfig) -> Result<NmfModel> {
    validate(a, config.k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let w0 = Array2::from_shape_fn((a.n_terms, config.k), |_| 1.0 - rng.random::<f64>());
    let h0 = Array2::from_shape_fn((config.k, a.n_docs()), |_| 1.0 - rng.random::<f64>());
    nmf_train_from(a, config, w0, h0)
}

/// Trains from caller-provided factors (entries must be ≥ 0 and conformable).
pub fn nmf_train_from(
    a: &TermDocMatrix,
    config: &NmfConfig,
    w0: Array2<f64>,
    h0: Array2<f64>,
) -> Result<NmfModel> {
    validate(a, config.k)?;
    if config.max_iters < 1 {
        return Err(Error::InvalidParameter(
            "nmf: max_iters must be >= 1".into(),
        ));
    }
    if w0.dim() != (a.n_terms, config.k) || h0.dim() != (config.k, a.n_docs()) {
        return Err(Error::DimensionMismatch {
            expected: a.n_terms * config.k,
            actual: w0.len(),
        });
    }
    let mut w = w0;
    let mut h = h0;
    let a_norm_sq = frob_sq(a);
    let mut trace = Vec::with_capacity(config.max_iters + 1);
    trace.push(objective(a, a_norm_sq, &w, &h));

    for iter in 1..=config.max_iters {
        // H ← H ⊙ (WᵀA) / (WᵀW H + eps)
        let wta = left_t_dot(&w, a);
        let wtwh = w.t().dot(&w).dot(&h);
        azip_update(&mut h, &wta, &wtwh);

        // W ← W ⊙ (A Hᵀ) / (W H Hᵀ + eps)
        let aht = right_dot_t(a, &h);
        let whht = w.dot(&h.dot(&h.t()));
        azip_update(&mut w, &aht, &whht);

        trace.push(objective(a, a_norm_sq, &w, &h));

        if iter >= CONVERGENCE_WINDOW {
            let prev = trace[iter - CONVERGENCE_WINDOW];
            let cur = trace[iter];
            if prev - cur <= config.tol * prev.max(f64::MIN_POSITIVE) {
                break;
            }
        }
    }

    Ok(NmfModel {
        w,
        h,
        objective_trace: trace,
        config: config.clone(),
    })
}

/// Infers the topic distribution of one unseen tf-idf vector: a single fresh
/// H column is fitted by the H update with W frozen, then L1-normalized.
/// A zero input folds to the uniform distribution.
pub fn nmf_fold_in(
    model: &NmfModel,
    x: &SparseVector,
    max_iters: usize,
    tol: f64,
) -> Result<TopicDistribution> {
    if x.dim() != model.n_terms() {
        return Err(Error::DimensionMismatch {
            expected: model.n_terms(),
            actual: x.dim(),
        });
    }
    let k = model.k();
    // numerator Wᵀx is constant across iterations
    let mut wtx = Array1::<f64>::zeros(k);
    for &(t, v) in x.entries() {
        for c in 0..k {
            wtx[c] += model.w[(t, c)] * v;
        }
    }
    let wtw = model.w.t().dot(&model.w);
    let x_norm_sq: f64 = x.entries().iter().map(|&(_, v)| v * v).sum();

    let mut h = Array1::<f64>::ones(k);
    let mut prev_err = fold_in_err(x_norm_sq, &wtx, &wtw, &h);
    for _ in 0..max_iters {
        let denom = wtw.dot(&h);
        for c in 0..k {
            h[c] *= wtx[c] / (denom[c] + EPS);
        }
        let err = fold_in_err(x_norm_sq, &wtx, &wtw, &h);
        if (prev_err - err).abs() <= tol * prev_err.max(f64::MIN_POSITIVE) {
            break;
        }
        prev_err = err;
    }
    Ok(TopicDistribution::from_raw(h.to_vec()))
}

/// ‖A − WH‖_F with conformability checks. Uses the expansion
/// ‖A‖² − 2⟨A, WH⟩ + ⟨WᵀW, HHᵀ⟩ so the cost is proportional to the number
/// of stored entries rather than the dense product.
pub fn frobenius_error(a: &TermDocMatrix, w: &Array2<f64>, h: &Array2<f64>) -> Result<f64> {
    if w.nrows() != a.n_terms {
        return Err(Error::DimensionMismatch {
            expected: a.n_terms,
            actual: w.nrows(),
        });
    }
    if h.ncols() != a.n_docs() {
        return Err(Error::DimensionMismatch {
            expected: a.n_docs(),
            actual: h.ncols(),
        });
    }
    if w.ncols() != h.nrows() {
        return Err(Error::DimensionMismatch {
            expected: w.ncols(),
            actual: h.nrows(),
        });
    }
    Ok(objective(a, frob_sq(a), w, h))
}

fn validate(a: &TermDocMatrix, k: usize) -> Result<()> {
    if k < 1 {
        return Err(Error::InvalidParameter("nmf: k must be >= 1".into()));
    }
    if a.nnz() == 0 {
        return Err(Error::InvalidParameter(
            "nmf: matrix has no nonzero entries".into(),
        ));
    }
    Ok(())
}

fn azip_update(base: &mut Array2<f64>, numer: &Array2<f64>, denom: &Array2<f64>) {
    ndarray::Zip::from(base)
        .and(numer)
        .and(denom)
        .for_each(|b, &n, &d| {
            *b *= n / (d + EPS);
        });
}

/// WᵀA over the sparse columns of A: k × n_docs.
fn left_t_dot(w: &Array2<f64>, a: &TermDocMatrix) -> Array2<f64> {
    let k = w.ncols();
    let mut out = Array2::zeros((k, a.n_docs()));
    for (j, col) in a.columns.iter().enumerate() {
        for &(t, v) in col.entries() {
            for c in 0..k {
                out[(c, j)] += w[(t, c)] * v;
            }
        }
    }
    out
}

/// AHᵀ over the sparse columns of A: n_terms × k.
fn right_dot_t(a: &TermDocMatrix, h: &Array2<f64>) -> Array2<f64> {
    let k = h.nrows();
    let mut out = Array2::zeros((a.n_terms, k));
    for (j, col) in a.columns.iter().enumerate() {
        for &(t, v) in col.entries() {
            for c in 0..k {
                out[(t, c)] += v * h[(c, j)];
            }
        }
    }
    out
}

fn frob_sq(a: &TermDocMatrix) -> f64 {
    a.columns
        .iter()
        .flat_map(|c| c.entries())
        .map(|&(_, v)| v * v)
        .sum()
}

fn objective(a: &TermDocMatrix, a_norm_sq: f64, w: &Array2<f64>, h: &Array2<f64>) -> f64 {
    let k = w.ncols();
    // ⟨A, WH⟩ over stored entries only
    let mut cross = 0.0;
    for (j, col) in a.columns.iter().enumerate() {
        for &(t, v) in col.entries() {
            let mut wh = 0.0;
            for c in 0..k {
                wh += w[(t, c)] * h[(c, j)];
            }
            cross += v * wh;
        }
    }
    let wtw = w.t().dot(w);
    let hht = h.dot(&h.t());
    let wh_norm_sq: f64 = wtw.iter().zip(hht.iter()).map(|(x, y)| x * y).sum();
    // cancellation can leave a tiny negative residue near exact fits
    (a_norm_sq - 2.0 * cross + wh_norm_sq).max(0.0).sqrt()
}

fn fold_in_err(x_norm_sq: f64, wtx: &Array1<f64>, wtw: &Array2<f64>, h: &Array1<f64>) -> f64 {
    let quad = h.dot(&wtw.dot(h));
    (x_norm_sq - 2.0 * wtx.dot(h) + quad).max(0.0).sqrt()
}
