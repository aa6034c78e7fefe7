//! Softmax cross-attention from a query feature to the memory bank, with
//! fixed seeded projections, and closed-form cost counters for every method.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{flops, DenseMatrix};

pub const DEFAULT_PROJECTED_DIM: usize = 512;
pub const DEFAULT_FEATURE_DIM: usize = 2304;
pub const DEFAULT_MEMORY_ROWS: usize = 183;

/// Fixed projection weights. Never trained.
///
/// Entries are drawn from ChaCha8 seeded with `seed`: `w_q`, `w_k`, `w_v`
/// uniformly in `±1/√d` and `w_o` uniformly in `±1/√d_u` (fan-in scaling),
/// generated in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionWeights {
    pub w_q: DenseMatrix,
    pub w_k: DenseMatrix,
    pub w_v: DenseMatrix,
    pub w_o: DenseMatrix,
    pub d_u: usize,
    pub seed: u64,
}

impl AttentionWeights {
    pub fn seeded(d: usize, d_u: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |rows: usize, cols: usize, bound: f64| {
            let data = (0..rows * cols).map(|_| rng.random_range(-bound..bound)).collect();
            DenseMatrix::new(rows, cols, data).expect("bounded draws are finite")
        };
        let in_bound = 1.0 / (d as f64).sqrt();
        let out_bound = 1.0 / (d_u as f64).sqrt();
        let w_q = draw(d, d_u, in_bound);
        let w_k = draw(d, d_u, in_bound);
        let w_v = draw(d, d_u, in_bound);
        let w_o = draw(d_u, d, out_bound);
        Self { w_q, w_k, w_v, w_o, d_u, seed }
    }

    pub fn dim(&self) -> usize {
        self.w_q.rows()
    }
}

/// Divisor applied to the query-key scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoreScale {
    /// `√d`, the feature width.
    #[default]
    FeatureDim,
    /// `√d_u`, the projected width.
    ProjectedDim,
}

/// Keys and values of a memory matrix, computed once and reused across
/// queries.
#[derive(Debug, Clone)]
pub struct ProjectedMemory {
    pub keys: DenseMatrix,
    pub values: DenseMatrix,
}

pub fn project_memory(m: &DenseMatrix, w: &AttentionWeights) -> Result<ProjectedMemory> {
    if m.rows() == 0 {
        return Err(Error::EmptyMemory);
    }
    if m.cols() != w.dim() {
        return Err(Error::dim(w.dim(), m.cols()));
    }
    Ok(ProjectedMemory { keys: m.matmul(&w.w_k)?, values: m.matmul(&w.w_v)? })
}

/// `h + softmax(h w_q · (m w_k)ᵀ / s) · (m w_v) · w_o`.
pub fn cross_attention(h: &[f64], m: &DenseMatrix, w: &AttentionWeights, scale: ScoreScale) -> Result<Vec<f64>> {
    if h.len() != w.dim() {
        return Err(Error::dim(w.dim(), h.len()));
    }
    let memory = project_memory(m, w)?;
    cross_attention_cached(h, &memory, w, scale)
}

/// [`cross_attention`] against precomputed keys and values.
pub fn cross_attention_cached(
    h: &[f64],
    memory: &ProjectedMemory,
    w: &AttentionWeights,
    scale: ScoreScale,
) -> Result<Vec<f64>> {
    if h.len() != w.dim() {
        return Err(Error::dim(w.dim(), h.len()));
    }
    if memory.keys.rows() == 0 {
        return Err(Error::EmptyMemory);
    }
    let q = w.w_q.left_mul_vec(h)?;
    let divisor = match scale {
        ScoreScale::FeatureDim => (w.dim() as f64).sqrt(),
        ScoreScale::ProjectedDim => (w.d_u as f64).sqrt(),
    };
    let scores: Vec<f64> = memory.keys.mul_vec(&q)?.into_iter().map(|s| s / divisor).collect();
    let weights = softmax(&scores);
    let attended = memory.values.left_mul_vec(&weights)?;
    let update = w.w_o.left_mul_vec(&attended)?;
    Ok(h.iter().zip(update).map(|(a, b)| a + b).collect())
}

/// Max-subtracted softmax.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    flops::add(scores.len());
    exps.into_iter().map(|e| e / total).collect()
}

/// Whether key/value projections of the memory are charged to each query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KvProjection {
    PerQuery,
    Cached,
}

/// Multiply-accumulates for one [`cross_attention`] query:
/// `d·d_u` (query) `+ 2·N·d·d_u` (keys and values, unless cached)
/// `+ N·d_u` (scores) `+ N·d_u` (weighted sum) `+ d_u·d` (output).
pub fn flops_attention(n_mem: u64, d: u64, d_u: u64, kv: KvProjection) -> u64 {
    let kv_cost = match kv {
        KvProjection::PerQuery => 2 * n_mem * d * d_u,
        KvProjection::Cached => 0,
    };
    d * d_u + kv_cost + 2 * n_mem * d_u + d_u * d
}

/// Multiply-accumulates for one projection-reconstruction: `2·n_c·d`.
pub fn flops_memsvd(n_c: u64, d: u64) -> u64 {
    2 * n_c * d
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisCost {
    /// Covariance eigendecomposition route: `N²·d`.
    Exact,
    /// Randomized range finder with known target rank: `n_c·N·d`.
    Randomized,
    /// One online update with a clip of `clip_rows` rows:
    /// `(n_c + N)³ + 2·N·n_c·d`. Independent of how much has been streamed.
    OnlineUpdate { clip_rows: u64 },
}

/// Leading-order multiply-accumulate model for producing the basis. All
/// constants are 1, so the counters compare scaling, not wall time.
pub fn flops_basis(n_mem: u64, d: u64, n_c: u64, method: BasisCost) -> u64 {
    match method {
        BasisCost::Exact => n_mem * n_mem * d,
        BasisCost::Randomized => n_c * n_mem * d,
        BasisCost::OnlineUpdate { clip_rows } => {
            let k = n_c + clip_rows;
            k * k * k + 2 * clip_rows * n_c * d
        }
    }
}
