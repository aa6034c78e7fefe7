//! Online maintenance of the memory basis.
//!
//! Instead of storing every clip, the state keeps `{u_mem, σ}` and folds each
//! arriving clip `H` (`N × d`) in with a rank-`N` SVD update:
//!
//! 1. `L = u_mem · Hᵀ` and the residual `Ĥ = H (I − u_memᵀ u_mem)`;
//! 2. `Q R = Ĥᵀ` (thin QR, `Q ⟂ u_mem`);
//! 3. `U' Σ' V'ᵀ = [[λ Σ, L], [0, R]]`, an `(n_c + N)`-square block;
//! 4. `u_memᵀ ← [u_memᵀ  Q] · U'` and `σ ← Σ'`, both truncated back to `n_c`.
//!
//! With `λ = 1` and no energy lost to truncation this reproduces the SVD of
//! all data seen so far. Smaller `λ` discounts older clips geometrically.

use crate::bank::{stack_clips, ClipFeatures, MemoryBank};
use crate::basis::{compute_basis, BasisMethod, SubspaceBasis};
use crate::error::{Error, Result};
use crate::linalg::{
    flops, householder_qr, orthonormality_residual, subspace_distance, svd, DenseMatrix,
};

pub const DEFAULT_FORGETTING_FACTOR: f64 = 0.95;

/// Gram residual `‖U Uᵀ − I‖_F` above which the basis is re-orthonormalized.
pub const REORTHONORMALIZE_THRESHOLD: f64 = 1e-7;

/// Updates between unconditional re-orthonormalizations.
pub const REORTHONORMALIZE_INTERVAL: usize = 1000;

/// `Q` columns with `|u_mem · q|` above this are not trusted to be
/// orthogonal to the basis and are rebuilt.
const ORTHOGONALITY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OnlineState {
    basis: SubspaceBasis,
    lambda: f64,
    clips_seen: usize,
    updates_since_reorthonormalization: usize,
    reorthonormalizations: usize,
    last_update_cost: u64,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::ForgettingFactor(lambda));
    }
    Ok(())
}

/// Bootstraps the state from an offline exact basis of `first_clips`.
///
/// Fewer than `n_c` independent rows leave null directions in the basis; they
/// are filled as later clips arrive.
pub fn init_online(first_clips: &DenseMatrix, n_c: usize, lambda: f64) -> Result<OnlineState> {
    check_lambda(lambda)?;
    let basis = compute_basis(first_clips, n_c, BasisMethod::Exact)?;
    OnlineState::from_basis(basis, lambda)
}

impl OnlineState {
    pub fn from_basis(basis: SubspaceBasis, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self {
            basis,
            lambda,
            clips_seen: 0,
            updates_since_reorthonormalization: 0,
            reorthonormalizations: 0,
            last_update_cost: 0,
        })
    }

    /// Restores a snapshot taken with [`snapshot_counters`](Self::snapshot_counters).
    pub fn restore(basis: SubspaceBasis, lambda: f64, clips_seen: usize, since_reortho: usize) -> Result<Self> {
        let mut s = Self::from_basis(basis, lambda)?;
        s.clips_seen = clips_seen;
        s.updates_since_reorthonormalization = since_reortho;
        Ok(s)
    }

    /// `(clips_seen, updates since the last re-orthonormalization)`.
    pub fn snapshot_counters(&self) -> (usize, usize) {
        (self.clips_seen, self.updates_since_reorthonormalization)
    }

    pub fn basis(&self) -> &SubspaceBasis {
        &self.basis
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Clips folded in since bootstrap.
    pub fn clips_seen(&self) -> usize {
        self.clips_seen
    }

    /// Scalars kept between updates; always `n_c · (d + 1)`.
    pub fn retained_scalars(&self) -> usize {
        self.basis.storage_scalars()
    }

    /// Multiply-accumulates spent by the most recent update.
    pub fn last_update_cost(&self) -> u64 {
        self.last_update_cost
    }

    pub fn reorthonormalizations(&self) -> usize {
        self.reorthonormalizations
    }

    fn n_c(&self) -> usize {
        self.basis.n_c()
    }

    fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// Folds one clip (`N × d`) into the basis. A clip without rows only
    /// applies the forgetting factor.
    ///
    /// On error the state is left untouched.
    pub fn update(&mut self, clip: &DenseMatrix) -> Result<()> {
        let (n, d) = clip.shape();
        if d != self.dim() {
            return Err(Error::dim(self.dim(), d));
        }
        if self.n_c() + n > d {
            return Err(Error::ClipTooLarge { rows: n, n_c: self.n_c(), dim: d });
        }
        let (result, cost) = flops::measure(|| self.rank_n_update(clip));
        let (u_new, sigma) = result?;
        self.commit(u_new, sigma, cost)
    }

    fn rank_n_update(&self, h: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>)> {
        let u = self.basis.u_mem();
        let n_c = self.n_c();
        let n = h.rows();

        // Step 1, with a second projection pass so Ĥ is orthogonal to working precision.
        let mut l = u.matmul_transpose(h)?;
        let mut h_hat = h.sub(&l.transpose().matmul(u)?)?;
        let l2 = u.matmul_transpose(&h_hat)?;
        h_hat = h_hat.sub(&l2.transpose().matmul(u)?)?;
        l = l.add(&l2)?;

        // Step 2.
        let (q, r) = householder_qr(&h_hat.transpose())?;
        let (q, r) = if u.matmul(&q)?.max_abs() <= ORTHOGONALITY_SLACK {
            (q, r)
        } else {
            // Ĥ is (nearly) inside span(u_mem), so Householder's completion
            // columns need not be orthogonal to it. Factor [u_memᵀ Ĥᵀ] instead:
            // its trailing Q columns are orthogonal to u_mem by construction,
            // and the R12 block carries whatever of Ĥ still lies in the span.
            let (qf, rf) = householder_qr(&DenseMatrix::hstack(&[&u.transpose(), &h_hat.transpose()])?)?;
            let r12 = rf.row_range(0..n_c).col_range(n_c..n_c + n);
            l = l.add(&r12)?;
            (qf.col_range(n_c..n_c + n), rf.row_range(n_c..n_c + n).col_range(n_c..n_c + n))
        };

        // Step 3.
        let k = n_c + n;
        let mut block = DenseMatrix::zeros(k, k);
        for (i, &s) in self.basis.sigma().iter().enumerate() {
            block.set(i, i, self.lambda * s);
            for j in 0..n {
                block.set(i, n_c + j, l.get(i, j));
            }
        }
        for i in 0..n {
            for j in i..n {
                block.set(n_c + i, n_c + j, r.get(i, j));
            }
        }

        // Step 4.
        let stacked = DenseMatrix::vstack(&[u, &q.transpose()])?;
        self.rotate_and_truncate(&block, &stacked)
    }

    /// SVD of the small block, then `u_new = U'_{:, :n_c}ᵀ · stacked`.
    fn rotate_and_truncate(&self, block: &DenseMatrix, stacked: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>)> {
        let n_c = self.n_c();
        let f = svd(block)?;
        let rotation = f.u.col_range(0..n_c).transpose();
        let u_new = rotation.matmul(stacked)?;
        let mut sigma = f.sigma[..n_c].to_vec();
        let floor = sigma[0] * (block.rows().max(block.cols()) as f64) * f64::EPSILON;
        for s in sigma.iter_mut() {
            if *s <= floor {
                *s = 0.0;
            }
        }
        Ok((u_new, sigma))
    }

    fn commit(&mut self, mut u_new: DenseMatrix, sigma: Vec<f64>, cost: u64) -> Result<()> {
        let (residual, check_cost) = flops::measure(|| orthonormality_residual(&u_new));
        let mut cost = cost + check_cost;
        self.updates_since_reorthonormalization += 1;
        if residual > REORTHONORMALIZE_THRESHOLD
            || self.updates_since_reorthonormalization >= REORTHONORMALIZE_INTERVAL
        {
            let (q, qr_cost) = flops::measure(|| householder_qr(&u_new.transpose()));
            u_new = q?.0.transpose();
            cost += qr_cost;
            self.updates_since_reorthonormalization = 0;
            self.reorthonormalizations += 1;
        }
        self.basis = SubspaceBasis::from_parts(u_new, sigma);
        self.clips_seen += 1;
        self.last_update_cost = cost;
        Ok(())
    }

    /// One-row update through the scalar path: `r = ‖ĥ‖`, `q = ĥ / r`, and no
    /// `q` at all when the residual vanishes.
    pub fn update_single(&mut self, feature: &[f64]) -> Result<()> {
        let d = self.dim();
        if feature.len() != d {
            return Err(Error::dim(d, feature.len()));
        }
        let h = DenseMatrix::row_vector(feature)?;
        if self.n_c() + 1 > d {
            return Err(Error::ClipTooLarge { rows: 1, n_c: self.n_c(), dim: d });
        }
        let (result, cost) = flops::measure(|| self.rank_one_update(&h));
        let (u_new, sigma) = result?;
        self.commit(u_new, sigma, cost)
    }

    fn rank_one_update(&self, h: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>)> {
        let u = self.basis.u_mem();
        let n_c = self.n_c();
        let x = h.row(0);

        let mut l = u.mul_vec(x)?;
        let mut resid = x.to_vec();
        subtract_projection(u, &l, &mut resid);
        let l2 = u.mul_vec(&resid)?;
        subtract_projection(u, &l2, &mut resid);
        l.iter_mut().zip(&l2).for_each(|(a, b)| *a += b);

        let mut r = norm(&resid);
        let mut q = None;
        if r > 0.0 {
            let mut qv: Vec<f64> = resid.iter().map(|v| v / r).collect();
            let c = u.mul_vec(&qv)?;
            if c.iter().any(|v| v.abs() > ORTHOGONALITY_SLACK) {
                // Residual at rounding level: re-orthogonalize the direction
                // and move the recovered in-span part into L.
                l.iter_mut().zip(&c).for_each(|(a, b)| *a += r * b);
                subtract_projection(u, &c, &mut qv);
                let nu = norm(&qv);
                r *= nu;
                qv.iter_mut().for_each(|v| *v /= nu);
            }
            if r > 0.0 {
                q = Some(qv);
            }
        }

        let scaled = |i: usize| self.lambda * self.basis.sigma()[i];
        match q {
            Some(qv) => {
                let mut block = DenseMatrix::zeros(n_c + 1, n_c + 1);
                for i in 0..n_c {
                    block.set(i, i, scaled(i));
                    block.set(i, n_c, l[i]);
                }
                block.set(n_c, n_c, r);
                let qrow = DenseMatrix::row_vector(&qv)?;
                self.rotate_and_truncate(&block, &DenseMatrix::vstack(&[u, &qrow])?)
            }
            None => {
                let mut block = DenseMatrix::zeros(n_c, n_c + 1);
                for i in 0..n_c {
                    block.set(i, i, scaled(i));
                    block.set(i, n_c, l[i]);
                }
                self.rotate_and_truncate(&block, u)
            }
        }
    }

    /// Distance between the tracked basis and the exact basis of
    /// `reference_clips` with the same `n_c`.
    pub fn drift_report(&self, reference_clips: &[ClipFeatures]) -> Result<f64> {
        let m = stack_clips(reference_clips)?;
        if m.rows() == 0 {
            return Err(Error::EmptyMemory);
        }
        let reference = compute_basis(&m, self.n_c(), BasisMethod::Exact)?;
        Ok(subspace_distance(self.basis.u_mem(), reference.u_mem())?)
    }
}

fn subtract_projection(u: &DenseMatrix, coeffs: &[f64], x: &mut [f64]) {
    for (row, &c) in u.row_iter().zip(coeffs) {
        for (xi, &ui) in x.iter_mut().zip(row) {
            *xi -= c * ui;
        }
    }
    flops::add(u.rows() * u.cols());
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Causal streaming driver: validates clips through an online-mode bank,
/// buffers until at least `n_c` rows are available, bootstraps offline, then
/// updates once per clip.
#[derive(Debug, Clone)]
pub struct OnlineMemory {
    gate: MemoryBank,
    n_c: usize,
    lambda: f64,
    pending: Vec<ClipFeatures>,
    state: Option<OnlineState>,
}

impl OnlineMemory {
    pub fn new(dim: usize, n_c: usize, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        if n_c == 0 || n_c > dim {
            return Err(Error::ComponentCount { n_c, max: dim });
        }
        Ok(Self { gate: MemoryBank::online(dim), n_c, lambda, pending: Vec::new(), state: None })
    }

    pub fn push_clip(&mut self, clip: ClipFeatures) -> Result<()> {
        if let Some(state) = &self.state {
            // Reject before touching the gate so a failed update leaves everything as it was.
            if state.n_c() + clip.actors() > state.dim() && clip.dim() == state.dim() {
                return Err(Error::ClipTooLarge { rows: clip.actors(), n_c: state.n_c(), dim: state.dim() });
            }
        }
        self.gate.admit(&clip)?;
        match &mut self.state {
            Some(state) => state.update(clip.features()),
            None => {
                self.pending.push(clip);
                let rows: usize = self.pending.iter().map(ClipFeatures::actors).sum();
                if rows >= self.n_c {
                    let m = stack_clips(&self.pending)?;
                    let mut state = init_online(&m, self.n_c, self.lambda)?;
                    state.clips_seen = self.pending.len();
                    self.state = Some(state);
                    self.pending.clear();
                }
                Ok(())
            }
        }
    }

    pub fn state(&self) -> Option<&OnlineState> {
        self.state.as_ref()
    }

    pub fn basis(&self) -> Option<&SubspaceBasis> {
        self.state.as_ref().map(OnlineState::basis)
    }

    /// Clips currently held in memory (only during bootstrap).
    pub fn retained_clips(&self) -> usize {
        self.gate.retained_clips() + self.pending.len()
    }

    pub fn retained_scalars(&self) -> usize {
        let buffered: usize = self.pending.iter().map(|c| c.features().as_slice().len()).sum();
        buffered + self.state.as_ref().map_or(0, OnlineState::retained_scalars)
    }

    pub fn clips_seen(&self) -> usize {
        self.gate.clips_seen()
    }
}
