//! Compressed memory: the top-`n_c` right singular directions of the memory
//! matrix and the projection-reconstruction that replaces attention.
//!
//! For `M` (`N_mem × d`), `Mᵀ = U Σ Vᵀ` and the basis keeps the leading `n_c`
//! columns of `U` as rows of `u_mem` (`n_c × d`). A query row `h` becomes
//! `h' = (h · u_memᵀ) · u_mem`. There are no learned parameters in this path.

use crate::error::{Error, Result};
use crate::linalg::{
    flops, orthonormality_residual, randomized_range_basis, svd, DenseMatrix, LinalgError,
    ORTHONORMAL_TOLERANCE,
};

/// Default basis size.
pub const DEFAULT_COMPONENTS: usize = 10;

/// `C` is only defined while `σ_{n_c} > COEFFICIENT_RANK_TOLERANCE · σ₁`.
pub const COEFFICIENT_RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisMethod {
    /// Full Jacobi SVD of `Mᵀ`.
    Exact,
    /// Randomized range finder on `Mᵀ` followed by a small exact SVD.
    /// Oversampling is clipped to the available rank.
    Randomized { oversampling: usize, power_iters: usize, seed: u64 },
}

impl BasisMethod {
    pub fn randomized(seed: u64) -> Self {
        BasisMethod::Randomized { oversampling: 10, power_iters: 2, seed }
    }
}

/// `n_c` orthonormal rows of length `d` plus their singular values.
///
/// Rows whose singular value is exactly zero are null directions: padding that
/// keeps the basis at a fixed size when the memory has lower rank. They never
/// contribute to a projection.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    u_mem: DenseMatrix,
    sigma: Vec<f64>,
}

impl SubspaceBasis {
    /// Validates shapes, ordering and row-orthonormality (to
    /// [`ORTHONORMAL_TOLERANCE`]).
    pub fn new(u_mem: DenseMatrix, sigma: Vec<f64>) -> Result<Self> {
        if u_mem.rows() != sigma.len() {
            return Err(Error::dim(u_mem.rows(), sigma.len()));
        }
        if u_mem.rows() == 0 || u_mem.rows() > u_mem.cols() {
            return Err(Error::ComponentCount { n_c: u_mem.rows(), max: u_mem.cols() });
        }
        if sigma.iter().any(|s| !s.is_finite() || *s < 0.0) || sigma.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidConfig("singular values must be non-negative and non-increasing".into()));
        }
        let residual = orthonormality_residual(&u_mem);
        if residual > ORTHONORMAL_TOLERANCE {
            return Err(LinalgError::NotOrthonormal { residual }.into());
        }
        Ok(Self { u_mem, sigma })
    }

    pub(crate) fn from_parts(u_mem: DenseMatrix, sigma: Vec<f64>) -> Self {
        debug_assert_eq!(u_mem.rows(), sigma.len());
        Self { u_mem, sigma }
    }

    pub fn n_c(&self) -> usize {
        self.sigma.len()
    }

    pub fn dim(&self) -> usize {
        self.u_mem.cols()
    }

    pub fn u_mem(&self) -> &DenseMatrix {
        &self.u_mem
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn into_parts(self) -> (DenseMatrix, Vec<f64>) {
        (self.u_mem, self.sigma)
    }

    /// Scalars needed to store the basis: `n_c · (d + 1)`.
    pub fn storage_scalars(&self) -> usize {
        self.u_mem.as_slice().len() + self.sigma.len()
    }

    pub fn null_directions(&self) -> usize {
        self.sigma.iter().filter(|&&s| s == 0.0).count()
    }

    pub fn orthonormality_residual(&self) -> f64 {
        orthonormality_residual(&self.u_mem)
    }

    fn active_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.u_mem.row_iter().zip(&self.sigma).filter(|(_, &s)| s > 0.0).map(|(r, _)| r)
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::dim(self.dim(), len));
        }
        Ok(())
    }

    /// `h' = (h · u_memᵀ) · u_mem`.
    pub fn project_reconstruct(&self, h: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(h.len())?;
        let mut out = vec![0.0; h.len()];
        self.project_into(h, &mut out);
        Ok(out)
    }

    fn project_into(&self, h: &[f64], out: &mut [f64]) {
        let mut rows = 0;
        for u in self.active_rows() {
            let c: f64 = u.iter().zip(h).map(|(a, b)| a * b).sum();
            for (o, &x) in out.iter_mut().zip(u) {
                *o += c * x;
            }
            rows += 1;
        }
        flops::add(2 * rows * h.len());
    }

    /// Skip-connection form `h + h'`.
    pub fn residual_update(&self, h: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(h.len())?;
        let mut out = h.to_vec();
        self.project_into(h, &mut out);
        Ok(out)
    }

    /// Row-wise [`project_reconstruct`](Self::project_reconstruct).
    pub fn project_reconstruct_rows(&self, h: &DenseMatrix) -> Result<DenseMatrix> {
        self.map_rows(h, false)
    }

    /// Row-wise [`residual_update`](Self::residual_update).
    pub fn residual_update_rows(&self, h: &DenseMatrix) -> Result<DenseMatrix> {
        self.map_rows(h, true)
    }

    fn map_rows(&self, h: &DenseMatrix, skip: bool) -> Result<DenseMatrix> {
        self.check_dim(h.cols())?;
        let mut data = Vec::with_capacity(h.as_slice().len());
        for row in h.row_iter() {
            let mut out = if skip { row.to_vec() } else { vec![0.0; row.len()] };
            self.project_into(row, &mut out);
            data.extend(out);
        }
        Ok(DenseMatrix::new(h.rows(), h.cols(), data)?)
    }
}

fn check_memory(m: &DenseMatrix, n_c: usize) -> Result<()> {
    if m.rows() == 0 || m.cols() == 0 {
        return Err(Error::EmptyMemory);
    }
    if n_c == 0 || n_c > m.cols() {
        return Err(Error::ComponentCount { n_c, max: m.cols() });
    }
    Ok(())
}

/// Truncated basis of the row space of `m`.
///
/// When `n_c` exceeds the rank available (`min(N_mem, d)`), or trailing
/// singular values are numerically zero, the basis is padded with an
/// orthonormal completion whose singular values are set to `0`.
pub fn compute_basis(m: &DenseMatrix, n_c: usize, method: BasisMethod) -> Result<SubspaceBasis> {
    check_memory(m, n_c)?;
    let (n_mem, d) = m.shape();
    let k = n_c.min(n_mem);
    let (mut rows, mut sigma) = match method {
        BasisMethod::Exact => {
            let f = svd(&m.transpose())?;
            let rows: Vec<Vec<f64>> = (0..k).map(|j| f.u.column(j)).collect();
            (rows, f.sigma[..k].to_vec())
        }
        BasisMethod::Randomized { oversampling, power_iters, seed } => {
            let width = (k + oversampling).min(n_mem.min(d));
            let mt = m.transpose();
            let q = randomized_range_basis(&mt, k, width - k, power_iters, seed)?;
            // B = Qᵀ Mᵀ = (M Q)ᵀ, width × N_mem.
            let b = m.matmul(&q)?.transpose();
            let f = svd(&b)?;
            let u = q.matmul(&f.u.col_range(0..k))?;
            let mut rows: Vec<Vec<f64>> = (0..k).map(|j| u.column(j)).collect();
            rows.iter_mut().for_each(|r| make_largest_positive(r));
            (rows, f.sigma[..k].to_vec())
        }
    };

    let floor = sigma.first().copied().unwrap_or(0.0) * (n_mem.max(d) as f64) * f64::EPSILON;
    for s in sigma.iter_mut() {
        if *s <= floor {
            *s = 0.0;
        }
    }
    while rows.len() < n_c {
        rows.push(crate::linalg::extend_orthonormal(&rows, d));
        sigma.push(0.0);
    }
    let data = rows.into_iter().flatten().collect();
    Ok(SubspaceBasis::from_parts(DenseMatrix::new(n_c, d, data)?, sigma))
}

fn make_largest_positive(row: &mut [f64]) {
    let best = row.iter().copied().fold(0.0_f64, |b, x| if x.abs() > b.abs() { x } else { b });
    if best < 0.0 {
        row.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Coefficients `C = Σ_c⁻¹ V_cᵀ` (`n_c × N_mem`) expressing the exact basis
/// as a combination of memory rows, `u_mem = C · M`.
pub fn coefficient_matrix(m: &DenseMatrix, n_c: usize) -> Result<DenseMatrix> {
    check_memory(m, n_c)?;
    let f = svd(&m.transpose())?;
    if n_c > f.k() {
        return Err(Error::RankDeficient { n_c, ratio: 0.0 });
    }
    let ratio = if f.sigma[0] > 0.0 { f.sigma[n_c - 1] / f.sigma[0] } else { 0.0 };
    if ratio <= COEFFICIENT_RANK_TOLERANCE {
        return Err(Error::RankDeficient { n_c, ratio });
    }
    let n_mem = m.rows();
    Ok(DenseMatrix::from_fn(n_c, n_mem, |i, j| f.v.get(j, i) / f.sigma[i])?)
}

/// The attention-shaped evaluation `(h · Mᵀ) · Cᵀ · C · M`.
///
/// `a = h · Mᵀ` plays the role of attention scores over memory rows; the
/// output is a linear combination of memory rows. With `C` from
/// [`coefficient_matrix`] this equals [`SubspaceBasis::project_reconstruct`].
pub fn project_via_coefficients(h: &[f64], m: &DenseMatrix, c: &DenseMatrix) -> Result<Vec<f64>> {
    if h.len() != m.cols() {
        return Err(Error::dim(m.cols(), h.len()));
    }
    if c.cols() != m.rows() {
        return Err(Error::dim(m.rows(), c.cols()));
    }
    let scores = m.mul_vec(h)?;
    let coeffs = c.mul_vec(&scores)?;
    let weights = c.left_mul_vec(&coeffs)?;
    Ok(m.left_mul_vec(&weights)?)
}

/// Subtracts the column mean from every row. Returns the centered matrix and
/// the mean.
pub fn center_rows(m: &DenseMatrix) -> (DenseMatrix, Vec<f64>) {
    let (rows, cols) = m.shape();
    let mut mean = vec![0.0; cols];
    for r in m.row_iter() {
        for (acc, x) in mean.iter_mut().zip(r) {
            *acc += x;
        }
    }
    if rows > 0 {
        mean.iter_mut().for_each(|x| *x /= rows as f64);
    }
    let centered = DenseMatrix::from_fn(rows, cols, |i, j| m.get(i, j) - mean[j])
        .expect("differences of finite values");
    (centered, mean)
}
