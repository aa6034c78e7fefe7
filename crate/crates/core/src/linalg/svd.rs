use super::matrix::{dot, norm};
use super::subspace::{extend_orthonormal, orthogonalize_against};
use super::{flops, DenseMatrix, LinalgError};

/// Sweep bound for the Jacobi iteration. Exceeding it means the input is
/// too ill-conditioned to orthogonalize at [`OFF_DIAGONAL_TOLERANCE`].
pub const MAX_SWEEPS: usize = 60;

/// A column pair is treated as orthogonal once
/// `|a_p·a_q| ≤ tol · ‖a_p‖ ‖a_q‖`.
pub const OFF_DIAGONAL_TOLERANCE: f64 = 1e-12;

/// Thin SVD `a = u · diag(sigma) · vᵀ`.
///
/// `sigma` is non-increasing and non-negative. Each singular pair is signed so
/// that the largest-magnitude entry of its `u` column is positive (first index
/// wins ties).
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

impl SvdFactors {
    /// Number of retained singular triplets.
    pub fn k(&self) -> usize {
        self.sigma.len()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.u.clone();
        for i in 0..us.rows() {
            for (x, s) in us.row_mut(i).iter_mut().zip(&self.sigma) {
                *x *= s;
            }
        }
        us.matmul_transpose(&self.v).expect("factor shapes are consistent")
    }
}

/// Full thin SVD (`k = min(m, n)`) by one-sided Jacobi rotations.
///
/// Deterministic: the rotation order is cyclic by column pair and the result
/// depends only on `a`.
pub fn svd(a: &DenseMatrix) -> Result<SvdFactors, LinalgError> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Ok(SvdFactors {
            u: DenseMatrix::zeros(m, 0),
            sigma: Vec::new(),
            v: DenseMatrix::zeros(n, 0),
        });
    }
    let mut f = if m >= n {
        jacobi_tall(a)?
    } else {
        let t = jacobi_tall(&a.transpose())?;
        SvdFactors { u: t.v, sigma: t.sigma, v: t.u }
    };
    fix_signs(&mut f);
    Ok(f)
}

/// Keeps the leading `n_c` singular triplets.
pub fn truncate(f: &SvdFactors, n_c: usize) -> Result<SvdFactors, LinalgError> {
    if n_c == 0 {
        return Err(LinalgError::ZeroRank);
    }
    if n_c > f.k() {
        return Err(LinalgError::RankTooLarge { requested: n_c, max: f.k() });
    }
    Ok(SvdFactors {
        u: f.u.col_range(0..n_c),
        sigma: f.sigma[..n_c].to_vec(),
        v: f.v.col_range(0..n_c),
    })
}

fn jacobi_tall(a: &DenseMatrix) -> Result<SvdFactors, LinalgError> {
    let (m, n) = a.shape();
    debug_assert!(m >= n);
    // Columns of `a` and of `v`, stored contiguously.
    let mut w: Vec<Vec<f64>> = a.transpose().row_iter().map(<[f64]>::to_vec).collect();
    let mut vt: Vec<Vec<f64>> = DenseMatrix::identity(n).row_iter().map(<[f64]>::to_vec).collect();
    let mut work = 0usize;
    let mut converged = n < 2;

    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let (head, tail) = w.split_at_mut(q);
                let (wp, wq) = (&mut head[p], &mut tail[0]);
                let alpha = dot(wp, wp);
                let beta = dot(wq, wq);
                let gamma = dot(wp, wq);
                work += 3 * m;
                if alpha <= f64::MIN_POSITIVE || beta <= f64::MIN_POSITIVE {
                    continue;
                }
                if gamma.abs() <= OFF_DIAGONAL_TOLERANCE * alpha.sqrt() * beta.sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = c * t;
                rotate(wp, wq, c, s);
                let (vhead, vtail) = vt.split_at_mut(q);
                rotate(&mut vhead[p], &mut vtail[0], c, s);
                work += 4 * (m + n);
            }
        }
        converged = !rotated;
    }
    flops::add(work);
    if !converged {
        return Err(LinalgError::NotConverged { sweeps: MAX_SWEEPS });
    }

    let norms: Vec<f64> = w.iter().map(|c| norm(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    let sigma_max = norms[order[0]];
    // Below this the computed direction is rounding noise; rebuild it as an
    // orthonormal completion of the stronger columns.
    let noise_floor = sigma_max * (m as f64) * f64::EPSILON;

    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    let mut v = DenseMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        let mut col: Vec<f64> = w[src].iter().map(|x| if s > 0.0 { x / s } else { 0.0 }).collect();
        if s <= noise_floor {
            orthogonalize_against(&mut col, &u_cols);
            orthogonalize_against(&mut col, &u_cols);
            let r = norm(&col);
            if r > 0.5 {
                col.iter_mut().for_each(|x| *x /= r);
            } else {
                col = extend_orthonormal(&u_cols, m);
            }
        }
        u_cols.push(col);
        sigma.push(s);
        for (i, &x) in vt[src].iter().enumerate() {
            v.set(i, dst, x);
        }
    }
    let mut u = DenseMatrix::zeros(m, n);
    for (j, col) in u_cols.iter().enumerate() {
        for (i, &x) in col.iter().enumerate() {
            u.set(i, j, x);
        }
    }
    Ok(SvdFactors { u, sigma, v })
}

#[inline]
fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let (p, q) = (*a, *b);
        *a = c * p - s * q;
        *b = s * p + c * q;
    }
}

fn fix_signs(f: &mut SvdFactors) {
    for j in 0..f.k() {
        let mut best = 0;
        for i in 1..f.u.rows() {
            if f.u.get(i, j).abs() > f.u.get(best, j).abs() {
                best = i;
            }
        }
        if f.u.get(best, j) < 0.0 {
            for i in 0..f.u.rows() {
                f.u.set(i, j, -f.u.get(i, j));
            }
            for i in 0..f.v.rows() {
                f.v.set(i, j, -f.v.get(i, j));
            }
        }
    }
}
