use super::matrix::{axpy, dot, norm};
use super::{flops, shape_err, DenseMatrix, LinalgError};

struct Reflector {
    start: usize,
    v: Vec<f64>,
    beta: f64,
}

impl Reflector {
    /// `x[start..] -= beta (v·x[start..]) v`
    fn apply(&self, x: &mut [f64]) {
        let tail = &mut x[self.start..];
        let s = self.beta * dot(&self.v, tail);
        axpy(-s, &self.v, tail);
    }
}

/// Thin Householder QR of an `m × n` matrix with `m ≥ n`.
///
/// Returns `q` (`m × n`, orthonormal columns) and `r` (`n × n`, upper
/// triangular with a non-negative diagonal), so the factorization is unique
/// whenever `a` has full column rank. Rank-deficient columns still get an
/// orthonormal `q` column; the matching `r` row is zero on the diagonal.
pub fn householder_qr(a: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix), LinalgError> {
    let (m, n) = a.shape();
    if m < n {
        return Err(shape_err(format!("householder_qr needs rows >= cols, got {m}x{n}")));
    }
    // Column-major working copy so reflectors touch contiguous memory.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut reflectors = Vec::with_capacity(n);
    let mut work = 0usize;

    for k in 0..n {
        let x = &cols[k][k..];
        let x_norm = norm(x);
        if x_norm == 0.0 {
            reflectors.push(None);
            continue;
        }
        let alpha = if x[0] >= 0.0 { -x_norm } else { x_norm };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vv = dot(&v, &v);
        if vv == 0.0 {
            reflectors.push(None);
            continue;
        }
        let h = Reflector { start: k, v, beta: 2.0 / vv };
        for col in cols.iter_mut().skip(k + 1) {
            h.apply(col);
        }
        work += 2 * (m - k) * (n - k);
        let ck = &mut cols[k];
        ck[k] = alpha;
        ck[k + 1..].iter_mut().for_each(|x| *x = 0.0);
        reflectors.push(Some(h));
    }

    let mut r = DenseMatrix::zeros(n, n);
    for (j, col) in cols.iter().enumerate() {
        for i in 0..=j {
            r.set(i, j, col[i]);
        }
    }

    let mut q = DenseMatrix::zeros(m, n);
    for j in 0..n {
        let mut e = vec![0.0; m];
        e[j] = 1.0;
        for h in reflectors.iter().rev().flatten() {
            h.apply(&mut e);
        }
        let flip = r.get(j, j) < 0.0;
        for (i, &v) in e.iter().enumerate() {
            q.set(i, j, if flip { -v } else { v });
        }
        if flip {
            for c in j..n {
                r.set(j, c, -r.get(j, c));
            }
        }
        work += 2 * m * n;
    }
    flops::add(work);
    Ok((q, r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_fixed_point() {
        let (q, r) = householder_qr(&DenseMatrix::identity(3)).unwrap();
        assert_eq!(q, DenseMatrix::identity(3));
        assert_eq!(r, DenseMatrix::identity(3));
    }

    #[test]
    fn single_column_is_its_norm() {
        let a = DenseMatrix::from_rows(&[[3.0], [4.0]]).unwrap();
        let (q, r) = householder_qr(&a).unwrap();
        assert!((r.get(0, 0) - 5.0).abs() < 1e-15);
        assert!((q.get(0, 0) - 0.6).abs() < 1e-15);
        assert!((q.get(1, 0) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn wide_input_rejected() {
        assert!(matches!(householder_qr(&DenseMatrix::zeros(2, 3)), Err(LinalgError::Shape(_))));
    }

    #[test]
    fn zero_matrix_still_orthonormal() {
        let (q, r) = householder_qr(&DenseMatrix::zeros(4, 2)).unwrap();
        assert_eq!(r, DenseMatrix::zeros(2, 2));
        let gram = q.transpose_matmul(&q).unwrap();
        assert_eq!(gram, DenseMatrix::identity(2));
    }

    #[test]
    fn rank_deficient_columns_stay_orthonormal() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0, 0.0], [1.0, 2.0, 1.0], [0.0, 0.0, 1.0], [1.0, 2.0, 0.0]])
            .unwrap();
        let (q, r) = householder_qr(&a).unwrap();
        let gram = q.transpose_matmul(&q).unwrap();
        assert!(gram.sub(&DenseMatrix::identity(3)).unwrap().frobenius_norm() < 1e-14);
        assert!(q.matmul(&r).unwrap().sub(&a).unwrap().frobenius_norm() < 1e-14);
        assert!(r.get(1, 1).abs() < 1e-14);
    }
}
