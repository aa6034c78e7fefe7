use super::matrix::{axpy, dot, norm};
use super::{flops, shape_err, DenseMatrix, LinalgError};

/// Row-orthonormality required of [`subspace_distance`] inputs.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-6;

/// `‖U·Uᵀ − I‖_F` for a matrix with (ideally) orthonormal rows.
pub fn orthonormality_residual(u: &DenseMatrix) -> f64 {
    let k = u.rows();
    let mut acc = 0.0;
    for i in 0..k {
        for j in i..k {
            let g = dot(u.row(i), u.row(j)) - if i == j { 1.0 } else { 0.0 };
            acc += if i == j { g * g } else { 2.0 * g * g };
        }
    }
    flops::add(k * (k + 1) / 2 * u.cols());
    acc.sqrt()
}

/// Projector distance `‖U₁ᵀU₁ − U₂ᵀU₂‖_F` between the row spaces of two
/// row-orthonormal matrices of equal width. Ranks may differ.
///
/// Evaluated as `sqrt(‖(I − P₁)U₂ᵀ‖² + ‖(I − P₂)U₁ᵀ‖²)`, which equals the
/// projector norm for orthonormal inputs without the cancellation of
/// `k₁ + k₂ − 2‖U₁U₂ᵀ‖²`.
pub fn subspace_distance(u1: &DenseMatrix, u2: &DenseMatrix) -> Result<f64, LinalgError> {
    if u1.cols() != u2.cols() {
        return Err(shape_err(format!(
            "subspace_distance over dimensions {} and {}",
            u1.cols(),
            u2.cols()
        )));
    }
    for u in [u1, u2] {
        let residual = orthonormality_residual(u);
        if residual > ORTHONORMAL_TOLERANCE {
            return Err(LinalgError::NotOrthonormal { residual });
        }
    }
    let d2 = residual_energy(u2, u1) + residual_energy(u1, u2);
    Ok(d2.sqrt())
}

/// `‖x − (x·bᵀ)·b‖²_F`, the energy of the rows of `x` outside `rowspace(b)`.
fn residual_energy(x: &DenseMatrix, b: &DenseMatrix) -> f64 {
    let mut acc = 0.0;
    for row in x.row_iter() {
        let mut r = row.to_vec();
        for brow in b.row_iter() {
            let c = dot(row, brow);
            axpy(-c, brow, &mut r);
        }
        acc += dot(&r, &r);
    }
    flops::add(2 * x.rows() * b.rows() * x.cols());
    acc
}

/// One classical Gram–Schmidt pass of `x` against orthonormal `basis`.
pub(crate) fn orthogonalize_against(x: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let c = dot(x, b);
        axpy(-c, b, x);
    }
}

/// A unit vector orthogonal to every vector in `basis` (assumed orthonormal,
/// fewer than `dim` of them). Built from the coordinate axis with the largest
/// residual, so the choice is deterministic.
pub(crate) fn extend_orthonormal(basis: &[Vec<f64>], dim: usize) -> Vec<f64> {
    assert!(basis.len() < dim, "no orthogonal complement left");
    let mut best: Option<(f64, Vec<f64>)> = None;
    for i in 0..dim {
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        orthogonalize_against(&mut e, basis);
        orthogonalize_against(&mut e, basis);
        let r = norm(&e);
        // 1/sqrt(2) is always attainable by some axis when the complement is non-empty.
        if r > std::f64::consts::FRAC_1_SQRT_2 {
            best = Some((r, e));
            break;
        }
        if best.as_ref().is_none_or(|(br, _)| r > *br) {
            best = Some((r, e));
        }
    }
    let (r, mut e) = best.expect("dim > 0");
    e.iter_mut().for_each(|x| *x /= r);
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_is_zero() {
        let u = DenseMatrix::from_rows(&[[0.6, 0.8, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        assert!(subspace_distance(&u, &u).unwrap() < 1e-15);
    }

    #[test]
    fn orthogonal_lines_in_plane() {
        let e1 = DenseMatrix::from_rows(&[[1.0, 0.0]]).unwrap();
        let e2 = DenseMatrix::from_rows(&[[0.0, 1.0]]).unwrap();
        let d = subspace_distance(&e1, &e2).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn nested_subspaces_of_different_rank() {
        let a = DenseMatrix::from_rows(&[[1.0, 0.0, 0.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        assert!((subspace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_orthonormal() {
        let a = DenseMatrix::from_rows(&[[1.0, 1.0]]).unwrap();
        assert!(matches!(subspace_distance(&a, &a), Err(LinalgError::NotOrthonormal { .. })));
        let b = DenseMatrix::from_rows(&[[1.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(subspace_distance(&b, &a), Err(LinalgError::Shape(_))));
    }

    #[test]
    fn completion_is_orthonormal() {
        let s = 0.5f64.sqrt();
        let basis = vec![vec![s, s, 0.0], vec![0.0, 0.0, 1.0]];
        let e = extend_orthonormal(&basis, 3);
        assert!((norm(&e) - 1.0).abs() < 1e-15);
        assert!(basis.iter().all(|b| dot(b, &e).abs() < 1e-15));
    }
}
