use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{householder_qr, DenseMatrix, LinalgError};

/// Orthonormal basis `Q` (`m × (n_c + oversampling)`) approximating the range
/// of `a`, by Gaussian sketching followed by `power_iters` rounds of subspace
/// iteration. Every product is re-orthonormalized with Householder QR so the
/// power rounds do not collapse onto the dominant direction.
///
/// The sketch is drawn from ChaCha8 seeded with `seed`; results are
/// bit-reproducible for a fixed seed.
pub fn randomized_range_basis(
    a: &DenseMatrix,
    n_c: usize,
    oversampling: usize,
    power_iters: usize,
    seed: u64,
) -> Result<DenseMatrix, LinalgError> {
    if n_c == 0 {
        return Err(LinalgError::ZeroRank);
    }
    let width = n_c + oversampling;
    let max = a.rows().min(a.cols());
    if width > max {
        return Err(LinalgError::RankTooLarge { requested: width, max });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = gaussian_matrix(a.cols(), width, &mut rng);
    let (mut q, _) = householder_qr(&a.matmul(&omega)?)?;
    for _ in 0..power_iters {
        let (z, _) = householder_qr(&a.transpose_matmul(&q)?)?;
        q = householder_qr(&a.matmul(&z)?)?.0;
    }
    Ok(q)
}

/// `rows × cols` matrix of independent standard normal draws.
pub(crate) fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DenseMatrix {
    let data = (0..rows * cols).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    DenseMatrix::from_vec_unchecked(rows, cols, data)
}
