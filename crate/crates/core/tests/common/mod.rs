//! Test-only oracles, kept independent of the library's decomposition code.
#![allow(dead_code)]

use memsvd::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal)).unwrap()
}

pub fn gaussian_vec(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

// ── compensated arithmetic (roughly twice working precision) ────────────

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let z = s - a;
    (s, (a - (s - z)) + (b - z))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Ogita–Rump–Oishi Dot2.
pub fn dot2(a: &[f64], b: &[f64]) -> f64 {
    let (mut s, mut c) = (0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (p, pe) = two_prod(x, y);
        let (t, se) = two_sum(s, p);
        s = t;
        c += pe + se;
    }
    s + c
}

pub fn norm2(a: &[f64]) -> f64 {
    dot2(a, a).sqrt()
}

pub fn frob(m: &DenseMatrix) -> f64 {
    norm2(m.as_slice())
}

/// `a · b` with compensated dot products.
pub fn matmul2(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    assert_eq!(a.cols(), b.rows());
    let bt = b.transpose();
    DenseMatrix::from_fn(a.rows(), b.cols(), |i, j| dot2(a.row(i), bt.row(j))).unwrap()
}

pub fn diff_frob(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.sub(b).unwrap().frobenius_norm()
}

// ── modified Gram–Schmidt ───────────────────────────────────────────────

/// MGS with compensated dot products and one reorthogonalization pass.
/// Returns columns of Q and upper-triangular R (positive diagonal).
pub fn mgs_qr(a: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let (m, n) = a.shape();
    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut r = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut v = a.column(j);
        for _pass in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let c = dot2(qi, &v);
                r[i][j] += c;
                for (x, y) in v.iter_mut().zip(qi) {
                    *x -= c * y;
                }
            }
        }
        let nv = norm2(&v);
        r[j][j] = nv;
        q.push(v.iter().map(|x| x / nv).collect());
    }
    let qm = DenseMatrix::from_fn(m, n, |i, j| q[j][i]).unwrap();
    let rm = DenseMatrix::from_fn(n, n, |i, j| r[i][j]).unwrap();
    (qm, rm)
}

/// `k × d` matrix with orthonormal rows from MGS of a Gaussian draw.
pub fn random_orthonormal_rows(k: usize, d: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    mgs_qr(&gaussian(d, k, rng)).0.transpose()
}

// ── symmetric eigenvalues by cyclic two-sided Jacobi ────────────────────

pub fn symmetric_eigenvalues(a: &DenseMatrix) -> Vec<f64> {
    let n = a.rows();
    let mut m: Vec<Vec<f64>> = a.row_iter().map(<[f64]>::to_vec).collect();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off.sqrt() < 1e-15 * max_abs(&m) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in m.iter_mut() {
                    let (x, y) = (row[p], row[q]);
                    row[p] = c * x - s * y;
                    row[q] = s * x + c * y;
                }
                for k in 0..n {
                    let (x, y) = (m[p][k], m[q][k]);
                    m[p][k] = c * x - s * y;
                    m[q][k] = s * x + c * y;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

fn max_abs(m: &[Vec<f64>]) -> f64 {
    m.iter().flatten().fold(0.0_f64, |a, x| a.max(x.abs()))
}

// ── subspaces ───────────────────────────────────────────────────────────

/// `‖U₁ᵀU₁ − U₂ᵀU₂‖_F` formed explicitly as `d × d` projectors.
pub fn projector_distance(u1: &DenseMatrix, u2: &DenseMatrix) -> f64 {
    let p1 = matmul2(&u1.transpose(), u1);
    let p2 = matmul2(&u2.transpose(), u2);
    diff_frob(&p1, &p2)
}

/// Matrix `U Σ Wᵀ` of shape `m × n` with the given singular values and
/// random orthonormal factors.
pub fn planted_spectrum(m: usize, n: usize, sigma: &[f64], rng: &mut ChaCha8Rng) -> DenseMatrix {
    let k = sigma.len();
    let u = random_orthonormal_rows(k, m, rng);
    let w = random_orthonormal_rows(k, n, rng);
    let mut us = u.transpose();
    us = DenseMatrix::from_fn(m, k, |i, j| us.get(i, j) * sigma[j]).unwrap();
    matmul2(&us, &w)
}
