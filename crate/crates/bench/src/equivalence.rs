//! Algebraic identity checks with pass/fail at fixed tolerances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use memsvd::basis::{coefficient_matrix, project_via_coefficients};
use memsvd::linalg::{householder_qr, subspace_distance};
use memsvd::online::{init_online, OnlineState};
use memsvd::{compute_basis, BasisMethod, DenseMatrix, SubspaceBasis};

use crate::report::{float, CsvRow};
use crate::spec::BenchSpec;
use crate::BenchError;

/// Projection through the basis equals the coefficient form, relative to `‖h‖`.
pub const COEFFICIENT_TOLERANCE: f64 = 1e-7;
/// The same identity when `n_c = N_mem`.
pub const FULL_RANK_TOLERANCE: f64 = 1e-9;
/// Streamed basis against the offline basis with `λ = 1`.
pub const STREAMING_TOLERANCE: f64 = 1e-7;
/// Single-row path against the general path.
pub const SINGLE_PATH_TOLERANCE: f64 = 1e-10;

const QUERIES: usize = 20;
const SINGLE_UPDATES: usize = 500;
const STREAM_CLIPS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceRow {
    pub test: String,
    pub max_abs_err: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl EquivalenceRow {
    fn new(test: impl Into<String>, err: f64, tolerance: f64) -> Self {
        Self { test: test.into(), max_abs_err: err, tolerance, pass: err <= tolerance }
    }
}

impl CsvRow for EquivalenceRow {
    const HEADER: &'static [&'static str] = &["test", "max_abs_err", "pass"];

    fn fields(&self) -> Vec<String> {
        vec![self.test.clone(), float(self.max_abs_err), self.pass.to_string()]
    }
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    DenseMatrix::new(rows, cols, data).expect("normal draws are finite")
}

fn unit_vector(d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// Adds `eps`-scaled noise to the basis rows and re-orthonormalizes, so the
/// fault moves the subspace while keeping a valid basis.
fn perturb(basis: &SubspaceBasis, eps: f64, rng: &mut ChaCha8Rng) -> Result<SubspaceBasis, BenchError> {
    if eps == 0.0 {
        return Ok(basis.clone());
    }
    let noise = gaussian(basis.n_c(), basis.dim(), rng).scale(eps);
    let moved = basis.u_mem().add(&noise)?;
    let (q, _) = householder_qr(&moved.transpose())?;
    Ok(SubspaceBasis::new(q.transpose(), basis.sigma().to_vec())?)
}

fn coefficient_check(
    m: &DenseMatrix,
    n_c: usize,
    fault: f64,
    rng: &mut ChaCha8Rng,
) -> Result<f64, BenchError> {
    let basis = perturb(&compute_basis(m, n_c, BasisMethod::Exact)?, fault, rng)?;
    let c = coefficient_matrix(m, n_c)?;
    let mut worst = 0.0_f64;
    for _ in 0..QUERIES {
        let h = unit_vector(m.cols(), rng);
        let direct = basis.project_reconstruct(&h)?;
        let via = project_via_coefficients(&h, m, &c)?;
        worst = direct.iter().zip(&via).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);
    }
    Ok(worst)
}

fn sigma_gap(a: &SubspaceBasis, b: &SubspaceBasis) -> f64 {
    let scale = a.sigma()[0].max(b.sigma()[0]).max(f64::MIN_POSITIVE);
    a.sigma().iter().zip(b.sigma()).map(|(x, y)| (x - y).abs() / scale).fold(0.0, f64::max)
}

fn streaming_checks(spec: &BenchSpec, rng: &mut ChaCha8Rng) -> Result<(f64, f64), BenchError> {
    let n_c = STREAM_CLIPS * spec.actors;
    let clips: Vec<DenseMatrix> = (0..STREAM_CLIPS).map(|_| gaussian(spec.actors, spec.d, rng)).collect();
    let all = DenseMatrix::vstack(&clips.iter().collect::<Vec<_>>())?;
    let offline = compute_basis(&all, n_c, BasisMethod::Exact)?;

    let mut state = init_online(&clips[0], n_c, 1.0)?;
    for c in &clips[1..] {
        state.update(c)?;
    }
    let streamed = perturb(state.basis(), spec.fault, rng)?;
    let clip_err = subspace_distance(streamed.u_mem(), offline.u_mem())?;

    let mut single = init_online(&DenseMatrix::row_vector(all.row(0))?, n_c, 1.0)?;
    for row in all.row_iter().skip(1) {
        single.update_single(row)?;
    }
    let streamed = perturb(single.basis(), spec.fault, rng)?;
    let row_err = subspace_distance(streamed.u_mem(), offline.u_mem())?;
    Ok((clip_err, row_err))
}

fn single_path_check(spec: &BenchSpec, rng: &mut ChaCha8Rng) -> Result<f64, BenchError> {
    let boot = gaussian(spec.n_c + spec.actors, spec.d, rng);
    let start = init_online(&boot, spec.n_c, 0.95)?;
    let mut worst = 0.0_f64;
    let mut state = start;
    for _ in 0..SINGLE_UPDATES {
        let h: Vec<f64> = (0..spec.d).map(|_| rng.sample(StandardNormal)).collect();
        let mut fast: OnlineState = state.clone();
        fast.update_single(&h)?;
        state.update(&DenseMatrix::row_vector(&h)?)?;
        let fast_basis = perturb(fast.basis(), spec.fault, rng)?;
        let dist = subspace_distance(fast_basis.u_mem(), state.basis().u_mem())?;
        worst = worst.max(dist).max(sigma_gap(&fast_basis, state.basis()));
    }
    Ok(worst)
}

/// Runs every identity check at the configured sizes. With `spec.fault > 0`
/// each candidate basis is perturbed first, so the checks should fail.
pub fn run_equivalence(spec: &BenchSpec) -> Result<Vec<EquivalenceRow>, BenchError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_mem = (2 * BenchSpec::half_window(spec.window_lengths[0]) as usize + 1) * spec.actors;
    let m = gaussian(n_mem, spec.d, &mut rng);

    let mut rows = Vec::new();
    let n_c = spec.n_c.min(n_mem);
    rows.push(EquivalenceRow::new(
        format!("coefficient_identity_nmem{n_mem}_nc{n_c}"),
        coefficient_check(&m, n_c, spec.fault, &mut rng)?,
        COEFFICIENT_TOLERANCE,
    ));
    let full = n_mem.min(spec.d);
    rows.push(EquivalenceRow::new(
        format!("coefficient_identity_full_rank_nc{full}"),
        coefficient_check(&m, full, spec.fault, &mut rng)?,
        FULL_RANK_TOLERANCE,
    ));

    if STREAM_CLIPS * spec.actors + spec.actors <= spec.d {
        let (clip_err, row_err) = streaming_checks(spec, &mut rng)?;
        rows.push(EquivalenceRow::new("streaming_matches_offline", clip_err, STREAMING_TOLERANCE));
        rows.push(EquivalenceRow::new("single_row_stream_matches_offline", row_err, STREAMING_TOLERANCE));
    }
    rows.push(EquivalenceRow::new(
        "single_path_matches_general",
        single_path_check(spec, &mut rng)?,
        SINGLE_PATH_TOLERANCE,
    ));
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> BenchSpec {
        BenchSpec { d: 64, n_c: 5, window_lengths: vec![4], ..BenchSpec::default() }
    }

    #[test]
    fn clean_run_passes() {
        let rows = run_equivalence(&small()).unwrap();
        assert_eq!(rows.len(), 5);
        assert!(rows.iter().all(|r| r.pass), "{rows:#?}");
    }

    #[test]
    fn injected_fault_fails() {
        let rows = run_equivalence(&BenchSpec { fault: 1e-3, ..small() }).unwrap();
        assert!(rows.iter().all(|r| !r.pass), "{rows:#?}");
    }
}
