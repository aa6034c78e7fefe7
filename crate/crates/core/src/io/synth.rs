//! Planted-subspace feature streams with known ground truth.
//!
//! Clip `t` has rows `Z_t · B_t + σ · G_t`, where `B_t` (`r × d`, orthonormal
//! rows) is the planted basis and `Z_t`, `G_t` are standard normal. Drift
//! rotates planted row `i` towards a fixed partner direction `c_i` by
//! `drift_rate · t` radians: `b_i(t) = cos(θt) b_i + sin(θt) c_i`. The planes
//! `(b_i, c_i)` are mutually orthogonal, so the principal angles between
//! `B_0` and `B_t` are all `θt` (for the `min(r, d − r)` rows that have a
//! partner; any others stay fixed).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bank::ClipFeatures;
use crate::error::{Error, Result};
use crate::linalg::{gaussian_matrix, householder_qr, DenseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActorCount {
    Fixed(usize),
    /// Uniform over `lo..=hi`.
    Uniform { lo: usize, hi: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub dim: usize,
    pub planted_rank: usize,
    pub actors: ActorCount,
    pub noise_sigma: f64,
    /// Radians of planted-basis rotation per clip.
    pub drift_rate: f64,
    pub seed: u64,
    pub clip_count: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            dim: 256,
            planted_rank: 10,
            actors: ActorCount::Fixed(3),
            noise_sigma: 0.01,
            drift_rate: 0.0,
            seed: 0,
            clip_count: 61,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.dim == 0 || self.planted_rank == 0 || self.planted_rank > self.dim {
            return bad("planted rank must be in 1..=dim");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise sigma must be finite and non-negative");
        }
        if !(self.drift_rate >= 0.0 && self.drift_rate.is_finite()) {
            return bad("drift rate must be finite and non-negative");
        }
        if let ActorCount::Uniform { lo, hi } = self.actors {
            if lo > hi {
                return bad("actor range is empty");
            }
        }
        Ok(())
    }
}

struct PlantedModel {
    base: DenseMatrix,
    partners: DenseMatrix,
    drift_rate: f64,
}

impl PlantedModel {
    fn new(cfg: &SynthConfig) -> Result<Self> {
        let (d, r) = (cfg.dim, cfg.planted_rank);
        let paired = r.min(d - r);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(1);
        let (q, _) = householder_qr(&gaussian_matrix(d, r + paired, &mut rng))?;
        let qt = q.transpose();
        Ok(Self { base: qt.row_range(0..r), partners: qt.row_range(r..r + paired), drift_rate: cfg.drift_rate })
    }

    fn at(&self, t: i64) -> DenseMatrix {
        let angle = self.drift_rate * t as f64;
        let (s, c) = angle.sin_cos();
        let mut b = self.base.clone();
        for i in 0..self.partners.rows() {
            let p = self.partners.row(i).to_vec();
            for (x, y) in b.row_mut(i).iter_mut().zip(p) {
                *x = c * *x + s * y;
            }
        }
        b
    }
}

/// The planted `r × d` basis at clip `t`.
pub fn planted_basis(cfg: &SynthConfig, t: i64) -> Result<DenseMatrix> {
    cfg.validate()?;
    Ok(PlantedModel::new(cfg)?.at(t))
}

/// Clips `0..clip_count`, deterministic in `cfg.seed`.
pub fn generate_stream(cfg: &SynthConfig) -> Result<Vec<ClipFeatures>> {
    cfg.validate()?;
    let model = PlantedModel::new(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(2);
    let mut clips = Vec::with_capacity(cfg.clip_count);
    for t in 0..cfg.clip_count as i64 {
        let actors = match cfg.actors {
            ActorCount::Fixed(k) => k,
            ActorCount::Uniform { lo, hi } => rng.random_range(lo..=hi),
        };
        let z = gaussian_matrix(actors, cfg.planted_rank, &mut rng);
        let mut x = z.matmul(&model.at(t))?;
        if cfg.noise_sigma > 0.0 {
            let g = gaussian_matrix(actors, cfg.dim, &mut rng);
            x = x.add(&g.scale(cfg.noise_sigma))?;
        }
        clips.push(ClipFeatures::new(t, x));
    }
    Ok(clips)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{orthonormality_residual, subspace_distance};

    #[test]
    fn same_seed_same_stream() {
        let cfg = SynthConfig { clip_count: 5, actors: ActorCount::Uniform { lo: 0, hi: 4 }, ..Default::default() };
        assert_eq!(generate_stream(&cfg).unwrap(), generate_stream(&cfg).unwrap());
        let other = SynthConfig { seed: 1, ..cfg.clone() };
        assert_ne!(generate_stream(&cfg).unwrap(), generate_stream(&other).unwrap());
    }

    #[test]
    fn drift_follows_principal_angles() {
        let cfg = SynthConfig { dim: 16, planted_rank: 3, drift_rate: 0.05, ..Default::default() };
        let b0 = planted_basis(&cfg, 0).unwrap();
        let b7 = planted_basis(&cfg, 7).unwrap();
        assert!(orthonormality_residual(&b7) < 1e-13);
        let expected = (2.0 * 3.0 * (0.35f64).sin().powi(2)).sqrt();
        assert!((subspace_distance(&b0, &b7).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(generate_stream(&SynthConfig { planted_rank: 300, ..Default::default() }).is_err());
        assert!(generate_stream(&SynthConfig { noise_sigma: -1.0, ..Default::default() }).is_err());
        assert!(generate_stream(&SynthConfig { actors: ActorCount::Uniform { lo: 3, hi: 2 }, ..Default::default() })
            .is_err());
    }
}
