//! Tracking error of the online basis against a recent-window oracle, per
//! forgetting factor.

use memsvd::io::{generate_stream, ActorCount, SynthConfig};
use memsvd::online::OnlineMemory;

use crate::report::{float, CsvRow};
use crate::spec::BenchSpec;
use crate::BenchError;

#[derive(Debug, Clone, PartialEq)]
pub struct DriftRow {
    pub lambda: f64,
    /// Number of clips streamed when the checkpoint was taken.
    pub clip_index: usize,
    pub subspace_distance: f64,
}

impl CsvRow for DriftRow {
    const HEADER: &'static [&'static str] = &["lambda", "clip_index", "subspace_distance"];

    fn fields(&self) -> Vec<String> {
        vec![self.lambda.to_string(), self.clip_index.to_string(), float(self.subspace_distance)]
    }
}

/// Streams one synthetic drifting sequence through an online memory per
/// forgetting factor. Every `checkpoint_every` clips the tracked basis is
/// compared with the exact basis of the last `oracle_window` clips.
pub fn run_drift(spec: &BenchSpec) -> Result<Vec<DriftRow>, BenchError> {
    spec.validate()?;
    let dr = &spec.drift;
    if dr.oracle_window * spec.actors < spec.n_c {
        return Err(BenchError::InvalidSpec(format!(
            "oracle window of {} clips has fewer than n_c = {} rows",
            dr.oracle_window, spec.n_c
        )));
    }
    let cfg = SynthConfig {
        dim: spec.d,
        planted_rank: dr.planted_rank.unwrap_or(spec.n_c),
        actors: ActorCount::Fixed(spec.actors),
        noise_sigma: dr.noise_sigma,
        drift_rate: dr.drift_rate,
        seed: spec.seed,
        clip_count: dr.clip_count,
    };
    let clips = generate_stream(&cfg)?;

    let mut rows = Vec::new();
    for &lambda in &spec.lambda_list {
        let mut memory = OnlineMemory::new(spec.d, spec.n_c, lambda)?;
        for (i, clip) in clips.iter().enumerate() {
            memory.push_clip(clip.clone())?;
            let seen = i + 1;
            if seen % dr.checkpoint_every != 0 {
                continue;
            }
            let state = memory.state().ok_or_else(|| {
                BenchError::InvalidSpec(format!("basis not bootstrapped after {seen} clips"))
            })?;
            let reference = &clips[seen - dr.oracle_window..seen];
            rows.push(DriftRow { lambda, clip_index: seen, subspace_distance: state.drift_report(reference)? });
        }
    }
    Ok(rows)
}

/// Distance at the last checkpoint for each forgetting factor, in
/// `lambda_list` order.
pub fn final_distances(rows: &[DriftRow]) -> Vec<(f64, f64)> {
    let last = rows.iter().map(|r| r.clip_index).max().unwrap_or(0);
    rows.iter().filter(|r| r.clip_index == last).map(|r| (r.lambda, r.subspace_distance)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::DriftSettings;

    #[test]
    fn noiseless_static_stream_is_tracked_exactly() {
        let spec = BenchSpec {
            d: 48,
            n_c: 6,
            lambda_list: vec![1.0],
            drift: DriftSettings { clip_count: 200, drift_rate: 0.0, noise_sigma: 0.0, ..DriftSettings::default() },
            ..BenchSpec::default()
        };
        let rows = run_drift(&spec).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.subspace_distance <= 1e-7), "{rows:?}");
    }

    #[test]
    fn row_count_is_lambdas_times_checkpoints() {
        let spec = BenchSpec { d: 24, n_c: 4, ..BenchSpec::default() };
        let rows = run_drift(&spec).unwrap();
        assert_eq!(rows.len(), 48);
        assert_eq!(final_distances(&rows).len(), 4);
    }

    #[test]
    fn oracle_window_must_cover_n_c() {
        let spec = BenchSpec {
            d: 64,
            n_c: 20,
            drift: DriftSettings { oracle_window: 5, ..DriftSettings::default() },
            ..BenchSpec::default()
        };
        assert!(matches!(run_drift(&spec), Err(BenchError::InvalidSpec(_))));
    }
}
