use std::fmt;
use std::path::PathBuf;
use std::time::Duration;

use memsvd::attention::{DEFAULT_FEATURE_DIM, DEFAULT_PROJECTED_DIM};
use memsvd::basis::DEFAULT_COMPONENTS;

use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Throughput,
    Flops,
    Drift,
    Equivalence,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Throughput => "throughput",
            Mode::Flops => "flops",
            Mode::Drift => "drift",
            Mode::Equivalence => "equivalence",
        })
    }
}

/// Settings for the drifting planted stream used by the drift run.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftSettings {
    pub clip_count: usize,
    pub checkpoint_every: usize,
    /// Radians of planted-basis rotation per clip.
    pub drift_rate: f64,
    pub noise_sigma: f64,
    /// Clips in the offline reference window ending at each checkpoint.
    pub oracle_window: usize,
    /// Planted rank; `None` uses `n_c`.
    pub planted_rank: Option<usize>,
}

impl Default for DriftSettings {
    fn default() -> Self {
        Self {
            clip_count: 600,
            checkpoint_every: 50,
            drift_rate: 0.01,
            noise_sigma: 0.01,
            oracle_window: 5,
            planted_rank: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    pub mode: Mode,
    /// Window lengths in seconds (one clip per second). A length `L` maps to
    /// the half-window `⌊L/2⌋`, i.e. `2⌊L/2⌋ + 1` clips.
    pub window_lengths: Vec<u32>,
    pub n_c: usize,
    pub d: usize,
    pub d_u: usize,
    pub actors: usize,
    pub lambda_list: Vec<f64>,
    pub repeats: usize,
    pub warmup_iters: usize,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub exclude_center: bool,
    pub center_features: bool,
    pub cache_kv: bool,
    pub scale_du: bool,
    /// Each timing sample repeats the operation until at least this long.
    pub min_sample: Duration,
    pub drift: DriftSettings,
    /// Size of the deliberate perturbation applied to every candidate basis in
    /// the equivalence run (a negative control). Zero disables it.
    pub fault: f64,
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self {
            mode: Mode::Throughput,
            window_lengths: (1..=8).map(|i| i * 20).collect(),
            n_c: DEFAULT_COMPONENTS,
            d: DEFAULT_FEATURE_DIM,
            d_u: DEFAULT_PROJECTED_DIM,
            actors: 3,
            lambda_list: vec![0.8, 0.9, 0.95, 0.99],
            repeats: 5,
            warmup_iters: 2,
            seed: 0,
            output_path: None,
            exclude_center: false,
            center_features: false,
            cache_kv: false,
            scale_du: false,
            min_sample: Duration::from_millis(2),
            drift: DriftSettings::default(),
            fault: 0.0,
        }
    }
}

impl BenchSpec {
    pub fn new(mode: Mode) -> Self {
        Self { mode, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::InvalidSpec(m));
        if self.repeats < 3 {
            return bad(format!("repeats must be at least 3, got {}", self.repeats));
        }
        if self.window_lengths.is_empty() {
            return bad("at least one window length is required".into());
        }
        if self.window_lengths.contains(&0) || self.window_lengths.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("window lengths must be positive and ascending: {:?}", self.window_lengths));
        }
        if self.n_c == 0 || self.n_c > self.d {
            return bad(format!("n_c must be in 1..={}, got {}", self.d, self.n_c));
        }
        if self.d_u == 0 || self.actors == 0 {
            return bad("d_u and actors must be positive".into());
        }
        if let Some(l) = self.lambda_list.iter().find(|&&l| !(l > 0.0 && l <= 1.0)) {
            return bad(format!("forgetting factors must lie in (0, 1], got {l}"));
        }
        if self.n_c + self.actors > self.d {
            return bad(format!("n_c + actors ({}) exceeds the feature width {}", self.n_c + self.actors, self.d));
        }
        let dr = &self.drift;
        if dr.checkpoint_every == 0 || dr.oracle_window == 0 || dr.clip_count < dr.checkpoint_every {
            return bad("drift run needs clip_count >= checkpoint_every > 0 and oracle_window > 0".into());
        }
        if dr.oracle_window > dr.checkpoint_every {
            return bad("the oracle window cannot extend past the first checkpoint".into());
        }
        if !(self.fault >= 0.0 && self.fault.is_finite()) {
            return bad(format!("fault size must be finite and non-negative, got {}", self.fault));
        }
        Ok(())
    }

    pub(crate) fn half_window(length: u32) -> u32 {
        length / 2
    }

    /// `key=value` pairs describing the run, for the CSV metadata header.
    pub fn describe(&self) -> String {
        let lambdas: Vec<String> = self.lambda_list.iter().map(f64::to_string).collect();
        let windows: Vec<String> = self.window_lengths.iter().map(u32::to_string).collect();
        format!(
            "mode={} windows={} n_c={} d={} d_u={} actors={} lambda={} repeats={} warmup={} \
             exclude_center={} center_features={} cache_kv={} scale_du={} min_sample_us={} \
             drift_clips={} checkpoint={} drift_rate={} noise={} oracle_window={} fault={}",
            self.mode,
            windows.join(","),
            self.n_c,
            self.d,
            self.d_u,
            self.actors,
            lambdas.join(","),
            self.repeats,
            self.warmup_iters,
            self.exclude_center,
            self.center_features,
            self.cache_kv,
            self.scale_du,
            self.min_sample.as_micros(),
            self.drift.clip_count,
            self.drift.checkpoint_every,
            self.drift.drift_rate,
            self.drift.noise_sigma,
            self.drift.oracle_window,
            self.fault,
        )
    }
}
