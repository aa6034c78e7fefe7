//! Head-only latency sweep over window lengths.
//!
//! One timed unit is the memory interaction for every actor of the centre
//! clip; results are reported per query feature. Samples for all
//! (window, method) cells are interleaved round by round so slow drifts in
//! machine state spread evenly over the sweep.

use std::fmt;
use std::hint::black_box;
use std::time::{Duration, Instant};

use memsvd::attention::{cross_attention_cached, project_memory, AttentionWeights, ProjectedMemory, ScoreScale};
use memsvd::basis::center_rows;
use memsvd::io::{generate_stream, ActorCount, SynthConfig};
use memsvd::online::{init_online, OnlineState, DEFAULT_FORGETTING_FACTOR};
use memsvd::{compute_basis, BasisMethod, DenseMatrix, MemoryBank, SubspaceBasis};

use crate::report::{float, CsvRow};
use crate::spec::BenchSpec;
use crate::stats::{median, percentile};
use crate::BenchError;

/// Relative change between the two passes above which a median is unstable.
pub const STABILITY_TOLERANCE: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Attention,
    MemSvd,
    OnlineMemSvd,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Attention, Method::MemSvd, Method::OnlineMemSvd];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Attention => "attention",
            Method::MemSvd => "memsvd",
            Method::OnlineMemSvd => "omemsvd",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputRow {
    pub method: Method,
    pub window_s: u32,
    pub n_mem: usize,
    pub median_us: f64,
    pub p10_us: f64,
    pub p90_us: f64,
}

impl CsvRow for ThroughputRow {
    const HEADER: &'static [&'static str] = &["method", "window_s", "n_mem", "median_us", "p10_us", "p90_us"];

    fn fields(&self) -> Vec<String> {
        vec![
            self.method.to_string(),
            self.window_s.to_string(),
            self.n_mem.to_string(),
            float(self.median_us),
            float(self.p10_us),
            float(self.p90_us),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnstableCell {
    pub method: Method,
    pub window_s: u32,
    pub first_us: f64,
    pub second_us: f64,
}

#[derive(Debug, Clone)]
pub struct ThroughputReport {
    pub rows: Vec<ThroughputRow>,
    pub unstable: Vec<UnstableCell>,
}

impl ThroughputReport {
    pub fn is_stable(&self) -> bool {
        self.unstable.is_empty()
    }

    /// Medians of one method in sweep order.
    pub fn medians(&self, method: Method) -> Vec<f64> {
        self.rows.iter().filter(|r| r.method == method).map(|r| r.median_us).collect()
    }
}

struct Workload {
    window_s: u32,
    queries: DenseMatrix,
    memory: DenseMatrix,
    cached: Option<ProjectedMemory>,
    basis: SubspaceBasis,
    online: OnlineState,
    incoming: Vec<DenseMatrix>,
    next: usize,
}

impl Workload {
    fn build(spec: &BenchSpec, window_s: u32) -> Result<Self, BenchError> {
        let w = BenchSpec::half_window(window_s);
        let cfg = SynthConfig {
            dim: spec.d,
            planted_rank: spec.n_c,
            actors: ActorCount::Fixed(spec.actors),
            noise_sigma: 0.01,
            drift_rate: 0.0,
            seed: spec.seed,
            clip_count: 2 * w as usize + 1,
        };
        let clips = generate_stream(&cfg)?;
        let mut bank = MemoryBank::offline(w, spec.d).exclude_center(spec.exclude_center);
        for c in &clips {
            bank.push_clip(c.clone())?;
        }
        let memory = bank.materialize(i64::from(w))?;
        let queries = clips[w as usize].features().clone();
        let decomposed = if spec.center_features { center_rows(&memory).0 } else { memory.clone() };
        let basis = compute_basis(&decomposed, spec.n_c, BasisMethod::Exact)?;
        let online = init_online(&decomposed, spec.n_c, DEFAULT_FORGETTING_FACTOR)?;
        let incoming = clips.into_iter().map(|c| c.into_features()).collect();
        Ok(Self { window_s, queries, memory, cached: None, basis, online, incoming, next: 0 })
    }

    fn run(&mut self, method: Method, weights: &AttentionWeights, scale: ScoreScale) -> Result<(), BenchError> {
        match method {
            Method::Attention => {
                let fresh;
                let kv = match &self.cached {
                    Some(kv) => kv,
                    None => {
                        fresh = project_memory(&self.memory, weights)?;
                        &fresh
                    }
                };
                for h in self.queries.row_iter() {
                    black_box(cross_attention_cached(h, kv, weights, scale)?);
                }
            }
            Method::MemSvd => {
                black_box(self.basis.residual_update_rows(&self.queries)?);
            }
            Method::OnlineMemSvd => {
                self.online.update(&self.incoming[self.next])?;
                self.next = (self.next + 1) % self.incoming.len();
                black_box(self.online.basis().residual_update_rows(&self.queries)?);
            }
        }
        Ok(())
    }
}

/// Runs `f` once per iteration and returns the mean wall time per iteration.
fn timed(iters: usize, mut f: impl FnMut() -> Result<(), BenchError>) -> Result<Duration, BenchError> {
    let start = Instant::now();
    for _ in 0..iters {
        f()?;
    }
    Ok(start.elapsed() / iters as u32)
}

/// Per-query medians and percentiles for every (window, method) cell, once
/// per pass. Rounds alternate between passes so that every pass samples the
/// same stretch of machine time.
fn measure_passes(
    spec: &BenchSpec,
    workloads: &mut [Workload],
    weights: &AttentionWeights,
    passes: usize,
) -> Result<Vec<Vec<ThroughputRow>>, BenchError> {
    let scale = if spec.scale_du { ScoreScale::ProjectedDim } else { ScoreScale::FeatureDim };
    let cells: Vec<(usize, Method)> =
        (0..workloads.len()).flat_map(|i| Method::ALL.into_iter().map(move |m| (i, m))).collect();

    let mut iters = Vec::with_capacity(cells.len());
    for &(i, method) in &cells {
        let wl = &mut workloads[i];
        for _ in 0..spec.warmup_iters {
            wl.run(method, weights, scale)?;
        }
        let once = timed(1, || wl.run(method, weights, scale))?;
        let n = (spec.min_sample.as_secs_f64() / once.as_secs_f64().max(1e-9)).ceil();
        iters.push((n as usize).max(1));
    }

    let mut samples = vec![vec![Vec::with_capacity(spec.repeats); cells.len()]; passes];
    for _ in 0..spec.repeats {
        for pass in samples.iter_mut() {
            for (c, &(i, method)) in cells.iter().enumerate() {
                let wl = &mut workloads[i];
                let per_clip = timed(iters[c], || wl.run(method, weights, scale))?;
                pass[c].push(per_clip.as_secs_f64() * 1e6 / spec.actors as f64);
            }
        }
    }

    Ok(samples
        .iter()
        .map(|pass| {
            cells
                .iter()
                .zip(pass)
                .map(|(&(i, method), s)| ThroughputRow {
                    method,
                    window_s: workloads[i].window_s,
                    n_mem: workloads[i].memory.rows(),
                    median_us: median(s),
                    p10_us: percentile(s, 0.1),
                    p90_us: percentile(s, 0.9),
                })
                .collect()
        })
        .collect())
}

/// Measures every method at every window length alongside an independent
/// confirmation pass, and flags cells whose medians disagree by more than
/// [`STABILITY_TOLERANCE`].
pub fn run_throughput(spec: &BenchSpec) -> Result<ThroughputReport, BenchError> {
    spec.validate()?;
    let weights = AttentionWeights::seeded(spec.d, spec.d_u, spec.seed);
    let mut workloads = spec
        .window_lengths
        .iter()
        .map(|&l| Workload::build(spec, l))
        .collect::<Result<Vec<_>, _>>()?;
    if spec.cache_kv {
        for wl in &mut workloads {
            wl.cached = Some(project_memory(&wl.memory, &weights)?);
        }
    }

    let mut passes = measure_passes(spec, &mut workloads, &weights, 2)?;
    let confirm = passes.pop().expect("two passes");
    let rows = passes.pop().expect("two passes");
    let unstable = rows
        .iter()
        .zip(&confirm)
        .filter(|(a, b)| (a.median_us - b.median_us).abs() > STABILITY_TOLERANCE * a.median_us)
        .map(|(a, b)| UnstableCell {
            method: a.method,
            window_s: a.window_s,
            first_us: a.median_us,
            second_us: b.median_us,
        })
        .collect();
    Ok(ThroughputReport { rows, unstable })
}
