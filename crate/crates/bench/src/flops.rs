//! Closed-form cost table across window lengths.

use memsvd::attention::{flops_attention, flops_basis, flops_memsvd, BasisCost, KvProjection};

use crate::report::{float, CsvRow};
use crate::spec::BenchSpec;
use crate::BenchError;

#[derive(Debug, Clone, PartialEq)]
pub struct FlopsRow {
    pub method: &'static str,
    pub window_s: u32,
    pub n_mem: u64,
    pub flops: u64,
    /// `flops` divided by the per-query projection cost.
    pub ratio: f64,
}

impl CsvRow for FlopsRow {
    const HEADER: &'static [&'static str] = &["method", "window_s", "n_mem", "flops", "ratio_to_memsvd"];

    fn fields(&self) -> Vec<String> {
        vec![
            self.method.to_string(),
            self.window_s.to_string(),
            self.n_mem.to_string(),
            self.flops.to_string(),
            float(self.ratio),
        ]
    }
}

/// Memory rows for a window of `length` seconds.
pub fn memory_rows(spec: &BenchSpec, length: u32) -> u64 {
    let clips = 2 * u64::from(BenchSpec::half_window(length)) + 1;
    let clips = if spec.exclude_center { clips - 1 } else { clips };
    clips * spec.actors as u64
}

pub fn run_flops(spec: &BenchSpec) -> Result<Vec<FlopsRow>, BenchError> {
    spec.validate()?;
    let (d, d_u, n_c) = (spec.d as u64, spec.d_u as u64, spec.n_c as u64);
    let memsvd = flops_memsvd(n_c, d);
    let mut rows = Vec::new();
    for &length in &spec.window_lengths {
        let n_mem = memory_rows(spec, length);
        let entries = [
            ("attention", flops_attention(n_mem, d, d_u, KvProjection::PerQuery)),
            ("attention_cached", flops_attention(n_mem, d, d_u, KvProjection::Cached)),
            ("memsvd", memsvd),
            ("basis_exact", flops_basis(n_mem, d, n_c, BasisCost::Exact)),
            ("basis_randomized", flops_basis(n_mem, d, n_c, BasisCost::Randomized)),
            ("online_update", flops_basis(n_mem, d, n_c, BasisCost::OnlineUpdate { clip_rows: spec.actors as u64 })),
        ];
        for (method, flops) in entries {
            rows.push(FlopsRow { method, window_s: length, n_mem, flops, ratio: flops as f64 / memsvd as f64 });
        }
    }
    Ok(rows)
}
