use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use memsvd_bench::{run, BenchSpec, DriftSettings, Mode};

#[derive(Parser)]
#[command(name = "memsvd", version, about = "SVD memory bank benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark and write CSV.
    Bench {
        #[command(subcommand)]
        mode: BenchMode,
    },
}

#[derive(Subcommand)]
enum BenchMode {
    /// Head-only latency sweep over window lengths.
    Throughput(Common),
    /// Closed-form cost counters.
    Flops(Common),
    /// Online tracking error per forgetting factor.
    Drift(Common),
    /// Identity checks with pass/fail.
    Equivalence(Common),
}

#[derive(Args)]
struct Common {
    /// Window lengths in seconds (comma separated, ascending).
    #[arg(long, value_delimiter = ',', default_values_t = [20, 40, 60, 80, 100, 120, 140, 160])]
    window: Vec<u32>,
    #[arg(long, default_value_t = 10)]
    nc: usize,
    #[arg(long, default_value_t = 2304)]
    dim: usize,
    #[arg(long, default_value_t = 512)]
    du: usize,
    #[arg(long, default_value_t = 3)]
    actors: usize,
    /// Forgetting factors (comma separated).
    #[arg(long, value_delimiter = ',', default_values_t = [0.8, 0.9, 0.95, 0.99])]
    lambda: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Leave the query clip's actors out of the memory.
    #[arg(long)]
    exclude_center: bool,
    /// Subtract the memory mean before decomposing.
    #[arg(long)]
    center_features: bool,
    /// Precompute memory keys and values once per window.
    #[arg(long)]
    cache_kv: bool,
    /// Scale attention scores by sqrt(d_u) instead of sqrt(d).
    #[arg(long)]
    scale_du: bool,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value_t = 2)]
    warmup: usize,
    /// Minimum duration of one timing sample, in microseconds.
    #[arg(long, default_value_t = 2000)]
    min_sample_us: u64,
    /// Clips streamed by the drift run.
    #[arg(long, default_value_t = 600)]
    drift_clips: usize,
    #[arg(long, default_value_t = 50)]
    checkpoint: usize,
    /// Planted-basis rotation per clip, in radians.
    #[arg(long, default_value_t = 0.01)]
    drift_rate: f64,
    #[arg(long, default_value_t = 0.01)]
    noise: f64,
    /// Clips in the reference window of each drift checkpoint.
    #[arg(long, default_value_t = 5)]
    oracle_window: usize,
    /// Perturb candidate bases by this amount in the equivalence run.
    #[arg(long, default_value_t = 0.0)]
    fault: f64,
}

impl Common {
    fn into_spec(self, mode: Mode) -> BenchSpec {
        BenchSpec {
            mode,
            window_lengths: self.window,
            n_c: self.nc,
            d: self.dim,
            d_u: self.du,
            actors: self.actors,
            lambda_list: self.lambda,
            repeats: self.repeats,
            warmup_iters: self.warmup,
            seed: self.seed,
            output_path: self.out,
            exclude_center: self.exclude_center,
            center_features: self.center_features,
            cache_kv: self.cache_kv,
            scale_du: self.scale_du,
            min_sample: Duration::from_micros(self.min_sample_us),
            drift: DriftSettings {
                clip_count: self.drift_clips,
                checkpoint_every: self.checkpoint,
                drift_rate: self.drift_rate,
                noise_sigma: self.noise,
                oracle_window: self.oracle_window,
                planted_rank: None,
            },
            fault: self.fault,
        }
    }
}

fn execute(spec: &BenchSpec) -> Result<i32, Box<dyn std::error::Error>> {
    let status = match &spec.output_path {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            let s = run(spec, &mut w)?;
            w.flush()?;
            s
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            run(spec, &mut lock)?
        }
    };
    Ok(status.exit_code())
}

/// Exit status for usage and runtime errors; 1 and 2 are reserved for
/// equivalence failures and unstable timing.
const ERROR_EXIT: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { ERROR_EXIT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let Command::Bench { mode } = cli.command;
    let spec = match mode {
        BenchMode::Throughput(c) => c.into_spec(Mode::Throughput),
        BenchMode::Flops(c) => c.into_spec(Mode::Flops),
        BenchMode::Drift(c) => c.into_spec(Mode::Drift),
        BenchMode::Equivalence(c) => c.into_spec(Mode::Equivalence),
    };
    match execute(&spec) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(ERROR_EXIT)
        }
    }
}
