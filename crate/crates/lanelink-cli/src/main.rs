//! Command-line front end: simulation sweeps, detection benchmarks,
//! precision comparisons, TBS queries, and host capability reporting.
//!
//! Exit codes: 0 on success, 1 on configuration or usage errors, 2 on
//! runtime errors once a run has started. The only environment variable
//! read is `LANELINK_OUT` (output directory override, below `--out`).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use lanelink::bench::{emit_all, load_bench_config, BenchConfig, BenchReport};
use lanelink::phy::{
    compute_tbs, default_mcs_table, peak_rate_mbps, NrNumerology, DEFAULT_OVERHEAD_RE_PER_PRB,
};
use lanelink::sim::{
    compare_precisions, load_sim_config, resolve_channel_model, run_sim, PrecisionComparison,
    SimResult,
};
use lanelink::{capability_query, Error, ExecPath, PrecisionMode};

#[derive(Parser)]
#[command(
    name = "lanelink",
    version,
    about = "LMMSE MIMO detection: link simulation and benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a link-level simulation sweep from a config file.
    Sim(SimArgs),
    /// Time the detection pipeline across MIMO sizes and paths.
    Bench(BenchArgs),
    /// Run one seeded experiment under both precisions and report deltas.
    ComparePrecision(SimArgs),
    /// Transport block size and peak rate for an MCS/RB/layer combination.
    Tbs(TbsArgs),
    /// Report this host's vector capabilities.
    Caps,
    /// Check a sim or bench config file without running it.
    Validate(ValidateArgs),
}

#[derive(Copy, Clone, ValueEnum)]
enum PathArg {
    Scalar,
    Vector,
}

impl From<PathArg> for ExecPath {
    fn from(p: PathArg) -> Self {
        match p {
            PathArg::Scalar => ExecPath::Scalar,
            PathArg::Vector => ExecPath::Vector,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum PrecisionArg {
    Ps,
    Pd,
}

impl From<PrecisionArg> for PrecisionMode {
    fn from(p: PrecisionArg) -> Self {
        match p {
            PrecisionArg::Ps => PrecisionMode::Ps,
            PrecisionArg::Pd => PrecisionMode::Pd,
        }
    }
}

#[derive(Args)]
struct SimArgs {
    /// Simulation config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the execution path.
    #[arg(long, value_enum)]
    path: Option<PathArg>,
    /// Override the arithmetic precision.
    #[arg(long, value_enum)]
    precision: Option<PrecisionArg>,
    /// Write result files into this directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Benchmark config (TOML); defaults to the standard 2x2/4x4/8x8 sweep.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Restrict the sweep to one execution path.
    #[arg(long, value_enum)]
    path: Option<PathArg>,
    /// Restrict the sweep to one precision.
    #[arg(long, value_enum)]
    precision: Option<PrecisionArg>,
    /// Output directory (overrides the config and LANELINK_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TbsArgs {
    /// MCS table index (0..=28).
    #[arg(long)]
    mcs: u8,
    /// Resource blocks.
    #[arg(long)]
    rb: u32,
    /// Spatial layers.
    #[arg(long)]
    layers: u32,
    /// Overhead REs per PRB subtracted before the RE cap.
    #[arg(long, default_value_t = DEFAULT_OVERHEAD_RE_PER_PRB)]
    overhead: u32,
    /// Subcarrier spacing in kHz (fixes the TTI the rate is quoted over).
    #[arg(long, default_value_t = 15)]
    scs: u32,
}

#[derive(Args)]
struct ValidateArgs {
    /// Config file to check; the kind (sim or bench) is auto-detected.
    #[arg(long)]
    config: PathBuf,
}

struct CliError {
    message: String,
    code: i32,
}

fn config_err(e: Error) -> CliError {
    CliError {
        message: e.to_string(),
        code: 1,
    }
}

fn runtime_err(e: Error) -> CliError {
    CliError {
        message: e.to_string(),
        code: 2,
    }
}

/// `--out` beats `LANELINK_OUT`; `None` means "don't write files".
fn resolve_out(flag: &Option<PathBuf>) -> Option<PathBuf> {
    flag.clone()
        .or_else(|| std::env::var_os("LANELINK_OUT").map(PathBuf::from))
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| runtime_err(e.into()))?;
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|e| runtime_err(e.into()))?;
    Ok(path)
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let outcome = match cli.command {
        Command::Sim(args) => cmd_sim(args),
        Command::Bench(args) => cmd_bench(args),
        Command::ComparePrecision(args) => cmd_compare(args),
        Command::Tbs(args) => cmd_tbs(args),
        Command::Caps => cmd_caps(),
        Command::Validate(args) => cmd_validate(args),
    };
    if let Err(e) = outcome {
        eprintln!("error: {}", e.message);
        std::process::exit(e.code);
    }
}

fn apply_sim_overrides(args: &SimArgs) -> Result<lanelink::SimConfig, CliError> {
    let mut cfg = load_sim_config(&args.config).map_err(config_err)?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(path) = args.path {
        cfg.path = path.into();
    }
    if let Some(precision) = args.precision {
        cfg.precision = precision.into();
    }
    cfg.validate().map_err(config_err)?;
    Ok(cfg)
}

fn print_sim_table(result: &SimResult) {
    println!(
        "{} TTIs x {} symbols, Qm {}, {}x{}, {}/{}",
        result.config.n_ttis,
        result.symbols_per_tti,
        result.qm,
        result.config.n_rx,
        result.config.n_tx,
        format!("{:?}", result.config.precision).to_lowercase(),
        format!("{:?}", result.config.path).to_lowercase(),
    );
    println!("snr_db        ser          ber      evm_rms%          mse  detect_us  skipped");
    for r in &result.records {
        println!(
            "{:>6.1}  {:>9.3e}  {:>9.3e}  {:>10.3}  {:>11.4e}  {:>9.1}  {:>7}",
            r.snr_db,
            r.ser,
            r.ber,
            r.evm_rms_percent,
            r.mse,
            r.mean_stage_timings.total_ns as f64 / 1e3,
            r.skipped_ttis,
        );
    }
}

fn cmd_sim(args: SimArgs) -> Result<(), CliError> {
    let cfg = apply_sim_overrides(&args)?;
    let result = run_sim(&cfg).map_err(runtime_err)?;
    print_sim_table(&result);
    if let Some(dir) = resolve_out(&args.out) {
        let json = write_file(&dir, "sim_result.json", &result.to_json())?;
        let csv = write_file(&dir, "sim_result.csv", &result.to_csv())?;
        println!("wrote {} and {}", json.display(), csv.display());
    }
    Ok(())
}

fn print_compare_table(cmp: &PrecisionComparison) {
    println!("snr_db     ser_ps     ser_pd   |delta|     ci95_hw   mse_ratio");
    for d in &cmp.deltas {
        println!(
            "{:>6.1}  {:>9.3e}  {:>9.3e}  {:>9.3e}  {:>9.3e}  {:>9.4}",
            d.snr_db, d.ser_ps, d.ser_pd, d.ser_delta_abs, d.ser_ci95_half_width, d.mse_ratio,
        );
    }
}

fn cmd_compare(args: SimArgs) -> Result<(), CliError> {
    let cfg = apply_sim_overrides(&args)?;
    let cmp = compare_precisions(&cfg).map_err(runtime_err)?;
    print_compare_table(&cmp);
    if let Some(dir) = resolve_out(&args.out) {
        let body = serde_json::to_string_pretty(&cmp).expect("comparison serializes");
        let path = write_file(&dir, "precision_comparison.json", &body)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn print_bench_report(report: &BenchReport) {
    let h = &report.host;
    println!(
        "host: {} | {} | vector {} ({}) | clock tick {} ns",
        h.cpu_model,
        h.arch,
        if h.vector_width_bits > 0 {
            format!("{}-bit", h.vector_width_bits)
        } else {
            "none".into()
        },
        if h.native_vector { "native" } else { "scalar fallback" },
        h.clock_tick_ns,
    );
    let lower = |d: String| d.to_lowercase();
    println!(
        "{:<6} {:<4} {:<7} {:>9} {:>10} {:>9} {:>8} {:>10}",
        "mimo", "prec", "path", "mean_us", "median_us", "p95_us", "speedup", "time_cut%",
    );
    for c in &report.cells {
        println!(
            "{:<6} {:<4} {:<7} {:>9.1} {:>10.1} {:>9.1} {:>8} {:>10}",
            format!("{}x{}", c.nr, c.nt),
            lower(format!("{:?}", c.precision)),
            lower(format!("{:?}", c.path)),
            c.mean_total_us,
            c.median_total_us,
            c.p95_total_us,
            c.speedup_vs_scalar
                .map(|s| format!("{s:.2}"))
                .unwrap_or_else(|| "-".into()),
            c.time_reduction_vs_scalar_percent
                .map(|s| format!("{s:.1}"))
                .unwrap_or_else(|| "-".into()),
        );
    }
    for d in &report.dominance {
        println!(
            "dominance {}x{} {}/{}: solve {:.1}% vs largest other {:.1}% -> {}",
            d.nr,
            d.nt,
            lower(format!("{:?}", d.precision)),
            lower(format!("{:?}", d.path)),
            d.solve_share_percent,
            d.max_other_share_percent,
            if d.pass { "pass" } else { "FAIL" },
        );
    }
    for b in &report.latency_budget {
        println!(
            "budget {}x{} {}/{}: {:.1} us = {:.1}% of 1 ms TTI -> {}",
            b.nr,
            b.nt,
            lower(format!("{:?}", b.precision)),
            lower(format!("{:?}", b.path)),
            b.mean_total_us,
            b.share_of_1ms_tti_percent,
            if b.green { "green" } else { "over" },
        );
    }
    let t = &report.reference_targets;
    println!(
        "reference targets (desktop-class table, recorded not asserted): \
         >{:.0}% time cut, {:.2} ms 4x4 detection, ~{:.0}% of TTI",
        t.time_reduction_percent, t.detection_time_4x4_ms, t.tti_budget_share_percent,
    );
    for w in &report.warnings {
        println!("warning: {w}");
    }
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let mut cfg = match &args.config {
        Some(path) => load_bench_config(path).map_err(config_err)?,
        None => BenchConfig::default_sweep(),
    };
    if let Some(path) = args.path {
        cfg.paths = vec![path.into()];
    }
    if let Some(precision) = args.precision {
        cfg.precisions = vec![precision.into()];
    }
    if let Some(dir) = resolve_out(&args.out) {
        cfg.output_dir = dir;
    }
    cfg.validate().map_err(config_err)?;
    let report = lanelink::run_bench(&cfg).map_err(runtime_err)?;
    print_bench_report(&report);
    let paths = emit_all(&report, &report.config.output_dir).map_err(runtime_err)?;
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_tbs(args: TbsArgs) -> Result<(), CliError> {
    let table = default_mcs_table();
    let mcs = table
        .get(usize::from(args.mcs))
        .ok_or_else(|| config_err(Error::invalid(format!("mcs {} outside 0..=28", args.mcs))))?;
    let num = NrNumerology::new(args.scs, args.rb).map_err(config_err)?;
    let tbs = compute_tbs(mcs, args.rb, args.layers, args.overhead).map_err(config_err)?;
    let rate = peak_rate_mbps(tbs, num.tti_ms());
    println!(
        "TBS: {tbs} bits (MCS {}, Qm {}, code rate {}/1024, {} RB, {} layers, {} overhead REs/PRB)",
        mcs.index, mcs.qm, mcs.code_rate_x1024, args.rb, args.layers, args.overhead,
    );
    println!("Peak rate: {rate:.1} Mbps over the {:.3} ms TTI", num.tti_ms());
    Ok(())
}

fn cmd_caps() -> Result<(), CliError> {
    let caps = capability_query();
    println!("arch: {}", std::env::consts::ARCH);
    if caps.native {
        println!(
            "vector path: native, width {} bits, fma {}",
            caps.width_bits,
            if caps.fma { "yes" } else { "no" },
        );
    } else {
        println!("vector path: scalar fallback (no 256-bit vector unit in this build/host)");
    }
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> Result<(), CliError> {
    let sim_outcome = load_sim_config(&args.config).and_then(|cfg| {
        cfg.validate()?;
        resolve_channel_model(&cfg.channel_profile, cfg.master_seed)?;
        Ok(cfg)
    });
    match sim_outcome {
        Ok(cfg) => {
            println!(
                "OK: sim config ({}x{}, {} SNR points, {} TTIs, profile {})",
                cfg.n_rx,
                cfg.n_tx,
                cfg.snr_db_points.len(),
                cfg.n_ttis,
                cfg.channel_profile,
            );
            return Ok(());
        }
        Err(sim_err) => {
            let bench_outcome = load_bench_config(&args.config).and_then(|cfg| {
                cfg.validate()?;
                Ok(cfg)
            });
            match bench_outcome {
                Ok(cfg) => {
                    println!(
                        "OK: bench config ({} sizes, {} TTIs + {} warmup)",
                        cfg.mimo_sizes.len(),
                        cfg.n_ttis,
                        cfg.warmup_ttis,
                    );
                    Ok(())
                }
                Err(bench_err) => Err(CliError {
                    message: format!(
                        "{} is neither a sim config ({sim_err}) nor a bench config ({bench_err})",
                        args.config.display(),
                    ),
                    code: 1,
                }),
            }
        }
    }
}
