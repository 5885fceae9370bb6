//! Detection benchmark harness: stage-breakdown timing across MIMO sizes
//! and scalar-vs-vector speedup measurement on identical workloads.
//!
//! Every cell of one run — each `(mimo, precision, path)` combination —
//! detects the *same* pre-generated slots (QPSK payloads through a
//! power-normalized fading channel at a fixed 20 dB operating point), so
//! timing differences are attributable to path and precision alone. A
//! 16-slot pool is cycled round-robin to defeat trivial caching of a
//! single input without paying per-TTI generation cost; generation is
//! never inside the timed region.
//!
//! Per-TTI samples are the detector's own stage-accounted totals, so the
//! stage means reconcile with the mean total by construction and
//! allocation noise outside the pipeline is excluded.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::buffer::PrecisionMode;
use crate::detector::{detect_slot, DetectionConfig};
use crate::error::{Error, Result};
use crate::kernels::{capability_query, ExecPath};
use crate::phy::channel::{
    add_awgn, ChannelModel, ChannelProfile, ChannelRealizer, ChannelTensor, DopplerModel,
};
use crate::phy::grid::{apply_channel, SlotGrid};
use crate::phy::numerology::NrNumerology;
use crate::seed::{derive, StreamTag};
use crate::sim::toml_error;

/// Schema tag written into every exported report.
pub const BENCH_REPORT_SCHEMA: &str = "lanelink.bench-report.v1";

/// Column order of the tabular report. Identity columns come first so
/// "report excluding timing-derived values" is a prefix of every row.
pub const BENCH_CSV_HEADER: &str = "nr,nt,precision,path,mean_total_us,median_total_us,\
p95_total_us,covariance_us,lu_us,forward_sub_us,backward_sub_us,equalize_us,\
speedup_vs_scalar,time_reduction_vs_scalar_percent";

/// Stage names in pipeline order, matching the breakdown columns.
pub const STAGE_NAMES: [&str; 5] = ["covariance", "lu", "forward_sub", "backward_sub", "equalize"];

const POOL_SLOTS: u64 = 16;
const BENCH_SEED: u64 = 0x6c61_6e65_6c6b_6e62; // fixed: workload identical across runs
const SNR_DB: f64 = 20.0;
const QM: u8 = 2;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    /// `[nr, nt]` pairs to sweep.
    pub mimo_sizes: Vec<[usize; 2]>,
    pub numerology: NrNumerology,
    /// Timed detections per cell.
    pub n_ttis: u64,
    /// Untimed detections before measurement (first-touch, frequency ramp).
    #[serde(default = "default_warmup")]
    pub warmup_ttis: u64,
    pub precisions: Vec<PrecisionMode>,
    pub paths: Vec<ExecPath>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_warmup() -> u64 {
    100
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("bench-out")
}

impl BenchConfig {
    /// The standard sweep: 2×2 / 4×4 / 8×8 at 60 RB, both precisions,
    /// both paths.
    pub fn default_sweep() -> Self {
        BenchConfig {
            mimo_sizes: vec![[2, 2], [4, 4], [8, 8]],
            numerology: NrNumerology::new(30, 60).expect("valid numerology"),
            n_ttis: 200,
            warmup_ttis: default_warmup(),
            precisions: vec![PrecisionMode::Ps, PrecisionMode::Pd],
            paths: vec![ExecPath::Scalar, ExecPath::Vector],
            output_dir: default_output_dir(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mimo_sizes.is_empty() {
            return Err(Error::invalid("mimo_sizes must not be empty"));
        }
        for &[nr, nt] in &self.mimo_sizes {
            DetectionConfig {
                nr,
                nt,
                precision: PrecisionMode::Pd,
                path: ExecPath::Scalar,
                noise_var: 0.0,
            }
            .validate()?;
        }
        if self.n_ttis == 0 {
            return Err(Error::invalid("n_ttis must be at least 1"));
        }
        if self.warmup_ttis == 0 {
            return Err(Error::invalid("warmup_ttis must be at least 1"));
        }
        if self.precisions.is_empty() || self.paths.is_empty() {
            return Err(Error::invalid("precisions and paths must not be empty"));
        }
        for (name, len, dedup) in [
            ("precisions", self.precisions.len(), {
                let mut v = self.precisions.clone();
                v.dedup();
                v.len()
            }),
            ("paths", self.paths.len(), {
                let mut v = self.paths.clone();
                v.dedup();
                v.len()
            }),
        ] {
            if len != dedup {
                return Err(Error::invalid(format!("{name} entries must be unique")));
            }
        }
        Ok(())
    }
}

pub fn parse_bench_config(text: &str) -> Result<BenchConfig> {
    toml::from_str(text).map_err(|e| toml_error(text, &e))
}

pub fn load_bench_config(path: impl AsRef<Path>) -> Result<BenchConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Validation(format!("cannot read config {}: {e}", path.display()))
    })?;
    parse_bench_config(&text)
}

/// Where the numbers were taken.
#[derive(Debug, Clone, Serialize)]
pub struct HostDescriptor {
    pub arch: &'static str,
    pub cpu_model: String,
    pub vector_width_bits: u32,
    /// Vector path runs natively (true) or falls back to scalar (false).
    pub native_vector: bool,
    /// Smallest observable monotonic-clock increment.
    pub clock_tick_ns: u64,
}

/// Mean time per stage, microseconds.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StageMeansUs {
    pub covariance_us: f64,
    pub lu_us: f64,
    pub forward_sub_us: f64,
    pub backward_sub_us: f64,
    pub equalize_us: f64,
}

impl StageMeansUs {
    pub fn as_array(&self) -> [f64; 5] {
        [
            self.covariance_us,
            self.lu_us,
            self.forward_sub_us,
            self.backward_sub_us,
            self.equalize_us,
        ]
    }

    pub fn sum(&self) -> f64 {
        self.as_array().iter().sum()
    }
}

/// One measured `(mimo, precision, path)` combination.
#[derive(Debug, Clone, Serialize)]
pub struct BenchCell {
    pub nr: usize,
    pub nt: usize,
    pub precision: PrecisionMode,
    pub path: ExecPath,
    pub mean_total_us: f64,
    pub median_total_us: f64,
    pub p95_total_us: f64,
    pub stage_means: StageMeansUs,
    /// `scalar mean / this mean` within the same (mimo, precision);
    /// 1.0 for scalar cells, absent when no scalar cell was measured.
    pub speedup_vs_scalar: Option<f64>,
    /// `100·(1 − this/scalar)` — the same comparison as a time cut.
    pub time_reduction_vs_scalar_percent: Option<f64>,
}

/// Share analysis for the back-substitution-dominated contract sizes.
#[derive(Debug, Clone, Serialize)]
pub struct DominanceRow {
    pub nr: usize,
    pub nt: usize,
    pub precision: PrecisionMode,
    pub path: ExecPath,
    /// Joint share of LU + forward + backward substitution, percent of total.
    pub solve_share_percent: f64,
    /// Largest single share among the remaining stages, percent.
    pub max_other_share_percent: f64,
    pub pass: bool,
}

/// 4×4 mean detection time against the 1 ms TTI budget.
#[derive(Debug, Clone, Serialize)]
pub struct LatencyBudgetRow {
    pub nr: usize,
    pub nt: usize,
    pub precision: PrecisionMode,
    pub path: ExecPath,
    pub mean_total_us: f64,
    pub share_of_1ms_tti_percent: f64,
    /// Under 10% of the budget.
    pub green: bool,
}

/// Reference figures from the original measurement campaign on a
/// desktop-class AVX2 host — recorded for comparison, never asserted here.
#[derive(Debug, Clone, Serialize)]
pub struct ReferenceTargets {
    /// Vector path cut total detection time by more than this, percent.
    pub time_reduction_percent: f64,
    /// 4×4 per-TTI detection time, milliseconds.
    pub detection_time_4x4_ms: f64,
    /// Detection share of the 1 ms TTI, percent.
    pub tti_budget_share_percent: f64,
}

impl Default for ReferenceTargets {
    fn default() -> Self {
        ReferenceTargets {
            time_reduction_percent: 50.0,
            detection_time_4x4_ms: 0.03,
            tti_budget_share_percent: 3.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub host: HostDescriptor,
    pub cells: Vec<BenchCell>,
    pub dominance: Vec<DominanceRow>,
    pub latency_budget: Vec<LatencyBudgetRow>,
    pub reference_targets: ReferenceTargets,
    pub warnings: Vec<String>,
}

fn path_label(p: ExecPath) -> &'static str {
    match p {
        ExecPath::Scalar => "scalar",
        ExecPath::Vector => "vector",
    }
}

fn precision_label(p: PrecisionMode) -> &'static str {
    match p {
        PrecisionMode::Ps => "ps",
        PrecisionMode::Pd => "pd",
    }
}

fn cpu_model() -> String {
    if let Ok(text) = std::fs::read_to_string("/proc/cpuinfo") {
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix("model name") {
                if let Some((_, v)) = rest.split_once(':') {
                    return v.trim().to_string();
                }
            }
        }
    }
    std::env::consts::ARCH.to_string()
}

/// Smallest nonzero step the monotonic clock resolves, sampled.
fn measure_clock_tick_ns() -> u64 {
    let mut min = u64::MAX;
    for _ in 0..64 {
        let start = Instant::now();
        let mut d = start.elapsed();
        while d.is_zero() {
            d = start.elapsed();
        }
        min = min.min(d.as_nanos() as u64);
    }
    min.max(1)
}

fn host_descriptor() -> HostDescriptor {
    let caps = capability_query();
    HostDescriptor {
        arch: std::env::consts::ARCH,
        cpu_model: cpu_model(),
        vector_width_bits: caps.width_bits,
        native_vector: caps.native,
        clock_tick_ns: measure_clock_tick_ns(),
    }
}

fn percentile_us(sorted_ns: &[u64], q: f64) -> f64 {
    debug_assert!(!sorted_ns.is_empty());
    let n = sorted_ns.len();
    let idx = ((q * n as f64).ceil() as usize).clamp(1, n) - 1;
    sorted_ns[idx] as f64 / 1e3
}

/// The identical slots every cell of one mimo size detects.
fn build_pool(
    num: &NrNumerology,
    nr: usize,
    nt: usize,
    noise_var: f64,
) -> Result<Vec<(SlotGrid, ChannelTensor)>> {
    let key = (nr * 16 + nt) as u64;
    let profile = ChannelProfile::synthetic3(
        DopplerModel::BlockFading,
        derive(BENCH_SEED, StreamTag::Channel, key, 0),
    );
    let realizer = ChannelRealizer::new(ChannelModel::Profile(profile), num, nr, nt);
    let (k_count, s_count) = (num.n_subcarriers(), num.symbols_per_slot());
    let mut pool = Vec::with_capacity(POOL_SLOTS as usize);
    for i in 0..POOL_SLOTS {
        let bits_seed = derive(BENCH_SEED, StreamTag::Bits, key, i);
        let tx = SlotGrid::random_data(num, nt, QM, bits_seed, PrecisionMode::Pd)?;
        let h = realizer.realize(i);
        let clean = apply_channel(&tx, &h)?;
        let noise_seed = derive(BENCH_SEED, StreamTag::Noise, key, i);
        let noisy = add_awgn(clean.buffer(), noise_var, noise_seed)?;
        pool.push((SlotGrid::from_parts(noisy, k_count, s_count, nr), h));
    }
    Ok(pool)
}

/// Runs the sweep: per cell, `warmup_ttis` untimed then `n_ttis` timed
/// detections over the shared slot pool, statistics from the detector's
/// stage-accounted totals.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let host = host_descriptor();
    let mut cells = Vec::new();
    let mut warnings = Vec::new();

    for &[nr, nt] in &cfg.mimo_sizes {
        let noise_var = nt as f64 / 10f64.powf(SNR_DB / 10.0);
        let pool = build_pool(&cfg.numerology, nr, nt, noise_var)?;
        for &precision in &cfg.precisions {
            for &path in &cfg.paths {
                let det = DetectionConfig {
                    nr,
                    nt,
                    precision,
                    path,
                    noise_var,
                };
                for w in 0..cfg.warmup_ttis {
                    let (rx, h) = &pool[(w % POOL_SLOTS) as usize];
                    detect_slot(rx, h, &det)?;
                }
                let mut samples = Vec::with_capacity(cfg.n_ttis as usize);
                let mut sums = [0u64; 6];
                for t in 0..cfg.n_ttis {
                    let (rx, h) = &pool[(t % POOL_SLOTS) as usize];
                    let d = detect_slot(rx, h, &det)?;
                    let ts = d.timings;
                    sums[0] += ts.covariance_ns;
                    sums[1] += ts.lu_ns;
                    sums[2] += ts.forward_sub_ns;
                    sums[3] += ts.backward_sub_ns;
                    sums[4] += ts.equalize_ns;
                    sums[5] += ts.total_ns;
                    samples.push(ts.total_ns);
                }
                samples.sort_unstable();
                let n = cfg.n_ttis as f64;
                let mean_total_us = sums[5] as f64 / n / 1e3;
                if sums[5] / cfg.n_ttis < 100 * host.clock_tick_ns {
                    warnings.push(format!(
                        "{nr}x{nt} {}/{}: mean per-TTI time {:.3} us is below 100 clock \
                         ticks ({} ns); treat statistics as coarse",
                        precision_label(precision),
                        path_label(path),
                        mean_total_us,
                        host.clock_tick_ns,
                    ));
                }
                cells.push(BenchCell {
                    nr,
                    nt,
                    precision,
                    path,
                    mean_total_us,
                    median_total_us: percentile_us(&samples, 0.5),
                    p95_total_us: percentile_us(&samples, 0.95),
                    stage_means: StageMeansUs {
                        covariance_us: sums[0] as f64 / n / 1e3,
                        lu_us: sums[1] as f64 / n / 1e3,
                        forward_sub_us: sums[2] as f64 / n / 1e3,
                        backward_sub_us: sums[3] as f64 / n / 1e3,
                        equalize_us: sums[4] as f64 / n / 1e3,
                    },
                    speedup_vs_scalar: None,
                    time_reduction_vs_scalar_percent: None,
                });
            }
        }
    }

    // Speedups are defined against the scalar cell of the same size and
    // precision; scalar cells are 1.0 by definition.
    let scalar_means: Vec<Option<f64>> = cells
        .iter()
        .map(|c| {
            cells
                .iter()
                .find(|s| {
                    s.nr == c.nr
                        && s.nt == c.nt
                        && s.precision == c.precision
                        && s.path == ExecPath::Scalar
                })
                .map(|s| s.mean_total_us)
        })
        .collect();
    for (cell, scalar_mean) in cells.iter_mut().zip(scalar_means) {
        if cell.path == ExecPath::Scalar {
            cell.speedup_vs_scalar = Some(1.0);
            cell.time_reduction_vs_scalar_percent = Some(0.0);
        } else if let Some(sm) = scalar_mean {
            cell.speedup_vs_scalar = Some(sm / cell.mean_total_us);
            cell.time_reduction_vs_scalar_percent = Some(100.0 * (1.0 - cell.mean_total_us / sm));
        }
    }

    let dominance = cells
        .iter()
        .filter(|c| (c.nr, c.nt) == (4, 4) || (c.nr, c.nt) == (8, 8))
        .map(|c| {
            let total = c.stage_means.sum();
            let [cov, lu, fwd, bwd, eq] = c.stage_means.as_array();
            let solve = 100.0 * (lu + fwd + bwd) / total;
            let other = 100.0 * cov.max(eq) / total;
            DominanceRow {
                nr: c.nr,
                nt: c.nt,
                precision: c.precision,
                path: c.path,
                solve_share_percent: solve,
                max_other_share_percent: other,
                pass: solve > other,
            }
        })
        .collect();

    let latency_budget = cells
        .iter()
        .filter(|c| (c.nr, c.nt) == (4, 4))
        .map(|c| {
            let share = 100.0 * c.mean_total_us / 1000.0;
            LatencyBudgetRow {
                nr: c.nr,
                nt: c.nt,
                precision: c.precision,
                path: c.path,
                mean_total_us: c.mean_total_us,
                share_of_1ms_tti_percent: share,
                green: share < 10.0,
            }
        })
        .collect();

    Ok(BenchReport {
        config: cfg.clone(),
        host,
        cells,
        dominance,
        latency_budget,
        reference_targets: ReferenceTargets::default(),
        warnings,
    })
}

impl BenchReport {
    /// Schema-versioned JSON document.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            schema: &'static str,
            #[serde(flatten)]
            report: &'a BenchReport,
        }
        serde_json::to_string_pretty(&Doc {
            schema: BENCH_REPORT_SCHEMA,
            report: self,
        })
        .expect("bench report serializes")
    }

    /// One row per cell in [`BENCH_CSV_HEADER`] order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(BENCH_CSV_HEADER);
        out.push('\n');
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for c in &self.cells {
            let s = &c.stage_means;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                c.nr,
                c.nt,
                precision_label(c.precision),
                path_label(c.path),
                c.mean_total_us,
                c.median_total_us,
                c.p95_total_us,
                s.covariance_us,
                s.lu_us,
                s.forward_sub_us,
                s.backward_sub_us,
                s.equalize_us,
                opt(c.speedup_vs_scalar),
                opt(c.time_reduction_vs_scalar_percent),
            ));
        }
        out
    }

    /// Wide plot table: one row per (mimo, stage) series, one mean-time
    /// column per measured (precision, path) combination.
    pub fn to_plot_data(&self) -> String {
        let mut out = String::from("nr,nt,stage");
        for &precision in &self.config.precisions {
            for &path in &self.config.paths {
                out.push_str(&format!(
                    ",{}_{}_mean_us",
                    path_label(path),
                    precision_label(precision)
                ));
            }
        }
        out.push('\n');
        for &[nr, nt] in &self.config.mimo_sizes {
            for (si, stage) in STAGE_NAMES.iter().enumerate() {
                out.push_str(&format!("{nr},{nt},{stage}"));
                for &precision in &self.config.precisions {
                    for &path in &self.config.paths {
                        let cell = self
                            .cells
                            .iter()
                            .find(|c| {
                                c.nr == nr && c.nt == nt && c.precision == precision && c.path == path
                            })
                            .expect("cell exists for every combination");
                        out.push_str(&format!(",{}", cell.stage_means.as_array()[si]));
                    }
                }
                out.push('\n');
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitFormat {
    Csv,
    Json,
    PlotData,
}

/// Writes one report artifact into `dir` (created if missing) and returns
/// its path: `report.csv`, `report.json`, or `breakdown_plotdata.csv`.
pub fn emit_breakdown(report: &BenchReport, format: EmitFormat, dir: &Path) -> Result<PathBuf> {
    if report.cells.is_empty() {
        return Err(Error::invalid("refusing to emit an empty report"));
    }
    std::fs::create_dir_all(dir)?;
    let (name, body) = match format {
        EmitFormat::Csv => ("report.csv", report.to_csv()),
        EmitFormat::Json => ("report.json", report.to_json()),
        EmitFormat::PlotData => ("breakdown_plotdata.csv", report.to_plot_data()),
    };
    let path = dir.join(name);
    std::fs::write(&path, body)?;
    Ok(path)
}

/// Emits all three artifacts.
pub fn emit_all(report: &BenchReport, dir: &Path) -> Result<Vec<PathBuf>> {
    [EmitFormat::Json, EmitFormat::Csv, EmitFormat::PlotData]
        .into_iter()
        .map(|f| emit_breakdown(report, f, dir))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg() -> BenchConfig {
        BenchConfig {
            mimo_sizes: vec![[2, 2]],
            numerology: NrNumerology::new(15, 1).unwrap(),
            n_ttis: 5,
            warmup_ttis: 1,
            precisions: vec![PrecisionMode::Ps],
            paths: vec![ExecPath::Scalar, ExecPath::Vector],
            output_dir: PathBuf::from("unused"),
        }
    }

    #[test]
    fn config_validation_rules() {
        assert!(tiny_cfg().validate().is_ok());

        let mut c = tiny_cfg();
        c.warmup_ttis = 0;
        assert!(c.validate().is_err());

        c = tiny_cfg();
        c.mimo_sizes = vec![];
        assert!(c.validate().is_err());

        c = tiny_cfg();
        c.mimo_sizes = vec![[3, 3]];
        assert!(c.validate().is_err());

        c = tiny_cfg();
        c.mimo_sizes = vec![[2, 4]];
        assert!(c.validate().is_err());

        c = tiny_cfg();
        c.paths = vec![ExecPath::Scalar, ExecPath::Scalar];
        assert!(c.validate().is_err());
    }

    #[test]
    fn toml_defaults_apply() {
        let cfg = parse_bench_config(
            r#"
            mimo_sizes = [[2, 2], [4, 4]]
            n_ttis = 10
            precisions = ["ps", "pd"]
            paths = ["scalar", "vector"]

            [numerology]
            scs_khz = 15
            n_rb = 2
            "#,
        )
        .unwrap();
        assert_eq!(cfg.warmup_ttis, 100);
        assert_eq!(cfg.output_dir, PathBuf::from("bench-out"));
        assert!(parse_bench_config("mimo_sizes = [[2,2]]\nbogus = 1").is_err());
    }

    #[test]
    fn scalar_speedup_definitional_and_times_positive() {
        let report = run_bench(&tiny_cfg()).unwrap();
        assert_eq!(report.cells.len(), 2);
        for c in &report.cells {
            assert!(c.mean_total_us > 0.0);
            assert!(c.median_total_us > 0.0);
            assert!(c.p95_total_us >= c.median_total_us);
            if c.path == ExecPath::Scalar {
                assert_eq!(c.speedup_vs_scalar, Some(1.0));
                assert_eq!(c.time_reduction_vs_scalar_percent, Some(0.0));
            } else {
                assert!(c.speedup_vs_scalar.unwrap() > 0.0);
            }
            // Accounting invariant inherited from the detector.
            let total = c.mean_total_us;
            assert!(
                (c.stage_means.sum() - total).abs() <= 0.05 * total,
                "stages {} vs total {}",
                c.stage_means.sum(),
                total
            );
        }
        assert!(report.host.clock_tick_ns >= 1);
        assert!(report.host.vector_width_bits == 0 || report.host.vector_width_bits >= 128);
    }

    #[test]
    fn vector_ps_beats_scalar_pd_on_native_hosts() {
        if !capability_query().native {
            return;
        }
        let mut cfg = tiny_cfg();
        cfg.mimo_sizes = vec![[4, 4]];
        cfg.numerology = NrNumerology::new(15, 4).unwrap();
        cfg.n_ttis = 30;
        cfg.warmup_ttis = 10;
        cfg.precisions = vec![PrecisionMode::Ps, PrecisionMode::Pd];
        let report = run_bench(&cfg).unwrap();
        let find = |p: PrecisionMode, path: ExecPath| {
            report
                .cells
                .iter()
                .find(|c| c.precision == p && c.path == path)
                .unwrap()
                .mean_total_us
        };
        assert!(
            find(PrecisionMode::Ps, ExecPath::Vector) < find(PrecisionMode::Pd, ExecPath::Scalar)
        );
    }

    #[test]
    fn emitted_artifacts_round_trip() {
        let mut cfg = tiny_cfg();
        cfg.mimo_sizes = vec![[1, 1], [2, 2], [4, 4]];
        let report = run_bench(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let paths = emit_all(&report, dir.path()).unwrap();
        assert_eq!(paths.len(), 3);
        for p in &paths {
            assert!(p.exists(), "{p:?} missing");
        }

        // 3 sizes × 5 stages → 15 series rows after the header.
        let plot = std::fs::read_to_string(dir.path().join("breakdown_plotdata.csv")).unwrap();
        assert_eq!(plot.lines().count(), 1 + 15);

        // CSV re-parses to the exact report values.
        let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(BENCH_CSV_HEADER));
        for (line, cell) in lines.zip(&report.cells) {
            let f: Vec<&str> = line.split(',').collect();
            assert_eq!(f[0].parse::<usize>().unwrap(), cell.nr);
            assert_eq!(f[2], precision_label(cell.precision));
            assert_eq!(f[3], path_label(cell.path));
            assert_eq!(f[4].parse::<f64>().unwrap(), cell.mean_total_us);
            assert_eq!(f[8].parse::<f64>().unwrap(), cell.stage_means.lu_us);
            assert_eq!(
                f[12].parse::<f64>().unwrap(),
                cell.speedup_vs_scalar.unwrap()
            );
        }

        let doc: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
                .unwrap();
        assert_eq!(doc["schema"], BENCH_REPORT_SCHEMA);
        assert_eq!(doc["cells"].as_array().unwrap().len(), report.cells.len());
        assert!(doc["host"]["clock_tick_ns"].is_u64());
        assert_eq!(doc["reference_targets"]["time_reduction_percent"], 50.0);

        // 4×4 rows made it into the budget and dominance tables.
        assert!(!report.latency_budget.is_empty());
        assert!(!report.dominance.is_empty());
    }
}
