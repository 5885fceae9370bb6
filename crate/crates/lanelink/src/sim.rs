//! End-to-end Monte-Carlo link simulation.
//!
//! One simulated TTI is: seeded payload bits → QAM onto the transmit grid
//! → per-subcarrier channel application → AWGN → LMMSE detection → hard
//! demodulation. Per-SNR aggregates (SER, BER, EVM, MSE, mean stage
//! timings) come out in a [`SimResult`].
//!
//! Reproducibility contract: every random stream is derived from
//! `(master_seed, purpose, snr_index, tti_index)` — except channel gains,
//! which ignore the SNR index so all SNR points see the same fading
//! realizations (common random numbers). Draws always happen in double
//! precision and are narrowed afterwards, so PS and PD runs consume
//! identical streams, and a [`SimResult`] is a pure function of its
//! [`SimConfig`] up to the (reported, non-semantic) stage timings.
//!
//! TTIs are independent given their derived seeds and are aggregated by
//! sums and counts only, so results never depend on iteration order.
//!
//! SNR here is Es/N0 per receive antenna: `snr_db` fixes
//! `σ² = E[|y_r|²] / 10^(snr_db/10)`, with the mean received symbol energy
//! taken over the channel ensemble (`n_tx` for power-normalized stochastic
//! profiles with unit-power constellations, 1 for the identity channel).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::buffer::{ComplexBuffer, PrecisionMode};
use crate::detector::{detect_slot, DetectionConfig, StageTimings};
use crate::error::{Error, Result};
use crate::kernels::ExecPath;
use crate::phy::channel::{
    add_awgn, load_channel_profile, ChannelModel, ChannelProfile, ChannelRealizer, DopplerModel,
};
use crate::phy::grid::{apply_channel, SlotGrid};
use crate::phy::mcs::default_mcs_table;
use crate::phy::numerology::NrNumerology;
use crate::phy::qam::qam_demodulate_hard;
use crate::seed::{derive, StreamTag};

/// Schema tag written into every exported result document.
pub const SIM_RESULT_SCHEMA: &str = "lanelink.sim-result.v1";

/// Column order of [`SimResult::to_csv`]. Timing columns come last so
/// "results excluding timings" is a prefix of every row.
pub const SIM_CSV_HEADER: &str = "snr_db,noise_var,ser,ber,evm_rms_percent,mse,ttis,\
skipped_ttis,mean_covariance_ns,mean_lu_ns,mean_forward_sub_ns,mean_backward_sub_ns,\
mean_equalize_ns,mean_total_ns";

/// Full description of one simulation run.
///
/// The config file is TOML with exactly these fields (unknown keys are
/// rejected); `numerology` is an inline table `{ scs_khz, n_rb }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub numerology: NrNumerology,
    pub mcs_index: u8,
    /// Receive antennas.
    pub n_rx: usize,
    /// Transmit streams.
    pub n_tx: usize,
    /// Swept operating points, strictly increasing.
    pub snr_db_points: Vec<f64>,
    pub n_ttis: u64,
    pub precision: PrecisionMode,
    pub path: ExecPath,
    pub master_seed: u64,
    /// `identity`, `synthetic3`, `tdl-c`, or a path to a profile file.
    pub channel_profile: String,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_ttis == 0 {
            return Err(Error::invalid("n_ttis must be at least 1"));
        }
        if self.snr_db_points.is_empty() {
            return Err(Error::invalid("snr_db_points must not be empty"));
        }
        if !self.snr_db_points.iter().all(|s| s.is_finite()) {
            return Err(Error::invalid("snr_db_points must be finite"));
        }
        if self.snr_db_points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(
                "snr_db_points must be strictly increasing",
            ));
        }
        if usize::from(self.mcs_index) >= default_mcs_table().len() {
            return Err(Error::invalid(format!(
                "mcs_index {} outside the 29-entry table",
                self.mcs_index
            )));
        }
        // Antenna-geometry rules live with the detector config.
        DetectionConfig {
            nr: self.n_rx,
            nt: self.n_tx,
            precision: self.precision,
            path: self.path,
            noise_var: 0.0,
        }
        .validate()
    }
}

/// Parses a TOML config, mapping syntax errors to 1-based lines.
pub fn parse_sim_config(text: &str) -> Result<SimConfig> {
    toml::from_str(text).map_err(|e| toml_error(text, &e))
}

pub fn load_sim_config(path: impl AsRef<Path>) -> Result<SimConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Validation(format!("cannot read config {}: {e}", path.display()))
    })?;
    parse_sim_config(&text)
}

pub(crate) fn toml_error(text: &str, e: &toml::de::Error) -> Error {
    let line = e
        .span()
        .map(|s| text[..s.start.min(text.len())].lines().count().max(1))
        .unwrap_or(1);
    Error::Parse {
        line,
        message: e.message().to_string(),
    }
}

/// Resolves a channel-profile reference: a builtin name or a file path.
/// The profile's gain streams are keyed by the master seed.
pub fn resolve_channel_model(reference: &str, master_seed: u64) -> Result<ChannelModel> {
    match reference {
        "identity" => Ok(ChannelModel::Identity),
        "synthetic3" => Ok(ChannelModel::Profile(ChannelProfile::synthetic3(
            DopplerModel::BlockFading,
            master_seed,
        ))),
        "tdl-c" => Ok(ChannelModel::Profile(ChannelProfile::tdl_c(master_seed))),
        path => Ok(ChannelModel::Profile(load_channel_profile(
            path,
            master_seed,
        )?)),
    }
}

/// Mean received symbol energy per receive antenna under unit-power
/// constellations: `n_tx` for power-normalized stochastic profiles
/// (each `E|H_rt|² = 1` sums over transmit streams), 1 for identity.
fn mean_rx_symbol_energy(model: &ChannelModel, n_tx: usize) -> f64 {
    match model {
        ChannelModel::Identity => 1.0,
        ChannelModel::Profile(_) => n_tx as f64,
    }
}

/// Per-SNR aggregate of one simulation run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SnrRecord {
    pub snr_db: f64,
    /// σ² the detector was given at this point.
    pub noise_var: f64,
    /// Hard-decision symbol error rate over all (subcarrier, symbol, stream).
    pub ser: f64,
    pub ber: f64,
    /// `100 · √(Σ|x̂−x|² / Σ|x|²)` over the whole point.
    pub evm_rms_percent: f64,
    /// Mean squared symbol error.
    pub mse: f64,
    /// TTIs contributing to the aggregates.
    pub ttis: u64,
    /// TTIs dropped because the covariance was singular.
    pub skipped_ttis: u64,
    /// Stage means over contributing TTIs.
    pub mean_stage_timings: StageTimings,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimResult {
    pub config: SimConfig,
    /// Modulation order the MCS index resolved to.
    pub qm: u8,
    /// Symbols compared per TTI (`subcarriers × symbols × streams`).
    pub symbols_per_tti: u64,
    pub records: Vec<SnrRecord>,
}

impl SimResult {
    /// Schema-versioned JSON document.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            schema: &'static str,
            #[serde(flatten)]
            result: &'a SimResult,
        }
        serde_json::to_string_pretty(&Doc {
            schema: SIM_RESULT_SCHEMA,
            result: self,
        })
        .expect("sim result serializes")
    }

    /// One row per SNR point in [`SIM_CSV_HEADER`] order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SIM_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let t = &r.mean_stage_timings;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.snr_db,
                r.noise_var,
                r.ser,
                r.ber,
                r.evm_rms_percent,
                r.mse,
                r.ttis,
                r.skipped_ttis,
                t.covariance_ns,
                t.lu_ns,
                t.forward_sub_ns,
                t.backward_sub_ns,
                t.equalize_ns,
                t.total_ns
            ));
        }
        out
    }
}

/// RMS error vector magnitude in percent:
/// `100·√(mean|x̂−x|² / mean|x|²)`.
pub fn evm_rms(x_hat: &ComplexBuffer, x_ref: &ComplexBuffer) -> Result<f64> {
    if x_hat.len() != x_ref.len() {
        return Err(Error::shape(format!(
            "length mismatch: {} vs {}",
            x_hat.len(),
            x_ref.len()
        )));
    }
    if x_hat.is_empty() {
        return Err(Error::invalid("evm of empty buffers is undefined"));
    }
    let mut err2 = 0.0;
    let mut ref2 = 0.0;
    for i in 0..x_hat.len() {
        err2 += (x_hat.get(i) - x_ref.get(i)).norm_sqr();
        ref2 += x_ref.get(i).norm_sqr();
    }
    if ref2 <= 0.0 {
        return Err(Error::invalid("evm reference power is zero"));
    }
    Ok(100.0 * (err2 / ref2).sqrt())
}

#[derive(Default)]
struct PointAccumulator {
    symbol_errors: u64,
    bit_errors: u64,
    symbols: u64,
    bits: u64,
    err2: f64,
    ref2: f64,
    stage_sums: [u64; 6],
    ttis: u64,
    skipped: u64,
}

impl PointAccumulator {
    fn add_timings(&mut self, t: &StageTimings) {
        self.stage_sums[0] += t.covariance_ns;
        self.stage_sums[1] += t.lu_ns;
        self.stage_sums[2] += t.forward_sub_ns;
        self.stage_sums[3] += t.backward_sub_ns;
        self.stage_sums[4] += t.equalize_ns;
        self.stage_sums[5] += t.total_ns;
    }

    fn record(&self, snr_db: f64, noise_var: f64) -> SnrRecord {
        let n = self.ttis.max(1);
        SnrRecord {
            snr_db,
            noise_var,
            ser: self.symbol_errors as f64 / self.symbols.max(1) as f64,
            ber: self.bit_errors as f64 / self.bits.max(1) as f64,
            evm_rms_percent: if self.ref2 > 0.0 {
                100.0 * (self.err2 / self.ref2).sqrt()
            } else {
                0.0
            },
            mse: self.err2 / self.symbols.max(1) as f64,
            ttis: self.ttis,
            skipped_ttis: self.skipped,
            mean_stage_timings: StageTimings {
                covariance_ns: self.stage_sums[0] / n,
                lu_ns: self.stage_sums[1] / n,
                forward_sub_ns: self.stage_sums[2] / n,
                backward_sub_ns: self.stage_sums[3] / n,
                equalize_ns: self.stage_sums[4] / n,
                total_ns: self.stage_sums[5] / n,
            },
        }
    }
}

/// Runs the full sweep described by `cfg`.
///
/// Config and data-file problems surface before any TTI runs. A TTI whose
/// covariance turns out singular (possible only at σ² = 0) is counted in
/// `skipped_ttis` and excluded from the aggregates; every other error
/// aborts the run.
pub fn run_sim(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let mcs = default_mcs_table()[usize::from(cfg.mcs_index)];
    let qm = mcs.qm;
    let model = resolve_channel_model(&cfg.channel_profile, cfg.master_seed)?;
    if matches!(model, ChannelModel::Identity) && cfg.n_rx != cfg.n_tx {
        return Err(Error::invalid(format!(
            "identity channel requires square MIMO, got {}x{}",
            cfg.n_rx, cfg.n_tx
        )));
    }
    let num = cfg.numerology;
    let (k_count, s_count) = (num.n_subcarriers(), num.symbols_per_slot());
    let symbols_per_tti = (k_count * s_count * cfg.n_tx) as u64;
    let rx_energy = mean_rx_symbol_energy(&model, cfg.n_tx);
    let realizer = ChannelRealizer::new(model, &num, cfg.n_rx, cfg.n_tx);

    let mut records = Vec::with_capacity(cfg.snr_db_points.len());
    for (si, &snr_db) in cfg.snr_db_points.iter().enumerate() {
        let noise_var = rx_energy / 10f64.powf(snr_db / 10.0);
        let det = DetectionConfig {
            nr: cfg.n_rx,
            nt: cfg.n_tx,
            precision: cfg.precision,
            path: cfg.path,
            noise_var,
        };
        let mut acc = PointAccumulator::default();
        for tti in 0..cfg.n_ttis {
            let bits_seed = derive(cfg.master_seed, StreamTag::Bits, si as u64, tti);
            let tx = SlotGrid::random_data(&num, cfg.n_tx, qm, bits_seed, PrecisionMode::Pd)?;
            let h = realizer.realize(tti);
            let clean = apply_channel(&tx, &h)?;
            let noise_seed = derive(cfg.master_seed, StreamTag::Noise, si as u64, tti);
            let noisy = add_awgn(clean.buffer(), noise_var, noise_seed)?;
            let rx = SlotGrid::from_parts(noisy, k_count, s_count, cfg.n_rx);

            let detection = match detect_slot(&rx, &h, &det) {
                Ok(d) => d,
                Err(Error::Singular { .. }) => {
                    acc.skipped += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };

            let rx_bits = qam_demodulate_hard(detection.x_hat.buffer(), qm)?;
            let tx_bits = tx.source_bits().expect("grid was built from bits");
            debug_assert_eq!(rx_bits.len(), tx_bits.len());
            let qm_usize = usize::from(qm);
            for (sym_rx, sym_tx) in rx_bits.chunks_exact(qm_usize).zip(tx_bits.chunks_exact(qm_usize)) {
                let diff = sym_rx
                    .iter()
                    .zip(sym_tx)
                    .filter(|(a, b)| a != b)
                    .count() as u64;
                acc.bit_errors += diff;
                acc.symbol_errors += u64::from(diff > 0);
            }
            acc.bits += tx_bits.len() as u64;
            acc.symbols += symbols_per_tti;

            let x_hat = detection.x_hat.buffer();
            let x_ref = tx.buffer();
            for i in 0..x_hat.len() {
                acc.err2 += (x_hat.get(i) - x_ref.get(i)).norm_sqr();
                acc.ref2 += x_ref.get(i).norm_sqr();
            }
            acc.add_timings(&detection.timings);
            acc.ttis += 1;
        }
        records.push(acc.record(snr_db, noise_var));
    }
    Ok(SimResult {
        config: cfg.clone(),
        qm,
        symbols_per_tti,
        records,
    })
}

/// Per-SNR deltas of a paired PS/PD run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PrecisionDelta {
    pub snr_db: f64,
    pub ser_ps: f64,
    pub ser_pd: f64,
    pub ser_delta_abs: f64,
    /// 95% binomial confidence half-width `1.96·√(p̂(1−p̂)/n)` at the pooled
    /// error rate over one run's trial count.
    pub ser_ci95_half_width: f64,
    pub mse_ps: f64,
    pub mse_pd: f64,
    /// `mse_ps / mse_pd`; 1 when both are exactly zero.
    pub mse_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PrecisionComparison {
    pub ps: SimResult,
    pub pd: SimResult,
    pub deltas: Vec<PrecisionDelta>,
}

/// Runs the identical seeded experiment under both precisions and reports
/// per-SNR deltas. The random streams are shared by construction (draws
/// are double-precision and narrowed), so differences isolate arithmetic.
pub fn compare_precisions(cfg: &SimConfig) -> Result<PrecisionComparison> {
    let mut ps_cfg = cfg.clone();
    ps_cfg.precision = PrecisionMode::Ps;
    let mut pd_cfg = cfg.clone();
    pd_cfg.precision = PrecisionMode::Pd;
    let ps = run_sim(&ps_cfg)?;
    let pd = run_sim(&pd_cfg)?;

    let deltas = ps
        .records
        .iter()
        .zip(&pd.records)
        .map(|(a, b)| {
            let trials = (a.ttis * ps.symbols_per_tti).max(1) as f64;
            let pooled = 0.5 * (a.ser + b.ser);
            PrecisionDelta {
                snr_db: a.snr_db,
                ser_ps: a.ser,
                ser_pd: b.ser,
                ser_delta_abs: (a.ser - b.ser).abs(),
                ser_ci95_half_width: 1.96 * (pooled * (1.0 - pooled) / trials).sqrt(),
                mse_ps: a.mse,
                mse_pd: b.mse,
                mse_ratio: if b.mse == 0.0 && a.mse == 0.0 {
                    1.0
                } else {
                    a.mse / b.mse
                },
            }
        })
        .collect();
    Ok(PrecisionComparison { ps, pd, deltas })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn base_cfg() -> SimConfig {
        SimConfig {
            numerology: NrNumerology::new(15, 1).unwrap(),
            mcs_index: 4, // QPSK
            n_rx: 2,
            n_tx: 2,
            snr_db_points: vec![60.0],
            n_ttis: 5,
            precision: PrecisionMode::Pd,
            path: ExecPath::Vector,
            master_seed: 11,
            channel_profile: "synthetic3".into(),
        }
    }

    #[test]
    fn config_validation_rules() {
        let ok = base_cfg();
        assert!(ok.validate().is_ok());

        let mut c = base_cfg();
        c.n_ttis = 0;
        assert!(c.validate().is_err());

        c = base_cfg();
        c.snr_db_points = vec![];
        assert!(c.validate().is_err());

        c = base_cfg();
        c.snr_db_points = vec![0.0, 0.0];
        assert!(c.validate().is_err());

        c = base_cfg();
        c.mcs_index = 29;
        assert!(c.validate().is_err());

        c = base_cfg();
        c.n_rx = 1;
        c.n_tx = 2;
        assert!(c.validate().is_err());
    }

    #[test]
    fn toml_round_trip_and_unknown_key_rejected() {
        let text = r#"
            mcs_index = 4
            n_rx = 2
            n_tx = 2
            snr_db_points = [0.0, 10.0]
            n_ttis = 3
            precision = "pd"
            path = "vector"
            master_seed = 7
            channel_profile = "synthetic3"

            [numerology]
            scs_khz = 15
            n_rb = 2
        "#;
        let cfg = parse_sim_config(text).unwrap();
        assert_eq!(cfg.numerology.n_subcarriers(), 24);
        assert_eq!(cfg.precision, PrecisionMode::Pd);

        let bad = format!("{text}\nsurprise = 1");
        match parse_sim_config(&bad) {
            Err(Error::Parse { line, .. }) => assert!(line > 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn identity_channel_requires_square_mimo() {
        let mut c = base_cfg();
        c.channel_profile = "identity".into();
        c.n_rx = 4;
        c.n_tx = 2;
        assert!(matches!(run_sim(&c), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn evm_trivials_and_oracle() {
        let x = ComplexBuffer::from_complex(
            &[Complex64::new(1.0, -2.0), Complex64::new(0.5, 0.25)],
            crate::buffer::Layout::Interleaved,
            PrecisionMode::Pd,
            64,
        )
        .unwrap();
        assert_eq!(evm_rms(&x, &x).unwrap(), 0.0);

        let scaled = ComplexBuffer::from_complex(
            &x.to_vec().iter().map(|v| v * 1.01).collect::<Vec<_>>(),
            crate::buffer::Layout::Interleaved,
            PrecisionMode::Pd,
            64,
        )
        .unwrap();
        let evm = evm_rms(&scaled, &x).unwrap();
        assert!((evm - 1.0).abs() < 1e-9, "evm {evm}");

        // Direct-formula oracle on an arbitrary pair.
        let a = ComplexBuffer::from_complex(
            &[Complex64::new(0.3, 0.9), Complex64::new(-1.2, 0.4)],
            crate::buffer::Layout::Interleaved,
            PrecisionMode::Pd,
            64,
        )
        .unwrap();
        let err2: f64 = a
            .to_vec()
            .iter()
            .zip(x.to_vec())
            .map(|(p, q)| (p - q).norm_sqr())
            .sum();
        let ref2: f64 = x.to_vec().iter().map(|v| v.norm_sqr()).sum();
        let want = 100.0 * (err2 / ref2).sqrt();
        assert!((evm_rms(&a, &x).unwrap() - want).abs() < 1e-9);

        let zero = ComplexBuffer::zeros(2, PrecisionMode::Pd);
        assert!(evm_rms(&x, &zero).is_err());
    }

    #[test]
    fn noiseless_run_recovers_exactly() {
        let mut cfg = base_cfg();
        cfg.snr_db_points = vec![300.0]; // σ² underflows to ~0; channel invertible
        cfg.n_ttis = 8;
        let out = run_sim(&cfg).unwrap();
        let r = &out.records[0];
        assert_eq!(r.ser, 0.0);
        assert_eq!(r.ber, 0.0);
        assert_eq!(r.skipped_ttis, 0);
        assert_eq!(r.ttis, 8);
        assert!(r.evm_rms_percent < 1e-4, "evm {}", r.evm_rms_percent);
    }

    #[test]
    fn deterministic_given_config() {
        let mut cfg = base_cfg();
        cfg.snr_db_points = vec![5.0, 15.0];
        cfg.n_ttis = 4;
        let a = run_sim(&cfg).unwrap();
        let b = run_sim(&cfg).unwrap();
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.ser, rb.ser);
            assert_eq!(ra.ber, rb.ber);
            assert_eq!(ra.evm_rms_percent, rb.evm_rms_percent);
            assert_eq!(ra.mse, rb.mse);
            assert_eq!(ra.ttis, rb.ttis);
            assert_eq!(ra.skipped_ttis, rb.skipped_ttis);
        }
        // CSV rows agree once the trailing timing columns are stripped.
        let strip = |csv: &str| -> Vec<String> {
            csv.lines()
                .map(|l| l.split(',').take(8).collect::<Vec<_>>().join(","))
                .collect()
        };
        assert_eq!(strip(&a.to_csv()), strip(&b.to_csv()));
    }

    #[test]
    fn ser_monotone_in_snr_within_noise() {
        let mut cfg = base_cfg();
        cfg.snr_db_points = vec![0.0, 6.0, 12.0, 18.0];
        cfg.n_ttis = 40;
        let out = run_sim(&cfg).unwrap();
        let n = (out.symbols_per_tti * cfg.n_ttis) as f64;
        for pair in out.records.windows(2) {
            let (lo, hi) = (&pair[0], &pair[1]);
            let p = lo.ser.max(1.0 / n);
            let slack = 2.0 * (p * (1.0 - p) / n).sqrt();
            assert!(
                hi.ser <= lo.ser + slack,
                "SER rose beyond noise: {} dB {} -> {} dB {}",
                lo.snr_db,
                lo.ser,
                hi.snr_db,
                hi.ser
            );
        }
        // The sweep actually exercises errors at the low end.
        assert!(out.records[0].ser > 0.0);
    }

    #[test]
    fn paired_precisions_share_streams_and_agree() {
        let mut cfg = base_cfg();
        cfg.snr_db_points = vec![10.0];
        cfg.n_ttis = 30;
        let cmp = compare_precisions(&cfg).unwrap();
        let d = &cmp.deltas[0];
        assert!(
            d.ser_delta_abs <= d.ser_ci95_half_width,
            "delta {} vs CI {}",
            d.ser_delta_abs,
            d.ser_ci95_half_width
        );
        assert!(d.mse_ratio > 0.9 && d.mse_ratio < 1.1, "ratio {}", d.mse_ratio);

        // Noiseless: both decode exactly; MSE collapses to rounding residue.
        let mut quiet = base_cfg();
        quiet.snr_db_points = vec![300.0];
        quiet.n_ttis = 4;
        let cmp = compare_precisions(&quiet).unwrap();
        assert_eq!(cmp.deltas[0].ser_delta_abs, 0.0);
        assert!(cmp.deltas[0].mse_ps < 1e-10);
        assert!(cmp.deltas[0].mse_pd < 1e-24);
    }

    #[test]
    fn awgn_qpsk_tracks_closed_form() {
        // 1x1 identity channel: SER = 2Q(√γ) − Q²(√γ).
        let mut cfg = base_cfg();
        cfg.n_rx = 1;
        cfg.n_tx = 1;
        cfg.channel_profile = "identity".into();
        cfg.numerology = NrNumerology::new(15, 4).unwrap();
        cfg.snr_db_points = vec![4.0];
        cfg.n_ttis = 60; // 4·12·14·60 ≈ 40k symbols
        let out = run_sim(&cfg).unwrap();
        let gamma = 10f64.powf(4.0 / 10.0);
        let q = 0.5 * statrs::function::erf::erfc((gamma.sqrt()) / 2f64.sqrt());
        let want = 2.0 * q - q * q;
        let got = out.records[0].ser;
        assert!(
            (got - want).abs() / want < 0.15,
            "simulated {got} vs closed form {want}"
        );
    }

    #[test]
    fn json_export_carries_schema() {
        let mut cfg = base_cfg();
        cfg.n_ttis = 1;
        let out = run_sim(&cfg).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&out.to_json()).unwrap();
        assert_eq!(doc["schema"], SIM_RESULT_SCHEMA);
        assert_eq!(doc["records"].as_array().unwrap().len(), 1);
        assert!(doc["records"][0]["mean_stage_timings"]["total_ns"].is_u64());
    }
}
