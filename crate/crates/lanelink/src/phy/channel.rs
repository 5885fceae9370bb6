//! Tapped-delay-line fading channels and their per-subcarrier frequency
//! response.
//!
//! A [`ChannelProfile`] is a list of `(delay, power)` taps plus a Doppler
//! model. Realization draws one complex Gaussian gain per tap per antenna
//! pair and sums the tap DFT per subcarrier:
//! `H[k][r][t] = Σ_m g_m[r][t] · exp(-j·2π·f_k·τ_m)` with `f_k = k·Δf`.
//!
//! Determinism contract: gains are always drawn as `f64` from a ChaCha
//! stream seeded by `(profile seed, tti)` — never by SNR point, precision,
//! or path — in a fixed order (tap-major, then rx, then tx). Block fading
//! redraws per TTI; a static profile ignores the TTI index.

use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::buffer::{ComplexBuffer, PrecisionMode};
use crate::error::{Error, Result};
use crate::matrix::CMatrix;
use crate::phy::numerology::NrNumerology;
use crate::seed::{derive, StreamTag};

pub const DEFAULT_TDL_C: &str = include_str!("../../data/tdl_c.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DopplerModel {
    /// One realization held for all TTIs.
    Static,
    /// Independent realization per TTI.
    BlockFading,
}

/// One resolvable path: absolute delay and normalized linear power.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChannelTap {
    pub delay_s: f64,
    /// Linear power; the profile normalizes these to sum to 1.
    pub power: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChannelProfile {
    taps: Vec<ChannelTap>,
    rng_seed: u64,
    doppler_model: DopplerModel,
}

impl ChannelProfile {
    /// Builds a profile from `(delay_s, power_db)` taps, normalizing total
    /// power to 1.
    pub fn new(taps_db: &[(f64, f64)], doppler_model: DopplerModel, rng_seed: u64) -> Result<Self> {
        if taps_db.is_empty() {
            return Err(Error::invalid("channel profile needs at least one tap"));
        }
        let mut taps = Vec::with_capacity(taps_db.len());
        let mut total = 0.0;
        let mut prev = f64::NEG_INFINITY;
        for &(delay_s, power_db) in taps_db {
            if delay_s < 0.0 || !delay_s.is_finite() {
                return Err(Error::invalid(format!("tap delay {delay_s} invalid")));
            }
            if delay_s <= prev {
                return Err(Error::invalid(
                    "tap delays must be strictly increasing".to_string(),
                ));
            }
            prev = delay_s;
            let power = 10f64.powf(power_db / 10.0);
            total += power;
            taps.push(ChannelTap { delay_s, power });
        }
        for tap in &mut taps {
            tap.power /= total;
        }
        Ok(ChannelProfile {
            taps,
            rng_seed,
            doppler_model,
        })
    }

    /// Single zero-delay unit tap: frequency-flat Rayleigh fading.
    pub fn flat(doppler_model: DopplerModel, rng_seed: u64) -> Self {
        ChannelProfile::new(&[(0.0, 0.0)], doppler_model, rng_seed)
            .expect("one-tap profile is valid")
    }

    /// Built-in three-tap profile used by tests and examples that need
    /// frequency selectivity without a profile file.
    pub fn synthetic3(doppler_model: DopplerModel, rng_seed: u64) -> Self {
        ChannelProfile::new(
            &[(0.0, 0.0), (1.0e-7, -3.0), (2.5e-7, -6.0)],
            doppler_model,
            rng_seed,
        )
        .expect("built-in profile is valid")
    }

    /// The bundled TDL-C transcription (100 ns delay spread).
    pub fn tdl_c(rng_seed: u64) -> Self {
        parse_channel_profile(DEFAULT_TDL_C, rng_seed).expect("embedded TDL-C profile is valid")
    }

    pub fn taps(&self) -> &[ChannelTap] {
        &self.taps
    }

    pub fn doppler_model(&self) -> DopplerModel {
        self.doppler_model
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }
}

/// Parses the profile file format: a `model static|block_fading` line and
/// `tap <delay_s> <power_db>` lines; `#` starts a comment.
pub fn parse_channel_profile(text: &str, rng_seed: u64) -> Result<ChannelProfile> {
    let mut model: Option<DopplerModel> = None;
    let mut taps_db: Vec<(f64, f64)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut fields = content.split_whitespace();
        match fields.next() {
            Some("model") => {
                let name = fields.next().ok_or(Error::Parse {
                    line,
                    message: "model line needs a name".into(),
                })?;
                model = Some(match name {
                    "static" => DopplerModel::Static,
                    "block_fading" => DopplerModel::BlockFading,
                    other => {
                        return Err(Error::Parse {
                            line,
                            message: format!(
                                "unknown model {other:?} (static or block_fading)"
                            ),
                        })
                    }
                });
            }
            Some("tap") => {
                let delay: f64 = fields
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or(Error::Parse {
                        line,
                        message: "tap line needs a numeric delay".into(),
                    })?;
                let power_db: f64 = fields
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or(Error::Parse {
                        line,
                        message: "tap line needs a numeric power (dB)".into(),
                    })?;
                taps_db.push((delay, power_db));
            }
            Some(other) => {
                return Err(Error::Parse {
                    line,
                    message: format!("unknown directive {other:?}"),
                })
            }
            None => unreachable!(),
        }
        if fields.next().is_some() {
            return Err(Error::Parse {
                line,
                message: "trailing fields".into(),
            });
        }
    }
    let model = model.ok_or(Error::Validation(
        "profile file is missing a model line".into(),
    ))?;
    ChannelProfile::new(&taps_db, model, rng_seed)
}

pub fn load_channel_profile(path: impl AsRef<Path>, rng_seed: u64) -> Result<ChannelProfile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::invalid(format!("cannot read channel profile {}: {e}", path.display()))
    })?;
    parse_channel_profile(&text, rng_seed)
}

/// Per-subcarrier channel matrices for one TTI, stored contiguously
/// subcarrier-major: element `(k, r, t)` at `k·nr·nt + r·nt + t`, so the
/// detector's batched passes can walk it without any marshalling.
#[derive(Debug, Clone)]
pub struct ChannelTensor {
    data: ComplexBuffer,
    n_subcarriers: usize,
    nr: usize,
    nt: usize,
}

impl ChannelTensor {
    /// Wraps a buffer already laid out subcarrier-major (no copy).
    pub(crate) fn from_buffer(
        data: ComplexBuffer,
        n_subcarriers: usize,
        nr: usize,
        nt: usize,
    ) -> ChannelTensor {
        debug_assert_eq!(data.len(), n_subcarriers * nr * nt);
        ChannelTensor {
            data,
            n_subcarriers,
            nr,
            nt,
        }
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    pub fn nr(&self) -> usize {
        self.nr
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn precision(&self) -> PrecisionMode {
        self.data.precision()
    }

    pub fn buffer(&self) -> &ComplexBuffer {
        &self.data
    }

    /// Copies out the matrix for one subcarrier.
    pub fn matrix_at(&self, k: usize) -> CMatrix {
        assert!(k < self.n_subcarriers, "subcarrier {k} out of range");
        CMatrix::from_fn(self.nr, self.nt, self.precision(), |r, t| {
            self.data.get(k * self.nr * self.nt + r * self.nt + t)
        })
    }

    pub fn convert_precision(&self, target: PrecisionMode) -> ChannelTensor {
        ChannelTensor {
            data: self.data.convert_precision(target),
            n_subcarriers: self.n_subcarriers,
            nr: self.nr,
            nt: self.nt,
        }
    }
}

/// Channel source for a simulation: either an ideal identity channel or a
/// stochastic tapped-delay-line profile.
#[derive(Debug, Clone)]
pub enum ChannelModel {
    /// `H[k] = I` on every subcarrier and TTI; no randomness.
    Identity,
    Profile(ChannelProfile),
}

/// Realizes per-TTI channel tensors for a fixed geometry, caching the
/// per-tap subcarrier phasors.
pub struct ChannelRealizer {
    model: ChannelModel,
    n_subcarriers: usize,
    nr: usize,
    nt: usize,
    /// `exp(-j·2π·f_k·τ_m)`, tap-major: `[m * K + k]`.
    phasors: Vec<Complex64>,
}

impl ChannelRealizer {
    pub fn new(model: ChannelModel, numerology: &NrNumerology, nr: usize, nt: usize) -> Self {
        let k_count = numerology.n_subcarriers();
        let phasors = match &model {
            ChannelModel::Identity => Vec::new(),
            ChannelModel::Profile(profile) => {
                let df = numerology.subcarrier_spacing_hz();
                let mut table = Vec::with_capacity(profile.taps.len() * k_count);
                for tap in &profile.taps {
                    for k in 0..k_count {
                        let phase = -2.0 * std::f64::consts::PI * (k as f64) * df * tap.delay_s;
                        table.push(Complex64::new(phase.cos(), phase.sin()));
                    }
                }
                table
            }
        };
        ChannelRealizer {
            model,
            n_subcarriers: k_count,
            nr,
            nt,
            phasors,
        }
    }

    /// Realizes the channel for one TTI, always in double precision.
    pub fn realize(&self, tti_index: u64) -> ChannelTensor {
        let (k_count, nr, nt) = (self.n_subcarriers, self.nr, self.nt);
        let mut data = ComplexBuffer::zeros(k_count * nr * nt, PrecisionMode::Pd);
        match &self.model {
            ChannelModel::Identity => {
                let (re, _) = data.planes_mut::<f64>();
                for k in 0..k_count {
                    for d in 0..nr.min(nt) {
                        re[k * nr * nt + d * nt + d] = 1.0;
                    }
                }
            }
            ChannelModel::Profile(profile) => {
                let tti_eff = match profile.doppler_model {
                    DopplerModel::Static => 0,
                    DopplerModel::BlockFading => tti_index,
                };
                let mut rng =
                    ChaCha8Rng::seed_from_u64(derive(profile.rng_seed, StreamTag::Channel, 0, tti_eff));
                let (hre, him) = data.planes_mut::<f64>();
                let mut gains = vec![Complex64::new(0.0, 0.0); nr * nt];
                for (m, tap) in profile.taps.iter().enumerate() {
                    let sigma = (tap.power / 2.0).sqrt();
                    for g in gains.iter_mut() {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        *g = Complex64::new(re * sigma, im * sigma);
                    }
                    let ph_row = &self.phasors[m * k_count..(m + 1) * k_count];
                    for (k, ph) in ph_row.iter().enumerate() {
                        let base = k * nr * nt;
                        for (i, g) in gains.iter().enumerate() {
                            let v = g * ph;
                            hre[base + i] += v.re;
                            him[base + i] += v.im;
                        }
                    }
                }
            }
        }
        ChannelTensor {
            data,
            n_subcarriers: k_count,
            nr,
            nt,
        }
    }
}

/// One-shot realization of a profile (see [`ChannelRealizer`] for the
/// cached form).
pub fn realize_channel(
    profile: &ChannelProfile,
    numerology: &NrNumerology,
    nr: usize,
    nt: usize,
    tti_index: u64,
) -> ChannelTensor {
    ChannelRealizer::new(ChannelModel::Profile(profile.clone()), numerology, nr, nt)
        .realize(tti_index)
}

/// Adds circularly-symmetric complex Gaussian noise with per-element
/// variance `noise_var` (so each real axis gets `noise_var/2`), seeded and
/// reproducible. Zero variance returns the input bit-exactly.
pub fn add_awgn(y: &ComplexBuffer, noise_var: f64, seed: u64) -> Result<ComplexBuffer> {
    if !noise_var.is_finite() || noise_var < 0.0 {
        return Err(Error::invalid(format!(
            "noise variance must be finite and non-negative, got {noise_var}"
        )));
    }
    let mut out = y.clone();
    if noise_var == 0.0 {
        return Ok(out);
    }
    let sigma = (noise_var / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..y.len() {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        let v = y.get(i);
        out.set(i, Complex64::new(v.re + re * sigma, v.im + im * sigma));
    }
    Ok(out)
}
