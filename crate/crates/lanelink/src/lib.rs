//! Dual-path complex linear algebra with an LMMSE MIMO detector and an
//! NR link-level simulator around it.
//!
//! The crate is organized bottom-up:
//!
//! * [`buffer`] / [`matrix`] — aligned complex storage in interleaved or
//!   split-plane layout, single and double precision.
//! * [`kernels`] — elementwise/reduction kernels, each runnable on an
//!   explicit scalar path or an AVX2+FMA vector path with observable
//!   fallback.
//! * [`linalg`] — batched LU factorization, substitution and inversion on
//!   top of the kernels.
//! * [`phy`] — NR numerology, MCS/TBS procedures, QAM, fading channels
//!   and the slot resource grid.
//! * [`detector`] — the per-subcarrier LMMSE detection pipeline, timed per
//!   stage.
//! * [`sim`] — seeded Monte-Carlo link simulation sweeping SNR points.
//! * [`bench`] — detection benchmark harness with stage breakdowns and
//!   scalar-vs-vector speedup reporting.

pub mod bench;
pub mod buffer;
pub mod detector;
pub mod error;
pub mod kernels;
pub mod linalg;
pub mod matrix;
pub mod phy;
pub mod sim;

mod component;
mod seed;

pub use buffer::{ComplexBuffer, Layout, PrecisionMode};
pub use detector::{detect_slot, lmmse_weights, DetectionConfig, DetectionResult, StageTimings};
pub use error::{Error, Result};
pub use bench::{emit_breakdown, run_bench, BenchConfig, BenchReport, EmitFormat};
pub use kernels::{capability_query, ExecPath, KernelReport, SimdCaps};
pub use matrix::CMatrix;
pub use sim::{
    compare_precisions, load_sim_config, run_sim, SimConfig, SimResult, SnrRecord,
};
