//! Per-subcarrier LMMSE MIMO detection.
//!
//! For every subcarrier `k` the receiver forms the received-signal
//! covariance `R_k = H_k·H_kᴴ + σ²·I`, factorizes it, and applies the
//! weights `W_k = H_kᴴ·R_k⁻¹` to all symbols of the slot:
//! `x̂ = W_k·y`. The inverse is never formed and never computed by a
//! closed-form shortcut — it always goes through pivoted LU plus the two
//! triangular substitutions, so the stage timings reflect the real cost
//! structure of the solve.
//!
//! [`detect_slot`] is stage-major rather than subcarrier-major: each stage
//! runs as one batched pass over all subcarriers (covariance → LU →
//! forward → backward → equalize). One monotonic clock read sits between
//! passes, so per-stage time is exact and the stage sum telescopes to the
//! total. Staging the right-hand side for forward substitution — gathering
//! the rows of `H_k` in pivot order — happens inside the forward stage,
//! since applying the row permutation is part of that solve.
//!
//! Weights are computed once per subcarrier per slot and reused across all
//! symbols (block fading), with perfect channel knowledge and the true σ²
//! handed in by the caller.

use std::time::Instant;

use serde::Serialize;

use crate::buffer::{ComplexBuffer, PrecisionMode};
use crate::component::Component;
use crate::error::{Error, Result};
use crate::kernels::vec::V;
use crate::kernels::{self, engaged, ExecPath};
use crate::linalg;
use crate::matrix::CMatrix;
use crate::phy::channel::ChannelTensor;
use crate::phy::grid::SlotGrid;

const SUPPORTED_ANTENNAS: [usize; 4] = [1, 2, 4, 8];

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DetectionConfig {
    /// Receive antennas.
    pub nr: usize,
    /// Transmit streams.
    pub nt: usize,
    pub precision: PrecisionMode,
    pub path: ExecPath,
    /// Noise variance σ² per complex dimension.
    pub noise_var: f64,
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !SUPPORTED_ANTENNAS.contains(&self.nr) || !SUPPORTED_ANTENNAS.contains(&self.nt) {
            return Err(Error::invalid(format!(
                "antenna counts must be one of {SUPPORTED_ANTENNAS:?}, got {}x{}",
                self.nr, self.nt
            )));
        }
        if self.nr < self.nt {
            return Err(Error::invalid(format!(
                "receive antennas ({}) must be at least the stream count ({})",
                self.nr, self.nt
            )));
        }
        if !self.noise_var.is_finite() || self.noise_var < 0.0 {
            return Err(Error::invalid(format!(
                "noise variance must be finite and non-negative, got {}",
                self.noise_var
            )));
        }
        Ok(())
    }
}

/// Wall-clock nanoseconds per detection stage, accumulated over all
/// subcarriers of one slot.
///
/// Stages share their boundary clock reads, so `total_ns` equals the stage
/// sum up to integer truncation. The forward stage includes permuting the
/// right-hand side into pivot order.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct StageTimings {
    pub covariance_ns: u64,
    pub lu_ns: u64,
    pub forward_sub_ns: u64,
    pub backward_sub_ns: u64,
    pub equalize_ns: u64,
    pub total_ns: u64,
}

impl StageTimings {
    pub fn stage_sum_ns(&self) -> u64 {
        self.covariance_ns
            + self.lu_ns
            + self.forward_sub_ns
            + self.backward_sub_ns
            + self.equalize_ns
    }
}

#[derive(Debug)]
pub struct DetectionResult {
    /// Estimated transmit grid (`nt` streams).
    pub x_hat: SlotGrid,
    pub timings: StageTimings,
    pub subcarriers_processed: usize,
}

/// LMMSE weight matrix `W = Hᴴ·(H·Hᴴ + σ²·I)⁻¹` for a single channel
/// matrix, via LU factorization and substitution.
///
/// With σ² = 0 the covariance is singular unless `H` has full row rank, in
/// which case the weights reduce to zero-forcing.
pub fn lmmse_weights(h: &CMatrix, noise_var: f64, path: ExecPath) -> Result<CMatrix> {
    let r = kernels::gram_update(h, noise_var, path)?;
    // M = R⁻¹·H, so W = Mᴴ (R is Hermitian).
    let m = linalg::solve(&r, h, path)?;
    Ok(CMatrix::from_fn(
        h.cols(),
        h.rows(),
        h.precision(),
        |t, r| m.get(r, t).conj(),
    ))
}

/// Mean squared symbol error `mean(|x̂[i] − x[i]|²)`, accumulated in
/// double precision regardless of storage precision.
pub fn mse(x_hat: &ComplexBuffer, x_ref: &ComplexBuffer) -> Result<f64> {
    if x_hat.len() != x_ref.len() {
        return Err(Error::shape(format!(
            "length mismatch: {} vs {}",
            x_hat.len(),
            x_ref.len()
        )));
    }
    if x_hat.is_empty() {
        return Err(Error::invalid("mse of empty buffers is undefined"));
    }
    let mut acc = 0.0;
    for i in 0..x_hat.len() {
        acc += (x_hat.get(i) - x_ref.get(i)).norm_sqr();
    }
    Ok(acc / x_hat.len() as f64)
}

/// Matrices per register row for the batched solve. When an `nr`-component
/// row only part-fills a vector register, `g = lanes/nr` subcarriers share
/// each register row so the row arithmetic runs at full width. The scalar
/// path, and rows at or past register width, keep the plain `g = 1`
/// per-matrix layout.
fn group_factor(precision: PrecisionMode, path: ExecPath, nr: usize) -> usize {
    if !engaged(path) {
        return 1;
    }
    // Lane counts of the two AVX2 register types backing the vector path.
    let lanes = match precision {
        PrecisionMode::Ps => 8,
        PrecisionMode::Pd => 4,
    };
    if lanes % nr == 0 {
        lanes / nr
    } else {
        1
    }
}

/// Writes identity covariance for the pad members that square off the last
/// register group (`k ≥ k_count`). Identity never trips the pivot guard,
/// and the pads' right-hand sides stay zero through both substitutions, so
/// padding is invisible in every real subcarrier's output.
fn pad_covariance_identity(r: &mut ComplexBuffer, k_count: usize, g: usize, nr: usize) {
    fn fill<T: Component>(rre: &mut [T], k_count: usize, g: usize, nr: usize) {
        let w = nr * g;
        let padded = k_count.div_ceil(g) * g;
        for k in k_count..padded {
            let base = (k / g) * nr * w + (k % g) * nr;
            for i in 0..nr {
                rre[base + i * w + i] = T::from_f64(1.0);
            }
        }
    }
    match r.precision() {
        PrecisionMode::Ps => fill::<f32>(r.planes_mut::<f32>().0, k_count, g, nr),
        PrecisionMode::Pd => fill::<f64>(r.planes_mut::<f64>().0, k_count, g, nr),
    }
}

/// Gathers each subcarrier's `H` rows in pivot order into the
/// right-hand-side workspace: `rhs_k[i] = H_k[perm_k[i]]`.
///
/// The destination holds `q` columns per member, `g` members per register
/// row (`q = nt`, `g = 1` for the plain layout; `q = nr ≥ nt` when grouped,
/// with the pad columns and pad members left zero).
#[allow(clippy::too_many_arguments)]
fn stage_rhs<T: Component>(
    hre: &[T],
    him: &[T],
    wre: &mut [T],
    wim: &mut [T],
    ipiv: &[usize],
    k_count: usize,
    nr: usize,
    nt: usize,
    g: usize,
    q: usize,
) {
    let w = q * g;
    let mut perm = [0usize; 8];
    for k in 0..k_count {
        let piv = &ipiv[k * nr..(k + 1) * nr];
        for (i, p) in perm[..nr].iter_mut().enumerate() {
            *p = i;
        }
        for j in 0..nr {
            perm[..nr].swap(j, piv[j]);
        }
        let hbase = k * nr * nt;
        let obase = (k / g) * nr * w + (k % g) * q;
        for i in 0..nr {
            let src = hbase + perm[i] * nt;
            let dst = obase + i * w;
            // Element loop instead of copy_from_slice: rows are a handful of
            // components, far below memcpy's call-overhead break-even.
            for c in 0..nt {
                wre[dst + c] = hre[src + c];
                wim[dst + c] = him[src + c];
            }
        }
    }
}

/// One register-width of equalizer output: `out = Σ_r conj(w_r) · y_r`
/// accumulated across receive antennas in registers, stored once.
///
/// `yre`/`yim` point at the first antenna's symbols for this chunk; rows
/// for successive antennas sit `stride` components apart.
#[inline(always)]
#[allow(clippy::too_many_arguments)]
unsafe fn equalize_chunk<W: V, const FULL: bool>(
    wr: &[W::E],
    wi: &[W::E],
    yre: *const W::E,
    yim: *const W::E,
    stride: usize,
    ore: *mut W::E,
    oim: *mut W::E,
    n: usize,
) {
    let mut ar = W::zero();
    let mut ai = W::zero();
    for r in 0..wr.len() {
        let (vwr, vwi) = (W::splat(wr[r]), W::splat(wi[r]));
        let (vyr, vyi) = if FULL {
            (W::load(yre.add(r * stride)), W::load(yim.add(r * stride)))
        } else {
            (
                W::load_prefix(yre.add(r * stride), n),
                W::load_prefix(yim.add(r * stride), n),
            )
        };
        // conj(w) * y: re += wr*yr + wi*yi, im += wr*yi - wi*yr.
        ar = vwi.mul_add(vyi, vwr.mul_add(vyr, ar));
        ai = vwi.neg_mul_add(vyr, vwr.mul_add(vyi, ai));
    }
    if FULL {
        ar.store(ore);
        ai.store(oim);
    } else {
        ar.store_prefix(ore, n);
        ai.store_prefix(oim, n);
    }
}

/// Scalar-path equalize: per antenna, one multiply-accumulate sweep along
/// the contiguous symbol row (`x̂[t] += conj(M_k[r][t]) · y[r]`). Plain
/// indexed arithmetic; register blocking is reserved for the vector path.
///
/// `g`/`q` describe the weight layout (members per register row, columns
/// per member) exactly as staged by [`stage_rhs`].
#[allow(clippy::too_many_arguments)]
fn equalize_scalar<T: Component>(
    mre: &[T],
    mim: &[T],
    yre: &[T],
    yim: &[T],
    ore: &mut [T],
    oim: &mut [T],
    k_count: usize,
    s_count: usize,
    nr: usize,
    nt: usize,
    g: usize,
    q: usize,
) {
    let w = q * g;
    for k in 0..k_count {
        let wbase = (k / g) * nr * w + (k % g) * q;
        for t in 0..nt {
            let o0 = (t * k_count + k) * s_count;
            let orow = &mut ore[o0..o0 + s_count];
            let oima = &mut oim[o0..o0 + s_count];
            for r in 0..nr {
                let wr = mre[wbase + r * w + t];
                let wi = mim[wbase + r * w + t];
                let y0 = (r * k_count + k) * s_count;
                let yrow = &yre[y0..y0 + s_count];
                let yima = &yim[y0..y0 + s_count];
                for s in 0..s_count {
                    let re = wr * yrow[s] + orow[s] + wi * yima[s];
                    let im = wr * yima[s] + oima[s] - wi * yrow[s];
                    orow[s] = re;
                    oima[s] = im;
                }
            }
        }
    }
}

/// Applies the solved weights to the received grid:
/// `x̂[t,s] = Σ_r conj(M_k[r][t]) · y[r,s]` per subcarrier, where
/// `M_k = R_k⁻¹·H_k` (so `conj(M[r][t]) = W[t][r]`). The antenna sum for
/// each output row stays in registers; every `x̂` component is written
/// exactly once.
#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn equalize_pass<Vx: V>(
    mre: &[Vx::E],
    mim: &[Vx::E],
    yre: &[Vx::E],
    yim: &[Vx::E],
    ore: &mut [Vx::E],
    oim: &mut [Vx::E],
    k_count: usize,
    s_count: usize,
    nr: usize,
    nt: usize,
    g: usize,
    q: usize,
) {
    debug_assert!(nr <= 8);
    debug_assert_eq!(yre.len(), nr * k_count * s_count);
    debug_assert_eq!(ore.len(), nt * k_count * s_count);
    let stride = k_count * s_count;
    let w = q * g;
    let mut wr = [Vx::E::default(); 8];
    let mut wi = [Vx::E::default(); 8];
    for k in 0..k_count {
        let wbase = (k / g) * nr * w + (k % g) * q;
        for t in 0..nt {
            for r in 0..nr {
                wr[r] = mre[wbase + r * w + t];
                wi[r] = mim[wbase + r * w + t];
            }
            let y0 = k * s_count;
            let o0 = (t * k_count + k) * s_count;
            let mut s = 0;
            while s + Vx::LANES <= s_count {
                unsafe {
                    equalize_chunk::<Vx, true>(
                        &wr[..nr],
                        &wi[..nr],
                        yre.as_ptr().add(y0 + s),
                        yim.as_ptr().add(y0 + s),
                        stride,
                        ore.as_mut_ptr().add(o0 + s),
                        oim.as_mut_ptr().add(o0 + s),
                        Vx::LANES,
                    );
                }
                s += Vx::LANES;
            }
            if s < s_count {
                unsafe {
                    equalize_chunk::<Vx, false>(
                        &wr[..nr],
                        &wi[..nr],
                        yre.as_ptr().add(y0 + s),
                        yim.as_ptr().add(y0 + s),
                        stride,
                        ore.as_mut_ptr().add(o0 + s),
                        oim.as_mut_ptr().add(o0 + s),
                        s_count - s,
                    );
                }
            }
        }
    }
}

#[cfg(target_arch = "x86_64")]
mod avx {
    //! See `kernels::avx` for the safety contract.
    use super::*;
    use crate::kernels::vec::{F32x8, F64x4};

    #[allow(clippy::too_many_arguments)]
    #[target_feature(enable = "avx2,fma")]
    pub(super) unsafe fn equalize_f32(
        mre: &[f32],
        mim: &[f32],
        yre: &[f32],
        yim: &[f32],
        ore: &mut [f32],
        oim: &mut [f32],
        k_count: usize,
        s_count: usize,
        nr: usize,
        nt: usize,
        g: usize,
        q: usize,
    ) {
        equalize_pass::<F32x8>(mre, mim, yre, yim, ore, oim, k_count, s_count, nr, nt, g, q)
    }

    #[allow(clippy::too_many_arguments)]
    #[target_feature(enable = "avx2,fma")]
    pub(super) unsafe fn equalize_f64(
        mre: &[f64],
        mim: &[f64],
        yre: &[f64],
        yim: &[f64],
        ore: &mut [f64],
        oim: &mut [f64],
        k_count: usize,
        s_count: usize,
        nr: usize,
        nt: usize,
        g: usize,
        q: usize,
    ) {
        equalize_pass::<F64x4>(mre, mim, yre, yim, ore, oim, k_count, s_count, nr, nt, g, q)
    }
}

#[allow(clippy::too_many_arguments)]
fn equalize_batch(
    m: &ComplexBuffer,
    y: &ComplexBuffer,
    out: &mut ComplexBuffer,
    k_count: usize,
    s_count: usize,
    nr: usize,
    nt: usize,
    g: usize,
    q: usize,
    path: ExecPath,
) {
    let run_avx = engaged(path);
    match m.precision() {
        #[cfg(target_arch = "x86_64")]
        PrecisionMode::Ps if run_avx => {
            let (mre, mim) = m.planes::<f32>();
            let (yre, yim) = y.planes::<f32>();
            let (ore, oim) = out.planes_mut::<f32>();
            unsafe {
                avx::equalize_f32(mre, mim, yre, yim, ore, oim, k_count, s_count, nr, nt, g, q)
            }
        }
        PrecisionMode::Ps => {
            let (mre, mim) = m.planes::<f32>();
            let (yre, yim) = y.planes::<f32>();
            let (ore, oim) = out.planes_mut::<f32>();
            equalize_scalar::<f32>(mre, mim, yre, yim, ore, oim, k_count, s_count, nr, nt, g, q)
        }
        #[cfg(target_arch = "x86_64")]
        PrecisionMode::Pd if run_avx => {
            let (mre, mim) = m.planes::<f64>();
            let (yre, yim) = y.planes::<f64>();
            let (ore, oim) = out.planes_mut::<f64>();
            unsafe {
                avx::equalize_f64(mre, mim, yre, yim, ore, oim, k_count, s_count, nr, nt, g, q)
            }
        }
        PrecisionMode::Pd => {
            let (mre, mim) = m.planes::<f64>();
            let (yre, yim) = y.planes::<f64>();
            let (ore, oim) = out.planes_mut::<f64>();
            equalize_scalar::<f64>(mre, mim, yre, yim, ore, oim, k_count, s_count, nr, nt, g, q)
        }
    }
}

/// Detects one slot: LMMSE weights per subcarrier applied to all symbols.
///
/// Inputs are converted to the configured precision before the timed
/// region if they arrive in the other one; all workspace allocation also
/// happens before the first clock read, so stage times measure arithmetic,
/// not memory management.
pub fn detect_slot(
    rx: &SlotGrid,
    channel: &ChannelTensor,
    cfg: &DetectionConfig,
) -> Result<DetectionResult> {
    cfg.validate()?;
    let (k_count, s_count) = (rx.n_subcarriers(), rx.n_symbols());
    if rx.n_streams() != cfg.nr {
        return Err(Error::shape(format!(
            "received grid has {} streams, config expects nr = {}",
            rx.n_streams(),
            cfg.nr
        )));
    }
    if channel.nr() != cfg.nr || channel.nt() != cfg.nt {
        return Err(Error::shape(format!(
            "channel is {}x{}, config expects {}x{}",
            channel.nr(),
            channel.nt(),
            cfg.nr,
            cfg.nt
        )));
    }
    if channel.n_subcarriers() != k_count {
        return Err(Error::shape(format!(
            "channel covers {} subcarriers, grid has {k_count}",
            channel.n_subcarriers()
        )));
    }
    let (nr, nt) = (cfg.nr, cfg.nt);

    let h_store;
    let h_buf = if channel.precision() == cfg.precision {
        channel.buffer()
    } else {
        h_store = channel.buffer().convert_precision(cfg.precision);
        &h_store
    };
    let y_store;
    let y_buf = if rx.precision() == cfg.precision {
        rx.buffer()
    } else {
        y_store = rx.buffer().convert_precision(cfg.precision);
        &y_store
    };

    // g subcarriers share each register row of the solve workspaces when
    // rows are narrower than a register (see `group_factor`); q is the RHS
    // column count per member. g == 1 keeps the tight per-matrix layout.
    let g = group_factor(cfg.precision, cfg.path, nr);
    let groups = k_count.div_ceil(g);
    let q = if g == 1 { nt } else { nr };

    let mut r_buf = ComplexBuffer::zeros(groups * nr * nr * g, cfg.precision);
    let mut m_buf = ComplexBuffer::zeros(groups * nr * q * g, cfg.precision);
    let mut out_buf = ComplexBuffer::zeros(k_count * s_count * nt, cfg.precision);
    let mut ipiv = vec![0usize; groups * g * nr];

    let t0 = Instant::now();
    kernels::gram_buffer_batch(h_buf, nr, nt, k_count, g, cfg.noise_var, cfg.path, &mut r_buf);
    if groups * g != k_count {
        pad_covariance_identity(&mut r_buf, k_count, g, nr);
    }
    let t1 = Instant::now();
    linalg::lu_batch_packed(&mut r_buf, nr, g, groups, &mut ipiv, cfg.path).map_err(
        |(k, column)| Error::Singular {
            column,
            subcarrier: Some(k),
        },
    )?;
    let t2 = Instant::now();
    match cfg.precision {
        PrecisionMode::Ps => {
            let (hre, him) = h_buf.planes::<f32>();
            let (mre, mim) = m_buf.planes_mut::<f32>();
            stage_rhs(hre, him, mre, mim, &ipiv, k_count, nr, nt, g, q);
        }
        PrecisionMode::Pd => {
            let (hre, him) = h_buf.planes::<f64>();
            let (mre, mim) = m_buf.planes_mut::<f64>();
            stage_rhs(hre, him, mre, mim, &ipiv, k_count, nr, nt, g, q);
        }
    }
    linalg::forward_batch_packed(&r_buf, nr, g, groups, q, &mut m_buf, cfg.path);
    let t3 = Instant::now();
    linalg::backward_batch_packed(&r_buf, nr, g, groups, q, &mut m_buf, cfg.path);
    let t4 = Instant::now();
    equalize_batch(&m_buf, y_buf, &mut out_buf, k_count, s_count, nr, nt, g, q, cfg.path);
    let t5 = Instant::now();

    let timings = StageTimings {
        covariance_ns: (t1 - t0).as_nanos() as u64,
        lu_ns: (t2 - t1).as_nanos() as u64,
        forward_sub_ns: (t3 - t2).as_nanos() as u64,
        backward_sub_ns: (t4 - t3).as_nanos() as u64,
        equalize_ns: (t5 - t4).as_nanos() as u64,
        total_ns: (t5 - t0).as_nanos() as u64,
    };
    Ok(DetectionResult {
        x_hat: SlotGrid::from_parts(out_buf, k_count, s_count, nt),
        timings,
        subcarriers_processed: k_count,
    })
}
