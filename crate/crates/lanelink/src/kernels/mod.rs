//! Dual-path compute kernels.
//!
//! Every kernel is callable on two execution paths with identical semantics:
//!
//! * [`ExecPath::Scalar`] — the reference loop, plain unfused arithmetic.
//! * [`ExecPath::Vector`] — AVX2+FMA registers when the host has them,
//!   otherwise an observable fall back to the scalar loop (see
//!   [`capability_query`]; `native == false` means Vector degrades to
//!   Scalar).
//!
//! Path selection happens once per kernel call, never inside inner loops.
//! Accumulation orders are fixed (register lane tree, then half-register,
//! then sequential tail), so repeated runs on one host are bit-identical
//! per path.

pub(crate) mod body;
pub(crate) mod vec;

use std::sync::OnceLock;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::buffer::{ComplexBuffer, Layout, PrecisionMode};
use crate::error::{Error, Result};
use crate::matrix::CMatrix;

use vec::Sc;

/// Which implementation of a kernel to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecPath {
    Scalar,
    Vector,
}

impl ExecPath {
    pub const fn label(self) -> &'static str {
        match self {
            ExecPath::Scalar => "scalar",
            ExecPath::Vector => "vector",
        }
    }
}

impl std::fmt::Display for ExecPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for ExecPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scalar" => Ok(ExecPath::Scalar),
            "vector" => Ok(ExecPath::Vector),
            other => Err(Error::invalid(format!(
                "unknown path {other:?} (expected \"scalar\" or \"vector\")"
            ))),
        }
    }
}

/// What the vector path can engage on this host.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimdCaps {
    /// Register width the built kernels use when native (bits); 0 when the
    /// vector path falls back to scalar.
    pub width_bits: u32,
    /// True when Vector really runs vector registers on this host.
    pub native: bool,
    /// Fused multiply-add available.
    pub fma: bool,
}

impl SimdCaps {
    /// Complex elements per register: `width_bits / (2 * component bits)`.
    pub const fn lanes(self, precision: PrecisionMode) -> usize {
        self.width_bits as usize / (16 * precision.component_bytes())
    }
}

/// Detects once what the vector path can use (AVX2 + FMA, 256-bit).
pub fn capability_query() -> SimdCaps {
    static CAPS: OnceLock<SimdCaps> = OnceLock::new();
    *CAPS.get_or_init(|| {
        #[cfg(target_arch = "x86_64")]
        {
            let avx2 = std::arch::is_x86_feature_detected!("avx2");
            let fma = std::arch::is_x86_feature_detected!("fma");
            if avx2 && fma {
                return SimdCaps {
                    width_bits: 256,
                    native: true,
                    fma: true,
                };
            }
            SimdCaps {
                width_bits: 0,
                native: false,
                fma,
            }
        }
        #[cfg(not(target_arch = "x86_64"))]
        {
            SimdCaps {
                width_bits: 0,
                native: false,
                fma: false,
            }
        }
    })
}

/// True when `path` should run the AVX2 roots on this host.
#[inline]
pub(crate) fn engaged(path: ExecPath) -> bool {
    path == ExecPath::Vector && capability_query().native
}

/// Per-call execution record.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KernelReport {
    pub elements_processed: usize,
    pub path_used: ExecPath,
    pub elapsed_ns: u64,
}

/// Runs `op`, capturing a [`KernelReport`] alongside its result.
pub fn timed<R>(elements: usize, path: ExecPath, op: impl FnOnce() -> R) -> (R, KernelReport) {
    let start = Instant::now();
    let out = op();
    let report = KernelReport {
        elements_processed: elements,
        path_used: path,
        elapsed_ns: start.elapsed().as_nanos() as u64,
    };
    (out, report)
}

#[cfg(target_arch = "x86_64")]
mod avx {
    //! `target_feature` roots: each instantiates a generic body with AVX2
    //! registers so the whole pass compiles under avx2+fma.
    //!
    //! Safety: callers must have checked [`super::capability_query`]
    //! (`native == true`) first.

    use super::body;
    use super::vec::{F32x8, F64x4};

    #[target_feature(enable = "avx2,fma")]
    pub(crate) unsafe fn add_f32(a: &[f32], b: &[f32], out: &mut [f32]) {
        body::add_components::<F32x8>(a, b, out)
    }

    #[target_feature(enable = "avx2,fma")]
    pub(crate) unsafe fn add_f64(a: &[f64], b: &[f64], out: &mut [f64]) {
        body::add_components::<F64x4>(a, b, out)
    }

    #[target_feature(enable = "avx2,fma")]
    #[allow(clippy::too_many_arguments)]
    pub(crate) unsafe fn cmul_f32(
        are: &[f32],
        aim: &[f32],
        bre: &[f32],
        bim: &[f32],
        cre: &[f32],
        cim: &[f32],
        ore: &mut [f32],
        oim: &mut [f32],
    ) {
        body::cmul_acc::<F32x8>(are, aim, bre, bim, cre, cim, ore, oim)
    }

    #[target_feature(enable = "avx2,fma")]
    #[allow(clippy::too_many_arguments)]
    pub(crate) unsafe fn cmul_f64(
        are: &[f64],
        aim: &[f64],
        bre: &[f64],
        bim: &[f64],
        cre: &[f64],
        cim: &[f64],
        ore: &mut [f64],
        oim: &mut [f64],
    ) {
        body::cmul_acc::<F64x4>(are, aim, bre, bim, cre, cim, ore, oim)
    }

    #[target_feature(enable = "avx2,fma")]
    pub(crate) unsafe fn dot_f32<const CONJ_A: bool>(
        are: &[f32],
        aim: &[f32],
        bre: &[f32],
        bim: &[f32],
    ) -> (f32, f32) {
        body::dot::<F32x8, CONJ_A>(are, aim, bre, bim)
    }

    #[target_feature(enable = "avx2,fma")]
    pub(crate) unsafe fn dot_f64<const CONJ_A: bool>(
        are: &[f64],
        aim: &[f64],
        bre: &[f64],
        bim: &[f64],
    ) -> (f64, f64) {
        body::dot::<F64x4, CONJ_A>(are, aim, bre, bim)
    }

    #[target_feature(enable = "avx2,fma")]
    #[allow(clippy::too_many_arguments)]
    pub(crate) unsafe fn gram_f32(
        hre: &[f32],
        him: &[f32],
        nr: usize,
        nt: usize,
        sigma2: f32,
        rre: &mut [f32],
        rim: &mut [f32],
        batch: usize,
        g: usize,
    ) {
        body::gram_batch::<F32x8>(hre, him, nr, nt, sigma2, rre, rim, batch, g)
    }

    #[target_feature(enable = "avx2,fma")]
    #[allow(clippy::too_many_arguments)]
    pub(crate) unsafe fn gram_f64(
        hre: &[f64],
        him: &[f64],
        nr: usize,
        nt: usize,
        sigma2: f64,
        rre: &mut [f64],
        rim: &mut [f64],
        batch: usize,
        g: usize,
    ) {
        body::gram_batch::<F64x4>(hre, him, nr, nt, sigma2, rre, rim, batch, g)
    }
}

fn check_binary(a: &ComplexBuffer, b: &ComplexBuffer) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::shape(format!("lengths {} vs {}", a.len(), b.len())));
    }
    if a.layout() != b.layout() {
        return Err(Error::shape(format!(
            "layouts {:?} vs {:?}",
            a.layout(),
            b.layout()
        )));
    }
    if a.precision() != b.precision() {
        return Err(Error::shape(format!(
            "precisions {:?} vs {:?}",
            a.precision(),
            b.precision()
        )));
    }
    Ok(())
}

/// Elementwise complex add: `out[i] = a[i] + b[i]`.
///
/// Works on both layouts directly (addition has no cross-component terms);
/// scalar and vector paths agree bit-exactly.
pub fn vadd(a: &ComplexBuffer, b: &ComplexBuffer, path: ExecPath) -> Result<ComplexBuffer> {
    check_binary(a, b)?;
    let mut out = ComplexBuffer::zeros_with(a.len(), a.layout(), a.precision(), a.alignment())?;
    let run_avx = engaged(path);
    match a.precision() {
        #[cfg(target_arch = "x86_64")]
        PrecisionMode::Ps if run_avx => unsafe {
            avx::add_f32(a.components(), b.components(), out.components_mut())
        },
        PrecisionMode::Ps => body::add_components::<Sc<f32>>(
            a.components(),
            b.components(),
            out.components_mut(),
        ),
        #[cfg(target_arch = "x86_64")]
        PrecisionMode::Pd if run_avx => unsafe {
            avx::add_f64(a.components(), b.components(), out.components_mut())
        },
        PrecisionMode::Pd => body::add_components::<Sc<f64>>(
            a.components(),
            b.components(),
            out.components_mut(),
        ),
    }
    Ok(out)
}

/// Elementwise fused multiply-accumulate: `out[i] = acc[i] + a[i] * b[i]`.
///
/// Interleaved operands are staged through split planes (exact copies); the
/// result comes back in the operands' layout.
pub fn cmul_fma(
    acc: &ComplexBuffer,
    a: &ComplexBuffer,
    b: &ComplexBuffer,
    path: ExecPath,
) -> Result<ComplexBuffer> {
    check_binary(a, b)?;
    check_binary(acc, a)?;
    if acc.layout() == Layout::Interleaved {
        let out = cmul_fma(
            &acc.relayout(Layout::Split),
            &a.relayout(Layout::Split),
            &b.relayout(Layout::Split),
            path,
        )?;
        return Ok(out.relayout(Layout::Interleaved));
    }
    let mut out = ComplexBuffer::zeros_with(a.len(), Layout::Split, a.precision(), a.alignment())?;
    let run_avx = engaged(path);
    match a.precision() {
        #[cfg(target_arch = "x86_64")]
        PrecisionMode::Ps if run_avx => {
            let (are, aim) = a.planes::<f32>();
            let (bre, bim) = b.planes::<f32>();
            let (cre, cim) = acc.planes::<f32>();
            let (ore, oim) = out.planes_mut::<f32>();
            unsafe { avx::cmul_f32(are, aim, bre, bim, cre, cim, ore, oim) }
        }
        PrecisionMode::Ps => {
            let (are, aim) = a.planes::<f32>();
            let (bre, bim) = b.planes::<f32>();
            let (cre, cim) = acc.planes::<f32>();
            let (ore, oim) = out.planes_mut::<f32>();
            body::cmul_acc::<Sc<f32>>(are, aim, bre, bim, cre, cim, ore, oim)
        }
        #[cfg(target_arch = "x86_64")]
        PrecisionMode::Pd if run_avx => {
            let (are, aim) = a.planes::<f64>();
            let (bre, bim) = b.planes::<f64>();
            let (cre, cim) = acc.planes::<f64>();
            let (ore, oim) = out.planes_mut::<f64>();
            unsafe { avx::cmul_f64(are, aim, bre, bim, cre, cim, ore, oim) }
        }
        PrecisionMode::Pd => {
            let (are, aim) = a.planes::<f64>();
            let (bre, bim) = b.planes::<f64>();
            let (cre, cim) = acc.planes::<f64>();
            let (ore, oim) = out.planes_mut::<f64>();
            body::cmul_acc::<Sc<f64>>(are, aim, bre, bim, cre, cim, ore, oim)
        }
    }
    Ok(out)
}

/// Complex dot product `sum a[i] * b[i]` (`conj(a[i]) * b[i]` when
/// `conjugate_a`).
///
/// Accumulation runs in the buffers' own precision with a fixed reduction
/// order per path; the result is widened for return.
pub fn cdot(
    a: &ComplexBuffer,
    b: &ComplexBuffer,
    conjugate_a: bool,
    path: ExecPath,
) -> Result<Complex64> {
    check_binary(a, b)?;
    if a.layout() == Layout::Interleaved {
        return cdot(
            &a.relayout(Layout::Split),
            &b.relayout(Layout::Split),
            conjugate_a,
            path,
        );
    }
    let run_avx = engaged(path);
    let (re, im) = match a.precision() {
        #[cfg(target_arch = "x86_64")]
        PrecisionMode::Ps if run_avx => {
            let (are, aim) = a.planes::<f32>();
            let (bre, bim) = b.planes::<f32>();
            let (re, im) = unsafe {
                if conjugate_a {
                    avx::dot_f32::<true>(are, aim, bre, bim)
                } else {
                    avx::dot_f32::<false>(are, aim, bre, bim)
                }
            };
            (re as f64, im as f64)
        }
        PrecisionMode::Ps => {
            let (are, aim) = a.planes::<f32>();
            let (bre, bim) = b.planes::<f32>();
            let (re, im) = if conjugate_a {
                body::dot::<Sc<f32>, true>(are, aim, bre, bim)
            } else {
                body::dot::<Sc<f32>, false>(are, aim, bre, bim)
            };
            (re as f64, im as f64)
        }
        #[cfg(target_arch = "x86_64")]
        PrecisionMode::Pd if run_avx => {
            let (are, aim) = a.planes::<f64>();
            let (bre, bim) = b.planes::<f64>();
            unsafe {
                if conjugate_a {
                    avx::dot_f64::<true>(are, aim, bre, bim)
                } else {
                    avx::dot_f64::<false>(are, aim, bre, bim)
                }
            }
        }
        PrecisionMode::Pd => {
            let (are, aim) = a.planes::<f64>();
            let (bre, bim) = b.planes::<f64>();
            if conjugate_a {
                body::dot::<Sc<f64>, true>(are, aim, bre, bim)
            } else {
                body::dot::<Sc<f64>, false>(are, aim, bre, bim)
            }
        }
    };
    Ok(Complex64::new(re, im))
}

/// Regularized Gram matrix `R = H * H^H + noise_var * I`.
///
/// The result carries the Hermitian flag: diagonals are exact reals at least
/// `noise_var`, off-diagonals exact conjugate mirrors.
pub fn gram_update(h: &CMatrix, noise_var: f64, path: ExecPath) -> Result<CMatrix> {
    if !noise_var.is_finite() || noise_var < 0.0 {
        return Err(Error::invalid(format!(
            "noise variance must be finite and non-negative, got {noise_var}"
        )));
    }
    let nr = h.rows();
    let mut r = CMatrix::zeros(nr, nr, h.precision());
    gram_into(h, noise_var, path, &mut r)?;
    r.set_hermitian(true);
    Ok(r)
}

/// Batched Gram pass shared with the detector (batch == 1 for the public op).
pub(crate) fn gram_into(h: &CMatrix, noise_var: f64, path: ExecPath, r: &mut CMatrix) -> Result<()> {
    let (nr, nt) = (h.rows(), h.cols());
    debug_assert_eq!(r.rows(), nr);
    debug_assert_eq!(r.cols(), nr);
    gram_buffer_batch(h.buffer(), nr, nt, 1, 1, noise_var, path, r.buffer_mut());
    Ok(())
}

/// Gram pass over `batch` packed `nr x nt` matrices, writing `batch`
/// `nr x nr` covariance blocks grouped `g` per register row (`g = 1` for
/// the plain packed layout; see [`body::gram_batch`]).
#[allow(clippy::too_many_arguments)]
pub(crate) fn gram_buffer_batch(
    h: &ComplexBuffer,
    nr: usize,
    nt: usize,
    batch: usize,
    g: usize,
    noise_var: f64,
    path: ExecPath,
    r: &mut ComplexBuffer,
) {
    debug_assert_eq!(h.len(), batch * nr * nt);
    debug_assert_eq!(r.len(), batch.div_ceil(g) * nr * nr * g);
    let run_avx = engaged(path);
    match h.precision() {
        #[cfg(target_arch = "x86_64")]
        PrecisionMode::Ps if run_avx => {
            let (hre, him) = h.planes::<f32>();
            let (rre, rim) = r.planes_mut::<f32>();
            unsafe { avx::gram_f32(hre, him, nr, nt, noise_var as f32, rre, rim, batch, g) }
        }
        PrecisionMode::Ps => {
            let (hre, him) = h.planes::<f32>();
            let (rre, rim) = r.planes_mut::<f32>();
            body::gram_batch::<Sc<f32>>(hre, him, nr, nt, noise_var as f32, rre, rim, batch, g)
        }
        #[cfg(target_arch = "x86_64")]
        PrecisionMode::Pd if run_avx => {
            let (hre, him) = h.planes::<f64>();
            let (rre, rim) = r.planes_mut::<f64>();
            unsafe { avx::gram_f64(hre, him, nr, nt, noise_var, rre, rim, batch, g) }
        }
        PrecisionMode::Pd => {
            let (hre, him) = h.planes::<f64>();
            let (rre, rim) = r.planes_mut::<f64>();
            body::gram_batch::<Sc<f64>>(hre, him, nr, nt, noise_var, rre, rim, batch, g)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_buffer(
        rng: &mut StdRng,
        len: usize,
        layout: Layout,
        precision: PrecisionMode,
    ) -> ComplexBuffer {
        ComplexBuffer::from_fn(len, layout, precision, 64, |_| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
        .unwrap()
    }

    #[test]
    fn caps_are_coherent() {
        let caps = capability_query();
        if caps.native {
            assert_eq!(caps.width_bits, 256);
            assert!(caps.fma);
        } else {
            assert_eq!(caps.width_bits, 0);
        }
    }

    #[test]
    fn lanes_derive_from_width() {
        let caps = SimdCaps {
            width_bits: 256,
            native: true,
            fma: true,
        };
        assert_eq!(caps.lanes(PrecisionMode::Ps), 4);
        assert_eq!(caps.lanes(PrecisionMode::Pd), 2);
        let none = SimdCaps {
            width_bits: 0,
            native: false,
            fma: false,
        };
        assert_eq!(none.lanes(PrecisionMode::Ps), 0);
    }

    #[test]
    fn vadd_matches_reference_and_paths_bit_exact() {
        let mut rng = StdRng::seed_from_u64(7);
        for &len in &[0usize, 1, 7, 64, 720, 1024] {
            for layout in [Layout::Interleaved, Layout::Split] {
                for precision in [PrecisionMode::Ps, PrecisionMode::Pd] {
                    let a = random_buffer(&mut rng, len, layout, precision);
                    let b = random_buffer(&mut rng, len, layout, precision);
                    let s = vadd(&a, &b, ExecPath::Scalar).unwrap();
                    let v = vadd(&a, &b, ExecPath::Vector).unwrap();
                    assert!(s.bit_eq(&v), "len {len} {layout:?} {precision:?}");
                    for i in 0..len {
                        let want = a.get(i) + b.get(i);
                        let got = s.get(i);
                        assert!((want - got).norm() <= 1e-6, "i={i}");
                    }
                }
            }
        }
    }

    #[test]
    fn vadd_rejects_mismatched_operands() {
        let a = ComplexBuffer::zeros(4, PrecisionMode::Ps);
        let b = ComplexBuffer::zeros(5, PrecisionMode::Ps);
        assert!(matches!(
            vadd(&a, &b, ExecPath::Scalar),
            Err(Error::ShapeMismatch(_))
        ));
        let c = ComplexBuffer::zeros(4, PrecisionMode::Pd);
        assert!(vadd(&a, &c, ExecPath::Scalar).is_err());
        let d = ComplexBuffer::zeros_with(4, Layout::Interleaved, PrecisionMode::Ps, 64).unwrap();
        assert!(vadd(&a, &d, ExecPath::Scalar).is_err());
    }

    #[test]
    fn cmul_fma_paths_within_four_ulp_of_input_scale() {
        // Fused contraction changes the last bits of the intermediate
        // products, so the path difference is bounded in ulp at the scale of
        // the inputs (the output itself can cancel toward zero).
        let mut rng = StdRng::seed_from_u64(11);
        for &len in &[1usize, 7, 720, 1024] {
            for precision in [PrecisionMode::Ps, PrecisionMode::Pd] {
                let eps = precision.unit_roundoff() * 2.0;
                let acc = random_buffer(&mut rng, len, Layout::Split, precision);
                let a = random_buffer(&mut rng, len, Layout::Split, precision);
                let b = random_buffer(&mut rng, len, Layout::Split, precision);
                let s = cmul_fma(&acc, &a, &b, ExecPath::Scalar).unwrap();
                let v = cmul_fma(&acc, &a, &b, ExecPath::Vector).unwrap();
                let (mut diff2, mut norm2) = (0.0f64, 0.0f64);
                for i in 0..len {
                    let (cs, cv) = (s.get(i), v.get(i));
                    let scale = acc.get(i).norm() + a.get(i).norm() * b.get(i).norm();
                    let bound = 4.0 * eps * scale;
                    assert!(
                        (cs.re - cv.re).abs() <= bound && (cs.im - cv.im).abs() <= bound,
                        "len {len} i {i} {precision:?}: {cs} vs {cv}"
                    );
                    // Against the exact f64 per-element reference.
                    let want = acc.get(i) + a.get(i) * b.get(i);
                    let tol = match precision {
                        PrecisionMode::Ps => 1e-6,
                        PrecisionMode::Pd => 1e-15,
                    };
                    assert!((want - cs).norm() <= tol * (1.0 + want.norm()));
                    diff2 += (cs - cv).norm_sqr();
                    norm2 += cs.norm_sqr();
                }
                if len > 0 {
                    let rel = (diff2 / norm2.max(f64::MIN_POSITIVE)).sqrt();
                    let tol = match precision {
                        PrecisionMode::Ps => 1e-5,
                        PrecisionMode::Pd => 1e-12,
                    };
                    assert!(rel <= tol, "normwise path deviation {rel} len {len}");
                }
            }
        }
    }

    #[test]
    fn cmul_fma_interleaved_round_trips_layout() {
        let mut rng = StdRng::seed_from_u64(13);
        let acc = random_buffer(&mut rng, 9, Layout::Interleaved, PrecisionMode::Pd);
        let a = random_buffer(&mut rng, 9, Layout::Interleaved, PrecisionMode::Pd);
        let b = random_buffer(&mut rng, 9, Layout::Interleaved, PrecisionMode::Pd);
        let out = cmul_fma(&acc, &a, &b, ExecPath::Vector).unwrap();
        assert_eq!(out.layout(), Layout::Interleaved);
        for i in 0..9 {
            let want = acc.get(i) + a.get(i) * b.get(i);
            assert!((want - out.get(i)).norm() <= 1e-14);
        }
    }

    /// Neumaier-compensated complex dot in f64: the test oracle.
    fn compensated_dot(a: &ComplexBuffer, b: &ComplexBuffer, conj_a: bool) -> Complex64 {
        fn kahan_add(sum: &mut f64, comp: &mut f64, v: f64) {
            let t = *sum + v;
            if sum.abs() >= v.abs() {
                *comp += (*sum - t) + v;
            } else {
                *comp += (v - t) + *sum;
            }
            *sum = t;
        }
        let (mut sr, mut cr, mut si, mut ci) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..a.len() {
            let x = if conj_a { a.get(i).conj() } else { a.get(i) };
            let y = b.get(i);
            let p = x * y;
            kahan_add(&mut sr, &mut cr, p.re);
            kahan_add(&mut si, &mut ci, p.im);
        }
        Complex64::new(sr + cr, si + ci)
    }

    #[test]
    fn cdot_paths_agree_and_match_oracle() {
        let mut rng = StdRng::seed_from_u64(17);
        for &len in &[0usize, 1, 7, 720, 1024] {
            for precision in [PrecisionMode::Ps, PrecisionMode::Pd] {
                for conj_a in [false, true] {
                    let a = random_buffer(&mut rng, len, Layout::Split, precision);
                    let b = random_buffer(&mut rng, len, Layout::Split, precision);
                    let s = cdot(&a, &b, conj_a, ExecPath::Scalar).unwrap();
                    let v = cdot(&a, &b, conj_a, ExecPath::Vector).unwrap();
                    let oracle = compensated_dot(&a, &b, conj_a);
                    let scale = 1.0 + oracle.norm();
                    let tol = match precision {
                        PrecisionMode::Ps => 1e-5,
                        PrecisionMode::Pd => 1e-12,
                    };
                    assert!((s - v).norm() <= tol * scale, "paths len {len} {precision:?}");
                    assert!((s - oracle).norm() <= tol * scale, "oracle len {len}");
                }
            }
        }
    }

    #[test]
    fn cdot_conjugation_identity() {
        let mut rng = StdRng::seed_from_u64(19);
        let a = random_buffer(&mut rng, 33, Layout::Split, PrecisionMode::Pd);
        let b = random_buffer(&mut rng, 33, Layout::Split, PrecisionMode::Pd);
        // conj(sum conj(a) b) == sum conj(b) a
        let lhs = cdot(&a, &b, true, ExecPath::Scalar).unwrap().conj();
        let rhs = cdot(&b, &a, true, ExecPath::Scalar).unwrap();
        assert!((lhs - rhs).norm() <= 1e-13);
        // Self inner product is the squared norm.
        let n = cdot(&a, &a, true, ExecPath::Vector).unwrap();
        assert!(n.re > 0.0 && n.im.abs() <= 1e-12 * n.re);
    }

    #[test]
    fn gram_update_hermitian_and_matches_reference() {
        let mut rng = StdRng::seed_from_u64(23);
        for &(nr, nt) in &[(1usize, 1usize), (2, 2), (4, 4), (4, 2), (8, 8)] {
            for precision in [PrecisionMode::Ps, PrecisionMode::Pd] {
                for path in [ExecPath::Scalar, ExecPath::Vector] {
                    let h = CMatrix::from_fn(nr, nt, precision, |_, _| {
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                    });
                    let sigma2 = 0.3;
                    let r = gram_update(&h, sigma2, path).unwrap();
                    assert!(r.is_hermitian());
                    r.check_hermitian(0.0).unwrap();
                    let tol = match precision {
                        PrecisionMode::Ps => 1e-5,
                        PrecisionMode::Pd => 1e-13,
                    };
                    for i in 0..nr {
                        let d = r.get(i, i);
                        assert_eq!(d.im, 0.0);
                        assert!(d.re >= sigma2 - tol);
                        for j in 0..nr {
                            let mut want = Complex64::new(0.0, 0.0);
                            for t in 0..nt {
                                want += h.get(i, t) * h.get(j, t).conj();
                            }
                            if i == j {
                                want += sigma2;
                            }
                            assert!(
                                (want - r.get(i, j)).norm() <= tol * (1.0 + want.norm()),
                                "({i},{j}) {path:?} {precision:?}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn gram_update_identity_channel() {
        let h = CMatrix::identity(3, PrecisionMode::Pd);
        let r = gram_update(&h, 0.0, ExecPath::Vector).unwrap();
        assert!(r.frobenius_distance(&CMatrix::identity(3, PrecisionMode::Pd)).unwrap() == 0.0);
    }

    #[test]
    fn gram_update_rejects_bad_noise() {
        let h = CMatrix::identity(2, PrecisionMode::Pd);
        assert!(gram_update(&h, -1.0, ExecPath::Scalar).is_err());
        assert!(gram_update(&h, f64::NAN, ExecPath::Scalar).is_err());
    }

    #[test]
    fn timed_captures_report() {
        let ((), report) = timed(42, ExecPath::Scalar, || {
            std::hint::black_box(());
        });
        assert_eq!(report.elements_processed, 42);
        assert_eq!(report.path_used, ExecPath::Scalar);
    }

    #[test]
    fn vector_path_runs_to_completion_regardless_of_host() {
        // On hosts without AVX2+FMA the Vector path must degrade to the
        // scalar loop and still produce correct results.
        let a = ComplexBuffer::from_complex(
            &[Complex64::new(1.0, 2.0), Complex64::new(3.0, -4.0)],
            Layout::Split,
            PrecisionMode::Pd,
            64,
        )
        .unwrap();
        let out = vadd(&a, &a, ExecPath::Vector).unwrap();
        assert_eq!(out.get(1), Complex64::new(6.0, -8.0));
        let caps = capability_query();
        // The report of what actually ran is the caps descriptor.
        assert_eq!(caps.native, engaged(ExecPath::Vector));
        assert!(!engaged(ExecPath::Scalar));
    }
}
