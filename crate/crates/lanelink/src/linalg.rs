//! Pivoted LU factorization, triangular substitution, and inversion.
//!
//! The four stages of a dense solve — factorize, forward-substitute,
//! backward-substitute, assemble — are separate functions so each is
//! independently timeable, and all of them run under either [`ExecPath`].
//!
//! Internally everything is written as a batched pass over `batch` packed
//! matrices sharing one buffer (the public single-matrix ops use
//! `batch == 1`); the per-subcarrier detector reuses the same passes at
//! full batch. Substitution keeps right-hand-side blocks row-major so the
//! RHS-column axis is the contiguous vector axis: a single triangular
//! solve has a sequential dependency chain, but the row AXPYs across `k`
//! columns vectorize.
//!
//! For matrices whose rows part-fill a vector register (a 4×4
//! single-precision row is half of an 8-lane register), the `_packed`
//! batch variants interleave `g = lanes/n` matrices per register row so
//! the same row operations run at full width; see the grouped passes
//! below.
//!
//! Numerical choices:
//!
//! * Partial pivoting by largest squared modulus per column (no square
//!   roots in the scan).
//! * Scale-invariant singularity guard: a pivot fails when its modulus
//!   drops below `16 · unit_roundoff · max|a[i][j]|`.
//! * One complex reciprocal per pivot; eliminations and diagonal scaling
//!   are multiplies, on both paths.

use std::time::Instant;

use num_traits::Float;
use serde::Serialize;

use crate::buffer::{ComplexBuffer, Layout, PrecisionMode};
use crate::component::Component;
use crate::error::{Error, Result};
use crate::kernels::vec::{Packed, Sc, V};
use crate::kernels::{body, engaged, ExecPath};
use crate::matrix::CMatrix;

/// Packed LU factors of a permuted square matrix.
///
/// `lu_packed` stores `L` strictly below the diagonal (unit diagonal
/// implicit) and `U` on and above it. `perm` maps output row `i` to the
/// source row it came from, so `(P·A)[i] == A[perm[i]]`.
pub struct LuFactorization {
    lu: CMatrix,
    perm: Vec<usize>,
    swaps: usize,
}

impl LuFactorization {
    pub fn n(&self) -> usize {
        self.lu.rows()
    }

    pub fn precision(&self) -> PrecisionMode {
        self.lu.precision()
    }

    /// L strictly-lower (implicit unit diagonal), U upper, in one matrix.
    pub fn lu_packed(&self) -> &CMatrix {
        &self.lu
    }

    /// Row mapping: permuted row `i` came from source row `perm()[i]`.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Number of row exchanges performed.
    pub fn swaps(&self) -> usize {
        self.swaps
    }

    /// Materializes L with its unit diagonal.
    pub fn unpack_l(&self) -> CMatrix {
        let n = self.n();
        CMatrix::from_fn(n, n, self.precision(), |i, j| {
            use num_complex::Complex64;
            match i.cmp(&j) {
                std::cmp::Ordering::Greater => self.lu.get(i, j),
                std::cmp::Ordering::Equal => Complex64::new(1.0, 0.0),
                std::cmp::Ordering::Less => Complex64::new(0.0, 0.0),
            }
        })
    }

    /// Materializes U.
    pub fn unpack_u(&self) -> CMatrix {
        let n = self.n();
        CMatrix::from_fn(n, n, self.precision(), |i, j| {
            if i <= j {
                self.lu.get(i, j)
            } else {
                num_complex::Complex64::new(0.0, 0.0)
            }
        })
    }
}

impl std::fmt::Debug for LuFactorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LuFactorization")
            .field("n", &self.n())
            .field("precision", &self.precision())
            .field("perm", &self.perm)
            .field("swaps", &self.swaps)
            .finish()
    }
}

/// Wall-clock nanoseconds per solve stage.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolveStats {
    pub factorize_ns: u64,
    pub forward_sub_ns: u64,
    pub backward_sub_ns: u64,
    pub assemble_inverse_ns: u64,
}

impl SolveStats {
    pub fn total_ns(&self) -> u64 {
        self.factorize_ns + self.forward_sub_ns + self.backward_sub_ns + self.assemble_inverse_ns
    }
}

/// Failure site of a batched factorization: (matrix index, column).
pub(crate) type PivotFailure = (usize, usize);

#[inline(always)]
fn modulus2<E: Component>(re: E, im: E) -> E {
    re * re + im * im
}

/// In-place batched factorization of `batch` packed row-major `n x n`
/// matrices. Records the swap sequence in `ipiv` (`ipiv[b*n + j]` = row
/// exchanged with `j` at step `j` of matrix `b`).
#[inline(always)]
fn lu_pass<Vx: V>(
    re: &mut [Vx::E],
    im: &mut [Vx::E],
    n: usize,
    batch: usize,
    ipiv: &mut [usize],
) -> std::result::Result<(), PivotFailure> {
    debug_assert_eq!(re.len(), batch * n * n);
    debug_assert_eq!(ipiv.len(), batch * n);
    let zero = Vx::E::default();
    for b in 0..batch {
        let mre = &mut re[b * n * n..(b + 1) * n * n];
        let mim = &mut im[b * n * n..(b + 1) * n * n];
        let piv = &mut ipiv[b * n..(b + 1) * n];

        let mut amax2 = zero;
        for idx in 0..n * n {
            let m2 = modulus2(mre[idx], mim[idx]);
            if m2 > amax2 {
                amax2 = m2;
            }
        }
        let u = <Vx::E as Component>::UNIT_ROUNDOFF;
        let eps2 = <Vx::E as Component>::from_f64(256.0 * u * u) * amax2;

        for j in 0..n {
            let mut p = j;
            let mut p2 = modulus2(mre[j * n + j], mim[j * n + j]);
            for i in j + 1..n {
                let m2 = modulus2(mre[i * n + j], mim[i * n + j]);
                if m2 > p2 {
                    p = i;
                    p2 = m2;
                }
            }
            if p2 < eps2 || p2 == zero {
                return Err((b, j));
            }
            piv[j] = p;
            if p != j {
                let (head, tail) = mre.split_at_mut(p * n);
                head[j * n..j * n + n].swap_with_slice(&mut tail[..n]);
                let (head, tail) = mim.split_at_mut(p * n);
                head[j * n..j * n + n].swap_with_slice(&mut tail[..n]);
            }

            let (dr, di) = (mre[j * n + j], mim[j * n + j]);
            // One real divide per pivot: 1/|d|^2, then conj(d) scaling.
            let r2 = modulus2(dr, di).recip();
            let (invr, invi) = (dr * r2, -(di * r2));
            for i in j + 1..n {
                let (er, ei) = (mre[i * n + j], mim[i * n + j]);
                let lr = er * invr - ei * invi;
                let li = er * invi + ei * invr;
                mre[i * n + j] = lr;
                mim[i * n + j] = li;
                if j + 1 < n {
                    let (hre, tre) = mre.split_at_mut(i * n);
                    let (him, tim) = mim.split_at_mut(i * n);
                    body::axpy::<Vx>(
                        -lr,
                        -li,
                        &hre[j * n + j + 1..j * n + n],
                        &him[j * n + j + 1..j * n + n],
                        &mut tre[j + 1..n],
                        &mut tim[j + 1..n],
                    );
                }
            }
        }
    }
    Ok(())
}

/// Batched unit-lower solve, in place on a row-major `n x k` RHS block per
/// matrix. Callers pass the RHS already row-permuted.
#[inline(always)]
fn forward_pass<Vx: V>(
    lre: &[Vx::E],
    lim: &[Vx::E],
    n: usize,
    batch: usize,
    k: usize,
    bre: &mut [Vx::E],
    bim: &mut [Vx::E],
) {
    debug_assert_eq!(lre.len(), batch * n * n);
    debug_assert_eq!(bre.len(), batch * n * k);
    for b in 0..batch {
        let moff = b * n * n;
        let rbre = &mut bre[b * n * k..(b + 1) * n * k];
        let rbim = &mut bim[b * n * k..(b + 1) * n * k];
        for i in 1..n {
            let (hre, tre) = rbre.split_at_mut(i * k);
            let (him, tim) = rbim.split_at_mut(i * k);
            for j in 0..i {
                let lr = lre[moff + i * n + j];
                let li = lim[moff + i * n + j];
                body::axpy::<Vx>(
                    -lr,
                    -li,
                    &hre[j * k..(j + 1) * k],
                    &him[j * k..(j + 1) * k],
                    &mut tre[..k],
                    &mut tim[..k],
                );
            }
        }
    }
}

/// Batched upper solve, in place on a row-major `n x k` RHS block per
/// matrix. One reciprocal per diagonal entry; row scaling is a multiply.
#[inline(always)]
fn backward_pass<Vx: V>(
    ure: &[Vx::E],
    uim: &[Vx::E],
    n: usize,
    batch: usize,
    k: usize,
    bre: &mut [Vx::E],
    bim: &mut [Vx::E],
) {
    debug_assert_eq!(ure.len(), batch * n * n);
    debug_assert_eq!(bre.len(), batch * n * k);
    for b in 0..batch {
        let moff = b * n * n;
        let rbre = &mut bre[b * n * k..(b + 1) * n * k];
        let rbim = &mut bim[b * n * k..(b + 1) * n * k];
        for j in (0..n).rev() {
            for c in j + 1..n {
                let ur = ure[moff + j * n + c];
                let ui = uim[moff + j * n + c];
                let (hre, tre) = rbre.split_at_mut(c * k);
                let (him, tim) = rbim.split_at_mut(c * k);
                body::axpy::<Vx>(
                    -ur,
                    -ui,
                    &tre[..k],
                    &tim[..k],
                    &mut hre[j * k..(j + 1) * k],
                    &mut him[j * k..(j + 1) * k],
                );
            }
            let (dr, di) = (ure[moff + j * n + j], uim[moff + j * n + j]);
            let r2 = modulus2(dr, di).recip();
            let (invr, invi) = (dr * r2, -(di * r2));
            body::scale::<Vx>(
                invr,
                invi,
                &mut rbre[j * k..(j + 1) * k],
                &mut rbim[j * k..(j + 1) * k],
            );
        }
    }
}

// ---------------------------------------------------------------------------
// Register-grouped batch passes.
//
// `g = LANES/n` matrices share each register row: member `m` of group `gi`
// stores element `(i, j)` at `gi·n·w + i·w + m·n + j`, with `w = g·n` equal
// to the register width. Row updates then run one full-width FMA per
// plane regardless of how small `n` is, while everything inherently serial
// — pivot scans, row swaps, multiplier and reciprocal formation — stays
// scalar per member, preserving the ungrouped pass's pivot decisions and
// rounding exactly. The shared row update masks the pivot row to zero in
// the already-eliminated columns, so stored `L` entries ride through as
// `x − l·0 = x`.
//
// Groups are formed by the caller, padding the tail group with identity
// matrices (and zero right-hand sides) when the batch is not a multiple
// of `g`. `g = 1` is dispatched back to the plain passes above.

/// Grouped variant of [`lu_pass`]: factorizes `groups · g` matrices stored
/// `g` per register row. `ipiv` is indexed by flat member (`gi·g + m`), as
/// is the failure site.
#[inline(always)]
fn lu_pass_packed<P: Packed>(
    re: &mut [P::E],
    im: &mut [P::E],
    n: usize,
    g: usize,
    groups: usize,
    ipiv: &mut [usize],
) -> std::result::Result<(), PivotFailure> {
    let w = g * n;
    debug_assert_eq!(w, P::LANES);
    debug_assert!(g >= 2);
    debug_assert_eq!(re.len(), groups * n * w);
    debug_assert_eq!(ipiv.len(), groups * g * n);
    let zero = P::E::default();

    // Lane mask per elimination step: step j keeps lanes whose within-member
    // column (lane mod n) lies past the pivot column.
    let mut keep = [[P::Bits::default(); 8]; 8];
    for (j, row) in keep.iter_mut().enumerate().take(n.saturating_sub(1)) {
        for (lane, bits) in row.iter_mut().enumerate().take(w) {
            if lane % n > j {
                *bits = P::KEEP;
            }
        }
    }

    let mut invr = [zero; 8];
    let mut invi = [zero; 8];
    let mut lr = [zero; 8];
    let mut li = [zero; 8];
    for gi in 0..groups {
        let base = gi * n * w;
        let mre = &mut re[base..base + n * w];
        let mim = &mut im[base..base + n * w];

        let mut eps2 = [zero; 8];
        for (m, eps) in eps2.iter_mut().enumerate().take(g) {
            let mut amax2 = zero;
            for i in 0..n {
                for c in 0..n {
                    let m2 = modulus2(mre[i * w + m * n + c], mim[i * w + m * n + c]);
                    if m2 > amax2 {
                        amax2 = m2;
                    }
                }
            }
            let u = <P::E as Component>::UNIT_ROUNDOFF;
            *eps = <P::E as Component>::from_f64(256.0 * u * u) * amax2;
        }

        for j in 0..n {
            for m in 0..g {
                let col = m * n + j;
                let mut p = j;
                let mut p2 = modulus2(mre[j * w + col], mim[j * w + col]);
                for i in j + 1..n {
                    let m2 = modulus2(mre[i * w + col], mim[i * w + col]);
                    if m2 > p2 {
                        p = i;
                        p2 = m2;
                    }
                }
                if p2 < eps2[m] || p2 == zero {
                    return Err((gi * g + m, j));
                }
                ipiv[(gi * g + m) * n + j] = p;
                if p != j {
                    for c in 0..n {
                        mre.swap(j * w + m * n + c, p * w + m * n + c);
                        mim.swap(j * w + m * n + c, p * w + m * n + c);
                    }
                }
                let (dr, di) = (mre[j * w + col], mim[j * w + col]);
                // One real divide per pivot: 1/|d|^2, then conj(d) scaling.
                let r2 = modulus2(dr, di).recip();
                invr[m] = dr * r2;
                invi[m] = -(di * r2);
            }
            if j + 1 == n {
                break;
            }
            unsafe {
                let mask = P::load_bits(keep[j].as_ptr());
                let vjr = P::load(mre.as_ptr().add(j * w)).and(mask);
                let vji = P::load(mim.as_ptr().add(j * w)).and(mask);
                for i in j + 1..n {
                    for m in 0..g {
                        let (er, ei) = (mre[i * w + m * n + j], mim[i * w + m * n + j]);
                        lr[m] = er * invr[m] - ei * invi[m];
                        li[m] = er * invi[m] + ei * invr[m];
                    }
                    let vlr = P::splat_groups(lr.as_ptr(), g);
                    let vli = P::splat_groups(li.as_ptr(), g);
                    let pre = mre.as_mut_ptr().add(i * w);
                    let pim = mim.as_mut_ptr().add(i * w);
                    let (vir, vii) = (P::load(pre), P::load(pim));
                    vli.mul_add(vji, vlr.neg_mul_add(vjr, vir)).store(pre);
                    vli.neg_mul_add(vjr, vlr.neg_mul_add(vji, vii)).store(pim);
                    for m in 0..g {
                        mre[i * w + m * n + j] = lr[m];
                        mim[i * w + m * n + j] = li[m];
                    }
                }
            }
        }
    }
    Ok(())
}

/// Grouped variant of [`forward_pass`]: the RHS shares the grouped layout
/// with member blocks `n` columns wide, so rows span exactly one register
/// and no masking is needed.
#[inline(always)]
fn forward_pass_packed<P: Packed>(
    lre: &[P::E],
    lim: &[P::E],
    n: usize,
    g: usize,
    groups: usize,
    bre: &mut [P::E],
    bim: &mut [P::E],
) {
    let w = g * n;
    debug_assert_eq!(w, P::LANES);
    debug_assert_eq!(lre.len(), groups * n * w);
    debug_assert_eq!(bre.len(), groups * n * w);
    let zero = P::E::default();
    let mut lr = [zero; 8];
    let mut li = [zero; 8];
    for gi in 0..groups {
        let base = gi * n * w;
        for i in 1..n {
            for j in 0..i {
                for m in 0..g {
                    lr[m] = lre[base + i * w + m * n + j];
                    li[m] = lim[base + i * w + m * n + j];
                }
                unsafe {
                    let vlr = P::splat_groups(lr.as_ptr(), g);
                    let vli = P::splat_groups(li.as_ptr(), g);
                    let vjr = P::load(bre.as_ptr().add(base + j * w));
                    let vji = P::load(bim.as_ptr().add(base + j * w));
                    let pre = bre.as_mut_ptr().add(base + i * w);
                    let pim = bim.as_mut_ptr().add(base + i * w);
                    let (vir, vii) = (P::load(pre), P::load(pim));
                    vli.mul_add(vji, vlr.neg_mul_add(vjr, vir)).store(pre);
                    vli.neg_mul_add(vjr, vlr.neg_mul_add(vji, vii)).store(pim);
                }
            }
        }
    }
}

/// Grouped variant of [`backward_pass`], same RHS layout as
/// [`forward_pass_packed`].
#[inline(always)]
fn backward_pass_packed<P: Packed>(
    ure: &[P::E],
    uim: &[P::E],
    n: usize,
    g: usize,
    groups: usize,
    bre: &mut [P::E],
    bim: &mut [P::E],
) {
    let w = g * n;
    debug_assert_eq!(w, P::LANES);
    debug_assert_eq!(ure.len(), groups * n * w);
    debug_assert_eq!(bre.len(), groups * n * w);
    let zero = P::E::default();
    let mut ur = [zero; 8];
    let mut ui = [zero; 8];
    for gi in 0..groups {
        let base = gi * n * w;
        for j in (0..n).rev() {
            for c in j + 1..n {
                for m in 0..g {
                    ur[m] = ure[base + j * w + m * n + c];
                    ui[m] = uim[base + j * w + m * n + c];
                }
                unsafe {
                    let vur = P::splat_groups(ur.as_ptr(), g);
                    let vui = P::splat_groups(ui.as_ptr(), g);
                    let vcr = P::load(bre.as_ptr().add(base + c * w));
                    let vci = P::load(bim.as_ptr().add(base + c * w));
                    let pre = bre.as_mut_ptr().add(base + j * w);
                    let pim = bim.as_mut_ptr().add(base + j * w);
                    let (vjr, vji) = (P::load(pre), P::load(pim));
                    vui.mul_add(vci, vur.neg_mul_add(vcr, vjr)).store(pre);
                    vui.neg_mul_add(vcr, vur.neg_mul_add(vci, vji)).store(pim);
                }
            }
            for m in 0..g {
                let d = base + j * w + m * n + j;
                let (dr, di) = (ure[d], uim[d]);
                let r2 = modulus2(dr, di).recip();
                ur[m] = dr * r2;
                ui[m] = -(di * r2);
            }
            unsafe {
                let var = P::splat_groups(ur.as_ptr(), g);
                let vai = P::splat_groups(ui.as_ptr(), g);
                let pre = bre.as_mut_ptr().add(base + j * w);
                let pim = bim.as_mut_ptr().add(base + j * w);
                let (vr, vi) = (P::load(pre), P::load(pim));
                vai.neg_mul_add(vi, vr.mul(var)).store(pre);
                vai.mul_add(vr, vi.mul(var)).store(pim);
            }
        }
    }
}

#[cfg(target_arch = "x86_64")]
mod avx {
    //! See `kernels::avx` for the safety contract.
    use super::*;
    use crate::kernels::vec::{F32x8, F64x4};

    #[target_feature(enable = "avx2,fma")]
    pub(super) unsafe fn lu_f32(
        re: &mut [f32],
        im: &mut [f32],
        n: usize,
        batch: usize,
        ipiv: &mut [usize],
    ) -> std::result::Result<(), PivotFailure> {
        lu_pass::<F32x8>(re, im, n, batch, ipiv)
    }

    #[target_feature(enable = "avx2,fma")]
    pub(super) unsafe fn lu_f64(
        re: &mut [f64],
        im: &mut [f64],
        n: usize,
        batch: usize,
        ipiv: &mut [usize],
    ) -> std::result::Result<(), PivotFailure> {
        lu_pass::<F64x4>(re, im, n, batch, ipiv)
    }

    #[target_feature(enable = "avx2,fma")]
    pub(super) unsafe fn forward_f32(
        lre: &[f32],
        lim: &[f32],
        n: usize,
        batch: usize,
        k: usize,
        bre: &mut [f32],
        bim: &mut [f32],
    ) {
        forward_pass::<F32x8>(lre, lim, n, batch, k, bre, bim)
    }

    #[target_feature(enable = "avx2,fma")]
    pub(super) unsafe fn forward_f64(
        lre: &[f64],
        lim: &[f64],
        n: usize,
        batch: usize,
        k: usize,
        bre: &mut [f64],
        bim: &mut [f64],
    ) {
        forward_pass::<F64x4>(lre, lim, n, batch, k, bre, bim)
    }

    #[target_feature(enable = "avx2,fma")]
    pub(super) unsafe fn backward_f32(
        ure: &[f32],
        uim: &[f32],
        n: usize,
        batch: usize,
        k: usize,
        bre: &mut [f32],
        bim: &mut [f32],
    ) {
        backward_pass::<F32x8>(ure, uim, n, batch, k, bre, bim)
    }

    #[target_feature(enable = "avx2,fma")]
    pub(super) unsafe fn backward_f64(
        ure: &[f64],
        uim: &[f64],
        n: usize,
        batch: usize,
        k: usize,
        bre: &mut [f64],
        bim: &mut [f64],
    ) {
        backward_pass::<F64x4>(ure, uim, n, batch, k, bre, bim)
    }

    #[target_feature(enable = "avx2,fma")]
    pub(super) unsafe fn lu_packed_f32(
        re: &mut [f32],
        im: &mut [f32],
        n: usize,
        g: usize,
        groups: usize,
        ipiv: &mut [usize],
    ) -> std::result::Result<(), PivotFailure> {
        lu_pass_packed::<F32x8>(re, im, n, g, groups, ipiv)
    }

    #[target_feature(enable = "avx2,fma")]
    pub(super) unsafe fn lu_packed_f64(
        re: &mut [f64],
        im: &mut [f64],
        n: usize,
        g: usize,
        groups: usize,
        ipiv: &mut [usize],
    ) -> std::result::Result<(), PivotFailure> {
        lu_pass_packed::<F64x4>(re, im, n, g, groups, ipiv)
    }

    #[target_feature(enable = "avx2,fma")]
    pub(super) unsafe fn forward_packed_f32(
        lre: &[f32],
        lim: &[f32],
        n: usize,
        g: usize,
        groups: usize,
        bre: &mut [f32],
        bim: &mut [f32],
    ) {
        forward_pass_packed::<F32x8>(lre, lim, n, g, groups, bre, bim)
    }

    #[target_feature(enable = "avx2,fma")]
    pub(super) unsafe fn forward_packed_f64(
        lre: &[f64],
        lim: &[f64],
        n: usize,
        g: usize,
        groups: usize,
        bre: &mut [f64],
        bim: &mut [f64],
    ) {
        forward_pass_packed::<F64x4>(lre, lim, n, g, groups, bre, bim)
    }

    #[target_feature(enable = "avx2,fma")]
    pub(super) unsafe fn backward_packed_f32(
        ure: &[f32],
        uim: &[f32],
        n: usize,
        g: usize,
        groups: usize,
        bre: &mut [f32],
        bim: &mut [f32],
    ) {
        backward_pass_packed::<F32x8>(ure, uim, n, g, groups, bre, bim)
    }

    #[target_feature(enable = "avx2,fma")]
    pub(super) unsafe fn backward_packed_f64(
        ure: &[f64],
        uim: &[f64],
        n: usize,
        g: usize,
        groups: usize,
        bre: &mut [f64],
        bim: &mut [f64],
    ) {
        backward_pass_packed::<F64x4>(ure, uim, n, g, groups, bre, bim)
    }
}

/// Factorizes `batch` packed matrices in `buf` (split layout) in place.
pub(crate) fn lu_batch(
    buf: &mut ComplexBuffer,
    n: usize,
    batch: usize,
    ipiv: &mut [usize],
    path: ExecPath,
) -> std::result::Result<(), PivotFailure> {
    let run_avx = engaged(path);
    match buf.precision() {
        #[cfg(target_arch = "x86_64")]
        PrecisionMode::Ps if run_avx => {
            let (re, im) = buf.planes_mut::<f32>();
            unsafe { avx::lu_f32(re, im, n, batch, ipiv) }
        }
        PrecisionMode::Ps => {
            let (re, im) = buf.planes_mut::<f32>();
            lu_pass::<Sc<f32>>(re, im, n, batch, ipiv)
        }
        #[cfg(target_arch = "x86_64")]
        PrecisionMode::Pd if run_avx => {
            let (re, im) = buf.planes_mut::<f64>();
            unsafe { avx::lu_f64(re, im, n, batch, ipiv) }
        }
        PrecisionMode::Pd => {
            let (re, im) = buf.planes_mut::<f64>();
            lu_pass::<Sc<f64>>(re, im, n, batch, ipiv)
        }
    }
}

/// Applies the batched unit-lower solve to a pre-permuted RHS block.
pub(crate) fn forward_batch(
    lu: &ComplexBuffer,
    n: usize,
    batch: usize,
    k: usize,
    rhs: &mut ComplexBuffer,
    path: ExecPath,
) {
    let run_avx = engaged(path);
    match lu.precision() {
        #[cfg(target_arch = "x86_64")]
        PrecisionMode::Ps if run_avx => {
            let (lre, lim) = lu.planes::<f32>();
            let (bre, bim) = rhs.planes_mut::<f32>();
            unsafe { avx::forward_f32(lre, lim, n, batch, k, bre, bim) }
        }
        PrecisionMode::Ps => {
            let (lre, lim) = lu.planes::<f32>();
            let (bre, bim) = rhs.planes_mut::<f32>();
            forward_pass::<Sc<f32>>(lre, lim, n, batch, k, bre, bim)
        }
        #[cfg(target_arch = "x86_64")]
        PrecisionMode::Pd if run_avx => {
            let (lre, lim) = lu.planes::<f64>();
            let (bre, bim) = rhs.planes_mut::<f64>();
            unsafe { avx::forward_f64(lre, lim, n, batch, k, bre, bim) }
        }
        PrecisionMode::Pd => {
            let (lre, lim) = lu.planes::<f64>();
            let (bre, bim) = rhs.planes_mut::<f64>();
            forward_pass::<Sc<f64>>(lre, lim, n, batch, k, bre, bim)
        }
    }
}

/// Applies the batched upper solve in place.
pub(crate) fn backward_batch(
    lu: &ComplexBuffer,
    n: usize,
    batch: usize,
    k: usize,
    rhs: &mut ComplexBuffer,
    path: ExecPath,
) {
    let run_avx = engaged(path);
    match lu.precision() {
        #[cfg(target_arch = "x86_64")]
        PrecisionMode::Ps if run_avx => {
            let (ure, uim) = lu.planes::<f32>();
            let (bre, bim) = rhs.planes_mut::<f32>();
            unsafe { avx::backward_f32(ure, uim, n, batch, k, bre, bim) }
        }
        PrecisionMode::Ps => {
            let (ure, uim) = lu.planes::<f32>();
            let (bre, bim) = rhs.planes_mut::<f32>();
            backward_pass::<Sc<f32>>(ure, uim, n, batch, k, bre, bim)
        }
        #[cfg(target_arch = "x86_64")]
        PrecisionMode::Pd if run_avx => {
            let (ure, uim) = lu.planes::<f64>();
            let (bre, bim) = rhs.planes_mut::<f64>();
            unsafe { avx::backward_f64(ure, uim, n, batch, k, bre, bim) }
        }
        PrecisionMode::Pd => {
            let (ure, uim) = lu.planes::<f64>();
            let (bre, bim) = rhs.planes_mut::<f64>();
            backward_pass::<Sc<f64>>(ure, uim, n, batch, k, bre, bim)
        }
    }
}

/// Factorizes `groups` register rows of `g` grouped matrices each, in
/// place. `g == 1` dispatches to [`lu_batch`] over the plain layout;
/// `g > 1` is only ever selected alongside an engaged vector path, with
/// `g·n` matching the register width.
pub(crate) fn lu_batch_packed(
    buf: &mut ComplexBuffer,
    n: usize,
    g: usize,
    groups: usize,
    ipiv: &mut [usize],
    path: ExecPath,
) -> std::result::Result<(), PivotFailure> {
    if g == 1 {
        return lu_batch(buf, n, groups, ipiv, path);
    }
    debug_assert!(engaged(path));
    #[cfg(not(target_arch = "x86_64"))]
    unreachable!("grouping is only selected with the x86_64 vector path");
    #[cfg(target_arch = "x86_64")]
    match buf.precision() {
        PrecisionMode::Ps => {
            let (re, im) = buf.planes_mut::<f32>();
            unsafe { avx::lu_packed_f32(re, im, n, g, groups, ipiv) }
        }
        PrecisionMode::Pd => {
            let (re, im) = buf.planes_mut::<f64>();
            unsafe { avx::lu_packed_f64(re, im, n, g, groups, ipiv) }
        }
    }
}

/// Grouped unit-lower solve; `k` is the RHS column count for the `g == 1`
/// fallback (grouped members always carry `n` columns).
pub(crate) fn forward_batch_packed(
    lu: &ComplexBuffer,
    n: usize,
    g: usize,
    groups: usize,
    k: usize,
    rhs: &mut ComplexBuffer,
    path: ExecPath,
) {
    if g == 1 {
        return forward_batch(lu, n, groups, k, rhs, path);
    }
    debug_assert!(engaged(path));
    debug_assert_eq!(k, n);
    #[cfg(not(target_arch = "x86_64"))]
    unreachable!("grouping is only selected with the x86_64 vector path");
    #[cfg(target_arch = "x86_64")]
    match lu.precision() {
        PrecisionMode::Ps => {
            let (lre, lim) = lu.planes::<f32>();
            let (bre, bim) = rhs.planes_mut::<f32>();
            unsafe { avx::forward_packed_f32(lre, lim, n, g, groups, bre, bim) }
        }
        PrecisionMode::Pd => {
            let (lre, lim) = lu.planes::<f64>();
            let (bre, bim) = rhs.planes_mut::<f64>();
            unsafe { avx::forward_packed_f64(lre, lim, n, g, groups, bre, bim) }
        }
    }
}

/// Grouped upper solve; same dispatch contract as [`forward_batch_packed`].
pub(crate) fn backward_batch_packed(
    lu: &ComplexBuffer,
    n: usize,
    g: usize,
    groups: usize,
    k: usize,
    rhs: &mut ComplexBuffer,
    path: ExecPath,
) {
    if g == 1 {
        return backward_batch(lu, n, groups, k, rhs, path);
    }
    debug_assert!(engaged(path));
    debug_assert_eq!(k, n);
    #[cfg(not(target_arch = "x86_64"))]
    unreachable!("grouping is only selected with the x86_64 vector path");
    #[cfg(target_arch = "x86_64")]
    match lu.precision() {
        PrecisionMode::Ps => {
            let (ure, uim) = lu.planes::<f32>();
            let (bre, bim) = rhs.planes_mut::<f32>();
            unsafe { avx::backward_packed_f32(ure, uim, n, g, groups, bre, bim) }
        }
        PrecisionMode::Pd => {
            let (ure, uim) = lu.planes::<f64>();
            let (bre, bim) = rhs.planes_mut::<f64>();
            unsafe { avx::backward_packed_f64(ure, uim, n, g, groups, bre, bim) }
        }
    }
}

fn check_square(a: &CMatrix) -> Result<usize> {
    if a.rows() != a.cols() {
        return Err(Error::shape(format!(
            "expected a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if a.rows() == 0 {
        return Err(Error::invalid("matrix must be at least 1x1"));
    }
    Ok(a.rows())
}

fn check_finite(a: &CMatrix) -> Result<()> {
    let bad = match a.precision() {
        PrecisionMode::Ps => a.buffer().components::<f32>().iter().any(|v| !v.is_finite()),
        PrecisionMode::Pd => a.buffer().components::<f64>().iter().any(|v| !v.is_finite()),
    };
    if bad {
        return Err(Error::invalid("matrix contains non-finite entries"));
    }
    Ok(())
}

/// Factorizes `P·A = L·U` with partial pivoting by largest modulus.
pub fn lu_factor(a: &CMatrix, path: ExecPath) -> Result<LuFactorization> {
    let n = check_square(a)?;
    check_finite(a)?;
    let mut work = a.clone();
    work.set_hermitian(false);
    let mut ipiv = vec![0usize; n];
    lu_batch(work.buffer_mut(), n, 1, &mut ipiv, path).map_err(|(_, column)| Error::Singular {
        column,
        subcarrier: None,
    })?;

    let mut perm: Vec<usize> = (0..n).collect();
    let mut swaps = 0;
    for (j, &p) in ipiv.iter().enumerate() {
        if p != j {
            perm.swap(j, p);
            swaps += 1;
        }
    }
    Ok(LuFactorization {
        lu: work,
        perm,
        swaps,
    })
}

fn check_rhs(f: &LuFactorization, b: &ComplexBuffer) -> Result<()> {
    if b.len() != f.n() {
        return Err(Error::shape(format!(
            "right-hand side length {} does not match system size {}",
            b.len(),
            f.n()
        )));
    }
    if b.precision() != f.precision() {
        return Err(Error::shape(format!(
            "right-hand side precision {:?} does not match factors {:?}",
            b.precision(),
            f.precision()
        )));
    }
    Ok(())
}

/// Solves `L·z = P·b` (unit-diagonal L).
pub fn forward_sub(f: &LuFactorization, b: &ComplexBuffer, path: ExecPath) -> Result<ComplexBuffer> {
    check_rhs(f, b)?;
    let n = f.n();
    let mut z = ComplexBuffer::zeros(n, b.precision());
    for i in 0..n {
        z.set(i, b.get(f.perm[i]));
    }
    forward_batch(f.lu.buffer(), n, 1, 1, &mut z, path);
    Ok(if b.layout() == Layout::Interleaved {
        z.relayout(Layout::Interleaved)
    } else {
        z
    })
}

/// Solves `U·x = z`.
pub fn backward_sub(
    f: &LuFactorization,
    z: &ComplexBuffer,
    path: ExecPath,
) -> Result<ComplexBuffer> {
    check_rhs(f, z)?;
    let n = f.n();
    let mut x = if z.layout() == Layout::Split {
        z.clone()
    } else {
        z.relayout(Layout::Split)
    };
    backward_batch(f.lu.buffer(), n, 1, 1, &mut x, path);
    Ok(if z.layout() == Layout::Interleaved {
        x.relayout(Layout::Interleaved)
    } else {
        x
    })
}

/// Generic row gather used to apply `P` while copying a RHS block.
fn gather_rows<T: Component>(
    src_re: &[T],
    src_im: &[T],
    perm: &[usize],
    k: usize,
    dst_re: &mut [T],
    dst_im: &mut [T],
) {
    for (i, &p) in perm.iter().enumerate() {
        dst_re[i * k..(i + 1) * k].copy_from_slice(&src_re[p * k..(p + 1) * k]);
        dst_im[i * k..(i + 1) * k].copy_from_slice(&src_im[p * k..(p + 1) * k]);
    }
}

fn permuted_copy(b: &CMatrix, perm: &[usize]) -> Result<ComplexBuffer> {
    let k = b.cols();
    let mut rhs = ComplexBuffer::zeros(b.rows() * k, b.precision());
    match b.precision() {
        PrecisionMode::Ps => {
            let (sre, sim) = b.planes::<f32>();
            let (dre, dim) = rhs.planes_mut::<f32>();
            gather_rows(sre, sim, perm, k, dre, dim);
        }
        PrecisionMode::Pd => {
            let (sre, sim) = b.planes::<f64>();
            let (dre, dim) = rhs.planes_mut::<f64>();
            gather_rows(sre, sim, perm, k, dre, dim);
        }
    }
    Ok(rhs)
}

/// Inverts `a` via one factorization and `n` unit-vector column solves,
/// blocked across columns. Returns the inverse and per-stage times.
pub fn invert(a: &CMatrix, path: ExecPath) -> Result<(CMatrix, SolveStats)> {
    let n = check_square(a)?;

    let t = Instant::now();
    let f = lu_factor(a, path)?;
    let factorize_ns = t.elapsed().as_nanos() as u64;

    // P·I directly: row i of the permuted identity is e[perm[i]].
    let t = Instant::now();
    let mut rhs = ComplexBuffer::zeros(n * n, a.precision());
    for i in 0..n {
        rhs.set(i * n + f.perm[i], num_complex::Complex64::new(1.0, 0.0));
    }
    forward_batch(f.lu.buffer(), n, 1, n, &mut rhs, path);
    let forward_sub_ns = t.elapsed().as_nanos() as u64;

    let t = Instant::now();
    backward_batch(f.lu.buffer(), n, 1, n, &mut rhs, path);
    let backward_sub_ns = t.elapsed().as_nanos() as u64;

    let t = Instant::now();
    let mut out = CMatrix::zeros(n, n, a.precision());
    match a.precision() {
        PrecisionMode::Ps => out
            .buffer_mut()
            .components_mut::<f32>()
            .copy_from_slice(rhs.components::<f32>()),
        PrecisionMode::Pd => out
            .buffer_mut()
            .components_mut::<f64>()
            .copy_from_slice(rhs.components::<f64>()),
    }
    let assemble_inverse_ns = t.elapsed().as_nanos() as u64;

    Ok((
        out,
        SolveStats {
            factorize_ns,
            forward_sub_ns,
            backward_sub_ns,
            assemble_inverse_ns,
        },
    ))
}

/// Solves `A·X = B` by one factorization and substitution over all `k`
/// columns of `B` at once.
pub fn solve(a: &CMatrix, b: &CMatrix, path: ExecPath) -> Result<CMatrix> {
    let n = check_square(a)?;
    if b.rows() != n {
        return Err(Error::shape(format!(
            "right-hand side has {} rows, system is {n}x{n}",
            b.rows()
        )));
    }
    if b.precision() != a.precision() {
        return Err(Error::shape(format!(
            "right-hand side precision {:?} does not match system {:?}",
            b.precision(),
            a.precision()
        )));
    }
    let k = b.cols();
    let f = lu_factor(a, path)?;
    let mut rhs = permuted_copy(b, &f.perm)?;
    forward_batch(f.lu.buffer(), n, 1, k, &mut rhs, path);
    backward_batch(f.lu.buffer(), n, 1, k, &mut rhs, path);
    CMatrix::from_buffer(rhs, n, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_matrix(rng: &mut StdRng, n: usize, precision: PrecisionMode) -> CMatrix {
        // Unit complex Gaussian entries with a regularized diagonal keeps
        // the condition number modest.
        let mut vals = vec![];
        for _ in 0..n * n {
            let re: f64 = rng.sample(rand_distr::StandardNormal);
            let im: f64 = rng.sample(rand_distr::StandardNormal);
            vals.push(Complex64::new(re, im) / 2f64.sqrt());
        }
        CMatrix::from_fn(n, n, precision, |i, j| {
            let mut v = vals[i * n + j];
            if i == j {
                v += 2.0 * n as f64;
            }
            v
        })
    }

    fn permuted(a: &CMatrix, perm: &[usize]) -> CMatrix {
        CMatrix::from_fn(a.rows(), a.cols(), a.precision(), |i, j| a.get(perm[i], j))
    }

    #[test]
    fn identity_factors_trivially() {
        let a = CMatrix::identity(4, PrecisionMode::Pd);
        let f = lu_factor(&a, ExecPath::Scalar).unwrap();
        assert_eq!(f.perm(), &[0, 1, 2, 3]);
        assert_eq!(f.swaps(), 0);
        assert_eq!(f.unpack_l().frobenius_distance(&a).unwrap(), 0.0);
        assert_eq!(f.unpack_u().frobenius_distance(&a).unwrap(), 0.0);
    }

    #[test]
    fn diagonal_matrix_keeps_its_diagonal() {
        let a = CMatrix::from_fn(2, 2, PrecisionMode::Pd, |i, j| {
            if i == j {
                Complex64::new(2.0 * (i + 1) as f64, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let f = lu_factor(&a, ExecPath::Vector).unwrap();
        assert_eq!(f.unpack_u().get(0, 0), Complex64::new(2.0, 0.0));
        assert_eq!(f.unpack_u().get(1, 1), Complex64::new(4.0, 0.0));
        assert_eq!(f.swaps(), 0);
    }

    #[test]
    fn swapped_rows_are_recorded() {
        let a = CMatrix::from_fn(2, 2, PrecisionMode::Pd, |i, j| {
            if i + j == 1 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let f = lu_factor(&a, ExecPath::Scalar).unwrap();
        assert_eq!(f.perm(), &[1, 0]);
        assert_eq!(f.swaps(), 1);
        let pa = permuted(&a, f.perm());
        let lu = f.unpack_l().matmul(&f.unpack_u()).unwrap();
        assert_eq!(pa.frobenius_distance(&lu).unwrap(), 0.0);
    }

    #[test]
    fn reconstruction_residual_over_random_matrices() {
        let mut rng = StdRng::seed_from_u64(31);
        for &n in &[2usize, 4, 8] {
            for precision in [PrecisionMode::Ps, PrecisionMode::Pd] {
                let tol = match precision {
                    PrecisionMode::Ps => 1e-6,
                    PrecisionMode::Pd => 1e-12,
                };
                for trial in 0..100 {
                    let a = random_matrix(&mut rng, n, precision);
                    let path = if trial % 2 == 0 {
                        ExecPath::Scalar
                    } else {
                        ExecPath::Vector
                    };
                    let f = lu_factor(&a, path).unwrap();
                    let mut sorted = f.perm().to_vec();
                    sorted.sort_unstable();
                    assert!(sorted.iter().enumerate().all(|(i, &p)| i == p));
                    let pa = permuted(&a, f.perm());
                    let lu = f.unpack_l().matmul(&f.unpack_u()).unwrap();
                    let rel = pa.frobenius_distance(&lu).unwrap() / a.frobenius_norm();
                    assert!(rel <= tol, "n={n} {precision:?} trial {trial}: {rel}");
                }
            }
        }
    }

    #[test]
    fn forward_sub_closed_form() {
        // L = [[1,0],[c,1]] with |c| < 1 so no pivot swap: z = [b0, b1 - c*b0].
        let c = Complex64::new(0.25, -0.35);
        let a = CMatrix::from_fn(2, 2, PrecisionMode::Pd, |i, j| match (i, j) {
            (0, 0) => Complex64::new(1.0, 0.0),
            (0, 1) => Complex64::new(0.0, 0.0),
            (1, 0) => c,
            (1, 1) => Complex64::new(1.0, 0.0),
            _ => unreachable!(),
        });
        let f = lu_factor(&a, ExecPath::Scalar).unwrap();
        assert_eq!(f.perm(), &[0, 1]);
        let b = ComplexBuffer::from_complex(
            &[Complex64::new(2.0, 1.0), Complex64::new(-1.0, 3.0)],
            Layout::Split,
            PrecisionMode::Pd,
            64,
        )
        .unwrap();
        let z = forward_sub(&f, &b, ExecPath::Vector).unwrap();
        assert_eq!(z.get(0), b.get(0));
        let want = b.get(1) - c * b.get(0);
        assert!((z.get(1) - want).norm() <= 1e-15);
    }

    #[test]
    fn backward_sub_diagonal_solve() {
        let a = CMatrix::from_fn(2, 2, PrecisionMode::Pd, |i, j| {
            if i == j {
                Complex64::new(2.0 * (i + 1) as f64, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let f = lu_factor(&a, ExecPath::Scalar).unwrap();
        let z = ComplexBuffer::from_complex(
            &[Complex64::new(2.0, 0.0), Complex64::new(4.0, 0.0)],
            Layout::Split,
            PrecisionMode::Pd,
            64,
        )
        .unwrap();
        let x = backward_sub(&f, &z, ExecPath::Scalar).unwrap();
        assert_eq!(x.get(0), Complex64::new(1.0, 0.0));
        assert_eq!(x.get(1), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn substitution_residuals() {
        let mut rng = StdRng::seed_from_u64(37);
        for &n in &[4usize, 8] {
            let a = random_matrix(&mut rng, n, PrecisionMode::Pd);
            let f = lu_factor(&a, ExecPath::Vector).unwrap();
            let b = ComplexBuffer::from_fn(n, Layout::Split, PrecisionMode::Pd, 64, |_| {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            })
            .unwrap();
            let z = forward_sub(&f, &b, ExecPath::Vector).unwrap();
            let x = backward_sub(&f, &z, ExecPath::Vector).unwrap();
            // L·z == P·b
            let l = f.unpack_l();
            let bnorm: f64 = b.to_vec().iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            for i in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    acc += l.get(i, j) * z.get(j);
                }
                assert!((acc - b.get(f.perm()[i])).norm() <= 1e-12 * bnorm);
            }
            // U·x == z
            let u = f.unpack_u();
            let znorm: f64 = z.to_vec().iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            for i in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    acc += u.get(i, j) * x.get(j);
                }
                assert!((acc - z.get(i)).norm() <= 1e-12 * znorm);
            }
        }
    }

    #[test]
    fn invert_identity_and_diagonal() {
        let i4 = CMatrix::identity(4, PrecisionMode::Pd);
        let (inv, stats) = invert(&i4, ExecPath::Scalar).unwrap();
        assert_eq!(inv.frobenius_distance(&i4).unwrap(), 0.0);
        let _ = stats.total_ns();

        let a = CMatrix::from_fn(2, 2, PrecisionMode::Pd, |i, j| {
            if i == j {
                Complex64::new(2.0 * (i + 1) as f64, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let (inv, _) = invert(&a, ExecPath::Vector).unwrap();
        assert!((inv.get(0, 0) - Complex64::new(0.5, 0.0)).norm() <= 1e-15);
        assert!((inv.get(1, 1) - Complex64::new(0.25, 0.0)).norm() <= 1e-15);
    }

    #[test]
    fn inverse_residual_hermitian_positive_definite() {
        let mut rng = StdRng::seed_from_u64(41);
        // A = H·H^H + I is Hermitian positive definite.
        let h = CMatrix::from_fn(8, 8, PrecisionMode::Pd, |_, _| {
            Complex64::new(
                rng.sample::<f64, _>(rand_distr::StandardNormal),
                rng.sample::<f64, _>(rand_distr::StandardNormal),
            ) / 2f64.sqrt()
        });
        let hh = h.matmul(&h.hermitian_transpose()).unwrap();
        let a = CMatrix::from_fn(8, 8, PrecisionMode::Pd, |i, j| {
            hh.get(i, j)
                + if i == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
        });
        let (inv, stats) = invert(&a, ExecPath::Vector).unwrap();
        let res = a
            .matmul(&inv)
            .unwrap()
            .frobenius_distance(&CMatrix::identity(8, PrecisionMode::Pd))
            .unwrap();
        assert!(res <= 1e-10, "residual {res}");
        // Inverse of a Hermitian matrix stays Hermitian numerically.
        inv.check_hermitian(1e-10).unwrap();
        assert!(stats.total_ns() > 0);

        // Double inversion comes back to A.
        let (back, _) = invert(&inv, ExecPath::Vector).unwrap();
        let rel = back.frobenius_distance(&a).unwrap() / a.frobenius_norm();
        assert!(rel <= 1e-9, "double-inverse deviation {rel}");
    }

    #[test]
    fn inverse_residual_by_precision_and_path() {
        let mut rng = StdRng::seed_from_u64(43);
        for precision in [PrecisionMode::Ps, PrecisionMode::Pd] {
            let (tol, path_tol) = match precision {
                PrecisionMode::Ps => (1e-4, 1e-5),
                PrecisionMode::Pd => (1e-10, 1e-12),
            };
            for &n in &[2usize, 4, 8] {
                let a = random_matrix(&mut rng, n, precision);
                let (inv_s, _) = invert(&a, ExecPath::Scalar).unwrap();
                let (inv_v, _) = invert(&a, ExecPath::Vector).unwrap();
                let res = a
                    .matmul(&inv_s)
                    .unwrap()
                    .frobenius_distance(&CMatrix::identity(n, precision))
                    .unwrap();
                assert!(res <= tol, "n={n} {precision:?} residual {res}");
                let rel = inv_s.frobenius_distance(&inv_v).unwrap() / inv_s.frobenius_norm();
                assert!(rel <= path_tol, "n={n} {precision:?} path deviation {rel}");
            }
        }
    }

    #[test]
    fn solve_matches_examples() {
        let b = CMatrix::from_fn(2, 3, PrecisionMode::Pd, |i, j| {
            Complex64::new((i * 3 + j) as f64, -(j as f64))
        });
        let x = solve(
            &CMatrix::identity(2, PrecisionMode::Pd),
            &b,
            ExecPath::Scalar,
        )
        .unwrap();
        assert_eq!(x.frobenius_distance(&b).unwrap(), 0.0);

        let a = CMatrix::from_fn(2, 2, PrecisionMode::Pd, |i, j| {
            if i == j {
                Complex64::new(2.0 * (i + 1) as f64, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let x = solve(&a, &CMatrix::identity(2, PrecisionMode::Pd), ExecPath::Vector).unwrap();
        assert!((x.get(0, 0) - Complex64::new(0.5, 0.0)).norm() <= 1e-15);
        assert!((x.get(1, 1) - Complex64::new(0.25, 0.0)).norm() <= 1e-15);
    }

    #[test]
    fn solve_residual_random_system() {
        let mut rng = StdRng::seed_from_u64(47);
        let a = random_matrix(&mut rng, 4, PrecisionMode::Pd);
        let b = CMatrix::from_fn(4, 2, PrecisionMode::Pd, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let x = solve(&a, &b, ExecPath::Vector).unwrap();
        let res = a.matmul(&x).unwrap().frobenius_distance(&b).unwrap();
        assert!(res <= 1e-11, "residual {res}");
    }

    #[test]
    fn singular_matrices_name_the_column() {
        let zero1 = CMatrix::zeros(1, 1, PrecisionMode::Pd);
        match lu_factor(&zero1, ExecPath::Scalar) {
            Err(Error::Singular {
                column: 0,
                subcarrier: None,
            }) => {}
            other => panic!("expected singular at column 0, got {other:?}"),
        }

        let ones = CMatrix::from_fn(2, 2, PrecisionMode::Pd, |_, _| Complex64::new(1.0, 0.0));
        match lu_factor(&ones, ExecPath::Vector) {
            Err(Error::Singular { column: 1, .. }) => {}
            other => panic!("expected singular at column 1, got {other:?}"),
        }
    }

    #[test]
    fn pivot_guard_is_scale_invariant() {
        // Uniformly tiny is fine...
        let tiny = CMatrix::from_fn(2, 2, PrecisionMode::Pd, |i, j| {
            if i == j {
                Complex64::new(1e-20, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        assert!(lu_factor(&tiny, ExecPath::Scalar).is_ok());

        // ...but a pivot far below the matrix scale is singular.
        let skewed = CMatrix::from_fn(2, 2, PrecisionMode::Pd, |i, j| {
            if i == j {
                Complex64::new(if i == 0 { 1.0 } else { 1e-20 }, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        match lu_factor(&skewed, ExecPath::Scalar) {
            Err(Error::Singular { column: 1, .. }) => {}
            other => panic!("expected singular at column 1, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_entries_are_rejected() {
        let a = CMatrix::from_fn(2, 2, PrecisionMode::Pd, |i, j| {
            if (i, j) == (0, 1) {
                Complex64::new(f64::NAN, 0.0)
            } else {
                Complex64::new(1.0, 0.0)
            }
        });
        assert!(matches!(
            lu_factor(&a, ExecPath::Scalar),
            Err(Error::InvalidArgument(_))
        ));
    }
}
