//! Kernel bodies, written once against the [`V`] abstraction.
//!
//! Every function here is `#[inline(always)]` and gets monomorphized twice
//! per precision: once with a scalar width-1 register (the reference path)
//! and once with an AVX2 register inside a `target_feature` root.
//!
//! Tail handling differs by access pattern. Reductions and stream ops
//! (dot, norm, elementwise add/multiply) finish short remainders with one
//! masked-prefix register step. In-place row updates (AXPY, scale) instead
//! run a half-width step and then a scalar tail, because their outputs are
//! reloaded on the next elimination step and masked stores do not forward.
//!
//! Reductions use a fixed order — products enter a full-width lane
//! accumulator (masked prefix loads contribute zeros in unused lanes, which
//! add exactly), then one horizontal lane-tree sum — so results are
//! run-to-run deterministic for a given path.

use super::vec::V;

#[inline(always)]
unsafe fn add_chunk<W: V>(a: *const W::E, b: *const W::E, o: *mut W::E) {
    W::load(a).add(W::load(b)).store(o);
}

#[inline(always)]
unsafe fn add_prefix<W: V>(a: *const W::E, b: *const W::E, o: *mut W::E, n: usize) {
    W::load_prefix(a, n)
        .add(W::load_prefix(b, n))
        .store_prefix(o, n);
}

/// Elementwise component add: `out[i] = a[i] + b[i]`.
///
/// Addition is layout-oblivious (no cross-component terms), so callers may
/// pass interleaved or split storage directly.
#[inline(always)]
pub(crate) fn add_components<Vx: V>(a: &[Vx::E], b: &[Vx::E], out: &mut [Vx::E]) {
    let n = a.len();
    debug_assert_eq!(n, b.len());
    debug_assert_eq!(n, out.len());
    if n == 0 {
        return;
    }
    let (ap, bp, op) = (a.as_ptr(), b.as_ptr(), out.as_mut_ptr());
    if n <= Vx::LANES {
        unsafe { add_prefix::<Vx>(ap, bp, op, n) };
        return;
    }
    let mut i = 0;
    while i + Vx::LANES <= n {
        unsafe { add_chunk::<Vx>(ap.add(i), bp.add(i), op.add(i)) };
        i += Vx::LANES;
    }
    if i < n {
        unsafe { add_prefix::<Vx>(ap.add(i), bp.add(i), op.add(i), n - i) };
    }
}

#[inline(always)]
#[allow(clippy::too_many_arguments)]
unsafe fn cmul_acc_chunk<W: V>(
    are: *const W::E,
    aim: *const W::E,
    bre: *const W::E,
    bim: *const W::E,
    cre: *const W::E,
    cim: *const W::E,
    ore: *mut W::E,
    oim: *mut W::E,
) {
    let (var, vai) = (W::load(are), W::load(aim));
    let (vbr, vbi) = (W::load(bre), W::load(bim));
    let (vcr, vci) = (W::load(cre), W::load(cim));
    vai.neg_mul_add(vbi, var.mul_add(vbr, vcr)).store(ore);
    vai.mul_add(vbr, var.mul_add(vbi, vci)).store(oim);
}

#[inline(always)]
#[allow(clippy::too_many_arguments)]
unsafe fn cmul_acc_prefix<W: V>(
    are: *const W::E,
    aim: *const W::E,
    bre: *const W::E,
    bim: *const W::E,
    cre: *const W::E,
    cim: *const W::E,
    ore: *mut W::E,
    oim: *mut W::E,
    n: usize,
) {
    let (var, vai) = (W::load_prefix(are, n), W::load_prefix(aim, n));
    let (vbr, vbi) = (W::load_prefix(bre, n), W::load_prefix(bim, n));
    let (vcr, vci) = (W::load_prefix(cre, n), W::load_prefix(cim, n));
    vai.neg_mul_add(vbi, var.mul_add(vbr, vcr)).store_prefix(ore, n);
    vai.mul_add(vbr, var.mul_add(vbi, vci)).store_prefix(oim, n);
}

/// Elementwise fused complex multiply-accumulate over split planes:
/// `out[i] = acc[i] + a[i] * b[i]`.
#[inline(always)]
#[allow(clippy::too_many_arguments)]
pub(crate) fn cmul_acc<Vx: V>(
    are: &[Vx::E],
    aim: &[Vx::E],
    bre: &[Vx::E],
    bim: &[Vx::E],
    cre: &[Vx::E],
    cim: &[Vx::E],
    ore: &mut [Vx::E],
    oim: &mut [Vx::E],
) {
    let n = are.len();
    debug_assert!(
        [aim.len(), bre.len(), bim.len(), cre.len(), cim.len(), ore.len(), oim.len()]
            .iter()
            .all(|&l| l == n)
    );
    if n == 0 {
        return;
    }
    if n <= Vx::LANES {
        unsafe {
            cmul_acc_prefix::<Vx>(
                are.as_ptr(),
                aim.as_ptr(),
                bre.as_ptr(),
                bim.as_ptr(),
                cre.as_ptr(),
                cim.as_ptr(),
                ore.as_mut_ptr(),
                oim.as_mut_ptr(),
                n,
            );
        }
        return;
    }
    let mut i = 0;
    while i + Vx::LANES <= n {
        unsafe {
            cmul_acc_chunk::<Vx>(
                are.as_ptr().add(i),
                aim.as_ptr().add(i),
                bre.as_ptr().add(i),
                bim.as_ptr().add(i),
                cre.as_ptr().add(i),
                cim.as_ptr().add(i),
                ore.as_mut_ptr().add(i),
                oim.as_mut_ptr().add(i),
            );
        }
        i += Vx::LANES;
    }
    if i < n {
        unsafe {
            cmul_acc_prefix::<Vx>(
                are.as_ptr().add(i),
                aim.as_ptr().add(i),
                bre.as_ptr().add(i),
                bim.as_ptr().add(i),
                cre.as_ptr().add(i),
                cim.as_ptr().add(i),
                ore.as_mut_ptr().add(i),
                oim.as_mut_ptr().add(i),
                n - i,
            );
        }
    }
}

/// Complex dot product over split planes.
///
/// `CONJ_A = false`: `sum a[i] * b[i]`; `CONJ_A = true`: `sum conj(a[i]) * b[i]`.
#[inline(always)]
pub(crate) fn dot<Vx: V, const CONJ_A: bool>(
    are: &[Vx::E],
    aim: &[Vx::E],
    bre: &[Vx::E],
    bim: &[Vx::E],
) -> (Vx::E, Vx::E) {
    let n = are.len();
    debug_assert!(aim.len() == n && bre.len() == n && bim.len() == n);
    let mut acc_re = Vx::zero();
    let mut acc_im = Vx::zero();
    let mut i = 0;
    while i + Vx::LANES <= n {
        unsafe {
            let (var, vai) = (Vx::load(are.as_ptr().add(i)), Vx::load(aim.as_ptr().add(i)));
            let (vbr, vbi) = (Vx::load(bre.as_ptr().add(i)), Vx::load(bim.as_ptr().add(i)));
            if CONJ_A {
                acc_re = vai.mul_add(vbi, var.mul_add(vbr, acc_re));
                acc_im = vai.neg_mul_add(vbr, var.mul_add(vbi, acc_im));
            } else {
                acc_re = vai.neg_mul_add(vbi, var.mul_add(vbr, acc_re));
                acc_im = vai.mul_add(vbr, var.mul_add(vbi, acc_im));
            }
        }
        i += Vx::LANES;
    }
    if i < n {
        unsafe {
            let r = n - i;
            let (var, vai) = (
                Vx::load_prefix(are.as_ptr().add(i), r),
                Vx::load_prefix(aim.as_ptr().add(i), r),
            );
            let (vbr, vbi) = (
                Vx::load_prefix(bre.as_ptr().add(i), r),
                Vx::load_prefix(bim.as_ptr().add(i), r),
            );
            if CONJ_A {
                acc_re = vai.mul_add(vbi, var.mul_add(vbr, acc_re));
                acc_im = vai.neg_mul_add(vbr, var.mul_add(vbi, acc_im));
            } else {
                acc_re = vai.neg_mul_add(vbi, var.mul_add(vbr, acc_re));
                acc_im = vai.mul_add(vbr, var.mul_add(vbi, acc_im));
            }
        }
    }
    (acc_re.hsum(), acc_im.hsum())
}

/// `sum re[i]^2 + im[i]^2` (real, non-negative by construction).
#[inline(always)]
pub(crate) fn norm2<Vx: V>(re: &[Vx::E], im: &[Vx::E]) -> Vx::E {
    let n = re.len();
    debug_assert_eq!(n, im.len());
    let mut acc = Vx::zero();
    let mut i = 0;
    while i + Vx::LANES <= n {
        unsafe {
            let vr = Vx::load(re.as_ptr().add(i));
            let vi = Vx::load(im.as_ptr().add(i));
            acc = vi.mul_add(vi, vr.mul_add(vr, acc));
        }
        i += Vx::LANES;
    }
    if i < n {
        unsafe {
            let r = n - i;
            let vr = Vx::load_prefix(re.as_ptr().add(i), r);
            let vi = Vx::load_prefix(im.as_ptr().add(i), r);
            acc = vi.mul_add(vi, vr.mul_add(vr, acc));
        }
    }
    acc.hsum()
}

#[inline(always)]
unsafe fn axpy_chunk<W: V>(
    ar: W::E,
    ai: W::E,
    xre: *const W::E,
    xim: *const W::E,
    yre: *mut W::E,
    yim: *mut W::E,
) {
    let (var, vai) = (W::splat(ar), W::splat(ai));
    let (vxr, vxi) = (W::load(xre), W::load(xim));
    let (vyr, vyi) = (W::load(yre), W::load(yim));
    vai.neg_mul_add(vxi, var.mul_add(vxr, vyr)).store(yre);
    vai.mul_add(vxr, var.mul_add(vxi, vyi)).store(yim);
}

/// `y += (ar + ai*i) * x` over split planes, in place.
///
/// Tails stay on regular (half-width, then scalar) moves rather than masked
/// prefix stores: eliminations reload the updated row on the very next
/// step, and masked stores would stall that reload (see
/// [`V::store_prefix`]).
#[inline(always)]
pub(crate) fn axpy<Vx: V>(
    ar: Vx::E,
    ai: Vx::E,
    xre: &[Vx::E],
    xim: &[Vx::E],
    yre: &mut [Vx::E],
    yim: &mut [Vx::E],
) {
    let n = xre.len();
    debug_assert!(xim.len() == n && yre.len() == n && yim.len() == n);
    let mut i = 0;
    while i + Vx::LANES <= n {
        unsafe {
            axpy_chunk::<Vx>(
                ar,
                ai,
                xre.as_ptr().add(i),
                xim.as_ptr().add(i),
                yre.as_mut_ptr().add(i),
                yim.as_mut_ptr().add(i),
            );
        }
        i += Vx::LANES;
    }
    if Vx::HAS_HALF && i + <Vx::Half as V>::LANES <= n {
        unsafe {
            axpy_chunk::<Vx::Half>(
                ar,
                ai,
                xre.as_ptr().add(i),
                xim.as_ptr().add(i),
                yre.as_mut_ptr().add(i),
                yim.as_mut_ptr().add(i),
            );
        }
        i += <Vx::Half as V>::LANES;
    }
    while i < n {
        let r = ar * xre[i] + yre[i] - ai * xim[i];
        let m = ar * xim[i] + yim[i] + ai * xre[i];
        yre[i] = r;
        yim[i] = m;
        i += 1;
    }
}

#[inline(always)]
unsafe fn scale_chunk<W: V>(ar: W::E, ai: W::E, re: *mut W::E, im: *mut W::E) {
    let (var, vai) = (W::splat(ar), W::splat(ai));
    let vr = W::load(re);
    let vi = W::load(im);
    vai.neg_mul_add(vi, vr.mul(var)).store(re);
    vai.mul_add(vr, vi.mul(var)).store(im);
}

/// `(re, im) *= (ar + ai*i)` elementwise, in place.
///
/// Same tail policy as [`axpy`]: scaled rows are substitution inputs one
/// step later, so no masked stores.
#[inline(always)]
pub(crate) fn scale<Vx: V>(ar: Vx::E, ai: Vx::E, re: &mut [Vx::E], im: &mut [Vx::E]) {
    let n = re.len();
    debug_assert_eq!(n, im.len());
    let mut i = 0;
    while i + Vx::LANES <= n {
        unsafe { scale_chunk::<Vx>(ar, ai, re.as_mut_ptr().add(i), im.as_mut_ptr().add(i)) };
        i += Vx::LANES;
    }
    if Vx::HAS_HALF && i + <Vx::Half as V>::LANES <= n {
        unsafe {
            scale_chunk::<Vx::Half>(ar, ai, re.as_mut_ptr().add(i), im.as_mut_ptr().add(i))
        };
        i += <Vx::Half as V>::LANES;
    }
    while i < n {
        let r = re[i] * ar - im[i] * ai;
        let m = re[i] * ai + im[i] * ar;
        re[i] = r;
        im[i] = m;
        i += 1;
    }
}

/// Batched Gram stage: for every matrix `b` in the batch,
/// `R_b = H_b * H_b^H + sigma2 * I` (`nr x nr` from `nr x nt`).
///
/// Diagonal entries are written as exact reals (separate norm accumulation),
/// off-diagonals as conjugate mirror pairs, so the Hermitian contract holds
/// bit-exactly.
///
/// Output layout groups `g` covariance matrices per register row for the
/// downstream solve (see `linalg`): matrix `b` writes element `(i, j)` at
/// `(b/g)·nr·(g·nr) + i·(g·nr) + (b%g)·nr + j`. `g = 1` is the plain
/// per-matrix packing. Inputs stay per-matrix packed either way.
#[inline(always)]
#[allow(clippy::too_many_arguments)]
pub(crate) fn gram_batch<Vx: V>(
    hre: &[Vx::E],
    him: &[Vx::E],
    nr: usize,
    nt: usize,
    sigma2: Vx::E,
    rre: &mut [Vx::E],
    rim: &mut [Vx::E],
    batch: usize,
    g: usize,
) {
    let rw = nr * g;
    debug_assert_eq!(hre.len(), batch * nr * nt);
    debug_assert_eq!(rre.len(), batch.div_ceil(g) * nr * rw);
    for b in 0..batch {
        let hoff = b * nr * nt;
        let roff = (b / g) * nr * rw + (b % g) * nr;
        for i in 0..nr {
            let row_i_re = &hre[hoff + i * nt..hoff + (i + 1) * nt];
            let row_i_im = &him[hoff + i * nt..hoff + (i + 1) * nt];
            rre[roff + i * rw + i] = norm2::<Vx>(row_i_re, row_i_im) + sigma2;
            rim[roff + i * rw + i] = Vx::E::default();
            for j in i + 1..nr {
                let row_j_re = &hre[hoff + j * nt..hoff + (j + 1) * nt];
                let row_j_im = &him[hoff + j * nt..hoff + (j + 1) * nt];
                // R[i][j] = sum_t H[i,t] * conj(H[j,t]) = sum_t conj(H[j,t]) * H[i,t]
                let (re, im) = dot::<Vx, true>(row_j_re, row_j_im, row_i_re, row_i_im);
                rre[roff + i * rw + j] = re;
                rim[roff + i * rw + j] = im;
                rre[roff + j * rw + i] = re;
                rim[roff + j * rw + i] = -im;
            }
        }
    }
}
