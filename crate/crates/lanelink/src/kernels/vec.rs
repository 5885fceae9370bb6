//! Minimal portable vector abstraction the kernels are written against.
//!
//! [`V`] models a register of `LANES` components with the handful of
//! operations the complex kernels need. `Sc<T>` is the width-1
//! implementation used by the scalar path (plain, unfused arithmetic);
//! the AVX2 types wrap 256-bit registers with true FMA and a 128-bit
//! `Half` so short tails of in-place updates still vectorize.
//!
//! Read-dominated segments can instead go through
//! [`V::load_prefix`]/[`V::store_prefix`], which touch exactly `n`
//! components (masked moves on AVX2), so short rows run as single register
//! operations. See `store_prefix` for when masked stores must be avoided.
//!
//! Safety contract for the AVX2 types: construct and use them only inside
//! functions compiled with `target_feature(enable = "avx2,fma")`, reached
//! after a positive [`crate::kernels::capability_query`].

use crate::component::Component;

pub(crate) trait V: Copy {
    type E: Component;
    /// Register half the width of `Self` (self when none is available).
    type Half: V<E = Self::E>;
    const LANES: usize;
    const HAS_HALF: bool;

    /// # Safety
    /// `p` must point at `LANES` readable components.
    unsafe fn load(p: *const Self::E) -> Self;

    /// # Safety
    /// `p` must point at `LANES` writable components.
    unsafe fn store(self, p: *mut Self::E);

    /// Loads the first `n` lanes from `p`, zeroing the rest. Reads exactly
    /// `n` components — memory past `p[n-1]` is never touched.
    ///
    /// # Safety
    /// `p` must point at `n` readable components, `0 < n <= LANES`.
    unsafe fn load_prefix(p: *const Self::E, n: usize) -> Self;

    /// Stores the first `n` lanes to `p`; the rest are not written.
    ///
    /// Masked stores do not forward to subsequent loads on current x86
    /// cores: callers must reserve this for data that is not immediately
    /// reloaded (stream outputs, final results) — never for in-place row
    /// updates inside an elimination sweep.
    ///
    /// # Safety
    /// `p` must point at `n` writable components, `0 < n <= LANES`.
    unsafe fn store_prefix(self, p: *mut Self::E, n: usize);

    fn splat(e: Self::E) -> Self;
    fn zero() -> Self;
    fn add(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    /// `self * b + c`; fused on vector hardware, two roundings in `Sc`.
    fn mul_add(self, b: Self, c: Self) -> Self;
    /// `c - self * b`.
    fn neg_mul_add(self, b: Self, c: Self) -> Self;
    /// Horizontal sum, lane-tree order (deterministic).
    fn hsum(self) -> Self::E;
}

/// Extra operations for register-packed batch passes, where `g = LANES/n`
/// small matrices share each row register. Implemented only by the AVX2
/// types: the scalar path never packs, so `Sc` stays a plain [`V`].
pub(crate) trait Packed: V {
    /// Unsigned integer with the component's width, for bit masks.
    type Bits: Copy + Default;
    /// All-ones bit pattern (mask lane "keep").
    const KEEP: Self::Bits;

    /// Reinterprets `LANES` mask words as a register (no conversion).
    ///
    /// # Safety
    /// `p` must point at `LANES` readable mask words.
    unsafe fn load_bits(p: *const Self::Bits) -> Self;

    /// Lanewise bitwise AND (zeroing lanes against a mask is exact).
    fn and(self, o: Self) -> Self;

    /// Reads `g` values and splats each across `LANES/g` consecutive
    /// lanes: `[v0.., v1.., ...]`.
    ///
    /// # Safety
    /// `p` must point at `g` readable components; `g` divides `LANES`.
    unsafe fn splat_groups(p: *const Self::E, g: usize) -> Self;
}

/// Width-1 "register": the scalar reference path.
#[derive(Copy, Clone)]
pub(crate) struct Sc<T>(pub T);

impl<T: Component> V for Sc<T> {
    type E = T;
    type Half = Sc<T>;
    const LANES: usize = 1;
    const HAS_HALF: bool = false;

    #[inline(always)]
    unsafe fn load(p: *const T) -> Self {
        Sc(*p)
    }

    #[inline(always)]
    unsafe fn store(self, p: *mut T) {
        *p = self.0;
    }

    #[inline(always)]
    unsafe fn load_prefix(p: *const T, n: usize) -> Self {
        debug_assert_eq!(n, 1);
        Sc(*p)
    }

    #[inline(always)]
    unsafe fn store_prefix(self, p: *mut T, n: usize) {
        debug_assert_eq!(n, 1);
        *p = self.0;
    }

    #[inline(always)]
    fn splat(e: T) -> Self {
        Sc(e)
    }

    #[inline(always)]
    fn zero() -> Self {
        Sc(T::zero())
    }

    #[inline(always)]
    fn add(self, o: Self) -> Self {
        Sc(self.0 + o.0)
    }

    #[inline(always)]
    fn mul(self, o: Self) -> Self {
        Sc(self.0 * o.0)
    }

    #[inline(always)]
    fn mul_add(self, b: Self, c: Self) -> Self {
        Sc(self.0 * b.0 + c.0)
    }

    #[inline(always)]
    fn neg_mul_add(self, b: Self, c: Self) -> Self {
        Sc(c.0 - self.0 * b.0)
    }

    #[inline(always)]
    fn hsum(self) -> T {
        self.0
    }
}

#[cfg(target_arch = "x86_64")]
pub(crate) use x86::{F32x8, F64x4};

#[cfg(target_arch = "x86_64")]
mod x86 {
    use super::V;
    use std::arch::x86_64::*;

    #[derive(Copy, Clone)]
    pub(crate) struct F32x8(__m256);

    #[derive(Copy, Clone)]
    pub(crate) struct F32x4(__m128);

    #[derive(Copy, Clone)]
    pub(crate) struct F64x4(__m256d);

    #[derive(Copy, Clone)]
    pub(crate) struct F64x2(__m128d);

    /// All-ones in lanes `< n`, zero elsewhere (32-bit lanes).
    #[inline(always)]
    unsafe fn mask_epi32(n: usize) -> __m256i {
        let iota = _mm256_setr_epi32(0, 1, 2, 3, 4, 5, 6, 7);
        _mm256_cmpgt_epi32(_mm256_set1_epi32(n as i32), iota)
    }

    /// All-ones in lanes `< n`, zero elsewhere (64-bit lanes).
    #[inline(always)]
    unsafe fn mask_epi64(n: usize) -> __m256i {
        let iota = _mm256_setr_epi64x(0, 1, 2, 3);
        _mm256_cmpgt_epi64(_mm256_set1_epi64x(n as i64), iota)
    }

    impl V for F32x8 {
        type E = f32;
        type Half = F32x4;
        const LANES: usize = 8;
        const HAS_HALF: bool = true;

        #[inline(always)]
        unsafe fn load(p: *const f32) -> Self {
            F32x8(_mm256_loadu_ps(p))
        }

        #[inline(always)]
        unsafe fn store(self, p: *mut f32) {
            _mm256_storeu_ps(p, self.0)
        }

        #[inline(always)]
        unsafe fn load_prefix(p: *const f32, n: usize) -> Self {
            debug_assert!(0 < n && n <= 8);
            F32x8(_mm256_maskload_ps(p, mask_epi32(n)))
        }

        #[inline(always)]
        unsafe fn store_prefix(self, p: *mut f32, n: usize) {
            debug_assert!(0 < n && n <= 8);
            _mm256_maskstore_ps(p, mask_epi32(n), self.0)
        }

        #[inline(always)]
        fn splat(e: f32) -> Self {
            unsafe { F32x8(_mm256_set1_ps(e)) }
        }

        #[inline(always)]
        fn zero() -> Self {
            unsafe { F32x8(_mm256_setzero_ps()) }
        }

        #[inline(always)]
        fn add(self, o: Self) -> Self {
            unsafe { F32x8(_mm256_add_ps(self.0, o.0)) }
        }

        #[inline(always)]
        fn mul(self, o: Self) -> Self {
            unsafe { F32x8(_mm256_mul_ps(self.0, o.0)) }
        }

        #[inline(always)]
        fn mul_add(self, b: Self, c: Self) -> Self {
            unsafe { F32x8(_mm256_fmadd_ps(self.0, b.0, c.0)) }
        }

        #[inline(always)]
        fn neg_mul_add(self, b: Self, c: Self) -> Self {
            unsafe { F32x8(_mm256_fnmadd_ps(self.0, b.0, c.0)) }
        }

        #[inline(always)]
        fn hsum(self) -> f32 {
            // Tree: lanes (i, i+4) pair first, then the 4-lane tree.
            unsafe {
                let lo = _mm256_castps256_ps128(self.0);
                let hi = _mm256_extractf128_ps::<1>(self.0);
                F32x4(_mm_add_ps(lo, hi)).hsum()
            }
        }
    }

    impl super::Packed for F32x8 {
        type Bits = u32;
        const KEEP: u32 = u32::MAX;

        #[inline(always)]
        unsafe fn load_bits(p: *const u32) -> Self {
            F32x8(_mm256_loadu_ps(p as *const f32))
        }

        #[inline(always)]
        fn and(self, o: Self) -> Self {
            unsafe { F32x8(_mm256_and_ps(self.0, o.0)) }
        }

        #[inline(always)]
        unsafe fn splat_groups(p: *const f32, g: usize) -> Self {
            match g {
                1 => Self::splat(*p),
                2 => F32x8(_mm256_set_m128(_mm_set1_ps(*p.add(1)), _mm_set1_ps(*p))),
                4 => {
                    let idx = _mm256_setr_epi32(0, 0, 1, 1, 2, 2, 3, 3);
                    let quad = _mm256_castps128_ps256(_mm_loadu_ps(p));
                    F32x8(_mm256_permutevar8x32_ps(quad, idx))
                }
                8 => Self::load(p),
                _ => unreachable!("group count must divide the lane count"),
            }
        }
    }

    impl V for F32x4 {
        type E = f32;
        type Half = F32x4;
        const LANES: usize = 4;
        const HAS_HALF: bool = false;

        #[inline(always)]
        unsafe fn load(p: *const f32) -> Self {
            F32x4(_mm_loadu_ps(p))
        }

        #[inline(always)]
        unsafe fn store(self, p: *mut f32) {
            _mm_storeu_ps(p, self.0)
        }

        #[inline(always)]
        unsafe fn load_prefix(p: *const f32, n: usize) -> Self {
            debug_assert!(0 < n && n <= 4);
            F32x4(_mm_maskload_ps(p, _mm256_castsi256_si128(mask_epi32(n))))
        }

        #[inline(always)]
        unsafe fn store_prefix(self, p: *mut f32, n: usize) {
            debug_assert!(0 < n && n <= 4);
            _mm_maskstore_ps(p, _mm256_castsi256_si128(mask_epi32(n)), self.0)
        }

        #[inline(always)]
        fn splat(e: f32) -> Self {
            unsafe { F32x4(_mm_set1_ps(e)) }
        }

        #[inline(always)]
        fn zero() -> Self {
            unsafe { F32x4(_mm_setzero_ps()) }
        }

        #[inline(always)]
        fn add(self, o: Self) -> Self {
            unsafe { F32x4(_mm_add_ps(self.0, o.0)) }
        }

        #[inline(always)]
        fn mul(self, o: Self) -> Self {
            unsafe { F32x4(_mm_mul_ps(self.0, o.0)) }
        }

        #[inline(always)]
        fn mul_add(self, b: Self, c: Self) -> Self {
            unsafe { F32x4(_mm_fmadd_ps(self.0, b.0, c.0)) }
        }

        #[inline(always)]
        fn neg_mul_add(self, b: Self, c: Self) -> Self {
            unsafe { F32x4(_mm_fnmadd_ps(self.0, b.0, c.0)) }
        }

        #[inline(always)]
        fn hsum(self) -> f32 {
            // Tree: (0+1, 2+3), then their sum.
            unsafe {
                let shuf = _mm_movehdup_ps(self.0);
                let sums = _mm_add_ps(self.0, shuf);
                let hi = _mm_movehl_ps(shuf, sums);
                _mm_cvtss_f32(_mm_add_ss(sums, hi))
            }
        }
    }

    impl V for F64x4 {
        type E = f64;
        type Half = F64x2;
        const LANES: usize = 4;
        const HAS_HALF: bool = true;

        #[inline(always)]
        unsafe fn load(p: *const f64) -> Self {
            F64x4(_mm256_loadu_pd(p))
        }

        #[inline(always)]
        unsafe fn store(self, p: *mut f64) {
            _mm256_storeu_pd(p, self.0)
        }

        #[inline(always)]
        unsafe fn load_prefix(p: *const f64, n: usize) -> Self {
            debug_assert!(0 < n && n <= 4);
            F64x4(_mm256_maskload_pd(p, mask_epi64(n)))
        }

        #[inline(always)]
        unsafe fn store_prefix(self, p: *mut f64, n: usize) {
            debug_assert!(0 < n && n <= 4);
            _mm256_maskstore_pd(p, mask_epi64(n), self.0)
        }

        #[inline(always)]
        fn splat(e: f64) -> Self {
            unsafe { F64x4(_mm256_set1_pd(e)) }
        }

        #[inline(always)]
        fn zero() -> Self {
            unsafe { F64x4(_mm256_setzero_pd()) }
        }

        #[inline(always)]
        fn add(self, o: Self) -> Self {
            unsafe { F64x4(_mm256_add_pd(self.0, o.0)) }
        }

        #[inline(always)]
        fn mul(self, o: Self) -> Self {
            unsafe { F64x4(_mm256_mul_pd(self.0, o.0)) }
        }

        #[inline(always)]
        fn mul_add(self, b: Self, c: Self) -> Self {
            unsafe { F64x4(_mm256_fmadd_pd(self.0, b.0, c.0)) }
        }

        #[inline(always)]
        fn neg_mul_add(self, b: Self, c: Self) -> Self {
            unsafe { F64x4(_mm256_fnmadd_pd(self.0, b.0, c.0)) }
        }

        #[inline(always)]
        fn hsum(self) -> f64 {
            // Tree: lanes (0+2, 1+3), then their sum.
            unsafe {
                let lo = _mm256_castpd256_pd128(self.0);
                let hi = _mm256_extractf128_pd::<1>(self.0);
                F64x2(_mm_add_pd(lo, hi)).hsum()
            }
        }
    }

    impl super::Packed for F64x4 {
        type Bits = u64;
        const KEEP: u64 = u64::MAX;

        #[inline(always)]
        unsafe fn load_bits(p: *const u64) -> Self {
            F64x4(_mm256_loadu_pd(p as *const f64))
        }

        #[inline(always)]
        fn and(self, o: Self) -> Self {
            unsafe { F64x4(_mm256_and_pd(self.0, o.0)) }
        }

        #[inline(always)]
        unsafe fn splat_groups(p: *const f64, g: usize) -> Self {
            match g {
                1 => Self::splat(*p),
                2 => F64x4(_mm256_set_m128d(_mm_set1_pd(*p.add(1)), _mm_set1_pd(*p))),
                4 => Self::load(p),
                _ => unreachable!("group count must divide the lane count"),
            }
        }
    }

    impl V for F64x2 {
        type E = f64;
        type Half = F64x2;
        const LANES: usize = 2;
        const HAS_HALF: bool = false;

        #[inline(always)]
        unsafe fn load(p: *const f64) -> Self {
            F64x2(_mm_loadu_pd(p))
        }

        #[inline(always)]
        unsafe fn store(self, p: *mut f64) {
            _mm_storeu_pd(p, self.0)
        }

        #[inline(always)]
        unsafe fn load_prefix(p: *const f64, n: usize) -> Self {
            debug_assert!(0 < n && n <= 2);
            F64x2(_mm_maskload_pd(p, _mm256_castsi256_si128(mask_epi64(n))))
        }

        #[inline(always)]
        unsafe fn store_prefix(self, p: *mut f64, n: usize) {
            debug_assert!(0 < n && n <= 2);
            _mm_maskstore_pd(p, _mm256_castsi256_si128(mask_epi64(n)), self.0)
        }

        #[inline(always)]
        fn splat(e: f64) -> Self {
            unsafe { F64x2(_mm_set1_pd(e)) }
        }

        #[inline(always)]
        fn zero() -> Self {
            unsafe { F64x2(_mm_setzero_pd()) }
        }

        #[inline(always)]
        fn add(self, o: Self) -> Self {
            unsafe { F64x2(_mm_add_pd(self.0, o.0)) }
        }

        #[inline(always)]
        fn mul(self, o: Self) -> Self {
            unsafe { F64x2(_mm_mul_pd(self.0, o.0)) }
        }

        #[inline(always)]
        fn mul_add(self, b: Self, c: Self) -> Self {
            unsafe { F64x2(_mm_fmadd_pd(self.0, b.0, c.0)) }
        }

        #[inline(always)]
        fn neg_mul_add(self, b: Self, c: Self) -> Self {
            unsafe { F64x2(_mm_fnmadd_pd(self.0, b.0, c.0)) }
        }

        #[inline(always)]
        fn hsum(self) -> f64 {
            unsafe {
                let hi = _mm_unpackhi_pd(self.0, self.0);
                _mm_cvtsd_f64(_mm_add_sd(self.0, hi))
            }
        }
    }
}
