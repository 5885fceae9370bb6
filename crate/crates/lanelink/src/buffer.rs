//! Alignment-guaranteed storage for complex vectors.
//!
//! A [`ComplexBuffer`] owns a contiguous, cache-line-aligned block of `f32` or
//! `f64` components holding `len` complex elements in one of two layouts:
//!
//! * [`Layout::Split`] — all real parts first, then all imaginary parts.
//!   This is the compute layout: the FMA kernels run shuffle-free on the two
//!   planes.
//! * [`Layout::Interleaved`] — `re, im` adjacent per element, the usual
//!   exchange layout for I/O.
//!
//! Buffers are treated as immutable once constructed; every transforming
//! operation allocates a fresh buffer, and there is no interior mutability,
//! so sharing `&ComplexBuffer` across threads is safe by construction.

use std::alloc;
use std::ptr::NonNull;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::component::Component;
use crate::error::{Error, Result};

/// Numeric width of the stored components.
///
/// `Ps` packs single-precision (`f32`) components, `Pd` double-precision
/// (`f64`) components; a complex element is always a component pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecisionMode {
    Ps,
    Pd,
}

impl PrecisionMode {
    /// Size of one component in bytes (4 or 8).
    pub const fn component_bytes(self) -> usize {
        match self {
            PrecisionMode::Ps => 4,
            PrecisionMode::Pd => 8,
        }
    }

    /// Unit roundoff of round-to-nearest in this precision.
    pub const fn unit_roundoff(self) -> f64 {
        match self {
            PrecisionMode::Ps => f32::UNIT_ROUNDOFF,
            PrecisionMode::Pd => f64::UNIT_ROUNDOFF,
        }
    }

    pub const fn label(self) -> &'static str {
        match self {
            PrecisionMode::Ps => "ps",
            PrecisionMode::Pd => "pd",
        }
    }
}

impl std::fmt::Display for PrecisionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for PrecisionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ps" => Ok(PrecisionMode::Ps),
            "pd" => Ok(PrecisionMode::Pd),
            other => Err(Error::invalid(format!(
                "unknown precision {other:?} (expected \"ps\" or \"pd\")"
            ))),
        }
    }
}

/// Memory arrangement of the component pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    Interleaved,
    Split,
}

/// Default alignment in bytes: one cache line, enough for any 256-bit load.
pub const DEFAULT_ALIGNMENT: usize = 64;

const MAX_ALIGNMENT: usize = 1 << 16;

/// Raw zero-initialized allocation with a caller-chosen alignment.
struct RawBuf {
    ptr: NonNull<u8>,
    bytes: usize,
    align: usize,
}

impl RawBuf {
    fn zeroed(bytes: usize, align: usize) -> Result<Self> {
        if bytes == 0 {
            // Dangling but well-aligned; never dereferenced at this size.
            let ptr = NonNull::new(align as *mut u8).expect("alignment is non-zero");
            return Ok(RawBuf { ptr, bytes, align });
        }
        let layout = alloc::Layout::from_size_align(bytes, align)
            .map_err(|_| Error::Allocation { bytes })?;
        let raw = unsafe { alloc::alloc_zeroed(layout) };
        match NonNull::new(raw) {
            Some(ptr) => Ok(RawBuf { ptr, bytes, align }),
            None => Err(Error::Allocation { bytes }),
        }
    }
}

impl Drop for RawBuf {
    fn drop(&mut self) {
        if self.bytes > 0 {
            let layout = alloc::Layout::from_size_align(self.bytes, self.align)
                .expect("layout was validated at allocation");
            unsafe { alloc::dealloc(self.ptr.as_ptr(), layout) };
        }
    }
}

impl Clone for RawBuf {
    fn clone(&self) -> Self {
        let copy = RawBuf::zeroed(self.bytes, self.align).expect("clone of live allocation");
        if self.bytes > 0 {
            unsafe {
                std::ptr::copy_nonoverlapping(self.ptr.as_ptr(), copy.ptr.as_ptr(), self.bytes);
            }
        }
        copy
    }
}

// The allocation is uniquely owned (Box-like); `&RawBuf` only permits reads.
unsafe impl Send for RawBuf {}
unsafe impl Sync for RawBuf {}

/// Contiguous complex vector with guaranteed base-address alignment.
pub struct ComplexBuffer {
    raw: RawBuf,
    len: usize,
    layout: Layout,
    precision: PrecisionMode,
}

impl ComplexBuffer {
    /// Allocates a zero-filled buffer of `len` complex elements.
    ///
    /// `alignment` must be a power of two no smaller than one complex element
    /// (2 × component width); zero-length buffers are allowed and allocate
    /// nothing.
    pub fn zeros_with(
        len: usize,
        layout: Layout,
        precision: PrecisionMode,
        alignment: usize,
    ) -> Result<Self> {
        let elem = 2 * precision.component_bytes();
        if !alignment.is_power_of_two() || alignment < elem || alignment > MAX_ALIGNMENT {
            return Err(Error::invalid(format!(
                "alignment {alignment} must be a power of two in [{elem}, {MAX_ALIGNMENT}]"
            )));
        }
        let bytes = len
            .checked_mul(elem)
            .ok_or(Error::Allocation { bytes: usize::MAX })?;
        let raw = RawBuf::zeroed(bytes, alignment)?;
        Ok(ComplexBuffer {
            raw,
            len,
            layout,
            precision,
        })
    }

    /// Zero-filled buffer in the default compute configuration
    /// ([`Layout::Split`], 64-byte aligned).
    pub fn zeros(len: usize, precision: PrecisionMode) -> Self {
        Self::zeros_with(len, Layout::Split, precision, DEFAULT_ALIGNMENT)
            .expect("default alignment is valid")
    }

    /// Builds a buffer by evaluating `f` at every index.
    pub fn from_fn(
        len: usize,
        layout: Layout,
        precision: PrecisionMode,
        alignment: usize,
        mut f: impl FnMut(usize) -> Complex64,
    ) -> Result<Self> {
        let mut buf = Self::zeros_with(len, layout, precision, alignment)?;
        for i in 0..len {
            buf.set(i, f(i));
        }
        Ok(buf)
    }

    /// Copies a complex slice into a new buffer.
    pub fn from_complex(
        values: &[Complex64],
        layout: Layout,
        precision: PrecisionMode,
        alignment: usize,
    ) -> Result<Self> {
        Self::from_fn(values.len(), layout, precision, alignment, |i| values[i])
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn precision(&self) -> PrecisionMode {
        self.precision
    }

    pub fn alignment(&self) -> usize {
        self.raw.align
    }

    /// Base address of the storage; guaranteed `base % alignment == 0`.
    pub fn base_address(&self) -> usize {
        self.raw.ptr.as_ptr() as usize
    }

    fn typed<T: Component>(&self) -> &[T] {
        assert_eq!(
            self.precision,
            T::PRECISION,
            "component type does not match buffer precision"
        );
        unsafe { std::slice::from_raw_parts(self.raw.ptr.as_ptr() as *const T, 2 * self.len) }
    }

    fn typed_mut<T: Component>(&mut self) -> &mut [T] {
        assert_eq!(
            self.precision,
            T::PRECISION,
            "component type does not match buffer precision"
        );
        unsafe { std::slice::from_raw_parts_mut(self.raw.ptr.as_ptr() as *mut T, 2 * self.len) }
    }

    /// All components in storage order (layout-dependent meaning).
    pub(crate) fn components<T: Component>(&self) -> &[T] {
        self.typed()
    }

    pub(crate) fn components_mut<T: Component>(&mut self) -> &mut [T] {
        self.typed_mut()
    }

    /// Real and imaginary planes of a [`Layout::Split`] buffer.
    pub(crate) fn planes<T: Component>(&self) -> (&[T], &[T]) {
        assert_eq!(self.layout, Layout::Split, "planes require split layout");
        self.typed().split_at(self.len)
    }

    pub(crate) fn planes_mut<T: Component>(&mut self) -> (&mut [T], &mut [T]) {
        assert_eq!(self.layout, Layout::Split, "planes require split layout");
        let len = self.len;
        self.typed_mut().split_at_mut(len)
    }

    /// Reads element `i`, widening to `Complex64`.
    pub fn get(&self, i: usize) -> Complex64 {
        assert!(i < self.len, "index {i} out of bounds (len {})", self.len);
        let (re, im) = self.index_pair(i);
        match self.precision {
            PrecisionMode::Ps => {
                let c = self.components::<f32>();
                Complex64::new(c[re] as f64, c[im] as f64)
            }
            PrecisionMode::Pd => {
                let c = self.components::<f64>();
                Complex64::new(c[re], c[im])
            }
        }
    }

    /// Writes element `i`, narrowing to the buffer precision (round to
    /// nearest). Intended for construction; transforms return new buffers.
    pub fn set(&mut self, i: usize, v: Complex64) {
        assert!(i < self.len, "index {i} out of bounds (len {})", self.len);
        let (re, im) = self.index_pair(i);
        match self.precision {
            PrecisionMode::Ps => {
                let c = self.components_mut::<f32>();
                c[re] = v.re as f32;
                c[im] = v.im as f32;
            }
            PrecisionMode::Pd => {
                let c = self.components_mut::<f64>();
                c[re] = v.re;
                c[im] = v.im;
            }
        }
    }

    fn index_pair(&self, i: usize) -> (usize, usize) {
        match self.layout {
            Layout::Interleaved => (2 * i, 2 * i + 1),
            Layout::Split => (i, self.len + i),
        }
    }

    pub fn to_vec(&self) -> Vec<Complex64> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    /// Element-wise precision conversion; layout and alignment carry over.
    /// Narrowing rounds to nearest (relative error within one f32 epsilon
    /// per component), widening is exact.
    pub fn convert_precision(&self, target: PrecisionMode) -> ComplexBuffer {
        if target == self.precision {
            return self.clone();
        }
        let mut out = Self::zeros_with(self.len, self.layout, target, self.raw.align)
            .expect("source buffer already satisfied the constraints");
        match (self.precision, target) {
            (PrecisionMode::Ps, PrecisionMode::Pd) => {
                let src = self.components::<f32>();
                let dst = out.components_mut::<f64>();
                for (d, s) in dst.iter_mut().zip(src) {
                    *d = *s as f64;
                }
            }
            (PrecisionMode::Pd, PrecisionMode::Ps) => {
                let src = self.components::<f64>();
                let dst = out.components_mut::<f32>();
                for (d, s) in dst.iter_mut().zip(src) {
                    *d = *s as f32;
                }
            }
            _ => unreachable!(),
        }
        out
    }

    /// Copies into the requested layout. Pure data movement: a round trip
    /// reproduces the original bit pattern.
    pub fn relayout(&self, target: Layout) -> ComplexBuffer {
        if target == self.layout {
            return self.clone();
        }
        let mut out = Self::zeros_with(self.len, target, self.precision, self.raw.align)
            .expect("source buffer already satisfied the constraints");
        match self.precision {
            PrecisionMode::Ps => relayout_components::<f32>(
                self.components(),
                out.components_mut(),
                self.len,
                self.layout,
            ),
            PrecisionMode::Pd => relayout_components::<f64>(
                self.components(),
                out.components_mut(),
                self.len,
                self.layout,
            ),
        }
        out
    }

    /// Bitwise equality of shape and contents (NaN-safe, tolerance-free).
    pub fn bit_eq(&self, other: &ComplexBuffer) -> bool {
        if self.len != other.len
            || self.layout != other.layout
            || self.precision != other.precision
        {
            return false;
        }
        match self.precision {
            PrecisionMode::Ps => {
                let a = self.components::<f32>();
                let b = other.components::<f32>();
                a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            PrecisionMode::Pd => {
                let a = self.components::<f64>();
                let b = other.components::<f64>();
                a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
        }
    }
}

fn relayout_components<T: Component>(src: &[T], dst: &mut [T], len: usize, from: Layout) {
    match from {
        Layout::Interleaved => {
            for i in 0..len {
                dst[i] = src[2 * i];
                dst[len + i] = src[2 * i + 1];
            }
        }
        Layout::Split => {
            for i in 0..len {
                dst[2 * i] = src[i];
                dst[2 * i + 1] = src[len + i];
            }
        }
    }
}

impl Clone for ComplexBuffer {
    fn clone(&self) -> Self {
        ComplexBuffer {
            raw: self.raw.clone(),
            len: self.len,
            layout: self.layout,
            precision: self.precision,
        }
    }
}

impl std::fmt::Debug for ComplexBuffer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ComplexBuffer")
            .field("len", &self.len)
            .field("layout", &self.layout)
            .field("precision", &self.precision)
            .field("alignment", &self.raw.align)
            .finish()
    }
}
