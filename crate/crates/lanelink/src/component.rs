//! Storage-component abstraction: the two precision modes map to `f32` and
//! `f64` planes, and generic numeric code is written once over this trait.

use crate::buffer::PrecisionMode;

pub(crate) trait Component:
    num_traits::Float + Default + std::fmt::Debug + Send + Sync + 'static
{
    const PRECISION: PrecisionMode;
    /// Unit roundoff of round-to-nearest (half the machine epsilon).
    const UNIT_ROUNDOFF: f64;

    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Component for f32 {
    const PRECISION: PrecisionMode = PrecisionMode::Ps;
    const UNIT_ROUNDOFF: f64 = 5.960_464_477_539_063e-8; // 2^-24

    #[inline(always)]
    fn from_f64(v: f64) -> Self {
        v as f32
    }

    #[inline(always)]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Component for f64 {
    const PRECISION: PrecisionMode = PrecisionMode::Pd;
    const UNIT_ROUNDOFF: f64 = 1.110_223_024_625_156_5e-16; // 2^-53

    #[inline(always)]
    fn from_f64(v: f64) -> Self {
        v
    }

    #[inline(always)]
    fn to_f64(self) -> f64 {
        self
    }
}
