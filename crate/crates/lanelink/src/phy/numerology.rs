//! NR numerology: subcarrier spacing, resource blocks, slot geometry.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SUPPORTED_SCS_KHZ: [u32; 4] = [15, 30, 60, 120];
const MAX_RB: u32 = 275;

/// Slot/grid geometry for a normal-cyclic-prefix NR carrier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawNumerology", into = "RawNumerology")]
pub struct NrNumerology {
    scs_khz: u32,
    n_rb: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNumerology {
    scs_khz: u32,
    n_rb: u32,
}

impl TryFrom<RawNumerology> for NrNumerology {
    type Error = Error;

    fn try_from(raw: RawNumerology) -> Result<Self> {
        NrNumerology::new(raw.scs_khz, raw.n_rb)
    }
}

impl From<NrNumerology> for RawNumerology {
    fn from(n: NrNumerology) -> Self {
        RawNumerology {
            scs_khz: n.scs_khz,
            n_rb: n.n_rb,
        }
    }
}

impl NrNumerology {
    pub fn new(scs_khz: u32, n_rb: u32) -> Result<Self> {
        if !SUPPORTED_SCS_KHZ.contains(&scs_khz) {
            return Err(Error::invalid(format!(
                "subcarrier spacing {scs_khz} kHz not supported (one of {SUPPORTED_SCS_KHZ:?})"
            )));
        }
        if n_rb == 0 || n_rb > MAX_RB {
            return Err(Error::invalid(format!(
                "resource blocks must be 1..={MAX_RB}, got {n_rb}"
            )));
        }
        Ok(NrNumerology { scs_khz, n_rb })
    }

    pub fn scs_khz(&self) -> u32 {
        self.scs_khz
    }

    pub fn n_rb(&self) -> u32 {
        self.n_rb
    }

    pub fn n_subcarriers(&self) -> usize {
        12 * self.n_rb as usize
    }

    /// Normal cyclic prefix.
    pub fn symbols_per_slot(&self) -> usize {
        14
    }

    /// Slot duration: 1 ms at 15 kHz, halving per doubling of spacing.
    pub fn tti_ms(&self) -> f64 {
        15.0 / self.scs_khz as f64
    }

    pub fn subcarrier_spacing_hz(&self) -> f64 {
        self.scs_khz as f64 * 1e3
    }
}
