//! Transport block size determination (TS 38.214 §5.1.3.2).

use crate::error::{Error, Result};
use crate::phy::mcs::McsEntry;

/// TS 38.214 Table 5.1.3.2-1: TBS values for N_info ≤ 3824.
const TBS_TABLE: [u32; 93] = [
    24, 32, 40, 48, 56, 64, 72, 80, 88, 96, 104, 112, 120, 128, 136, 144, 152, 160, 168, 176, 184,
    192, 208, 224, 240, 256, 272, 288, 304, 320, 336, 352, 368, 384, 408, 432, 456, 480, 504, 528,
    552, 576, 608, 640, 672, 704, 736, 768, 808, 848, 888, 928, 984, 1032, 1064, 1128, 1160, 1192,
    1224, 1256, 1288, 1320, 1352, 1416, 1480, 1544, 1608, 1672, 1736, 1800, 1864, 1928, 2024,
    2088, 2152, 2216, 2280, 2408, 2472, 2536, 2600, 2664, 2728, 2792, 2856, 2976, 3104, 3240,
    3368, 3496, 3624, 3752, 3824,
];

/// Data REs available per PRB per slot before the standard's cap: 12
/// subcarriers × 14 symbols minus the configured DMRS/overhead REs.
pub const DEFAULT_OVERHEAD_RE_PER_PRB: u32 = 12;

const RE_PER_PRB_UNCAPPED: u32 = 12 * 14;
const RE_PER_PRB_CAP: u32 = 156;

/// Computes the transport block size in bits for one slot.
pub fn compute_tbs(
    mcs: &McsEntry,
    n_rb: u32,
    n_layers: u32,
    overhead_re_per_prb: u32,
) -> Result<u64> {
    if !matches!(n_layers, 1 | 2 | 4 | 8) {
        return Err(Error::invalid(format!(
            "layer count must be one of {{1,2,4,8}}, got {n_layers}"
        )));
    }
    if n_rb == 0 {
        return Err(Error::invalid("n_rb must be at least 1"));
    }
    if overhead_re_per_prb >= RE_PER_PRB_UNCAPPED {
        return Err(Error::invalid(format!(
            "overhead {overhead_re_per_prb} REs/PRB leaves no data REs (max {})",
            RE_PER_PRB_UNCAPPED - 1
        )));
    }

    let re_per_prb = (RE_PER_PRB_UNCAPPED - overhead_re_per_prb).min(RE_PER_PRB_CAP);
    let n_re = (re_per_prb * n_rb) as f64;
    let n_info = n_re * mcs.code_rate() * mcs.qm as f64 * n_layers as f64;

    if n_info <= 3824.0 {
        let n = ((n_info.log2().floor() as i64) - 6).max(3) as u32;
        let step = (1u64 << n) as f64;
        let quantized = (step * (n_info / step).floor()).max(24.0) as u64;
        let tbs = TBS_TABLE
            .iter()
            .copied()
            .find(|&t| t as u64 >= quantized)
            .expect("quantized N_info ≤ 3824 is always covered by the table");
        Ok(tbs as u64)
    } else {
        let n = (n_info - 24.0).log2().floor() as u32 - 5;
        let step = (1u64 << n) as f64;
        let quantized = (step * ((n_info - 24.0) / step).round()).max(3840.0);
        let tbs = if mcs.code_rate() <= 0.25 {
            let c = ((quantized + 24.0) / 3816.0).ceil();
            8.0 * c * ((quantized + 24.0) / (8.0 * c)).ceil() - 24.0
        } else if quantized > 8424.0 {
            let c = ((quantized + 24.0) / 8424.0).ceil();
            8.0 * c * ((quantized + 24.0) / (8.0 * c)).ceil() - 24.0
        } else {
            8.0 * ((quantized + 24.0) / 8.0).ceil() - 24.0
        };
        Ok(tbs as u64)
    }
}

/// Physical-layer peak rate for a given payload and slot duration.
pub fn peak_rate_mbps(tbs_bits: u64, tti_ms: f64) -> f64 {
    tbs_bits as f64 / tti_ms / 1000.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::mcs::default_mcs_table;

    #[test]
    fn peak_rate_scales() {
        assert_eq!(peak_rate_mbps(139_376, 1.0), 139.376);
        assert_eq!(peak_rate_mbps(278_776, 1.0), 278.776);
        assert_eq!(peak_rate_mbps(0, 1.0), 0.0);
        assert_eq!(peak_rate_mbps(139_376, 0.5), 278.752);
    }

    #[test]
    fn max_mcs_60_rb_reference_payloads() {
        let table = default_mcs_table();
        let mcs27 = &table[27];
        assert_eq!(
            compute_tbs(mcs27, 60, 2, DEFAULT_OVERHEAD_RE_PER_PRB).unwrap(),
            139_376
        );
        assert_eq!(
            compute_tbs(mcs27, 60, 4, DEFAULT_OVERHEAD_RE_PER_PRB).unwrap(),
            278_776
        );
    }

    #[test]
    fn small_allocation_walkthrough() {
        // 1 RB, QPSK, rate 120/1024, 1 layer:
        //   N_RE  = min(156, 168-12) * 1 = 156
        //   N_info = 156 * (120/1024) * 2 = 36.5625  →  n = 3
        //   N'_info = max(24, 8*floor(36.5625/8)) = 32  →  TBS = 32
        let mcs0 = McsEntry {
            index: 0,
            qm: 2,
            code_rate_x1024: 120.0,
        };
        assert_eq!(compute_tbs(&mcs0, 1, 1, DEFAULT_OVERHEAD_RE_PER_PRB).unwrap(), 32);
    }

    #[test]
    fn tiny_info_clamps_to_smallest_tbs() {
        let mcs = McsEntry {
            index: 0,
            qm: 2,
            code_rate_x1024: 1.0,
        };
        assert_eq!(compute_tbs(&mcs, 1, 1, DEFAULT_OVERHEAD_RE_PER_PRB).unwrap(), 24);
    }

    #[test]
    fn monotone_in_rb_qm_and_layers() {
        let table = default_mcs_table();
        // Sweep n_rb with everything else fixed.
        for mcs in [&table[0], &table[9], &table[27]] {
            let mut prev = 0;
            for n_rb in [1u32, 2, 5, 10, 20, 40, 60, 100, 200, 275] {
                let t = compute_tbs(mcs, n_rb, 2, DEFAULT_OVERHEAD_RE_PER_PRB).unwrap();
                assert!(t >= prev, "rb sweep regressed at {n_rb}");
                prev = t;
            }
        }
        // Sweep Qm at fixed rate.
        for n_rb in [1u32, 7, 60] {
            let mut prev = 0;
            for qm in [2u8, 4, 6, 8] {
                let mcs = McsEntry {
                    index: 0,
                    qm,
                    code_rate_x1024: 616.0,
                };
                let t = compute_tbs(&mcs, n_rb, 1, DEFAULT_OVERHEAD_RE_PER_PRB).unwrap();
                assert!(t >= prev, "qm sweep regressed at {qm}");
                prev = t;
            }
        }
        // Sweep layers.
        for mcs in table.iter() {
            let mut prev = 0;
            for layers in [1u32, 2, 4, 8] {
                let t = compute_tbs(mcs, 60, layers, DEFAULT_OVERHEAD_RE_PER_PRB).unwrap();
                assert!(t >= prev, "layer sweep regressed at {layers} (mcs {})", mcs.index);
                prev = t;
            }
        }
    }

    #[test]
    fn invalid_arguments_rejected() {
        let mcs = default_mcs_table()[9];
        assert!(compute_tbs(&mcs, 0, 1, 12).is_err());
        assert!(compute_tbs(&mcs, 60, 3, 12).is_err());
        assert!(compute_tbs(&mcs, 60, 1, 168).is_err());
    }
}
