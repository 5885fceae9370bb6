//! Resource-grid storage for one slot.
//!
//! A [`SlotGrid`] holds one complex symbol per (subcarrier, OFDM symbol,
//! stream). Storage is stream-major with the symbol index fastest:
//! element `(k, s, t)` lives at `t·K·S + k·S + s`, so the `S` symbols of
//! one (stream, subcarrier) pair form a contiguous row. Channel
//! application and equalization are row-at-a-time AXPYs over exactly
//! these rows.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::buffer::{ComplexBuffer, PrecisionMode};
use crate::error::{Error, Result};
use crate::phy::channel::ChannelTensor;
use crate::phy::numerology::NrNumerology;
use crate::phy::qam::qam_modulate;

#[derive(Debug, Clone)]
pub struct SlotGrid {
    data: ComplexBuffer,
    n_subcarriers: usize,
    n_symbols: usize,
    n_streams: usize,
    /// Bits the grid was modulated from, when it was built from bits.
    source_bits: Option<Vec<bool>>,
}

impl SlotGrid {
    pub fn zeros(
        numerology: &NrNumerology,
        n_streams: usize,
        precision: PrecisionMode,
    ) -> Result<Self> {
        if n_streams == 0 {
            return Err(Error::invalid("grid needs at least one stream"));
        }
        let k = numerology.n_subcarriers();
        let s = numerology.symbols_per_slot();
        Ok(SlotGrid {
            data: ComplexBuffer::zeros(k * s * n_streams, precision),
            n_subcarriers: k,
            n_symbols: s,
            n_streams,
            source_bits: None,
        })
    }

    /// Draws `qm` random bits per resource element and modulates them onto
    /// the grid. Bit order follows storage order: stream-major, then
    /// subcarrier, then OFDM symbol, `qm` bits per element.
    pub fn random_data(
        numerology: &NrNumerology,
        n_streams: usize,
        qm: u8,
        seed: u64,
        precision: PrecisionMode,
    ) -> Result<Self> {
        let k = numerology.n_subcarriers();
        let s = numerology.symbols_per_slot();
        let n_symbols = k * s * n_streams;
        if n_streams == 0 {
            return Err(Error::invalid("grid needs at least one stream"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits: Vec<bool> = (0..n_symbols * qm as usize).map(|_| rng.gen()).collect();
        Self::from_bits(numerology, n_streams, qm, &bits, precision)
    }

    /// Modulates caller-supplied bits onto the grid (storage order, `qm`
    /// bits per resource element).
    pub fn from_bits(
        numerology: &NrNumerology,
        n_streams: usize,
        qm: u8,
        bits: &[bool],
        precision: PrecisionMode,
    ) -> Result<Self> {
        if n_streams == 0 {
            return Err(Error::invalid("grid needs at least one stream"));
        }
        let k = numerology.n_subcarriers();
        let s = numerology.symbols_per_slot();
        let n_symbols = k * s * n_streams;
        if bits.len() != n_symbols * qm as usize {
            return Err(Error::shape(format!(
                "expected {} bits ({n_symbols} resource elements x {qm}), got {}",
                n_symbols * qm as usize,
                bits.len()
            )));
        }
        let modulated = qam_modulate(bits, qm)?;
        Ok(SlotGrid {
            data: modulated.convert_precision(precision),
            n_subcarriers: k,
            n_symbols: s,
            n_streams,
            source_bits: Some(bits.to_vec()),
        })
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn n_streams(&self) -> usize {
        self.n_streams
    }

    pub fn precision(&self) -> PrecisionMode {
        self.data.precision()
    }

    pub fn buffer(&self) -> &ComplexBuffer {
        &self.data
    }

    pub fn source_bits(&self) -> Option<&[bool]> {
        self.source_bits.as_deref()
    }

    #[inline]
    fn index(&self, k: usize, s: usize, t: usize) -> usize {
        debug_assert!(k < self.n_subcarriers && s < self.n_symbols && t < self.n_streams);
        (t * self.n_subcarriers + k) * self.n_symbols + s
    }

    pub fn get(&self, k: usize, s: usize, t: usize) -> Complex64 {
        self.data.get(self.index(k, s, t))
    }

    pub fn set(&mut self, k: usize, s: usize, t: usize, v: Complex64) {
        let i = self.index(k, s, t);
        self.data.set(i, v);
    }

    /// Start of the contiguous symbol row for `(stream, subcarrier)`.
    pub(crate) fn row_start(&self, k: usize, t: usize) -> usize {
        (t * self.n_subcarriers + k) * self.n_symbols
    }

    /// Wraps a buffer already laid out stream-major (no copy).
    pub(crate) fn from_parts(
        data: ComplexBuffer,
        n_subcarriers: usize,
        n_symbols: usize,
        n_streams: usize,
    ) -> SlotGrid {
        debug_assert_eq!(data.len(), n_subcarriers * n_symbols * n_streams);
        SlotGrid {
            data,
            n_subcarriers,
            n_symbols,
            n_streams,
            source_bits: None,
        }
    }

    pub fn convert_precision(&self, target: PrecisionMode) -> SlotGrid {
        SlotGrid {
            data: self.data.convert_precision(target),
            n_subcarriers: self.n_subcarriers,
            n_symbols: self.n_symbols,
            n_streams: self.n_streams,
            source_bits: self.source_bits.clone(),
        }
    }

    /// Extracts all symbols in storage order.
    pub fn to_vec(&self) -> Vec<Complex64> {
        self.data.to_vec()
    }
}

/// Applies the per-subcarrier channel to a transmit grid:
/// `y[k, s, r] = Σ_t H[k][r][t] · x[k, s, t]`.
///
/// Runs in double precision regardless of the grids' storage precision —
/// this is signal generation, not a measured kernel.
pub fn apply_channel(tx: &SlotGrid, channel: &ChannelTensor) -> Result<SlotGrid> {
    if channel.n_subcarriers() != tx.n_subcarriers {
        return Err(Error::shape(format!(
            "channel has {} subcarriers, grid has {}",
            channel.n_subcarriers(),
            tx.n_subcarriers
        )));
    }
    if channel.nt() != tx.n_streams {
        return Err(Error::shape(format!(
            "channel expects {} transmit streams, grid has {}",
            channel.nt(),
            tx.n_streams
        )));
    }
    let (k_count, s_count) = (tx.n_subcarriers, tx.n_symbols);
    let (nr, nt) = (channel.nr(), channel.nt());

    let x = tx.data.convert_precision(PrecisionMode::Pd);
    let h = if channel.precision() == PrecisionMode::Pd {
        channel.buffer().clone()
    } else {
        channel.buffer().convert_precision(PrecisionMode::Pd)
    };
    let mut rx = SlotGrid {
        data: ComplexBuffer::zeros(k_count * s_count * nr, PrecisionMode::Pd),
        n_subcarriers: k_count,
        n_symbols: s_count,
        n_streams: nr,
        source_bits: None,
    };

    let (xre, xim) = x.planes::<f64>();
    let (hre, him) = h.planes::<f64>();
    let (yre, yim) = rx.data.planes_mut::<f64>();
    for k in 0..k_count {
        let h_base = k * nr * nt;
        for r in 0..nr {
            let y0 = (r * k_count + k) * s_count;
            for t in 0..nt {
                let (ar, ai) = (hre[h_base + r * nt + t], him[h_base + r * nt + t]);
                if ar == 0.0 && ai == 0.0 {
                    continue;
                }
                let x0 = (t * k_count + k) * s_count;
                for s in 0..s_count {
                    let (xr, xi) = (xre[x0 + s], xim[x0 + s]);
                    yre[y0 + s] += ar * xr - ai * xi;
                    yim[y0 + s] += ar * xi + ai * xr;
                }
            }
        }
    }
    Ok(rx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::channel::{ChannelModel, ChannelRealizer};

    fn small() -> NrNumerology {
        NrNumerology::new(15, 1).unwrap()
    }

    #[test]
    fn geometry_and_indexing() {
        let g = SlotGrid::zeros(&small(), 2, PrecisionMode::Pd).unwrap();
        assert_eq!(g.n_subcarriers(), 12);
        assert_eq!(g.n_symbols(), 14);
        assert_eq!(g.buffer().len(), 12 * 14 * 2);

        let mut g = g;
        g.set(3, 5, 1, Complex64::new(1.0, -2.0));
        assert_eq!(g.get(3, 5, 1), Complex64::new(1.0, -2.0));
        assert_eq!(g.get(3, 5, 0), Complex64::new(0.0, 0.0));
        // Row (t=1, k=3) starts where manual arithmetic says it does.
        assert_eq!(g.row_start(3, 1), (1 * 12 + 3) * 14);
    }

    #[test]
    fn bit_order_matches_storage_order() {
        let num = small();
        let qm = 2;
        let n = num.n_subcarriers() * num.symbols_per_slot() * 2;
        // All-zero bits except the chunk for (k=0, s=0, t=1).
        let mut bits = vec![false; n * qm as usize];
        let element = 1 * num.n_subcarriers() * num.symbols_per_slot(); // t=1, k=0, s=0
        bits[element * qm as usize] = true; // I bit of that element
        let g = SlotGrid::from_bits(&num, 2, qm as u8, &bits, PrecisionMode::Pd).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert_eq!(g.get(0, 0, 1), Complex64::new(-s, s));
        assert_eq!(g.get(0, 0, 0), Complex64::new(s, s));
        assert_eq!(g.source_bits().unwrap().len(), bits.len());
    }

    #[test]
    fn random_data_is_seeded() {
        let num = NrNumerology::new(15, 20).unwrap();
        let a = SlotGrid::random_data(&num, 2, 4, 42, PrecisionMode::Pd).unwrap();
        let b = SlotGrid::random_data(&num, 2, 4, 42, PrecisionMode::Pd).unwrap();
        let c = SlotGrid::random_data(&num, 2, 4, 43, PrecisionMode::Pd).unwrap();
        assert!(a.buffer().bit_eq(b.buffer()));
        assert!(!a.buffer().bit_eq(c.buffer()));
        // Unit average power.
        let p: f64 = a.to_vec().iter().map(|v| v.norm_sqr()).sum::<f64>()
            / a.buffer().len() as f64;
        assert!((p - 1.0).abs() < 0.05, "mean symbol power {p}");
    }

    #[test]
    fn identity_channel_passes_grid_through() {
        let num = small();
        let tx = SlotGrid::random_data(&num, 2, 2, 7, PrecisionMode::Pd).unwrap();
        let h = ChannelRealizer::new(ChannelModel::Identity, &num, 2, 2).realize(0);
        let rx = apply_channel(&tx, &h).unwrap();
        assert!(rx.buffer().bit_eq(tx.buffer()));
    }

    #[test]
    fn single_element_matches_direct_matrix_product() {
        let num = small();
        let tx = SlotGrid::random_data(&num, 2, 4, 11, PrecisionMode::Pd).unwrap();
        let h = ChannelRealizer::new(
            ChannelModel::Profile(crate::phy::channel::ChannelProfile::synthetic3(
                crate::phy::channel::DopplerModel::BlockFading,
                13,
            )),
            &num,
            4,
            2,
        )
        .realize(2);
        let rx = apply_channel(&tx, &h).unwrap();
        assert_eq!(rx.n_streams(), 4);
        for &(k, s) in &[(0usize, 0usize), (5, 9), (11, 13)] {
            let m = h.matrix_at(k);
            for r in 0..4 {
                let want = (0..2)
                    .map(|t| m.get(r, t) * tx.get(k, s, t))
                    .sum::<Complex64>();
                let got = rx.get(k, s, r);
                assert!((want - got).norm() < 1e-12, "k={k} s={s} r={r}");
            }
        }
    }

    #[test]
    fn shape_mismatches_are_rejected() {
        let num = small();
        let tx = SlotGrid::random_data(&num, 2, 2, 7, PrecisionMode::Pd).unwrap();
        let h = ChannelRealizer::new(ChannelModel::Identity, &num, 2, 4).realize(0);
        assert!(apply_channel(&tx, &h).is_err());
        let other = NrNumerology::new(15, 2).unwrap();
        let h2 = ChannelRealizer::new(ChannelModel::Identity, &other, 2, 2).realize(0);
        assert!(apply_channel(&tx, &h2).is_err());
    }

    #[test]
    fn bad_bit_count_rejected() {
        let num = small();
        assert!(SlotGrid::from_bits(&num, 1, 2, &[true; 5], PrecisionMode::Pd).is_err());
        assert!(SlotGrid::zeros(&num, 0, PrecisionMode::Pd).is_err());
    }
}
