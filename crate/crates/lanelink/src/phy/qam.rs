//! Square-QAM mapping per the NR constellation definitions (TS 38.211
//! §5.1): Gray-coded, even bits on I, odd bits on Q, unit average power.

use num_complex::Complex64;

use crate::buffer::{ComplexBuffer, Layout, PrecisionMode};
use crate::error::{Error, Result};

pub const SUPPORTED_QM: [u8; 4] = [2, 4, 6, 8];

fn check_qm(qm: u8) -> Result<usize> {
    if !SUPPORTED_QM.contains(&qm) {
        return Err(Error::invalid(format!(
            "modulation order {qm} not supported (one of {SUPPORTED_QM:?})"
        )));
    }
    Ok(qm as usize / 2)
}

/// Amplitude normalization: E|x|² over the constellation is
/// 2·(4^k − 1)/3 per axis pair, so dividing by its square root gives unit
/// average power.
fn amplitude_scale(bits_per_axis: usize) -> f64 {
    let levels2 = (1u64 << (2 * bits_per_axis)) as f64;
    (2.0 * (levels2 - 1.0) / 3.0).sqrt()
}

/// Gray level for one axis: the TS 38.211 nested form
/// `(1-2b₀)·(2^{k-1} − (1-2b₁)·(2^{k-2} − …))`, giving odd levels
/// ±1..±(2^k−1).
fn axis_level(bits: &[bool]) -> f64 {
    let k = bits.len();
    let sign = |b: bool| if b { -1.0 } else { 1.0 };
    let mut level = sign(bits[k - 1]);
    for i in (0..k - 1).rev() {
        level = sign(bits[i]) * ((1u64 << (k - 1 - i)) as f64 - level);
    }
    level
}

/// Maps `bits` (length divisible by `qm`) to unit-power QAM symbols.
pub fn qam_modulate(bits: &[bool], qm: u8) -> Result<ComplexBuffer> {
    let k = check_qm(qm)?;
    if bits.len() % qm as usize != 0 {
        return Err(Error::invalid(format!(
            "bit count {} not divisible by modulation order {qm}",
            bits.len()
        )));
    }
    let n = bits.len() / qm as usize;
    let scale = amplitude_scale(k);
    let mut i_bits = vec![false; k];
    let mut q_bits = vec![false; k];
    ComplexBuffer::from_fn(n, Layout::Split, PrecisionMode::Pd, 64, |s| {
        let chunk = &bits[s * qm as usize..(s + 1) * qm as usize];
        for a in 0..k {
            i_bits[a] = chunk[2 * a];
            q_bits[a] = chunk[2 * a + 1];
        }
        Complex64::new(axis_level(&i_bits) / scale, axis_level(&q_bits) / scale)
    })
}

/// Nearest-point decision for one axis value (already denormalized to the
/// odd-integer lattice). Candidates are scanned in lexicographic bit
/// order with strict improvement, so exact ties resolve to the smallest
/// label.
fn axis_decide(v: f64, k: usize, out: &mut [bool]) {
    let mut best = f64::INFINITY;
    let mut scratch = vec![false; k];
    for pattern in 0..(1u32 << k) {
        for (a, s) in scratch.iter_mut().enumerate() {
            *s = (pattern >> (k - 1 - a)) & 1 == 1;
        }
        let d = (v - axis_level(&scratch)).abs();
        if d < best {
            best = d;
            out.copy_from_slice(&scratch);
        }
    }
}

/// Hard-decision demapping; inverse of [`qam_modulate`] on noiseless
/// input, nearest-point otherwise.
pub fn qam_demodulate_hard(y: &ComplexBuffer, qm: u8) -> Result<Vec<bool>> {
    let k = check_qm(qm)?;
    let scale = amplitude_scale(k);
    let mut bits = vec![false; y.len() * qm as usize];
    let mut i_bits = vec![false; k];
    let mut q_bits = vec![false; k];
    for s in 0..y.len() {
        let v = y.get(s);
        axis_decide(v.re * scale, k, &mut i_bits);
        axis_decide(v.im * scale, k, &mut q_bits);
        let chunk = &mut bits[s * qm as usize..(s + 1) * qm as usize];
        for a in 0..k {
            chunk[2 * a] = i_bits[a];
            chunk[2 * a + 1] = q_bits[a];
        }
    }
    Ok(bits)
}
