//! Bit mapping and the three transmitters: the guard-interval precoder for
//! the IIR channel, the FIR pre-filtering baseline and plain CP-1 OFDM.
//!
//! Every transmitter emits blocks of `N + 1` samples: one guard sample
//! followed by the `N` time-domain samples of the block. Power
//! normalization is analytic, so the symbol scale is known to the receiver.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{idft, padded_spectrum, transform_in_place};
use crate::channel::{check_nonsingular, SINGULAR_A};

/// Frequency-domain data symbols of one OFDM block.
pub type SymbolBlock = Vec<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modulation {
    Qpsk,
    Qam16,
}

/// Gray-labelled unit-power constellation.
///
/// QPSK: bit 0 picks the sign of I, bit 1 the sign of Q (`0 -> +`), scaled
/// by `1/sqrt(2)`; so `00 -> (1+j)/sqrt(2)`.
///
/// 16QAM: bits 0-1 pick the I level and bits 2-3 the Q level through the
/// Gray table `00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3`, scaled by `1/sqrt(10)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    pub modulation: Modulation,
    /// Indexed by the label read MSB-first from the bit group.
    pub points: Vec<Complex64>,
    pub bits_per_symbol: usize,
}

impl Constellation {
    pub fn new(modulation: Modulation) -> Self {
        match modulation {
            Modulation::Qpsk => Self::qpsk(),
            Modulation::Qam16 => Self::qam16(),
        }
    }

    pub fn qpsk() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let level = |b: usize| if b == 0 { s } else { -s };
        let points = (0..4).map(|label| Complex64::new(level(label >> 1), level(label & 1))).collect();
        Self { modulation: Modulation::Qpsk, points, bits_per_symbol: 2 }
    }

    pub fn qam16() -> Self {
        let gray = |pair: usize| match pair {
            0b00 => -3.0,
            0b01 => -1.0,
            0b11 => 1.0,
            _ => 3.0,
        };
        let s = 1.0 / 10f64.sqrt();
        let points = (0..16)
            .map(|label| Complex64::new(gray(label >> 2) * s, gray(label & 0b11) * s))
            .collect();
        Self { modulation: Modulation::Qam16, points, bits_per_symbol: 4 }
    }

    pub fn map_symbol(&self, bits: &[u8]) -> Complex64 {
        let label = bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
        self.points[label]
    }

    /// Minimum-distance decision, written back as `bits_per_symbol` bits.
    pub fn demap_symbol(&self, z: Complex64, out: &mut [u8]) {
        let label = self
            .points
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| (z - **a).norm_sqr().total_cmp(&(z - **b).norm_sqr()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let m = self.bits_per_symbol;
        for (i, bit) in out.iter_mut().enumerate().take(m) {
            *bit = ((label >> (m - 1 - i)) & 1) as u8;
        }
    }
}

pub fn random_bits<R: Rng + ?Sized>(rng: &mut R, count: usize) -> Vec<u8> {
    (0..count).map(|_| rng.gen::<bool>() as u8).collect()
}

/// Maps a bit stream onto blocks of `n` unit-power symbols.
pub fn map_bits(bits: &[u8], c: &Constellation, n: usize) -> Result<Vec<SymbolBlock>> {
    let per_block = n * c.bits_per_symbol;
    if n == 0 || bits.len() % per_block != 0 {
        return Err(Error::InvalidInput(format!(
            "{} bits do not fill whole blocks of {per_block} bits",
            bits.len()
        )));
    }
    Ok(bits
        .chunks(per_block)
        .map(|block| block.chunks(c.bits_per_symbol).map(|g| c.map_symbol(g)).collect())
        .collect())
}

/// Per-sample data power `sigma_x^2` that normalizes a precoded frame to unit
/// power, given the squared pole magnitude `alpha` and block size `n`.
pub fn precoded_data_power(alpha: f64, n: usize) -> f64 {
    let n = n as f64;
    (n + 1.0) / ((1.0 + alpha) / (1.0 - alpha) + n)
}

/// A source frame built by [`precode_frame`].
#[derive(Debug, Clone)]
pub struct PrecodedFrame {
    /// `[gi_1, x^1, gi_2, x^2, ...]`, `blocks * (n + 1)` samples.
    pub stream: Vec<Complex64>,
    pub n: usize,
    /// Designed guard samples, one per block.
    pub guards: Vec<Complex64>,
    /// Noiseless time-domain blocks the destination should see (`idft(X / A)`).
    pub y_blocks: Vec<Vec<Complex64>>,
    /// Scaled frequency-domain symbols `X^i`.
    pub x_freq: Vec<Vec<Complex64>>,
    /// Per-sample data power `sigma_x^2`.
    pub data_power: f64,
    /// Factor between unit-power constellation points and `X^i`.
    pub symbol_scale: f64,
}

/// Builds the guard-interval precoded stream for `A(z) = a0 + a1 z^-1`.
///
/// The guard of block `i` is `a0 y^i_{N-1} + a1 y^{i-1}_{N-1}` with a zero
/// virtual block before the first, which makes the destination see the last
/// sample of every `y^i` repeated in front of it.
pub fn precode_frame(
    blocks: &[SymbolBlock],
    a0: Complex64,
    a1: Complex64,
    alpha: f64,
) -> Result<PrecodedFrame> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidInput(format!("alpha {alpha} must lie in [0, 1)")));
    }
    if a0.norm() == 0.0 {
        return Err(Error::InvalidInput("a0 must be nonzero".into()));
    }
    let n = check_blocks(blocks)?;
    let a = padded_spectrum(&[a0, a1], n)?;
    check_nonsingular(&a, SINGULAR_A)?;

    let data_power = precoded_data_power(alpha, n);
    let symbol_scale = (n as f64 * data_power).sqrt();
    let mut stream = Vec::with_capacity(blocks.len() * (n + 1));
    let mut guards = Vec::with_capacity(blocks.len());
    let mut y_blocks = Vec::with_capacity(blocks.len());
    let mut x_freq = Vec::with_capacity(blocks.len());
    let mut prev_tail = Complex64::new(0.0, 0.0);

    for block in blocks {
        let x_k: Vec<Complex64> = block.iter().map(|s| s * symbol_scale).collect();
        let x = idft(&x_k)?;
        let mut y: Vec<Complex64> = x_k.iter().zip(&a).map(|(x, a)| x / a).collect();
        transform_in_place(&mut y, true)?;

        let tail = y[n - 1];
        let guard = a0 * tail + a1 * prev_tail;
        prev_tail = tail;

        stream.push(guard);
        stream.extend_from_slice(&x);
        guards.push(guard);
        y_blocks.push(y);
        x_freq.push(x_k);
    }
    Ok(PrecodedFrame { stream, n, guards, y_blocks, x_freq, data_power, symbol_scale })
}

/// A CP-1 OFDM frame (plain or pre-filtered).
#[derive(Debug, Clone)]
pub struct OfdmFrame {
    pub stream: Vec<Complex64>,
    pub n: usize,
    pub symbol_scale: f64,
}

fn check_blocks(blocks: &[SymbolBlock]) -> Result<usize> {
    let n = blocks.first().map_or(0, |b| b.len());
    if n < 2 || blocks.iter().any(|b| b.len() != n) {
        return Err(Error::InvalidInput("blocks must be non-empty with equal length >= 2".into()));
    }
    Ok(n)
}

fn cp_stream(blocks: &[SymbolBlock], symbol_scale: f64) -> Result<Vec<Complex64>> {
    let n = check_blocks(blocks)?;
    let mut stream = Vec::with_capacity(blocks.len() * (n + 1));
    for block in blocks {
        let x_k: Vec<Complex64> = block.iter().map(|s| s * symbol_scale).collect();
        let x = idft(&x_k)?;
        stream.push(x[n - 1]);
        stream.extend_from_slice(&x);
    }
    Ok(stream)
}

/// Conventional OFDM with a one-sample cyclic prefix and unit sample power.
pub fn standard_cp_frame(blocks: &[SymbolBlock]) -> Result<OfdmFrame> {
    let n = check_blocks(blocks)?;
    let symbol_scale = (n as f64).sqrt();
    Ok(OfdmFrame { stream: cp_stream(blocks, symbol_scale)?, n, symbol_scale })
}

/// Data power `sigma_s^2 = 1 / (|a0|^2 + |a1|^2)` that gives the pre-filtered
/// stream unit power.
pub fn prefilter_data_power(a0: Complex64, a1: Complex64) -> f64 {
    1.0 / (a0.norm_sqr() + a1.norm_sqr())
}

/// CP-1 OFDM passed through the FIR `a0 + a1 z^-1` at the source, so that
/// the IIR channel hands the plain CP stream to the destination.
pub fn prefilter_frame(blocks: &[SymbolBlock], a0: Complex64, a1: Complex64) -> Result<OfdmFrame> {
    if a0.norm() == 0.0 {
        return Err(Error::InvalidInput("a0 must be nonzero".into()));
    }
    let n = check_blocks(blocks)?;
    let symbol_scale = (n as f64 * prefilter_data_power(a0, a1)).sqrt();
    let s = cp_stream(blocks, symbol_scale)?;
    let mut prev = Complex64::new(0.0, 0.0);
    let stream = s
        .iter()
        .map(|&cur| {
            let out = a0 * cur + a1 * prev;
            prev = cur;
            out
        })
        .collect();
    Ok(OfdmFrame { stream, n, symbol_scale })
}
