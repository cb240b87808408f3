//! Block extraction, frequency-domain equalization, slicing and error counting.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::channel::{check_nonsingular, relay_impulse_taps, ChannelRealization, IirCoefficients};
use crate::error::{Error, Result};
use crate::numerics::{padded_spectrum, transform_in_place};
use crate::txchain::Constellation;

/// Smallest `|B_k|` the two-step equalizer divides by.
pub const SINGULAR_B: f64 = 1e-9;

/// Smallest `|H_k|` the truncated one-tap equalizer divides by.
pub const SINGULAR_TRUNCATED: f64 = 1e-9;

/// Drops the first `offset` samples, then splits `blocks` groups of `n + 1`
/// samples and discards the guard position of each.
pub fn extract_blocks(y: &[Complex64], n: usize, blocks: usize, offset: usize) -> Result<Vec<Vec<Complex64>>> {
    let needed = offset + blocks * (n + 1);
    if y.len() < needed {
        return Err(Error::Framing { needed, available: y.len() });
    }
    Ok(y[offset..needed].chunks(n + 1).map(|c| c[1..].to_vec()).collect())
}

/// One equalized block in both domains.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualizedBlock {
    pub freq: Vec<Complex64>,
    pub time: Vec<Complex64>,
}

/// Per-subcarrier linear equalizer `X_hat_k = w_k Y_k`.
#[derive(Debug, Clone)]
pub struct Equalizer {
    weights: Vec<Complex64>,
}

impl Equalizer {
    /// Multiplies by `A_k`; undoes `H1 = 1 / A` without any division.
    pub fn one_step(coeffs: &IirCoefficients, n: usize) -> Result<Self> {
        Ok(Self { weights: padded_spectrum(&[coeffs.a0, coeffs.a1], n)? })
    }

    /// `A_k / B_k` for the mixed channel `H2 = B / A`. Zero-forcing, no
    /// regularization: a subcarrier with `|B_k| < SINGULAR_B` is an error.
    pub fn two_step(coeffs: &IirCoefficients, n: usize) -> Result<Self> {
        let a = padded_spectrum(&[coeffs.a0, coeffs.a1], n)?;
        let b = coeffs.b_spectrum(n, SINGULAR_B)?;
        Ok(Self { weights: a.iter().zip(&b).map(|(a, b)| a / b).collect() })
    }

    /// One tap per subcarrier over the first two effective taps, the most a
    /// one-sample prefix covers: `[h_sr h_1, h_sr h_2]` on the delay-aligned
    /// relay path, `[h_sd, h_sr h_1]` with a direct link. Everything beyond
    /// is left as interference.
    pub fn truncated(ch: &ChannelRealization, beta: f64, n: usize, with_direct: bool) -> Result<Self> {
        let h = relay_impulse_taps(ch, beta, 2)?;
        let taps = if with_direct {
            [ch.h_sd, ch.h_sr * h[0]]
        } else {
            [ch.h_sr * h[0], ch.h_sr * h[1]]
        };
        let spec = padded_spectrum(&taps, n)?;
        check_nonsingular(&spec, SINGULAR_TRUNCATED)?;
        Ok(Self { weights: spec.iter().map(|h| h.inv()).collect() })
    }

    /// Flat gain inversion, `w_k = 1 / gain`.
    pub fn flat(gain: Complex64, n: usize) -> Result<Self> {
        if gain.norm() < SINGULAR_TRUNCATED {
            return Err(Error::SingularSubcarrier { k: 0, magnitude: gain.norm() });
        }
        Ok(Self { weights: vec![gain.inv(); n] })
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn equalize(&self, block: &[Complex64]) -> Result<EqualizedBlock> {
        if block.len() != self.weights.len() {
            return Err(Error::InvalidInput(format!(
                "block of {} samples for a {}-point equalizer",
                block.len(),
                self.weights.len()
            )));
        }
        let mut freq = block.to_vec();
        transform_in_place(&mut freq, false)?;
        freq.iter_mut().zip(&self.weights).for_each(|(y, w)| *y *= w);
        let mut time = freq.clone();
        transform_in_place(&mut time, true)?;
        Ok(EqualizedBlock { freq, time })
    }
}

pub fn equalize_iir(block: &[Complex64], coeffs: &IirCoefficients) -> Result<EqualizedBlock> {
    Equalizer::one_step(coeffs, block.len())?.equalize(block)
}

pub fn equalize_mixed(block: &[Complex64], coeffs: &IirCoefficients) -> Result<EqualizedBlock> {
    Equalizer::two_step(coeffs, block.len())?.equalize(block)
}

pub fn equalize_truncated(
    block: &[Complex64],
    ch: &ChannelRealization,
    beta: f64,
    with_direct: bool,
) -> Result<EqualizedBlock> {
    Equalizer::truncated(ch, beta, block.len(), with_direct)?.equalize(block)
}

/// Transmission schemes compared by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// Guard-interval precoding with IIR equalization.
    Proposed,
    /// FIR pre-filtering at the source over CP-1 OFDM.
    Prefilter,
    /// Plain CP-1 OFDM with a truncated one-tap equalizer.
    CpOfdm,
    /// Half-duplex FDD relay with 16QAM.
    HdFdd,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Proposed, Scheme::Prefilter, Scheme::CpOfdm, Scheme::HdFdd];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::Prefilter => "prefilter",
            Scheme::CpOfdm => "cp_ofdm",
            Scheme::HdFdd => "hd_fdd",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sch| sch.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown scheme '{s}'")))
    }
}

/// Raw bit and error tallies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ErrorCount {
    pub bits: u64,
    pub errors: u64,
}

impl ErrorCount {
    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.errors as f64 / self.bits as f64
        }
    }
}

impl std::ops::AddAssign for ErrorCount {
    fn add_assign(&mut self, rhs: Self) {
        self.bits += rhs.bits;
        self.errors += rhs.errors;
    }
}

/// One measured point of a BER curve.
#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub scheme: Scheme,
    pub sweep_value: f64,
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
}

impl BerRecord {
    pub fn new(scheme: Scheme, sweep_value: f64, count: ErrorCount) -> Result<Self> {
        if count.bits == 0 {
            return Err(Error::InvalidInput("a BER record needs at least one bit".into()));
        }
        Ok(Self { scheme, sweep_value, bits: count.bits, errors: count.errors, ber: count.ber() })
    }
}

/// De-scales frequency-domain estimates by `symbol_scale`, slices them to
/// the nearest constellation point and counts bit errors against `reference`.
pub fn demap_and_count(
    freq_blocks: &[Vec<Complex64>],
    symbol_scale: f64,
    reference: &[u8],
    c: &Constellation,
) -> Result<ErrorCount> {
    let symbols: usize = freq_blocks.iter().map(Vec::len).sum();
    if symbols * c.bits_per_symbol != reference.len() {
        return Err(Error::InvalidInput(format!(
            "{symbols} symbols carry {} bits, reference has {}",
            symbols * c.bits_per_symbol,
            reference.len()
        )));
    }
    if !(symbol_scale > 0.0) {
        return Err(Error::InvalidInput("symbol scale must be positive".into()));
    }
    let mut decided = vec![0u8; c.bits_per_symbol];
    let mut errors = 0u64;
    for (sym, truth) in freq_blocks.iter().flatten().zip(reference.chunks(c.bits_per_symbol)) {
        c.demap_symbol(sym / symbol_scale, &mut decided);
        errors += decided.iter().zip(truth).filter(|(a, b)| a != b).count() as u64;
    }
    Ok(ErrorCount { bits: reference.len() as u64, errors })
}
