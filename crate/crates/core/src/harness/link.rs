//! One frame of each transmission scheme, end to end.

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{compute_coeffs, ChannelRealization, IirCoefficients};
use crate::error::{Error, Result};
use crate::fdrelay::{hd_fdd_gain, simulate_fd_link, simulate_hd_fdd, LinkOutput};
use crate::linkbudget::budget;
use crate::receiver::{demap_and_count, extract_blocks, Equalizer, ErrorCount, Scheme};
use crate::txchain::{
    map_bits, precode_frame, prefilter_frame, random_bits, standard_cp_frame, Constellation, Modulation, SymbolBlock,
};

/// Frame geometry shared by every scheme of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSetup {
    pub n: usize,
    pub blocks: usize,
    pub with_direct: bool,
}

/// Equalized output of one frame.
#[derive(Debug, Clone)]
pub struct FrameOutput {
    pub freq: Vec<Vec<Complex64>>,
    pub time: Vec<Vec<Complex64>>,
    /// Factor between unit-power constellation points and transmitted
    /// frequency-domain symbols.
    pub symbol_scale: f64,
}

/// Constellation a scheme transmits. The FDD baseline needs twice the bits
/// per symbol to match the full-duplex spectral efficiency.
pub fn scheme_constellation(scheme: Scheme, fd_modulation: Modulation) -> Constellation {
    match scheme {
        Scheme::HdFdd => Constellation::qam16(),
        _ => Constellation::new(fd_modulation),
    }
}

struct Pass {
    out: LinkOutput,
    symbol_scale: f64,
    equalizer: Equalizer,
}

fn pass<R: Rng + ?Sized>(
    scheme: Scheme,
    setup: &LinkSetup,
    ch: &ChannelRealization,
    beta: f64,
    blocks: &[SymbolBlock],
    rng: &mut R,
    noiseless: bool,
) -> Result<Pass> {
    let n = setup.n;
    let with_direct = setup.with_direct;
    let (mut stream, symbol_scale, equalizer) = match scheme {
        Scheme::Proposed => {
            let co = compute_coeffs(ch, beta)?;
            let frame = precode_frame(blocks, co.a0, co.a1, ch.alpha_for_beta(beta))?;
            let eq = if with_direct { Equalizer::two_step(&co, n)? } else { Equalizer::one_step(&co, n)? };
            (frame.stream, frame.symbol_scale, eq)
        }
        Scheme::Prefilter => {
            let co = compute_coeffs(ch, beta)?;
            let frame = prefilter_frame(blocks, co.a0, co.a1)?;
            // After the pre-filter cancels A(z), only the FIR B(z) remains.
            let b_only = IirCoefficients { a0: Complex64::new(1.0, 0.0), a1: Complex64::new(0.0, 0.0), ..co };
            let eq = if with_direct {
                Equalizer::two_step(&b_only, n)?
            } else {
                Equalizer::flat(Complex64::new(1.0, 0.0), n)?
            };
            (frame.stream, frame.symbol_scale, eq)
        }
        Scheme::CpOfdm => {
            let frame = standard_cp_frame(blocks)?;
            let eq = Equalizer::truncated(ch, beta, n, with_direct)?;
            (frame.stream, frame.symbol_scale, eq)
        }
        Scheme::HdFdd => {
            let frame = standard_cp_frame(blocks)?;
            let eq = Equalizer::flat(ch.h_sr * ch.h_rd * hd_fdd_gain(ch), n)?;
            (frame.stream, frame.symbol_scale, eq)
        }
    };
    let out = if scheme == Scheme::HdFdd {
        simulate_hd_fdd(&stream, ch, rng, noiseless)?
    } else {
        // one trailing sample flushes the relay's processing delay
        stream.push(Complex64::new(0.0, 0.0));
        simulate_fd_link(&stream, ch, beta, rng, with_direct, noiseless)?
    };
    Ok(Pass { out, symbol_scale, equalizer })
}

/// Destination stream of one frame, before block extraction.
pub fn received_stream<R: Rng + ?Sized>(
    scheme: Scheme,
    setup: &LinkSetup,
    ch: &ChannelRealization,
    beta: f64,
    blocks: &[SymbolBlock],
    rng: &mut R,
    noiseless: bool,
) -> Result<Vec<Complex64>> {
    Ok(pass(scheme, setup, ch, beta, blocks, rng, noiseless)?.out.y)
}

/// Transmits `blocks` with `scheme` over `ch` and equalizes the result.
/// `beta` is ignored by the FDD baseline, which uses its own fixed gain.
pub fn run_frame<R: Rng + ?Sized>(
    scheme: Scheme,
    setup: &LinkSetup,
    ch: &ChannelRealization,
    beta: f64,
    blocks: &[SymbolBlock],
    rng: &mut R,
    noiseless: bool,
) -> Result<FrameOutput> {
    let Pass { out, symbol_scale, equalizer } = pass(scheme, setup, ch, beta, blocks, rng, noiseless)?;
    let rx = extract_blocks(&out.y, setup.n, blocks.len(), out.delay_offset)?;
    let mut freq = Vec::with_capacity(rx.len());
    let mut time = Vec::with_capacity(rx.len());
    for block in &rx {
        let eq = equalizer.equalize(block)?;
        freq.push(eq.freq);
        time.push(eq.time);
    }
    Ok(FrameOutput { freq, time, symbol_scale })
}

/// Draws bits, runs one noisy frame and counts bit errors.
pub fn ber_frame<R: Rng + ?Sized>(
    scheme: Scheme,
    setup: &LinkSetup,
    ch: &ChannelRealization,
    beta: f64,
    fd_modulation: Modulation,
    rng: &mut R,
) -> Result<ErrorCount> {
    let c = scheme_constellation(scheme, fd_modulation);
    let bits = random_bits(rng, setup.n * setup.blocks * c.bits_per_symbol);
    let blocks = map_bits(&bits, &c, setup.n)?;
    let out = run_frame(scheme, setup, ch, beta, &blocks, rng, false)?;
    demap_and_count(&out.freq, out.symbol_scale, &bits, &c)
}

/// Accumulated signal and noise energy of a measured SNR.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SnrMeasurement {
    pub signal: f64,
    pub noise: f64,
    pub samples: u64,
}

impl SnrMeasurement {
    pub fn snr(&self) -> f64 {
        self.signal / self.noise
    }
}

impl std::ops::AddAssign for SnrMeasurement {
    fn add_assign(&mut self, rhs: Self) {
        self.signal += rhs.signal;
        self.noise += rhs.noise;
        self.samples += rhs.samples;
    }
}

/// Post-equalization SNR of one frame: the noiseless run gives the signal,
/// the noisy run with the same transmit stream minus the noiseless one gives
/// the noise. Both are measured on the time-domain equalizer output.
pub fn measure_snr_frame<R: Rng + ?Sized>(
    scheme: Scheme,
    setup: &LinkSetup,
    ch: &ChannelRealization,
    beta: f64,
    rng: &mut R,
) -> Result<SnrMeasurement> {
    let c = Constellation::qpsk();
    let bits = random_bits(rng, setup.n * setup.blocks * c.bits_per_symbol);
    let blocks = map_bits(&bits, &c, setup.n)?;
    let clean = run_frame(scheme, setup, ch, beta, &blocks, rng, true)?;
    let noisy = run_frame(scheme, setup, ch, beta, &blocks, rng, false)?;
    let mut m = SnrMeasurement::default();
    for (c, y) in clean.time.iter().flatten().zip(noisy.time.iter().flatten()) {
        m.signal += c.norm_sqr();
        m.noise += (y - c).norm_sqr();
        m.samples += 1;
    }
    Ok(m)
}

/// Post-equalization SINR against the transmitted symbols, residual
/// interference included. Used for the CP-OFDM baseline's gain search.
pub fn measure_sinr_frame<R: Rng + ?Sized>(
    scheme: Scheme,
    setup: &LinkSetup,
    ch: &ChannelRealization,
    beta: f64,
    rng: &mut R,
) -> Result<SnrMeasurement> {
    let c = Constellation::qpsk();
    let bits = random_bits(rng, setup.n * setup.blocks * c.bits_per_symbol);
    let blocks = map_bits(&bits, &c, setup.n)?;
    let out = run_frame(scheme, setup, ch, beta, &blocks, rng, false)?;
    let mut m = SnrMeasurement::default();
    for (x, est) in blocks.iter().flatten().zip(out.freq.iter().flatten()) {
        let x = x * out.symbol_scale;
        m.signal += x.norm_sqr();
        m.noise += (est - x).norm_sqr();
        m.samples += 1;
    }
    Ok(m)
}

/// Analytic post-equalization SNR of a scheme, where one exists.
pub fn analytic_snr(scheme: Scheme, ch: &ChannelRealization, beta: f64, n: usize) -> Result<f64> {
    let b = budget(ch, beta, n)?;
    match scheme {
        Scheme::Proposed => Ok(b.gamma),
        Scheme::Prefilter => Ok(b.gamma_pre),
        other => Err(Error::InvalidInput(format!("no closed-form SNR for {other}"))),
    }
}
