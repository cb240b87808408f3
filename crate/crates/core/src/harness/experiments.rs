//! Monte-Carlo drivers for the gain sweep and the three BER sweeps.
//!
//! Trial `t` of every sweep point and every scheme uses the RNG seeded with
//! `seed + t`, so all schemes and all points see the same channel draws,
//! bits and noise sequences wherever their configurations allow.

use rayon::prelude::*;

use super::config::{BetaPolicy, Figure, SimConfig};
use super::link::{analytic_snr, ber_frame, measure_sinr_frame, measure_snr_frame, LinkSetup, SnrMeasurement};
use crate::channel::{draw_channels, ChannelConfig, ChannelRealization};
use crate::error::{Error, Result};
use crate::fdrelay::hd_fdd_gain;
use crate::linkbudget::{optimize_gain, optimize_prefilter_gain, GainSolution, ALPHA_EDGE, DEFAULT_GAIN_CAP};
use crate::numerics::trial_rng;
use crate::receiver::{BerRecord, ErrorCount, Scheme};
use num_complex::Complex64;

/// Seed offset of the CP-OFDM baseline's pilot runs, kept apart from the
/// data trials.
const PILOT_SEED_SALT: u64 = 0x5DEE_CE66_D1CE_4E5B;

/// Pole power range of the CP-OFDM gain grid, the same domain the analytic
/// optimizers search.
const CP_ALPHA_RANGE: (f64, f64) = (ALPHA_EDGE, 1.0 - ALPHA_EDGE);

/// Pole power range of the gain sweep grid.
const SWEEP_ALPHA_RANGE: (f64, f64) = (0.01, 0.99);

/// One point of the gain sweep. SNRs are linear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainPoint {
    pub beta2: f64,
    pub alpha: f64,
    pub gamma_analytic: f64,
    pub gamma_measured: f64,
    pub gamma_pre_analytic: f64,
    pub gamma_pre_measured: f64,
    /// Grid point closest to the optimizer's gain.
    pub optimum: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Records {
    Ber(Vec<BerRecord>),
    Gain { points: Vec<GainPoint>, optimum: GainSolution },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub figure: Figure,
    /// Name of the swept quantity, used as the CSV column header.
    pub sweep_name: &'static str,
    pub records: Records,
    /// Version line followed by the config echo.
    pub metadata: String,
}

pub fn version_string() -> String {
    format!("fdr-ofdm {}", env!("CARGO_PKG_VERSION"))
}

fn metadata(cfg: &SimConfig) -> String {
    format!("{}\n{}", version_string(), cfg.echo())
}

fn complex((re, im): (f64, f64)) -> Complex64 {
    Complex64::new(re, im)
}

/// `count` points spaced evenly in `ln(x)` over `[lo, hi]`.
fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

fn linear_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
}

/// Relay gain of the CP-OFDM baseline: the grid point with the highest
/// measured post-equalization SINR over a short pilot run. All grid points
/// share the same pilot bits and noise.
pub fn cp_ofdm_gain(cfg: &SimConfig, ch: &ChannelRealization, with_direct: bool, pilot_id: u64) -> Result<f64> {
    let rr = ch.h_rr.norm();
    if rr == 0.0 {
        // no loop, no interference beyond the prefix: more gain is never worse
        return Ok(DEFAULT_GAIN_CAP.sqrt());
    }
    let setup = LinkSetup { n: cfg.n, blocks: cfg.pilot_blocks, with_direct };
    let mut best = (f64::NEG_INFINITY, 0.0);
    for alpha in log_grid(CP_ALPHA_RANGE.0, CP_ALPHA_RANGE.1, cfg.cp_gain_points) {
        let beta = alpha.sqrt() / rr;
        let mut m = SnrMeasurement::default();
        for p in 0..cfg.pilot_frames as u64 {
            let mut rng = trial_rng(cfg.seed ^ PILOT_SEED_SALT, pilot_id * cfg.pilot_frames as u64 + p);
            m += measure_sinr_frame(Scheme::CpOfdm, &setup, ch, beta, &mut rng)?;
        }
        if m.snr() > best.0 {
            best = (m.snr(), beta);
        }
    }
    Ok(best.1)
}

/// Relay gain a scheme uses on one channel draw.
pub fn select_beta(
    scheme: Scheme,
    cfg: &SimConfig,
    ch: &ChannelRealization,
    with_direct: bool,
    trial: u64,
) -> Result<f64> {
    if scheme == Scheme::HdFdd {
        return Ok(hd_fdd_gain(ch));
    }
    match &cfg.beta_policy {
        BetaPolicy::Fixed(beta) => Ok(*beta),
        BetaPolicy::Sweep(_) => Err(Error::Config("a beta sweep only applies to the gain sweep (fig2)".into())),
        BetaPolicy::Optimized => match scheme {
            Scheme::Proposed => Ok(optimize_gain(ch, cfg.n, cfg.grid_points, cfg.tolerance)?.beta_star),
            Scheme::Prefilter => Ok(optimize_prefilter_gain(ch, cfg.grid_points, cfg.tolerance)?.beta_star),
            Scheme::CpOfdm => cp_ofdm_gain(cfg, ch, with_direct, trial),
            Scheme::HdFdd => unreachable!(),
        },
    }
}

fn ber_trial(scheme: Scheme, cfg: &SimConfig, chcfg: &ChannelConfig, setup: &LinkSetup, trial: u64) -> Result<ErrorCount> {
    let mut rng = trial_rng(cfg.seed, trial);
    let ch = draw_channels(&mut rng, chcfg)?;
    let beta = select_beta(scheme, cfg, &ch, setup.with_direct, trial)?;
    ber_frame(scheme, setup, &ch, beta, cfg.constellation, &mut rng)
}

/// BER of one scheme at one operating point, pooled over channel draws.
///
/// Runs `frames` draws, then keeps adding batches of `frames` draws until at
/// least `min_errors` errors are seen or `max_frames` draws are spent.
pub fn ber_point(scheme: Scheme, cfg: &SimConfig, chcfg: &ChannelConfig, with_direct: bool, sweep_value: f64) -> Result<BerRecord> {
    let setup = LinkSetup { n: cfg.n, blocks: cfg.blocks_per_frame, with_direct };
    let max = cfg.max_frames();
    let mut total = ErrorCount::default();
    let mut done = 0usize;
    while done < cfg.frames || (total.errors < cfg.min_errors && done < max) {
        let end = (done + cfg.frames).min(max.max(cfg.frames));
        let counts: Vec<ErrorCount> = (done..end)
            .into_par_iter()
            .map(|t| ber_trial(scheme, cfg, chcfg, &setup, t as u64))
            .collect::<Result<_>>()?;
        for c in counts {
            total += c;
        }
        done = end;
    }
    BerRecord::new(scheme, sweep_value, total)
}

fn ber_sweep(cfg: &SimConfig, figure: Figure) -> Result<SweepResult> {
    cfg.validate()?;
    let direct = match figure {
        Figure::BerNoDirect => false,
        Figure::BerDirect => true,
        Figure::BerRsi => cfg.direct_link,
        Figure::GainSweep => return Err(Error::Config("the gain sweep has no BER records".into())),
    };
    let pathloss = direct.then_some(cfg.direct_pathloss_db);
    let points: Vec<(f64, ChannelConfig)> = if figure == Figure::BerRsi {
        cfg.rsi_db.iter().map(|&r| (r, ChannelConfig::physical(cfg.snr_c_db[0], r, pathloss))).collect()
    } else {
        cfg.snr_c_db.iter().map(|&s| (s, ChannelConfig::physical(s, cfg.rsi_db[0], pathloss))).collect()
    };
    let mut records = Vec::with_capacity(points.len() * cfg.schemes.len());
    for &scheme in &cfg.schemes {
        for (value, chcfg) in &points {
            records.push(ber_point(scheme, cfg, chcfg, direct, *value)?);
        }
    }
    let mut echo = cfg.clone();
    echo.direct_link = direct;
    Ok(SweepResult {
        figure,
        sweep_name: if figure == Figure::BerRsi { "rsi_db" } else { "snr_c_db" },
        records: Records::Ber(records),
        metadata: metadata(&echo),
    })
}

/// BER against SNR_c without a direct link.
pub fn run_fig3(cfg: &SimConfig) -> Result<SweepResult> {
    ber_sweep(cfg, Figure::BerNoDirect)
}

/// BER against SNR_c with a direct link.
pub fn run_fig4(cfg: &SimConfig) -> Result<SweepResult> {
    ber_sweep(cfg, Figure::BerDirect)
}

/// BER against RSI power at the first configured SNR_c.
pub fn run_fig5(cfg: &SimConfig) -> Result<SweepResult> {
    ber_sweep(cfg, Figure::BerRsi)
}

/// Fixed channel of the gain sweep at the first configured SNR_c.
pub fn gain_sweep_channel(cfg: &SimConfig) -> ChannelRealization {
    let sigma2 = 10f64.powf(-cfg.snr_c_db[0] / 10.0);
    ChannelRealization {
        h_sr: complex(cfg.h_sr),
        h_rd: complex(cfg.h_rd),
        h_rr: complex(cfg.h_rr),
        h_sd: Complex64::new(0.0, 0.0),
        sigma2_r: sigma2,
        sigma2_d: sigma2,
    }
}

/// Measured post-equalization SNR over `frames` frames; frame `f` uses the
/// RNG seeded with `seed + f`.
pub fn measured_snr(scheme: Scheme, ch: &ChannelRealization, beta: f64, setup: &LinkSetup, seed: u64, frames: usize) -> Result<f64> {
    let mut m = SnrMeasurement::default();
    for f in 0..frames as u64 {
        m += measure_snr_frame(scheme, setup, ch, beta, &mut trial_rng(seed, f))?;
    }
    Ok(m.snr())
}

/// Analytic and measured SNR of both chains against the relay power gain,
/// on the fixed channel of the config.
pub fn run_fig2(cfg: &SimConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let ch = gain_sweep_channel(cfg);
    let rr = ch.h_rr.norm();
    let betas: Vec<f64> = match &cfg.beta_policy {
        BetaPolicy::Sweep(list) => list.clone(),
        _ if rr == 0.0 => {
            return Err(Error::DegenerateChannel("the gain sweep needs h_rr != 0 or an explicit beta sweep".into()))
        }
        _ => linear_grid(SWEEP_ALPHA_RANGE.0, SWEEP_ALPHA_RANGE.1, cfg.gain_points)
            .into_iter()
            .map(|a| a.sqrt() / rr)
            .collect(),
    };
    let optimum = optimize_gain(&ch, cfg.n, cfg.grid_points, cfg.tolerance)?;
    let setup = LinkSetup { n: cfg.n, blocks: cfg.blocks_per_frame, with_direct: false };

    let mut points: Vec<GainPoint> = betas
        .par_iter()
        .map(|&beta| {
            Ok(GainPoint {
                beta2: beta * beta,
                alpha: ch.alpha_for_beta(beta),
                gamma_analytic: analytic_snr(Scheme::Proposed, &ch, beta, cfg.n)?,
                gamma_measured: measured_snr(Scheme::Proposed, &ch, beta, &setup, cfg.seed, cfg.frames)?,
                gamma_pre_analytic: analytic_snr(Scheme::Prefilter, &ch, beta, cfg.n)?,
                gamma_pre_measured: measured_snr(Scheme::Prefilter, &ch, beta, &setup, cfg.seed, cfg.frames)?,
                optimum: false,
            })
        })
        .collect::<Result<_>>()?;
    let target = optimum.power_gain();
    if let Some(best) = points
        .iter_mut()
        .min_by(|a, b| (a.beta2 - target).abs().total_cmp(&(b.beta2 - target).abs()))
    {
        best.optimum = true;
    }
    Ok(SweepResult {
        figure: Figure::GainSweep,
        sweep_name: "beta2",
        records: Records::Gain { points, optimum },
        metadata: metadata(cfg),
    })
}
