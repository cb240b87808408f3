//! Quasi-static channel draws and the equivalent first-order IIR channel.
//!
//! With relay gain `beta` the source-to-destination response (relay delay
//! removed) is `H1(z) = 1 / A(z)` with `A(z) = a0 + a1 z^-1`. A direct link
//! turns it into the mixed channel `H2(z) = B(z) / A(z)`.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{padded_spectrum, unit_gaussian};

/// Guard band below the unit circle: a loop is stable iff `|beta h_rr| < 1 - STABILITY_MARGIN`.
pub const STABILITY_MARGIN: f64 = 1e-6;

/// Link gains below this magnitude are redrawn.
pub const MIN_LINK_GAIN: f64 = 1e-12;

/// Subcarriers of `A` below this magnitude make the precoder singular.
pub const SINGULAR_A: f64 = 1e-12;

/// Variances of the four link gains and the two receiver noise powers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub var_sr: f64,
    pub var_rd: f64,
    /// Residual self-interference power at the relay after cancellation.
    pub var_rr: f64,
    /// Direct source-destination link power, 0 when there is no direct link.
    pub var_sd: f64,
    pub sigma2_r: f64,
    pub sigma2_d: f64,
}

impl ChannelConfig {
    /// Unit-variance relay hops, `sigma_R^2 = sigma_D^2 = 1 / SNR_c`, RSI power
    /// `rsi_db` and an optional direct link attenuated by `direct_pathloss_db`.
    pub fn physical(snr_c_db: f64, rsi_db: f64, direct_pathloss_db: Option<f64>) -> Self {
        let sigma2 = 10f64.powf(-snr_c_db / 10.0);
        Self {
            var_sr: 1.0,
            var_rd: 1.0,
            var_rr: 10f64.powf(rsi_db / 10.0),
            var_sd: direct_pathloss_db.map_or(0.0, |pl| 10f64.powf(-pl / 10.0)),
            sigma2_r: sigma2,
            sigma2_d: sigma2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let vars = [self.var_sr, self.var_rd, self.var_rr, self.var_sd];
        if vars.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidInput("channel variances must be finite and >= 0".into()));
        }
        if self.var_sr == 0.0 || self.var_rd == 0.0 {
            return Err(Error::InvalidInput("relay hop variances must be positive".into()));
        }
        if !(self.sigma2_r > 0.0 && self.sigma2_d > 0.0)
            || !self.sigma2_r.is_finite()
            || !self.sigma2_d.is_finite()
        {
            return Err(Error::InvalidInput("noise powers must be finite and positive".into()));
        }
        Ok(())
    }
}

/// One quasi-static draw of the link gains plus the noise powers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelRealization {
    pub h_sr: Complex64,
    pub h_rd: Complex64,
    /// Residual self-interference gain of the relay loop.
    pub h_rr: Complex64,
    /// Direct-link gain, exactly zero without a direct link.
    pub h_sd: Complex64,
    pub sigma2_r: f64,
    pub sigma2_d: f64,
}

impl ChannelRealization {
    /// Flat channel with real gains, handy for fixed-channel experiments.
    pub fn fixed(h_sr: f64, h_rd: f64, h_rr: f64, h_sd: f64, sigma2_r: f64, sigma2_d: f64) -> Self {
        let c = |x: f64| Complex64::new(x, 0.0);
        Self { h_sr: c(h_sr), h_rd: c(h_rd), h_rr: c(h_rr), h_sd: c(h_sd), sigma2_r, sigma2_d }
    }

    pub fn has_direct_link(&self) -> bool {
        self.h_sd != Complex64::new(0.0, 0.0)
    }

    /// Relay amplitude gain that puts the loop pole at `|beta h_rr|^2 = alpha`.
    pub fn beta_for_alpha(&self, alpha: f64) -> Result<f64> {
        let rr = self.h_rr.norm();
        if rr == 0.0 {
            return Err(Error::DegenerateChannel("h_rr = 0 has no alpha parameterization".into()));
        }
        Ok(alpha.sqrt() / rr)
    }

    pub fn alpha_for_beta(&self, beta: f64) -> f64 {
        (beta * self.h_rr.norm()).powi(2)
    }

    fn check_links(&self) -> Result<()> {
        if self.h_sr.norm() < MIN_LINK_GAIN || self.h_rd.norm() < MIN_LINK_GAIN {
            return Err(Error::DegenerateChannel("h_sr and h_rd must be nonzero".into()));
        }
        Ok(())
    }
}

/// Draws one realization. Every gain consumes one complex Gaussian even when
/// its variance is zero, so configs that differ only in variances see the
/// same underlying draws for the same seed.
///
/// `h_sr` or `h_rd` below [`MIN_LINK_GAIN`] in magnitude are redrawn.
pub fn draw_channels<R: Rng + ?Sized>(rng: &mut R, cfg: &ChannelConfig) -> Result<ChannelRealization> {
    cfg.validate()?;
    let scale = |v: f64| (v / 2.0).sqrt();
    loop {
        let h_sr = unit_gaussian(rng) * scale(cfg.var_sr);
        let h_rd = unit_gaussian(rng) * scale(cfg.var_rd);
        let h_rr = unit_gaussian(rng) * scale(cfg.var_rr);
        let h_sd = unit_gaussian(rng) * scale(cfg.var_sd);
        if h_sr.norm() < MIN_LINK_GAIN || h_rd.norm() < MIN_LINK_GAIN {
            continue;
        }
        return Ok(ChannelRealization {
            h_sr,
            h_rd,
            h_rr,
            h_sd,
            sigma2_r: cfg.sigma2_r,
            sigma2_d: cfg.sigma2_d,
        });
    }
}

/// `true` iff `|beta h_rr| < 1 - STABILITY_MARGIN`.
pub fn is_stable(beta: f64, h_rr: Complex64) -> bool {
    (beta * h_rr.norm()) < 1.0 - STABILITY_MARGIN
}

pub fn check_stable(beta: f64, h_rr: Complex64) -> Result<()> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidInput(format!("relay gain {beta} must be finite and >= 0")));
    }
    if is_stable(beta, h_rr) {
        Ok(())
    } else {
        Err(Error::Unstable { pole_magnitude: beta * h_rr.norm(), margin: STABILITY_MARGIN })
    }
}

/// Taps of `A(z)` and `B(z)` for one channel and relay gain.
///
/// `b0, b1` are the numerator of `H2 = B / A` over this same `A`, i.e. the
/// raw numerator `h_sd + (beta h_sr h_rd - beta h_rr h_sd) z^-1` of the
/// monic-denominator form, divided by `beta h_sr h_rd`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IirCoefficients {
    pub a0: Complex64,
    pub a1: Complex64,
    pub b0: Complex64,
    pub b1: Complex64,
}

impl IirCoefficients {
    /// `A_k = a0 + a1 exp(-j 2 pi k / n)` for every subcarrier.
    pub fn a_spectrum(&self, n: usize) -> Result<Vec<Complex64>> {
        let spec = padded_spectrum(&[self.a0, self.a1], n)?;
        check_nonsingular(&spec, SINGULAR_A)?;
        Ok(spec)
    }

    /// `B_k` for every subcarrier, rejecting any with `|B_k| < eps`.
    pub fn b_spectrum(&self, n: usize, eps: f64) -> Result<Vec<Complex64>> {
        let spec = padded_spectrum(&[self.b0, self.b1], n)?;
        check_nonsingular(&spec, eps)?;
        Ok(spec)
    }
}

pub(crate) fn check_nonsingular(spec: &[Complex64], eps: f64) -> Result<()> {
    match spec.iter().position(|x| x.norm() < eps) {
        Some(k) => Err(Error::SingularSubcarrier { k, magnitude: spec[k].norm() }),
        None => Ok(()),
    }
}

pub fn compute_coeffs(ch: &ChannelRealization, beta: f64) -> Result<IirCoefficients> {
    if !(beta > 0.0) {
        return Err(Error::InvalidInput(format!("relay gain {beta} must be positive")));
    }
    ch.check_links()?;
    check_stable(beta, ch.h_rr)?;
    let g = ch.h_sr * ch.h_rd;
    let a0 = (g * beta).inv();
    let a1 = -ch.h_rr / g;
    let raw_b1 = g * beta - ch.h_rr * ch.h_sd * beta;
    Ok(IirCoefficients { a0, a1, b0: ch.h_sd * a0, b1: raw_b1 * a0 })
}

/// `H1` on subcarrier `k` of an `n`-point block: `1 / A_k`.
pub fn frequency_response_h1(coeffs: &IirCoefficients, k: usize, n: usize) -> Result<Complex64> {
    if k >= n {
        return Err(Error::InvalidInput(format!("subcarrier {k} out of range for N = {n}")));
    }
    let a_k = coeffs.a0
        + coeffs.a1 * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * k as f64 / n as f64);
    if a_k.norm() < SINGULAR_A {
        return Err(Error::SingularSubcarrier { k, magnitude: a_k.norm() });
    }
    Ok(a_k.inv())
}

/// Relay-to-destination taps `h_j = h_rd beta (beta h_rr)^(j-1)`, `j = 1..=taps`.
pub fn relay_impulse_taps(ch: &ChannelRealization, beta: f64, taps: usize) -> Result<Vec<Complex64>> {
    if taps == 0 {
        return Err(Error::InvalidInput("tap count must be >= 1".into()));
    }
    check_stable(beta, ch.h_rr)?;
    let pole = ch.h_rr * beta;
    let mut out = Vec::with_capacity(taps);
    let mut tap = ch.h_rd * beta;
    for _ in 0..taps {
        out.push(tap);
        tap *= pole;
    }
    Ok(out)
}
