//! Closed-form noise budget of the precoded link, the SNR of the
//! pre-filtering baseline, their gap, and relay gain optimization.
//!
//! Everything is parameterized by `alpha = |beta h_rr|^2`, the squared
//! magnitude of the relay loop pole. Infinite tap sums use their geometric
//! closed forms.

use crate::channel::{check_stable, ChannelRealization};
use crate::error::{Error, Result};
use crate::txchain::precoded_data_power;

/// Search interval for `alpha` is `[ALPHA_EDGE, 1 - ALPHA_EDGE]`.
pub const ALPHA_EDGE: f64 = 1e-4;

/// Power gain `beta^2` used when `h_rr = 0` leaves no interior optimum.
pub const DEFAULT_GAIN_CAP: f64 = 100.0;

pub const DEFAULT_GRID_POINTS: usize = 512;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

/// Every scalar power and SNR of one `(channel, beta)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub alpha: f64,
    pub beta: f64,
    /// Destination noise after equalization.
    pub p_d: f64,
    /// Relay noise after equalization at block positions `1..N-1`.
    pub p_r1: f64,
    /// Power of relay noise as seen at the destination.
    pub p_n: f64,
    /// Relay noise after equalization at block position 0.
    pub p_r2: f64,
    /// Block-averaged equalized relay noise.
    pub p_r: f64,
    /// Noiseless destination sample power.
    pub p_y: f64,
    /// Guard sample power.
    pub p_gi: f64,
    /// Per-sample data power that normalizes the frame.
    pub sigma_x2: f64,
    pub eta: f64,
    /// Post-equalization SNR of the precoded scheme.
    pub gamma: f64,
    /// SNR of the pre-filtering baseline at the same gain.
    pub gamma_pre: f64,
    pub delta: f64,
    /// `alpha == 0`: the pole parameterization does not apply.
    pub degenerate: bool,
}

fn check_links(ch: &ChannelRealization) -> Result<()> {
    if ch.h_sr.norm() == 0.0 || ch.h_rd.norm() == 0.0 {
        return Err(Error::DegenerateChannel("h_sr and h_rd must be nonzero".into()));
    }
    Ok(())
}

/// `eta = |h_rr|^2 sigma_D^2 / (|h_sr|^2 |h_rd|^2)`.
pub fn eta(ch: &ChannelRealization) -> f64 {
    ch.h_rr.norm_sqr() * ch.sigma2_d / (ch.h_sr.norm_sqr() * ch.h_rd.norm_sqr())
}

pub fn budget(ch: &ChannelRealization, beta: f64, n: usize) -> Result<LinkBudget> {
    check_links(ch)?;
    check_stable(beta, ch.h_rr)?;
    if n < 2 {
        return Err(Error::InvalidInput(format!("block size {n} must be >= 2")));
    }
    let nf = n as f64;
    let alpha = ch.alpha_for_beta(beta);
    let g2 = ch.h_sr.norm_sqr() * ch.h_rd.norm_sqr();
    let b2 = beta * beta;

    let p_r1 = ch.sigma2_r / ch.h_sr.norm_sqr();
    let p_n = b2 * ch.h_rd.norm_sqr() * ch.sigma2_r / (1.0 - alpha);
    let p_r2 = (1.0 + alpha) * ch.sigma2_r / (ch.h_sr.norm_sqr() * (1.0 - alpha));
    let p_r = ((nf - 1.0) * p_r1 + p_r2) / nf;
    let sigma_x2 = precoded_data_power(alpha, n);
    let p_gi = sigma_x2 * (1.0 + alpha) / (1.0 - alpha);
    let p_y = b2 * g2 * sigma_x2 / (1.0 - alpha);
    let eta = eta(ch);

    let (p_d, gamma) = if beta == 0.0 {
        (f64::INFINITY, 0.0)
    } else {
        let p_d = (1.0 + alpha) * ch.sigma2_d / (b2 * g2);
        (p_d, sigma_x2 / (p_r + p_d))
    };
    let gamma_pre = gamma_pre(ch, beta)?;
    Ok(LinkBudget {
        alpha,
        beta,
        p_d,
        p_r1,
        p_n,
        p_r2,
        p_r,
        p_y,
        p_gi,
        sigma_x2,
        eta,
        gamma,
        gamma_pre,
        delta: gamma - gamma_pre,
        degenerate: alpha == 0.0,
    })
}

/// `gamma` written as a single rational function of `alpha`, `N`, `P_R1`
/// and `eta`. Only meaningful for `0 < alpha < 1`.
pub fn gamma_closed_form(alpha: f64, n: usize, p_r1: f64, eta: f64) -> f64 {
    let n = n as f64;
    let num = n * (n + 1.0) * (alpha - 1.0).powi(2) * alpha;
    let den = ((alpha - 1.0) * n - alpha - 1.0)
        * (eta * (alpha * alpha - 1.0) * n + p_r1 * alpha * ((alpha - 1.0) * n - 2.0 * alpha));
    num / den
}

/// SNR of the pre-filtering baseline, `sigma_s^2 / (P_R3 + sigma_D^2)`.
/// Returns `+inf` for a noiseless channel.
pub fn gamma_pre(ch: &ChannelRealization, beta: f64) -> Result<f64> {
    check_links(ch)?;
    check_stable(beta, ch.h_rr)?;
    let alpha = ch.alpha_for_beta(beta);
    let b2 = beta * beta;
    let sigma_s2 = b2 * ch.h_sr.norm_sqr() * ch.h_rd.norm_sqr() / (1.0 + alpha);
    let p_r3 = b2 * ch.h_rd.norm_sqr() * ch.sigma2_r / (1.0 - alpha);
    let noise = p_r3 + ch.sigma2_d;
    if noise == 0.0 {
        return Ok(if sigma_s2 > 0.0 { f64::INFINITY } else { 0.0 });
    }
    Ok(sigma_s2 / noise)
}

/// `gamma_pre` as a function of `alpha`, `P_R1` and `eta`.
pub fn gamma_pre_closed_form(alpha: f64, p_r1: f64, eta: f64) -> f64 {
    (alpha / (1.0 + alpha)) / (alpha * p_r1 / (1.0 - alpha) + eta)
}

/// Quadratic in `N` whose sign matches `gamma - gamma_pre`:
/// `P_R1 a(1-a) N^2 + (P_R1 (a^2-a) + eta (a^2-1)) N - P_R1 (a^2+a)`.
pub fn delta_poly(alpha: f64, n: usize, p_r1: f64, eta: f64) -> f64 {
    let n = n as f64;
    p_r1 * alpha * (1.0 - alpha) * n * n
        + (p_r1 * (alpha * alpha - alpha) + eta * (alpha * alpha - 1.0)) * n
        - p_r1 * (alpha * alpha + alpha)
}

/// The gap `gamma - gamma_pre` as one rational expression carrying
/// [`delta_poly`] in its numerator.
pub fn delta_closed_form(alpha: f64, n: usize, p_r1: f64, eta: f64) -> f64 {
    let nf = n as f64;
    let num = 2.0 * (1.0 - alpha) * alpha * alpha * delta_poly(alpha, n, p_r1, eta);
    let den = (alpha + 1.0)
        * ((alpha - 1.0) * nf - alpha - 1.0)
        * (eta * (1.0 - alpha) + p_r1 * alpha)
        * (eta * (alpha * alpha - 1.0) * nf + p_r1 * alpha * (alpha - 1.0) * nf - 2.0 * p_r1 * alpha * alpha);
    num / den
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaGap {
    pub delta: f64,
    pub delta_poly_value: f64,
}

pub fn delta_gap(ch: &ChannelRealization, beta: f64, n: usize) -> Result<DeltaGap> {
    let b = budget(ch, beta, n)?;
    if b.degenerate {
        return Err(Error::DegenerateChannel("alpha = 0 has no gap polynomial".into()));
    }
    Ok(DeltaGap { delta: b.delta, delta_poly_value: delta_poly(b.alpha, n, b.p_r1, b.eta) })
}

/// Result of a one-dimensional maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMax {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
}

/// Grid search over `grid_points` evenly spaced points of `[lo, hi]`, then
/// golden-section refinement on the two cells around the best grid point
/// until the bracket is narrower than `tol`. Never returns a value below
/// the best grid value.
pub fn maximize_scalar<F>(f: F, lo: f64, hi: f64, grid_points: usize, tol: f64) -> Result<ScalarMax>
where
    F: Fn(f64) -> f64,
{
    if grid_points < 3 || !(lo < hi) || !(tol > 0.0) {
        return Err(Error::InvalidInput("need >= 3 grid points, lo < hi and tol > 0".into()));
    }
    let step = (hi - lo) / (grid_points - 1) as f64;
    let (best_i, best_v) = (0..grid_points)
        .map(|i| (i, f(lo + step * i as f64)))
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });

    let mut a = lo + step * best_i.saturating_sub(1) as f64;
    let mut b = (lo + step * (best_i + 1) as f64).min(hi);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut iterations = 0;
    while (b - a) > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        iterations += 1;
    }
    let x = 0.5 * (a + b);
    let value = f(x);
    if value >= best_v {
        Ok(ScalarMax { x, value, iterations })
    } else {
        Ok(ScalarMax { x: lo + step * best_i as f64, value: best_v, iterations })
    }
}

/// Optimal relay gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSolution {
    /// `None` when `h_rr = 0` and the gain comes from the cap.
    pub alpha_star: Option<f64>,
    pub beta_star: f64,
    pub gamma_star: f64,
    pub iterations: usize,
}

impl GainSolution {
    pub fn power_gain(&self) -> f64 {
        self.beta_star * self.beta_star
    }
}

fn optimize_over_alpha<F>(
    ch: &ChannelRealization,
    grid_points: usize,
    tol: f64,
    objective: F,
) -> Result<GainSolution>
where
    F: Fn(f64) -> Result<f64>,
{
    check_links(ch)?;
    let rr = ch.h_rr.norm();
    if rr == 0.0 {
        let beta = DEFAULT_GAIN_CAP.sqrt();
        return Ok(GainSolution { alpha_star: None, beta_star: beta, gamma_star: objective(beta)?, iterations: 0 });
    }
    let f = |alpha: f64| objective(alpha.sqrt() / rr).unwrap_or(f64::NEG_INFINITY);
    let best = maximize_scalar(f, ALPHA_EDGE, 1.0 - ALPHA_EDGE, grid_points, tol)?;
    Ok(GainSolution {
        alpha_star: Some(best.x),
        beta_star: best.x.sqrt() / rr,
        gamma_star: best.value,
        iterations: best.iterations,
    })
}

/// Relay gain maximizing the precoded-link SNR `gamma`.
pub fn optimize_gain(ch: &ChannelRealization, n: usize, grid_points: usize, tol: f64) -> Result<GainSolution> {
    optimize_over_alpha(ch, grid_points, tol, |beta| budget(ch, beta, n).map(|b| b.gamma))
}

/// Relay gain maximizing the pre-filtering SNR `gamma_pre`.
pub fn optimize_prefilter_gain(ch: &ChannelRealization, grid_points: usize, tol: f64) -> Result<GainSolution> {
    optimize_over_alpha(ch, grid_points, tol, |beta| gamma_pre(ch, beta))
}
