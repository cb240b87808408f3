//! Sample-level simulation of the full-duplex amplify-and-forward loop.
//!
//! Per sample `n` the relay receives `r_n = h_sr x_n + h_rr t_n + nR_n`,
//! the destination receives `y_n = h_rd t_n (+ h_sd x_n) + nD_n`, and the
//! relay then forwards `t_{n+1} = beta r_n`. Relay state starts at zero for
//! every call, so each frame sees a fresh loop.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{check_stable, ChannelRealization};
use crate::error::{Error, Result};
use crate::numerics::unit_gaussian;

/// Magnitude at which [`ideal_iir_filter`] declares divergence.
const DIVERGENCE_LIMIT: f64 = 1e12;

/// Relay transmit sample and amplitude gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayState {
    pub t: Complex64,
    pub beta: f64,
}

impl RelayState {
    pub fn new(beta: f64, h_rr: Complex64) -> Result<Self> {
        check_stable(beta, h_rr)?;
        Ok(Self { t: Complex64::new(0.0, 0.0), beta })
    }
}

/// Destination stream of one simulated frame.
#[derive(Debug, Clone)]
pub struct LinkOutput {
    pub y: Vec<Complex64>,
    /// Part of `y` caused by relay noise (after the relay loop and `h_rd`).
    pub n_ry: Vec<Complex64>,
    /// Noise samples added at the relay receiver.
    pub n_r: Vec<Complex64>,
    /// Samples to skip before block extraction: 1 for the pure relay path,
    /// 0 when the direct link is present.
    pub delay_offset: usize,
}

/// Runs the relay loop over `x`. Noise is drawn as `(nR_n, nD_n)` per
/// sample in order; a noiseless run draws nothing.
pub fn simulate_fd_link<R: Rng + ?Sized>(
    x: &[Complex64],
    ch: &ChannelRealization,
    beta: f64,
    rng: &mut R,
    with_direct: bool,
    noiseless: bool,
) -> Result<LinkOutput> {
    let mut relay = RelayState::new(beta, ch.h_rr)?;
    let zero = Complex64::new(0.0, 0.0);
    let (std_r, std_d) = ((ch.sigma2_r / 2.0).sqrt(), (ch.sigma2_d / 2.0).sqrt());
    let h_sd = if with_direct { ch.h_sd } else { zero };

    let mut y = Vec::with_capacity(x.len());
    let mut n_ry = Vec::with_capacity(x.len());
    let mut n_r = Vec::with_capacity(x.len());
    // relay-noise share of the relay transmit sample
    let mut t_noise = zero;

    for (idx, &xn) in x.iter().enumerate() {
        let (nr, nd) = if noiseless {
            (zero, zero)
        } else {
            (unit_gaussian(rng) * std_r, unit_gaussian(rng) * std_d)
        };
        let yn = ch.h_rd * relay.t + h_sd * xn + nd;
        if !(yn.re.is_finite() && yn.im.is_finite()) {
            return Err(Error::NonFinite { index: idx });
        }
        y.push(yn);
        n_ry.push(ch.h_rd * t_noise);
        n_r.push(nr);

        let r = ch.h_sr * xn + ch.h_rr * relay.t + nr;
        t_noise = (ch.h_rr * t_noise + nr) * beta;
        relay.t = r * beta;
    }
    Ok(LinkOutput { y, n_ry, n_r, delay_offset: usize::from(!with_direct) })
}

/// Exact recursion `y_n = (x_n - a1 y_{n-1}) / a0` with `y_{-1} = 0`, i.e.
/// the channel `1 / (a0 + a1 z^-1)`.
pub fn ideal_iir_filter(x: &[Complex64], a0: Complex64, a1: Complex64) -> Result<Vec<Complex64>> {
    if a0.norm() == 0.0 {
        return Err(Error::InvalidInput("a0 must be nonzero".into()));
    }
    let pole = (a1 / a0).norm();
    if pole >= 1.0 {
        return Err(Error::Unstable { pole_magnitude: pole, margin: 0.0 });
    }
    let mut prev = Complex64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(x.len());
    for (idx, &xn) in x.iter().enumerate() {
        prev = (xn - a1 * prev) / a0;
        if !(prev.norm() <= DIVERGENCE_LIMIT) {
            return Err(Error::Diverged { index: idx });
        }
        out.push(prev);
    }
    Ok(out)
}

/// Amplitude gain of the half-duplex FDD relay, `1 / sqrt(|h_sr|^2 + sigma_R^2)`.
pub fn hd_fdd_gain(ch: &ChannelRealization) -> f64 {
    (ch.h_sr.norm_sqr() + ch.sigma2_r).sqrt().recip()
}

/// Two cascaded flat hops through a half-duplex AF relay on separate bands:
/// `y_n = h_rd b (h_sr x_n + nR_n) + nD_n`. No self-interference and no
/// processing delay.
pub fn simulate_hd_fdd<R: Rng + ?Sized>(
    x: &[Complex64],
    ch: &ChannelRealization,
    rng: &mut R,
    noiseless: bool,
) -> Result<LinkOutput> {
    let gain = hd_fdd_gain(ch);
    let zero = Complex64::new(0.0, 0.0);
    let (std_r, std_d) = ((ch.sigma2_r / 2.0).sqrt(), (ch.sigma2_d / 2.0).sqrt());
    let mut y = Vec::with_capacity(x.len());
    let mut n_ry = Vec::with_capacity(x.len());
    let mut n_r = Vec::with_capacity(x.len());
    for (idx, &xn) in x.iter().enumerate() {
        let (nr, nd) = if noiseless {
            (zero, zero)
        } else {
            (unit_gaussian(rng) * std_r, unit_gaussian(rng) * std_d)
        };
        let yn = ch.h_rd * gain * (ch.h_sr * xn + nr) + nd;
        if !(yn.re.is_finite() && yn.im.is_finite()) {
            return Err(Error::NonFinite { index: idx });
        }
        y.push(yn);
        n_ry.push(ch.h_rd * gain * nr);
        n_r.push(nr);
    }
    Ok(LinkOutput { y, n_ry, n_r, delay_offset: 0 })
}

/// Writes samples as interleaved little-endian `f64` re/im pairs.
pub fn dump_stream(path: &Path, samples: &[Complex64]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for s in samples {
        out.write_all(&s.re.to_le_bytes())?;
        out.write_all(&s.im.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{compute_coeffs, relay_impulse_taps, ChannelConfig, draw_channels};
    use crate::numerics::{gaussian_complex, max_abs_diff, mean_power, trial_rng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn impulse(len: usize) -> Vec<Complex64> {
        let mut x = vec![c(0.0, 0.0); len];
        x[0] = c(1.0, 0.0);
        x
    }

    fn random_stable(seed: u64) -> (ChannelRealization, f64) {
        let mut rng = trial_rng(seed, 0);
        let ch = draw_channels(&mut rng, &ChannelConfig::physical(10.0, -15.0, Some(10.0))).unwrap();
        let alpha: f64 = rand::Rng::gen_range(&mut rng, 0.05..0.95);
        (ch, ch.beta_for_alpha(alpha).unwrap())
    }

    #[test]
    fn loop_without_interference_is_a_delay() {
        let ch = ChannelRealization::fixed(1.0, 1.0, 0.0, 0.0, 1.0, 1.0);
        let x: Vec<_> = (0..10).map(|i| c(i as f64, -(i as f64))).collect();
        let out = simulate_fd_link(&x, &ch, 1.0, &mut trial_rng(0, 0), false, true).unwrap();
        assert_eq!(out.y[0], c(0.0, 0.0));
        assert_eq!(&out.y[1..], &x[..9]);
        assert_eq!(out.delay_offset, 1);
    }

    #[test]
    fn impulse_response_matches_taps() {
        for seed in 0..10 {
            let (ch, beta) = random_stable(seed);
            let out = simulate_fd_link(&impulse(65), &ch, beta, &mut trial_rng(0, 0), false, true).unwrap();
            let taps = relay_impulse_taps(&ch, beta, 64).unwrap();
            let expected: Vec<_> = taps.iter().map(|h| h * ch.h_sr).collect();
            assert_eq!(out.y[0], c(0.0, 0.0));
            assert!(max_abs_diff(&out.y[1..], &expected) < 1e-12);
        }
    }

    #[test]
    fn direct_link_impulse_response() {
        let (ch, beta) = random_stable(42);
        let out = simulate_fd_link(&impulse(40), &ch, beta, &mut trial_rng(0, 0), true, true).unwrap();
        assert_eq!(out.delay_offset, 0);
        // expand h_sd + beta h_sr h_rd z^-1 / (1 - beta h_rr z^-1) by long division
        let mut expected = vec![ch.h_sd];
        let mut tail = ch.h_sr * ch.h_rd * beta;
        for _ in 1..40 {
            expected.push(tail);
            tail *= ch.h_rr * beta;
        }
        assert!(max_abs_diff(&out.y, &expected) < 1e-12);
    }

    #[test]
    fn recursion_examples() {
        let x: Vec<_> = (0..6).map(|i| c(i as f64, 1.0)).collect();
        assert_eq!(ideal_iir_filter(&x, c(1.0, 0.0), c(0.0, 0.0)).unwrap(), x);

        let y = ideal_iir_filter(&impulse(5), c(2.0, 0.0), c(-1.0, 0.0)).unwrap();
        let expected = [0.5, 0.25, 0.125, 0.0625, 0.03125].map(|v| c(v, 0.0));
        assert!(max_abs_diff(&y, &expected) < 1e-15);

        assert!(ideal_iir_filter(&x, c(1.0, 0.0), c(1.5, 0.0)).is_err());
        assert!(ideal_iir_filter(&x, c(0.0, 0.0), c(0.5, 0.0)).is_err());
    }

    #[test]
    fn divergence_is_detected() {
        let x = vec![c(1e13, 0.0); 3];
        assert!(matches!(
            ideal_iir_filter(&x, c(1.0, 0.0), c(0.1, 0.0)),
            Err(Error::Diverged { index: 0 })
        ));
    }

    #[test]
    fn simulator_matches_recursion() {
        for seed in 0..20 {
            let (ch, beta) = random_stable(100 + seed);
            let co = compute_coeffs(&ch, beta).unwrap();
            let mut rng = trial_rng(seed, 1);
            let x: Vec<_> = (0..500).map(|_| gaussian_complex(&mut rng, 1.0).unwrap()).collect();
            let sim = simulate_fd_link(&x, &ch, beta, &mut rng, false, true).unwrap();
            let ideal = ideal_iir_filter(&x, co.a0, co.a1).unwrap();
            assert!(max_abs_diff(&sim.y[1..], &ideal[..499]) < 1e-12);
        }
    }

    #[test]
    fn unstable_loop_is_rejected() {
        let ch = ChannelRealization::fixed(1.0, 1.0, 0.5, 0.0, 0.1, 0.1);
        let err = simulate_fd_link(&impulse(4), &ch, 2.0, &mut trial_rng(0, 0), false, true);
        assert!(matches!(err, Err(Error::Unstable { .. })));
    }

    #[test]
    fn non_finite_input_is_reported() {
        let ch = ChannelRealization::fixed(1.0, 1.0, 0.1, 0.2, 0.1, 0.1);
        let mut x = impulse(5);
        x[2] = c(f64::NAN, 0.0);
        let err = simulate_fd_link(&x, &ch, 1.0, &mut trial_rng(0, 0), true, true);
        assert!(matches!(err, Err(Error::NonFinite { index: 2 })));
    }

    #[test]
    fn noise_superposes() {
        let (ch, beta) = random_stable(7);
        let mut rng = trial_rng(8, 0);
        let x: Vec<_> = (0..300).map(|_| gaussian_complex(&mut rng, 1.0).unwrap()).collect();
        for direct in [false, true] {
            let clean = simulate_fd_link(&x, &ch, beta, &mut trial_rng(1, 0), direct, true).unwrap();
            let noisy = simulate_fd_link(&x, &ch, beta, &mut trial_rng(1, 0), direct, false).unwrap();
            let noise_only = simulate_fd_link(&vec![c(0.0, 0.0); 300], &ch, beta, &mut trial_rng(1, 0), direct, false).unwrap();
            let sum: Vec<_> = clean.y.iter().zip(&noise_only.y).map(|(a, b)| a + b).collect();
            assert!(max_abs_diff(&noisy.y, &sum) < 1e-12);
            // the noise-only output is relay noise through the loop plus destination noise
            let mut rng = trial_rng(1, 0);
            for n in 0..300 {
                let _nr = unit_gaussian(&mut rng);
                let nd = unit_gaussian(&mut rng) * (ch.sigma2_d / 2.0).sqrt();
                assert!((noise_only.y[n] - noise_only.n_ry[n] - nd).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn relay_noise_path_matches_convolution() {
        let (ch, beta) = random_stable(9);
        let len = 5000;
        let out = simulate_fd_link(&vec![c(0.0, 0.0); len], &ch, beta, &mut trial_rng(2, 0), false, false).unwrap();
        let taps = relay_impulse_taps(&ch, beta, 4096).unwrap();
        // aligned index m = n - 1: n_ry[m + 1] = sum_j h_j nR[m - j + 1]
        for m in (0..len - 1).step_by(97) {
            let direct: Complex64 = taps
                .iter()
                .enumerate()
                .take_while(|(j, _)| *j <= m)
                .map(|(j, h)| h * out.n_r[m - j])
                .sum();
            assert!((out.n_ry[m + 1] - direct).norm() < 1e-10, "m = {m}");
        }
    }

    #[test]
    fn output_power_follows_geometric_sum() {
        for pole in [0.5f64, 0.9] {
            let ch = ChannelRealization {
                h_sr: c(0.8, 0.3),
                h_rd: c(-0.5, 0.9),
                h_rr: Complex64::from_polar(0.2, 0.4),
                h_sd: c(0.0, 0.0),
                sigma2_r: 1.0,
                sigma2_d: 1.0,
            };
            let beta = pole / 0.2;
            let mut rng = trial_rng(33, 0);
            let x: Vec<_> = (0..400_000).map(|_| gaussian_complex(&mut rng, 1.0).unwrap()).collect();
            let out = simulate_fd_link(&x, &ch, beta, &mut rng, false, true).unwrap();
            let expected = beta * beta * ch.h_sr.norm_sqr() * ch.h_rd.norm_sqr() / (1.0 - pole * pole);
            let measured = mean_power(&out.y[1000..]);
            assert!((measured / expected - 1.0).abs() < 0.02, "{measured} vs {expected}");
        }
    }

    #[test]
    fn hd_fdd_noiseless_is_flat() {
        let ch = ChannelRealization::fixed(0.9, -1.2, 0.3, 0.0, 0.1, 0.1);
        let x: Vec<_> = (0..8).map(|i| c(i as f64, 1.0)).collect();
        let out = simulate_hd_fdd(&x, &ch, &mut trial_rng(0, 0), true).unwrap();
        let g = hd_fdd_gain(&ch);
        let expected: Vec<_> = x.iter().map(|v| v * ch.h_sr * ch.h_rd * g).collect();
        assert!(max_abs_diff(&out.y, &expected) < 1e-15);
        assert!((g * g - 1.0 / (0.81 + 0.1)).abs() < 1e-15);
    }

    #[test]
    fn stream_dump_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("y.bin");
        dump_stream(&path, &[c(1.0, -2.0), c(0.5, 0.25)]).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 32);
        let vals: Vec<f64> = bytes.chunks(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
        assert_eq!(vals, vec![1.0, -2.0, 0.5, 0.25]);
    }
}
