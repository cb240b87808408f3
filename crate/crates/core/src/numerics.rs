//! Complex-vector arithmetic, block transforms and seeded randomness.
//!
//! The forward transform is unscaled and the inverse carries the `1/N`
//! factor, so `idft(dft(v)) == v`. Power-of-two lengths use an iterative
//! radix-2 transform with cached twiddles; other lengths fall back to the
//! direct O(N^2) sum.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::rc::Rc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};

/// Generator used for every random draw in the simulator.
///
/// xoshiro256++ is fully specified and platform independent, so a seed
/// reproduces the same sample stream everywhere.
pub type SimRng = Xoshiro256PlusPlus;

/// Generator for Monte-Carlo trial `trial` of a run seeded with `base_seed`.
pub fn trial_rng(base_seed: u64, trial: u64) -> SimRng {
    SimRng::seed_from_u64(base_seed.wrapping_add(trial))
}

/// Precomputed radix-2 plan for one transform length.
#[derive(Debug)]
struct Radix2Plan {
    len: usize,
    bit_reverse: Vec<usize>,
    /// `exp(-j 2 pi k / len)` for `k < len / 2`.
    twiddles: Vec<Complex64>,
}

impl Radix2Plan {
    fn new(len: usize) -> Self {
        debug_assert!(len.is_power_of_two());
        let bits = len.trailing_zeros();
        let bit_reverse = (0..len)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        let twiddles = (0..len / 2)
            .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / len as f64))
            .collect();
        Self { len, bit_reverse, twiddles }
    }

    fn run(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.len;
        for i in 0..n {
            let j = self.bit_reverse[i];
            if i < j {
                data.swap(i, j);
            }
        }
        let mut half = 1;
        while half < n {
            let stride = n / (2 * half);
            for start in (0..n).step_by(2 * half) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            half *= 2;
        }
    }
}

thread_local! {
    static PLANS: RefCell<HashMap<usize, Rc<Radix2Plan>>> = RefCell::new(HashMap::new());
}

fn plan_for(len: usize) -> Rc<Radix2Plan> {
    PLANS.with(|plans| {
        plans
            .borrow_mut()
            .entry(len)
            .or_insert_with(|| Rc::new(Radix2Plan::new(len)))
            .clone()
    })
}

fn direct_transform(v: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let n = v.len();
    let sign = if inverse { 1.0 } else { -1.0 };
    (0..n)
        .map(|k| {
            v.iter()
                .enumerate()
                .map(|(m, &x)| {
                    // reduce the index product first to keep the phase small
                    let idx = (k * m) % n;
                    x * Complex64::from_polar(1.0, sign * 2.0 * PI * idx as f64 / n as f64)
                })
                .sum()
        })
        .collect()
}

/// In-place transform. `inverse` applies the conjugate kernel and the `1/N` scale.
pub fn transform_in_place(data: &mut [Complex64], inverse: bool) -> Result<()> {
    let n = data.len();
    if n == 0 {
        return Err(Error::InvalidInput("transform of an empty vector".into()));
    }
    if n.is_power_of_two() {
        plan_for(n).run(data, inverse);
    } else {
        let out = direct_transform(data, inverse);
        data.copy_from_slice(&out);
    }
    if inverse {
        let scale = 1.0 / n as f64;
        data.iter_mut().for_each(|x| *x *= scale);
    }
    Ok(())
}

/// Forward DFT, `V_k = sum_n v_n exp(-j 2 pi k n / N)`, no scale factor.
pub fn dft(v: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut out = v.to_vec();
    transform_in_place(&mut out, false)?;
    Ok(out)
}

/// Inverse DFT with the `1/N` factor.
pub fn idft(v: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut out = v.to_vec();
    transform_in_place(&mut out, true)?;
    Ok(out)
}

/// Spectrum of a short tap vector zero-padded to `n` points.
pub fn padded_spectrum(taps: &[Complex64], n: usize) -> Result<Vec<Complex64>> {
    if taps.len() > n {
        return Err(Error::InvalidInput(format!(
            "{} taps do not fit a {n}-point transform",
            taps.len()
        )));
    }
    let mut padded = vec![Complex64::new(0.0, 0.0); n];
    padded[..taps.len()].copy_from_slice(taps);
    dft(&padded)
}

/// One circularly-symmetric complex Gaussian sample with total power `variance`.
pub fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Result<Complex64> {
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(Error::InvalidInput(format!("noise variance {variance} must be finite and >= 0")));
    }
    Ok(unit_gaussian(rng) * (variance / 2.0).sqrt())
}

/// Complex Gaussian with unit power per component pair scaled to variance 2.
///
/// Real and imaginary parts are independent standard normals; callers scale.
#[inline]
pub(crate) fn unit_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// Mean of `|v_n|^2`.
pub fn mean_power(v: &[Complex64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.iter().map(|x| x.norm_sqr()).sum::<f64>() / v.len() as f64
}

/// Largest elementwise `|a_n - b_n|`.
pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
