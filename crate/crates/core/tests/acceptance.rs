//! Acceptance suite: runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any failed.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, RngCore};

use fdr_ofdm::channel::{compute_coeffs, draw_channels, relay_impulse_taps, ChannelConfig, ChannelRealization, STABILITY_MARGIN};
use fdr_ofdm::fdrelay::{simulate_fd_link, RelayState};
use fdr_ofdm::harness::link::{analytic_snr, received_stream, run_frame, LinkSetup};
use fdr_ofdm::harness::{measured_snr, run_fig2, run_fig3, run_fig4, run_fig5, Figure, Records, SimConfig};
use fdr_ofdm::linkbudget::{budget, delta_poly};
use fdr_ofdm::numerics::{mean_power, to_db, trial_rng};
use fdr_ofdm::receiver::{BerRecord, Scheme};
use fdr_ofdm::txchain::{map_bits, precode_frame, prefilter_frame, random_bits, Constellation};
use fdr_ofdm::Error;

const N: usize = 128;
const BLOCKS: usize = 50;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn qpsk_blocks<R: Rng>(rng: &mut R, blocks: usize) -> Vec<Vec<Complex64>> {
    let c = Constellation::qpsk();
    map_bits(&random_bits(rng, N * blocks * 2), &c, N).unwrap()
}

/// Random stable (channel, beta) pair with the pole power drawn uniformly.
fn random_pair(trial: u64, with_direct: bool) -> (ChannelRealization, f64) {
    let mut rng = trial_rng(1000, trial);
    let cfg = ChannelConfig::physical(10.0, -15.0, with_direct.then_some(10.0));
    let ch = draw_channels(&mut rng, &cfg).unwrap();
    let alpha = rng.gen_range(0.05..0.95);
    (ch, ch.beta_for_alpha(alpha).unwrap())
}

fn loopback(with_direct: bool) -> Outcome {
    let setup = LinkSetup { n: N, blocks: BLOCKS, with_direct };
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let (ch, beta) = random_pair(trial, with_direct);
        let mut rng = trial_rng(2000, trial);
        let blocks = qpsk_blocks(&mut rng, BLOCKS);
        let out = match run_frame(Scheme::Proposed, &setup, &ch, beta, &blocks, &mut rng, true) {
            Ok(out) => out,
            Err(e) => return outcome(false, format!("trial {trial}: {e}")),
        };
        for (x, est) in blocks.iter().flatten().zip(out.freq.iter().flatten()) {
            worst = worst.max((est / out.symbol_scale - x).norm());
        }
    }
    outcome(worst < 1e-9, format!("max symbol error {worst:.3e} over 100 pairs (bound 1e-9)"))
}

fn c1() -> Outcome {
    loopback(false)
}

fn c2() -> Outcome {
    loopback(true)
}

fn c3() -> Outcome {
    let setup = LinkSetup { n: N, blocks: BLOCKS, with_direct: false };
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let (ch, beta) = random_pair(trial, false);
        let mut rng = trial_rng(3000, trial);
        let blocks = qpsk_blocks(&mut rng, BLOCKS);
        let y = received_stream(Scheme::Proposed, &setup, &ch, beta, &blocks, &mut rng, true).unwrap();
        // skip the relay delay, then every block is [guard, y_0 .. y_{N-1}]
        for block in y[1..].chunks_exact(N + 1) {
            worst = worst.max((block[0] - block[N]).norm());
        }
    }
    outcome(worst < 1e-10, format!("max |guard - last sample| {worst:.3e} (bound 1e-10)"))
}

const SNR_FRAMES: usize = 157; // 157 * 50 * 128 >= 1e6 samples

fn snr_agreement(scheme: Scheme) -> Outcome {
    let setup = LinkSetup { n: N, blocks: BLOCKS, with_direct: false };
    let cfg = ChannelConfig::physical(10.0, -15.0, None);
    let mut worst = 0.0f64;
    let mut where_ = String::new();
    for c in 0..5 {
        let ch = draw_channels(&mut trial_rng(4000, c), &cfg).unwrap();
        for alpha in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let beta = ch.beta_for_alpha(alpha).unwrap();
            let analytic = analytic_snr(scheme, &ch, beta, N).unwrap();
            let measured = measured_snr(scheme, &ch, beta, &setup, 5000 + c, SNR_FRAMES).unwrap();
            let err = (to_db(measured) - to_db(analytic)).abs();
            if err > worst {
                worst = err;
                where_ = format!("channel {c}, alpha {alpha}");
            }
        }
    }
    outcome(worst <= 0.2, format!("max |analytic - measured| {worst:.3} dB at {where_} (bound 0.2 dB)"))
}

fn c4() -> Outcome {
    snr_agreement(Scheme::Proposed)
}

fn c5() -> Outcome {
    snr_agreement(Scheme::Prefilter)
}

fn c6() -> Outcome {
    let cfg = SimConfig::for_figure(Figure::GainSweep);
    let res = run_fig2(&cfg).unwrap();
    let Records::Gain { points, optimum } = res.records else { unreachable!() };
    let dominated = points
        .iter()
        .filter(|p| p.gamma_analytic < p.gamma_pre_analytic || p.gamma_measured < p.gamma_pre_measured)
        .count();
    let argmax = points.iter().max_by(|a, b| a.gamma_measured.total_cmp(&b.gamma_measured)).unwrap();
    let step = points[1].beta2 - points[0].beta2;
    let off = (optimum.power_gain() - argmax.beta2).abs();
    outcome(
        dominated == 0 && off <= step,
        format!(
            "{dominated}/{} points with gamma < gamma_pre; optimizer beta2 {:.4} vs measured argmax {:.4} (grid step {step:.4})",
            points.len(),
            optimum.power_gain(),
            argmax.beta2
        ),
    )
}

fn c7() -> Outcome {
    // Points cover alpha in [0.01, 0.99], P_R1 in [1e-3, 10] and RSI no
    // stronger than the relay-destination hop, eta / P_R1 in [1e-4, 1].
    let mut rng = trial_rng(7000, 0);
    let points: Vec<(f64, f64, f64)> = (0..1000)
        .map(|_| {
            let alpha = rng.gen_range(0.01..0.99);
            let p_r1 = 10f64.powf(rng.gen_range(-3.0..1.0));
            let ratio = 10f64.powf(rng.gen_range(-4.0..0.0));
            (alpha, p_r1, p_r1 * ratio)
        })
        .collect();
    let mut mismatches = 0;
    let mut nonpositive_128 = 0;
    for n in [32, 128, 512] {
        for &(alpha, p_r1, eta) in &points {
            // unit hops: P_R1 = sigma_R^2 and eta = |h_rr|^2 sigma_D^2
            let h_rr = 0.2;
            let ch = ChannelRealization::fixed(1.0, 1.0, h_rr, 0.0, p_r1, eta / (h_rr * h_rr));
            let b = budget(&ch, ch.beta_for_alpha(alpha).unwrap(), n).unwrap();
            let delta = b.gamma - b.gamma_pre;
            if delta.signum() != delta_poly(alpha, n, p_r1, eta).signum() {
                mismatches += 1;
            }
            if n == 128 && delta <= 0.0 {
                nonpositive_128 += 1;
            }
        }
    }
    outcome(
        mismatches == 0 && nonpositive_128 == 0,
        format!("{mismatches}/3000 sign mismatches; {nonpositive_128}/1000 points with Delta <= 0 at N = 128"),
    )
}

/// `true` when `lo` is below `hi` by more than three binomial standard deviations.
fn below_3sigma(lo: &BerRecord, hi: &BerRecord) -> bool {
    let var = |r: &BerRecord| r.ber * (1.0 - r.ber) / r.bits as f64;
    hi.ber - lo.ber > 3.0 * (var(lo) + var(hi)).sqrt()
}

fn ber_records(res: Records) -> Vec<BerRecord> {
    match res {
        Records::Ber(r) => r,
        Records::Gain { .. } => unreachable!(),
    }
}

fn find(recs: &[BerRecord], scheme: Scheme, value: f64) -> &BerRecord {
    recs.iter().find(|r| r.scheme == scheme && r.sweep_value == value).unwrap()
}

fn ber_cfg(figure: Figure, schemes: &[Scheme]) -> SimConfig {
    let mut cfg = SimConfig::for_figure(figure);
    cfg.frames = 200;
    cfg.schemes = schemes.to_vec();
    if figure != Figure::BerRsi {
        cfg.snr_c_db = vec![10.0, 20.0, 30.0];
    }
    cfg
}

fn c8() -> Outcome {
    let cfg = ber_cfg(Figure::BerNoDirect, &[Scheme::Proposed, Scheme::Prefilter, Scheme::CpOfdm]);
    let recs = ber_records(run_fig3(&cfg).unwrap().records);
    let mut pass = recs.iter().all(|r| r.bits >= 100_000);
    let mut parts = Vec::new();
    for snr in [10.0, 20.0, 30.0] {
        let (p, f, c) = (
            find(&recs, Scheme::Proposed, snr),
            find(&recs, Scheme::Prefilter, snr),
            find(&recs, Scheme::CpOfdm, snr),
        );
        let (a, b) = (below_3sigma(p, f), below_3sigma(f, c));
        pass &= a && b;
        parts.push(format!(
            "{snr} dB: proposed {:.3e} {} prefilter {:.3e} {} cp_ofdm {:.3e}",
            p.ber,
            if a { "<" } else { "!<" },
            f.ber,
            if b { "<" } else { "!<" },
            c.ber
        ));
    }
    outcome(pass, parts.join("; "))
}

fn c9() -> Outcome {
    let cfg = ber_cfg(Figure::BerDirect, &[Scheme::Proposed, Scheme::CpOfdm]);
    let recs = ber_records(run_fig4(&cfg).unwrap().records);
    let p: Vec<&BerRecord> = [10.0, 20.0, 30.0].iter().map(|&s| find(&recs, Scheme::Proposed, s)).collect();
    let c: Vec<&BerRecord> = [10.0, 20.0, 30.0].iter().map(|&s| find(&recs, Scheme::CpOfdm, s)).collect();
    let decreasing = below_3sigma(p[1], p[0]) && below_3sigma(p[2], p[1]);
    let (gain_p, gain_c) = (p[1].ber / p[2].ber, c[1].ber / c[2].ber);
    outcome(
        decreasing && gain_c < gain_p,
        format!(
            "proposed {:.3e} > {:.3e} > {:.3e} ({}); 20->30 dB improvement proposed x{gain_p:.2}, cp_ofdm x{gain_c:.2}",
            p[0].ber,
            p[1].ber,
            p[2].ber,
            if decreasing { "strict" } else { "not strict" }
        ),
    )
}

fn c10() -> Outcome {
    let cfg = ber_cfg(Figure::BerRsi, &[Scheme::Proposed, Scheme::CpOfdm]);
    let recs = ber_records(run_fig5(&cfg).unwrap().records);
    let curve = |s: Scheme| -> Vec<f64> { cfg.rsi_db.iter().map(|&r| find(&recs, s, r).ber).collect() };
    let (p, c) = (curve(Scheme::Proposed), curve(Scheme::CpOfdm));
    let monotone = p.windows(2).all(|w| w[1] >= w[0]);
    let (deg_p, deg_c) = (p[p.len() - 1] / p[0], c[c.len() - 1] / c[0]);
    outcome(
        monotone && deg_p < deg_c,
        format!(
            "proposed nondecreasing over {:?} dB: {monotone}; degradation proposed x{deg_p:.2}, cp_ofdm x{deg_c:.2}",
            cfg.rsi_db
        ),
    )
}

fn c11() -> Outcome {
    let blocks_count = 5000;
    let mut worst = 0.0f64;
    for (trial, alpha) in [0.1, 0.5, 0.9].into_iter().enumerate() {
        let mut rng = trial_rng(11_000, trial as u64);
        let ch = draw_channels(&mut rng, &ChannelConfig::physical(10.0, -15.0, None)).unwrap();
        let co = compute_coeffs(&ch, ch.beta_for_alpha(alpha).unwrap()).unwrap();
        let blocks = qpsk_blocks(&mut rng, blocks_count);
        let gi = precode_frame(&blocks, co.a0, co.a1, alpha).unwrap();
        let pre = prefilter_frame(&blocks, co.a0, co.a1).unwrap();
        worst = worst.max((mean_power(&gi.stream) - 1.0).abs());
        worst = worst.max((mean_power(&pre.stream) - 1.0).abs());
    }
    outcome(worst <= 0.01, format!("max |frame power - 1| {worst:.4} over alpha 0.1/0.5/0.9 (bound 0.01)"))
}

fn c12() -> Outcome {
    let ch = ChannelRealization::fixed(1.0, 1.0, 0.25, 0.0, 0.1, 0.1);
    let edge = (1.0 - STABILITY_MARGIN) / 0.25;
    let mut failures = Vec::new();
    for beta in [edge, edge * (1.0 + 1e-9), 4.0, 10.0] {
        let unstable = |r: Result<(), Error>| matches!(r, Err(Error::Unstable { .. }));
        let mut rng = trial_rng(12_000, 0);
        let before = rng.clone();
        let x = vec![Complex64::new(1.0, 0.0); 16];
        let checks = [
            ("RelayState", unstable(RelayState::new(beta, ch.h_rr).map(drop))),
            ("compute_coeffs", unstable(compute_coeffs(&ch, beta).map(drop))),
            ("relay_impulse_taps", unstable(relay_impulse_taps(&ch, beta, 4).map(drop))),
            ("budget", unstable(budget(&ch, beta, N).map(drop))),
            ("simulate_fd_link", unstable(simulate_fd_link(&x, &ch, beta, &mut rng, false, false).map(drop))),
        ];
        for (name, ok) in checks {
            if !ok {
                failures.push(format!("{name} accepted beta {beta}"));
            }
        }
        // rejected before any noise was drawn
        if rng.clone().next_u64() != before.clone().next_u64() {
            failures.push(format!("simulate_fd_link consumed randomness at beta {beta}"));
        }
    }
    let stable_ok = compute_coeffs(&ch, (1.0 - 2.0 * STABILITY_MARGIN) / 0.25).is_ok();
    if !stable_ok {
        failures.push("stable gain just inside the margin was rejected".into());
    }
    outcome(failures.is_empty(), if failures.is_empty() { "all entry points reject |beta h_rr| >= 1 - 1e-6".into() } else { failures.join("; ") })
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("noiseless loopback without direct link", c1),
        ("noiseless loopback with direct link", c2),
        ("received stream has cyclic-prefix structure", c3),
        ("analytic gamma matches Monte-Carlo SNR", c4),
        ("analytic gamma_pre matches Monte-Carlo SNR", c5),
        ("gain sweep: gamma >= gamma_pre, optimizer at the peak", c6),
        ("sign of gamma - gamma_pre follows delta(alpha)", c7),
        ("BER ordering without direct link", c8),
        ("BER trend with direct link", c9),
        ("BER trend against RSI power", c10),
        ("transmit frame power normalization", c11),
        ("stability guard", c12),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {name} -- {} [{:.1}s]",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
