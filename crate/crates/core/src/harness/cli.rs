//! Command-line front end. Settings are layered: per-subcommand defaults,
//! then the `--config` file, then explicit flags.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::config::{parse_beta_policy, parse_complex, parse_list, parse_schemes, Figure, SimConfig};
use super::experiments::{ber_point, run_fig2, run_fig3, run_fig4, run_fig5, select_beta, Records, SweepResult};
use super::link::{received_stream, scheme_constellation, LinkSetup};
use super::output::{write_csv, write_csv_file};
use crate::channel::{draw_channels, ChannelConfig, ChannelRealization};
use crate::error::{Error, Result};
use crate::fdrelay::dump_stream;
use crate::linkbudget::{budget, optimize_gain, optimize_prefilter_gain};
use crate::numerics::{from_db, to_db, trial_rng};
use crate::txchain::{map_bits, random_bits};
use num_complex::Complex64;

#[derive(Debug, Parser)]
#[command(name = "fdr-ofdm", version, about = "Full-duplex AF relay OFDM link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// CSV output path; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated subset of proposed, prefilter, cp_ofdm, hd_fdd.
    #[arg(long, global = true)]
    schemes: Option<String>,
    /// Channel draws per point (frames per point for fig2).
    #[arg(long, global = true)]
    frames: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// SNR against relay power gain on a fixed channel.
    Fig2(SweepArgs),
    /// BER against SNR_c without a direct link.
    Fig3(SweepArgs),
    /// BER against SNR_c with a direct link.
    Fig4(SweepArgs),
    /// BER against RSI power.
    Fig5(SweepArgs),
    /// Optimal relay gain of a fixed channel.
    OptimizeGain(ChannelArgs),
    /// Every link-budget quantity at one gain.
    Budget(BudgetArgs),
    /// BER of each scheme at a single operating point.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// SNR_c values in dB, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    snr_c: Option<String>,
    /// RSI powers in dB, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    rsi: Option<String>,
    #[arg(short = 'n', long = "subcarriers")]
    n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    h_sr: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    h_rd: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    h_rr: Option<String>,
    /// `optimized`, `fixed:<beta>` or `sweep:<b1,b2,...>`.
    #[arg(long)]
    beta_policy: Option<String>,
}

#[derive(Debug, Args)]
struct ChannelArgs {
    /// Gains as `re` or `re,im`.
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    h_sr: String,
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    h_rd: String,
    #[arg(long, default_value = "0.178", allow_hyphen_values = true)]
    h_rr: String,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    h_sd: String,
    /// Per-hop SNR in dB.
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    snr_c: f64,
    #[arg(short = 'n', long = "subcarriers", default_value_t = 128)]
    n: usize,
}

#[derive(Debug, Args)]
struct BudgetArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[arg(long, conflicts_with = "beta", required_unless_present = "beta")]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 20.0, allow_hyphen_values = true)]
    snr_c: f64,
    #[arg(long, default_value_t = -15.0, allow_hyphen_values = true)]
    rsi: f64,
    /// Add the direct source-destination link.
    #[arg(long)]
    direct: bool,
    /// Fixed relay amplitude gain instead of each scheme's optimizer.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(short = 'n', long = "subcarriers")]
    n: Option<usize>,
    /// Write the first frame's destination stream (interleaved f64 LE) here.
    #[arg(long)]
    dump: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to stderr as a single line.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.to_string();
            eprintln!("{}", msg.lines().next().unwrap_or("invalid arguments"));
            return 2;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            if matches!(e, Error::Config(_)) {
                2
            } else {
                1
            }
        }
    }
}

fn base_config(cli: &Cli, figure: Figure) -> Result<SimConfig> {
    let mut cfg = SimConfig::for_figure(figure);
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(schemes) = &cli.schemes {
        cfg.schemes = parse_schemes(schemes)?;
    }
    if let Some(frames) = cli.frames {
        cfg.frames = frames;
    }
    Ok(cfg)
}

fn apply_sweep_args(cfg: &mut SimConfig, a: &SweepArgs) -> Result<()> {
    if let Some(v) = &a.snr_c {
        cfg.snr_c_db = parse_list("snr-c", v)?;
    }
    if let Some(v) = &a.rsi {
        cfg.rsi_db = parse_list("rsi", v)?;
    }
    if let Some(n) = a.n {
        cfg.n = n;
    }
    if let Some(v) = &a.h_sr {
        cfg.h_sr = parse_complex(v)?;
    }
    if let Some(v) = &a.h_rd {
        cfg.h_rd = parse_complex(v)?;
    }
    if let Some(v) = &a.h_rr {
        cfg.h_rr = parse_complex(v)?;
    }
    if let Some(v) = &a.beta_policy {
        cfg.beta_policy = parse_beta_policy(v)?;
    }
    cfg.validate()
}

fn channel_from(a: &ChannelArgs) -> Result<ChannelRealization> {
    if !a.snr_c.is_finite() {
        return Err(Error::Config("snr-c must be finite".into()));
    }
    let c = |s: &str| parse_complex(s).map(|(re, im)| Complex64::new(re, im));
    let sigma2 = from_db(-a.snr_c);
    Ok(ChannelRealization {
        h_sr: c(&a.h_sr)?,
        h_rd: c(&a.h_rd)?,
        h_rr: c(&a.h_rr)?,
        h_sd: c(&a.h_sd)?,
        sigma2_r: sigma2,
        sigma2_d: sigma2,
    })
}

fn emit(cli: &Cli, result: &SweepResult) -> Result<()> {
    match &cli.out {
        Some(path) => {
            write_csv_file(result, path)?;
            println!("{}", result.metadata);
            if let Records::Gain { optimum, .. } = &result.records {
                println!("optimum beta2 = {}, gamma = {} dB", optimum.power_gain(), to_db(optimum.gamma_star));
            }
            println!("wrote {}", path.display());
        }
        None => {
            eprintln!("{}", result.metadata);
            write_csv(result, std::io::stdout().lock())?;
        }
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Fig2(a) | Command::Fig3(a) | Command::Fig4(a) | Command::Fig5(a) => {
            let (figure, runner): (Figure, fn(&SimConfig) -> Result<SweepResult>) = match &cli.command {
                Command::Fig2(_) => (Figure::GainSweep, run_fig2),
                Command::Fig3(_) => (Figure::BerNoDirect, run_fig3),
                Command::Fig4(_) => (Figure::BerDirect, run_fig4),
                _ => (Figure::BerRsi, run_fig5),
            };
            let mut cfg = base_config(&cli, figure)?;
            apply_sweep_args(&mut cfg, a)?;
            emit(&cli, &runner(&cfg)?)
        }
        Command::OptimizeGain(a) => {
            let ch = channel_from(a)?;
            let sol = optimize_gain(&ch, a.n, crate::linkbudget::DEFAULT_GRID_POINTS, crate::linkbudget::DEFAULT_TOLERANCE)?;
            let pre = optimize_prefilter_gain(&ch, crate::linkbudget::DEFAULT_GRID_POINTS, crate::linkbudget::DEFAULT_TOLERANCE)?;
            let mut out = std::io::stdout().lock();
            match sol.alpha_star {
                Some(alpha) => writeln!(out, "alpha_star = {alpha}")?,
                None => writeln!(out, "alpha_star = none (h_rr = 0, gain capped)")?,
            }
            writeln!(out, "beta_star = {}", sol.beta_star)?;
            writeln!(out, "beta2_star = {}", sol.power_gain())?;
            writeln!(out, "gamma_star_db = {}", to_db(sol.gamma_star))?;
            writeln!(out, "prefilter_beta2_star = {}", pre.power_gain())?;
            writeln!(out, "prefilter_gamma_star_db = {}", to_db(pre.gamma_star))?;
            Ok(())
        }
        Command::Budget(a) => {
            let ch = channel_from(&a.channel)?;
            let beta = match (a.alpha, a.beta) {
                (Some(alpha), _) => {
                    if !(0.0..1.0).contains(&alpha) {
                        return Err(Error::Config(format!("alpha {alpha} must lie in [0, 1)")));
                    }
                    ch.beta_for_alpha(alpha)?
                }
                (None, Some(beta)) => beta,
                (None, None) => return Err(Error::Config("one of --alpha or --beta is required".into())),
            };
            let b = budget(&ch, beta, a.channel.n)?;
            let mut out = std::io::stdout().lock();
            for (name, value) in [
                ("alpha", b.alpha),
                ("beta", b.beta),
                ("p_d", b.p_d),
                ("p_r1", b.p_r1),
                ("p_n", b.p_n),
                ("p_r2", b.p_r2),
                ("p_r", b.p_r),
                ("p_y", b.p_y),
                ("p_gi", b.p_gi),
                ("sigma_x2", b.sigma_x2),
                ("eta", b.eta),
                ("gamma", b.gamma),
                ("gamma_pre", b.gamma_pre),
                ("delta", b.delta),
                ("gamma_db", to_db(b.gamma)),
                ("gamma_pre_db", to_db(b.gamma_pre)),
            ] {
                writeln!(out, "{name} = {value}")?;
            }
            writeln!(out, "degenerate = {}", b.degenerate)?;
            Ok(())
        }
        Command::Simulate(a) => simulate(&cli, a),
    }
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> Result<()> {
    let mut cfg = base_config(cli, Figure::BerNoDirect)?;
    cfg.snr_c_db = vec![a.snr_c];
    cfg.rsi_db = vec![a.rsi];
    cfg.direct_link = a.direct;
    if let Some(n) = a.n {
        cfg.n = n;
    }
    if let Some(beta) = a.beta {
        cfg.beta_policy = super::config::BetaPolicy::Fixed(beta);
    }
    cfg.validate()?;
    let pathloss = a.direct.then_some(cfg.direct_pathloss_db);
    let chcfg = ChannelConfig::physical(a.snr_c, a.rsi, pathloss);

    if let Some(path) = &a.dump {
        let scheme = cfg.schemes[0];
        let mut rng = trial_rng(cfg.seed, 0);
        let ch = draw_channels(&mut rng, &chcfg)?;
        let beta = select_beta(scheme, &cfg, &ch, a.direct, 0)?;
        let c = scheme_constellation(scheme, cfg.constellation);
        let bits = random_bits(&mut rng, cfg.n * cfg.blocks_per_frame * c.bits_per_symbol);
        let blocks = map_bits(&bits, &c, cfg.n)?;
        let setup = LinkSetup { n: cfg.n, blocks: cfg.blocks_per_frame, with_direct: a.direct };
        let y = received_stream(scheme, &setup, &ch, beta, &blocks, &mut rng, false)?;
        dump_stream(path, &y)?;
    }

    let mut records = Vec::with_capacity(cfg.schemes.len());
    for &scheme in &cfg.schemes {
        records.push(ber_point(scheme, &cfg, &chcfg, a.direct, a.snr_c)?);
    }
    let result = SweepResult {
        figure: Figure::BerNoDirect,
        sweep_name: "snr_c_db",
        records: Records::Ber(records),
        metadata: format!("{}\n{}", super::experiments::version_string(), cfg.echo()),
    };
    emit(cli, &result)
}
