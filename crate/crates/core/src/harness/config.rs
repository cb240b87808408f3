//! Simulation configuration and its flat `key = value` file format.
//!
//! ```text
//! # comments start with '#'
//! n = 128
//! blocks_per_frame = 50
//! frames = 200
//! constellation = qpsk
//! snr_c_db = 10, 20, 30
//! rsi_db = -15
//! direct_link = false
//! direct_pathloss_db = 10
//! schemes = proposed, prefilter, cp_ofdm
//! seed = 1
//! beta_policy = optimized        # or fixed:2.5 or sweep:1,2,4 (amplitude gains)
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::linkbudget::{DEFAULT_GRID_POINTS, DEFAULT_TOLERANCE};
use crate::receiver::Scheme;
use crate::txchain::Modulation;

/// How each scheme picks its relay amplitude gain.
#[derive(Debug, Clone, PartialEq)]
pub enum BetaPolicy {
    /// Each scheme uses its own optimizer.
    Optimized,
    Fixed(f64),
    /// Relay amplitude gains for a gain sweep.
    Sweep(Vec<f64>),
}

/// Everything a Monte-Carlo run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub blocks_per_frame: usize,
    /// Channel draws per sweep point (frames per point for the SNR sweep).
    pub frames: usize,
    /// Modulation of the full-duplex schemes. The FDD baseline always uses 16QAM.
    pub constellation: Modulation,
    pub snr_c_db: Vec<f64>,
    pub rsi_db: Vec<f64>,
    pub direct_link: bool,
    pub direct_pathloss_db: f64,
    pub schemes: Vec<Scheme>,
    pub seed: u64,
    pub beta_policy: BetaPolicy,
    /// Keep drawing channels past `frames` until this many errors are seen.
    pub min_errors: u64,
    /// Upper bound on channel draws per point; 0 means `10 * frames`.
    pub max_frames: usize,
    /// Pilot frames used by the CP-OFDM baseline's empirical gain search.
    pub pilot_frames: usize,
    pub pilot_blocks: usize,
    /// Size of the CP-OFDM baseline's gain grid.
    pub cp_gain_points: usize,
    /// Coarse grid of the analytic gain optimizers.
    pub grid_points: usize,
    pub tolerance: f64,
    /// Fixed channel of the gain sweep, as `(re, im)` pairs.
    pub h_sr: (f64, f64),
    pub h_rd: (f64, f64),
    pub h_rr: (f64, f64),
    /// Number of power-gain points in the gain sweep.
    pub gain_points: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 128,
            blocks_per_frame: 50,
            frames: 200,
            constellation: Modulation::Qpsk,
            snr_c_db: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            rsi_db: vec![-15.0],
            direct_link: false,
            direct_pathloss_db: 10.0,
            schemes: Scheme::ALL.to_vec(),
            seed: 1,
            beta_policy: BetaPolicy::Optimized,
            min_errors: 100,
            max_frames: 0,
            pilot_frames: 10,
            pilot_blocks: 4,
            cp_gain_points: 32,
            grid_points: DEFAULT_GRID_POINTS,
            tolerance: DEFAULT_TOLERANCE,
            h_sr: (1.0, 0.0),
            h_rd: (1.0, 0.0),
            h_rr: (0.178, 0.0),
            gain_points: 40,
        }
    }
}

/// The four experiment drivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// SNR against relay power gain on a fixed channel.
    GainSweep,
    /// BER against SNR without direct link.
    BerNoDirect,
    /// BER against SNR with direct link.
    BerDirect,
    /// BER against RSI power.
    BerRsi,
}

impl SimConfig {
    /// Defaults matching each experiment's operating point.
    pub fn for_figure(fig: Figure) -> Self {
        let base = Self::default();
        match fig {
            Figure::GainSweep => Self {
                snr_c_db: vec![10.0],
                schemes: vec![Scheme::Proposed, Scheme::Prefilter],
                ..base
            },
            Figure::BerNoDirect => base,
            Figure::BerDirect => Self { direct_link: true, ..base },
            Figure::BerRsi => Self {
                snr_c_db: vec![25.0],
                rsi_db: vec![-30.0, -25.0, -20.0, -15.0, -10.0, -5.0, 0.0],
                ..base
            },
        }
    }

    pub fn max_frames(&self) -> usize {
        if self.max_frames == 0 {
            self.frames * 10
        } else {
            self.max_frames.max(self.frames)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if !self.n.is_power_of_two() || self.n < 4 {
            return bad("n must be a power of two >= 4");
        }
        if self.blocks_per_frame == 0 || self.frames == 0 {
            return bad("blocks_per_frame and frames must be >= 1");
        }
        if self.snr_c_db.is_empty() || self.snr_c_db.iter().any(|v| !v.is_finite()) {
            return bad("snr_c_db needs at least one finite value");
        }
        if self.rsi_db.is_empty() || self.rsi_db.iter().any(|v| !v.is_finite()) {
            return bad("rsi_db needs at least one finite value");
        }
        if !self.direct_pathloss_db.is_finite() {
            return bad("direct_pathloss_db must be finite");
        }
        if self.schemes.is_empty() {
            return bad("at least one scheme is required");
        }
        if self.pilot_frames == 0 || self.pilot_blocks == 0 || self.cp_gain_points < 3 {
            return bad("pilot_frames, pilot_blocks must be >= 1 and cp_gain_points >= 3");
        }
        if self.grid_points < 3 || !(self.tolerance > 0.0) {
            return bad("grid_points must be >= 3 and tolerance > 0");
        }
        if self.gain_points < 2 {
            return bad("gain_points must be >= 2");
        }
        match &self.beta_policy {
            BetaPolicy::Fixed(b) if !(*b > 0.0 && b.is_finite()) => return bad("fixed beta must be positive"),
            BetaPolicy::Sweep(v) if v.is_empty() || v.iter().any(|b| !(*b > 0.0 && b.is_finite())) => {
                return bad("beta sweep values must be positive")
            }
            _ => {}
        }
        Ok(())
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "n" => self.n = parse(key, value)?,
            "blocks_per_frame" => self.blocks_per_frame = parse(key, value)?,
            "frames" => self.frames = parse(key, value)?,
            "constellation" => self.constellation = parse_modulation(value)?,
            "snr_c_db" => self.snr_c_db = parse_list(key, value)?,
            "rsi_db" => self.rsi_db = parse_list(key, value)?,
            "direct_link" => self.direct_link = parse(key, value)?,
            "direct_pathloss_db" => self.direct_pathloss_db = parse(key, value)?,
            "schemes" => self.schemes = parse_schemes(value)?,
            "seed" => self.seed = parse(key, value)?,
            "beta_policy" => self.beta_policy = parse_beta_policy(value)?,
            "min_errors" => self.min_errors = parse(key, value)?,
            "max_frames" => self.max_frames = parse(key, value)?,
            "pilot_frames" => self.pilot_frames = parse(key, value)?,
            "pilot_blocks" => self.pilot_blocks = parse(key, value)?,
            "cp_gain_points" => self.cp_gain_points = parse(key, value)?,
            "grid_points" => self.grid_points = parse(key, value)?,
            "tolerance" => self.tolerance = parse(key, value)?,
            "h_sr" => self.h_sr = parse_complex(value)?,
            "h_rd" => self.h_rd = parse_complex(value)?,
            "h_rr" => self.h_rr = parse_complex(value)?,
            "gain_points" => self.gain_points = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Applies every setting of a config text on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", lineno + 1)))?;
            self.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {}", lineno + 1, strip_prefix(&e))))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    /// The configuration in its own file format, one key per line.
    pub fn echo(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let cplx = |(re, im): (f64, f64)| format!("{re}, {im}");
        let policy = match &self.beta_policy {
            BetaPolicy::Optimized => "optimized".to_string(),
            BetaPolicy::Fixed(b) => format!("fixed:{b}"),
            BetaPolicy::Sweep(v) => format!("sweep:{}", list(v).replace(' ', "")),
        };
        let schemes = self.schemes.iter().map(|s| s.name()).collect::<Vec<_>>().join(", ");
        let modulation = match self.constellation {
            Modulation::Qpsk => "qpsk",
            Modulation::Qam16 => "qam16",
        };
        [
            format!("n = {}", self.n),
            format!("blocks_per_frame = {}", self.blocks_per_frame),
            format!("frames = {}", self.frames),
            format!("constellation = {modulation}"),
            format!("snr_c_db = {}", list(&self.snr_c_db)),
            format!("rsi_db = {}", list(&self.rsi_db)),
            format!("direct_link = {}", self.direct_link),
            format!("direct_pathloss_db = {}", self.direct_pathloss_db),
            format!("schemes = {schemes}"),
            format!("seed = {}", self.seed),
            format!("beta_policy = {policy}"),
            format!("min_errors = {}", self.min_errors),
            format!("max_frames = {}", self.max_frames),
            format!("pilot_frames = {}", self.pilot_frames),
            format!("pilot_blocks = {}", self.pilot_blocks),
            format!("cp_gain_points = {}", self.cp_gain_points),
            format!("grid_points = {}", self.grid_points),
            format!("tolerance = {}", self.tolerance),
            format!("h_sr = {}", cplx(self.h_sr)),
            format!("h_rd = {}", cplx(self.h_rd)),
            format!("h_rr = {}", cplx(self.h_rr)),
            format!("gain_points = {}", self.gain_points),
        ]
        .join("\n")
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(msg) => msg.clone(),
        other => other.to_string(),
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value '{value}' for '{}'", key.trim())))
}

pub fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse(key, s)).collect()
}

pub fn parse_schemes(value: &str) -> Result<Vec<Scheme>> {
    value.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

/// `re` or `re, im`.
pub fn parse_complex(value: &str) -> Result<(f64, f64)> {
    let parts = parse_list("complex gain", value)?;
    match parts.as_slice() {
        [re] => Ok((*re, 0.0)),
        [re, im] => Ok((*re, *im)),
        _ => Err(Error::Config(format!("bad complex value '{value}'"))),
    }
}

fn parse_modulation(value: &str) -> Result<Modulation> {
    match value.to_ascii_lowercase().as_str() {
        "qpsk" => Ok(Modulation::Qpsk),
        "qam16" | "16qam" => Ok(Modulation::Qam16),
        other => Err(Error::Config(format!("unknown constellation '{other}'"))),
    }
}

pub fn parse_beta_policy(value: &str) -> Result<BetaPolicy> {
    let value = value.trim();
    if value == "optimized" {
        return Ok(BetaPolicy::Optimized);
    }
    if let Some(v) = value.strip_prefix("fixed:") {
        return Ok(BetaPolicy::Fixed(parse("beta_policy", v)?));
    }
    if let Some(v) = value.strip_prefix("sweep:") {
        return Ok(BetaPolicy::Sweep(parse_list("beta_policy", v)?));
    }
    Err(Error::Config(format!("unknown beta policy '{value}'")))
}
