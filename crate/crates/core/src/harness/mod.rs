//! Experiment configuration, Monte-Carlo drivers, CSV output and the
//! command-line front end.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod link;
pub mod output;

pub use config::{BetaPolicy, Figure, SimConfig};
pub use experiments::{
    ber_point, cp_ofdm_gain, gain_sweep_channel, measured_snr, run_fig2, run_fig3, run_fig4, run_fig5, select_beta,
    version_string, GainPoint, Records, SweepResult,
};
pub use link::{run_frame, FrameOutput, LinkSetup, SnrMeasurement};
pub use output::{write_csv, write_csv_file};
