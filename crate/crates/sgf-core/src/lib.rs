//! Discrete-time simulator and hierarchical reinforcement-learning harness for
//! NOMA-assisted semi-grant-free uplink transmission.
//!
//! Grant-based users (GBUs) hold reserved channels; grant-free users (GFUs)
//! contend for the interference headroom the GBUs leave unused, organized as a
//! cascade of pre-configured receive-SNR levels separated by successive
//! interference cancellation. The crate provides the channel and MAC physics,
//! age-of-information tracking under generate-at-request traffic, baseline
//! schedulers, a from-scratch clipped-surrogate policy optimizer, the
//! two-level learning scheme (beamforming above, transmission probability
//! below), an exact Markov oracle for verification, and the experiment
//! harness behind the `sgf` command-line tool.

pub mod aoi;
pub mod baselines;
pub mod channel;
pub mod checkpoint;
pub mod config;
pub mod env;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod mac;
pub mod nn;
pub mod oracle;
pub mod ppo;
pub mod svg;
pub mod train;

pub use config::SimConfig;
pub use error::{Result, SgfError};
