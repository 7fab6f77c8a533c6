//! Link-level models for molecular communication via diffusion with a
//! reusable-duration ISI canceller.
//!
//! The receiver counts molecules in an optimized detection window and
//! subtracts the count from an early prefix `[0, t_u]` of the symbol, where
//! ISI from earlier symbols dominates the desired signal. The crate
//! provides the channel responses ([`channel`]), the Gaussian count
//! statistics ([`stats`]), threshold detection and Monte Carlo BER
//! ([`detection`]), the mSINAR objectives ([`metric`]), the window and
//! reuse-duration optimizers ([`optimizer`]) and the experiment harness
//! ([`harness`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod detection;
pub mod error;
pub mod harness;
pub mod metric;
pub mod optimizer;
pub mod quad;
pub mod special;
pub mod stats;

pub use channel::{ChannelParams, ReceiverKind};
pub use detection::{BerPoint, McEstimate, SimMode, ThresholdChoice, ThresholdGrid};
pub use error::{McvdError, Result};
pub use optimizer::{OptimizationResult, SearchSettings, WindowChoice};
pub use stats::{DetectionWindow, LinkConfig, ReusableWindow, Tap, TapStats};
