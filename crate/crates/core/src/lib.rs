//! Energy-efficient resource allocation for downlink NOMA.
//!
//! The crate covers the full pipeline on one base station with `N`
//! subchannels and `M` users, at most `K` users per subchannel:
//!
//! - [`channel`]: random user drops and channel gains,
//! - [`noma`]: SIC decoding order, SINR, rates, energy efficiency,
//!   fractional transmit power allocation (FTPA),
//! - [`gp`]: a small geometric-programming engine with single condensation,
//! - [`matching`]: many-to-many user/subchannel matching,
//! - [`power`]: GP-based and greedy power loading, plus full-power baselines,
//! - [`harness`]: Monte-Carlo experiments, a brute-force reference and CSV
//!   output.
//!
//! Rates are reported in bits/s/Hz and energy efficiency in bits/s/Hz per
//! watt. Solvers work with natural logarithms internally; this only scales
//! the objective.

pub mod channel;
pub mod error;
pub mod gp;
pub mod harness;
pub mod matching;
pub mod noma;
pub mod power;

pub use error::{Error, Result};
