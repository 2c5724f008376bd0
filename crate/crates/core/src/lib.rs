//! Brownian motion run on a position-dependent stable clock.
//!
//! The process is `X(t) = B(L(t))` where `L` inverts a subordinator whose
//! local stability index is `alpha(x)`. The crate simulates it, estimates
//! localization statistics, classifies regimes from the shape of `alpha`,
//! and solves the companion time-fractional equation on a grid.

pub mod alpha;
pub mod cli;
pub mod config;
pub mod error;
pub mod intervals;
pub mod output;
pub mod pde;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod validation;

pub use alpha::{classify_regime, AlphaField, MinStructure, RegimeKind, RegimePrediction};
pub use error::{Error, Result};
pub use intervals::{Interval, IntervalUnion};
pub use rng::RandomStream;
pub use sim::{SimConfig, TimeChangedSample};
