//! Secret-key rates for entanglement-based QKD over a repeater chain in which
//! only a contiguous block of repeaters may be adversarial.
//!
//! The crate composes Bell-diagonal link noise, derives the honest-network
//! noise parameter `p*`, evaluates finite-key and asymptotic rates against the
//! BB84 baselines, and cross-checks every closed form with a density-matrix
//! oracle, exhaustive enumeration, or Monte Carlo.

pub mod bell;
pub mod cli;
pub mod dm_oracle;
pub mod error;
pub mod keyrate;
pub mod montecarlo;
pub mod noise;
pub mod sampling;

pub use bell::{BellDiagonal, BellSymbol, BellWord};
pub use error::{Error, Result};
pub use keyrate::{RateParams, RateReport};
pub use noise::{ChainSpec, LinkNoise, NoiseReport};
