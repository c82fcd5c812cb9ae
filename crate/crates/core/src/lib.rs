//! Time-energy cost of finite-dimensional quantum channels.
//!
//! A channel `K(rho) = sum_j K_j rho K_j^dagger` can be implemented by many
//! unitaries on system plus ancilla. Its cost `||K||` is the smallest
//! achievable max-norm (largest eigenphase magnitude) over all of them, and
//! `cos ||K||` is the channel's worst-case entanglement fidelity.
//!
//! The cost reduces to a concave maximization over the coefficient ball,
//!
//! ```text
//! cos ||K|| = max_{|v| <= 1}  lambda_min( (K_v + K_v^dagger) / 2 ),   K_v = sum_j v_j K_j
//! ```
//!
//! which [`cost`] solves two independent ways (supergradient ascent and a
//! log-barrier SDP), alongside closed forms, bounds, explicit optimal
//! unitary extensions ([`dilation`]) and brute-force references ([`oracle`]).

pub mod channel;
pub mod cli;
pub mod cost;
pub mod dilation;
pub mod io;
pub mod matops;
pub mod oracle;

pub use channel::{ChannelError, KrausChannel};
pub use cost::{cost, CostConfig, CostError, CostResult, Method};
pub use matops::{ComplexMatrix, C64};
