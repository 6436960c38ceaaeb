//! Analytics for discretely rebalanced volatility-target indices.
//!
//! A volatility-target index rebalances each period between a risky asset
//! and cash so that its leverage `w = target_vol / sqrt(realised variance)`
//! holds the portfolio volatility at a fixed level.  As the rebalancing
//! interval shrinks, the index converges in law to a lognormal diffusion
//! whose drift and variance are inflated by two computable multipliers
//! `U(lambda) > 1` and `V(lambda) > 1` of the EWMA decay `lambda`.
//!
//! The crate provides:
//!
//! * [`multipliers`] — `U`, `V` by adaptive quadrature over truncated
//!   infinite products, the q-gamma / q-binomial machinery behind their
//!   closed forms, analytic upper/lower bounds, and the simple-moving-average
//!   counterparts;
//! * [`market`] — piecewise-constant coefficient curves and exact per-step
//!   integrated statistics;
//! * [`index`] — single-path evolution of the discrete, continuous, and
//!   simplified index processes from shared Gaussian draws;
//! * [`pricer`] — the limiting diffusion, European call pricing on its
//!   terminal distribution, and the rho-to-vega conversion;
//! * [`mc`] — a counter-based deterministic Monte Carlo engine (bit-identical
//!   results for any thread count) plus law-of-large-numbers, central-limit,
//!   and discrete/continuous-equivalence verifiers.

pub mod error;
pub mod index;
pub mod market;
pub mod mc;
pub mod multipliers;
pub mod pricer;
pub mod quad;
pub mod special;

pub use error::{Error, Result};
pub use index::{GridSpec, IndexConfig, PathResult, Variant};
pub use market::{MarketParams, PiecewiseCurve, SegmentStats};
pub use multipliers::{LambdaParam, MultiplierResult, QuadratureSettings};
pub use pricer::{LimitDiffusionParams, OptionSpec};
