//! # kwkl
//!
//! Optimal transport, optimal channels and Kullback-Leibler geometry on
//! finite probability spaces.
//!
//! The crate computes three optimal values for a cost `c(x, y)`:
//!
//! | Quantity | Problem | Module |
//! |----------|---------|--------|
//! | `K_c[p,q]` | min `E_w{c}` over couplings with both marginals fixed | [`transport_lp`] |
//! | `R_c[q](λ)` | min `E_w{c}` with input marginal fixed and `I(X,Y) ≤ λ` | [`channel`] |
//! | `K_c[p,q](λ)` | both marginals fixed and `I(X,Y) ≤ λ` | [`info_otp`] |
//!
//! and checks the identities tying them to the KL divergence: the
//! Pythagorean split of cross-information, the law of cosines, the
//! cumulant (exponential family) identities and the dual transport bound
//! ([`geometry`]). [`oracles`] holds brute-force reference solvers used by
//! the tests and the `verify` command.
//!
//! All information quantities are in nats.
//!
//! ```
//! use kwkl::{CostMatrix, Distribution, transport_lp::solve_otp};
//!
//! let q = Distribution::new(vec![0.5, 0.5])?;
//! let p = Distribution::new(vec![0.75, 0.25])?;
//! let sol = solve_otp(&q, &p, &CostMatrix::hamming(2))?;
//! assert!((sol.value - 0.25).abs() < 1e-12);
//! # Ok::<(), kwkl::Error>(())
//! ```

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub(crate) mod bisection;
pub mod channel;
pub mod cli;
mod error;
pub mod geometry;
pub mod info_otp;
pub mod measures;
pub mod oracles;
pub(crate) mod scalar;
pub mod transport_lp;

pub use error::{Error, Result};
pub use measures::{CostMatrix, Distribution, InfoBudget, JointDistribution};

// The guide's code listings are compiled and run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/measures.md")]
    mod measures {}
    #[doc = include_str!("../../../book/src/transport.md")]
    mod transport {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/constrained.md")]
    mod constrained {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
}
