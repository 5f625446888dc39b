//! Exact and floating-point analysis of Gaussian broadcast processes on the
//! orthant `Z_+^{d+1}` and on the half-space `{x : sum(x) >= 0}`.
//!
//! Every vertex `v` carries `X_v = alpha_{|p(v)|} * sum_{u in p(v)} (X_u + eps * W_{u->v})`
//! where `p(v)` is the set of vertices covered by `v` and the `W` are
//! independent standard Gaussians. The crate computes layer covariances,
//! optimal linear estimators of the root value `X_0`, and the combinatorial
//! quantities that control them.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod chain;
pub mod combinatorics;
pub mod covariance;
pub mod error;
pub mod estimator;
pub mod phase;
pub mod poisson;
pub mod poset;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use num_bigint::BigInt;
pub use num_rational::BigRational;
pub use poset::{Caps, ModelKind, ModelSpec, Vertex, Window};
pub use scalar::Scalar;
