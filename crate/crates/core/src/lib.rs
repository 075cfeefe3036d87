//! Lipschitz certificates for layered networks with averaged activations.
//!
//! A network `T = T_m ∘ ⋯ ∘ T_1` with `T_i(x) = R_i(W_i x + b_i)` and
//! α_i-averaged activations `R_i` admits several computable Lipschitz bounds,
//! ordered as
//!
//! ```text
//! ‖W_m⋯W_1‖ ≤ ϑ_m ≤ θ_m ≤ ‖W_m‖⋯‖W_1‖
//! ```
//!
//! [`certificates::certify`] computes all of them and reports the tightest
//! valid one.

pub mod activations;
pub mod certificates;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod network;
pub mod rng;

pub use activations::{ScalarActivation, VectorActivation};
pub use certificates::{certify, certify_method, CertificateReport, CertifyOptions, Method};
pub use error::{LipError, Result};
pub use linalg::{Matrix, NormSpec};
pub use network::{Layer, Network};
