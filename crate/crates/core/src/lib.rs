//! Lipschitz-constant analysis of fully-connected networks.
//!
//! The crate computes two kinds of Lipschitz bounds for a network with
//! 1-Lipschitz activations:
//!
//! * from sampled or trained weights, the product of per-layer spectral norms
//!   and the spectral norm of the end-to-end linear map;
//! * from the architecture alone, closed-form estimates that assume i.i.d.
//!   Gaussian weights, built on the extreme singular values of Gaussian
//!   matrices.
//!
//! On top of those it offers a Lyapunov-based stability certificate for a
//! linear system with a network in the loop ([`stability`]), an output
//! trajectory-length study ([`trajectory`]), a check of the Gaussian-weight
//! assumption on trained networks ([`empirics`]), and the experiment drivers
//! behind the `lipscope` binary ([`cli`]).
//!
//! Everything random flows from [`random::RngStream`], so every experiment is
//! reproducible from its master seed regardless of thread count.

pub mod bounds;
pub mod cli;
pub mod empirics;
pub mod linalg;
pub mod network;
pub mod random;
pub mod stability;
pub mod trajectory;

pub use bounds::{bound_report, BoundReport};
pub use linalg::Matrix;
pub use network::{Activation, Architecture, Network};
pub use random::RngStream;
pub use stability::{CertificationMode, StabilitySystem};
pub use trajectory::Trajectory;
