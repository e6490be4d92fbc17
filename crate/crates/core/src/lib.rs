//! Tracking of sparse, weighted, time-varying graph topologies from
//! graph-filtered signal observations.
//!
//! The latent state is the vector of candidate edge weights of an undirected
//! graph on a fixed node set. Observations are noisy outputs of a known
//! polynomial graph filter `h(L) = sum_p a_p L^p` driven by known inputs, where
//! `L = B diag(x) B^T` is the Laplacian assembled from the complete-graph
//! incidence matrix `B`. The crate provides:
//!
//! * [`graph`]: edge indexing, incidence matrix and Laplacian assembly.
//! * [`filter`]: polynomial graph filters and their Jacobians with respect to
//!   the edge weights (reference formula and the dynamic-programming scheme).
//! * [`sim`]: seeded synthetic scenarios with evolving supports.
//! * [`trackers`]: EKF, sparsity-aware GSP-EKF (ISTA update), known-support
//!   oracle and the exact linear Kalman filter.
//! * [`observability`]: stacked observability matrices and rank tests.
//! * [`metrics`]: normalized MSE and edge identification error rate.

pub mod error;
pub mod filter;
pub mod graph;
pub mod linalg;
pub mod metrics;
pub mod observability;
pub mod sim;
pub mod trackers;

pub use error::{Error, Result};
pub use filter::{FilterSpec, JacobianMethod, PolynomialFilter};
pub use graph::{EdgeIndexMap, EdgeSet, IncidenceMatrix};
pub use sim::{ScenarioConfig, Trajectory};
pub use trackers::{
    IdentityTransition, IstaConfig, LinearTransition, NoiseModel, StateTransition, SupportMask,
    TrackerState, TrackingModel,
};
