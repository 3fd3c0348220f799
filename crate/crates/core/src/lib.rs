//! Exact algebra of continuous piecewise-linear (CPWL) functions and
//! Lipschitz-constrained feed-forward networks.
//!
//! * [`cpwl1d`]: scalar splines with composition, min/max, Lipschitz constant
//!   and second-order total variation.
//! * [`lattice`]: min-of-max lattices of affine pieces, Lipschitz-optimal
//!   interpolation and export to ReLU networks.
//! * [`decompose`]: factorization of 1-Lipschitz splines into chains of
//!   1-Lipschitz splines with at most three linear regions.
//! * [`lipnet`]: constrained networks, activations, weight projections,
//!   Jacobians and exact affine-region enumeration.
//! * [`analysis`]: experiment drivers built on the modules above.
//! * [`io`]: the versioned JSON documents exchanged by the command line tool.

pub mod analysis;
pub mod cpwl1d;
pub mod decompose;
pub mod error;
pub mod io;
pub mod lattice;
pub mod lipnet;
pub mod norm;
pub mod random;

pub use cpwl1d::{LinearSpline1D, SlopeProfile};
pub use decompose::CompositionChain;
pub use error::{Error, Result};
pub use lattice::{AffinePiece, InterpolationProblem, LatticeCPWL};
pub use lipnet::{ActivationSpec, ConstrainedNet, ConstraintSpec, Layer, RegionReport};
pub use norm::NormIndex;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
