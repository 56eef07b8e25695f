//! Numerical laboratory for the sigma_k^{alpha/k} curvature flow of entire
//! spacelike graphs in Minkowski space.
//!
//! The flow `du/dt = F^alpha((1/w) gamma^{ik} u_{kl} gamma^{lj}) w` with
//! `F = sigma_k^{1/k}` is integrated in three formulations:
//!
//! * the primal radial graph flow on `[0, R]` with Dirichlet data at `R`,
//! * the dual flow for the Legendre transform `u*` on a ball `B_r`,
//! * the normalized dual flow whose stationary points are self-expanders.
//!
//! Around the solvers sit the pieces needed to check structure, not just
//! integrate: elementary symmetric speeds and their duality identity
//! ([`symfunc`]), discrete spacelike-graph geometry ([`geometry`]), the
//! Legendre transform ([`legendre`]), independent self-expander solvers
//! ([`expander`]), and executable forms of the comparison/bound/convergence
//! statements the flow is supposed to satisfy ([`diagnostics`]).

pub mod diagnostics;
pub mod error;
pub mod expander;
pub mod flow;
pub mod geometry;
pub mod grid;
pub mod legendre;
pub mod params;
pub mod report;
pub mod snapshot;
pub mod symfunc;

pub use error::CoreError;
pub use grid::{BallField2D, RadialField};
pub use params::SpeedParams;
