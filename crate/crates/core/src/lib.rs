//! Age of information in single-source networks of preemptive memoryless links.
//!
//! A network is a directed graph whose edges forward the freshest packet they
//! hold after an exponential service time; the source draws fresh packets as a
//! Poisson process. The stationary age at a node, or the minimum age over a
//! set of nodes, has the law of the shortest exponential path from a virtual
//! generator into that set. This crate computes that law several ways:
//!
//! - [`exact`]: subset recursions for the mean and the MGF, with CDFs by
//!   numerical inversion and optimised Chernoff bounds.
//! - [`cascade`]: linear-time means for chains of blocks joined at cut vertices.
//! - [`sampler`]: Monte Carlo over independent edge weights.
//! - [`simulator`]: the preemptive network itself, event by event.
//! - [`closed_forms`]: textbook formulas for cascades and triangles.
//!
//! ```
//! use aoi::{exact, topology};
//!
//! let net = topology::triangle(1.0, 1.0, 1.0, 1.0).unwrap();
//! let d = net.subset(&["d"]).unwrap();
//! assert!((exact::average_age(&net, &d).unwrap() - 1.75).abs() < 1e-12);
//! ```

pub mod cascade;
pub mod closed_forms;
pub mod error;
pub mod exact;
pub mod network;
mod par;
pub mod rng;
pub mod sampler;
pub mod simulator;
pub mod topology;

pub use error::{Error, Result};
pub use network::{AugmentedNetwork, Boundary, Edge, EdgeSpec, NetworkSpec, NodeId, SubsetId};
pub use par::Exec;
pub use rng::RngPolicy;
