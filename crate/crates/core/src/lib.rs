//! Certified robustness for graph convolutional networks.
//!
//! Given a trained GCN and a target node, this crate decides whether any
//! admissible perturbation of the binary node attributes (at most `q` flips
//! per node and `Q` flips in total) can change the node's prediction:
//!
//! * [`bounds`] computes interval bounds on every hidden pre-activation of
//!   the sliced network,
//! * [`dual`] evaluates a closed-form lower bound on the worst-case margin of
//!   the convex relaxation, optionally tightening it by projected gradient
//!   ascent,
//! * [`attack`] turns the dual solution into an explicit perturbation and
//!   evaluates it on the exact network (non-robustness certificate),
//! * [`train`] uses the differentiable dual to train models that are
//!   certifiably robust.
//!
//! [`oracle`] holds independent machinery (brute-force enumeration and a
//! dense simplex solver) used to verify the certificates on small instances.

pub mod attack;
pub mod bounds;
pub mod cli;
pub mod dual;
pub mod error;
pub mod gcn;
pub mod grad;
pub mod graph;
pub mod io;
pub mod oracle;
pub mod report;
pub mod select;
pub mod synth;
pub mod train;

pub use bounds::{ActivationBounds, Budget, Tag};
pub use dual::{Certificate, CertifyMode, DualState, MarginVector, Status};
pub use error::{Error, Result};
pub use gcn::{ForwardTrace, GcnParams};
pub use graph::{Graph, MessagePassing, SlicedProblem, SplitTag};
