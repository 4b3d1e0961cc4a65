//! Semi-implicit splitting solver for the two-dimensional shallow water
//! equations on unstructured P1 triangle meshes.
//!
//! Each outer step splits the update `U(n+1) = U(n) + dU* + dU**` into an
//! explicit two-stage Taylor–Galerkin integration of the Coriolis, Chezy and
//! wind sources ([`explicit`]) followed by an implicit θ-method solve of the
//! gravity-wave part ([`implicit`]). [`stability`] carries the frozen-coefficient
//! analysis of the source sub-step and the critical explicit step it yields.
//!
//! The crate is `no_std` and only needs `alloc`; file formats, output and the
//! command-line front end live in the `lagoon` crate.

#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// 3×3 element matrices read best with explicit indices
#![allow(clippy::needless_range_loop)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod explicit;
pub mod fem;
pub mod forcing;
pub mod implicit;
pub mod mesh;
pub mod simulator;
pub mod solver;
pub mod sparse;
pub mod stability;

pub use error::Error;
pub use explicit::{SourceIncrement, State};
pub use fem::FemMatrices;
pub use forcing::{Forcing, TimeSeries, VectorSeries};
pub use implicit::{LinearSolveStats, ThetaConfig};
pub use mesh::{BoundaryTag, Mesh, Node, Triangle};
pub use simulator::{GateMode, RunConfig, RunSummary, Simulator};
pub use stability::{PhysicalParams, StabilityInputs, StabilityReport};
