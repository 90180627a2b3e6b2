//! Discrete Willmore energy and total mean curvature ratio on closed triangle
//! meshes, together with Möbius-limit experiments, axisymmetric profiles,
//! explicit constructions and a constrained gradient flow.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod axisym;
pub mod constructions;
pub mod curvature;
pub mod fit;
pub mod functionals;
pub mod mesh;
pub mod mobius;
pub mod obj;
pub mod optimizer;
pub mod refine;

pub use curvature::{compute_curvatures, DiscreteCurvatures};
pub use functionals::FunctionalReport;
pub use mesh::{MeshDiagnostics, MeshError, TriangleMesh};

/// Points and vectors in ℝ³.
pub type Vec3 = nalgebra::Vector3<f64>;

/// Crate version recorded in CSV/JSON outputs.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
