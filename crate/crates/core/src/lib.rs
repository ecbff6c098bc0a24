//! Spectral geometry of free-boundary minimal surfaces on triangle meshes.
//!
//! The crate discretizes the second-variation quadratic forms of area and
//! energy for a surface whose boundary sits on the boundary of an ambient
//! domain, solves the resulting constrained generalized eigenproblems, and
//! checks a collection of index, nullity, heat-trace and topological
//! inequalities against the computed spectra.
//!
//! Module map:
//! - [`mesh`]: triangulated surfaces, topology, built-in test geometries
//! - [`ambient`]: ambient curvature data, boundary shape operators, validation
//! - [`forms`]: second-variation form assembly and admissibility constraints
//! - [`dbar`]: the disk reparametrization problem and the comparison identity
//! - [`spectral`]: constrained symmetric eigensolvers and index classification
//! - [`heat`]: heat traces, kernel domination checks, closed-form index bounds
//! - [`bounds`]: exact combinatorial bounds and the inequality report

pub mod ambient;
pub mod bounds;
pub mod dbar;
pub mod forms;
pub mod heat;
mod expm;
pub mod mesh;
pub mod section;
pub mod spectral;

pub use ambient::{AmbientSpace, ImmersedSurface};
pub use bounds::BoundReport;
pub use forms::FormAssembly;
pub use mesh::{TopologyInvariants, TriangulatedSurface};
pub use section::SectionField;
pub use spectral::Spectrum;
