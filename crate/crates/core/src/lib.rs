//! Moment-SOS hierarchy for polynomial optimization on compact sets.
//!
//! The polynomial and moment layers are generic over the scalar type (`f32`
//! or `f64`); relaxations, certificates and the bundled interior-point solver
//! work in `f64`. The aliases below fix that choice for everyday use.

pub mod certify;
pub mod conic;
pub mod error;
pub mod instance_file;
pub mod moment;
pub mod oracle;
pub mod poly;
pub mod relax;
pub mod scalar;

pub use certify::{
    check_sos_concave, check_sos_convex_on_omega, exact_order_bound, extract_and_test, run_hierarchy,
    CertificateBundle, Extraction, HierarchyOptions, HierarchyReport, OrderRecord,
};
pub use conic::{ConicProblem, ConicSolution, SolveStatus, SolverSettings};
pub use error::{Error, Result};
pub use instance_file::{emit_instance, parse_instance, InstanceFile};
pub use moment::{atomic_moments, localizing_matrix, moment_matrix, riesz_apply, shift_sequence};
pub use oracle::{brute_force_min, OracleResult, OracleSettings};
pub use poly::{monomial_basis, MultiIndex};
pub use relax::{build_relaxation, Instance, MomentRelaxation, RelaxationSolution};
pub use scalar::Scalar;

pub type Polynomial = poly::Poly<f64>;
pub type PolyMatrix = poly::PolyMat<f64>;
pub type MomentSequence = moment::Moments<f64>;
pub type SymMatrix = moment::SymMat<f64>;
