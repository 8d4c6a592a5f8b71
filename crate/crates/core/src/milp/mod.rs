//! Mixed-integer formulation of the design problem, solver file output and
//! independent verification of assignments.

mod build;
mod lp;
mod model;
mod mps;
mod verify;

pub use build::{build, BuildOptions, OUTPUT_VAR};
pub use lp::{emit_lp, format_number, parse_lp};
pub use model::{BuildInfo, Constraint, MilpModel, Sense, VarKind, Variable, Variant};
pub use mps::{emit_mps, parse_mps};
pub use verify::{assignment_for, check_assignment, embed_solution, Assignment, CheckReport, FEASIBILITY_TOL};
