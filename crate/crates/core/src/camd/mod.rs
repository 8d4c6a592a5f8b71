//! Molecular design space, molecule representation and feasibility checks.

pub mod constraints;
pub mod molecule;
pub mod space;

pub use constraints::{check_c26, check_c27, check_structure, feature_code, is_feasible, neighbor_code, ConstraintId, Violation};
pub use molecule::{format_molecule, parse_molecule, parse_molecule_stream, BondOrder, MolecularGraph};
pub use space::{AtomType, Bound, Dataset, DesignSpace};
