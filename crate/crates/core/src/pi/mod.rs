//! Dimensional analysis: Π groups of a variable table and the closure
//! relations linking control parameters to the number of excited scales.

mod closure;
mod dimension;
mod groups;

pub use closure::{
    avalanche_relations, classify_drive_regime, k41_beta, k41_relations, AvalancheRelations, ClosureRelation,
    DriveRegime, K41Relations, DEFAULT_REGIME_MARGIN, K41_DEFAULT_ALPHA,
};
pub use dimension::{parse_rational, Dimension, DimensionedVariable, Rational, VariableTable};
pub use groups::{compute_pi_groups, matrix_rank, pi_groups_of, same_span, PiGroup};
