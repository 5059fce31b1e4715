//! Two-dimensional BTW height-model sandpile.

mod drive;
mod lattice;
pub mod stream;

pub use drive::{corner_cell, drive, seeded_rng, DriveSpec, SimRng, Simulation, SitePolicy};
pub use lattice::{
    toppling_shares, AvalancheRecord, Boundaries, Boundary, Cell, Direction, Ledger, Lattice, SWEEP_LIMIT,
};
