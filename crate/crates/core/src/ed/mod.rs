//! Exact diagonalization: eigensolvers and the comparison with the
//! Bogoliubov predictions.

pub mod eigen;
pub mod sweep;

pub use eigen::{dense_eigen, lowest_eigenvalues, lowest_eigenvalues_op, EigenMethod, EigenOptions, EigenResult};
pub use sweep::{compare_at, depletion, gp_sweep, ComparisonReport, Depletion, GroundRow, LevelRow, SweepConfig};
