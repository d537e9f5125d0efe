//! Bosonic Fock space on a finite mode set: bases, second-quantized
//! expressions, sparse matrices, the named operators and identity checks.

pub mod basis;
pub mod expr;
pub mod identity;
pub mod krylov;
pub mod named;
pub mod sparse;

pub use basis::{enumerate_basis, BasisCache, FockBasis, ModeSet};
pub use expr::{an, cr, Monomial, Op, OperatorExpression, Symmetry};
pub use identity::{verify_identity, IdentityName, IdentityOptions, IdentityReport, IdentityStatus};
pub use named::{build_named, NamedOperator, OperatorContext};
pub use sparse::{assemble, assemble_between, LinearOperator, SparseOperator};
pub use krylov::{expmv, krylov_conjugate, ConjugatedOperator};
