//! Matrix product states with an adaptive global U(1) symmetry.
//!
//! The left boundary bond of an [`AsMps`] carries a *set* of total charges
//! instead of a single one, so the same data structure describes states that
//! are U(1)-symmetric, that only keep a subgroup of U(1) (e.g. parity), or
//! that break the symmetry entirely. Operators ([`AsMpo`]) may likewise shift
//! the total charge by any amount recorded on their left boundary bond.
//!
//! Module map:
//!
//! * [`symtensor`]: block-sparse tensors keyed by per-leg integer charges.
//! * [`netops`]: as-MPS / as-MPO containers and their arithmetic.
//! * [`models`]: operator builders (XYZ chain, Bose-Hubbard, vectorized Lindbladian, gates).
//! * [`dmrg`]: two-site ground-state search with an adaptive left boundary.
//! * [`tevo`]: MPO Runge-Kutta and hybrid Suzuki-Trotter time evolution.
//! * [`oracle`]: dense reference implementations for validation.

pub mod dmrg;
pub mod error;
pub mod linalg;
pub mod models;
pub mod netops;
pub mod oracle;
pub mod space;
pub mod symtensor;
pub mod tevo;

pub use error::{Error, Result};
pub use netops::{AsMpo, AsMps, SectorDecomposition, SectorEntry};
pub use space::LocalSpace;
pub use symtensor::{Charge, Dir, Leg, SymTensor, TruncationPolicy};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
