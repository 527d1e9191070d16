//! Thermodynamic formalism for shift spaces over compact metric alphabets.
//!
//! The alphabet `M` is represented by a quadrature rule approximating a
//! full-support a priori probability measure. Potentials are depth-k
//! cylinder functions on the sequence space `Omega = M^N`. The transfer
//! operator
//!
//! ```text
//! (L_f phi)(x) = integral over M of e^{f(ax)} phi(ax) dmu(a)
//! ```
//!
//! closes on cylinder functions of depth k-1, so its maximal eigendata
//! (eigenvalue, eigenfunction, eigenmeasure, spectral gap) can be computed
//! exactly on a finite grid up to quadrature error. On top of the eigendata
//! the crate computes topological pressure, entropy, the pressure
//! derivative in a given direction, and correlation decay rates, and it
//! cross-checks the operator pipeline against heat-bath Monte Carlo for a
//! Heisenberg-type spin ladder.
//!
//! See the `examples/` directory for one runnable example per capability.

pub mod alphabet;
pub mod calculus;
pub mod correlation;
pub mod error;
pub mod heisenberg;
pub mod potential;
pub mod runner;
pub mod thermo;
pub mod transfer;

pub use alphabet::{Alphabet, ChainWindowAlphabet, QuadratureRule};
pub use error::{Error, Result};
pub use potential::{Potential, TruncationReport};
pub use transfer::{CylinderGrid, EigenData, GridFunction, TransferOperator};
