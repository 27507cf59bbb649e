//! Slow, independent reference implementations used as oracles in tests.
//!
//! Nothing in here shares code with the main crates: the eigensolver is a
//! cyclic Jacobi sweep, Hamiltonians are assembled by literal operator
//! products, and time evolution integrates the Schrödinger equation with a
//! Runge-Kutta-Fehlberg stepper. Agreement between these and the production
//! paths is what the test suites check.

pub mod jacobi;
pub mod operators;
pub mod quadrature;
pub mod schrodinger;

pub use jacobi::jacobi_eigen;
pub use operators::{kron, rabi_hamiltonian_by_operators, OperatorSet};
pub use quadrature::simpson;
pub use schrodinger::{evolve_expectations, integrate_schrodinger};
