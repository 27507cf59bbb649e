//! Numerical laboratory for the driven Rabi model: a single spin-1/2 coupled
//! to one boson mode with a symmetry-breaking σ_x drive,
//!
//!   H = a†a + (ω/2)σ_z + g(a† + a)σ_x + λσ_x,
//!
//! in dimensionless units where the boson energy is 1.
//!
//! The crate builds truncated Hamiltonians and observables in the product
//! basis {|n,1⟩, |n,2⟩}, diagonalizes them with a dense symmetric eigensolver,
//! and layers quench dynamics, thermalization diagnostics, Wigner phase-space
//! analysis and the mean-field classical limit on top of the spectra.
//!
//! Everything is a pure function of its inputs; results are immutable and
//! safe to share across threads. Parallel helpers gather into ordered buffers
//! and reduce sequentially, so outputs do not depend on thread count.

pub mod diagnostics;
pub mod eigensolver;
pub mod hamiltonian;
pub mod numerics;
pub mod quench;
pub mod semiclassical;
pub mod wigner;

pub use eigensolver::{decompose_hamiltonian, eigendecompose, ground_state, EigenDecomposition};
pub use hamiltonian::{
    build_displaced_hamiltonian, build_hamiltonian, build_observable, build_parity,
    BasisIndex, HermitianObservable, ModelParams, ObsKind, Spin,
};
pub use quench::{quench, to_eigenbasis, ObservableInEigenbasis, QuenchState};
