//! Remote one- and two-qubit state creation through homogeneous spin-1/2
//! chains.
//!
//! A chain of N spins coupled by dimensionless dipolar constants
//! D_ij = |i-j|^{-3} evolves under the XY Hamiltonian, which conserves the
//! number of excitations. The first N_S nodes form the sender, the last
//! node (or the last pair) is the receiver, and the last N_R nodes form an
//! extended receiver on which a local unitary acts at registration time.
//!
//! * [`hamiltonian`] builds couplings and the zero/one/two-excitation
//!   blocks and diagonalizes them;
//! * [`dynamics`] evolves sector states, builds the sender-to-receiver
//!   transition matrix and extracts reduced receiver states;
//! * [`protocol`] optimizes the created projection through the SVD of the
//!   transition matrix and scans critical chain lengths;
//! * [`spectral`] decomposes the created projection into per-mode
//!   amplitudes and phases and finds the well-phased spectral window;
//! * [`two_qubit`] fits two-qubit eigenvalue targets through the
//!   two-excitation dynamics;
//! * [`fullspace`] holds the brute-force small-N reference path used by
//!   the tests;
//! * [`optim`] holds the derivative-free search primitives.

pub mod dynamics;
pub mod error;
pub mod fullspace;
pub mod hamiltonian;
pub mod optim;
pub mod protocol;
pub mod spectral;
pub mod two_qubit;

pub use error::{Error, Result};
pub use hamiltonian::{ChainSpec, EigenSystem};

// linear-algebra types appear in public signatures
pub use nalgebra;
pub use num_complex;
