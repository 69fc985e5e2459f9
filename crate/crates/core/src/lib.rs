//! Simulator and spectral-analysis toolkit for an interacting discrete-time
//! quantum walk on a graph of spins.
//!
//! A particle with a per-node color degree of freedom hops on an undirected
//! graph whose nodes each carry a spin-1/2. One time step applies the unitary
//! `U = CZ · SW · MV · CO`: a coin mixing the colors (Grover or Fourier), the
//! edge-swap shift moving the particle, a color–spin swap coupling the
//! particle to the local spin, and a controlled-Z phase between neighboring
//! down spins.
//!
//! The crate is organized around that pipeline:
//!
//! * [`graph`] — graph structure, subnode labels, generators, text I/O;
//! * [`state`] — the |xcs⟩ basis, padded/packed layouts, reduced densities;
//! * [`ops`] — the four gates, structured stepping, and the dense operator;
//! * [`observables`] — position/spin profiles, time averages, entropies;
//! * [`spectral`] — exact diagonalization, quasienergy statistics,
//!   thermalization checks, effective Hamiltonian, U-network;
//! * [`stats`] — histograms, empirical CDFs, fits shared by the above.

pub mod graph;
pub mod observables;
pub mod ops;
pub mod spectral;
pub mod state;
pub mod stats;

pub use graph::{generate, Family, Graph, GraphError};
pub use state::{Guards, GuardError, Part, PureState, StateError};
