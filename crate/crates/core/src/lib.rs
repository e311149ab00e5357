//! Traveltime seismic inversion through evolutionary quantum circuit learning.
//!
//! A layered-earth traveltime system `D s = t` is turned into a QUBO whose
//! energy is the squared residual `‖D s − t‖²` over a fixed-width binary
//! encoding of the slowness vector. That energy is a diagonal cost
//! Hamiltonian; its expectation on the output state of a parameterized
//! circuit is minimized by a gradient-free (1+λ) evolution strategy that
//! mutates the circuit itself. A fixed-ansatz gradient-descent solver is
//! included as the variational baseline.
//!
//! Modules:
//!
//! * [`circuit`]: rotation gates and a dense statevector simulator.
//! * [`problem`]: forward model, slowness encoding, QUBO and Ising forms.
//! * [`evolve`]: mutation operators and the evolutionary loop.
//! * [`baseline`]: layered ansatz with parameter-shift gradients.
//! * [`runner`]: seeded multi-run experiments and their CSV/JSON output.
//!
//! Basis convention: qubit 0 is the least-significant bit of a basis index.

pub mod baseline;
pub mod circuit;
mod error;
pub mod evolve;
pub mod problem;
pub mod rng;
pub mod runner;

pub use error::{Error, Result};
