//! Dense statevector simulation.
//!
//! Basis index `i` encodes a bitstring with qubit 0 as the most significant
//! bit, so the string `"100"` on three qubits is index 4.

mod bitstring;
mod circuit;
mod gate;
mod sampling;
mod state;

pub use bitstring::Bitstring;
pub use circuit::{Circuit, CircuitSpec, GateSpec};
pub use gate::{Gate, GateMatrix};
pub use sampling::{BasisDistribution, ShotSource};
pub use state::{fidelity, run_circuit, Statevector};
