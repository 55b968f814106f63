//! Quantum circuit simulation toolkit: a factored state-vector engine, a
//! gate library, a circuit IR with optimization passes, a stabilizer
//! tableau simulator, Steane-code error correction, Shor's algorithm,
//! noise models and circuit rendering.

pub mod circuit;
pub mod error;
pub mod gates;
pub mod ket;
pub mod log;
pub mod noise;
pub mod par;
pub mod programs;
pub mod qecc;
pub mod render;
pub mod shor;
pub mod sparse;
pub mod stabilizer;

pub use circuit::{Circuit, Cond, Emitter, GrowParams, Tracer};
pub use error::{Error, Result};
pub use gates::{Gate, GateRef};
pub use ket::{BitValue, Ket, QubitId};
pub use sparse::SparseMatrix;
