//! Generalized dual-unitary circuits from biunitary connections.
//!
//! The crate builds the gate families of hierarchically solvable quantum
//! circuits — dual-unitary, DU2, DU3, triunitary, and triunitary
//! interactions-round-a-face — from their biunitary building blocks (complex
//! Hadamard matrices, quantum crosses, unitary error bases, quantum Latin
//! squares), numerically certifies every solvability condition, and verifies
//! the dynamical consequences (correlation rays, exact thermalization,
//! quantized entanglement velocities, solitons) by exact desk-scale
//! simulation.

pub mod catalog;
pub mod compose;
pub mod hierarchy;
pub mod par;
pub mod report;
pub mod simulate;
pub mod tensor;

pub use catalog::{ChmMatrix, Gate2, Qls, QuantumCross, SolvableVertex, Ueb, DEFAULT_TOL};
pub use compose::{MultilayerChm, TriGate, TuirfGate};
pub use hierarchy::{Condition, HierarchyReport, SchmidtReport, Soliton};
pub use simulate::{Boundary, ChainSpec, CorrelationGrid, Geometry, QuenchReport};
pub use tensor::{ComplexTensor, MatrixView, TensorError};
