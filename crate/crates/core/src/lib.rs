//! Exact final state and tripartite entanglement of three delta-switched
//! Unruh-DeWitt detectors in the massless scalar vacuum of 3+1 Minkowski
//! spacetime.

pub mod correlators;
pub mod density;
pub mod entanglement;
pub mod linalg;
pub mod pipeline;
pub mod quadrature;
pub mod scenario;
pub mod special;
pub mod sweep;
