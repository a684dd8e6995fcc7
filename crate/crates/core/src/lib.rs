//! Single-server private information retrieval with private coded side
//! information: field arithmetic, problem model, retrieval schemes, an exact
//! auditor and the closed-form capacity table.

pub mod gf;
pub mod model;
pub mod rng;
pub mod capacity;
pub mod rational;
pub mod schemes;
pub mod auditor;
