//! Multi-stage transmission, generation and storage expansion planning.

pub mod benders;
pub mod corpus;
pub mod error;
pub mod formulation;
pub mod lp;
pub mod rephours;
pub mod report;
pub mod solve;
pub mod system;

pub use error::{Error, Result};
