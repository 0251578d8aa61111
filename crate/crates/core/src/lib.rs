//! Analysis and simulation of cooperative content dissemination in
//! heterogeneous mobile networks.
//!
//! * [`model`]: scenario description and pairwise meeting probabilities.
//! * [`analytic`]: threshold, extinction and final-size solvers.
//! * [`loadopt`]: cellular traffic load and the choice of the push count.
//! * [`contactsim`]: event-driven SIR simulation on exponential meetings.
//! * [`mobilitysim`]: random-direction mobility on a torus.

pub mod analytic;
pub mod contactsim;
pub mod error;
pub mod loadopt;
pub mod mobilitysim;
pub mod model;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
