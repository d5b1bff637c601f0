//! Gate-level toolkit for carry-save array multipliers.
//!
//! Builds the conventional array (carry-save rows plus a ripple merge stage)
//! and the merged-final-row variant without a separate merge adder, verifies
//! them exhaustively, and estimates switching power, propagation delay,
//! energy-delay product and transistor count.
//!
//! ```
//! use amlab::builder::build_proposed;
//! use amlab::sim::exhaustive_verify;
//!
//! let circuit = build_proposed(4).unwrap();
//! let report = exhaustive_verify(&circuit).unwrap();
//! assert_eq!((report.passed, report.total), (256, 256));
//! ```

pub mod audit;
pub mod builder;
pub mod cli;
pub mod format;
pub mod netlist;
pub mod power;
pub mod report;
pub mod sim;
pub mod timing;

pub use builder::{build_conventional, build_proposed, Design, FirstRowStyle};
pub use netlist::{Cell, CellId, CellKind, CellStats, Circuit, CircuitBuilder, NetId};
pub use power::TechProfile;
pub use sim::SimVector;
