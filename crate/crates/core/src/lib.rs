//! Analytical performance model for grouped and depthwise convolution
//! networks running on systolic-array accelerators.
//!
//! The crate is organised as a pipeline:
//!
//! - [`netgen`] builds layer descriptors (including the MobileNetV1 family
//!   with width multiplier, resolution multiplier and channels-per-group
//!   knobs) and counts MACs, parameters, activations and data reuse.
//! - [`mapping`] places each layer on an `R x C` PE array with a
//!   row-stationary occupancy model and reports the pass schedule and PE
//!   utilization.
//! - [`costmodel`] turns counts and mappings into memory-hierarchy access
//!   counts, roofline latency and energy.
//! - [`explorer`] sweeps array size, group size, width and resolution, finds
//!   latency minima and evaluates the utilization/latency trade-off checks.
//! - [`cli`] is the command-line front end used by the `systolic-dse` binary.
//!
//! ```
//! use systolic_dse::{costmodel, mapping::ArrayConfig, netgen};
//!
//! let net = netgen::generate_mobilenet_v1(1.0, 1.0, 4).unwrap();
//! let totals = netgen::network_counts(&net).unwrap();
//! assert_eq!(totals.macs / 1_000_000, 620);
//!
//! let array = ArrayConfig::preset(64).unwrap();
//! let cost = costmodel::network_cost(&net, &array).unwrap();
//! assert!(cost.avg_utilization > 0.5);
//! ```

pub mod cli;
pub mod costmodel;
pub mod error;
pub mod explorer;
pub mod mapping;
pub mod netgen;

pub use error::{Error, Result};
