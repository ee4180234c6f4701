//! Minimum-dispersion motion primitive graphs for kinodynamic planning.
//!
//! The pipeline: sample a bounded region of the state space with a
//! low-discrepancy sequence ([`sampling`]), greedily select vertices that
//! minimize dispersion under the symmetrized steering cost ([`dispersion`]),
//! connect every vertex pair cheaper than twice the dispersion into a tiled
//! primitive graph ([`graph`]), then search that graph implicitly over
//! arbitrary-size occupancy maps ([`planner`]). [`baseline`] provides the
//! uniform input-sampling comparison method and [`bench`] the experiment
//! harness, including clearance-certified maps for the completeness property.

pub mod baseline;
pub mod bench;
pub mod dispersion;
pub mod graph;
pub mod planner;
pub mod sampling;
pub mod state;
pub mod systems;

pub use state::{State, StateBox};
pub use systems::{CostPair, SystemKind, Trajectory};
