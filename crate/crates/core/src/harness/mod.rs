//! Experiment orchestration: configuration, deterministic random streams,
//! topology, trials and campaigns.

pub mod campaign;
pub mod config;
pub mod panels;
pub mod rng;
pub mod topology;
pub mod trial;

pub use campaign::{emit_csv, nmse, run_campaign, run_point, run_trials, NmseResult, RunOptions, CSV_HEADER};
pub use config::{Scenario, Scheme, SimulationConfig, SweepParam};
pub use panels::{constellation_panels, emit_panels, PanelPoint};
pub use rng::{stream_rng, Stream};
pub use topology::{sample_topology, Topology};
pub use trial::{sample_inputs, Inputs, LinkState, Simulator, TrialOutcome};
