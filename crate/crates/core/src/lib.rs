//! Event-driven simulator for all-skyrmion spiking neural networks.
//!
//! Spikes travel as skyrmions on nanotracks ([`device`]), pass or die at
//! binary VCMA synapses and are counted by domain-wall-pair neurons
//! ([`cells`]). [`energy`] charges every event, [`snn`] runs the
//! three-layer MNIST network in a clock-driven reference mode or on the
//! device model, and [`train`] holds the unsupervised pipeline and
//! evaluation.

pub mod cells;
pub mod device;
pub mod energy;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod seed;
pub mod snn;
pub mod train;
pub mod units;

pub use cells::{BinarySynapse, FanoutSpec, Integration, SkyrmionNeuron};
pub use device::{
    propagation_delay, velocity_from_drive, DeviceEvent, DeviceSim, DriveParams, EventKind, Terminal,
    TrackGeometry,
};
pub use energy::{EnergyLedger, MaterialParams};
pub use error::{Error, Result};
pub use io::{Checkpoint, Dataset, RunConfig};
pub use snn::{Mode, Network, NetworkParams, NetworkTopology, WeightMatrix};
pub use train::{EvalReport, LabelAssignment, WeightMode};
