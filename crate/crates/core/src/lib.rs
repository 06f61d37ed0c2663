//! Simulator core for time-compressed spiking neural network accelerators.
//!
//! Binary spike trains are compressed into weighted trains by an integer
//! ratio `gamma`, consumed by input-output-weighted (IOW) neuron models,
//! and advanced on a shortened time axis whose time constants are rescaled
//! exactly and realized with power-of-two shifters.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, reports and
//! the command line runner live in the `tcsnn` crate.

#![no_std]
// `!(x > 0.0)` style checks also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod compress;
mod error;
pub mod fixed;
pub mod learning;
pub mod metrics;
pub mod network;
pub mod neuron;
pub mod spike;

pub use crate::compress::{
    compress_train, decay_step, make_schedule, scale_time_constant, CompressionConfig, ShiftSchedule,
    TimeConstantPlan,
};
pub use crate::error::{Error, Result};
pub use crate::fixed::{FixedPointFormat, Saturator};
pub use crate::learning::{classify, train_readout, Classification, LearningParams, TrainingReport};
pub use crate::metrics::{
    atel, binned_raster_distance, energy_estimate, spike_statistics, AtelInputs, EnergyModel, Layer,
};
pub use crate::network::{build_lsm, simulate, LsmConfig, Mode, Network, SimulationTrace};
pub use crate::neuron::{BurstParams, LifParams, NeuronModel, SynapseOrder, SynapseParams};
pub use crate::spike::{
    poisson_encode, synthetic_task, BinarySpikeTrain, SpikeDataset, SyntheticTaskConfig, WeightedSpikeTrain,
};
