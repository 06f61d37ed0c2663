//! Spike statistics, raster preservation, event energy and the ATEL
//! figure of merit (area x time x energy x loss, each relative to the
//! uncompressed baseline).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{param, Error, Result};
use crate::network::SimulationTrace;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SpikeStats {
    pub total_events: u64,
    pub total_weight: u64,
    /// Indexed by neuron id (reservoir, then readout).
    pub per_neuron_events: Vec<u64>,
    pub per_neuron_weight: Vec<u64>,
    pub input_events: u64,
    pub input_weight: u64,
}

pub fn spike_statistics(trace: &SimulationTrace) -> SpikeStats {
    let n = trace.num_reservoir + trace.num_readout;
    let mut stats = SpikeStats {
        per_neuron_events: vec![0; n],
        per_neuron_weight: vec![0; n],
        ..SpikeStats::default()
    };
    for s in &trace.spikes {
        stats.total_events += 1;
        stats.total_weight += s.weight as u64;
        stats.per_neuron_events[s.neuron as usize] += 1;
        stats.per_neuron_weight[s.neuron as usize] += s.weight as u64;
    }
    for tr in &trace.input {
        stats.input_events += tr.events().len() as u64;
        stats.input_weight += tr.total_weight();
    }
    stats
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    Input,
    Reservoir,
    Readout,
}

fn layer_events(trace: &SimulationTrace, layer: Layer) -> (usize, Vec<(usize, u32, u64)>) {
    match layer {
        Layer::Input => {
            let events = trace
                .input
                .iter()
                .enumerate()
                .flat_map(|(c, tr)| tr.events().iter().map(move |e| (c, e.step, e.weight as u64)))
                .collect();
            (trace.input.len(), events)
        }
        Layer::Reservoir | Layer::Readout => {
            let ids = if layer == Layer::Reservoir {
                trace.reservoir_ids()
            } else {
                trace.readout_ids()
            };
            let events = trace
                .spikes
                .iter()
                .filter(|s| ids.contains(&s.neuron))
                .map(|s| ((s.neuron - ids.start) as usize, s.step, s.weight as u64))
                .collect();
            (ids.len(), events)
        }
    }
}

/// Per-unit spike weight summed over windows of `gamma` steps,
/// unit-major with `bins` columns.
pub fn binned_counts(
    events: impl IntoIterator<Item = (usize, u32, u64)>,
    units: usize,
    gamma: u32,
    bins: usize,
) -> Vec<u64> {
    let mut out = vec![0u64; units * bins];
    for (unit, step, weight) in events {
        let bin = (step / gamma) as usize;
        if bin < bins {
            out[unit * bins + bin] += weight;
        }
    }
    out
}

/// L1 distance between two binned rasters of the same shape.
pub fn windowed_l1(a: &[u64], b: &[u64]) -> u64 {
    a.iter().zip(b).map(|(&x, &y)| x.abs_diff(y)).sum()
}

/// Bins the uncompressed raster of `layer` into windows of the compressed
/// ratio and returns its L1 distance to the compressed raster, normalized by
/// the baseline spike total. Zero means exact windowed preservation.
pub fn binned_raster_distance(
    baseline: &SimulationTrace,
    compressed: &SimulationTrace,
    layer: Layer,
) -> Result<f64> {
    if baseline.gamma() != 1
        || baseline.num_reservoir != compressed.num_reservoir
        || baseline.num_readout != compressed.num_readout
        || baseline.input.len() != compressed.input.len()
        || baseline.input_length != compressed.input_length
    {
        return Err(Error::TraceMismatch);
    }
    let gamma = compressed.gamma();
    let bins = compressed.timestep_count as usize;
    let (units, base_events) = layer_events(baseline, layer);
    let (_, comp_events) = layer_events(compressed, layer);
    let total: u64 = base_events.iter().map(|e| e.2).sum();
    let a = binned_counts(base_events, units, gamma, bins);
    let b = binned_counts(comp_events, units, 1, bins);
    let dist = windowed_l1(&a, &b) as f64;
    Ok(if total == 0 { dist } else { dist / total as f64 })
}

/// Energy per event, in arbitrary but consistent units.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnergyModel {
    pub e_synaptic_op: f64,
    pub e_neuron_update: f64,
    pub e_spike: f64,
    /// Static energy per simulated step.
    pub p_static: f64,
}

impl EnergyModel {
    /// Default coefficients for a network of `num_neurons` neurons.
    pub fn for_neurons(num_neurons: usize) -> Self {
        Self {
            e_synaptic_op: 1.0,
            e_neuron_update: 1.0,
            e_spike: 0.5,
            p_static: num_neurons as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.e_synaptic_op,
            self.e_neuron_update,
            self.e_spike,
            self.p_static,
        ];
        if all.iter().all(|c| *c >= 0.0 && c.is_finite()) {
            Ok(())
        } else {
            Err(param("energy", "coefficients must be finite and non-negative"))
        }
    }
}

pub fn energy_estimate(trace: &SimulationTrace, model: &EnergyModel) -> f64 {
    let c = &trace.counters;
    model.p_static * trace.timestep_count as f64
        + model.e_synaptic_op * c.synaptic_ops as f64
        + model.e_neuron_update * c.neuron_updates as f64
        + model.e_spike * c.spikes as f64
}

/// Resource, runtime, energy and accuracy of one design.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AtelInputs {
    pub lut_count: u64,
    pub ff_count: u64,
    pub runtime: f64,
    pub energy: f64,
    /// Classification accuracy in percent.
    pub accuracy: f64,
}

impl AtelInputs {
    /// Area proxy: flip-flops plus twice the LUT count.
    pub fn area(&self) -> f64 {
        self.ff_count as f64 + 2.0 * self.lut_count as f64
    }

    pub fn loss(&self) -> f64 {
        100.0 - self.accuracy
    }
}

/// Normalized ATEL of `design` against `baseline`, in percent.
pub fn atel(design: &AtelInputs, baseline: &AtelInputs) -> Result<f64> {
    for rec in [design, baseline] {
        if !(0.0..=100.0).contains(&rec.accuracy) {
            return Err(param("accuracy", "must lie in [0, 100]"));
        }
        if !(rec.runtime >= 0.0 && rec.energy >= 0.0) {
            return Err(param("atel", "runtime and energy must be non-negative"));
        }
    }
    if baseline.loss() <= 0.0 {
        return Err(Error::Undefined(
            "baseline accuracy of 100% leaves loss undefined",
        ));
    }
    if baseline.runtime == 0.0 || baseline.energy == 0.0 || baseline.area() == 0.0 {
        return Err(Error::Undefined(
            "baseline runtime, energy and area must be non-zero",
        ));
    }
    Ok(100.0
        * (design.area() / baseline.area())
        * (design.runtime / baseline.runtime)
        * (design.energy / baseline.energy)
        * (design.loss() / baseline.loss()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE1_BASE: AtelInputs = AtelInputs {
        lut_count: 57326,
        ff_count: 18200,
        runtime: 100.0,
        energy: 100.0,
        accuracy: 96.15,
    };

    #[test]
    fn identity_is_one_hundred_percent() {
        assert_eq!(atel(&TABLE1_BASE, &TABLE1_BASE).unwrap(), 100.0);
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn table1_iow_sixteen() {
        let d = AtelInputs {
            lut_count: 65349,
            ff_count: 20808,
            runtime: 6.28,
            energy: 11.52,
            accuracy: 80.77,
        };
        let v = atel(&d, &TABLE1_BASE).unwrap();
        assert!((v - 4.12).abs() < 0.05, "{v}");
    }

    #[test]
    fn undefined_cases() {
        let perfect = AtelInputs {
            accuracy: 100.0,
            ..TABLE1_BASE
        };
        assert!(atel(&TABLE1_BASE, &perfect).is_err());
        let idle = AtelInputs {
            runtime: 0.0,
            ..TABLE1_BASE
        };
        assert!(atel(&TABLE1_BASE, &idle).is_err());
    }

    #[test]
    fn zero_energy_model() {
        let m = EnergyModel {
            e_synaptic_op: 0.0,
            e_neuron_update: 0.0,
            e_spike: 0.0,
            p_static: 0.0,
        };
        assert!(m.validate().is_ok());
        assert!(EnergyModel { p_static: -1.0, ..m }.validate().is_err());
    }

    #[test]
    fn binning() {
        let ev = [(0usize, 0u32, 1u64), (0, 3, 1), (1, 5, 2)];
        assert_eq!(binned_counts(ev, 2, 4, 2), vec![2, 0, 0, 2]);
        assert_eq!(windowed_l1(&[1, 2, 3], &[3, 2, 1]), 4);
    }
}
