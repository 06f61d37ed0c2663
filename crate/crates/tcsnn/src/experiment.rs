//! Ratio sweeps: build, train, evaluate and report.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tcsnn_core::compress::compressed_len;
use tcsnn_core::network::EventCounters;
use tcsnn_core::{
    atel, build_lsm, energy_estimate, simulate, train_readout, AtelInputs, CompressionConfig, Mode, Network,
    NeuronModel, SimulationTrace,
};

use crate::config::Experiment;
use crate::error::{Error, Result};
use crate::netfile::WeightSnapshot;

/// Outcome of one compression ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub gamma: u32,
    pub model: NeuronModel,
    /// Held-out accuracy in percent (final training accuracy without a test split).
    pub accuracy: f64,
    pub train_accuracy: Vec<f64>,
    pub test_examples: usize,
    pub test_no_spike: usize,
    pub input_steps: u32,
    pub timesteps: u32,
    pub speedup: f64,
    /// Event counters summed over the evaluated examples.
    pub counters: EventCounters,
    pub energy: f64,
    /// Baseline energy over this run's energy.
    pub energy_reduction: f64,
    /// Normalized ATEL in percent, when resource counts for this ratio and
    /// the baseline are configured and the baseline loss is non-zero.
    pub atel: Option<f64>,
    pub weights: WeightSnapshot,
}

/// One row of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub ratio: String,
    pub model: String,
    pub accuracy: f64,
    pub timesteps: u32,
    pub speedup: f64,
    pub energy: f64,
    pub energy_reduction: f64,
    pub atel: Option<f64>,
}

impl SummaryRow {
    fn of(r: &RunReport) -> Self {
        Self {
            ratio: format!("{}:1", r.gamma),
            model: r.model.to_string(),
            accuracy: r.accuracy,
            timesteps: r.timesteps,
            speedup: r.speedup,
            energy: r.energy,
            energy_reduction: r.energy_reduction,
            atel: r.atel,
        }
    }
}

fn mode_for(gamma: u32) -> Mode {
    if gamma == 1 {
        Mode::Baseline
    } else {
        Mode::Compressed(gamma)
    }
}

/// The network for one ratio: a fixed build, or the shared programmable
/// build reprogrammed to `gamma`.
fn network_for(exp: &Experiment, base: &Network, gamma: u32) -> Result<Network> {
    let max = exp.config.max_gamma;
    if exp.config.programmable {
        let mut net = base.clone();
        net.set_compression_ratio(gamma)?;
        Ok(net)
    } else {
        let c = CompressionConfig {
            gamma,
            programmable: false,
            max_gamma: max,
        };
        Ok(base.clone().with_compression(c)?)
    }
}

fn run_one(exp: &Experiment, base: &Network, gamma: u32) -> Result<RunReport> {
    let mut net = network_for(exp, base, gamma)?;
    let mode = mode_for(gamma);
    let report = train_readout(&mut net, &exp.dataset, &exp.config.learning, mode)?;
    let eval: &[usize] = if report.test_indices.is_empty() {
        &report.train_indices
    } else {
        &report.test_indices
    };
    let mut counters = EventCounters::default();
    let mut energy = 0.0;
    for &i in eval {
        let trace = simulate(&net, &exp.dataset.examples()[i].trains, mode)?;
        counters.accumulate(&trace.counters);
        energy += energy_estimate(&trace, &exp.energy);
    }
    let accuracy = report
        .test_accuracy
        .or_else(|| report.epoch_train_accuracy.last().copied())
        .unwrap_or(0.0);
    let t = exp.dataset.length_steps();
    let timesteps = compressed_len(t, gamma);
    Ok(RunReport {
        gamma,
        model: net.model(),
        accuracy,
        train_accuracy: report.epoch_train_accuracy.clone(),
        test_examples: report.test_indices.len(),
        test_no_spike: report.test_no_spike,
        input_steps: t,
        timesteps,
        speedup: t as f64 / timesteps as f64,
        counters,
        energy,
        energy_reduction: f64::NAN,
        atel: None,
        weights: WeightSnapshot::of(&net),
    })
}

fn fill_relative(exp: &Experiment, reports: &mut [RunReport]) {
    let base = reports
        .iter()
        .find(|r| r.gamma == 1)
        .cloned()
        .expect("baseline always runs");
    let resources = |g: u32| exp.config.resources.iter().find(|r| r.gamma == g);
    let inputs = |r: &RunReport| {
        resources(r.gamma).map(|res| AtelInputs {
            lut_count: res.lut_count,
            ff_count: res.ff_count,
            runtime: r.timesteps as f64,
            energy: r.energy,
            accuracy: r.accuracy,
        })
    };
    let base_inputs = inputs(&base);
    for r in reports.iter_mut() {
        r.energy_reduction = if r.energy > 0.0 {
            base.energy / r.energy
        } else {
            f64::INFINITY
        };
        r.atel = match (inputs(r), base_inputs) {
            (Some(d), Some(b)) => atel(&d, &b).ok(),
            _ => None,
        };
    }
}

/// Runs every ratio, up to `workers` at a time. The result does not depend
/// on the worker count.
pub fn run_experiment(exp: &Experiment, workers: usize) -> Result<Vec<RunReport>> {
    let mut base = build_lsm(&exp.network)?;
    if exp.config.programmable {
        base = base.with_compression(CompressionConfig::programmable(1, exp.config.max_gamma)?)?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let mut reports: Vec<RunReport> = pool.install(|| {
        exp.gammas
            .par_iter()
            .map(|&g| run_one(exp, &base, g))
            .collect::<Result<_>>()
    })?;
    fill_relative(exp, &mut reports);
    Ok(reports)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `run_g<gamma>.json` per ratio and `summary.csv`; returns the paths.
pub fn write_reports(dir: &Path, reports: &[RunReport]) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let mut paths = Vec::new();
    for r in reports {
        let path = dir.join(format!("run_g{}.json", r.gamma));
        let mut json = serde_json::to_vec_pretty(r)?;
        json.push(b'\n');
        write(&path, &json)?;
        paths.push(path);
    }
    let path = dir.join("summary.csv");
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in reports {
        w.serialize(SummaryRow::of(r))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))?;
    write(&path, &bytes)?;
    paths.push(path);
    Ok(paths)
}

/// Reservoir raster as `neuron_id,timestep,weight` rows.
pub fn raster_csv(trace: &SimulationTrace) -> Result<Vec<u8>> {
    let ids = trace.reservoir_ids();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["neuron_id", "timestep", "weight"])?;
    for s in trace.spikes.iter().filter(|s| ids.contains(&s.neuron)) {
        w.write_record(&[s.neuron.to_string(), s.step.to_string(), s.weight.to_string()])?;
    }
    w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))
}

/// Simulates example `index` at the baseline and at `gamma` and writes
/// `raster_ex<index>_g1.csv` and `raster_ex<index>_g<gamma>.csv`.
/// The reservoir does not depend on readout training, so none is done.
pub fn emit_raster(exp: &Experiment, index: usize, gamma: u32, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let n = exp.dataset.len();
    let ex = exp
        .dataset
        .examples()
        .get(index)
        .ok_or_else(|| Error::Config(format!("example {index} out of range (dataset has {n})")))?;
    if gamma == 0 || gamma > exp.config.max_gamma {
        return Err(Error::Config(format!(
            "gamma {gamma} outside 1..={}",
            exp.config.max_gamma
        )));
    }
    let net = build_lsm(&exp.network)?;
    let base = simulate(&net, &ex.trains, Mode::Baseline)?;
    let comp = simulate(&net, &ex.trains, mode_for(gamma))?;
    create_dir(dir)?;
    let pb = dir.join(format!("raster_ex{index}_g1.csv"));
    let pc = dir.join(format!("raster_ex{index}_g{gamma}.csv"));
    write(&pb, &raster_csv(&base)?)?;
    write(&pc, &raster_csv(&comp)?)?;
    Ok((pb, pc))
}
