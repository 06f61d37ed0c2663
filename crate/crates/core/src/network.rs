//! Liquid-state-machine topology and the discrete-time simulation engine.
//!
//! Layers: input channels -> recurrent reservoir -> plastic readout. The
//! engine advances all neurons under a per-step barrier: spikes emitted by
//! neurons at step `t` are delivered at `t + 1`, input spikes of step `t`
//! are delivered at `t`. In compressed mode every input channel first passes
//! through [`compress_train`] and all time constants are rescaled for the
//! ratio, which is the job of the global compression controller in hardware.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::compress::{compress_train, compressed_len, CompressionConfig};
use crate::error::{param, Error, Result};
use crate::fixed::{FixedPointFormat, Saturator};
use crate::neuron::{
    BurstParams, BurstState, LifParams, NeuronClock, NeuronKernel, NeuronModel, NeuronState, SynapseParams,
};
use crate::spike::{BinarySpikeTrain, WeightedSpikeTrain};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct LsmConfig {
    pub num_inputs: usize,
    pub reservoir_size: usize,
    pub num_readout: usize,
    pub grid: [usize; 3],
    pub c_ee: f64,
    pub c_ei: f64,
    pub c_ie: f64,
    pub c_ii: f64,
    /// Connection length scale in grid units.
    pub lambda: f64,
    pub excitatory_fraction: f64,
    /// Reservoir neurons fed by each input channel.
    pub input_fanout: usize,
    /// Input weights are `+-2^e` with `e` in `0..=input_max_exponent`.
    pub input_max_exponent: u8,
    pub reservoir_max_exponent: u8,
    pub model: NeuronModel,
    pub neuron: LifParams,
    pub readout_neuron: LifParams,
    pub burst: Option<BurstParams>,
    pub format: FixedPointFormat,
    pub seed: u64,
}

impl Default for LsmConfig {
    fn default() -> Self {
        Self {
            num_inputs: 78,
            reservoir_size: 135,
            num_readout: 5,
            grid: [3, 3, 15],
            c_ee: 0.3,
            c_ei: 0.2,
            c_ie: 0.4,
            c_ii: 0.1,
            lambda: 2.0,
            excitatory_fraction: 0.8,
            input_fanout: 4,
            input_max_exponent: 3,
            reservoir_max_exponent: 0,
            model: NeuronModel::IowLif,
            neuron: LifParams {
                r: 0.7,
                ..LifParams::default()
            },
            readout_neuron: LifParams::default(),
            burst: None,
            format: FixedPointFormat::default(),
            seed: 0,
        }
    }
}

impl LsmConfig {
    /// Defaults for `model`. Bursting models switch both populations to a
    /// zeroth-order synapse and raise the reservoir drive to make up for the
    /// charge the second-order kernel would have integrated.
    pub fn for_model(model: NeuronModel, burst: Option<BurstParams>) -> Self {
        let mut cfg = Self {
            model,
            burst,
            ..Self::default()
        };
        if model.bursting() {
            cfg.neuron.synapse = SynapseParams::zeroth();
            cfg.neuron.r = 8.0;
            cfg.readout_neuron.synapse = SynapseParams::zeroth();
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_inputs == 0 || self.reservoir_size == 0 || self.num_readout == 0 {
            return Err(param("sizes", "every layer needs at least one unit"));
        }
        if self.grid.iter().product::<usize>() != self.reservoir_size {
            return Err(param("grid", "grid product must equal reservoir_size"));
        }
        for (name, p) in [
            ("c_ee", self.c_ee),
            ("c_ei", self.c_ei),
            ("c_ie", self.c_ie),
            ("c_ii", self.c_ii),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(param(name, "must be a probability"));
            }
        }
        if !(self.lambda > 0.0) {
            return Err(param("lambda", "must be positive"));
        }
        if !(self.excitatory_fraction > 0.0 && self.excitatory_fraction < 1.0) {
            return Err(param("excitatory_fraction", "must lie in (0, 1)"));
        }
        if self.input_fanout > self.reservoir_size {
            return Err(param("input_fanout", "exceeds reservoir_size"));
        }
        if self.input_max_exponent > 30 || self.reservoir_max_exponent > 30 {
            return Err(param("max_exponent", "must be at most 30"));
        }
        self.neuron.validate()?;
        self.readout_neuron.validate()?;
        if self.model.bursting() && self.burst.is_none() {
            return Err(param("burst", "bursting model needs burst parameters"));
        }
        Ok(())
    }
}

/// Signed power-of-two synaptic weight, applied as a left shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ShiftWeight {
    pub negative: bool,
    pub exponent: u8,
}

impl ShiftWeight {
    pub fn value(self) -> i64 {
        let m = 1i64 << self.exponent;
        if self.negative {
            -m
        } else {
            m
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Synapse {
    pub pre: u32,
    pub post: u32,
    pub weight: ShiftWeight,
}

/// Everything needed to rebuild a [`Network`] exactly.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NetworkParts {
    pub config: LsmConfig,
    pub compression: CompressionConfig,
    pub excitatory: Vec<bool>,
    pub input_synapses: Vec<Synapse>,
    pub reservoir_synapses: Vec<Synapse>,
    /// Plastic reservoir-to-readout weights in fixed point,
    /// indexed `pre * num_readout + readout`.
    pub readout_weights: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    parts: NetworkParts,
    input_offsets: Vec<usize>,
    reservoir_offsets: Vec<usize>,
}

impl Network {
    /// Validates and indexes a network description.
    pub fn from_parts(mut parts: NetworkParts) -> Result<Self> {
        let cfg = &parts.config;
        cfg.validate()?;
        parts.compression.validate()?;
        let n_res = cfg.reservoir_size;
        if parts.excitatory.len() != n_res {
            return Err(param("excitatory", "one flag per reservoir neuron"));
        }
        if parts.readout_weights.len() != n_res * cfg.num_readout {
            return Err(param("readout_weights", "must be reservoir_size x num_readout"));
        }
        let in_range = |s: &Synapse, n_pre: usize| (s.pre as usize) < n_pre && (s.post as usize) < n_res;
        if !parts.input_synapses.iter().all(|s| in_range(s, cfg.num_inputs)) {
            return Err(param("input_synapses", "endpoint out of range"));
        }
        if !parts
            .reservoir_synapses
            .iter()
            .all(|s| in_range(s, n_res) && s.pre != s.post)
        {
            return Err(param("reservoir_synapses", "endpoint out of range or self-loop"));
        }
        parts.input_synapses.sort_by_key(|s| (s.pre, s.post));
        parts.reservoir_synapses.sort_by_key(|s| (s.pre, s.post));
        let input_offsets = csr_offsets(&parts.input_synapses, cfg.num_inputs);
        let reservoir_offsets = csr_offsets(&parts.reservoir_synapses, n_res);
        Ok(Self {
            parts,
            input_offsets,
            reservoir_offsets,
        })
    }

    pub fn parts(&self) -> &NetworkParts {
        &self.parts
    }

    pub fn into_parts(self) -> NetworkParts {
        self.parts
    }

    pub fn config(&self) -> &LsmConfig {
        &self.parts.config
    }

    pub fn compression(&self) -> CompressionConfig {
        self.parts.compression
    }

    pub fn model(&self) -> NeuronModel {
        self.parts.config.model
    }

    pub fn input_synapses(&self) -> &[Synapse] {
        &self.parts.input_synapses
    }

    pub fn reservoir_synapses(&self) -> &[Synapse] {
        &self.parts.reservoir_synapses
    }

    pub fn excitatory(&self) -> &[bool] {
        &self.parts.excitatory
    }

    pub fn readout_weights(&self) -> &[i64] {
        &self.parts.readout_weights
    }

    pub fn readout_weights_mut(&mut self) -> &mut [i64] {
        &mut self.parts.readout_weights
    }

    pub fn num_neurons(&self) -> usize {
        self.parts.config.reservoir_size + self.parts.config.num_readout
    }

    fn input_fanout_of(&self, ch: usize) -> &[Synapse] {
        &self.parts.input_synapses[self.input_offsets[ch]..self.input_offsets[ch + 1]]
    }

    fn reservoir_fanout_of(&self, pre: usize) -> &[Synapse] {
        &self.parts.reservoir_synapses[self.reservoir_offsets[pre]..self.reservoir_offsets[pre + 1]]
    }

    /// Mode implied by the network's own compression setting.
    pub fn configured_mode(&self) -> Mode {
        Mode::Compressed(self.parts.compression.gamma)
    }

    /// Reprograms the compression ratio (programmable builds only).
    pub fn set_compression_ratio(&mut self, gamma: u32) -> Result<()> {
        let c = &mut self.parts.compression;
        if !c.programmable {
            return Err(Error::NotProgrammable);
        }
        if gamma == 0 || gamma > c.max_gamma {
            return Err(Error::RatioOutOfBounds {
                gamma,
                max: c.max_gamma,
            });
        }
        c.gamma = gamma;
        Ok(())
    }

    pub fn with_compression(mut self, compression: CompressionConfig) -> Result<Self> {
        compression.validate()?;
        self.parts.compression = compression;
        Ok(self)
    }

    /// Simulates one example at the configured ratio.
    pub fn run(&self, example: &[BinarySpikeTrain]) -> Result<SimulationTrace> {
        simulate(self, example, self.configured_mode())
    }
}

fn csr_offsets(sorted: &[Synapse], n_pre: usize) -> Vec<usize> {
    let mut offsets = vec![0usize; n_pre + 1];
    for s in sorted {
        offsets[s.pre as usize + 1] += 1;
    }
    for i in 0..n_pre {
        offsets[i + 1] += offsets[i];
    }
    offsets
}

fn grid_position(i: usize, grid: [usize; 3]) -> [f64; 3] {
    let x = i % grid[0];
    let y = (i / grid[0]) % grid[1];
    let z = i / (grid[0] * grid[1]);
    [x as f64, y as f64, z as f64]
}

/// Builds the reservoir and input wiring; readout weights start at zero.
///
/// A reservoir pair `(a, b)` is connected with probability
/// `C * exp(-(d(a, b) / lambda)^2)`, `C` picked by the excitatory or
/// inhibitory class of both ends; the weight sign follows the class of `a`.
pub fn build_lsm(config: &LsmConfig) -> Result<Network> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.reservoir_size;

    let n_exc = libm::round(config.excitatory_fraction * n as f64) as usize;
    let mut excitatory: Vec<bool> = (0..n).map(|i| i < n_exc).collect();
    excitatory.shuffle(&mut rng);

    let mut reservoir_synapses = Vec::new();
    for a in 0..n {
        let pa = grid_position(a, config.grid);
        for b in 0..n {
            if a == b {
                continue;
            }
            let pb = grid_position(b, config.grid);
            let d2: f64 = (0..3).map(|k| (pa[k] - pb[k]) * (pa[k] - pb[k])).sum();
            let c = match (excitatory[a], excitatory[b]) {
                (true, true) => config.c_ee,
                (true, false) => config.c_ei,
                (false, true) => config.c_ie,
                (false, false) => config.c_ii,
            };
            let p = c * libm::exp(-d2 / (config.lambda * config.lambda));
            // draw unconditionally so the stream does not depend on p
            let draw: f64 = rng.random();
            if draw < p {
                reservoir_synapses.push(Synapse {
                    pre: a as u32,
                    post: b as u32,
                    weight: ShiftWeight {
                        negative: !excitatory[a],
                        exponent: rng.random_range(0..=config.reservoir_max_exponent),
                    },
                });
            }
        }
    }

    let mut input_synapses = Vec::with_capacity(config.num_inputs * config.input_fanout);
    for ch in 0..config.num_inputs {
        let mut targets = index::sample(&mut rng, n, config.input_fanout).into_vec();
        targets.sort_unstable();
        for post in targets {
            input_synapses.push(Synapse {
                pre: ch as u32,
                post: post as u32,
                weight: ShiftWeight {
                    negative: rng.random_bool(0.5),
                    exponent: rng.random_range(0..=config.input_max_exponent),
                },
            });
        }
    }

    Network::from_parts(NetworkParts {
        config: config.clone(),
        compression: CompressionConfig::default(),
        excitatory,
        input_synapses,
        reservoir_synapses,
        readout_weights: vec![0; n * config.num_readout],
    })
}

/// Simulation mode: the uncompressed binary pipeline, or the compressed
/// pipeline at ratio `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Mode {
    Baseline,
    Compressed(u32),
}

impl Mode {
    pub fn gamma(self) -> u32 {
        match self {
            Mode::Baseline => 1,
            Mode::Compressed(g) => g,
        }
    }
}

/// One emitted spike. Neuron ids count reservoir neurons first, then readout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpikeRecord {
    pub step: u32,
    pub neuron: u32,
    pub weight: u32,
    /// Burst amplitude `g` in fixed point (1.0 for non-bursting models).
    pub amplitude: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EventCounters {
    pub synaptic_ops: u64,
    pub neuron_updates: u64,
    /// Spike events emitted by neurons; a weighted spike counts once.
    pub spikes: u64,
    pub spike_weight: u64,
    pub saturations: u64,
}

impl EventCounters {
    pub fn accumulate(&mut self, other: &EventCounters) {
        self.synaptic_ops += other.synaptic_ops;
        self.neuron_updates += other.neuron_updates;
        self.spikes += other.spikes;
        self.spike_weight += other.spike_weight;
        self.saturations += other.saturations;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub mode: Mode,
    pub input_length: u32,
    pub timestep_count: u32,
    pub num_reservoir: usize,
    pub num_readout: usize,
    /// Input layer as fed to the reservoir (compressed in compressed mode).
    pub input: Vec<WeightedSpikeTrain>,
    /// Neuron spikes in (step, neuron) order.
    pub spikes: Vec<SpikeRecord>,
    pub counters: EventCounters,
    /// Membrane potentials, step-major, if requested.
    pub membrane: Option<Vec<i64>>,
}

impl SimulationTrace {
    pub fn gamma(&self) -> u32 {
        self.mode.gamma()
    }

    pub fn reservoir_ids(&self) -> Range<u32> {
        0..self.num_reservoir as u32
    }

    pub fn readout_ids(&self) -> Range<u32> {
        self.num_reservoir as u32..(self.num_reservoir + self.num_readout) as u32
    }

    /// Runtime speedup in steps relative to the uncompressed train.
    pub fn speedup(&self) -> f64 {
        self.input_length as f64 / self.timestep_count as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SimOptions {
    pub record_membrane: bool,
}

/// Readout population fed by reservoir spikes through plastic weights.
///
/// Shared by the simulator and by readout training, which replays recorded
/// reservoir activity instead of re-simulating the fixed reservoir.
#[derive(Debug, Clone)]
pub struct ReadoutLayer {
    kernel: NeuronKernel,
    clock: NeuronClock,
    clock_init: NeuronClock,
    states: Vec<NeuronState>,
    charges: Vec<i64>,
}

impl ReadoutLayer {
    pub fn new(net: &Network, mode: Mode) -> Result<Self> {
        let cfg = net.config();
        let (kernel, clock) = NeuronKernel::new(
            cfg.model,
            &cfg.readout_neuron,
            cfg.burst.as_ref(),
            cfg.format,
            mode.gamma(),
        )?;
        Ok(Self {
            states: vec![NeuronState::new(cfg.format); cfg.num_readout],
            charges: vec![0; cfg.num_readout],
            kernel,
            clock_init: clock.clone(),
            clock,
        })
    }

    pub fn reset(&mut self) {
        let fmt = self.kernel.format();
        self.states.fill(NeuronState::new(fmt));
        self.clock = self.clock_init.clone();
    }

    pub fn states(&self) -> &[NeuronState] {
        &self.states
    }

    /// Advances one step. `delivered` holds the reservoir spikes emitted in
    /// the previous step; output weights are written into `out`.
    pub fn step(
        &mut self,
        weights: &[i64],
        delivered: &[SpikeRecord],
        sat: &mut Saturator,
        counters: &mut EventCounters,
        out: &mut [u32],
    ) {
        let n_out = self.states.len();
        let shifts = self.clock.tick();
        self.charges.fill(0);
        for s in delivered {
            let row = &weights[s.neuron as usize * n_out..][..n_out];
            for (charge, &w) in self.charges.iter_mut().zip(row) {
                let wq = sat.mul_int(w, s.weight as i64);
                let c = sat.mul(wq, s.amplitude);
                *charge = sat.add(*charge, c);
            }
            counters.synaptic_ops += n_out as u64;
        }
        for ((st, &charge), o) in self.states.iter_mut().zip(&self.charges).zip(out.iter_mut()) {
            self.kernel.begin_step(st);
            *o = self.kernel.step(st, charge, shifts, sat);
        }
        counters.neuron_updates += n_out as u64;
    }
}

struct Population {
    kernel: NeuronKernel,
    clock: NeuronClock,
    clock_init: NeuronClock,
    states: Vec<NeuronState>,
}

struct Run {
    input: Vec<WeightedSpikeTrain>,
    cursors: Vec<usize>,
    input_length: u32,
    steps: u32,
    t: u32,
    prev: Vec<SpikeRecord>,
    cur: Vec<SpikeRecord>,
    spikes: Vec<SpikeRecord>,
    membrane: Option<Vec<i64>>,
}

/// Step-wise simulation engine for one network and compression mode.
pub struct Simulator<'a> {
    net: &'a Network,
    mode: Mode,
    options: SimOptions,
    reservoir: Population,
    readout: ReadoutLayer,
    input_burst: Vec<BurstState>,
    charges: Vec<i64>,
    readout_out: Vec<u32>,
    sat: Saturator,
    counters: EventCounters,
    run: Option<Run>,
}

impl<'a> Simulator<'a> {
    pub fn new(net: &'a Network, mode: Mode, options: SimOptions) -> Result<Self> {
        let cfg = net.config();
        if let Mode::Compressed(g) = mode {
            let max = net.compression().max_gamma;
            if g == 0 || g > max {
                return Err(Error::RatioOutOfBounds { gamma: g, max });
            }
        }
        let (kernel, clock) = NeuronKernel::new(
            cfg.model,
            &cfg.neuron,
            cfg.burst.as_ref(),
            cfg.format,
            mode.gamma(),
        )?;
        Ok(Self {
            net,
            mode,
            options,
            reservoir: Population {
                kernel,
                clock_init: clock.clone(),
                clock,
                states: vec![NeuronState::new(cfg.format); cfg.reservoir_size],
            },
            readout: ReadoutLayer::new(net, mode)?,
            input_burst: vec![BurstState::new(cfg.format); cfg.num_inputs],
            charges: vec![0; cfg.reservoir_size],
            readout_out: vec![0; cfg.num_readout],
            sat: Saturator::new(cfg.format),
            counters: EventCounters::default(),
            run: None,
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Reprograms the ratio between examples (programmable builds only).
    pub fn set_compression_ratio(&mut self, gamma: u32) -> Result<()> {
        if self.run.is_some() {
            return Err(Error::ExampleInFlight);
        }
        let c = self.net.compression();
        if !c.programmable {
            return Err(Error::NotProgrammable);
        }
        if gamma == 0 || gamma > c.max_gamma {
            return Err(Error::RatioOutOfBounds {
                gamma,
                max: c.max_gamma,
            });
        }
        *self = Simulator::new(self.net, Mode::Compressed(gamma), self.options)?;
        Ok(())
    }

    /// Resets all state and loads an example.
    pub fn begin(&mut self, example: &[BinarySpikeTrain]) -> Result<()> {
        let cfg = self.net.config();
        if example.len() != cfg.num_inputs {
            return Err(Error::ChannelMismatch {
                expected: cfg.num_inputs,
                found: example.len(),
            });
        }
        let input_length = example.first().map_or(0, BinarySpikeTrain::length_steps);
        if example.iter().any(|t| t.length_steps() != input_length) {
            return Err(Error::Train("input channels differ in length".into()));
        }
        let input = match self.mode {
            Mode::Baseline => example.iter().map(WeightedSpikeTrain::from_binary).collect(),
            Mode::Compressed(g) => example
                .iter()
                .map(|t| compress_train(t, g))
                .collect::<Result<Vec<_>>>()?,
        };
        let fmt = cfg.format;
        self.reservoir.states.fill(NeuronState::new(fmt));
        self.reservoir.clock = self.reservoir.clock_init.clone();
        self.readout.reset();
        self.input_burst.fill(BurstState::new(fmt));
        self.sat.reset();
        self.counters = EventCounters::default();
        let steps = compressed_len(input_length, self.mode.gamma());
        self.run = Some(Run {
            cursors: vec![0; input.len()],
            input,
            input_length,
            steps,
            t: 0,
            prev: Vec::new(),
            cur: Vec::new(),
            spikes: Vec::new(),
            membrane: self
                .options
                .record_membrane
                .then(|| Vec::with_capacity(steps as usize * self.net.num_neurons())),
        });
        Ok(())
    }

    pub fn in_flight(&self) -> bool {
        self.run.is_some()
    }

    /// Advances one step; returns `false` once the example is exhausted.
    pub fn step(&mut self) -> bool {
        let Some(run) = self.run.as_mut() else {
            return false;
        };
        if run.t >= run.steps {
            return false;
        }
        let net = self.net;
        let cfg = net.config();
        let t = run.t;
        let sat = &mut self.sat;
        let counters = &mut self.counters;
        let fmt = cfg.format;
        let burst = self.reservoir.kernel.burst();
        let n_res = cfg.reservoir_size;

        self.charges.fill(0);
        for (ch, train) in run.input.iter().enumerate() {
            let src = &mut self.input_burst[ch];
            if let Some((beta, rule)) = burst {
                src.advance(beta, rule, fmt);
            }
            let events = train.events();
            let cursor = &mut run.cursors[ch];
            if *cursor < events.len() && events[*cursor].step == t {
                let w = events[*cursor].weight;
                *cursor += 1;
                src.last_weight = w;
                for syn in net.input_fanout_of(ch) {
                    let c = shifted_charge(syn.weight, w, src.amplitude, sat);
                    let post = syn.post as usize;
                    self.charges[post] = sat.add(self.charges[post], c);
                }
                counters.synaptic_ops += net.input_fanout_of(ch).len() as u64;
            }
        }
        for s in &run.prev {
            let fanout = net.reservoir_fanout_of(s.neuron as usize);
            for syn in fanout {
                let c = shifted_charge(syn.weight, s.weight, s.amplitude, sat);
                let post = syn.post as usize;
                self.charges[post] = sat.add(self.charges[post], c);
            }
            counters.synaptic_ops += fanout.len() as u64;
        }

        let shifts = self.reservoir.clock.tick();
        let kernel = &self.reservoir.kernel;
        run.cur.clear();
        for (n, (st, &charge)) in self.reservoir.states.iter_mut().zip(&self.charges).enumerate() {
            kernel.begin_step(st);
            let w = kernel.step(st, charge, shifts, sat);
            if w > 0 {
                run.cur.push(SpikeRecord {
                    step: t,
                    neuron: n as u32,
                    weight: w,
                    amplitude: st.burst.amplitude,
                });
            }
        }
        counters.neuron_updates += n_res as u64;

        self.readout.step(
            net.readout_weights(),
            &run.prev,
            sat,
            counters,
            &mut self.readout_out,
        );

        run.spikes.extend_from_slice(&run.cur);
        for (o, (&w, st)) in self.readout_out.iter().zip(self.readout.states()).enumerate() {
            if w > 0 {
                run.spikes.push(SpikeRecord {
                    step: t,
                    neuron: (n_res + o) as u32,
                    weight: w,
                    amplitude: st.burst.amplitude,
                });
            }
        }
        if let Some(m) = run.membrane.as_mut() {
            m.extend(self.reservoir.states.iter().map(|s| s.u));
            m.extend(self.readout.states().iter().map(|s| s.u));
        }
        core::mem::swap(&mut run.prev, &mut run.cur);
        run.t += 1;
        true
    }

    /// Runs the remaining steps and returns the trace.
    pub fn finish(&mut self) -> Option<SimulationTrace> {
        while self.step() {}
        let run = self.run.take()?;
        let mut counters = self.counters;
        counters.spikes = run.spikes.len() as u64;
        counters.spike_weight = run.spikes.iter().map(|s| s.weight as u64).sum();
        counters.saturations = self.sat.count();
        let cfg = self.net.config();
        Some(SimulationTrace {
            mode: self.mode,
            input_length: run.input_length,
            timestep_count: run.steps,
            num_reservoir: cfg.reservoir_size,
            num_readout: cfg.num_readout,
            input: run.input,
            spikes: run.spikes,
            counters,
            membrane: run.membrane,
        })
    }

    pub fn run(&mut self, example: &[BinarySpikeTrain]) -> Result<SimulationTrace> {
        self.begin(example)?;
        Ok(self.finish().expect("example was loaded"))
    }
}

#[inline]
fn shifted_charge(w: ShiftWeight, spike_weight: u32, amplitude: i64, sat: &mut Saturator) -> i64 {
    let fast = (w.exponent < 31)
        .then(|| ((spike_weight as i64) << w.exponent).checked_mul(amplitude))
        .flatten();
    match fast {
        Some(v) => sat.clamp(if w.negative { -v } else { v } as i128),
        None => {
            let v = ((spike_weight as i128) << w.exponent) * amplitude as i128;
            sat.clamp(if w.negative { -v } else { v })
        }
    }
}

pub fn simulate(net: &Network, example: &[BinarySpikeTrain], mode: Mode) -> Result<SimulationTrace> {
    Simulator::new(net, mode, SimOptions::default())?.run(example)
}

pub fn simulate_with(
    net: &Network,
    example: &[BinarySpikeTrain],
    mode: Mode,
    options: SimOptions,
) -> Result<SimulationTrace> {
    Simulator::new(net, mode, options)?.run(example)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> LsmConfig {
        LsmConfig {
            num_inputs: 6,
            reservoir_size: 27,
            num_readout: 3,
            grid: [3, 3, 3],
            seed: 11,
            ..LsmConfig::default()
        }
    }

    #[test]
    fn vanishing_lambda_disconnects_reservoir() {
        let cfg = LsmConfig {
            lambda: 1e-9,
            ..small()
        };
        let net = build_lsm(&cfg).unwrap();
        assert!(net.reservoir_synapses().is_empty());
        assert_eq!(net.input_synapses().len(), 6 * 4);
    }

    #[test]
    fn reference_sizes() {
        let cfg = LsmConfig {
            num_readout: 26,
            ..LsmConfig::default()
        };
        let net = build_lsm(&cfg).unwrap();
        assert_eq!(net.config().num_inputs, 78);
        assert_eq!(net.config().reservoir_size, 135);
        assert_eq!(net.readout_weights().len(), 135 * 26);
        assert_eq!(net.excitatory().iter().filter(|&&e| e).count(), 108);
        assert!(!net.reservoir_synapses().is_empty());
    }

    #[test]
    fn build_is_seeded() {
        let a = build_lsm(&small()).unwrap();
        let b = build_lsm(&small()).unwrap();
        assert_eq!(a, b);
        let c = build_lsm(&LsmConfig { seed: 12, ..small() }).unwrap();
        assert_ne!(a.reservoir_synapses(), c.reservoir_synapses());
    }

    #[test]
    fn invalid_configs() {
        assert!(build_lsm(&LsmConfig {
            grid: [3, 3, 2],
            ..small()
        })
        .is_err());
        assert!(build_lsm(&LsmConfig {
            input_fanout: 28,
            ..small()
        })
        .is_err());
        assert!(build_lsm(&LsmConfig {
            lambda: 0.0,
            ..small()
        })
        .is_err());
    }

    #[test]
    fn sign_follows_presynaptic_class() {
        let net = build_lsm(&small()).unwrap();
        for s in net.reservoir_synapses() {
            assert_eq!(s.weight.negative, !net.excitatory()[s.pre as usize]);
        }
    }

    #[test]
    fn silent_input_gives_silent_network() {
        let net = build_lsm(&small()).unwrap();
        let example: Vec<_> = (0..6).map(|c| BinarySpikeTrain::empty(c, 50)).collect();
        for g in [1, 3, 16] {
            let tr = simulate(&net, &example, Mode::Compressed(g)).unwrap();
            assert!(tr.spikes.is_empty());
            assert_eq!(tr.timestep_count, 50u32.div_ceil(g));
        }
    }

    #[test]
    fn channel_mismatch_is_rejected() {
        let net = build_lsm(&small()).unwrap();
        let example: Vec<_> = (0..5).map(|c| BinarySpikeTrain::empty(c, 10)).collect();
        assert!(matches!(
            simulate(&net, &example, Mode::Baseline),
            Err(Error::ChannelMismatch { .. })
        ));
    }

    #[test]
    fn fixed_build_refuses_reprogramming() {
        let mut net = build_lsm(&small()).unwrap();
        assert_eq!(net.set_compression_ratio(4), Err(Error::NotProgrammable));
        let mut net = net
            .clone()
            .with_compression(CompressionConfig::programmable(2, 16).unwrap())
            .unwrap();
        assert!(net.set_compression_ratio(17).is_err());
        net.set_compression_ratio(8).unwrap();
        assert_eq!(net.configured_mode(), Mode::Compressed(8));
    }

    #[test]
    fn reprogramming_mid_example_fails() {
        let net = build_lsm(&small())
            .unwrap()
            .with_compression(CompressionConfig::programmable(2, 16).unwrap())
            .unwrap();
        let example: Vec<_> = (0..6).map(|c| BinarySpikeTrain::empty(c, 10)).collect();
        let mut sim = Simulator::new(&net, Mode::Compressed(2), SimOptions::default()).unwrap();
        sim.begin(&example).unwrap();
        sim.step();
        assert_eq!(sim.set_compression_ratio(4), Err(Error::ExampleInFlight));
        sim.finish();
        sim.set_compression_ratio(4).unwrap();
        assert_eq!(sim.mode(), Mode::Compressed(4));
    }
}
