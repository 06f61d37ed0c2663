//! Supervised spike-dependent training of the plastic readout.
//!
//! Every reservoir neuron keeps an exponential spike trace whose time
//! constant is rescaled for the compression ratio exactly like membrane and
//! synaptic constants. At every step the teacher neuron (the example's
//! label) is potentiated on its active synapses when it stays silent, and
//! every other readout neuron that fires is depressed. Both updates stop
//! once the teacher leads the competitors by `teacher_margin` in cumulative
//! spike weight.
//!
//! The reservoir is not plastic and receives no feedback from the readout,
//! so its activity is simulated once per example and replayed every epoch.

use alloc::vec;
use alloc::vec::Vec;

use crate::compress::{decay_step, ShiftSchedule, TimeConstantPlan};
use crate::error::{param, Error, Result};
use crate::fixed::{FixedPointFormat, Saturator};
use crate::network::{simulate, EventCounters, Mode, Network, ReadoutLayer, SimulationTrace, SpikeRecord};
use crate::spike::SpikeDataset;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct LearningParams {
    /// Weight change per unit of presynaptic trace.
    pub eta: f64,
    pub tau_trace_nom: f64,
    /// Lead in cumulative spike weight after which updates stop.
    pub teacher_margin: u32,
    pub epochs: u32,
    pub w_min: f64,
    pub w_max: f64,
    pub train_fraction: f64,
    /// Round trained weights to signed powers of two.
    pub snap_to_power_of_two: bool,
}

impl Default for LearningParams {
    fn default() -> Self {
        Self {
            eta: 0.01,
            tau_trace_nom: 16.0,
            teacher_margin: 8,
            epochs: 50,
            w_min: -4.0,
            w_max: 4.0,
            train_fraction: 0.8,
            snap_to_power_of_two: false,
        }
    }
}

impl LearningParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(param("eta", "must be finite and non-negative"));
        }
        if !(self.tau_trace_nom > 1.0) || !self.tau_trace_nom.is_finite() {
            return Err(param("tau_trace_nom", "must exceed 1"));
        }
        if !(self.w_min <= self.w_max) {
            return Err(param("w_bounds", "w_min must not exceed w_max"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(param("train_fraction", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Decision of the readout for one example.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub label: usize,
    /// No readout neuron fired; the label is the tie-break default.
    pub no_spike: bool,
}

/// Arg-max over per-neuron spike weight; ties go to the lowest index.
pub fn classify_totals(totals: &[u64]) -> Classification {
    let mut best = 0;
    for (i, &v) in totals.iter().enumerate() {
        if v > totals[best] {
            best = i;
        }
    }
    Classification {
        label: best,
        no_spike: totals.iter().all(|&v| v == 0),
    }
}

/// Classifies a trace by the total spike weight of each readout neuron.
pub fn classify(trace: &SimulationTrace) -> Classification {
    let ids = trace.readout_ids();
    let mut totals = vec![0u64; trace.num_readout];
    for s in &trace.spikes {
        if ids.contains(&s.neuron) {
            totals[(s.neuron - ids.start) as usize] += s.weight as u64;
        }
    }
    classify_totals(&totals)
}

/// State visible to a readout learning rule after one step.
pub struct RuleStep<'a> {
    pub label: usize,
    /// Output weight of each readout neuron at this step.
    pub outputs: &'a [u32],
    /// Cumulative output weight since the example began.
    pub cumulative: &'a [u64],
    /// Presynaptic traces, one per reservoir neuron.
    pub traces: &'a [i64],
}

/// Plug-in point for readout plasticity.
pub trait ReadoutRule {
    fn apply(&mut self, step: &RuleStep<'_>, weights: &mut [i64], sat: &mut Saturator);
}

/// Teacher-driven trace rule with a stopping margin.
#[derive(Debug, Clone)]
pub struct TeacherTraceRule {
    eta: i64,
    w_min: i64,
    w_max: i64,
    margin: u64,
}

impl TeacherTraceRule {
    pub fn new(params: &LearningParams, format: FixedPointFormat) -> Self {
        Self {
            eta: format.from_f64(params.eta),
            w_min: format.from_f64(params.w_min),
            w_max: format.from_f64(params.w_max),
            margin: params.teacher_margin as u64,
        }
    }

    fn adjust(
        &self,
        weights: &mut [i64],
        col: usize,
        n_out: usize,
        traces: &[i64],
        sign: i64,
        sat: &mut Saturator,
    ) {
        for (pre, &x) in traces.iter().enumerate() {
            if x > 0 {
                let w = &mut weights[pre * n_out + col];
                let dw = sat.mul(self.eta, x);
                *w = (*w + sign * dw).clamp(self.w_min, self.w_max);
            }
        }
    }
}

impl ReadoutRule for TeacherTraceRule {
    fn apply(&mut self, step: &RuleStep<'_>, weights: &mut [i64], sat: &mut Saturator) {
        if self.eta == 0 {
            return;
        }
        let n_out = step.outputs.len();
        let teacher = step.label;
        let lead = step.cumulative[teacher];
        let rival = step
            .cumulative
            .iter()
            .enumerate()
            .filter(|&(o, _)| o != teacher)
            .map(|(_, &c)| c)
            .max()
            .unwrap_or(0);
        if step.outputs[teacher] == 0 && lead < rival + self.margin {
            self.adjust(weights, teacher, n_out, step.traces, 1, sat);
        }
        for o in (0..n_out).filter(|&o| o != teacher) {
            if step.outputs[o] > 0 && step.cumulative[o] + self.margin > lead {
                self.adjust(weights, o, n_out, step.traces, -1, sat);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    pub mode: Mode,
    /// Online training accuracy of every epoch, in percent.
    pub epoch_train_accuracy: Vec<f64>,
    /// Accuracy on the held-out split, in percent (`None` without a test split).
    pub test_accuracy: Option<f64>,
    pub epochs_run: u32,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    /// Held-out examples on which no readout neuron fired.
    pub test_no_spike: usize,
    pub weights: Vec<i64>,
}

/// Reservoir spikes of one example, grouped by emission step.
struct Activity {
    steps: u32,
    offsets: Vec<usize>,
    spikes: Vec<SpikeRecord>,
}

impl Activity {
    fn from_trace(trace: &SimulationTrace) -> Self {
        let ids = trace.reservoir_ids();
        let spikes: Vec<SpikeRecord> = trace
            .spikes
            .iter()
            .filter(|s| ids.contains(&s.neuron))
            .copied()
            .collect();
        let mut offsets = vec![0usize; trace.timestep_count as usize + 1];
        for s in &spikes {
            offsets[s.step as usize + 1] += 1;
        }
        for i in 0..trace.timestep_count as usize {
            offsets[i + 1] += offsets[i];
        }
        Self {
            steps: trace.timestep_count,
            offsets,
            spikes,
        }
    }

    fn emitted_at(&self, t: u32) -> &[SpikeRecord] {
        &self.spikes[self.offsets[t as usize]..self.offsets[t as usize + 1]]
    }
}

struct Replay {
    layer: ReadoutLayer,
    trace_schedule: ShiftSchedule,
    traces: Vec<i64>,
    outputs: Vec<u32>,
    totals: Vec<u64>,
    sat: Saturator,
    counters: EventCounters,
    one: i64,
}

impl Replay {
    fn run(
        &mut self,
        activity: &Activity,
        weights: &mut [i64],
        mut learn: Option<(&mut dyn ReadoutRule, usize)>,
    ) -> Classification {
        self.layer.reset();
        self.trace_schedule.reset();
        self.traces.fill(0);
        self.totals.fill(0);
        for t in 0..activity.steps {
            let delivered = if t == 0 {
                &[][..]
            } else {
                activity.emitted_at(t - 1)
            };
            let k = self.trace_schedule.next_shift();
            for x in self.traces.iter_mut() {
                *x = decay_step(*x, k);
            }
            for s in delivered {
                let x = &mut self.traces[s.neuron as usize];
                *x = self.sat.add(*x, s.weight as i64 * self.one);
            }
            self.layer.step(
                weights,
                delivered,
                &mut self.sat,
                &mut self.counters,
                &mut self.outputs,
            );
            for (tot, &o) in self.totals.iter_mut().zip(&self.outputs) {
                *tot += o as u64;
            }
            if let Some((rule, label)) = learn.as_mut() {
                let step = RuleStep {
                    label: *label,
                    outputs: &self.outputs,
                    cumulative: &self.totals,
                    traces: &self.traces,
                };
                rule.apply(&step, weights, &mut self.sat);
            }
        }
        classify_totals(&self.totals)
    }
}

/// Trains the readout of `net` in place with the default teacher rule.
pub fn train_readout(
    net: &mut Network,
    dataset: &SpikeDataset,
    params: &LearningParams,
    mode: Mode,
) -> Result<TrainingReport> {
    let mut rule = TeacherTraceRule::new(params, net.config().format);
    train_readout_with(net, dataset, params, mode, &mut rule)
}

/// Trains the readout with a caller-supplied rule.
pub fn train_readout_with(
    net: &mut Network,
    dataset: &SpikeDataset,
    params: &LearningParams,
    mode: Mode,
    rule: &mut dyn ReadoutRule,
) -> Result<TrainingReport> {
    params.validate()?;
    if dataset.is_empty() {
        return Err(param("dataset", "no examples"));
    }
    let cfg = net.config().clone();
    if dataset.num_channels() != cfg.num_inputs {
        return Err(Error::ChannelMismatch {
            expected: cfg.num_inputs,
            found: dataset.num_channels(),
        });
    }
    if dataset.num_classes() > cfg.num_readout {
        return Err(param("dataset", "more classes than readout neurons"));
    }
    let (train_idx, test_idx) = dataset.split(params.train_fraction)?;
    if train_idx.is_empty() {
        return Err(param("train_fraction", "training split is empty"));
    }

    let activity: Vec<Activity> = dataset
        .examples()
        .iter()
        .map(|ex| simulate(net, &ex.trains, mode).map(|tr| Activity::from_trace(&tr)))
        .collect::<Result<_>>()?;

    let fmt = cfg.format;
    let mut replay = Replay {
        layer: ReadoutLayer::new(net, mode)?,
        trace_schedule: TimeConstantPlan::new(params.tau_trace_nom, mode.gamma())?.schedule,
        traces: vec![0; cfg.reservoir_size],
        outputs: vec![0; cfg.num_readout],
        totals: vec![0; cfg.num_readout],
        sat: Saturator::new(fmt),
        counters: EventCounters::default(),
        one: fmt.one(),
    };

    let mut weights = net.readout_weights().to_vec();
    let mut epoch_train_accuracy = Vec::with_capacity(params.epochs as usize);
    for _ in 0..params.epochs {
        let mut correct = 0usize;
        for &i in &train_idx {
            let label = dataset.examples()[i].label;
            let c = replay.run(&activity[i], &mut weights, Some((&mut *rule, label)));
            correct += (c.label == label) as usize;
        }
        epoch_train_accuracy.push(percent(correct, train_idx.len()));
    }

    if params.snap_to_power_of_two {
        for w in weights.iter_mut() {
            *w = snap_power_of_two(*w, fmt.one());
        }
    }

    let mut correct = 0usize;
    let mut test_no_spike = 0usize;
    for &i in &test_idx {
        let c = replay.run(&activity[i], &mut weights, None);
        correct += (c.label == dataset.examples()[i].label) as usize;
        test_no_spike += c.no_spike as usize;
    }
    let test_accuracy = (!test_idx.is_empty()).then(|| percent(correct, test_idx.len()));

    net.readout_weights_mut().copy_from_slice(&weights);
    Ok(TrainingReport {
        mode,
        epoch_train_accuracy,
        test_accuracy,
        epochs_run: params.epochs,
        train_indices: train_idx,
        test_indices: test_idx,
        test_no_spike,
        weights,
    })
}

fn percent(correct: usize, total: usize) -> f64 {
    100.0 * correct as f64 / total as f64
}

/// Nearest signed power of two (in log scale); zero stays zero.
fn snap_power_of_two(w: i64, one: i64) -> i64 {
    if w == 0 {
        return 0;
    }
    let mag = w.unsigned_abs() as f64 / one as f64;
    let e = libm::round(libm::log2(mag));
    let snapped = libm::round(libm::exp2(e) * one as f64) as i64;
    snapped.max(1) * w.signum()
}
