//! Spike-train types, Poisson encoding and synthetic classification tasks.
//!
//! Time is measured in abstract steps; rates are expected spikes per step.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{param, Error, Result};

/// Binary spike train on one channel: at most one spike per step.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BinarySpikeTrain {
    channel_id: u32,
    events: Vec<u32>,
    length_steps: u32,
}

impl BinarySpikeTrain {
    /// Builds a train, checking that event steps are strictly increasing
    /// and inside `0..length_steps`.
    pub fn new(channel_id: u32, events: Vec<u32>, length_steps: u32) -> Result<Self> {
        if let Some(w) = events.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Train(format!(
                "channel {channel_id}: steps {} and {} are not strictly increasing",
                w[0], w[1]
            )));
        }
        if let Some(&last) = events.last() {
            if last >= length_steps {
                return Err(Error::Train(format!(
                    "channel {channel_id}: step {last} beyond length {length_steps}"
                )));
            }
        }
        Ok(Self {
            channel_id,
            events,
            length_steps,
        })
    }

    pub fn empty(channel_id: u32, length_steps: u32) -> Self {
        Self {
            channel_id,
            events: Vec::new(),
            length_steps,
        }
    }

    /// Builds a train from a dense 0/1 bit vector.
    pub fn from_bits(channel_id: u32, bits: &[bool]) -> Self {
        let events = bits
            .iter()
            .enumerate()
            .filter_map(|(t, &b)| b.then_some(t as u32))
            .collect();
        Self {
            channel_id,
            events,
            length_steps: bits.len() as u32,
        }
    }

    pub fn channel_id(&self) -> u32 {
        self.channel_id
    }

    pub fn events(&self) -> &[u32] {
        &self.events
    }

    pub fn length_steps(&self) -> u32 {
        self.length_steps
    }

    pub fn spike_count(&self) -> usize {
        self.events.len()
    }
}

/// A spike carrying an integer weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightedEvent {
    pub step: u32,
    pub weight: u32,
}

/// Weighted spike train; each event stands for `weight` merged binary spikes.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightedSpikeTrain {
    channel_id: u32,
    events: Vec<WeightedEvent>,
    length_steps: u32,
    gamma: u32,
}

impl WeightedSpikeTrain {
    pub fn new(channel_id: u32, events: Vec<WeightedEvent>, length_steps: u32, gamma: u32) -> Result<Self> {
        if gamma == 0 {
            return Err(param("gamma", "must be at least 1"));
        }
        if events.windows(2).any(|w| w[0].step >= w[1].step) {
            return Err(Error::Train(format!(
                "channel {channel_id}: weighted steps are not strictly increasing"
            )));
        }
        if events.iter().any(|e| e.weight == 0) {
            return Err(Error::Train(format!("channel {channel_id}: zero-weight event")));
        }
        if events.last().is_some_and(|e| e.step >= length_steps) {
            return Err(Error::Train(format!(
                "channel {channel_id}: event beyond length {length_steps}"
            )));
        }
        Ok(Self {
            channel_id,
            events,
            length_steps,
            gamma,
        })
    }

    /// Lifts a binary train to weight-1 events without compressing it.
    pub fn from_binary(train: &BinarySpikeTrain) -> Self {
        Self {
            channel_id: train.channel_id,
            events: train
                .events
                .iter()
                .map(|&step| WeightedEvent { step, weight: 1 })
                .collect(),
            length_steps: train.length_steps,
            gamma: 1,
        }
    }

    pub(crate) fn from_parts_unchecked(
        channel_id: u32,
        events: Vec<WeightedEvent>,
        length_steps: u32,
        gamma: u32,
    ) -> Self {
        Self {
            channel_id,
            events,
            length_steps,
            gamma,
        }
    }

    pub fn channel_id(&self) -> u32 {
        self.channel_id
    }

    pub fn events(&self) -> &[WeightedEvent] {
        &self.events
    }

    pub fn length_steps(&self) -> u32 {
        self.length_steps
    }

    pub fn gamma(&self) -> u32 {
        self.gamma
    }

    pub fn total_weight(&self) -> u64 {
        self.events.iter().map(|e| e.weight as u64).sum()
    }
}

/// One labeled multi-channel example.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LabeledExample {
    pub trains: Vec<BinarySpikeTrain>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpikeDataset {
    examples: Vec<LabeledExample>,
    num_channels: usize,
    num_classes: usize,
    length_steps: u32,
}

impl SpikeDataset {
    pub fn new(
        examples: Vec<LabeledExample>,
        num_channels: usize,
        num_classes: usize,
        length_steps: u32,
    ) -> Result<Self> {
        for (i, ex) in examples.iter().enumerate() {
            if ex.trains.len() != num_channels {
                return Err(Error::Train(format!(
                    "example {i} has {} channels, expected {num_channels}",
                    ex.trains.len()
                )));
            }
            if ex.label >= num_classes {
                return Err(Error::Train(format!(
                    "example {i} label {} out of range 0..{num_classes}",
                    ex.label
                )));
            }
            for (c, tr) in ex.trains.iter().enumerate() {
                if tr.channel_id as usize != c || tr.length_steps != length_steps {
                    return Err(Error::Train(format!(
                        "example {i} channel {c} has mismatched id or length"
                    )));
                }
            }
        }
        Ok(Self {
            examples,
            num_channels,
            num_classes,
            length_steps,
        })
    }

    pub fn examples(&self) -> &[LabeledExample] {
        &self.examples
    }

    pub fn num_channels(&self) -> usize {
        self.num_channels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn length_steps(&self) -> u32 {
        self.length_steps
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Stratified deterministic split: the first `round(train_fraction * n_c)`
    /// examples of every class (in dataset order) go to training.
    pub fn split(&self, train_fraction: f64) -> Result<(Vec<usize>, Vec<usize>)> {
        if !(0.0..=1.0).contains(&train_fraction) {
            return Err(param("train_fraction", "must lie in [0, 1]"));
        }
        let mut per_class = alloc::vec![0usize; self.num_classes];
        for ex in &self.examples {
            per_class[ex.label] += 1;
        }
        let quota: Vec<usize> = per_class
            .iter()
            .map(|&n| libm::round(train_fraction * n as f64) as usize)
            .collect();
        let mut seen = alloc::vec![0usize; self.num_classes];
        let (mut train, mut test) = (Vec::new(), Vec::new());
        for (i, ex) in self.examples.iter().enumerate() {
            if seen[ex.label] < quota[ex.label] {
                train.push(i);
            } else {
                test.push(i);
            }
            seen[ex.label] += 1;
        }
        Ok((train, test))
    }
}

/// Independent Bernoulli(rate) spiking per channel and step.
pub fn poisson_encode(rates: &[f64], length_steps: u32, seed: u64) -> Result<Vec<BinarySpikeTrain>> {
    if length_steps == 0 {
        return Err(param("length_steps", "must be at least 1"));
    }
    if let Some(r) = rates.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(param("rates", format!("{r} is not a per-step probability")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rates
        .iter()
        .enumerate()
        .map(|(c, &rate)| {
            let events = (0..length_steps).filter(|_| rng.random_bool(rate)).collect();
            BinarySpikeTrain {
                channel_id: c as u32,
                events,
                length_steps,
            }
        })
        .collect())
}

/// Parameters of the template-plus-noise classification task.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SyntheticTaskConfig {
    pub num_classes: usize,
    pub num_channels: usize,
    pub length_steps: u32,
    pub jitter_steps: u32,
    pub examples_per_class: usize,
    /// Per-step firing probability of each template channel.
    pub template_rate: f64,
    pub deletion_prob: f64,
    /// Probability of a spurious spike in each empty step.
    pub insertion_prob: f64,
    pub seed: u64,
}

impl Default for SyntheticTaskConfig {
    fn default() -> Self {
        Self {
            num_classes: 5,
            num_channels: 78,
            length_steps: 500,
            jitter_steps: 4,
            examples_per_class: 40,
            template_rate: 0.04,
            deletion_prob: 0.05,
            insertion_prob: 0.005,
            seed: 1,
        }
    }
}

/// Generates one random template per class and jittered, noisy copies of it.
///
/// Examples are interleaved by class: example `i` has label `i % num_classes`.
pub fn synthetic_task(cfg: &SyntheticTaskConfig) -> Result<SpikeDataset> {
    if cfg.num_classes < 2 {
        return Err(param("num_classes", "need at least two classes"));
    }
    if cfg.num_channels == 0 {
        return Err(param("num_channels", "need at least one channel"));
    }
    if cfg.length_steps == 0 {
        return Err(param("length_steps", "must be at least 1"));
    }
    if cfg.jitter_steps >= cfg.length_steps {
        return Err(param("jitter_steps", "must be smaller than length_steps"));
    }
    for (name, p) in [
        ("template_rate", cfg.template_rate),
        ("deletion_prob", cfg.deletion_prob),
        ("insertion_prob", cfg.insertion_prob),
    ] {
        if !(0.0..=1.0).contains(&p) {
            return Err(param(name, "must be a probability"));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let t_len = cfg.length_steps;
    let templates: Vec<Vec<Vec<u32>>> = (0..cfg.num_classes)
        .map(|_| {
            (0..cfg.num_channels)
                .map(|_| {
                    (0..t_len)
                        .filter(|_| rng.random_bool(cfg.template_rate))
                        .collect()
                })
                .collect()
        })
        .collect();

    let jitter = cfg.jitter_steps as i64;
    let mut occupied = alloc::vec![false; t_len as usize];
    let mut examples = Vec::with_capacity(cfg.num_classes * cfg.examples_per_class);
    for _ in 0..cfg.examples_per_class {
        for (label, template) in templates.iter().enumerate() {
            let trains = template
                .iter()
                .enumerate()
                .map(|(c, spikes)| {
                    occupied.fill(false);
                    for &s in spikes {
                        if cfg.deletion_prob > 0.0 && rng.random_bool(cfg.deletion_prob) {
                            continue;
                        }
                        let shift = if jitter > 0 {
                            rng.random_range(-jitter..=jitter)
                        } else {
                            0
                        };
                        let t = (s as i64 + shift).clamp(0, t_len as i64 - 1);
                        occupied[t as usize] = true;
                    }
                    if cfg.insertion_prob > 0.0 {
                        for slot in occupied.iter_mut() {
                            if !*slot && rng.random_bool(cfg.insertion_prob) {
                                *slot = true;
                            }
                        }
                    }
                    BinarySpikeTrain::from_bits(c as u32, &occupied)
                })
                .collect();
            examples.push(LabeledExample { trains, label });
        }
    }
    SpikeDataset::new(examples, cfg.num_channels, cfg.num_classes, t_len)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unordered_events() {
        assert!(BinarySpikeTrain::new(0, alloc::vec![3, 3], 10).is_err());
        assert!(BinarySpikeTrain::new(0, alloc::vec![4, 2], 10).is_err());
        assert!(BinarySpikeTrain::new(0, alloc::vec![10], 10).is_err());
        assert!(BinarySpikeTrain::new(0, alloc::vec![0, 9], 10).is_ok());
    }

    #[test]
    fn poisson_extremes() {
        let trains = poisson_encode(&[0.0, 1.0], 10, 3).unwrap();
        assert!(trains[0].events().is_empty());
        assert_eq!(trains[1].events(), &(0..10).collect::<Vec<_>>()[..]);
    }

    #[test]
    fn poisson_count_within_three_sigma() {
        // Binomial(10000, 0.1): mean 1000, sigma 30.
        let trains = poisson_encode(&[0.1], 10_000, 42).unwrap();
        let n = trains[0].spike_count() as i64;
        assert!((n - 1000).abs() <= 90, "count {n}");
    }

    #[test]
    fn poisson_rejects_bad_rate() {
        assert!(poisson_encode(&[1.5], 10, 0).is_err());
        assert!(poisson_encode(&[-0.1], 10, 0).is_err());
        assert!(poisson_encode(&[0.5], 0, 0).is_err());
    }

    #[test]
    fn poisson_is_reproducible() {
        let a = poisson_encode(&[0.3; 8], 200, 9).unwrap();
        let b = poisson_encode(&[0.3; 8], 200, 9).unwrap();
        assert_eq!(a, b);
    }

    fn noiseless(seed: u64) -> SyntheticTaskConfig {
        SyntheticTaskConfig {
            num_classes: 5,
            num_channels: 12,
            length_steps: 100,
            jitter_steps: 0,
            examples_per_class: 20,
            deletion_prob: 0.0,
            insertion_prob: 0.0,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn noiseless_examples_equal_their_template() {
        let ds = synthetic_task(&noiseless(5)).unwrap();
        assert_eq!(ds.len(), 100);
        let first: Vec<_> = ds.examples()[..5].to_vec();
        for ex in ds.examples() {
            assert_eq!(ex.trains, first[ex.label].trains);
        }
    }

    #[test]
    fn seeds_change_templates() {
        let a = synthetic_task(&noiseless(1)).unwrap();
        let b = synthetic_task(&noiseless(2)).unwrap();
        assert_ne!(a.examples()[0].trains, b.examples()[0].trains);
    }

    #[test]
    fn synthetic_rejects_large_jitter() {
        let cfg = SyntheticTaskConfig {
            length_steps: 10,
            jitter_steps: 10,
            ..Default::default()
        };
        assert!(synthetic_task(&cfg).is_err());
        let cfg = SyntheticTaskConfig {
            num_classes: 1,
            ..Default::default()
        };
        assert!(synthetic_task(&cfg).is_err());
    }

    #[test]
    fn stratified_split() {
        let ds = synthetic_task(&noiseless(3)).unwrap();
        let (train, test) = ds.split(0.8).unwrap();
        assert_eq!(train.len(), 80);
        assert_eq!(test.len(), 20);
        for c in 0..5 {
            assert_eq!(test.iter().filter(|&&i| ds.examples()[i].label == c).count(), 4);
        }
        assert!(ds.split(1.5).is_err());
    }
}
