//! Fixed-point neuron models: LIF and its input-weighted (IW),
//! input-output-weighted (IOW) and bursting variants.
//!
//! A neuron step is split into three stages that every model shares:
//!
//! 1. [`NeuronKernel::synapse_step`] turns the incoming weighted spike
//!    charge of this step into a synaptic current,
//! 2. [`NeuronKernel::integrate`] decays the membrane with the scheduled
//!    shift and adds the current through a precomputed gain,
//! 3. [`NeuronKernel::fire`] applies the model's firing rule with soft reset.
//!
//! Gains are derived from the compression ratio so that a compressed step
//! integrates what `gamma` uncompressed steps would have. For a zeroth-order
//! synapse, window-summed charge arriving uniformly inside the window is
//! weighted by `tau/(gamma tau_c)` (`tau_c` the compressed membrane
//! constant). Filtered synapses use exact window sums of the linear dynamics,
//! which split the drive into the synaptic state carried into the window
//! and the charge arriving in it.

use core::fmt;
use core::str::FromStr;

use crate::compress::{decay_step, window_gain, ShiftSchedule, TimeConstantPlan};
use crate::error::{param, Error, Result};
use crate::fixed::{FixedPointFormat, Saturator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SynapseOrder {
    /// Spike charge drives the membrane directly.
    Zeroth,
    First,
    /// Difference of a fast (rise) and a slow (decay) first-order stage.
    Second,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SynapseParams {
    pub order: SynapseOrder,
    /// First-order constant, or rise constant of the second-order model.
    pub tau_s1_nom: f64,
    /// Decay constant of the second-order model.
    pub tau_s2_nom: f64,
    /// Charge scale of one unit-weight spike.
    pub q: f64,
}

impl Default for SynapseParams {
    fn default() -> Self {
        Self {
            order: SynapseOrder::Second,
            tau_s1_nom: 2.0,
            tau_s2_nom: 8.0,
            q: 1.0,
        }
    }
}

impl SynapseParams {
    pub fn zeroth() -> Self {
        Self {
            order: SynapseOrder::Zeroth,
            ..Self::default()
        }
    }

    pub fn first(tau_s_nom: f64, q: f64) -> Self {
        Self {
            order: SynapseOrder::First,
            tau_s1_nom: tau_s_nom,
            q,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.q.is_finite() {
            return Err(param("q", "must be finite"));
        }
        match self.order {
            SynapseOrder::Zeroth => Ok(()),
            SynapseOrder::First if self.tau_s1_nom > 1.0 => Ok(()),
            SynapseOrder::First => Err(param("tau_s1_nom", "must exceed 1")),
            SynapseOrder::Second => {
                if !(self.tau_s1_nom > 1.0 && self.tau_s2_nom > 1.0) {
                    Err(param("tau_s_nom", "both constants must exceed 1"))
                } else if self.tau_s1_nom == self.tau_s2_nom {
                    Err(param("tau_s_nom", "rise and decay constants must differ"))
                } else {
                    Ok(())
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct LifParams {
    /// Normalized membrane constant; `None` is a leakless integrator.
    pub tau_m_nom: Option<f64>,
    pub u_th: f64,
    /// Membrane resistance; the per-step drive gain is `r / tau_m`
    /// (or `r` when leakless).
    pub r: f64,
    /// Largest output spike weight, in threshold multiples.
    pub n_max: u32,
    pub synapse: SynapseParams,
}

impl Default for LifParams {
    fn default() -> Self {
        Self {
            tau_m_nom: Some(32.0),
            u_th: 1.0,
            r: 8.0,
            n_max: 7,
            synapse: SynapseParams::default(),
        }
    }
}

impl LifParams {
    pub fn validate(&self) -> Result<()> {
        if let Some(tau) = self.tau_m_nom {
            if !(tau > 1.0) || tau.is_infinite() {
                return Err(param("tau_m_nom", "must be finite and exceed 1"));
            }
        }
        if !(self.u_th > 0.0) || !self.u_th.is_finite() {
            return Err(param("u_th", "must be positive"));
        }
        if !self.r.is_finite() {
            return Err(param("r", "must be finite"));
        }
        if self.n_max == 0 {
            return Err(param("n_max", "must be at least 1"));
        }
        self.synapse.validate()
    }

    fn base_drive_gain(&self) -> f64 {
        match self.tau_m_nom {
            Some(tau) => self.r / tau,
            None => self.r,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BurstParams {
    /// Burst constant: factor applied to `g` per consecutive spike.
    pub beta: f64,
}

impl BurstParams {
    pub fn validate(&self) -> Result<()> {
        if self.beta > 0.0 && self.beta.is_finite() {
            Ok(())
        } else {
            Err(param("beta", "must be positive"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum NeuronModel {
    #[cfg_attr(feature = "serde", serde(rename = "lif"))]
    Lif,
    #[cfg_attr(feature = "serde", serde(rename = "iw-lif"))]
    IwLif,
    #[cfg_attr(feature = "serde", serde(rename = "iow-lif"))]
    IowLif,
    #[cfg_attr(feature = "serde", serde(rename = "burst-lif"))]
    BurstLif,
    #[cfg_attr(feature = "serde", serde(rename = "iow-burst-lif"))]
    IowBurstLif,
}

impl NeuronModel {
    pub const ALL: [NeuronModel; 5] = [
        NeuronModel::Lif,
        NeuronModel::IwLif,
        NeuronModel::IowLif,
        NeuronModel::BurstLif,
        NeuronModel::IowBurstLif,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NeuronModel::Lif => "lif",
            NeuronModel::IwLif => "iw-lif",
            NeuronModel::IowLif => "iow-lif",
            NeuronModel::BurstLif => "burst-lif",
            NeuronModel::IowBurstLif => "iow-burst-lif",
        }
    }

    /// Whether the model can consume spikes of weight above one.
    pub fn weighted_input(self) -> bool {
        !matches!(self, NeuronModel::Lif | NeuronModel::BurstLif)
    }

    pub fn weighted_output(self) -> bool {
        matches!(self, NeuronModel::IowLif | NeuronModel::IowBurstLif)
    }

    pub fn bursting(self) -> bool {
        matches!(self, NeuronModel::BurstLif | NeuronModel::IowBurstLif)
    }

    pub fn burst_rule(self) -> Option<BurstRule> {
        match self {
            NeuronModel::BurstLif => Some(BurstRule::Binary),
            NeuronModel::IowBurstLif => Some(BurstRule::Weighted),
            _ => None,
        }
    }
}

impl fmt::Display for NeuronModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NeuronModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NeuronModel::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| param("model", alloc::format!("unknown neuron model `{s}`")))
    }
}

/// How the burst function advances after a spike.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BurstRule {
    /// `g <- beta * g`
    Binary,
    /// `g <- beta^w * g` for a spike of weight `w`.
    Weighted,
}

/// Burst-function update for one source.
///
/// `fired_prev`/`spike_weight` describe the source's spike in the previous
/// step. Without a spike the function returns to 1.
pub fn burst_g_update(g_prev: f64, fired_prev: bool, spike_weight: u32, beta: f64, rule: BurstRule) -> f64 {
    if !fired_prev {
        return 1.0;
    }
    match rule {
        BurstRule::Binary => beta * g_prev,
        BurstRule::Weighted => crate::compress::powi(beta, spike_weight) * g_prev,
    }
}

/// Burst-function state of one spike source (neuron or input channel).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurstState {
    pub g: f64,
    /// `g` in fixed point: scales outgoing spikes and the own threshold.
    pub amplitude: i64,
    /// Weight of the spike emitted in the previous step (0 if none).
    pub last_weight: u32,
}

impl BurstState {
    pub fn new(format: FixedPointFormat) -> Self {
        Self {
            g: 1.0,
            amplitude: format.one(),
            last_weight: 0,
        }
    }

    /// Moves the burst function to the current step.
    pub fn advance(&mut self, beta: f64, rule: BurstRule, format: FixedPointFormat) {
        self.g = burst_g_update(self.g, self.last_weight > 0, self.last_weight, beta, rule);
        self.amplitude = format.from_f64(self.g);
        self.last_weight = 0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronState {
    pub u: i64,
    pub s1: i64,
    pub s2: i64,
    pub burst: BurstState,
}

impl NeuronState {
    pub fn new(format: FixedPointFormat) -> Self {
        Self {
            u: 0,
            s1: 0,
            s2: 0,
            burst: BurstState::new(format),
        }
    }
}

/// Shift amounts for one step, shared by every neuron of a population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepShifts {
    /// `None` for a leakless membrane.
    pub membrane: Option<u32>,
    pub syn1: u32,
    pub syn2: u32,
}

/// Shifter schedules of one population for one compression ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronClock {
    membrane: Option<ShiftSchedule>,
    syn1: Option<ShiftSchedule>,
    syn2: Option<ShiftSchedule>,
}

impl NeuronClock {
    pub fn tick(&mut self) -> StepShifts {
        StepShifts {
            membrane: self.membrane.as_mut().map(ShiftSchedule::next_shift),
            syn1: self.syn1.as_mut().map_or(0, ShiftSchedule::next_shift),
            syn2: self.syn2.as_mut().map_or(0, ShiftSchedule::next_shift),
        }
    }

    pub fn reset(&mut self) {
        for s in [&mut self.membrane, &mut self.syn1, &mut self.syn2]
            .into_iter()
            .flatten()
        {
            s.reset();
        }
    }
}

/// Precomputed fixed-point coefficients of one neuron population.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronKernel {
    model: NeuronModel,
    format: FixedPointFormat,
    order: SynapseOrder,
    u_th: i64,
    n_max: u32,
    /// Zeroth order: spike charge into the membrane.
    charge_gain: i64,
    /// Filtered orders: charge of this window into the membrane.
    input_gain: i64,
    /// Membrane drive of the synaptic state carried into the window, per stage
    /// (the second-order peak normalization and sign are folded in).
    carry: [i64; 2],
    /// Charge left in each synaptic stage at the end of the window.
    deposit: [i64; 2],
    burst: Option<(f64, BurstRule)>,
}

impl NeuronKernel {
    /// Prepares a population for compression ratio `gamma` (1 = uncompressed).
    pub fn new(
        model: NeuronModel,
        lif: &LifParams,
        burst: Option<&BurstParams>,
        format: FixedPointFormat,
        gamma: u32,
    ) -> Result<(Self, NeuronClock)> {
        lif.validate()?;
        if gamma == 0 {
            return Err(param("gamma", "must be at least 1"));
        }
        if gamma > 1 && !model.weighted_input() {
            return Err(Error::UnsupportedMode {
                model: model.name(),
                gamma,
            });
        }
        let burst = match (model.burst_rule(), burst) {
            (Some(rule), Some(b)) => {
                b.validate()?;
                if lif.synapse.order != SynapseOrder::Zeroth {
                    return Err(param(
                        "synapse.order",
                        "bursting models use a zeroth-order synapse",
                    ));
                }
                Some((b.beta, rule))
            }
            (Some(_), None) => return Err(param("beta", "bursting model needs burst parameters")),
            (None, _) => None,
        };

        let g = gamma as f64;
        let drive = lif.base_drive_gain();
        let membrane_window = match lif.tau_m_nom {
            Some(tau) => window_gain(tau, gamma),
            None => window_gain(f64::INFINITY, gamma),
        };
        let membrane = lif
            .tau_m_nom
            .map(|tau| TimeConstantPlan::new(tau, gamma).map(|p| p.schedule))
            .transpose()?;

        let syn = &lif.synapse;
        let b = lif.tau_m_nom.map_or(1.0, |tau| 1.0 - 1.0 / tau);
        let stage = |tau: f64| -> Result<(WindowGains, ShiftSchedule)> {
            let plan = TimeConstantPlan::new(tau, gamma)?;
            Ok((WindowGains::new(1.0 - 1.0 / tau, b, gamma), plan.schedule))
        };
        let zero = WindowGains::default();
        let (g1, g2, norm, syn1, syn2) = match syn.order {
            SynapseOrder::Zeroth => (zero, zero, 0.0, None, None),
            SynapseOrder::First => {
                let (g1, s1) = stage(syn.tau_s1_nom)?;
                (g1, zero, 1.0, Some(s1), None)
            }
            SynapseOrder::Second => {
                let (g1, s1) = stage(syn.tau_s1_nom)?;
                let (g2, s2) = stage(syn.tau_s2_nom)?;
                (
                    g1,
                    g2,
                    second_order_norm(syn.tau_s1_nom, syn.tau_s2_nom),
                    Some(s1),
                    Some(s2),
                )
            }
        };
        let (charge_gain, input_gain) = match syn.order {
            SynapseOrder::Zeroth => (drive * membrane_window / g, 0.0),
            SynapseOrder::First => (0.0, drive * syn.q * g1.input),
            SynapseOrder::Second => (0.0, drive * syn.q * norm * (g2.input - g1.input)),
        };
        let fx = |v: f64| format.from_f64(v);

        let kernel = Self {
            model,
            format,
            order: syn.order,
            u_th: format.from_f64(lif.u_th).max(1),
            n_max: lif.n_max,
            charge_gain: fx(charge_gain),
            input_gain: fx(input_gain),
            carry: [fx(drive * norm * g1.carry), fx(drive * norm * g2.carry)],
            deposit: [fx(syn.q * g1.deposit), fx(syn.q * g2.deposit)],
            burst,
        };
        Ok((kernel, NeuronClock { membrane, syn1, syn2 }))
    }

    pub fn model(&self) -> NeuronModel {
        self.model
    }

    pub fn format(&self) -> FixedPointFormat {
        self.format
    }

    pub fn u_th(&self) -> i64 {
        self.u_th
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn burst(&self) -> Option<(f64, BurstRule)> {
        self.burst
    }

    /// Advances the neuron's burst function to the current step.
    pub fn begin_step(&self, state: &mut NeuronState) {
        if let Some((beta, rule)) = self.burst {
            state.burst.advance(beta, rule, self.format);
        }
    }

    /// Membrane drive of this step's spike charge `charge` (the
    /// weight-multiplied sum over all presynaptic spikes), advancing the
    /// synaptic state.
    pub fn synapse_step(
        &self,
        state: &mut NeuronState,
        charge: i64,
        shifts: StepShifts,
        sat: &mut Saturator,
    ) -> i64 {
        match self.order {
            SynapseOrder::Zeroth => sat.mul(self.charge_gain, charge),
            SynapseOrder::First => {
                let carried = sat.mul(self.carry[0], state.s1);
                let fresh = sat.mul(self.input_gain, charge);
                let drive = sat.add(carried, fresh);
                let inc = sat.mul(self.deposit[0], charge);
                state.s1 = sat.add(decay_step(state.s1, shifts.syn1), inc);
                drive
            }
            SynapseOrder::Second => {
                let slow = sat.mul(self.carry[1], state.s2);
                let fast = sat.mul(self.carry[0], state.s1);
                let carried = sat.sub(slow, fast);
                let fresh = sat.mul(self.input_gain, charge);
                let drive = sat.add(carried, fresh);
                let inc1 = sat.mul(self.deposit[0], charge);
                let inc2 = sat.mul(self.deposit[1], charge);
                state.s1 = sat.add(decay_step(state.s1, shifts.syn1), inc1);
                state.s2 = sat.add(decay_step(state.s2, shifts.syn2), inc2);
                drive
            }
        }
    }

    /// Membrane decay plus synaptic drive.
    pub fn integrate(&self, state: &mut NeuronState, drive: i64, shifts: StepShifts, sat: &mut Saturator) {
        let decayed = match shifts.membrane {
            Some(k) => decay_step(state.u, k),
            None => state.u,
        };
        state.u = sat.add(decayed, drive);
    }

    /// Threshold in effect this step: `u_th`, or `g * u_th` for bursting models.
    pub fn threshold(&self, state: &NeuronState, sat: &mut Saturator) -> i64 {
        if self.burst.is_some() {
            sat.mul(state.burst.amplitude, self.u_th).max(1)
        } else {
            self.u_th
        }
    }

    /// Applies the firing rule; returns the output spike weight (0 = silent).
    pub fn fire(&self, state: &mut NeuronState, sat: &mut Saturator) -> u32 {
        let th = self.threshold(state, sat);
        let w = if self.model.weighted_output() {
            fire_weighted(&mut state.u, th, self.n_max)
        } else {
            fire_binary(&mut state.u, th)
        };
        state.burst.last_weight = w;
        w
    }

    /// Full neuron update for one step.
    pub fn step(&self, state: &mut NeuronState, charge: i64, shifts: StepShifts, sat: &mut Saturator) -> u32 {
        let drive = self.synapse_step(state, charge, shifts, sat);
        self.integrate(state, drive, shifts, sat);
        self.fire(state, sat)
    }
}

/// Window sums of a first-order synaptic stage (`s <- a s + q x`) feeding
/// a membrane that decays by `b` per step, over `gamma` steps with spike
/// arrivals spread uniformly across the window. A compressed step then
/// reproduces the end-of-window membrane and synaptic state of the
/// uncompressed subthreshold dynamics in expectation; at `gamma = 1` it is
/// the uncompressed update itself.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct WindowGains {
    /// Membrane contribution of the synaptic state entering the window.
    carry: f64,
    /// Membrane contribution of one unit of charge arriving in the window.
    input: f64,
    /// Synaptic state left by one unit of charge at the end of the window.
    deposit: f64,
}

impl WindowGains {
    fn new(a: f64, b: f64, gamma: u32) -> Self {
        let n = gamma as usize;
        let mut apow = alloc::vec![1.0f64; n + 1];
        let mut bpow = apow.clone();
        for k in 1..=n {
            apow[k] = apow[k - 1] * a;
            bpow[k] = bpow[k - 1] * b;
        }
        let carry = (0..n).map(|k| bpow[n - 1 - k] * apow[k + 1]).sum();
        let mut input = 0.0;
        for p in 0..n {
            input += (p..n).map(|k| bpow[n - 1 - k] * apow[k - p]).sum::<f64>();
        }
        let deposit = (0..n).map(|p| apow[n - 1 - p]).sum::<f64>();
        Self {
            carry,
            input: input / n as f64,
            deposit: deposit / n as f64,
        }
    }
}

/// Peak-normalizing factor of `exp(-t/tau2) - exp(-t/tau1)`.
fn second_order_norm(tau1: f64, tau2: f64) -> f64 {
    // peak of the discrete difference kernel a2^t - a1^t at the nominal rate
    let (a1, a2) = (1.0 - 1.0 / tau1, 1.0 - 1.0 / tau2);
    let sign = if tau2 > tau1 { 1.0 } else { -1.0 };
    let (mut p1, mut p2, mut peak) = (1.0, 1.0, 0.0f64);
    loop {
        p1 *= a1;
        p2 *= a2;
        let d = sign * (p2 - p1);
        if d < peak {
            break;
        }
        peak = d;
    }
    sign / peak
}

/// Single-threshold rule: emit one spike and subtract the threshold once.
#[inline]
pub fn fire_binary(u: &mut i64, threshold: i64) -> u32 {
    if *u >= threshold {
        *u -= threshold;
        1
    } else {
        0
    }
}

/// Multi-threshold rule: for `k th <= u < (k+1) th` emit weight `k` and
/// subtract `k th`; the weight saturates at `n_max`, leaving the surplus
/// in the membrane for the next step.
#[inline]
pub fn fire_weighted(u: &mut i64, threshold: i64, n_max: u32) -> u32 {
    if *u < threshold {
        return 0;
    }
    let k = (*u / threshold).min(n_max as i64);
    *u -= k * threshold;
    k as u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    const F: FixedPointFormat = FixedPointFormat::Q16_16;

    fn fx(x: f64) -> i64 {
        F.from_f64(x)
    }

    #[test]
    fn weighted_firing_examples() {
        let th = fx(1.0);
        let mut u = fx(2.5);
        assert_eq!(fire_weighted(&mut u, th, 7), 2);
        assert_eq!(u, fx(0.5));

        let mut u = fx(0.9);
        assert_eq!(fire_weighted(&mut u, th, 7), 0);
        assert_eq!(u, fx(0.9));

        let mut u = fx(9.25);
        assert_eq!(fire_weighted(&mut u, th, 7), 7);
        assert_eq!(u, fx(2.25));
    }

    #[test]
    fn binary_firing_examples() {
        let th = fx(1.0);
        let mut u = fx(1.3);
        assert_eq!(fire_binary(&mut u, th), 1);
        assert!((F.to_f64(u) - 0.3).abs() < 1e-4);

        let mut u = fx(2.5);
        assert_eq!(fire_binary(&mut u, th), 1);
        assert_eq!(u, fx(1.5));

        let mut u = fx(0.5);
        assert_eq!(fire_binary(&mut u, th), 0);
    }

    #[test]
    fn burst_function_rules() {
        assert_eq!(burst_g_update(3.0, false, 2, 1.5, BurstRule::Weighted), 1.0);
        assert_eq!(burst_g_update(1.0, true, 2, 1.5, BurstRule::Weighted), 2.25);
        assert_eq!(burst_g_update(2.0, true, 5, 1.5, BurstRule::Binary), 3.0);
        assert_eq!(
            burst_g_update(0.7, true, 1, 1.3, BurstRule::Weighted),
            burst_g_update(0.7, true, 1, 1.3, BurstRule::Binary)
        );
    }

    #[test]
    fn bursting_threshold_set_scales_with_g() {
        let lif = LifParams {
            synapse: SynapseParams::zeroth(),
            ..LifParams::default()
        };
        let burst = BurstParams { beta: 2.0 };
        let (k, _) = NeuronKernel::new(NeuronModel::IowBurstLif, &lif, Some(&burst), F, 4).unwrap();
        let mut sat = Saturator::new(F);
        let mut st = NeuronState::new(F);
        st.burst.last_weight = 1;
        k.begin_step(&mut st);
        assert_eq!(st.burst.g, 2.0);
        st.u = fx(1.5 * 2.0);
        assert_eq!(k.fire(&mut st, &mut sat), 1);
        assert_eq!(st.u, fx(0.5 * 2.0));
    }

    #[test]
    fn zero_input_stays_at_rest() {
        let (k, mut clock) = NeuronKernel::new(NeuronModel::Lif, &LifParams::default(), None, F, 1).unwrap();
        let mut sat = Saturator::new(F);
        let mut st = NeuronState::new(F);
        for _ in 0..50 {
            assert_eq!(k.step(&mut st, 0, clock.tick(), &mut sat), 0);
        }
        assert_eq!(st.u, 0);
    }

    #[test]
    fn first_order_impulse_is_geometric() {
        let lif = LifParams {
            synapse: SynapseParams::first(4.0, 1.0),
            ..LifParams::default()
        };
        let (k, mut clock) = NeuronKernel::new(NeuronModel::IowLif, &lif, None, F, 1).unwrap();
        let mut sat = Saturator::new(F);
        let mut st = NeuronState::new(F);
        let mut currents = Vec::new();
        for t in 0..12 {
            let charge = if t == 0 { F.one() } else { 0 };
            currents.push(k.synapse_step(&mut st, charge, clock.tick(), &mut sat));
        }
        for (t, &i) in currents.iter().enumerate() {
            // membrane drive r / tau_m = 0.25 per unit of current
            let expected = 0.25 * libm::pow(0.75, t as f64);
            // truncating shifts lose at most one LSB per step
            assert!((F.to_f64(i) - expected).abs() <= (t as f64 + 2.0) / F.one() as f64);
        }
    }

    #[test]
    fn second_order_impulse_has_single_peak_near_q() {
        let lif = LifParams {
            synapse: SynapseParams {
                order: SynapseOrder::Second,
                tau_s1_nom: 2.0,
                tau_s2_nom: 8.0,
                q: 1.0,
            },
            ..LifParams::default()
        };
        let (k, mut clock) = NeuronKernel::new(NeuronModel::IowLif, &lif, None, F, 1).unwrap();
        let mut sat = Saturator::new(F);
        let mut st = NeuronState::new(F);
        let currents: Vec<i64> = (0..60)
            .map(|t| {
                let charge = if t == 0 { F.one() } else { 0 };
                k.synapse_step(&mut st, charge, clock.tick(), &mut sat)
            })
            .collect();
        let peak = (0..currents.len()).max_by_key(|&i| currents[i]).unwrap();
        assert!(peak > 0 && peak < 20);
        assert!(currents[..=peak].windows(2).all(|w| w[0] <= w[1]));
        assert!(currents[peak..].windows(2).all(|w| w[0] >= w[1]));
        let peak_value = F.to_f64(currents[peak]) / 0.25;
        assert!((peak_value - 1.0).abs() < 0.15, "peak {peak_value}");
    }

    #[test]
    fn binary_models_reject_compression() {
        let err = NeuronKernel::new(NeuronModel::Lif, &LifParams::default(), None, F, 2);
        assert!(matches!(err, Err(Error::UnsupportedMode { .. })));
        assert!(NeuronKernel::new(NeuronModel::IwLif, &LifParams::default(), None, F, 2).is_ok());
    }

    #[test]
    fn bursting_needs_zeroth_order_and_beta() {
        let burst = BurstParams { beta: 1.5 };
        let lif = LifParams::default();
        assert!(NeuronKernel::new(NeuronModel::BurstLif, &lif, Some(&burst), F, 1).is_err());
        let lif = LifParams {
            synapse: SynapseParams::zeroth(),
            ..lif
        };
        assert!(NeuronKernel::new(NeuronModel::BurstLif, &lif, None, F, 1).is_err());
        assert!(NeuronKernel::new(NeuronModel::BurstLif, &lif, Some(&burst), F, 1).is_ok());
    }

    #[test]
    fn constant_drive_below_equilibrium_never_fires() {
        // Equilibrium u* = R I; choose R I = 0.9 u_th.
        let lif = LifParams {
            tau_m_nom: Some(16.0),
            r: 1.0,
            synapse: SynapseParams::zeroth(),
            ..LifParams::default()
        };
        let (k, mut clock) = NeuronKernel::new(NeuronModel::Lif, &lif, None, F, 1).unwrap();
        let mut sat = Saturator::new(F);
        let mut st = NeuronState::new(F);
        let mut fired = 0;
        for _ in 0..2000 {
            fired += k.step(&mut st, fx(0.9), clock.tick(), &mut sat);
        }
        assert_eq!(fired, 0);
        assert!((F.to_f64(st.u) - 0.9).abs() < 0.01);
    }

    #[test]
    fn model_names_round_trip() {
        for m in NeuronModel::ALL {
            assert_eq!(m.name().parse::<NeuronModel>().unwrap(), m);
        }
        assert!("hh".parse::<NeuronModel>().is_err());
    }

    #[test]
    fn saturation_is_recorded() {
        let lif = LifParams {
            synapse: SynapseParams::zeroth(),
            tau_m_nom: None,
            r: 1.0,
            n_max: 1,
            ..LifParams::default()
        };
        let fmt = FixedPointFormat::new(16, 8, true).unwrap();
        let (k, mut clock) = NeuronKernel::new(NeuronModel::IowLif, &lif, None, fmt, 1).unwrap();
        let mut sat = Saturator::new(fmt);
        let mut st = NeuronState::new(fmt);
        for _ in 0..10 {
            k.step(&mut st, fmt.max_raw(), clock.tick(), &mut sat);
        }
        assert!(sat.count() > 0);
    }
}
