//! Input spike compression, time-constant scaling and shifter schedules.
//!
//! One compressed step stands for `gamma` original steps. A first-order
//! decay `x <- x (1 - 1/tau)` applied `gamma` times collapses into a single
//! step with the scaled constant
//!
//! ```text
//! tau_c = 1 / (1 - (1 - 1/tau)^gamma)
//! ```
//!
//! Hardware decays by shifting, which only realizes powers of two; a
//! [`ShiftSchedule`] toggles between the two bounding powers so that the
//! arithmetic mean of the realized constants equals the target.

use alloc::vec::Vec;

use crate::error::{param, Result};
use crate::spike::{BinarySpikeTrain, WeightedEvent, WeightedSpikeTrain};

/// Default upper bound on the compression ratio.
pub const MAX_GAMMA: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CompressionConfig {
    pub gamma: u32,
    /// Allows the ratio to be reprogrammed between examples.
    pub programmable: bool,
    pub max_gamma: u32,
}

impl Default for CompressionConfig {
    fn default() -> Self {
        Self {
            gamma: 1,
            programmable: false,
            max_gamma: MAX_GAMMA,
        }
    }
}

impl CompressionConfig {
    pub fn fixed(gamma: u32) -> Result<Self> {
        let cfg = Self {
            gamma,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn programmable(gamma: u32, max_gamma: u32) -> Result<Self> {
        let cfg = Self {
            gamma,
            programmable: true,
            max_gamma,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_gamma == 0 {
            return Err(param("max_gamma", "must be at least 1"));
        }
        if self.gamma == 0 || self.gamma > self.max_gamma {
            return Err(crate::Error::RatioOutOfBounds {
                gamma: self.gamma,
                max: self.max_gamma,
            });
        }
        Ok(())
    }
}

/// Merges every window of `gamma` steps into one weighted spike.
///
/// A trailing partial window becomes its own compressed step, so no spike is
/// ever dropped. Windows without spikes produce no event.
pub fn compress_train(train: &BinarySpikeTrain, gamma: u32) -> Result<WeightedSpikeTrain> {
    if gamma == 0 {
        return Err(param("gamma", "must be at least 1"));
    }
    let mut events: Vec<WeightedEvent> = Vec::with_capacity(train.events().len());
    for &t in train.events() {
        let step = t / gamma;
        match events.last_mut() {
            Some(e) if e.step == step => e.weight += 1,
            _ => events.push(WeightedEvent { step, weight: 1 }),
        }
    }
    Ok(WeightedSpikeTrain::from_parts_unchecked(
        train.channel_id(),
        events,
        compressed_len(train.length_steps(), gamma),
        gamma,
    ))
}

/// `ceil(length / gamma)`.
pub fn compressed_len(length_steps: u32, gamma: u32) -> u32 {
    length_steps.div_ceil(gamma)
}

/// Exact normalized time constant after compressing time by `gamma`.
pub fn scale_time_constant(tau_nom: f64, gamma: u32) -> Result<f64> {
    if tau_nom.is_nan() || tau_nom <= 1.0 {
        return Err(param("tau_nom", "decay factor 1 - 1/tau must lie in (0, 1)"));
    }
    if gamma == 0 {
        return Err(param("gamma", "must be at least 1"));
    }
    if gamma == 1 || tau_nom.is_infinite() {
        return Ok(tau_nom);
    }
    let retained = powi(1.0 - 1.0 / tau_nom, gamma);
    Ok(1.0 / (1.0 - retained))
}

/// `sum_{j < gamma} (1 - 1/tau)^j`: how much a constant per-step drive
/// accumulates over one compressed window, equal to `tau / tau_c`.
pub fn window_gain(tau_nom: f64, gamma: u32) -> f64 {
    if gamma == 1 {
        return 1.0;
    }
    if tau_nom.is_infinite() {
        return gamma as f64;
    }
    tau_nom * (1.0 - powi(1.0 - 1.0 / tau_nom, gamma))
}

pub(crate) fn powi(base: f64, exp: u32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

/// Deterministic toggling between `2^low_shift` and `2^high_shift`.
///
/// Bresenham-style accumulator: every step adds `tau - 2^low`; once the
/// accumulator reaches `2^high - 2^low` the high constant is emitted and
/// the span subtracted. Over `n` steps the high constant is used
/// `floor(n * (tau - 2^low) / span)` times.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSchedule {
    low_shift: u32,
    high_shift: u32,
    increment: f64,
    span: f64,
    acc: f64,
}

impl ShiftSchedule {
    pub fn low_shift(&self) -> u32 {
        self.low_shift
    }

    pub fn high_shift(&self) -> u32 {
        self.high_shift
    }

    /// True when the target is an exact power of two.
    pub fn is_constant(&self) -> bool {
        self.low_shift == self.high_shift
    }

    pub fn reset(&mut self) {
        self.acc = 0.0;
    }

    /// Shift amount for the next step.
    pub fn next_shift(&mut self) -> u32 {
        if self.is_constant() {
            return self.low_shift;
        }
        self.acc += self.increment;
        if self.acc >= self.span {
            self.acc -= self.span;
            self.high_shift
        } else {
            self.low_shift
        }
    }
}

impl Iterator for ShiftSchedule {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        Some(self.next_shift())
    }
}

/// Shifter schedule whose realized constants average to `tau_target`.
pub fn make_schedule(tau_target: f64) -> Result<ShiftSchedule> {
    if tau_target.is_nan() || tau_target < 1.0 {
        return Err(param("tau_target", "must be at least 1"));
    }
    if tau_target >= (1u64 << 62) as f64 {
        return Err(param("tau_target", "exceeds shifter range"));
    }
    let mut low = 0u32;
    while ((1u64 << (low + 1)) as f64) <= tau_target {
        low += 1;
    }
    let low_value = (1u64 << low) as f64;
    let high = if low_value == tau_target { low } else { low + 1 };
    Ok(ShiftSchedule {
        low_shift: low,
        high_shift: high,
        increment: tau_target - low_value,
        span: (1u64 << high) as f64 - low_value,
        acc: 0.0,
    })
}

/// `x - (x >> k)`: one step of decay with constant `2^k`.
#[inline]
pub fn decay_step(x: i64, k: u32) -> i64 {
    x - (x >> k.min(63))
}

/// A time constant prepared for one compression ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeConstantPlan {
    pub tau_nom: f64,
    pub gamma: u32,
    pub tau_nom_c_exact: f64,
    pub schedule: ShiftSchedule,
}

impl TimeConstantPlan {
    pub fn new(tau_nom: f64, gamma: u32) -> Result<Self> {
        let tau_nom_c_exact = scale_time_constant(tau_nom, gamma)?;
        Ok(Self {
            tau_nom,
            gamma,
            tau_nom_c_exact,
            schedule: make_schedule(tau_nom_c_exact)?,
        })
    }

    pub fn k_low(&self) -> u32 {
        self.schedule.low_shift
    }

    pub fn k_high(&self) -> u32 {
        self.schedule.high_shift
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn window_of_four_merges_three_spikes() {
        let tr = BinarySpikeTrain::from_bits(0, &[true, false, true, true]);
        let c = compress_train(&tr, 4).unwrap();
        assert_eq!(c.events(), &[WeightedEvent { step: 0, weight: 3 }]);
        assert_eq!(c.length_steps(), 1);
    }

    #[test]
    fn gamma_one_is_identity() {
        let tr = BinarySpikeTrain::new(2, vec![0, 5, 6, 9], 12).unwrap();
        let c = compress_train(&tr, 1).unwrap();
        assert_eq!(c, WeightedSpikeTrain::from_binary(&tr));
    }

    #[test]
    fn partial_window_keeps_spikes() {
        let tr = BinarySpikeTrain::new(0, vec![9], 10).unwrap();
        let c = compress_train(&tr, 4).unwrap();
        assert_eq!(c.length_steps(), 3);
        assert_eq!(c.events(), &[WeightedEvent { step: 2, weight: 1 }]);
        assert!(compress_train(&tr, 0).is_err());
    }

    #[test]
    fn scaling_examples() {
        assert_eq!(scale_time_constant(16.0, 1).unwrap(), 16.0);
        let t2 = scale_time_constant(16.0, 2).unwrap();
        assert!((t2 - 256.0 / 31.0).abs() < 1e-12);
        let t4 = scale_time_constant(16.0, 4).unwrap();
        // 1 / (1 - (15/16)^4) = 65536 / 14911
        assert!((t4 - 65536.0 / 14911.0).abs() < 1e-12);
        let linear_err = (t4 - 4.0).abs() / t4;
        assert!(linear_err > 0.08 && linear_err < 0.10, "{linear_err}");
        assert!(scale_time_constant(1.0, 2).is_err());
        assert!(scale_time_constant(0.5, 2).is_err());
    }

    #[test]
    fn window_gain_matches_ratio() {
        for &tau in &[2.0, 5.0, 32.0] {
            for g in 1..=16 {
                let tc = scale_time_constant(tau, g).unwrap();
                assert!((window_gain(tau, g) - tau / tc).abs() < 1e-9);
            }
        }
        assert_eq!(window_gain(f64::INFINITY, 7), 7.0);
    }

    #[test]
    fn schedule_for_five_is_four_four_four_eight() {
        let s = make_schedule(5.0).unwrap();
        let taus: Vec<u64> = s.take(8).map(|k| 1u64 << k).collect();
        assert_eq!(taus, vec![4, 4, 4, 8, 4, 4, 4, 8]);
    }

    #[test]
    fn schedule_for_ten_is_three_eights_one_sixteen() {
        let s = make_schedule(10.0).unwrap();
        let taus: Vec<u64> = s.take(4).map(|k| 1u64 << k).collect();
        assert_eq!(taus, vec![8, 8, 8, 16]);
    }

    #[test]
    fn power_of_two_is_constant() {
        let s = make_schedule(8.0).unwrap();
        assert!(s.is_constant());
        assert!(s.take(5).all(|k| k == 3));
        let one = make_schedule(1.0).unwrap();
        assert!(one.is_constant());
        assert_eq!(one.low_shift(), 0);
        assert!(make_schedule(0.5).is_err());
    }

    #[test]
    fn decay_by_shift() {
        assert_eq!(decay_step(0, 3), 0);
        assert_eq!(decay_step(256, 3), 224);
        assert_eq!(decay_step(256, 0), 0);
        assert_eq!(decay_step(-3, 2), -2);
    }

    #[test]
    fn plan_bounds_scaled_constant() {
        let p = TimeConstantPlan::new(32.0, 3).unwrap();
        let lo = (1u64 << p.k_low()) as f64;
        let hi = (1u64 << p.k_high()) as f64;
        assert!(lo <= p.tau_nom_c_exact && p.tau_nom_c_exact <= hi);
        assert_eq!(p.k_high(), p.k_low() + 1);
    }

    #[test]
    fn config_bounds() {
        assert!(CompressionConfig::fixed(0).is_err());
        assert!(CompressionConfig::fixed(17).is_err());
        assert!(CompressionConfig::programmable(32, 32).is_ok());
    }
}
