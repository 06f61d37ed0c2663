//! Fixed-point number format and saturating arithmetic.
//!
//! Values are carried as raw `i64` words interpreted with `frac_bits`
//! fractional bits. Every operation that would leave the representable
//! range of the configured word clamps to the boundary and bumps a counter,
//! so overflow is never silent.

use crate::error::{param, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FixedPointFormat {
    total_bits: u32,
    frac_bits: u32,
    signed: bool,
}

impl Default for FixedPointFormat {
    fn default() -> Self {
        Self::Q16_16
    }
}

impl FixedPointFormat {
    /// 32-bit signed word with 16 fractional bits.
    pub const Q16_16: Self = Self {
        total_bits: 32,
        frac_bits: 16,
        signed: true,
    };

    pub fn new(total_bits: u32, frac_bits: u32, signed: bool) -> Result<Self> {
        if total_bits == 0 || total_bits > 64 {
            return Err(param("total_bits", "must lie in 1..=64"));
        }
        if !signed && total_bits > 63 {
            return Err(param("total_bits", "unsigned words are limited to 63 bits"));
        }
        if frac_bits >= total_bits {
            return Err(param("frac_bits", "must be smaller than total_bits"));
        }
        Ok(Self {
            total_bits,
            frac_bits,
            signed,
        })
    }

    pub fn total_bits(&self) -> u32 {
        self.total_bits
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    pub fn signed(&self) -> bool {
        self.signed
    }

    /// Raw encoding of 1.0.
    pub fn one(&self) -> i64 {
        1i64 << self.frac_bits
    }

    pub fn max_raw(&self) -> i64 {
        let magnitude_bits = if self.signed {
            self.total_bits - 1
        } else {
            self.total_bits
        };
        if magnitude_bits >= 63 {
            i64::MAX
        } else {
            (1i64 << magnitude_bits) - 1
        }
    }

    pub fn min_raw(&self) -> i64 {
        if !self.signed {
            0
        } else if self.total_bits == 64 {
            i64::MIN
        } else {
            -(1i64 << (self.total_bits - 1))
        }
    }

    /// Round-to-nearest encoding, clamped to the representable range.
    pub fn from_f64(&self, x: f64) -> i64 {
        let scaled = libm::round(x * self.one() as f64);
        if scaled.is_nan() {
            return 0;
        }
        if scaled >= self.max_raw() as f64 {
            self.max_raw()
        } else if scaled <= self.min_raw() as f64 {
            self.min_raw()
        } else {
            scaled as i64
        }
    }

    pub fn to_f64(&self, raw: i64) -> f64 {
        raw as f64 / self.one() as f64
    }
}

/// Saturating arithmetic in one format, counting every clamp.
#[derive(Debug, Clone)]
pub struct Saturator {
    format: FixedPointFormat,
    min: i64,
    max: i64,
    count: u64,
}

impl Saturator {
    pub fn new(format: FixedPointFormat) -> Self {
        Self {
            format,
            min: format.min_raw(),
            max: format.max_raw(),
            count: 0,
        }
    }

    pub fn format(&self) -> FixedPointFormat {
        self.format
    }

    /// Number of clamps recorded so far.
    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn reset(&mut self) {
        self.count = 0;
    }

    #[inline]
    pub fn clamp(&mut self, v: i128) -> i64 {
        if v > self.max as i128 {
            self.count += 1;
            self.max
        } else if v < self.min as i128 {
            self.count += 1;
            self.min
        } else {
            v as i64
        }
    }

    #[inline]
    fn clamp64(&mut self, v: i64) -> i64 {
        if v > self.max {
            self.count += 1;
            self.max
        } else if v < self.min {
            self.count += 1;
            self.min
        } else {
            v
        }
    }

    #[inline]
    pub fn add(&mut self, a: i64, b: i64) -> i64 {
        match a.checked_add(b) {
            Some(v) => self.clamp64(v),
            None => self.clamp(a as i128 + b as i128),
        }
    }

    #[inline]
    pub fn sub(&mut self, a: i64, b: i64) -> i64 {
        match a.checked_sub(b) {
            Some(v) => self.clamp64(v),
            None => self.clamp(a as i128 - b as i128),
        }
    }

    /// Fixed x fixed product; the extra fractional bits are dropped by an
    /// arithmetic shift (round toward negative infinity).
    #[inline]
    pub fn mul(&mut self, a: i64, b: i64) -> i64 {
        match a.checked_mul(b) {
            Some(v) => self.clamp64(v >> self.format.frac_bits),
            None => self.clamp((a as i128 * b as i128) >> self.format.frac_bits),
        }
    }

    /// Fixed x integer product.
    #[inline]
    pub fn mul_int(&mut self, a: i64, n: i64) -> i64 {
        match a.checked_mul(n) {
            Some(v) => self.clamp64(v),
            None => self.clamp(a as i128 * n as i128),
        }
    }
}
