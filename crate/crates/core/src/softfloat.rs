//! Round-to-nearest-even arithmetic with a `b`-bit mantissa and unbounded
//! exponent, for `2 <= b <= 53`.
//!
//! Every value `mant * 2^exp` keeps `2^(b-1) <= |mant| < 2^b` (or is zero), so
//! the half-ulp of a result with magnitude in `[2^(k-1), 2^k)` is `2^(k-b-1)`.
//! At `b = 53` this reproduces IEEE binary64 round-to-nearest bit for bit as
//! long as no subnormals or overflow occur.

use crate::error::{Error, Result};
use crate::error_model::Arithmetic;

pub const MIN_BITS: u32 = 2;
pub const MAX_BITS: u32 = 53;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SoftFloat {
    mant: i64,
    exp: i32,
}

impl SoftFloat {
    pub const ZERO: SoftFloat = SoftFloat { mant: 0, exp: 0 };

    pub fn is_zero(self) -> bool {
        self.mant == 0
    }

    /// Exact: every `b <= 53` value fits in an `f64`.
    pub fn to_f64(self) -> f64 {
        self.mant as f64 * 2f64.powi(self.exp)
    }

}

impl std::ops::Neg for SoftFloat {
    type Output = SoftFloat;

    fn neg(self) -> SoftFloat {
        SoftFloat {
            mant: -self.mant,
            exp: self.exp,
        }
    }
}

/// The arithmetic context: mantissa width in bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SoftArith {
    bits: u32,
}

impl SoftArith {
    pub fn new(bits: u32) -> Result<Self> {
        if !(MIN_BITS..=MAX_BITS).contains(&bits) {
            return Err(Error::UnsupportedPrecision { bits });
        }
        Ok(SoftArith { bits })
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    /// Round the exact value `m * 2^e` to `bits` significant bits.
    fn round(self, m: i128, e: i32) -> SoftFloat {
        if m == 0 {
            return SoftFloat::ZERO;
        }
        let negative = m < 0;
        let mut abs = m.unsigned_abs();
        let mut exp = e;
        let len = 128 - abs.leading_zeros();
        let bits = self.bits;
        if len > bits {
            let shift = len - bits;
            let q = abs >> shift;
            let rem = abs & ((1u128 << shift) - 1);
            let half = 1u128 << (shift - 1);
            let mut q = q;
            if rem > half || (rem == half && q & 1 == 1) {
                q += 1;
            }
            exp += shift as i32;
            if q == 1u128 << bits {
                q >>= 1;
                exp += 1;
            }
            abs = q;
        } else if len < bits {
            let shift = bits - len;
            abs <<= shift;
            exp -= shift as i32;
        }
        let mant = abs as i64;
        SoftFloat {
            mant: if negative { -mant } else { mant },
            exp,
        }
    }

    /// Exact conversion; errors when `x` needs more than `bits` bits.
    pub fn from_f64(self, x: f64) -> Result<SoftFloat> {
        if !x.is_finite() {
            return Err(Error::NotRepresentable(format!("{x}")));
        }
        if x == 0.0 {
            return Ok(SoftFloat::ZERO);
        }
        let raw = x.to_bits();
        let raw_exp = ((raw >> 52) & 0x7ff) as i32;
        let frac = (raw & ((1u64 << 52) - 1)) as i128;
        let (m, e) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1i128 << 52), raw_exp - 1075)
        };
        let m = if x < 0.0 { -m } else { m };
        let r = self.round(m, e);
        if r.to_f64() != x {
            return Err(Error::NotRepresentable(format!("{x} at {} bits", self.bits)));
        }
        Ok(r)
    }

    /// Exact value `k * 2^exp`, rounded.
    pub fn from_scaled(self, k: i64, exp: i32) -> SoftFloat {
        self.round(k as i128, exp)
    }

    pub fn mul(self, a: SoftFloat, b: SoftFloat) -> SoftFloat {
        self.round(a.mant as i128 * b.mant as i128, a.exp + b.exp)
    }

    pub fn add(self, a: SoftFloat, b: SoftFloat) -> SoftFloat {
        if a.is_zero() {
            return b;
        }
        if b.is_zero() {
            return a;
        }
        let (hi, lo) = if a.exp >= b.exp { (a, b) } else { (b, a) };
        let d = (hi.exp - lo.exp) as u32;
        // With normalised mantissas |lo| < 2^(hi.exp - d + bits), which for
        // d > bits + 2 is below half the smallest ulp adjacent to hi.
        if d > self.bits + 2 {
            return hi;
        }
        let m = ((hi.mant as i128) << d) + lo.mant as i128;
        self.round(m, lo.exp)
    }

    pub fn sub(self, a: SoftFloat, b: SoftFloat) -> SoftFloat {
        self.add(a, -b)
    }
}

impl Arithmetic for SoftArith {
    type Value = SoftFloat;
    fn add(&self, a: &SoftFloat, b: &SoftFloat) -> SoftFloat {
        SoftArith::add(*self, *a, *b)
    }
    fn sub(&self, a: &SoftFloat, b: &SoftFloat) -> SoftFloat {
        SoftArith::sub(*self, *a, *b)
    }
    fn mul(&self, a: &SoftFloat, b: &SoftFloat) -> SoftFloat {
        SoftArith::mul(*self, *a, *b)
    }
    fn neg(&self, a: &SoftFloat) -> SoftFloat {
        -*a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_out_of_range_precision() {
        assert!(SoftArith::new(1).is_err());
        assert!(SoftArith::new(54).is_err());
        assert!(SoftArith::new(2).is_ok());
    }

    #[test]
    fn rounds_ties_to_even_at_four_bits() {
        let a = SoftArith::new(4).unwrap();
        // 17 = 10001b needs 5 bits; tie between 16 and 18 -> 16 (even mantissa 8).
        assert_eq!(a.from_scaled(17, 0).to_f64(), 16.0);
        // 19 -> tie between 18 and 20 -> 20 (mantissa 10 is even, 9 odd).
        assert_eq!(a.from_scaled(19, 0).to_f64(), 20.0);
        assert_eq!(a.from_scaled(-19, 0).to_f64(), -20.0);
        // 31 rounds up to 32 and renormalises.
        assert_eq!(a.from_scaled(31, 0).to_f64(), 32.0);
    }

    #[test]
    fn from_f64_checks_representability() {
        let a = SoftArith::new(6).unwrap();
        assert!(a.from_f64(0.96875).is_ok()); // 31/32
        assert!(a.from_f64(1.0 + 1.0 / 64.0).is_err());
    }

    #[test]
    fn absorbs_tiny_addend() {
        let a = SoftArith::new(8).unwrap();
        let big = a.from_scaled(128, 0);
        let tiny = a.from_scaled(-1, -40);
        assert_eq!(a.add(big, tiny).to_f64(), 128.0);
    }

    fn hw(x: f64) -> SoftFloat {
        SoftArith::new(53).unwrap().from_f64(x).unwrap()
    }

    proptest! {
        #[test]
        fn matches_hardware_at_53_bits(x in -1e3f64..1e3, y in -1e3f64..1e3, z in -1e-9f64..1e-9) {
            let a = SoftArith::new(53).unwrap();
            prop_assert_eq!(a.add(hw(x), hw(y)).to_f64(), x + y);
            prop_assert_eq!(a.sub(hw(x), hw(z)).to_f64(), x - z);
            prop_assert_eq!(a.mul(hw(x), hw(y)).to_f64(), x * y);
            prop_assert_eq!(a.mul(hw(z), hw(y)).to_f64(), z * y);
        }

        #[test]
        fn error_within_half_ulp(bits in 2u32..=53, k in -(1i64 << 60)..(1i64 << 60)) {
            let a = SoftArith::new(bits).unwrap();
            let r = a.from_scaled(k, 0);
            let err = ((r.mant as i128 * (1i128 << r.exp.max(0))) >> (-r.exp).max(0)) - k as i128;
            // |err| <= 2^(floor(log2 |k|) - bits + 1) / 2 * 2
            let kk = (k as i128).abs();
            if kk > 0 {
                let fl = 127 - kk.leading_zeros() as i32;
                let half_ulp = 2f64.powi(fl - bits as i32);
                prop_assert!((err as f64).abs() <= half_ulp);
            }
        }
    }
}
