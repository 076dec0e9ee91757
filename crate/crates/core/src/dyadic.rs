//! Exact dyadic rationals `mantissa * 2^exponent`.
//!
//! Every quantity produced by the error calculus, every grid coordinate and
//! every floating-point value is dyadic, so this type lets the crate compare
//! and combine them without rounding.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign as BigSign};
use num_traits::{One, Signed, ToPrimitive, Zero};

/// `mantissa * 2^exponent`, normalised so the mantissa is odd (or the value is
/// zero with exponent 0). Normalisation makes derived equality structural.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    mantissa: BigInt,
    exponent: i64,
}

impl Dyadic {
    pub fn new(mantissa: impl Into<BigInt>, exponent: i64) -> Self {
        let mut d = Dyadic {
            mantissa: mantissa.into(),
            exponent,
        };
        d.normalize();
        d
    }

    pub fn zero() -> Self {
        Dyadic {
            mantissa: BigInt::zero(),
            exponent: 0,
        }
    }

    pub fn one() -> Self {
        Self::pow2(0)
    }

    pub fn from_int(v: impl Into<BigInt>) -> Self {
        Self::new(v, 0)
    }

    /// `2^k`.
    pub fn pow2(k: i64) -> Self {
        Dyadic {
            mantissa: BigInt::one(),
            exponent: k,
        }
    }

    /// Exact conversion; `None` for NaN and infinities.
    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        if x == 0.0 {
            return Some(Self::zero());
        }
        let bits = x.to_bits();
        let negative = bits >> 63 == 1;
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), raw_exp - 1075)
        };
        let m = BigInt::from(m);
        Some(Self::new(if negative { -m } else { m }, e))
    }

    fn normalize(&mut self) {
        if self.mantissa.is_zero() {
            self.exponent = 0;
            return;
        }
        let tz = self.mantissa.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            self.mantissa >>= tz;
            self.exponent += tz as i64;
        }
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.mantissa.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.mantissa.is_negative()
    }

    pub fn signum(&self) -> i32 {
        match self.mantissa.sign() {
            BigSign::Minus => -1,
            BigSign::NoSign => 0,
            BigSign::Plus => 1,
        }
    }

    pub fn abs(&self) -> Self {
        Dyadic {
            mantissa: self.mantissa.abs(),
            exponent: self.exponent,
        }
    }

    /// Multiply by `2^k`, exactly.
    pub fn mul_pow2(&self, k: i64) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        Dyadic {
            mantissa: self.mantissa.clone(),
            exponent: self.exponent + k,
        }
    }

    /// `Some(n)` when the value is an integer.
    pub fn to_integer(&self) -> Option<BigInt> {
        if self.exponent >= 0 {
            Some(&self.mantissa << (self.exponent as u64))
        } else {
            None
        }
    }

    pub fn is_power_of_two(&self) -> bool {
        self.mantissa.is_one()
    }

    /// `floor(log2 |x|)` for nonzero `x`.
    pub fn floor_log2(&self) -> Option<i64> {
        if self.is_zero() {
            return None;
        }
        Some(self.mantissa.bits() as i64 - 1 + self.exponent)
    }

    /// Smallest power of two `>= x`, for `x > 0`.
    pub fn pow2_ceil(&self) -> Option<Self> {
        if !self.is_positive() {
            return None;
        }
        let fl = self.floor_log2()?;
        Some(if self.is_power_of_two() {
            Self::pow2(fl)
        } else {
            Self::pow2(fl + 1)
        })
    }

    /// `2^round(log2 x)`, for `x > 0`. Ties are impossible: the geometric
    /// midpoint `2^(k-1/2)` is irrational.
    pub fn pow2_nearest(&self) -> Option<Self> {
        let up = self.pow2_ceil()?;
        if &up == self {
            return Some(up);
        }
        let k = up.exponent;
        // x >= 2^(k-1) * sqrt(2)  <=>  x^2 >= 2^(2k-1)
        let sq = self * self;
        Some(if sq >= Self::pow2(2 * k - 1) {
            up
        } else {
            Self::pow2(k - 1)
        })
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    /// Round to the nearest `f64`, ties to even. Magnitudes in this crate are
    /// far from the subnormal and overflow ranges; those are not modelled.
    pub fn to_f64(&self) -> f64 {
        let (q, e) = round_mantissa(&self.mantissa.abs(), self.exponent, 53);
        let v = scale_pow2(q as f64, e);
        if self.is_negative() {
            -v
        } else {
            v
        }
    }

    /// Round toward `+inf`; used where a threshold must not shrink.
    pub fn to_f64_up(&self) -> f64 {
        let v = self.to_f64();
        match Dyadic::from_f64(v) {
            Some(back) if back < *self => v.next_up(),
            _ => v,
        }
    }

    /// Integer square root of a nonnegative integer-valued dyadic, rounded up.
    pub(crate) fn ceil_sqrt_integer(n: &BigInt) -> BigInt {
        let s = n.sqrt();
        if &(&s * &s) < n {
            s + 1
        } else {
            s
        }
    }
}

/// Round a nonnegative mantissa to `bits` significant bits, ties to even.
/// Returns the rounded integer (at most 2^bits) and its exponent.
fn round_mantissa(m: &BigInt, e: i64, bits: u64) -> (u64, i64) {
    let len = m.bits();
    if len <= bits {
        return (m.to_u64().unwrap_or(0), e);
    }
    let shift = len - bits;
    let q: BigInt = m >> shift;
    let rem: BigInt = m - (&q << shift);
    let half = BigInt::one() << (shift - 1);
    let mut q = q.to_u64().expect("rounded mantissa fits in 64 bits");
    match rem.cmp(&half) {
        Ordering::Greater => q += 1,
        Ordering::Equal if q & 1 == 1 => q += 1,
        _ => {}
    }
    (q, e + shift as i64)
}

fn scale_pow2(mut v: f64, mut e: i64) -> f64 {
    while e > 1000 {
        v *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        v *= 2f64.powi(-1000);
        e += 1000;
    }
    v * 2f64.powi(e as i32)
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.signum().cmp(&other.signum()) {
            Ordering::Equal => (self - other).signum().cmp(&0),
            ord => ord,
        }
    }
}

impl Add for &Dyadic {
    type Output = Dyadic;

    fn add(self, rhs: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let e = self.exponent.min(rhs.exponent);
        let a = &self.mantissa << ((self.exponent - e) as u64);
        let b = &rhs.mantissa << ((rhs.exponent - e) as u64);
        Dyadic::new(a + b, e)
    }
}

impl Sub for &Dyadic {
    type Output = Dyadic;

    fn sub(self, rhs: &Dyadic) -> Dyadic {
        self + &(-rhs)
    }
}

impl Mul for &Dyadic {
    type Output = Dyadic;

    fn mul(self, rhs: &Dyadic) -> Dyadic {
        Dyadic::new(&self.mantissa * &rhs.mantissa, self.exponent + rhs.exponent)
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;

    fn neg(self) -> Dyadic {
        Dyadic {
            mantissa: -&self.mantissa,
            exponent: self.exponent,
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Dyadic {
            type Output = Dyadic;
            fn $m(self, rhs: Dyadic) -> Dyadic {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Dyadic> for Dyadic {
            type Output = Dyadic;
            fn $m(self, rhs: &Dyadic) -> Dyadic {
                (&self).$m(rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Dyadic {
    type Output = Dyadic;

    fn neg(self) -> Dyadic {
        -&self
    }
}

impl From<i64> for Dyadic {
    fn from(v: i64) -> Self {
        Dyadic::from_int(v)
    }
}

impl From<BigInt> for Dyadic {
    fn from(v: BigInt) -> Self {
        Dyadic::from_int(v)
    }
}

/// Integers print as integers; everything else as `m*2^e`.
impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_integer() {
            Some(n) => write!(f, "{n}"),
            None => write!(f, "{}*2^{}", self.mantissa, self.exponent),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(m: i64, e: i64) -> Dyadic {
        Dyadic::new(m, e)
    }

    #[test]
    fn normalizes_trailing_zeros() {
        assert_eq!(d(12, 0), d(3, 2));
        assert_eq!(d(0, 17), Dyadic::zero());
        assert_eq!(d(8, -3), Dyadic::one());
    }

    #[test]
    fn pow2_ceil_and_nearest() {
        assert_eq!(Dyadic::from_int(1).pow2_ceil().unwrap(), Dyadic::from_int(1));
        assert_eq!(Dyadic::from_int(3).pow2_ceil().unwrap(), Dyadic::from_int(4));
        assert_eq!(Dyadic::from_int(2).pow2_ceil().unwrap(), Dyadic::from_int(2));
        assert_eq!(Dyadic::from_int(48).pow2_ceil().unwrap(), Dyadic::from_int(64));
        assert_eq!(Dyadic::from_int(160).pow2_nearest().unwrap(), Dyadic::from_int(128));
        assert_eq!(Dyadic::from_int(48).pow2_nearest().unwrap(), Dyadic::from_int(64));
        assert_eq!(Dyadic::from_int(576).pow2_nearest().unwrap(), Dyadic::from_int(512));
        assert_eq!(d(3, -4).pow2_ceil().unwrap(), d(1, -2));
        assert!(Dyadic::zero().pow2_ceil().is_none());
        assert!(Dyadic::from_int(-3).pow2_ceil().is_none());
    }

    #[test]
    fn to_f64_rounds_half_even() {
        // 2^53 + 1 is a tie between 2^53 and 2^53 + 2.
        let tie = Dyadic::from_int((1i64 << 53) + 1);
        assert_eq!(tie.to_f64(), 9007199254740992.0);
        let tie_up = Dyadic::from_int((1i64 << 53) + 3);
        assert_eq!(tie_up.to_f64(), 9007199254740996.0);
        assert_eq!(d(13, -53).to_f64(), 13.0 * 2f64.powi(-53));
        assert_eq!(Dyadic::from_int((1i64 << 53) + 1).to_f64_up(), 9007199254740994.0);
    }

    proptest! {
        #[test]
        fn f64_round_trip(x in proptest::num::f64::NORMAL) {
            let dx = Dyadic::from_f64(x).unwrap();
            prop_assert_eq!(dx.to_f64(), x);
        }

        #[test]
        fn arithmetic_matches_exact_f64(a in -1e6f64..1e6, b in -1e6f64..1e6) {
            // Products of two f64 are exact in dyadic arithmetic; their rounded
            // value must equal the hardware product.
            let da = Dyadic::from_f64(a).unwrap();
            let db = Dyadic::from_f64(b).unwrap();
            prop_assert_eq!((&da * &db).to_f64(), a * b);
            prop_assert_eq!((&da + &db).to_f64(), a + b);
            prop_assert_eq!((&da - &db).to_f64(), a - b);
            prop_assert_eq!(da.cmp(&db), a.partial_cmp(&b).unwrap());
        }
    }
}
