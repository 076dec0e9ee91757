//! Static forward-error analysis of rounded `b`-bit evaluation.
//!
//! A [`RoundedBound`] `P{M, m}` describes every computed value whose exact
//! counterpart has magnitude at most `M` and whose accumulated rounding error
//! is at most `m`. Two rules propagate bounds through an expression:
//!
//! ```text
//! P{M1,m1} + P{M2,m2} -> P{M1+M2, h*ov(M1+M2) + m1 + m2}
//! P{M1,m1} * P{M2,m2} -> P{M1*M2, h*ov(M1*M2) + m1*M2 + m2*M1}
//! ```
//!
//! with `h = 2^(-b-1)` and `ov` a power of two covering the magnitude (see
//! [`MagnitudeRule`]). Everything is computed with [`Dyadic`] values, so the
//! analyzer itself never rounds.

mod scheme;
mod table;

pub use scheme::{
    det_expansion_scheme, insphere_scheme, Arithmetic, BinOp, EvalScheme, ExactArith, NativeF64,
    Node, NodeId, SchemeBuilder,
};
pub(crate) use scheme::build_det;
pub use table::{threshold_table, write_threshold_csv, write_threshold_json, ThresholdRow};

use num_bigint::BigInt;

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};

/// How the rounding term turns a magnitude bound into a power of two.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MagnitudeRule {
    /// `2^ceil(log2 M)`: the smallest power of two not below `M`. Every value
    /// of magnitude at most `M` rounds with error at most `h * 2^ceil(log2 M)`,
    /// so thresholds derived with this rule are sound.
    Ceil,
    /// `2^round(log2 M)`. This is the rule under which the published
    /// threshold coefficients come out exactly; it under-covers magnitudes
    /// between `2^(k-1/2)` and `2^k`, so use it for reproduction only.
    Nearest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrecisionConfig {
    bits: u32,
    rule: MagnitudeRule,
}

impl PrecisionConfig {
    /// Sound configuration with `bits` mantissa bits.
    pub fn new(bits: u32) -> Result<Self> {
        Self::with_rule(bits, MagnitudeRule::Ceil)
    }

    /// Configuration reproducing the published threshold table.
    pub fn published(bits: u32) -> Result<Self> {
        Self::with_rule(bits, MagnitudeRule::Nearest)
    }

    pub fn with_rule(bits: u32, rule: MagnitudeRule) -> Result<Self> {
        if bits < 2 {
            return Err(Error::UnsupportedPrecision { bits });
        }
        Ok(PrecisionConfig { bits, rule })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn rule(&self) -> MagnitudeRule {
        self.rule
    }

    /// `2^(-b-1)`, half an ulp of a value in `[1/2, 1)`.
    pub fn half_ulp(&self) -> Dyadic {
        Dyadic::pow2(-(self.bits as i64) - 1)
    }

    /// `2^-b`, the unit in which threshold coefficients are expressed.
    pub fn unit(&self) -> Dyadic {
        Dyadic::pow2(-(self.bits as i64))
    }

    /// Rounding term `h * ov(M)`; zero for `M = 0`.
    pub fn rounding_term(&self, magnitude: &Dyadic) -> Dyadic {
        let ov = match self.rule {
            MagnitudeRule::Ceil => magnitude.pow2_ceil(),
            MagnitudeRule::Nearest => magnitude.pow2_nearest(),
        };
        match ov {
            Some(p) => p.mul_pow2(-(self.bits as i64) - 1),
            None => Dyadic::zero(),
        }
    }
}

/// `P{M, m}` with `M, m >= 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RoundedBound {
    magnitude: Dyadic,
    error: Dyadic,
}

impl RoundedBound {
    pub fn new(magnitude: Dyadic, error: Dyadic) -> Result<Self> {
        if magnitude.is_negative() || error.is_negative() {
            return Err(Error::domain(format!(
                "bound P{{{magnitude}, {error}}} has a negative component"
            )));
        }
        Ok(RoundedBound { magnitude, error })
    }

    /// `P{M, 0}`: an exactly known input of magnitude at most `M`.
    pub fn exact(magnitude: Dyadic) -> Result<Self> {
        Self::new(magnitude, Dyadic::zero())
    }

    /// `P{1, 0}`, the bound for error-free coordinates in `[-1, 1]`.
    pub fn unit() -> Self {
        RoundedBound {
            magnitude: Dyadic::one(),
            error: Dyadic::zero(),
        }
    }

    pub fn magnitude(&self) -> &Dyadic {
        &self.magnitude
    }

    pub fn error(&self) -> &Dyadic {
        &self.error
    }

    /// The error divided by `2^-b`.
    pub fn error_coefficient(&self, cfg: &PrecisionConfig) -> Dyadic {
        self.error.mul_pow2(cfg.bits as i64)
    }
}

/// Smallest power of two `>= m`.
pub fn pow2_ceil(m: &Dyadic) -> Result<Dyadic> {
    m.pow2_ceil()
        .ok_or_else(|| Error::domain(format!("pow2_ceil needs a positive argument, got {m}")))
}

pub fn rb_add(a: &RoundedBound, b: &RoundedBound, cfg: &PrecisionConfig) -> RoundedBound {
    combine(BinOp::Add, a, b, None, cfg)
}

pub fn rb_mul(a: &RoundedBound, b: &RoundedBound, cfg: &PrecisionConfig) -> RoundedBound {
    combine(BinOp::Mul, a, b, None, cfg)
}

/// Replace the magnitude with a known tighter bound, keeping the error.
pub fn rb_cap(a: &RoundedBound, tighter: &Dyadic) -> Result<RoundedBound> {
    if !tighter.is_positive() {
        return Err(Error::domain(format!("cap must be positive, got {tighter}")));
    }
    Ok(RoundedBound {
        magnitude: a.magnitude.clone().min(tighter.clone()),
        error: a.error.clone(),
    })
}

/// One node of the calculus. A cap tightens the exact-result magnitude
/// before the rounding term is taken from it, which is how the determinant
/// bounds enter the analysis.
pub(crate) fn combine(
    op: BinOp,
    a: &RoundedBound,
    b: &RoundedBound,
    cap: Option<&Dyadic>,
    cfg: &PrecisionConfig,
) -> RoundedBound {
    let (magnitude, propagated) = match op {
        BinOp::Add | BinOp::Sub => (&a.magnitude + &b.magnitude, &a.error + &b.error),
        BinOp::Mul => (
            &a.magnitude * &b.magnitude,
            &a.error * &b.magnitude + &b.error * &a.magnitude,
        ),
    };
    let magnitude = match cap {
        Some(c) => magnitude.min(c.clone()),
        None => magnitude,
    };
    let error = cfg.rounding_term(&magnitude) + propagated;
    RoundedBound { magnitude, error }
}

/// Known bound on `|det|` for a `delta x delta` matrix with entries in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HadamardCap {
    pub value: Dyadic,
    /// `false` when the value is the generic `ceil(sqrt(delta^delta))`.
    pub tabulated: bool,
}

const HADAMARD_TABLE: [i64; 8] = [1, 2, 4, 16, 48, 160, 576, 4096];

pub fn hadamard_cap(delta: usize) -> HadamardCap {
    if (1..=8).contains(&delta) {
        return HadamardCap {
            value: Dyadic::from_int(HADAMARD_TABLE[delta - 1]),
            tabulated: true,
        };
    }
    let d = BigInt::from(delta);
    let power = num_traits::pow(d, delta);
    HadamardCap {
        value: Dyadic::from_int(Dyadic::ceil_sqrt_integer(&power)),
        tabulated: false,
    }
}

/// `(delta - 1)(2^delta - 1)`: add/mul count of the memoised expansion.
pub fn op_count(delta: usize) -> u64 {
    if delta == 0 {
        return 0;
    }
    (delta as u64 - 1) * ((1u64 << delta) - 1)
}

/// Fold the calculus bottom-up over `scheme`.
pub fn analyze(scheme: &EvalScheme, cfg: &PrecisionConfig) -> RoundedBound {
    let bounds = scheme.propagate(cfg, |slot| scheme.leaf_bound(slot).clone());
    bounds[scheme.root()].clone()
}

/// Analysis for inputs that already carry an error of at most `eps_in`.
///
/// For a determinant of order `n` the result is `analyze(scheme)` with the
/// error increased by `n! * eps_in`. The increase is the first-order effect of
/// perturbing one column; it presumes `eps_in` is small enough not to move any
/// node's magnitude class, which is checked by propagating `P{M, eps_in}`
/// leaves through the whole scheme and comparing `2^round(log2 M)` with
/// `2^round(log2 (M + m))` at every node.
pub fn analyze_inexact_inputs(
    scheme: &EvalScheme,
    eps_in: &Dyadic,
    cfg: &PrecisionConfig,
) -> Result<RoundedBound> {
    if eps_in.is_negative() {
        return Err(Error::domain(format!("input error must be nonnegative, got {eps_in}")));
    }
    let base = analyze(scheme, cfg);
    if eps_in.is_zero() {
        return Ok(base);
    }
    let perturbed = scheme.propagate(cfg, |slot| {
        let leaf = scheme.leaf_bound(slot);
        RoundedBound {
            magnitude: leaf.magnitude.clone(),
            error: &leaf.error + eps_in,
        }
    });
    for (id, rb) in perturbed.iter().enumerate() {
        if rb.magnitude.is_zero() {
            continue;
        }
        let lo = rb.magnitude.pow2_nearest();
        let hi = (&rb.magnitude + &rb.error).pow2_nearest();
        if lo != hi {
            return Err(Error::InputErrorTooLarge {
                eps: eps_in.to_string(),
                detail: format!(
                    "node {id}: magnitude {} with error {} crosses a power-of-two class",
                    rb.magnitude, rb.error
                ),
            });
        }
    }
    let factorial: BigInt = (1..=scheme.order() as u64).map(BigInt::from).product();
    Ok(RoundedBound {
        magnitude: base.magnitude,
        error: base.error + Dyadic::from_int(factorial) * eps_in,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> PrecisionConfig {
        PrecisionConfig::new(20).unwrap()
    }

    fn u(k: i64, cfg: &PrecisionConfig) -> Dyadic {
        Dyadic::from_int(k) * cfg.unit()
    }

    fn rb(m: i64, e: Dyadic) -> RoundedBound {
        RoundedBound::new(Dyadic::from_int(m), e).unwrap()
    }

    #[test]
    fn pow2_ceil_examples() {
        assert_eq!(pow2_ceil(&Dyadic::from_int(1)).unwrap(), Dyadic::from_int(1));
        assert_eq!(pow2_ceil(&Dyadic::from_int(3)).unwrap(), Dyadic::from_int(4));
        assert_eq!(pow2_ceil(&Dyadic::from_int(2)).unwrap(), Dyadic::from_int(2));
        assert!(pow2_ceil(&Dyadic::zero()).is_err());
        assert!(pow2_ceil(&Dyadic::from_int(-1)).is_err());
    }

    #[test]
    fn precision_needs_two_bits() {
        assert!(PrecisionConfig::new(1).is_err());
        assert!(PrecisionConfig::new(2).is_ok());
    }

    #[test]
    fn add_rule() {
        let c = cfg();
        let h = c.half_ulp();
        let s = rb_add(&rb(1, h.clone()), &rb(1, h), &c);
        assert_eq!(s, rb(2, u(2, &c)));

        let s = rb_add(&RoundedBound::unit(), &rb(0, Dyadic::zero()), &c);
        assert_eq!(s, rb(1, c.half_ulp()));
    }

    #[test]
    fn capped_add_gives_thirteen() {
        // (x D2 + x D2) + x D2 with the order-3 cap applied to the final sum.
        let c = cfg();
        let lhs = rb(4, u(8, &c));
        let rhs = rb(2, u(3, &c));
        let cap = hadamard_cap(3).value;
        let s = combine(BinOp::Add, &lhs, &rhs, Some(&cap), &c);
        assert_eq!(s, rb(4, u(13, &c)));
    }

    #[test]
    fn mul_rule() {
        let c = cfg();
        let p = rb_mul(&RoundedBound::unit(), &RoundedBound::unit(), &c);
        assert_eq!(p, rb(1, c.half_ulp()));

        // 2^(-b-1) * 2 + 2^(-b+1) * 1 = 3 * 2^-b
        let p = rb_mul(&RoundedBound::unit(), &rb(2, u(2, &c)), &c);
        assert_eq!(p, rb(2, u(3, &c)));

        let p = rb_mul(&rb(5, Dyadic::zero()), &RoundedBound::unit(), &c);
        assert_eq!(p, rb(5, c.half_ulp() * Dyadic::from_int(8)));
    }

    #[test]
    fn cap_examples() {
        let e = Dyadic::new(7, -30);
        assert_eq!(
            rb_cap(&rb(6, e.clone()), &Dyadic::from_int(4)).unwrap(),
            rb(4, e.clone())
        );
        assert_eq!(
            rb_cap(&rb(2, e.clone()), &Dyadic::from_int(4)).unwrap(),
            rb(2, e.clone())
        );
        assert_eq!(
            rb_cap(&rb(240, e.clone()), &Dyadic::from_int(160)).unwrap(),
            rb(160, e.clone())
        );
        assert!(rb_cap(&rb(2, e), &Dyadic::zero()).is_err());
    }

    #[test]
    fn hadamard_table_and_fallback() {
        assert_eq!(hadamard_cap(4).value, Dyadic::from_int(16));
        assert_eq!(hadamard_cap(1).value, Dyadic::from_int(1));
        assert_eq!(hadamard_cap(8).value, Dyadic::from_int(4096));
        assert!(hadamard_cap(8).tabulated);
        // sqrt(9^9) = 19683
        let nine = hadamard_cap(9);
        assert!(!nine.tabulated);
        assert_eq!(nine.value, Dyadic::from_int(19683));
        // sqrt(10^10) = 100000
        assert_eq!(hadamard_cap(10).value, Dyadic::from_int(100000));
    }

    #[test]
    fn op_count_formula() {
        let expected = [0u64, 3, 14, 45, 124, 315, 762, 1785];
        for (i, &e) in expected.iter().enumerate() {
            assert_eq!(op_count(i + 1), e);
        }
    }

    #[test]
    fn rounding_term_zero_for_zero_magnitude() {
        assert!(cfg().rounding_term(&Dyadic::zero()).is_zero());
    }
}
