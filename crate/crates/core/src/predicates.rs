//! The filtered which-side and insphere predicates.
//!
//! A [`Filter`] evaluates the cofactor-expansion scheme in rounded `b`-bit
//! arithmetic and certifies the sign when the magnitude reaches the threshold
//! derived by [`error_model`](crate::error_model). Anything it cannot certify
//! goes to exact integer evaluation, so [`Filter::decide`] always returns the
//! true sign.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use num_bigint::BigInt;

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::error_model::{
    analyze, build_det, det_expansion_scheme, insphere_scheme, op_count, EvalScheme, NativeF64,
    PrecisionConfig, RoundedBound,
};
use crate::exact::{bareiss_op_count, exact_det_sign, lift_insphere, small_det_sign, IntMatrix, Sign};
use crate::softfloat::{SoftArith, SoftFloat};

/// A point with coordinates `k_i * 2^-pitch`, `|k_i| <= 2^pitch`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GridPoint {
    pub coords: Vec<i64>,
    pub pitch: u32,
}

impl GridPoint {
    pub fn new(coords: Vec<i64>, pitch: u32) -> Result<Self> {
        check_pitch(pitch)?;
        let limit = 1i64 << pitch;
        if let Some(k) = coords.iter().find(|k| k.abs() > limit) {
            return Err(Error::domain(format!("coordinate {k}*2^-{pitch} outside [-1, 1]")));
        }
        Ok(GridPoint { coords, pitch })
    }

    pub fn dimension(&self) -> usize {
        self.coords.len()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        let s = 2f64.powi(-(self.pitch as i32));
        self.coords.iter().map(|&k| k as f64 * s).collect()
    }
}

fn check_pitch(pitch: u32) -> Result<()> {
    if pitch > 62 {
        return Err(Error::domain(format!("pitch exponent {pitch} exceeds 62")));
    }
    Ok(())
}

/// A set of points sharing one dimension and one pitch, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PointSet {
    delta: usize,
    pitch: u32,
    coords: Vec<i64>,
}

impl PointSet {
    pub fn new(delta: usize, pitch: u32, coords: Vec<i64>) -> Result<Self> {
        check_pitch(pitch)?;
        if delta == 0 || !coords.len().is_multiple_of(delta) {
            return Err(Error::domain(format!(
                "{} coordinates do not split into points of dimension {delta}",
                coords.len()
            )));
        }
        let limit = 1i64 << pitch;
        if let Some(k) = coords.iter().find(|k| k.abs() > limit) {
            return Err(Error::domain(format!("coordinate {k}*2^-{pitch} outside [-1, 1]")));
        }
        Ok(PointSet { delta, pitch, coords })
    }

    pub fn from_points(points: &[GridPoint]) -> Result<Self> {
        let first = points.first().ok_or_else(|| Error::domain("empty point set"))?;
        let mut coords = Vec::with_capacity(points.len() * first.dimension());
        for p in points {
            if p.dimension() != first.dimension() || p.pitch != first.pitch {
                return Err(Error::domain("points differ in dimension or pitch"));
            }
            coords.extend_from_slice(&p.coords);
        }
        Self::new(first.dimension(), first.pitch, coords)
    }

    /// Points given as floats, each an exact multiple of `2^-pitch`.
    pub fn from_f64(delta: usize, pitch: u32, values: &[f64]) -> Result<Self> {
        check_pitch(pitch)?;
        let scale = 2f64.powi(pitch as i32);
        let coords = values
            .iter()
            .map(|&x| {
                let k = x * scale;
                if k.fract() != 0.0 || !k.is_finite() {
                    Err(Error::NotRepresentable(format!("{x} on pitch 2^-{pitch}")))
                } else {
                    Ok(k as i64)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(delta, pitch, coords)
    }

    pub fn dimension(&self) -> usize {
        self.delta
    }

    pub fn pitch(&self) -> u32 {
        self.pitch
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.delta
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[i64] {
        &self.coords[i * self.delta..(i + 1) * self.delta]
    }

    /// All coordinates, row-major, as integers of the pitch.
    pub fn raw(&self) -> &[i64] {
        &self.coords
    }

    pub fn to_f64(&self) -> Vec<f64> {
        let s = 2f64.powi(-(self.pitch as i32));
        self.coords.iter().map(|&k| k as f64 * s).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PredicateKind {
    WhichSide,
    Insphere,
}

impl PredicateKind {
    /// Points an instance of dimension `delta` needs (the origin is implicit).
    pub fn point_count(self, delta: usize) -> usize {
        match self {
            PredicateKind::WhichSide => delta,
            PredicateKind::Insphere => delta + 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PredicateKind::WhichSide => "whichside",
            PredicateKind::Insphere => "insphere",
        }
    }

    /// Order of the determinant evaluated for dimension `delta`.
    pub fn order(self, delta: usize) -> usize {
        self.point_count(delta)
    }

    /// The evaluation scheme with unit leaves.
    pub fn scheme(self, delta: usize) -> Result<EvalScheme> {
        match self {
            PredicateKind::WhichSide if delta == 1 => build_det(1, RoundedBound::unit()),
            PredicateKind::WhichSide => det_expansion_scheme(delta, RoundedBound::unit()),
            PredicateKind::Insphere => insphere_scheme(delta, RoundedBound::unit()),
        }
    }

    /// Exact sign of the instance's determinant.
    pub fn exact_sign(self, points: &PointSet) -> Result<Sign> {
        let delta = points.dimension();
        let n = self.order(delta);
        check_count(self, points)?;
        match self {
            PredicateKind::WhichSide => {
                if let Some(s) = small_det_sign(n, points.raw()) {
                    return Ok(s);
                }
                let entries = points.raw().iter().map(|&k| BigInt::from(k)).collect();
                Ok(exact_det_sign(&IntMatrix::from_entries(entries)?))
            }
            PredicateKind::Insphere => {
                let pts: Vec<Vec<i64>> = (0..n).map(|i| points.point(i).to_vec()).collect();
                Ok(exact_det_sign(&lift_insphere(delta, &pts, points.pitch())?))
            }
        }
    }
}

fn check_count(kind: PredicateKind, points: &PointSet) -> Result<()> {
    let expected = kind.point_count(points.dimension());
    if points.len() != expected {
        return Err(Error::PointCount {
            expected,
            got: points.len(),
        });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PredicateInstance {
    kind: PredicateKind,
    points: PointSet,
}

impl PredicateInstance {
    pub fn new(kind: PredicateKind, points: PointSet) -> Result<Self> {
        check_count(kind, &points)?;
        Ok(PredicateInstance { kind, points })
    }

    pub fn kind(&self) -> PredicateKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.points.dimension()
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FilterVerdict {
    Certified { sign: Sign, value: f64 },
    Uncertain { value: f64, threshold: Dyadic },
}

impl FilterVerdict {
    pub fn is_certified(&self) -> bool {
        matches!(self, FilterVerdict::Certified { .. })
    }

    pub fn value(&self) -> f64 {
        match self {
            FilterVerdict::Certified { value, .. } | FilterVerdict::Uncertain { value, .. } => *value,
        }
    }
}

/// `|value| >= threshold` certifies the sign of `value`; equality certifies.
pub fn certify(value: f64, threshold: &Dyadic) -> FilterVerdict {
    let certified = match Dyadic::from_f64(value) {
        Some(v) => v.abs() >= *threshold,
        None => false,
    };
    if certified && value != 0.0 {
        FilterVerdict::Certified {
            sign: Sign::of_f64(value),
            value,
        }
    } else {
        FilterVerdict::Uncertain {
            value,
            threshold: threshold.clone(),
        }
    }
}

/// Which stage of the cascade produced a sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stage {
    Rounded,
    Exact,
}

#[derive(Clone, Copy, Debug)]
enum Evaluator {
    Native,
    Soft(SoftArith),
}

/// A ready-to-run filter for one predicate, dimension and precision.
#[derive(Clone, Debug)]
pub struct Filter {
    kind: PredicateKind,
    delta: usize,
    cfg: PrecisionConfig,
    scheme: EvalScheme,
    threshold: Dyadic,
    /// Smallest double not below `threshold`; comparing a double against it
    /// is equivalent to comparing against `threshold` exactly.
    threshold_f64: f64,
    evaluator: Evaluator,
}

impl Filter {
    /// Hardware arithmetic at 53 bits, software rounding below.
    pub fn new(kind: PredicateKind, delta: usize, cfg: PrecisionConfig) -> Result<Self> {
        let evaluator = if cfg.bits() == 53 {
            Evaluator::Native
        } else {
            Evaluator::Soft(SoftArith::new(cfg.bits())?)
        };
        Self::build(kind, delta, cfg, evaluator)
    }

    /// Always use software rounding, including at 53 bits.
    pub fn software(kind: PredicateKind, delta: usize, cfg: PrecisionConfig) -> Result<Self> {
        let soft = SoftArith::new(cfg.bits())?;
        Self::build(kind, delta, cfg, Evaluator::Soft(soft))
    }

    fn build(
        kind: PredicateKind,
        delta: usize,
        cfg: PrecisionConfig,
        evaluator: Evaluator,
    ) -> Result<Self> {
        let scheme = kind.scheme(delta)?;
        let threshold = analyze(&scheme, &cfg).error().clone();
        let threshold_f64 = threshold.to_f64_up();
        Ok(Filter {
            kind,
            delta,
            cfg,
            scheme,
            threshold,
            threshold_f64,
            evaluator,
        })
    }

    pub fn kind(&self) -> PredicateKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.delta
    }

    pub fn config(&self) -> &PrecisionConfig {
        &self.cfg
    }

    pub fn threshold(&self) -> &Dyadic {
        &self.threshold
    }

    pub fn scheme(&self) -> &EvalScheme {
        &self.scheme
    }

    fn check(&self, points: &PointSet) -> Result<()> {
        if points.dimension() != self.delta {
            return Err(Error::domain(format!(
                "points have dimension {}, filter expects {}",
                points.dimension(),
                self.delta
            )));
        }
        check_count(self.kind, points)
    }

    /// The scheme evaluated with rounding after every operation.
    pub fn eval_rounded(&self, points: &PointSet) -> Result<f64> {
        self.check(points)?;
        let p = -(points.pitch() as i32);
        match self.evaluator {
            Evaluator::Native => {
                let mut inputs = Vec::with_capacity(points.raw().len());
                for &k in points.raw() {
                    if !fits_bits(k, 53) {
                        return Err(Error::NotRepresentable(format!("{k}*2^{p} at 53 bits")));
                    }
                    inputs.push(k as f64 * 2f64.powi(p));
                }
                Ok(self.scheme.evaluate(&NativeF64, &inputs))
            }
            Evaluator::Soft(a) => {
                let mut inputs: Vec<SoftFloat> = Vec::with_capacity(points.raw().len());
                for &k in points.raw() {
                    if !fits_bits(k, a.bits()) {
                        return Err(Error::NotRepresentable(format!(
                            "{k}*2^{p} at {} bits",
                            a.bits()
                        )));
                    }
                    inputs.push(a.from_scaled(k, p));
                }
                Ok(self.scheme.evaluate(&a, &inputs).to_f64())
            }
        }
    }

    pub fn classify(&self, points: &PointSet) -> Result<FilterVerdict> {
        let value = self.eval_rounded(points)?;
        if value.abs() >= self.threshold_f64 && value != 0.0 {
            Ok(FilterVerdict::Certified {
                sign: Sign::of_f64(value),
                value,
            })
        } else {
            Ok(FilterVerdict::Uncertain {
                value,
                threshold: self.threshold.clone(),
            })
        }
    }

    /// The full cascade: the certified rounded sign, or the exact sign.
    pub fn decide(&self, points: &PointSet) -> Result<(Sign, Stage)> {
        match self.classify(points)? {
            FilterVerdict::Certified { sign, .. } => Ok((sign, Stage::Rounded)),
            FilterVerdict::Uncertain { .. } => Ok((self.kind.exact_sign(points)?, Stage::Exact)),
        }
    }
}

/// Whether `k` has at most `bits` significant bits.
fn fits_bits(k: i64, bits: u32) -> bool {
    if k == 0 {
        return true;
    }
    let a = k.unsigned_abs();
    let span = 64 - a.leading_zeros() - a.trailing_zeros();
    span <= bits
}

/// Rounded evaluation of one instance at `cfg`.
pub fn eval_rounded(instance: &PredicateInstance, cfg: &PrecisionConfig) -> Result<f64> {
    Filter::new(instance.kind(), instance.dimension(), *cfg)?.eval_rounded(instance.points())
}

/// Sign of the which-side determinant of `delta` points.
pub fn whichside(points: &PointSet, cfg: &PrecisionConfig) -> Result<Sign> {
    let f = Filter::new(PredicateKind::WhichSide, points.dimension(), *cfg)?;
    Ok(f.decide(points)?.0)
}

/// Sign of the lifted insphere determinant of `delta + 1` points.
pub fn insphere(points: &PointSet, cfg: &PrecisionConfig) -> Result<Sign> {
    let f = Filter::new(PredicateKind::Insphere, points.dimension(), *cfg)?;
    Ok(f.decide(points)?.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterStats {
    pub trials: u64,
    pub uncertain: u64,
    pub failure_rate: f64,
    /// Wilson score interval at three standard deviations.
    pub confidence_interval: (f64, f64),
    /// Rounded-stage operations per trial.
    pub mean_rounded_ops: f64,
    /// Exact-stage operations per trial (Bareiss count, paid on failures).
    pub mean_exact_ops: f64,
}

/// Wilson score interval for `hits` successes in `n` trials.
pub fn wilson_interval(hits: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Run the filter over a stream of instances and count failures.
pub fn filter_stats<I>(instances: I, cfg: &PrecisionConfig) -> Result<FilterStats>
where
    I: IntoIterator<Item = PredicateInstance>,
{
    let mut filters: HashMap<(PredicateKind, usize), Filter> = HashMap::new();
    let mut trials = 0u64;
    let mut uncertain = 0u64;
    let mut rounded_ops = 0u64;
    let mut exact_ops = 0u64;
    for inst in instances {
        let key = (inst.kind(), inst.dimension());
        let f = match filters.entry(key) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => e.insert(Filter::new(key.0, key.1, *cfg)?),
        };
        trials += 1;
        rounded_ops += f.scheme().op_count();
        if let (_, Stage::Exact) = f.decide(inst.points())? {
            uncertain += 1;
            exact_ops += bareiss_op_count(inst.kind().order(inst.dimension()));
        }
    }
    if trials == 0 {
        return Err(Error::EmptyStream);
    }
    let n = trials as f64;
    Ok(FilterStats {
        trials,
        uncertain,
        failure_rate: uncertain as f64 / n,
        confidence_interval: wilson_interval(uncertain, trials, 3.0),
        mean_rounded_ops: rounded_ops as f64 / n,
        mean_exact_ops: exact_ops as f64 / n,
    })
}

/// Rounded-stage cost of the which-side filter in dimension `delta`.
pub fn rounded_cost(delta: usize) -> u64 {
    op_count(delta)
}
