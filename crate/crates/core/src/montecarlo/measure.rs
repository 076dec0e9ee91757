//! The statistics whose distributions the bounds describe, computed exactly,
//! plus a filtered classifier that avoids big-integer work for samples far
//! from every threshold.

use num_bigint::BigInt;

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::error_model::{analyze, EvalScheme, NativeF64, PrecisionConfig};
use crate::exact::{exact_det_value, lift_insphere, IntMatrix};
use crate::predicates::{PointSet, PredicateKind};

/// Exact `|det|` of the statistic for `kind`, as a dyadic.
pub fn exact_statistic(kind: PredicateKind, points: &PointSet) -> Result<Dyadic> {
    let delta = points.dimension();
    let n = kind.point_count(delta);
    if points.len() != n {
        return Err(Error::PointCount {
            expected: n,
            got: points.len(),
        });
    }
    let p = points.pitch() as i64;
    let (det, scale) = match kind {
        PredicateKind::WhichSide => {
            let entries = points.raw().iter().map(|&k| BigInt::from(k)).collect();
            (exact_det_value(&IntMatrix::from_entries(entries)?), p * delta as i64)
        }
        PredicateKind::Insphere => {
            let pts: Vec<Vec<i64>> = (0..n).map(|i| points.point(i).to_vec()).collect();
            let m = lift_insphere(delta, &pts, points.pitch())?;
            (exact_det_value(&m), p * (delta as i64 + 2))
        }
    };
    Ok(Dyadic::new(det, -scale).abs())
}

/// `|det(p_1, ..., p_delta)|`, exact then rounded to the nearest double.
pub fn measure_whichside(points: &PointSet) -> Result<f64> {
    Ok(exact_statistic(PredicateKind::WhichSide, points)?.to_f64())
}

/// `|Delta_delta|` of the lifted matrix, exact then rounded.
pub fn measure_insphere(points: &PointSet) -> Result<f64> {
    Ok(exact_statistic(PredicateKind::Insphere, points)?.to_f64())
}

/// Sorts samples into threshold bins: bin `i` holds statistics in
/// `(V_{i-1}, V_i]`, the last bin everything above the largest threshold.
///
/// The statistic is first evaluated in double precision. When it lies
/// farther than twice the rounding-error threshold from every `V_i`, the bin
/// follows from the rounded value; otherwise it is computed exactly.
pub struct Binner {
    kind: PredicateKind,
    scheme: EvalScheme,
    margin: f64,
    thresholds: Vec<f64>,
    exact_thresholds: Vec<Dyadic>,
}

impl Binner {
    pub fn new(kind: PredicateKind, delta: usize, thresholds: &[f64]) -> Result<Self> {
        let scheme = kind.scheme(delta)?;
        let cfg = PrecisionConfig::new(53)?;
        let eps = analyze(&scheme, &cfg).error().to_f64_up();
        let exact_thresholds = thresholds
            .iter()
            .map(|&v| Dyadic::from_f64(v).ok_or_else(|| Error::domain(format!("threshold {v}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Binner {
            kind,
            scheme,
            margin: 2.0 * eps,
            thresholds: thresholds.to_vec(),
            exact_thresholds,
        })
    }

    pub fn bins(&self) -> usize {
        self.thresholds.len() + 1
    }

    /// Bin of one sample; `inputs` and `scratch` are reusable buffers.
    pub fn bin(
        &self,
        points: &PointSet,
        inputs: &mut Vec<f64>,
        scratch: &mut Vec<f64>,
    ) -> Result<usize> {
        let s = 2f64.powi(-(points.pitch() as i32));
        inputs.clear();
        inputs.extend(points.raw().iter().map(|&k| k as f64 * s));
        let d = self.scheme.evaluate_with(&NativeF64, inputs, scratch).abs();
        for (i, &v) in self.thresholds.iter().enumerate() {
            if d + self.margin <= v {
                return Ok(i);
            }
            if d - self.margin > v {
                continue;
            }
            return self.exact_bin(points);
        }
        Ok(self.thresholds.len())
    }

    fn exact_bin(&self, points: &PointSet) -> Result<usize> {
        let stat = exact_statistic(self.kind, points)?;
        Ok(self
            .exact_thresholds
            .iter()
            .position(|v| stat <= *v)
            .unwrap_or(self.exact_thresholds.len()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::sampling::{batch_rng, SampleDomain};

    fn pts(delta: usize, pitch: u32, c: &[i64]) -> PointSet {
        PointSet::new(delta, pitch, c.to_vec()).unwrap()
    }

    #[test]
    fn measures() {
        assert_eq!(measure_whichside(&pts(2, 0, &[1, 0, 0, 1])).unwrap(), 1.0);
        assert_eq!(measure_insphere(&pts(1, 3, &[5, 5])).unwrap(), 0.0);
        // u = 1/2, v = -1/4: |uv(v - u)| = 3/32
        assert_eq!(measure_insphere(&pts(1, 2, &[2, -1])).unwrap(), 3.0 / 32.0);
    }

    #[test]
    fn hadamard_respected() {
        let mut rng = batch_rng(11, 0);
        let d = SampleDomain::Ball { delta: 3 };
        for _ in 0..500 {
            let mut c = Vec::new();
            for _ in 0..3 {
                d.sample_into(&mut rng, &mut c);
            }
            let p = PointSet::new(3, d.pitch(), c).unwrap();
            assert!(measure_whichside(&p).unwrap() <= 4.0);
        }
    }

    #[test]
    fn binner_agrees_with_exact() {
        let thresholds = [0.001, 0.01, 0.1, 0.5];
        for (kind, delta) in [
            (PredicateKind::WhichSide, 2),
            (PredicateKind::WhichSide, 3),
            (PredicateKind::Insphere, 2),
        ] {
            let b = Binner::new(kind, delta, &thresholds).unwrap();
            let dom = SampleDomain::Grid { delta, eta_bits: 5 };
            let mut rng = batch_rng(5, delta as u64);
            let (mut inputs, mut scratch) = (Vec::new(), Vec::new());
            for _ in 0..5000 {
                let mut c = Vec::new();
                for _ in 0..kind.point_count(delta) {
                    dom.sample_into(&mut rng, &mut c);
                }
                let p = PointSet::new(delta, dom.pitch(), c).unwrap();
                let fast = b.bin(&p, &mut inputs, &mut scratch).unwrap();
                assert_eq!(fast, b.exact_bin(&p).unwrap());
            }
        }
    }
}
