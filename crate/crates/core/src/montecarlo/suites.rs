//! Canned dominance experiments.

use super::config::ExperimentConfig;
use super::engine::{estimate_cdf, estimate_cdf_with, estimate_failure_rate, EstimateRow};
use super::sampling::SampleDomain;
use crate::bounds::{cdf3_upper, psi, sigma};
use crate::error::{Error, Result};
use crate::error_model::PrecisionConfig;
use crate::predicates::PredicateKind;

pub const FULL_TRIALS: u64 = 1_000_000;
pub const QUICK_TRIALS: u64 = 100_000;

pub const SUITE_NAMES: [&str; 10] = [
    "whichside-2d",
    "whichside-ball",
    "whichside-cube",
    "whichside-grid",
    "whichside-3d",
    "insphere-1d",
    "insphere-2d",
    "insphere-3d",
    "failure",
    "all",
];

/// Bound a CDF case is checked against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CaseBound {
    /// Whatever [`estimate_cdf`] attaches for the domain and predicate.
    Default,
    /// The sharper three-dimensional ball bound.
    Cdf3Upper,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Case {
    Cdf { config: ExperimentConfig, bound: CaseBound },
    Failure { config: ExperimentConfig, precision: PrecisionConfig },
}

impl Case {
    pub fn config(&self) -> &ExperimentConfig {
        match self {
            Case::Cdf { config, .. } | Case::Failure { config, .. } => config,
        }
    }

    pub fn run(&self) -> Result<Vec<EstimateRow>> {
        match self {
            Case::Cdf { config, bound: CaseBound::Default } => estimate_cdf(config),
            Case::Cdf { config, bound: CaseBound::Cdf3Upper } => estimate_cdf_with(config, cdf3_upper),
            Case::Failure { config, precision } => Ok(vec![estimate_failure_rate(config, precision)?]),
        }
    }
}

fn linear(step: f64) -> Vec<f64> {
    (1..=10).map(|i| i as f64 * step).collect()
}

fn geometric(lo: f64, hi: f64) -> Vec<f64> {
    let r = (hi / lo).ln() / 9.0;
    (0..10).map(|i| lo * (r * i as f64).exp()).collect()
}

fn cdf(domain: SampleDomain, kind: PredicateKind, thresholds: Vec<f64>, n: u64, seed: u64) -> Case {
    Case::Cdf {
        config: ExperimentConfig::new(domain, kind, n, seed).with_thresholds(thresholds),
        bound: CaseBound::Default,
    }
}

/// The cases of suite `name`, each with `n` trials.
pub fn suite(name: &str, n: u64) -> Result<Vec<Case>> {
    use PredicateKind::{Insphere, WhichSide};
    let ws = |domain, t, seed| cdf(domain, WhichSide, t, n, seed);
    let cases = match name {
        "whichside-2d" => vec![
            ws(SampleDomain::Ball { delta: 2 }, linear(0.1 / sigma(2)), 201),
            ws(SampleDomain::Cube { delta: 2 }, linear(0.1 / psi(2)), 202),
        ],
        "whichside-ball" => (1..=4)
            .map(|d| ws(SampleDomain::Ball { delta: d }, linear(0.1 / sigma(d)), 210 + d as u64))
            .collect(),
        "whichside-cube" => (1..=4)
            .map(|d| ws(SampleDomain::Cube { delta: d }, linear(0.1 / psi(d)), 220 + d as u64))
            .collect(),
        "whichside-grid" => (1..=3)
            .map(|d| {
                let dom = SampleDomain::Grid { delta: d, eta_bits: 12 };
                ws(dom, linear(0.1 / psi(d)), 230 + d as u64)
            })
            .collect(),
        "whichside-3d" => vec![Case::Cdf {
            config: ExperimentConfig::new(SampleDomain::Ball { delta: 3 }, WhichSide, n, 240)
                .with_thresholds(linear(0.05)),
            bound: CaseBound::Cdf3Upper,
        }],
        "insphere-1d" => vec![cdf(SampleDomain::Cube { delta: 1 }, Insphere, linear(0.025), n, 251)],
        "insphere-2d" => vec![cdf(SampleDomain::Cube { delta: 2 }, Insphere, linear(0.005), n, 252)],
        "insphere-3d" => vec![cdf(
            SampleDomain::Cube { delta: 3 },
            Insphere,
            geometric(1e-8, 3e-4),
            n,
            253,
        )],
        "failure" => {
            let mut v = Vec::new();
            for bits in [8u32, 12] {
                for delta in [2usize, 3] {
                    let dom = SampleDomain::Grid { delta, eta_bits: bits };
                    v.push(Case::Failure {
                        config: ExperimentConfig::new(dom, WhichSide, n, 260 + bits as u64 + delta as u64)
                            .with_bits(bits),
                        precision: PrecisionConfig::new(bits)?,
                    });
                }
            }
            v
        }
        "all" => {
            let mut v = Vec::new();
            for s in SUITE_NAMES.iter().filter(|s| **s != "all" && **s != "whichside-2d") {
                v.extend(suite(s, n)?);
            }
            v
        }
        other => {
            return Err(Error::config(
                None,
                format!("unknown suite `{other}`; known: {}", SUITE_NAMES.join(", ")),
            ));
        }
    };
    Ok(cases)
}

/// Run every case of a suite with `workers` threads and collect the rows.
pub fn run_suite(cases: &[Case], workers: usize) -> Result<Vec<EstimateRow>> {
    let mut rows = Vec::new();
    for c in cases {
        let c = match c.clone() {
            Case::Cdf { config, bound } => Case::Cdf { config: config.with_workers(workers), bound },
            Case::Failure { config, precision } => Case::Failure {
                config: config.with_workers(workers),
                precision,
            },
        };
        rows.extend(c.run()?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_suite_builds() {
        for s in SUITE_NAMES {
            let cases = suite(s, 10).unwrap();
            assert!(!cases.is_empty());
            for c in &cases {
                c.config().validate().unwrap();
            }
        }
        assert!(suite("nope", 10).is_err());
    }

    #[test]
    fn geometric_endpoints() {
        let g = geometric(1e-8, 3e-4);
        assert!((g[0] - 1e-8).abs() < 1e-20);
        assert!((g[9] / 3e-4 - 1.0).abs() < 1e-12);
    }
}
