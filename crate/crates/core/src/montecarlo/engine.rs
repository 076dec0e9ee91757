use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::measure::Binner;
use super::sampling::{batch_rng, SampleDomain};
use crate::bounds::{
    insphere_bound, insphere_grid_bound, rho, whichside_ball_bound, whichside_cube_bound,
    whichside_grid_bound,
};
use crate::error::{Error, Result};
use crate::error_model::PrecisionConfig;
use crate::predicates::{Filter, PointSet, PredicateKind};

/// Samples per batch. Batch `i` always draws from stream `i` of the seed,
/// so the split of batches among workers never changes a result.
pub const BATCH_SIZE: u64 = 8192;

/// Dominance slack in standard errors.
pub const SLACK_SIGMAS: f64 = 3.0;

/// One estimated probability with the bound it is checked against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub delta: usize,
    pub domain: String,
    pub predicate: String,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "N")]
    pub n: u64,
    pub hits: u64,
    pub p_hat: f64,
    pub stderr: f64,
    pub bound: f64,
    pub pass: bool,
}

impl EstimateRow {
    pub fn new(cfg: &ExperimentConfig, v: f64, hits: u64, bound: f64) -> Self {
        let n = cfg.n_trials;
        let p_hat = hits as f64 / n as f64;
        let stderr = (p_hat * (1.0 - p_hat) / n as f64).sqrt();
        EstimateRow {
            delta: cfg.delta(),
            domain: cfg.domain.name().to_string(),
            predicate: cfg.predicate.name().to_string(),
            v,
            n,
            hits,
            p_hat,
            stderr,
            bound,
            pass: bound >= p_hat - SLACK_SIGMAS * stderr,
        }
    }

    /// The row re-checked against another bound.
    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = bound;
        self.pass = bound >= self.p_hat - SLACK_SIGMAS * self.stderr;
        self
    }
}

/// The bound attached by default to `Prob(statistic <= v)` for `cfg`.
pub fn default_bound(cfg: &ExperimentConfig, v: f64) -> Result<f64> {
    let delta = cfg.delta();
    let b = match (cfg.predicate, cfg.domain) {
        (PredicateKind::WhichSide, SampleDomain::Ball { .. }) => whichside_ball_bound(delta, v)?,
        (PredicateKind::WhichSide, SampleDomain::Cube { .. }) => whichside_cube_bound(delta, v)?,
        (PredicateKind::WhichSide, d @ SampleDomain::Grid { .. }) => {
            whichside_grid_bound(delta, v, d.eta().unwrap_or(0.0))?
        }
        (PredicateKind::Insphere, SampleDomain::Cube { .. }) => insphere_bound(delta, v)?,
        (PredicateKind::Insphere, d @ SampleDomain::Grid { .. }) => {
            insphere_grid_bound(delta, v, d.eta().unwrap_or(0.0))?
        }
        (PredicateKind::Insphere, SampleDomain::Ball { .. }) => {
            return Err(Error::config(None, "no insphere bound for the ball"));
        }
    };
    Ok(b.value)
}

/// Classify every sample of `cfg` into one of `slots` counters. Each batch
/// builds its own classifier with `init`.
fn run_counts<S, C>(cfg: &ExperimentConfig, slots: usize, init: S) -> Result<Vec<u64>>
where
    S: Fn() -> C + Sync,
    C: FnMut(&PointSet) -> Result<usize>,
{
    let n = cfg.n_trials;
    let batches = n.div_ceil(BATCH_SIZE);
    let domain = cfg.domain;
    let delta = cfg.delta();
    let points = cfg.predicate.point_count(delta);
    let pitch = domain.pitch();
    let seed = cfg.seed;
    let job = || {
        (0..batches)
            .into_par_iter()
            .map(|bi| -> Result<Vec<u64>> {
                let mut counts = vec![0u64; slots];
                let mut classify = init();
                let mut rng = batch_rng(seed, bi);
                let len = BATCH_SIZE.min(n - bi * BATCH_SIZE);
                for _ in 0..len {
                    let mut c = Vec::with_capacity(points * delta);
                    for _ in 0..points {
                        domain.sample_into(&mut rng, &mut c);
                    }
                    let ps = PointSet::new(delta, pitch, c)?;
                    counts[classify(&ps)?] += 1;
                }
                Ok(counts)
            })
            .try_reduce(
                || vec![0u64; slots],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    Ok(a)
                },
            )
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::config(None, format!("cannot start {} workers: {e}", cfg.workers)))?;
    pool.install(job)
}

/// Empirical `Prob(statistic <= V)` for every threshold of `cfg`, with the
/// default bound attached.
pub fn estimate_cdf(cfg: &ExperimentConfig) -> Result<Vec<EstimateRow>> {
    estimate_cdf_with(cfg, |v| default_bound(cfg, v))
}

/// As [`estimate_cdf`], with the bound supplied by `bound`.
pub fn estimate_cdf_with<B>(cfg: &ExperimentConfig, bound: B) -> Result<Vec<EstimateRow>>
where
    B: Fn(f64) -> Result<f64>,
{
    cfg.validate()?;
    if cfg.thresholds.is_empty() {
        return Err(Error::config(None, "no thresholds to estimate"));
    }
    let delta = cfg.delta();
    let kind = cfg.predicate;
    let binner = Binner::new(kind, delta, &cfg.thresholds)?;
    let binner = &binner;
    let counts = run_counts(
        cfg,
        binner.bins(),
        || {
            let (mut inputs, mut scratch) = (Vec::new(), Vec::new());
            move |ps: &PointSet| binner.bin(ps, &mut inputs, &mut scratch)
        },
    )?;
    let mut hits = 0;
    cfg.thresholds
        .iter()
        .zip(&counts)
        .map(|(&v, &c)| {
            hits += c;
            Ok(EstimateRow::new(cfg, v, hits, bound(v)?))
        })
        .collect()
}

/// Fraction of grid instances the filter at `precision` cannot certify.
///
/// The `V` column holds the threshold. The bound is the which-side failure
/// bound, or for insphere the grid bound at twice the threshold: a computed
/// value below the threshold means a true value below twice it.
pub fn estimate_failure_rate(
    cfg: &ExperimentConfig,
    precision: &PrecisionConfig,
) -> Result<EstimateRow> {
    cfg.validate()?;
    let eta = match cfg.domain {
        d @ SampleDomain::Grid { .. } => d.eta().unwrap_or(0.0),
        _ => {
            return Err(Error::config(None, "failure rates are measured on grid domains"));
        }
    };
    let delta = cfg.delta();
    let filter = Filter::new(cfg.predicate, delta, *precision)?;
    let filter = &filter;
    let counts = run_counts(
        cfg,
        2,
        || move |ps: &PointSet| Ok(usize::from(!filter.classify(ps)?.is_certified())),
    )?;
    let eps = filter.threshold().to_f64();
    let bound = match cfg.predicate {
        PredicateKind::WhichSide => rho(delta, precision, eta)?,
        PredicateKind::Insphere => insphere_grid_bound(delta, 2.0 * eps, eta)?.value,
    };
    Ok(EstimateRow::new(cfg, eps, counts[1], bound))
}

/// Outcome of checking a batch of rows for dominance.
#[derive(Clone, Debug, PartialEq)]
pub struct DominanceReport {
    pub checked: usize,
    pub violations: Vec<EstimateRow>,
}

impl DominanceReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for DominanceReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{} of {} rows dominated",
            self.checked - self.violations.len(),
            self.checked
        )?;
        for r in &self.violations {
            writeln!(
                f,
                "violation: delta={} {} {} V={} p_hat={} stderr={} bound={}",
                r.delta, r.domain, r.predicate, r.v, r.p_hat, r.stderr, r.bound
            )?;
        }
        Ok(())
    }
}

pub fn dominance_report(rows: &[EstimateRow]) -> Result<DominanceReport> {
    if rows.is_empty() {
        return Err(Error::EmptyRows);
    }
    Ok(DominanceReport {
        checked: rows.len(),
        violations: rows.iter().filter(|r| !r.pass).cloned().collect(),
    })
}

pub fn write_rows_csv<W: Write>(rows: &[EstimateRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rows_json<W: Write>(rows: &[EstimateRow], mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, rows)?;
    writeln!(out)?;
    Ok(())
}
