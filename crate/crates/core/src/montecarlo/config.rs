//! Experiment configuration files.
//!
//! The primary format is flat `key = value` text; `#` starts a comment and
//! blank lines are ignored:
//!
//! ```text
//! domain = grid          # ball | cube | grid
//! delta = 2
//! eta_bits = 8           # grid only: pitch 2^(1 - eta_bits)
//! predicate = whichside  # whichside | insphere
//! n_trials = 1000000
//! seed = 42              # optional, default 1
//! thresholds = 0.001, 0.01, 0.1
//! bits = 8               # optional: precision of failure runs
//! workers = 4            # optional: threads, never changes results
//! ```
//!
//! A JSON object with the same keys (thresholds as an array) is accepted
//! when the text starts with `{`.

use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;

use super::sampling::SampleDomain;
use crate::error::{Error, Result};
use crate::predicates::PredicateKind;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub domain: SampleDomain,
    pub predicate: PredicateKind,
    pub n_trials: u64,
    pub seed: u64,
    pub thresholds: Vec<f64>,
    /// Mantissa bits of the filter in failure-rate runs; defaults to the
    /// grid's `eta_bits`.
    pub bits: Option<u32>,
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn new(domain: SampleDomain, predicate: PredicateKind, n_trials: u64, seed: u64) -> Self {
        ExperimentConfig {
            domain,
            predicate,
            n_trials,
            seed,
            thresholds: Vec::new(),
            bits: None,
            workers: 1,
        }
    }

    pub fn with_thresholds(mut self, thresholds: Vec<f64>) -> Self {
        self.thresholds = thresholds;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_bits(mut self, bits: u32) -> Self {
        self.bits = Some(bits);
        self
    }

    pub fn delta(&self) -> usize {
        self.domain.dimension()
    }

    /// Structural checks shared by every experiment.
    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        if self.n_trials == 0 {
            return Err(Error::config(None, "n_trials must be at least 1"));
        }
        if self.workers == 0 {
            return Err(Error::config(None, "workers must be at least 1"));
        }
        if self.predicate == PredicateKind::Insphere {
            if matches!(self.domain, SampleDomain::Ball { .. }) {
                return Err(Error::config(
                    None,
                    "insphere experiments sample the cube or a grid, not the ball",
                ));
            }
            if self.delta() > 7 {
                return Err(Error::UnsupportedDimension {
                    delta: self.delta(),
                    reason: "insphere experiments support dimensions 1 to 7",
                });
            }
        }
        check_thresholds(&self.thresholds, self.predicate, self.delta(), None)
    }
}

fn check_thresholds(
    t: &[f64],
    predicate: PredicateKind,
    delta: usize,
    line: Option<usize>,
) -> Result<()> {
    for w in t.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::config(line, "thresholds must be strictly ascending"));
        }
    }
    for &v in t {
        let ok = v.is_finite()
            && match (predicate, delta) {
                (PredicateKind::WhichSide, _) => v >= 0.0,
                (PredicateKind::Insphere, 1) => (0.0..=2.0).contains(&v),
                (PredicateKind::Insphere, 2) => v >= 0.0,
                (PredicateKind::Insphere, _) => v > 0.0 && v < 1.0,
            };
        if !ok {
            return Err(Error::config(
                line,
                format!("threshold {v} outside the domain of the {} bound", predicate.name()),
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    domain: Option<String>,
    delta: Option<usize>,
    eta_bits: Option<u32>,
    predicate: Option<String>,
    n_trials: Option<u64>,
    seed: Option<u64>,
    thresholds: Option<Vec<f64>>,
    bits: Option<u32>,
    workers: Option<usize>,
}

/// Parse a configuration in either accepted format.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    if text.trim_start().starts_with('{') {
        let raw: RawConfig = serde_json::from_str(text)
            .map_err(|e| Error::config(Some(e.line()), e.to_string()))?;
        build(raw, &HashMap::new())
    } else {
        let (raw, lines) = parse_kv(text)?;
        build(raw, &lines)
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

fn parse_kv(text: &str) -> Result<(RawConfig, HashMap<&'static str, usize>)> {
    let mut raw = RawConfig::default();
    let mut lines: HashMap<&'static str, usize> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| Error::config(Some(n), format!("expected `key = value`, got `{body}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |what: &str| Error::config(Some(n), format!("invalid {what} `{value}`"));
        let slot: &'static str = match key {
            "domain" => {
                raw.domain = Some(value.to_string());
                "domain"
            }
            "predicate" => {
                raw.predicate = Some(value.to_string());
                "predicate"
            }
            "delta" => {
                raw.delta = Some(value.parse().map_err(|_| bad("delta"))?);
                "delta"
            }
            "eta_bits" => {
                raw.eta_bits = Some(value.parse().map_err(|_| bad("eta_bits"))?);
                "eta_bits"
            }
            "n_trials" => {
                raw.n_trials = Some(parse_count(value).ok_or_else(|| bad("n_trials"))?);
                "n_trials"
            }
            "seed" => {
                raw.seed = Some(value.parse().map_err(|_| bad("seed"))?);
                "seed"
            }
            "bits" => {
                raw.bits = Some(value.parse().map_err(|_| bad("bits"))?);
                "bits"
            }
            "workers" => {
                raw.workers = Some(value.parse().map_err(|_| bad("workers"))?);
                "workers"
            }
            "thresholds" => {
                let list = value.trim_start_matches('[').trim_end_matches(']');
                let parsed = list
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<f64>().map_err(|_| bad("threshold list")))
                    .collect::<Result<Vec<_>>>()?;
                raw.thresholds = Some(parsed);
                "thresholds"
            }
            other => return Err(Error::config(Some(n), format!("unknown key `{other}`"))),
        };
        if lines.insert(slot, n).is_some() {
            return Err(Error::config(Some(n), format!("duplicate key `{key}`")));
        }
    }
    Ok((raw, lines))
}

/// Integers, optionally written with `_` separators or as `1e6`.
fn parse_count(s: &str) -> Option<u64> {
    let s = s.replace('_', "");
    if let Ok(v) = s.parse::<u64>() {
        return Some(v);
    }
    let f: f64 = s.parse().ok()?;
    (f >= 0.0 && f.fract() == 0.0 && f <= 9.007_199_254_740_992e15).then_some(f as u64)
}

fn build(raw: RawConfig, lines: &HashMap<&'static str, usize>) -> Result<ExperimentConfig> {
    let at = |k: &str| lines.get(k).copied();
    let missing = |k: &str| Error::config(None, format!("missing key `{k}`"));

    let delta = raw.delta.ok_or_else(|| missing("delta"))?;
    let domain_name = raw.domain.ok_or_else(|| missing("domain"))?;
    let domain = match domain_name.as_str() {
        "ball" | "cube" if raw.eta_bits.is_some() => {
            return Err(Error::config(at("eta_bits"), "eta_bits applies to the grid domain only"));
        }
        "ball" => SampleDomain::Ball { delta },
        "cube" => SampleDomain::Cube { delta },
        "grid" => SampleDomain::Grid {
            delta,
            eta_bits: raw
                .eta_bits
                .ok_or_else(|| Error::config(at("domain"), "grid domain needs eta_bits"))?,
        },
        other => {
            return Err(Error::config(at("domain"), format!("unknown domain `{other}`")));
        }
    };
    domain
        .validate()
        .map_err(|e| Error::config(at("eta_bits").or(at("delta")), e.to_string()))?;
    let predicate = match raw.predicate.as_deref() {
        None | Some("whichside") => PredicateKind::WhichSide,
        Some("insphere") => PredicateKind::Insphere,
        Some(other) => {
            return Err(Error::config(at("predicate"), format!("unknown predicate `{other}`")));
        }
    };
    let n_trials = raw.n_trials.ok_or_else(|| missing("n_trials"))?;
    if n_trials == 0 {
        return Err(Error::config(at("n_trials"), "n_trials must be at least 1"));
    }
    let workers = raw.workers.unwrap_or(1);
    if workers == 0 {
        return Err(Error::config(at("workers"), "workers must be at least 1"));
    }
    if let Some(b) = raw.bits {
        if !(2..=53).contains(&b) {
            return Err(Error::config(at("bits"), format!("bits = {b} outside 2..=53")));
        }
    }
    let thresholds = raw.thresholds.unwrap_or_default();
    check_thresholds(&thresholds, predicate, delta, at("thresholds"))?;
    let cfg = ExperimentConfig {
        domain,
        predicate,
        n_trials,
        seed: raw.seed.unwrap_or(1),
        thresholds,
        bits: raw.bits,
        workers,
    };
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "\
# failure experiment
domain = grid
delta = 2
eta_bits = 8
predicate = whichside
n_trials = 1_000_000
seed = 42
thresholds = 0.001, 0.01, 0.1
";

    #[test]
    fn parses_key_value() {
        let c = parse_config(GOOD).unwrap();
        assert_eq!(c.domain, SampleDomain::Grid { delta: 2, eta_bits: 8 });
        assert_eq!(c.n_trials, 1_000_000);
        assert_eq!(c.seed, 42);
        assert_eq!(c.thresholds, vec![0.001, 0.01, 0.1]);
        assert_eq!(c.workers, 1);
    }

    #[test]
    fn parses_json() {
        let c = parse_config(
            r#"{"domain": "cube", "delta": 3, "n_trials": 1000, "thresholds": [0.1, 0.2]}"#,
        )
        .unwrap();
        assert_eq!(c.domain, SampleDomain::Cube { delta: 3 });
        assert_eq!(c.seed, 1);
    }

    fn line_of(text: &str) -> Option<usize> {
        match parse_config(text) {
            Err(Error::Config { line, .. }) => line,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn errors_carry_lines() {
        assert_eq!(line_of(&GOOD.replace("1_000_000", "0")), Some(6));
        assert_eq!(line_of(&GOOD.replace("seed = 42", "seed 42")), Some(7));
        assert_eq!(line_of(&GOOD.replace("seed = 42", "colour = red")), Some(7));
        assert_eq!(line_of(&GOOD.replace("0.001, 0.01", "0.01, 0.001")), Some(8));
        assert_eq!(line_of(&format!("{GOOD}delta = 3\n")), Some(9));
        assert_eq!(line_of(&GOOD.replace("domain = grid", "domain = torus")), Some(2));
        assert_eq!(line_of(&GOOD.replace("n_trials = 1_000_000\n", "")), None);
        assert!(matches!(parse_config("{\"delta\": }"), Err(Error::Config { line: Some(1), .. })));
    }

    #[test]
    fn insphere_domains() {
        let text = "domain = ball\ndelta = 2\npredicate = insphere\nn_trials = 10\n";
        assert!(parse_config(text).is_err());
        let text = "domain = cube\ndelta = 3\npredicate = insphere\nn_trials = 10\nthresholds = 0.5, 1.0\n";
        assert!(parse_config(text).is_err());
    }

    #[test]
    fn counts() {
        assert_eq!(parse_count("1e6"), Some(1_000_000));
        assert_eq!(parse_count("10_000"), Some(10_000));
        assert_eq!(parse_count("1.5"), None);
    }
}
