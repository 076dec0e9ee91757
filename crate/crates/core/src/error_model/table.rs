use std::io::Write;

use serde::Serialize;

use super::{analyze, det_expansion_scheme, op_count, EvalScheme, PrecisionConfig, RoundedBound};
use crate::bounds::format_sig;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};

/// Threshold of one evaluation scheme: the determinant lies in `P{G, epsilon}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdRow {
    pub delta: usize,
    pub g: Dyadic,
    pub epsilon: Dyadic,
    /// `epsilon / 2^-b`.
    pub epsilon_coefficient: Dyadic,
    pub ops: u64,
}

impl ThresholdRow {
    pub fn from_scheme(delta: usize, scheme: &EvalScheme, cfg: &PrecisionConfig) -> Self {
        let rb = analyze(scheme, cfg);
        ThresholdRow {
            delta,
            epsilon_coefficient: rb.error_coefficient(cfg),
            g: rb.magnitude().clone(),
            epsilon: rb.error().clone(),
            ops: scheme.op_count(),
        }
    }

    /// The which-side threshold for dimension `delta`.
    pub fn whichside(delta: usize, cfg: &PrecisionConfig) -> Result<Self> {
        let scheme = det_expansion_scheme(delta, RoundedBound::unit())?;
        let row = Self::from_scheme(delta, &scheme, cfg);
        debug_assert_eq!(row.ops, op_count(delta));
        Ok(row)
    }

    /// `epsilon_coefficient * 2^-53`, the threshold in double precision.
    pub fn epsilon_at_b53(&self) -> f64 {
        self.epsilon_coefficient.mul_pow2(-53).to_f64()
    }

    fn record(&self) -> ThresholdRecord {
        ThresholdRecord {
            delta: self.delta,
            g: self.g.to_string(),
            epsilon_coefficient: self.epsilon_coefficient.to_string(),
            epsilon_at_b53: format_sig(self.epsilon_at_b53(), 3),
            ops: self.ops,
        }
    }
}

#[derive(Serialize)]
struct ThresholdRecord {
    delta: usize,
    #[serde(rename = "G")]
    g: String,
    epsilon_coefficient: String,
    epsilon_at_b53: String,
    ops: u64,
}

/// Which-side thresholds for each dimension in `deltas`.
pub fn threshold_table(
    deltas: impl IntoIterator<Item = usize>,
    cfg: &PrecisionConfig,
) -> Result<Vec<ThresholdRow>> {
    deltas
        .into_iter()
        .map(|d| ThresholdRow::whichside(d, cfg))
        .collect()
}

pub fn write_threshold_csv<W: Write>(rows: &[ThresholdRow], out: W) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::EmptyRows);
    }
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r.record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_threshold_json<W: Write>(rows: &[ThresholdRow], out: W) -> Result<()> {
    let records: Vec<ThresholdRecord> = rows.iter().map(ThresholdRow::record).collect();
    serde_json::to_writer_pretty(out, &records)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_columns() {
        let cfg = PrecisionConfig::published(53).unwrap();
        let rows = threshold_table(2..=4, &cfg).unwrap();
        let mut buf = Vec::new();
        write_threshold_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("delta,G,epsilon_coefficient,epsilon_at_b53,ops"));
        assert_eq!(lines.next(), Some("2,2,2,2.22e-16,3"));
        assert_eq!(lines.next(), Some("3,4,13,1.44e-15,14"));
        assert_eq!(lines.next(), Some("4,16,76,8.44e-15,45"));
    }

    #[test]
    fn json_round_trip_keys() {
        let cfg = PrecisionConfig::published(53).unwrap();
        let rows = threshold_table([3], &cfg).unwrap();
        let mut buf = Vec::new();
        write_threshold_json(&rows, &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v[0]["G"], "4");
        assert_eq!(v[0]["epsilon_coefficient"], "13");
        assert_eq!(v[0]["ops"], 14);
    }

    #[test]
    fn empty_table_rejected() {
        assert!(write_threshold_csv(&[], Vec::new()).is_err());
    }
}
