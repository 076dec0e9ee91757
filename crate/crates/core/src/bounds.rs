//! Closed-form bounds on the probability that a determinant is small.
//!
//! Bounds are upper bounds on a probability and are returned unclamped, so
//! they may exceed 1; [`ProbBound::clamped`] is for reporting.

use std::f64::consts::{LN_2, PI};
use std::io::Write;

use serde::Serialize;

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::error_model::{PrecisionConfig, ThresholdRow};

/// `v_i(1)`, the volume of the unit ball in `i` dimensions.
pub fn unit_ball_volume(i: usize) -> f64 {
    if i.is_multiple_of(2) {
        let h = i / 2;
        PI.powi(h as i32) / factorial(h)
    } else {
        let h = (i - 1) / 2;
        2f64.powi(i as i32) * PI.powi(h as i32) * factorial(h) / factorial(i)
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `delta * v_{delta-1}^delta / v_delta^(delta-1)`.
pub fn sigma(delta: usize) -> f64 {
    assert!(delta >= 1, "sigma is defined for delta >= 1");
    let d = delta as i32;
    delta as f64 * unit_ball_volume(delta - 1).powi(d) / unit_ball_volume(delta).powi(d - 1)
}

/// `delta! (prod_{i<delta} v_i)^2 / v_delta^(delta-1)`; `sigma(d) = k(d) / k(d-1)`.
pub fn k_delta(delta: usize) -> f64 {
    let prod: f64 = (0..delta).map(unit_ball_volume).product();
    factorial(delta) * prod * prod / unit_ball_volume(delta).powi(delta as i32 - 1)
}

/// `delta v_delta v_{delta-1}^delta sqrt(delta)^(delta(delta-1)) / 2^(delta^2)`.
pub fn psi(delta: usize) -> f64 {
    assert!(delta >= 1, "psi is defined for delta >= 1");
    let d = delta as i32;
    let hadamard = sqrt_pow(delta as f64, delta * (delta - 1));
    delta as f64 * unit_ball_volume(delta) * unit_ball_volume(delta - 1).powi(d)
        * hadamard
        / 2f64.powi(d * d)
}

/// `sqrt(x)^e`, exact integer powers when `e` is even.
fn sqrt_pow(x: f64, e: usize) -> f64 {
    if e.is_multiple_of(2) {
        x.powi((e / 2) as i32)
    } else {
        x.powi((e / 2) as i32) * x.sqrt()
    }
}

/// `delta sqrt(delta)^delta / 2`, the grid perturbation coefficient.
pub fn alpha_grid(delta: usize) -> f64 {
    delta as f64 * sqrt_pow(delta as f64, delta) / 2.0
}

/// `(delta + 1) sqrt(delta / 2) sqrt(delta + delta^2)^delta`.
pub fn beta_insphere(delta: usize) -> f64 {
    let d = delta as f64;
    (d + 1.0) * (d / 2.0).sqrt() * sqrt_pow(d + d * d, delta)
}

pub fn tau(delta: usize) -> f64 {
    let d = delta as f64;
    8.0 * d * d
}

pub fn theta(delta: usize) -> f64 {
    let d = delta as f64;
    4.0 * d * d * d.ln() + 8.0 * d * d * LN_2 + 8.0 * d * d + d
}

pub fn tau_theta(delta: usize) -> (f64, f64) {
    (tau(delta), theta(delta))
}

/// `sqrt(psi (tau + theta))`.
pub fn phi(delta: usize) -> f64 {
    (psi(delta) * (tau(delta) + theta(delta))).sqrt()
}

/// `phi (1 - ln((tau + theta) / psi))`.
pub fn chi(delta: usize) -> f64 {
    phi(delta) * (1.0 - ((tau(delta) + theta(delta)) / psi(delta)).ln())
}

/// Which branch or formula produced a bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Regime {
    General,
    SmallArgument,
    LargeArgument,
    /// The argument left the formula's domain; the trivial bound 1 is used.
    Trivial,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProbBound {
    pub value: f64,
    pub regime: Regime,
}

impl ProbBound {
    fn general(value: f64) -> Self {
        ProbBound {
            value,
            regime: Regime::General,
        }
    }

    pub fn clamped(&self) -> f64 {
        self.value.clamp(0.0, 1.0)
    }
}

fn check_range(name: &str, x: f64, lo: f64, hi: f64) -> Result<()> {
    if !(lo..=hi).contains(&x) {
        return Err(Error::domain(format!("{name} = {x} outside [{lo}, {hi}]")));
    }
    Ok(())
}

fn check_nonneg(name: &str, x: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::domain(format!("{name} = {x} must be nonnegative")));
    }
    Ok(())
}

/// `Prob(|p1| <= R)` for `p1` uniform in `[-1, 1]`.
pub fn cdf1(r: f64) -> Result<f64> {
    check_nonneg("R", r)?;
    Ok(r.min(1.0))
}

/// Exact CDF of `|det(p1, p2)|` for two points uniform in the unit disk.
pub fn cdf2_exact(a: f64) -> Result<f64> {
    check_range("A", a, 0.0, 1.0)?;
    let s = (1.0 - a * a).sqrt();
    Ok(6.0 / PI * a * s + 2.0 / PI * a.asin() - 4.0 / PI * a * a * a.acos())
}

/// Upper bound on the CDF of `|det(p1, p2, p3)|` in the unit ball.
pub fn cdf3_upper(v: f64) -> Result<f64> {
    check_range("V", v, 0.0, 1.0)?;
    if v == 0.0 {
        return Ok(0.0);
    }
    let v2 = v * v;
    let v3 = v2 * v;
    Ok(27.0 * PI / 16.0 * v - 9.0 * PI / 4.0 * v3 * v.ln() + 3.0 * PI / 4.0 * v3
        - 81.0 / 8.0 * v2 * (1.0 - v2).sqrt()
        + 27.0 / 4.0 * v3 * v.acos()
        - 27.0 / 8.0 * v * v.asin())
}

/// `27 pi / 16 V + 27 pi / 8 V^2`, a simpler bound that shows the linear term
/// dominates for small `V`.
pub fn cdf3_companion(v: f64) -> Result<f64> {
    check_range("V", v, 0.0, 1.0)?;
    Ok(27.0 * PI / 16.0 * v + 27.0 * PI / 8.0 * v * v)
}

/// `cdf3_upper(V) - 27 pi / 8 V^2`: the dropped integral is at most
/// `27 pi / 8 V^2`, so this is a lower bound on the true CDF.
pub fn cdf3_lower(v: f64) -> Result<f64> {
    Ok((cdf3_upper(v)? - 27.0 * PI / 8.0 * v * v).max(0.0))
}

/// `sigma_delta V`, the unit-ball which-side bound.
pub fn whichside_ball_bound(delta: usize, v: f64) -> Result<ProbBound> {
    check_nonneg("V", v)?;
    Ok(ProbBound::general(sigma(delta) * v))
}

/// `psi_delta V`, the unit-cube which-side bound.
pub fn whichside_cube_bound(delta: usize, v: f64) -> Result<ProbBound> {
    check_nonneg("V", v)?;
    Ok(ProbBound::general(psi(delta) * v))
}

/// `psi_delta (V + alpha_delta eta)` for points on a grid of pitch `eta`.
pub fn whichside_grid_bound(delta: usize, v: f64, eta: f64) -> Result<ProbBound> {
    check_nonneg("V", v)?;
    check_nonneg("eta", eta)?;
    Ok(ProbBound::general(psi(delta) * (v + alpha_grid(delta) * eta)))
}

/// `17 * 2^(1/3) / 4`, about 5.355.
pub const INSPHERE1_SMALL_COEFF: f64 = 5.354_664_462_053_211;
/// `3 * 2^(1/3)`, about 3.78.
pub const INSPHERE1_LARGE_COEFF: f64 = 3.779_763_149_684_619;

/// Bound on `Prob(|uv(v - u)| <= A)` for `u, v` uniform in `[-1, 1]`.
///
/// Below `A = 1/4` this is `17 * 2^(1/3) / 4 * A^(2/3) - 5A`. Above it the
/// bound is `1/2 + 5 * 2^(-5/3) * A^(2/3) - A`, which joins the first branch
/// continuously at `7/8`; it exceeds 1 before `A = 2`, the largest possible
/// value of the statistic.
pub fn insphere1_bound(a: f64) -> Result<ProbBound> {
    check_range("A", a, 0.0, 2.0)?;
    // The large-argument expression peaks at A = 1000/864 and falls back to
    // 1 at A = 2; past the peak its maximum is kept so the bound stays
    // monotone.
    let a_eff = if a < 0.25 { a } else { a.min(1000.0 / 864.0) };
    let t = a_eff.powf(2.0 / 3.0);
    Ok(if a < 0.25 {
        ProbBound {
            value: INSPHERE1_SMALL_COEFF * t - 5.0 * a,
            regime: Regime::SmallArgument,
        }
    } else {
        ProbBound {
            value: 0.5 + 5.0 * 2f64.powf(-5.0 / 3.0) * t - a_eff,
            regime: Regime::LargeArgument,
        }
    })
}

/// `3 * 2^(1/3) A^(2/3) - 4A`, the large-argument expression as usually
/// quoted. It is smaller than the true probability (0.5 at `A = 1/4`
/// against about 0.79), so it is kept only for comparison.
pub fn insphere1_quoted_large_branch(a: f64) -> f64 {
    INSPHERE1_LARGE_COEFF * a.powf(2.0 / 3.0) - 4.0 * a
}

/// `pi sqrt(2V)` for the lifted 2-dimensional insphere determinant.
pub fn insphere2_bound(v: f64) -> Result<ProbBound> {
    check_nonneg("V", v)?;
    Ok(ProbBound::general(PI * (2.0 * v).sqrt()))
}

/// `Prob(ab <= V) <= Prob(a <= alpha) + Prob(b <= V / alpha)`.
pub fn product_split_bound(
    pa: impl Fn(f64) -> f64,
    pb: impl Fn(f64) -> f64,
    v: f64,
    alpha: f64,
) -> Result<f64> {
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(Error::domain(format!("split point alpha = {alpha} must be positive")));
    }
    Ok(pa(alpha) + pb(v / alpha))
}

/// `phi sqrt(W) ln(1/W) + chi sqrt(W)`, floored at 0, for `delta >= 3`.
/// The bound exceeds 1 for `W` above roughly 0.1 and is only informative
/// below that.
pub fn insphere_d_bound(delta: usize, w: f64) -> Result<ProbBound> {
    if delta < 3 {
        return Err(Error::UnsupportedDimension {
            delta,
            reason: "the general insphere bound needs delta >= 3",
        });
    }
    if !(w > 0.0 && w < 1.0) {
        return Err(Error::domain(format!("W = {w} outside (0, 1)")));
    }
    let s = w.sqrt();
    Ok(ProbBound::general(
        (phi(delta) * s * (1.0 / w).ln() + chi(delta) * s).max(0.0),
    ))
}

/// `beta_delta sqrt(eta)`: the grid term of the insphere bounds.
pub fn insphere_grid_term(delta: usize, eta: f64) -> Result<f64> {
    check_nonneg("eta", eta)?;
    Ok(beta_insphere(delta) * eta.sqrt())
}

/// Continuous insphere bound for dimension `delta` at argument `w`.
pub fn insphere_bound(delta: usize, w: f64) -> Result<ProbBound> {
    match delta {
        0 => Err(Error::UnsupportedDimension {
            delta,
            reason: "insphere needs delta >= 1",
        }),
        1 => insphere1_bound(w),
        2 => insphere2_bound(w),
        _ => insphere_d_bound(delta, w),
    }
}

/// Insphere bound for grid inputs: the continuous bound evaluated at
/// `W + beta_delta sqrt(eta)`. When that argument leaves the continuous
/// bound's domain the trivial bound 1 is returned.
pub fn insphere_grid_bound(delta: usize, w: f64, eta: f64) -> Result<ProbBound> {
    check_nonneg("W", w)?;
    let arg = w + insphere_grid_term(delta, eta)?;
    let upper = match delta {
        1 => 2.0,
        2 => f64::INFINITY,
        _ => 1.0,
    };
    if arg >= upper {
        return Ok(ProbBound {
            value: 1.0,
            regime: Regime::Trivial,
        });
    }
    insphere_bound(delta, arg)
}

/// `psi_delta (epsilon + alpha_delta eta)` for an explicit threshold.
pub fn rho_with_epsilon(delta: usize, epsilon: f64, eta: f64) -> f64 {
    psi(delta) * (epsilon + alpha_grid(delta) * eta)
}

/// Failure-probability bound of the which-side filter at precision `cfg` for
/// grid pitch `eta`.
pub fn rho(delta: usize, cfg: &PrecisionConfig, eta: f64) -> Result<f64> {
    let row = ThresholdRow::whichside(delta, cfg)?;
    Ok(rho_with_epsilon(delta, row.epsilon.to_f64(), eta))
}

/// The grid pitch `2^(1-b)` of `b`-bit coordinates in `[-1, 1]`.
pub fn grid_eta(bits: u32) -> f64 {
    2f64.powi(1 - bits as i32)
}

/// Every per-dimension constant. Threshold columns are present for
/// dimensions 2 to 8.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundTable {
    pub delta: usize,
    pub sigma: f64,
    pub psi: f64,
    pub k: f64,
    pub tau: f64,
    pub theta: f64,
    pub phi: f64,
    pub chi: f64,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon_coefficient: Option<String>,
    pub epsilon: Option<f64>,
    pub rho: Option<f64>,
    pub ops: u64,
}

impl BoundTable {
    /// Constants for `delta`, with `epsilon` and `rho` at precision `cfg` and
    /// grid pitch `2^(1-b)`.
    pub fn new(delta: usize, cfg: &PrecisionConfig) -> Self {
        let threshold = if (2..=8).contains(&delta) {
            ThresholdRow::whichside(delta, cfg).ok()
        } else {
            None
        };
        let eta = grid_eta(cfg.bits());
        let epsilon = threshold.as_ref().map(|t| t.epsilon.to_f64());
        BoundTable {
            delta,
            sigma: sigma(delta),
            psi: psi(delta),
            k: k_delta(delta),
            tau: tau(delta),
            theta: theta(delta),
            phi: phi(delta),
            chi: chi(delta),
            alpha: alpha_grid(delta),
            beta: beta_insphere(delta),
            epsilon_coefficient: threshold.as_ref().map(|t| t.epsilon_coefficient.to_string()),
            epsilon,
            rho: epsilon.map(|e| rho_with_epsilon(delta, e, eta)),
            ops: crate::error_model::op_count(delta),
        }
    }
}

/// A decimal with `digits` significant digits: fixed notation for moderate
/// magnitudes, scientific otherwise.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = digits.max(1);
    let exp = x.abs().log10().floor() as i32;
    if (digits as i32..6).contains(&exp) {
        let unit = 10f64.powi(exp - digits as i32 + 1);
        format!("{}", (x / unit).round() * unit)
    } else if (-3..6).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.prec$e}", prec = digits - 1)
    }
}

const TABLE_COLUMNS: [&str; 14] = [
    "delta",
    "sigma",
    "psi",
    "k",
    "tau",
    "theta",
    "phi",
    "chi",
    "alpha",
    "beta",
    "epsilon_coefficient",
    "epsilon",
    "rho",
    "ops",
];

fn table_cells(t: &BoundTable) -> Vec<String> {
    let f = |x: f64| format_sig(x, 3);
    vec![
        t.delta.to_string(),
        f(t.sigma),
        f(t.psi),
        f(t.k),
        f(t.tau),
        f(t.theta),
        f(t.phi),
        f(t.chi),
        f(t.alpha),
        f(t.beta),
        t.epsilon_coefficient.clone().unwrap_or_default(),
        t.epsilon.map(f).unwrap_or_default(),
        t.rho.map(f).unwrap_or_default(),
        t.ops.to_string(),
    ]
}

pub fn write_constants_csv<W: Write>(rows: &[BoundTable], out: W) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::EmptyRows);
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TABLE_COLUMNS)?;
    for r in rows {
        w.write_record(table_cells(r))?;
    }
    w.flush()?;
    Ok(())
}

/// JSON array of objects; numbers are full precision, the threshold
/// coefficient is an exact integer string.
pub fn write_constants_json<W: Write>(rows: &[BoundTable], out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, rows)?;
    Ok(())
}

/// Exact threshold value as a dyadic, for callers that need it unrounded.
pub fn epsilon_exact(delta: usize, cfg: &PrecisionConfig) -> Result<Dyadic> {
    Ok(ThresholdRow::whichside(delta, cfg)?.epsilon)
}
