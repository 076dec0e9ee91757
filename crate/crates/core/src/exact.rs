//! Exact determinant evaluation over arbitrary-precision integers.

use std::fmt;

use num_bigint::{BigInt, Sign as BigSign};
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of_i32(v: i32) -> Sign {
        match v.cmp(&0) {
            std::cmp::Ordering::Less => Sign::Negative,
            std::cmp::Ordering::Equal => Sign::Zero,
            std::cmp::Ordering::Greater => Sign::Positive,
        }
    }

    pub fn of_bigint(v: &BigInt) -> Sign {
        match v.sign() {
            BigSign::Minus => Sign::Negative,
            BigSign::NoSign => Sign::Zero,
            BigSign::Plus => Sign::Positive,
        }
    }

    /// Sign of a float; `-0.0` and `0.0` are both `Zero`.
    pub fn of_f64(v: f64) -> Sign {
        if v > 0.0 {
            Sign::Positive
        } else if v < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
            Sign::Positive => Sign::Negative,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Negative => "negative",
            Sign::Zero => "zero",
            Sign::Positive => "positive",
        })
    }
}

/// Square integer matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    n: usize,
    entries: Vec<BigInt>,
}

impl IntMatrix {
    pub fn from_rows<T: Into<BigInt> + Clone>(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::domain(format!(
                    "row {i} has {} entries, matrix needs {n}",
                    row.len()
                )));
            }
            entries.extend(row.iter().cloned().map(Into::into));
        }
        Ok(IntMatrix { n, entries })
    }

    /// Row-major entries; `entries.len()` must be a perfect square.
    pub fn from_entries(entries: Vec<BigInt>) -> Result<Self> {
        let n = (entries.len() as f64).sqrt().round() as usize;
        if n * n != entries.len() {
            return Err(Error::domain(format!("{} entries do not form a square", entries.len())));
        }
        Ok(IntMatrix { n, entries })
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![BigInt::zero(); n * n];
        for i in 0..n {
            entries[i * n + i] = BigInt::one();
        }
        IntMatrix { n, entries }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, c: usize) -> &BigInt {
        &self.entries[r * self.n + c]
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.entries
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.n {
            self.entries.swap(a * self.n + c, b * self.n + c);
        }
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        IntMatrix {
            n: self.n,
            entries: self.entries.iter().map(|e| e * k).collect(),
        }
    }
}

/// Determinant by fraction-free (Bareiss) elimination with row pivoting.
pub fn exact_det_value(m: &IntMatrix) -> BigInt {
    let n = m.n;
    if n == 0 {
        return BigInt::one();
    }
    let mut a = m.entries.clone();
    let mut negate = false;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k * n + k].is_zero() {
            match (k + 1..n).find(|&i| !a[i * n + k].is_zero()) {
                Some(i) => {
                    for c in 0..n {
                        a.swap(k * n + c, i * n + c);
                    }
                    negate = !negate;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i * n + j] * &a[k * n + k] - &a[i * n + k] * &a[k * n + j];
                a[i * n + j] = v / &prev;
            }
        }
        prev = a[k * n + k].clone();
    }
    let d = a[n * n - 1].clone();
    if negate {
        -d
    } else {
        d
    }
}

/// Determinant by recursive cofactor expansion along the first row.
/// Exponential in the order; meant as an independent oracle.
pub fn cofactor_det_value(m: &IntMatrix) -> BigInt {
    let cols: Vec<usize> = (0..m.n).collect();
    cofactor(m, 0, &cols)
}

fn cofactor(m: &IntMatrix, row: usize, cols: &[usize]) -> BigInt {
    match cols.len() {
        0 => BigInt::one(),
        1 => m.get(row, cols[0]).clone(),
        _ => {
            let mut total = BigInt::zero();
            for (j, &c) in cols.iter().enumerate() {
                let e = m.get(row, c);
                if e.is_zero() {
                    continue;
                }
                let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
                let t = e * cofactor(m, row + 1, &rest);
                if j % 2 == 0 {
                    total += t;
                } else {
                    total -= t;
                }
            }
            total
        }
    }
}

/// Exact sign; orders up to 3 use the closed-form expansion, larger ones
/// Bareiss elimination.
pub fn exact_det_sign(m: &IntMatrix) -> Sign {
    let v = if m.n <= 3 {
        cofactor_det_value(m)
    } else {
        exact_det_value(m)
    };
    Sign::of_bigint(&v)
}

/// Sign of a small determinant of machine integers, or `None` when the
/// order exceeds 4 or an intermediate overflows `i128`.
pub fn small_det_sign(n: usize, entries: &[i64]) -> Option<Sign> {
    if n > 4 || entries.len() != n * n {
        return None;
    }
    let v = if n == 2 {
        let a = entries[0] as i128 * entries[3] as i128;
        let b = entries[1] as i128 * entries[2] as i128;
        a.checked_sub(b)
    } else {
        let cols: Vec<usize> = (0..n).collect();
        small_cofactor(n, entries, 0, &cols)
    };
    v.map(|v| match v.cmp(&0) {
        std::cmp::Ordering::Less => Sign::Negative,
        std::cmp::Ordering::Equal => Sign::Zero,
        std::cmp::Ordering::Greater => Sign::Positive,
    })
}

fn small_cofactor(n: usize, a: &[i64], row: usize, cols: &[usize]) -> Option<i128> {
    if cols.len() == 1 {
        return Some(a[row * n + cols[0]] as i128);
    }
    let mut total: i128 = 0;
    for (j, &c) in cols.iter().enumerate() {
        let e = a[row * n + c] as i128;
        if e == 0 {
            continue;
        }
        let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
        let t = e.checked_mul(small_cofactor(n, a, row + 1, &rest)?)?;
        total = if j % 2 == 0 {
            total.checked_add(t)?
        } else {
            total.checked_sub(t)?
        };
    }
    Some(total)
}

/// Lifted insphere matrix of `delta + 1` points whose coordinates are
/// integers `k` standing for `k * 2^-scale`.
///
/// Row `r` is `(k_r1, ..., k_rdelta, sum_i k_ri^2)`: the coordinate columns
/// carry a factor `2^scale` and the norm column `2^(2 scale)` relative to the
/// real-valued matrix, so the determinant differs by the positive factor
/// `2^(scale (delta + 2))` and has the same sign.
pub fn lift_insphere(delta: usize, points: &[Vec<i64>], scale: u32) -> Result<IntMatrix> {
    if points.len() != delta + 1 {
        return Err(Error::PointCount {
            expected: delta + 1,
            got: points.len(),
        });
    }
    let limit = 1i128 << scale;
    let n = delta + 1;
    let mut entries = Vec::with_capacity(n * n);
    for p in points {
        if p.len() != delta {
            return Err(Error::domain(format!(
                "point has {} coordinates, expected {delta}",
                p.len()
            )));
        }
        let mut norm = BigInt::zero();
        for &k in p {
            if (k as i128).abs() > limit {
                return Err(Error::domain(format!("coordinate {k} exceeds 2^{scale}")));
            }
            let k = BigInt::from(k);
            norm += &k * &k;
            entries.push(k);
        }
        entries.push(norm);
    }
    Ok(IntMatrix { n, entries })
}

/// Operation count of Bareiss elimination on an order-`n` matrix: each of the
/// `sum_{k} (n-1-k)^2` updates does two multiplications, one subtraction and
/// one exact division.
pub fn bareiss_op_count(n: usize) -> u64 {
    (0..n.saturating_sub(1))
        .map(|k| {
            let r = (n - 1 - k) as u64;
            4 * r * r
        })
        .sum()
}
