use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predicates::GridPoint;

/// Pitch exponent used to represent continuous samples: coordinates are
/// truncated toward zero to multiples of `2^-52`, which keeps every sample
/// inside its domain and exactly representable in double precision.
pub const CONTINUOUS_PITCH: u32 = 52;

/// Where the points of an experiment come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SampleDomain {
    /// Uniform in the unit ball.
    Ball { delta: usize },
    /// Uniform in `[-1, 1]^delta`.
    Cube { delta: usize },
    /// Uniform over the lattice of pitch `eta = 2^(1 - eta_bits)` in
    /// `[-1, 1]^delta`, endpoints included.
    Grid { delta: usize, eta_bits: u32 },
}

impl SampleDomain {
    pub fn dimension(&self) -> usize {
        match *self {
            SampleDomain::Ball { delta }
            | SampleDomain::Cube { delta }
            | SampleDomain::Grid { delta, .. } => delta,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SampleDomain::Ball { .. } => "ball",
            SampleDomain::Cube { .. } => "cube",
            SampleDomain::Grid { .. } => "grid",
        }
    }

    /// Exponent `p` such that coordinates are multiples of `2^-p`.
    pub fn pitch(&self) -> u32 {
        match *self {
            SampleDomain::Grid { eta_bits, .. } => eta_bits - 1,
            _ => CONTINUOUS_PITCH,
        }
    }

    /// Grid spacing; `None` for continuous domains.
    pub fn eta(&self) -> Option<f64> {
        match *self {
            SampleDomain::Grid { eta_bits, .. } => Some(2f64.powi(1 - eta_bits as i32)),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let delta = self.dimension();
        if delta == 0 || delta > 8 {
            return Err(Error::UnsupportedDimension {
                delta,
                reason: "sampling supports dimensions 1 to 8",
            });
        }
        if let SampleDomain::Grid { eta_bits, .. } = *self {
            if !(1..=53).contains(&eta_bits) {
                return Err(Error::domain(format!("eta_bits = {eta_bits} outside 1..=53")));
            }
        }
        Ok(())
    }

    /// Append one point's integer coordinates to `out`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<i64>) {
        match *self {
            SampleDomain::Ball { delta } => ball_into(delta, rng, out),
            SampleDomain::Cube { delta } => lattice_into(delta, CONTINUOUS_PITCH, rng, out),
            SampleDomain::Grid { delta, eta_bits } => lattice_into(delta, eta_bits - 1, rng, out),
        }
    }
}

fn lattice_into<R: Rng + ?Sized>(delta: usize, pitch: u32, rng: &mut R, out: &mut Vec<i64>) {
    let h = 1i64 << pitch;
    for _ in 0..delta {
        out.push(rng.random_range(-h..=h));
    }
}

/// Direction from normalised Gaussians, radius `U^(1/delta)`.
fn ball_into<R: Rng + ?Sized>(delta: usize, rng: &mut R, out: &mut Vec<i64>) {
    let mut g = [0f64; 8];
    let g = &mut g[..delta];
    let norm = loop {
        for x in g.iter_mut() {
            *x = rng.sample(StandardNormal);
        }
        let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.0 {
            break n;
        }
    };
    let u: f64 = rng.random();
    let r = u.powf(1.0 / delta as f64);
    let scale = r / norm * 2f64.powi(CONTINUOUS_PITCH as i32);
    let limit = 1i64 << CONTINUOUS_PITCH;
    for x in g.iter() {
        let k = (x * scale).trunc() as i64;
        out.push(k.clamp(-limit, limit));
    }
}

pub fn sample_ball<R: Rng + ?Sized>(delta: usize, rng: &mut R) -> GridPoint {
    let mut c = Vec::with_capacity(delta);
    ball_into(delta, rng, &mut c);
    GridPoint {
        coords: c,
        pitch: CONTINUOUS_PITCH,
    }
}

pub fn sample_cube<R: Rng + ?Sized>(delta: usize, rng: &mut R) -> GridPoint {
    let mut c = Vec::with_capacity(delta);
    lattice_into(delta, CONTINUOUS_PITCH, rng, &mut c);
    GridPoint {
        coords: c,
        pitch: CONTINUOUS_PITCH,
    }
}

/// A lattice point of pitch `2^(1 - eta_bits)`.
pub fn sample_grid<R: Rng + ?Sized>(delta: usize, eta_bits: u32, rng: &mut R) -> Result<GridPoint> {
    SampleDomain::Grid { delta, eta_bits }.validate()?;
    let mut c = Vec::with_capacity(delta);
    lattice_into(delta, eta_bits - 1, rng, &mut c);
    Ok(GridPoint {
        coords: c,
        pitch: eta_bits - 1,
    })
}

/// The generator for batch `index` of a run seeded with `seed`. Batches are
/// independent ChaCha streams, so any assignment of batches to workers
/// reproduces the same samples.
pub fn batch_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_samples_inside() {
        let mut rng = batch_rng(1, 0);
        let one = (1i128 << CONTINUOUS_PITCH) * (1i128 << CONTINUOUS_PITCH);
        for delta in 1..=8 {
            for _ in 0..2000 {
                let p = sample_ball(delta, &mut rng);
                let n2: i128 = p.coords.iter().map(|&k| k as i128 * k as i128).sum();
                assert!(n2 <= one);
            }
        }
    }

    #[test]
    fn grid_samples_on_lattice() {
        let mut rng = batch_rng(2, 0);
        let mut seen_end = false;
        for _ in 0..5000 {
            let p = sample_grid(2, 3, &mut rng).unwrap();
            assert_eq!(p.pitch, 2);
            for &k in &p.coords {
                assert!((-4..=4).contains(&k));
                seen_end |= k == 4 || k == -4;
            }
        }
        assert!(seen_end);
        assert!(sample_grid(2, 0, &mut rng).is_err());
    }

    #[test]
    fn streams_differ() {
        let a: u64 = batch_rng(7, 0).random();
        let b: u64 = batch_rng(7, 1).random();
        let c: u64 = batch_rng(7, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn ball_half_radius_fraction() {
        let mut rng = batch_rng(3, 0);
        let n = 200_000;
        for delta in [2usize, 3] {
            let mut inside = 0;
            for _ in 0..n {
                let p = sample_ball(delta, &mut rng);
                let r2: f64 = p.to_f64().iter().map(|x| x * x).sum();
                if r2 <= 0.25 {
                    inside += 1;
                }
            }
            let p = 0.5f64.powi(delta as i32);
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((inside as f64 / n as f64 - p).abs() <= 3.0 * se);
        }
    }

    #[test]
    fn cube_mean_near_origin() {
        let mut rng = batch_rng(4, 0);
        let n = 100_000;
        let mut sum = [0f64; 3];
        for _ in 0..n {
            let p = sample_cube(3, &mut rng).to_f64();
            for i in 0..3 {
                sum[i] += p[i];
            }
        }
        // Var of U[-1,1] is 1/3.
        let se = (1.0 / 3.0 / n as f64).sqrt();
        for s in sum {
            assert!((s / n as f64).abs() <= 4.0 * se);
        }
    }
}
