//! Seeded sampling of points and pairs, and the block-parallel driver that
//! every Monte Carlo loop in the crate runs on.
//!
//! Work is cut into fixed-size blocks. Block `b` of a task tagged `tag`
//! draws from its own ChaCha substream derived from `(seed, tag, b)`, so the
//! numbers a block sees do not depend on which thread ran it or in what
//! order. Results come back in block order.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{raw, SpaceDescriptor};

pub const BLOCK_SIZE: usize = 256;

/// How block loops are executed. `Parallel` falls back to sequential when
/// the crate is built without the `parallel` feature.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    pub seed: u64,
    pub count: usize,
    /// Radius of the sampling ball.
    pub radius: f64,
    /// log10 range of pair distances used for local pairs and exponent fits.
    pub scale_decades: (f64, f64),
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            seed: 42,
            count: 10_000,
            radius: 1.0,
            scale_decades: (-6.0, -1.0),
            exec: Exec::default(),
        }
    }
}

impl SamplerConfig {
    pub fn with_seed(seed: u64, count: usize) -> Self {
        SamplerConfig {
            seed,
            count,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 1 {
            return Err(Error::Parameter("sampler count must be at least 1".into()));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::Parameter("sampler radius must be positive".into()));
        }
        let (lo, hi) = self.scale_decades;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Parameter("scale decade range must be nonempty".into()));
        }
        Ok(())
    }

    pub fn n_blocks(&self) -> usize {
        self.count.div_ceil(BLOCK_SIZE)
    }

    /// Global sample indices owned by block `b`.
    pub fn block_range(&self, b: usize) -> Range<usize> {
        let start = b * BLOCK_SIZE;
        start..(start + BLOCK_SIZE).min(self.count)
    }

    pub fn rng(&self, tag: u64, block: usize) -> ChaCha8Rng {
        substream(self.seed, tag, block as u64)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit tag for a task name (FNV-1a).
pub fn tag_of(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

pub fn substream(seed: u64, tag: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(tag)));
    rng.set_stream(stream);
    rng
}

/// Run `f` on every block index in `0..n_blocks` and return the results in
/// block order.
pub fn map_blocks<T, F>(exec: Exec, n_blocks: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            (0..n_blocks).into_par_iter().map(f).collect()
        }
        _ => (0..n_blocks).map(f).collect(),
    }
}

/// Gaussian direction normalized in the ℓ_p norm.
pub fn unit_direction<R: Rng>(rng: &mut R, space: &SpaceDescriptor) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..space.dim()).map(|_| rng.sample(StandardNormal)).collect();
        if let Some(u) = raw::normalize(&g, space.p()) {
            return u;
        }
    }
}

/// Point with ℓ_p norm `radius · U^{1/n}`.
pub fn point_in_ball<R: Rng>(rng: &mut R, space: &SpaceDescriptor, radius: f64) -> Vec<f64> {
    let dir = unit_direction(rng, space);
    let u: f64 = rng.random();
    let rho = radius * u.powf(1.0 / space.dim() as f64);
    raw::scale(&dir, rho)
}

/// Point in the ball with a random subset of coordinates set to zero (at
/// least one coordinate survives). Axis-adjacent points are where the
/// duality mapping is least regular for `p < 2`.
pub fn sparse_point_in_ball<R: Rng>(rng: &mut R, space: &SpaceDescriptor, radius: f64) -> Vec<f64> {
    let n = space.dim();
    let keep = rng.random_range(0..n);
    let mut g: Vec<f64> = (0..n)
        .map(|i| {
            if i == keep || rng.random_bool(0.5) {
                rng.sample(StandardNormal)
            } else {
                0.0
            }
        })
        .collect();
    if g.iter().all(|v| *v == 0.0) {
        g[keep] = 1.0;
    }
    let dir = raw::normalize(&g, space.p()).expect("nonzero by construction");
    let u: f64 = rng.random();
    raw::scale(&dir, radius * u.powf(1.0 / n as f64))
}

/// Distance `10^s` with `s` uniform over the decade range.
pub fn log_distance<R: Rng>(rng: &mut R, decades: (f64, f64)) -> f64 {
    let s = rng.random_range(decades.0..decades.1);
    10f64.powf(s)
}

/// Keep both points inside the ball by shrinking the pair jointly.
pub fn fit_pair_in_ball(x: &mut [f64], y: &mut [f64], p: f64, radius: f64) {
    let m = raw::lp_norm(x, p).max(raw::lp_norm(y, p));
    if m > radius {
        let s = radius / m;
        x.iter_mut().chain(y.iter_mut()).for_each(|v| *v *= s);
    }
}

/// One random pair from the ball. The mixture is half independent pairs,
/// a quarter close pairs at log-uniform distances, and a quarter pairs
/// built on sparse points perturbed along their zero coordinates.
pub fn sample_pair<R: Rng>(
    rng: &mut R,
    space: &SpaceDescriptor,
    sampler: &SamplerConfig,
) -> (Vec<f64>, Vec<f64>) {
    let radius = sampler.radius;
    let p = space.p();
    match rng.random_range(0..4u8) {
        0 | 1 => (point_in_ball(rng, space, radius), point_in_ball(rng, space, radius)),
        2 => {
            let mut x = point_in_ball(rng, space, radius);
            let w = unit_direction(rng, space);
            let d = log_distance(rng, sampler.scale_decades) * radius;
            let mut y: Vec<f64> = x.iter().zip(&w).map(|(a, b)| a + d * b).collect();
            fit_pair_in_ball(&mut x, &mut y, p, radius);
            (x, y)
        }
        _ => {
            let mut x = sparse_point_in_ball(rng, space, radius);
            let d = log_distance(rng, sampler.scale_decades) * radius;
            let zeros: Vec<usize> = (0..x.len()).filter(|&i| x[i] == 0.0).collect();
            let mut y = x.clone();
            if zeros.is_empty() || rng.random_bool(0.25) {
                let w = unit_direction(rng, space);
                y.iter_mut().zip(&w).for_each(|(a, b)| *a += d * b);
            } else {
                // move only along coordinates where x vanishes
                let i = zeros[rng.random_range(0..zeros.len())];
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                y[i] = sign * d;
                if rng.random_bool(0.5) {
                    // symmetric pair about the axis
                    x[i] = -sign * d;
                }
            }
            fit_pair_in_ball(&mut x, &mut y, p, radius);
            (x, y)
        }
    }
}

/// Named degenerate pairs every check runs in addition to random samples.
#[derive(Clone, Debug)]
pub struct DegenerateCase {
    pub name: &'static str,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

pub fn degenerate_cases(space: &SpaceDescriptor, radius: f64) -> Vec<DegenerateCase> {
    let n = space.dim();
    let base: Vec<f64> = (0..n).map(|i| 1.0 + 0.25 * i as f64).collect();
    let unit = raw::normalize(&base, space.p()).expect("nonzero");
    let a = raw::scale(&unit, 0.8 * radius);
    let half = raw::scale(&a, 0.5);
    let neg = raw::scale(&a, -0.5);
    let zero = vec![0.0; n];
    vec![
        DegenerateCase { name: "x_eq_y", x: a.clone(), y: a.clone() },
        DegenerateCase { name: "x_zero", x: zero.clone(), y: a.clone() },
        DegenerateCase { name: "y_zero", x: a.clone(), y: zero.clone() },
        DegenerateCase { name: "both_zero", x: zero.clone(), y: zero },
        DegenerateCase { name: "positive_multiple", x: a.clone(), y: half },
        DegenerateCase { name: "negative_multiple", x: a, y: neg },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substreams_are_reproducible_and_distinct() {
        let s = SamplerConfig::with_seed(7, 1000);
        let a: u64 = s.rng(1, 0).random();
        let b: u64 = s.rng(1, 0).random();
        let c: u64 = s.rng(1, 1).random();
        let d: u64 = s.rng(2, 0).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn block_ranges_cover_count() {
        let s = SamplerConfig::with_seed(1, 1000);
        let total: usize = (0..s.n_blocks()).map(|b| s.block_range(b).len()).sum();
        assert_eq!(total, 1000);
        assert_eq!(s.block_range(s.n_blocks() - 1).end, 1000);
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let s = SamplerConfig::with_seed(3, 5000);
        let f = |b: usize| -> f64 { s.rng(9, b).random() };
        assert_eq!(map_blocks(Exec::Sequential, s.n_blocks(), f), map_blocks(Exec::Parallel, s.n_blocks(), f));
    }

    #[test]
    fn pairs_stay_in_ball() {
        let space = SpaceDescriptor::new(4, 1.3).unwrap();
        let s = SamplerConfig { radius: 2.0, ..SamplerConfig::with_seed(11, 2000) };
        let mut rng = s.rng(0, 0);
        for _ in 0..2000 {
            let (x, y) = sample_pair(&mut rng, &space, &s);
            assert!(raw::lp_norm(&x, 1.3) <= 2.0 * (1.0 + 1e-12));
            assert!(raw::lp_norm(&y, 1.3) <= 2.0 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn validation() {
        assert!(SamplerConfig { count: 0, ..Default::default() }.validate().is_err());
        assert!(SamplerConfig { radius: -1.0, ..Default::default() }.validate().is_err());
        assert!(SamplerConfig { scale_decades: (0.0, 0.0), ..Default::default() }.validate().is_err());
        assert!(SamplerConfig::default().validate().is_ok());
    }
}
