//! Sampled estimates of the moduli of smoothness and convexity, and the
//! classical analytic ceilings used when a check needs a guaranteed upper
//! bound on ρ_E.
//!
//! The ρ estimate is a supremum found by search, so it can only undershoot
//! the true modulus; the δ estimate is an infimum found by search and can
//! only overshoot. Downstream code treats them that way.

use crate::error::{Error, Result};
use crate::geometry::{raw, SpaceDescriptor};
use crate::sampling::{map_blocks, tag_of, unit_direction, SamplerConfig};

const ASCENT_SWEEPS: usize = 50;
const ASCENT_STEP: f64 = 1e-2;
const ASCENT_SHRINK: f64 = 0.5;
/// Number of best random candidates refined by local ascent.
const ASCENT_STARTS: usize = 4;

/// Upper bound on ρ_E(τ) for ℓ_p: exact `√(1+τ²) − 1` at `p = 2`,
/// `τ^p/p` for `1 < p < 2`, and `(p−1)τ²/2` for `p > 2`.
pub fn rho_ceiling(space: &SpaceDescriptor, tau: f64) -> f64 {
    let p = space.p();
    if p == 2.0 {
        (1.0 + tau * tau).sqrt() - 1.0
    } else if p < 2.0 {
        tau.powf(p) / p
    } else {
        (p - 1.0) * tau * tau / 2.0
    }
}

/// The constant K in `ρ_E(τ) <= K τ^q` implied by the analytic ceilings.
pub fn analytic_smoothness_constant(space: &SpaceDescriptor) -> f64 {
    let p = space.p();
    if p <= 2.0 {
        1.0 / space.q_smooth()
    } else {
        (p - 1.0) / 2.0
    }
}

/// Closed-form modulus of convexity of a Hilbert space.
pub fn hilbert_delta(eps: f64) -> f64 {
    1.0 - (1.0 - eps * eps / 4.0).sqrt()
}

fn smoothness_objective(x: &[f64], y: &[f64], tau: f64, p: f64) -> f64 {
    let plus: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + tau * b).collect();
    let minus: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - tau * b).collect();
    (raw::lp_norm(&plus, p) + raw::lp_norm(&minus, p)) / 2.0 - 1.0
}

/// Coordinate search over a pair of unit vectors. `score` is maximized;
/// each trial move perturbs one coordinate and renormalizes that vector.
fn pair_ascent<F>(mut a: Vec<f64>, mut b: Vec<f64>, p: f64, score: F) -> f64
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    let n = a.len();
    let mut best = score(&a, &b);
    let mut step = ASCENT_STEP;
    for _ in 0..ASCENT_SWEEPS {
        let mut improved = false;
        for k in 0..2 * n {
            for dir in [1.0, -1.0] {
                let (ta, tb) = if k < n {
                    let mut t = a.clone();
                    t[k] += dir * step;
                    match raw::normalize(&t, p) {
                        Some(t) => (t, b.clone()),
                        None => continue,
                    }
                } else {
                    let mut t = b.clone();
                    t[k - n] += dir * step;
                    match raw::normalize(&t, p) {
                        Some(t) => (a.clone(), t),
                        None => continue,
                    }
                };
                let s = score(&ta, &tb);
                if s > best {
                    best = s;
                    a = ta;
                    b = tb;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= ASCENT_SHRINK;
        }
    }
    best
}

/// Random unit pairs, keep the best few, refine them, return the best score.
fn search_unit_pairs<F>(space: &SpaceDescriptor, sampler: &SamplerConfig, tag: &str, score: F) -> f64
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync + Send,
{
    let t = tag_of(tag);
    let per_block = map_blocks(sampler.exec, sampler.n_blocks(), |b| {
        let mut rng = sampler.rng(t, b);
        let mut top: Vec<(f64, Vec<f64>, Vec<f64>)> = Vec::new();
        for _ in sampler.block_range(b) {
            let a = unit_direction(&mut rng, space);
            let c = unit_direction(&mut rng, space);
            let s = score(&a, &c);
            top.push((s, a, c));
            top.sort_by(|l, r| r.0.total_cmp(&l.0));
            top.truncate(ASCENT_STARTS);
        }
        top
    });
    let mut all: Vec<(f64, Vec<f64>, Vec<f64>)> = per_block.into_iter().flatten().collect();
    // stable sort keeps block order on ties
    all.sort_by(|l, r| r.0.total_cmp(&l.0));
    all.truncate(ASCENT_STARTS);
    all.into_iter()
        .map(|(s0, a, c)| pair_ascent(a, c, space.p(), &score).max(s0))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Lower estimate of `ρ_E(τ) = sup{(‖x+τy‖ + ‖x−τy‖)/2 − 1 : ‖x‖ = ‖y‖ = 1}`.
pub fn modulus_smoothness_estimate(space: &SpaceDescriptor, tau: f64, sampler: &SamplerConfig) -> Result<f64> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::Parameter(format!("tau must be positive, got {tau}")));
    }
    sampler.validate()?;
    let p = space.p();
    let est = search_unit_pairs(space, sampler, "modulus_smoothness", |x, y| smoothness_objective(x, y, tau, p));
    // ρ(τ) <= τ always; clamp rounding noise
    Ok(est.clamp(0.0, tau))
}

/// Estimates over a grid of τ values, made nondecreasing by a running
/// maximum over the sorted grid (a lower estimate at τ' is also one at any
/// τ >= τ'). Returned in the order of `taus`.
pub fn modulus_smoothness_profile(space: &SpaceDescriptor, taus: &[f64], sampler: &SamplerConfig) -> Result<Vec<f64>> {
    let mut order: Vec<usize> = (0..taus.len()).collect();
    order.sort_by(|&a, &b| taus[a].total_cmp(&taus[b]));
    let mut out = vec![0.0; taus.len()];
    let mut running: f64 = 0.0;
    for i in order {
        running = running.max(modulus_smoothness_estimate(space, taus[i], sampler)?);
        out[i] = running;
    }
    Ok(out)
}

/// Largest `s` in `[1 − ε/2, 1]` with `‖s m ± (ε/2) v‖ <= 1`, by bisection.
/// The pair `x = s m + (ε/2) v`, `y = s m − (ε/2) v` has `‖x − y‖ = ε` and
/// midpoint norm `s`.
fn largest_midpoint(m: &[f64], v: &[f64], eps: f64, p: f64) -> f64 {
    let half = eps / 2.0;
    let feasible = |s: f64| {
        let plus: Vec<f64> = m.iter().zip(v).map(|(a, b)| s * a + half * b).collect();
        let minus: Vec<f64> = m.iter().zip(v).map(|(a, b)| s * a - half * b).collect();
        raw::lp_norm(&plus, p) <= 1.0 && raw::lp_norm(&minus, p) <= 1.0
    };
    let mut lo = (1.0 - half).max(0.0);
    let mut hi = 1.0;
    if feasible(hi) {
        return hi;
    }
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Upper estimate of `δ_E(ε) = inf{1 − ‖x+y‖/2 : ‖x‖, ‖y‖ <= 1, ‖x−y‖ = ε}`.
pub fn modulus_convexity_estimate(space: &SpaceDescriptor, eps: f64, sampler: &SamplerConfig) -> Result<f64> {
    if !(eps > 0.0 && eps <= 2.0) {
        return Err(Error::Parameter(format!("eps must lie in (0, 2], got {eps}")));
    }
    sampler.validate()?;
    let p = space.p();
    let best_mid = search_unit_pairs(space, sampler, "modulus_convexity", |m, v| largest_midpoint(m, v, eps, p));
    Ok((1.0 - best_mid).max(0.0))
}

/// `K_est = max over the grid of ρ̂(τ)/τ^q`.
pub fn smoothness_constant_estimate(space: &SpaceDescriptor, tau_grid: &[f64], sampler: &SamplerConfig) -> Result<f64> {
    if tau_grid.is_empty() {
        return Err(Error::Parameter("tau grid is empty".into()));
    }
    if let Some(t) = tau_grid.iter().find(|t| !(**t > 0.0 && **t <= 2.0)) {
        return Err(Error::Parameter(format!("tau grid values must lie in (0, 2], got {t}")));
    }
    let q = space.q_smooth();
    let rhos = modulus_smoothness_profile(space, tau_grid, sampler)?;
    Ok(tau_grid
        .iter()
        .zip(rhos)
        .map(|(t, r)| r / t.powf(q))
        .fold(0.0, f64::max))
}

/// Estimate K and record it on the descriptor.
pub fn with_estimated_smoothness_constant(
    space: SpaceDescriptor,
    tau_grid: &[f64],
    sampler: &SamplerConfig,
) -> Result<SpaceDescriptor> {
    let k = smoothness_constant_estimate(&space, tau_grid, sampler)?;
    Ok(space.with_k_est(k))
}

/// Log-spaced default grid on (0, 2].
pub fn default_tau_grid() -> Vec<f64> {
    (0..=12).map(|i| 2.0 * 10f64.powf(-3.0 + 0.25 * i as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampler() -> SamplerConfig {
        SamplerConfig::with_seed(5, 2000)
    }

    #[test]
    fn rho_bounded_by_tau_near_zero() {
        for p in [1.2, 1.5, 2.0] {
            let s = SpaceDescriptor::new(3, p).unwrap();
            let r = modulus_smoothness_estimate(&s, 1e-8, &sampler()).unwrap();
            assert!(r <= 1e-8);
            let small = modulus_smoothness_estimate(&s, 1e-4, &sampler()).unwrap();
            let large = modulus_smoothness_estimate(&s, 1e-1, &sampler()).unwrap();
            assert!(small <= rho_ceiling(&s, 1e-4) * (1.0 + 1e-6));
            assert!(small / 1e-4 < large / 1e-1, "rho/tau should shrink with tau");
        }
    }

    #[test]
    fn rho_hilbert_closed_form() {
        let s = SpaceDescriptor::new(2, 2.0).unwrap();
        let r = modulus_smoothness_estimate(&s, 1.0, &sampler()).unwrap();
        let oracle = 2f64.sqrt() - 1.0;
        assert!((r - oracle).abs() < 1e-4, "{r} vs {oracle}");
        assert!(r <= oracle + 1e-12);
    }

    #[test]
    fn rho_below_lp_ceiling() {
        let s = SpaceDescriptor::new(2, 1.5).unwrap();
        let r = modulus_smoothness_estimate(&s, 0.1, &sampler()).unwrap();
        let ceiling = 0.1f64.powf(1.5) / 1.5;
        assert!((ceiling - 0.021082).abs() < 1e-6);
        assert!(r <= ceiling * (1.0 + 1e-6));
        assert!(r > 0.0);
    }

    #[test]
    fn rho_rejects_nonpositive_tau() {
        let s = SpaceDescriptor::new(2, 1.5).unwrap();
        assert!(modulus_smoothness_estimate(&s, 0.0, &sampler()).is_err());
        assert!(modulus_smoothness_estimate(&s, -1.0, &sampler()).is_err());
    }

    #[test]
    fn profile_is_monotone() {
        let s = SpaceDescriptor::new(3, 1.3).unwrap();
        let taus = [0.5, 0.01, 1.0, 0.1, 2.0];
        let prof = modulus_smoothness_profile(&s, &taus, &sampler()).unwrap();
        let mut pairs: Vec<(f64, f64)> = taus.iter().copied().zip(prof).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!(pairs.windows(2).all(|w| w[0].1 <= w[1].1));
    }

    #[test]
    fn delta_hilbert_cases() {
        let s = SpaceDescriptor::new(2, 2.0).unwrap();
        let d2 = modulus_convexity_estimate(&s, 2.0, &sampler()).unwrap();
        assert!((d2 - 1.0).abs() < 1e-6, "{d2}");
        let d1 = modulus_convexity_estimate(&s, 1.0, &sampler()).unwrap();
        let oracle = hilbert_delta(1.0);
        assert!((oracle - 0.133975).abs() < 1e-6);
        assert!((d1 - oracle).abs() < 1e-4, "{d1} vs {oracle}");
        assert!(d1 >= oracle - 1e-12);
    }

    #[test]
    fn delta_small_eps_bounded() {
        for p in [1.2, 1.5, 2.0, 3.0] {
            let s = SpaceDescriptor::new(3, p).unwrap();
            for eps in [1e-3, 1e-2, 0.1] {
                let d = modulus_convexity_estimate(&s, eps, &sampler()).unwrap();
                assert!(d <= eps / 2.0, "p={p} eps={eps} d={d}");
                assert!(d >= 0.0);
            }
        }
    }

    #[test]
    fn delta_rejects_out_of_range() {
        let s = SpaceDescriptor::new(2, 1.5).unwrap();
        assert!(modulus_convexity_estimate(&s, 0.0, &sampler()).is_err());
        assert!(modulus_convexity_estimate(&s, 2.5, &sampler()).is_err());
    }

    #[test]
    fn smoothness_constant_cases() {
        let grid = default_tau_grid();
        let h = SpaceDescriptor::new(2, 2.0).unwrap();
        assert!(smoothness_constant_estimate(&h, &grid, &sampler()).unwrap() <= 0.5 + 1e-3);
        let s = SpaceDescriptor::new(2, 1.5).unwrap();
        assert!(smoothness_constant_estimate(&s, &grid, &sampler()).unwrap() <= 1.0 / 1.5 + 1e-3);

        let single = [0.3];
        let k = smoothness_constant_estimate(&s, &single, &sampler()).unwrap();
        let rho = modulus_smoothness_estimate(&s, 0.3, &sampler()).unwrap();
        assert_eq!(k, rho / 0.3f64.powf(1.5));

        assert!(smoothness_constant_estimate(&s, &[], &sampler()).is_err());
        let stored = with_estimated_smoothness_constant(s, &grid, &sampler()).unwrap();
        assert!(stored.k_est().is_some());
    }

    #[test]
    fn ceilings_dominate_lp_closed_form() {
        let s = SpaceDescriptor::new(2, 1.5).unwrap();
        for tau in [0.01f64, 0.5, 1.0, 4.0] {
            // Hanner's closed form for 1 < p <= 2 sits below τ^p/p
            let p = 1.5f64;
            let exact = (((1.0 + tau).powf(p) + (1.0 - tau).abs().powf(p)) / 2.0).powf(1.0 / p) - 1.0;
            assert!(exact <= rho_ceiling(&s, tau));
        }
    }
}
