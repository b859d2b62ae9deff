//! Local search for pairs that maximize the ratio `lhs/rhs` of a bound.
//!
//! Starts are the best pairs of the very pool the sampled check draws, so
//! the search result can only improve on plain sampling with the same seed.
//! Each start is refined by finite-difference ascent on `log(lhs/rhs)`,
//! projected back into the sampling ball; only improving moves are kept.

use std::fmt;
use std::str::FromStr;

use serde_json::json;

use crate::error::{Error, Result};
use crate::geometry::SpaceDescriptor;
use crate::harness::checks::{main1_constant, KeyLemma, Main1, Normalization};
use crate::harness::driver::{precise_margin, Eval, PairCheck, Prepared, CONFIRM_TOL};
use crate::report::{InequalityReport, Witness};
use crate::sampling::{fit_pair_in_ball, map_blocks, tag_of, SamplerConfig};

const FD_STEP: f64 = 1e-6;
const INITIAL_STEP: f64 = 1e-2;
const MIN_STEP: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchTarget {
    Main1,
    Normalization,
    Mu,
    KeyLemma,
}

impl SearchTarget {
    pub const ALL: [SearchTarget; 4] = [SearchTarget::Main1, SearchTarget::Normalization, SearchTarget::Mu, SearchTarget::KeyLemma];

    pub fn id(&self) -> &'static str {
        match self {
            SearchTarget::Main1 => "theorem_main1",
            SearchTarget::Normalization => "normalization_inequality",
            SearchTarget::Mu => "estimate_mu",
            SearchTarget::KeyLemma => "keylem1",
        }
    }

    pub fn in_regime_only(&self) -> bool {
        matches!(self, SearchTarget::Main1 | SearchTarget::Mu)
    }
}

impl fmt::Display for SearchTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for SearchTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theorem_main1" | "main1" => Ok(SearchTarget::Main1),
            "normalization_inequality" | "normalization" => Ok(SearchTarget::Normalization),
            "estimate_mu" | "mu" => Ok(SearchTarget::Mu),
            "keylem1" => Ok(SearchTarget::KeyLemma),
            other => Err(Error::Parameter(format!("unknown search target '{other}'"))),
        }
    }
}

/// Bound of `‖x − y‖²/φ(x,y)` recast for the search: ratio against 1.
struct MuRatio<'a> {
    space: &'a SpaceDescriptor,
}

impl PairCheck for MuRatio<'_> {
    fn names(&self) -> Vec<String> {
        vec!["estimate_mu".into()]
    }
    fn space(&self) -> &SpaceDescriptor {
        self.space
    }
    fn tolerance(&self, _: usize) -> crate::harness::driver::Tolerance {
        Default::default()
    }
    fn ratio_scale(&self, _: usize) -> Option<f64> {
        Some(1.0 / (self.space.p() - 1.0))
    }
    fn eval<S: crate::scalar::Scalar>(&self, d: &[Vec<S>]) -> Vec<Eval<S>> {
        vec![match crate::harness::checks::mu_ratio(self.space.p(), &d[0], &d[1]) {
            Err(r) => Eval::Skip(r),
            Ok(ratio) => Eval::bound(ratio, S::from_f64(1.0 / (self.space.p() - 1.0))),
        }]
    }
}

fn ratio_of<C: PairCheck>(check: &C, x: &[f64], y: &[f64]) -> Option<f64> {
    let Prepared::Data(data) = check.prepare(x, y) else { return None };
    match check.eval(&data).into_iter().next()? {
        Eval::Bound { lhs, rhs, .. } if rhs > 0.0 && lhs.is_finite() => Some(lhs / rhs),
        _ => None,
    }
}

fn objective<C: PairCheck>(check: &C, z: &[f64], n: usize) -> f64 {
    match ratio_of(check, &z[..n], &z[n..]) {
        Some(r) if r > 0.0 => r.ln(),
        _ => f64::NEG_INFINITY,
    }
}

fn project(z: &mut [f64], n: usize, p: f64, radius: f64) {
    let (x, y) = z.split_at_mut(n);
    fit_pair_in_ball(x, y, p, radius);
}

/// Finite-difference ascent from `z`; returns the final point and value.
fn ascend<C: PairCheck>(check: &C, mut z: Vec<f64>, steps: usize, radius: f64) -> (Vec<f64>, f64, usize) {
    let n = z.len() / 2;
    let p = check.space().p();
    let mut f = objective(check, &z, n);
    let mut step = INITIAL_STEP;
    let mut evals = 1;
    for _ in 0..steps {
        if !f.is_finite() {
            break;
        }
        step = step.max(MIN_STEP);
        let zmax = z.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut g = vec![0.0; z.len()];
        for i in 0..z.len() {
            let h = FD_STEP * z[i].abs().max(1e-6 * zmax);
            let mut zp = z.clone();
            zp[i] += h;
            let mut zm = z.clone();
            zm[i] -= h;
            let (fp, fm) = (objective(check, &zp, n), objective(check, &zm, n));
            evals += 2;
            g[i] = match (fp.is_finite(), fm.is_finite()) {
                (true, true) => (fp - fm) / (2.0 * h),
                (true, false) => (fp - f) / h,
                (false, true) => (f - fm) / h,
                _ => 0.0,
            };
        }
        // pattern moves: contract the pair about its midpoint, or shrink one point
        let mut best_move: Option<(Vec<f64>, f64)> = None;
        for kind in 0..3 {
            let mut trial = z.clone();
            match kind {
                0 => {
                    for i in 0..n {
                        let mid = 0.5 * (z[i] + z[n + i]);
                        trial[i] = mid + 0.5 * (z[i] - mid);
                        trial[n + i] = mid + 0.5 * (z[n + i] - mid);
                    }
                }
                1 => trial[..n].iter_mut().for_each(|v| *v *= 0.5),
                _ => trial[n..].iter_mut().for_each(|v| *v *= 0.5),
            }
            let ft = objective(check, &trial, n);
            evals += 1;
            if ft > best_move.as_ref().map_or(f, |b| b.1) {
                best_move = Some((trial, ft));
            }
        }
        if let Some((trial, ft)) = best_move {
            z = trial;
            f = ft;
        }
        let gmax = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if gmax == 0.0 || !gmax.is_finite() {
            continue;
        }
        // relative step, shrunk until it improves
        loop {
            let mut trial: Vec<f64> = z.iter().zip(&g).map(|(a, b)| a + step * zmax * b / gmax).collect();
            project(&mut trial, n, p, radius);
            let ft = objective(check, &trial, n);
            evals += 1;
            if ft > f {
                z = trial;
                f = ft;
                step *= 1.5;
                break;
            }
            step *= 0.5;
            if step < MIN_STEP {
                step = MIN_STEP;
                break;
            }
        }
    }
    (z, f, evals)
}

fn run_search<C: PairCheck>(check: &C, name: &str, sampler: &SamplerConfig, restarts: usize, steps: usize) -> InequalityReport {
    let n = check.space().dim();
    let radius = sampler.radius;
    let tag = tag_of(&check.stream());
    let keep = restarts.max(1);
    // the check's own pool, in the check's own order
    let per_block = map_blocks(sampler.exec, sampler.n_blocks(), |b| {
        let mut rng = sampler.rng(tag, b);
        let mut top: Vec<(f64, Vec<f64>)> = Vec::new();
        for _ in sampler.block_range(b) {
            let (x, y) = check.sample(&mut rng, sampler);
            if let Some(r) = ratio_of(check, &x, &y) {
                top.push((r, [x, y].concat()));
            }
        }
        top.sort_by(|a, b| b.0.total_cmp(&a.0));
        top.truncate(keep);
        top
    });
    let mut pool: Vec<(f64, Vec<f64>)> = per_block.into_iter().flatten().collect();
    for case in check.degenerate(sampler) {
        if let Some(r) = ratio_of(check, &case.x, &case.y) {
            pool.push((r, [case.x, case.y].concat()));
        }
    }
    pool.sort_by(|a, b| b.0.total_cmp(&a.0));
    pool.truncate(keep);
    let sampled = pool.first().map_or(f64::NEG_INFINITY, |s| s.0);

    let refined = map_blocks(sampler.exec, pool.len(), |i| {
        let (r0, z0) = &pool[i];
        let (z, f, evals) = ascend(check, z0.clone(), steps, radius);
        let r = f.exp();
        if r > *r0 {
            (r, z, evals)
        } else {
            (*r0, z0.clone(), evals)
        }
    });
    let mut best = (sampled, pool.first().map(|s| s.1.clone()));
    let mut evals = 0usize;
    for (r, z, e) in refined {
        evals += e;
        if r > best.0 {
            best = (r, Some(z));
        }
    }

    let scale = check.ratio_scale(0).unwrap_or(1.0);
    let mut report = InequalityReport::new(format!("adversarial:{name}"));
    report.samples = (sampler.count + evals) as u64;
    report.detail("restarts", pool.len() as u64);
    report.detail("steps", steps as u64);
    report.detail_f64("sampled_ratio", sampled);
    report.detail_f64("best_ratio", best.0);
    report.detail_f64("ratio_scale", scale);
    if let Some(z) = best.1 {
        let (x, y) = (z[..n].to_vec(), z[n..].to_vec());
        report.estimated_constant = Some(best.0 * scale);
        let data = match check.prepare(&x, &y) {
            Prepared::Data(d) => d,
            _ => vec![x.clone(), y.clone()],
        };
        let t = check.tolerance(0);
        let m = check.eval(&data)[0].margin(&t).unwrap_or(f64::NAN);
        let pm = precise_margin(check, 0, &data);
        report.worst_margin = m;
        report.witness = Some(Witness { x, y, margin: m, precise_margin: pm });
        if pm.is_some_and(|v| v < -CONFIRM_TOL) {
            report.violations = 1;
            report.fail("search witness violates the bound after re-verification");
        }
    } else {
        report.fail("no pair satisfied the hypotheses");
    }
    report.detail("pool", json!({ "stream": check.stream(), "count": sampler.count }));
    report
}

/// Adversarial search for `target`. `m_override` replaces the main1
/// constant, as in [`check_theorem_main1`](crate::harness::checks::check_theorem_main1).
pub fn adversarial_search(
    target: SearchTarget,
    space: &SpaceDescriptor,
    restarts: usize,
    steps: usize,
    sampler: &SamplerConfig,
    m_override: Option<f64>,
) -> Result<InequalityReport> {
    sampler.validate()?;
    if target.in_regime_only() {
        space.require_theorem_regime()?;
    }
    let name = target.id();
    Ok(match target {
        SearchTarget::Main1 => {
            let m = m_override.unwrap_or_else(|| main1_constant(space));
            run_search(&Main1 { space, m }, name, sampler, restarts, steps)
        }
        SearchTarget::Normalization => run_search(&Normalization { space }, name, sampler, restarts, steps),
        SearchTarget::Mu => run_search(&MuRatio { space }, name, sampler, restarts, steps),
        SearchTarget::KeyLemma => run_search(&KeyLemma { space, rho: None }, name, sampler, restarts, steps),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::checks::check_theorem_main1;

    fn space(n: usize, p: f64) -> SpaceDescriptor {
        SpaceDescriptor::new(n, p).unwrap()
    }

    #[test]
    fn targets_parse() {
        for t in SearchTarget::ALL {
            assert_eq!(t.id().parse::<SearchTarget>().unwrap(), t);
        }
        assert_eq!("normalization".parse::<SearchTarget>().unwrap(), SearchTarget::Normalization);
        assert!("nope".parse::<SearchTarget>().is_err());
    }

    #[test]
    fn main1_hilbert_ratio_near_one() {
        let s = space(2, 2.0);
        let r = adversarial_search(SearchTarget::Main1, &s, 5, 30, &SamplerConfig::with_seed(1, 500), None).unwrap();
        let c = r.estimated_constant.unwrap();
        assert!(r.passed && (c - 1.0).abs() < 1e-6, "{c}");
    }

    #[test]
    fn search_dominates_sampling() {
        let s = space(2, 1.5);
        let smp = SamplerConfig::with_seed(11, 3000);
        let sampled = check_theorem_main1(&s, &smp, None).unwrap().estimated_constant.unwrap();
        let r = adversarial_search(SearchTarget::Main1, &s, 8, 50, &smp, None).unwrap();
        assert!(r.passed);
        assert!(r.estimated_constant.unwrap() >= sampled, "{} < {sampled}", r.estimated_constant.unwrap());
        assert!(r.estimated_constant.unwrap() <= main1_constant(&s));
    }

    #[test]
    fn normalization_ratio_approaches_two() {
        let s = space(2, 1.5);
        let r = adversarial_search(SearchTarget::Normalization, &s, 10, 200, &SamplerConfig::with_seed(5, 2000), None).unwrap();
        let c = r.estimated_constant.unwrap();
        assert!(r.passed && c <= 2.0 && c > 1.95, "{c}");
        assert!(r.witness.is_some());
    }

    #[test]
    fn keylem1_search_finds_confirmed_violation() {
        let s = space(2, 2.0);
        let r = adversarial_search(SearchTarget::KeyLemma, &s, 5, 100, &SamplerConfig::with_seed(5, 1000), None).unwrap();
        assert!(!r.passed && r.violations == 1);
    }
}
