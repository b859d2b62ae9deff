//! Hölder point clouds and the bound-line check.
//!
//! Around each base point in the ball, pairs are laid out at log-spaced
//! distances across the sampler's decade range. A least-squares line is
//! fitted to `log10 ‖Fx − Fy‖` against `log10 ‖x − y‖`, but the pass/fail
//! criterion is that every point lies weakly below the line of slope `q − 1`
//! through `log10 L`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{raw, SpaceDescriptor};
use crate::harness::checks::{holder_constant, main1_constant};
use crate::harness::driver::{Eval, Tolerance, CONFIRM_TOL};
use crate::operators::MonotoneOperatorSpec;
use crate::report::{FitPoint, HolderFit, InequalityReport, Witness};
use crate::resolvent::resolvent_point;
use crate::sampling::{fit_pair_in_ball, map_blocks, point_in_ball, sparse_point_in_ball, tag_of, unit_direction, SamplerConfig};
use crate::scalar::{Precise, Scalar};

/// Distances per base point.
pub const DISTANCES_PER_BASE: usize = 16;
pub const MIN_FIT_PAIRS: usize = 10;

#[derive(Clone, Copy, Debug)]
pub enum FitMap<'a> {
    /// The duality mapping, image distances in the dual norm.
    J,
    /// `T = J_r` for an operator.
    Resolvent {
        operator: &'a MonotoneOperatorSpec,
        label: &'a str,
        r: f64,
        mu_hat: f64,
    },
}

impl FitMap<'_> {
    pub fn name(&self) -> String {
        match self {
            FitMap::J => "holder_fit:J".into(),
            FitMap::Resolvent { label, r, .. } => format!("holder_fit:{label}:r={r}"),
        }
    }

    fn constant(&self, space: &SpaceDescriptor, radius: f64) -> f64 {
        match self {
            FitMap::J => main1_constant(space) * radius.powf(2.0 - space.q_smooth()),
            FitMap::Resolvent { mu_hat, .. } => holder_constant(space, *mu_hat, radius),
        }
    }
}

struct Raw {
    base: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    fx: Vec<f64>,
    fy: Vec<f64>,
    dist: f64,
    image: f64,
}

pub struct FitOutput {
    pub fit: HolderFit,
    pub points: Vec<FitPoint>,
    pub report: InequalityReport,
}

fn image_distance<S: Scalar>(map: &FitMap, space: &SpaceDescriptor, fx: &[S], fy: &[S]) -> S {
    match map {
        FitMap::J => raw::lp_norm(&raw::sub(fx, fy), space.p_conj()),
        FitMap::Resolvent { .. } => raw::lp_norm(&raw::sub(fx, fy), space.p()),
    }
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r2 = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    (slope, intercept, r2)
}

/// Fit and bound check for `map` on the space. Requires `1 < p <= 2`.
pub fn fit_holder_exponent(map: FitMap, space: &SpaceDescriptor, sampler: &SamplerConfig) -> Result<FitOutput> {
    space.require_theorem_regime()?;
    sampler.validate()?;
    let p = space.p();
    let q = space.q_smooth();
    let mut radius = sampler.radius;
    if let FitMap::Resolvent { operator, r, .. } = map {
        operator.check_dimension(space.dim())?;
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::Parameter(format!("r must be positive, got {r}")));
        }
        if let Some(d) = operator.domain_radius() {
            radius = radius.min(d * (1.0 - 1e-12));
        }
    }
    let l = map.constant(space, sampler.radius);
    let n_base = (sampler.count / DISTANCES_PER_BASE).max(MIN_FIT_PAIRS);
    let (lo, hi) = sampler.scale_decades;
    let tag = tag_of(&map.name());

    let apply = |v: &[f64]| -> Result<Vec<f64>> {
        match map {
            FitMap::J => Ok(raw::duality_map(v, p)),
            FitMap::Resolvent { operator, r, .. } => resolvent_point(space, operator, r, v).map(|(z, _)| z),
        }
    };

    // one base point per substream
    let per_base = map_blocks(sampler.exec, n_base, |b| {
        let mut rng = sampler.rng(tag, b);
        let base = if b % 2 == 0 {
            sparse_point_in_ball(&mut rng, space, radius)
        } else {
            point_in_ball(&mut rng, space, radius)
        };
        let zeros: Vec<usize> = (0..base.len()).filter(|&i| base[i] == 0.0).collect();
        let dir = if !zeros.is_empty() && rng.random_bool(0.5) {
            // along a coordinate where the base point vanishes
            let mut w = vec![0.0; base.len()];
            w[zeros[rng.random_range(0..zeros.len())]] = 1.0;
            w
        } else {
            unit_direction(&mut rng, space)
        };
        let mut out = Vec::with_capacity(DISTANCES_PER_BASE);
        let mut failures = Vec::new();
        for k in 0..DISTANCES_PER_BASE {
            let s = lo + (hi - lo) * k as f64 / (DISTANCES_PER_BASE - 1) as f64;
            let d = radius * 10f64.powf(s);
            let mut x = base.clone();
            let mut y: Vec<f64> = base.iter().zip(&dir).map(|(a, w)| a + d * w).collect();
            fit_pair_in_ball(&mut x, &mut y, p, radius);
            match (apply(&x), apply(&y)) {
                (Ok(fx), Ok(fy)) => {
                    let dist = raw::lp_norm(&raw::sub(&x, &y), p);
                    let image = image_distance(&map, space, &fx, &fy);
                    out.push(Raw { base: b, x, y, fx, fy, dist, image });
                }
                (Err(e), _) | (_, Err(e)) => failures.push(e.to_string()),
            }
        }
        (out, failures)
    });

    let mut raws = Vec::new();
    let mut failures = Vec::new();
    for (r, f) in per_base {
        raws.extend(r);
        failures.extend(f);
    }

    let mut report = InequalityReport::new(map.name());
    let tol = Tolerance::default();
    let log_l = l.log10();
    let mut points = Vec::new();
    let mut skipped = 0u64;
    let mut worst = f64::INFINITY;
    let mut worst_pair: Option<&Raw> = None;
    let mut confirmed: Vec<(f64, f64, &Raw)> = Vec::new();
    let mut max_excess = f64::NEG_INFINITY;
    for r in &raws {
        if r.dist <= 0.0 || r.image <= 0.0 {
            skipped += 1;
            continue;
        }
        let ld = r.dist.log10();
        let li = r.image.log10();
        let bound_value = log_l + (q - 1.0) * ld;
        max_excess = max_excess.max(li - bound_value);
        points.push(FitPoint { base_point_id: r.base, log10_dist: ld, log10_image_dist: li, bound_value });
        let e = Eval::bound(r.image, l * r.dist.powf(q - 1.0));
        let m = e.margin(&tol).expect("bound");
        if m < worst {
            worst = m;
            worst_pair = Some(r);
        }
        if m < 0.0 {
            let pd = |v: &[f64]| -> Vec<Precise> { v.iter().map(|c| Precise::from_f64(*c)).collect() };
            let (x, y, fx, fy) = (pd(&r.x), pd(&r.y), pd(&r.fx), pd(&r.fy));
            let img = image_distance(&map, space, &fx, &fy);
            let dist = raw::lp_norm(&raw::sub(&x, &y), p);
            let pm = Eval::bound(img, Precise::from_f64(l) * dist.powf(q - 1.0)).margin(&tol).expect("bound").to_f64();
            if pm < -CONFIRM_TOL {
                confirmed.push((m, pm, r));
            }
        }
    }
    if points.len() < MIN_FIT_PAIRS {
        return Err(Error::Input(format!(
            "insufficient pairs for a fit: {} usable, {} required",
            points.len(),
            MIN_FIT_PAIRS
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.log10_dist).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.log10_image_dist).collect();
    let (slope, intercept, r_squared) = least_squares(&xs, &ys);
    let range = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let fit = HolderFit { slope, intercept, r_squared, n_pairs: points.len(), scale_range: range };

    report.samples = points.len() as u64;
    report.worst_margin = worst;
    report.violations = confirmed.len() as u64;
    report.estimated_constant = Some(10f64.powf(log_l + max_excess));
    report.detail_f64("slope", slope);
    report.detail_f64("intercept", intercept);
    report.detail_f64("r_squared", r_squared);
    report.detail_f64("bound_slope", q - 1.0);
    report.detail_f64("log10_l", log_l);
    report.detail_f64("max_excess_over_bound_line", max_excess);
    report.detail("base_points", n_base as u64);
    report.detail("skipped_zero_image", skipped);
    if !failures.is_empty() {
        report.detail("solver_failures", failures.len() as u64);
        report.detail("first_failure", failures[0].clone());
        let frac = failures.len() as f64 / (n_base * DISTANCES_PER_BASE) as f64;
        if frac > crate::harness::checks::SOLVER_FAILURE_BUDGET {
            report.fail(format!("solver failed on {} points", failures.len()));
        }
    }
    confirmed.sort_by(|a, b| a.1.total_cmp(&b.1));
    if let Some((m, pm, r)) = confirmed.first() {
        report.witness = Some(Witness { x: r.x.clone(), y: r.y.clone(), margin: *m, precise_margin: Some(*pm) });
        report.fail(format!("{} point(s) above the bound line", confirmed.len()));
    } else if let Some(r) = worst_pair {
        report.witness = Some(Witness { x: r.x.clone(), y: r.y.clone(), margin: worst, precise_margin: None });
    }
    Ok(FitOutput { fit, points, report })
}
