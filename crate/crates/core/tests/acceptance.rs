//! Acceptance suite. Prints one line per criterion and exits nonzero if any
//! criterion fails. Runs with `harness = false`.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use lp_resolvent::config::{Checks, RunConfig, SpaceConfig};
use lp_resolvent::geometry::raw;
use lp_resolvent::harness::{
    adversarial_search, check_duality_map, check_normalization_inequality, check_phi_identity, check_resolvent,
    check_support_inequality, check_theorem_main1, estimate_mu, fit_holder_exponent, mu_hat, FitMap, SearchTarget,
};
use lp_resolvent::operators::catalog;
use lp_resolvent::resolvent::resolvent_point;
use lp_resolvent::run::{execute, write_outputs, RunOptions};
use lp_resolvent::{Exec, InequalityReport, MonotoneOperatorSpec, SamplerConfig, SpaceDescriptor};

const SEED: u64 = 42;
const IDENTITY_TOL: f64 = 1e-9;
const FNT_TOL: f64 = 1e-8;
const RESIDUAL_TOL: f64 = 1e-10;
const PROX_TOL: f64 = 1e-8;
const MU_HILBERT_TOL: f64 = 1e-6;
const NORMALIZATION_CONSTANT: f64 = 2.0;
const SLACK: f64 = 1e-6;
const APPROACH: f64 = 1.99;

type Outcome = Result<String, String>;

fn space(n: usize, p: f64) -> SpaceDescriptor {
    SpaceDescriptor::new(n, p).expect("valid space")
}

fn sampler(count: usize) -> SamplerConfig {
    SamplerConfig::with_seed(SEED, count)
}

fn residual(r: &InequalityReport) -> f64 {
    r.get_f64("max_relative_residual").unwrap_or(f64::INFINITY)
}

fn require(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn clean(r: &InequalityReport) -> Result<(), String> {
    require(r.passed && r.violations == 0, || {
        format!("{} failed: violations={} reasons={:?}", r.check_name, r.violations, r.details.get("failure_reasons"))
    })
}

fn phi_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for p in [1.1, 1.5, 2.0] {
        for n in [1, 2, 3, 10, 50] {
            let r = check_phi_identity(&space(n, p), &sampler(10_000)).map_err(|e| e.to_string())?;
            clean(&r)?;
            worst = worst.max(residual(&r));
        }
    }
    require(worst <= IDENTITY_TOL, || format!("worst residual {worst:e}"))?;
    Ok(format!("worst relative residual {worst:e} <= {IDENTITY_TOL:e} over 15 spaces x 1e4 pairs"))
}

fn duality_map() -> Outcome {
    let mut worst: f64 = 0.0;
    for p in [1.1, 1.5, 2.0] {
        for n in [1, 2, 3, 10, 50] {
            let r = check_duality_map(&space(n, p), &sampler(10_000)).map_err(|e| e.to_string())?;
            clean(&r)?;
            worst = worst.max(residual(&r));
        }
    }
    require(worst <= IDENTITY_TOL, || format!("worst residual {worst:e}"))?;
    Ok(format!("worst relative residual {worst:e} <= {IDENTITY_TOL:e} over 15 spaces x 1e4 samples"))
}

fn main1() -> Outcome {
    let mut worst_ratio: f64 = 0.0;
    for p in [1.1, 1.5, 2.0] {
        for n in [2, 10] {
            let s = space(n, p);
            let smp = sampler(100_000);
            let sampled = check_theorem_main1(&s, &smp, None).map_err(|e| e.to_string())?;
            clean(&sampled)?;
            let search = adversarial_search(SearchTarget::Main1, &s, 100, 50, &smp, None).map_err(|e| e.to_string())?;
            clean(&search)?;
            let m = sampled.get_f64("m").unwrap_or(f64::NAN);
            let ratio = search.estimated_constant.unwrap_or(0.0).max(sampled.estimated_constant.unwrap_or(0.0)) / m;
            worst_ratio = worst_ratio.max(ratio);
        }
    }
    Ok(format!("0 violations; largest constant/M = {worst_ratio:.4} over 6 spaces x (1e5 pairs + 100 restarts)"))
}

fn fnt() -> Outcome {
    let (mut worst_fnt, mut worst_res, mut failures, mut runs) = (f64::INFINITY, 0.0f64, 0u64, 0);
    for p in [1.5, 2.0] {
        for n in [2, 10] {
            let s = space(n, p);
            let mu = mu_hat(&s, &sampler(2_000)).map_err(|e| e.to_string())?;
            for (label, op) in catalog(n) {
                for r in [0.1, 1.0, 10.0] {
                    let reps = check_resolvent(&s, &label, &op, r, &sampler(10_000), Some(mu)).map_err(|e| e.to_string())?;
                    let (f, res) = (&reps[0], &reps[1]);
                    clean(f)?;
                    clean(res)?;
                    failures += f.details.get("preparation_failures").and_then(|v| v.as_u64()).unwrap_or(0);
                    worst_fnt = worst_fnt.min(f.worst_margin);
                    worst_res = worst_res.max(residual(res));
                    runs += 1;
                }
            }
        }
    }
    require(worst_res <= RESIDUAL_TOL, || format!("residual {worst_res:e}"))?;
    require(failures == 0, || format!("{failures} uncertified solves"))?;
    Ok(format!(
        "{runs} sweeps x 1e4 pairs; worst fnt margin/scale {:e} >= -{FNT_TOL:e}; worst residual {worst_res:e} <= {RESIDUAL_TOL:e}",
        worst_fnt - FNT_TOL
    ))
}

fn holder() -> Outcome {
    let mut worst_excess = f64::NEG_INFINITY;
    let mut fits = 0;
    for p in [1.1, 1.5, 2.0] {
        for n in [2, 10] {
            let s = space(n, p);
            let smp = sampler(10_000);
            let mu = mu_hat(&s, &sampler(2_000)).map_err(|e| e.to_string())?;
            let j = fit_holder_exponent(FitMap::J, &s, &sampler(1_000)).map_err(|e| e.to_string())?;
            clean(&j.report)?;
            worst_excess = worst_excess.max(j.report.get_f64("max_excess_over_bound_line").unwrap_or(f64::INFINITY));
            fits += 1;
            for (label, op) in catalog(n) {
                let reps = check_resolvent(&s, &label, &op, 1.0, &smp, Some(mu)).map_err(|e| e.to_string())?;
                clean(&reps[3])?;
                let map = FitMap::Resolvent { operator: &op, label: &label, r: 1.0, mu_hat: mu };
                let out = fit_holder_exponent(map, &s, &sampler(1_000)).map_err(|e| e.to_string())?;
                clean(&out.report)?;
                worst_excess = worst_excess.max(out.report.get_f64("max_excess_over_bound_line").unwrap_or(f64::INFINITY));
                fits += 1;
            }
        }
    }
    require(worst_excess <= 0.0, || format!("fit point above the bound line by {worst_excess:e}"))?;
    Ok(format!("0 violations of |Tx-Ty| <= L|x-y|^(q-1) on 1e4 pairs per operator; {fits} fits, max excess over line {worst_excess:e}"))
}

fn hilbert() -> Outcome {
    let s = space(3, 2.0);
    let smp = sampler(10_000);
    let mut worst: f64 = 0.0;
    let mut rng_points = Vec::new();
    for k in 0..200 {
        let t = k as f64;
        rng_points.push(vec![(0.37 * t).sin() * 2.0, (1.3 * t).cos(), (0.11 * t).sin() * (t * 0.01)]);
    }
    for pair in rng_points.windows(2) {
        let (x, y) = (&pair[0], &pair[1]);
        require(raw::duality_map(x, 2.0) == *x, || "J is not the identity".into())?;
        let d = raw::sub(x, y);
        let phi = raw::bregman_phi(x, y, 2.0);
        let dd = raw::dot(&d, &d);
        require((phi - dd).abs() <= 1e-12 * dd.max(1.0), || format!("phi {phi} vs {dd}"))?;
    }
    let (b, lambda, gamma) = (vec![0.3, -0.2, 0.3], 1.0, 0.5);
    let soft = |v: f64, t: f64| v.signum() * (v.abs() - t).max(0.0);
    let ops: Vec<(&str, MonotoneOperatorSpec, Box<dyn Fn(&[f64], f64) -> Vec<f64>>)> = vec![
        ("subgrad_l1", MonotoneOperatorSpec::subgrad_l1(gamma).unwrap(), Box::new(move |x: &[f64], r: f64| x.iter().map(|v| soft(*v, r * gamma)).collect())),
        (
            "grad_quadratic",
            MonotoneOperatorSpec::grad_quadratic(b.clone(), lambda).unwrap(),
            Box::new({
                let b = b.clone();
                move |x: &[f64], r: f64| x.iter().zip(&b).map(|(v, bi)| (v + r * lambda * bi) / (1.0 + r * lambda)).collect()
            }),
        ),
        (
            "grad_quadratic+subgrad_l1",
            MonotoneOperatorSpec::sum(vec![
                MonotoneOperatorSpec::grad_quadratic(b.clone(), lambda).unwrap(),
                MonotoneOperatorSpec::subgrad_l1(gamma).unwrap(),
            ]),
            Box::new({
                let b = b.clone();
                move |x: &[f64], r: f64| {
                    let d = 1.0 + r * lambda;
                    x.iter().zip(&b).map(|(v, bi)| soft((v + r * lambda * bi) / d, r * gamma / d)).collect()
                }
            }),
        ),
        ("scaled_duality", MonotoneOperatorSpec::scaled_duality(2.0).unwrap(), Box::new(|x: &[f64], r: f64| x.iter().map(|v| v / (1.0 + 2.0 * r)).collect())),
        ("constant", MonotoneOperatorSpec::constant(b.clone()).unwrap(), Box::new({
            let b = b.clone();
            move |x: &[f64], r: f64| x.iter().zip(&b).map(|(v, bi)| v - r * bi).collect()
        })),
    ];
    for (name, op, prox) in &ops {
        for r in [0.1, 1.0, 10.0] {
            for x in &rng_points {
                let z = resolvent_point(&s, op, r, x).map_err(|e| format!("{name}: {e}"))?.0;
                let expect = prox(x, r);
                let err = raw::sub(&z, &expect).iter().fold(0.0f64, |a, v| a.max(v.abs()));
                worst = worst.max(err / raw::lp_norm(x, 2.0).max(1.0));
            }
        }
    }
    require(worst <= PROX_TOL, || format!("prox mismatch {worst:e}"))?;
    let mu_report = estimate_mu(&s, &smp).map_err(|e| e.to_string())?;
    let mu = mu_report.estimated_constant.unwrap_or(f64::NAN);
    require((mu - 1.0).abs() <= MU_HILBERT_TOL, || format!("mu_hat = {mu}"))?;
    Ok(format!("J = id, phi = |x-y|^2; prox mismatch {worst:e} <= {PROX_TOL:e}; mu_hat = {mu:.9}"))
}

fn tree(dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
    let mut entries: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            tree(&p, out);
        } else {
            out.push((p.to_string_lossy().into_owned(), fs::read(&p).unwrap()));
        }
    }
}

fn determinism() -> Outcome {
    let base = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut trees = Vec::new();
    let mut exit = 0;
    for (i, exec) in [Exec::Parallel, Exec::Parallel, Exec::Sequential].into_iter().enumerate() {
        let mut c = RunConfig::new(SpaceConfig { dim: 2, p: 1.5 }, Checks::All);
        c.sampler = SamplerConfig { exec, ..sampler(10_000) };
        c.r_values = vec![0.1, 1.0, 10.0];
        c.operator = catalog(2).into_iter().find(|(l, _)| l == "sum_quadratic_l1").unwrap().1;
        let dir = base.path().join(i.to_string());
        let outcome = execute(&c, &RunOptions::default()).map_err(|e| e.to_string())?;
        write_outputs(&c, &outcome, &dir).map_err(|e| e.to_string())?;
        exit = outcome.exit_code();
        let mut t = Vec::new();
        tree(&dir, &mut t);
        let t: Vec<(String, Vec<u8>)> =
            t.into_iter().map(|(p, b)| (p.trim_start_matches(dir.to_str().unwrap()).to_string(), b)).collect();
        trees.push(t);
    }
    require(trees[0] == trees[1], || "two runs differ".into())?;
    require(trees[0] == trees[2], || "sequential run differs from parallel run".into())?;
    Ok(format!("{} files byte-identical across 2 parallel runs and 1 sequential run (run exit code {exit})", trees[0].len()))
}

fn normalization_and_support() -> Outcome {
    let mut spaces = 0;
    for p in [1.1, 1.5, 2.0, 3.0] {
        for n in [2, 10] {
            let s = space(n, p);
            clean(&check_normalization_inequality(&s, &sampler(100_000)).map_err(|e| e.to_string())?)?;
            clean(&check_support_inequality(&s, &sampler(100_000)).map_err(|e| e.to_string())?)?;
            spaces += 1;
        }
    }
    let mut lowest: f64 = f64::INFINITY;
    let mut highest: f64 = 0.0;
    for p in [1.1, 1.5, 2.0, 3.0] {
        let r = adversarial_search(SearchTarget::Normalization, &space(2, p), 100, 50, &sampler(10_000), None)
            .map_err(|e| e.to_string())?;
        clean(&r)?;
        require(r.witness.is_some(), || "no witness".into())?;
        let c = r.estimated_constant.unwrap_or(0.0);
        lowest = lowest.min(c);
        highest = highest.max(c);
    }
    require(highest <= NORMALIZATION_CONSTANT * (1.0 + SLACK), || format!("search ratio {highest}"))?;
    require(lowest >= APPROACH, || format!("search ratio only reached {lowest}"))?;
    Ok(format!("0 violations over {spaces} spaces x 1e5 pairs each; search ratio in [{lowest:.12}, {highest:.12}] <= 2"))
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, u64, fn() -> Outcome); 8] = [
        (1, "phi identity", 10, phi_identity),
        (2, "duality map defining property", 5, duality_map),
        (3, "main1 bound", 60, main1),
        (4, "firmly nonexpansive type margin", 120, fnt),
        (5, "holder bound and fits", 120, holder),
        (6, "hilbert degeneracy", 10, hilbert),
        (7, "determinism", 120, determinism),
        (8, "normalization and support inequalities", 120, normalization_and_support),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, limit, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|a| name.contains(a.as_str()) || a == &id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let limit = Duration::from_secs(limit);
        let verdict = match &outcome {
            Ok(_) if elapsed <= limit => "PASS",
            _ => "FAIL",
        };
        let detail = match outcome {
            Ok(d) => d,
            Err(e) => e,
        };
        if verdict == "FAIL" {
            failed += 1;
        }
        println!("acceptance {id} {name}: {verdict} ({detail}; {:.2}s, limit {}s)", elapsed.as_secs_f64(), limit.as_secs());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
