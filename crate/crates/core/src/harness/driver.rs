//! Generic sampled driver for pairwise inequalities.
//!
//! A check prepares per-pair data (the pair itself plus anything derived
//! from it, such as resolvent values), then evaluates one or more
//! sub-inequalities on that data. Evaluation is generic over [`Scalar`] so
//! that negative margins found in `f64` can be re-evaluated at 256 bits
//! before they are counted.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::geometry::SpaceDescriptor;
use crate::report::{InequalityReport, Witness};
use crate::sampling::{map_blocks, sample_pair, tag_of, DegenerateCase, SamplerConfig};
use crate::scalar::{Precise, Scalar};

/// Candidates re-evaluated in high precision, per sub-check.
pub const MAX_REVERIFY: usize = 256;
/// A re-evaluated margin below this confirms a violation.
pub const CONFIRM_TOL: f64 = 1e-12;
/// Default multiplicative slack on right-hand sides.
pub const SLACK: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    /// Relative slack on the right-hand side of a bound.
    pub slack: f64,
    /// Absolute floor, multiplied by the scale of the comparison.
    pub floor: f64,
    /// Tolerance of an identity, relative to its scale.
    pub tol: f64,
    /// Fraction of pairs whose preparation may fail before the check fails.
    pub max_failure_fraction: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            slack: SLACK,
            floor: 1e-12,
            tol: 1e-10,
            max_failure_fraction: 0.0,
        }
    }
}

pub enum Eval<S> {
    /// Outside the hypotheses of the statement.
    Skip(&'static str),
    /// `lhs <= rhs`. `ratio_ok` marks pairs that may enter the ratio
    /// `lhs/rhs` used for constant estimates.
    Bound { lhs: S, rhs: S, scale: Option<S>, ratio_ok: bool },
    /// `err == 0` up to `tol·scale`.
    Identity { err: S, scale: S },
}

impl<S: Scalar> Eval<S> {
    pub fn bound(lhs: S, rhs: S) -> Self {
        Eval::Bound { lhs, rhs, scale: None, ratio_ok: true }
    }

    /// Normalized margin; negative means the statement fails at this pair.
    pub fn margin(&self, t: &Tolerance) -> Option<S> {
        match self {
            Eval::Skip(_) => None,
            Eval::Bound { lhs, rhs, scale, .. } => {
                let scale = scale
                    .clone()
                    .unwrap_or_else(|| S::one().max_of(lhs.abs()).max_of(rhs.abs()));
                let slack = S::from_f64(t.slack) * rhs.abs();
                let floor = S::from_f64(t.floor) * scale.clone();
                Some((rhs.clone() + slack + floor - lhs.clone()) / scale)
            }
            Eval::Identity { err, scale } => Some(S::one() - err.clone() / (S::from_f64(t.tol) * scale.clone())),
        }
    }

    fn ratio(&self) -> Option<f64> {
        match self {
            Eval::Bound { lhs, rhs, ratio_ok: true, .. } => {
                let (l, r) = (lhs.to_f64(), rhs.to_f64());
                (r > 0.0).then(|| l / r)
            }
            _ => None,
        }
    }

    fn relative_error(&self) -> Option<f64> {
        match self {
            Eval::Identity { err, scale } => Some(err.to_f64() / scale.to_f64()),
            _ => None,
        }
    }
}

pub enum Prepared {
    Data(Vec<Vec<f64>>),
    Skip(&'static str),
    Failed(String),
}

pub trait PairCheck: Sync {
    /// Names of the sub-checks, in the order `eval` returns them.
    fn names(&self) -> Vec<String>;
    /// Name of the sampling stream.
    fn stream(&self) -> String {
        self.names()[0].clone()
    }
    fn space(&self) -> &SpaceDescriptor;
    fn tolerance(&self, sub: usize) -> Tolerance;
    /// Factor turning the sup of `lhs/rhs` into a constant estimate.
    fn ratio_scale(&self, _sub: usize) -> Option<f64> {
        None
    }
    fn sample(&self, rng: &mut ChaCha8Rng, sampler: &SamplerConfig) -> (Vec<f64>, Vec<f64>) {
        sample_pair(rng, self.space(), sampler)
    }
    fn prepare(&self, x: &[f64], y: &[f64]) -> Prepared {
        Prepared::Data(vec![x.to_vec(), y.to_vec()])
    }
    fn eval<S: Scalar>(&self, data: &[Vec<S>]) -> Vec<Eval<S>>;
    fn degenerate(&self, sampler: &SamplerConfig) -> Vec<DegenerateCase> {
        crate::sampling::degenerate_cases(self.space(), sampler.radius)
    }
}

#[derive(Clone, Debug)]
struct Candidate {
    index: u64,
    margin: f64,
    data: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
struct Tally {
    evaluated: u64,
    skipped: BTreeMap<String, u64>,
    worst: f64,
    worst_index: u64,
    worst_data: Option<Vec<Vec<f64>>>,
    /// Smallest margin among nonnegative ones.
    worst_nonneg: f64,
    max_ratio: f64,
    max_ratio_data: Option<Vec<Vec<f64>>>,
    max_rel_err: f64,
    identities: u64,
    candidates: Vec<Candidate>,
    n_candidates: u64,
}

impl Tally {
    fn new() -> Self {
        Tally {
            evaluated: 0,
            skipped: BTreeMap::new(),
            worst: f64::INFINITY,
            worst_index: u64::MAX,
            worst_data: None,
            worst_nonneg: f64::INFINITY,
            max_ratio: f64::NEG_INFINITY,
            max_ratio_data: None,
            max_rel_err: 0.0,
            identities: 0,
            candidates: Vec::new(),
            n_candidates: 0,
        }
    }

    fn record(&mut self, index: u64, eval: &Eval<f64>, tol: &Tolerance, data: &[Vec<f64>]) {
        if let Eval::Skip(reason) = eval {
            *self.skipped.entry((*reason).to_string()).or_default() += 1;
            return;
        }
        let m = eval.margin(tol).expect("not a skip");
        self.evaluated += 1;
        // NaN margins count as failures
        let m = if m.is_nan() { f64::NEG_INFINITY } else { m };
        if m < self.worst {
            self.worst = m;
            self.worst_index = index;
            self.worst_data = Some(data.to_vec());
        }
        if m >= 0.0 {
            self.worst_nonneg = self.worst_nonneg.min(m);
        } else {
            self.n_candidates += 1;
            self.candidates.push(Candidate { index, margin: m, data: data.to_vec() });
            if self.candidates.len() > 2 * MAX_REVERIFY {
                self.trim();
            }
        }
        if let Some(r) = eval.ratio() {
            if r > self.max_ratio {
                self.max_ratio = r;
                self.max_ratio_data = Some(data.to_vec());
            }
        }
        if let Some(e) = eval.relative_error() {
            self.max_rel_err = self.max_rel_err.max(e);
            self.identities += 1;
        }
    }

    fn trim(&mut self) {
        self.candidates
            .sort_by(|a, b| a.margin.total_cmp(&b.margin).then(a.index.cmp(&b.index)));
        self.candidates.truncate(MAX_REVERIFY);
    }

    fn merge(&mut self, other: Tally) {
        self.evaluated += other.evaluated;
        for (k, v) in other.skipped {
            *self.skipped.entry(k).or_default() += v;
        }
        if other.worst < self.worst {
            self.worst = other.worst;
            self.worst_index = other.worst_index;
            self.worst_data = other.worst_data;
        }
        self.worst_nonneg = self.worst_nonneg.min(other.worst_nonneg);
        if other.max_ratio > self.max_ratio {
            self.max_ratio = other.max_ratio;
            self.max_ratio_data = other.max_ratio_data;
        }
        self.max_rel_err = self.max_rel_err.max(other.max_rel_err);
        self.identities += other.identities;
        self.n_candidates += other.n_candidates;
        self.candidates.extend(other.candidates);
        self.trim();
    }
}

struct BlockResult {
    tallies: Vec<Tally>,
    attempted: u64,
    failures: u64,
    first_failure: Option<String>,
}

fn to_precise(data: &[Vec<f64>]) -> Vec<Vec<Precise>> {
    data.iter()
        .map(|v| v.iter().map(|c| Precise::from_f64(*c)).collect())
        .collect()
}

/// Re-evaluates sub-check `sub` on `data` at 256 bits.
pub fn precise_margin<C: PairCheck>(check: &C, sub: usize, data: &[Vec<f64>]) -> Option<f64> {
    let evals = check.eval(&to_precise(data));
    evals[sub].margin(&check.tolerance(sub)).map(|m| m.to_f64())
}

/// Outcome of a driver run: one report per sub-check, plus the pair that
/// attained the largest ratio for each.
pub struct DriverOutput {
    pub reports: Vec<InequalityReport>,
    pub max_ratio_pairs: Vec<Option<Vec<Vec<f64>>>>,
}

pub fn run_pair_check<C: PairCheck>(check: &C, sampler: &SamplerConfig) -> DriverOutput {
    let names = check.names();
    let k = names.len();
    let tols: Vec<Tolerance> = (0..k).map(|s| check.tolerance(s)).collect();
    let tag = tag_of(&check.stream());

    let blocks = map_blocks(sampler.exec, sampler.n_blocks(), |b| {
        let mut rng = sampler.rng(tag, b);
        let mut out = BlockResult {
            tallies: vec![Tally::new(); k],
            attempted: 0,
            failures: 0,
            first_failure: None,
        };
        for i in sampler.block_range(b) {
            let (x, y) = check.sample(&mut rng, sampler);
            out.attempted += 1;
            match check.prepare(&x, &y) {
                Prepared::Data(data) => {
                    for (s, e) in check.eval(&data).iter().enumerate() {
                        out.tallies[s].record(i as u64, e, &tols[s], &data);
                    }
                }
                Prepared::Skip(reason) => {
                    for t in &mut out.tallies {
                        *t.skipped.entry(reason.to_string()).or_default() += 1;
                    }
                }
                Prepared::Failed(msg) => {
                    out.failures += 1;
                    out.first_failure.get_or_insert(msg);
                }
            }
        }
        out
    });

    let mut tallies = vec![Tally::new(); k];
    let mut attempted = 0;
    let mut failures = 0;
    let mut first_failure = None;
    for block in blocks {
        attempted += block.attempted;
        failures += block.failures;
        if first_failure.is_none() {
            first_failure = block.first_failure;
        }
        for (t, o) in tallies.iter_mut().zip(block.tallies) {
            t.merge(o);
        }
    }

    // dedicated degenerate inputs, classified by the statement's hypotheses
    let mut degenerate: Vec<BTreeMap<String, Value>> = vec![BTreeMap::new(); k];
    for (j, case) in check.degenerate(sampler).into_iter().enumerate() {
        let index = sampler.count as u64 + j as u64;
        match check.prepare(&case.x, &case.y) {
            Prepared::Data(data) => {
                for (s, e) in check.eval(&data).iter().enumerate() {
                    let entry = match (e, e.margin(&tols[s])) {
                        (Eval::Skip(reason), _) => json!({ "included": false, "reason": reason }),
                        (_, Some(m)) => json!({ "included": true, "margin": finite_or_string(m) }),
                        _ => unreachable!(),
                    };
                    degenerate[s].insert(case.name.to_string(), entry);
                    tallies[s].record(index, e, &tols[s], &data);
                }
            }
            Prepared::Skip(reason) => {
                for d in &mut degenerate {
                    d.insert(case.name.to_string(), json!({ "included": false, "reason": reason }));
                }
            }
            Prepared::Failed(msg) => {
                failures += 1;
                attempted += 1;
                first_failure.get_or_insert(msg);
            }
        }
    }

    let mut reports = Vec::with_capacity(k);
    let mut max_ratio_pairs = Vec::with_capacity(k);
    for (s, tally) in tallies.into_iter().enumerate() {
        let mut report = InequalityReport::new(names[s].clone());
        report.samples = tally.evaluated;
        report.detail("skipped", serde_json::to_value(&tally.skipped).expect("map"));
        report.detail("degenerate_cases", serde_json::to_value(&degenerate[s]).expect("map"));
        report.detail_f64("slack", tols[s].slack);
        report.detail_f64("floor", tols[s].floor);

        let mut confirmed: Vec<(f64, f64, Vec<Vec<f64>>)> = Vec::new();
        let mut worst = tally.worst_nonneg;
        for c in &tally.candidates {
            // a pair that leaves the hypotheses at high precision is not a witness
            let Some(pm) = precise_margin(check, s, &c.data) else { continue };
            worst = worst.min(pm);
            if pm < -CONFIRM_TOL || pm.is_nan() {
                confirmed.push((c.margin, pm, c.data.clone()));
            }
        }
        let unverified = tally.n_candidates.saturating_sub(tally.candidates.len() as u64);
        if unverified > 0 {
            // margins beyond the re-verification budget are the least negative
            let least = tally.candidates.iter().map(|c| c.margin).fold(f64::NEG_INFINITY, f64::max);
            worst = worst.min(least);
        }
        report.worst_margin = if tally.evaluated == 0 { 0.0 } else { worst };
        report.violations = confirmed.len() as u64;
        report.detail("f64_negative_margins", tally.n_candidates);
        report.detail("reverified", tally.candidates.len() as u64);
        report.detail("unverified_candidates", unverified);
        if tally.identities > 0 {
            report.detail_f64("max_relative_residual", tally.max_rel_err);
            report.detail_f64("tolerance", tols[s].tol);
        }
        if tally.max_ratio.is_finite() {
            report.detail_f64("max_ratio", tally.max_ratio);
            if let Some(scale) = check.ratio_scale(s) {
                report.estimated_constant = Some(tally.max_ratio * scale);
            }
        }
        confirmed.sort_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((m, pm, data)) = confirmed.first() {
            report.witness = Some(Witness { x: data[0].clone(), y: data[1].clone(), margin: *m, precise_margin: Some(*pm) });
            report.fail(format!("{} re-verified violation(s)", confirmed.len()));
        } else if let Some(data) = &tally.worst_data {
            report.witness = Some(Witness { x: data[0].clone(), y: data[1].clone(), margin: tally.worst, precise_margin: None });
        }
        report.detail("attempted", attempted);
        if failures > 0 {
            report.detail("preparation_failures", failures);
            if let Some(msg) = &first_failure {
                report.detail("first_failure", msg.clone());
            }
            let frac = failures as f64 / attempted.max(1) as f64;
            if frac > tols[s].max_failure_fraction {
                report.fail(format!("preparation failed on {failures} of {attempted} pairs"));
            }
        }
        if tally.evaluated == 0 {
            report.fail("no pair satisfied the hypotheses");
        }
        reports.push(report);
        max_ratio_pairs.push(tally.max_ratio_data);
    }
    DriverOutput { reports, max_ratio_pairs }
}

pub(crate) fn finite_or_string(v: f64) -> Value {
    serde_json::Number::from_f64(v)
        .map(Value::Number)
        .unwrap_or_else(|| Value::String(format!("{v}")))
}
