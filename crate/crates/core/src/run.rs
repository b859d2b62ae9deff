//! Executes a [`RunConfig`] and writes its reports.
//!
//! Layout of the output directory:
//!
//! ```text
//! summary.{json,csv}
//! reports/<check>.{json,csv}
//! plot/<fit>.csv          (when holder_fit runs)
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::{CheckName, Format, RunConfig};
use crate::error::{Error, Result};
use crate::geometry::SpaceDescriptor;
use crate::harness::{
    adversarial_search, check_duality_map, check_keylem1, check_normalization_inequality, check_phi_identity,
    check_resolvent, check_strong_monotonicity, check_support_inequality, check_theorem_main1, estimate_mu,
    fit_holder_exponent, FitMap, SearchTarget,
};
use crate::operators::monotonicity_certificate;
use crate::report::{FitPoint, HolderFit, InequalityReport};
use crate::sampling::map_blocks;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const PLOT_HEADER: [&str; 4] = ["base_point_id", "log10_dist", "log10_image_dist", "bound_value"];

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Replaces the main1 constant. Used to exercise the failure path.
    pub m_override: Option<f64>,
    /// Restricts the adversarial check to these targets.
    pub targets: Option<Vec<SearchTarget>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedFit {
    pub name: String,
    pub fit: HolderFit,
    pub points: Vec<FitPoint>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub reports: Vec<InequalityReport>,
    pub fits: Vec<NamedFit>,
    pub notes: Vec<String>,
    pub mu_hat: Option<f64>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.reports.iter().any(InequalityReport::has_confirmed_violation) {
            EXIT_VIOLATION
        } else if self.reports.iter().all(|r| r.passed) {
            EXIT_PASS
        } else {
            EXIT_ERROR
        }
    }
}

enum Item {
    Report(InequalityReport),
    Fit(NamedFit, InequalityReport),
    Note(String),
}

type Task<'a> = Box<dyn Fn() -> Result<Vec<Item>> + Sync + Send + 'a>;

fn reports(r: Result<InequalityReport>) -> Result<Vec<Item>> {
    r.map(|r| vec![Item::Report(r)])
}

/// Runs every requested check. Regime-limited checks are skipped with a note
/// for `p > 2` when the configuration asks for all checks, and are an error
/// when requested by name.
pub fn execute(config: &RunConfig, opts: &RunOptions) -> Result<RunOutcome> {
    config.validate()?;
    let space = config.space.descriptor()?;
    let sampler = &config.sampler;
    let requested = config.checks.resolve();
    let mut notes = Vec::new();
    let mut selected = Vec::new();
    for c in requested {
        if c.needs_regime() && !space.in_theorem_regime() {
            if config.checks.is_all() {
                notes.push(format!("{c} skipped: p = {} lies outside 1 < p <= 2", space.p()));
                continue;
            }
            return Err(Error::Regime { p: space.p() });
        }
        selected.push(c);
    }

    let needs_mu = space.in_theorem_regime()
        && selected.iter().any(|c| {
            matches!(c, CheckName::EstimateMu | CheckName::StrongMonotonicity | CheckName::Resolvent | CheckName::HolderFit)
        });
    let mu_report = if needs_mu { Some(estimate_mu(&space, sampler)?) } else { None };
    let mu_hat = mu_report.as_ref().and_then(|r| r.estimated_constant);
    if needs_mu && mu_hat.is_none() {
        return Err(Error::Parameter("mu estimate is not available".into()));
    }
    if selected.contains(&CheckName::Resolvent) && !space.in_theorem_regime() {
        notes.push("coarse_bound and holder_T skipped: p > 2".into());
    }

    let op = &config.operator;
    let label = op.label();
    let targets: Vec<SearchTarget> = SearchTarget::ALL
        .into_iter()
        .filter(|t| opts.targets.as_ref().is_none_or(|ts| ts.contains(t)))
        .collect();
    if selected.contains(&CheckName::Adversarial) && !space.in_theorem_regime() {
        if opts.targets.is_some() && targets.iter().any(SearchTarget::in_regime_only) {
            return Err(Error::Regime { p: space.p() });
        }
        if targets.iter().any(SearchTarget::in_regime_only) {
            notes.push("adversarial search on theorem_main1 and estimate_mu skipped: p > 2".into());
        }
    }
    let targets: Vec<SearchTarget> =
        targets.into_iter().filter(|t| !t.in_regime_only() || space.in_theorem_regime()).collect();

    let mut tasks: Vec<Task> = Vec::new();
    for c in &selected {
        let space = &space;
        let label = &label;
        match c {
            CheckName::DualityMap => tasks.push(Box::new(move || reports(check_duality_map(space, sampler)))),
            CheckName::PhiIdentity => tasks.push(Box::new(move || reports(check_phi_identity(space, sampler)))),
            CheckName::EstimateMu => {
                let r = mu_report.clone().expect("computed above");
                tasks.push(Box::new(move || Ok(vec![Item::Report(r.clone())])));
            }
            CheckName::StrongMonotonicity => {
                tasks.push(Box::new(move || reports(check_strong_monotonicity(space, sampler, mu_hat))))
            }
            CheckName::SupportInequality => tasks.push(Box::new(move || reports(check_support_inequality(space, sampler)))),
            CheckName::Keylem1 => tasks.push(Box::new(move || reports(check_keylem1(space, sampler)))),
            CheckName::NormalizationInequality => {
                tasks.push(Box::new(move || reports(check_normalization_inequality(space, sampler))))
            }
            CheckName::TheoremMain1 => {
                let m = opts.m_override;
                tasks.push(Box::new(move || reports(check_theorem_main1(space, sampler, m))))
            }
            CheckName::Monotonicity => tasks.push(Box::new(move || reports(monotonicity_certificate(op, space, sampler)))),
            CheckName::Resolvent => {
                for &r in &config.r_values {
                    tasks.push(Box::new(move || {
                        check_resolvent(space, label, op, r, sampler, mu_hat).map(|v| v.into_iter().map(Item::Report).collect())
                    }));
                }
            }
            CheckName::HolderFit => {
                let mu = mu_hat.expect("regime checked");
                let mut maps = vec![FitMap::J];
                maps.extend(config.r_values.iter().map(|&r| FitMap::Resolvent { operator: op, label, r, mu_hat: mu }));
                for map in maps {
                    tasks.push(Box::new(move || match fit_holder_exponent(map, space, sampler) {
                        Ok(out) => {
                            let named = NamedFit { name: map.name(), fit: out.fit, points: out.points };
                            Ok(vec![Item::Fit(named, out.report)])
                        }
                        // a map that is constant on the ball leaves nothing to fit
                        Err(Error::Input(msg)) => Ok(vec![Item::Note(format!("{} skipped: {msg}", map.name()))]),
                        Err(e) => Err(e),
                    }));
                }
            }
            CheckName::Adversarial => {
                for &t in &targets {
                    let (restarts, steps, m) = (config.search.restarts, config.search.steps, opts.m_override);
                    tasks.push(Box::new(move || reports(adversarial_search(t, space, restarts, steps, sampler, m))));
                }
            }
        }
    }

    let results = map_blocks(sampler.exec, tasks.len(), |i| tasks[i]());
    let mut all = Vec::new();
    let mut fits = Vec::new();
    for r in results {
        for item in r? {
            match item {
                Item::Report(r) => all.push(r),
                Item::Fit(f, r) => {
                    all.push(r);
                    fits.push(f);
                }
                Item::Note(n) => notes.push(n),
            }
        }
    }
    all.sort_by(|a, b| a.check_name.cmp(&b.check_name));
    fits.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(RunOutcome { reports: all, fits, notes, mu_hat })
}

/// File stem for a check name.
pub fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn value_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.as_f64().filter(|_| n.is_f64()).map_or_else(|| n.to_string(), fmt_f64),
        other => other.to_string(),
    }
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::Serialize(e.to_string())
}

fn key_value_csv(rows: &[(String, String)]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(["field", "value"]).map_err(csv_error)?;
    for (k, v) in rows {
        w.write_record([k, v]).map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Serialize(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialize(e.to_string()))
}

fn report_rows(r: &InequalityReport) -> Vec<(String, String)> {
    let mut rows = vec![
        ("check_name".to_string(), r.check_name.clone()),
        ("passed".into(), r.passed.to_string()),
        ("samples".into(), r.samples.to_string()),
        ("violations".into(), r.violations.to_string()),
        ("worst_margin".into(), fmt_f64(r.worst_margin)),
        ("estimated_constant".into(), opt_f64(r.estimated_constant)),
    ];
    if let Some(w) = &r.witness {
        let vec_text = |v: &[f64]| v.iter().map(|c| fmt_f64(*c)).collect::<Vec<_>>().join(" ");
        rows.push(("witness.x".into(), vec_text(&w.x)));
        rows.push(("witness.y".into(), vec_text(&w.y)));
        rows.push(("witness.margin".into(), fmt_f64(w.margin)));
        rows.push(("witness.precise_margin".into(), opt_f64(w.precise_margin)));
    }
    for (k, v) in &r.details {
        rows.push((format!("details.{k}"), value_text(v)));
    }
    rows
}

fn json_text(v: &impl serde::Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Serialize(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn conventions(space: &SpaceDescriptor) -> Value {
    json!({
        "mu": "mu_hat = sampled sup of |x-y|^2/phi(x,y), refined by local ascent; holder constant uses mu = 2*mu_hat; coarse bound uses mu_hat",
        "mu_forms_reported": ["(1/mu)|x-y|^2 <= phi(x,y) with mu = mu_hat", "(1/(2mu))|x-y|^2 <= <x-y,Jx-Jy> with mu = mu_hat"],
        "rho_ceiling": if space.is_hilbert() { "sqrt(1+tau^2)-1" } else if space.p() < 2.0 { "tau^p/p" } else { "(p-1)tau^2/2" },
        "main1_constant": "M = 2^(2q) K, K = 1/q",
        "holder_constant": "L = mu M R^(2-q)",
        "slack": "rhs * (1 + 1e-6) unless stated in the report",
        "reverification": "256-bit arithmetic; a violation needs a margin below -1e-12",
    })
}

fn summary_value(config: &RunConfig, outcome: &RunOutcome, space: &SpaceDescriptor) -> Value {
    let checks: Vec<Value> = outcome
        .reports
        .iter()
        .map(|r| {
            json!({
                "check_name": r.check_name,
                "passed": r.passed,
                "samples": r.samples,
                "violations": r.violations,
                "worst_margin": r.worst_margin,
                "estimated_constant": r.estimated_constant,
                "max_relative_residual": r.get_f64("max_relative_residual"),
            })
        })
        .collect();
    json!({
        "version": VERSION,
        "seed": config.sampler.seed,
        "count": config.sampler.count,
        "radius": config.sampler.radius,
        "space": { "dim": space.dim(), "p": space.p(), "p_conj": space.p_conj(), "q": space.q_smooth() },
        "operator": config.operator.label(),
        "r_values": config.r_values,
        "mu_hat": outcome.mu_hat,
        "conventions": conventions(space),
        "notes": outcome.notes,
        "exit_code": outcome.exit_code(),
        "checks": checks,
    })
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, v) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        other => out.push((prefix.to_string(), value_text(other))),
    }
}

fn summary_rows(summary: &Value) -> Vec<(String, String)> {
    let mut rows = Vec::new();
    for (k, v) in summary.as_object().expect("object") {
        if k == "checks" {
            for c in v.as_array().expect("array") {
                let name = c["check_name"].as_str().unwrap_or_default();
                for (ck, cv) in c.as_object().expect("object") {
                    if ck != "check_name" {
                        flatten(&format!("check.{name}.{ck}"), cv, &mut rows);
                    }
                }
            }
        } else {
            flatten(k, v, &mut rows);
        }
    }
    rows
}

/// Writes one CSV per fit with the point cloud and the bound line value per
/// point. An empty set produces a single header-only `holder_fit.csv`.
pub fn emit_plot_data(dir: &Path, fits: &[NamedFit]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    let mut write = |stem: &str, points: &[FitPoint]| -> Result<()> {
        let path = dir.join(format!("{stem}.csv"));
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(&path).map_err(csv_error)?;
        w.write_record(PLOT_HEADER).map_err(csv_error)?;
        for p in points {
            w.write_record([
                p.base_point_id.to_string(),
                fmt_f64(p.log10_dist),
                fmt_f64(p.log10_image_dist),
                fmt_f64(p.bound_value),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        paths.push(path);
        Ok(())
    };
    if fits.is_empty() {
        write("holder_fit", &[])?;
    }
    for f in fits {
        write(&file_stem(&f.name), &f.points)?;
    }
    Ok(paths)
}

/// Writes the summary, one file per report, and plot data when fits ran.
pub fn write_outputs(config: &RunConfig, outcome: &RunOutcome, dir: &Path) -> Result<()> {
    let space = config.space.descriptor()?;
    let report_dir = dir.join("reports");
    fs::create_dir_all(&report_dir)?;
    let ext = match config.format {
        Format::Json => "json",
        Format::Csv => "csv",
    };
    for r in &outcome.reports {
        let text = match config.format {
            Format::Json => json_text(r)?,
            Format::Csv => key_value_csv(&report_rows(r))?,
        };
        write_text(&report_dir.join(format!("{}.{ext}", file_stem(&r.check_name))), &text)?;
    }
    let summary = summary_value(config, outcome, &space);
    let text = match config.format {
        Format::Json => json_text(&summary)?,
        Format::Csv => key_value_csv(&summary_rows(&summary))?,
    };
    write_text(&dir.join(format!("summary.{ext}")), &text)?;
    if config.checks.resolve().contains(&CheckName::HolderFit) && space.in_theorem_regime() {
        emit_plot_data(&dir.join("plot"), &outcome.fits)?;
    }
    Ok(())
}

/// Executes the configuration, writes its outputs under `config.output_dir`
/// and returns the outcome.
pub fn run(config: &RunConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let outcome = execute(config, opts)?;
    write_outputs(config, &outcome, &config.output_dir)?;
    Ok(outcome)
}
