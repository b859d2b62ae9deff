//! Run configuration, read from TOML.
//!
//! ```toml
//! checks = "all"
//! r_values = [0.1, 1.0, 10.0]
//!
//! [space]
//! dim = 2
//! p = 1.5
//!
//! [operator]
//! kind = "sum"
//! terms = [
//!     { kind = "grad_quadratic", b = [0.0, 0.0], lambda = 1.0 },
//!     { kind = "subgrad_l1", gamma = 0.5 },
//! ]
//! ```
//!
//! Every section is validated while it is read, so a semantic error carries
//! the line and column of the offending value.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SpaceDescriptor;
use crate::operators::MonotoneOperatorSpec;
use crate::sampling::SamplerConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    DualityMap,
    PhiIdentity,
    EstimateMu,
    StrongMonotonicity,
    SupportInequality,
    Keylem1,
    NormalizationInequality,
    TheoremMain1,
    Monotonicity,
    Resolvent,
    HolderFit,
    Adversarial,
}

impl CheckName {
    pub const ALL: [CheckName; 12] = [
        CheckName::DualityMap,
        CheckName::PhiIdentity,
        CheckName::EstimateMu,
        CheckName::StrongMonotonicity,
        CheckName::SupportInequality,
        CheckName::Keylem1,
        CheckName::NormalizationInequality,
        CheckName::TheoremMain1,
        CheckName::Monotonicity,
        CheckName::Resolvent,
        CheckName::HolderFit,
        CheckName::Adversarial,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CheckName::DualityMap => "duality_map",
            CheckName::PhiIdentity => "phi_identity",
            CheckName::EstimateMu => "estimate_mu",
            CheckName::StrongMonotonicity => "strong_monotonicity",
            CheckName::SupportInequality => "support_inequality",
            CheckName::Keylem1 => "keylem1",
            CheckName::NormalizationInequality => "normalization_inequality",
            CheckName::TheoremMain1 => "theorem_main1",
            CheckName::Monotonicity => "monotonicity",
            CheckName::Resolvent => "resolvent",
            CheckName::HolderFit => "holder_fit",
            CheckName::Adversarial => "adversarial",
        }
    }

    /// Checks whose statement needs `1 < p <= 2`.
    pub fn needs_regime(&self) -> bool {
        matches!(
            self,
            CheckName::EstimateMu | CheckName::StrongMonotonicity | CheckName::TheoremMain1 | CheckName::HolderFit
        )
    }
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CheckName::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown check `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Checks {
    All,
    List(Vec<CheckName>),
}

impl Checks {
    pub fn is_all(&self) -> bool {
        matches!(self, Checks::All)
    }

    /// Requested checks in canonical order, without duplicates.
    pub fn resolve(&self) -> Vec<CheckName> {
        match self {
            Checks::All => CheckName::ALL.to_vec(),
            Checks::List(list) => CheckName::ALL.into_iter().filter(|c| list.contains(c)).collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ChecksRepr {
    Word(String),
    List(Vec<CheckName>),
}

impl Serialize for Checks {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Checks::All => ChecksRepr::Word("all".into()).serialize(s),
            Checks::List(l) => ChecksRepr::List(l.clone()).serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Checks {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match ChecksRepr::deserialize(d) {
            Ok(ChecksRepr::Word(w)) if w == "all" => Ok(Checks::All),
            Ok(ChecksRepr::Word(w)) => Err(de::Error::custom(format!("checks must be \"all\" or a list of check names, got \"{w}\""))),
            Ok(ChecksRepr::List(l)) if l.is_empty() => Err(de::Error::custom("checks list must not be empty")),
            Ok(ChecksRepr::List(l)) => Ok(Checks::List(l)),
            Err(_) => Err(de::Error::custom(format!(
                "checks must be \"all\" or a list drawn from: {}",
                CheckName::ALL.map(|c| c.as_str()).join(", ")
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    #[default]
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("format must be csv or json, got `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub dim: usize,
    pub p: f64,
}

impl SpaceConfig {
    pub fn descriptor(&self) -> Result<SpaceDescriptor> {
        SpaceDescriptor::new(self.dim, self.p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    pub restarts: usize,
    pub steps: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { restarts: 100, steps: 50 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub space: SpaceConfig,
    pub operator: MonotoneOperatorSpec,
    pub r_values: Vec<f64>,
    pub sampler: SamplerConfig,
    pub checks: Checks,
    pub output_dir: PathBuf,
    pub format: Format,
    pub search: SearchConfig,
}

pub const DEFAULT_OUTPUT_DIR: &str = "lpres-out";
/// Environment variable that overrides the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "LPRES_OUTPUT_DIR";

impl RunConfig {
    pub fn new(space: SpaceConfig, checks: Checks) -> Self {
        RunConfig {
            space,
            operator: MonotoneOperatorSpec::zero(),
            r_values: vec![1.0],
            sampler: SamplerConfig::default(),
            checks,
            output_dir: PathBuf::from(DEFAULT_OUTPUT_DIR),
            format: Format::Json,
            search: SearchConfig::default(),
        }
    }

    /// Cross-section invariants.
    pub fn validate(&self) -> Result<()> {
        self.space.descriptor()?;
        self.sampler.validate()?;
        check_seed(self.sampler.seed)?;
        check_r_values(&self.r_values)?;
        self.operator.check_dimension(self.space.dim)?;
        if self.search.restarts == 0 || self.search.steps == 0 {
            return Err(Error::Config("search restarts and steps must be positive".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialize(e.to_string()))
    }
}

fn check_seed(seed: u64) -> Result<()> {
    if seed > i64::MAX as u64 {
        return Err(Error::Config("seed must not exceed 2^63 - 1".into()));
    }
    Ok(())
}

fn check_r_values(r: &[f64]) -> Result<()> {
    if r.is_empty() {
        return Err(Error::Config("r_values must not be empty".into()));
    }
    if let Some(v) = r.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::Config(format!("r values must be positive, got {v}")));
    }
    Ok(())
}

/// Deserializes `T` and validates it in place, so the error is attributed
/// to the value's position in the document.
struct Checked<T>(T);

trait Validate {
    fn validate_value(&self) -> Result<()>;
}

#[derive(Deserialize)]
#[serde(transparent)]
struct Dim(usize);

#[derive(Deserialize)]
#[serde(transparent)]
struct Exponent(f64);

impl Validate for Dim {
    fn validate_value(&self) -> Result<()> {
        SpaceDescriptor::new(self.0, 2.0).map(|_| ())
    }
}

impl Validate for Exponent {
    fn validate_value(&self) -> Result<()> {
        SpaceDescriptor::new(1, self.0).map(|_| ())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpace {
    dim: Checked<Dim>,
    p: Checked<Exponent>,
}

impl Validate for SamplerConfig {
    fn validate_value(&self) -> Result<()> {
        self.validate()?;
        check_seed(self.seed)
    }
}

impl Validate for Vec<f64> {
    fn validate_value(&self) -> Result<()> {
        check_r_values(self)
    }
}

impl Validate for SearchConfig {
    fn validate_value(&self) -> Result<()> {
        if self.restarts == 0 || self.steps == 0 {
            return Err(Error::Config("search restarts and steps must be positive".into()));
        }
        Ok(())
    }
}

fn plain(e: Error) -> String {
    match e {
        Error::Parameter(m) | Error::Config(m) | Error::Input(m) => m,
        other => other.to_string(),
    }
}

impl<'de, T: Deserialize<'de> + Validate> Deserialize<'de> for Checked<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = T::deserialize(d)?;
        v.validate_value().map_err(|e| de::Error::custom(plain(e)))?;
        Ok(Checked(v))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    space: RawSpace,
    #[serde(default)]
    operator: Option<MonotoneOperatorSpec>,
    #[serde(default)]
    r_values: Option<Checked<Vec<f64>>>,
    #[serde(default)]
    sampler: Option<Checked<SamplerConfig>>,
    checks: Checks,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    format: Option<Format>,
    #[serde(default)]
    search: Option<Checked<SearchConfig>>,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.chars().count(), |i| before[i + 1..].chars().count()) + 1;
    (line, col)
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let msg = e.message().trim().to_string();
        match e.span() {
            Some(span) => {
                let (line, col) = line_col(text, span.start);
                Error::Config(format!("line {line}, column {col}: {msg}"))
            }
            None => Error::Config(msg),
        }
    })?;
    let mut config = RunConfig::new(SpaceConfig { dim: raw.space.dim.0 .0, p: raw.space.p.0 .0 }, raw.checks);
    if let Some(op) = raw.operator {
        config.operator = op;
    }
    if let Some(r) = raw.r_values {
        config.r_values = r.0;
    }
    if let Some(s) = raw.sampler {
        config.sampler = s.0;
    }
    if let Some(o) = raw.output_dir {
        config.output_dir = o;
    }
    if let Some(f) = raw.format {
        config.format = f;
    }
    if let Some(s) = raw.search {
        config.search = s.0;
    }
    config
        .operator
        .check_dimension(config.space.dim)
        .map_err(|e| Error::Config(format!("operator: {}", plain(e))))?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config("checks = \"all\"\n[space]\ndim = 2\np = 1.5\n").unwrap();
        assert_eq!(c.space, SpaceConfig { dim: 2, p: 1.5 });
        assert!(c.checks.is_all());
        assert_eq!(c.r_values, vec![1.0]);
        assert_eq!(c.sampler, SamplerConfig::default());
        assert_eq!(c.format, Format::Json);
        assert_eq!(c.operator, MonotoneOperatorSpec::zero());
    }

    #[test]
    fn exponent_invariant_is_named_with_position() {
        let e = parse_config("checks = \"all\"\n[space]\ndim = 2\np = 1.0\n").unwrap_err().to_string();
        assert!(e.contains("exponent must exceed 1"), "{e}");
        assert!(e.contains("line 4, column 5"), "{e}");
    }

    #[test]
    fn syntax_error_has_position() {
        let e = parse_config("checks = \"all\"\n[space\ndim = 2\n").unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = parse_config("checks = \"all\"\ncolour = 1\n[space]\ndim = 2\np = 1.5\n").unwrap_err().to_string();
        assert!(e.contains("colour"), "{e}");
        let e = parse_config("checks = \"all\"\n[space]\ndim = 2\np = 1.5\nq = 2\n").unwrap_err().to_string();
        assert!(e.contains("line 5"), "{e}");
        let e = parse_config("checks = \"all\"\n[space]\ndim = 2\np = 1.5\n[sampler]\nsed = 1\n").unwrap_err().to_string();
        assert!(e.contains("sed"), "{e}");
    }

    #[test]
    fn other_semantic_errors() {
        let base = "[space]\ndim = 2\np = 1.5\n";
        for (extra, needle) in [
            ("checks = \"some\"\n", "checks must be"),
            ("checks = [\"nope\"]\n", "checks must be"),
            ("checks = []\n", "must not be empty"),
            ("checks = \"all\"\nr_values = [0.0]\n", "r values must be positive"),
            ("checks = \"all\"\nformat = \"xml\"\n", "xml"),
        ] {
            let e = parse_config(&format!("{extra}{base}")).unwrap_err().to_string();
            assert!(e.contains(needle), "{extra}: {e}");
        }
        let e = parse_config("checks = \"all\"\n[space]\ndim = 2\np = 1.5\n[sampler]\ncount = 0\n").unwrap_err().to_string();
        assert!(e.contains("count must be at least 1") && e.contains("line 5"), "{e}");
        let e = parse_config("checks = \"all\"\n[space]\ndim = 3\np = 1.5\n[operator]\nkind = \"constant\"\nc = [1.0]\n")
            .unwrap_err()
            .to_string();
        assert!(e.contains("operator"), "{e}");
        let e = parse_config("checks = \"all\"\n[space]\ndim = 2\np = 1.5\n[operator]\nkind = \"subgrad_l1\"\ngamma = -1.0\n")
            .unwrap_err()
            .to_string();
        assert!(e.contains("line"), "{e}");
    }

    #[test]
    fn sum_operator_with_three_r_values_round_trips() {
        let text = r#"
checks = ["phi_identity", "resolvent"]
r_values = [0.1, 1, 10]
format = "csv"

[space]
dim = 2
p = 1.5

[operator]
kind = "sum"
terms = [
    { kind = "grad_quadratic", b = [0.0, 0.0], lambda = 1.0 },
    { kind = "subgrad_l1", gamma = 0.5 },
]
"#;
        let c = parse_config(text).unwrap();
        assert_eq!(c.r_values, vec![0.1, 1.0, 10.0]);
        assert_eq!(c.checks.resolve(), vec![CheckName::PhiIdentity, CheckName::Resolvent]);
        let again = parse_config(&c.to_toml().unwrap()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn check_order_is_canonical() {
        let c = Checks::List(vec![CheckName::Adversarial, CheckName::DualityMap, CheckName::Adversarial]);
        assert_eq!(c.resolve(), vec![CheckName::DualityMap, CheckName::Adversarial]);
        assert_eq!("keylem1".parse::<CheckName>().unwrap(), CheckName::Keylem1);
    }

    #[test]
    fn line_col_counts_characters() {
        assert_eq!(line_col("ab\ncd", 4), (2, 2));
        assert_eq!(line_col("ab", 0), (1, 1));
    }
}
