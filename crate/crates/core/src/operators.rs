//! Catalog of single-valued monotone operators `A: E → E*`.
//!
//! Outputs are coordinates in E*, paired with E by the plain dot product,
//! so monotonicity is `(x − y)·(Ax − Ay) >= 0` in coordinates. The ℓ1
//! subgradient is represented by the selection `sign(0) = 0`; evaluations at
//! such kinks are flagged with `is_selection`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{raw, DualVector, PrimalVector, SpaceDescriptor};
use crate::report::InequalityReport;
use crate::sampling::{map_blocks, point_in_ball, substream, tag_of, SamplerConfig};

/// Smallest admissible eigenvalue of the symmetric part of a linear operator.
pub const PSD_TOL: f64 = 1e-10;
/// Allowed negative slack in the sampled monotonicity certificate.
pub const MONOTONE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum Operator {
    Zero,
    /// `Az = c` for a fixed functional `c`.
    Constant { c: Vec<f64> },
    /// `Az = Gz` with `(G + Gᵀ)/2` positive semidefinite.
    LinearPsd { matrix: Vec<Vec<f64>> },
    /// `Az = λ Jz`.
    ScaledDuality { lambda: f64 },
    /// `Az = λ (z − b)`, the gradient of `λ/2 |z − b|²` in coordinates.
    GradQuadratic { b: Vec<f64>, lambda: f64 },
    /// `Az = γ sign(z)` with `sign(0) = 0`.
    SubgradL1 { gamma: f64 },
    Sum { terms: Vec<MonotoneOperatorSpec> },
}

/// An operator together with its domain `C`, a centered closed ball
/// (`None` means `C = E`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OperatorDecl", into = "OperatorDecl")]
pub struct MonotoneOperatorSpec {
    operator: Operator,
    domain_radius: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorEvaluation<'s> {
    pub input: PrimalVector<'s>,
    pub output: DualVector<'s>,
    /// True when a subgradient selection was made at a kink.
    pub is_selection: bool,
}

fn nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be a finite nonnegative number, got {v}")))
    }
}

fn finite_vec(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} has non-finite entries")))
    }
}

/// Smallest eigenvalue of `(G + Gᵀ)/2`.
pub fn symmetric_part_min_eigenvalue(matrix: &[Vec<f64>]) -> Result<f64> {
    let n = matrix.len();
    if n == 0 || matrix.iter().any(|row| row.len() != n) {
        return Err(Error::Parameter("linear_psd matrix must be square and nonempty".into()));
    }
    let g = DMatrix::from_fn(n, n, |i, j| matrix[i][j]);
    let sym = (&g + g.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

impl MonotoneOperatorSpec {
    fn wrap(operator: Operator) -> Self {
        MonotoneOperatorSpec { operator, domain_radius: None }
    }

    pub fn zero() -> Self {
        Self::wrap(Operator::Zero)
    }

    pub fn constant(c: Vec<f64>) -> Result<Self> {
        finite_vec("c", &c)?;
        Ok(Self::wrap(Operator::Constant { c }))
    }

    /// Certifies `λ_min((G + Gᵀ)/2) >= −1e-10` before accepting `G`.
    pub fn linear_psd(matrix: Vec<Vec<f64>>) -> Result<Self> {
        for row in &matrix {
            finite_vec("matrix", row)?;
        }
        let min_eig = symmetric_part_min_eigenvalue(&matrix)?;
        if min_eig < -PSD_TOL {
            return Err(Error::Parameter(format!(
                "linear_psd matrix is not monotone: symmetric part has eigenvalue {min_eig:e}"
            )));
        }
        Ok(Self::wrap(Operator::LinearPsd { matrix }))
    }

    pub fn scaled_duality(lambda: f64) -> Result<Self> {
        nonneg("lambda", lambda)?;
        Ok(Self::wrap(Operator::ScaledDuality { lambda }))
    }

    pub fn grad_quadratic(b: Vec<f64>, lambda: f64) -> Result<Self> {
        nonneg("lambda", lambda)?;
        finite_vec("b", &b)?;
        Ok(Self::wrap(Operator::GradQuadratic { b, lambda }))
    }

    pub fn subgrad_l1(gamma: f64) -> Result<Self> {
        nonneg("gamma", gamma)?;
        Ok(Self::wrap(Operator::SubgradL1 { gamma }))
    }

    pub fn sum(terms: Vec<MonotoneOperatorSpec>) -> Self {
        Self::wrap(Operator::Sum { terms })
    }

    pub fn with_domain_radius(mut self, radius: f64) -> Result<Self> {
        if radius.is_nan() || radius <= 0.0 {
            return Err(Error::Parameter(format!("domain radius must be positive, got {radius}")));
        }
        self.domain_radius = if radius.is_infinite() { None } else { Some(radius) };
        Ok(self)
    }

    /// Short name: the kind, with sum terms joined by `+`.
    pub fn label(&self) -> String {
        match &self.operator {
            Operator::Zero => "zero".into(),
            Operator::Constant { .. } => "constant".into(),
            Operator::LinearPsd { .. } => "linear_psd".into(),
            Operator::ScaledDuality { .. } => "scaled_duality".into(),
            Operator::GradQuadratic { .. } => "grad_quadratic".into(),
            Operator::SubgradL1 { .. } => "subgrad_l1".into(),
            Operator::Sum { terms } => terms.iter().map(|t| t.label()).collect::<Vec<_>>().join("+"),
        }
    }

    pub fn operator(&self) -> &Operator {
        &self.operator
    }

    /// Radius of the effective domain; a sum lives on the intersection.
    pub fn domain_radius(&self) -> Option<f64> {
        let own = self.domain_radius;
        let inner = match &self.operator {
            Operator::Sum { terms } => terms.iter().filter_map(|t| t.domain_radius()).reduce(f64::min),
            _ => None,
        };
        match (own, inner) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    pub fn check_domain(&self, space: &SpaceDescriptor, z: &[f64]) -> Result<()> {
        if let Some(radius) = self.domain_radius() {
            let norm = raw::lp_norm(z, space.p());
            if norm > radius {
                return Err(Error::Domain { norm, radius });
            }
        }
        Ok(())
    }

    /// Parameter dimensions must match the space.
    pub fn check_dimension(&self, dim: usize) -> Result<()> {
        let bad = |what: &str, got: usize| {
            Err(Error::SpaceMismatch(format!("{what} has dimension {got}, space has {dim}")))
        };
        match &self.operator {
            Operator::Constant { c } if c.len() != dim => bad("constant c", c.len()),
            Operator::LinearPsd { matrix } if matrix.len() != dim => bad("linear_psd matrix", matrix.len()),
            Operator::GradQuadratic { b, .. } if b.len() != dim => bad("grad_quadratic b", b.len()),
            Operator::Sum { terms } => terms.iter().try_for_each(|t| t.check_dimension(dim)),
            _ => Ok(()),
        }
    }

    /// True if evaluation may need a subgradient selection.
    pub fn has_selection(&self) -> bool {
        self.composite_unchecked().gamma > 0.0
    }

    /// Flattened form `Az = Gz + λ_s Jz + λ_g z + shift + γ sign(z)`.
    pub fn composite(&self, dim: usize) -> Result<Composite> {
        self.check_dimension(dim)?;
        let mut c = self.composite_unchecked();
        c.shift.resize(dim, 0.0);
        Ok(c)
    }

    fn composite_unchecked(&self) -> Composite {
        let mut acc = Composite::default();
        self.accumulate(&mut acc);
        acc
    }

    fn accumulate(&self, acc: &mut Composite) {
        let add_into = |dst: &mut Vec<f64>, src: &[f64], w: f64| {
            if dst.len() < src.len() {
                dst.resize(src.len(), 0.0);
            }
            dst.iter_mut().zip(src).for_each(|(d, s)| *d += w * s);
        };
        match &self.operator {
            Operator::Zero => {}
            Operator::Constant { c } => add_into(&mut acc.shift, c, 1.0),
            Operator::LinearPsd { matrix } => {
                let n = matrix.len();
                let g = DMatrix::from_fn(n, n, |i, j| matrix[i][j]);
                acc.matrix = Some(match acc.matrix.take() {
                    Some(m) => m + g,
                    None => g,
                });
            }
            Operator::ScaledDuality { lambda } => acc.lambda_duality += lambda,
            Operator::GradQuadratic { b, lambda } => {
                acc.lambda_identity += lambda;
                add_into(&mut acc.shift, b, -lambda);
            }
            Operator::SubgradL1 { gamma } => acc.gamma += gamma,
            Operator::Sum { terms } => terms.iter().for_each(|t| t.accumulate(acc)),
        }
    }

    pub fn eval<'s>(&self, z: &PrimalVector<'s>) -> Result<OperatorEvaluation<'s>> {
        let space = z.space();
        self.check_domain(space, z.coords())?;
        let comp = self.composite(space.dim())?;
        let out = comp.apply(z.coords(), space.p());
        let is_selection = comp.gamma > 0.0 && z.coords().iter().any(|v| *v == 0.0);
        Ok(OperatorEvaluation {
            input: z.clone(),
            output: space.dual(out)?,
            is_selection,
        })
    }
}

/// An operator reduced to its structural parts.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Composite {
    pub matrix: Option<DMatrix<f64>>,
    pub lambda_duality: f64,
    pub lambda_identity: f64,
    /// `Σ c − Σ λ_k b_k`.
    pub shift: Vec<f64>,
    pub gamma: f64,
}

impl Composite {
    /// Everything except the ℓ1 part: `Gz + λ_s Jz + λ_g z + shift`.
    pub fn smooth_part(&self, z: &[f64], p: f64) -> Vec<f64> {
        let mut out: Vec<f64> = z
            .iter()
            .zip(&self.shift)
            .map(|(v, s)| self.lambda_identity * v + s)
            .collect();
        if let Some(g) = &self.matrix {
            for (i, o) in out.iter_mut().enumerate() {
                *o += (0..z.len()).map(|j| g[(i, j)] * z[j]).sum::<f64>();
            }
        }
        if self.lambda_duality != 0.0 {
            let jz = raw::duality_map(z, p);
            out.iter_mut().zip(jz).for_each(|(o, j)| *o += self.lambda_duality * j);
        }
        out
    }

    pub fn apply(&self, z: &[f64], p: f64) -> Vec<f64> {
        let mut out = self.smooth_part(z, p);
        if self.gamma != 0.0 {
            out.iter_mut()
                .zip(z)
                .for_each(|(o, v)| *o += self.gamma * crate::scalar::Scalar::signum(v));
        }
        out
    }

    /// The part of the smooth operator that is not a multiple of J:
    /// `Gz + λ_g z + shift`.
    pub fn affine_part(&self, z: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = z
            .iter()
            .zip(&self.shift)
            .map(|(v, s)| self.lambda_identity * v + s)
            .collect();
        if let Some(g) = &self.matrix {
            for (i, o) in out.iter_mut().enumerate() {
                *o += (0..z.len()).map(|j| g[(i, j)] * z[j]).sum::<f64>();
            }
        }
        out
    }

    /// Jacobian of the affine part, `G + λ_g I`.
    pub fn affine_jacobian(&self, n: usize) -> DMatrix<f64> {
        let mut m = DMatrix::identity(n, n) * self.lambda_identity;
        if let Some(g) = &self.matrix {
            m += g;
        }
        m
    }

    pub fn is_constant(&self) -> bool {
        self.matrix.is_none() && self.lambda_duality == 0.0 && self.lambda_identity == 0.0 && self.gamma == 0.0
    }
}

/// Declarative, serializable form of an operator spec.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorDecl {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<OperatorDecl>>,
}

impl TryFrom<OperatorDecl> for MonotoneOperatorSpec {
    type Error = Error;

    fn try_from(d: OperatorDecl) -> Result<Self> {
        let allowed: &[&str] = match d.kind.as_str() {
            "zero" => &[],
            "constant" => &["c"],
            "linear_psd" => &["matrix"],
            "scaled_duality" => &["lambda"],
            "grad_quadratic" => &["b", "lambda"],
            "subgrad_l1" => &["gamma"],
            "sum" => &["terms"],
            other => {
                return Err(Error::Config(format!(
                    "unknown operator kind `{other}` (expected zero, constant, linear_psd, scaled_duality, grad_quadratic, subgrad_l1 or sum)"
                )))
            }
        };
        let present = [
            ("c", d.c.is_some()),
            ("matrix", d.matrix.is_some()),
            ("lambda", d.lambda.is_some()),
            ("b", d.b.is_some()),
            ("gamma", d.gamma.is_some()),
            ("terms", d.terms.is_some()),
        ];
        for (field, is_set) in present {
            if is_set && !allowed.contains(&field) {
                return Err(Error::Config(format!("field `{field}` is not used by operator kind `{}`", d.kind)));
            }
        }
        let missing = |f: &str| Error::Config(format!("operator kind `{}` requires field `{f}`", d.kind));
        let spec = match d.kind.as_str() {
            "zero" => MonotoneOperatorSpec::zero(),
            "constant" => MonotoneOperatorSpec::constant(d.c.ok_or_else(|| missing("c"))?)?,
            "linear_psd" => MonotoneOperatorSpec::linear_psd(d.matrix.ok_or_else(|| missing("matrix"))?)?,
            "scaled_duality" => MonotoneOperatorSpec::scaled_duality(d.lambda.ok_or_else(|| missing("lambda"))?)?,
            "grad_quadratic" => MonotoneOperatorSpec::grad_quadratic(
                d.b.ok_or_else(|| missing("b"))?,
                d.lambda.ok_or_else(|| missing("lambda"))?,
            )?,
            "subgrad_l1" => MonotoneOperatorSpec::subgrad_l1(d.gamma.ok_or_else(|| missing("gamma"))?)?,
            _ => {
                let terms = d
                    .terms
                    .ok_or_else(|| missing("terms"))?
                    .into_iter()
                    .map(MonotoneOperatorSpec::try_from)
                    .collect::<Result<Vec<_>>>()?;
                MonotoneOperatorSpec::sum(terms)
            }
        };
        match d.domain_radius {
            Some(r) => spec.with_domain_radius(r),
            None => Ok(spec),
        }
    }
}

impl From<MonotoneOperatorSpec> for OperatorDecl {
    fn from(spec: MonotoneOperatorSpec) -> Self {
        let mut d = OperatorDecl {
            domain_radius: spec.domain_radius,
            ..Default::default()
        };
        match spec.operator {
            Operator::Zero => d.kind = "zero".into(),
            Operator::Constant { c } => {
                d.kind = "constant".into();
                d.c = Some(c);
            }
            Operator::LinearPsd { matrix } => {
                d.kind = "linear_psd".into();
                d.matrix = Some(matrix);
            }
            Operator::ScaledDuality { lambda } => {
                d.kind = "scaled_duality".into();
                d.lambda = Some(lambda);
            }
            Operator::GradQuadratic { b, lambda } => {
                d.kind = "grad_quadratic".into();
                d.b = Some(b);
                d.lambda = Some(lambda);
            }
            Operator::SubgradL1 { gamma } => {
                d.kind = "subgrad_l1".into();
                d.gamma = Some(gamma);
            }
            Operator::Sum { terms } => {
                d.kind = "sum".into();
                d.terms = Some(terms.into_iter().map(OperatorDecl::from).collect());
            }
        }
        d
    }
}

/// Sampled certificate of `⟨x − y, Ax − Ay⟩ >= 0` over pairs in the domain
/// intersected with the sampling ball. The normalized margin is the pairing
/// divided by `max(1, ‖x − y‖·‖Ax − Ay‖_*)`.
pub fn monotonicity_certificate(
    operator: &MonotoneOperatorSpec,
    space: &SpaceDescriptor,
    sampler: &SamplerConfig,
) -> Result<InequalityReport> {
    sampler.validate()?;
    let comp = operator.composite(space.dim())?;
    let radius = operator
        .domain_radius()
        .map_or(sampler.radius, |r| r.min(sampler.radius));
    let p = space.p();
    let tag = tag_of("monotonicity_certificate");
    let blocks = map_blocks(sampler.exec, sampler.n_blocks(), |b| {
        let mut rng = sampler.rng(tag, b);
        let mut worst = f64::INFINITY;
        let mut witness = None;
        let mut raw_min = f64::INFINITY;
        for _ in sampler.block_range(b) {
            let x = point_in_ball(&mut rng, space, radius);
            let y = point_in_ball(&mut rng, space, radius);
            let ax = comp.apply(&x, p);
            let ay = comp.apply(&y, p);
            let dx = raw::sub(&x, &y);
            let da = raw::sub(&ax, &ay);
            let m = raw::dot(&dx, &da);
            let scale = (raw::lp_norm(&dx, p) * raw::lp_norm(&da, space.p_conj())).max(1.0);
            raw_min = raw_min.min(m);
            if m / scale < worst {
                worst = m / scale;
                witness = Some((x, y));
            }
        }
        (worst, raw_min, witness)
    });
    let mut report = InequalityReport::new("monotonicity");
    report.samples = sampler.count as u64;
    let mut worst = f64::INFINITY;
    let mut raw_min = f64::INFINITY;
    let mut witness = None;
    for (w, r, wit) in blocks {
        raw_min = raw_min.min(r);
        if w < worst {
            worst = w;
            witness = wit;
        }
    }
    report.worst_margin = worst;
    report.detail_f64("min_pairing", raw_min);
    report.detail_f64("tolerance", MONOTONE_TOL);
    if worst < -MONOTONE_TOL {
        report.violations = 1;
        if let Some((x, y)) = witness {
            report.witness = Some(crate::report::Witness { x, y, margin: worst, precise_margin: None });
        }
        report.fail("sampled pair with negative monotonicity pairing");
    }
    Ok(report)
}

/// The fixed operator catalog used by the harness for a space of dimension
/// `n`. Parameters are deterministic.
pub fn catalog(n: usize) -> Vec<(String, MonotoneOperatorSpec)> {
    let alternating: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 0.3 } else { -0.2 }).collect();
    let c: Vec<f64> = (0..n).map(|i| 0.1 * (1.0 + i as f64 / n as f64)).collect();
    let matrix = catalog_matrix(n);
    let gq = MonotoneOperatorSpec::grad_quadratic(alternating.clone(), 1.0).expect("valid");
    let l1 = MonotoneOperatorSpec::subgrad_l1(0.5).expect("valid");
    let lin = MonotoneOperatorSpec::linear_psd(matrix).expect("catalog matrix is monotone");
    vec![
        ("zero".into(), MonotoneOperatorSpec::zero()),
        ("constant".into(), MonotoneOperatorSpec::constant(c).expect("valid")),
        ("linear_psd".into(), lin.clone()),
        ("scaled_duality".into(), MonotoneOperatorSpec::scaled_duality(1.0).expect("valid")),
        ("grad_quadratic".into(), gq.clone()),
        ("subgrad_l1".into(), l1.clone()),
        ("sum_quadratic_l1".into(), MonotoneOperatorSpec::sum(vec![gq, l1.clone()])),
        ("sum_linear_l1".into(), MonotoneOperatorSpec::sum(vec![lin, l1])),
    ]
}

/// `BᵀB/n + K` with `K` antisymmetric, from a fixed stream.
fn catalog_matrix(n: usize) -> Vec<Vec<f64>> {
    use rand::Rng;
    let mut rng = substream(0x5eed, tag_of("catalog_matrix"), n as u64);
    let b: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let k: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.random_range(-0.5..0.5)).collect())
        .collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let sym: f64 = (0..n).map(|l| b[l][i] * b[l][j]).sum::<f64>() / n as f64;
                    sym + k[i][j] - k[j][i]
                })
                .collect()
        })
        .collect()
}
