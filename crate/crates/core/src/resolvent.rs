//! Resolvent `J_r x = (J + rA)⁻¹ J x`: the point `z` with `Jz + r·Az ∋ Jx`.
//!
//! Writing the operator as `Az = Gz + λ_s Jz + λ_g z + shift + γ ∂‖z‖₁`
//! (see [`Composite`]) and using that `J` preserves coordinate signs, the
//! inclusion is equivalent to
//!
//! ```text
//! (1 + rλ_s) Jz = soft(Jx − r(Gz + λ_g z + shift), rγ)
//! ```
//!
//! Closed forms cover the cases where the right-hand side does not depend
//! on `z` or where `p = 2`. Otherwise a damped (semismooth) Newton method is
//! run on a reformulation of this equation chosen so that the map from the
//! unknown to `z` is C¹ or piecewise C¹:
//!
//! * smooth operators: the dual variable `u = Jz` when `p <= 2`, `z` itself
//!   when `p > 2`;
//! * with an ℓ1 part: a normal map, through the dual threshold argument when
//!   `p <= 2` and through the Euclidean soft threshold when `p > 2`.
//!
//! Steps that fail the line search fall back to a Levenberg–Marquardt
//! direction, and a stalled iteration is restarted from a round of
//! forward–backward–forward steps. Convergence is declared only on the
//! residual of the original inclusion.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{raw, PrimalVector, SpaceDescriptor};
use crate::operators::{Composite, MonotoneOperatorSpec};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 200;

const ARMIJO: f64 = 1e-4;
const SHRINK: f64 = 0.5;
const MAX_BACKTRACK: usize = 60;
/// Tikhonov damping is this multiple of the current residual norm.
const DAMPING_SCALE: f64 = 1e-6;
/// Relative merit decrease below which a Newton step counts as stalled.
const STALL: f64 = 1e-6;
const FALLBACK_STEPS: usize = 200;
const MAX_FALLBACK_ROUNDS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Newton,
    SemismoothNewton,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::Newton => "newton",
            Method::SemismoothNewton => "semismooth_newton",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ResolventProblem<'s> {
    pub space: &'s SpaceDescriptor,
    pub operator: &'s MonotoneOperatorSpec,
    pub r: f64,
    pub x: Vec<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl<'s> ResolventProblem<'s> {
    pub fn new(space: &'s SpaceDescriptor, operator: &'s MonotoneOperatorSpec, r: f64, x: Vec<f64>) -> Self {
        ResolventProblem {
            space,
            operator,
            r,
            x,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(Error::Parameter(format!("r must be positive, got {}", self.r)));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::Parameter(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Parameter("max_iter must be positive".into()));
        }
        if self.x.len() != self.space.dim() {
            return Err(Error::SpaceMismatch(format!(
                "x has dimension {}, space has {}",
                self.x.len(),
                self.space.dim()
            )));
        }
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("x has non-finite entries".into()));
        }
        self.operator.check_dimension(self.space.dim())?;
        self.operator.check_domain(self.space, &self.x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResolventSolution<'s> {
    pub z: PrimalVector<'s>,
    /// Dual norm of `Jz + rAz − Jx` with the best subgradient at kinks.
    pub residual: f64,
    pub iterations: usize,
    pub method: Method,
}

fn soft(w: f64, t: f64) -> f64 {
    if w > t {
        w - t
    } else if w < -t {
        w + t
    } else {
        0.0
    }
}

/// Dual-norm residual of the inclusion `Jz + rAz ∋ Jx`, computed from the
/// operator's own evaluation. At coordinates where `z_i = 0` and the
/// operator has an ℓ1 part, the subgradient in `[−γ, γ]` that minimizes the
/// residual is used.
pub fn inclusion_residual(
    space: &SpaceDescriptor,
    operator: &MonotoneOperatorSpec,
    r: f64,
    x: &[f64],
    z: &[f64],
) -> Result<f64> {
    let zv = space.primal(z.to_vec())?;
    let az = operator.eval(&zv)?;
    let gamma = operator.composite(space.dim())?.gamma;
    let jz = raw::duality_map(z, space.p());
    let jx = raw::duality_map(x, space.p());
    let res: Vec<f64> = (0..z.len())
        .map(|i| {
            let v = jz[i] + r * az.output.coords()[i] - jx[i];
            if z[i] == 0.0 && gamma > 0.0 {
                soft(v, r * gamma)
            } else {
                v
            }
        })
        .collect();
    Ok(raw::lp_norm(&res, space.p_conj()))
}

pub fn solve_resolvent<'s>(problem: &ResolventProblem<'s>) -> Result<ResolventSolution<'s>> {
    problem.validate()?;
    let space = problem.space;
    let n = space.dim();
    let r = problem.r;
    let x = &problem.x;
    let comp = problem.operator.composite(n)?;

    let closed = closed_form(&comp, space, r, x);
    let (z, iterations, method) = match closed {
        Some(z)
            if inclusion_residual(space, problem.operator, r, x, &z)? <= problem.tol =>
        {
            (z, 0, Method::ClosedForm)
        }
        start => {
            let method = if comp.gamma > 0.0 { Method::SemismoothNewton } else { Method::Newton };
            let start = start.unwrap_or_else(|| x.clone());
            let (z, it) = newton(&comp, problem, &start)?;
            (z, it, method)
        }
    };
    problem.operator.check_domain(space, &z)?;
    let residual = inclusion_residual(space, problem.operator, r, x, &z)?;
    Ok(ResolventSolution {
        z: space.primal(z)?,
        residual,
        iterations,
        method,
    })
}

fn closed_form(comp: &Composite, space: &SpaceDescriptor, r: f64, x: &[f64]) -> Option<Vec<f64>> {
    let p = space.p();
    let n = x.len();
    let no_shift = comp.shift.iter().all(|s| *s == 0.0);
    if comp.matrix.is_none()
        && comp.lambda_duality == 0.0
        && comp.lambda_identity == 0.0
        && comp.gamma == 0.0
        && no_shift
    {
        return Some(x.to_vec());
    }
    if comp.matrix.is_none() && comp.lambda_identity == 0.0 {
        // right-hand side is independent of z
        let jx = raw::duality_map(x, p);
        let denom = 1.0 + r * comp.lambda_duality;
        let u: Vec<f64> = jx
            .iter()
            .zip(&comp.shift)
            .map(|(j, s)| soft(j - r * s, r * comp.gamma) / denom)
            .collect();
        return Some(raw::duality_map(&u, space.p_conj()));
    }
    if space.is_hilbert() {
        let diag = 1.0 + r * (comp.lambda_duality + comp.lambda_identity);
        let w: Vec<f64> = x.iter().zip(&comp.shift).map(|(a, s)| a - r * s).collect();
        match &comp.matrix {
            None => return Some(w.iter().map(|v| soft(*v, r * comp.gamma) / diag).collect()),
            Some(g) if comp.gamma == 0.0 => {
                let m = DMatrix::identity(n, n) * diag + g * r;
                let sol = m.lu().solve(&DVector::from_vec(w))?;
                return Some(sol.iter().copied().collect());
            }
            Some(_) => {}
        }
    }
    None
}

/// Unknown used by the Newton iteration.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Var {
    /// `u = Jz`, smooth operators with `p <= 2`.
    Dual,
    /// `z`, smooth operators with `p > 2`.
    Primal,
    /// `v = Jx − r(Gz + λ_g z + shift)` with
    /// `z = J⁻¹(soft(v, rγ)/(1 + rλ_s))`, operators with an ℓ1 part and
    /// `p <= 2`.
    Normal,
    /// `v` with `z = soft(v, rγ)`, operators with an ℓ1 part and `p > 2`.
    PrimalNormal,
}

struct System<'a> {
    comp: &'a Composite,
    p: f64,
    p_conj: f64,
    r: f64,
    jx: Vec<f64>,
    var: Var,
}

impl System<'_> {
    fn thresh(&self) -> f64 {
        self.r * self.comp.gamma
    }

    fn denom(&self) -> f64 {
        1.0 + self.r * self.comp.lambda_duality
    }

    /// `Jx − r(Gz + λ_g z + shift)`.
    fn w(&self, z: &[f64]) -> Vec<f64> {
        let aff = self.comp.affine_part(z);
        self.jx.iter().zip(aff).map(|(j, a)| j - self.r * a).collect()
    }

    fn dual_of_normal(&self, v: &[f64]) -> Vec<f64> {
        let (t, d) = (self.thresh(), self.denom());
        v.iter().map(|vi| soft(*vi, t) / d).collect()
    }

    fn primal_of(&self, v: &[f64]) -> Vec<f64> {
        match self.var {
            Var::Dual => raw::duality_map(v, self.p_conj),
            Var::Primal => v.to_vec(),
            Var::Normal => raw::duality_map(&self.dual_of_normal(v), self.p_conj),
            Var::PrimalNormal => v.iter().map(|vi| soft(*vi, self.thresh())).collect(),
        }
    }

    fn initial(&self, z0: &[f64]) -> Vec<f64> {
        match self.var {
            Var::Dual => raw::duality_map(z0, self.p),
            Var::Primal => z0.to_vec(),
            Var::Normal => self.w(z0),
            Var::PrimalNormal => z0.iter().map(|zi| zi + self.thresh() * zi.signum()).collect(),
        }
    }

    /// A preimage of `z` under `primal_of` that is exact at a solution.
    fn lift(&self, z: &[f64]) -> Vec<f64> {
        let t = self.thresh();
        match self.var {
            Var::Dual | Var::Primal => self.initial(z),
            Var::Normal => {
                let w = self.w(z);
                let jz = raw::duality_map(z, self.p);
                (0..z.len())
                    .map(|i| {
                        if z[i] == 0.0 {
                            w[i].clamp(-t, t)
                        } else {
                            self.denom() * jz[i] + t * z[i].signum()
                        }
                    })
                    .collect()
            }
            Var::PrimalNormal => {
                let b = self.forward(z);
                (0..z.len())
                    .map(|i| if z[i] == 0.0 { (-b[i]).clamp(-t, t) } else { z[i] + t * z[i].signum() })
                    .collect()
            }
        }
    }

    /// The single-valued part `(1 + rλ_s)Jz + r(Gz + λ_g z + shift) − Jx`.
    fn forward(&self, z: &[f64]) -> Vec<f64> {
        let jz = raw::duality_map(z, self.p);
        let w = self.w(z);
        jz.iter().zip(w).map(|(j, wi)| self.denom() * j - wi).collect()
    }

    /// Tseng forward–backward–forward steps on `z`, with backtracking on the
    /// step so that `α‖B(z) − B(y)‖ <= 0.9‖z − y‖`. Globally convergent for
    /// the monotone inclusion, used when Newton stalls.
    fn forward_backward_forward(&self, mut z: Vec<f64>, iters: usize) -> Vec<f64> {
        let t = self.thresh();
        let mut alpha = 1.0;
        for _ in 0..iters {
            let bz = self.forward(&z);
            let mut accepted = None;
            for _ in 0..MAX_BACKTRACK {
                let y: Vec<f64> = (0..z.len()).map(|i| soft(z[i] - alpha * bz[i], alpha * t)).collect();
                let by = self.forward(&y);
                let db = raw::lp_norm(&raw::sub(&by, &bz), 2.0);
                let dz = raw::lp_norm(&raw::sub(&y, &z), 2.0);
                if dz == 0.0 {
                    return z;
                }
                if alpha * db <= 0.9 * dz {
                    accepted = Some((y, by));
                    break;
                }
                alpha *= SHRINK;
            }
            let Some((y, by)) = accepted else { return z };
            z = (0..z.len()).map(|i| y[i] - alpha * (by[i] - bz[i])).collect();
            alpha *= 1.5;
        }
        z
    }

    fn residual(&self, v: &[f64]) -> Vec<f64> {
        let z = self.primal_of(v);
        let w = self.w(&z);
        let d = self.denom();
        match self.var {
            Var::Dual => v.iter().zip(&w).map(|(u, wi)| u - wi / d).collect(),
            Var::Primal => {
                let jz = raw::duality_map(&z, self.p);
                jz.iter().zip(&w).map(|(j, wi)| d * j - wi).collect()
            }
            Var::Normal => v.iter().zip(&w).map(|(vi, wi)| vi - wi).collect(),
            Var::PrimalNormal => {
                let jz = raw::duality_map(&z, self.p);
                (0..v.len()).map(|i| d * jz[i] - w[i] + v[i] - z[i]).collect()
            }
        }
    }

    /// An element of the generalized Jacobian of `residual`.
    fn jacobian(&self, v: &[f64]) -> DMatrix<f64> {
        let n = v.len();
        let m = self.comp.affine_jacobian(n) * self.r;
        let d = self.denom();
        match self.var {
            Var::Dual => DMatrix::identity(n, n) + m * raw::duality_jacobian(v, self.p_conj) / d,
            Var::Primal => raw::duality_jacobian(v, self.p) * d + m,
            Var::Normal => {
                let u = self.dual_of_normal(v);
                let mut pj = raw::duality_jacobian(&u, self.p_conj);
                // the threshold is flat on inactive coordinates; dropping those
                // columns also drops the unbounded entries of DJ⁻¹ at zeros
                for (j, vj) in v.iter().enumerate() {
                    if vj.abs() <= self.thresh() {
                        pj.column_mut(j).fill(0.0);
                    }
                }
                DMatrix::identity(n, n) + m * pj / d
            }
            Var::PrimalNormal => {
                let z = self.primal_of(v);
                let mut jac = raw::duality_jacobian(&z, self.p) * d + m;
                for (j, vj) in v.iter().enumerate() {
                    if vj.abs() <= self.thresh() {
                        jac.column_mut(j).fill(0.0);
                        jac[(j, j)] = 1.0;
                    }
                }
                jac
            }
        }
    }
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

fn solve_damped(jac: &DMatrix<f64>, rhs: &DVector<f64>, mut damping: f64) -> Option<DVector<f64>> {
    let n = rhs.len();
    while damping < 1e12 {
        let m = jac + DMatrix::identity(n, n) * damping;
        if let Some(s) = m.lu().solve(rhs) {
            if s.iter().all(|a| a.is_finite()) {
                return Some(s);
            }
        }
        damping = (damping * 10.0).max(1e-12);
    }
    None
}

/// Backtracking from `t = 1` until `‖F(v + t·step)‖² <= ‖F(v)‖² + 2·ARMIJO·t·slope`.
fn line_search(sys: &System<'_>, v: &[f64], step: &DVector<f64>, merit: f64, slope: f64) -> Option<Vec<f64>> {
    let mut t = 1.0;
    for _ in 0..MAX_BACKTRACK {
        let cand: Vec<f64> = v.iter().zip(step.iter()).map(|(a, s)| a + t * s).collect();
        let m = sq_norm(&sys.residual(&cand));
        if m.is_finite() && m < merit && m <= merit + 2.0 * ARMIJO * t * slope {
            return Some(cand);
        }
        t *= SHRINK;
    }
    None
}

fn newton(comp: &Composite, problem: &ResolventProblem<'_>, start: &[f64]) -> Result<(Vec<f64>, usize)> {
    let space = problem.space;
    let var = if comp.gamma > 0.0 && space.p() <= 2.0 {
        Var::Normal
    } else if comp.gamma > 0.0 {
        Var::PrimalNormal
    } else if space.p() <= 2.0 {
        Var::Dual
    } else {
        Var::Primal
    };
    let sys = System {
        comp,
        p: space.p(),
        p_conj: space.p_conj(),
        r: problem.r,
        jx: raw::duality_map(&problem.x, space.p()),
        var,
    };
    let mut v = sys.initial(start);
    let mut best = f64::INFINITY;
    let mut fallback_rounds = 0;
    for it in 0..=problem.max_iter {
        let z = sys.primal_of(&v);
        let res = inclusion_residual(space, problem.operator, problem.r, &problem.x, &z)?;
        best = best.min(res);
        if res <= problem.tol {
            return Ok((z, it));
        }
        if it == problem.max_iter {
            break;
        }
        let f = DVector::from_vec(sys.residual(&v));
        let merit = f.norm_squared();
        let jac = sys.jacobian(&v);
        let damping = (DAMPING_SCALE * merit.sqrt()).max(1e-12);
        let newton_step = solve_damped(&jac, &(-&f), damping);
        let mut next = newton_step.and_then(|s| line_search(&sys, &v, &s, merit, -merit));
        if next.is_none() {
            // Levenberg–Marquardt direction, a descent direction for the merit
            let g = jac.transpose() * &f;
            let normal = jac.transpose() * &jac;
            if let Some(s) = solve_damped(&normal, &(-&g), merit.sqrt().max(1e-12)) {
                next = line_search(&sys, &v, &s, merit, g.dot(&s));
            }
        }
        let stalled = next
            .as_ref()
            .is_none_or(|c| sq_norm(&sys.residual(c)) > merit * (1.0 - STALL));
        if stalled {
            if fallback_rounds == MAX_FALLBACK_ROUNDS {
                break;
            }
            fallback_rounds += 1;
            let z = sys.forward_backward_forward(sys.primal_of(&v), FALLBACK_STEPS);
            v = sys.lift(&z);
        } else if let Some(c) = next {
            v = c;
        }
    }
    Err(Error::NonConvergence { iterations: problem.max_iter, best_residual: best })
}

/// Convenience wrapper returning only `J_r x`.
pub fn resolvent_point(
    space: &SpaceDescriptor,
    operator: &MonotoneOperatorSpec,
    r: f64,
    x: &[f64],
) -> Result<(Vec<f64>, f64)> {
    let sol = solve_resolvent(&ResolventProblem::new(space, operator, r, x.to_vec()))?;
    Ok((sol.z.into_coords(), sol.residual))
}

/// `⟨Tx − Ty, Jx − Jy⟩ − ⟨Tx − Ty, JTx − JTy⟩` for `T = J_r`, which is
/// nonnegative when `T` is of firmly nonexpansive type.
pub fn fnt_margin(
    space: &SpaceDescriptor,
    operator: &MonotoneOperatorSpec,
    r: f64,
    x: &[f64],
    y: &[f64],
) -> Result<f64> {
    let (tx, _) = resolvent_point(space, operator, r, x)?;
    let (ty, _) = resolvent_point(space, operator, r, y)?;
    Ok(fnt_margin_from(space.p(), x, y, &tx, &ty))
}

/// The same margin with the resolvent values supplied, generic over the
/// scalar type for high-precision re-evaluation.
pub fn fnt_margin_from<S: crate::scalar::Scalar>(p: f64, x: &[S], y: &[S], tx: &[S], ty: &[S]) -> S {
    let dt = raw::sub(tx, ty);
    let dj = raw::sub(&raw::duality_map(x, p), &raw::duality_map(y, p));
    let djt = raw::sub(&raw::duality_map(tx, p), &raw::duality_map(ty, p));
    raw::dot(&dt, &dj) - raw::dot(&dt, &djt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::catalog;

    fn space(n: usize, p: f64) -> SpaceDescriptor {
        SpaceDescriptor::new(n, p).unwrap()
    }

    #[test]
    fn zero_operator_is_identity() {
        let s = space(3, 1.3);
        let op = MonotoneOperatorSpec::zero();
        for r in [0.1, 1.0, 10.0] {
            let sol = solve_resolvent(&ResolventProblem::new(&s, &op, r, vec![0.5, -0.2, 0.0])).unwrap();
            assert_eq!(sol.z.coords(), &[0.5, -0.2, 0.0]);
            assert_eq!(sol.residual, 0.0);
            assert_eq!(sol.method, Method::ClosedForm);
        }
    }

    #[test]
    fn hilbert_quadratic_example() {
        let s = space(2, 2.0);
        let op = MonotoneOperatorSpec::grad_quadratic(vec![0.0, 0.0], 1.0).unwrap();
        let sol = solve_resolvent(&ResolventProblem::new(&s, &op, 1.0, vec![2.0, 2.0])).unwrap();
        assert_eq!(sol.z.coords(), &[1.0, 1.0]);
    }

    #[test]
    fn constant_operator_example() {
        let s = space(2, 1.5);
        let c = 2f64.powf(1.0 / 3.0);
        let op = MonotoneOperatorSpec::constant(vec![c, c]).unwrap();
        let sol = solve_resolvent(&ResolventProblem::new(&s, &op, 1.0, vec![1.0, 1.0])).unwrap();
        assert!(sol.z.coords().iter().all(|v| v.abs() < 1e-12), "{:?}", sol.z.coords());
        assert!(sol.residual < 1e-12);
    }

    #[test]
    fn one_dimensional_soft_threshold() {
        let op = MonotoneOperatorSpec::subgrad_l1(1.0).unwrap();
        // independent oracle: scan a grid for the root of z + sign(z) − 3
        let grid_root = (0..=60_000)
            .map(|k| -3.0 + k as f64 * 1e-4)
            .filter(|z| *z != 0.0)
            .min_by(|a, b| (a + a.signum() - 3.0).abs().total_cmp(&(b + b.signum() - 3.0).abs()))
            .unwrap();
        for p in [1.2, 1.5, 2.0, 3.0] {
            let s = space(1, p);
            let sol = solve_resolvent(&ResolventProblem::new(&s, &op, 1.0, vec![3.0])).unwrap();
            assert!((sol.z.coords()[0] - 2.0).abs() < 1e-12);
            assert!((sol.z.coords()[0] - grid_root).abs() < 1e-4);
        }
    }

    #[test]
    fn smooth_operators_use_newton_off_hilbert() {
        let s = space(3, 1.5);
        let op = MonotoneOperatorSpec::grad_quadratic(vec![0.1, -0.2, 0.3], 1.0).unwrap();
        let sol = solve_resolvent(&ResolventProblem::new(&s, &op, 1.0, vec![0.4, 0.0, -0.7])).unwrap();
        assert_eq!(sol.method, Method::Newton);
        assert!(sol.residual <= DEFAULT_TOL);
    }

    #[test]
    fn catalog_residuals_are_certified() {
        for p in [1.1, 1.5, 2.0, 3.0] {
            for n in [1, 2, 5] {
                let s = space(n, p);
                let x: Vec<f64> = (0..n).map(|i| if i == 1 { 0.0 } else { 0.6 - 0.3 * i as f64 }).collect();
                for (name, op) in catalog(n) {
                    for r in [0.1, 1.0, 10.0] {
                        let sol = solve_resolvent(&ResolventProblem::new(&s, &op, r, x.clone()))
                            .unwrap_or_else(|e| panic!("{name} p={p} n={n} r={r}: {e}"));
                        let again = inclusion_residual(&s, &op, r, &x, sol.z.coords()).unwrap();
                        assert!(again <= DEFAULT_TOL, "{name} p={p} n={n} r={r}: {again}");
                    }
                }
            }
        }
    }

    #[test]
    fn hilbert_matches_classical_prox() {
        let s = space(3, 2.0);
        let x = vec![1.2, -0.3, 0.05];
        let r = 0.7;
        let l1 = MonotoneOperatorSpec::subgrad_l1(0.5).unwrap();
        let z = resolvent_point(&s, &l1, r, &x).unwrap().0;
        let expect: Vec<f64> = x.iter().map(|v| v.signum() * (v.abs() - 0.35).max(0.0)).collect();
        assert!(raw::sub(&z, &expect).iter().all(|d| d.abs() < 1e-12));

        // linear: (I + rG) z = x, checked by multiplying back
        let g = vec![vec![2.0, 1.0, 0.0], vec![-1.0, 1.0, 0.0], vec![0.0, 0.0, 0.5]];
        let lin = MonotoneOperatorSpec::linear_psd(g.clone()).unwrap();
        let z = resolvent_point(&s, &lin, r, &x).unwrap().0;
        for i in 0..3 {
            let back = z[i] + r * (0..3).map(|j| g[i][j] * z[j]).sum::<f64>();
            assert!((back - x[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn fixed_points_are_preserved() {
        let xbar = vec![0.3, -0.4, 0.0];
        let op = MonotoneOperatorSpec::grad_quadratic(xbar.clone(), 2.0).unwrap();
        for p in [1.2, 1.5, 2.0, 2.5] {
            let s = space(3, p);
            for r in [0.1, 1.0, 10.0] {
                let z = resolvent_point(&s, &op, r, &xbar).unwrap().0;
                assert!(raw::sub(&z, &xbar).iter().all(|d| d.abs() < 1e-8));
            }
        }
    }

    #[test]
    fn fnt_examples() {
        let s = space(2, 1.5);
        let gq = MonotoneOperatorSpec::grad_quadratic(vec![0.0, 0.0], 1.0).unwrap();
        let m = fnt_margin(&s, &gq, 1.0, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!(m >= 0.0, "{m}");
        assert_eq!(fnt_margin(&s, &gq, 1.0, &[0.3, 0.1], &[0.3, 0.1]).unwrap(), 0.0);
        assert_eq!(fnt_margin(&s, &MonotoneOperatorSpec::zero(), 1.0, &[0.3, 0.1], &[-0.2, 0.5]).unwrap(), 0.0);
    }

    #[test]
    fn invalid_problems_are_rejected() {
        let s = space(2, 1.5);
        let op = MonotoneOperatorSpec::zero().with_domain_radius(1.0).unwrap();
        assert!(matches!(
            solve_resolvent(&ResolventProblem::new(&s, &op, 1.0, vec![3.0, 0.0])),
            Err(Error::Domain { .. })
        ));
        assert!(solve_resolvent(&ResolventProblem::new(&s, &op, 0.0, vec![0.1, 0.0])).is_err());
        assert!(solve_resolvent(&ResolventProblem::new(&s, &op, 1.0, vec![0.1])).is_err());
    }
}
