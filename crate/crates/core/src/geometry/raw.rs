//! Coordinate formulas on plain slices, generic over the scalar type.

use nalgebra::DMatrix;

use crate::scalar::Scalar;

pub fn lp_norm<S: Scalar>(x: &[S], p: f64) -> S {
    // scale by the largest magnitude so tiny and huge vectors stay representable
    let mut peak = S::zero();
    for v in x {
        let a = v.abs();
        if a > peak {
            peak = a;
        }
    }
    if peak.is_zero() {
        return S::zero();
    }
    let mut acc = S::zero();
    for v in x {
        acc = acc + (v.abs() / peak.clone()).powf(p);
    }
    peak * acc.powf(1.0 / p)
}

pub fn dot<S: Scalar>(x: &[S], u: &[S]) -> S {
    x.iter()
        .zip(u)
        .fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
}

pub fn sub<S: Scalar>(x: &[S], y: &[S]) -> Vec<S> {
    x.iter().zip(y).map(|(a, b)| a.clone() - b.clone()).collect()
}

pub fn scale<S: Scalar>(x: &[S], s: S) -> Vec<S> {
    x.iter().map(|a| a.clone() * s.clone()).collect()
}

/// `Jx = ‖x‖^{2−p} |x_i|^{p−1} sign(x_i)`, evaluated as
/// `‖x‖ (|x_i|/‖x‖)^{p−1} sign(x_i)`; `J0 = 0` and zero coordinates stay zero.
pub fn duality_map<S: Scalar>(x: &[S], p: f64) -> Vec<S> {
    if p == 2.0 {
        return x.to_vec();
    }
    let n = lp_norm(x, p);
    duality_map_with_norm(x, p, n)
}

pub fn duality_map_with_norm<S: Scalar>(x: &[S], p: f64, norm: S) -> Vec<S> {
    if p == 2.0 {
        return x.to_vec();
    }
    if norm.is_zero() {
        return vec![S::zero(); x.len()];
    }
    x.iter()
        .map(|v| {
            if v.is_zero() {
                S::zero()
            } else {
                norm.clone() * (v.abs() / norm.clone()).powf(p - 1.0) * v.signum()
            }
        })
        .collect()
}

pub fn bregman_phi<S: Scalar>(x: &[S], y: &[S], p: f64) -> S {
    let nx = lp_norm(x, p);
    let ny = lp_norm(y, p);
    let jy = duality_map_with_norm(y, p, ny.clone());
    nx.clone() * nx - S::from_f64(2.0) * dot(x, &jy) + ny.clone() * ny
}

/// `x / ‖x‖`; `None` for the zero vector.
pub fn normalize<S: Scalar>(x: &[S], p: f64) -> Option<Vec<S>> {
    let n = lp_norm(x, p);
    if n.is_zero() {
        None
    } else {
        Some(x.iter().map(|v| v.clone() / n.clone()).collect())
    }
}

/// Jacobian of the duality mapping of ℓ_p at `x`,
/// `DJ_ij = (2−p) t_i^{p−1} t_j^{p−1} s_i s_j + δ_ij (p−1) t_i^{p−2}` with
/// `t = |x|/‖x‖` and `s = sign(x)`. Symmetric and homogeneous of degree 0.
///
/// Finite everywhere except at zero coordinates when `p < 2`; callers that
/// need a C¹ map use it with `p >= 2`. At `x = 0` the map is not
/// differentiable and `(p−1)·I` is returned as a surrogate.
pub fn duality_jacobian(x: &[f64], p: f64) -> DMatrix<f64> {
    let n = x.len();
    let norm = lp_norm(x, p);
    if norm == 0.0 {
        return DMatrix::identity(n, n) * (p - 1.0).max(f64::EPSILON);
    }
    let t: Vec<f64> = x.iter().map(|v| v.abs() / norm).collect();
    let g: Vec<f64> = x
        .iter()
        .zip(&t)
        .map(|(v, ti)| Scalar::powf(ti, p - 1.0) * Scalar::signum(v))
        .collect();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = (2.0 - p) * g[i] * g[j];
        }
        let diag = if t[i] == 0.0 {
            if p > 2.0 {
                0.0
            } else if p == 2.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            (p - 1.0) * t[i].powf(p - 2.0)
        };
        m[(i, i)] += diag;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_is_scale_safe() {
        let tiny = [1e-200, 2e-200];
        let n = lp_norm(&tiny, 1.5);
        assert!(n > 0.0 && n.is_finite());
        let huge = [1e200, 1e200];
        assert!(lp_norm(&huge, 3.0).is_finite());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        for &p in &[1.5, 2.0, 3.0] {
            let x = [0.7, -0.3, 1.1];
            let jac = duality_jacobian(&x, p);
            let h = 1e-6;
            for j in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[j] += h;
                xm[j] -= h;
                let fp = duality_map(&xp, p);
                let fm = duality_map(&xm, p);
                for i in 0..3 {
                    let fd = (fp[i] - fm[i]) / (2.0 * h);
                    assert!((fd - jac[(i, j)]).abs() < 1e-6, "p={p} ({i},{j}) fd={fd} an={}", jac[(i, j)]);
                }
            }
            // symmetric
            assert!((jac.clone() - jac.transpose()).abs().max() < 1e-14);
        }
    }

    #[test]
    fn jacobian_at_zero_coordinate_is_flat_for_large_p() {
        let jac = duality_jacobian(&[0.0, 1.0], 3.0);
        assert_eq!(jac[(0, 0)], 0.0);
    }
}
