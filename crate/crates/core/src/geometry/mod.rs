//! Finite-dimensional ℓ_p geometry: norms, the duality pairing, the
//! normalized duality mapping and its inverse, and the Bregman distance of
//! the squared norm.
//!
//! A [`SpaceDescriptor`] fixes the dimension and exponent. Vectors borrow
//! their space and carry their role ([`PrimalVector`] lives in E,
//! [`DualVector`] in E*), so a pairing between vectors of different spaces
//! is rejected instead of silently computed.
//!
//! The coordinate formulas are also exposed generically in [`raw`] over
//! [`Scalar`](crate::scalar::Scalar); the harness evaluates them in `f64` on
//! the hot path and in 256-bit arithmetic when confirming a counterexample.

pub mod moduli;
pub mod raw;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for `1/p + 1/p_conj = 1`.
const CONJUGATE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceDescriptor {
    dim: usize,
    p: f64,
    p_conj: f64,
    q_smooth: f64,
    k_est: Option<f64>,
}

impl SpaceDescriptor {
    pub fn new(dim: usize, p: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Parameter("dimension must be positive".into()));
        }
        if !p.is_finite() || p <= 1.0 {
            return Err(Error::Parameter("exponent must exceed 1".into()));
        }
        let p_conj = p / (p - 1.0);
        debug_assert!(((1.0 / p + 1.0 / p_conj) - 1.0).abs() <= CONJUGATE_TOL);
        Ok(SpaceDescriptor {
            dim,
            p,
            p_conj,
            q_smooth: p.min(2.0),
            k_est: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn p_conj(&self) -> f64 {
        self.p_conj
    }

    /// Power type of the modulus of smoothness, `min(p, 2)`.
    pub fn q_smooth(&self) -> f64 {
        self.q_smooth
    }

    /// Empirical smoothness constant, once estimated.
    pub fn k_est(&self) -> Option<f64> {
        self.k_est
    }

    pub fn with_k_est(mut self, k: f64) -> Self {
        self.k_est = Some(k);
        self
    }

    /// `1 < p <= 2`: the space is p-uniformly smooth and 2-uniformly convex.
    pub fn in_theorem_regime(&self) -> bool {
        self.p <= 2.0
    }

    pub fn require_theorem_regime(&self) -> Result<()> {
        if self.in_theorem_regime() {
            Ok(())
        } else {
            Err(Error::Regime { p: self.p })
        }
    }

    pub fn is_hilbert(&self) -> bool {
        self.p == 2.0
    }

    /// The dual space ℓ_{p_conj} of the same dimension.
    pub fn dual_space(&self) -> SpaceDescriptor {
        SpaceDescriptor {
            dim: self.dim,
            p: self.p_conj,
            p_conj: self.p,
            q_smooth: self.p_conj.min(2.0),
            k_est: None,
        }
    }

    fn same_as(&self, other: &SpaceDescriptor) -> bool {
        self.dim == other.dim && self.p.to_bits() == other.p.to_bits()
    }

    fn check_coords(&self, coords: &[f64]) -> Result<()> {
        if coords.len() != self.dim {
            return Err(Error::SpaceMismatch(format!(
                "expected {} coordinates, got {}",
                self.dim,
                coords.len()
            )));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::Input(format!("coordinate {i} is not finite")));
        }
        Ok(())
    }

    pub fn primal(&self, coords: Vec<f64>) -> Result<PrimalVector<'_>> {
        self.check_coords(&coords)?;
        Ok(PrimalVector { coords, space: self })
    }

    pub fn dual(&self, coords: Vec<f64>) -> Result<DualVector<'_>> {
        self.check_coords(&coords)?;
        Ok(DualVector { coords, space: self })
    }

    pub fn zero_primal(&self) -> PrimalVector<'_> {
        PrimalVector {
            coords: vec![0.0; self.dim],
            space: self,
        }
    }

    pub fn zero_dual(&self) -> DualVector<'_> {
        DualVector {
            coords: vec![0.0; self.dim],
            space: self,
        }
    }
}

/// A point of E.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimalVector<'s> {
    coords: Vec<f64>,
    space: &'s SpaceDescriptor,
}

/// A functional in E*, paired with E through the coordinate dot product.
#[derive(Clone, Debug, PartialEq)]
pub struct DualVector<'s> {
    coords: Vec<f64>,
    space: &'s SpaceDescriptor,
}

impl<'s> PrimalVector<'s> {
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn space(&self) -> &'s SpaceDescriptor {
        self.space
    }

    /// ℓ_p norm.
    pub fn norm(&self) -> f64 {
        raw::lp_norm(&self.coords, self.space.p)
    }

    pub fn pairing(&self, u: &DualVector<'_>) -> Result<f64> {
        if !self.space.same_as(u.space) {
            return Err(Error::SpaceMismatch("pairing across different spaces".into()));
        }
        Ok(raw::dot(&self.coords, &u.coords))
    }

    /// The normalized duality mapping `J`.
    pub fn duality_map(&self) -> DualVector<'s> {
        DualVector {
            coords: raw::duality_map(&self.coords, self.space.p),
            space: self.space,
        }
    }

    /// `φ(self, y) = ‖self‖² − 2⟨self, Jy⟩ + ‖y‖²`.
    pub fn bregman_phi(&self, y: &PrimalVector<'_>) -> Result<f64> {
        if !self.space.same_as(y.space) {
            return Err(Error::SpaceMismatch("Bregman distance across different spaces".into()));
        }
        Ok(raw::bregman_phi(&self.coords, &y.coords, self.space.p))
    }

    pub fn sub(&self, other: &PrimalVector<'_>) -> Result<PrimalVector<'s>> {
        if !self.space.same_as(other.space) {
            return Err(Error::SpaceMismatch("difference across different spaces".into()));
        }
        Ok(PrimalVector {
            coords: raw::sub(&self.coords, &other.coords),
            space: self.space,
        })
    }
}

impl<'s> DualVector<'s> {
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn space(&self) -> &'s SpaceDescriptor {
        self.space
    }

    /// ℓ_{p_conj} norm.
    pub fn norm(&self) -> f64 {
        raw::lp_norm(&self.coords, self.space.p_conj)
    }

    /// `J⁻¹`, which is the duality mapping of ℓ_{p_conj}.
    pub fn inverse_duality_map(&self) -> PrimalVector<'s> {
        PrimalVector {
            coords: raw::duality_map(&self.coords, self.space.p_conj),
            space: self.space,
        }
    }

    pub fn sub(&self, other: &DualVector<'_>) -> Result<DualVector<'s>> {
        if !self.space.same_as(other.space) {
            return Err(Error::SpaceMismatch("difference across different spaces".into()));
        }
        Ok(DualVector {
            coords: raw::sub(&self.coords, &other.coords),
            space: self.space,
        })
    }
}
