//! Phase-space points, the symplectic matrix `J` and the wedge product.
//!
//! Coordinates are always ordered as all momenta followed by all positions,
//! `(p_1, .., p_d, q_1, .., q_d)`. With that ordering `J` is the block matrix
//! `[[0, -I], [I, 0]]` and acting with it is a signed permutation.

use std::ops::{Add, Deref, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in `2d`-dimensional phase space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhasePoint(Vec<f64>);

impl PhasePoint {
    /// Builds a point from raw coordinates. The length must be even.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || coords.len() % 2 != 0 {
            return Err(Error::InvalidParameter {
                name: "coords",
                reason: format!("phase-space points need an even, non-zero length, got {}", coords.len()),
            });
        }
        Ok(Self(coords))
    }

    /// Builds a point from separate momentum and position blocks.
    pub fn from_pq(p: &[f64], q: &[f64]) -> Result<Self> {
        if p.len() != q.len() {
            return Err(Error::DimensionMismatch { expected: p.len(), found: q.len() });
        }
        let mut coords = Vec::with_capacity(2 * p.len());
        coords.extend_from_slice(p);
        coords.extend_from_slice(q);
        Self::new(coords)
    }

    pub fn origin(dof: usize) -> Self {
        Self(vec![0.0; 2 * dof])
    }

    pub fn dof(&self) -> usize {
        self.0.len() / 2
    }

    pub fn p(&self) -> &[f64] {
        &self.0[..self.dof()]
    }

    pub fn q(&self) -> &[f64] {
        &self.0[self.dof()..]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn norm_squared(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum()
    }

    pub fn dot(&self, other: &PhasePoint) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    fn check_same_dim(&self, other: &PhasePoint) -> Result<()> {
        if self.0.len() != other.0.len() {
            return Err(Error::DimensionMismatch { expected: self.0.len(), found: other.0.len() });
        }
        Ok(())
    }
}

impl Deref for PhasePoint {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Add for &PhasePoint {
    type Output = PhasePoint;

    fn add(self, rhs: &PhasePoint) -> PhasePoint {
        assert_eq!(self.0.len(), rhs.0.len(), "phase-space dimension mismatch");
        PhasePoint(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &PhasePoint {
    type Output = PhasePoint;

    fn sub(self, rhs: &PhasePoint) -> PhasePoint {
        assert_eq!(self.0.len(), rhs.0.len(), "phase-space dimension mismatch");
        PhasePoint(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Mul<f64> for &PhasePoint {
    type Output = PhasePoint;

    fn mul(self, rhs: f64) -> PhasePoint {
        PhasePoint(self.0.iter().map(|a| a * rhs).collect())
    }
}

impl Neg for &PhasePoint {
    type Output = PhasePoint;

    fn neg(self) -> PhasePoint {
        PhasePoint(self.0.iter().map(|a| -a).collect())
    }
}

/// The standard symplectic matrix for `d` degrees of freedom.
///
/// Never materialized in hot paths; see [`apply_j_slice`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymplecticMatrix {
    dof: usize,
}

impl SymplecticMatrix {
    pub fn new(dof: usize) -> Self {
        Self { dof }
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    /// `J x`, i.e. `(p, q) -> (-q, p)`.
    pub fn apply(&self, x: &PhasePoint) -> Result<PhasePoint> {
        if x.len() != 2 * self.dof {
            return Err(Error::DimensionMismatch { expected: 2 * self.dof, found: x.len() });
        }
        let mut out = vec![0.0; x.len()];
        apply_j_slice(x, &mut out);
        Ok(PhasePoint(out))
    }

    /// `(J xi) . x`.
    pub fn wedge(&self, xi: &PhasePoint, x: &PhasePoint) -> Result<f64> {
        if xi.len() != 2 * self.dof {
            return Err(Error::DimensionMismatch { expected: 2 * self.dof, found: xi.len() });
        }
        xi.check_same_dim(x)?;
        Ok(wedge_slice(xi, x))
    }

    /// Dense row-major copy of `J`; for tests and diagnostics only.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = 2 * self.dof;
        let mut m = vec![0.0; n * n];
        for i in 0..self.dof {
            m[i * n + self.dof + i] = -1.0;
            m[(self.dof + i) * n + i] = 1.0;
        }
        m
    }
}

/// Applies `J` to a `2d` slice: `out = (-q, p)`.
#[inline]
pub fn apply_j_slice(x: &[f64], out: &mut [f64]) {
    let d = x.len() / 2;
    for i in 0..d {
        out[i] = -x[d + i];
        out[d + i] = x[i];
    }
}

/// `(J xi) . x = sum_i (xi_{p_i} x_{q_i} - xi_{q_i} x_{p_i})`.
#[inline]
pub fn wedge_slice(xi: &[f64], x: &[f64]) -> f64 {
    let d = xi.len() / 2;
    (0..d).map(|i| xi[i] * x[d + i] - xi[d + i] * x[i]).sum()
}

/// Free-function form of [`SymplecticMatrix::apply`] for the point's own dimension.
pub fn apply_j(x: &PhasePoint) -> PhasePoint {
    let mut out = vec![0.0; x.len()];
    apply_j_slice(x, &mut out);
    PhasePoint(out)
}

/// Free-function form of [`SymplecticMatrix::wedge`].
pub fn wedge(xi: &PhasePoint, x: &PhasePoint) -> Result<f64> {
    xi.check_same_dim(x)?;
    Ok(wedge_slice(xi, x))
}
