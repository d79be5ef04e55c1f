use num_complex::Complex64;

use super::{HamiltonianModel, MidpointDomain};
use crate::error::{invalid, Result};

/// Unit-mass particle in the Nelson potential `V = (x^2/2 - y)^2 + mu x^2`.
/// Coordinates are ordered `(p_x, p_y, x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nelson {
    mu: f64,
    hbar: f64,
}

impl Nelson {
    pub fn new(mu: f64, hbar: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(invalid("mu", "must be positive"));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(invalid("hbar", "must be positive"));
        }
        Ok(Self { mu, hbar })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn potential(&self, x: f64, y: f64) -> f64 {
        let u = 0.5 * x * x - y;
        u * u + self.mu * x * x
    }

    pub fn potential_gradient(&self, x: f64, y: f64) -> (f64, f64) {
        (x * x * x - 2.0 * x * y + 2.0 * self.mu * x, 2.0 * y - x * x)
    }

    /// Laplacian of the potential, `3x^2 - 2y + 2 mu + 2`.
    pub fn potential_laplacian(&self, x: f64, y: f64) -> f64 {
        3.0 * x * x - 2.0 * y + 2.0 * self.mu + 2.0
    }
}

impl HamiltonianModel for Nelson {
    fn name(&self) -> &'static str {
        "nelson"
    }

    fn dof(&self) -> usize {
        2
    }

    fn hbar(&self) -> f64 {
        self.hbar
    }

    fn value(&self, z: &[Complex64]) -> Complex64 {
        let (px, py, x, y) = (z[0], z[1], z[2], z[3]);
        let u = 0.5 * x * x - y;
        0.5 * (px * px + py * py) + u * u + self.mu * x * x
    }

    fn gradient(&self, z: &[Complex64], out: &mut [Complex64]) {
        let (px, py, x, y) = (z[0], z[1], z[2], z[3]);
        out[0] = px;
        out[1] = py;
        out[2] = x * x * x - 2.0 * x * y + 2.0 * self.mu * x;
        out[3] = 2.0 * y - x * x;
    }

    fn hessian(&self, z: &[Complex64], out: &mut [Complex64]) {
        let (x, y) = (z[2], z[3]);
        out.fill(Complex64::default());
        out[0] = Complex64::new(1.0, 0.0);
        out[5] = Complex64::new(1.0, 0.0);
        out[10] = 3.0 * x * x - 2.0 * y + 2.0 * self.mu;
        out[11] = -2.0 * x;
        out[14] = -2.0 * x;
        out[15] = Complex64::new(2.0, 0.0);
    }

    fn classical(&self, x: &[f64]) -> f64 {
        0.5 * (x[0] * x[0] + x[1] * x[1]) + self.potential(x[2], x[3])
    }

    fn real_value(&self, x: &[f64]) -> f64 {
        self.classical(x)
    }

    fn symbol_h(&self, x: &[f64]) -> f64 {
        self.classical(x)
    }

    fn symbol_h2(&self, x: &[f64]) -> f64 {
        // Unit-mass kinetic term: H*H = H^2 - (hbar^2/4) lap V.
        let h = self.classical(x);
        h * h - 0.25 * self.hbar * self.hbar * self.potential_laplacian(x[2], x[3])
    }

    fn domain(&self) -> MidpointDomain {
        MidpointDomain::NelsonMapped { mu: self.mu }
    }
}
