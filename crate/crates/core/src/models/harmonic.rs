use num_complex::Complex64;

use super::{HamiltonianModel, MidpointDomain};
use crate::error::{invalid, Result};
use crate::symbols::NormalForm;

/// `H = omega (p^2 + q^2) / 2`, one degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicOscillator {
    omega: f64,
    hbar: f64,
}

impl HarmonicOscillator {
    pub fn new(omega: f64, hbar: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(invalid("omega", "must be positive"));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(invalid("hbar", "must be positive"));
        }
        Ok(Self { omega, hbar })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }
}

impl HamiltonianModel for HarmonicOscillator {
    fn name(&self) -> &'static str {
        "harmonic-oscillator"
    }

    fn dof(&self) -> usize {
        1
    }

    fn hbar(&self) -> f64 {
        self.hbar
    }

    fn value(&self, z: &[Complex64]) -> Complex64 {
        0.5 * self.omega * (z[0] * z[0] + z[1] * z[1])
    }

    fn gradient(&self, z: &[Complex64], out: &mut [Complex64]) {
        out[0] = self.omega * z[0];
        out[1] = self.omega * z[1];
    }

    fn hessian(&self, _z: &[Complex64], out: &mut [Complex64]) {
        out.copy_from_slice(&[
            Complex64::new(self.omega, 0.0),
            Complex64::default(),
            Complex64::default(),
            Complex64::new(self.omega, 0.0),
        ]);
    }

    fn classical(&self, x: &[f64]) -> f64 {
        0.5 * self.omega * (x[0] * x[0] + x[1] * x[1])
    }

    fn symbol_h(&self, x: &[f64]) -> f64 {
        self.classical(x)
    }

    fn symbol_h2(&self, x: &[f64]) -> f64 {
        // (omega/2)^2 times the symbol of (p^2 + q^2)^2.
        let s = x[0] * x[0] + x[1] * x[1];
        0.25 * self.omega * self.omega * (s * s - self.hbar * self.hbar)
    }

    fn domain(&self) -> MidpointDomain {
        MidpointDomain::AllSpaceGaussianMapped { omega0: self.omega }
    }
}

impl NormalForm for HarmonicOscillator {
    fn f(&self, j: f64) -> f64 {
        self.omega * j
    }

    fn f_prime(&self, _j: f64) -> f64 {
        self.omega
    }

    fn f_second(&self, _j: f64) -> f64 {
        0.0
    }
}
