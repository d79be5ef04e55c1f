use num_complex::Complex64;

use super::{HamiltonianModel, MidpointDomain};
use crate::error::{invalid, Result};
use crate::symbols::{groenewold_power, NormalForm};

/// Kerr oscillator, `H = hbar w0 [n + chi n^2]` with `n = (p^2 + q^2) / (2 hbar)`.
///
/// The flow is generated by the Wigner symbol, the normal form
/// `F(J) = hbar w0 [J/hbar + chi (J/hbar)^2 - chi/4]`, which differs from the
/// classical Hamiltonian by the constant `-hbar w0 chi / 4`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kerr {
    omega0: f64,
    chi: f64,
    hbar: f64,
    // Coefficients of the symbols of o^2, o^3, o^4 in powers of s = p^2 + q^2.
    o2: Vec<f64>,
    o3: Vec<f64>,
    o4: Vec<f64>,
}

impl Kerr {
    pub fn new(omega0: f64, chi: f64, hbar: f64) -> Result<Self> {
        if !(omega0 > 0.0 && omega0.is_finite()) {
            return Err(invalid("omega0", "must be positive"));
        }
        if !(chi > 0.0 && chi.is_finite()) {
            return Err(invalid("chi", "must be positive"));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(invalid("hbar", "must be positive"));
        }
        Ok(Self {
            omega0,
            chi,
            hbar,
            o2: groenewold_power(2, hbar).coefficients().to_vec(),
            o3: groenewold_power(3, hbar).coefficients().to_vec(),
            o4: groenewold_power(4, hbar).coefficients().to_vec(),
        })
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    /// Quantum normal form `G(I) = hbar w0 [I/hbar + chi (I/hbar)^2]`.
    pub fn quantum_g(&self, action: f64) -> f64 {
        let n = action / self.hbar;
        self.hbar * self.omega0 * (n + self.chi * n * n)
    }

    fn f_complex(&self, j: Complex64) -> Complex64 {
        let n = j / self.hbar;
        self.hbar * self.omega0 * (n + self.chi * n * n - self.chi / 4.0)
    }
}

fn horner(coeffs: &[f64], s: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
}

impl HamiltonianModel for Kerr {
    fn name(&self) -> &'static str {
        "kerr"
    }

    fn dof(&self) -> usize {
        1
    }

    fn hbar(&self) -> f64 {
        self.hbar
    }

    fn value(&self, z: &[Complex64]) -> Complex64 {
        self.f_complex(0.5 * (z[0] * z[0] + z[1] * z[1]))
    }

    fn gradient(&self, z: &[Complex64], out: &mut [Complex64]) {
        let j = 0.5 * (z[0] * z[0] + z[1] * z[1]);
        let w = self.omega0 * (1.0 + 2.0 * self.chi * j / self.hbar);
        out[0] = w * z[0];
        out[1] = w * z[1];
    }

    fn hessian(&self, z: &[Complex64], out: &mut [Complex64]) {
        let j = 0.5 * (z[0] * z[0] + z[1] * z[1]);
        let w = self.omega0 * (1.0 + 2.0 * self.chi * j / self.hbar);
        let w1 = 2.0 * self.omega0 * self.chi / self.hbar;
        out[0] = w + w1 * z[0] * z[0];
        out[1] = w1 * z[0] * z[1];
        out[2] = out[1];
        out[3] = w + w1 * z[1] * z[1];
    }

    fn classical(&self, x: &[f64]) -> f64 {
        self.symbol_h(x) + self.hbar * self.omega0 * self.chi / 4.0
    }

    fn symbol_h(&self, x: &[f64]) -> f64 {
        self.f(0.5 * (x[0] * x[0] + x[1] * x[1]))
    }

    fn symbol_h2(&self, x: &[f64]) -> f64 {
        // H = hbar w0 [o/(2 hbar) + chi o^2/(4 hbar^2)] with o = p^2 + q^2, so
        // H^2 = w0^2 [o^2/4 + chi o^3/(4 hbar) + chi^2 o^4/(16 hbar^2)].
        let s = x[0] * x[0] + x[1] * x[1];
        let (h, c) = (self.hbar, self.chi);
        self.omega0
            * self.omega0
            * (0.25 * horner(&self.o2, s) + c / (4.0 * h) * horner(&self.o3, s)
                + c * c / (16.0 * h * h) * horner(&self.o4, s))
    }

    fn domain(&self) -> MidpointDomain {
        MidpointDomain::AllSpaceGaussianMapped { omega0: self.omega0 }
    }
}

impl NormalForm for Kerr {
    fn f(&self, j: f64) -> f64 {
        let n = j / self.hbar;
        self.hbar * self.omega0 * (n + self.chi * n * n - self.chi / 4.0)
    }

    fn f_prime(&self, j: f64) -> f64 {
        self.omega0 * (1.0 + 2.0 * self.chi * j / self.hbar)
    }

    fn f_second(&self, _j: f64) -> f64 {
        2.0 * self.omega0 * self.chi / self.hbar
    }
}
