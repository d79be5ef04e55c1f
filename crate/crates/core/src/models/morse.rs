use num_complex::Complex64;

use super::{HamiltonianModel, MidpointDomain};
use crate::error::{invalid, Result};

/// Morse oscillator in units `omega = 1`:
/// `H = p^2 / (4D) + D (1 - e^{-q})^2` with `D = hbar / (4 chi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Morse {
    chi: f64,
    hbar: f64,
    depth: f64,
}

impl Morse {
    pub fn new(chi: f64, hbar: f64) -> Result<Self> {
        if !(chi > 0.0 && chi < 0.5) {
            return Err(invalid("chi", format!("must lie in (0, 1/2), got {chi}")));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(invalid("hbar", "must be positive"));
        }
        Ok(Self { chi, hbar, depth: hbar / (4.0 * chi) })
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    /// Dissociation energy `D`.
    pub fn depth(&self) -> f64 {
        self.depth
    }

    /// `epsilon = H / D`; bound orbits have `epsilon < 1`.
    pub fn normalized_energy(&self, x: &[f64]) -> f64 {
        self.classical(x) / self.depth
    }

    /// Position of the left turning point `p = 0, q < 0` of the orbit with
    /// normalized energy `epsilon`.
    pub fn left_turning_point(&self, epsilon: f64) -> f64 {
        -(1.0 + epsilon.sqrt()).ln()
    }

    fn potential_second(&self, q: f64) -> f64 {
        let e = (-q).exp();
        2.0 * self.depth * (2.0 * e * e - e)
    }
}

/// Number of excited bound states, `N = floor(1/(2 chi) - 1/2)`; levels run `n = 0..=N`.
pub fn bound_state_count(chi: f64) -> Result<usize> {
    if !(chi > 0.0 && chi < 0.5) {
        return Err(invalid("chi", format!("must lie in (0, 1/2), got {chi}")));
    }
    Ok((1.0 / (2.0 * chi) - 0.5).floor() as usize)
}

impl HamiltonianModel for Morse {
    fn name(&self) -> &'static str {
        "morse"
    }

    fn dof(&self) -> usize {
        1
    }

    fn hbar(&self) -> f64 {
        self.hbar
    }

    fn value(&self, z: &[Complex64]) -> Complex64 {
        let u = 1.0 - (-z[1]).exp();
        z[0] * z[0] / (4.0 * self.depth) + self.depth * u * u
    }

    fn gradient(&self, z: &[Complex64], out: &mut [Complex64]) {
        let e = (-z[1]).exp();
        out[0] = z[0] / (2.0 * self.depth);
        out[1] = 2.0 * self.depth * (e - e * e);
    }

    fn hessian(&self, z: &[Complex64], out: &mut [Complex64]) {
        let e = (-z[1]).exp();
        out[0] = Complex64::new(1.0 / (2.0 * self.depth), 0.0);
        out[1] = Complex64::default();
        out[2] = Complex64::default();
        out[3] = 2.0 * self.depth * (2.0 * e * e - e);
    }

    fn classical(&self, x: &[f64]) -> f64 {
        let u = 1.0 - (-x[1]).exp();
        x[0] * x[0] / (4.0 * self.depth) + self.depth * u * u
    }

    fn symbol_h(&self, x: &[f64]) -> f64 {
        self.classical(x)
    }

    fn symbol_h2(&self, x: &[f64]) -> f64 {
        // Separable H = T(p) + V(q) with quadratic T: the Moyal series stops
        // at second order, H*H = H^2 - (hbar^2/4) T'' V''.
        let h = self.classical(x);
        let t2 = 1.0 / (2.0 * self.depth);
        h * h - 0.25 * self.hbar * self.hbar * t2 * self.potential_second(x[1])
    }

    fn domain(&self) -> MidpointDomain {
        MidpointDomain::MorseBound { chi: self.chi }
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        self.normalized_energy(x) < 1.0
    }
}
