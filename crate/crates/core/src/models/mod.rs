//! Hamiltonian models with analytic continuation to complex phase space.
//!
//! Every model exposes the value, gradient and Hessian of its Hamiltonian at
//! complex arguments (the imaginary-time flow needs them off the real axis),
//! together with the Wigner symbols of `H` and `H^2` used as observables.

mod harmonic;
mod kerr;
mod morse;
mod nelson;

pub use harmonic::HarmonicOscillator;
pub use kerr::Kerr;
pub use morse::{bound_state_count, Morse};
pub use nelson::Nelson;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Region of midpoints over which thermal integrals run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MidpointDomain {
    /// Whole phase space; thermal weights are integrated on a radial grid
    /// whose extent follows the Gaussian decay set by `omega0`.
    AllSpaceGaussianMapped { omega0: f64 },
    /// Axis-aligned box (one interval per coordinate pair, same for all).
    Rectangle { p_min: f64, p_max: f64, q_min: f64, q_max: f64 },
    /// Morse bound region, normalized energy below dissociation.
    MorseBound { chi: f64 },
    /// Nelson phase space, integrated in scaled coordinates where the
    /// Boltzmann weight is close to a Gaussian.
    NelsonMapped { mu: f64 },
}

/// Common interface of all Hamiltonian models.
///
/// Arrays are ordered `(p_1..p_d, q_1..q_d)`; Hessians are row-major `2d x 2d`.
pub trait HamiltonianModel: Send + Sync + std::fmt::Debug {
    fn name(&self) -> &'static str;

    fn dof(&self) -> usize;

    fn hbar(&self) -> f64;

    /// Analytic continuation of the Hamiltonian generating the flow.
    fn value(&self, z: &[Complex64]) -> Complex64;

    fn gradient(&self, z: &[Complex64], out: &mut [Complex64]);

    fn hessian(&self, z: &[Complex64], out: &mut [Complex64]);

    /// The classical Hamiltonian `H_c` (differs from the Wigner symbol by the
    /// model's documented `hbar` correction).
    fn classical(&self, x: &[f64]) -> f64;

    /// Wigner symbol of `H`.
    fn symbol_h(&self, x: &[f64]) -> f64;

    /// Wigner symbol of `H^2`.
    fn symbol_h2(&self, x: &[f64]) -> f64;

    fn domain(&self) -> MidpointDomain;

    /// Real-argument value of the flow Hamiltonian.
    fn real_value(&self, x: &[f64]) -> f64 {
        let z: Vec<Complex64> = x.iter().map(|&c| Complex64::new(c, 0.0)).collect();
        self.value(&z).re
    }

    /// Whether `x` lies in the integration domain.
    fn in_domain(&self, x: &[f64]) -> bool {
        match self.domain() {
            MidpointDomain::Rectangle { p_min, p_max, q_min, q_max } => {
                let d = self.dof();
                x[..d].iter().all(|p| (p_min..=p_max).contains(p))
                    && x[d..].iter().all(|q| (q_min..=q_max).contains(q))
            }
            _ => x.iter().all(|c| c.is_finite()),
        }
    }
}


#[cfg(test)]
pub(crate) mod fd_checks {
    //! Finite-difference validation of analytic gradients and Hessians.

    use super::*;

    fn c(x: &[f64]) -> Vec<Complex64> {
        x.iter().map(|&v| Complex64::new(v, 0.0)).collect()
    }

    pub fn check_derivatives(model: &dyn HamiltonianModel, x: &[f64]) {
        let n = x.len();
        let h = 1e-5;
        let mut grad = vec![Complex64::default(); n];
        let mut hess = vec![Complex64::default(); n * n];
        model.gradient(&c(x), &mut grad);
        model.hessian(&c(x), &mut hess);
        let scale_g = grad.iter().map(|g| g.norm()).fold(1.0, f64::max);
        let scale_h = hess.iter().map(|g| g.norm()).fold(1.0, f64::max);
        for k in 0..n {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[k] += h;
            xm[k] -= h;
            let fd = (model.real_value(&xp) - model.real_value(&xm)) / (2.0 * h);
            assert!(
                (fd - grad[k].re).abs() <= 1e-6 * scale_g,
                "{}: gradient[{k}] at {x:?}: fd {fd} vs {}",
                model.name(),
                grad[k].re
            );
            assert_eq!(grad[k].im, 0.0);
            let mut gp = vec![Complex64::default(); n];
            let mut gm = vec![Complex64::default(); n];
            model.gradient(&c(&xp), &mut gp);
            model.gradient(&c(&xm), &mut gm);
            for i in 0..n {
                let fd = (gp[i].re - gm[i].re) / (2.0 * h);
                assert!(
                    (fd - hess[i * n + k].re).abs() <= 1e-6 * scale_h,
                    "{}: hessian[{i},{k}] at {x:?}: fd {fd} vs {}",
                    model.name(),
                    hess[i * n + k].re
                );
                assert_eq!(hess[i * n + k], hess[k * n + i]);
            }
        }
    }

    /// Complex-argument gradient against a complex-step finite difference.
    pub fn check_complex_gradient(model: &dyn HamiltonianModel, z: &[Complex64]) {
        let n = z.len();
        let h = 1e-6;
        let mut grad = vec![Complex64::default(); n];
        model.gradient(z, &mut grad);
        let scale = grad.iter().map(|g| g.norm()).fold(1.0, f64::max);
        for k in 0..n {
            let mut zp = z.to_vec();
            let mut zm = z.to_vec();
            zp[k] += h;
            zm[k] -= h;
            let fd = (model.value(&zp) - model.value(&zm)) / (2.0 * h);
            assert!((fd - grad[k]).norm() <= 1e-6 * scale, "{}: complex gradient[{k}]", model.name());
        }
    }
}
