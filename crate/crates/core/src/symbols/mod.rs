//! Wigner symbols of normal-form powers and the closed-form thermal
//! trajectories of Birkhoff normal forms.

pub mod moyal;

use crate::error::{invalid, Result};
use crate::phase::PhasePoint;
use crate::reference::Spectrum;

/// Polynomial `sum_k c_k u^k` in `u = p^2 + q^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialPolynomial {
    coefficients: Vec<f64>,
    hbar: f64,
}

impl RadialPolynomial {
    pub fn new(coefficients: Vec<f64>, hbar: f64) -> Self {
        Self { coefficients, hbar }
    }

    /// Coefficients in ascending powers of `u`.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    pub fn eval_radial(&self, u: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * u + c)
    }

    pub fn eval(&self, p: f64, q: f64) -> f64 {
        self.eval_radial(p * p + q * q)
    }
}

/// Integer coefficients `a_k` of the symbol of `(p^2 + q^2)^n`, where the
/// coefficient of `u^k` is `a_k hbar^(n-k)`.
///
/// Iterates `o^{n+1} = [u - hbar^2 (u d_u^2 + d_u)] o^n`; on `u^k` the
/// bracket gives `u^{k+1} - hbar^2 k^2 u^{k-1}`.
pub fn groenewold_power_integer(n: usize) -> Vec<i128> {
    assert!(n >= 1, "power must be at least one");
    let mut coeffs = vec![0i128, 1];
    for _ in 1..n {
        let mut next = vec![0i128; coeffs.len() + 1];
        for (k, &c) in coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            next[k + 1] += c;
            if k >= 1 {
                let k = k as i128;
                next[(k - 1) as usize] -= k * k * c;
            }
        }
        coeffs = next;
    }
    coeffs
}

/// Wigner symbol of `(p^2 + q^2)^n` as a radial polynomial.
pub fn groenewold_power(n: usize, hbar: f64) -> RadialPolynomial {
    let ints = groenewold_power_integer(n);
    let coefficients = ints
        .iter()
        .enumerate()
        .map(|(k, &a)| a as f64 * hbar.powi((n - k) as i32))
        .collect();
    RadialPolynomial::new(coefficients, hbar)
}

/// A one-degree-of-freedom Birkhoff normal form `H = F(J)`, `J = (p^2 + q^2)/2`.
pub trait NormalForm {
    fn f(&self, j: f64) -> f64;

    /// Orbit frequency `omega(J) = F'(J)`.
    fn f_prime(&self, j: f64) -> f64;

    fn f_second(&self, j: f64) -> f64;
}

/// Closed-form thermal quantities of a normal-form trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormThermal {
    pub centre: PhasePoint,
    pub euclidean_action: f64,
    pub det_jac: f64,
}

/// Centre, euclidean action and Jacobian determinant of the midpoint
/// trajectory launched from `midpoint` after thermal time `theta`.
pub fn normal_form_thermal(nf: &dyn NormalForm, midpoint: &PhasePoint, theta: f64) -> Result<NormalFormThermal> {
    if midpoint.len() != 2 {
        return Err(crate::Error::DimensionMismatch { expected: 2, found: midpoint.len() });
    }
    if !(theta >= 0.0) {
        return Err(invalid("theta", "must be non-negative"));
    }
    let j = 0.5 * midpoint.norm_squared();
    let w = nf.f_prime(j);
    let dw = nf.f_second(j);
    let half = 0.5 * w * theta;
    let ch = half.cosh();
    let euclidean_action = (w * theta - (w * theta).sinh()) * j - theta * nf.f(j);
    let det_jac = ch * ch * (1.0 + j * dw * theta * half.tanh());
    Ok(NormalFormThermal { centre: midpoint * ch, euclidean_action, det_jac })
}

/// Eigenvalues `G(hbar (n + 1/2))` for `n = 0..=n_max`.
pub fn normal_form_spectrum(g: impl Fn(f64) -> f64, n_max: usize, hbar: f64) -> Spectrum {
    let energies = (0..=n_max).map(|n| g(hbar * (n as f64 + 0.5))).collect();
    Spectrum::new(energies, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{HarmonicOscillator, Kerr};

    #[test]
    fn low_powers_match_closed_forms() {
        assert_eq!(groenewold_power_integer(1), vec![0, 1]);
        assert_eq!(groenewold_power_integer(2), vec![-1, 0, 1]);
        assert_eq!(groenewold_power_integer(3), vec![0, -5, 0, 1]);
        assert_eq!(groenewold_power_integer(4), vec![5, 0, -14, 0, 1]);
        let o2 = groenewold_power(2, 0.5);
        assert_eq!(o2.coefficients(), &[-0.25, 0.0, 1.0]);
    }

    #[test]
    fn only_even_hbar_powers() {
        for n in 1..=10 {
            let c = groenewold_power_integer(n);
            assert_eq!(*c.last().unwrap(), 1);
            for (k, a) in c.iter().enumerate() {
                if (n - k) % 2 == 1 {
                    assert_eq!(*a, 0, "odd hbar power in o^{n}");
                }
            }
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let ho = HarmonicOscillator::new(1.0, 1.0).unwrap();
        let x = PhasePoint::new(vec![0.3, -0.8]).unwrap();
        let r = normal_form_thermal(&ho, &x, 0.0).unwrap();
        assert_eq!(r.centre, x);
        assert_eq!(r.euclidean_action, 0.0);
        assert_eq!(r.det_jac, 1.0);
    }

    #[test]
    fn oscillator_closed_forms() {
        let ho = HarmonicOscillator::new(1.0, 1.0).unwrap();
        let x = PhasePoint::new(vec![1.0, 0.0]).unwrap();
        let r = normal_form_thermal(&ho, &x, 2.0).unwrap();
        assert!((r.centre[0] - 1f64.cosh()).abs() < 1e-15);
        assert!((r.euclidean_action - (-0.5 * 2f64.sinh())).abs() < 1e-14);
        assert!((r.det_jac - 1f64.cosh().powi(2)).abs() < 1e-14);
        // Equivalent thermal symbol exp(-tanh(theta/2) x^2) at the centre.
        let x2 = r.centre.norm_squared();
        assert!((r.euclidean_action + 1f64.tanh() * x2).abs() < 1e-13);
    }

    #[test]
    fn short_time_action_slope() {
        let k = Kerr::new(1.0, 0.5, 1.0).unwrap();
        let x = PhasePoint::new(vec![0.6, 0.9]).unwrap();
        let j = 0.5 * x.norm_squared();
        let theta = 1e-4;
        let r = normal_form_thermal(&k, &x, theta).unwrap();
        assert!((r.euclidean_action / theta + k.f(j)).abs() < 1e-6);
    }

    #[test]
    fn no_imaginary_time_caustics_for_kerr() {
        let k = Kerr::new(1.0, 0.5, 1.0).unwrap();
        for theta in [0.1, 1.0, 5.0, 20.0] {
            for r in [0.0, 0.5, 2.0] {
                let x = PhasePoint::new(vec![r, 0.3]).unwrap();
                assert!(normal_form_thermal(&k, &x, theta).unwrap().det_jac > 0.0);
            }
        }
    }

    #[test]
    fn spectra() {
        let ho = normal_form_spectrum(|i| i, 4, 1.0);
        assert_eq!(ho.energies(), &[0.5, 1.5, 2.5, 3.5, 4.5]);
        let k = Kerr::new(1.0, 0.5, 1.0).unwrap();
        let s = normal_form_spectrum(|i| k.quantum_g(i), 3, 1.0);
        assert!((s.energies()[0] - 0.625).abs() < 1e-15);
        let k0 = Kerr::new(1.0, 1e-14, 1.0).unwrap();
        let s0 = normal_form_spectrum(|i| k0.quantum_g(i), 3, 1.0);
        for (e, n) in s0.energies().iter().zip(0..) {
            assert!((e - (n as f64 + 0.5)).abs() < 1e-12);
        }
    }
}
