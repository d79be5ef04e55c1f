use num_complex::Complex64;
use thermal_wigner::doublephase::{propagate_thermal, PropagationOptions};
use thermal_wigner::models::{HarmonicOscillator, Kerr};
use thermal_wigner::symbols::moyal::{expand_radial, moyal_product, radial_square, Polynomial, Rational};
use thermal_wigner::symbols::{groenewold_power, groenewold_power_integer, normal_form_spectrum, normal_form_thermal};
use thermal_wigner::PhasePoint;

#[test]
fn groenewold_low_powers() {
    // Coefficients of u^k times hbar^(n-k), lowest power first.
    assert_eq!(groenewold_power_integer(2), vec![-1, 0, 1]);
    assert_eq!(groenewold_power_integer(3), vec![0, -5, 0, 1]);
    assert_eq!(groenewold_power_integer(4), vec![5, 0, -14, 0, 1]);
    let o3 = groenewold_power(3, 0.5);
    let (p, q) = (0.8, -1.1);
    let u: f64 = p * p + q * q;
    assert!((o3.eval(p, q) - (u.powi(3) - 5.0 * 0.25 * u)).abs() < 1e-12);
}

#[test]
fn moyal_square_of_radial_polynomial() {
    let o = radial_square();
    assert_eq!(moyal_product(&o, &o), expand_radial(&groenewold_power_integer(2), 2));
}

#[test]
fn moyal_product_of_coordinates() {
    let p = Polynomial::coordinate(1, 0);
    let q = Polynomial::coordinate(1, 1);
    let pq = moyal_product(&p, &q);
    let x = [0.7, -1.3];
    let hbar = 0.9;
    let v = pq.eval(&x, hbar);
    assert!((v - Complex64::new(x[0] * x[1], -hbar / 2.0)).norm() < 1e-14);
    // The symmetrized product is real: (p*q + q*p)/2 = pq.
    let sym = pq.add(&moyal_product(&q, &p)).scale(Rational::new(1, 2));
    assert!(sym.is_real());
    assert!((sym.eval(&x, hbar).re - x[0] * x[1]).abs() < 1e-14);
}

#[test]
fn moyal_identity() {
    let one = Polynomial::constant(1, Rational::from_integer(1));
    let b = radial_square().pow(3).add(&Polynomial::coordinate(1, 0));
    assert_eq!(moyal_product(&one, &b), b);
    assert_eq!(moyal_product(&b, &one), b);
}

#[test]
fn normal_form_at_zero_time_is_identity() {
    let k = Kerr::new(1.0, 0.1, 1.0).unwrap();
    let x = PhasePoint::new(vec![0.4, -0.9]).unwrap();
    let r = normal_form_thermal(&k, &x, 0.0).unwrap();
    assert_eq!(r.centre, x);
    assert_eq!(r.euclidean_action, 0.0);
    assert_eq!(r.det_jac, 1.0);
}

#[test]
fn oscillator_closed_forms_at_theta_two() {
    let ho = HarmonicOscillator::new(1.0, 1.0).unwrap();
    let x = PhasePoint::new(vec![1.0, 0.0]).unwrap();
    let r = normal_form_thermal(&ho, &x, 2.0).unwrap();
    let c1 = 1f64.cosh();
    assert!((r.centre[0] - c1).abs() < 1e-14 && r.centre[1] == 0.0);
    // Area part [2 - sinh 2] J and the full action with -theta F(J), J = 1/2.
    let area = r.euclidean_action + 2.0 * 0.5;
    assert!((area - (2.0 - 2f64.sinh()) * 0.5).abs() < 1e-14);
    assert!((area + 0.8134).abs() < 1e-4);
    assert!((r.euclidean_action + 1.8134).abs() < 1e-4);
    assert!((r.det_jac - c1 * c1).abs() < 1e-13);
    assert!((r.det_jac - 2.3811).abs() < 1e-4);
}

#[test]
fn kerr_closed_form_matches_numerical_propagation() {
    let k = Kerr::new(1.0, 0.1, 1.0).unwrap();
    let x = PhasePoint::new(vec![1.0, 0.0]).unwrap();
    let opts = PropagationOptions::with_tolerances(1e-12, 1e-14);
    for theta in [1.0, 2.0] {
        let a = normal_form_thermal(&k, &x, theta).unwrap();
        let b = propagate_thermal(&x, theta, &k, &opts).unwrap();
        for i in 0..2 {
            assert!((a.centre[i] - b.centre[i]).abs() < 1e-8);
        }
        assert!((a.euclidean_action - b.euclidean_action).abs() < 1e-8);
        assert!((a.det_jac - b.det_jac).abs() < 1e-8 * a.det_jac);
    }
}

#[test]
fn normal_form_spectra() {
    let ho = normal_form_spectrum(|a| a, 5, 1.0);
    assert_eq!(ho.energies(), &[0.5, 1.5, 2.5, 3.5, 4.5, 5.5]);
    let k = Kerr::new(1.0, 0.5, 1.0).unwrap();
    let s = normal_form_spectrum(|a| k.quantum_g(a), 3, 1.0);
    assert_eq!(s.ground(), Some(0.625));
    let k0 = Kerr::new(1.0, 1e-12, 1.0).unwrap();
    let s0 = normal_form_spectrum(|a| k0.quantum_g(a), 5, 1.0);
    for (a, b) in s0.energies().iter().zip(ho.energies()) {
        assert!((a - b).abs() < 1e-10);
    }
}
