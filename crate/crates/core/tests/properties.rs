use num_complex::Complex64;
use proptest::prelude::*;
use thermal_wigner::doublephase::{propagate_thermal, PropagationOptions};
use thermal_wigner::engine::trace_ratio;
use thermal_wigner::models::{HamiltonianModel, HarmonicOscillator, Kerr, Morse, Nelson};
use thermal_wigner::phase::apply_j;
use thermal_wigner::quadrature::{gauss_chebyshev3, gauss_legendre, rectangle_grid};
use thermal_wigner::reference::{fd_eigensolver_2d, spectrum_thermal_averages, FdGrid, Spectrum};
use thermal_wigner::symbols::moyal::{expand_radial, moyal_product, radial_square, Polynomial, Rational};
use thermal_wigner::symbols::{groenewold_power_integer, normal_form_spectrum, normal_form_thermal};
use thermal_wigner::PhasePoint;

fn models() -> Vec<Box<dyn HamiltonianModel>> {
    vec![
        Box::new(HarmonicOscillator::new(1.0, 1.0).unwrap()),
        Box::new(Kerr::new(1.0, 0.3, 1.0).unwrap()),
        Box::new(Morse::new(0.05, 1.0).unwrap()),
        Box::new(Nelson::new(2.0, 1.0).unwrap()),
    ]
}

fn complex(x: &[f64]) -> Vec<Complex64> {
    x.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

fn mono(dof: usize, exps: &[u32], hbar_power: i32, num: i128, den: i128) -> Polynomial {
    Polynomial::monomial(dof, exps, hbar_power, Rational::new(num, den))
}

#[test]
fn groenewold_powers_match_iterated_moyal_products() {
    let o = radial_square();
    let mut power = o.clone();
    for n in 2..=8 {
        power = moyal_product(&power, &o);
        let coeffs = groenewold_power_integer(n);
        assert_eq!(power, expand_radial(&coeffs, n), "n = {n}");
        assert_eq!(coeffs[n], 1);
        // Odd powers of hbar never appear.
        assert!(coeffs.iter().enumerate().all(|(k, c)| (n - k) % 2 == 0 || *c == 0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn j_squares_to_minus_identity(x in prop::collection::vec(-50.0f64..50.0, 4)) {
        let p = PhasePoint::new(x.clone()).unwrap();
        let jj = apply_j(&apply_j(&p));
        for (a, b) in jj.as_slice().iter().zip(&x) {
            prop_assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn separable_symbols_equal_the_hamiltonian(p in -3.0f64..3.0, q in -1.0f64..3.0, r in prop::collection::vec(-2.0f64..2.0, 4)) {
        let m = Morse::new(0.05, 1.0).unwrap();
        prop_assert_eq!(m.symbol_h(&[p, q]), m.real_value(&[p, q]));
        let n = Nelson::new(1.3, 1.0).unwrap();
        prop_assert_eq!(n.symbol_h(&r), n.real_value(&r));
    }

    #[test]
    fn derivatives_match_finite_differences(x in prop::collection::vec(-1.5f64..1.5, 4)) {
        let h = 1e-5;
        for m in models() {
            let n = 2 * m.dof();
            let z = complex(&x[..n]);
            let mut g = vec![Complex64::default(); n];
            let mut hess = vec![Complex64::default(); n * n];
            m.gradient(&z, &mut g);
            m.hessian(&z, &mut hess);
            for k in 0..n {
                let (mut a, mut b) = (z.clone(), z.clone());
                a[k] += h;
                b[k] -= h;
                let fd = (m.value(&a) - m.value(&b)) / (2.0 * h);
                prop_assert!((fd - g[k]).norm() <= 1e-6 * (1.0 + g[k].norm()), "{} grad {k}", m.name());
                let (mut ga, mut gb) = (vec![Complex64::default(); n], vec![Complex64::default(); n]);
                m.gradient(&a, &mut ga);
                m.gradient(&b, &mut gb);
                for i in 0..n {
                    let fd = (ga[i] - gb[i]) / (2.0 * h);
                    let an = hess[i * n + k];
                    prop_assert!((fd - an).norm() <= 1e-6 * (1.0 + an.norm()), "{} hess ({i},{k})", m.name());
                }
            }
        }
    }

    #[test]
    fn oscillator_and_kerr_h2_symbols_match_moyal_oracle(
        p in -3.0f64..3.0,
        q in -3.0f64..3.0,
        omega_num in 1i128..4,
        chi_num in 1i128..10,
        hbar in prop::sample::select(vec![1.0, 0.5, 2.0]),
    ) {
        let omega = Rational::new(omega_num, 2);
        let chi = Rational::new(chi_num, 10);
        let (w, c) = (omega_num as f64 / 2.0, chi_num as f64 / 10.0);
        // Oscillator: (omega/2)(p^2 + q^2).
        let ho_poly = radial_square().scale(omega / Rational::from_integer(2));
        let ho = HarmonicOscillator::new(w, hbar).unwrap();
        let oracle = moyal_product(&ho_poly, &ho_poly).eval(&[p, q], hbar);
        prop_assert!(oracle.im.abs() < 1e-12);
        prop_assert!((ho.symbol_h2(&[p, q]) - oracle.re).abs() <= 1e-10 * (1.0 + oracle.re.abs()));
        // Kerr: omega [o/2 + chi o^2/(4 hbar) - hbar chi/4] with o = p^2 + q^2.
        let o = radial_square();
        let kerr_poly = o
            .scale(Rational::new(1, 2))
            .add(&o.mul(&o).times_hbar(-1).scale(chi / Rational::from_integer(4)))
            .add(&Polynomial::constant(1, -chi / Rational::from_integer(4)).times_hbar(1))
            .scale(omega);
        let k = Kerr::new(w, c, hbar).unwrap();
        prop_assert!((kerr_poly.eval(&[p, q], hbar).re - k.symbol_h(&[p, q])).abs() < 1e-10 * (1.0 + k.symbol_h(&[p, q]).abs()));
        let oracle = moyal_product(&kerr_poly, &kerr_poly).eval(&[p, q], hbar);
        prop_assert!(oracle.im.abs() < 1e-9 * (1.0 + oracle.re.abs()));
        prop_assert!((k.symbol_h2(&[p, q]) - oracle.re).abs() <= 1e-10 * (1.0 + oracle.re.abs()));
    }

    #[test]
    fn nelson_h2_symbol_matches_moyal_oracle(
        x in prop::collection::vec(-2.0f64..2.0, 4),
        mu_num in 1i128..9,
        hbar in prop::sample::select(vec![1.0, 0.5]),
    ) {
        let mu = Rational::new(mu_num, 4);
        // (px^2 + py^2)/2 + (x^2/2 - y)^2 + mu x^2 in (px, py, x, y) order.
        let u = mono(2, &[0, 0, 2, 0], 0, 1, 2).add(&mono(2, &[0, 0, 0, 1], 0, -1, 1));
        let h = mono(2, &[2, 0, 0, 0], 0, 1, 2)
            .add(&mono(2, &[0, 2, 0, 0], 0, 1, 2))
            .add(&u.mul(&u))
            .add(&mono(2, &[0, 0, 2, 0], 0, 1, 1).scale(mu));
        let n = Nelson::new(mu_num as f64 / 4.0, hbar).unwrap();
        prop_assert!((h.eval(&x, hbar).re - n.symbol_h(&x)).abs() < 1e-12 * (1.0 + n.symbol_h(&x).abs()));
        let oracle = moyal_product(&h, &h).eval(&x, hbar);
        prop_assert!(oracle.im.abs() < 1e-9 * (1.0 + oracle.re.abs()));
        prop_assert!((n.symbol_h2(&x) - oracle.re).abs() <= 1e-10 * (1.0 + oracle.re.abs()));
    }

    #[test]
    fn morse_h2_symbol_is_the_truncated_series(p in -3.0f64..3.0, q in -1.0f64..3.0, chi in 0.01f64..0.2) {
        // H*H = H^2 - (hbar^2/4) T'' V'' with T = p^2/(4D).
        let m = Morse::new(chi, 1.0).unwrap();
        let d = m.depth();
        let v = |q: f64| m.real_value(&[0.0, q]);
        let step = 1e-4;
        let v2 = (v(q + step) - 2.0 * v(q) + v(q - step)) / (step * step);
        let expect = m.real_value(&[p, q]).powi(2) - 0.25 * v2 / (2.0 * d);
        prop_assert!((m.symbol_h2(&[p, q]) - expect).abs() <= 1e-5 * (1.0 + expect.abs()));
    }

    #[test]
    fn morse_energy_below_dissociation_on_its_grid(chi in 0.01f64..0.2, n in 4usize..20) {
        let g = thermal_wigner::quadrature::morse_grid(chi, 1.0, n, n).unwrap();
        let m = Morse::new(chi, 1.0).unwrap();
        prop_assert!(g.nodes().iter().all(|x| m.normalized_energy(x.as_slice()) < 1.0));
        prop_assert!(g.weights().iter().all(|w| w.is_finite() && *w > 0.0));
    }

    #[test]
    fn gaussian_rules_are_exact_to_degree_2n_minus_1(n in 1usize..=64) {
        let gl = gauss_legendre(n).unwrap();
        for k in 0..2 * n {
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            prop_assert!((gl.integrate(|x| x.powi(k as i32)) - exact).abs() < 1e-12, "legendre n={n} k={k}");
        }
        // Chebyshev third kind: int x^k sqrt((1+x)/(1-x)) dx; moments from the
        // recurrence m_k = m_k^(2) + m_{k+1}^(2) of the second-kind weight
        // 1/sqrt(1-x^2), whose even moments are pi (k-1)!!/k!!.
        let cheb = gauss_chebyshev3(n).unwrap();
        let base = |k: usize| -> f64 {
            if k % 2 == 1 {
                return 0.0;
            }
            (1..=k / 2).fold(std::f64::consts::PI, |acc, j| acc * (2 * j - 1) as f64 / (2 * j) as f64)
        };
        for k in 0..2 * n {
            let exact = base(k) + base(k + 1);
            prop_assert!((cheb.integrate(|x| x.powi(k as i32)) - exact).abs() < 1e-12, "chebyshev n={n} k={k}");
        }
    }

    #[test]
    fn short_time_action_is_minus_theta_h(p in -2.0f64..2.0, q in -2.0f64..2.0, chi in 0.0f64..0.5) {
        let k = Kerr::new(1.0, chi.max(1e-6), 1.0).unwrap();
        let x = PhasePoint::new(vec![p, q]).unwrap();
        let j = 0.5 * (p * p + q * q);
        let theta = 1e-4;
        let r = normal_form_thermal(&k, &x, theta).unwrap();
        prop_assert!((r.euclidean_action / theta + k.quantum_g(j) - chi.max(1e-6) / 4.0).abs() < 1e-6 * (1.0 + j * j));
        // No imaginary-time caustics for Kerr.
        for theta in [0.5, 2.0, 8.0] {
            prop_assert!(normal_form_thermal(&k, &x, theta).unwrap().det_jac > 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn rotated_flow_conserves_energy(x in prop::collection::vec(-1.0f64..1.0, 4), theta in prop::sample::select(vec![0.5, 1.0, 2.0])) {
        // Strongly stretched orbits at theta = 2 lose digits to cancellation
        // between large terms, so that case runs at tight tolerances.
        let opts = if theta > 1.0 { PropagationOptions::with_tolerances(1e-11, 1e-13) } else { PropagationOptions::default() };
        for m in models() {
            let n = 2 * m.dof();
            let mid = PhasePoint::new(x[..n].to_vec()).unwrap();
            let out = propagate_thermal(&mid, theta, m.as_ref(), &opts).unwrap();
            if out.discarded() {
                continue;
            }
            // Endpoint z = centre - (i/2) J chord; the rotated Hamiltonian is 2 Re H(z).
            let jy = apply_j(&PhasePoint::new(out.chord_momentum.clone()).unwrap());
            let z: Vec<Complex64> = (0..n).map(|k| Complex64::new(out.centre[k], -0.5 * jy[k])).collect();
            let e0 = m.real_value(mid.as_slice());
            let e = m.value(&z).re;
            prop_assert!((e - e0).abs() <= 1e-6 * 0.5 * theta * (1.0 + e0.abs()), "{}: {e} vs {e0}", m.name());
        }
    }

    #[test]
    fn jacobian_matches_finite_differences(x in prop::collection::vec(-1.0f64..1.0, 4), theta in prop::sample::select(vec![0.5, 2.0])) {
        let opts = PropagationOptions::with_tolerances(1e-11, 1e-13);
        for m in models() {
            let n = 2 * m.dof();
            let out = propagate_thermal(&PhasePoint::new(x[..n].to_vec()).unwrap(), theta, m.as_ref(), &opts).unwrap();
            if out.discarded() {
                continue;
            }
            let h = 1e-5;
            for k in 0..n {
                let (mut a, mut b) = (x[..n].to_vec(), x[..n].to_vec());
                a[k] += h;
                b[k] -= h;
                let oa = propagate_thermal(&PhasePoint::new(a).unwrap(), theta, m.as_ref(), &opts).unwrap();
                let ob = propagate_thermal(&PhasePoint::new(b).unwrap(), theta, m.as_ref(), &opts).unwrap();
                for i in 0..n {
                    let fd = (oa.centre[i] - ob.centre[i]) / (2.0 * h);
                    let an = out.jac_x[i * n + k];
                    prop_assert!((fd - an).abs() <= 1e-5 * (1.0 + an.abs()), "{} ({i},{k}): {fd} vs {an}", m.name());
                }
            }
        }
    }

    #[test]
    fn unit_observable_has_unit_average(theta in 0.0f64..6.0, lo in -3.0f64..-0.5, hi in 0.5f64..3.0, n in 2usize..10) {
        let k = Kerr::new(1.0, 0.2, 1.0).unwrap();
        let g = rectangle_grid(1, (lo, hi), (lo, hi), n).unwrap();
        let v = trace_ratio(&k, theta, &|_| 1.0, &g, &PropagationOptions::default()).unwrap();
        prop_assert!((v - 1.0).abs() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quantum_heat_capacity_is_non_negative_and_energy_decreases(
        levels in prop::collection::vec(0.0f64..20.0, 1..40),
        theta in 0.05f64..20.0,
    ) {
        let s = Spectrum::new(levels, false);
        let a = spectrum_thermal_averages(&s, theta, 1.0).unwrap();
        let b = spectrum_thermal_averages(&s, theta * 1.1, 1.0).unwrap();
        prop_assert!(a.specific_heat >= 0.0);
        prop_assert!(b.mean_energy <= a.mean_energy + 1e-12);
    }

    #[test]
    fn kerr_quantum_energy_decreases_with_theta(chi in 0.0f64..0.5, theta in 0.1f64..10.0) {
        let k = Kerr::new(1.0, chi, 1.0).unwrap();
        let s = normal_form_spectrum(|a| k.quantum_g(a), 2000, 1.0);
        let a = spectrum_thermal_averages(&s, theta, 1.0).unwrap();
        let b = spectrum_thermal_averages(&s, theta + 0.1, 1.0).unwrap();
        prop_assert!(b.mean_energy < a.mean_energy);
    }
}

#[test]
fn fd_levels_rise_when_the_box_shrinks() {
    let v = |x: f64, y: f64| 0.5 * x * x + 0.5 * y * y + 0.1 * x * y * y;
    let big = FdGrid { x_range: (-3.0, 3.0), y_range: (-3.0, 3.0), nx: 40, ny: 40 };
    let small = FdGrid { x_range: (-2.5, 2.5), y_range: (-2.5, 2.5), nx: 40, ny: 40 };
    let a = fd_eigensolver_2d(v, &big, 1.0, 5).unwrap();
    let b = fd_eigensolver_2d(v, &small, 1.0, 5).unwrap();
    for (x, y) in a.energies().iter().zip(b.energies()) {
        assert!(y > x);
    }
}
