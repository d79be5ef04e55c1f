use thermal_wigner::models::{HamiltonianModel, Morse, Nelson};
use thermal_wigner::quadrature::{
    adaptive_cubature, gauss_chebyshev3, gauss_legendre, metropolis_sampler, morse_grid, nelson_grid, MetropolisOptions,
    NelsonGridSpec, NelsonMap,
};
use thermal_wigner::reference::classical_averages;

#[test]
fn legendre_small_rules() {
    let r1 = gauss_legendre(1).unwrap();
    assert_eq!((r1.nodes[0], r1.weights[0]), (0.0, 2.0));
    let r2 = gauss_legendre(2).unwrap();
    let a = 1.0 / 3f64.sqrt();
    let mut nodes = r2.nodes.clone();
    nodes.sort_by(f64::total_cmp);
    assert!((nodes[0] + a).abs() < 1e-15 && (nodes[1] - a).abs() < 1e-15);
    assert!(r2.weights.iter().all(|w| (w - 1.0).abs() < 1e-15));
    let r3 = gauss_legendre(3).unwrap();
    assert!((r3.integrate(|x| x.powi(4)) - 0.4).abs() < 1e-15);
}

#[test]
fn chebyshev_third_kind_weight_integrals() {
    for n in [1, 4, 17] {
        let r = gauss_chebyshev3(n).unwrap();
        assert!(r.weights.iter().all(|w| *w > 0.0));
        assert!((r.integrate(|_| 1.0) - std::f64::consts::PI).abs() < 1e-13);
        assert!((r.integrate(|x| x) - std::f64::consts::FRAC_PI_2).abs() < 1e-13);
    }
    // Cubature oracle for the same weighted integral, x = 1 - u^2 removes
    // the endpoint singularity: sqrt((2 - u^2)/u^2) * 2u = 2 sqrt(2 - u^2).
    let c = adaptive_cubature(|u| 2.0 * (2.0 - u[0] * u[0]).max(0.0).sqrt(), &[0.0], &[2f64.sqrt()], 1e-12, 100_000)
        .unwrap();
    assert!((c.value - std::f64::consts::PI).abs() < 1e-10);
}

#[test]
fn morse_grid_size_and_domain() {
    let g = morse_grid(0.01, 1.0, 300, 300).unwrap();
    assert_eq!(g.len(), 90_000);
    let m = Morse::new(0.01, 1.0).unwrap();
    assert!(g.nodes().iter().all(|x| m.normalized_energy(x.as_slice()) < 1.0));
}

#[test]
fn morse_grid_area_matches_cubature() {
    let chi = 0.05;
    let m = Morse::new(chi, 1.0).unwrap();
    let g = morse_grid(chi, 1.0, 40, 40).unwrap();
    let area: f64 = g.weights().iter().sum();
    // Region H < D: |p| < 2D sqrt(1 - (1 - e^{-q})^2). With v = e^{-q} = t^2
    // the q-integral becomes 8D int_0^sqrt2 sqrt(2 - t^2) dt.
    let d = m.depth();
    let c = adaptive_cubature(|t| 8.0 * d * (2.0 - t[0] * t[0]).max(0.0).sqrt(), &[0.0], &[2f64.sqrt()], 1e-13, 100_000)
        .unwrap();
    assert!((area / c.value - 1.0).abs() < 1e-6, "{area} vs {}", c.value);
}

#[test]
fn nelson_map_origin() {
    let map = NelsonMap::classical(2.0, 0.5, 1.0);
    assert_eq!(map.inverse(&[0.0; 4]), [0.0; 4]);
    let n = Nelson::new(2.0, 1.0).unwrap();
    // Classical weight exp(-beta H) at the mapped origin.
    assert_eq!((-0.5 * n.classical(&map.inverse(&[0.0; 4]))).exp(), 1.0);
}

/// Batch-means estimate of a chain average and its standard error.
fn batch_mean(values: &[f64], batches: usize) -> (f64, f64) {
    let size = values.len() / batches;
    let means: Vec<f64> = (0..batches).map(|b| values[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64).collect();
    let m = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (m, (var / batches as f64).sqrt())
}

#[test]
fn nelson_classical_energy_matches_metropolis_oracle() {
    let (mu, theta) = (2.0, 0.5);
    let n = Nelson::new(mu, 1.0).unwrap();
    let grid = nelson_grid(&NelsonMap::classical(mu, theta, 1.0), &NelsonGridSpec::GaussHermite { n: 10 }).unwrap();
    let e_grid = classical_averages(&n, theta, &grid).unwrap().mean_energy;
    // Chain in the original (px, py, x, y) coordinates.
    let opts = MetropolisOptions { proposal_scale: 1.5, ..MetropolisOptions::default() };
    let run = metropolis_sampler(|x| -theta * n.classical(x), &[0.0; 4], 400_000, 11, &opts).unwrap();
    let h: Vec<f64> = run.samples.iter().map(|x| n.classical(x)).collect();
    let (e_mc, se) = batch_mean(&h, 100);
    assert!((e_grid - e_mc).abs() < 3.0 * se, "grid {e_grid}, chain {e_mc} +- {se}");
}

#[test]
fn cubature_examples() {
    let one = adaptive_cubature(|_| 1.0, &[0.0], &[1.0], 1e-12, 10_000).unwrap();
    assert!((one.value - 1.0).abs() < 1e-15);
    let xy = adaptive_cubature(|x| x[0] * x[1], &[0.0, 0.0], &[1.0, 1.0], 1e-12, 10_000).unwrap();
    assert!((xy.value - 0.25).abs() < 1e-14);
    let rel = 1e-8;
    let g = adaptive_cubature(|x| (-0.5 * (x[0] * x[0] + x[1] * x[1])).exp(), &[-6.0, -6.0], &[6.0, 6.0], rel, 1_000_000)
        .unwrap();
    assert!(g.converged);
    // Truncation of the tails beyond 6 is ~1e-8 relative.
    let exact = 2.0 * std::f64::consts::PI * libm_erf(6.0 / 2f64.sqrt()).powi(2);
    assert!((g.value / exact - 1.0).abs() < rel);
    assert!((g.value / (2.0 * std::f64::consts::PI) - 1.0).abs() < 1e-7);
}

/// erf via a Gauss–Legendre rule on [0, x]; accurate to round-off for x < 6.
fn libm_erf(x: f64) -> f64 {
    let r = gauss_legendre(60).unwrap().mapped(0.0, x);
    2.0 / std::f64::consts::PI.sqrt() * r.integrate(|t| (-t * t).exp())
}

#[test]
fn metropolis_standard_normal_and_equipartition() {
    let opts = MetropolisOptions { proposal_scale: 2.4, ..MetropolisOptions::default() };
    let run = metropolis_sampler(|x| -0.5 * x[0] * x[0], &[0.0], 1_000_000, 5, &opts).unwrap();
    let xs: Vec<f64> = run.samples.iter().map(|s| s[0]).collect();
    let (m, se_m) = batch_mean(&xs, 200);
    assert!(m.abs() < 4.0 * se_m, "mean {m} +- {se_m}");
    let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
    let (v, se_v) = batch_mean(&sq, 200);
    assert!((v - 1.0).abs() < 4.0 * se_v, "variance {v} +- {se_v}");

    // Classical oscillator at theta = 1: <H> = 1.
    let h = |x: &[f64]| 0.5 * (x[0] * x[0] + x[1] * x[1]);
    let run = metropolis_sampler(|x| -h(x), &[0.0, 0.0], 400_000, 9, &opts).unwrap();
    let hs: Vec<f64> = run.samples.iter().map(|x| h(x)).collect();
    let (e, se) = batch_mean(&hs, 100);
    assert!((e - 1.0).abs() < 4.0 * se, "<H> {e} +- {se}");

    let a = metropolis_sampler(|x| -h(x), &[0.0, 0.0], 1000, 3, &opts).unwrap();
    let b = metropolis_sampler(|x| -h(x), &[0.0, 0.0], 1000, 3, &opts).unwrap();
    assert_eq!(a, b);
}
