//! Real-time Nelson dynamics and surfaces of section at `y = 0`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::models::Nelson;
use crate::ode::{initial_step, Dopri5, OdeSystem, PiController, Tolerances};
use crate::quadrature::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoincareOptions {
    pub energy: f64,
    pub n_trajectories: usize,
    pub t_max: f64,
    pub seed: u64,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for PoincareOptions {
    fn default() -> Self {
        Self { energy: 4.8, n_trajectories: 24, t_max: 10000.0, seed: 1, rel_tol: 1e-11, abs_tol: 1e-13 }
    }
}

/// One upward crossing of `y = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectionCrossing {
    pub traj_id: usize,
    pub x: f64,
    pub p_x: f64,
    /// `|y|` after refinement.
    pub y_residual: f64,
    /// `|H - E| / E` at the crossing.
    pub energy_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoincareSection {
    pub crossings: Vec<SectionCrossing>,
    /// Initial `(x, p_x)` of every trajectory on `y = 0`.
    pub initial_conditions: Vec<(f64, f64)>,
}

impl PoincareSection {
    pub fn trajectory(&self, id: usize) -> Vec<(f64, f64)> {
        self.crossings.iter().filter(|c| c.traj_id == id).map(|c| (c.x, c.p_x)).collect()
    }
}

struct RealFlow<'a> {
    model: &'a Nelson,
}

impl OdeSystem for RealFlow<'_> {
    fn dim(&self) -> usize {
        4
    }

    fn rhs(&self, _t: f64, s: &[f64], ds: &mut [f64]) {
        let (gx, gy) = self.model.potential_gradient(s[2], s[3]);
        ds[0] = -gx;
        ds[1] = -gy;
        ds[2] = s[0];
        ds[3] = s[1];
    }
}

fn energy(model: &Nelson, s: &[f64]) -> f64 {
    0.5 * (s[0] * s[0] + s[1] * s[1]) + model.potential(s[2], s[3])
}

/// Largest `|x|` with `V(x, 0) <= energy`.
fn x_turning(model: &Nelson, energy: f64) -> f64 {
    // x^4/4 + mu x^2 = E  =>  x^2 = 2(-mu + sqrt(mu^2 + E))
    let mu = model.mu();
    (2.0 * (-mu + (mu * mu + energy).sqrt())).sqrt()
}

/// Area of the region `p_x^2/2 + V(x, 0) <= energy` on the section.
pub fn section_accessible_area(model: &Nelson, energy: f64) -> f64 {
    let xm = x_turning(model, energy);
    // Substitute x = xm sin(t) to remove the square-root endpoint behaviour.
    gauss_legendre(64)
        .expect("positive order")
        .mapped(-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2)
        .integrate(|t| {
            let x = xm * t.sin();
            2.0 * (2.0 * (energy - model.potential(x, 0.0)).max(0.0)).sqrt() * xm * t.cos()
        })
}

/// Integrates one orbit from `(x, p_x)` on `y = 0` with `p_y > 0` and
/// records upward crossings.
fn integrate_orbit(model: &Nelson, id: usize, x0: f64, px0: f64, opts: &PoincareOptions) -> Vec<SectionCrossing> {
    let e = opts.energy;
    let py0 = (2.0 * (e - 0.5 * px0 * px0 - model.potential(x0, 0.0))).max(0.0).sqrt();
    let flow = RealFlow { model };
    let tol = Tolerances::new(opts.rel_tol, opts.abs_tol);
    let mut y = vec![px0, py0, x0, 0.0];
    let mut y_new = vec![0.0; 4];
    let mut stepper = Dopri5::new(4);
    let mut refiner = Dopri5::new(4);
    let mut ctl = PiController::default();
    let mut f0 = vec![0.0; 4];
    flow.rhs(0.0, &y, &mut f0);
    let mut h = initial_step(&flow, 0.0, &y, &f0, &tol);
    let mut t = 0.0;
    let mut out = Vec::new();
    let mut dense = vec![0.0; 4];
    while t < opts.t_max {
        let h_try = h.min(opts.t_max - t);
        let err = stepper.try_step(&flow, t, &y, h_try, &tol, &mut y_new);
        if err > 1.0 {
            h = h_try * ctl.rejected(err);
            if h < 1e-14 {
                break;
            }
            continue;
        }
        if y[3] < 0.0 && y_new[3] >= 0.0 {
            // Bisection on the continuous extension.
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                stepper.dense_output(&y, &y_new, h_try, mid, &mut dense);
                if dense[3] < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            // Re-integrate to the event with real steps, then Newton-correct.
            let mut state = y.clone();
            let mut tmp = vec![0.0; 4];
            let mut dt = hi * h_try;
            for _ in 0..8 {
                if dt != 0.0 {
                    refiner.reset();
                    let mut remaining = dt;
                    while remaining.abs() > 0.0 {
                        let step = remaining.signum() * remaining.abs().min(h_try.abs());
                        refiner.try_step(&flow, 0.0, &state, step, &tol, &mut tmp);
                        refiner.reset();
                        state.copy_from_slice(&tmp);
                        remaining -= step;
                        if remaining.abs() < 1e-15 * dt.abs() {
                            break;
                        }
                    }
                }
                if state[3].abs() < 1e-12 {
                    break;
                }
                dt = -state[3] / state[1];
            }
            out.push(SectionCrossing {
                traj_id: id,
                x: state[2],
                p_x: state[0],
                y_residual: state[3].abs(),
                energy_error: ((energy(model, &state) - e) / e).abs(),
            });
        }
        t += h_try;
        std::mem::swap(&mut y, &mut y_new);
        stepper.accept();
        h = h_try * ctl.accepted(err);
    }
    out
}

/// Surface of section of the Nelson system at fixed energy. Initial
/// conditions are drawn uniformly (by rejection) from the accessible region
/// of the `(x, p_x)` plane on `y = 0` with `p_y > 0`.
pub fn poincare_section(model: &Nelson, opts: &PoincareOptions) -> Result<PoincareSection> {
    if !(opts.energy > 0.0) {
        return Err(invalid("energy", "must be positive (the potential minimum is zero)"));
    }
    if !(opts.t_max > 0.0) {
        return Err(invalid("t_max", "must be positive"));
    }
    if !Tolerances::new(opts.rel_tol, opts.abs_tol).is_valid() {
        return Err(invalid("tolerances", "must be positive"));
    }
    let xm = x_turning(model, opts.energy);
    let pm = (2.0 * opts.energy).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut ics = Vec::with_capacity(opts.n_trajectories);
    while ics.len() < opts.n_trajectories {
        let x = xm * (2.0 * rng.random::<f64>() - 1.0);
        let px = pm * (2.0 * rng.random::<f64>() - 1.0);
        if 0.5 * px * px + model.potential(x, 0.0) < opts.energy * (1.0 - 1e-3) {
            ics.push((x, px));
        }
    }
    let crossings = ics
        .par_iter()
        .enumerate()
        .map(|(id, &(x, px))| integrate_orbit(model, id, x, px, opts))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    Ok(PoincareSection { crossings, initial_conditions: ics })
}

/// Qualitative type of an orbit on the section.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrbitClass {
    /// Points lie on a curve with a bounded footprint.
    Island,
    /// Points fill a two-dimensional area.
    Chaotic,
    Undetermined,
}

/// Footprint statistics of one orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitFootprint {
    /// Convex-hull area relative to the accessible section area.
    pub hull_fraction: f64,
    /// Correlation dimension at scales of a few percent of the orbit size.
    pub dimension: f64,
    pub class: OrbitClass,
}

fn hull_area(points: &[(f64, f64)]) -> f64 {
    let mut p: Vec<(f64, f64)> = points.to_vec();
    p.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    p.dedup();
    if p.len() < 3 {
        return 0.0;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * p.len());
    for &pt in &p {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], pt) <= 0.0 {
            hull.pop();
        }
        hull.push(pt);
    }
    let lower = hull.len() + 1;
    for &pt in p.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], pt) <= 0.0 {
            hull.pop();
        }
        hull.push(pt);
    }
    hull.pop();
    let n = hull.len();
    0.5 * (0..n).map(|i| cross((0.0, 0.0), hull[i], hull[(i + 1) % n])).sum::<f64>().abs()
}

/// Correlation dimension from pair counts within `0.01 L` and `0.04 L`,
/// `L` the diagonal of the orbit's bounding box.
fn correlation_dimension(points: &[(f64, f64)]) -> f64 {
    let lo = points.iter().fold((f64::INFINITY, f64::INFINITY), |a, p| (a.0.min(p.0), a.1.min(p.1)));
    let hi = points.iter().fold((f64::NEG_INFINITY, f64::NEG_INFINITY), |a, p| (a.0.max(p.0), a.1.max(p.1)));
    let diag = (hi.0 - lo.0).hypot(hi.1 - lo.1);
    if !(diag > 0.0) {
        return 0.0;
    }
    let (r1, r2) = ((0.01 * diag).powi(2), (0.04 * diag).powi(2));
    let (mut c1, mut c2) = (0u64, 0u64);
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            let d = (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2);
            if d < r2 {
                c2 += 1;
                if d < r1 {
                    c1 += 1;
                }
            }
        }
    }
    if c1 == 0 {
        return 0.0;
    }
    (c2 as f64 / c1 as f64).ln() / 4f64.ln()
}

/// Classifies an orbit from its convex-hull area and correlation dimension.
/// Needs at least 1000 crossings to decide.
pub fn classify_orbit(points: &[(f64, f64)], accessible_area: f64) -> OrbitFootprint {
    let hull_fraction = hull_area(points) / accessible_area;
    if points.len() < 1000 {
        return OrbitFootprint { hull_fraction, dimension: f64::NAN, class: OrbitClass::Undetermined };
    }
    let dimension = correlation_dimension(points);
    let class = if dimension < 1.25 && hull_fraction < 0.5 {
        OrbitClass::Island
    } else if dimension > 1.4 && hull_fraction > 0.2 {
        OrbitClass::Chaotic
    } else {
        OrbitClass::Undetermined
    };
    OrbitFootprint { hull_fraction, dimension, class }
}
