//! Semiclassical thermal observables from midpoint integrals.
//!
//! For a grid of midpoints `X_i` with quadrature weights `w_i`,
//!
//! ```text
//! <O> = sum_i w_i sqrt|det dx/dX| exp(S_E / hbar) O(x(X_i))
//!     / sum_i w_i sqrt|det dx/dX| exp(S_E / hbar)
//! ```
//!
//! Sums run in log space and in node order, so results do not depend on the
//! number of threads.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::doublephase::{propagate_thermal, propagate_thermal_scan, PropagationOptions, TrajectoryOutcome};
use crate::error::{invalid, Error, Result};
use crate::models::HamiltonianModel;
use crate::phase::PhasePoint;
use crate::quadrature::MidpointGrid;

/// Thermal observables at one thermal time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermalObservableResult {
    pub theta: f64,
    pub mean_energy: f64,
    pub specific_heat: f64,
    /// `sum_i w_i weight_i`, proportional to the partition function.
    pub partition_weight_sum: f64,
    /// Fraction of nodes whose trajectory crossed a caustic or diverged.
    pub discarded_fraction: f64,
    /// Set when the semiclassical heat capacity came out negative.
    pub negative_specific_heat: bool,
    pub nodes: usize,
}

#[derive(Debug, Clone, Copy)]
struct NodeTerm {
    log_weight: f64,
    h: f64,
    h2: f64,
}

fn node_term(model: &dyn HamiltonianModel, grid: &MidpointGrid, i: usize, out: &TrajectoryOutcome) -> Option<NodeTerm> {
    if out.discarded() || !(out.det_jac > 0.0) {
        return None;
    }
    let log_weight = grid.log_weight(i) + out.log_weight(model.hbar());
    log_weight.is_finite().then(|| NodeTerm {
        log_weight,
        h: model.symbol_h(&out.centre),
        h2: model.symbol_h2(&out.centre),
    })
}

fn reduce(theta: f64, hbar: f64, terms: &[Option<NodeTerm>]) -> Result<ThermalObservableResult> {
    let nodes = terms.len();
    let kept: Vec<&NodeTerm> = terms.iter().flatten().collect();
    let discarded_fraction = (nodes - kept.len()) as f64 / nodes as f64;
    if kept.is_empty() {
        return Err(Error::AllTrajectoriesDiscarded { theta, discarded_fraction });
    }
    let lmax = kept.iter().map(|t| t.log_weight).fold(f64::NEG_INFINITY, f64::max);
    let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for t in &kept {
        let w = (t.log_weight - lmax).exp();
        z += w;
        m1 += w * t.h;
        m2 += w * t.h2;
    }
    let beta = theta / hbar;
    let mean_energy = m1 / z;
    let specific_heat = beta * beta * (m2 / z - mean_energy * mean_energy);
    Ok(ThermalObservableResult {
        theta,
        mean_energy,
        specific_heat,
        partition_weight_sum: z * lmax.exp(),
        discarded_fraction,
        negative_specific_heat: specific_heat < 0.0,
        nodes,
    })
}

fn check_thetas(thetas: &[f64]) -> Result<()> {
    if thetas.is_empty() {
        return Err(invalid("theta", "empty list of thermal times"));
    }
    if thetas.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(invalid("theta", "thermal times must be finite and non-negative"));
    }
    Ok(())
}

/// Observables at several thermal times on one grid, propagating each
/// midpoint once through all of them. Entries fail individually when every
/// trajectory was discarded at that thermal time.
pub fn thermal_observables_scan(
    model: &dyn HamiltonianModel,
    thetas: &[f64],
    grid: &MidpointGrid,
    opts: &PropagationOptions,
) -> Result<Vec<Result<ThermalObservableResult>>> {
    check_thetas(thetas)?;
    opts.validate()?;
    if grid.nodes()[0].len() != 2 * model.dof() {
        return Err(Error::DimensionMismatch { expected: 2 * model.dof(), found: grid.nodes()[0].len() });
    }
    let mut order: Vec<usize> = (0..thetas.len()).collect();
    order.sort_by(|&a, &b| thetas[a].total_cmp(&thetas[b]));
    let sorted: Vec<f64> = order.iter().map(|&k| thetas[k]).collect();

    let per_node: Vec<Vec<Option<NodeTerm>>> = grid
        .nodes()
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let outs = propagate_thermal_scan(x, &sorted, model, opts)?;
            Ok(outs.iter().map(|o| node_term(model, grid, i, o)).collect())
        })
        .collect::<Result<_>>()?;

    let mut results: Vec<Option<Result<ThermalObservableResult>>> = vec![None; thetas.len()];
    for (col, &k) in order.iter().enumerate() {
        let terms: Vec<Option<NodeTerm>> = per_node.iter().map(|row| row[col]).collect();
        results[k] = Some(reduce(thetas[k], model.hbar(), &terms));
    }
    Ok(results.into_iter().map(|r| r.expect("every slot filled")).collect())
}

/// Mean energy, heat capacity and diagnostics at one thermal time.
pub fn thermal_observables(
    model: &dyn HamiltonianModel,
    theta: f64,
    grid: &MidpointGrid,
    opts: &PropagationOptions,
) -> Result<ThermalObservableResult> {
    thermal_observables_scan(model, &[theta], grid, opts)?.remove(0)
}

/// Semiclassical thermal average of an arbitrary symbol `O` evaluated at the
/// centres.
pub fn trace_ratio(
    model: &dyn HamiltonianModel,
    theta: f64,
    observable: &(dyn Fn(&[f64]) -> f64 + Sync),
    grid: &MidpointGrid,
    opts: &PropagationOptions,
) -> Result<f64> {
    check_thetas(&[theta])?;
    opts.validate()?;
    let terms: Vec<Option<(f64, f64)>> = grid
        .nodes()
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let out = propagate_thermal(x, theta, model, opts)?;
            if out.discarded() || !(out.det_jac > 0.0) {
                return Ok(None);
            }
            let lw = grid.log_weight(i) + out.log_weight(model.hbar());
            Ok(lw.is_finite().then(|| (lw, observable(&out.centre))))
        })
        .collect::<Result<_>>()?;
    let kept: Vec<(f64, f64)> = terms.iter().flatten().copied().collect();
    if kept.is_empty() {
        return Err(Error::AllTrajectoriesDiscarded { theta, discarded_fraction: 1.0 });
    }
    let lmax = kept.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
    let (mut num, mut den) = (0.0, 0.0);
    for &(lw, o) in &kept {
        let w = (lw - lmax).exp();
        num += w * o;
        den += w;
    }
    Ok(num / den)
}

/// Semiclassical `<H>`.
pub fn thermal_energy(
    model: &dyn HamiltonianModel,
    theta: f64,
    grid: &MidpointGrid,
    opts: &PropagationOptions,
) -> Result<f64> {
    Ok(thermal_observables(model, theta, grid, opts)?.mean_energy)
}

/// Semiclassical heat capacity `beta^2 (<H^2> - <H>^2)`; may be negative.
pub fn specific_heat(
    model: &dyn HamiltonianModel,
    theta: f64,
    grid: &MidpointGrid,
    opts: &PropagationOptions,
) -> Result<f64> {
    Ok(thermal_observables(model, theta, grid, opts)?.specific_heat)
}

/// Root-finding settings for locating the midpoint of a given centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonOptions {
    pub max_iter: usize,
    pub step_tol: f64,
    pub residual_tol: f64,
    /// Maximum number of step halvings per iteration.
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { max_iter: 50, step_tol: 1e-10, residual_tol: 1e-10, max_halvings: 30 }
    }
}

/// Unnormalized semiclassical thermal Wigner value at one centre.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WignerValue {
    pub centre: PhasePoint,
    /// Midpoint whose trajectory ends at `centre`.
    pub midpoint: PhasePoint,
    /// `-ln|det| / 2 + area / hbar - beta symbol_h(X)`.
    pub log_value: f64,
    pub value: f64,
    pub iterations: usize,
}

fn residual_norm(out: &TrajectoryOutcome, target: &[f64]) -> f64 {
    out.centre.iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

/// Solves `x(X) = x'` by damped Newton–Raphson with `dx/dX` as the Jacobian
/// and returns `|det dx/dX|^{-1/2} exp(area / hbar - beta symbol_h(X))`.
pub fn wigner_at(
    model: &dyn HamiltonianModel,
    theta: f64,
    x_prime: &PhasePoint,
    opts: &PropagationOptions,
    newton: &NewtonOptions,
) -> Result<WignerValue> {
    if !(theta > 0.0) {
        return Err(invalid("theta", "must be positive"));
    }
    let n = 2 * model.dof();
    if x_prime.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: x_prime.len() });
    }
    let scale = x_prime.norm_squared().sqrt().max(1.0);
    let mut x = x_prime.clone();
    let mut out = propagate_thermal(&x, theta, model, opts)?;
    if out.discarded() {
        return Err(Error::UnreachableCentre { s: out.s_reached });
    }
    let mut res = residual_norm(&out, x_prime);
    let mut iterations = 0;
    while res > newton.residual_tol * scale {
        if iterations >= newton.max_iter {
            return Err(Error::NewtonFailed { iterations, residual: res });
        }
        iterations += 1;
        let jac = DMatrix::from_row_slice(n, n, &out.jac_x);
        let rhs = DVector::from_iterator(n, out.centre.iter().zip(x_prime.iter()).map(|(a, b)| b - a));
        let delta = jac.lu().solve(&rhs).ok_or(Error::NewtonFailed { iterations, residual: res })?;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=newton.max_halvings {
            let trial = PhasePoint::new(x.iter().zip(delta.iter()).map(|(a, d)| a + lambda * d).collect())?;
            let t_out = propagate_thermal(&trial, theta, model, opts)?;
            if !t_out.discarded() {
                let t_res = residual_norm(&t_out, x_prime);
                if t_res < res {
                    accepted = Some((trial, t_out, t_res));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((trial, t_out, t_res)) = accepted else {
            return Err(Error::NewtonFailed { iterations, residual: res });
        };
        let step = lambda * delta.norm();
        x = trial;
        out = t_out;
        res = t_res;
        if step < newton.step_tol * scale && res <= 1e3 * newton.residual_tol * scale {
            break;
        }
    }
    let beta = theta / model.hbar();
    let log_value = -0.5 * out.det_jac.abs().ln() + out.area / model.hbar() - beta * model.symbol_h(&x);
    Ok(WignerValue { centre: x_prime.clone(), midpoint: x, log_value, value: log_value.exp(), iterations })
}

/// Phase-space axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    P,
    Q,
}

/// Normalized Wigner function of a one-dof model on a rectangular grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WignerGrid {
    pub theta: f64,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// `values[i][j]` at `(p[i], q[j])`; zero where unreachable.
    pub values: Vec<Vec<f64>>,
    pub reachable: Vec<Vec<bool>>,
    pub unreachable_count: usize,
}

/// Trapezoid weights of an increasing axis.
fn trapezoid(axis: &[f64]) -> Vec<f64> {
    let n = axis.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { axis[i] - axis[i - 1] } else { 0.0 };
            let right = if i + 1 < n { axis[i + 1] - axis[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

/// Uniform axis of `n` points on `[a, b]`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.5 * (a + b)],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

impl WignerGrid {
    /// Evaluates [`wigner_at`] at every grid point and normalizes the
    /// trapezoid integral to one.
    pub fn compute(
        model: &dyn HamiltonianModel,
        theta: f64,
        p: &[f64],
        q: &[f64],
        opts: &PropagationOptions,
        newton: &NewtonOptions,
    ) -> Result<Self> {
        if model.dof() != 1 {
            return Err(invalid("model", "Wigner grids are available for one degree of freedom"));
        }
        for axis in [p, q] {
            if axis.len() < 2 || axis.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(invalid("axis", "need at least two increasing points"));
            }
        }
        let cells: Vec<(usize, usize)> = (0..p.len()).flat_map(|i| (0..q.len()).map(move |j| (i, j))).collect();
        let logs: Vec<Option<f64>> = cells
            .par_iter()
            .map(|&(i, j)| {
                let x = PhasePoint::new(vec![p[i], q[j]]).expect("two coordinates");
                match wigner_at(model, theta, &x, opts, newton) {
                    Ok(w) if w.log_value.is_finite() => Ok(Some(w.log_value)),
                    Ok(_) | Err(Error::NewtonFailed { .. }) | Err(Error::UnreachableCentre { .. }) => Ok(None),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<_>>()?;
        let lmax = logs.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
        if !lmax.is_finite() {
            return Err(Error::UnreachableCentre { s: 0.5 * theta });
        }
        let mut values = vec![vec![0.0; q.len()]; p.len()];
        let mut reachable = vec![vec![false; q.len()]; p.len()];
        for (&(i, j), l) in cells.iter().zip(&logs) {
            if let Some(l) = l {
                values[i][j] = (l - lmax).exp();
                reachable[i][j] = true;
            }
        }
        let (wp, wq) = (trapezoid(p), trapezoid(q));
        let mut total = 0.0;
        for i in 0..p.len() {
            for j in 0..q.len() {
                total += wp[i] * wq[j] * values[i][j];
            }
        }
        for row in values.iter_mut() {
            row.iter_mut().for_each(|v| *v /= total);
        }
        let unreachable_count = logs.iter().filter(|l| l.is_none()).count();
        Ok(Self { theta, p: p.to_vec(), q: q.to_vec(), values, reachable, unreachable_count })
    }

    /// Marginal along `axis` (integrating out the other one), normalized to
    /// unit trapezoid integral.
    pub fn marginal(&self, axis: Axis) -> (Vec<f64>, Vec<f64>) {
        let (wp, wq) = (trapezoid(&self.p), trapezoid(&self.q));
        let (coords, dens, w) = match axis {
            Axis::P => {
                let d: Vec<f64> = self.values.iter().map(|row| row.iter().zip(&wq).map(|(v, w)| v * w).sum()).collect();
                (self.p.clone(), d, wp)
            }
            Axis::Q => {
                let d: Vec<f64> = (0..self.q.len())
                    .map(|j| self.values.iter().zip(&wp).map(|(row, w)| row[j] * w).sum())
                    .collect();
                (self.q.clone(), d, wq)
            }
        };
        let norm: f64 = dens.iter().zip(&w).map(|(d, w)| d * w).sum();
        (coords, dens.into_iter().map(|d| d / norm).collect())
    }
}

/// Marginal `W(p)` or `W(q)` of the semiclassical thermal Wigner function on
/// the given rectangular grid.
pub fn wigner_marginal(
    model: &dyn HamiltonianModel,
    theta: f64,
    axis: Axis,
    p: &[f64],
    q: &[f64],
    opts: &PropagationOptions,
    newton: &NewtonOptions,
) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok(WignerGrid::compute(model, theta, p, q, opts, newton)?.marginal(axis))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{HarmonicOscillator, Morse};
    use crate::quadrature::{morse_grid, radial_cutoff, radial_grid};

    fn ho_grid(ho: &HarmonicOscillator, theta: f64) -> MidpointGrid {
        radial_grid(radial_cutoff(ho, 1.0, theta, true, 50.0).unwrap(), 64, 4).unwrap()
    }

    #[test]
    fn unit_observable_gives_one() {
        let m = Morse::new(0.05, 1.0).unwrap();
        let g = morse_grid(0.05, 1.0, 12, 12).unwrap();
        let r = trace_ratio(&m, 1.0, &|_| 1.0, &g, &PropagationOptions::default()).unwrap();
        assert!((r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn oscillator_energy_is_exact() {
        let ho = HarmonicOscillator::new(1.0, 1.0).unwrap();
        let r = thermal_observables(&ho, 2.0, &ho_grid(&ho, 2.0), &PropagationOptions::default()).unwrap();
        assert!((r.mean_energy - 0.5 / 1f64.tanh()).abs() < 1e-6);
        assert_eq!(r.discarded_fraction, 0.0);
        let e = thermal_energy(&ho, 20.0, &ho_grid(&ho, 20.0), &PropagationOptions::default()).unwrap();
        assert!((e - 0.5).abs() < 1e-4);
    }

    #[test]
    fn infinite_temperature_is_a_plain_average() {
        let m = Morse::new(0.05, 1.0).unwrap();
        let g = morse_grid(0.05, 1.0, 10, 10).unwrap();
        let r = thermal_observables(&m, 0.0, &g, &PropagationOptions::default()).unwrap();
        let (num, den) = g.iter().fold((0.0, 0.0), |(a, b), (x, w)| (a + w * m.symbol_h(x), b + w));
        assert!((r.mean_energy - num / den).abs() < 1e-12 * r.mean_energy);
    }

    #[test]
    fn scan_order_does_not_matter() {
        let m = Morse::new(0.05, 1.0).unwrap();
        let g = morse_grid(0.05, 1.0, 8, 8).unwrap();
        let o = PropagationOptions::default();
        let a = thermal_observables_scan(&m, &[2.0, 0.5, 1.0], &g, &o).unwrap();
        let b = thermal_observables_scan(&m, &[0.5, 1.0, 2.0], &g, &o).unwrap();
        assert_eq!(a[0].as_ref().unwrap(), b[2].as_ref().unwrap());
        assert_eq!(a[1].as_ref().unwrap(), b[0].as_ref().unwrap());
        assert!(thermal_observables_scan(&m, &[], &g, &o).is_err());
    }

    #[test]
    fn oscillator_wigner_values() {
        let ho = HarmonicOscillator::new(1.0, 1.0).unwrap();
        let o = PropagationOptions::with_tolerances(1e-12, 1e-14);
        let nw = NewtonOptions::default();
        let origin = wigner_at(&ho, 2.0, &PhasePoint::new(vec![0.0, 0.0]).unwrap(), &o, &nw).unwrap();
        assert_eq!(origin.midpoint.as_slice(), &[0.0, 0.0]);
        assert!((origin.value - 1.0 / 1f64.cosh()).abs() < 1e-10);
        let one = wigner_at(&ho, 2.0, &PhasePoint::new(vec![1.0, 0.0]).unwrap(), &o, &nw).unwrap();
        assert!((one.value / origin.value - (-(1f64.tanh())).exp()).abs() < 1e-8);
        assert!((one.value / origin.value - 0.4670).abs() < 1e-4);
    }

    #[test]
    fn marginals_are_normalized() {
        let ho = HarmonicOscillator::new(1.0, 1.0).unwrap();
        let axis = linspace(-5.0, 5.0, 41);
        let g = WignerGrid::compute(&ho, 1.0, &axis, &axis, &PropagationOptions::default(), &NewtonOptions::default())
            .unwrap();
        for ax in [Axis::P, Axis::Q] {
            let (x, w) = g.marginal(ax);
            let tw = trapezoid(&x);
            let total: f64 = w.iter().zip(&tw).map(|(a, b)| a * b).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        assert_eq!(g.unreachable_count, 0);
    }
}
