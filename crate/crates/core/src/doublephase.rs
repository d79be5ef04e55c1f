//! Imaginary-time propagation in double phase space.
//!
//! A midpoint `X` launches the centre `x(s)` and the rotated chord momentum
//! `y_w(s)` under the double Hamiltonian
//! `H_w(x, y) = H(x - (w/2) J y) + H(x + (w/2) J y)` with `w = -i`.
//! Both arguments are complex conjugates of each other,
//! `z = x - (i/2) J y_w` and `conj(z)`, so one complex gradient and Hessian
//! evaluation per stage gives every derivative as a real number:
//!
//! ```text
//! dy_w/ds = -2 Re grad H(z)           dx/ds = -J Im grad H(z)
//! H_xx = 2 Re Hess(z)    H_xy = Im Hess(z) J    H_yy = (1/2) J Re Hess(z) J
//! d(dx/dX)/ds   =  H_xy^T dx/dX + H_yy dy_w/dX
//! d(dy_w/dX)/ds = -H_xx  dx/dX - H_xy dy_w/dX
//! d(area)/ds    =  y_w . dx/ds
//! ```
//!
//! The euclidean action at thermal time `theta` (reached at `s = theta/2`) is
//! `S_E = area - theta * symbol_h(X)`.

use std::cell::RefCell;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::models::{HamiltonianModel, Morse};
use crate::ode::{initial_step, Dopri5, OdeSystem, PiController, Tolerances};
use crate::phase::{apply_j_slice, PhasePoint};

/// Integration settings for thermal trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagationOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Max-norm of the state beyond which a trajectory counts as diverged.
    pub divergence_bound: f64,
    /// `det(dx/dX)` at or below this value marks a caustic.
    pub caustic_floor: f64,
    /// Stop integrating once a caustic is crossed (the trajectory is
    /// discarded anyway).
    pub stop_on_caustic: bool,
    pub max_steps: usize,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            divergence_bound: 1e8,
            caustic_floor: 1e-12,
            stop_on_caustic: true,
            max_steps: 200_000,
        }
    }
}

impl PropagationOptions {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        Self { rel_tol, abs_tol, ..Self::default() }
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances::new(self.rel_tol, self.abs_tol)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.tolerances().is_valid() {
            return Err(invalid("tolerances", "relative and absolute tolerances must be positive"));
        }
        if !(self.divergence_bound > 0.0) {
            return Err(invalid("divergence_bound", "must be positive"));
        }
        if self.max_steps == 0 {
            return Err(invalid("max_steps", "must be positive"));
        }
        Ok(())
    }
}

/// Flat layout of the double-phase-space state for `n = 2d` coordinates:
/// `[x (n), y_w (n), dx/dX (n*n), dy_w/dX (n*n), area]`.
#[derive(Debug, Clone, Copy)]
struct Layout {
    n: usize,
}

impl Layout {
    fn x(&self) -> std::ops::Range<usize> {
        0..self.n
    }
    fn yw(&self) -> std::ops::Range<usize> {
        self.n..2 * self.n
    }
    fn jac_x(&self) -> std::ops::Range<usize> {
        2 * self.n..2 * self.n + self.n * self.n
    }
    fn jac_y(&self) -> std::ops::Range<usize> {
        2 * self.n + self.n * self.n..2 * self.n + 2 * self.n * self.n
    }
    fn area(&self) -> usize {
        2 * self.n + 2 * self.n * self.n
    }
    fn len(&self) -> usize {
        self.area() + 1
    }
}

/// Number of real variables carried per trajectory, `8d^2 + 4d + 1`.
pub fn state_size(dof: usize) -> usize {
    Layout { n: 2 * dof }.len()
}

/// Double-phase-space state along the rotated time path.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalState {
    /// Centre `x(s)`.
    pub x: Vec<f64>,
    /// Rotated chord momentum `y_w(s)`.
    pub yw: Vec<f64>,
    /// `dx/dX`, row-major.
    pub jac_x: Vec<f64>,
    /// `dy_w/dX`, row-major.
    pub jac_y: Vec<f64>,
    /// Euclidean area accumulator.
    pub area: f64,
    /// Progress parameter (thermal time / 2).
    pub s: f64,
}

impl ThermalState {
    pub fn initial(midpoint: &[f64]) -> Self {
        let n = midpoint.len();
        let mut jac_x = vec![0.0; n * n];
        for i in 0..n {
            jac_x[i * n + i] = 1.0;
        }
        Self { x: midpoint.to_vec(), yw: vec![0.0; n], jac_x, jac_y: vec![0.0; n * n], area: 0.0, s: 0.0 }
    }

    fn layout(&self) -> Layout {
        Layout { n: self.x.len() }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let l = self.layout();
        let mut y = vec![0.0; l.len()];
        y[l.x()].copy_from_slice(&self.x);
        y[l.yw()].copy_from_slice(&self.yw);
        y[l.jac_x()].copy_from_slice(&self.jac_x);
        y[l.jac_y()].copy_from_slice(&self.jac_y);
        y[l.area()] = self.area;
        y
    }

    pub fn from_flat(y: &[f64], n: usize, s: f64) -> Self {
        let l = Layout { n };
        Self {
            x: y[l.x()].to_vec(),
            yw: y[l.yw()].to_vec(),
            jac_x: y[l.jac_x()].to_vec(),
            jac_y: y[l.jac_y()].to_vec(),
            area: y[l.area()],
            s,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_flat().iter().all(|v| v.is_finite())
    }
}

/// Scratch buffers for one right-hand-side evaluation.
#[derive(Debug, Clone)]
struct Scratch {
    z: Vec<Complex64>,
    grad: Vec<Complex64>,
    hess: Vec<Complex64>,
    re_h: Vec<f64>,
    b: Vec<f64>,
    bt: Vec<f64>,
    c: Vec<f64>,
    tmp: Vec<f64>,
    jv: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            z: vec![Complex64::default(); n],
            grad: vec![Complex64::default(); n],
            hess: vec![Complex64::default(); n * n],
            re_h: vec![0.0; n * n],
            b: vec![0.0; n * n],
            bt: vec![0.0; n * n],
            c: vec![0.0; n * n],
            tmp: vec![0.0; n * n],
            jv: vec![0.0; n],
        }
    }
}

/// `out = M J` for row-major `n x n` matrices.
fn right_mul_j(m: &[f64], out: &mut [f64], n: usize) {
    let d = n / 2;
    for i in 0..n {
        for k in 0..d {
            out[i * n + k] = m[i * n + k + d];
            out[i * n + k + d] = -m[i * n + k];
        }
    }
}

/// `out = J M`.
fn left_mul_j(m: &[f64], out: &mut [f64], n: usize) {
    let d = n / 2;
    for k in 0..n {
        for i in 0..d {
            out[i * n + k] = -m[(i + d) * n + k];
            out[(i + d) * n + k] = m[i * n + k];
        }
    }
}

/// `out = alpha A B + beta C B2` style accumulations are spelled out inline;
/// this is `out += alpha * A * B`.
fn mat_mul_acc(alpha: f64, a: &[f64], b: &[f64], out: &mut [f64], n: usize) {
    for i in 0..n {
        for l in 0..n {
            let ail = alpha * a[i * n + l];
            if ail == 0.0 {
                continue;
            }
            for k in 0..n {
                out[i * n + k] += ail * b[l * n + k];
            }
        }
    }
}

/// Determinant of a small row-major matrix by partial-pivot elimination.
pub fn determinant(m: &[f64], n: usize) -> f64 {
    match n {
        1 => return m[0],
        2 => return m[0] * m[3] - m[1] * m[2],
        _ => {}
    }
    let mut a = m.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs())).unwrap();
        if a[piv * n + col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
            }
            det = -det;
        }
        let p = a[col * n + col];
        det *= p;
        for i in col + 1..n {
            let f = a[i * n + col] / p;
            for k in col..n {
                a[i * n + k] -= f * a[col * n + k];
            }
        }
    }
    det
}

/// The double-phase-space flow of a model, as an ODE system.
pub struct DoublePhaseFlow<'a> {
    model: &'a dyn HamiltonianModel,
    layout: Layout,
    scratch: RefCell<Scratch>,
}

impl<'a> DoublePhaseFlow<'a> {
    pub fn new(model: &'a dyn HamiltonianModel) -> Self {
        let n = 2 * model.dof();
        Self { model, layout: Layout { n }, scratch: RefCell::new(Scratch::new(n)) }
    }

    /// `z = x - (i/2) J y_w`.
    fn fill_z(&self, x: &[f64], yw: &[f64], sc: &mut Scratch) {
        apply_j_slice(yw, &mut sc.jv);
        for k in 0..x.len() {
            sc.z[k] = Complex64::new(x[k], -0.5 * sc.jv[k]);
        }
    }

    /// `H_w(x, y_w) = 2 Re H(z)`; conserved along the flow.
    pub fn double_hamiltonian(&self, x: &[f64], yw: &[f64]) -> f64 {
        let mut sc = self.scratch.borrow_mut();
        self.fill_z(x, yw, &mut sc);
        2.0 * self.model.value(&sc.z).re
    }
}

impl OdeSystem for DoublePhaseFlow<'_> {
    fn dim(&self) -> usize {
        self.layout.len()
    }

    fn rhs(&self, _s: f64, y: &[f64], dy: &mut [f64]) {
        let l = self.layout;
        let n = l.n;
        let sc = &mut *self.scratch.borrow_mut();
        let (x, yw) = (&y[l.x()], &y[l.yw()]);
        self.fill_z(x, yw, sc);
        self.model.gradient(&sc.z, &mut sc.grad);
        self.model.hessian(&sc.z, &mut sc.hess);

        // dy_w/ds = -2 Re g ; dx/ds = -J Im g
        for k in 0..n {
            dy[l.yw().start + k] = -2.0 * sc.grad[k].re;
            sc.jv[k] = sc.grad[k].im;
        }
        {
            let dx = &mut dy[l.x()];
            apply_j_slice(&sc.jv, dx);
            for v in dx.iter_mut() {
                *v = -*v;
            }
        }
        dy[l.area()] = (0..n).map(|k| yw[k] * dy[k]).sum();

        // Second-derivative blocks.
        for k in 0..n * n {
            sc.re_h[k] = sc.hess[k].re;
            sc.tmp[k] = sc.hess[k].im;
        }
        right_mul_j(&sc.tmp, &mut sc.b, n); // H_xy = Im Hess J
        left_mul_j(&sc.tmp, &mut sc.bt, n); // J Im Hess
        for v in sc.bt.iter_mut() {
            *v = -*v; // H_xy^T = -J Im Hess
        }
        right_mul_j(&sc.re_h, &mut sc.tmp, n);
        left_mul_j(&sc.tmp, &mut sc.c, n);
        for v in sc.c.iter_mut() {
            *v *= 0.5; // H_yy = (1/2) J Re Hess J
        }

        let (jx, jy) = (&y[l.jac_x()], &y[l.jac_y()]);
        {
            let djx = &mut dy[l.jac_x()];
            djx.fill(0.0);
            mat_mul_acc(1.0, &sc.bt, jx, djx, n);
            mat_mul_acc(1.0, &sc.c, jy, djx, n);
        }
        {
            let djy = &mut dy[l.jac_y()];
            djy.fill(0.0);
            mat_mul_acc(-2.0, &sc.re_h, jx, djy, n);
            mat_mul_acc(-1.0, &sc.b, jy, djy, n);
        }
    }
}

/// Time derivative of a thermal state.
pub fn rhs(state: &ThermalState, model: &dyn HamiltonianModel) -> Result<ThermalState> {
    let n = 2 * model.dof();
    if state.x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: state.x.len() });
    }
    let flow = DoublePhaseFlow::new(model);
    let y = state.to_flat();
    let mut dy = vec![0.0; y.len()];
    flow.rhs(state.s, &y, &mut dy);
    if dy.iter().any(|v| !v.is_finite()) {
        return Err(Error::UnreachableCentre { s: state.s });
    }
    Ok(ThermalState::from_flat(&dy, n, 1.0))
}

/// Result of propagating one midpoint to a given thermal time.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryOutcome {
    pub theta: f64,
    pub centre: PhasePoint,
    /// Rotated chord momentum at the end point.
    pub chord_momentum: Vec<f64>,
    /// Euclidean area `Delta_E`.
    pub area: f64,
    /// `S_E = Delta_E - theta * symbol_h(X)`.
    pub euclidean_action: f64,
    pub det_jac: f64,
    /// `dx/dX`, row-major.
    pub jac_x: Vec<f64>,
    /// `sqrt|det| exp(S_E / hbar)`; zero when discarded.
    pub weight: f64,
    pub caustic_crossed: bool,
    pub diverged: bool,
    /// Progress parameter reached; smaller than `theta/2` when integration
    /// stopped early.
    pub s_reached: f64,
}

impl TrajectoryOutcome {
    pub fn discarded(&self) -> bool {
        self.caustic_crossed || self.diverged
    }

    /// `ln weight`, `-inf` for discarded trajectories.
    pub fn log_weight(&self, hbar: f64) -> f64 {
        if self.discarded() {
            f64::NEG_INFINITY
        } else {
            0.5 * self.det_jac.abs().ln() + self.euclidean_action / hbar
        }
    }
}

fn outcome_from_state(
    model: &dyn HamiltonianModel,
    midpoint_energy: f64,
    theta: f64,
    state: &ThermalState,
    caustic: bool,
    diverged: bool,
) -> TrajectoryOutcome {
    let n = state.x.len();
    let det_jac = determinant(&state.jac_x, n);
    let euclidean_action = state.area - theta * midpoint_energy;
    let mut out = TrajectoryOutcome {
        theta,
        centre: PhasePoint::new(state.x.clone()).expect("even dimension"),
        chord_momentum: state.yw.clone(),
        area: state.area,
        euclidean_action,
        det_jac,
        jac_x: state.jac_x.clone(),
        weight: 0.0,
        caustic_crossed: caustic,
        diverged,
        s_reached: state.s,
    };
    if !out.discarded() {
        out.weight = out.log_weight(model.hbar()).exp();
    }
    out
}

/// Propagates one midpoint through every thermal time in `thetas`
/// (ascending), reusing a single trajectory.
pub fn propagate_thermal_scan(
    midpoint: &[f64],
    thetas: &[f64],
    model: &dyn HamiltonianModel,
    opts: &PropagationOptions,
) -> Result<Vec<TrajectoryOutcome>> {
    let n = 2 * model.dof();
    if midpoint.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: midpoint.len() });
    }
    if thetas.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(invalid("theta", "must be finite and non-negative"));
    }
    if thetas.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("theta", "thermal times must be sorted ascending"));
    }
    opts.validate()?;
    let tol = opts.tolerances();
    let energy = model.symbol_h(midpoint);

    let flow = DoublePhaseFlow::new(model);
    let layout = flow.layout;
    let mut y = ThermalState::initial(midpoint).to_flat();
    let mut y_new = vec![0.0; y.len()];
    let mut stepper = Dopri5::new(y.len());
    let mut ctl = PiController::default();
    let mut s = 0.0;
    let mut h = 0.0;
    let mut steps = 0usize;
    let mut caustic = false;
    let mut diverged = !y.iter().all(|v| v.is_finite());
    let mut outcomes = Vec::with_capacity(thetas.len());

    for &theta in thetas {
        let target = 0.5 * theta;
        while s < target && !diverged && !(caustic && opts.stop_on_caustic) {
            if h == 0.0 {
                let mut f0 = vec![0.0; y.len()];
                flow.rhs(s, &y, &mut f0);
                if !f0.iter().all(|v| v.is_finite()) {
                    diverged = true;
                    break;
                }
                h = initial_step(&flow, s, &y, &f0, &tol).min(target - s);
            }
            let last = h >= target - s;
            let h_try = if last { target - s } else { h };
            let err = stepper.try_step(&flow, s, &y, h_try, &tol, &mut y_new);
            steps += 1;
            if err <= 1.0 {
                s = if last { target } else { s + h_try };
                std::mem::swap(&mut y, &mut y_new);
                stepper.accept();
                let fac = ctl.accepted(err);
                if !last || fac < 1.0 {
                    h = h_try * fac;
                }
                if y.iter().any(|v| !(v.abs() <= opts.divergence_bound)) {
                    diverged = true;
                } else if determinant(&y[layout.jac_x()], n) <= opts.caustic_floor {
                    caustic = true;
                }
            } else {
                h = h_try * ctl.rejected(err);
                if h < 1e-13 * s.abs().max(1e-3) {
                    diverged = true;
                }
            }
            if steps >= opts.max_steps {
                diverged = true;
            }
        }
        let state = ThermalState::from_flat(&y, n, s);
        outcomes.push(outcome_from_state(model, energy, theta, &state, caustic, diverged));
    }
    Ok(outcomes)
}

/// Propagates one midpoint to thermal time `theta` (progress `s = theta/2`).
pub fn propagate_thermal(
    midpoint: &PhasePoint,
    theta: f64,
    model: &dyn HamiltonianModel,
    opts: &PropagationOptions,
) -> Result<TrajectoryOutcome> {
    Ok(propagate_thermal_scan(midpoint, &[theta], model, opts)?.remove(0))
}

/// `omega * s_c`: the progress at which the Morse imaginary-time orbit of
/// normalized energy `epsilon` launched from its turning point blows up.
pub fn critical_time(epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid("epsilon", format!("must lie in (0, 1), got {epsilon}")));
    }
    // ln(1/sqrt(e) + sqrt(1/e - 1)) = asinh(sqrt((1 - e)/e)), accurate near e = 1.
    let one_minus = 1.0 - epsilon;
    Ok((one_minus / epsilon).sqrt().asinh() / one_minus.sqrt())
}

/// Closed-form imaginary-time Morse orbit launched from `(p, q) = (0, q0)`,
/// `q0 < 0`. Returns `(q(s), p_imag(s))` where the momentum at imaginary
/// time is `i * p_imag`.
pub fn morse_imaginary_trajectory(model: &Morse, q0: f64, s: f64) -> Result<(f64, f64)> {
    if !(q0 < 0.0) {
        return Err(invalid("q0", "must be negative"));
    }
    let eps = model.normalized_energy(&[0.0, q0]);
    if !(eps < 1.0) {
        return Err(invalid("q0", "orbit is not bound"));
    }
    let sc = critical_time(eps)?;
    if s >= sc {
        return Err(invalid("s", format!("s = {s} is past the critical time {sc}")));
    }
    let big_omega = (1.0 - eps).sqrt();
    let den = 1.0 - eps.sqrt() * (big_omega * s).cosh();
    let q = (den / (1.0 - eps)).ln();
    let p_imag = 2.0 * model.depth() * (eps * (1.0 - eps)).sqrt() * (big_omega * s).sinh() / den;
    Ok((q, p_imag))
}
