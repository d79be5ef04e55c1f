//! Embedded Dormand-Prince 5(4) Runge-Kutta stepper with PI step control and
//! continuous output.
//!
//! The stepper only performs single steps; the thermal propagator and the
//! Poincaré integrator each run their own loop on top of it because they
//! react to accepted steps differently (caustic checks vs. event location).

use serde::{Deserialize, Serialize};

/// Right-hand side `dy/dt = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);
}

/// Mixed absolute/relative error tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rel: 1e-8, abs: 1e-10 }
    }
}

impl Tolerances {
    pub fn new(rel: f64, abs: f64) -> Self {
        Self { rel, abs }
    }

    pub fn is_valid(&self) -> bool {
        self.rel > 0.0 && self.abs > 0.0 && self.rel.is_finite() && self.abs.is_finite()
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Work arrays for one Dormand-Prince integration.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    n: usize,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    /// `f(t, y)` at the start of the next step (first-same-as-last).
    fsal_ready: bool,
}

impl Dopri5 {
    pub const ORDER: usize = 5;

    pub fn new(n: usize) -> Self {
        Self { n, k: std::array::from_fn(|_| vec![0.0; n]), tmp: vec![0.0; n], fsal_ready: false }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Forgets the cached derivative; call when `y` is changed externally.
    pub fn reset(&mut self) {
        self.fsal_ready = false;
    }

    /// Derivative at the start of the current step.
    pub fn start_derivative(&self) -> &[f64] {
        &self.k[0]
    }

    /// Derivative at the end of the last attempted step.
    pub fn end_derivative(&self) -> &[f64] {
        &self.k[6]
    }

    /// Attempts one step of size `h` from `(t, y)`, writing the 5th-order
    /// solution into `y_new`. Returns the scaled RMS error norm (`<= 1` means
    /// acceptable); non-finite stages give `f64::INFINITY`.
    pub fn try_step<S: OdeSystem + ?Sized>(
        &mut self,
        sys: &S,
        t: f64,
        y: &[f64],
        h: f64,
        tol: &Tolerances,
        y_new: &mut [f64],
    ) -> f64 {
        let n = self.n;
        if !self.fsal_ready {
            sys.rhs(t, y, &mut self.k[0]);
            self.fsal_ready = true;
        }
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let tmp = &mut self.tmp;

        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        sys.rhs(t + C2 * h, tmp, k2);
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        sys.rhs(t + C3 * h, tmp, k3);
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        sys.rhs(t + C4 * h, tmp, k4);
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        sys.rhs(t + C5 * h, tmp, k5);
        for i in 0..n {
            tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        sys.rhs(t + h, tmp, k6);
        for i in 0..n {
            y_new[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        sys.rhs(t + h, y_new, k7);

        let mut acc = 0.0;
        for i in 0..n {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = tol.abs + tol.rel * y[i].abs().max(y_new[i].abs());
            acc += (e / sc) * (e / sc);
        }
        let err = (acc / n as f64).sqrt();
        if err.is_finite() && y_new.iter().all(|v| v.is_finite()) {
            err
        } else {
            f64::INFINITY
        }
    }

    /// Call after accepting a step: the end derivative becomes the next start.
    pub fn accept(&mut self) {
        self.k.swap(0, 6);
    }

    /// Continuous extension on the last attempted step `[t, t + h]` at
    /// fraction `s` in `[0, 1]`. `y0`/`y1` are the step's end points.
    pub fn dense_output(&self, y0: &[f64], y1: &[f64], h: f64, s: f64, out: &mut [f64]) {
        let [k1, _, k3, k4, k5, k6, k7] = &self.k;
        let s1 = 1.0 - s;
        for i in 0..self.n {
            let r2 = y1[i] - y0[i];
            let r3 = h * k1[i] - r2;
            let r4 = r2 - h * k7[i] - r3;
            let r5 = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            out[i] = y0[i] + s * (r2 + s1 * (r3 + s * (r4 + s1 * r5)));
        }
    }
}

/// PI step-size controller (Hairer's DOPRI5 settings).
#[derive(Debug, Clone)]
pub struct PiController {
    err_old: f64,
    alpha: f64,
    beta: f64,
    safety: f64,
    min_factor: f64,
    max_factor: f64,
}

impl Default for PiController {
    fn default() -> Self {
        let beta = 0.04;
        Self { err_old: 1e-4, alpha: 0.2 - 0.75 * beta, beta, safety: 0.9, min_factor: 0.2, max_factor: 10.0 }
    }
}

impl PiController {
    /// Step-size multiplier after an accepted step with error `err <= 1`.
    pub fn accepted(&mut self, err: f64) -> f64 {
        let err = err.max(1e-10);
        let fac = self.safety * err.powf(-self.alpha) * self.err_old.powf(self.beta);
        self.err_old = err;
        fac.clamp(self.min_factor, self.max_factor)
    }

    /// Step-size multiplier after a rejected step.
    pub fn rejected(&self, err: f64) -> f64 {
        if !err.is_finite() {
            return 0.1;
        }
        (self.safety * err.powf(-self.alpha)).clamp(0.1, 1.0)
    }
}

/// Hairer's starting step-size heuristic.
pub fn initial_step<S: OdeSystem + ?Sized>(sys: &S, t: f64, y: &[f64], f0: &[f64], tol: &Tolerances) -> f64 {
    let n = y.len();
    let sc: Vec<f64> = y.iter().map(|v| tol.abs + tol.rel * v.abs()).collect();
    let rms = |v: &dyn Fn(usize) -> f64| ((0..n).map(|i| (v(i) / sc[i]).powi(2)).sum::<f64>() / n as f64).sqrt();
    let d0 = rms(&|i| y[i]);
    let d1 = rms(&|i| f0[i]);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<f64> = (0..n).map(|i| y[i] + h0 * f0[i]).collect();
    let mut f1 = vec![0.0; n];
    sys.rhs(t + h0, &y1, &mut f1);
    let d2 = rms(&|i| (f1[i] - f0[i]) / h0);
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / Dopri5::ORDER as f64)
    };
    let h = (100.0 * h0).min(h1);
    if h.is_finite() && h > 0.0 {
        h
    } else {
        1e-6
    }
}
