//! Globally adaptive cubature over boxes: 15-point Gauss–Kronrod in one
//! dimension, the degree-7/5 Genz–Malik pair in two or more.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{invalid, Result};

/// Outcome of [`adaptive_cubature`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubatureResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    /// `false` when the evaluation budget ran out before `rel_tol` was met.
    pub converged: bool,
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

struct Region {
    centre: Vec<f64>,
    half: Vec<f64>,
    value: f64,
    error: f64,
    split_axis: usize,
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Region {}
impl PartialOrd for Region {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Region {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

struct Rules {
    n: usize,
    l2: f64,
    l4: f64,
    l5: f64,
    w: [f64; 5],
    w5: [f64; 4],
}

impl Rules {
    fn new(n: usize) -> Self {
        let nf = n as f64;
        Self {
            n,
            l2: (9.0f64 / 70.0).sqrt(),
            l4: (9.0f64 / 10.0).sqrt(),
            l5: (9.0f64 / 19.0).sqrt(),
            w: [
                (12824.0 - 9120.0 * nf + 400.0 * nf * nf) / 19683.0,
                980.0 / 6561.0,
                (1820.0 - 400.0 * nf) / 19683.0,
                200.0 / 19683.0,
                6859.0 / 19683.0 / 2f64.powi(n as i32),
            ],
            w5: [
                (729.0 - 950.0 * nf + 50.0 * nf * nf) / 729.0,
                245.0 / 486.0,
                (265.0 - 100.0 * nf) / 1458.0,
                25.0 / 729.0,
            ],
        }
    }

    fn evals(&self) -> usize {
        if self.n == 1 {
            15
        } else {
            1 + 4 * self.n + 2 * self.n * (self.n - 1) + (1 << self.n)
        }
    }

    fn apply(&self, f: &mut dyn FnMut(&[f64]) -> f64, centre: &[f64], half: &[f64]) -> (f64, f64, usize) {
        if self.n == 1 {
            return gk15(f, centre[0], half[0]);
        }
        let n = self.n;
        let vol: f64 = half.iter().map(|h| 2.0 * h).product();
        let mut x = centre.to_vec();
        let f0 = f(&x);
        let (mut s2, mut s3, mut s4, mut s5) = (0.0, 0.0, 0.0, 0.0);
        let mut best = (0usize, -1.0f64);
        let ratio = (self.l2 / self.l4).powi(2);
        for i in 0..n {
            x[i] = centre[i] + self.l2 * half[i];
            let a = f(&x);
            x[i] = centre[i] - self.l2 * half[i];
            let b = f(&x);
            x[i] = centre[i] + self.l4 * half[i];
            let c = f(&x);
            x[i] = centre[i] - self.l4 * half[i];
            let d = f(&x);
            x[i] = centre[i];
            s2 += a + b;
            s3 += c + d;
            let diff = ((a + b - 2.0 * f0) - ratio * (c + d - 2.0 * f0)).abs();
            if diff > best.1 {
                best = (i, diff);
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    x[i] = centre[i] + si * self.l4 * half[i];
                    x[j] = centre[j] + sj * self.l4 * half[j];
                    s4 += f(&x);
                }
                x[i] = centre[i];
                x[j] = centre[j];
            }
        }
        for mask in 0..(1usize << n) {
            for i in 0..n {
                let sign = if mask >> i & 1 == 1 { -1.0 } else { 1.0 };
                x[i] = centre[i] + sign * self.l5 * half[i];
            }
            s5 += f(&x);
        }
        let i7 = vol * (self.w[0] * f0 + self.w[1] * s2 + self.w[2] * s3 + self.w[3] * s4 + self.w[4] * s5);
        let i5 = vol * (self.w5[0] * f0 + self.w5[1] * s2 + self.w5[2] * s3 + self.w5[3] * s4);
        (i7, (i7 - i5).abs(), best.0)
    }
}

fn gk15(f: &mut dyn FnMut(&[f64]) -> f64, c: f64, h: f64) -> (f64, f64, usize) {
    let fc = f(&[c]);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for k in 0..7 {
        let (a, b) = (f(&[c - h * XGK[k]]), f(&[c + h * XGK[k]]));
        kronrod += WGK[k] * (a + b);
        if k % 2 == 1 {
            gauss += WG[k / 2] * (a + b);
        }
    }
    (h * kronrod, (h * (kronrod - gauss)).abs(), 0)
}

/// Integrates `f` over the box `[lower, upper]`, bisecting the region with
/// the largest error estimate until the summed error is below
/// `rel_tol * |value|` or `max_evals` is exhausted.
pub fn adaptive_cubature(
    mut f: impl FnMut(&[f64]) -> f64,
    lower: &[f64],
    upper: &[f64],
    rel_tol: f64,
    max_evals: usize,
) -> Result<CubatureResult> {
    let n = lower.len();
    if n == 0 || upper.len() != n {
        return Err(invalid("region", "bounds must be non-empty and of equal length"));
    }
    if lower.iter().zip(upper).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
        return Err(invalid("region", "every interval must be finite with lower < upper"));
    }
    if !(rel_tol > 0.0) {
        return Err(invalid("rel_tol", "must be positive"));
    }
    let rules = Rules::new(n);
    let per_region = rules.evals();
    let centre: Vec<f64> = lower.iter().zip(upper).map(|(a, b)| 0.5 * (a + b)).collect();
    let half: Vec<f64> = lower.iter().zip(upper).map(|(a, b)| 0.5 * (b - a)).collect();
    let (value, error, split_axis) = rules.apply(&mut f, &centre, &half);
    let mut evaluations = per_region;
    let mut heap = BinaryHeap::new();
    heap.push(Region { centre, half, value, error, split_axis });
    let (mut total, mut total_err) = (value, error);

    while total_err.is_finite() && total_err > rel_tol * total.abs() && evaluations + 2 * per_region <= max_evals {
        let r = heap.pop().expect("heap is never empty");
        total -= r.value;
        total_err -= r.error;
        let axis = if n == 1 { 0 } else { r.split_axis };
        for sign in [-1.0, 1.0] {
            let mut c = r.centre.clone();
            let mut h = r.half.clone();
            h[axis] *= 0.5;
            c[axis] += sign * h[axis];
            let (v, e, s) = rules.apply(&mut f, &c, &h);
            total += v;
            total_err += e;
            heap.push(Region { centre: c, half: h, value: v, error: e, split_axis: s });
        }
        evaluations += 2 * per_region;
    }
    // Re-sum to drop accumulated cancellation in the running totals.
    let value: f64 = heap.iter().map(|r| r.value).sum();
    let error: f64 = heap.iter().map(|r| r.error).sum();
    let converged = value.is_finite() && error <= rel_tol * value.abs();
    Ok(CubatureResult { value, error, evaluations, converged })
}
