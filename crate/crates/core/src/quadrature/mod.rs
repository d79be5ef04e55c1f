//! Quadrature rules and midpoint grids for thermal integrals.
//!
//! A [`MidpointGrid`] is a list of phase-space nodes with positive weights
//! for the plain measure `dp dq`. Weights are stored as logarithms because
//! Gaussian-mapped and sampled grids carry factors like `exp(|u|^2)` that
//! span many decades.

mod cubature;
mod metropolis;

pub use cubature::{adaptive_cubature, CubatureResult};
pub use metropolis::{metropolis_sampler, MetropolisOptions, MetropolisRun};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::models::HamiltonianModel;
use crate::phase::PhasePoint;

/// Nodes and weights of a one-dimensional rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `sum_k w_k f(x_k)`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Affine map of a rule on `(-1, 1)` to `(a, b)`.
    pub fn mapped(&self, a: f64, b: f64) -> Rule {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        Rule {
            nodes: self.nodes.iter().map(|x| c + h * x).collect(),
            weights: self.weights.iter().map(|w| h * w).collect(),
        }
    }
}

/// Gauss–Legendre rule on `(-1, 1)`, exact for polynomials of degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> Result<Rule> {
    if n == 0 {
        return Err(invalid("n", "at least one node is required"));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(Rule { nodes, weights })
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Chebyshev rule of the third kind: integrates `f(x) sqrt((1+x)/(1-x))`
/// over `(-1, 1)` exactly for polynomial `f` of degree `2n - 1`.
pub fn gauss_chebyshev3(n: usize) -> Result<Rule> {
    if n == 0 {
        return Err(invalid("n", "at least one node is required"));
    }
    let denom = 2.0 * n as f64 + 1.0;
    let (nodes, weights) = (1..=n)
        .map(|k| {
            let x = ((2 * k - 1) as f64 * std::f64::consts::PI / denom).cos();
            (x, 2.0 * std::f64::consts::PI * (1.0 + x) / denom)
        })
        .unzip();
    Ok(Rule { nodes, weights })
}

/// Gauss–Hermite rule for the weight `exp(-x^2)` on the real line.
///
/// Golub–Welsch eigenvalues seed a Newton polish on the orthonormal Hermite
/// recurrence, which also yields the weights to full relative precision.
pub fn gauss_hermite(n: usize) -> Result<Rule> {
    if n == 0 {
        return Err(invalid("n", "at least one node is required"));
    }
    let mut t = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        t[(k - 1, k)] = b;
        t[(k, k - 1)] = b;
    }
    let mut guesses: Vec<f64> = SymmetricEigen::new(t).eigenvalues.iter().copied().collect();
    guesses.sort_by(f64::total_cmp);
    let mut pairs: Vec<(f64, f64)> = guesses
        .into_iter()
        .map(|mut x| {
            let mut d = 0.0;
            for _ in 0..20 {
                let (p, dp) = hermite_orthonormal(n, x);
                d = dp;
                let dx = p / dp;
                x -= dx;
                if dx.abs() <= 1e-15 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, dp) = hermite_orthonormal(n, x);
            if dp != 0.0 {
                d = dp;
            }
            (x, 2.0 / (d * d))
        })
        .collect();
    // Symmetrize to remove round-off.
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (pairs[j].0 - pairs[i].0);
        let w = 0.5 * (pairs[i].1 + pairs[j].1);
        pairs[i] = (-x, w);
        pairs[j] = (x, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    let (nodes, weights) = pairs.into_iter().unzip();
    Ok(Rule { nodes, weights })
}

/// Orthonormal Hermite polynomial `h_n(x)` and its derivative.
fn hermite_orthonormal(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 0.0;
    let mut p1 = std::f64::consts::PI.powf(-0.25);
    for j in 1..=n {
        let jf = j as f64;
        let p2 = x * (2.0 / jf).sqrt() * p1 - ((jf - 1.0) / jf).sqrt() * p0;
        p0 = p1;
        p1 = p2;
    }
    (p1, (2.0 * n as f64).sqrt() * p0)
}

/// How a grid was generated; copied into output metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDescriptor {
    pub rule: String,
    pub resolution: Vec<usize>,
    pub mapping: String,
}

/// Quadrature nodes over phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct MidpointGrid {
    nodes: Vec<PhasePoint>,
    log_weights: Vec<f64>,
    descriptor: GridDescriptor,
}

impl MidpointGrid {
    pub fn new(nodes: Vec<PhasePoint>, weights: Vec<f64>, descriptor: GridDescriptor) -> Result<Self> {
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(invalid("grid", "weights must be positive and finite"));
        }
        Self::from_log_weights(nodes, weights.into_iter().map(f64::ln).collect(), descriptor)
    }

    pub fn from_log_weights(nodes: Vec<PhasePoint>, log_weights: Vec<f64>, descriptor: GridDescriptor) -> Result<Self> {
        if nodes.is_empty() {
            return Err(invalid("grid", "no nodes"));
        }
        if nodes.len() != log_weights.len() {
            return Err(invalid("grid", "node and weight counts differ"));
        }
        if log_weights.iter().any(|w| !w.is_finite()) {
            return Err(invalid("grid", "weights must be positive and finite"));
        }
        let dim = nodes[0].len();
        if nodes.iter().any(|n| n.len() != dim || !n.is_finite()) {
            return Err(invalid("grid", "nodes must be finite and share one dimension"));
        }
        Ok(Self { nodes, log_weights, descriptor })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[PhasePoint] {
        &self.nodes
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn log_weight(&self, i: usize) -> f64 {
        self.log_weights[i]
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|l| l.exp()).collect()
    }

    pub fn descriptor(&self) -> &GridDescriptor {
        &self.descriptor
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PhasePoint, f64)> {
        self.nodes.iter().zip(self.log_weights.iter().map(|l| l.exp()))
    }
}

/// Tensor-product Gauss–Legendre grid on a box, one interval for every
/// momentum and one for every position.
pub fn rectangle_grid(
    dof: usize,
    p_range: (f64, f64),
    q_range: (f64, f64),
    n_per_axis: usize,
) -> Result<MidpointGrid> {
    if !(p_range.0 < p_range.1 && q_range.0 < q_range.1) {
        return Err(invalid("range", "lower bound must be below upper bound"));
    }
    let gl = gauss_legendre(n_per_axis)?;
    let rp = gl.mapped(p_range.0, p_range.1);
    let rq = gl.mapped(q_range.0, q_range.1);
    let axes: Vec<&Rule> = (0..2 * dof).map(|k| if k < dof { &rp } else { &rq }).collect();
    let (nodes, weights) = tensor(&axes);
    MidpointGrid::new(
        nodes,
        weights,
        GridDescriptor {
            rule: "gauss-legendre".into(),
            resolution: vec![n_per_axis; 2 * dof],
            mapping: "affine box".into(),
        },
    )
}

fn tensor(axes: &[&Rule]) -> (Vec<PhasePoint>, Vec<f64>) {
    let total: usize = axes.iter().map(|r| r.len()).product();
    let mut nodes = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; axes.len()];
    for _ in 0..total {
        let x: Vec<f64> = idx.iter().zip(axes).map(|(&i, r)| r.nodes[i]).collect();
        let w: f64 = idx.iter().zip(axes).map(|(&i, r)| r.weights[i]).product();
        nodes.push(PhasePoint::new(x).expect("even dimension"));
        weights.push(w);
        for (k, r) in axes.iter().enumerate().rev() {
            idx[k] += 1;
            if idx[k] < r.len() {
                break;
            }
            idx[k] = 0;
        }
    }
    (nodes, weights)
}

/// Polar grid over the whole one-dof phase plane:
/// `(p, q) = sqrt(2J) (cos phi, sin phi)` with `dp dq = dJ dphi`,
/// Gauss–Legendre in `J` on `[0, j_max]` and the periodic trapezoid rule in
/// `phi`.
pub fn radial_grid(j_max: f64, n_j: usize, n_phi: usize) -> Result<MidpointGrid> {
    if !(j_max > 0.0 && j_max.is_finite()) {
        return Err(invalid("j_max", "must be positive and finite"));
    }
    if n_phi == 0 {
        return Err(invalid("n_phi", "at least one angle is required"));
    }
    let rj = gauss_legendre(n_j)?.mapped(0.0, j_max);
    let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
    let mut nodes = Vec::with_capacity(n_j * n_phi);
    let mut weights = Vec::with_capacity(n_j * n_phi);
    for (&j, &wj) in rj.nodes.iter().zip(&rj.weights) {
        let r = (2.0 * j).sqrt();
        for k in 0..n_phi {
            let phi = (k as f64 + 0.5) * dphi;
            nodes.push(PhasePoint::new(vec![r * phi.cos(), r * phi.sin()]).expect("even dimension"));
            weights.push(wj * dphi);
        }
    }
    MidpointGrid::new(
        nodes,
        weights,
        GridDescriptor {
            rule: "gauss-legendre x trapezoid".into(),
            resolution: vec![n_j, n_phi],
            mapping: format!("polar, J in [0, {j_max}]"),
        },
    )
}

/// Radial cutoff for one-dof models whose action bound is `H_c >= omega0 J`.
///
/// The semiclassical weight of such a model decays at least like
/// `exp(-sinh(omega0 theta) J / hbar)` and the classical one like
/// `exp(-theta H_c / hbar)`; the cutoff is where the decay reaches
/// `exp(-efolds)`.
pub fn radial_cutoff(
    model: &dyn HamiltonianModel,
    omega0: f64,
    theta: f64,
    semiclassical: bool,
    efolds: f64,
) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(invalid("theta", "an all-space grid needs theta > 0"));
    }
    let hbar = model.hbar();
    let decay = |j: f64| theta * model.classical(&[(2.0 * j).sqrt(), 0.0]) / hbar;
    let mut hi = efolds * hbar / (omega0 * theta);
    if semiclassical {
        hi = hi.min(efolds * hbar / (omega0 * theta).sinh());
    }
    if decay(hi) <= efolds {
        return Ok(hi);
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if decay(mid) >= efolds {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Morse bound-region grid.
///
/// `p = hbar sqrt(1 - Q^2) P / (2 chi)`, `q = -ln(1 - Q)` maps the open
/// square onto the region of normalized energy below one; `P` uses
/// Gauss–Legendre and `Q` the third-kind Chebyshev rule whose weight is the
/// square-root factor of the Jacobian.
pub fn morse_grid(chi: f64, hbar: f64, n_p: usize, n_q: usize) -> Result<MidpointGrid> {
    if !(chi > 0.0 && chi < 0.5) {
        return Err(invalid("chi", "must lie in (0, 1/2)"));
    }
    let gp = gauss_legendre(n_p)?;
    let gq = gauss_chebyshev3(n_q)?;
    let scale = hbar / (2.0 * chi);
    let mut nodes = Vec::with_capacity(n_p * n_q);
    let mut weights = Vec::with_capacity(n_p * n_q);
    for (&pp, &wp) in gp.nodes.iter().zip(&gp.weights) {
        for (&qq, &wq) in gq.nodes.iter().zip(&gq.weights) {
            let p = scale * (1.0 - qq * qq).sqrt() * pp;
            let q = -(1.0 - qq).ln();
            nodes.push(PhasePoint::new(vec![p, q]).expect("even dimension"));
            weights.push(scale * wp * wq);
        }
    }
    MidpointGrid::new(
        nodes,
        weights,
        GridDescriptor {
            rule: "gauss-legendre x gauss-chebyshev-3".into(),
            resolution: vec![n_p, n_q],
            mapping: "morse bound region".into(),
        },
    )
}

/// Gaussian map of Nelson phase space, `u = (Px, Py, X, Y)` with
///
/// ```text
/// Px = sqrt(beta_x/2) px   X = sqrt(beta_x mu) x
/// Py = sqrt(beta_y/2) py   Y = sqrt(beta_y) (y - x^2/2)
/// ```
///
/// so that `|u|^2 = beta_x (px^2/2 + mu x^2) + beta_y (py^2/2 + (y - x^2/2)^2)`.
/// With `beta_x = beta_y = beta` this is `beta H_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NelsonMap {
    pub mu: f64,
    pub beta_x: f64,
    pub beta_y: f64,
}

impl NelsonMap {
    /// Map in which the classical Boltzmann weight at `theta` is `exp(-|u|^2)`.
    pub fn classical(mu: f64, theta: f64, hbar: f64) -> Self {
        Self { mu, beta_x: theta / hbar, beta_y: theta / hbar }
    }

    /// Map matched to the semiclassical weight near the potential minimum.
    ///
    /// A harmonic mode of frequency `w` has midpoint weight
    /// `exp(-sinh(w theta) H / (w hbar))`; the Nelson minimum has
    /// `w_x = sqrt(2 mu)` and `w_y = sqrt(2)`.
    pub fn semiclassical(mu: f64, theta: f64, hbar: f64) -> Self {
        let b = |w: f64| (w * theta).sinh() / (w * hbar);
        Self { mu, beta_x: b((2.0 * mu).sqrt()), beta_y: b(2f64.sqrt()) }
    }

    pub fn inverse(&self, u: &[f64]) -> [f64; 4] {
        let x = u[2] / (self.beta_x * self.mu).sqrt();
        [
            u[0] * (2.0 / self.beta_x).sqrt(),
            u[1] * (2.0 / self.beta_y).sqrt(),
            x,
            u[3] / self.beta_y.sqrt() + 0.5 * x * x,
        ]
    }

    pub fn forward(&self, x: &[f64]) -> [f64; 4] {
        [
            x[0] * (self.beta_x / 2.0).sqrt(),
            x[1] * (self.beta_y / 2.0).sqrt(),
            (self.beta_x * self.mu).sqrt() * x[2],
            self.beta_y.sqrt() * (x[3] - 0.5 * x[2] * x[2]),
        ]
    }

    /// Constant `|d(px, py, x, y)/du| = 2 / (beta_x beta_y sqrt(mu))`.
    pub fn jacobian(&self) -> f64 {
        2.0 / (self.beta_x * self.beta_y * self.mu.sqrt())
    }
}

/// Sampling scheme for the Nelson grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NelsonGridSpec {
    /// Tensor Gauss–Hermite rule with `n` nodes per mapped axis.
    GaussHermite { n: usize },
    /// Metropolis samples of the mapped Gaussian weight.
    MonteCarlo {
        samples: usize,
        seed: u64,
        #[serde(default = "default_burn_in")]
        burn_in_fraction: f64,
        #[serde(default = "default_proposal")]
        proposal_scale: f64,
    },
}

fn default_burn_in() -> f64 {
    0.1
}

fn default_proposal() -> f64 {
    0.9
}

/// Nelson midpoint grid: a Gauss–Hermite or Metropolis rule for
/// `exp(-|u|^2)` pulled back through `map`, with weights for the plain
/// measure.
pub fn nelson_grid(map: &NelsonMap, spec: &NelsonGridSpec) -> Result<MidpointGrid> {
    if !(map.mu > 0.0) {
        return Err(invalid("mu", "must be positive"));
    }
    if !(map.beta_x > 0.0 && map.beta_y > 0.0 && map.beta_x.is_finite() && map.beta_y.is_finite()) {
        return Err(invalid("theta", "map scales must be positive and finite"));
    }
    let log_jac = map.jacobian().ln();
    let norm2 = |u: &[f64]| u.iter().map(|v| v * v).sum::<f64>();
    let (mapped, log_weights, descriptor): (Vec<Vec<f64>>, Vec<f64>, GridDescriptor) = match *spec {
        NelsonGridSpec::GaussHermite { n } => {
            let gh = gauss_hermite(n)?;
            let (pts, w) = tensor(&[&gh, &gh, &gh, &gh]);
            let pts: Vec<Vec<f64>> = pts.into_iter().map(PhasePoint::into_vec).collect();
            let lw = pts.iter().zip(w).map(|(u, w)| w.ln() + norm2(u) + log_jac).collect();
            (
                pts,
                lw,
                GridDescriptor { rule: "gauss-hermite".into(), resolution: vec![n; 4], mapping: "nelson gaussian map".into() },
            )
        }
        NelsonGridSpec::MonteCarlo { samples, seed, burn_in_fraction, proposal_scale } => {
            let opts = MetropolisOptions { proposal_scale, burn_in_fraction, ..MetropolisOptions::default() };
            let run = metropolis_sampler(|u: &[f64]| -norm2(u), &[0.0; 4], samples, seed, &opts)?;
            // Equal shares of the total mass pi^2 of exp(-|u|^2).
            let base = (std::f64::consts::PI.powi(2) / run.samples.len() as f64).ln() + log_jac;
            let lw = run.samples.iter().map(|u| base + norm2(u)).collect();
            (
                run.samples,
                lw,
                GridDescriptor { rule: "metropolis".into(), resolution: vec![samples], mapping: "nelson gaussian map".into() },
            )
        }
    };
    let nodes = mapped.iter().map(|u| PhasePoint::new(map.inverse(u).to_vec())).collect::<Result<Vec<_>>>()?;
    MidpointGrid::from_log_weights(nodes, log_weights, descriptor)
}
