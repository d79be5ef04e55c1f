//! Lowest eigenvalues of `-(hbar^2/2) Laplacian + V` on a rectangle with
//! Dirichlet walls.
//!
//! The 5-point Laplacian acts on the `nx * ny` interior points of a grid
//! whose spacing is `(b - a) / (n + 1)`. Eigenvalues come from block
//! shift-and-invert Krylov iterations on a banded Cholesky factorization;
//! the block start captures degenerate levels up to the block width.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::Spectrum;
use crate::error::{invalid, Error, Result};

/// Grid description recorded alongside an FD spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdGrid {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
}

impl FdGrid {
    pub fn spacing(&self) -> (f64, f64) {
        (
            (self.x_range.1 - self.x_range.0) / (self.nx + 1) as f64,
            (self.y_range.1 - self.y_range.0) / (self.ny + 1) as f64,
        )
    }
}

const BLOCK: usize = 4;

/// Lower band of a symmetric positive definite matrix, row `i` holding
/// columns `i - bw ..= i`.
struct BandCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    fn factor(n: usize, bw: usize, mut a: Vec<f64>) -> Result<Self> {
        let w = bw + 1;
        for j in 0..n {
            let j0 = j.saturating_sub(bw);
            // Diagonal.
            let row_j = j * w;
            let mut s = a[row_j + bw];
            for k in j0..j {
                let v = a[row_j + k + bw - j];
                s -= v * v;
            }
            if !(s > 0.0) {
                return Err(Error::EigensolverFailed("shifted operator is not positive definite".into()));
            }
            let d = s.sqrt();
            a[row_j + bw] = d;
            for i in j + 1..(j + bw + 1).min(n) {
                let row_i = i * w;
                let i0 = i.saturating_sub(bw);
                let mut s = a[row_i + j + bw - i];
                for k in i0.max(j0)..j {
                    s -= a[row_i + k + bw - i] * a[row_j + k + bw - j];
                }
                a[row_i + j + bw - i] = s / d;
            }
        }
        Ok(Self { n, bw, l: a })
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.l[i * (self.bw + 1) + j + self.bw - i]
    }

    /// Solves `L L^T x = b` in place.
    fn solve(&self, x: &mut [f64]) {
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.at(i, k) * x[k];
            }
            x[i] = s / self.at(i, i);
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.at(k, i) * x[k];
            }
            x[i] = s / self.at(i, i);
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lowest `k_count` eigenvalues of the discretized Hamiltonian.
pub fn fd_eigensolver_2d(
    potential: impl Fn(f64, f64) -> f64,
    grid: &FdGrid,
    hbar: f64,
    k_count: usize,
) -> Result<Spectrum> {
    let FdGrid { x_range, y_range, nx, ny } = *grid;
    if nx < 3 || ny < 3 {
        return Err(invalid("grid", "need at least 3 interior points per axis"));
    }
    if !(x_range.0 < x_range.1 && y_range.0 < y_range.1) {
        return Err(invalid("grid", "ranges must be increasing"));
    }
    let n = nx * ny;
    if k_count == 0 || k_count > n / 2 {
        return Err(invalid("k_count", "must be positive and at most half the grid size"));
    }
    let (hx, hy) = grid.spacing();
    let cx = 0.5 * hbar * hbar / (hx * hx);
    let cy = 0.5 * hbar * hbar / (hy * hy);
    let mut v = Vec::with_capacity(n);
    for ix in 0..nx {
        let x = x_range.0 + (ix + 1) as f64 * hx;
        for iy in 0..ny {
            v.push(potential(x, y_range.0 + (iy + 1) as f64 * hy));
        }
    }
    if v.iter().any(|e| !e.is_finite()) {
        return Err(invalid("potential", "not finite on the grid"));
    }
    let sigma = v.iter().copied().fold(f64::INFINITY, f64::min) - 1.0;

    // Index i = ix * ny + iy; band width ny.
    let bw = ny;
    let w = bw + 1;
    let mut band = vec![0.0; n * w];
    for i in 0..n {
        band[i * w + bw] = 2.0 * cx + 2.0 * cy + v[i] - sigma;
        if i % ny != 0 {
            band[i * w + bw - 1] = -cy;
        }
        if i >= ny {
            band[i * w] = -cx;
        }
    }
    let chol = BandCholesky::factor(n, bw, band)?;

    // Block Krylov basis of the inverse with full re-orthogonalization; the
    // coefficients of each new vector form the projected matrix.
    let max_basis = (n - BLOCK).min(10 * k_count + 200);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_basis + BLOCK);
    let mut h = vec![vec![0.0; max_basis + BLOCK]; max_basis + BLOCK];
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut pending: Vec<Vec<f64>> = (0..BLOCK)
        .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let mut coeffs_for: Vec<Option<usize>> = vec![None; BLOCK];
    let mut applied = 0usize;
    let mut check_at = 2 * k_count + 40;

    loop {
        // Orthonormalize pending vectors into the basis.
        for (vec, src) in pending.drain(..).zip(coeffs_for.drain(..)) {
            let mut x = vec;
            let idx = basis.len();
            for _ in 0..2 {
                for (j, b) in basis.iter().enumerate() {
                    let c = dot(b, &x);
                    for (xi, bi) in x.iter_mut().zip(b) {
                        *xi -= c * bi;
                    }
                    if let Some(s) = src {
                        h[j][s] += c;
                    }
                }
            }
            let norm = dot(&x, &x).sqrt();
            if let Some(s) = src {
                h[idx][s] = norm;
            }
            if norm < 1e-300 {
                // Invariant subspace: restart the direction from noise.
                x = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                let nn = dot(&x, &x).sqrt();
                x.iter_mut().for_each(|v| *v /= nn);
            } else {
                x.iter_mut().for_each(|v| *v /= norm);
            }
            basis.push(x);
        }

        if applied >= check_at || basis.len() >= max_basis {
            let m = applied;
            let mut t = DMatrix::<f64>::zeros(m, m);
            for i in 0..m {
                for j in 0..m {
                    t[(i, j)] = 0.5 * (h[i][j] + h[j][i]);
                }
            }
            let eig = SymmetricEigen::new(t);
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
            let mut converged = true;
            for &c in order.iter().take(k_count) {
                let mu = eig.eigenvalues[c];
                let s = eig.eigenvectors.column(c);
                // Residual from coefficients outside the projected block.
                let mut r2 = 0.0;
                for row in h.iter().take(basis.len()).skip(m) {
                    let rv: f64 = (0..m).map(|j| row[j] * s[j]).sum();
                    r2 += rv * rv;
                }
                if r2.sqrt() > 1e-10 * mu.abs() {
                    converged = false;
                    break;
                }
            }
            if converged || basis.len() >= max_basis {
                if !converged {
                    return Err(Error::EigensolverFailed(format!(
                        "lowest {k_count} levels not converged with {m} basis vectors"
                    )));
                }
                let energies = order.iter().take(k_count).map(|&c| sigma + 1.0 / eig.eigenvalues[c]).collect();
                return Ok(Spectrum::new(energies, true));
            }
            check_at = applied + 40;
        }

        // Apply the inverse to the next basis vector.
        let mut x = basis[applied].clone();
        chol.solve(&mut x);
        pending.push(x);
        coeffs_for.push(Some(applied));
        applied += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_cholesky_solves_tridiagonal_system() {
        let n = 6;
        let mut band = vec![0.0; n * 2];
        for i in 0..n {
            band[i * 2 + 1] = 4.0;
            if i > 0 {
                band[i * 2] = -1.0;
            }
        }
        let chol = BandCholesky::factor(n, 1, band).unwrap();
        let x_true: Vec<f64> = (0..n).map(|i| i as f64 - 2.5).collect();
        let mut b: Vec<f64> = (0..n)
            .map(|i| {
                4.0 * x_true[i] - if i > 0 { x_true[i - 1] } else { 0.0 } - if i + 1 < n { x_true[i + 1] } else { 0.0 }
            })
            .collect();
        chol.solve(&mut b);
        for i in 0..n {
            assert!((b[i] - x_true[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn particle_in_a_box_matches_discrete_sine_modes() {
        // V = 0 on [0, pi]^2: exact discrete eigenvalues are known in closed form.
        let g = FdGrid { x_range: (0.0, std::f64::consts::PI), y_range: (0.0, std::f64::consts::PI), nx: 30, ny: 24 };
        let (hx, hy) = g.spacing();
        let mut exact = vec![];
        for a in 1..=30 {
            for b in 1..=24 {
                let ex = (2.0 - 2.0 * (a as f64 * hx).cos()) / (hx * hx);
                let ey = (2.0 - 2.0 * (b as f64 * hy).cos()) / (hy * hy);
                exact.push(0.5 * (ex + ey));
            }
        }
        exact.sort_by(f64::total_cmp);
        let s = fd_eigensolver_2d(|_, _| 0.0, &g, 1.0, 12).unwrap();
        for (got, want) in s.energies().iter().zip(&exact) {
            assert!((got - want).abs() < 1e-8 * want, "{got} vs {want}");
        }
    }

    #[test]
    fn shrinking_the_box_raises_levels() {
        let v = |x: f64, y: f64| 0.5 * (x * x + y * y);
        let big = fd_eigensolver_2d(v, &FdGrid { x_range: (-4.0, 4.0), y_range: (-4.0, 4.0), nx: 40, ny: 40 }, 1.0, 6)
            .unwrap();
        let small =
            fd_eigensolver_2d(v, &FdGrid { x_range: (-2.0, 2.0), y_range: (-2.0, 2.0), nx: 40, ny: 40 }, 1.0, 6)
                .unwrap();
        assert!(small.energies()[0] > big.energies()[0]);
    }

    #[test]
    fn rejects_bad_input() {
        let g = FdGrid { x_range: (0.0, 1.0), y_range: (0.0, 1.0), nx: 2, ny: 10 };
        assert!(fd_eigensolver_2d(|_, _| 0.0, &g, 1.0, 1).is_err());
        let g = FdGrid { x_range: (0.0, 1.0), y_range: (0.0, 1.0), nx: 10, ny: 10 };
        assert!(fd_eigensolver_2d(|_, _| 0.0, &g, 1.0, 0).is_err());
    }
}
