//! Random-walk Metropolis sampler with Gaussian proposals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetropolisOptions {
    /// Standard deviation of the isotropic Gaussian proposal.
    pub proposal_scale: f64,
    /// Extra chain steps run and discarded before sampling, as a fraction of
    /// the requested sample count.
    pub burn_in_fraction: f64,
    /// Keep every `thinning`-th state.
    pub thinning: usize,
    /// Consecutive rejections that abort the chain.
    pub zero_acceptance_window: usize,
}

impl Default for MetropolisOptions {
    fn default() -> Self {
        Self { proposal_scale: 1.0, burn_in_fraction: 0.1, thinning: 1, zero_acceptance_window: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetropolisRun {
    pub samples: Vec<Vec<f64>>,
    pub acceptance_rate: f64,
    pub burn_in_steps: usize,
}

/// Draws `n_samples` states from the density `exp(log_density)` starting at
/// `x0`. The chain is a pure function of `seed`.
pub fn metropolis_sampler(
    log_density: impl Fn(&[f64]) -> f64,
    x0: &[f64],
    n_samples: usize,
    seed: u64,
    opts: &MetropolisOptions,
) -> Result<MetropolisRun> {
    if x0.is_empty() {
        return Err(invalid("x0", "empty starting point"));
    }
    if n_samples == 0 {
        return Err(invalid("n_samples", "must be positive"));
    }
    if !(opts.proposal_scale > 0.0 && opts.proposal_scale.is_finite()) {
        return Err(invalid("proposal_scale", "must be positive"));
    }
    if !(0.0..1.0).contains(&opts.burn_in_fraction) || opts.thinning == 0 {
        return Err(invalid("burn_in_fraction", "must lie in [0, 1) with thinning >= 1"));
    }
    let mut x = x0.to_vec();
    let mut lp = log_density(&x);
    if !lp.is_finite() {
        return Err(invalid("x0", "log density is not finite at the starting point"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, opts.proposal_scale).expect("positive scale");
    let burn_in_steps = (opts.burn_in_fraction * n_samples as f64).ceil() as usize;
    let total = burn_in_steps + n_samples * opts.thinning;
    let mut samples = Vec::with_capacity(n_samples);
    let mut proposal = vec![0.0; x.len()];
    let (mut accepted, mut streak) = (0usize, 0usize);
    for step in 0..total {
        for (p, xi) in proposal.iter_mut().zip(&x) {
            *p = xi + normal.sample(&mut rng);
        }
        let lq = log_density(&proposal);
        let u: f64 = rng.random();
        if lq.is_finite() && u.ln() < lq - lp {
            std::mem::swap(&mut x, &mut proposal);
            lp = lq;
            accepted += 1;
            streak = 0;
        } else {
            streak += 1;
            if streak >= opts.zero_acceptance_window {
                return Err(Error::ZeroAcceptance { window: opts.zero_acceptance_window });
            }
        }
        if step >= burn_in_steps && (step - burn_in_steps) % opts.thinning == opts.thinning - 1 {
            samples.push(x.clone());
        }
    }
    Ok(MetropolisRun { samples, acceptance_rate: accepted as f64 / total as f64, burn_in_steps })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
    }

    /// Standard error of a chain mean from batch means.
    fn batch_se(xs: &[f64]) -> f64 {
        let b = 100;
        let len = xs.len() / b;
        let means: Vec<f64> = (0..b).map(|i| xs[i * len..(i + 1) * len].iter().sum::<f64>() / len as f64).collect();
        (moments(&means).1 / b as f64).sqrt()
    }

    #[test]
    fn standard_normal_moments() {
        let opts = MetropolisOptions { proposal_scale: 2.4, ..Default::default() };
        let run = metropolis_sampler(|x| -0.5 * x[0] * x[0], &[0.0], 1_000_000, 7, &opts).unwrap();
        let xs: Vec<f64> = run.samples.iter().map(|s| s[0]).collect();
        let (m, v) = moments(&xs);
        assert!(m.abs() < 4.0 * batch_se(&xs), "mean {m}");
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        assert!((v - 1.0).abs() < 4.0 * batch_se(&sq), "variance {v}");
        assert!((0.1..0.6).contains(&run.acceptance_rate));
    }

    #[test]
    fn oscillator_equipartition() {
        // exp(-theta H), H = (p^2 + q^2)/2, theta = 1
        let opts = MetropolisOptions { proposal_scale: 1.6, ..Default::default() };
        let run = metropolis_sampler(|x| -0.5 * (x[0] * x[0] + x[1] * x[1]), &[0.0, 0.0], 400_000, 3, &opts).unwrap();
        let h: Vec<f64> = run.samples.iter().map(|s| 0.5 * (s[0] * s[0] + s[1] * s[1])).collect();
        let (m, _) = moments(&h);
        assert!((m - 1.0).abs() < 4.0 * batch_se(&h), "<H> = {m}");
    }

    #[test]
    fn same_seed_same_chain() {
        let opts = MetropolisOptions::default();
        let a = metropolis_sampler(|x| -x[0].powi(4), &[0.2], 1000, 42, &opts).unwrap();
        let b = metropolis_sampler(|x| -x[0].powi(4), &[0.2], 1000, 42, &opts).unwrap();
        let c = metropolis_sampler(|x| -x[0].powi(4), &[0.2], 1000, 43, &opts).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.samples.len(), 1000);
        assert_eq!(a.burn_in_steps, 100);
    }

    #[test]
    fn stuck_chain_is_reported() {
        let opts = MetropolisOptions { zero_acceptance_window: 50, ..Default::default() };
        let r = metropolis_sampler(|x| if x[0] == 0.0 { 0.0 } else { f64::NEG_INFINITY }, &[0.0], 100, 1, &opts);
        assert!(matches!(r, Err(Error::ZeroAcceptance { window: 50 })));
        assert!(metropolis_sampler(|_| f64::NAN, &[0.0], 10, 1, &opts).is_err());
    }
}
