//! Semiclassical thermal Wigner functions and thermodynamics from
//! imaginary-time trajectories in double phase space.
//!
//! The crate is organised bottom-up:
//!
//! - [`phase`]: phase-space points, the symplectic matrix and the wedge product.
//! - [`models`]: Hamiltonians with analytic continuation (oscillator, Kerr,
//!   Morse, Nelson).
//! - [`symbols`]: Wigner symbols of oscillator powers and closed-form thermal
//!   trajectories of normal forms.
//! - [`doublephase`]: the rotated double-phase-space flow, its Jacobian and
//!   euclidean action.
//! - [`engine`]: midpoint integrals for thermal averages and Wigner values.
//! - [`quadrature`]: Gaussian rules, grids, adaptive cubature and Metropolis
//!   sampling.
//! - [`reference`]: quantum, classical and real-time reference computations.
//! - [`run`]: configuration and batch commands shared by the CLI.
//!
//! ```
//! use thermal_wigner::doublephase::{propagate_thermal, PropagationOptions};
//! use thermal_wigner::models::HarmonicOscillator;
//! use thermal_wigner::PhasePoint;
//!
//! let ho = HarmonicOscillator::new(1.0, 1.0)?;
//! let x = PhasePoint::new(vec![1.0, 0.0])?;
//! let out = propagate_thermal(&x, 2.0, &ho, &PropagationOptions::default())?;
//! assert!((out.centre[0] - 1f64.cosh()).abs() < 1e-7);
//! # Ok::<(), thermal_wigner::Error>(())
//! ```

pub mod doublephase;
pub mod engine;
pub mod error;
pub mod models;
pub mod ode;
pub mod phase;
pub mod quadrature;
pub mod reference;
pub mod run;
pub mod symbols;

pub use error::{Error, Result};
pub use phase::PhasePoint;
