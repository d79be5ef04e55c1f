//! Reference backends: quantum averages from spectra, classical Boltzmann
//! averages, a finite-difference eigensolver and Poincaré sections.

mod fd;
mod poincare;

pub use fd::{fd_eigensolver_2d, FdGrid};
pub use poincare::{
    classify_orbit, poincare_section, section_accessible_area, OrbitClass, OrbitFootprint, PoincareOptions, PoincareSection,
    SectionCrossing,
};

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::models::HamiltonianModel;
use crate::quadrature::MidpointGrid;

/// Sorted list of eigenenergies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    energies: Vec<f64>,
    /// Whether higher levels exist that are not listed.
    truncated: bool,
}

impl Spectrum {
    /// Sorts `energies` ascending. Panics on non-finite entries.
    pub fn new(mut energies: Vec<f64>, truncated: bool) -> Self {
        assert!(energies.iter().all(|e| e.is_finite()), "spectrum energies must be finite");
        energies.sort_by(f64::total_cmp);
        Self { energies, truncated }
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    pub fn ground(&self) -> Option<f64> {
        self.energies.first().copied()
    }

    /// Smallest `theta` for which the Boltzmann weight of the highest listed
    /// level relative to the ground level is below `tail`.
    pub fn trusted_theta(&self, hbar: f64, tail: f64) -> f64 {
        match (self.energies.first(), self.energies.last()) {
            (Some(lo), Some(hi)) if hi > lo => -tail.ln() * hbar / (hi - lo),
            _ => 0.0,
        }
    }
}

/// Bound Morse levels `E_n = hbar [(n + 1/2) - chi (n + 1/2)^2]`, `n = 0..=N`
/// (units `omega = 1`).
pub fn morse_spectrum(chi: f64, hbar: f64) -> Result<Spectrum> {
    let n_max = crate::models::bound_state_count(chi)?;
    let energies = (0..=n_max)
        .map(|n| {
            let v = n as f64 + 0.5;
            hbar * (v - chi * v * v)
        })
        .collect();
    Ok(Spectrum::new(energies, false))
}

/// Mean energy and heat capacity (`k = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermalAverages {
    pub mean_energy: f64,
    pub specific_heat: f64,
}

/// Boltzmann averages over a discrete spectrum at `beta = theta / hbar`.
pub fn spectrum_thermal_averages(spectrum: &Spectrum, theta: f64, hbar: f64) -> Result<ThermalAverages> {
    if spectrum.is_empty() {
        return Err(invalid("spectrum", "no levels"));
    }
    if !(theta > 0.0) {
        return Err(invalid("theta", "must be positive"));
    }
    let beta = theta / hbar;
    let e0 = spectrum.energies[0];
    let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for &e in &spectrum.energies {
        let de = e - e0;
        let w = (-beta * de).exp();
        z += w;
        m1 += w * de;
        m2 += w * de * de;
    }
    let mean = m1 / z;
    let var = (m2 / z - mean * mean).max(0.0);
    Ok(ThermalAverages { mean_energy: e0 + mean, specific_heat: beta * beta * var })
}

/// Classical averages of `H_c` under `exp(-theta H_c / hbar)` over the grid.
pub fn classical_averages(model: &dyn HamiltonianModel, theta: f64, grid: &MidpointGrid) -> Result<ThermalAverages> {
    if !(theta > 0.0) {
        return Err(invalid("theta", "must be positive"));
    }
    let beta = theta / model.hbar();
    let terms: Vec<(f64, f64)> = grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let h = model.classical(x);
            (grid.log_weight(i) - beta * h, h)
        })
        .collect();
    let lmax = terms.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
    let (mut z, mut m1) = (0.0, 0.0);
    for &(l, h) in &terms {
        let w = (l - lmax).exp();
        z += w;
        m1 += w * h;
    }
    let mean = m1 / z;
    let var: f64 = terms.iter().map(|&(l, h)| (l - lmax).exp() * (h - mean).powi(2)).sum::<f64>() / z;
    Ok(ThermalAverages { mean_energy: mean, specific_heat: beta * beta * var })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{HarmonicOscillator, Morse};
    use crate::quadrature::{morse_grid, radial_cutoff, radial_grid};

    #[test]
    fn morse_levels() {
        let s = morse_spectrum(0.12, 1.0).unwrap();
        assert_eq!(s.len(), 4);
        assert!((s.energies()[0] - 0.47).abs() < 1e-15);
        assert!(!s.is_truncated());
        let s = morse_spectrum(1e-4, 1.0).unwrap();
        for (n, e) in s.energies().iter().take(5).enumerate() {
            assert!((e - (n as f64 + 0.5)).abs() < 1e-2);
        }
        assert!(morse_spectrum(0.6, 1.0).is_err());
    }

    #[test]
    fn oscillator_spectrum_averages() {
        let s = crate::symbols::normal_form_spectrum(|j| j, 400, 1.0);
        let a = spectrum_thermal_averages(&s, 2.0, 1.0).unwrap();
        assert!((a.mean_energy - 0.5 / 1f64.tanh()).abs() < 1e-12);
        assert!((a.specific_heat - 1.0 / 1f64.sinh().powi(2)).abs() < 1e-12);
        let a = spectrum_thermal_averages(&s, 60.0, 1.0).unwrap();
        assert!((a.mean_energy - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_level_has_no_heat_capacity() {
        let s = Spectrum::new(vec![1.3], false);
        let a = spectrum_thermal_averages(&s, 1.0, 1.0).unwrap();
        assert_eq!(a.specific_heat, 0.0);
        assert_eq!(a.mean_energy, 1.3);
        assert!(spectrum_thermal_averages(&Spectrum::new(vec![], false), 1.0, 1.0).is_err());
    }

    #[test]
    fn classical_oscillator_equipartition() {
        let ho = HarmonicOscillator::new(1.0, 1.0).unwrap();
        for theta in [0.5, 2.0, 7.0] {
            let jmax = radial_cutoff(&ho, 1.0, theta, false, 60.0).unwrap();
            let g = radial_grid(jmax, 64, 4).unwrap();
            let a = classical_averages(&ho, theta, &g).unwrap();
            assert!((a.mean_energy - 1.0 / theta).abs() < 1e-10);
            assert!((a.specific_heat - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn classical_morse_is_below_dissociation() {
        let m = Morse::new(0.05, 1.0).unwrap();
        let g = morse_grid(0.05, 1.0, 60, 60).unwrap();
        let a = classical_averages(&m, 0.01, &g).unwrap();
        assert!(a.mean_energy < m.depth());
        // High temperature limit on a bounded region tends to the region mean.
        assert!(a.mean_energy > 0.3 * m.depth());
    }
}
