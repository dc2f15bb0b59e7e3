//! Stored energy, ergotropy and passive energy of single-mode reduced states.

use serde::{Deserialize, Serialize};

use crate::moments::{assemble, GaussianState, Reservoir};
use crate::network::NetworkSpec;
use crate::{Error, Result};

/// Engine that produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    ClosedForm,
    Gaussian,
    Spectral,
    FockOracle,
}

/// Per-mode energetics in quanta of `ω`, ordered (charger, b_1, ..., b_N).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub per_mode_energy: Vec<f64>,
    pub per_mode_ergotropy: Vec<f64>,
    pub per_mode_passive: Vec<f64>,
    pub engine: Engine,
    /// `None` marks a steady state.
    pub time: Option<f64>,
}

impl EnergyReport {
    /// Reports built from explicit energies and passive energies.
    pub fn from_parts(energy: Vec<f64>, passive: Vec<f64>, engine: Engine, time: Option<f64>) -> Self {
        let ergotropy = energy.iter().zip(&passive).map(|(e, p)| e - p).collect();
        Self {
            per_mode_energy: energy,
            per_mode_ergotropy: ergotropy,
            per_mode_passive: passive,
            engine,
            time,
        }
    }

    pub fn from_gaussian(state: &GaussianState, omega: f64) -> Self {
        let m = state.n_modes();
        let energy = (0..m).map(|k| stored_energy(state, k, omega)).collect();
        let passive = (0..m).map(|k| passive_energy(state, k, omega)).collect();
        let time = state.time.is_finite().then_some(state.time);
        Self::from_parts(energy, passive, Engine::Gaussian, time)
    }

    /// `energy = ergotropy + passive` with every part above `-slack`.
    pub fn is_consistent(&self, slack: f64) -> bool {
        self.per_mode_energy
            .iter()
            .zip(&self.per_mode_ergotropy)
            .zip(&self.per_mode_passive)
            .all(|((e, w), p)| (e - w - p).abs() <= slack && *w >= -slack && *p >= -slack)
    }
}

/// `ω <b†b>` of one mode.
pub fn stored_energy(state: &GaussianState, mode: usize, omega: f64) -> f64 {
    omega * state.occupation(mode)
}

/// Symplectic eigenvalue of the reduced covariance, normalized so that
/// `ν = 1` for pure states and `ν = 2n̄ + 1` for thermal occupation `n̄`.
pub fn reduced_symplectic(state: &GaussianState, mode: usize) -> f64 {
    let c = state.reduced_cov(mode);
    let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
    2.0 * det.max(0.0).sqrt()
}

/// `ω (ν - 1)/2`: energy of the thermal state with the same spectrum.
pub fn passive_energy(state: &GaussianState, mode: usize, omega: f64) -> f64 {
    omega * 0.5 * (reduced_symplectic(state, mode) - 1.0)
}

/// `ω (<n> - (ν - 1)/2)`, exact over all unitaries.
pub fn ergotropy_gaussian(state: &GaussianState, mode: usize, omega: f64) -> f64 {
    stored_energy(state, mode, omega) - passive_energy(state, mode, omega)
}

/// Ratio of steady ergotropies of `mode` under `bath` and the vacuum bath.
pub fn enhancement_factor(spec: &NetworkSpec, bath: Reservoir, mode: usize) -> Result<f64> {
    let w = spec.frequency;
    let reference = assemble(spec, Reservoir::Vacuum).steady_state()?;
    let e_ref = ergotropy_gaussian(&reference, mode, w);
    if e_ref.abs() <= 1e-14 * w {
        return Err(Error::ZeroReference);
    }
    let sq = assemble(spec, bath).steady_state()?;
    Ok(ergotropy_gaussian(&sq, mode, w) / e_ref)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn single(mean: [f64; 2], cov: [[f64; 2]; 2]) -> GaussianState {
        GaussianState {
            mean: DVector::from_vec(mean.to_vec()),
            cov: DMatrix::from_row_slice(2, 2, &[cov[0][0], cov[0][1], cov[1][0], cov[1][1]]),
            time: 0.0,
        }
    }

    #[test]
    fn ground_state_is_empty() {
        let s = GaussianState::ground(3);
        for m in 0..3 {
            assert_eq!(stored_energy(&s, m, 1.0), 0.0);
            assert!(ergotropy_gaussian(&s, m, 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn coherent_state_is_fully_extractable() {
        let alpha = (1.3f64, -0.4f64);
        let s = single(
            [2f64.sqrt() * alpha.0, 2f64.sqrt() * alpha.1],
            [[0.5, 0.0], [0.0, 0.5]],
        );
        let e = stored_energy(&s, 0, 1.0);
        assert!((e - (alpha.0 * alpha.0 + alpha.1 * alpha.1)).abs() < 1e-14);
        assert!((ergotropy_gaussian(&s, 0, 1.0) - e).abs() < 1e-14);
    }

    #[test]
    fn displaced_thermal_split() {
        let (n_th, a2): (f64, f64) = (1.0, 2.0);
        let v = n_th + 0.5;
        let s = single([(2.0 * a2).sqrt(), 0.0], [[v, 0.0], [0.0, v]]);
        assert!((stored_energy(&s, 0, 1.0) - 3.0).abs() < 1e-12);
        assert!((ergotropy_gaussian(&s, 0, 1.0) - 2.0).abs() < 1e-12);
        assert!((passive_energy(&s, 0, 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn squeezed_vacuum_is_pure() {
        let r: f64 = 0.8;
        let s = single([0.0, 0.0], [[0.5 * (2.0 * r).exp(), 0.0], [0.0, 0.5 * (-2.0 * r).exp()]]);
        assert!((stored_energy(&s, 0, 1.0) - r.sinh().powi(2)).abs() < 1e-12);
        assert!((ergotropy_gaussian(&s, 0, 1.0) - r.sinh().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn decomposition_holds_in_reports() {
        let v = 2.5;
        let s = single([0.3, -0.7], [[v, 0.4], [0.4, 1.1]]);
        let rep = EnergyReport::from_gaussian(&s, 1.0);
        assert!(rep.is_consistent(1e-10));
        assert_eq!(rep.engine, Engine::Gaussian);
    }
}
