//! Green functions and eigenmode expansions of reciprocal tight-binding
//! networks, and the parity analysis of the terminal response.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::network::{Topology, TopologyKind};
use crate::{Error, Result};

/// Analytic spectrum of a uniform open chain of `len` sites with hopping `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpectrum {
    pub len: usize,
    pub hopping: f64,
    /// `E_k = 2J cos(πk/(L+1))`, `k = 1..L`.
    pub energies: Vec<f64>,
}

impl ChainSpectrum {
    pub fn new(len: usize, hopping: f64) -> Self {
        let energies = (1..=len)
            .map(|k| 2.0 * hopping * (PI * k as f64 / (len as f64 + 1.0)).cos())
            .collect();
        Self {
            len,
            hopping,
            energies,
        }
    }

    /// `ψ_k(n) = sqrt(2/(L+1)) sin(πk(n+1)/(L+1))`, with the charger at site 0.
    pub fn amplitude(&self, k: usize, site: usize) -> f64 {
        let l1 = self.len as f64 + 1.0;
        (2.0 / l1).sqrt() * (PI * k as f64 * (site as f64 + 1.0) / l1).sin()
    }

    pub fn has_zero_mode(&self) -> bool {
        self.len % 2 == 1
    }

    /// Smallest `|E_k|`.
    pub fn gap(&self) -> f64 {
        self.energies.iter().map(|e| e.abs()).fold(f64::INFINITY, f64::min)
    }
}

/// Real symmetric hopping matrix of a uniform chain or star with `n` batteries.
pub fn hopping_matrix(kind: TopologyKind, n: usize, j: f64) -> Result<DMatrix<f64>> {
    let topo = Topology::new(kind, n)?;
    let m = topo.n_modes();
    let mut h = DMatrix::zeros(m, m);
    for (u, d) in topo.links() {
        h[(u, d)] = j;
        h[(d, u)] = j;
    }
    Ok(h)
}

/// `G = (-H_0 + iκ/2)^{-1}`.
pub fn green_matrix(h0: &DMatrix<f64>, kappa: f64) -> Result<DMatrix<Complex64>> {
    if h0.nrows() != h0.ncols() {
        return Err(Error::DimensionMismatch("H_0 must be square".into()));
    }
    let m = h0.nrows();
    let op = resolvent_operator(h0, kappa);
    op.try_inverse()
        .filter(|g| g.iter().all(|z| z.is_finite()))
        .ok_or_else(|| Error::SingularMatrix(format!("-H_0 + i kappa/2 on {m} sites")))
}

fn resolvent_operator(h0: &DMatrix<f64>, kappa: f64) -> DMatrix<Complex64> {
    let m = h0.nrows();
    DMatrix::from_fn(m, m, |r, c| {
        let diag = if r == c { kappa / 2.0 } else { 0.0 };
        Complex64::new(-h0[(r, c)], diag)
    })
}

/// Steady amplitudes solving `(-H_0 + iκ/2) b = ε e_0`.
pub fn steady_amplitudes(
    j: f64,
    kappa: f64,
    eps: f64,
    kind: TopologyKind,
    n: usize,
) -> Result<DVector<Complex64>> {
    let h0 = hopping_matrix(kind, n, j)?;
    let m = h0.nrows();
    let mut rhs = DVector::<Complex64>::zeros(m);
    rhs[0] = Complex64::new(eps, 0.0);
    let op = resolvent_operator(&h0, kappa);
    let sol = op
        .lu()
        .solve(&rhs)
        .filter(|v| v.iter().all(|z| z.is_finite()))
        .ok_or_else(|| Error::SingularMatrix(format!("-H_0 + i kappa/2 on {m} sites")))?;
    Ok(sol)
}

/// Steady amplitudes from the eigenmode expansion
/// `b_n = ε Σ_k ψ_k(n) ψ_k(0) / (-E_k + iκ/2)`; chains use the analytic
/// modes, stars a dense symmetric eigendecomposition.
pub fn modal_amplitudes(
    j: f64,
    kappa: f64,
    eps: f64,
    kind: TopologyKind,
    n: usize,
) -> Result<DVector<Complex64>> {
    let m = n + 1;
    let (energies, modes): (Vec<f64>, DMatrix<f64>) = match kind {
        TopologyKind::Cascaded => {
            let s = ChainSpectrum::new(m, j);
            let modes = DMatrix::from_fn(m, m, |site, k| s.amplitude(k + 1, site));
            (s.energies, modes)
        }
        TopologyKind::Parallel => {
            let eig = hopping_matrix(kind, n, j)?.symmetric_eigen();
            (eig.eigenvalues.iter().cloned().collect(), eig.eigenvectors)
        }
    };
    let mut b = DVector::<Complex64>::zeros(m);
    for (k, &e) in energies.iter().enumerate() {
        let denom = Complex64::new(-e, kappa / 2.0);
        if denom.norm() == 0.0 {
            return Err(Error::SingularMatrix(format!("resonant mode {k} with zero damping")));
        }
        let w = eps * modes[(0, k)] / denom;
        for site in 0..m {
            b[site] += w * modes[(site, k)];
        }
    }
    Ok(b)
}

/// Modal decomposition of the terminal amplitude of a driven chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityReport {
    pub n_batteries: usize,
    pub hopping: f64,
    pub kappa: f64,
    pub drive: f64,
    pub has_zero_mode: bool,
    pub energies: Vec<f64>,
    /// `(-1)^{k+1} sin²(πk/(L+1)) / (-E_k + iκ/2) · 2ε/(L+1)`.
    pub mode_weights: Vec<Complex64>,
    pub terminal_amplitude: Complex64,
    pub terminal_energy: f64,
}

impl ParityReport {
    /// Index of the mode with the smallest `|E_k|`.
    pub fn central_mode(&self) -> usize {
        self.energies
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .map(|(k, _)| k)
            .unwrap_or(0)
    }
}

pub fn parity_report(n: usize, j: f64, kappa: f64, eps: f64) -> Result<ParityReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("at least one battery is required".into()));
    }
    let len = n + 1;
    let s = ChainSpectrum::new(len, j);
    let l1 = len as f64 + 1.0;
    let mode_weights: Vec<Complex64> = (1..=len)
        .map(|k| {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            let sin2 = (PI * k as f64 / l1).sin().powi(2);
            sign * sin2 * 2.0 * eps / l1 / Complex64::new(-s.energies[k - 1], kappa / 2.0)
        })
        .collect();
    let terminal_amplitude: Complex64 = mode_weights.iter().sum();
    Ok(ParityReport {
        n_batteries: n,
        hopping: j,
        kappa,
        drive: eps,
        has_zero_mode: s.has_zero_mode(),
        energies: s.energies,
        mode_weights,
        terminal_amplitude,
        terminal_energy: terminal_amplitude.norm_sqr(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const K: f64 = 0.003;

    #[test]
    fn scalar_green_function() {
        let g = green_matrix(&DMatrix::zeros(1, 1), K).unwrap();
        assert!((g[(0, 0)] - Complex64::new(0.0, -2.0 / K)).norm() < 1e-9);
    }

    #[test]
    fn green_residual_on_chain_and_star() {
        for kind in [TopologyKind::Cascaded, TopologyKind::Parallel] {
            let h = hopping_matrix(kind, 2, K).unwrap();
            let g = green_matrix(&h, K).unwrap();
            let res = &g * resolvent_operator(&h, K) - DMatrix::<Complex64>::identity(3, 3);
            assert!(res.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-10);
        }
    }

    #[test]
    fn green_singular_without_damping() {
        let h = hopping_matrix(TopologyKind::Cascaded, 2, 1.0).unwrap();
        assert!(green_matrix(&h, 0.0).is_err());
    }

    #[test]
    fn explicit_mode_amplitudes() {
        let s = ChainSpectrum::new(5, 1.0);
        let l1: f64 = 6.0;
        for k in 1..=5 {
            let psi0 = (2.0 / l1).sqrt() * (PI * k as f64 / l1).sin();
            let psin = (2.0 / l1).sqrt() * (PI * k as f64 * 5.0 / l1).sin();
            assert!((s.amplitude(k, 0) - psi0).abs() < 1e-15);
            assert!((s.amplitude(k, 4) - psin).abs() < 1e-15);
        }
    }

    #[test]
    fn modal_sum_matches_linear_solve() {
        for kind in [TopologyKind::Cascaded, TopologyKind::Parallel] {
            for n in 1..=11 {
                for j in [0.0007, 0.002, 0.01] {
                    let a = steady_amplitudes(j, K, 0.01, kind, n).unwrap();
                    let b = modal_amplitudes(j, K, 0.01, kind, n).unwrap();
                    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
                    let err = (&a - &b).iter().map(|z| z.norm()).fold(0.0, f64::max);
                    assert!(err <= 1e-10 * scale.max(1.0), "{kind} n={n} j={j}");
                }
            }
        }
    }

    #[test]
    fn dimer_has_no_zero_mode() {
        let s = ChainSpectrum::new(2, 0.7);
        assert!(!s.has_zero_mode());
        assert!((s.energies[0] - 0.7).abs() < 1e-15 && (s.energies[1] + 0.7).abs() < 1e-15);
    }

    #[test]
    fn parity_report_sums_to_terminal_amplitude() {
        for n in 1..=9 {
            let r = parity_report(n, 0.002, K, 0.01).unwrap();
            let b = steady_amplitudes(0.002, K, 0.01, TopologyKind::Cascaded, n).unwrap();
            assert!((r.terminal_amplitude - b[n]).norm() <= 1e-10 * b[n].norm().max(1.0));
            assert_eq!(r.has_zero_mode, n % 2 == 0);
        }
    }

    // Odd N: mirror modes k and L+1-k carry conjugate weights, so their
    // imaginary parts cancel. Even N: the real parts cancel instead.
    #[test]
    fn mirror_modes_interfere() {
        for n in 1..=8 {
            let r = parity_report(n, 0.002, K, 0.01).unwrap();
            let len = r.mode_weights.len();
            for k in 0..len / 2 {
                let (a, b) = (r.mode_weights[k], r.mode_weights[len - 1 - k]);
                let target = if n % 2 == 1 { a.conj() } else { -a.conj() };
                assert!((b - target).norm() <= 1e-12 * a.norm(), "n = {n}");
            }
        }
    }
}
