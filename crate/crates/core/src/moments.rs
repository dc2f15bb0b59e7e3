//! Exact Gaussian engine: first moments and quadrature covariances.
//!
//! Quadratures are interleaved per mode, `R = (x_0, p_0, x_1, p_1, ...)` with
//! `x = (a + a†)/√2`, `p = -i(a - a†)/√2`; the vacuum covariance is `I/2`.
//!
//! Every reservoir is reduced to a list of linear jump operators
//! `L = Σ_m (u_m a_m + v_m a_m†)`. A thermal bath splits each channel into
//! `√(n+1) L` and `√n L†`; a squeezed bath maps it to
//! `cosh r L - e^{iθ} sinh r L†`. For jump vectors `c` in quadrature form
//! and `M = Σ c̄ cᵀ`, the covariance obeys `dΣ/dt = AΣ + ΣAᵀ + Ω Re(M) Ωᵀ`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{
    eigenvalues_real, quadrature_image, quadrature_vector, solve_continuous_lyapunov, spectral_abscissa,
    symmetrize, symplectic_eigenvalues, symplectic_form,
};
use crate::network::NetworkSpec;
use crate::{Error, Result};

/// Slack on symplectic eigenvalues when checking `Σ + iΩ/2 ≥ 0`.
pub const PHYSICALITY_SLACK: f64 = 1e-9;

/// Bath shared by every local and collective dissipation channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Reservoir {
    Vacuum,
    Thermal { n_th: f64 },
    Squeezed { r: f64, phase: f64 },
}

impl Reservoir {
    /// Thermal bath; `n_th = 0` normalizes to [`Reservoir::Vacuum`].
    pub fn thermal(n_th: f64) -> Result<Self> {
        if !(n_th >= 0.0 && n_th.is_finite()) {
            return Err(Error::InvalidParameter(format!("n_th = {n_th}")));
        }
        Ok(if n_th == 0.0 {
            Reservoir::Vacuum
        } else {
            Reservoir::Thermal { n_th }
        })
    }

    /// Squeezed vacuum bath; `r = 0` normalizes to [`Reservoir::Vacuum`].
    pub fn squeezed(r: f64, phase: f64) -> Result<Self> {
        if !(r >= 0.0 && r.is_finite() && phase.is_finite()) {
            return Err(Error::InvalidParameter(format!("r = {r}, phase = {phase}")));
        }
        Ok(if r == 0.0 {
            Reservoir::Vacuum
        } else {
            Reservoir::Squeezed { r, phase }
        })
    }

    /// Canonical representative (zero-strength baths become vacuum).
    pub fn normalized(self) -> Self {
        match self {
            Reservoir::Thermal { n_th: 0.0 } => Reservoir::Vacuum,
            Reservoir::Squeezed { r: 0.0, .. } => Reservoir::Vacuum,
            other => other,
        }
    }

    /// Excitation weight `P` (`n_th`, or `sinh² r`).
    pub fn p(&self) -> f64 {
        match *self {
            Reservoir::Vacuum => 0.0,
            Reservoir::Thermal { n_th } => n_th,
            Reservoir::Squeezed { r, .. } => r.sinh().powi(2),
        }
    }

    /// Two-photon correlation `Q = sinh r cosh r e^{-iθ}` (zero unless squeezed).
    pub fn q(&self) -> Complex64 {
        match *self {
            Reservoir::Squeezed { r, phase } => {
                Complex64::from_polar(r.sinh() * r.cosh(), -phase)
            }
            _ => Complex64::new(0.0, 0.0),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Reservoir::Vacuum => "vacuum".into(),
            Reservoir::Thermal { n_th } => format!("thermal(n_th={n_th})"),
            Reservoir::Squeezed { r, phase } => format!("squeezed(r={r},phase={phase})"),
        }
    }
}

/// Linear jump operator `Σ_m (ann_m a_m + cre_m a_m†)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearJump {
    pub ann: Vec<Complex64>,
    pub cre: Vec<Complex64>,
}

impl LinearJump {
    fn annihilating(coeffs: &[Complex64]) -> Self {
        Self {
            ann: coeffs.to_vec(),
            cre: vec![Complex64::new(0.0, 0.0); coeffs.len()],
        }
    }

    fn adjoint(&self) -> Self {
        Self {
            ann: self.cre.iter().map(|z| z.conj()).collect(),
            cre: self.ann.iter().map(|z| z.conj()).collect(),
        }
    }

    fn combine(&self, alpha: Complex64, other: &Self, beta: Complex64) -> Self {
        let mix = |x: &[Complex64], y: &[Complex64]| -> Vec<Complex64> {
            x.iter().zip(y).map(|(a, b)| alpha * a + beta * b).collect()
        };
        Self {
            ann: mix(&self.ann, &other.ann),
            cre: mix(&self.cre, &other.cre),
        }
    }

    /// Coefficients on `(x_0, p_0, x_1, p_1, ...)`.
    pub fn quadrature_coeffs(&self) -> Vec<Complex64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let i = Complex64::i();
        let mut c = Vec::with_capacity(2 * self.ann.len());
        for (u, v) in self.ann.iter().zip(&self.cre) {
            c.push((u + v) * s);
            c.push(i * (u - v) * s);
        }
        c
    }
}

/// Jump operators of the network under a given bath.
pub fn bath_jumps(spec: &NetworkSpec, bath: Reservoir) -> Vec<LinearJump> {
    let one = Complex64::new(1.0, 0.0);
    let mut out = Vec::new();
    for ch in spec.dissipation_channels() {
        let l = LinearJump::annihilating(&ch);
        match bath.normalized() {
            Reservoir::Vacuum => out.push(l),
            Reservoir::Thermal { n_th } => {
                let ld = l.adjoint();
                out.push(l.combine((n_th + 1.0).sqrt() * one, &ld, Complex64::new(0.0, 0.0)));
                out.push(ld.combine(n_th.sqrt() * one, &l, Complex64::new(0.0, 0.0)));
            }
            Reservoir::Squeezed { r, phase } => {
                let ld = l.adjoint();
                out.push(l.combine(
                    r.cosh() * one,
                    &ld,
                    -Complex64::from_polar(r.sinh(), phase),
                ));
            }
        }
    }
    out
}

/// `M = Σ_c c̄ cᵀ` over the quadrature coefficients of every jump.
pub fn jump_gram(jumps: &[LinearJump], n_modes: usize) -> DMatrix<Complex64> {
    let dim = 2 * n_modes;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for j in jumps {
        let c = j.quadrature_coeffs();
        for r in 0..dim {
            for k in 0..dim {
                m[(r, k)] += c[r].conj() * c[k];
            }
        }
    }
    m
}

/// Real linear system `dR/dt = A R + f`, `dΣ/dt = AΣ + ΣAᵀ + D`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSystem {
    pub drift: DMatrix<f64>,
    pub diffusion: DMatrix<f64>,
    pub drive: DVector<f64>,
    pub frequency: f64,
    pub n_modes: usize,
}

/// First and second moments of all modes at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub time: f64,
}

impl GaussianState {
    /// Global vacuum at `t = 0`.
    pub fn ground(n_modes: usize) -> Self {
        Self {
            mean: DVector::zeros(2 * n_modes),
            cov: DMatrix::identity(2 * n_modes, 2 * n_modes) * 0.5,
            time: 0.0,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }

    /// Complex amplitude `<a_m>`.
    pub fn amplitude(&self, mode: usize) -> Complex64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Complex64::new(self.mean[2 * mode] * s, self.mean[2 * mode + 1] * s)
    }

    pub fn reduced_mean(&self, mode: usize) -> [f64; 2] {
        [self.mean[2 * mode], self.mean[2 * mode + 1]]
    }

    pub fn reduced_cov(&self, mode: usize) -> [[f64; 2]; 2] {
        let k = 2 * mode;
        [
            [self.cov[(k, k)], self.cov[(k, k + 1)]],
            [self.cov[(k + 1, k)], self.cov[(k + 1, k + 1)]],
        ]
    }

    /// `<a_m† a_m> = (Σ_xx + Σ_pp - 1)/2 + (m_x² + m_p²)/2`.
    pub fn occupation(&self, mode: usize) -> f64 {
        let c = self.reduced_cov(mode);
        let [mx, mp] = self.reduced_mean(mode);
        0.5 * (c[0][0] + c[1][1] - 1.0) + 0.5 * (mx * mx + mp * mp)
    }

    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        symplectic_eigenvalues(&self.cov)
    }

    /// Symmetric covariance satisfying the uncertainty relation.
    pub fn is_physical(&self) -> bool {
        let asym = (&self.cov - self.cov.transpose()).amax();
        let scale = self.cov.amax().max(1.0);
        asym <= 1e-12 * scale
            && self
                .symplectic_eigenvalues()
                .iter()
                .all(|&nu| nu >= 0.5 - PHYSICALITY_SLACK)
    }
}

/// Quadrature drift, diffusion and drive for a network in a bath. The bath
/// changes only the diffusion.
pub fn assemble(spec: &NetworkSpec, bath: Reservoir) -> QuadratureSystem {
    let (a, f) = spec.drift_matrix();
    let n = spec.n_modes();
    let jumps = bath_jumps(spec, bath);
    let gram = jump_gram(&jumps, n);
    let omega = symplectic_form(n);
    let mut diffusion = &omega * gram.map(|z| z.re) * omega.transpose();
    symmetrize(&mut diffusion);
    QuadratureSystem {
        drift: quadrature_image(&a),
        diffusion,
        drive: quadrature_vector(&f),
        frequency: spec.frequency,
        n_modes: n,
    }
}

struct Propagator {
    /// `e^{A h}`
    phi: DMatrix<f64>,
    /// `∫_0^h e^{A s} f ds`
    forced: DVector<f64>,
    /// `∫_0^h e^{A s} D e^{Aᵀ s} ds`
    noise: DMatrix<f64>,
}

impl QuadratureSystem {
    pub fn dim(&self) -> usize {
        2 * self.n_modes
    }

    fn propagator(&self, h: f64) -> Propagator {
        let n = self.dim();
        // Augmented exponential for the affine mean equation.
        let mut aug = DMatrix::<f64>::zeros(n + 1, n + 1);
        aug.view_mut((0, 0), (n, n)).copy_from(&(&self.drift * h));
        aug.view_mut((0, n), (n, 1)).copy_from(&(&self.drive * h));
        let e = aug.exp();
        let phi = e.view((0, 0), (n, n)).into_owned();
        let forced = e.view((0, n), (n, 1)).column(0).into_owned();

        // Van Loan block exponential on a short substep, where e^{-A s}
        // stays O(1), then doubled up to h.
        let norm = self.drift.abs().row_sum().max();
        let doublings = (norm * h).log2().ceil().max(0.0) as i32;
        let s = h / 2f64.powi(doublings);
        let mut vl = DMatrix::<f64>::zeros(2 * n, 2 * n);
        vl.view_mut((0, 0), (n, n)).copy_from(&(-&self.drift * s));
        vl.view_mut((0, n), (n, n)).copy_from(&(&self.diffusion * s));
        vl.view_mut((n, n), (n, n)).copy_from(&(self.drift.transpose() * s));
        let ev = vl.exp();
        let f12 = ev.view((0, n), (n, n)).into_owned();
        let f22 = ev.view((n, n), (n, n)).into_owned();
        let mut step = f22.transpose();
        let mut noise = &step * f12;
        symmetrize(&mut noise);
        for _ in 0..doublings {
            noise += &step * &noise * step.transpose();
            symmetrize(&mut noise);
            step = &step * &step;
        }
        Propagator { phi, forced, noise }
    }

    fn step(&self, p: &Propagator, state: &GaussianState, t: f64, vacuum: bool) -> GaussianState {
        let mean = &p.phi * &state.mean + &p.forced;
        let mut cov = if vacuum {
            // Exact form of the same update; keeps a vacuum covariance
            // at exactly I/2 instead of accumulating rounding.
            let half = DMatrix::<f64>::identity(self.dim(), self.dim()) * 0.5;
            let excess = &state.cov - &half;
            half + &p.phi * excess * p.phi.transpose()
        } else {
            &p.phi * &state.cov * p.phi.transpose() + &p.noise
        };
        symmetrize(&mut cov);
        GaussianState { mean, cov, time: t }
    }

    /// True when the diffusion is `-(A + Aᵀ)/2`, so that `I/2` is the
    /// steady covariance: purely lossy couplings to zero-temperature baths.
    pub fn preserves_vacuum(&self) -> bool {
        let residual = &self.diffusion + (&self.drift + self.drift.transpose()) * 0.5;
        residual.amax() <= 1e-13 * self.drift.amax().max(f64::MIN_POSITIVE)
    }

    /// Largest real part of the drift spectrum.
    pub fn spectral_abscissa(&self) -> Result<f64> {
        spectral_abscissa(&self.drift)
    }

    /// Slowest decay rate `min_k |Re λ_k|` of a stable drift.
    pub fn slowest_rate(&self) -> Result<f64> {
        Ok(eigenvalues_real(&self.drift)?
            .iter()
            .map(|z| -z.re)
            .fold(f64::INFINITY, f64::min))
    }

    /// Propagate `state` to every time in `t_grid` using exact exponentials
    /// per interval.
    pub fn evolve(&self, state: &GaussianState, t_grid: &[f64]) -> Result<Vec<GaussianState>> {
        if state.mean.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state has {} quadratures, system has {}",
                state.mean.len(),
                self.dim()
            )));
        }
        let mut prev = state.time;
        for (k, &t) in t_grid.iter().enumerate() {
            let ok = if k == 0 { t >= prev } else { t > prev };
            if !ok || !t.is_finite() {
                return Err(Error::InvalidParameter(
                    "time grid must be strictly increasing and start at or after the state time"
                        .into(),
                ));
            }
            prev = t;
        }
        let abscissa = self.spectral_abscissa()?;
        if abscissa > 1e-12 * self.frequency {
            return Err(Error::UnstableSystem(abscissa));
        }

        let vacuum = self.preserves_vacuum();
        let mut cache: HashMap<u64, Propagator> = HashMap::new();
        let mut out = Vec::with_capacity(t_grid.len());
        let mut current = state.clone();
        for &t in t_grid {
            let h = t - current.time;
            if h == 0.0 {
                current.time = t;
                out.push(current.clone());
                continue;
            }
            // Uniform grids reuse one propagator; key on a rounded step.
            let key = (h * 1e9).round().to_bits() ^ h.to_bits().rotate_left(7);
            let p = cache.entry(key).or_insert_with(|| self.propagator(h));
            current = self.step(p, &current, t, vacuum);
            out.push(current.clone());
        }
        Ok(out)
    }

    /// Fixed point of the moment equations: `A m + f = 0` and
    /// `AΣ + ΣAᵀ + D = 0`.
    pub fn steady_state(&self) -> Result<GaussianState> {
        let abscissa = self.spectral_abscissa()?;
        if abscissa > 1e-12 * self.frequency {
            return Err(Error::UnstableSystem(abscissa));
        }
        if abscissa > -1e-12 * self.frequency {
            return Err(Error::SingularDrift(abscissa));
        }
        let mean = self
            .drift
            .clone()
            .lu()
            .solve(&(-&self.drive))
            .ok_or(Error::SingularDrift(abscissa))?;
        let cov = if self.preserves_vacuum() {
            DMatrix::identity(self.dim(), self.dim()) * 0.5
        } else {
            solve_continuous_lyapunov(&self.drift, &self.diffusion)?
        };
        Ok(GaussianState {
            mean,
            cov,
            time: f64::INFINITY,
        })
    }

    /// Smallest time after which the terminal-mode energy stays at or above
    /// `threshold` times its steady value, starting from the ground state.
    ///
    /// Uniform grids over a horizon of 40 slowest e-folding times are refined
    /// by doubling until the crossing time moves by less than 1%.
    pub fn relaxation_time(&self, threshold: f64) -> Result<f64> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "threshold must lie in (0, 1), got {threshold}"
            )));
        }
        let terminal = self.n_modes - 1;
        let steady = self.steady_state()?;
        let target = threshold * steady.occupation(terminal);
        let rate = self.slowest_rate()?;
        let horizon = 40.0 / rate;
        if !horizon.is_finite() || horizon > 1e7 / self.frequency {
            return Err(Error::NotConverged(format!(
                "relaxation horizon {horizon:e} exceeds 1e7/omega"
            )));
        }
        let start = GaussianState::ground(self.n_modes);
        let crossing = |points: usize| -> Result<f64> {
            let h = horizon / points as f64;
            let grid: Vec<f64> = (1..=points).map(|k| k as f64 * h).collect();
            let traj = self.evolve(&start, &grid)?;
            let energies: Vec<f64> = std::iter::once(start.occupation(terminal))
                .chain(traj.iter().map(|s| s.occupation(terminal)))
                .collect();
            match energies.iter().rposition(|&e| e < target) {
                None => Ok(0.0),
                Some(k) if k + 1 >= energies.len() => Err(Error::NotConverged(
                    "terminal energy below threshold at the horizon".into(),
                )),
                Some(k) => {
                    let (e0, e1) = (energies[k], energies[k + 1]);
                    let frac = if e1 > e0 { (target - e0) / (e1 - e0) } else { 1.0 };
                    Ok((k as f64 + frac.clamp(0.0, 1.0)) * h)
                }
            }
        };
        let mut points = 512;
        let mut prev = crossing(points)?;
        while points < 1 << 17 {
            points *= 2;
            let next = crossing(points)?;
            if (next - prev).abs() <= 0.01 * next.abs().max(f64::MIN_POSITIVE) {
                return Ok(next);
            }
            prev = next;
        }
        Err(Error::NotConverged(
            "relaxation time did not stabilize under grid refinement".into(),
        ))
    }
}

/// Convenience: steady state of a network in a bath.
pub fn steady_state(spec: &NetworkSpec, bath: Reservoir) -> Result<GaussianState> {
    assemble(spec, bath).steady_state()
}
