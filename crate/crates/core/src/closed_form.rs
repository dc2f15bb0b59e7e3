//! Closed-form energies, scaling laws and optimal couplings for
//! unidirectional networks, plus the reciprocal star steady state.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::network::{NetworkSpec, Reciprocity, TopologyKind};
use crate::{Error, Result};

/// Minimum pairwise separation of rates, relative to the largest rate.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Largest `Λ t/2` for which the early-time series is attempted.
const SERIES_MAX_ARG: f64 = 40.0;
const SERIES_MAX_TERMS: usize = 400;

/// Products above this many factors are accumulated as logarithms.
const LOG_SPACE_THRESHOLD: usize = 8;

/// Exponential-sum kernel for the transient energy of mode `n` in a
/// unidirectional chain with rates `Λ_0..Λ_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct VandermondeKernel {
    pub lambda: Vec<f64>,
    /// Steady-state energy `𝒜_n`.
    pub prefactor: f64,
    /// `𝒱_n = ∏_{m<j} (Λ_m - Λ_j)`.
    pub v: f64,
    /// `𝒱_n^{(p)}`: the same product with index `p` removed.
    pub v_p: Vec<f64>,
    /// Weights `c_p` of `e^{-Λ_p t/2}` after dividing the bracket by `𝒱_n`.
    weights: Vec<f64>,
}

impl VandermondeKernel {
    pub fn new(lambda: &[f64], prefactor: f64) -> Result<Self> {
        let n = lambda.len();
        let scale = lambda.iter().cloned().fold(0.0, f64::max);
        for m in 0..n {
            if lambda[m] == 0.0 {
                return Err(Error::ZeroRate(m));
            }
            for j in (m + 1)..n {
                if (lambda[m] - lambda[j]).abs() < DEGENERACY_TOL * scale {
                    return Err(Error::DegenerateRates(m, j));
                }
            }
        }
        let pair_product = |skip: Option<usize>| -> f64 {
            let mut v = 1.0;
            for m in 0..n {
                for j in (m + 1)..n {
                    if Some(m) != skip && Some(j) != skip {
                        v *= lambda[m] - lambda[j];
                    }
                }
            }
            v
        };
        let v = pair_product(None);
        let v_p = (0..n).map(|p| pair_product(Some(p))).collect();
        let last = n - 1;
        let weights = (0..n)
            .map(|p| {
                let mut w = if (last + p + 1).is_multiple_of(2) { 1.0 } else { -1.0 };
                for m in 0..n {
                    if m == p {
                        continue;
                    }
                    w *= lambda[m];
                    w /= if m < p {
                        lambda[m] - lambda[p]
                    } else {
                        lambda[p] - lambda[m]
                    };
                }
                w
            })
            .collect();
        Ok(Self {
            lambda: lambda.to_vec(),
            prefactor,
            v,
            v_p,
            weights,
        })
    }

    /// `𝒜_n [1 + Σ_p c_p e^{-Λ_p t/2}]²`, which equals
    /// `(𝒜_n/𝒱_n²)[𝒱_n + Σ_p (-1)^{n+p+1} (∏_{m≠p} Λ_m) 𝒱_n^{(p)} e^{-Λ_p t/2}]²`.
    ///
    /// The bracket is the distribution function of a sum of exponential
    /// waiting times with rates `Λ_p/2`. At early times the exponential sum
    /// cancels badly for close rates, so its power series is used instead
    /// whenever that has the smaller rounding bound.
    pub fn energy(&self, t: f64) -> f64 {
        let (direct, direct_err) = self.bracket_exponential(t);
        let bracket = match self.bracket_series(t) {
            Some((series, series_err)) if series_err < direct_err => series,
            _ => direct,
        };
        self.prefactor * bracket * bracket
    }

    fn bracket_exponential(&self, t: f64) -> (f64, f64) {
        let terms = self.weights.iter().zip(&self.lambda).map(|(w, l)| w * (-l * t / 2.0).exp());
        let (sum, mag) = terms.fold((1.0, 1.0), |(s, m), x| (s + x, m + x.abs()));
        (sum, f64::EPSILON * mag)
    }

    /// `∏x · Σ_j (-1)^j h_j(x) / (L+j)!` with `x_p = Λ_p t/2`, `L` rates and
    /// `h_j` the complete homogeneous symmetric polynomials.
    fn bracket_series(&self, t: f64) -> Option<(f64, f64)> {
        let x: Vec<f64> = self.lambda.iter().map(|l| l * t / 2.0).collect();
        if x.iter().any(|&v| v > SERIES_MAX_ARG) {
            return None;
        }
        let len = x.len();
        let mut q = vec![1.0 / (1..=len).map(|k| k as f64).product::<f64>(); len];
        let (mut sum, mut mag) = (q[len - 1], q[len - 1]);
        for j in 1..SERIES_MAX_TERMS {
            let div = (len + j) as f64;
            let mut prev = 0.0;
            for (qm, xm) in q.iter_mut().zip(&x) {
                *qm = prev + xm * *qm / div;
                prev = *qm;
            }
            let term = q[len - 1];
            sum += if j % 2 == 0 { term } else { -term };
            mag += term;
            if term <= 1e-18 * sum.abs() {
                let scale: f64 = x.iter().product();
                return Some((scale * sum, f64::EPSILON * scale * mag));
            }
        }
        None
    }

    /// The same bracket evaluated literally from `𝒱_n` and `𝒱_n^{(p)}`.
    pub fn energy_from_products(&self, t: f64) -> f64 {
        let n = self.lambda.len() - 1;
        let mut bracket = self.v;
        for p in 0..=n {
            let sign = if (n + p + 1).is_multiple_of(2) { 1.0 } else { -1.0 };
            let others: f64 = (0..=n).filter(|&m| m != p).map(|m| self.lambda[m]).product();
            bracket += sign * others * self.v_p[p] * (-self.lambda[p] * t / 2.0).exp();
        }
        self.prefactor / (self.v * self.v) * bracket * bracket
    }
}

fn require(spec: &NetworkSpec, kind: TopologyKind, n: usize) -> Result<()> {
    if spec.topology.kind != kind {
        return Err(Error::UnsupportedSpec(format!(
            "expected a {kind} network, got {}",
            spec.topology.kind
        )));
    }
    if spec.check_nonreciprocity() != Reciprocity::Nonreciprocal {
        return Err(Error::UnsupportedSpec(
            "closed forms require unidirectional couplings on every link".into(),
        ));
    }
    if n >= spec.n_modes() {
        return Err(Error::InvalidParameter(format!(
            "mode {n} out of range for {} modes",
            spec.n_modes()
        )));
    }
    Ok(())
}

/// `4^{n+1} ω ε² ∏_{m=1}^{n} |μ_m|² Γ_m² / ∏_{m=0}^{n} Λ_m²`.
fn cascaded_prefactor(spec: &NetworkSpec, n: usize) -> Result<f64> {
    let rates = spec.effective_rates();
    if let Some(m) = (0..=n).find(|&m| rates.lambda[m] == 0.0) {
        return Err(Error::ZeroRate(m));
    }
    let w = spec.frequency;
    let eps = spec.drive;
    let num = |m: usize| rates.mu[m - 1].norm() * spec.coupling.coop_rates[m - 1];
    if n <= LOG_SPACE_THRESHOLD {
        let mut e = 4f64.powi(n as i32 + 1) * w * eps * eps;
        for m in 1..=n {
            e *= num(m).powi(2);
        }
        for m in 0..=n {
            e /= rates.lambda[m].powi(2);
        }
        Ok(e)
    } else {
        let mut log_e = (n as f64 + 1.0) * 4f64.ln() + w.ln() + 2.0 * eps.ln();
        for m in 1..=n {
            log_e += 2.0 * num(m).ln();
        }
        for m in 0..=n {
            log_e -= 2.0 * rates.lambda[m].ln();
        }
        Ok(log_e.exp())
    }
}

/// Transient energy of mode `n` (0 = charger) in a unidirectional chain
/// started from the ground state.
pub fn energy_cascaded_t(spec: &NetworkSpec, n: usize, t: f64) -> Result<f64> {
    require(spec, TopologyKind::Cascaded, n)?;
    let prefactor = cascaded_prefactor(spec, n)?;
    let rates = spec.effective_rates();
    VandermondeKernel::new(&rates.lambda[..=n], prefactor).map(|k| k.energy(t))
}

/// Steady-state energy of mode `n` in a unidirectional chain.
pub fn energy_cascaded_ss(spec: &NetworkSpec, n: usize) -> Result<f64> {
    require(spec, TopologyKind::Cascaded, n)?;
    cascaded_prefactor(spec, n)
}

/// Terminal energy of a uniform unidirectional chain of `n` batteries.
pub fn terminal_scaling_cascaded(n: usize, gamma: f64, kappa: f64, eps: f64, omega: f64) -> f64 {
    if n <= LOG_SPACE_THRESHOLD {
        4f64.powi(n as i32 + 1) * omega * eps * eps * gamma.powi(2 * n as i32)
            / ((gamma + kappa).powi(4) * (2.0 * gamma + kappa).powi(2 * n as i32 - 2))
    } else {
        let nf = n as f64;
        let log_e = (nf + 1.0) * 4f64.ln() + omega.ln() + 2.0 * eps.ln() + 2.0 * nf * gamma.ln()
            - 4.0 * (gamma + kappa).ln()
            - (2.0 * nf - 2.0) * (2.0 * gamma + kappa).ln();
        log_e.exp()
    }
}

/// Per-battery energy of a uniform unidirectional star of `n` batteries.
pub fn terminal_scaling_parallel(n: usize, gamma: f64, kappa: f64, eps: f64, omega: f64) -> f64 {
    16.0 * omega * eps * eps * gamma * gamma
        / ((n as f64 * gamma + kappa).powi(2) * (gamma + kappa).powi(2))
}

/// Transient energy of mode `n` in a unidirectional star. The charger
/// (`n = 0`) follows a single exponential; a battery follows two.
pub fn energy_parallel_t(spec: &NetworkSpec, n: usize, t: f64) -> Result<f64> {
    require(spec, TopologyKind::Parallel, n)?;
    let rates = spec.effective_rates();
    let l0 = rates.lambda[0];
    if l0 == 0.0 {
        return Err(Error::ZeroRate(0));
    }
    let w = spec.frequency;
    let eps = spec.drive;
    if n == 0 {
        let s = 1.0 - (-l0 * t / 2.0).exp();
        return Ok(4.0 * w * eps * eps * s * s / (l0 * l0));
    }
    let ln = rates.lambda[n];
    if ln == 0.0 {
        return Err(Error::ZeroRate(n));
    }
    if (l0 - ln).abs() < DEGENERACY_TOL * l0.max(ln) {
        return Err(Error::DegenerateRates(0, n));
    }
    let g = spec.coupling.coop_rates[n - 1];
    let mu = rates.mu[n - 1].norm_sqr();
    let bracket = (l0 - ln) - (l0 * (-ln * t / 2.0).exp() - ln * (-l0 * t / 2.0).exp());
    Ok(16.0 * w * eps * eps * mu * g * g / (l0 * l0 * ln * ln * (l0 - ln).powi(2)) * bracket * bracket)
}

/// Steady-state energy of mode `n` in a unidirectional star:
/// `16 ω ε² |μ_n|² Γ_n² / (Λ_0² Λ_n²)` for a battery.
pub fn energy_parallel_ss(spec: &NetworkSpec, n: usize) -> Result<f64> {
    require(spec, TopologyKind::Parallel, n)?;
    let rates = spec.effective_rates();
    let l0 = rates.lambda[0];
    if l0 == 0.0 {
        return Err(Error::ZeroRate(0));
    }
    let w = spec.frequency;
    let eps = spec.drive;
    if n == 0 {
        return Ok(4.0 * w * eps * eps / (l0 * l0));
    }
    let ln = rates.lambda[n];
    if ln == 0.0 {
        return Err(Error::ZeroRate(n));
    }
    let g = spec.coupling.coop_rates[n - 1];
    Ok(16.0 * w * eps * eps * rates.mu[n - 1].norm_sqr() * g * g / (l0 * l0 * ln * ln))
}

/// Coupling `J` (with `Γ = 2J`) maximizing the steady terminal energy.
pub fn optimal_coupling(kind: TopologyKind, n: usize, kappa: f64) -> f64 {
    let nf = n as f64;
    match kind {
        TopologyKind::Cascaded => kappa / 8.0 * (nf + (nf * nf + 8.0 * nf).sqrt()),
        TopologyKind::Parallel => kappa / (2.0 * nf.sqrt()),
    }
}

/// Steady energy of any star battery under purely coherent coupling `J`:
/// `4Γ² ω ε² / (4NJ² + κ²)²` with `Γ = 2J`.
pub fn reciprocal_parallel_ss(n: usize, j: f64, kappa: f64, eps: f64, omega: f64) -> f64 {
    let gamma = 2.0 * j;
    4.0 * gamma * gamma * omega * eps * eps / (4.0 * n as f64 * j * j + kappa * kappa).powi(2)
}

/// Steady terminal energy from the first-moment linear solve `A v = -f`.
pub fn terminal_energy_linear(spec: &NetworkSpec) -> Result<f64> {
    let (a, f) = spec.drift_matrix();
    let v: DVector<Complex64> = a
        .lu()
        .solve(&(-f))
        .ok_or(Error::SingularDrift(0.0))?;
    Ok(spec.frequency * v[spec.topology.terminal()].norm_sqr())
}

/// Golden-section search of the steady terminal energy over `J ∈ (lo, hi]`
/// for a uniform unidirectional network (`Γ = 2J`), seeded by a coarse grid.
pub fn scan_optimal_coupling(
    kind: TopologyKind,
    n: usize,
    kappa: f64,
    eps: f64,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    let energy = |j: f64| -> Result<f64> {
        let spec = NetworkSpec::nonreciprocal(kind, n, j, kappa, eps, 1.0)?;
        terminal_energy_linear(&spec)
    };
    let grid = 200;
    let step = (hi - lo) / grid as f64;
    let mut best = (lo + step, f64::NEG_INFINITY);
    for k in 1..=grid {
        let j = lo + k as f64 * step;
        let e = energy(j)?;
        if e > best.1 {
            best = (j, e);
        }
    }
    let (mut a, mut b) = ((best.0 - step).max(lo + 1e-3 * step), (best.0 + step).min(hi));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (energy(c)?, energy(d)?);
    while (b - a) > 1e-9 * b.abs() {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = energy(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = energy(d)?;
        }
    }
    Ok(0.5 * (a + b))
}
