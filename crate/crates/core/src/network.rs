//! Network topologies, physical parameters and the first-moment drift matrix.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const UNIT_MODULUS_TOL: f64 = 1e-12;
const NONRECIPROCITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyKind {
    Cascaded,
    Parallel,
}

impl std::fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TopologyKind::Cascaded => write!(f, "cascaded"),
            TopologyKind::Parallel => write!(f, "parallel"),
        }
    }
}

impl std::str::FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cascaded" | "cascade" | "c" => Ok(TopologyKind::Cascaded),
            "parallel" | "p" => Ok(TopologyKind::Parallel),
            other => Err(Error::Config(format!("unknown topology '{other}'"))),
        }
    }
}

/// Connection pattern of the charger and `N` batteries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Topology {
    pub kind: TopologyKind,
    pub n_batteries: usize,
}

impl Topology {
    pub fn new(kind: TopologyKind, n_batteries: usize) -> Result<Self> {
        if n_batteries == 0 {
            return Err(Error::InvalidParameter(
                "a network needs at least one battery".into(),
            ));
        }
        Ok(Self { kind, n_batteries })
    }

    pub fn cascaded(n: usize) -> Result<Self> {
        Self::new(TopologyKind::Cascaded, n)
    }

    pub fn parallel(n: usize) -> Result<Self> {
        Self::new(TopologyKind::Parallel, n)
    }

    /// Charger plus batteries.
    pub fn n_modes(&self) -> usize {
        self.n_batteries + 1
    }

    /// Index of the terminal battery (last mode).
    pub fn terminal(&self) -> usize {
        self.n_batteries
    }

    /// `(upstream, downstream)` mode pairs, one per link. Link `l` carries
    /// `J_{l+1}`, `theta_{l+1}` and `Gamma_{l+1}`.
    pub fn links(&self) -> Vec<(usize, usize)> {
        match self.kind {
            TopologyKind::Cascaded => (0..self.n_batteries).map(|i| (i, i + 1)).collect(),
            TopologyKind::Parallel => (1..=self.n_batteries).map(|i| (0, i)).collect(),
        }
    }
}

/// Coherent and dissipative link parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec {
    /// Hopping amplitudes `J_i`, one per link.
    pub amplitudes: Vec<f64>,
    /// Hopping phases `theta_i` in radians, one per link.
    pub phases: Vec<f64>,
    /// Cooperative dissipation rates `Gamma_i`, one per link.
    pub coop_rates: Vec<f64>,
    /// Unit-modulus weights `(p_a, p_b1, ..., p_bN)` of the collective jump operators.
    pub p_coeffs: Vec<Complex64>,
}

impl CouplingSpec {
    /// Same `J`, `theta`, `Gamma` on every link and `p = 1` on every mode.
    pub fn uniform(topology: &Topology, j: f64, theta: f64, gamma: f64) -> Self {
        let n = topology.n_batteries;
        Self {
            amplitudes: vec![j; n],
            phases: vec![theta; n],
            coop_rates: vec![gamma; n],
            p_coeffs: vec![Complex64::new(1.0, 0.0); topology.n_modes()],
        }
    }
}

/// Local damping rates of every mode into independent baths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalRates {
    pub charger: f64,
    pub batteries: Vec<f64>,
}

impl LocalRates {
    pub fn uniform(topology: &Topology, kappa: f64) -> Self {
        Self {
            charger: kappa,
            batteries: vec![kappa; topology.n_batteries],
        }
    }
}

/// Effective damping `Lambda_m` per mode and link phase factors `mu_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveRates {
    pub lambda: Vec<f64>,
    pub mu: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reciprocity {
    Nonreciprocal,
    Reciprocal,
    Mixed,
}

/// Complete, validated description of a battery network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub topology: Topology,
    pub coupling: CouplingSpec,
    pub local: LocalRates,
    /// Coherent drive amplitude on the charger.
    pub drive: f64,
    /// Common mode frequency.
    pub frequency: f64,
}

impl NetworkSpec {
    pub fn new(
        topology: Topology,
        coupling: CouplingSpec,
        local: LocalRates,
        drive: f64,
        frequency: f64,
    ) -> Result<Self> {
        let spec = Self {
            topology,
            coupling,
            local,
            drive,
            frequency,
        };
        spec.validate()?;
        if spec.topology.kind == TopologyKind::Parallel {
            let conj = spec.effective_rates().mu;
            let plain = spec.mu_unconjugated();
            if conj.iter().zip(&plain).any(|(a, b)| (a - b).norm() > UNIT_MODULUS_TOL) {
                log::warn!("link phases of the star differ between the conjugated and plain conventions; using p_a* p_b");
            }
        }
        Ok(spec)
    }

    /// Uniform parameters on every link and mode.
    #[allow(clippy::too_many_arguments)]
    pub fn uniform(
        kind: TopologyKind,
        n: usize,
        j: f64,
        theta: f64,
        gamma: f64,
        kappa: f64,
        drive: f64,
        frequency: f64,
    ) -> Result<Self> {
        let topology = Topology::new(kind, n)?;
        let coupling = CouplingSpec::uniform(&topology, j, theta, gamma);
        let local = LocalRates::uniform(&topology, kappa);
        Self::new(topology, coupling, local, drive, frequency)
    }

    /// Unidirectional links: `theta = pi/2`, `p = 1`, `Gamma = 2J`.
    pub fn nonreciprocal(
        kind: TopologyKind,
        n: usize,
        j: f64,
        kappa: f64,
        drive: f64,
        frequency: f64,
    ) -> Result<Self> {
        Self::uniform(kind, n, j, FRAC_PI_2, 2.0 * j, kappa, drive, frequency)
    }

    /// Purely coherent real hopping `J` with no cooperative dissipation.
    pub fn reciprocal(
        kind: TopologyKind,
        n: usize,
        j: f64,
        kappa: f64,
        drive: f64,
        frequency: f64,
    ) -> Result<Self> {
        Self::uniform(kind, n, j, 0.0, 0.0, kappa, drive, frequency)
    }

    pub fn n_modes(&self) -> usize {
        self.topology.n_modes()
    }

    pub fn validate(&self) -> Result<()> {
        let n_links = self.topology.n_batteries;
        let c = &self.coupling;
        for (name, len) in [
            ("J", c.amplitudes.len()),
            ("theta", c.phases.len()),
            ("gamma", c.coop_rates.len()),
            ("kappa_b", self.local.batteries.len()),
        ] {
            if len != n_links {
                return Err(Error::DimensionMismatch(format!(
                    "{name} has {len} entries, expected {n_links}"
                )));
            }
        }
        if c.p_coeffs.len() != self.n_modes() {
            return Err(Error::DimensionMismatch(format!(
                "p_coeffs has {} entries, expected {}",
                c.p_coeffs.len(),
                self.n_modes()
            )));
        }
        let all_finite = c
            .amplitudes
            .iter()
            .chain(&c.phases)
            .chain(&c.coop_rates)
            .chain(&self.local.batteries)
            .chain([&self.local.charger, &self.drive, &self.frequency])
            .all(|x| x.is_finite());
        if !all_finite {
            return Err(Error::InvalidParameter("non-finite parameter".into()));
        }
        for (i, &g) in c.coop_rates.iter().enumerate() {
            if g < 0.0 {
                return Err(Error::NegativeRate(format!("gamma[{i}] = {g}")));
            }
        }
        for (i, &j) in c.amplitudes.iter().enumerate() {
            if j < 0.0 {
                return Err(Error::NegativeRate(format!("J[{i}] = {j}")));
            }
        }
        if self.local.charger < 0.0 {
            return Err(Error::NegativeRate(format!(
                "kappa_a = {}",
                self.local.charger
            )));
        }
        for (i, &k) in self.local.batteries.iter().enumerate() {
            if k < 0.0 {
                return Err(Error::NegativeRate(format!("kappa_b[{i}] = {k}")));
            }
        }
        if self.drive < 0.0 {
            return Err(Error::NegativeRate(format!("epsilon = {}", self.drive)));
        }
        if self.frequency <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "frequency must be positive, got {}",
                self.frequency
            )));
        }
        for (index, p) in c.p_coeffs.iter().enumerate() {
            let modulus = p.norm();
            if (modulus - 1.0).abs() > UNIT_MODULUS_TOL {
                return Err(Error::NonUnitPCoefficient { index, modulus });
            }
        }
        Ok(())
    }

    /// Local damping rate of mode `m` (0 = charger).
    pub fn kappa(&self, m: usize) -> f64 {
        if m == 0 {
            self.local.charger
        } else {
            self.local.batteries[m - 1]
        }
    }

    /// `Lambda_m` and `mu_i` following the first-moment equations.
    pub fn effective_rates(&self) -> EffectiveRates {
        let p = &self.coupling.p_coeffs;
        let mut lambda: Vec<f64> = (0..self.n_modes()).map(|m| self.kappa(m)).collect();
        let mut mu = Vec::with_capacity(self.topology.n_batteries);
        for (l, (u, d)) in self.topology.links().into_iter().enumerate() {
            let g = self.coupling.coop_rates[l];
            lambda[u] += g * p[u].norm_sqr();
            lambda[d] += g * p[d].norm_sqr();
            mu.push(p[u].conj() * p[d]);
        }
        EffectiveRates { lambda, mu }
    }

    /// Link phase factors in the `p_a p_b` (unconjugated) form used for the
    /// parallel star in some references. Only the phase differs from
    /// [`EffectiveRates::mu`]; moduli agree.
    pub fn mu_unconjugated(&self) -> Vec<Complex64> {
        let p = &self.coupling.p_coeffs;
        self.topology
            .links()
            .into_iter()
            .map(|(u, d)| p[u] * p[d])
            .collect()
    }

    /// Classify the couplings as unidirectional, purely coherent, or neither.
    pub fn check_nonreciprocity(&self) -> Reciprocity {
        let c = &self.coupling;
        if c.coop_rates.iter().all(|&g| g == 0.0) {
            return Reciprocity::Reciprocal;
        }
        let mu = self.effective_rates().mu;
        let close = |a: f64, b: f64| (a - b).abs() <= NONRECIPROCITY_TOL * a.abs().max(b.abs());
        let unit_close = |a: Complex64, b: Complex64| (a - b).norm() <= NONRECIPROCITY_TOL;
        let all = (0..self.topology.n_batteries).all(|l| {
            let g = c.coop_rates[l];
            if g <= 0.0 || !close(c.amplitudes[l], g / 2.0) {
                return false;
            }
            let phase = Complex64::from_polar(1.0, c.phases[l]);
            let first = unit_close(phase, Complex64::i()) && unit_close(mu[l], Complex64::new(1.0, 0.0));
            let second = unit_close(phase, Complex64::new(1.0, 0.0)) && unit_close(mu[l], -Complex64::i());
            first || second
        });
        if all {
            Reciprocity::Nonreciprocal
        } else {
            Reciprocity::Mixed
        }
    }

    /// Complex drift matrix `A` and drive `f` with `d<v>/dt = A <v> + f`,
    /// `v = (a, b_1, ..., b_N)`.
    pub fn drift_matrix(&self) -> (DMatrix<Complex64>, DVector<Complex64>) {
        let m = self.n_modes();
        let rates = self.effective_rates();
        let i = Complex64::i();
        let mut a = DMatrix::<Complex64>::zeros(m, m);
        for k in 0..m {
            a[(k, k)] = Complex64::new(-rates.lambda[k] / 2.0, 0.0);
        }
        for (l, (u, d)) in self.topology.links().into_iter().enumerate() {
            let j = self.coupling.amplitudes[l];
            let th = self.coupling.phases[l];
            let g = self.coupling.coop_rates[l];
            let mu = rates.mu[l];
            a[(u, d)] -= i * j * Complex64::from_polar(1.0, th) + mu * g / 2.0;
            a[(d, u)] -= i * j * Complex64::from_polar(1.0, -th) + mu.conj() * g / 2.0;
        }
        let mut f = DVector::<Complex64>::zeros(m);
        f[0] = -i * self.drive;
        (a, f)
    }

    /// Real symmetric hopping matrix `H_0` of the coherent part, valid when
    /// every phase is zero.
    pub fn hopping_matrix(&self) -> DMatrix<f64> {
        let m = self.n_modes();
        let mut h = DMatrix::<f64>::zeros(m, m);
        for (l, (u, d)) in self.topology.links().into_iter().enumerate() {
            h[(u, d)] = self.coupling.amplitudes[l];
            h[(d, u)] = self.coupling.amplitudes[l];
        }
        h
    }

    /// Dissipation channels as coefficient vectors over annihilation operators:
    /// local `sqrt(kappa_m) a_m` first, then collective `q_i` per link.
    pub fn dissipation_channels(&self) -> Vec<Vec<Complex64>> {
        let m = self.n_modes();
        let p = &self.coupling.p_coeffs;
        let mut channels = Vec::with_capacity(m + self.topology.n_batteries);
        for k in 0..m {
            let rate = self.kappa(k);
            if rate > 0.0 {
                let mut v = vec![Complex64::new(0.0, 0.0); m];
                v[k] = Complex64::new(rate.sqrt(), 0.0);
                channels.push(v);
            }
        }
        for (l, (u, d)) in self.topology.links().into_iter().enumerate() {
            let g = self.coupling.coop_rates[l];
            if g > 0.0 {
                let mut v = vec![Complex64::new(0.0, 0.0); m];
                v[u] = p[u] * g.sqrt();
                v[d] = p[d] * g.sqrt();
                channels.push(v);
            }
        }
        channels
    }

    /// Copy with `J` replaced on every link; nonreciprocal networks keep `Gamma = 2J`.
    pub fn with_coupling(&self, j: f64) -> Result<Self> {
        let mut out = self.clone();
        let nonrec = self.check_nonreciprocity() == Reciprocity::Nonreciprocal;
        for l in 0..self.topology.n_batteries {
            out.coupling.amplitudes[l] = j;
            if nonrec {
                out.coupling.coop_rates[l] = 2.0 * j;
            }
        }
        out.validate()?;
        Ok(out)
    }

    /// Copy with a different battery count, reusing the first link's
    /// parameters and the first battery's damping.
    pub fn with_batteries(&self, n: usize) -> Result<Self> {
        let topology = Topology::new(self.topology.kind, n)?;
        let c = &self.coupling;
        let coupling = CouplingSpec {
            amplitudes: vec![c.amplitudes[0]; n],
            phases: vec![c.phases[0]; n],
            coop_rates: vec![c.coop_rates[0]; n],
            p_coeffs: {
                let mut p = vec![c.p_coeffs[0]];
                p.extend(std::iter::repeat_n(c.p_coeffs[1], n));
                p
            },
        };
        let local = LocalRates {
            charger: self.local.charger,
            batteries: vec![self.local.batteries[0]; n],
        };
        Self::new(topology, coupling, local, self.drive, self.frequency)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const K: f64 = 0.003;
    const EPS: f64 = 0.01;

    #[test]
    fn cascaded_two_battery_rates() {
        let g = 0.004;
        let spec = NetworkSpec::nonreciprocal(TopologyKind::Cascaded, 2, g / 2.0, K, EPS, 1.0).unwrap();
        let r = spec.effective_rates();
        let expected = [g + K, 2.0 * g + K, g + K];
        for (a, b) in r.lambda.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn parallel_charger_collects_every_link() {
        let g = 0.002;
        let spec = NetworkSpec::nonreciprocal(TopologyKind::Parallel, 3, g / 2.0, K, EPS, 1.0).unwrap();
        let r = spec.effective_rates();
        assert!((r.lambda[0] - (3.0 * g + K)).abs() < 1e-15);
        for m in 1..4 {
            assert!((r.lambda[m] - (g + K)).abs() < 1e-15);
        }
    }

    #[test]
    fn decoupled_limit() {
        let spec = NetworkSpec::uniform(TopologyKind::Cascaded, 3, 0.0, 0.0, 0.0, K, EPS, 1.0).unwrap();
        assert!(spec.effective_rates().lambda.iter().all(|&l| l == K));
        assert_eq!(spec.check_nonreciprocity(), Reciprocity::Reciprocal);
    }

    #[test]
    fn validation_errors() {
        let topo = Topology::cascaded(2).unwrap();
        let mut c = CouplingSpec::uniform(&topo, 0.1, 0.0, 0.0);
        c.amplitudes.pop();
        let err = NetworkSpec::new(topo, c, LocalRates::uniform(&topo, K), EPS, 1.0).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));

        let c = CouplingSpec::uniform(&topo, 0.1, 0.0, -1.0);
        let err = NetworkSpec::new(topo, c, LocalRates::uniform(&topo, K), EPS, 1.0).unwrap_err();
        assert!(matches!(err, Error::NegativeRate(_)));

        let mut c = CouplingSpec::uniform(&topo, 0.1, 0.0, 0.0);
        c.p_coeffs[1] = Complex64::new(1.1, 0.0);
        let err = NetworkSpec::new(topo, c, LocalRates::uniform(&topo, K), EPS, 1.0).unwrap_err();
        assert!(matches!(err, Error::NonUnitPCoefficient { index: 1, .. }));

        assert!(Topology::parallel(0).is_err());
        let err = NetworkSpec::reciprocal(TopologyKind::Parallel, 2, 0.1, K, EPS, 0.0).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn classification() {
        let nr = NetworkSpec::nonreciprocal(TopologyKind::Cascaded, 3, 0.002, K, EPS, 1.0).unwrap();
        assert_eq!(nr.check_nonreciprocity(), Reciprocity::Nonreciprocal);

        let rec = NetworkSpec::reciprocal(TopologyKind::Cascaded, 3, 0.002, K, EPS, 1.0).unwrap();
        assert_eq!(rec.check_nonreciprocity(), Reciprocity::Reciprocal);

        let mut mixed = nr.clone();
        mixed.coupling.amplitudes[0] = mixed.coupling.coop_rates[0];
        assert_eq!(mixed.check_nonreciprocity(), Reciprocity::Mixed);

        // theta = 0 pattern with p = (i, 1, -i, -1) gives mu = -i on every link.
        let mut second = nr.clone();
        second.coupling.phases = vec![0.0; 3];
        second.coupling.p_coeffs = vec![
            Complex64::i(),
            Complex64::new(1.0, 0.0),
            -Complex64::i(),
            Complex64::new(-1.0, 0.0),
        ];
        assert_eq!(second.check_nonreciprocity(), Reciprocity::Nonreciprocal);
    }

    #[test]
    fn nonreciprocal_drift_is_unidirectional() {
        let g = 0.005;
        let spec = NetworkSpec::nonreciprocal(TopologyKind::Cascaded, 2, g / 2.0, K, EPS, 1.0).unwrap();
        let (a, f) = spec.drift_matrix();
        assert!(a[(0, 1)].norm() < 1e-14);
        assert!(a[(1, 2)].norm() < 1e-14);
        assert!((a[(1, 0)] - Complex64::new(-g, 0.0)).norm() < 1e-15);
        assert!((a[(2, 1)] - Complex64::new(-g, 0.0)).norm() < 1e-15);
        assert!((f[0] - Complex64::new(0.0, -EPS)).norm() < 1e-16);
        let rates = spec.effective_rates();
        for m in 0..3 {
            assert_eq!(a[(m, m)].re, -rates.lambda[m] / 2.0);
        }
    }

    #[test]
    fn second_pattern_matches_moduli() {
        let g = 0.004;
        let first = NetworkSpec::nonreciprocal(TopologyKind::Parallel, 2, g / 2.0, K, EPS, 1.0).unwrap();
        let mut second = first.clone();
        second.coupling.phases = vec![0.0; 2];
        second.coupling.p_coeffs = vec![Complex64::i(), Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
        assert_eq!(second.check_nonreciprocity(), Reciprocity::Nonreciprocal);
        let (a1, _) = first.drift_matrix();
        let (a2, _) = second.drift_matrix();
        for (x, y) in a1.iter().zip(a2.iter()) {
            assert!((x.norm() - y.norm()).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_drive_gives_zero_vector() {
        let spec = NetworkSpec::nonreciprocal(TopologyKind::Cascaded, 2, 0.001, K, 0.0, 1.0).unwrap();
        assert!(spec.drift_matrix().1.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn reciprocal_drift_is_hopping_plus_damping() {
        let spec = NetworkSpec::reciprocal(TopologyKind::Parallel, 3, 0.002, K, EPS, 1.0).unwrap();
        let (a, _) = spec.drift_matrix();
        let h = spec.hopping_matrix();
        for r in 0..4 {
            for c in 0..4 {
                let expected = Complex64::new(if r == c { -K / 2.0 } else { 0.0 }, -h[(r, c)]);
                assert!((a[(r, c)] - expected).norm() < 1e-16);
            }
        }
    }

    #[test]
    fn link_phase_conjugation_convention() {
        let mut spec = NetworkSpec::nonreciprocal(TopologyKind::Parallel, 2, 0.001, K, EPS, 1.0).unwrap();
        spec.coupling.p_coeffs[0] = Complex64::i();
        let mu = spec.effective_rates().mu;
        let alt = spec.mu_unconjugated();
        assert!((mu[0] - (-Complex64::i())).norm() < 1e-15);
        for (a, b) in mu.iter().zip(&alt) {
            assert!((a.norm() - b.norm()).abs() < 1e-15);
        }
    }
}
