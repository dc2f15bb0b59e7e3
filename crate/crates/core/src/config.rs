//! JSON configuration documents describing a network.
//!
//! ```json
//! {"topology": "cascaded", "n": 2, "J": 0.0015, "theta": 1.5707963267948966,
//!  "gamma": 0.003, "kappa_a": 0.003, "kappa_b": 0.003, "epsilon": 0.01,
//!  "omega": 1.0, "p_coeffs": [[1, 0], [1, 0], [1, 0]]}
//! ```
//!
//! `J`, `theta`, `gamma` and `kappa_b` accept a scalar (broadcast) or one
//! value per link/battery. `p_coeffs` accepts `[re, im]` pairs or plain reals
//! and defaults to all ones.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::moments::Reservoir;
use crate::network::{CouplingSpec, LocalRates, NetworkSpec, Topology, TopologyKind};
use crate::{Error, Result};

/// Scalar or per-element list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Broadcast {
    Scalar(f64),
    List(Vec<f64>),
}

impl Broadcast {
    fn expand(&self, name: &str, n: usize) -> Result<Vec<f64>> {
        match self {
            Broadcast::Scalar(x) => Ok(vec![*x; n]),
            Broadcast::List(v) if v.len() == n => Ok(v.clone()),
            Broadcast::List(v) => Err(Error::DimensionMismatch(format!(
                "{name} has {} entries, expected {n}",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PCoeff {
    Real(f64),
    Complex([f64; 2]),
}

impl PCoeff {
    fn value(&self) -> Complex64 {
        match *self {
            PCoeff::Real(x) => Complex64::new(x, 0.0),
            PCoeff::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

fn default_omega() -> f64 {
    1.0
}

fn default_zero() -> Broadcast {
    Broadcast::Scalar(0.0)
}

/// Raw network configuration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub topology: String,
    pub n: usize,
    #[serde(rename = "J")]
    pub j: Broadcast,
    #[serde(default = "default_zero")]
    pub theta: Broadcast,
    #[serde(default = "default_zero")]
    pub gamma: Broadcast,
    pub kappa_a: f64,
    pub kappa_b: Broadcast,
    pub epsilon: f64,
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default)]
    pub p_coeffs: Option<Vec<PCoeff>>,
    #[serde(default)]
    pub bath: Option<Reservoir>,
}

impl NetworkConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_spec(&self) -> Result<NetworkSpec> {
        let kind: TopologyKind = self.topology.parse()?;
        let topology = Topology::new(kind, self.n)?;
        let links = self.n;
        let p_coeffs = match &self.p_coeffs {
            None => vec![Complex64::new(1.0, 0.0); self.n + 1],
            Some(v) => v.iter().map(PCoeff::value).collect(),
        };
        let coupling = CouplingSpec {
            amplitudes: self.j.expand("J", links)?,
            phases: self.theta.expand("theta", links)?,
            coop_rates: self.gamma.expand("gamma", links)?,
            p_coeffs,
        };
        let local = LocalRates {
            charger: self.kappa_a,
            batteries: self.kappa_b.expand("kappa_b", self.n)?,
        };
        NetworkSpec::new(topology, coupling, local, self.epsilon, self.omega)
    }

    pub fn reservoir(&self) -> Reservoir {
        self.bath.unwrap_or(Reservoir::Vacuum).normalized()
    }

    /// Document equivalent to a spec, with every list written out.
    pub fn from_spec(spec: &NetworkSpec, bath: Reservoir) -> Self {
        let c = &spec.coupling;
        Self {
            topology: spec.topology.kind.to_string(),
            n: spec.topology.n_batteries,
            j: Broadcast::List(c.amplitudes.clone()),
            theta: Broadcast::List(c.phases.clone()),
            gamma: Broadcast::List(c.coop_rates.clone()),
            kappa_a: spec.local.charger,
            kappa_b: Broadcast::List(spec.local.batteries.clone()),
            epsilon: spec.drive,
            omega: spec.frequency,
            p_coeffs: Some(c.p_coeffs.iter().map(|p| PCoeff::Complex([p.re, p.im])).collect()),
            bath: Some(bath),
        }
    }
}

/// Hex SHA-256 of the canonical JSON form of a spec and bath.
pub fn spec_hash(spec: &NetworkSpec, bath: Reservoir) -> String {
    use sha2::{Digest, Sha256};
    let doc = NetworkConfig::from_spec(spec, bath.normalized());
    let text = serde_json::to_string(&doc).expect("config serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}
