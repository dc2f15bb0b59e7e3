//! Simulation and analysis of driven bosonic quantum battery networks.
//!
//! A charger mode, driven coherently, feeds `N` battery modes arranged either
//! as a cascaded chain or as a parallel star. Links may be reciprocal (coherent
//! hopping only) or nonreciprocal (hopping balanced against cooperative
//! dissipation through a shared reservoir).
//!
//! Engines:
//! - [`moments`]: exact Gaussian engine (first moments + quadrature covariance).
//! - [`closed_form`]: analytic energies, scaling laws and optimal couplings.
//! - [`spectral`]: tight-binding Green functions and the parity analysis.
//! - [`fock`]: truncated Fock-space Lindblad integrator used as an oracle.
//!
//! Mode ordering is `(charger, b_1, ..., b_N)` everywhere.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

// Links the system OpenBLAS that provides the LAPACK symbols.
extern crate openblas_src;

pub mod closed_form;
pub mod config;
pub mod energetics;
mod error;
pub mod experiments;
pub mod fock;
pub mod linalg;
pub mod moments;
pub mod network;
pub mod spectral;

pub use error::{Error, Result};
pub use network::{NetworkSpec, Reciprocity, Topology, TopologyKind};
pub use moments::{GaussianState, QuadratureSystem, Reservoir};
pub use energetics::EnergyReport;

pub use num_complex::Complex64;
