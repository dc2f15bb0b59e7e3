//! Truncated Fock-space Lindblad integrator and spectral ergotropy.
//!
//! The generator is assembled term by term from the master equations:
//! coherent hopping and drive, local damping `κ_m ℒ[a_m]`, collective
//! channels `ℒ[q_i]`, their thermal partners `ℒ[o†]`, and the squeezed-bath
//! cross terms `ℒ'[o]ρ = oρo - {oo, ρ}/2`. Density matrices are dense and
//! stored row-major; mode 0 (the charger) is the most significant digit of
//! the basis index.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::energetics::{EnergyReport, Engine};
use crate::moments::Reservoir;
use crate::network::NetworkSpec;
use crate::{Error, Result};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

/// Truncation and integrator settings.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FockConfig {
    /// Levels kept per mode, in mode order.
    pub dims: Vec<usize>,
    pub max_dim: usize,
    pub rtol: f64,
    pub atol: f64,
    /// Largest allowed population of the top kept level of any mode.
    pub tail_threshold: f64,
    pub positivity_slack: f64,
    /// Full Cholesky positivity checks are skipped above this dimension in
    /// favour of checks on every reduced single-mode state.
    pub full_positivity_max_dim: usize,
}

impl FockConfig {
    pub const DEFAULT_MAX_DIM: usize = 4096;

    pub fn uniform(d: usize, n_modes: usize) -> Self {
        Self::per_mode(vec![d; n_modes])
    }

    pub fn per_mode(dims: Vec<usize>) -> Self {
        Self {
            dims,
            max_dim: Self::DEFAULT_MAX_DIM,
            rtol: 1e-8,
            atol: 1e-12,
            tail_threshold: 1e-8,
            positivity_slack: 1e-7,
            full_positivity_max_dim: 1024,
        }
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.iter().any(|&d| d < 2) {
            return Err(Error::InvalidParameter("every truncation must be at least 2".into()));
        }
        let mut dim: usize = 1;
        for &d in &self.dims {
            dim = dim.saturating_mul(d);
        }
        if dim > self.max_dim {
            return Err(Error::DimensionOverflow {
                dim,
                cap: self.max_dim,
            });
        }
        Ok(())
    }
}

/// Sparse matrix in compressed-row form.
#[derive(Debug, Clone)]
struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C>,
}

impl Csr {
    fn from_rows(n: usize, mut rows: Vec<Vec<(usize, C)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows.iter_mut() {
            row.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut v = ZERO;
                while k < row.len() && row[k].0 == c {
                    v += row[k].1;
                    k += 1;
                }
                if v != ZERO {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    fn rows(&self) -> Vec<Vec<(usize, C)>> {
        (0..self.n)
            .map(|i| self.row(i).map(|(c, v)| (c, *v)).collect())
            .collect()
    }

    fn row(&self, i: usize) -> impl Iterator<Item = (usize, &C)> {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[a..b].iter().cloned().zip(&self.vals[a..b])
    }

    fn zeros(n: usize) -> Self {
        Self::from_rows(n, vec![Vec::new(); n])
    }

    fn scale(&self, s: C) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= s);
        out
    }

    fn add(&self, other: &Csr) -> Self {
        let mut rows = self.rows();
        for (i, r) in rows.iter_mut().enumerate() {
            r.extend(other.row(i).map(|(c, v)| (c, *v)));
        }
        Self::from_rows(self.n, rows)
    }

    fn mul(&self, other: &Csr) -> Self {
        let rows = (0..self.n)
            .map(|i| {
                let mut r = Vec::new();
                for (k, a) in self.row(i) {
                    r.extend(other.row(k).map(|(c, b)| (c, a * b)));
                }
                r
            })
            .collect();
        Self::from_rows(self.n, rows)
    }

    fn adjoint(&self) -> Self {
        let mut rows = vec![Vec::new(); self.n];
        for i in 0..self.n {
            for (c, v) in self.row(i) {
                rows[c].push((i, v.conj()));
            }
        }
        Self::from_rows(self.n, rows)
    }

    /// `out = self · rho` for row-major dense `rho`.
    fn left_mul_into(&self, rho: &[C], out: &mut [C]) {
        let n = self.n;
        for i in 0..n {
            let dst = &mut out[i * n..(i + 1) * n];
            let mut entries = self.row(i);
            match entries.next() {
                None => dst.iter_mut().for_each(|d| *d = ZERO),
                Some((k, &v)) => {
                    for (d, x) in dst.iter_mut().zip(&rho[k * n..(k + 1) * n]) {
                        *d = v * x;
                    }
                }
            }
            for (k, &v) in entries {
                for (d, x) in dst.iter_mut().zip(&rho[k * n..(k + 1) * n]) {
                    *d += v * x;
                }
            }
        }
    }

    /// `out = rho · self†`, gathering within each row of `rho`.
    fn right_adjoint_mul_into(&self, rho: &[C], out: &mut [C]) {
        let n = self.n;
        for (src, dst) in rho.chunks_exact(n).zip(out.chunks_exact_mut(n)) {
            for (j, d) in dst.iter_mut().enumerate() {
                let (a, b) = (self.row_ptr[j], self.row_ptr[j + 1]);
                let mut acc = ZERO;
                for (&k, v) in self.cols[a..b].iter().zip(&self.vals[a..b]) {
                    acc += src[k] * v.conj();
                }
                *d = acc;
            }
        }
    }
}

/// Tensor-product basis with mode 0 as the most significant digit.
#[derive(Debug, Clone, PartialEq)]
struct Basis {
    dims: Vec<usize>,
    strides: Vec<usize>,
    dim: usize,
}

impl Basis {
    fn new(dims: &[usize]) -> Self {
        let mut strides = vec![1; dims.len()];
        for m in (0..dims.len().saturating_sub(1)).rev() {
            strides[m] = strides[m + 1] * dims[m + 1];
        }
        Self {
            dims: dims.to_vec(),
            strides,
            dim: dims.iter().product(),
        }
    }

    fn digit(&self, index: usize, mode: usize) -> usize {
        (index / self.strides[mode]) % self.dims[mode]
    }

    fn annihilator(&self, mode: usize) -> Csr {
        let mut rows = vec![Vec::new(); self.dim];
        for i in 0..self.dim {
            let n = self.digit(i, mode);
            if n > 0 {
                rows[i - self.strides[mode]].push((i, C::new((n as f64).sqrt(), 0.0)));
            }
        }
        Csr::from_rows(self.dim, rows)
    }
}

/// Dense density matrix on a truncated multi-mode Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub dims: Vec<usize>,
    /// Row-major entries.
    pub data: Vec<C>,
    pub time: f64,
}

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Global vacuum.
    pub fn ground(dims: &[usize]) -> Self {
        let n: usize = dims.iter().product();
        let mut data = vec![ZERO; n * n];
        data[0] = C::new(1.0, 0.0);
        Self {
            dims: dims.to_vec(),
            data,
            time: 0.0,
        }
    }

    /// Product of single-mode states, in mode order.
    pub fn product(factors: &[DMatrix<C>]) -> Self {
        let mut acc = DMatrix::<C>::from_element(1, 1, C::new(1.0, 0.0));
        for f in factors {
            acc = acc.kronecker(f);
        }
        let n = acc.nrows();
        let mut data = vec![ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = acc[(i, j)];
            }
        }
        Self {
            dims: factors.iter().map(|f| f.nrows()).collect(),
            data,
            time: 0.0,
        }
    }

    pub fn as_matrix(&self) -> DMatrix<C> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.data[i * n + j])
    }

    pub fn trace(&self) -> C {
        let n = self.dim();
        (0..n).map(|i| self.data[i * n + i]).sum()
    }

    /// `max |ρ_ij - conj(ρ_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut err: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                err = err.max((self.data[i * n + j] - self.data[j * n + i].conj()).norm());
            }
        }
        err
    }

    /// Cholesky succeeds on `ρ + slack·I`.
    pub fn is_positive(&self, slack: f64) -> bool {
        let mut m = self.as_matrix();
        let n = m.nrows();
        for i in 0..n {
            m[(i, i)] += C::new(slack, 0.0);
        }
        let h = (&m + m.adjoint()) * C::new(0.5, 0.0);
        h.cholesky().is_some()
    }

    /// Reduced state of one mode.
    pub fn reduced(&self, mode: usize) -> DMatrix<C> {
        let basis = Basis::new(&self.dims);
        let n = basis.dim;
        let d = self.dims[mode];
        let s = basis.strides[mode];
        let mut out = DMatrix::<C>::zeros(d, d);
        for i in 0..n {
            let p = basis.digit(i, mode);
            let base = i - p * s;
            for q in 0..d {
                out[(p, q)] += self.data[i * n + base + q * s];
            }
        }
        out
    }

    /// `<a_m† a_m>`.
    pub fn occupation(&self, mode: usize) -> f64 {
        let r = self.reduced(mode);
        (0..r.nrows()).map(|k| k as f64 * r[(k, k)].re).sum()
    }

    /// `<a_m>`.
    pub fn amplitude(&self, mode: usize) -> C {
        let r = self.reduced(mode);
        // Tr(a ρ) = Σ_k sqrt(k) ρ_{k, k-1}
        (1..r.nrows()).map(|k| (k as f64).sqrt() * r[(k, k - 1)]).sum()
    }

    /// Population of the top kept level of `mode`.
    pub fn top_population(&self, mode: usize) -> f64 {
        let r = self.reduced(mode);
        let d = r.nrows();
        r[(d - 1, d - 1)].re
    }
}

/// Single-mode coherent state `|α⟩⟨α|` truncated to `d` levels.
pub fn coherent_state(alpha: C, d: usize) -> DMatrix<C> {
    let mut psi = DVector::<C>::zeros(d);
    let mut c = C::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..d {
        psi[n] = c;
        c = c * alpha / ((n + 1) as f64).sqrt();
    }
    &psi * psi.adjoint()
}

/// Single-mode thermal state with mean occupation `n_th`.
pub fn thermal_state(n_th: f64, d: usize) -> DMatrix<C> {
    let mut m = DMatrix::<C>::zeros(d, d);
    let r = n_th / (n_th + 1.0);
    for k in 0..d {
        m[(k, k)] = C::new(r.powi(k as i32) / (n_th + 1.0), 0.0);
    }
    m
}

/// Single-mode Fock state `|k⟩⟨k|`.
pub fn number_state(k: usize, d: usize) -> DMatrix<C> {
    let mut m = DMatrix::<C>::zeros(d, d);
    m[(k, k)] = C::new(1.0, 0.0);
    m
}

/// `D(α) τ D(α)†`, computed with `pad` extra levels and cropped to `d`.
pub fn displaced_thermal_state(alpha: C, n_th: f64, d: usize, pad: usize) -> DMatrix<C> {
    let big = d + pad;
    let mut gen = DMatrix::<C>::zeros(big, big);
    for k in 1..big {
        let s = (k as f64).sqrt();
        gen[(k, k - 1)] += alpha * s;
        gen[(k - 1, k)] -= alpha.conj() * s;
    }
    let disp = gen.exp();
    let rho = &disp * thermal_state(n_th, big) * disp.adjoint();
    rho.view((0, 0), (d, d)).into_owned()
}

/// `ω (<n> - Σ_k r_k k)` with eigenvalues `r_0 ≥ r_1 ≥ ...` of the reduced state.
pub fn spectral_ergotropy(rho: &DMatrix<C>, omega: f64, tail_threshold: f64) -> Result<f64> {
    let d = rho.nrows();
    let top = rho[(d - 1, d - 1)].re;
    if top > tail_threshold {
        return Err(Error::TruncationUnsound {
            mode: 0,
            population: top,
            threshold: tail_threshold,
        });
    }
    let h = (rho + rho.adjoint()) * C::new(0.5, 0.0);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().cloned().collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let passive: f64 = ev.iter().enumerate().map(|(k, r)| k as f64 * r).sum();
    let energy: f64 = (0..d).map(|k| k as f64 * h[(k, k)].re).sum();
    Ok(omega * (energy - passive))
}

/// Lindblad generator on a truncated space, split as
/// `dρ/dt = Y + Y†` with `Y = Kρ + Σ_h (w_h/2) A_h ρ A_h† + Σ_s w_s L_s ρ L_s`.
/// The split relies on `ρ` being Hermitian. Every sandwich is stored as
/// `left · ρ · right†` with the weight folded into `left`.
pub struct Lindbladian {
    basis: Basis,
    k: Csr,
    sandwiches: Vec<Sandwich>,
    cfg: FockConfig,
}

struct Sandwich {
    left: Csr,
    right: Csr,
}

/// Scratch buffers reused across right-hand-side evaluations.
struct Workspace {
    y: Vec<C>,
    ts: Vec<Vec<C>>,
}

/// Sandwiches evaluated per pass over `Y`; bounds scratch memory.
const FUSED: usize = 4;

impl Lindbladian {
    pub fn new(spec: &NetworkSpec, bath: Reservoir, cfg: &FockConfig) -> Result<Self> {
        cfg.validate()?;
        if cfg.dims.len() != spec.n_modes() {
            return Err(Error::DimensionMismatch(format!(
                "{} truncations for {} modes",
                cfg.dims.len(),
                spec.n_modes()
            )));
        }
        let basis = Basis::new(&cfg.dims);
        let n = basis.dim;
        let ann: Vec<Csr> = (0..spec.n_modes()).map(|m| basis.annihilator(m)).collect();
        let cre: Vec<Csr> = ann.iter().map(Csr::adjoint).collect();
        let i = C::i();

        let mut h = Csr::zeros(n);
        for (l, (u, d)) in spec.topology.links().into_iter().enumerate() {
            let j = spec.coupling.amplitudes[l];
            let th = spec.coupling.phases[l];
            let term = cre[u].mul(&ann[d]).scale(C::from_polar(j, th));
            h = h.add(&term).add(&term.adjoint());
        }
        h = h.add(&ann[0].add(&cre[0]).scale(C::new(spec.drive, 0.0)));

        // Channels o: sqrt(κ_m) a_m and q_i = sqrt(Γ_i)(p_u a_u + p_d a_d).
        let mut channels: Vec<Csr> = Vec::new();
        for m in 0..spec.n_modes() {
            let rate = spec.kappa(m);
            if rate > 0.0 {
                channels.push(ann[m].scale(C::new(rate.sqrt(), 0.0)));
            }
        }
        let p = &spec.coupling.p_coeffs;
        for (l, (u, d)) in spec.topology.links().into_iter().enumerate() {
            let g = spec.coupling.coop_rates[l];
            if g > 0.0 {
                let s = g.sqrt();
                channels.push(ann[u].scale(p[u] * s).add(&ann[d].scale(p[d] * s)));
            }
        }

        let (pw, q) = match bath.normalized() {
            Reservoir::Vacuum => (0.0, ZERO),
            Reservoir::Thermal { n_th } => (n_th, ZERO),
            b @ Reservoir::Squeezed { .. } => (b.p(), b.q()),
        };

        let mut k = h.scale(-i);
        let mut sandwiches = Vec::new();
        for o in &channels {
            let od = o.adjoint();
            // (P+1) ℒ[o] + P ℒ[o†]
            for (w, a, ad) in [(pw + 1.0, o, &od), (pw, &od, o)] {
                if w == 0.0 {
                    continue;
                }
                k = k.add(&ad.mul(a).scale(C::new(-0.5 * w, 0.0)));
                sandwiches.push(Sandwich {
                    left: a.scale(C::new(0.5 * w, 0.0)),
                    right: a.clone(),
                });
            }
            // -Q ℒ'[o] - Q* ℒ'[o†]
            if q != ZERO {
                k = k.add(&o.mul(o).scale(0.5 * q));
                k = k.add(&od.mul(&od).scale(0.5 * q.conj()));
                // L ρ L = L ρ (L†)†
                sandwiches.push(Sandwich {
                    left: o.scale(-q),
                    right: od.clone(),
                });
            }
        }
        Ok(Self {
            basis,
            k,
            sandwiches,
            cfg: cfg.clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.dim
    }

    pub fn config(&self) -> &FockConfig {
        &self.cfg
    }

    fn workspace(&self) -> Workspace {
        let n2 = self.dim() * self.dim();
        let k = self.sandwiches.len().min(FUSED);
        Workspace {
            y: vec![ZERO; n2],
            ts: (0..k).map(|_| vec![ZERO; n2]).collect(),
        }
    }

    fn rhs_into(&self, rho: &[C], out: &mut [C], ws: &mut Workspace) {
        let n = self.dim();
        self.k.left_mul_into(rho, &mut ws.y);
        for group in self.sandwiches.chunks(FUSED) {
            for (s, t) in group.iter().zip(ws.ts.iter_mut()) {
                s.right.right_adjoint_mul_into(rho, t);
            }
            for (i, dst) in ws.y.chunks_exact_mut(n).enumerate() {
                for (s, t) in group.iter().zip(&ws.ts) {
                    for (k, v) in s.left.row(i) {
                        for (d, x) in dst.iter_mut().zip(&t[k * n..(k + 1) * n]) {
                            *d += v * x;
                        }
                    }
                }
            }
        }
        adjoint_into(&ws.y, out, n);
        for (o, y) in out.iter_mut().zip(&ws.y) {
            *o += y;
        }
    }

    pub fn rhs(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dims != self.basis.dims {
            return Err(Error::DimensionMismatch("density matrix truncation differs".into()));
        }
        let mut out = vec![ZERO; rho.data.len()];
        let mut ws = self.workspace();
        self.rhs_into(&rho.data, &mut out, &mut ws);
        Ok(DensityMatrix {
            dims: rho.dims.clone(),
            data: out,
            time: rho.time,
        })
    }

    /// Trace, Hermiticity, positivity and truncation checks.
    pub fn check_state(&self, rho: &DensityMatrix) -> Result<()> {
        let tr = rho.trace();
        if (tr - C::new(1.0, 0.0)).norm() > 1e-8 {
            return Err(Error::NotConverged(format!("trace drifted to {tr}")));
        }
        let herm = rho.hermiticity_error();
        if herm > 1e-10 {
            return Err(Error::NotConverged(format!("hermiticity error {herm:e}")));
        }
        for m in 0..rho.dims.len() {
            let top = rho.top_population(m);
            if top > self.cfg.tail_threshold {
                return Err(Error::TruncationUnsound {
                    mode: m,
                    population: top,
                    threshold: self.cfg.tail_threshold,
                });
            }
        }
        let positive = if self.dim() <= self.cfg.full_positivity_max_dim {
            rho.is_positive(self.cfg.positivity_slack)
        } else {
            (0..rho.dims.len()).all(|m| {
                let r = rho.reduced(m);
                let d = r.nrows();
                (r + DMatrix::<C>::identity(d, d) * C::new(self.cfg.positivity_slack, 0.0))
                    .cholesky()
                    .is_some()
            })
        };
        if !positive {
            return Err(Error::NotConverged(format!(
                "state lost positivity at t = {}",
                rho.time
            )));
        }
        Ok(())
    }

    /// Adaptive Dormand-Prince 5(4) integration to every time in `times`,
    /// checking each output state.
    pub fn integrate(&self, rho0: &DensityMatrix, times: &[f64]) -> Result<Vec<DensityMatrix>> {
        if rho0.dims != self.basis.dims {
            return Err(Error::DimensionMismatch("density matrix truncation differs".into()));
        }
        let mut prev = rho0.time;
        for (k, &t) in times.iter().enumerate() {
            let ok = if k == 0 { t >= prev } else { t > prev };
            if !ok || !t.is_finite() {
                return Err(Error::InvalidParameter(
                    "time grid must be strictly increasing and start at or after the state time"
                        .into(),
                ));
            }
            prev = t;
        }
        let n2 = rho0.data.len();
        let mut ws = self.workspace();
        let mut y = rho0.data.clone();
        let mut t = rho0.time;
        let mut ks: Vec<Vec<C>> = (0..7).map(|_| vec![ZERO; n2]).collect();
        let mut tmp = vec![ZERO; n2];
        let mut y_new = vec![ZERO; n2];
        self.rhs_into(&y, &mut ks[0], &mut ws);
        let mut h = self.initial_step(&y, &ks[0]);
        let mut out = Vec::with_capacity(times.len());
        let mut steps = 0usize;

        for &t_out in times {
            while t < t_out {
                let last = t + h >= t_out;
                let h_try = if last { t_out - t } else { h };
                dp45_stage(&y, &mut ks, &mut tmp, &mut y_new, h_try, |s, o| {
                    self.rhs_into(s, o, &mut ws)
                });
                let err = dp45_error(&y, &y_new, &ks, h_try, self.cfg.rtol, self.cfg.atol);
                steps += 1;
                if steps > 50_000_000 {
                    return Err(Error::NotConverged("step budget exhausted".into()));
                }
                if err <= 1.0 {
                    t = if last { t_out } else { t + h_try };
                    std::mem::swap(&mut y, &mut y_new);
                    ks.swap(0, 6);
                    let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                    if !last || fac < 1.0 {
                        h = h_try * fac;
                    }
                } else {
                    h = h_try * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                }
                if !(h > 1e-14 * t_out.abs().max(1.0)) {
                    return Err(Error::NotConverged("step size underflow".into()));
                }
            }
            let state = DensityMatrix {
                dims: rho0.dims.clone(),
                data: y.clone(),
                time: t_out,
            };
            self.check_state(&state)?;
            out.push(state);
        }
        log::debug!("fock: {} steps on dimension {}", steps, self.dim());
        Ok(out)
    }

    fn initial_step(&self, y: &[C], f: &[C]) -> f64 {
        let sc = |x: &C| self.cfg.atol + self.cfg.rtol * x.norm();
        let d0 = rms(y.iter().map(|x| x.norm() / sc(x)));
        let d1 = rms(f.iter().zip(y).map(|(fx, x)| fx.norm() / sc(x)));
        if d0 < 1e-5 || d1 < 1e-5 {
            1e-3
        } else {
            0.01 * d0 / d1
        }
    }

    /// Integrate in windows of `window` until the per-mode occupations are
    /// predicted to lie within `tol` of their limit. The remaining distance is
    /// extrapolated geometrically from successive window changes assuming a
    /// relaxation rate no slower than `rate`.
    pub fn steady_state(
        &self,
        rho0: &DensityMatrix,
        rate: f64,
        window: f64,
        tol: f64,
        max_windows: usize,
    ) -> Result<DensityMatrix> {
        let m = rho0.dims.len();
        let mut state = rho0.clone();
        let mut occ: Vec<f64> = (0..m).map(|k| state.occupation(k)).collect();
        let q = (-rate * window).exp();
        for _ in 0..max_windows {
            let next = self
                .integrate(&state, &[state.time + window])?
                .pop()
                .expect("one output");
            let new_occ: Vec<f64> = (0..m).map(|k| next.occupation(k)).collect();
            let change = occ
                .iter()
                .zip(&new_occ)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            state = next;
            occ = new_occ;
            if change * q / (1.0 - q) <= tol {
                return Ok(state);
            }
        }
        Err(Error::NotConverged(format!(
            "no Fock steady state within {max_windows} windows"
        )))
    }
}

/// `dst = src†` for row-major `n × n` matrices, in cache-sized tiles.
fn adjoint_into(src: &[C], dst: &mut [C], n: usize) {
    const TILE: usize = 16;
    for ib in (0..n).step_by(TILE) {
        let ie = (ib + TILE).min(n);
        for jb in (0..n).step_by(TILE) {
            let je = (jb + TILE).min(n);
            for i in ib..ie {
                let row = &src[i * n + jb..i * n + je];
                for (dj, x) in row.iter().enumerate() {
                    dst[(jb + dj) * n + i] = x.conj();
                }
            }
        }
    }
}

fn rms(it: impl Iterator<Item = f64>) -> f64 {
    let mut s = 0.0;
    let mut n = 0usize;
    for x in it {
        s += x * x;
        n += 1;
    }
    (s / n.max(1) as f64).sqrt()
}

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];

/// Fifth-order minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Fill stages 2..7 (stage 1 holds `f(y)`) and the fifth-order solution.
fn dp45_stage(
    y: &[C],
    ks: &mut [Vec<C>],
    tmp: &mut [C],
    y_new: &mut [C],
    h: f64,
    mut f: impl FnMut(&[C], &mut [C]),
) {
    for s in 0..6 {
        for (idx, t) in tmp.iter_mut().enumerate() {
            let mut acc = y[idx];
            for (j, a) in A[s].iter().enumerate().take(s + 1) {
                if *a != 0.0 {
                    acc += ks[j][idx] * (h * a);
                }
            }
            *t = acc;
        }
        if s == 5 {
            y_new.copy_from_slice(tmp);
        }
        let (_, rest) = ks.split_at_mut(s + 1);
        f(tmp, &mut rest[0]);
    }
}

fn dp45_error(y: &[C], y_new: &[C], ks: &[Vec<C>], h: f64, rtol: f64, atol: f64) -> f64 {
    let mut s = 0.0;
    for idx in 0..y.len() {
        let mut e = ZERO;
        for (j, w) in E.iter().enumerate() {
            if *w != 0.0 {
                e += ks[j][idx] * *w;
            }
        }
        let sc = atol + rtol * y[idx].norm().max(y_new[idx].norm());
        let r = (e * h).norm() / sc;
        s += r * r;
    }
    (s / y.len() as f64).sqrt()
}

/// Per-mode energies and spectral ergotropies of a Fock state.
pub fn fock_energetics(rho: &DensityMatrix, omega: f64, tail_threshold: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = rho.dims.len();
    let mut energy = Vec::with_capacity(m);
    let mut ergo = Vec::with_capacity(m);
    for k in 0..m {
        let r = rho.reduced(k);
        energy.push(omega * (0..r.nrows()).map(|n| n as f64 * r[(n, n)].re).sum::<f64>());
        ergo.push(spectral_ergotropy(&r, omega, tail_threshold).map_err(|e| match e {
            Error::TruncationUnsound {
                population,
                threshold,
                ..
            } => Error::TruncationUnsound {
                mode: k,
                population,
                threshold,
            },
            other => other,
        })?);
    }
    Ok((energy, ergo))
}

/// Per-mode report of a Fock state.
pub fn fock_report(rho: &DensityMatrix, omega: f64, tail_threshold: f64, time: Option<f64>) -> Result<EnergyReport> {
    let (energy, ergotropy) = fock_energetics(rho, omega, tail_threshold)?;
    let passive = energy.iter().zip(&ergotropy).map(|(e, w)| e - w).collect();
    Ok(EnergyReport::from_parts(energy, passive, Engine::FockOracle, time))
}

/// Product of displaced thermal states carrying the steady amplitudes of the
/// drift (`A v = -f`) and the bath occupation on every mode, renormalized
/// after cropping.
pub fn warm_start(spec: &NetworkSpec, bath: Reservoir, dims: &[usize]) -> Result<DensityMatrix> {
    if dims.len() != spec.n_modes() {
        return Err(Error::DimensionMismatch(format!(
            "{} truncations for {} modes",
            dims.len(),
            spec.n_modes()
        )));
    }
    let (a, f) = spec.drift_matrix();
    let v = a
        .lu()
        .solve(&(-f))
        .filter(|v| v.iter().all(|z| z.is_finite()))
        .ok_or(Error::SingularDrift(0.0))?;
    let n_bath = bath.normalized().p();
    let factors: Vec<DMatrix<C>> = dims
        .iter()
        .zip(v.iter())
        .map(|(&d, &alpha)| displaced_thermal_state(alpha, n_bath, d, 24))
        .collect();
    let mut rho = DensityMatrix::product(&factors);
    let tr = rho.trace().re;
    rho.data.iter_mut().for_each(|x| *x /= tr);
    Ok(rho)
}

/// Steady state of the truncated Lindbladian, integrated from [`warm_start`]
/// in windows of `window` until the extrapolated remaining drift of every
/// occupation is below `tol`.
pub fn oracle_steady_state(
    spec: &NetworkSpec,
    bath: Reservoir,
    cfg: &FockConfig,
    window: f64,
    tol: f64,
) -> Result<DensityMatrix> {
    let lind = Lindbladian::new(spec, bath, cfg)?;
    let rate = crate::moments::assemble(spec, bath).slowest_rate()?;
    if !(rate > 0.0) {
        return Err(Error::SingularDrift(-rate));
    }
    let rho0 = warm_start(spec, bath, &cfg.dims)?;
    lind.check_state(&rho0)?;
    lind.steady_state(&rho0, rate, window, tol, 200)
}
