//! Dense linear-algebra helpers: continuous Lyapunov solver, quadrature
//! embedding of complex matrices and symplectic spectra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

/// Solve `A X + X A^T + Q = 0` for real `A` (Hurwitz) and symmetric `Q`.
///
/// Bartels-Stewart on the complex Schur form `A = U T U^H`:
/// `T Y + Y T^H = -U^H Q U`, back-substituted from the bottom-right corner.
pub fn solve_continuous_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || q.nrows() != n || q.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "lyapunov: A is {}x{}, Q is {}x{}",
            a.nrows(),
            a.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    let (u, t) = complex_schur(&a.map(|x| Complex64::new(x, 0.0)))?;
    let qc: DMatrix<Complex64> = q.map(|x| Complex64::new(x, 0.0));
    let c = -(u.adjoint() * qc * &u);

    let mut y = DMatrix::<Complex64>::zeros(n, n);
    for i in (0..n).rev() {
        for j in (0..n).rev() {
            let mut rhs = c[(i, j)];
            for k in (i + 1)..n {
                rhs -= t[(i, k)] * y[(k, j)];
            }
            for k in (j + 1)..n {
                rhs -= y[(i, k)] * t[(j, k)].conj();
            }
            let denom = t[(i, i)] + t[(j, j)].conj();
            if denom.norm() < 1e-300 {
                return Err(Error::SingularMatrix(
                    "Lyapunov operator is singular (eigenvalues sum to zero)".into(),
                ));
            }
            y[(i, j)] = rhs / denom;
        }
    }
    let x = &u * y * u.adjoint();
    let mut out = x.map(|z| z.re);
    symmetrize(&mut out);
    Ok(out)
}

/// Complex Schur form `A = U T U^H` from LAPACK `zgees`.
pub fn complex_schur(a: &DMatrix<Complex64>) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch(format!("schur: {}x{} is not square", n, a.ncols())));
    }
    if a.iter().any(|z| !z.is_finite()) {
        return Err(Error::InvalidParameter("schur: matrix has non-finite entries".into()));
    }
    let mut t = a.clone();
    let mut u = DMatrix::<Complex64>::zeros(n, n);
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    let mut rwork = vec![0.0; n];
    let mut bwork = [0i32; 1];
    let (mut sdim, mut info) = (0, 0);
    let ld = n.max(1) as i32;
    let mut query = [Complex64::new(0.0, 0.0)];
    // SAFETY: buffers are sized as zgees documents for an n x n problem.
    unsafe {
        lapack::zgees(
            b'V', b'N', None, n as i32, t.as_mut_slice(), ld, &mut sdim, &mut w,
            u.as_mut_slice(), ld, &mut query, -1, &mut rwork, &mut bwork, &mut info,
        );
    }
    let lwork = (query[0].re as usize).max(2 * n).max(1);
    let mut work = vec![Complex64::new(0.0, 0.0); lwork];
    // SAFETY: as above, with the workspace size returned by the query.
    unsafe {
        lapack::zgees(
            b'V', b'N', None, n as i32, t.as_mut_slice(), ld, &mut sdim, &mut w,
            u.as_mut_slice(), ld, &mut work, lwork as i32, &mut rwork, &mut bwork, &mut info,
        );
    }
    if info != 0 {
        return Err(Error::NotConverged(format!("complex Schur decomposition (zgees info {info})")));
    }
    Ok((u, t))
}

/// Replace `m` by `(m + m^T) / 2`.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
    }
}

/// Real `2M x 2M` image of a complex `M x M` matrix acting on
/// interleaved quadratures `(x_0, p_0, x_1, p_1, ...)` with `a = (x + i p)/sqrt(2)`.
pub fn quadrature_image(a: &DMatrix<Complex64>) -> DMatrix<f64> {
    let m = a.nrows();
    let mut out = DMatrix::<f64>::zeros(2 * m, 2 * m);
    for r in 0..m {
        for c in 0..m {
            let z = a[(r, c)];
            out[(2 * r, 2 * c)] = z.re;
            out[(2 * r, 2 * c + 1)] = -z.im;
            out[(2 * r + 1, 2 * c)] = z.im;
            out[(2 * r + 1, 2 * c + 1)] = z.re;
        }
    }
    out
}

/// Quadrature image `sqrt(2) (Re v_m, Im v_m)` of a complex amplitude vector.
pub fn quadrature_vector(v: &DVector<Complex64>) -> DVector<f64> {
    let s = std::f64::consts::SQRT_2;
    DVector::from_fn(2 * v.len(), |k, _| {
        let z = v[k / 2];
        if k % 2 == 0 {
            s * z.re
        } else {
            s * z.im
        }
    })
}

/// Standard symplectic form `⊕ [[0, 1], [-1, 0]]` on `m` modes.
pub fn symplectic_form(m: usize) -> DMatrix<f64> {
    let mut o = DMatrix::<f64>::zeros(2 * m, 2 * m);
    for k in 0..m {
        o[(2 * k, 2 * k + 1)] = 1.0;
        o[(2 * k + 1, 2 * k)] = -1.0;
    }
    o
}

/// Symplectic eigenvalues of a real symmetric covariance matrix (one per mode,
/// ascending). Vacuum gives `1/2` under the `cov_vac = I/2` convention.
///
/// For positive definite `Σ` these are the positive eigenvalues of the
/// Hermitian matrix `Σ^{1/2} iΩ Σ^{1/2}`; otherwise the general spectrum
/// of `ΩΣ` is used, and entries are NaN if it cannot be computed.
pub fn symplectic_eigenvalues(cov: &DMatrix<f64>) -> Vec<f64> {
    let m = cov.nrows() / 2;
    let omega = symplectic_form(m);
    let eig = cov.clone().symmetric_eigen();
    let mut vals: Vec<f64> = if eig.eigenvalues.min() > 0.0 {
        let root = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt))
            * eig.eigenvectors.transpose();
        let rc = root.map(|x| Complex64::new(x, 0.0));
        let h = &rc * omega.map(|x| Complex64::new(0.0, x)) * &rc;
        let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigen().eigenvalues.iter().map(|x| x.abs()).collect()
    } else {
        match eigenvalues_real(&(omega * cov)) {
            Ok(z) => z.iter().map(|z| z.im.abs()).collect(),
            Err(_) => vec![f64::NAN; 2 * m],
        }
    };
    vals.sort_by(|a, b| a.total_cmp(b));
    // eigenvalues come in +-nu pairs
    vals.chunks(2).map(|c| 0.5 * (c[0] + c[c.len() - 1])).collect()
}

/// Eigenvalues of a complex matrix. Triangular matrices, which include the
/// drift of every unidirectional network, are read off the diagonal.
pub fn eigenvalues(a: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    let lower = (0..n).all(|i| (i + 1..n).all(|j| a[(i, j)] == Complex64::new(0.0, 0.0)));
    let upper = (0..n).all(|i| (0..i).all(|j| a[(i, j)] == Complex64::new(0.0, 0.0)));
    if lower || upper {
        return Ok(a.diagonal().iter().copied().collect());
    }
    Ok(complex_schur(a)?.1.diagonal().iter().copied().collect())
}

/// Inverse of [`quadrature_image`] when `a` has its structure.
fn complex_preimage(a: &DMatrix<f64>) -> Option<DMatrix<Complex64>> {
    let n = a.nrows();
    if !n.is_multiple_of(2) || a.ncols() != n {
        return None;
    }
    let m = n / 2;
    let mut out = DMatrix::<Complex64>::zeros(m, m);
    for r in 0..m {
        for c in 0..m {
            let (re, im) = (a[(2 * r, 2 * c)], a[(2 * r + 1, 2 * c)]);
            if a[(2 * r + 1, 2 * c + 1)] != re || a[(2 * r, 2 * c + 1)] != -im {
                return None;
            }
            out[(r, c)] = Complex64::new(re, im);
        }
    }
    Some(out)
}

/// Eigenvalues of a real matrix. Quadrature images of complex matrices are
/// reduced to the complex matrix and its conjugate spectrum.
pub fn eigenvalues_real(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if let Some(c) = complex_preimage(a) {
        let z = eigenvalues(&c)?;
        return Ok(z.iter().copied().chain(z.iter().map(|w| w.conj())).collect());
    }
    eigenvalues(&a.map(|x| Complex64::new(x, 0.0)))
}

/// Maximum real part among the eigenvalues of a real matrix.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues_real(a)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Kronecker-vectorized oracle: (I ⊗ A + A ⊗ I) vec(X) = -vec(Q).
    fn lyapunov_kron(a: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
        let n = a.nrows();
        let eye = DMatrix::<f64>::identity(n, n);
        let big = eye.kronecker(a) + a.kronecker(&eye);
        let rhs = DVector::from_iterator(n * n, q.iter().map(|x| -x));
        let sol = big.lu().solve(&rhs).unwrap();
        DMatrix::from_iterator(n, n, sol.iter().cloned())
    }

    fn pseudo_random(n: usize, seed: u64) -> DMatrix<f64> {
        let mut s = seed;
        DMatrix::from_fn(n, n, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
    }

    #[test]
    fn lyapunov_matches_kronecker_oracle() {
        for (n, seed) in [(2, 1), (4, 7), (6, 11), (8, 3)] {
            let a = pseudo_random(n, seed) - DMatrix::identity(n, n) * (n as f64);
            let b = pseudo_random(n, seed + 100);
            let q = &b * b.transpose();
            let x = solve_continuous_lyapunov(&a, &q).unwrap();
            let oracle = lyapunov_kron(&a, &q);
            assert!((&x - &oracle).amax() < 1e-12 * oracle.amax().max(1.0), "n = {n}");
            let residual = &a * &x + &x * a.transpose() + &q;
            assert!(residual.amax() < 1e-12);
        }
    }

    #[test]
    fn lyapunov_rejects_singular_operator() {
        let a = DMatrix::<f64>::zeros(2, 2);
        let q = DMatrix::<f64>::identity(2, 2);
        assert!(solve_continuous_lyapunov(&a, &q).is_err());
    }

    #[test]
    fn symplectic_eigenvalues_of_thermal_and_squeezed() {
        let mut cov = DMatrix::<f64>::identity(4, 4) * 0.5;
        cov[(2, 2)] = 2.5;
        cov[(3, 3)] = 2.5;
        let nu = symplectic_eigenvalues(&cov);
        assert!((nu[0] - 0.5).abs() < 1e-12 && (nu[1] - 2.5).abs() < 1e-12);

        let r: f64 = 0.7;
        let sq = DMatrix::from_diagonal(&DVector::from_vec(vec![
            0.5 * (2.0 * r).exp(),
            0.5 * (-2.0 * r).exp(),
        ]));
        assert!((symplectic_eigenvalues(&sq)[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn quadrature_image_preserves_products() {
        let a = DMatrix::from_fn(3, 3, |r, c| Complex64::new(r as f64 - c as f64, (r * c) as f64 * 0.3));
        let b = DMatrix::from_fn(3, 3, |r, c| Complex64::new((r + 2 * c) as f64, -(r as f64)));
        let lhs = quadrature_image(&(&a * &b));
        let rhs = quadrature_image(&a) * quadrature_image(&b);
        assert!((lhs - rhs).amax() < 1e-12);
    }
}
