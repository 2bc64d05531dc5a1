//! Complex dense-matrix primitives: Hermitian eigendecomposition, Cholesky,
//! QR and pseudo-inverse, all with deterministic sign/phase conventions so
//! that downstream designs are bit-reproducible.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix with 64-bit float components.
pub type CMatrix = DMatrix<Complex64>;

/// Relative tolerance for the Hermitian symmetry check, scaled by `max|A|`.
pub const HERM_TOL: f64 = 1e-10;

/// Relative tolerance for pivot/rank thresholds, scaled by `trace(A)/n`.
pub const PIVOT_TOL: f64 = 1e-12;

/// Descending-ordered eigendecomposition of a Hermitian PSD matrix.
///
/// `vectors` is unitary with one eigenvector per column; `values[i]` is the
/// eigenvalue of column `i`, sorted non-increasing. Each eigenvector is
/// phase-normalized so that its first component of largest magnitude is real
/// and non-negative.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub vectors: CMatrix,
    pub values: Vec<f64>,
}

impl EigenSystem {
    /// Dimension of the decomposed matrix.
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// First `k` eigenvector columns (those of the `k` largest eigenvalues).
    pub fn leading_vectors(&self, k: usize) -> CMatrix {
        self.vectors.columns(0, k).clone_owned()
    }

    /// Eigenvalues of the `k` leading modes.
    pub fn leading_values(&self, k: usize) -> &[f64] {
        &self.values[..k]
    }

    /// Rebuild `V diag(values) V^H`.
    pub fn reconstruct(&self) -> CMatrix {
        let lam = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        &self.vectors * lam * self.vectors.adjoint()
    }
}

fn check_finite(a: &CMatrix) -> Result<()> {
    for z in a.iter() {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::InvalidInput("matrix contains NaN or Inf".into()));
        }
    }
    Ok(())
}

fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

/// Enforce exact Hermitian symmetry by averaging with the adjoint.
pub fn hermitianize(a: &CMatrix) -> CMatrix {
    let mut s = a.adjoint();
    s += a;
    s.scale_mut(0.5);
    s
}

fn check_hermitian(a: &CMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::InvalidInput(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    check_finite(a)?;
    let tol = HERM_TOL * max_abs(a);
    let mut worst = 0.0_f64;
    for i in 0..a.nrows() {
        for j in i..a.ncols() {
            let d = (a[(i, j)] - a[(j, i)].conj()).norm();
            worst = worst.max(d);
        }
    }
    if worst > tol {
        return Err(Error::NotHermitian {
            asymmetry: worst,
            tolerance: tol,
        });
    }
    Ok(())
}

/// Pivot threshold for a Hermitian matrix: `PIVOT_TOL * trace(A)/n`.
fn pd_pivot_tol(a: &CMatrix) -> f64 {
    let n = a.nrows().max(1) as f64;
    let tr: f64 = (0..a.nrows()).map(|i| a[(i, i)].re).sum();
    PIVOT_TOL * tr / n
}

/// Rotate each column so its first component of largest magnitude is real
/// and non-negative.
fn fix_column_phases(v: &mut CMatrix) {
    for mut col in v.column_iter_mut() {
        let mut idx = 0;
        let mut best = -1.0_f64;
        for (i, z) in col.iter().enumerate() {
            let m = z.norm();
            if m > best {
                best = m;
                idx = i;
            }
        }
        if best > 0.0 {
            let phase = col[idx] / Complex64::new(best, 0.0);
            let rot = phase.conj();
            for z in col.iter_mut() {
                *z *= rot;
            }
            // The pivot component is now real up to rounding; make it exact.
            col[idx] = Complex64::new(col[idx].re, 0.0);
        }
    }
}

/// Cyclic Jacobi eigendecomposition of a Hermitian matrix.
///
/// Each rotation annihilates one off-diagonal pair with a unitary plane
/// rotation; sweeps repeat until the off-diagonal Frobenius mass is at the
/// rounding floor. Slower than tridiagonalization but unconditionally
/// convergent with machine-precision residuals, which the designs rely on.
fn jacobi_hermitian(a: &CMatrix) -> Result<(CMatrix, Vec<f64>)> {
    let n = a.nrows();
    let mut work = a.clone();
    let mut v = CMatrix::identity(n, n);

    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = work[(p, q)];
                let r = apq.norm();
                let alpha = work[(p, p)].re;
                let beta = work[(q, q)].re;
                // Relative convergence threshold: a pair this small cannot
                // move the eigenvalues at working precision.
                if r <= f64::EPSILON * (alpha.abs() * beta.abs()).sqrt() {
                    continue;
                }
                let phase = apq / Complex64::new(r, 0.0);
                let tau = (beta - alpha) / (2.0 * r);
                let t = if tau.is_infinite() {
                    0.0
                } else {
                    let sign = if tau >= 0.0 { 1.0 } else { -1.0 };
                    sign / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                if t == 0.0 && tau.is_infinite() {
                    // Identity rotation: nothing would change.
                    continue;
                }
                rotated = true;
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let s_ph = phase.scale(s);

                // A <- U^H A U with U the (p,q) plane rotation.
                for i in 0..n {
                    let aip = work[(i, p)];
                    let aiq = work[(i, q)];
                    work[(i, p)] = aip.scale(c) - aiq * s_ph.conj();
                    work[(i, q)] = aip * s_ph + aiq.scale(c);
                }
                for j in 0..n {
                    let apj = work[(p, j)];
                    let aqj = work[(q, j)];
                    work[(p, j)] = apj.scale(c) - s_ph * aqj;
                    work[(q, j)] = s_ph.conj() * apj + aqj.scale(c);
                }
                // The transformed 2x2 block is diagonal by construction;
                // scrub the rounding residue.
                work[(p, p)] = Complex64::new(alpha - t * r, 0.0);
                work[(q, q)] = Complex64::new(beta + t * r, 0.0);
                work[(p, q)] = Complex64::new(0.0, 0.0);
                work[(q, p)] = Complex64::new(0.0, 0.0);

                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip.scale(c) - viq * s_ph.conj();
                    v[(i, q)] = vip * s_ph + viq.scale(c);
                }
            }
        }
        if !rotated {
            let values: Vec<f64> = (0..n).map(|i| work[(i, i)].re).collect();
            return Ok((v, values));
        }
    }
    Err(Error::NumericalFailure(
        "Jacobi eigen iteration did not converge in 60 sweeps".into(),
    ))
}

/// Eigendecomposition of a Hermitian PSD matrix with eigenvalues sorted
/// non-increasing and phase-fixed eigenvectors.
///
/// Fails with `NotHermitian` when `max |A - A^H| > HERM_TOL * max|A|` and
/// with `NumericalFailure` when the iteration does not converge.
pub fn hermitian_eig(a: &CMatrix) -> Result<EigenSystem> {
    check_hermitian(a)?;
    let n = a.nrows();
    if n == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    let sym = hermitianize(a);
    let (raw_vectors, raw_values) = jacobi_hermitian(&sym)?;

    // Stable sort by descending eigenvalue keeps the solver's order for ties.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| raw_values[j].partial_cmp(&raw_values[i]).unwrap());

    let values: Vec<f64> = order.iter().map(|&i| raw_values[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &raw_vectors.column(src));
    }
    fix_column_phases(&mut vectors);
    Ok(EigenSystem { vectors, values })
}

/// Upper-triangular Cholesky factor `R` with strictly positive real diagonal
/// such that `A = R^H R`.
pub fn cholesky_upper(a: &CMatrix) -> Result<CMatrix> {
    check_hermitian(a)?;
    let n = a.nrows();
    let tol = pd_pivot_tol(a);
    let mut r = CMatrix::zeros(n, n);
    for i in 0..n {
        let mut s = a[(i, i)].re;
        for k in 0..i {
            s -= r[(k, i)].norm_sqr();
        }
        if s <= tol {
            return Err(Error::NotPositiveDefinite { pivot: s, index: i });
        }
        let d = s.sqrt();
        r[(i, i)] = Complex64::new(d, 0.0);
        for j in (i + 1)..n {
            let mut t = a[(i, j)];
            for k in 0..i {
                t -= r[(k, i)].conj() * r[(k, j)];
            }
            r[(i, j)] = t / d;
        }
    }
    Ok(r)
}

/// Thin QR decomposition `A = Q R` (rows >= cols) with `Q^H Q = I` and `R`
/// upper triangular with strictly positive real diagonal, which makes the
/// factorization unique.
pub fn qr_positive_diag(a: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    check_finite(a)?;
    let (rows, cols) = a.shape();
    if rows < cols {
        return Err(Error::InvalidInput(format!(
            "QR requires rows >= cols, got {rows}x{cols}"
        )));
    }
    if cols == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    let qr = a.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();

    // Pivot magnitudes scale like column norms; compare against the same
    // trace-scaled threshold used for Cholesky, applied to A^H A.
    let fro2: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    let tol2 = PIVOT_TOL * fro2 / cols as f64;
    for k in 0..cols {
        let d = r[(k, k)];
        let mag = d.norm();
        if mag * mag <= tol2 {
            return Err(Error::RankDeficient(format!(
                "QR pivot {mag:.3e} at column {k}"
            )));
        }
        let phase = d / Complex64::new(mag, 0.0);
        let rot = phase.conj();
        for i in 0..rows {
            q[(i, k)] *= phase;
        }
        for j in k..cols {
            r[(k, j)] *= rot;
        }
        r[(k, k)] = Complex64::new(mag, 0.0);
    }
    Ok((q, r))
}

/// Moore-Penrose pseudo-inverse `(A^H A)^{-1} A^H` of a full-column-rank
/// matrix with rows >= cols, computed as `R^{-1} Q^H`.
pub fn pinv_full_col_rank(a: &CMatrix) -> Result<CMatrix> {
    let (q, r) = qr_positive_diag(a)?;
    r.solve_upper_triangular(&q.adjoint())
        .ok_or_else(|| Error::NumericalFailure("triangular solve failed in pinv".into()))
}

/// Unique Hermitian positive-definite `B` with `B A B = I` (the symmetric
/// inverse square root), via eigendecomposition.
pub fn inv_sqrt_pd(a: &CMatrix) -> Result<CMatrix> {
    let es = hermitian_eig(a)?;
    let tol = pd_pivot_tol(a);
    let n = es.dim();
    for (i, &v) in es.values.iter().enumerate() {
        if v <= tol {
            return Err(Error::NotPositiveDefinite { pivot: v, index: i });
        }
    }
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        es.values.iter().map(|&v| Complex64::new(1.0 / v.sqrt(), 0.0)),
    ));
    let b = &es.vectors * d * es.vectors.adjoint();
    Ok(hermitianize(&b))
}

/// Solve `A X = B` for Hermitian positive-definite `A` via Cholesky.
pub fn solve_hermitian_pd(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let r = cholesky_upper(a)?;
    let y = r
        .adjoint()
        .solve_lower_triangular(b)
        .ok_or_else(|| Error::NumericalFailure("lower triangular solve failed".into()))?;
    r.solve_upper_triangular(&y)
        .ok_or_else(|| Error::NumericalFailure("upper triangular solve failed".into()))
}

/// Orthonormal basis of the orthogonal complement of the column span of `z`
/// (rows > cols), obtained by completing the Householder QR basis.
pub fn orthonormal_complement(z: &CMatrix) -> Result<CMatrix> {
    let (rows, cols) = z.shape();
    if cols >= rows {
        return Err(Error::InvalidInput(format!(
            "complement of {cols} columns in dimension {rows} is empty"
        )));
    }
    if cols == 0 {
        return Ok(CMatrix::identity(rows, rows));
    }
    let qr = z.clone().qr();
    let mut full = CMatrix::identity(rows, rows);
    qr.q_tr_mul(&mut full);
    let full_q = full.adjoint();
    Ok(full_q.columns(cols, rows - cols).clone_owned())
}

/// `trace(A)` as a complex scalar.
pub fn trace(a: &CMatrix) -> Complex64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}
