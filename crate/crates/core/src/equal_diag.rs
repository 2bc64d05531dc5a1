//! Equal-diagonal rotation: given a diagonal non-singular `Γ` with
//! non-increasing positive entries, construct a unitary `S` such that the
//! R-factor of the QR decomposition of `Γ S` has all diagonal entries equal
//! to `(∏ γ_k)^{1/M}`.
//!
//! The construction is recursive. Column 1 mixes the extreme entries of `Γ`
//! so that its residual pivot squares to `g = (∏ γ_k²)^{1/M}`. Each later
//! column is drawn from the orthogonal complement of the columns built so
//! far: the Gram matrix of the remaining directions, after projecting out
//! the span of the already-used `Γ`-images, is eigendecomposed and the new
//! column mixes the extreme eigenvectors so its pivot again squares to `g`.
//! The final column is the unique remaining unit vector; its pivot equals
//! `√g` automatically because a unitary `S` cannot change `|det(ΓS)|`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// Relative tolerance governing the all-equal shortcut and the eigenvalue
/// containment assertions (`λ_min ≤ g ≤ λ_max` must hold at every step).
pub const EQ_TOL: f64 = 1e-9;

/// Positive non-increasing diagonal of `Γ`.
#[derive(Debug, Clone)]
pub struct GammaSpec {
    gammas: Vec<f64>,
}

impl GammaSpec {
    /// Wrap an already-sorted (non-increasing) positive sequence.
    pub fn new(gammas: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::InvalidInput("gamma sequence is empty".into()));
        }
        for &g in &gammas {
            if g <= 0.0 || !g.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "gamma entries must be positive and finite, got {g}"
                )));
            }
        }
        if gammas.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput(
                "gamma entries must be sorted non-increasing".into(),
            ));
        }
        Ok(GammaSpec { gammas })
    }

    /// Sort an arbitrary positive sequence and record the permutation:
    /// `sorted[i] = original[perm[i]]`, so callers can undo the reordering.
    pub fn sorting(gammas: Vec<f64>) -> Result<(Self, Vec<usize>)> {
        let mut perm: Vec<usize> = (0..gammas.len()).collect();
        perm.sort_by(|&i, &j| gammas[j].partial_cmp(&gammas[i]).unwrap());
        let sorted: Vec<f64> = perm.iter().map(|&i| gammas[i]).collect();
        Ok((GammaSpec::new(sorted)?, perm))
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.gammas
    }

    /// The common R-factor diagonal value `(∏ γ_k)^{1/M}`.
    pub fn geometric_mean(&self) -> f64 {
        let m = self.gammas.len() as f64;
        (self.gammas.iter().map(|g| g.ln()).sum::<f64>() / m).exp()
    }
}

/// Result of the rotation: `S` unitary, `r_diag` the common diagonal value.
#[derive(Debug, Clone)]
pub struct EqualDiagRotation {
    pub s: CMatrix,
    pub r_diag: f64,
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Square root of a radicand that is non-negative in exact arithmetic;
/// tiny negative rounding residue is clamped, anything worse is an error.
fn guarded_sqrt(value: f64, scale: f64, what: &str) -> Result<f64> {
    if value < -EQ_TOL * scale {
        return Err(Error::NumericalFailure(format!(
            "{what} fell outside its guaranteed range by {:.3e} (scale {:.3e})",
            -value, scale
        )));
    }
    Ok(value.max(0.0).sqrt())
}

/// Mixing weights on the extreme eigenvectors: places weight so that the
/// quadratic form against `diag(λ)` equals `g`. Requires `λ_lo ≤ g ≤ λ_hi`.
fn extreme_mix(g: f64, hi: f64, lo: f64) -> Result<(f64, f64)> {
    let span = hi - lo;
    let y1 = guarded_sqrt((g - lo) / span, 1.0, "mixing weight")?;
    let y2 = guarded_sqrt((hi - g) / span, 1.0, "mixing weight")?;
    Ok((y1, y2))
}

/// Build the unitary `S` of the equal-diagonal rotation.
pub fn equal_diag_rotation(spec: &GammaSpec) -> Result<EqualDiagRotation> {
    let m = spec.len();
    let r_diag = spec.geometric_mean();
    let gam = spec.values();

    if m == 1 {
        return Ok(EqualDiagRotation {
            s: CMatrix::identity(1, 1),
            r_diag,
        });
    }
    // Degenerate shortcut: the explicit column formulas divide by
    // γ_1² - γ_M²; when all entries agree S = I is exactly correct.
    if gam[0] - gam[m - 1] <= EQ_TOL * gam[0] {
        return Ok(EqualDiagRotation {
            s: CMatrix::identity(m, m),
            r_diag,
        });
    }

    let g = r_diag * r_diag; // (∏ γ_k²)^{1/M}
    let g1 = gam[0] * gam[0];
    let gm = gam[m - 1] * gam[m - 1];
    let span = g1 - gm;

    let mut s = CMatrix::zeros(m, m);
    s[(0, 0)] = real(guarded_sqrt((g - gm) / span, 1.0, "first column")?);
    s[(m - 1, 0)] = real(guarded_sqrt((g1 - g) / span, 1.0, "first column")?);

    let gamma = CMatrix::from_fn(m, m, |i, j| if i == j { real(gam[i]) } else { real(0.0) });

    for k in 1..m {
        let used = s.columns(0, k).clone_owned();
        let complement = linalg::orthonormal_complement(&used)?;

        if k == m - 1 {
            // Last direction is forced; |det(ΓS)| = ∏γ_k makes its pivot √g.
            let mut last = complement.column(0).clone_owned();
            fix_vector_phase(&mut last);
            s.set_column(m - 1, &last);
            break;
        }

        // Gram matrix of the remaining Γ-directions with the span of the
        // already-used Γ-columns projected out.
        let gz_used = &gamma * &used;
        let gz_rest = &gamma * &complement;
        let (q_used, _) = linalg::qr_positive_diag(&gz_used)?;
        let projected = &gz_rest - &q_used * (q_used.adjoint() * &gz_rest);
        let a_k = linalg::hermitianize(&(projected.adjoint() * &projected));

        let es = linalg::hermitian_eig(&a_k)?;
        let hi = es.values[0];
        let lo = es.values[m - k - 1];
        if g > hi + EQ_TOL * hi.max(1.0) || g < lo - EQ_TOL * hi.max(1.0) {
            return Err(Error::NumericalFailure(format!(
                "step {k}: target {g:.6e} escaped eigenvalue range [{lo:.6e}, {hi:.6e}]"
            )));
        }

        let w = if hi - lo <= EQ_TOL * hi {
            // All remaining eigenvalues coincide with g; any direction works.
            es.vectors.column(0).clone_owned()
        } else {
            let (y1, y2) = extreme_mix(g.min(hi).max(lo), hi, lo)?;
            es.vectors.column(0).scale(y1) + es.vectors.column(m - k - 1).scale(y2)
        };

        let mut col = &complement * w;
        // Re-orthogonalize against the used columns to stop drift at large M.
        col -= &used * (used.adjoint() * &col);
        let norm = col.norm();
        if norm < 0.5 {
            return Err(Error::NumericalFailure(format!(
                "step {k}: constructed column collapsed (norm {norm:.3e})"
            )));
        }
        col /= real(norm);
        s.set_column(k, &col);
    }

    Ok(EqualDiagRotation { s, r_diag })
}

/// Rotate a vector so its first component of largest magnitude is real and
/// non-negative (same convention as the eigenvector columns).
fn fix_vector_phase(v: &mut nalgebra::DVector<Complex64>) {
    let mut idx = 0;
    let mut best = -1.0_f64;
    for (i, z) in v.iter().enumerate() {
        let mag = z.norm();
        if mag > best {
            best = mag;
            idx = i;
        }
    }
    if best > 0.0 {
        let rot = (v[idx] / real(best)).conj();
        for z in v.iter_mut() {
            *z *= rot;
        }
        v[idx] = real(v[idx].re);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    fn gamma_matrix(gam: &[f64]) -> CMatrix {
        CMatrix::from_fn(gam.len(), gam.len(), |i, j| {
            if i == j {
                real(gam[i])
            } else {
                real(0.0)
            }
        })
    }

    fn check_rotation(gam: &[f64], diag_tol: f64) {
        let spec = GammaSpec::new(gam.to_vec()).unwrap();
        let rot = equal_diag_rotation(&spec).unwrap();
        let m = gam.len();

        let unit = (rot.s.adjoint() * &rot.s - CMatrix::identity(m, m)).norm();
        assert!(unit < 1e-10, "unitarity {unit:.3e} for {gam:?}");

        let (_, r) = linalg::qr_positive_diag(&(gamma_matrix(gam) * &rot.s)).unwrap();
        let want = rot.r_diag;
        for i in 0..m {
            let got = r[(i, i)].re;
            assert!(
                (got - want).abs() / want < diag_tol,
                "diag {i}: {got} vs {want} for {gam:?}"
            );
        }

        // |∏ r_ii| = ∏ γ_k: a unitary S cannot change |det|.
        let det_r: f64 = (0..m).map(|i| r[(i, i)].re.ln()).sum();
        let det_g: f64 = gam.iter().map(|x| x.ln()).sum();
        assert!((det_r - det_g).abs() < 1e-8 * det_g.abs().max(1.0));
    }

    #[test]
    fn all_equal_gives_identity() {
        for c in [0.25, 1.0, 7.5] {
            let spec = GammaSpec::new(vec![c; 5]).unwrap();
            let rot = equal_diag_rotation(&spec).unwrap();
            assert!((rot.s.clone() - CMatrix::identity(5, 5)).norm() == 0.0);
            assert!((rot.r_diag - c).abs() < 1e-12);
        }
    }

    #[test]
    fn two_by_two_hand_values() {
        // γ = (2, 1): g = 2, first column (√(1/3), √(2/3)), r_diag = √2.
        let spec = GammaSpec::new(vec![2.0, 1.0]).unwrap();
        let rot = equal_diag_rotation(&spec).unwrap();
        assert!((rot.s[(0, 0)].re - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((rot.s[(1, 0)].re - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((rot.r_diag - 2.0f64.sqrt()).abs() < 1e-12);
        check_rotation(&[2.0, 1.0], 1e-10);
    }

    #[test]
    fn random_descending_sizes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5150);
        for &m in &[3usize, 8, 16] {
            for _ in 0..8 {
                let mut g: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..4.0)).collect();
                g.sort_by(|a, b| b.partial_cmp(a).unwrap());
                check_rotation(&g, 1e-8);
            }
        }
    }

    #[test]
    fn wide_dynamic_range() {
        check_rotation(&[1000.0, 1.0, 0.001], 1e-8);
        check_rotation(&[50.0, 49.999, 0.02, 0.019999], 1e-8);
    }

    #[test]
    fn near_equal_entries_hit_shortcut_or_stay_stable() {
        check_rotation(&[1.0 + 1e-12, 1.0, 1.0 - 1e-12], 1e-8);
        check_rotation(&[1.0 + 1e-6, 1.0, 1.0 - 1e-6], 1e-8);
    }

    #[test]
    fn rotation_is_real_for_real_gamma() {
        let spec = GammaSpec::new(vec![3.0, 2.0, 1.5, 0.5]).unwrap();
        let rot = equal_diag_rotation(&spec).unwrap();
        let imag: f64 = rot.s.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        assert!(imag < 1e-12, "imaginary residue {imag:.3e}");
    }

    #[test]
    fn rotation_is_deterministic() {
        let spec = GammaSpec::new(vec![2.7, 1.3, 0.9, 0.2]).unwrap();
        let a = equal_diag_rotation(&spec).unwrap();
        let b = equal_diag_rotation(&spec).unwrap();
        assert_eq!(a.s.as_slice(), b.s.as_slice());
        assert_eq!(a.r_diag.to_bits(), b.r_diag.to_bits());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(GammaSpec::new(vec![]).is_err());
        assert!(GammaSpec::new(vec![1.0, 2.0]).is_err());
        assert!(GammaSpec::new(vec![1.0, -1.0]).is_err());
        assert!(GammaSpec::new(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn sorting_records_permutation() {
        let (spec, perm) = GammaSpec::sorting(vec![1.0, 3.0, 2.0]).unwrap();
        assert_eq!(spec.values(), &[3.0, 2.0, 1.0]);
        assert_eq!(perm, vec![1, 2, 0]);
    }

    #[test]
    fn scale_invariance_of_s() {
        // Scaling Γ by a constant leaves S unchanged (all ratios invariant).
        let base = vec![2.0, 1.1, 0.4];
        let a = equal_diag_rotation(&GammaSpec::new(base.clone()).unwrap()).unwrap();
        let scaled: Vec<f64> = base.iter().map(|x| x * 17.0).collect();
        let b = equal_diag_rotation(&GammaSpec::new(scaled).unwrap()).unwrap();
        assert!((a.s - b.s).norm() < 1e-12);
    }
}
