//! Transceiver designs: the jointly optimal ZF-BDFD and MMSE-BDFD triples
//! `(F, W, B)`, receiver synthesis for an arbitrary given precoder, and the
//! standard baseline precoders (direct, DFT, optimal linear ZF/MMSE).

use num_complex::Complex64;

use crate::channel::ChannelModel;
use crate::equal_diag::{equal_diag_rotation, GammaSpec};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, PIVOT_TOL};

/// Which receiver structure a transceiver was designed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransceiverKind {
    ZfBdfd,
    MmseBdfd,
    LinearZf,
    LinearMmse,
}

impl TransceiverKind {
    pub fn is_linear(self) -> bool {
        matches!(self, TransceiverKind::LinearZf | TransceiverKind::LinearMmse)
    }

    pub fn name(self) -> &'static str {
        match self {
            TransceiverKind::ZfBdfd => "ZF_BDFD",
            TransceiverKind::MmseBdfd => "MMSE_BDFD",
            TransceiverKind::LinearZf => "LINEAR_ZF",
            TransceiverKind::LinearMmse => "LINEAR_MMSE",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ZF_BDFD" => Ok(TransceiverKind::ZfBdfd),
            "MMSE_BDFD" => Ok(TransceiverKind::MmseBdfd),
            "LINEAR_ZF" => Ok(TransceiverKind::LinearZf),
            "LINEAR_MMSE" => Ok(TransceiverKind::LinearMmse),
            other => Err(Error::InvalidInput(format!("unknown transceiver kind `{other}`"))),
        }
    }
}

/// Precoder `F` (K x M), feedforward `W` (M x P) and strictly upper
/// triangular feedback `B` (M x M), plus design metadata.
#[derive(Debug, Clone)]
pub struct Transceiver {
    pub f: CMatrix,
    pub w: CMatrix,
    pub b: CMatrix,
    pub kind: TransceiverKind,
    /// Error covariance predicted by the design equations (perfect feedback).
    pub predicted_ree: CMatrix,
    /// Number of active eigenmodes; less than M only for MMSE designs whose
    /// waterfilling deactivated weak modes.
    pub q_active: usize,
}

impl Transceiver {
    /// Block length M.
    pub fn block_len(&self) -> usize {
        self.b.nrows()
    }

    /// Transmitted power `trace(F F^H)`.
    pub fn power(&self) -> f64 {
        self.f.iter().map(|z| z.norm_sqr()).sum()
    }

    /// True when waterfilling left some modes unused (`q_active < M`).
    pub fn is_rank_limited(&self) -> bool {
        self.q_active < self.block_len()
    }
}

/// Problem parameters: symbols per block and the total block power budget.
#[derive(Debug, Clone, Copy)]
pub struct DesignSpec {
    pub m: usize,
    pub p0: f64,
}

impl DesignSpec {
    pub fn new(m: usize, p0: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInput("block length M must be >= 1".into()));
        }
        if p0 <= 0.0 || !p0.is_finite() {
            return Err(Error::InvalidInput(format!("power budget must be positive, got {p0}")));
        }
        Ok(DesignSpec { m, p0 })
    }
}

/// Waterfilling outcome: `r` modes satisfy the activation condition, `q =
/// min(r, M)` of them carry power, with amplitudes `phi` (so that
/// `sum phi_i^2 = p0`).
#[derive(Debug, Clone)]
pub struct WaterfillResult {
    pub r: usize,
    pub q: usize,
    pub phi: Vec<f64>,
}

/// Waterfilling power allocation over descending positive eigenvalues:
/// `r` is the largest integer with `1/λ_r < (p0 + Σ_{j<=r} 1/λ_j)/r`, and
/// the active amplitudes satisfy `φ_i² = (p0 + Σ_{j<=q} 1/λ_j)/q − 1/λ_i`.
pub fn waterfill(lambdas: &[f64], spec: &DesignSpec) -> Result<WaterfillResult> {
    if lambdas.is_empty() {
        return Err(Error::InvalidInput("waterfill needs at least one eigenvalue".into()));
    }
    for &l in lambdas {
        if l <= 0.0 || !l.is_finite() {
            return Err(Error::InvalidInput(format!(
                "waterfill eigenvalues must be positive and finite, got {l}"
            )));
        }
    }
    if lambdas.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidInput("waterfill eigenvalues must be non-increasing".into()));
    }

    // Scan from r = 1 upward and keep the largest satisfying index; the
    // condition is monotone so the satisfying set is a prefix.
    let mut r = 0usize;
    let mut cum_inv = 0.0;
    for (i, &l) in lambdas.iter().enumerate() {
        cum_inv += 1.0 / l;
        if 1.0 / l < (spec.p0 + cum_inv) / (i + 1) as f64 {
            r = i + 1;
        }
    }
    debug_assert!(r >= 1, "r = 1 always satisfies the condition for p0 > 0");

    let q = r.min(spec.m);
    let sum_inv: f64 = lambdas[..q].iter().map(|l| 1.0 / l).sum();
    let level = (spec.p0 + sum_inv) / q as f64;
    let mut phi = Vec::with_capacity(q);
    for &l in &lambdas[..q] {
        let p = level - 1.0 / l;
        if p <= 0.0 {
            return Err(Error::NumericalFailure(format!(
                "waterfill produced a non-positive mode power {p:.3e}"
            )));
        }
        phi.push(p.sqrt());
    }
    Ok(WaterfillResult { r, q, phi })
}

/// Strictly upper triangular part of `U - I` (exact zeros on and below the
/// diagonal; the detector relies on strict triangularity).
fn feedback_from_unit_upper(u: &CMatrix) -> CMatrix {
    let m = u.nrows();
    CMatrix::from_fn(m, m, |i, j| {
        if j > i {
            u[(i, j)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Rescale an upper-triangular matrix to unit diagonal: `diag(R)^{-1} R`,
/// with the diagonal forced to exact ones and the lower part to exact zeros.
fn unit_diagonal_upper(r: &CMatrix) -> CMatrix {
    let m = r.nrows();
    CMatrix::from_fn(m, m, |i, j| {
        if j > i {
            r[(i, j)] / r[(i, i)]
        } else if j == i {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

fn scaled_identity(n: usize, s: f64) -> CMatrix {
    CMatrix::identity(n, n).scale(s)
}

fn pd_tol(gram: &CMatrix) -> f64 {
    let n = gram.nrows().max(1) as f64;
    PIVOT_TOL * linalg::trace(gram).re / n
}

/// MMSE feedforward matrix `W = U (HF)^H (H F F^H H^H + Rvv)^{-1}` in the
/// P x P form, which stays valid when `HF` is column rank deficient.
fn mmse_feedforward(ch: &ChannelModel, f: &CMatrix, u: &CMatrix) -> Result<CMatrix> {
    let hf = &ch.h * f;
    let a = linalg::hermitianize(&(&hf * hf.adjoint())) + &ch.rvv;
    let y = u * hf.adjoint();
    let x = linalg::solve_hermitian_pd(&linalg::hermitianize(&a), &y.adjoint())?;
    Ok(x.adjoint())
}

/// ZF feedforward matrix `W = U (H̆ F)^+ Rvv^{-1/2}`.
fn zf_feedforward(ch: &ChannelModel, hbreve: &CMatrix, f: &CMatrix, u: &CMatrix) -> Result<CMatrix> {
    let hbf = hbreve * f;
    let pinv = linalg::pinv_full_col_rank(&hbf).map_err(|e| match e {
        Error::RankDeficient(msg) => Error::RankDeficient(format!("H F loses rank: {msg}")),
        other => other,
    })?;
    let rvv_inv_sqrt = linalg::inv_sqrt_pd(&ch.rvv)?;
    Ok(u * pinv * rvv_inv_sqrt)
}

/// Jointly optimal ZF-BDFD design.
///
/// The precoder is `√(p0/M) Ṽ_M Ψ` with `Ψ` the equal-diagonal rotation of
/// `Λ̃_M^{1/2}`; the feedback matrix comes from the positive-diagonal QR of
/// `Λ̃_M^{1/2} Ψ`, and the feedforward matrix makes `W H F = B + I` hold
/// exactly. The resulting error covariance is the scaled identity
/// `(M/p0) (∏ λ_i)^{-1/M} I`, the minimized lower bound on the MSE.
pub fn design_zf_bdfd(ch: &ChannelModel, spec: &DesignSpec) -> Result<Transceiver> {
    let m = spec.m;
    let (hbreve, gram) = ch.whitened_gram()?;
    let es = linalg::hermitian_eig(&gram)?;
    if m > es.dim() {
        return Err(Error::RankDeficient(format!(
            "ZF design needs rank(H) >= M; M={m} exceeds dimension {}",
            es.dim()
        )));
    }
    let lam = es.leading_values(m);
    let tol = pd_tol(&gram);
    if lam[m - 1] <= tol {
        return Err(Error::RankDeficient(format!(
            "ZF design needs rank(H) >= M; eigenvalue {}={:.3e} is below tolerance {:.3e}",
            m,
            lam[m - 1],
            tol
        )));
    }

    let gamma = GammaSpec::new(lam.iter().map(|l| l.sqrt()).collect())?;
    let psi = equal_diag_rotation(&gamma)?;

    let lam_sqrt_psi = CMatrix::from_fn(m, m, |i, j| psi.s[(i, j)] * Complex64::new(lam[i].sqrt(), 0.0));
    let (_, ubar) = linalg::qr_positive_diag(&lam_sqrt_psi)?;

    let log_prod: f64 = lam.iter().map(|l| l.ln()).sum();
    let u = unit_diagonal_upper(&ubar.scale((-log_prod / (2.0 * m as f64)).exp()));

    let f = es.leading_vectors(m) * psi.s.scale((spec.p0 / m as f64).sqrt());
    let w = zf_feedforward(ch, &hbreve, &f, &u)?;

    let sigma2 = (m as f64 / spec.p0) * (-log_prod / m as f64).exp();
    Ok(Transceiver {
        b: feedback_from_unit_upper(&u),
        f,
        w,
        kind: TransceiverKind::ZfBdfd,
        predicted_ree: scaled_identity(m, sigma2),
        q_active: m,
    })
}

/// Jointly optimal MMSE-BDFD design with waterfilling power allocation.
///
/// Power goes to the `q = min(r, M)` strongest eigenmodes; the equal-diagonal
/// rotation of `(I + Φ̆^T Λ̃_q Φ̆)^{1/2}` spreads every symbol across the
/// active modes so the error covariance is the scaled identity that attains
/// the minimized lower bound on the MSE.
pub fn design_mmse_bdfd(ch: &ChannelModel, spec: &DesignSpec) -> Result<Transceiver> {
    let m = spec.m;
    let (_, gram) = ch.whitened_gram()?;
    let es = linalg::hermitian_eig(&gram)?;
    let tol = pd_tol(&gram);
    let positive: Vec<f64> = es.values.iter().copied().take_while(|&l| l > tol).collect();
    if positive.is_empty() {
        return Err(Error::RankDeficient(
            "MMSE design needs at least one positive channel eigenvalue".into(),
        ));
    }

    let wf = waterfill(&positive, spec)?;
    let q = wf.q;
    let lam = &positive[..q];

    // Diagonal of (I + Φ̆^T Λ̃_q Φ̆)^{1/2}: active entries √(1+φ_i²λ_i) are
    // descending (they equal √(level·λ_i)) and exceed the trailing ones.
    let mut d = Vec::with_capacity(m);
    for (phi, l) in wf.phi.iter().zip(lam) {
        d.push((1.0 + phi * phi * l).sqrt());
    }
    d.resize(m, 1.0);
    debug_assert!(d.windows(2).all(|w| w[0] >= w[1] - 1e-12), "d must be descending");

    let psi = equal_diag_rotation(&GammaSpec::new(d.clone())?)?;

    // F = Ṽ_q [Φ 0] Ψ, i.e. the first q rows of Ψ scaled by φ.
    let phi_psi = CMatrix::from_fn(q, m, |i, j| psi.s[(i, j)] * Complex64::new(wf.phi[i], 0.0));
    let f = es.leading_vectors(q) * phi_psi;

    let d_psi = CMatrix::from_fn(m, m, |i, j| psi.s[(i, j)] * Complex64::new(d[i], 0.0));
    let (_, ucheck) = linalg::qr_positive_diag(&d_psi)?;
    let u = unit_diagonal_upper(&ucheck);

    let w = mmse_feedforward(ch, &f, &u)?;

    // Minimal value of the MSE lower bound, with products over the q active
    // modes: q^{q/M} (p0 + Σ 1/λ_j)^{-q/M} ∏ λ_j^{-1/M}.
    let sum_inv: f64 = lam.iter().map(|l| 1.0 / l).sum();
    let log_sigma2 = (q as f64 / m as f64) * ((q as f64).ln() - (spec.p0 + sum_inv).ln())
        - lam.iter().map(|l| l.ln()).sum::<f64>() / m as f64;
    Ok(Transceiver {
        b: feedback_from_unit_upper(&u),
        f,
        w,
        kind: TransceiverKind::MmseBdfd,
        predicted_ree: scaled_identity(m, log_sigma2.exp()),
        q_active: q,
    })
}

/// Minimum-MSE receiver `(W, B)` for an arbitrary given precoder.
///
/// The unit-diagonal upper-triangular `U = B + I` minimizing the MSE is the
/// diagonal-normalized Cholesky factor of `F^H H^H Rvv^{-1} H F` (ZF) or of
/// `I + F^H H^H Rvv^{-1} H F` (MMSE); linear kinds force `B = 0`.
pub fn receiver_for_precoder(ch: &ChannelModel, f: &CMatrix, kind: TransceiverKind) -> Result<Transceiver> {
    if f.nrows() != ch.k_dim() {
        return Err(Error::InvalidInput(format!(
            "precoder has {} rows but the channel has K={}",
            f.nrows(),
            ch.k_dim()
        )));
    }
    let m = f.ncols();
    if m == 0 {
        return Err(Error::InvalidInput("precoder has no columns".into()));
    }
    let (hbreve, gram) = ch.whitened_gram()?;
    let fgf = linalg::hermitianize(&(f.adjoint() * &gram * f));

    let (u, w, ree) = match kind {
        TransceiverKind::ZfBdfd | TransceiverKind::LinearZf => {
            let u = if kind == TransceiverKind::ZfBdfd {
                let r = linalg::cholesky_upper(&fgf).map_err(|e| match e {
                    Error::NotPositiveDefinite { pivot, index } => Error::RankDeficient(format!(
                        "ZF receiver infeasible: F^H H^H Rvv^-1 H F pivot {pivot:.3e} at {index}"
                    )),
                    other => other,
                })?;
                unit_diagonal_upper(&r)
            } else {
                CMatrix::identity(m, m)
            };
            let w = zf_feedforward(ch, &hbreve, f, &u)?;
            let ree = linalg::hermitianize(&(&w * &ch.rvv * w.adjoint()));
            (u, w, ree)
        }
        TransceiverKind::MmseBdfd | TransceiverKind::LinearMmse => {
            let a = linalg::hermitianize(&(&fgf + CMatrix::identity(m, m)));
            let u = if kind == TransceiverKind::MmseBdfd {
                unit_diagonal_upper(&linalg::cholesky_upper(&a)?)
            } else {
                CMatrix::identity(m, m)
            };
            let w = mmse_feedforward(ch, f, &u)?;
            let a_inv_uh = linalg::solve_hermitian_pd(&a, &u.adjoint())?;
            let ree = linalg::hermitianize(&(&u * a_inv_uh));
            (u, w, ree)
        }
    };

    Ok(Transceiver {
        f: f.clone(),
        w,
        b: feedback_from_unit_upper(&u),
        kind,
        predicted_ree: ree,
        q_active: m,
    })
}

/// Baseline precoder families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    /// Direct transmission `√(p0/M) I` (SCZP / uncoded V-BLAST).
    Identity,
    /// DFT precoding `√(p0/M) D^H` (ZP-OFDM).
    Dft,
    /// Minimum-BER precoder for the linear ZF detector.
    OptLinearZf,
    /// Minimum-BER precoder for the linear MMSE detector.
    OptLinearMmse,
}

/// Normalized M-point DFT matrix, `D[r,c] = exp(-2πi rc/M)/√M`.
pub fn dft_matrix(m: usize) -> CMatrix {
    let scale = 1.0 / (m as f64).sqrt();
    CMatrix::from_fn(m, m, |r, c| {
        let ph = -2.0 * std::f64::consts::PI * ((r * c) % m) as f64 / m as f64;
        Complex64::new(ph.cos() * scale, ph.sin() * scale)
    })
}

/// Construct a baseline precoder with `trace(F F^H) = p0`.
pub fn baseline_precoder(kind: BaselineKind, ch: &ChannelModel, spec: &DesignSpec) -> Result<CMatrix> {
    let m = spec.m;
    let scale = (spec.p0 / m as f64).sqrt();
    match kind {
        BaselineKind::Identity | BaselineKind::Dft => {
            if ch.k_dim() != m {
                return Err(Error::InvalidInput(format!(
                    "channel-independent precoders need K = M, got K={}, M={m}",
                    ch.k_dim()
                )));
            }
            Ok(match kind {
                BaselineKind::Identity => scaled_identity(m, scale),
                _ => dft_matrix(m).adjoint().scale(scale),
            })
        }
        BaselineKind::OptLinearZf => {
            let (_, gram) = ch.whitened_gram()?;
            let es = linalg::hermitian_eig(&gram)?;
            let tol = pd_tol(&gram);
            if m > es.dim() || es.values[m - 1] <= tol {
                return Err(Error::RankDeficient(
                    "linear ZF precoder needs M positive eigenvalues".into(),
                ));
            }
            let lam = es.leading_values(m);
            let tr_inv_sqrt: f64 = lam.iter().map(|l| 1.0 / l.sqrt()).sum();
            let amp = (spec.p0 / tr_inv_sqrt).sqrt();
            let inner = CMatrix::from_fn(m, m, |i, j| {
                dft_matrix(m)[(i, j)] * Complex64::new(amp / lam[i].powf(0.25), 0.0)
            });
            Ok(es.leading_vectors(m) * inner)
        }
        BaselineKind::OptLinearMmse => {
            let (_, gram) = ch.whitened_gram()?;
            let es = linalg::hermitian_eig(&gram)?;
            let tol = pd_tol(&gram);
            let positive: Vec<f64> = es.values.iter().copied().take_while(|&l| l > tol).collect();
            if positive.is_empty() {
                return Err(Error::RankDeficient(
                    "linear MMSE precoder needs a positive eigenvalue".into(),
                ));
            }
            // ℓ is the largest integer with λ_ℓ^{-1/2} Σ λ_j^{-1/2} - Σ λ_j^{-1} < p0.
            let mut ell = 0usize;
            let mut s_half = 0.0;
            let mut s_inv = 0.0;
            for (i, &l) in positive.iter().enumerate() {
                s_half += 1.0 / l.sqrt();
                s_inv += 1.0 / l;
                if (1.0 / l.sqrt()) * s_half - s_inv < spec.p0 {
                    ell = i + 1;
                }
            }
            let k = ell.min(m);
            let lam = &positive[..k];
            let s_half: f64 = lam.iter().map(|l| 1.0 / l.sqrt()).sum();
            let s_inv: f64 = lam.iter().map(|l| 1.0 / l).sum();
            let level = (spec.p0 + s_inv) / s_half;
            let mut upsilon = Vec::with_capacity(k);
            for &l in lam {
                let p = level / l.sqrt() - 1.0 / l;
                if p <= 0.0 {
                    return Err(Error::NumericalFailure(format!(
                        "linear MMSE allocation produced non-positive power {p:.3e}"
                    )));
                }
                upsilon.push(p.sqrt());
            }
            let inner = CMatrix::from_fn(k, m, |i, j| dft_matrix(m)[(i, j)] * Complex64::new(upsilon[i], 0.0));
            Ok(es.leading_vectors(k) * inner)
        }
    }
}
