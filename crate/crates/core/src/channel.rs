//! Channel matrix construction: zero-padded FIR Toeplitz, circulant
//! (cyclic-prefix) and Rayleigh MIMO models, plus noise whitening.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::rng;

/// Channel matrix `H` (P x K) together with the noise covariance `Rvv`
/// (P x P, Hermitian positive definite).
#[derive(Debug, Clone)]
pub struct ChannelModel {
    pub h: CMatrix,
    pub rvv: CMatrix,
}

impl ChannelModel {
    pub fn new(h: CMatrix, rvv: CMatrix) -> Result<Self> {
        if h.nrows() == 0 || h.ncols() == 0 {
            return Err(Error::InvalidInput("channel matrix is empty".into()));
        }
        if rvv.nrows() != h.nrows() || !rvv.is_square() {
            return Err(Error::InvalidInput(format!(
                "noise covariance must be {p}x{p}, got {}x{}",
                rvv.nrows(),
                rvv.ncols(),
                p = h.nrows()
            )));
        }
        for z in h.iter().chain(rvv.iter()) {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::InvalidInput("channel model contains NaN or Inf".into()));
            }
        }
        Ok(ChannelModel { h, rvv })
    }

    /// White-noise model `Rvv = sigma2 * I`.
    pub fn with_awgn(h: CMatrix, sigma2: f64) -> Result<Self> {
        if sigma2 <= 0.0 || !sigma2.is_finite() {
            return Err(Error::InvalidInput(format!(
                "noise variance must be positive, got {sigma2}"
            )));
        }
        let p = h.nrows();
        ChannelModel::new(h, CMatrix::identity(p, p).scale(sigma2))
    }

    /// Number of received samples per block (rows of `H`).
    pub fn p_dim(&self) -> usize {
        self.h.nrows()
    }

    /// Number of channel symbols per block (columns of `H`).
    pub fn k_dim(&self) -> usize {
        self.h.ncols()
    }

    /// Whitened channel `H̆ = Rvv^{-1/2} H` and the Gram matrix
    /// `H^H Rvv^{-1} H = H̆^H H̆` (Hermitian PSD).
    pub fn whitened_gram(&self) -> Result<(CMatrix, CMatrix)> {
        let w = linalg::inv_sqrt_pd(&self.rvv)?;
        let hbreve = &w * &self.h;
        let gram = linalg::hermitianize(&(hbreve.adjoint() * &hbreve));
        Ok((hbreve, gram))
    }
}

/// FIR impulse response `h[0..=L]`.
#[derive(Debug, Clone)]
pub struct FirTaps {
    taps: Vec<Complex64>,
    normalized: bool,
}

impl FirTaps {
    /// Raw taps, used as given.
    pub fn new(taps: Vec<Complex64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::InvalidInput("empty tap sequence".into()));
        }
        for z in &taps {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::InvalidInput("taps contain NaN or Inf".into()));
            }
        }
        Ok(FirTaps {
            taps,
            normalized: false,
        })
    }

    /// Taps scaled so the impulse response has unit energy.
    pub fn normalized(taps: Vec<Complex64>) -> Result<Self> {
        let mut t = FirTaps::new(taps)?;
        let e = t.energy();
        if e <= 0.0 {
            return Err(Error::InvalidInput("cannot normalize all-zero taps".into()));
        }
        let s = Complex64::new(1.0 / e.sqrt(), 0.0);
        for z in &mut t.taps {
            *z *= s;
        }
        t.normalized = true;
        Ok(t)
    }

    /// Draw `len` i.i.d. CN(0,1) taps and normalize to unit energy.
    pub fn random_normalized<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Result<Self> {
        let taps: Vec<Complex64> = (0..len).map(|_| rng::standard_complex_gaussian(rng)).collect();
        FirTaps::normalized(taps)
    }

    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    /// Channel order L (`len - 1`).
    pub fn order(&self) -> usize {
        self.taps.len() - 1
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Tall lower-triangular Toeplitz matrix of the zero-padded FIR channel:
/// `(K+L) x K` with `[H]_{i,j} = h[i-j]` for `0 <= i-j <= L`.
pub fn fir_zero_padded_channel(taps: &FirTaps, k: usize) -> Result<CMatrix> {
    if k == 0 {
        return Err(Error::InvalidInput("block size K must be >= 1".into()));
    }
    let l = taps.order();
    let h = taps.taps();
    Ok(CMatrix::from_fn(k + l, k, |i, j| {
        if i >= j && i - j <= l {
            h[i - j]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))
}

/// `K x K` circulant matrix (cyclic prefix case) whose first column is the
/// zero-extended impulse response.
pub fn circulant_channel(taps: &FirTaps, k: usize) -> Result<CMatrix> {
    let l = taps.order();
    if k < l + 1 {
        return Err(Error::InvalidInput(format!(
            "circulant needs K >= L+1, got K={k}, L+1={}",
            l + 1
        )));
    }
    let h = taps.taps();
    Ok(CMatrix::from_fn(k, k, |i, j| {
        let shift = (i + k - j) % k;
        if shift <= l {
            h[shift]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))
}

/// `P x K` matrix of i.i.d. unit-variance circular complex Gaussian entries,
/// deterministic given the RNG state.
pub fn rayleigh_mimo_channel<R: Rng + ?Sized>(p: usize, k: usize, rng: &mut R) -> CMatrix {
    rng::complex_gaussian_matrix(p, k, rng)
}
