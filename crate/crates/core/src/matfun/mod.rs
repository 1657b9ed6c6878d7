//! Matrix-function kernels: the matrix exponential, φ-functions, the combined
//! φ-action through an augmented matrix, and spectral fractional powers.
//!
//! Everything here is dense. The φ-functions are
//!
//! ```text
//! φ_0(z) = e^z,   φ_k(z) = ∫_0^1 e^{(1-θ)z} θ^{k-1}/(k-1)! dθ   (k ≥ 1)
//! ```
//!
//! and are evaluated through a block embedding, never through the division
//! recurrence `φ_{k+1}(z) = (φ_k(z) - 1/k!)/z`, so singular arguments are fine.

mod pade;

use std::ops::Deref;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use pade::{expm_pade, PhiEmbedding};

/// Relative tolerance for the symmetry check of [`OperatorMatrix::verify_spd`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// A dense, square, finite real matrix.
///
/// The `symmetric` / `positive_definite` flags are only ever set after being
/// verified (see [`OperatorMatrix::verify_spd`]).
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    m: DMatrix<f64>,
    spd: bool,
}

impl OperatorMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { m, spd: false })
    }

    /// Row-major construction, mostly for tests and small examples.
    pub fn from_rows(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                context: "from_rows",
                expected: n * n,
                found: entries.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(n, n, entries))
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            m: DMatrix::zeros(n, n),
            spd: false,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            m: DMatrix::identity(n, n),
            spd: n > 0,
        }
    }

    pub fn from_diagonal(d: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.m
    }

    pub fn is_symmetric(&self) -> bool {
        asymmetry(&self.m) <= SYMMETRY_TOL * self.m.amax()
    }

    /// Whether the matrix has been verified symmetric positive definite.
    pub fn is_spd(&self) -> bool {
        self.spd
    }

    /// Checks symmetry and positivity of the spectrum and sets the SPD flag.
    pub fn verify_spd(mut self) -> Result<Self> {
        check_spd(&self.m)?;
        self.spd = true;
        Ok(self)
    }

    /// `alpha * self`, keeping the SPD flag when `alpha > 0`.
    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            m: &self.m * alpha,
            spd: self.spd && alpha > 0.0,
        }
    }
}

impl Deref for OperatorMatrix {
    type Target = DMatrix<f64>;

    fn deref(&self) -> &DMatrix<f64> {
        &self.m
    }
}

impl TryFrom<DMatrix<f64>> for OperatorMatrix {
    type Error = Error;

    fn try_from(m: DMatrix<f64>) -> Result<Self> {
        Self::new(m)
    }
}

fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax()
}

fn check_spd(m: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let limit = SYMMETRY_TOL * m.amax();
    let asym = asymmetry(m);
    if asym > limit {
        return Err(Error::NotSymmetric {
            asymmetry: asym,
            limit,
        });
    }
    let eig = SymmetricEigen::new(m.clone());
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: min,
        });
    }
    Ok(eig)
}

fn finite(m: DMatrix<f64>) -> Result<OperatorMatrix> {
    OperatorMatrix::new(m)
}

/// Matrix exponential `e^M` by scaling and squaring with diagonal Padé
/// approximants of degree 3 to 13.
pub fn expm(m: &OperatorMatrix) -> Result<OperatorMatrix> {
    let e = expm_pade(&m.m).ok_or(Error::Singular("expm Padé denominator"))?;
    finite(e)
}

/// `φ_k(M)` for `k ≥ 0`, with `φ_0 = exp`.
pub fn phi(k: usize, m: &OperatorMatrix) -> Result<OperatorMatrix> {
    let mut family = phi_family(k, m)?;
    Ok(family.swap_remove(k))
}

/// `[φ_0(M), φ_1(M), ..., φ_kmax(M)]` from a single exponential of the
/// `(kmax + 1)`-block embedding `[[M, I, 0, ..], [0, N ⊗ I]]`.
pub fn phi_family(k_max: usize, m: &OperatorMatrix) -> Result<Vec<OperatorMatrix>> {
    let emb = PhiEmbedding::new(&m.m, k_max);
    let e = expm_pade(&emb).ok_or(Error::Singular("φ embedding Padé denominator"))?;
    std::iter::once(e.head)
        .chain(e.row)
        .map(finite)
        .collect()
}

/// `e^{τM} v0 + Σ_{k=1}^{p} τ^k φ_k(τM) v_k` with one exponential of the
/// `(n + p)`-dimensional matrix `[[M, W], [0, N_p]]`, `W = [v_p, ..., v_1]`,
/// applied to `[v0; e_p]`.
pub fn phi_action(
    m: &OperatorMatrix,
    tau: f64,
    v0: &DVector<f64>,
    vs: &[DVector<f64>],
) -> Result<DVector<f64>> {
    let n = m.dim();
    check_len("phi_action v0", n, v0.len())?;
    for v in vs {
        check_len("phi_action v_k", n, v.len())?;
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "phi_action step must be positive, got {tau}"
        )));
    }
    let p = vs.len();
    if p == 0 {
        return Ok(expm(&m.scaled(tau))?.m * v0);
    }

    let mut aug = DMatrix::zeros(n + p, n + p);
    aug.view_mut((0, 0), (n, n)).copy_from(&m.m);
    for (k, v) in vs.iter().enumerate() {
        // v_{k+1} sits in column n + p - 1 - k
        aug.view_mut((0, n + p - 1 - k), (n, 1)).copy_from(v);
    }
    for i in 0..p - 1 {
        aug[(n + i, n + i + 1)] = 1.0;
    }
    aug *= tau;

    let e = expm_pade(&aug).ok_or(Error::Singular("phi_action Padé denominator"))?;
    let mut start = DVector::zeros(n + p);
    start.rows_mut(0, n).copy_from(v0);
    start[n + p - 1] = 1.0;
    let out = (e * start).rows(0, n).into_owned();
    if out.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(out)
}

/// `M^γ = V Λ^γ Vᵀ` for symmetric positive-definite `M`.
pub fn fractional_power(m: &OperatorMatrix, gamma: f64) -> Result<OperatorMatrix> {
    if !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "fractional power exponent must be finite, got {gamma}"
        )));
    }
    let eig = check_spd(&m.m)?;
    let powered = eig.eigenvalues.map(|l| l.powf(gamma));
    let v = &eig.eigenvectors;
    let out = v * DMatrix::from_diagonal(&powered) * v.transpose();
    // symmetrize away rounding so the result itself passes verify_spd
    let sym = (&out + out.transpose()) * 0.5;
    Ok(OperatorMatrix {
        m: sym,
        spd: true,
    })
}

/// Spectral norm (largest singular value).
pub fn norm2(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        });
    }
    Ok(())
}
