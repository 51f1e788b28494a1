//! Initial-state representations and the single-mode operator algebra.
//!
//! Units: `ħ = 1`, `[x̂, p̂] = i`, `â = (x̂ + ip̂)/√2`. The vacuum has
//! covariance `½·I` and Wigner peak `1/π`.

mod fock;
mod grid;
mod wigner;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use fock::{
    annihilation_residual, displacement, fock_ladder, gaussian_to_fock, quadratures, squeezed_state, unitary_rotation,
    unitary_squeeze_v, unitary_squeeze_w, FockSpace, TAIL_NORM_LIMIT,
};
pub use grid::{GridSpec, PhaseSpaceGrid};
pub use wigner::{wigner_fock, wigner_fock_point, wigner_gaussian};

/// Slack on the uncertainty bound `det Σ ≥ 1/4`.
const UNCERTAINTY_SLACK: f64 = 1e-12;

/// A Gaussian state given by its phase-space mean and covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGaussian")]
pub struct GaussianState {
    mean: [f64; 2],
    cov: [[f64; 2]; 2],
}

#[derive(Deserialize)]
struct RawGaussian {
    mean: [f64; 2],
    cov: [[f64; 2]; 2],
}

impl TryFrom<RawGaussian> for GaussianState {
    type Error = Error;

    fn try_from(raw: RawGaussian) -> Result<Self> {
        GaussianState::new(raw.mean, raw.cov)
    }
}

impl GaussianState {
    /// Checks symmetry, positive definiteness and `det Σ ≥ 1/4`.
    pub fn new(mean: [f64; 2], cov: [[f64; 2]; 2]) -> Result<Self> {
        let finite = mean.iter().chain(cov.iter().flatten()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidState("non-finite mean or covariance".into()));
        }
        let asym = (cov[0][1] - cov[1][0]).abs();
        if asym > 1e-12 * (cov[0][1].abs() + 1.0) {
            return Err(Error::InvalidState("covariance is not symmetric".into()));
        }
        let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
        if cov[0][0] <= 0.0 || det <= 0.0 {
            return Err(Error::InvalidState("covariance is not positive definite".into()));
        }
        if det < 0.25 - UNCERTAINTY_SLACK {
            return Err(Error::InvalidState(format!(
                "covariance determinant {det} violates the uncertainty bound 1/4"
            )));
        }
        let c = 0.5 * (cov[0][1] + cov[1][0]);
        Ok(Self {
            mean,
            cov: [[cov[0][0], c], [c, cov[1][1]]],
        })
    }

    /// Ground state of `â`: mean zero, covariance `½·I`.
    pub fn vacuum() -> Self {
        Self {
            mean: [0.0, 0.0],
            cov: [[0.5, 0.0], [0.0, 0.5]],
        }
    }

    /// Displaced vacuum centred at `(x, p)`.
    pub fn coherent(x: f64, p: f64) -> Self {
        Self::vacuum().displaced(x, p)
    }

    /// Pure squeezed state with quadrature variances `½e^{−2r}` along the
    /// direction at angle `angle` and `½e^{2r}` across it.
    pub fn squeezed_vacuum(r: f64, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let (lo, hi) = (0.5 * (-2.0 * r).exp(), 0.5 * (2.0 * r).exp());
        let cov = [
            [lo * c * c + hi * s * s, (lo - hi) * s * c],
            [(lo - hi) * s * c, lo * s * s + hi * c * c],
        ];
        Self { mean: [0.0, 0.0], cov }
    }

    pub fn displaced(&self, x: f64, p: f64) -> Self {
        Self {
            mean: [self.mean[0] + x, self.mean[1] + p],
            cov: self.cov,
        }
    }

    pub fn mean(&self) -> [f64; 2] {
        self.mean
    }

    pub fn cov(&self) -> [[f64; 2]; 2] {
        self.cov
    }

    pub fn cov_det(&self) -> f64 {
        self.cov[0][0] * self.cov[1][1] - self.cov[0][1] * self.cov[1][0]
    }

    /// Purity-like ratio `2√det Σ` (1 for pure states, larger for mixed).
    pub fn symplectic_eigenvalue(&self) -> f64 {
        2.0 * self.cov_det().sqrt()
    }

    /// Gaussian density `exp(−½ dᵀΣ⁻¹d) / (2π√det Σ)`.
    pub fn density(&self, x: f64, p: f64) -> f64 {
        let det = self.cov_det();
        let dx = x - self.mean[0];
        let dp = p - self.mean[1];
        let q = (self.cov[1][1] * dx * dx - 2.0 * self.cov[0][1] * dx * dp + self.cov[0][0] * dp * dp) / det;
        (-0.5 * q).exp() / (2.0 * std::f64::consts::PI * det.sqrt())
    }
}

/// Truncated Fock-basis state vector `c_0 … c_{N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    coeffs: DVector<Complex64>,
}

impl FockVector {
    pub const NORM_TOL: f64 = 1e-9;

    pub fn new(coeffs: DVector<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidState("empty Fock vector".into()));
        }
        let norm = coeffs.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > Self::NORM_TOL {
            return Err(Error::InvalidState(format!("Fock vector norm {norm} is not 1")));
        }
        Ok(Self { coeffs })
    }

    pub(crate) fn from_unchecked(coeffs: DVector<Complex64>) -> Self {
        Self { coeffs }
    }

    /// `|n⟩` in a space of dimension `dim`.
    pub fn number(n: usize, dim: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::InvalidState(format!("|{n}⟩ does not fit in dimension {dim}")));
        }
        let mut coeffs = DVector::zeros(dim);
        coeffs[n] = Complex64::new(1.0, 0.0);
        Ok(Self { coeffs })
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &DVector<Complex64> {
        &self.coeffs
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &FockVector) -> Complex64 {
        self.coeffs.dotc(&other.coeffs)
    }

    /// Norm of the top quarter of the basis, a proxy for truncation error.
    pub fn tail_norm(&self) -> f64 {
        let dim = self.dim();
        let start = dim - (dim / 4).max(1);
        self.coeffs.rows(start, dim - start).norm()
    }
}

/// Truncated Fock-basis density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensity {
    matrix: DMatrix<Complex64>,
}

impl FockDensity {
    pub const HERMITIAN_TOL: f64 = 1e-12;
    pub const TRACE_TOL: f64 = 1e-9;
    pub const PSD_TOL: f64 = -1e-10;

    /// Validates Hermiticity, unit trace and positive semidefiniteness.
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidState(
                "density matrix must be square and non-empty".into(),
            ));
        }
        let herm = (&matrix - matrix.adjoint()).camax();
        if herm > Self::HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix is not Hermitian ({herm:e})"
            )));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > Self::TRACE_TOL || trace.im.abs() > Self::TRACE_TOL {
            return Err(Error::InvalidState(format!("density matrix trace {trace} is not 1")));
        }
        let hermitian = (&matrix + matrix.adjoint()) * Complex64::new(0.5, 0.0);
        let min_eig = hermitian.symmetric_eigenvalues().min();
        if min_eig < Self::PSD_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix has negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(Self { matrix: hermitian })
    }

    pub fn pure(v: &FockVector) -> Self {
        Self {
            matrix: v.coeffs() * v.coeffs().adjoint(),
        }
    }

    /// `|n⟩⟨n|`.
    pub fn number(n: usize, dim: usize) -> Result<Self> {
        Ok(Self::pure(&FockVector::number(n, dim)?))
    }

    /// `I/dim`.
    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidState("dimension must be positive".into()));
        }
        Ok(Self {
            matrix: DMatrix::identity(dim, dim) * Complex64::new(1.0 / dim as f64, 0.0),
        })
    }

    /// Convex combination `Σ wᵢ ρᵢ`; weights must be non-negative and sum to 1.
    pub fn mixture(parts: &[(f64, &FockDensity)]) -> Result<Self> {
        let dim = parts
            .first()
            .map(|(_, rho)| rho.dim())
            .ok_or_else(|| Error::InvalidState("empty mixture".into()))?;
        let mut matrix = DMatrix::zeros(dim, dim);
        for (w, rho) in parts {
            if *w < 0.0 || rho.dim() != dim {
                return Err(Error::InvalidState("mixture weights or dimensions mismatch".into()));
            }
            matrix += &rho.matrix * Complex64::new(*w, 0.0);
        }
        Self::new(matrix)
    }

    pub(crate) fn from_unchecked(matrix: DMatrix<Complex64>) -> Self {
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// `Tr(ρ A)`.
    pub fn expectation(&self, op: &DMatrix<Complex64>) -> Complex64 {
        (&self.matrix * op).trace()
    }

    /// `⟨v|ρ|v⟩`.
    pub fn quadratic_form(&self, v: &DVector<Complex64>) -> Complex64 {
        v.dotc(&(&self.matrix * v))
    }

    /// Mean and symmetrized covariance of `(x̂, p̂)` from the truncated quadratures.
    pub fn moments(&self) -> ([f64; 2], [[f64; 2]; 2]) {
        let (x, p) = quadratures(self.dim());
        let mx = self.expectation(&x).re;
        let mp = self.expectation(&p).re;
        let xx = self.expectation(&(&x * &x)).re - mx * mx;
        let pp = self.expectation(&(&p * &p)).re - mp * mp;
        let xp = 0.5 * self.expectation(&(&x * &p + &p * &x)).re - mx * mp;
        ([mx, mp], [[xx, xp], [xp, pp]])
    }
}

fn interleave(values: impl Iterator<Item = Complex64>) -> Vec<f64> {
    values.flat_map(|z| [z.re, z.im]).collect()
}

fn deinterleave(values: &[f64]) -> Result<Vec<Complex64>> {
    if !values.len().is_multiple_of(2) {
        return Err(Error::Parse("interleaved complex array has odd length".into()));
    }
    Ok(values.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect())
}

#[derive(Serialize, Deserialize)]
struct FockVectorJson {
    dim: usize,
    coeffs: Vec<f64>,
}

impl Serialize for FockVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FockVectorJson {
            dim: self.dim(),
            coeffs: interleave(self.coeffs.iter().copied()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FockVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = FockVectorJson::deserialize(d)?;
        let coeffs = deinterleave(&raw.coeffs).map_err(D::Error::custom)?;
        if coeffs.len() != raw.dim {
            return Err(D::Error::custom("coefficient count does not match dim"));
        }
        FockVector::new(DVector::from_vec(coeffs)).map_err(D::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct FockDensityJson {
    dim: usize,
    matrix: Vec<Vec<f64>>,
}

impl Serialize for FockDensity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows = self
            .matrix
            .row_iter()
            .map(|row| interleave(row.iter().copied()))
            .collect();
        FockDensityJson {
            dim: self.dim(),
            matrix: rows,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FockDensity {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = FockDensityJson::deserialize(d)?;
        if raw.matrix.len() != raw.dim {
            return Err(D::Error::custom("row count does not match dim"));
        }
        let mut entries = Vec::with_capacity(raw.dim * raw.dim);
        for row in &raw.matrix {
            let row = deinterleave(row).map_err(D::Error::custom)?;
            if row.len() != raw.dim {
                return Err(D::Error::custom("row length does not match dim"));
            }
            entries.extend(row);
        }
        FockDensity::new(DMatrix::from_row_slice(raw.dim, raw.dim, &entries)).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn vacuum_convention() {
        let v = GaussianState::vacuum();
        assert_eq!(v.mean(), [0.0, 0.0]);
        assert_eq!(v.cov(), [[0.5, 0.0], [0.0, 0.5]]);
        assert_abs_diff_eq!(v.density(0.0, 0.0), std::f64::consts::FRAC_1_PI, epsilon = 1e-15);
    }

    #[test]
    fn gaussian_rejects_uncertainty_violation() {
        assert!(GaussianState::new([0.0, 0.0], [[0.4, 0.0], [0.0, 0.4]]).is_err());
        assert!(GaussianState::new([0.0, 0.0], [[1.0, 0.0], [0.0, -1.0]]).is_err());
        assert!(GaussianState::new([0.0, 0.0], [[1.0, 0.2], [0.3, 1.0]]).is_err());
        assert!(GaussianState::squeezed_vacuum(0.7, 0.3).cov_det() > 0.25 - 1e-12);
        let s = GaussianState::squeezed_vacuum(0.7, 0.3);
        assert!(GaussianState::new(s.mean(), s.cov()).is_ok());
    }

    #[test]
    fn fock_density_validation() {
        let bad = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(1.2, 0.0),
            Complex64::new(-0.2, 0.0),
        ]));
        assert!(FockDensity::new(bad).is_err());
        let mut nonherm = DMatrix::identity(2, 2) * Complex64::new(0.5, 0.0);
        nonherm[(0, 1)] = Complex64::new(0.1, 0.0);
        assert!(FockDensity::new(nonherm).is_err());
        assert!(FockDensity::maximally_mixed(3).is_ok());
    }

    #[test]
    fn vacuum_projector_has_zero_field() {
        let rho = FockDensity::number(0, 8).unwrap();
        let (a, _) = fock_ladder(8);
        assert_eq!(rho.expectation(&a), Complex64::new(0.0, 0.0));
        let (mean, cov) = rho.moments();
        assert_eq!(mean, [0.0, 0.0]);
        assert_abs_diff_eq!(cov[0][0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(cov[1][1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn json_interleaves_real_and_imaginary_parts() {
        let v = FockVector::new(DVector::from_vec(vec![
            Complex64::new(0.6, 0.0),
            Complex64::new(0.0, 0.8),
        ]))
        .unwrap();
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"{"dim":2,"coeffs":[0.6,0.0,0.0,0.8]}"#);
        let back: FockVector = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);

        let rho = FockDensity::pure(&v);
        let s = serde_json::to_string(&rho).unwrap();
        let back: FockDensity = serde_json::from_str(&s).unwrap();
        assert!((back.matrix() - rho.matrix()).camax() < 1e-15);
        assert!(serde_json::from_str::<FockDensity>(r#"{"dim":1,"matrix":[[0.5,0.0]]}"#).is_err());
    }
}
