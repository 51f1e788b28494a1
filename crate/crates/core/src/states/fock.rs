//! Ladder operators and the rotation, squeeze and displacement unitaries on a
//! truncated Fock space.
//!
//! All four unitaries reduce to exponentials of two real symmetric matrices,
//! `x̂` and `Y = â² + â†²`, conjugated by the diagonal rotation `Û_θ`:
//!
//! * `V̂_φ = exp(i s/2 · Y)` with `s = tanh⁻¹(tan φ)`
//! * `Ŵ_λ = Û_{π/4}† exp(i ln λ/2 · Y) Û_{π/4}`, since `â² − â†² = i Û_{π/4}† Y Û_{π/4}`
//! * `D̂_xp = Û_ϑ† exp(−i r x̂) Û_ϑ`, writing `x p̂ − p x̂ = r Û_ϑ† x̂ Û_ϑ`
//!
//! Each exponential is taken through one cached eigendecomposition, so the
//! truncated operators are unitary to rounding. Truncation still corrupts the
//! highest Fock sectors; callers check the tail of the states they build.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::{FockDensity, FockVector, GaussianState};
use crate::error::{Error, Result};
use crate::sl2r::{MetricTensor, Sl2Matrix};

/// Largest tolerated norm in the top quarter of a constructed state.
pub const TAIL_NORM_LIMIT: f64 = 1e-6;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Annihilation and creation operators: `â` has `√n` on the superdiagonal.
pub fn fock_ladder(dim: usize) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let mut a = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    let adag = a.adjoint();
    (a, adag)
}

/// Truncated `x̂ = (â + â†)/√2` and `p̂ = (â − â†)/(i√2)`.
pub fn quadratures(dim: usize) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let (a, adag) = fock_ladder(dim);
    let x = (&a + &adag) * Complex64::new(FRAC_1_SQRT_2, 0.0);
    let p = (&a - &adag) * Complex64::new(0.0, -FRAC_1_SQRT_2);
    (x, p)
}

fn check_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite",
        })
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::InvalidParameter {
            name: "dim",
            value: dim as f64,
            reason: "Fock truncation needs at least two levels",
        });
    }
    Ok(())
}

/// Truncated single-mode Fock space with cached spectral data.
#[derive(Debug, Clone)]
pub struct FockSpace {
    dim: usize,
    x_eig: SymmetricEigen<f64, nalgebra::Dyn>,
    y_eig: SymmetricEigen<f64, nalgebra::Dyn>,
}

impl FockSpace {
    pub fn new(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let mut x = DMatrix::<f64>::zeros(dim, dim);
        let mut y = DMatrix::<f64>::zeros(dim, dim);
        for n in 1..dim {
            let v = (n as f64 / 2.0).sqrt();
            x[(n - 1, n)] = v;
            x[(n, n - 1)] = v;
        }
        for n in 2..dim {
            // ⟨n−2|â²|n⟩ = √(n(n−1))
            let v = ((n * (n - 1)) as f64).sqrt();
            y[(n - 2, n)] = v;
            y[(n, n - 2)] = v;
        }
        Ok(Self {
            dim,
            x_eig: SymmetricEigen::new(x),
            y_eig: SymmetricEigen::new(y),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn rotation_phases(&self, theta: f64) -> DVector<Complex64> {
        DVector::from_fn(self.dim, |n, _| Complex64::from_polar(1.0, -theta * n as f64))
    }

    /// `exp(i t A)` for a cached real symmetric `A`.
    fn exp_i(eig: &SymmetricEigen<f64, nalgebra::Dyn>, t: f64) -> DMatrix<Complex64> {
        let v = eig.eigenvectors.map(|e| Complex64::new(e, 0.0));
        let mut scaled = v.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= Complex64::from_polar(1.0, t * eig.eigenvalues[k]);
        }
        scaled * v.transpose()
    }

    /// `exp(i t A) v` without forming the matrix.
    fn exp_i_apply(eig: &SymmetricEigen<f64, nalgebra::Dyn>, t: f64, v: &DVector<Complex64>) -> DVector<Complex64> {
        let basis = &eig.eigenvectors;
        let dim = v.len();
        let mut coeffs = DVector::from_element(dim, ZERO);
        for k in 0..dim {
            let col = basis.column(k);
            let mut s = ZERO;
            for n in 0..dim {
                s += v[n] * col[n];
            }
            coeffs[k] = s * Complex64::from_polar(1.0, t * eig.eigenvalues[k]);
        }
        let mut out = DVector::from_element(dim, ZERO);
        for k in 0..dim {
            let col = basis.column(k);
            let c = coeffs[k];
            for n in 0..dim {
                out[n] += c * col[n];
            }
        }
        out
    }

    fn conjugate_by_rotation(&self, m: &mut DMatrix<Complex64>, theta: f64) {
        // Û_θ† M Û_θ has entries e^{iθ(j−k)} M_jk
        let phases = self.rotation_phases(theta);
        for j in 0..self.dim {
            for k in 0..self.dim {
                m[(j, k)] *= phases[j].conj() * phases[k];
            }
        }
    }

    /// `Û_θ = exp(−iθ â†â)`.
    pub fn rotation(&self, theta: f64) -> Result<DMatrix<Complex64>> {
        check_finite("theta", theta)?;
        Ok(DMatrix::from_diagonal(&self.rotation_phases(theta)))
    }

    /// `V̂_φ = exp[(i/2) tanh⁻¹(tan φ) (â² + â†²)]`.
    pub fn squeeze_v(&self, phi: f64) -> Result<DMatrix<Complex64>> {
        check_finite("phi", phi)?;
        if phi.abs() >= FRAC_PI_4 {
            return Err(Error::InvalidParameter {
                name: "phi",
                value: phi,
                reason: "obliquity must satisfy |phi| < pi/4",
            });
        }
        Ok(Self::exp_i(&self.y_eig, 0.5 * phi.tan().atanh()))
    }

    /// `Ŵ_λ = exp[(ln λ / 2)(â² − â†²)]`.
    pub fn squeeze_w(&self, lambda: f64) -> Result<DMatrix<Complex64>> {
        check_finite("lambda", lambda)?;
        if lambda <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "lambda",
                value: lambda,
                reason: "resolution must be positive",
            });
        }
        let mut w = Self::exp_i(&self.y_eig, 0.5 * lambda.ln());
        self.conjugate_by_rotation(&mut w, FRAC_PI_4);
        Ok(w)
    }

    /// Writes `x p̂ − p x̂ = r (cos ϑ x̂ + sin ϑ p̂)`.
    fn displacement_polar(x: f64, p: f64) -> (f64, f64) {
        (x.hypot(p), x.atan2(-p))
    }

    /// `D̂_xp = exp[−i(x p̂ − p x̂)]`, which shifts `(x̂, p̂)` by `(x, p)`.
    pub fn displacement(&self, x: f64, p: f64) -> Result<DMatrix<Complex64>> {
        check_finite("x", x)?;
        check_finite("p", p)?;
        let (r, angle) = Self::displacement_polar(x, p);
        let mut d = Self::exp_i(&self.x_eig, -r);
        self.conjugate_by_rotation(&mut d, angle);
        Ok(d)
    }

    /// `D̂_xp v`, in O(dim²).
    pub fn displace(&self, x: f64, p: f64, v: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        check_finite("x", x)?;
        check_finite("p", p)?;
        let (r, angle) = Self::displacement_polar(x, p);
        let phases = self.rotation_phases(angle);
        let rotated = v.component_mul(&phases);
        let shifted = Self::exp_i_apply(&self.x_eig, -r, &rotated);
        Ok(shifted.component_mul(&phases.map(|z| z.conj())))
    }

    /// `Û_{θ₀}† Ŵ_{λ₀}† |0⟩`: the undisplaced filter state annihilated by `â_M`
    /// for every `M` in the class of `g`.
    pub fn filter_vacuum(&self, g: &MetricTensor) -> Result<DVector<Complex64>> {
        let p0 = g.canonical_orthogonal()?;
        let mut vac = DVector::from_element(self.dim, ZERO);
        vac[0] = Complex64::new(1.0, 0.0);
        // Ŵ† = Û_{π/4}† exp(−i ln λ/2 · Y) Û_{π/4}; Û_{π/4} fixes |0⟩
        let squeezed = Self::exp_i_apply(&self.y_eig, -0.5 * p0.lambda().ln(), &vac);
        let phases = self.rotation_phases(FRAC_PI_4);
        let squeezed = squeezed.component_mul(&phases.map(|z| z.conj()));
        // Û_{θ₀}† multiplies |n⟩ by e^{iθ₀n}
        let phases = self.rotation_phases(p0.theta());
        Ok(squeezed.component_mul(&phases.map(|z| z.conj())))
    }

    /// The squeezed state `|(x, p)_M⟩ = D̂_xp Û_{θ₀}† Ŵ_{λ₀}† |0⟩` with zero global phase.
    pub fn squeezed_state(&self, g: &MetricTensor, x: f64, p: f64) -> Result<FockVector> {
        let filter = self.filter_vacuum(g)?;
        self.displaced_filter(&filter, x, p)
    }

    pub(crate) fn displaced_filter(&self, filter: &DVector<Complex64>, x: f64, p: f64) -> Result<FockVector> {
        let v = FockVector::from_unchecked(self.displace(x, p, filter)?);
        let tail = v.tail_norm();
        if tail > TAIL_NORM_LIMIT {
            return Err(Error::Truncation {
                dim: self.dim,
                tail,
                limit: TAIL_NORM_LIMIT,
            });
        }
        Ok(v)
    }

    /// Fock projection of a Gaussian state.
    ///
    /// With `ν = 2√det Σ`, the state is `V ρ_th V†` where `ρ_th` is thermal with
    /// `n̄ = (ν − 1)/2` and `V = D̂ Û_{θ₀}† Ŵ_{λ₀}†` for the class of `G = (ν/2)Σ⁻¹`.
    pub fn gaussian(&self, state: &GaussianState) -> Result<FockDensity> {
        let cov = state.cov();
        let det = state.cov_det();
        let nu = state.symplectic_eigenvalue().max(1.0);
        let k = 0.5 * nu / det;
        let g = MetricTensor::new(k * cov[1][1], k * cov[0][0], -k * cov[0][1])?;
        let p0 = g.canonical_orthogonal()?;
        let [mx, mp] = state.mean();

        let mut unitary = self.squeeze_w(p0.lambda())?.adjoint();
        let phases = self.rotation_phases(p0.theta());
        for (n, mut row) in unitary.row_iter_mut().enumerate() {
            row *= phases[n].conj();
        }
        let unitary = self.displacement(mx, mp)? * unitary;

        let nbar = 0.5 * (nu - 1.0);
        let rho = if nbar < 1e-12 {
            let col = unitary.column(0).into_owned();
            &col * col.adjoint()
        } else {
            let ratio = nbar / (nbar + 1.0);
            let weights: Vec<f64> = (0..self.dim).map(|n| ratio.powi(n as i32)).collect();
            let total: f64 = weights.iter().sum();
            let mut scaled = unitary.clone();
            for (n, mut col) in scaled.column_iter_mut().enumerate() {
                col *= Complex64::new(weights[n] / total, 0.0);
            }
            scaled * unitary.adjoint()
        };
        let rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
        let diag_tail: f64 = (self.dim - (self.dim / 4).max(1)..self.dim)
            .map(|n| rho[(n, n)].re)
            .sum();
        if diag_tail.sqrt() > TAIL_NORM_LIMIT {
            return Err(Error::Truncation {
                dim: self.dim,
                tail: diag_tail.sqrt(),
                limit: TAIL_NORM_LIMIT,
            });
        }
        Ok(FockDensity::from_unchecked(rho))
    }
}

pub fn unitary_rotation(theta: f64, dim: usize) -> Result<DMatrix<Complex64>> {
    check_dim(dim)?;
    check_finite("theta", theta)?;
    Ok(DMatrix::from_diagonal(&DVector::from_fn(dim, |n, _| {
        Complex64::from_polar(1.0, -theta * n as f64)
    })))
}

pub fn unitary_squeeze_v(phi: f64, dim: usize) -> Result<DMatrix<Complex64>> {
    FockSpace::new(dim)?.squeeze_v(phi)
}

pub fn unitary_squeeze_w(lambda: f64, dim: usize) -> Result<DMatrix<Complex64>> {
    FockSpace::new(dim)?.squeeze_w(lambda)
}

pub fn displacement(x: f64, p: f64, dim: usize) -> Result<DMatrix<Complex64>> {
    FockSpace::new(dim)?.displacement(x, p)
}

/// `|(x, p)_M⟩` for the measurement class of `m`, in a `dim`-level truncation.
pub fn squeezed_state(m: &Sl2Matrix, x: f64, p: f64, dim: usize) -> Result<FockVector> {
    FockSpace::new(dim)?.squeezed_state(&m.metric(), x, p)
}

/// `‖(â_M − (x_M + i p_M)/√2) v‖`, with `â_M = (x̂_M + i p̂_M)/√2` assembled from
/// the truncated quadratures and `(x_M, p_M) = M (x, p)`.
pub fn annihilation_residual(m: &Sl2Matrix, x: f64, p: f64, v: &FockVector) -> f64 {
    let (xq, pq) = quadratures(v.dim());
    let r = m.rows();
    let c = |t: f64| Complex64::new(t, 0.0);
    let x_m = &xq * c(r[0][0]) + &pq * c(r[0][1]);
    let p_m = &xq * c(r[1][0]) + &pq * c(r[1][1]);
    let a_m = (x_m + p_m * Complex64::new(0.0, 1.0)) * c(FRAC_1_SQRT_2);
    let [xo, po] = m.apply([x, p]);
    let alpha = Complex64::new(xo, po) * FRAC_1_SQRT_2;
    (a_m * v.coeffs() - v.coeffs() * alpha).norm()
}

pub fn gaussian_to_fock(state: &GaussianState, dim: usize) -> Result<FockDensity> {
    FockSpace::new(dim)?.gaussian(state)
}
