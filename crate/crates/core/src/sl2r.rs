//! Exact algebra of SL(2,R) measurement matrices.
//!
//! A joint measurement of the quadratures `x̂_M`, `p̂_M` is labelled by a unimodular
//! matrix `M` with `(x̂_M, p̂_M)ᵀ = M (x̂, p̂)ᵀ`. Every such matrix factors as
//! `M = T_λ S_φ R_θ` (resolution, obliquity, rotation). Two matrices describe
//! informationally equivalent measurements exactly when they share the metric
//! `MᵀM`, and each class contains a zero-obliquity representative.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance on the unit-determinant invariants.
pub const INVARIANT_RTOL: f64 = 1e-9;

/// Absolute tolerance for reconstruction self-checks, scaled by the matrix size.
const RECONSTRUCTION_TOL: f64 = 1e-10;

/// Below this relative size `a - b` is treated as zero when canonicalizing.
const EQUAL_DIAGONAL_RTOL: f64 = 1e-12;

/// Wraps an angle into `(-π, π]`.
pub fn normalize_angle(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let r = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

/// `θ mod π/2`, i.e. `θ - nπ/2` for the integer `n` with `nπ/2 ≤ θ < (n+1)π/2`.
pub fn mod_half_pi(theta: f64) -> f64 {
    let r = theta.rem_euclid(FRAC_PI_2);
    // rem_euclid can round up to the modulus for tiny negative inputs
    if r >= FRAC_PI_2 {
        0.0
    } else {
        r
    }
}

/// Rotation, obliquity and resolution of a measurement matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct CanonicalParams {
    theta: f64,
    phi: f64,
    lambda: f64,
}

#[derive(Deserialize)]
struct RawParams {
    theta: f64,
    phi: f64,
    lambda: f64,
}

impl TryFrom<RawParams> for CanonicalParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        CanonicalParams::new(raw.theta, raw.phi, raw.lambda)
    }
}

impl CanonicalParams {
    /// Validates `|φ| < π/4` and `λ > 0`; `θ` is wrapped into `(-π, π]`.
    pub fn new(theta: f64, phi: f64, lambda: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::InvalidParameter {
                name: "theta",
                value: theta,
                reason: "must be finite",
            });
        }
        if !phi.is_finite() || phi.abs() >= FRAC_PI_4 {
            return Err(Error::InvalidParameter {
                name: "phi",
                value: phi,
                reason: "obliquity must satisfy |phi| < pi/4",
            });
        }
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "lambda",
                value: lambda,
                reason: "resolution must be positive and finite",
            });
        }
        Ok(Self {
            theta: normalize_angle(theta),
            phi,
            lambda,
        })
    }

    /// Same as [`CanonicalParams::new`] with angles given in degrees.
    pub fn from_degrees(theta_deg: f64, phi_deg: f64, lambda: f64) -> Result<Self> {
        Self::new(theta_deg.to_radians(), phi_deg.to_radians(), lambda)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// The matrix `√sec2φ · [(1/λ)cos(θ+φ), (1/λ)sin(θ+φ); −λ sin(θ−φ), λ cos(θ−φ)]`.
    pub fn matrix(&self) -> Sl2Matrix {
        let (theta, phi, lambda) = (self.theta, self.phi, self.lambda);
        let k = (1.0 / (2.0 * phi).cos()).sqrt();
        let (sp, cp) = (theta + phi).sin_cos();
        let (sm, cm) = (theta - phi).sin_cos();
        Sl2Matrix::from_rows_unchecked([[k * cp / lambda, k * sp / lambda], [-k * lambda * sm, k * lambda * cm]])
    }

    /// Retrodictive accuracies of the two measured quadratures,
    /// `λ/√(2 sec2φ)` and `1/(λ√(2 sec2φ))`.
    pub fn accuracies(&self) -> (f64, f64) {
        let s = (2.0 / (2.0 * self.phi).cos()).sqrt();
        (self.lambda / s, 1.0 / (self.lambda * s))
    }
}

/// A real 2×2 matrix with unit determinant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct Sl2Matrix {
    m: [[f64; 2]; 2],
}

#[derive(Serialize, Deserialize)]
struct RawMatrix {
    m: [[f64; 2]; 2],
}

impl TryFrom<RawMatrix> for Sl2Matrix {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        Sl2Matrix::from_rows(raw.m)
    }
}

impl From<Sl2Matrix> for RawMatrix {
    fn from(m: Sl2Matrix) -> Self {
        RawMatrix { m: m.m }
    }
}

impl Sl2Matrix {
    pub fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Result<Self> {
        Self::from_rows([[m11, m12], [m21, m22]])
    }

    /// Rejects matrices whose determinant differs from 1 by more than a relative 1e-9.
    pub fn from_rows(m: [[f64; 2]; 2]) -> Result<Self> {
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NotUnimodular { det: f64::NAN });
        }
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let scale = (m[0][0] * m[1][1]).abs() + (m[0][1] * m[1][0]).abs();
        if (det - 1.0).abs() > INVARIANT_RTOL * scale.max(1.0) {
            return Err(Error::NotUnimodular { det });
        }
        Ok(Self { m })
    }

    pub(crate) fn from_rows_unchecked(m: [[f64; 2]; 2]) -> Self {
        Self { m }
    }

    pub fn identity() -> Self {
        Self::from_rows_unchecked([[1.0, 0.0], [0.0, 1.0]])
    }

    /// `R_θ = [cos θ, sin θ; −sin θ, cos θ]`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::from_rows_unchecked([[c, s], [-s, c]])
    }

    /// `S_φ = √sec2φ · [cos φ, sin φ; sin φ, cos φ]`.
    pub fn obliquity(phi: f64) -> Result<Self> {
        let p = CanonicalParams::new(0.0, phi, 1.0)?;
        let k = (1.0 / (2.0 * p.phi).cos()).sqrt();
        let (s, c) = p.phi.sin_cos();
        Ok(Self::from_rows_unchecked([[k * c, k * s], [k * s, k * c]]))
    }

    /// `T_λ = diag(1/λ, λ)`.
    pub fn resolution(lambda: f64) -> Result<Self> {
        let p = CanonicalParams::new(0.0, 0.0, lambda)?;
        Ok(Self::from_rows_unchecked([[1.0 / p.lambda, 0.0], [0.0, p.lambda]]))
    }

    pub fn from_params(p: &CanonicalParams) -> Self {
        p.matrix()
    }

    pub fn rows(&self) -> [[f64; 2]; 2] {
        self.m
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.m[row][col]
    }

    pub fn determinant(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn transpose(&self) -> Self {
        let m = self.m;
        Self::from_rows_unchecked([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    /// Inverse, using `det = 1`.
    pub fn inverse(&self) -> Self {
        let m = self.m;
        Self::from_rows_unchecked([[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]])
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        let m = self.m;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Sl2Matrix) -> f64 {
        self.m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn max_abs_entry(&self) -> f64 {
        self.m.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Recovers `(θ, φ, λ)`.
    ///
    /// `θ+φ` and `θ−φ` are the polar angles of the first row and of `(m22, −m21)`;
    /// `λ` follows from the first-row norm.
    pub fn params(&self) -> Result<CanonicalParams> {
        let m = self.m;
        let row1 = m[0][0].hypot(m[0][1]);
        let row2 = m[1][0].hypot(m[1][1]);
        if !(row1 > 0.0 && row2 > 0.0) {
            return Err(Error::Reconstruction {
                context: "params_from_matrix: vanishing row norm",
                residual: row1.min(row2),
                tolerance: 0.0,
            });
        }
        let sum = m[0][1].atan2(m[0][0]);
        let diff = (-m[1][0]).atan2(m[1][1]);
        // det = |r1||r2| cos(sum - diff) = 1 forces the wrapped difference into (-π/2, π/2)
        let two_phi = normalize_angle(sum - diff);
        let phi = 0.5 * two_phi;
        let theta = normalize_angle(diff + phi);
        let lambda = (1.0 / two_phi.cos()).sqrt() / row1;
        let params = CanonicalParams::new(theta, phi, lambda)?;
        let residual = params.matrix().max_abs_diff(self);
        let tolerance = RECONSTRUCTION_TOL * self.max_abs_entry().max(1.0);
        if residual > tolerance {
            return Err(Error::Reconstruction {
                context: "params_from_matrix",
                residual,
                tolerance,
            });
        }
        Ok(params)
    }

    /// Factors `M = T_λ S_φ R_θ`.
    pub fn decompose(&self) -> Result<Decomposition> {
        let params = self.params()?;
        Ok(Decomposition {
            t_lambda: Sl2Matrix::resolution(params.lambda)?,
            s_phi: Sl2Matrix::obliquity(params.phi)?,
            r_theta: Sl2Matrix::rotation(params.theta),
            params,
        })
    }

    /// The metric tensor `MᵀM`.
    pub fn metric(&self) -> MetricTensor {
        let m = self.m;
        MetricTensor {
            a: m[0][0] * m[0][0] + m[1][0] * m[1][0],
            b: m[0][1] * m[0][1] + m[1][1] * m[1][1],
            c: m[0][0] * m[0][1] + m[1][0] * m[1][1],
        }
    }

    /// `diag(1/τ, τ) · M`: trades accuracy between the two measured quadratures.
    pub fn rebalance(&self, tau: f64) -> Result<Self> {
        if !tau.is_finite() || tau <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "tau",
                value: tau,
                reason: "must be positive and finite",
            });
        }
        Ok(Sl2Matrix::resolution(tau)? * *self)
    }

    /// True when `L Lᵀ` is the identity within `tol`: unit rows, mutually orthogonal.
    pub fn is_rotation(&self, tol: f64) -> bool {
        let m = self.m;
        let n1 = m[0][0] * m[0][0] + m[0][1] * m[0][1];
        let n2 = m[1][0] * m[1][0] + m[1][1] * m[1][1];
        let dot = m[0][0] * m[1][0] + m[0][1] * m[1][1];
        (n1 - 1.0).abs() <= tol && (n2 - 1.0).abs() <= tol && dot.abs() <= tol
    }
}

impl Mul for Sl2Matrix {
    type Output = Sl2Matrix;

    fn mul(self, rhs: Sl2Matrix) -> Sl2Matrix {
        let (a, b) = (self.m, rhs.m);
        Sl2Matrix::from_rows_unchecked([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

/// `M = T_λ · S_φ · R_θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    pub t_lambda: Sl2Matrix,
    pub s_phi: Sl2Matrix,
    pub r_theta: Sl2Matrix,
    pub params: CanonicalParams,
}

impl Decomposition {
    pub fn product(&self) -> Sl2Matrix {
        self.t_lambda * self.s_phi * self.r_theta
    }
}

/// Symmetric metric `(a, c; c, b)` with `ab − c² = 1`.
///
/// The complete invariant of an informational-equivalence class, and the
/// quadratic form in the smoothing kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMetric")]
pub struct MetricTensor {
    a: f64,
    b: f64,
    c: f64,
}

#[derive(Deserialize)]
struct RawMetric {
    a: f64,
    b: f64,
    c: f64,
}

impl TryFrom<RawMetric> for MetricTensor {
    type Error = Error;

    fn try_from(raw: RawMetric) -> Result<Self> {
        MetricTensor::new(raw.a, raw.b, raw.c)
    }
}

impl MetricTensor {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let finite = a.is_finite() && b.is_finite() && c.is_finite();
        if !finite || a <= 0.0 || b <= 0.0 || (a * b - c * c - 1.0).abs() > INVARIANT_RTOL * (a * b).max(1.0) {
            return Err(Error::InvalidMetric { a, b, c });
        }
        Ok(Self { a, b, c })
    }

    pub fn identity() -> Self {
        Self { a: 1.0, b: 1.0, c: 0.0 }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn as_matrix(&self) -> [[f64; 2]; 2] {
        [[self.a, self.c], [self.c, self.b]]
    }

    /// `G⁻¹ = (b, −c; −c, a)`, using `det G = 1`.
    pub fn inverse_matrix(&self) -> [[f64; 2]; 2] {
        [[self.b, -self.c], [-self.c, self.a]]
    }

    /// The squared line element `a dx² + 2c dx dp + b dp²`.
    pub fn quadratic_form(&self, dx: f64, dp: f64) -> f64 {
        self.a * dx * dx + 2.0 * self.c * dx * dp + self.b * dp * dp
    }

    /// Eigenvalues of `G`, ascending. Their product is 1.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let half_trace = 0.5 * (self.a + self.b);
        let r = (0.5 * (self.a - self.b)).hypot(self.c);
        let hi = half_trace + r;
        (1.0 / hi, hi)
    }

    pub fn max_abs_diff(&self, other: &MetricTensor) -> f64 {
        (self.a - other.a)
            .abs()
            .max((self.b - other.b).abs())
            .max((self.c - other.c).abs())
    }

    /// Zero-obliquity representative `(θ₀, 0, λ₀)` of the equivalence class.
    ///
    /// `λ₀²` is the root of `λ² + λ⁻² = a + b` selected by `sign(a − b)`, and
    /// `2θ₀` is the polar angle of `(a − b, 2c)` divided by `λ₀⁻² − λ₀²`. For
    /// `a = b` the class has `θ₀ = −π/4` and `λ₀ = √(a + c)`.
    pub fn canonical_orthogonal(&self) -> Result<CanonicalParams> {
        let (a, b, c) = (self.a, self.b, self.c);
        let sum = a + b;
        let (theta0, lambda0) = if (a - b).abs() <= EQUAL_DIAGONAL_RTOL * sum {
            (-FRAC_PI_4, (a + c).sqrt())
        } else {
            // (a+b)² − 4 rewritten with ab − c² = 1 to avoid cancellation near the identity
            let disc = (a - b).hypot(2.0 * c);
            let lambda_sq = if a > b { 2.0 / (sum + disc) } else { 0.5 * (sum + disc) };
            let k = 1.0 / lambda_sq - lambda_sq;
            let theta0 = 0.5 * (2.0 * c / k).atan2((a - b) / k);
            (theta0, lambda_sq.sqrt())
        };
        let params = CanonicalParams::new(theta0, 0.0, lambda0)?;
        let residual = params.matrix().metric().max_abs_diff(self);
        let tolerance = RECONSTRUCTION_TOL * sum.max(1.0);
        if residual > tolerance {
            return Err(Error::Reconstruction {
                context: "canonical_orthogonal",
                residual,
                tolerance,
            });
        }
        Ok(params)
    }
}

/// Free-function form of [`Sl2Matrix::from_params`].
pub fn matrix_from_params(p: &CanonicalParams) -> Sl2Matrix {
    p.matrix()
}

/// Free-function form of [`Sl2Matrix::params`].
pub fn params_from_matrix(m: &Sl2Matrix) -> Result<CanonicalParams> {
    m.params()
}

pub fn metric_of(m: &Sl2Matrix) -> MetricTensor {
    m.metric()
}

/// Informational equivalence: the two metrics agree entrywise within `tol`.
pub fn are_equivalent(m: &Sl2Matrix, m2: &Sl2Matrix, tol: f64) -> bool {
    m.metric().max_abs_diff(&m2.metric()) <= tol
}

/// The pointer transformation `L = M2 · M⁻¹`.
pub fn pointer_transform(m: &Sl2Matrix, m2: &Sl2Matrix) -> Sl2Matrix {
    *m2 * m.inverse()
}

pub fn canonical_orthogonal(g: &MetricTensor) -> Result<CanonicalParams> {
    g.canonical_orthogonal()
}

/// Closed-form zero-obliquity representative for a balanced (`λ = 1`) measurement.
///
/// Returns `(θ₀, λ₀)` with `θ₀ = [θ]_{π/2} − π/4` and
/// `λ₀² = sec2φ + sign(sin2θ)·tan2φ`, or `sec2φ + cos2θ·tan2φ` when `sin2θ = 0`.
pub fn canonical_orthogonal_balanced(theta: f64, phi: f64) -> Result<(f64, f64)> {
    CanonicalParams::new(theta, phi, 1.0)?;
    if phi == 0.0 {
        return Ok((-FRAC_PI_4, 1.0));
    }
    let sec = 1.0 / (2.0 * phi).cos();
    let tan = (2.0 * phi).tan();
    let (s2, c2) = (2.0 * theta).sin_cos();
    if s2.abs() <= EQUAL_DIAGONAL_RTOL {
        // θ is a multiple of π/2, so [θ]_{π/2} = 0
        Ok((-FRAC_PI_4, (sec + c2.round() * tan).sqrt()))
    } else {
        let lambda0 = (sec + s2.signum() * tan).sqrt();
        Ok((normalize_angle(mod_half_pi(theta) - FRAC_PI_4), lambda0))
    }
}
