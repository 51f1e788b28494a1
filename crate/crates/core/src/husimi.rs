//! Outcome density `Q_M` of a retrodictively optimal measurement, three ways.
//!
//! * [`husimi_convolution`]: the Wigner grid smoothed by the kernel
//!   `(1/π) exp[−(a Δx² + 2c ΔxΔp + b Δp²)]`.
//! * [`husimi_overlap`]: `(1/2π) ⟨(x,p)_M| ρ̂ |(x,p)_M⟩` in a truncated Fock basis.
//! * [`husimi_gaussian_closed`]: for Gaussian states the kernel adds `½ G⁻¹` to
//!   the covariance.
//!
//! All three depend on `M` only through `G = MᵀM`.

use std::f64::consts::{FRAC_1_PI, PI};

use nalgebra::DVector;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sl2r::{MetricTensor, Sl2Matrix};
use crate::states::{FockDensity, FockSpace, GaussianState, GridSpec, PhaseSpaceGrid};

/// Values above this are treated as round-off when checking positivity.
pub const NEGATIVE_CLAMP: f64 = -1e-9;

/// Kernel support radius in the quadratic form `uᵀGu` (6 standard deviations).
const KERNEL_CUTOFF: f64 = 18.0;

/// Mass difference between input and output above which leakage is reported.
const LEAKAGE_WARN: f64 = 1e-3;

/// Direct summation is used below this many kernel-times-grid multiply-adds.
const DIRECT_WORK_LIMIT: usize = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Convolution,
    Overlap,
    ClosedForm,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Convolution => "convolution",
            Method::Overlap => "overlap",
            Method::ClosedForm => "closed_form",
        }
    }
}

/// `Q_M` sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HusimiResult {
    pub grid: PhaseSpaceGrid,
    pub metric: MetricTensor,
    pub method: Method,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Sidecar {
    pub metric: MetricTensor,
    pub method: Method,
    pub integral: f64,
    pub min_value: f64,
}

impl HusimiResult {
    fn new(grid: PhaseSpaceGrid, metric: MetricTensor, method: Method) -> Self {
        Self { grid, metric, method }
    }

    pub fn integral(&self) -> f64 {
        self.grid.integral()
    }

    /// Grid minimum, with round-off above [`NEGATIVE_CLAMP`] clamped to zero.
    pub fn min_value(&self) -> f64 {
        let raw = self.grid.min_value();
        if raw < NEGATIVE_CLAMP {
            raw
        } else {
            raw.max(0.0)
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.grid.min_value() >= NEGATIVE_CLAMP
    }

    pub fn sidecar(&self) -> Sidecar {
        Sidecar {
            metric: self.metric,
            method: self.method,
            integral: self.integral(),
            min_value: self.min_value(),
        }
    }
}

/// How the discrete convolution is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvolutionStrategy {
    /// Direct for small problems, spectral otherwise.
    #[default]
    Auto,
    Direct,
    /// Zero-padded FFT; no wrap-around.
    Spectral,
}

struct Kernel {
    half_x: usize,
    half_p: usize,
    /// `(2 half_x + 1) × (2 half_p + 1)`, x-major, offset `(−half_x, −half_p)` first.
    weights: Vec<f64>,
}

impl Kernel {
    fn new(g: &MetricTensor, dx: f64, dp: f64) -> Self {
        let half_x = ((KERNEL_CUTOFF * g.b()).sqrt() / dx).ceil() as usize;
        let half_p = ((KERNEL_CUTOFF * g.a()).sqrt() / dp).ceil() as usize;
        let cols = 2 * half_p + 1;
        let mut weights = vec![0.0; (2 * half_x + 1) * cols];
        for di in 0..=2 * half_x {
            let u = (di as f64 - half_x as f64) * dx;
            for dj in 0..cols {
                let v = (dj as f64 - half_p as f64) * dp;
                let q = g.quadratic_form(u, v);
                if q <= KERNEL_CUTOFF {
                    weights[di * cols + dj] = FRAC_1_PI * (-q).exp();
                }
            }
        }
        Self {
            half_x,
            half_p,
            weights,
        }
    }

    fn cols(&self) -> usize {
        2 * self.half_p + 1
    }

    fn rows(&self) -> usize {
        2 * self.half_x + 1
    }
}

/// Narrowest kernel width `1/√μ_max` over the eigenvalues `μ` of `G`.
pub fn kernel_min_width(g: &MetricTensor) -> f64 {
    1.0 / g.eigenvalues().1.sqrt()
}

/// Smooths a Wigner grid with the metric kernel.
pub fn husimi_convolution(w: &PhaseSpaceGrid, g: &MetricTensor) -> Result<HusimiResult> {
    husimi_convolution_with(w, g, ConvolutionStrategy::Auto)
}

pub fn husimi_convolution_with(
    w: &PhaseSpaceGrid,
    g: &MetricTensor,
    strategy: ConvolutionStrategy,
) -> Result<HusimiResult> {
    let spec = *w.spec();
    let (dx, dp) = (spec.dx(), spec.dp());
    let width = kernel_min_width(g);
    let spacing = dx.max(dp);
    if spacing > 0.5 * width {
        return Err(Error::Undersampled { spacing, width });
    }
    let kernel = Kernel::new(g, dx, dp);

    let mut weighted = w.values().to_vec();
    for i in 0..spec.nx {
        for j in 0..spec.np {
            weighted[i * spec.np + j] *= spec.trapezoid_weight(i, j);
        }
    }

    let nonzero = kernel.weights.iter().filter(|v| **v != 0.0).count();
    let use_direct = match strategy {
        ConvolutionStrategy::Direct => true,
        ConvolutionStrategy::Spectral => false,
        ConvolutionStrategy::Auto => nonzero.saturating_mul(spec.len()) <= DIRECT_WORK_LIMIT,
    };
    let values = if use_direct {
        convolve_direct(&weighted, &spec, &kernel)
    } else {
        convolve_spectral(&weighted, &spec, &kernel)
    };
    let grid = PhaseSpaceGrid::new(spec, values)?;

    let leak = (grid.integral() - w.integral()).abs();
    if leak > LEAKAGE_WARN {
        log::warn!(
            "convolution changed the grid mass by {leak:.3e}; pad the Wigner grid by at least 5 combined standard deviations"
        );
    }
    Ok(HusimiResult::new(grid, *g, Method::Convolution))
}

fn convolve_direct(weighted: &[f64], spec: &GridSpec, kernel: &Kernel) -> Vec<f64> {
    let (nx, np) = (spec.nx as isize, spec.np as isize);
    let (hx, hp) = (kernel.half_x as isize, kernel.half_p as isize);
    let cols = kernel.cols();
    let mut out = vec![0.0; spec.len()];
    for i in 0..nx {
        for j in 0..np {
            let mut acc = 0.0;
            // source (i − di, j − dj) must stay inside the grid
            let di_lo = (i - (nx - 1)).max(-hx);
            let di_hi = i.min(hx);
            let dj_lo = (j - (np - 1)).max(-hp);
            let dj_hi = j.min(hp);
            for di in di_lo..=di_hi {
                let krow = ((di + hx) as usize) * cols;
                let srow = ((i - di) as usize) * spec.np;
                for dj in dj_lo..=dj_hi {
                    let k = kernel.weights[krow + (dj + hp) as usize];
                    if k != 0.0 {
                        acc += k * weighted[srow + (j - dj) as usize];
                    }
                }
            }
            out[(i * np + j) as usize] = acc;
        }
    }
    out
}

fn fft_2d(data: &mut [Complex64], rows: usize, cols: usize, planner: &mut FftPlanner<f64>, inverse: bool) {
    let row_fft = if inverse {
        planner.plan_fft_inverse(cols)
    } else {
        planner.plan_fft_forward(cols)
    };
    for row in data.chunks_mut(cols) {
        row_fft.process(row);
    }
    let col_fft = if inverse {
        planner.plan_fft_inverse(rows)
    } else {
        planner.plan_fft_forward(rows)
    };
    let mut column = vec![Complex64::new(0.0, 0.0); rows];
    for c in 0..cols {
        for r in 0..rows {
            column[r] = data[r * cols + c];
        }
        col_fft.process(&mut column);
        for r in 0..rows {
            data[r * cols + c] = column[r];
        }
    }
}

fn convolve_spectral(weighted: &[f64], spec: &GridSpec, kernel: &Kernel) -> Vec<f64> {
    // linear convolution size; padding removes circular wrap-around
    let rows = spec.nx + kernel.rows() - 1;
    let cols = spec.np + kernel.cols() - 1;
    let zero = Complex64::new(0.0, 0.0);
    let mut signal = vec![zero; rows * cols];
    for i in 0..spec.nx {
        for j in 0..spec.np {
            signal[i * cols + j] = Complex64::new(weighted[i * spec.np + j], 0.0);
        }
    }
    let mut filter = vec![zero; rows * cols];
    for di in 0..kernel.rows() {
        for dj in 0..kernel.cols() {
            filter[di * cols + dj] = Complex64::new(kernel.weights[di * kernel.cols() + dj], 0.0);
        }
    }
    let mut planner = FftPlanner::new();
    fft_2d(&mut signal, rows, cols, &mut planner, false);
    fft_2d(&mut filter, rows, cols, &mut planner, false);
    for (s, f) in signal.iter_mut().zip(&filter) {
        *s *= f;
    }
    fft_2d(&mut signal, rows, cols, &mut planner, true);
    let scale = 1.0 / (rows * cols) as f64;
    let mut out = Vec::with_capacity(spec.len());
    for i in 0..spec.nx {
        for j in 0..spec.np {
            out.push(signal[(i + kernel.half_x) * cols + j + kernel.half_p].re * scale);
        }
    }
    out
}

/// Evaluates `(1/2π) ⟨(x,p)_M|ρ̂|(x,p)_M⟩` point by point, reusing the filter state.
#[derive(Debug, Clone)]
pub struct OverlapEvaluator<'a> {
    space: FockSpace,
    filter: DVector<Complex64>,
    rho: &'a FockDensity,
}

impl<'a> OverlapEvaluator<'a> {
    pub fn new(rho: &'a FockDensity, g: &MetricTensor) -> Result<Self> {
        let space = FockSpace::new(rho.dim())?;
        let filter = space.filter_vacuum(g)?;
        Ok(Self { space, filter, rho })
    }

    pub fn eval(&self, x: f64, p: f64) -> Result<f64> {
        let v = self.space.displaced_filter(&self.filter, x, p)?;
        let q = self.rho.quadratic_form(v.coeffs());
        debug_assert!(q.im.abs() <= 1e-10 * (1.0 + q.re.abs()));
        Ok(q.re / (2.0 * PI))
    }
}

/// `Q_M` at the given points from the squeezed-state overlap.
pub fn husimi_overlap(state: &FockDensity, m: &Sl2Matrix, points: &[(f64, f64)]) -> Result<Vec<f64>> {
    let eval = OverlapEvaluator::new(state, &m.metric())?;
    points.iter().map(|&(x, p)| eval.eval(x, p)).collect()
}

/// [`husimi_overlap`] over every node of a grid.
pub fn husimi_overlap_grid(state: &FockDensity, m: &Sl2Matrix, spec: &GridSpec) -> Result<HusimiResult> {
    let g = m.metric();
    let eval = OverlapEvaluator::new(state, &g)?;
    let mut values = Vec::with_capacity(spec.len());
    for i in 0..spec.nx {
        for j in 0..spec.np {
            values.push(eval.eval(spec.x(i), spec.p(j))?);
        }
    }
    Ok(HusimiResult::new(
        PhaseSpaceGrid::new(*spec, values)?,
        g,
        Method::Overlap,
    ))
}

/// Outcome law of a Gaussian state: same mean, covariance `Σ + ½(b, −c; −c, a)`.
pub fn husimi_gaussian_closed(state: &GaussianState, g: &MetricTensor) -> GaussianState {
    let s = state.cov();
    let gi = g.inverse_matrix();
    let cov = [
        [s[0][0] + 0.5 * gi[0][0], s[0][1] + 0.5 * gi[0][1]],
        [s[1][0] + 0.5 * gi[1][0], s[1][1] + 0.5 * gi[1][1]],
    ];
    GaussianState::new(state.mean(), cov).expect("adding a positive kernel covariance keeps the state valid")
}

/// [`husimi_gaussian_closed`] evaluated on a grid.
pub fn husimi_closed_grid(state: &GaussianState, g: &MetricTensor, spec: &GridSpec) -> HusimiResult {
    let law = husimi_gaussian_closed(state, g);
    HusimiResult::new(spec.fill(|x, p| law.density(x, p)), *g, Method::ClosedForm)
}

/// `ρ_M(x_M, p_M) = Q_M(M⁻¹(x_M, p_M))`, bilinearly interpolated.
pub fn rho_m_view(q: &HusimiResult, m: &Sl2Matrix, x_m: f64, p_m: f64) -> Result<f64> {
    let [x, p] = m.inverse().apply([x_m, p_m]);
    q.grid.interpolate(x, p)
}

/// Orientation and lengths of the smoothing ellipse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingScales {
    pub theta0: f64,
    pub lambda0: f64,
    /// Smoothing length along the `x_{θ₀}` axis.
    pub scale_x: f64,
    /// Smoothing length along the `p_{θ₀}` axis.
    pub scale_p: f64,
}

pub fn smoothing_scales(g: &MetricTensor) -> Result<SmoothingScales> {
    let p0 = g.canonical_orthogonal()?;
    Ok(SmoothingScales {
        theta0: p0.theta(),
        lambda0: p0.lambda(),
        scale_x: p0.lambda(),
        scale_p: 1.0 / p0.lambda(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sl2r::CanonicalParams;
    use crate::states::{wigner_fock, wigner_gaussian};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_4;

    fn oblique40_metric() -> MetricTensor {
        CanonicalParams::from_degrees(0.0, 40.0, 1.0).unwrap().matrix().metric()
    }

    #[test]
    fn vacuum_identity_convolution() {
        let spec = GridSpec::square(8.0, 161).unwrap();
        let w = wigner_gaussian(&GaussianState::vacuum(), &spec);
        let q = husimi_convolution(&w, &MetricTensor::identity()).unwrap();
        let expected = spec.fill(|x, p| (-(x * x + p * p) / 2.0).exp() / (2.0 * PI));
        assert!(q.grid.sup_diff(&expected).unwrap() < 1e-9);
        assert_abs_diff_eq!(q.grid.at(80, 80), 1.0 / (2.0 * PI), epsilon = 1e-9);
    }

    #[test]
    fn narrow_input_recovers_kernel() {
        let spec = GridSpec::square(6.0, 241).unwrap();
        // sharper than any physical state; the convolution does not care
        let sigma2 = 0.01;
        let input = spec.fill(|x, p| (-(x * x + p * p) / (2.0 * sigma2)).exp() / (2.0 * PI * sigma2));
        let q = husimi_convolution(&input, &MetricTensor::identity()).unwrap();
        // kernel covariance ½ plus input covariance 0.01
        let s = 0.5 + sigma2;
        let expected = spec.fill(|x, p| (-(x * x + p * p) / (2.0 * s)).exp() / (2.0 * PI * s));
        assert!(q.grid.sup_diff(&expected).unwrap() < 1e-8);
    }

    #[test]
    fn direct_and_spectral_agree() {
        let spec = GridSpec::new(-7.0, 7.0, 71, -6.0, 6.0, 61).unwrap();
        let state = GaussianState::squeezed_vacuum(0.3, 0.5).displaced(0.4, -0.2);
        let w = wigner_gaussian(&state, &spec);
        let g = CanonicalParams::new(0.3, 0.2, 1.2).unwrap().matrix().metric();
        let d = husimi_convolution_with(&w, &g, ConvolutionStrategy::Direct).unwrap();
        let s = husimi_convolution_with(&w, &g, ConvolutionStrategy::Spectral).unwrap();
        assert!(d.grid.sup_diff(&s.grid).unwrap() < 1e-12);
    }

    #[test]
    fn oblique40_metric_convolution_matches_closed_form() {
        let spec = GridSpec::square(10.0, 201).unwrap();
        let g = oblique40_metric();
        let w = wigner_gaussian(&GaussianState::vacuum(), &spec);
        let q = husimi_convolution(&w, &g).unwrap();
        let closed = husimi_closed_grid(&GaussianState::vacuum(), &g, &spec);
        assert!(q.grid.sup_diff(&closed.grid).unwrap() < 1e-6);
    }

    #[test]
    fn undersampled_grid_is_rejected() {
        let spec = GridSpec::square(10.0, 41).unwrap();
        let w = wigner_gaussian(&GaussianState::vacuum(), &spec);
        assert!(matches!(
            husimi_convolution(&w, &oblique40_metric()),
            Err(Error::Undersampled { .. })
        ));
    }

    #[test]
    fn overlap_examples() {
        let vac = FockDensity::number(0, 32).unwrap();
        let one = FockDensity::number(1, 32).unwrap();
        let id = Sl2Matrix::identity();
        let q = husimi_overlap(&vac, &id, &[(0.0, 0.0), (2.0, 0.0)]).unwrap();
        assert_abs_diff_eq!(q[0], 1.0 / (2.0 * PI), epsilon = 1e-12);
        assert_abs_diff_eq!(q[1], (-2.0f64).exp() / (2.0 * PI), epsilon = 1e-12);
        let q = husimi_overlap(&one, &id, &[(0.0, 0.0)]).unwrap();
        assert_abs_diff_eq!(q[0], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn closed_form_examples() {
        let out = husimi_gaussian_closed(&GaussianState::vacuum(), &MetricTensor::identity());
        assert_eq!(out.cov(), [[1.0, 0.0], [0.0, 1.0]]);

        let g = oblique40_metric();
        let out = husimi_gaussian_closed(&GaussianState::vacuum(), &g);
        let sec80 = 1.0 / 80f64.to_radians().cos();
        let tan80 = 80f64.to_radians().tan();
        assert_abs_diff_eq!(out.cov()[0][0], 0.5 + 0.5 * sec80, epsilon = 1e-12);
        assert_abs_diff_eq!(out.cov()[0][1], -0.5 * tan80, epsilon = 1e-12);
        assert_abs_diff_eq!(out.cov()[1][1], 0.5 + 0.5 * sec80, epsilon = 1e-12);

        let m = CanonicalParams::new(0.2, -0.3, 0.7).unwrap().matrix();
        let rm = Sl2Matrix::rotation(1.9) * m;
        let s = GaussianState::squeezed_vacuum(0.5, 0.1);
        let a = husimi_gaussian_closed(&s, &m.metric());
        let b = husimi_gaussian_closed(&s, &rm.metric());
        for k in 0..2 {
            for l in 0..2 {
                assert_abs_diff_eq!(a.cov()[k][l], b.cov()[k][l], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn single_photon_q_is_nonnegative() {
        let spec = GridSpec::square(8.0, 161).unwrap();
        let w = wigner_fock(&FockDensity::number(1, 2).unwrap(), &spec);
        assert!(w.min_value() < -0.3);
        let q = husimi_convolution(&w, &MetricTensor::identity()).unwrap();
        assert!(q.is_nonnegative());
        assert_abs_diff_eq!(q.integral(), 1.0, epsilon = 1e-3);
        // Q of |1⟩ for the identity metric is (1/2π)(r²/2)e^{−r²/2}
        let expected = spec.fill(|x, p| {
            let r2 = x * x + p * p;
            r2 / 2.0 * (-r2 / 2.0).exp() / (2.0 * PI)
        });
        assert!(q.grid.sup_diff(&expected).unwrap() < 1e-8);
    }

    #[test]
    fn rho_m_view_examples() {
        let spec = GridSpec::square(6.0, 121).unwrap();
        let q = husimi_closed_grid(&GaussianState::vacuum(), &MetricTensor::identity(), &spec);
        let id = Sl2Matrix::identity();
        assert_eq!(rho_m_view(&q, &id, spec.x(70), spec.p(40)).unwrap(), q.grid.at(70, 40));

        let r = Sl2Matrix::rotation(0.6);
        let v = rho_m_view(&q, &r, 1.0, 0.5).unwrap();
        let radial = (-(1.25f64) / 2.0).exp() / (2.0 * PI);
        assert_abs_diff_eq!(v, radial, epsilon = 2e-4);

        let t = Sl2Matrix::resolution(2.0).unwrap();
        let v = rho_m_view(&q, &t, 0.5, 2.0).unwrap();
        assert_abs_diff_eq!(v, q.grid.interpolate(1.0, 1.0).unwrap(), epsilon = 1e-15);
        assert!(rho_m_view(&q, &t, 4.0, 0.0).is_err());
    }

    #[test]
    fn smoothing_scale_examples() {
        let s = smoothing_scales(&MetricTensor::identity()).unwrap();
        assert_eq!((s.scale_x, s.scale_p), (1.0, 1.0));

        let s = smoothing_scales(&oblique40_metric()).unwrap();
        assert_abs_diff_eq!(s.theta0, -FRAC_PI_4, epsilon = 1e-12);
        assert_abs_diff_eq!(s.scale_x, 3.3808360360658334, epsilon = 1e-10);
        assert_abs_diff_eq!(s.scale_p, 0.29578482639568254, epsilon = 1e-10);

        let s = smoothing_scales(&MetricTensor::new(4.0, 0.25, 0.0).unwrap()).unwrap();
        assert_abs_diff_eq!(s.theta0, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.scale_x, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.scale_p, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn sidecar_json_shape() {
        let spec = GridSpec::square(6.0, 61).unwrap();
        let q = husimi_closed_grid(&GaussianState::vacuum(), &MetricTensor::identity(), &spec);
        let json = serde_json::to_value(q.sidecar()).unwrap();
        assert_eq!(json["method"], "closed_form");
        assert_eq!(json["metric"]["a"], 1.0);
        assert!(json["integral"].as_f64().unwrap() > 0.99);
        assert!(json["min_value"].as_f64().unwrap() >= 0.0);
    }
}
