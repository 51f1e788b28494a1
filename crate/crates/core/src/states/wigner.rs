use std::f64::consts::FRAC_1_PI;

use num_complex::Complex64;

use super::{FockDensity, GaussianState, GridSpec, PhaseSpaceGrid};

/// Wigner function of a Gaussian state: its mean/covariance normal density.
pub fn wigner_gaussian(state: &GaussianState, spec: &GridSpec) -> PhaseSpaceGrid {
    spec.fill(|x, p| state.density(x, p))
}

/// Wigner function of a truncated density matrix, sampled on a grid.
pub fn wigner_fock(rho: &FockDensity, spec: &GridSpec) -> PhaseSpaceGrid {
    let mut scratch = vec![Complex64::new(0.0, 0.0); rho.dim()];
    spec.fill(|x, p| wigner_point_with(rho, x, p, &mut scratch))
}

/// `W(x, p) = Σ ρ_mn W_mn(x, p)` at a single point.
pub fn wigner_fock_point(rho: &FockDensity, x: f64, p: f64) -> f64 {
    let mut scratch = vec![Complex64::new(0.0, 0.0); rho.dim()];
    wigner_point_with(rho, x, p, &mut scratch)
}

// Builds the Wigner functions of |m⟩⟨n| row by row with the Laguerre three-term
// recurrence in α = (x + ip)/√2, so no factorials or large powers appear.
fn wigner_point_with(rho: &FockDensity, x: f64, p: f64, w: &mut [Complex64]) -> f64 {
    let r = rho.matrix();
    let dim = rho.dim();
    let two_alpha = Complex64::new(x, p) * std::f64::consts::SQRT_2;
    let two_alpha_conj = two_alpha.conj();

    w[0] = Complex64::new((-(x * x + p * p)).exp() * FRAC_1_PI, 0.0);
    let mut total = r[(0, 0)].re * w[0].re;
    for n in 1..dim {
        w[n] = two_alpha * w[n - 1] / (n as f64).sqrt();
        total += 2.0 * (r[(0, n)] * w[n]).re;
    }
    for m in 1..dim {
        let sm = (m as f64).sqrt();
        let mut prev = w[m];
        w[m] = (two_alpha_conj * prev - sm * w[m - 1]) / sm;
        total += (r[(m, m)] * w[m]).re;
        for n in m + 1..dim {
            let next = (two_alpha * w[n - 1] - sm * prev) / (n as f64).sqrt();
            prev = w[n];
            w[n] = next;
            total += 2.0 * (r[(m, n)] * w[n]).re;
        }
    }
    total
}
