//! Synthetic measurement outcomes drawn from `Q_M`.
//!
//! Generator: ChaCha8 seeded with `seed_from_u64`. Identical inputs and seed
//! give identical batches.

use std::fmt::Write as _;
use std::io::BufRead;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::husimi::husimi_gaussian_closed;
use crate::sl2r::{MetricTensor, Sl2Matrix};
use crate::states::{FockDensity, FockSpace, GaussianState};

/// Proposal covariance inflation for rejection sampling.
pub const PROPOSAL_INFLATION: f64 = 1.5;

/// Rejection sampling gives up below this acceptance rate.
pub const MIN_ACCEPTANCE: f64 = 1e-3;

/// Safety factor on the probed envelope constant.
const ENVELOPE_MARGIN: f64 = 1.2;

/// Proposals drawn before the acceptance rate is judged.
const ACCEPTANCE_WARMUP: usize = 10_000;

/// Largest padded Fock space used for far-out proposals.
const MAX_EVAL_DIM: usize = 1024;

/// `Q_M` of a Fock density at arbitrary points.
///
/// A density of dimension `N` padded with zeros is the same state, so a point
/// whose filter state overflows the native space is retried in a space of
/// twice the size; only its first `N` components enter the overlap.
struct FockTarget<'a> {
    rho: &'a FockDensity,
    g: MetricTensor,
    levels: Vec<(FockSpace, DVector<Complex64>)>,
}

impl<'a> FockTarget<'a> {
    fn new(rho: &'a FockDensity, g: MetricTensor) -> Result<Self> {
        let mut target = Self {
            rho,
            g,
            levels: Vec::new(),
        };
        target.push_level(rho.dim())?;
        Ok(target)
    }

    fn push_level(&mut self, dim: usize) -> Result<()> {
        let space = FockSpace::new(dim)?;
        let filter = space.filter_vacuum(&self.g)?;
        self.levels.push((space, filter));
        Ok(())
    }

    fn eval(&mut self, x: f64, p: f64) -> Result<f64> {
        let n = self.rho.dim();
        let mut k = 0;
        loop {
            let (space, filter) = &self.levels[k];
            match space.displaced_filter(filter, x, p) {
                Ok(v) => {
                    let low = v.coeffs().rows(0, n).into_owned();
                    return Ok(self.rho.quadratic_form(&low).re / (2.0 * PI));
                }
                Err(Error::Truncation { dim, .. }) if 2 * dim <= MAX_EVAL_DIM => {
                    k += 1;
                    if k == self.levels.len() {
                        log::debug!("padding Fock space to {} for ({x:.3}, {p:.3})", 2 * dim);
                        self.push_level(2 * dim)?;
                    }
                }
                Err(e) => return Err(e),
            }
        }
    }
}

/// Outcomes `(x, p)` of repeated measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeBatch {
    samples: Vec<[f64; 2]>,
    metric: MetricTensor,
    seed: u64,
}

impl OutcomeBatch {
    pub fn samples(&self) -> &[[f64; 2]] {
        &self.samples
    }

    pub fn metric(&self) -> &MetricTensor {
        &self.metric
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn count(&self) -> usize {
        self.samples.len()
    }

    /// The same outcomes expressed in measured coordinates `(x_M, p_M) = M (x, p)`.
    pub fn in_coordinates(&self, m: &Sl2Matrix) -> Vec<[f64; 2]> {
        self.samples.iter().map(|&s| m.apply(s)).collect()
    }

    /// Header `# seed <seed> n <count> metric <a> <b> <c>`, then one `x p` line per outcome.
    pub fn to_csv_string(&self) -> String {
        let g = &self.metric;
        let mut out = String::with_capacity(self.samples.len() * 42);
        let _ = writeln!(
            out,
            "# seed {} n {} metric {:?} {:?} {:?}",
            self.seed,
            self.count(),
            g.a(),
            g.b(),
            g.c()
        );
        for [x, p] in &self.samples {
            let _ = writeln!(out, "{x:?} {p:?}");
        }
        out
    }

    pub fn read_csv(r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty outcome file".into()))??;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let layout_ok =
            fields.len() == 9 && fields[0] == "#" && fields[1] == "seed" && fields[3] == "n" && fields[5] == "metric";
        if !layout_ok {
            return Err(Error::Parse(format!("bad outcome header `{header}`")));
        }
        let parse_err = |e: std::num::ParseFloatError| Error::Parse(e.to_string());
        let seed = fields[2].parse::<u64>().map_err(|e| Error::Parse(e.to_string()))?;
        let n = fields[4].parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?;
        let metric = MetricTensor::new(
            fields[6].parse().map_err(parse_err)?,
            fields[7].parse().map_err(parse_err)?,
            fields[8].parse().map_err(parse_err)?,
        )?;
        let mut samples = Vec::with_capacity(n);
        for line in lines {
            let line = line?;
            let mut it = line.split_whitespace();
            match (it.next(), it.next(), it.next()) {
                (None, _, _) => continue,
                (Some(x), Some(p), None) => {
                    samples.push([x.parse().map_err(parse_err)?, p.parse().map_err(parse_err)?])
                }
                _ => return Err(Error::Parse(format!("bad outcome line `{line}`"))),
            }
        }
        if samples.len() != n {
            return Err(Error::Parse(format!(
                "header says {n} outcomes, found {}",
                samples.len()
            )));
        }
        Ok(Self { samples, metric, seed })
    }
}

/// Lower Cholesky factor of a 2×2 covariance.
fn cholesky(cov: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let l11 = cov[0][0].sqrt();
    let l21 = cov[1][0] / l11;
    let l22 = (cov[1][1] - l21 * l21).sqrt();
    [[l11, 0.0], [l21, l22]]
}

fn draw_normal(rng: &mut ChaCha8Rng, mean: [f64; 2], chol: &[[f64; 2]; 2]) -> [f64; 2] {
    let z0: f64 = rng.sample(StandardNormal);
    let z1: f64 = rng.sample(StandardNormal);
    [mean[0] + chol[0][0] * z0, mean[1] + chol[1][0] * z0 + chol[1][1] * z1]
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    Ok(())
}

/// Exact draws from the closed-form outcome law of a Gaussian state.
pub fn sample_gaussian(state: &GaussianState, g: &MetricTensor, n: usize, seed: u64) -> Result<OutcomeBatch> {
    check_count(n)?;
    let law = husimi_gaussian_closed(state, g);
    let chol = cholesky(law.cov());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..n).map(|_| draw_normal(&mut rng, law.mean(), &chol)).collect();
    Ok(OutcomeBatch {
        samples,
        metric: *g,
        seed,
    })
}

/// Rejection sampling of `Q_M` for a Fock-basis state.
///
/// The proposal is the closed-form outcome law of the Gaussian state with the
/// same first and second moments, its covariance inflated by
/// [`PROPOSAL_INFLATION`]. The envelope constant is probed on a whitened
/// 41×41 lattice spanning ±5 proposal standard deviations.
pub fn sample_fock(rho: &FockDensity, m: &Sl2Matrix, n: usize, seed: u64) -> Result<OutcomeBatch> {
    check_count(n)?;
    let g = m.metric();
    let mut target = FockTarget::new(rho, g)?;

    let (mean, cov) = rho.moments();
    let matched = GaussianState::new(mean, cov)?;
    let law = husimi_gaussian_closed(&matched, &g);
    let c = law.cov();
    let proposal = GaussianState::new(
        mean,
        [
            [PROPOSAL_INFLATION * c[0][0], PROPOSAL_INFLATION * c[0][1]],
            [PROPOSAL_INFLATION * c[1][0], PROPOSAL_INFLATION * c[1][1]],
        ],
    )?;
    let chol = cholesky(proposal.cov());

    let mut envelope: f64 = 0.0;
    for i in -20..=20 {
        for j in -20..=20 {
            let (z0, z1) = (i as f64 * 0.25, j as f64 * 0.25);
            let x = mean[0] + chol[0][0] * z0;
            let p = mean[1] + chol[1][0] * z0 + chol[1][1] * z1;
            envelope = envelope.max(target.eval(x, p)? / proposal.density(x, p));
        }
    }
    let envelope = ENVELOPE_MARGIN * envelope;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(n);
    let mut proposed = 0usize;
    let mut warned = false;
    while samples.len() < n {
        let [x, p] = draw_normal(&mut rng, mean, &chol);
        let u: f64 = rng.random();
        proposed += 1;
        let ratio = target.eval(x, p)? / (envelope * proposal.density(x, p));
        if ratio > 1.0 && !warned {
            log::warn!("rejection envelope exceeded (ratio {ratio:.3}) at ({x:.3}, {p:.3})");
            warned = true;
        }
        if u < ratio {
            samples.push([x, p]);
        }
        if proposed >= ACCEPTANCE_WARMUP {
            let rate = samples.len() as f64 / proposed as f64;
            if rate < MIN_ACCEPTANCE {
                return Err(Error::LowAcceptance {
                    rate,
                    minimum: MIN_ACCEPTANCE,
                });
            }
        }
    }
    Ok(OutcomeBatch {
        samples,
        metric: g,
        seed,
    })
}

/// Sample mean and unbiased sample covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeStats {
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
}

pub fn outcome_stats(batch: &OutcomeBatch) -> Result<OutcomeStats> {
    stats_of(batch.samples())
}

/// [`outcome_stats`] for bare points.
pub fn stats_of(points: &[[f64; 2]]) -> Result<OutcomeStats> {
    let n = points.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let nf = n as f64;
    let mean = points
        .iter()
        .fold([0.0, 0.0], |acc, s| [acc[0] + s[0] / nf, acc[1] + s[1] / nf]);
    let mut cov = [[0.0; 2]; 2];
    for s in points {
        let d = [s[0] - mean[0], s[1] - mean[1]];
        for k in 0..2 {
            for l in 0..2 {
                cov[k][l] += d[k] * d[l];
            }
        }
    }
    for row in &mut cov {
        for v in row {
            *v /= nf - 1.0;
        }
    }
    Ok(OutcomeStats { mean, cov })
}
