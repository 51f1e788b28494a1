use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Axes of a uniform `(x, p)` lattice with inclusive endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub np: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, nx: usize, p_min: f64, p_max: f64, np: usize) -> Result<Self> {
        let spec = Self {
            x_min,
            x_max,
            nx,
            p_min,
            p_max,
            np,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Square grid `[-half_width, half_width]²` with `n` points per axis.
    pub fn square(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n, -half_width, half_width, n)
    }

    fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.np < 2 {
            return Err(Error::InvalidGrid("need at least two points per axis".into()));
        }
        let finite = [self.x_min, self.x_max, self.p_min, self.p_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x_max <= self.x_min || self.p_max <= self.p_min {
            return Err(Error::InvalidGrid("axis ranges must be finite and increasing".into()));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.np - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + j as f64 * self.dp()
    }

    pub fn len(&self) -> usize {
        self.nx * self.np
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Samples `f(x, p)` at every node, x-major.
    pub fn fill(&self, mut f: impl FnMut(f64, f64) -> f64) -> PhaseSpaceGrid {
        let mut values = Vec::with_capacity(self.len());
        for i in 0..self.nx {
            let x = self.x(i);
            values.extend((0..self.np).map(|j| f(x, self.p(j))));
        }
        PhaseSpaceGrid { spec: *self, values }
    }

    /// Trapezoid weight of node `(i, j)`.
    pub(crate) fn trapezoid_weight(&self, i: usize, j: usize) -> f64 {
        let wx = if i == 0 || i == self.nx - 1 { 0.5 } else { 1.0 };
        let wp = if j == 0 || j == self.np - 1 { 0.5 } else { 1.0 };
        wx * wp * self.dx() * self.dp()
    }
}

/// Real values sampled on a [`GridSpec`]; `values[i * np + j]` is at `(x_i, p_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceGrid {
    spec: GridSpec,
    values: Vec<f64>,
}

impl PhaseSpaceGrid {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                spec.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite value".into()));
        }
        Ok(Self { spec, values })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.spec.np + j]
    }

    /// Trapezoidal integral over the grid.
    pub fn integral(&self) -> f64 {
        let mut total = 0.0;
        for i in 0..self.spec.nx {
            for j in 0..self.spec.np {
                total += self.spec.trapezoid_weight(i, j) * self.at(i, j);
            }
        }
        total
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Node with the largest value, as `(x, p, value)`.
    pub fn argmax(&self) -> (f64, f64, f64) {
        let (k, v) =
            self.values.iter().enumerate().fold(
                (0, f64::NEG_INFINITY),
                |best, (k, &v)| if v > best.1 { (k, v) } else { best },
            );
        (self.spec.x(k / self.spec.np), self.spec.p(k % self.spec.np), v)
    }

    pub fn sup_diff(&self, other: &PhaseSpaceGrid) -> Result<f64> {
        if self.spec != other.spec {
            return Err(Error::InvalidGrid("grids have different axes".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Bilinear interpolation; fails outside the grid.
    pub fn interpolate(&self, x: f64, p: f64) -> Result<f64> {
        let s = &self.spec;
        let fx = (x - s.x_min) / s.dx();
        let fp = (p - s.p_min) / s.dp();
        let eps = 1e-9;
        if !(fx >= -eps && fx <= (s.nx - 1) as f64 + eps && fp >= -eps && fp <= (s.np - 1) as f64 + eps) {
            return Err(Error::OutOfGrid { x, p });
        }
        let i = (fx.floor().max(0.0) as usize).min(s.nx - 2);
        let j = (fp.floor().max(0.0) as usize).min(s.np - 2);
        let tx = (fx - i as f64).clamp(0.0, 1.0);
        let tp = (fp - j as f64).clamp(0.0, 1.0);
        Ok((1.0 - tx) * (1.0 - tp) * self.at(i, j)
            + tx * (1.0 - tp) * self.at(i + 1, j)
            + (1.0 - tx) * tp * self.at(i, j + 1)
            + tx * tp * self.at(i + 1, j + 1))
    }

    /// CSV form: a `# x_min x_max nx p_min p_max np` header, then one line of
    /// `np` space-separated values per x sample.
    pub fn to_csv_string(&self) -> String {
        let s = &self.spec;
        let mut out = String::with_capacity(self.values.len() * 24);
        let _ = writeln!(
            out,
            "# {} {} {} {} {} {}",
            s.x_min, s.x_max, s.nx, s.p_min, s.p_max, s.np
        );
        for row in self.values.chunks(s.np) {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(' ');
                }
                first = false;
                let _ = write!(out, "{v:?}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        w.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }

    pub fn read_csv(r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty grid file".into()))??;
        let fields: Vec<&str> = header
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse("missing `#` header".into()))?
            .split_whitespace()
            .collect();
        if fields.len() != 6 {
            return Err(Error::Parse("grid header needs six fields".into()));
        }
        let float = |k: usize| {
            fields[k]
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("header field {k}: {e}")))
        };
        let count = |k: usize| {
            fields[k]
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("header field {k}: {e}")))
        };
        let spec = GridSpec::new(float(0)?, float(1)?, count(2)?, float(3)?, float(4)?, count(5)?)?;
        let mut values = Vec::with_capacity(spec.len());
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let before = values.len();
            for tok in line.split_whitespace() {
                values.push(
                    tok.parse::<f64>()
                        .map_err(|e| Error::Parse(format!("value `{tok}`: {e}")))?,
                );
            }
            if values.len() - before != spec.np {
                return Err(Error::Parse(format!(
                    "row has {} values, expected {}",
                    values.len() - before,
                    spec.np
                )));
            }
        }
        Self::new(spec, values)
    }
}
