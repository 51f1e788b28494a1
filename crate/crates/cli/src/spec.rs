//! Parsing of the textual state, measurement and grid arguments.
//!
//! States: `vacuum`, `coherent:x,p`, `squeezed:r,angle[,x,p]`, `fock:n`, or a
//! JSON file holding a Gaussian state (`mean`, `cov`), a density matrix
//! (`dim`, `matrix`) or a state vector (`dim`, `coeffs`).
//!
//! Measurements: `identity`, `rotation:psi`, `params:theta,phi,lambda`,
//! `matrix:m11,m12,m21,m22`, `metric:a,b,c`, inline JSON or a JSON file with
//! one of the shapes `{"m": ..}`, `{"theta", "phi", "lambda"}`, `{"a", "b", "c"}`.
//! Angles follow the `--degrees` flag.

use std::fs;

use phasemeas::{CanonicalParams, FockDensity, FockVector, GaussianState, GridSpec, MetricTensor, Sl2Matrix};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone)]
pub enum StateInput {
    Gaussian(GaussianState),
    Fock(FockDensity),
}

pub fn angle(value: f64, degrees: bool) -> f64 {
    if degrees {
        value.to_radians()
    } else {
        value
    }
}

fn numbers(kind: &str, body: &str, counts: &[usize]) -> Result<Vec<f64>, CliError> {
    let values = body
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(format!("`{kind}:{body}`: {e}")))?;
    if !counts.contains(&values.len()) {
        return Err(CliError::Usage(format!(
            "`{kind}` takes {counts:?} numbers, got {}",
            values.len()
        )));
    }
    Ok(values)
}

/// Inline JSON when the text starts with `{`, otherwise a file path.
fn json_source(text: &str) -> Result<Value, CliError> {
    let raw = if text.trim_start().starts_with('{') {
        text.to_owned()
    } else {
        fs::read_to_string(text).map_err(|e| CliError::Usage(format!("cannot read `{text}`: {e}")))?
    };
    serde_json::from_str(&raw).map_err(|e| CliError::Usage(format!("invalid JSON in `{text}`: {e}")))
}

fn from_value<T: serde::de::DeserializeOwned>(v: Value) -> Result<T, CliError> {
    serde_json::from_value(v).map_err(|e| CliError::Usage(e.to_string()))
}

pub fn parse_state(text: &str, dim: usize, degrees: bool) -> Result<StateInput, CliError> {
    let (kind, body) = text.split_once(':').unwrap_or((text, ""));
    match kind {
        "vacuum" if body.is_empty() => Ok(StateInput::Gaussian(GaussianState::vacuum())),
        "coherent" => {
            let v = numbers(kind, body, &[2])?;
            Ok(StateInput::Gaussian(GaussianState::coherent(v[0], v[1])))
        }
        "squeezed" => {
            let v = numbers(kind, body, &[2, 4])?;
            let s = GaussianState::squeezed_vacuum(v[0], angle(v[1], degrees));
            let s = if v.len() == 4 { s.displaced(v[2], v[3]) } else { s };
            Ok(StateInput::Gaussian(s))
        }
        "fock" => {
            let n: usize = body
                .trim()
                .parse()
                .map_err(|e| CliError::Usage(format!("`fock:{body}`: {e}")))?;
            Ok(StateInput::Fock(FockDensity::number(n, dim).map_err(CliError::usage)?))
        }
        _ => {
            let v = json_source(text)?;
            let has = |k: &str| v.get(k).is_some();
            if has("mean") && has("cov") {
                Ok(StateInput::Gaussian(from_value(v)?))
            } else if has("matrix") {
                Ok(StateInput::Fock(from_value(v)?))
            } else if has("coeffs") {
                let psi: FockVector = from_value(v)?;
                Ok(StateInput::Fock(FockDensity::pure(&psi)))
            } else {
                Err(CliError::Usage(format!("unrecognized state `{text}`")))
            }
        }
    }
}

pub fn parse_measurement(text: &str, degrees: bool) -> Result<Sl2Matrix, CliError> {
    let (kind, body) = text.split_once(':').unwrap_or((text, ""));
    match kind {
        "identity" if body.is_empty() => Ok(Sl2Matrix::identity()),
        "rotation" => Ok(Sl2Matrix::rotation(angle(numbers(kind, body, &[1])?[0], degrees))),
        "params" => {
            let v = numbers(kind, body, &[3])?;
            let p = CanonicalParams::new(angle(v[0], degrees), angle(v[1], degrees), v[2]).map_err(CliError::usage)?;
            Ok(p.matrix())
        }
        "matrix" => {
            let v = numbers(kind, body, &[4])?;
            Sl2Matrix::new(v[0], v[1], v[2], v[3]).map_err(CliError::usage)
        }
        "metric" => {
            let v = numbers(kind, body, &[3])?;
            metric_representative(&MetricTensor::new(v[0], v[1], v[2]).map_err(CliError::usage)?)
        }
        _ => {
            let v = json_source(text)?;
            if v.get("m").is_some() {
                from_value(v)
            } else if v.get("theta").is_some() {
                // JSON parameters are always radians
                Ok(from_value::<CanonicalParams>(v)?.matrix())
            } else if v.get("a").is_some() {
                metric_representative(&from_value(v)?)
            } else {
                Err(CliError::Usage(format!("unrecognized measurement `{text}`")))
            }
        }
    }
}

/// The zero-obliquity member of the class of `g`.
fn metric_representative(g: &MetricTensor) -> Result<Sl2Matrix, CliError> {
    Ok(g.canonical_orthogonal().map_err(CliError::usage)?.matrix())
}

/// `xmin:xmax:nx,pmin:pmax:np`.
pub fn parse_grid(text: &str) -> Result<GridSpec, CliError> {
    let bad = || CliError::Usage(format!("grid `{text}` is not xmin:xmax:nx,pmin:pmax:np"));
    let (xs, ps) = text.split_once(',').ok_or_else(bad)?;
    let axis = |s: &str| -> Result<(f64, f64, usize), CliError> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo = parts[0].trim().parse().map_err(|_| bad())?;
        let hi = parts[1].trim().parse().map_err(|_| bad())?;
        let n = parts[2].trim().parse().map_err(|_| bad())?;
        Ok((lo, hi, n))
    };
    let (x0, x1, nx) = axis(xs)?;
    let (p0, p1, np) = axis(ps)?;
    GridSpec::new(x0, x1, nx, p0, p1, np).map_err(CliError::usage)
}
