//! Turning command-line strings into core values.

use std::path::Path;

use gtd_core::catalog::Catalog;
use gtd_core::expr::{load_system, SystemDefinition};
use gtd_core::grid::{Axis, Grid};
use gtd_core::gtd::GtdKind;
use gtd_core::phase::PhasePoint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::args::KindArgs;
use crate::error::{CliError, CliResult};

/// A catalog name, or a path when the value names a `.toml` file.
pub fn resolve_system(value: &str) -> CliResult<SystemDefinition> {
    let path = Path::new(value);
    if value.ends_with(".toml") || path.is_file() {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Input(format!("cannot read system file {value}: {e}")))?;
        return Ok(load_system(&bytes)?);
    }
    let catalog = Catalog::from_env()?;
    Ok(catalog.get(value)?.clone())
}

fn number(text: &str, what: &str) -> CliResult<f64> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| CliError::Input(format!("cannot parse {what} `{text}` as a number")))?;
    if !v.is_finite() {
        return Err(CliError::Input(format!("{what} `{text}` is not finite")));
    }
    Ok(v)
}

pub fn parse_list(text: &str, what: &str) -> CliResult<Vec<f64>> {
    text.split(',').map(|t| number(t, what)).collect()
}

/// `NAME=value,...` in any order, or bare values in variable order.
pub fn parse_at(text: Option<&str>, system: &SystemDefinition) -> CliResult<Vec<f64>> {
    let Some(text) = text else {
        return system.reference.clone().ok_or_else(|| {
            CliError::Usage(format!("system `{}` has no reference state; pass --at", system.name))
        });
    };
    let vars = &system.variables;
    if !text.contains('=') {
        let values = parse_list(text, "--at value")?;
        if values.len() != vars.len() {
            return Err(CliError::Input(format!(
                "--at has {} values, system `{}` has variables {}",
                values.len(),
                system.name,
                vars.join(",")
            )));
        }
        return Ok(values);
    }
    let mut out: Vec<Option<f64>> = vec![None; vars.len()];
    for part in text.split(',') {
        let (name, value) = part
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("expected NAME=value in --at, got `{part}`")))?;
        let name = name.trim();
        let slot = vars
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| CliError::Input(format!("unknown variable `{name}` in --at")))?;
        if out[slot].is_some() {
            return Err(CliError::Input(format!("variable `{name}` given twice in --at")));
        }
        out[slot] = Some(number(value, name)?);
    }
    vars.iter()
        .zip(out)
        .map(|(v, x)| x.ok_or_else(|| CliError::Input(format!("--at is missing variable `{v}`"))))
        .collect()
}

/// `NAME=min:max:count,...`, one entry per system variable.
pub fn parse_grid(text: &str, system: &SystemDefinition) -> CliResult<Grid> {
    let vars = &system.variables;
    let mut axes: Vec<Option<Axis>> = vec![None; vars.len()];
    for part in text.split(',') {
        let (name, spec) = part
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("expected NAME=min:max:count in --grid, got `{part}`")))?;
        let name = name.trim();
        let slot = vars
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| CliError::Input(format!("unknown variable `{name}` in --grid")))?;
        let fields: Vec<&str> = spec.split(':').collect();
        let [min, max, count] = fields[..] else {
            return Err(CliError::Input(format!("grid entry `{part}` needs min:max:count")));
        };
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| CliError::Input(format!("grid count `{count}` is not a positive integer")))?;
        if count < 2 {
            return Err(CliError::Usage(format!("grid count for `{name}` must be at least 2")));
        }
        let axis = Axis::new(number(min, "grid min")?, number(max, "grid max")?, count)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        if axes[slot].replace(axis).is_some() {
            return Err(CliError::Input(format!("variable `{name}` given twice in --grid")));
        }
    }
    let axes = vars
        .iter()
        .zip(axes)
        .map(|(v, a)| a.ok_or_else(|| CliError::Input(format!("--grid is missing variable `{v}`"))))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(Grid::new(axes))
}

pub fn kind(args: &KindArgs) -> CliResult<GtdKind> {
    let xi = args.xi.as_deref().map(|t| parse_list(t, "xi")).transpose()?;
    GtdKind::from_parts(args.kind.as_str(), args.k, xi).map_err(|e| CliError::Usage(e.to_string()))
}

pub fn positive(value: f64, what: &str) -> CliResult<f64> {
    if !(value > 0.0 && value.is_finite()) {
        return Err(CliError::Usage(format!("{what} must be positive, got {value}")));
    }
    Ok(value)
}

/// Zero-based indices from `total`, `none` or a 1-based comma list.
pub fn parse_spec(text: &str, n: usize) -> CliResult<Vec<usize>> {
    match text.trim() {
        "total" => Ok((0..n).collect()),
        "none" | "" => Ok(Vec::new()),
        list => list
            .split(',')
            .map(|t| {
                let a: usize = t
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Input(format!("Legendre index `{t}` is not an integer")))?;
                if a == 0 || a > n {
                    return Err(CliError::Usage(format!("Legendre index {a} is outside 1..={n}")));
                }
                Ok(a - 1)
            })
            .collect(),
    }
}

/// Phase points with every coordinate uniform in `[lo, hi)`.
pub fn random_points(seed: u64, n: usize, count: usize, lo: f64, hi: f64) -> Vec<PhasePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let phi = rng.random_range(lo..hi);
            let e = (0..n).map(|_| rng.random_range(lo..hi)).collect();
            let i = (0..n).map(|_| rng.random_range(lo..hi)).collect();
            PhasePoint::new(phi, e, i).expect("matching lengths")
        })
        .collect()
}
