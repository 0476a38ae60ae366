use gtd_core::analysis::{
    condition33_residual, control_flatness, deformed_contacto_residual, fluctuation_check,
    gtd_singularity_scan, hessian_witness, pontryagin_obstructions, FaVariant, ScanFlag, ScanReport,
};
use gtd_core::catalog::{Catalog, CATALOG_DIR_ENV};
use gtd_core::expr::SystemDefinition;
use gtd_core::grid::Grid;
use gtd_core::gtd::{equilibrium_metric, legendre_invariance_check, GtdKind, HessianMetric};
use gtd_core::manifold::MetricField;
use gtd_core::phase::{LegendreSpec, PhasePoint};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;
use crate::error::{at_point, format_point, CliError, CliResult};
use crate::input;

/// What a command prints, and whether it then fails.
pub struct Outcome {
    pub stdout: String,
    pub failure: Option<CliError>,
}

impl Outcome {
    fn json(value: &Value, failure: Option<CliError>) -> CliResult<Outcome> {
        let mut stdout = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Input(format!("cannot serialize output: {e}")))?;
        stdout.push('\n');
        Ok(Outcome { stdout, failure })
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

/// Reports are JSON objects; non-finite numbers become null.
fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

pub fn run(command: Command) -> CliResult<Outcome> {
    match command {
        Command::Systems { action: SystemsAction::List { format } } => systems_list(format),
        Command::Metric { action: MetricAction::Eval { system, kind, at } } => metric_eval(&system, &kind, &at),
        Command::Curvature {
            action: CurvatureAction::Scan { system, kind, grid, threshold, max_abs_r, format },
        } => curvature_scan(&system, &kind, &grid, threshold, max_abs_r, format),
        Command::Legendre { action: LegendreAction::Check { kind, spec, n, points, seed, tol } } => {
            legendre_check(&kind, &spec, n, points, seed, tol)
        }
        Command::Gtd3 { action } => gtd3_check(action),
        Command::Hessian { action: HessianAction::Obstructions { system, potential_metric, at, tol } } => {
            hessian_obstructions(&system, potential_metric, &at, tol)
        }
        Command::Fluctuation {
            action: FluctuationAction::Check { system, at, direction, h_min, h_max, min_slope },
        } => fluctuation(&system, &at, direction.as_deref(), h_min, h_max, min_slope),
    }
}

fn systems_list(format: Format) -> CliResult<Outcome> {
    let catalog = Catalog::from_env()?;
    let source = std::env::var(CATALOG_DIR_ENV).unwrap_or_else(|_| "builtin".to_string());
    match format {
        Format::Json => {
            let systems: Vec<Value> = catalog
                .systems()
                .iter()
                .map(|s| {
                    json!({
                        "name": s.name,
                        "potential": s.potential,
                        "variables": s.variables,
                        "class": s.class.to_string(),
                        "reference": s.reference,
                    })
                })
                .collect();
            Outcome::json(&json!({ "command": "systems list", "catalog": source, "systems": systems }), None)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let rows = catalog.systems().iter().map(|s| {
                vec![s.name.clone(), s.potential.clone(), s.variables.join(" "), s.class.to_string()]
            });
            write_csv(&mut w, &["name", "potential", "variables", "class"], rows)?;
            csv_outcome(w, None)
        }
    }
}

fn write_csv<I>(w: &mut csv::Writer<Vec<u8>>, header: &[&str], rows: I) -> CliResult<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let io = |e: csv::Error| CliError::Input(format!("cannot write CSV: {e}"));
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    Ok(())
}

fn csv_outcome(w: csv::Writer<Vec<u8>>, failure: Option<CliError>) -> CliResult<Outcome> {
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Input(format!("cannot write CSV: {e}")))?;
    let stdout = String::from_utf8(bytes).expect("CSV output is UTF-8");
    Ok(Outcome { stdout, failure })
}

fn metric_eval(system: &SystemArg, kind: &KindArgs, at: &AtArg) -> CliResult<Outcome> {
    let s = input::resolve_system(&system.system)?;
    let kind = input::kind(kind)?;
    let point = input::parse_at(at.at.as_deref(), &s)?;
    let g = at_point(equilibrium_metric(&kind, &s, &point), &s.variables, &point)?;
    let rows: Vec<Vec<f64>> = (0..g.nrows()).map(|r| g.row(r).iter().copied().collect()).collect();
    let out = json!({
        "command": "metric eval",
        "system": s.name,
        "kind": to_value(&kind),
        "variables": s.variables,
        "point": point,
        "components": rows,
        "determinant": finite(g.determinant()),
    });
    Outcome::json(&out, None)
}

fn flag_name(f: ScanFlag) -> &'static str {
    match f {
        ScanFlag::Curvature => "curvature",
        ScanFlag::DeterminantSignChange => "determinant_sign_change",
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn curvature_scan(
    system: &SystemArg,
    kind: &KindArgs,
    grid: &str,
    threshold: f64,
    max_abs_r: Option<f64>,
    format: Format,
) -> CliResult<Outcome> {
    let s = input::resolve_system(&system.system)?;
    let kind = input::kind(kind)?;
    let threshold = input::positive(threshold, "--threshold")?;
    let max_abs_r = max_abs_r.map(|t| input::positive(t, "--max-abs-r")).transpose()?;
    let grid: Grid = input::parse_grid(grid, &s)?;
    let report: ScanReport = gtd_singularity_scan(&kind, &s, &grid, threshold)?;
    let failure = max_abs_r.and_then(|limit| {
        report
            .points
            .iter()
            .filter_map(|p| p.scalar.map(|r| (p, r.abs())))
            .filter(|(_, r)| *r > limit)
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(p, r)| {
                CliError::Tolerance(format!(
                    "|R| = {r:e} exceeds {limit:e} at {}",
                    format_point(&s.variables, &p.point)
                ))
            })
    });
    match format {
        Format::Csv => {
            let mut header: Vec<&str> = s.variables.iter().map(String::as_str).collect();
            header.extend(["R", "K", "det_g", "flags", "error"]);
            let rows = report.points.iter().map(|p| {
                let mut row: Vec<String> = p.point.iter().map(|x| format!("{x}")).collect();
                row.push(opt(p.scalar));
                row.push(opt(p.kretschmann));
                row.push(opt(p.determinant));
                row.push(p.flags.iter().map(|f| flag_name(*f)).collect::<Vec<_>>().join(";"));
                row.push(p.error.clone().unwrap_or_default());
                row
            });
            let mut w = csv::Writer::from_writer(Vec::new());
            write_csv(&mut w, &header, rows)?;
            csv_outcome(w, failure)
        }
        Format::Json => {
            let points: Vec<Value> = report
                .points
                .iter()
                .map(|p| {
                    json!({
                        "point": p.point,
                        "R": p.scalar.map(finite),
                        "K": p.kretschmann.map(finite),
                        "det_g": p.determinant.map(finite),
                        "flags": p.flags.iter().map(|f| flag_name(*f)).collect::<Vec<_>>(),
                        "error": p.error,
                    })
                })
                .collect();
            let out = json!({
                "command": "curvature scan",
                "system": s.name,
                "kind": to_value(&kind),
                "variables": s.variables,
                "threshold": threshold,
                "flagged": report.flagged().count(),
                "points": points,
            });
            Outcome::json(&out, failure)
        }
    }
}

/// Whether invariance under `spec` is a claim worth gating on.
fn asserted(kind: &GtdKind, spec: &LegendreSpec) -> bool {
    match kind {
        GtdKind::III { .. } => true,
        _ => spec.is_total() || spec.is_identity(),
    }
}

fn phase_json(p: &PhasePoint) -> Value {
    json!({ "phi": p.phi, "e": p.e, "i": p.i })
}

fn legendre_check(kind: &KindArgs, spec: &str, n: usize, points: usize, seed: u64, tol: f64) -> CliResult<Outcome> {
    if n == 0 || points == 0 {
        return Err(CliError::Usage("--n and --points must be at least 1".into()));
    }
    let tol = input::positive(tol, "--tol")?;
    let kind = input::kind(kind)?;
    let indices = input::parse_spec(spec, n)?;
    let spec = LegendreSpec::new(n, &indices).map_err(|e| CliError::Usage(e.to_string()))?;
    let sample = input::random_points(seed, n, points, -2.0, 2.0);
    let mut worst = (0.0f64, sample[0].clone());
    for p in &sample {
        let r = legendre_invariance_check(&kind, &spec, std::slice::from_ref(p)).map_err(|e| {
            CliError::Input(format!("{e} at phi={},E={:?},I={:?}", p.phi, p.e, p.i))
        })?;
        if r > worst.0 || r.is_nan() {
            worst = (r, p.clone());
        }
    }
    let asserted = asserted(&kind, &spec);
    let pass = worst.0 <= tol;
    let out = json!({
        "command": "legendre check",
        "kind": to_value(&kind),
        "n": n,
        "spec": indices.iter().map(|a| a + 1).collect::<Vec<_>>(),
        "points": points,
        "seed": seed,
        "tolerance": tol,
        "residual": finite(worst.0),
        "worst_point": phase_json(&worst.1),
        "asserted": asserted,
        "pass": pass,
    });
    let failure = (asserted && !pass).then(|| {
        CliError::Tolerance(format!(
            "Legendre residual {:e} exceeds {tol:e} at phi={},E={:?},I={:?}",
            worst.0, worst.1.phi, worst.1.e, worst.1.i
        ))
    });
    Outcome::json(&out, failure)
}

fn gtd3_check(action: Gtd3Action) -> CliResult<Outcome> {
    let Gtd3Action::Check { k, variant, n, points, seed, grid_count, system, at, tol } = action;
    if n == 0 || points == 0 {
        return Err(CliError::Usage("--n and --points must be at least 1".into()));
    }
    if grid_count < 2 {
        return Err(CliError::Usage("--grid-count must be at least 2".into()));
    }
    let tol = input::positive(tol, "--tol")?;
    let variant = match variant {
        Variant::Paper => FaVariant::Paper,
        Variant::Corrected => FaVariant::Corrected,
    };
    let sample = input::random_points(seed, n, points, 0.5, 2.0);
    let mut failures = Vec::new();

    let deformed = if k == -1 {
        None
    } else {
        Some(deformed_contacto_residual(k, variant, &sample)?)
    };
    let deformed_asserted = deformed.is_some() && variant == FaVariant::Corrected;
    if let Some(d) = deformed.as_ref().filter(|_| deformed_asserted) {
        if d.max > tol {
            let (p, r) = worst_by(&sample, |p| {
                deformed_contacto_residual(k, variant, std::slice::from_ref(p)).map(|d| d.max)
            })?;
            failures.push(format!("deformed contact residual {r:e} at {}", phase_label(p)));
        }
    }

    let c33 = condition33_residual(k, &sample)?;
    let (c33_point, _) = worst_by(&sample, |p| condition33_residual(k, std::slice::from_ref(p)))?;
    if c33 > tol {
        failures.push(format!("transform residual {c33:e} at {}", phase_label(c33_point)));
    }

    let grid = Grid::cube(0.5, 2.0, grid_count, 2 * n)?;
    let flat = control_flatness(k, n, &grid, tol)?;
    if !flat.flat {
        failures.push(format!(
            "control manifold curvature {:e} at {:?}",
            flat.max_invariant, flat.worst_point
        ));
    }

    let s = input::resolve_system(&system)?;
    let state = input::parse_at(at.at.as_deref(), &s)?;
    let witness = at_point(hessian_witness(k, &s, &state), &s.variables, &state)?;

    let pass = failures.is_empty();
    let out = json!({
        "command": "gtd3 check",
        "k": k,
        "variant": to_value(&variant),
        "n": n,
        "points": points,
        "seed": seed,
        "tolerance": tol,
        "deformed_contact": deformed.as_ref().map(to_value),
        "deformed_contact_asserted": deformed_asserted,
        "condition33": { "residual": finite(c33), "worst_point": phase_json(c33_point) },
        "control_flatness": to_value(&flat),
        "witness": {
            "system": s.name,
            "variables": s.variables,
            "point": state,
            "matrix": witness.matrix,
            "defect": finite(witness.defect),
        },
        "pass": pass,
    });
    let failure = (!pass).then(|| CliError::Tolerance(failures.join("; ")));
    Outcome::json(&out, failure)
}

fn phase_label(p: &PhasePoint) -> String {
    format!("phi={},E={:?},I={:?}", p.phi, p.e, p.i)
}

fn worst_by<F>(sample: &[PhasePoint], f: F) -> CliResult<(&PhasePoint, f64)>
where
    F: Fn(&PhasePoint) -> gtd_core::Result<f64>,
{
    let mut best = (&sample[0], f64::NEG_INFINITY);
    for p in sample {
        let r = f(p).map_err(|e| CliError::Input(format!("{e} at {}", phase_label(p))))?;
        if r > best.1 {
            best = (p, r);
        }
    }
    Ok(best)
}

fn hessian_obstructions(system: &SystemArg, which: PotentialMetric, at: &AtArg, tol: f64) -> CliResult<Outcome> {
    let tol = input::positive(tol, "--tol")?;
    let s: SystemDefinition = input::resolve_system(&system.system)?;
    let point = input::parse_at(at.at.as_deref(), &s)?;
    let metric = match which {
        PotentialMetric::Weinhold => HessianMetric::weinhold(&s)?,
        PotentialMetric::Ruppeiner => HessianMetric::ruppeiner(&s)?,
        PotentialMetric::Hessian => HessianMetric::plain(&s),
    };
    let metric: &dyn MetricField = &metric;
    let report = at_point(pontryagin_obstructions(metric, &point), &s.variables, &point)?;
    let worst = report.max_relative();
    let pass = worst <= tol;
    let name = match which {
        PotentialMetric::Weinhold => "weinhold",
        PotentialMetric::Ruppeiner => "ruppeiner",
        PotentialMetric::Hessian => "hessian",
    };
    let out = json!({
        "command": "hessian obstructions",
        "system": s.name,
        "potential_metric": name,
        "variables": s.variables,
        "point": point,
        "tolerance": tol,
        "report": to_value(&report),
        "pass": pass,
    });
    let failure = (!pass).then(|| {
        CliError::Tolerance(format!(
            "relative obstruction {worst:e} exceeds {tol:e} at {}",
            format_point(&s.variables, &point)
        ))
    });
    Outcome::json(&out, failure)
}

fn fluctuation(
    system: &SystemArg,
    at: &AtArg,
    direction: Option<&str>,
    h_min: f64,
    h_max: f64,
    min_slope: f64,
) -> CliResult<Outcome> {
    let s = input::resolve_system(&system.system)?;
    let point = input::parse_at(at.at.as_deref(), &s)?;
    let dir = match direction {
        Some(t) => input::parse_list(t, "direction")?,
        None => vec![1.0; s.n()],
    };
    if !(0.0 < h_min && h_min < h_max) {
        return Err(CliError::Usage("steps must satisfy 0 < --h-min < --h-max".into()));
    }
    let report = at_point(fluctuation_check(&s, &point, &dir, h_min, h_max), &s.variables, &point)?;
    let pass = report.slope >= min_slope;
    let out = json!({
        "command": "fluctuation check",
        "system": s.name,
        "variables": s.variables,
        "point": point,
        "min_slope": min_slope,
        "report": to_value(&report),
        "pass": pass,
    });
    let failure = (!pass).then(|| {
        CliError::Tolerance(format!(
            "remainder slope {:.4} below {min_slope} at {}",
            report.slope,
            format_point(&s.variables, &point)
        ))
    });
    Outcome::json(&out, failure)
}
