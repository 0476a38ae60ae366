//! Diagnostics built on the metric constructions: the explicit coordinate
//! change that turns the kind III block into `dX dY`, its deformed contact
//! condition, control-manifold flatness, Hessian-structure witnesses and
//! obstructions, fluctuation remainders and curvature-singularity scans.

use nalgebra::DMatrix;
use ndarray::Array4;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::SystemDefinition;
use crate::grid::Grid;
use crate::gtd::{embed, equilibrium_metric, EquilibriumMetric, GtdKind};
use crate::jets::{seed, Jet, Ring};
use crate::manifold::{curvature_from_sample, riemann, FlatnessReport, MetricField, MetricSample};
use crate::phase::{
    contact_form, e_index, i_index, jacobian, transform_form, transform_metric, OneForm, PhaseMap,
    PhasePoint,
};

fn require_positive(what: &str, values: &[f64]) -> Result<()> {
    if let Some((a, v)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::Domain(format!(
            "{what}{} = {v} must be positive",
            a + 1
        )));
    }
    Ok(())
}

/// `x^(2k+2) / (2k+2)`, or `ln x` when `k = -1`.
fn gtd3_power<T: Ring>(k: i32, x: &T) -> Result<T> {
    let m = 2 * k + 2;
    if m == 0 {
        x.ln()
    } else {
        x.powi(m)?.divide(&T::from_f64(m as f64))
    }
}

/// `X^a` and `Y^a` of the kind III coordinate change.
pub fn gtd3_coordinates(k: i32, e: &[f64], i: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    require_positive("E", e)?;
    require_positive("I", i)?;
    let x = e.iter().map(|v| gtd3_power(k, v)).collect::<Result<_>>()?;
    let y = i.iter().map(|v| gtd3_power(k, v)).collect::<Result<_>>()?;
    Ok((x, y))
}

/// `F = Phi`, `X^a = (E^a)^(2k+2)/(2k+2)`, `Y^a = (I^a)^(2k+2)/(2k+2)`.
///
/// For `k = -1` the powers degenerate and the logarithms `X = ln E`,
/// `Y = ln I` take their place; they satisfy the same `dX dY` identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Gtd3Map {
    pub n: usize,
    pub k: i32,
}

impl PhaseMap for Gtd3Map {
    fn n(&self) -> usize {
        self.n
    }

    fn map<T: Ring>(&self, z: &[T]) -> Result<Vec<T>> {
        for (pos, v) in z.iter().enumerate().skip(1) {
            if !(v.value() > 0.0) {
                return Err(Error::Domain(format!(
                    "phase coordinate {pos} = {} outside the positive orthant",
                    v.value()
                )));
            }
        }
        let mut out = Vec::with_capacity(z.len());
        out.push(z[0].clone());
        for v in &z[1..] {
            out.push(gtd3_power(self.k, v)?);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FaVariant {
    /// `f_a = (2k+2)^(-(2k+1)/(k+1)) (X^a Y^a)^(-(2k+1)/(2k+2))`
    Paper,
    /// The same factor times `2k+2`.
    Corrected,
}

impl std::str::FromStr for FaVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(FaVariant::Paper),
            "corrected" => Ok(FaVariant::Corrected),
            other => Err(Error::InvalidArgument(format!(
                "unknown variant `{other}`, expected paper or corrected"
            ))),
        }
    }
}

fn deformation_factor(k: i32, variant: FaVariant, x: f64, y: f64) -> Result<f64> {
    if k == -1 {
        return Err(Error::InvalidArgument(
            "the deformation factor is undefined for k = -1".into(),
        ));
    }
    let m = (2 * k + 2) as f64;
    let odd = (2 * k + 1) as f64;
    let f = m.powf(-odd / (k as f64 + 1.0)) * (x * y).powf(-odd / m);
    Ok(match variant {
        FaVariant::Paper => f,
        FaVariant::Corrected => f * m,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeformedContactReport {
    pub k: i32,
    pub variant: FaVariant,
    /// Largest residual over all points and components.
    pub max: f64,
    /// Largest residual per phase component `(Phi, E.., I..)`.
    pub per_component: Vec<f64>,
}

/// Pulls `f_0 dF - f_a Y_a dX^a` back through [`Gtd3Map`] and compares with `Theta`.
pub fn deformed_contact_form(k: i32, variant: FaVariant, point: &PhasePoint) -> Result<OneForm> {
    let n = point.n();
    let map = Gtd3Map { n, k };
    let (x, y) = gtd3_coordinates(k, &point.e, &point.i)?;
    let mut target = vec![0.0; 2 * n + 1];
    target[0] = 1.0;
    for a in 0..n {
        target[e_index(a)] = -deformation_factor(k, variant, x[a], y[a])? * y[a];
    }
    transform_form(&map, point, &OneForm { components: target })
}

pub fn deformed_contacto_residual(k: i32, variant: FaVariant, points: &[PhasePoint]) -> Result<DeformedContactReport> {
    let dim = points.first().map_or(0, |p| 2 * p.n() + 1);
    let mut per_component = vec![0.0f64; dim];
    for point in points {
        let pulled = deformed_contact_form(k, variant, point)?;
        let theta = contact_form(point);
        for (slot, (a, b)) in per_component.iter_mut().zip(pulled.components.iter().zip(&theta.components)) {
            *slot = slot.max((a - b).abs());
        }
    }
    Ok(DeformedContactReport {
        k,
        variant,
        max: per_component.iter().copied().fold(0.0, f64::max),
        per_component,
    })
}

/// Max difference between the pullback of `delta_ab dX^a dY^b` and `h_ab dE^a dI^b`.
pub fn condition33_residual(k: i32, points: &[PhasePoint]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for point in points {
        let n = point.n();
        let dim = 2 * n + 1;
        let map = Gtd3Map { n, k };
        let mut target = DMatrix::zeros(dim, dim);
        let mut expected = DMatrix::zeros(dim, dim);
        let h = GtdKind::three(k).h_block(&point.e, &point.i)?;
        for a in 0..n {
            let (x, y) = (e_index(a), i_index(n, a));
            target[(x, y)] = 0.5;
            target[(y, x)] = 0.5;
            expected[(x, y)] = 0.5 * h[a * n + a];
            expected[(y, x)] = 0.5 * h[a * n + a];
        }
        let pulled = transform_metric(&map, point, &target)?;
        worst = worst.max((pulled - expected).abs().max());
    }
    Ok(worst)
}

/// `sum_a (E^a I^a)^(2k+1) dE^a dI^a` on the `2n`-dimensional control manifold
/// with coordinates `(E^1..E^n, I^1..I^n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ControlMetric {
    pub n: usize,
    pub k: i32,
}

impl MetricField for ControlMetric {
    fn dim(&self) -> usize {
        2 * self.n
    }

    fn component_jets(&self, point: &[f64]) -> Result<Vec<Jet>> {
        let n = self.n;
        let dim = 2 * n;
        let z = seed(point, 2)?;
        let h = GtdKind::three(self.k).h_block(&z[..n], &z[n..])?;
        let mut g = vec![Jet::scalar(0.0); dim * dim];
        for a in 0..n {
            let half = h[a * n + a].scale(0.5);
            g[a * dim + n + a] = half.clone();
            g[(n + a) * dim + a] = half;
        }
        Ok(g)
    }
}

pub fn control_flatness(k: i32, n: usize, grid: &Grid, tol: f64) -> Result<FlatnessReport> {
    if grid.dim() != 2 * n {
        return Err(Error::InvalidArgument(format!(
            "control grid must have {} axes, got {}",
            2 * n,
            grid.dim()
        )));
    }
    crate::manifold::flatness_report(&ControlMetric { n, k }, &grid.points(), tol)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport {
    /// `M_ab = dY_a/dX^b` on the equilibrium image, row-major.
    pub matrix: Vec<f64>,
    /// `max |M_ab - M_ba|`
    pub defect: f64,
}

/// Checks whether `dY_a/dX^b` is symmetric on the equilibrium image.
///
/// A symmetric matrix is the Hessian of some `F~(X)`, and then the kind III
/// equilibrium metric written in `X` coordinates equals it.
pub fn hessian_witness(k: i32, system: &SystemDefinition, e: &[f64]) -> Result<WitnessReport> {
    let m = witness_matrix(k, system, e)?;
    let defect = (&m - m.transpose()).abs().max();
    Ok(WitnessReport {
        matrix: m.transpose().iter().copied().collect(),
        defect,
    })
}

fn witness_matrix(k: i32, system: &SystemDefinition, e: &[f64]) -> Result<DMatrix<f64>> {
    require_positive("E", e)?;
    let i = system.gradient(e)?;
    require_positive("I", i.as_slice())?;
    let hess = system.hessian(e)?;
    let p = 2 * k + 1;
    let n = system.n();
    Ok(DMatrix::from_fn(n, n, |a, b| {
        i[a].powi(p) * hess[(a, b)] / e[b].powi(p)
    }))
}

/// `sym(dY_a/dX^b)`, the witness's prediction for the metric in `X` coordinates.
pub fn witness_metric(k: i32, system: &SystemDefinition, e: &[f64]) -> Result<DMatrix<f64>> {
    let m = witness_matrix(k, system, e)?;
    Ok((&m + m.transpose()) * 0.5)
}

/// The kind III equilibrium metric moved from `E` to `X` coordinates.
pub fn gtd3_metric_in_x(k: i32, system: &SystemDefinition, e: &[f64]) -> Result<DMatrix<f64>> {
    require_positive("E", e)?;
    let g = equilibrium_metric(&GtdKind::three(k), system, e)?;
    // dE^a/dX^a = (E^a)^-(2k+1)
    let p = 2 * k + 1;
    let n = system.n();
    Ok(DMatrix::from_fn(n, n, |a, b| {
        g[(a, b)] / (e[a].powi(p) * e[b].powi(p))
    }))
}

fn gtd3_inverse(k: i32, x: f64) -> Result<f64> {
    let m = 2 * k + 2;
    if m == 0 {
        return Ok(x.exp());
    }
    let base = m as f64 * x;
    if !(base > 0.0) {
        return Err(Error::Domain(format!("X = {x} has no positive preimage")));
    }
    Ok(base.powf(1.0 / m as f64))
}

/// `Y_a` as a function of `X` along the equilibrium image.
fn y_of_x(k: i32, system: &SystemDefinition, x: &[f64]) -> Result<Vec<f64>> {
    let e = x.iter().map(|&v| gtd3_inverse(k, v)).collect::<Result<Vec<_>>>()?;
    let i = system.gradient(&e)?;
    require_positive("I", i.as_slice())?;
    i.iter().map(|v| gtd3_power(k, v)).collect()
}

/// Composite Simpson intervals per axis-parallel segment.
pub const SIMPSON_INTERVALS: usize = 512;

fn simpson<F: Fn(f64) -> Result<f64>>(f: F, a: f64, b: f64, intervals: usize) -> Result<f64> {
    let m = intervals + intervals % 2;
    let h = (b - a) / m as f64;
    let mut acc = f(a)? + f(b)?;
    for j in 1..m {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + j as f64 * h)?;
    }
    Ok(acc * h / 3.0)
}

fn integrate_path(k: i32, system: &SystemDefinition, from: &[f64], to: &[f64], order: &[usize]) -> Result<f64> {
    let mut current = from.to_vec();
    let mut total = 0.0;
    for &axis in order {
        let base = current.clone();
        total += simpson(
            |t| {
                let mut p = base.clone();
                p[axis] = t;
                Ok(y_of_x(k, system, &p)?[axis])
            },
            from[axis],
            to[axis],
            SIMPSON_INTERVALS,
        )?;
        current[axis] = to[axis];
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveredPotential {
    /// `F~(X(to)) - F~(X(from))`, integrating the first axis first.
    pub value: f64,
    /// Largest disagreement between integration orders.
    pub path_defect: f64,
}

/// Recovers `F~` with `dF~ = Y_a dX^a` by integrating along axis-parallel
/// paths from `X(from)` to `X(to)`, trying every cyclic order of the axes.
pub fn recover_hessian_potential(
    k: i32,
    system: &SystemDefinition,
    from: &[f64],
    to: &[f64],
) -> Result<RecoveredPotential> {
    let n = system.n();
    if from.len() != n || to.len() != n {
        return Err(Error::InvalidArgument("endpoints must match the system dimension".into()));
    }
    let xf: Vec<f64> = from.iter().map(|v| gtd3_power(k, v)).collect::<Result<_>>()?;
    let xt: Vec<f64> = to.iter().map(|v| gtd3_power(k, v)).collect::<Result<_>>()?;
    let mut values = Vec::with_capacity(n);
    for shift in 0..n {
        let order: Vec<usize> = (0..n).map(|a| (a + shift) % n).collect();
        values.push(integrate_path(k, system, &xf, &xt, &order)?);
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(RecoveredPotential {
        value: values[0],
        path_defect: hi - lo,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObstructionReport {
    pub dim: usize,
    /// max over index tuples of the antisymmetrized quadratic contraction
    pub p1: f64,
    /// max over index tuples of the antisymmetrized cubic contraction
    pub p2: f64,
    /// max |R_ij^a_b|, the quadratic term's natural size
    pub scale_mixed: f64,
    /// max |R_abcd| * max |R_a^b_cd| * max |R_a^bcd|, the cubic term's natural size
    pub scale_cubic: f64,
    pub p1_relative: f64,
    pub p2_relative: f64,
}

impl ObstructionReport {
    pub fn max_relative(&self) -> f64 {
        self.p1_relative.max(self.p2_relative)
    }
}

fn raise(t: &Array4<f64>, gi: &DMatrix<f64>, slot: usize) -> Array4<f64> {
    let n = gi.nrows();
    let mut out = Array4::<f64>::zeros(t.raw_dim());
    for (idx, v) in out.indexed_iter_mut() {
        let mut acc = 0.0;
        for e in 0..n {
            let mut src = [idx.0, idx.1, idx.2, idx.3];
            let free = src[slot];
            src[slot] = e;
            acc += gi[(free, e)] * t[src];
        }
        *v = acc;
    }
    out
}

fn permutation_sign(p: &[usize; 4]) -> f64 {
    let mut inversions = 0;
    for a in 0..4 {
        for b in a + 1..4 {
            if p[a] > p[b] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

const PERMUTATIONS: [[usize; 4]; 24] = {
    let mut out = [[0; 4]; 24];
    let mut count = 0;
    let mut a = 0;
    while a < 4 {
        let mut b = 0;
        while b < 4 {
            let mut c = 0;
            while c < 4 {
                let d = if a + b + c <= 6 { 6 - a - b - c } else { 4 };
                if a != b && a != c && b != c && d < 4 && d != a && d != b && d != c {
                    out[count] = [a, b, c, d];
                    count += 1;
                }
                c += 1;
            }
            b += 1;
        }
        a += 1;
    }
    out
};

/// `(1/4!) sum_sigma sign(sigma) X[sigma(i, j, k, l)]`, max-abs over `i<j<k<l`.
fn antisymmetrized_max(x: &Array4<f64>, n: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                for l in k + 1..n {
                    let idx = [i, j, k, l];
                    let mut acc = 0.0;
                    for p in &PERMUTATIONS {
                        acc += permutation_sign(p) * x[[idx[p[0]], idx[p[1]], idx[p[2]], idx[p[3]]]];
                    }
                    worst = worst.max((acc / 24.0).abs());
                }
            }
        }
    }
    worst
}

fn max_abs(t: &Array4<f64>) -> f64 {
    t.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Antisymmetrized curvature contractions that vanish on Hessian manifolds.
///
/// With `R_abcd` the lowered Levi-Civita curvature and all raising by `g^-1`:
///
/// - `P1_ijkl = Alt[R_ija^b R_klb^a]`
/// - `P2_ijkl = Alt[R_iajb R_k^b_cd R_l^dac - 2 R_iajb R_kc^a_d R_l^dbc]`
///
/// Relative values divide by the size of the summands so that they do not
/// change when the metric is rescaled.
pub fn pontryagin_obstructions(metric: &dyn MetricField, point: &[f64]) -> Result<ObstructionReport> {
    let bundle = riemann(metric, point)?;
    Ok(obstructions_from(&bundle.riemann_lower, &bundle.inverse))
}

pub fn obstructions_from_sample(sample: &MetricSample) -> Result<ObstructionReport> {
    let bundle = curvature_from_sample(sample)?;
    Ok(obstructions_from(&bundle.riemann_lower, &bundle.inverse))
}

fn obstructions_from(lower: &Array4<f64>, gi: &DMatrix<f64>) -> ObstructionReport {
    let n = gi.nrows();
    // R_ij^a_b style tensors
    let mixed4 = raise(lower, gi, 3); // R_ija^b
    let k_up2 = raise(lower, gi, 1); // R_k^b_cd
    let k_up3 = raise(lower, gi, 2); // R_kc^a_d
    let l_up = raise(&raise(&k_up2, gi, 2), gi, 3); // R_l^dac

    let mut x1 = Array4::<f64>::zeros((n, n, n, n));
    let mut x2 = Array4::<f64>::zeros((n, n, n, n));
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    if i == j || i == k || i == l || j == k || j == l || k == l {
                        continue;
                    }
                    let mut q = 0.0;
                    for a in 0..n {
                        for b in 0..n {
                            q += mixed4[[i, j, a, b]] * mixed4[[k, l, b, a]];
                        }
                    }
                    x1[[i, j, k, l]] = q;
                    let mut c3 = 0.0;
                    for a in 0..n {
                        for b in 0..n {
                            let r = lower[[i, a, j, b]];
                            if r == 0.0 {
                                continue;
                            }
                            for c in 0..n {
                                for d in 0..n {
                                    c3 += r
                                        * (k_up2[[k, b, c, d]] * l_up[[l, d, a, c]]
                                            - 2.0 * k_up3[[k, c, a, d]] * l_up[[l, d, b, c]]);
                                }
                            }
                        }
                    }
                    x2[[i, j, k, l]] = c3;
                }
            }
        }
    }
    let p1 = antisymmetrized_max(&x1, n);
    let p2 = antisymmetrized_max(&x2, n);
    let scale_mixed = max_abs(&mixed4);
    let scale_cubic = max_abs(lower) * max_abs(&k_up2).max(max_abs(&k_up3)) * max_abs(&l_up);
    let rel = |v: f64, s: f64| if s > 0.0 { v / s } else { v };
    ObstructionReport {
        dim: n,
        p1,
        p2,
        scale_mixed,
        scale_cubic,
        p1_relative: rel(p1, scale_mixed * scale_mixed),
        p2_relative: rel(p2, scale_cubic),
    }
}

/// `Phi(E+dE) - Phi(E) - I_a dE^a - Phi_ab dE^a dE^b / 2`.
pub fn fluctuation_residual(system: &SystemDefinition, e: &[f64], de: &[f64]) -> Result<f64> {
    if de.len() != e.len() {
        return Err(Error::InvalidArgument("displacement has the wrong length".into()));
    }
    let moved: Vec<f64> = e.iter().zip(de).map(|(a, b)| a + b).collect();
    let phi1 = system.potential_at(&moved)?;
    let phi0 = system.potential_at(e)?;
    let jet = system.jet_at(e, 2)?;
    let n = e.len();
    let mut linear = 0.0;
    let mut quadratic = 0.0;
    for a in 0..n {
        linear += jet.partial_along(&[a])? * de[a];
        for b in 0..n {
            quadratic += jet.partial_along(&[a, b])? * de[a] * de[b];
        }
    }
    Ok(phi1 - phi0 - linear - 0.5 * quadratic)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluctuationReport {
    pub direction: Vec<f64>,
    pub steps: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Least-squares slope of `ln |r|` against `ln h`.
    pub slope: f64,
}

pub const FLUCTUATION_STEPS: usize = 9;

/// Fits the order of the remainder along `direction` (normalized) for
/// `FLUCTUATION_STEPS` log-spaced steps in `[h_min, h_max]`.
pub fn fluctuation_check(
    system: &SystemDefinition,
    e: &[f64],
    direction: &[f64],
    h_min: f64,
    h_max: f64,
) -> Result<FluctuationReport> {
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) || direction.len() != e.len() {
        return Err(Error::InvalidArgument("direction must be a nonzero vector of the system's dimension".into()));
    }
    if !(0.0 < h_min && h_min < h_max) {
        return Err(Error::InvalidArgument("steps must satisfy 0 < h_min < h_max".into()));
    }
    let unit: Vec<f64> = direction.iter().map(|v| v / norm).collect();
    let ratio = (h_max / h_min).ln() / (FLUCTUATION_STEPS - 1) as f64;
    let steps: Vec<f64> = (0..FLUCTUATION_STEPS)
        .map(|j| h_min * (ratio * j as f64).exp())
        .collect();
    let residuals = steps
        .iter()
        .map(|&h| {
            let de: Vec<f64> = unit.iter().map(|u| u * h).collect();
            fluctuation_residual(system, e, &de)
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = steps.iter().map(|h| f64::ln(*h)).collect();
    let ys: Vec<f64> = residuals.iter().map(|r| f64::ln(r.abs().max(f64::MIN_POSITIVE))).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(FluctuationReport {
        direction: unit,
        steps,
        residuals,
        slope: sxy / sxx,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanFlag {
    /// `|R|` above the threshold.
    Curvature,
    /// `det g` changes sign towards a grid neighbour.
    DeterminantSignChange,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanPoint {
    pub point: Vec<f64>,
    pub scalar: Option<f64>,
    pub kretschmann: Option<f64>,
    pub determinant: Option<f64>,
    pub error: Option<String>,
    pub flags: Vec<ScanFlag>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub threshold: f64,
    pub points: Vec<ScanPoint>,
}

impl ScanReport {
    pub fn flagged(&self) -> impl Iterator<Item = &ScanPoint> {
        self.points.iter().filter(|p| !p.flags.is_empty())
    }
}

pub const DEFAULT_SINGULARITY_THRESHOLD: f64 = 1e4;

/// Scalar invariants over a grid, flagging large curvature and sign changes of `det g`.
///
/// Points that fail (outside the domain, degenerate metric) keep their error
/// message and the scan carries on.
pub fn singularity_scan(metric: &dyn MetricField, grid: &Grid, threshold: f64) -> Result<ScanReport> {
    if grid.dim() != metric.dim() {
        return Err(Error::InvalidArgument(format!(
            "grid has {} axes, metric dimension is {}",
            grid.dim(),
            metric.dim()
        )));
    }
    let dets: Vec<Option<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            MetricSample::at(metric, &grid.point(idx))
                .ok()
                .map(|s| s.g.determinant())
        })
        .collect();
    let mut points: Vec<ScanPoint> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let point = grid.point(idx);
            match riemann(metric, &point) {
                Ok(b) => ScanPoint {
                    point,
                    scalar: Some(b.scalar),
                    kretschmann: Some(b.kretschmann),
                    determinant: dets[idx],
                    error: None,
                    flags: Vec::new(),
                },
                Err(e) => ScanPoint {
                    point,
                    scalar: None,
                    kretschmann: None,
                    determinant: dets[idx],
                    error: Some(e.to_string()),
                    flags: Vec::new(),
                },
            }
        })
        .collect();
    for (idx, p) in points.iter_mut().enumerate() {
        if p.scalar.is_some_and(|r| r.abs() > threshold) {
            p.flags.push(ScanFlag::Curvature);
        }
        if let Some(d) = dets[idx] {
            let crosses = grid
                .neighbors(idx)
                .into_iter()
                .any(|nb| dets[nb].is_some_and(|dn| dn.signum() * d.signum() < 0.0));
            if crosses {
                p.flags.push(ScanFlag::DeterminantSignChange);
            }
        }
    }
    Ok(ScanReport { threshold, points })
}

/// [`singularity_scan`] of a system's equilibrium metric.
pub fn gtd_singularity_scan(
    kind: &GtdKind,
    system: &SystemDefinition,
    grid: &Grid,
    threshold: f64,
) -> Result<ScanReport> {
    singularity_scan(&EquilibriumMetric::new(kind.clone(), system), grid, threshold)
}

/// Phase point on the equilibrium image, for feeding the map diagnostics.
pub fn equilibrium_phase_point(system: &SystemDefinition, e: &[f64]) -> Result<PhasePoint> {
    embed(system, e)
}

/// Jacobian of [`Gtd3Map`] restricted to the `(E, I)` block.
pub fn gtd3_jacobian(k: i32, point: &PhasePoint) -> Result<DMatrix<f64>> {
    jacobian(&Gtd3Map { n: point.n(), k }, point)
}
