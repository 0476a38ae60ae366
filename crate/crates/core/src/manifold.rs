//! Levi-Civita curvature of a metric given by component jets.
//!
//! Conventions:
//!
//! - `christoffel[[a, b, c]]` is `Γ^a_{bc} = ½ g^{ad}(∂_b g_{dc} + ∂_c g_{bd} − ∂_d g_{bc})`.
//! - `riemann[[a, b, c, d]]` is
//!   `R^a_{bcd} = ∂_c Γ^a_{db} − ∂_d Γ^a_{cb} + Γ^a_{ce} Γ^e_{db} − Γ^a_{de} Γ^e_{cb}`.
//! - `Ric_{bd} = R^a_{bad}` and `R = g^{bd} Ric_{bd}`.
//!
//! With these, the unit 2-sphere has `R = +2`. Nothing assumes a positive
//! definite metric; the inverse uses full pivoting.

use nalgebra::DMatrix;
use ndarray::{Array3, Array4};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jets::{seed, Jet};

/// Metrics whose condition number exceeds this are rejected as degenerate.
pub const MAX_CONDITION: f64 = 1e12;

/// A (pseudo-)Riemannian metric field.
pub trait MetricField: Sync {
    fn dim(&self) -> usize;

    /// Row-major `dim × dim` component jets at `point`, in `dim` variables,
    /// of order at least 2.
    fn component_jets(&self, point: &[f64]) -> Result<Vec<Jet>>;
}

/// Metric given by a closure over seed jets of order 2.
pub struct FnMetric<F> {
    dim: usize,
    components: F,
}

impl<F> FnMetric<F>
where
    F: Fn(&[Jet]) -> Result<Vec<Jet>> + Sync,
{
    pub fn new(dim: usize, components: F) -> Self {
        FnMetric { dim, components }
    }
}

impl<F> MetricField for FnMetric<F>
where
    F: Fn(&[Jet]) -> Result<Vec<Jet>> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn component_jets(&self, point: &[f64]) -> Result<Vec<Jet>> {
        let vars = seed(point, 2)?;
        (self.components)(&vars)
    }
}

/// Metric components and their first and second coordinate derivatives at a point.
#[derive(Debug, Clone)]
pub struct MetricSample {
    pub g: DMatrix<f64>,
    /// `dg[c][(a, b)] = ∂_c g_{ab}`
    pub dg: Vec<DMatrix<f64>>,
    /// `ddg[c * dim + d][(a, b)] = ∂_c ∂_d g_{ab}`
    pub ddg: Vec<DMatrix<f64>>,
}

impl MetricSample {
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn from_jets(dim: usize, jets: &[Jet]) -> Result<MetricSample> {
        if jets.len() != dim * dim {
            return Err(Error::InvalidArgument(format!(
                "expected {} metric components, got {}",
                dim * dim,
                jets.len()
            )));
        }
        let component = |a: usize, b: usize, vars: &[usize]| -> Result<f64> {
            let jet = &jets[a * dim + b];
            if jet.is_scalar() {
                return Ok(if vars.is_empty() { jet.value() } else { 0.0 });
            }
            if jet.nvars() != dim || jet.order() < 2 {
                return Err(Error::InvalidArgument(format!(
                    "metric component jets must have {dim} variables and order >= 2, got ({}, {})",
                    jet.nvars(),
                    jet.order()
                )));
            }
            jet.partial_along(vars)
        };
        let build = |vars: &[usize]| -> Result<DMatrix<f64>> {
            let mut m = DMatrix::zeros(dim, dim);
            for a in 0..dim {
                for b in 0..dim {
                    m[(a, b)] = component(a, b, vars)?;
                }
            }
            Ok(m)
        };
        let g = build(&[])?;
        let dg = (0..dim).map(|c| build(&[c])).collect::<Result<Vec<_>>>()?;
        let mut ddg = Vec::with_capacity(dim * dim);
        for c in 0..dim {
            for d in 0..dim {
                ddg.push(build(&[c, d])?);
            }
        }
        Ok(MetricSample { g, dg, ddg })
    }

    pub fn at(metric: &dyn MetricField, point: &[f64]) -> Result<MetricSample> {
        if point.len() != metric.dim() {
            return Err(Error::InvalidArgument(format!(
                "point has {} coordinates, metric dimension is {}",
                point.len(),
                metric.dim()
            )));
        }
        MetricSample::from_jets(metric.dim(), &metric.component_jets(point)?)
    }
}

/// Ratio of extreme singular values.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Inverse of a metric, guarded against near-degeneracy.
pub fn guarded_inverse(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let condition = condition_number(g);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::DegenerateMetric { condition });
    }
    g.clone()
        .full_piv_lu()
        .try_inverse()
        .ok_or(Error::DegenerateMetric { condition })
}

#[derive(Debug, Clone)]
pub struct CurvatureBundle {
    pub metric: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
    pub christoffel: Array3<f64>,
    /// `R^a_{bcd}`
    pub riemann: Array4<f64>,
    /// `R_{abcd} = g_{ae} R^e_{bcd}`
    pub riemann_lower: Array4<f64>,
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
    /// `R_{abcd} R^{abcd}`
    pub kretschmann: f64,
    /// `Ric_{ab} Ric^{ab}`
    pub ricci_squared: f64,
}

impl CurvatureBundle {
    pub fn dim(&self) -> usize {
        self.metric.nrows()
    }

    /// Largest of `|R|`, `sqrt|K|` and `sqrt|Ric²|`.
    pub fn max_invariant(&self) -> f64 {
        self.scalar
            .abs()
            .max(self.kretschmann.abs().sqrt())
            .max(self.ricci_squared.abs().sqrt())
    }

    /// `R^{abcd}` with all indices raised.
    pub fn riemann_upper(&self) -> Array4<f64> {
        let n = self.dim();
        let gi = &self.inverse;
        let mut out = self.riemann.clone();
        // raise b, c, d one slot at a time
        for slot in 1..4 {
            let src = out.clone();
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        for d in 0..n {
                            let mut acc = 0.0;
                            for e in 0..n {
                                let (idx, raise) = match slot {
                                    1 => ([a, e, c, d], gi[(b, e)]),
                                    2 => ([a, b, e, d], gi[(c, e)]),
                                    _ => ([a, b, c, e], gi[(d, e)]),
                                };
                                acc += raise * src[idx];
                            }
                            out[[a, b, c, d]] = acc;
                        }
                    }
                }
            }
        }
        out
    }
}

fn christoffel_from(sample: &MetricSample, inverse: &DMatrix<f64>) -> Array3<f64> {
    let n = sample.dim();
    let mut first_kind = Array3::<f64>::zeros((n, n, n));
    for d in 0..n {
        for b in 0..n {
            for c in 0..n {
                first_kind[[d, b, c]] = 0.5
                    * (sample.dg[b][(d, c)] + sample.dg[c][(b, d)] - sample.dg[d][(b, c)]);
            }
        }
    }
    let mut gamma = Array3::<f64>::zeros((n, n, n));
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                gamma[[a, b, c]] = (0..n).map(|d| inverse[(a, d)] * first_kind[[d, b, c]]).sum();
            }
        }
    }
    gamma
}

pub fn christoffel(metric: &dyn MetricField, point: &[f64]) -> Result<Array3<f64>> {
    let sample = MetricSample::at(metric, point)?;
    let inverse = guarded_inverse(&sample.g)?;
    Ok(christoffel_from(&sample, &inverse))
}

pub fn riemann(metric: &dyn MetricField, point: &[f64]) -> Result<CurvatureBundle> {
    curvature_from_sample(&MetricSample::at(metric, point)?)
}

pub fn curvature_from_sample(sample: &MetricSample) -> Result<CurvatureBundle> {
    let n = sample.dim();
    let g = &sample.g;
    let gi = guarded_inverse(g)?;
    let gamma = christoffel_from(sample, &gi);

    // dgamma[[e, a, b, c]] = ∂_e Γ^a_{bc}
    //   = -g^{ap} ∂_e g_{pq} Γ^q_{bc} + g^{ad} ∂_e [bc, d]
    let mut dgamma = Array4::<f64>::zeros((n, n, n, n));
    for e in 0..n {
        let a_e = -(&gi * &sample.dg[e]);
        let mut dfirst = DMatrix::zeros(n, n * n);
        for d in 0..n {
            for b in 0..n {
                for c in 0..n {
                    dfirst[(d, b * n + c)] = 0.5
                        * (sample.ddg[e * n + b][(d, c)] + sample.ddg[e * n + c][(b, d)]
                            - sample.ddg[e * n + d][(b, c)]);
                }
            }
        }
        let second = &gi * dfirst;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let mut acc = second[(a, b * n + c)];
                    for q in 0..n {
                        acc += a_e[(a, q)] * gamma[[q, b, c]];
                    }
                    dgamma[[e, a, b, c]] = acc;
                }
            }
        }
    }

    let mut riemann = Array4::<f64>::zeros((n, n, n, n));
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let mut r = dgamma[[c, a, d, b]] - dgamma[[d, a, c, b]];
                    for e in 0..n {
                        r += gamma[[a, c, e]] * gamma[[e, d, b]] - gamma[[a, d, e]] * gamma[[e, c, b]];
                    }
                    riemann[[a, b, c, d]] = r;
                }
            }
        }
    }

    let mut riemann_lower = Array4::<f64>::zeros((n, n, n, n));
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    riemann_lower[[a, b, c, d]] = (0..n).map(|e| g[(a, e)] * riemann[[e, b, c, d]]).sum();
                }
            }
        }
    }

    let ricci = DMatrix::from_fn(n, n, |b, d| (0..n).map(|a| riemann[[a, b, a, d]]).sum());
    let scalar = (gi.component_mul(&ricci.transpose())).sum();
    let ricci_up = &gi * &ricci * &gi;
    let ricci_squared = ricci.component_mul(&ricci_up).sum();

    let mut bundle = CurvatureBundle {
        metric: g.clone(),
        inverse: gi,
        christoffel: gamma,
        riemann,
        riemann_lower,
        ricci,
        scalar,
        kretschmann: 0.0,
        ricci_squared,
    };
    let upper = bundle.riemann_upper();
    bundle.kretschmann = bundle
        .riemann_lower
        .iter()
        .zip(upper.iter())
        .map(|(lo, up)| lo * up)
        .sum();
    Ok(bundle)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalarInvariants {
    pub scalar: f64,
    pub kretschmann: f64,
    pub ricci_squared: f64,
}

impl From<&CurvatureBundle> for ScalarInvariants {
    fn from(b: &CurvatureBundle) -> Self {
        ScalarInvariants {
            scalar: b.scalar,
            kretschmann: b.kretschmann,
            ricci_squared: b.ricci_squared,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatnessReport {
    pub flat: bool,
    pub tolerance: f64,
    pub points: usize,
    pub max_abs_scalar: f64,
    pub max_abs_kretschmann: f64,
    pub max_abs_ricci_squared: f64,
    /// Largest `max(|R|, sqrt|K|, sqrt|Ric²|)` over the grid.
    pub max_invariant: f64,
    pub worst_point: Vec<f64>,
}

/// Scalar invariants at every point; flat iff each stays within `tol`.
///
/// Points are evaluated in parallel; the first error in point order is returned.
pub fn flatness_report(metric: &dyn MetricField, points: &[Vec<f64>], tol: f64) -> Result<FlatnessReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let results: Vec<Result<ScalarInvariants>> = points
        .par_iter()
        .map(|p| riemann(metric, p).map(|b| ScalarInvariants::from(&b)))
        .collect();
    let mut report = FlatnessReport {
        flat: true,
        tolerance: tol,
        points: points.len(),
        max_abs_scalar: 0.0,
        max_abs_kretschmann: 0.0,
        max_abs_ricci_squared: 0.0,
        max_invariant: 0.0,
        worst_point: Vec::new(),
    };
    for (point, result) in points.iter().zip(results) {
        let inv = result?;
        report.max_abs_scalar = report.max_abs_scalar.max(inv.scalar.abs());
        report.max_abs_kretschmann = report.max_abs_kretschmann.max(inv.kretschmann.abs());
        report.max_abs_ricci_squared = report.max_abs_ricci_squared.max(inv.ricci_squared.abs());
        let m = inv
            .scalar
            .abs()
            .max(inv.kretschmann.abs().sqrt())
            .max(inv.ricci_squared.abs().sqrt());
        if m > report.max_invariant || report.worst_point.is_empty() {
            report.max_invariant = report.max_invariant.max(m);
            report.worst_point = point.clone();
        }
    }
    report.flat = report.max_invariant <= tol;
    Ok(report)
}
