//! Legendre-invariant phase-space metrics, their equilibrium pullbacks, and
//! the classical Hessian metrics.
//!
//! All three phase metrics share the form `G = Theta^2 + h_ab dE^a dI^b`,
//! where a product of differentials `dx dy` means `(dx⊗dy + dy⊗dx)/2`:
//!
//! - kind I: `h_ab = Lambda delta_ab`, with `Lambda = xi_c E^c I^c`;
//! - kind II: `h_ab = Lambda eta_ab`, with `eta = diag(-1, 1, .., 1)`;
//! - kind III: `h_aa = (E^a I^a)^(2k+1)`, no sum.
//!
//! On the equilibrium submanifold `I_a = dPhi/dE^a` this pulls back to
//! `g = sym(h Phi'')`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::SystemDefinition;
use crate::jets::{seed, Jet, Ring};
use crate::manifold::MetricField;
use crate::phase::{contact_form, e_index, i_index, transform_metric, LegendreSpec, PhasePoint};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum GtdKind {
    I {
        /// Diagonal of `xi`; `None` is all ones.
        xi: Option<Vec<f64>>,
    },
    II {
        xi: Option<Vec<f64>>,
    },
    III {
        k: i32,
    },
}

impl GtdKind {
    pub fn one() -> GtdKind {
        GtdKind::I { xi: None }
    }

    pub fn two() -> GtdKind {
        GtdKind::II { xi: None }
    }

    pub fn three(k: i32) -> GtdKind {
        GtdKind::III { k }
    }

    /// Builds a kind from its name (`I`, `II` or `III`).
    pub fn from_parts(name: &str, k: Option<i32>, xi: Option<Vec<f64>>) -> Result<GtdKind> {
        match (name, k) {
            ("I", None) => Ok(GtdKind::I { xi }),
            ("II", None) => Ok(GtdKind::II { xi }),
            ("III", Some(k)) if xi.is_none() => Ok(GtdKind::III { k }),
            ("III", None) => Err(Error::InvalidArgument("kind III requires k".into())),
            ("III", Some(_)) => Err(Error::InvalidArgument("xi applies to kinds I and II only".into())),
            ("I" | "II", Some(_)) => Err(Error::InvalidArgument("k applies to kind III only".into())),
            (other, _) => Err(Error::InvalidArgument(format!(
                "unknown metric kind `{other}`, expected I, II or III"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GtdKind::I { .. } => "I",
            GtdKind::II { .. } => "II",
            GtdKind::III { .. } => "III",
        }
    }

    fn xi(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            GtdKind::I { xi: Some(xi) } | GtdKind::II { xi: Some(xi) } => {
                if xi.len() != n {
                    return Err(Error::InvalidArgument(format!(
                        "xi has {} entries, system has {n} variables",
                        xi.len()
                    )));
                }
                Ok(xi.clone())
            }
            _ => Ok(vec![1.0; n]),
        }
    }

    /// The `n × n` block `h_ab`, row-major, at extensive `e` and intensive `i`.
    pub fn h_block<T: Ring>(&self, e: &[T], i: &[T]) -> Result<Vec<T>> {
        let n = e.len();
        let zero = T::from_f64(0.0);
        let mut h = vec![zero; n * n];
        match self {
            GtdKind::I { .. } | GtdKind::II { .. } => {
                let xi = self.xi(n)?;
                let mut lambda = T::from_f64(0.0);
                for c in 0..n {
                    lambda = lambda.plus(&e[c].times(&i[c]).times(&T::from_f64(xi[c])));
                }
                for a in 0..n {
                    let chi = if a == 0 && matches!(self, GtdKind::II { .. }) { -1.0 } else { 1.0 };
                    h[a * n + a] = lambda.times(&T::from_f64(chi));
                }
            }
            GtdKind::III { k } => {
                let power = 2 * k + 1;
                for a in 0..n {
                    let ei = e[a].times(&i[a]);
                    if power < 0 && ei.value() == 0.0 {
                        return Err(Error::Domain(format!(
                            "E^{0} I^{0} = 0 is excluded for negative exponent {power}",
                            a + 1
                        )));
                    }
                    h[a * n + a] = ei.powi(power)?;
                }
            }
        }
        Ok(h)
    }
}

impl fmt::Display for GtdKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GtdKind::III { k } => write!(f, "III(k={k})"),
            other => f.write_str(other.name()),
        }
    }
}

/// `G = Theta⊗Theta + (h_ab / 2)(dE^a⊗dI^b + dI^b⊗dE^a)` in phase coordinates.
pub fn phase_metric(kind: &GtdKind, point: &PhasePoint) -> Result<DMatrix<f64>> {
    let n = point.n();
    let theta = DVector::from_vec(contact_form(point).components);
    let mut g = &theta * theta.transpose();
    let h = kind.h_block(&point.e, &point.i)?;
    for a in 0..n {
        for b in 0..n {
            let half = 0.5 * h[a * n + b];
            g[(e_index(a), i_index(n, b))] += half;
            g[(i_index(n, b), e_index(a))] += half;
        }
    }
    Ok(g)
}

/// Max componentwise difference between `G(z)` and the Legendre-transported `G(z~)`.
pub fn legendre_invariance_check(kind: &GtdKind, spec: &LegendreSpec, points: &[PhasePoint]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for point in points {
        let original = phase_metric(kind, point)?;
        let moved = phase_metric(kind, &spec.apply(point)?)?;
        let pulled = transform_metric(spec, point, &moved)?;
        worst = worst.max((pulled - original).abs().max());
    }
    Ok(worst)
}

/// `Phi`, `I_a = Phi_{,a}` and `Phi_{,ab}` as jets of order `order` in `n` variables.
///
/// The potential itself is expanded to `order + 2`.
fn potential_derivatives(system: &SystemDefinition, point: &[f64], order: usize) -> Result<(Jet, Vec<Jet>, Vec<Jet>)> {
    let n = system.n();
    let phi = system.jet_at(point, order + 2)?;
    let grad: Vec<Jet> = (0..n).map(|a| phi.derivative(a)).collect();
    let mut hess = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            hess.push(grad[a].derivative(b));
        }
    }
    let grad = grad.iter().map(|g| g.truncate(order)).collect();
    Ok((phi.truncate(order), grad, hess))
}

fn symmetrized_product(n: usize, h: &[Jet], hess: &[Jet]) -> Vec<Jet> {
    let mut out = Vec::with_capacity(n * n);
    for a in 0..n {
        for c in 0..n {
            let mut acc = Jet::scalar(0.0);
            for b in 0..n {
                acc = &acc + &(&h[a * n + b] * &hess[b * n + c]);
                acc = &acc + &(&h[c * n + b] * &hess[b * n + a]);
            }
            out.push(acc.scale(0.5));
        }
    }
    out
}

/// The equilibrium metric `g = sym(h Phi'')` of a system as a metric field.
#[derive(Debug, Clone)]
pub struct EquilibriumMetric<'a> {
    pub kind: GtdKind,
    pub system: &'a SystemDefinition,
}

impl<'a> EquilibriumMetric<'a> {
    pub fn new(kind: GtdKind, system: &'a SystemDefinition) -> Self {
        EquilibriumMetric { kind, system }
    }
}

impl MetricField for EquilibriumMetric<'_> {
    fn dim(&self) -> usize {
        self.system.n()
    }

    fn component_jets(&self, point: &[f64]) -> Result<Vec<Jet>> {
        let n = self.system.n();
        let (_, grad, hess) = potential_derivatives(self.system, point, 2)?;
        let e = seed(point, 2)?;
        let h = self.kind.h_block(&e, &grad)?;
        Ok(symmetrized_product(n, &h, &hess))
    }
}

fn values(n: usize, jets: &[Jet]) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |a, b| jets[a * n + b].value())
}

pub fn equilibrium_metric(kind: &GtdKind, system: &SystemDefinition, e: &[f64]) -> Result<DMatrix<f64>> {
    let n = system.n();
    let metric = EquilibriumMetric::new(kind.clone(), system);
    Ok(values(n, &metric.component_jets(e)?))
}

/// The image `(Phi(E), E, I(E))` of the equilibrium embedding.
pub fn embed(system: &SystemDefinition, e: &[f64]) -> Result<PhasePoint> {
    let phi = system.potential_at(e)?;
    let grad = system.gradient(e)?;
    PhasePoint::new(phi, e.to_vec(), grad.iter().copied().collect())
}

/// Jacobian `dZ^A / dE^b` of the embedding, `(2n+1) × n`.
pub fn embedding_jacobian(system: &SystemDefinition, e: &[f64]) -> Result<DMatrix<f64>> {
    let n = system.n();
    let grad = system.gradient(e)?;
    let hess = system.hessian(e)?;
    let mut j = DMatrix::zeros(2 * n + 1, n);
    for b in 0..n {
        j[(0, b)] = grad[b];
        j[(e_index(b), b)] = 1.0;
        for a in 0..n {
            j[(i_index(n, a), b)] = hess[(a, b)];
        }
    }
    Ok(j)
}

/// `g = phi^*(G)` by explicit chain rule through the embedding.
pub fn pullback_metric(kind: &GtdKind, system: &SystemDefinition, e: &[f64]) -> Result<DMatrix<f64>> {
    let j = embedding_jacobian(system, e)?;
    let g = phase_metric(kind, &embed(system, e)?)?;
    Ok(j.transpose() * g * j)
}

/// Max component of `phi^*(Theta)`; the first law says it vanishes.
pub fn first_law_residual(system: &SystemDefinition, e: &[f64]) -> Result<f64> {
    let j = embedding_jacobian(system, e)?;
    let theta = DVector::from_vec(contact_form(&embed(system, e)?).components);
    Ok((j.transpose() * theta).abs().max())
}

/// `Phi_{,ab}`.
pub fn hessian_metric(system: &SystemDefinition, e: &[f64]) -> Result<DMatrix<f64>> {
    system.hessian(e)
}

fn require_potential(system: &SystemDefinition, name: &str, metric: &str) -> Result<()> {
    if system.potential != name {
        return Err(Error::InvalidArgument(format!(
            "the {metric} metric needs potential {name}, system `{}` has {}",
            system.name, system.potential
        )));
    }
    Ok(())
}

/// `+U_{,ab}` for an energy-representation system.
pub fn weinhold(system: &SystemDefinition, e: &[f64]) -> Result<DMatrix<f64>> {
    require_potential(system, "U", "Weinhold")?;
    system.hessian(e)
}

/// `-S_{,ab}` for an entropy-representation system.
pub fn ruppeiner(system: &SystemDefinition, e: &[f64]) -> Result<DMatrix<f64>> {
    require_potential(system, "S", "Ruppeiner")?;
    Ok(-system.hessian(e)?)
}

/// `sign * Phi_{,ab}` as a metric field.
#[derive(Debug, Clone)]
pub struct HessianMetric<'a> {
    pub system: &'a SystemDefinition,
    pub sign: f64,
}

impl<'a> HessianMetric<'a> {
    pub fn plain(system: &'a SystemDefinition) -> Self {
        HessianMetric { system, sign: 1.0 }
    }

    pub fn weinhold(system: &'a SystemDefinition) -> Result<Self> {
        require_potential(system, "U", "Weinhold")?;
        Ok(HessianMetric { system, sign: 1.0 })
    }

    pub fn ruppeiner(system: &'a SystemDefinition) -> Result<Self> {
        require_potential(system, "S", "Ruppeiner")?;
        Ok(HessianMetric { system, sign: -1.0 })
    }
}

impl MetricField for HessianMetric<'_> {
    fn dim(&self) -> usize {
        self.system.n()
    }

    fn component_jets(&self, point: &[f64]) -> Result<Vec<Jet>> {
        let (_, _, hess) = potential_derivatives(self.system, point, 2)?;
        Ok(hess.iter().map(|h| h.scale(self.sign)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformalReport {
    pub temperature: f64,
    /// max |Ruppeiner - Weinhold / T| in entropy-representation coordinates
    pub residual: f64,
    /// |U(S(U, X), X) - U|: how well the two representations invert each other
    pub inversion_residual: f64,
}

/// Compares `-S_{,ab}` against the Weinhold metric divided by `T`, both in
/// the coordinates `(U, X..)` of the entropy representation.
///
/// `entropy` is `S(U, X..)` and `energy` is `U(S, X..)` with the same `X..`.
/// The Weinhold metric is moved from `(S, X..)` to `(U, X..)` with the
/// Jacobian of `S(U, X..)`.
pub fn conformal_check(
    entropy: &SystemDefinition,
    energy: &SystemDefinition,
    state: &[f64],
) -> Result<ConformalReport> {
    require_potential(entropy, "S", "Ruppeiner")?;
    require_potential(energy, "U", "Weinhold")?;
    let n = entropy.n();
    if energy.n() != n
        || entropy.variables.first().map(String::as_str) != Some("U")
        || energy.variables.first().map(String::as_str) != Some("S")
        || entropy.variables[1..] != energy.variables[1..]
    {
        return Err(Error::InvalidArgument(format!(
            "`{}` and `{}` are not the entropy and energy forms of one system",
            entropy.name, energy.name
        )));
    }
    let s = entropy.potential_at(state)?;
    let grad_s = entropy.gradient(state)?;
    let mut energy_state = state.to_vec();
    energy_state[0] = s;
    let u = energy.potential_at(&energy_state)?;
    let temperature = energy.gradient(&energy_state)?[0];

    let mut j = DMatrix::identity(n, n);
    for b in 0..n {
        j[(0, b)] = grad_s[b];
    }
    let w = j.transpose() * weinhold(energy, &energy_state)? * j;
    let r = ruppeiner(entropy, state)?;
    Ok(ConformalReport {
        temperature,
        residual: (r - w / temperature).abs().max(),
        inversion_residual: (u - state[0]).abs(),
    })
}
