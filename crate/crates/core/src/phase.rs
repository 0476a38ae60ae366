//! The thermodynamic phase space with coordinates `Z = (Phi, E^1..E^n, I_1..I_n)`.
//!
//! Coordinates are laid out in that order everywhere: index 0 is `Phi`,
//! `1..=n` are the extensive variables and `n+1..=2n` the intensive ones.
//! Upper and lower positions of `I` are numerically identical.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{parse, Bindings, Expression};
use crate::jets::{seed, Ring};
use crate::manifold::{condition_number, MAX_CONDITION};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhasePoint {
    pub phi: f64,
    pub e: Vec<f64>,
    pub i: Vec<f64>,
}

impl PhasePoint {
    pub fn new(phi: f64, e: Vec<f64>, i: Vec<f64>) -> Result<PhasePoint> {
        if e.is_empty() || e.len() != i.len() {
            return Err(Error::InvalidArgument(format!(
                "phase point needs n >= 1 extensive and intensive values, got {} and {}",
                e.len(),
                i.len()
            )));
        }
        Ok(PhasePoint { phi, e, i })
    }

    pub fn from_coords(coords: &[f64]) -> Result<PhasePoint> {
        if coords.len() < 3 || coords.len() % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "phase coordinates must have odd length 2n+1 >= 3, got {}",
                coords.len()
            )));
        }
        let n = (coords.len() - 1) / 2;
        PhasePoint::new(coords[0], coords[1..=n].to_vec(), coords[n + 1..].to_vec())
    }

    pub fn n(&self) -> usize {
        self.e.len()
    }

    pub fn coords(&self) -> Vec<f64> {
        let mut z = Vec::with_capacity(2 * self.n() + 1);
        z.push(self.phi);
        z.extend_from_slice(&self.e);
        z.extend_from_slice(&self.i);
        z
    }
}

pub fn phi_index() -> usize {
    0
}

pub fn e_index(a: usize) -> usize {
    1 + a
}

pub fn i_index(n: usize, a: usize) -> usize {
    1 + n + a
}

/// `Phi, E1..En, I1..In`: the variable names expressions over phase space use.
pub fn phase_variable_names(n: usize) -> Vec<String> {
    let mut names = vec!["Phi".to_string()];
    names.extend((1..=n).map(|a| format!("E{a}")));
    names.extend((1..=n).map(|a| format!("I{a}")));
    names
}

/// Components of a 1-form in the coordinate basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OneForm {
    pub components: Vec<f64>,
}

impl OneForm {
    pub fn max_abs_diff(&self, other: &OneForm) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `Theta = dPhi - I_a dE^a`.
pub fn contact_form(point: &PhasePoint) -> OneForm {
    let n = point.n();
    let mut components = vec![0.0; 2 * n + 1];
    components[0] = 1.0;
    for a in 0..n {
        components[e_index(a)] = -point.i[a];
    }
    OneForm { components }
}

/// Forms on a space of dimension <= 32, keyed by the bitmask of basis 1-forms.
type Form = BTreeMap<u32, f64>;

fn wedge(lhs: &Form, rhs: &Form) -> Form {
    let mut out = Form::new();
    for (&a, &x) in lhs {
        for (&b, &y) in rhs {
            if a & b != 0 {
                continue;
            }
            // sign of sorting the concatenation: count pairs (i in a, j in b) with i > j
            let mut swaps = 0;
            for j in 0..32 {
                if b & (1 << j) != 0 {
                    swaps += (a >> (j + 1)).count_ones();
                }
            }
            let sign = if swaps % 2 == 0 { 1.0 } else { -1.0 };
            *out.entry(a | b).or_insert(0.0) += sign * x * y;
        }
    }
    out.retain(|_, v| *v != 0.0);
    out
}

/// Coefficient of `Theta ∧ (dTheta)^n / n!` on `dPhi ∧ dE^1..dE^n ∧ dI_1..dI_n`.
///
/// Computed by explicit exterior products, so limited to `n <= 3`.
/// The canonical form gives `±1` at every point.
pub fn contact_volume(point: &PhasePoint) -> Result<f64> {
    let n = point.n();
    if n > 3 {
        return Err(Error::InvalidArgument(format!(
            "contact volume is expanded explicitly only for n <= 3, got n = {n}"
        )));
    }
    let theta: Form = contact_form(point)
        .components
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(k, c)| (1u32 << k, *c))
        .collect();
    // dTheta = -dI_a ∧ dE^a = dE^a ∧ dI_a
    let mut dtheta = Form::new();
    for a in 0..n {
        dtheta.insert((1 << e_index(a)) | (1 << i_index(n, a)), 1.0);
    }
    let mut acc = theta;
    let mut factorial = 1.0;
    for k in 1..=n {
        acc = wedge(&acc, &dtheta);
        factorial *= k as f64;
    }
    let top = (1u32 << (2 * n + 1)) - 1;
    Ok(acc.get(&top).copied().unwrap_or(0.0) / factorial)
}

/// A smooth map of phase space into itself, evaluable over any ring.
pub trait PhaseMap: Sync {
    fn n(&self) -> usize;

    /// Target coordinates `(F, X^a, Y^a)` at source coordinates `z`.
    fn map<T: Ring>(&self, z: &[T]) -> Result<Vec<T>>;
}

pub fn image<M: PhaseMap>(map: &M, point: &PhasePoint) -> Result<PhasePoint> {
    check_dim(map.n(), point)?;
    PhasePoint::from_coords(&map.map(&point.coords())?)
}

/// `J[(A, B)] = dZbar^A / dZ^B`.
pub fn jacobian<M: PhaseMap>(map: &M, point: &PhasePoint) -> Result<DMatrix<f64>> {
    check_dim(map.n(), point)?;
    let dim = 2 * map.n() + 1;
    let jets = seed(&point.coords(), 1)?;
    let out = map.map(&jets)?;
    let mut j = DMatrix::zeros(dim, dim);
    for (row, jet) in out.iter().enumerate() {
        for col in 0..dim {
            j[(row, col)] = if jet.is_scalar() {
                0.0
            } else {
                jet.partial_along(&[col])?
            };
        }
    }
    Ok(j)
}

fn check_dim(n: usize, point: &PhasePoint) -> Result<()> {
    if point.n() != n {
        return Err(Error::InvalidArgument(format!(
            "point has n = {}, map expects n = {n}",
            point.n()
        )));
    }
    Ok(())
}

fn nonsingular_jacobian<M: PhaseMap>(map: &M, point: &PhasePoint) -> Result<DMatrix<f64>> {
    let j = jacobian(map, point)?;
    let condition = condition_number(&j);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularJacobian { condition });
    }
    Ok(j)
}

/// Pulls back a 1-form given in target components at `image(map, point)`.
pub fn transform_form<M: PhaseMap>(map: &M, point: &PhasePoint, target: &OneForm) -> Result<OneForm> {
    let j = nonsingular_jacobian(map, point)?;
    if target.components.len() != j.nrows() {
        return Err(Error::InvalidArgument("1-form has the wrong length".into()));
    }
    let omega = DMatrix::from_column_slice(j.nrows(), 1, &target.components);
    let pulled = j.transpose() * omega;
    Ok(OneForm {
        components: pulled.iter().copied().collect(),
    })
}

/// Pulls back a metric given in target components at `image(map, point)`.
pub fn transform_metric<M: PhaseMap>(
    map: &M,
    point: &PhasePoint,
    target: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let j = nonsingular_jacobian(map, point)?;
    if target.shape() != j.shape() {
        return Err(Error::InvalidArgument("metric has the wrong shape".into()));
    }
    Ok(j.transpose() * target * j)
}

/// The partial or total Legendre transformation exchanging the pairs in `indices`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LegendreSpec {
    n: usize,
    indices: Vec<usize>,
}

impl LegendreSpec {
    /// `indices` are zero-based and may be given in any order.
    pub fn new(n: usize, indices: &[usize]) -> Result<LegendreSpec> {
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != indices.len() {
            return Err(Error::InvalidArgument("Legendre indices must be distinct".into()));
        }
        if let Some(&bad) = sorted.iter().find(|&&a| a >= n) {
            return Err(Error::InvalidArgument(format!(
                "Legendre index {} out of range 1..={n}",
                bad + 1
            )));
        }
        Ok(LegendreSpec { n, indices: sorted })
    }

    pub fn identity(n: usize) -> LegendreSpec {
        LegendreSpec { n, indices: Vec::new() }
    }

    pub fn total(n: usize) -> LegendreSpec {
        LegendreSpec {
            n,
            indices: (0..n).collect(),
        }
    }

    /// Every subset of `{1..n}`, ordered by bitmask.
    pub fn all(n: usize) -> Vec<LegendreSpec> {
        (0..1usize << n)
            .map(|mask| LegendreSpec {
                n,
                indices: (0..n).filter(|a| mask & (1 << a) != 0).collect(),
            })
            .collect()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn is_identity(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn is_total(&self) -> bool {
        self.indices.len() == self.n
    }

    pub fn apply(&self, point: &PhasePoint) -> Result<PhasePoint> {
        image(self, point)
    }
}

impl PhaseMap for LegendreSpec {
    fn n(&self) -> usize {
        self.n
    }

    fn map<T: Ring>(&self, z: &[T]) -> Result<Vec<T>> {
        let n = self.n;
        let mut out = z.to_vec();
        let mut phi = z[0].clone();
        for &a in &self.indices {
            let e_new = z[i_index(n, a)].clone();
            let i_new = z[e_index(a)].negate();
            phi = phi.plus(&e_new.times(&i_new));
            out[e_index(a)] = e_new;
            out[i_index(n, a)] = i_new;
        }
        out[0] = phi;
        Ok(out)
    }
}

/// A phase-space map whose components are expressions in `Phi, E1.., I1..`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateMap {
    n: usize,
    names: Vec<String>,
    components: Vec<Expression>,
}

impl CoordinateMap {
    pub fn new(n: usize, components: Vec<Expression>) -> Result<CoordinateMap> {
        let names = phase_variable_names(n);
        if components.len() != 2 * n + 1 {
            return Err(Error::InvalidArgument(format!(
                "coordinate map needs {} components, got {}",
                2 * n + 1,
                components.len()
            )));
        }
        for c in &components {
            for v in c.variables() {
                if !names.contains(&v) {
                    return Err(Error::UnboundVariable(v));
                }
            }
        }
        Ok(CoordinateMap { n, names, components })
    }

    pub fn parse(n: usize, components: &[&str]) -> Result<CoordinateMap> {
        CoordinateMap::new(n, components.iter().map(|c| parse(c)).collect::<Result<_>>()?)
    }

    pub fn identity(n: usize) -> CoordinateMap {
        let names = phase_variable_names(n);
        let components = names.iter().map(|v| Expression::var(v.as_str())).collect();
        CoordinateMap { n, names, components }
    }

    pub fn components(&self) -> &[Expression] {
        &self.components
    }
}

impl PhaseMap for CoordinateMap {
    fn n(&self) -> usize {
        self.n
    }

    fn map<T: Ring>(&self, z: &[T]) -> Result<Vec<T>> {
        let bindings = Bindings::new(&self.names, z);
        self.components.iter().map(|c| c.evaluate(&bindings)).collect()
    }
}

/// First derivatives of a map's `X^a` and `Y_a` at one point, for bracket evaluation.
#[derive(Debug, Clone)]
pub struct Brackets {
    n: usize,
    jacobian: DMatrix<f64>,
}

impl Brackets {
    pub fn at<M: PhaseMap>(map: &M, point: &PhasePoint) -> Result<Brackets> {
        Ok(Brackets {
            n: map.n(),
            jacobian: jacobian(map, point)?,
        })
    }

    fn dx(&self, a: usize, z: usize) -> f64 {
        self.jacobian[(e_index(a), z)]
    }

    fn dy(&self, a: usize, z: usize) -> f64 {
        self.jacobian[(i_index(self.n, a), z)]
    }

    /// `(X^a, Y_a)_{Z^A Z^B}` summed over `a`.
    pub fn round(&self, za: usize, zb: usize) -> f64 {
        (0..self.n).map(|a| self.dx(a, za) * self.dy(a, zb)).sum()
    }

    /// `{X^a, Y_a}_{Z^A Z^B}` summed over `a`.
    pub fn curly(&self, za: usize, zb: usize) -> f64 {
        self.round(za, zb) - self.round(zb, za)
    }

    /// The single-label bracket `{X^a, Y_a}_{Z^A Z^B}` without summation.
    pub fn curly_label(&self, a: usize, za: usize, zb: usize) -> f64 {
        self.dx(a, za) * self.dy(a, zb) - self.dx(a, zb) * self.dy(a, za)
    }

    pub fn round_label(&self, a: usize, za: usize, zb: usize) -> f64 {
        self.dx(a, za) * self.dy(a, zb)
    }
}

pub fn curly_bracket<M: PhaseMap>(map: &M, point: &PhasePoint, za: usize, zb: usize) -> Result<f64> {
    Ok(Brackets::at(map, point)?.curly(za, zb))
}

pub fn round_bracket<M: PhaseMap>(map: &M, point: &PhasePoint, za: usize, zb: usize) -> Result<f64> {
    Ok(Brackets::at(map, point)?.round(za, zb))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct IntegrabilityReport {
    /// max |{X^a, Y_a}_{Phi E^b}|
    pub phi_e: f64,
    /// max |{X^a, Y_a}_{Phi I^b}|
    pub phi_i: f64,
    /// max |{X^a, Y_a}_{E^b I^c} - delta_bc / f|
    pub e_i: f64,
}

impl IntegrabilityReport {
    pub fn max(&self) -> f64 {
        self.phi_e.max(self.phi_i).max(self.e_i)
    }
}

fn eval_factor(f: &Expression, n: usize, point: &PhasePoint) -> Result<f64> {
    let value = f.eval_f64(&phase_variable_names(n), &point.coords())?;
    if value == 0.0 {
        return Err(Error::DivisionByZero);
    }
    Ok(value)
}

fn delta(b: usize, c: usize) -> f64 {
    if b == c {
        1.0
    } else {
        0.0
    }
}

/// Residuals of the integrability conditions for the contact-preserving PDEs.
pub fn verify_integrability<M: PhaseMap>(
    map: &M,
    f: &Expression,
    points: &[PhasePoint],
) -> Result<IntegrabilityReport> {
    let n = map.n();
    let mut report = IntegrabilityReport::default();
    for point in points {
        let br = Brackets::at(map, point)?;
        let fv = eval_factor(f, n, point)?;
        for b in 0..n {
            report.phi_e = report.phi_e.max(br.curly(0, e_index(b)).abs());
            report.phi_i = report.phi_i.max(br.curly(0, i_index(n, b)).abs());
            for c in 0..n {
                let r = br.curly(e_index(b), i_index(n, c)) - delta(b, c) / fv;
                report.e_i = report.e_i.max(r.abs());
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct MetricConditionReport {
    /// max |(X^a, Y_a)_{Phi Phi}|
    pub phi_phi: f64,
    pub phi_e: f64,
    pub phi_i: f64,
    pub e_e: f64,
    /// max |(X^a, Y_a)_{E^b I^c} - (h_bc / 2 - delta_bc / f)|
    pub e_i: f64,
}

impl MetricConditionReport {
    pub fn max(&self) -> f64 {
        self.phi_phi
            .max(self.phi_e)
            .max(self.phi_i)
            .max(self.e_e)
            .max(self.e_i)
    }
}

/// Residuals of the five round-bracket conditions mapping `h_ab dE^a dI^b`.
///
/// `h` returns the `n × n` block at each point.
pub fn verify_metric_conditions<M, H>(
    map: &M,
    f: &Expression,
    h: H,
    points: &[PhasePoint],
) -> Result<MetricConditionReport>
where
    M: PhaseMap,
    H: Fn(&PhasePoint) -> Result<DMatrix<f64>>,
{
    let n = map.n();
    let mut report = MetricConditionReport::default();
    for point in points {
        let br = Brackets::at(map, point)?;
        let fv = eval_factor(f, n, point)?;
        let hm = h(point)?;
        if hm.shape() != (n, n) {
            return Err(Error::InvalidArgument(format!("h block must be {n}×{n}")));
        }
        report.phi_phi = report.phi_phi.max(br.round(0, 0).abs());
        for b in 0..n {
            report.phi_e = report.phi_e.max(br.round(0, e_index(b)).abs());
            report.phi_i = report.phi_i.max(br.round(0, i_index(n, b)).abs());
            for c in 0..n {
                report.e_e = report.e_e.max(br.round(e_index(b), e_index(c)).abs());
                let target = 0.5 * hm[(b, c)] - delta(b, c) / fv;
                let r = br.round(e_index(b), i_index(n, c)) - target;
                report.e_i = report.e_i.max(r.abs());
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(phi: f64, e: &[f64], i: &[f64]) -> PhasePoint {
        PhasePoint::new(phi, e.to_vec(), i.to_vec()).unwrap()
    }

    #[test]
    fn total_legendre_example() {
        let spec = LegendreSpec::total(2);
        let out = spec.apply(&p(5.0, &[1.0, 2.0], &[3.0, 4.0])).unwrap();
        assert_eq!(out, p(-6.0, &[3.0, 4.0], &[-1.0, -2.0]));
        // back-substitution Phi = Phi~ - E~ I~
        assert_eq!(out.phi - (3.0 * -1.0 + 4.0 * -2.0), 5.0);
    }

    #[test]
    fn identity_spec_is_identity() {
        let q = p(0.3, &[1.0, -2.0], &[0.5, 7.0]);
        assert_eq!(LegendreSpec::identity(2).apply(&q).unwrap(), q);
        assert_eq!(LegendreSpec::new(2, &[]).unwrap(), LegendreSpec::identity(2));
    }

    #[test]
    fn four_total_transforms_are_identity() {
        let spec = LegendreSpec::total(3);
        let q = p(1.5, &[0.2, -1.0, 3.0], &[2.0, 0.7, -0.4]);
        let twice = spec.apply(&spec.apply(&q).unwrap()).unwrap();
        assert_eq!(twice.e, vec![-0.2, 1.0, -3.0]);
        assert_eq!(twice.i, vec![-2.0, -0.7, 0.4]);
        assert_eq!(twice.phi, q.phi);
        let four = spec.apply(&spec.apply(&twice).unwrap()).unwrap();
        assert_eq!(four, q);
    }

    #[test]
    fn spec_validation() {
        assert!(LegendreSpec::new(2, &[2]).is_err());
        assert!(LegendreSpec::new(2, &[0, 0]).is_err());
        assert_eq!(LegendreSpec::all(2).len(), 4);
        assert!(LegendreSpec::all(2)[3].is_total());
    }

    #[test]
    fn contact_form_components() {
        assert_eq!(contact_form(&p(0.0, &[1.0], &[3.0])).components, vec![1.0, -3.0, 0.0]);
    }

    #[test]
    fn contact_volume_is_unit() {
        for n in 1..=3 {
            let q = p(0.4, &vec![1.3; n], &vec![-2.0; n]);
            assert_eq!(contact_volume(&q).unwrap().abs(), 1.0);
        }
        assert!(contact_volume(&p(0.0, &[1.0; 4], &[1.0; 4])).is_err());
    }

    #[test]
    fn brackets_of_identity() {
        let id = CoordinateMap::identity(1);
        let q = p(0.0, &[2.0], &[3.0]);
        assert_eq!(curly_bracket(&id, &q, e_index(0), i_index(1, 0)).unwrap(), 1.0);
        assert_eq!(curly_bracket(&id, &q, 0, e_index(0)).unwrap(), 0.0);
        assert_eq!(curly_bracket(&id, &q, i_index(1, 0), e_index(0)).unwrap(), -1.0);
    }

    #[test]
    fn squared_map_brackets() {
        let m = CoordinateMap::parse(1, &["Phi", "E1^2/2", "I1^2/2"]).unwrap();
        let q = p(0.0, &[2.0], &[3.0]);
        assert_eq!(curly_bracket(&m, &q, 1, 2).unwrap(), 6.0);
        assert_eq!(round_bracket(&m, &q, 1, 2).unwrap(), 6.0);
        assert_eq!(round_bracket(&m, &q, 2, 1).unwrap(), 0.0);
    }

    #[test]
    fn linear_scaling_transforms_metric() {
        // X = 2E: dX^2 pulls back to 4 dE^2
        let m = CoordinateMap::parse(1, &["Phi", "2*E1", "I1"]).unwrap();
        let q = p(0.0, &[1.0], &[1.0]);
        let mut g = DMatrix::zeros(3, 3);
        g[(1, 1)] = 1.0;
        let pulled = transform_metric(&m, &q, &g).unwrap();
        assert_eq!(pulled[(1, 1)], 4.0);
        let id = CoordinateMap::identity(1);
        let g = DMatrix::from_fn(3, 3, |r, c| (r + c) as f64);
        assert_eq!(transform_metric(&id, &q, &g).unwrap(), g);
    }

    #[test]
    fn singular_jacobian_is_rejected() {
        let m = CoordinateMap::parse(1, &["Phi", "E1", "E1"]).unwrap();
        let q = p(0.0, &[1.0], &[1.0]);
        let theta = contact_form(&q);
        assert!(matches!(
            transform_form(&m, &q, &theta),
            Err(Error::SingularJacobian { .. })
        ));
    }

    #[test]
    fn contact_form_is_legendre_invariant() {
        let q = p(0.7, &[1.2, -0.3], &[0.4, 2.2]);
        for spec in LegendreSpec::all(2) {
            let target = contact_form(&spec.apply(&q).unwrap());
            let pulled = transform_form(&spec, &q, &target).unwrap();
            assert!(pulled.max_abs_diff(&contact_form(&q)) < 1e-14);
        }
    }

    #[test]
    fn integrability_of_identity() {
        let id = CoordinateMap::identity(2);
        let pts = vec![p(0.1, &[1.0, 2.0], &[0.5, 0.25])];
        let r = verify_integrability(&id, &Expression::constant(1.0), &pts).unwrap();
        assert_eq!(r.max(), 0.0);
    }

    #[test]
    fn metric_conditions_of_identity() {
        let id = CoordinateMap::identity(1);
        let pts = vec![p(0.1, &[1.0], &[0.5])];
        let one = Expression::constant(1.0);
        // (X, Y)_{E I} = 1 against h/2 - 1
        let r = verify_metric_conditions(&id, &one, |_| Ok(DMatrix::from_element(1, 1, 2.0)), &pts)
            .unwrap();
        assert_eq!(r.e_i, 1.0);
        assert_eq!(r.phi_phi + r.phi_e + r.phi_i + r.e_e, 0.0);
        let r = verify_metric_conditions(&id, &one, |_| Ok(DMatrix::from_element(1, 1, 1.0)), &pts)
            .unwrap();
        assert_eq!(r.e_i, 1.5);
    }

    #[test]
    fn coordinate_map_rejects_unknown_names() {
        assert!(matches!(
            CoordinateMap::parse(1, &["Phi", "E2", "I1"]),
            Err(Error::UnboundVariable(_))
        ));
        assert!(CoordinateMap::parse(1, &["Phi", "E1"]).is_err());
    }
}
