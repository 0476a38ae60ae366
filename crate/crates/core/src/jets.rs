//! Truncated multivariate Taylor arithmetic ("jets").
//!
//! A [`Jet`] stores the Taylor coefficients of a function of `nvars` variables
//! around a point, for every multi-index of total degree up to `order`.
//! Arithmetic on jets is exact to the stored order, so evaluating a formula on
//! seeded jets yields all of its partial derivatives in a single pass.
//!
//! Coefficients are stored densely. Multi-indices are ordered by total degree,
//! which lets division be solved by forward substitution.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Largest supported total order.
pub const MAX_ORDER: usize = 4;

pub(crate) struct Layout {
    nvars: usize,
    order: usize,
    indices: Vec<Vec<u8>>,
    lookup: HashMap<Vec<u8>, usize>,
    /// `products[k]` lists every `(i, j)` with `indices[i] + indices[j] == indices[k]`.
    products: Vec<Vec<(u32, u32)>>,
}

impl Layout {
    fn build(nvars: usize, order: usize) -> Layout {
        let mut indices = Vec::new();
        for degree in 0..=order {
            let mut current = vec![0u8; nvars];
            push_compositions(degree, 0, &mut current, &mut indices);
        }
        let degrees: Vec<usize> = indices
            .iter()
            .map(|m| m.iter().map(|&x| x as usize).sum())
            .collect();
        let lookup: HashMap<Vec<u8>, usize> = indices
            .iter()
            .enumerate()
            .map(|(pos, m)| (m.clone(), pos))
            .collect();
        let mut products = vec![Vec::new(); indices.len()];
        let mut sum = vec![0u8; nvars];
        for (i, a) in indices.iter().enumerate() {
            for (j, b) in indices.iter().enumerate() {
                if degrees[i] + degrees[j] > order {
                    continue;
                }
                for v in 0..nvars {
                    sum[v] = a[v] + b[v];
                }
                let k = lookup[&sum];
                products[k].push((i as u32, j as u32));
            }
        }
        Layout {
            nvars,
            order,
            indices,
            lookup,
            products,
        }
    }

    fn len(&self) -> usize {
        self.indices.len()
    }
}

fn push_compositions(remaining: usize, var: usize, current: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    let nvars = current.len();
    if nvars == 0 {
        if remaining == 0 {
            out.push(Vec::new());
        }
        return;
    }
    if var == nvars - 1 {
        current[var] = remaining as u8;
        out.push(current.clone());
        current[var] = 0;
        return;
    }
    for take in (0..=remaining).rev() {
        current[var] = take as u8;
        push_compositions(remaining - take, var + 1, current, out);
    }
    current[var] = 0;
}

fn layout(nvars: usize, order: usize) -> Arc<Layout> {
    if nvars == 0 {
        static SCALAR: OnceLock<Arc<Layout>> = OnceLock::new();
        return SCALAR.get_or_init(|| Arc::new(Layout::build(0, 0))).clone();
    }
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Layout>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|poisoned| poisoned.into_inner());
    guard
        .entry((nvars, order))
        .or_insert_with(|| Arc::new(Layout::build(nvars, order)))
        .clone()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// A truncated multivariate Taylor expansion.
///
/// A jet with zero variables and order zero is a plain scalar; it combines
/// with any other jet by broadcasting.
#[derive(Clone)]
pub struct Jet {
    layout: Arc<Layout>,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("nvars", &self.nvars())
            .field("order", &self.order())
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.nvars() == other.nvars() && self.order() == other.order() && self.coeffs == other.coeffs
    }
}

/// One seed jet per coordinate of `point`, each centred at that point.
pub fn seed(point: &[f64], order: usize) -> Result<Vec<Jet>> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(Error::InvalidArgument(format!(
            "jet order must be in 1..={MAX_ORDER}, got {order}"
        )));
    }
    let n = point.len();
    Ok(point
        .iter()
        .enumerate()
        .map(|(var, &x)| Jet::variable(n, order, var, x))
        .collect())
}

impl Jet {
    pub fn constant(nvars: usize, order: usize, value: f64) -> Jet {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let layout = layout(nvars, order);
        let mut coeffs = vec![0.0; layout.len()];
        coeffs[0] = value;
        Jet { layout, coeffs }
    }

    /// Plain scalar (no variables, order zero).
    pub fn scalar(value: f64) -> Jet {
        Jet::constant(0, 0, value)
    }

    /// Seed jet for coordinate `var`: value `value`, unit first derivative
    /// along `var`, zero elsewhere.
    pub fn variable(nvars: usize, order: usize, var: usize, value: f64) -> Jet {
        assert!(var < nvars, "variable {var} out of range for {nvars} variables");
        let mut jet = Jet::constant(nvars, order, value);
        if order >= 1 {
            let mut index = vec![0u8; nvars];
            index[var] = 1;
            let pos = jet.layout.lookup[&index];
            jet.coeffs[pos] = 1.0;
        }
        jet
    }

    pub fn nvars(&self) -> usize {
        self.layout.nvars
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn is_scalar(&self) -> bool {
        self.layout.nvars == 0 && self.layout.order == 0
    }

    /// Raw Taylor coefficient at a multi-index (zero above the stored order).
    pub fn coefficient(&self, index: &[usize]) -> Result<f64> {
        let key = self.key(index)?;
        Ok(self.coeffs[self.layout.lookup[&key]])
    }

    /// Partial derivative for a multi-index given as per-variable counts,
    /// e.g. `[2, 1]` is d^3/dx0^2 dx1.
    pub fn partial(&self, index: &[usize]) -> Result<f64> {
        let coeff = self.coefficient(index)?;
        Ok(coeff * index.iter().map(|&k| factorial(k)).product::<f64>())
    }

    /// Partial derivative along a list of variables, e.g. `[0, 0, 1]`.
    pub fn partial_along(&self, vars: &[usize]) -> Result<f64> {
        let mut index = vec![0usize; self.nvars()];
        for &v in vars {
            if v >= self.nvars() {
                return Err(Error::InvalidArgument(format!(
                    "variable {v} out of range for {} variables",
                    self.nvars()
                )));
            }
            index[v] += 1;
        }
        self.partial(&index)
    }

    fn key(&self, index: &[usize]) -> Result<Vec<u8>> {
        if index.len() != self.nvars() {
            return Err(Error::InvalidArgument(format!(
                "multi-index has {} entries, jet has {} variables",
                index.len(),
                self.nvars()
            )));
        }
        let degree: usize = index.iter().sum();
        if degree > self.order() {
            return Err(Error::InvalidArgument(format!(
                "multi-index degree {degree} exceeds jet order {}",
                self.order()
            )));
        }
        Ok(index.iter().map(|&k| k as u8).collect())
    }

    /// First derivative along `var` as a jet of one lower order.
    ///
    /// Panics on an order-zero jet.
    pub fn derivative(&self, var: usize) -> Jet {
        assert!(self.order() >= 1, "cannot differentiate an order-0 jet");
        assert!(var < self.nvars(), "variable {var} out of range");
        let target = layout(self.nvars(), self.order() - 1);
        let mut coeffs = vec![0.0; target.len()];
        let mut shifted = vec![0u8; self.nvars()];
        for (pos, index) in target.indices.iter().enumerate() {
            shifted.copy_from_slice(index);
            shifted[var] += 1;
            let src = self.layout.lookup[&shifted];
            coeffs[pos] = self.coeffs[src] * shifted[var] as f64;
        }
        Jet {
            layout: target,
            coeffs,
        }
    }

    /// Drops every coefficient above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        assert!(order <= self.order(), "cannot raise jet order by truncation");
        if order == self.order() {
            return self.clone();
        }
        let target = layout(self.nvars(), order);
        // Low-degree indices come first in both layouts.
        let coeffs = self.coeffs[..target.len()].to_vec();
        debug_assert!(target
            .indices
            .iter()
            .zip(&self.layout.indices)
            .all(|(a, b)| a == b));
        Jet {
            layout: target,
            coeffs,
        }
    }

    fn check_compatible(&self, other: &Jet) {
        assert!(
            self.nvars() == other.nvars() && self.order() == other.order(),
            "jet shape mismatch: ({}, {}) vs ({}, {})",
            self.nvars(),
            self.order(),
            other.nvars(),
            other.order()
        );
    }

    fn map_coeffs(&self, f: impl Fn(f64) -> f64) -> Jet {
        Jet {
            layout: self.layout.clone(),
            coeffs: self.coeffs.iter().map(|&c| f(c)).collect(),
        }
    }

    fn zip_coeffs(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        if other.is_scalar() {
            let mut out = self.clone();
            out.coeffs[0] = f(self.coeffs[0], other.coeffs[0]);
            for c in out.coeffs.iter_mut().skip(1) {
                *c = f(*c, 0.0);
            }
            return out;
        }
        if self.is_scalar() {
            let mut out = other.clone();
            out.coeffs[0] = f(self.coeffs[0], other.coeffs[0]);
            for c in out.coeffs.iter_mut().skip(1) {
                *c = f(0.0, *c);
            }
            return out;
        }
        self.check_compatible(other);
        Jet {
            layout: self.layout.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, factor: f64) -> Jet {
        self.map_coeffs(|c| c * factor)
    }

    fn multiply(&self, other: &Jet) -> Jet {
        if other.is_scalar() {
            return self.scale(other.value());
        }
        if self.is_scalar() {
            return other.scale(self.value());
        }
        self.check_compatible(other);
        let coeffs = self
            .layout
            .products
            .iter()
            .map(|pairs| {
                pairs
                    .iter()
                    .map(|&(i, j)| self.coeffs[i as usize] * other.coeffs[j as usize])
                    .sum()
            })
            .collect();
        Jet {
            layout: self.layout.clone(),
            coeffs,
        }
    }

    /// Quotient by forward substitution on `q * d = n`.
    pub fn divide(&self, other: &Jet) -> Result<Jet> {
        let d0 = other.value();
        if d0 == 0.0 {
            return Err(Error::DivisionByZero);
        }
        if other.is_scalar() {
            return Ok(self.map_coeffs(|c| c / d0));
        }
        let numerator = if self.is_scalar() {
            Jet::constant(other.nvars(), other.order(), self.value())
        } else {
            self.check_compatible(other);
            self.clone()
        };
        let layout = other.layout.clone();
        let mut q = vec![0.0; layout.len()];
        for k in 0..layout.len() {
            let mut acc = numerator.coeffs[k];
            for &(i, j) in &layout.products[k] {
                if j != 0 {
                    acc -= q[i as usize] * other.coeffs[j as usize];
                }
            }
            q[k] = acc / d0;
        }
        Ok(Jet { layout, coeffs: q })
    }

    /// Composes a univariate function given its derivatives at the value
    /// component, `derivs[k] = f^(k)(value)`.
    fn compose(&self, derivs: &[f64]) -> Jet {
        let order = self.order();
        debug_assert!(derivs.len() > order);
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut result = Jet::constant(self.nvars(), order, derivs[order] / factorial(order));
        for k in (0..order).rev() {
            result = result.multiply(&h);
            result.coeffs[0] += derivs[k] / factorial(k);
        }
        result
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&vec![e; self.order() + 1])
    }

    pub fn ln(&self) -> Result<Jet> {
        let a = self.value();
        if !(a > 0.0) {
            return Err(Error::Domain(format!("ln of non-positive value {a}")));
        }
        let mut derivs = vec![a.ln()];
        for k in 1..=self.order() {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            derivs.push(sign * factorial(k - 1) / a.powi(k as i32));
        }
        Ok(self.compose(&derivs))
    }

    pub fn sqrt(&self) -> Result<Jet> {
        let a = self.value();
        if !(a > 0.0) {
            return Err(Error::Domain(format!("sqrt of non-positive value {a}")));
        }
        self.power_series(0.5, a.sqrt())
    }

    /// Real power, defined for a positive base only.
    pub fn powf(&self, p: f64) -> Result<Jet> {
        let a = self.value();
        if !(a > 0.0) {
            return Err(Error::Domain(format!(
                "non-integer power {p} of non-positive value {a}"
            )));
        }
        self.power_series(p, a.powf(p))
    }

    fn power_series(&self, p: f64, value: f64) -> Result<Jet> {
        let a = self.value();
        let mut derivs = vec![value];
        let mut falling = 1.0;
        for k in 1..=self.order() {
            falling *= p - (k as f64 - 1.0);
            derivs.push(falling * a.powf(p - k as f64));
        }
        Ok(self.compose(&derivs))
    }

    /// Integer power by repeated truncated multiplication; any base is legal
    /// for non-negative exponents.
    pub fn powi(&self, n: i32) -> Result<Jet> {
        let mut result = if self.is_scalar() {
            Jet::scalar(1.0)
        } else {
            Jet::constant(self.nvars(), self.order(), 1.0)
        };
        for _ in 0..n.unsigned_abs() {
            result = result.multiply(self);
        }
        if n < 0 {
            let one = Jet::constant(result.nvars(), result.order(), 1.0);
            return one.divide(&result);
        }
        Ok(result)
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let derivs: Vec<f64> = (0..=self.order()).map(|k| cycle[k % 4]).collect();
        self.compose(&derivs)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        let derivs: Vec<f64> = (0..=self.order()).map(|k| cycle[k % 4]).collect();
        self.compose(&derivs)
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.zip_coeffs(rhs, |a, b| a + b)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.zip_coeffs(rhs, |a, b| a - b)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.multiply(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.map_coeffs(|c| -c)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        &self + &rhs
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        &self - &rhs
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        &self * &rhs
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -&self
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

/// Numeric ring the expression evaluator runs over: plain reals or jets.
///
/// Fallible operations report domain violations instead of producing NaN.
pub trait Ring: Clone + fmt::Debug + Send + Sync {
    fn from_f64(c: f64) -> Self;
    fn value(&self) -> f64;
    fn plus(&self, rhs: &Self) -> Self;
    fn minus(&self, rhs: &Self) -> Self;
    fn times(&self, rhs: &Self) -> Self;
    fn negate(&self) -> Self;
    fn divide(&self, rhs: &Self) -> Result<Self>;
    fn ln(&self) -> Result<Self>;
    fn exp(&self) -> Self;
    fn sqrt(&self) -> Result<Self>;
    fn powi(&self, n: i32) -> Result<Self>;
    fn powf(&self, p: f64) -> Result<Self>;
}

impl Ring for f64 {
    fn from_f64(c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn plus(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn minus(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn times(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn negate(&self) -> Self {
        -self
    }
    fn divide(&self, rhs: &Self) -> Result<Self> {
        if *rhs == 0.0 {
            return Err(Error::DivisionByZero);
        }
        Ok(self / rhs)
    }
    fn ln(&self) -> Result<Self> {
        if !(*self > 0.0) {
            return Err(Error::Domain(format!("ln of non-positive value {self}")));
        }
        Ok(f64::ln(*self))
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn sqrt(&self) -> Result<Self> {
        if !(*self > 0.0) {
            return Err(Error::Domain(format!("sqrt of non-positive value {self}")));
        }
        Ok(f64::sqrt(*self))
    }
    fn powi(&self, n: i32) -> Result<Self> {
        // Same multiplication order as the jet path so value components agree bitwise.
        let mut result = 1.0;
        for _ in 0..n.unsigned_abs() {
            result *= self;
        }
        if n < 0 {
            return 1.0.divide(&result);
        }
        Ok(result)
    }
    fn powf(&self, p: f64) -> Result<Self> {
        if !(*self > 0.0) {
            return Err(Error::Domain(format!(
                "non-integer power {p} of non-positive value {self}"
            )));
        }
        Ok(f64::powf(*self, p))
    }
}

impl Ring for Jet {
    fn from_f64(c: f64) -> Self {
        Jet::scalar(c)
    }
    fn value(&self) -> f64 {
        self.coeffs[0]
    }
    fn plus(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn minus(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn times(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn negate(&self) -> Self {
        -self
    }
    fn divide(&self, rhs: &Self) -> Result<Self> {
        Jet::divide(self, rhs)
    }
    fn ln(&self) -> Result<Self> {
        Jet::ln(self)
    }
    fn exp(&self) -> Self {
        Jet::exp(self)
    }
    fn sqrt(&self) -> Result<Self> {
        Jet::sqrt(self)
    }
    fn powi(&self, n: i32) -> Result<Self> {
        Jet::powi(self, n)
    }
    fn powf(&self, p: f64) -> Result<Self> {
        Jet::powf(self, p)
    }
}
