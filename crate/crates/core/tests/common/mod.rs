//! Oracles shared by the integration tests. None of them go through the
//! jet engine for derivatives.
#![allow(dead_code)]

use gtd_core::jets::Jet;
use gtd_core::manifold::{FnMetric, MetricField, MetricSample};
use gtd_core::phase::PhasePoint;
use gtd_core::Result;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_phase_points(seed: u64, n: usize, count: usize, lo: f64, hi: f64) -> Vec<PhasePoint> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let phi = r.random_range(lo..hi);
            let e = (0..n).map(|_| r.random_range(lo..hi)).collect();
            let i = (0..n).map(|_| r.random_range(lo..hi)).collect();
            PhasePoint::new(phi, e, i).unwrap()
        })
        .collect()
}

/// Metric values at a point, with no derivative information.
pub fn metric_values(metric: &dyn MetricField, x: &[f64]) -> DMatrix<f64> {
    let n = metric.dim();
    let jets = metric.component_jets(x).unwrap();
    DMatrix::from_fn(n, n, |a, b| jets[a * n + b].value())
}

/// Central finite differences of the metric components with step `h`.
pub fn finite_difference_sample(metric: &dyn MetricField, x: &[f64], h: f64) -> MetricSample {
    let n = metric.dim();
    let at = |shifts: &[(usize, f64)]| {
        let mut p = x.to_vec();
        for &(c, s) in shifts {
            p[c] += s;
        }
        metric_values(metric, &p)
    };
    let g = at(&[]);
    let dg = (0..n)
        .map(|c| (at(&[(c, h)]) - at(&[(c, -h)])) / (2.0 * h))
        .collect();
    let mut ddg = Vec::with_capacity(n * n);
    for c in 0..n {
        for d in 0..n {
            let m = if c == d {
                (at(&[(c, h)]) - &g * 2.0 + at(&[(c, -h)])) / (h * h)
            } else {
                (at(&[(c, h), (d, h)]) - at(&[(c, h), (d, -h)]) - at(&[(c, -h), (d, h)])
                    + at(&[(c, -h), (d, -h)]))
                    / (4.0 * h * h)
            };
            ddg.push(m);
        }
    }
    MetricSample { g, dg, ddg }
}

/// Unit 2-sphere in `(theta, phi)`.
pub fn sphere() -> FnMetric<impl Fn(&[Jet]) -> Result<Vec<Jet>> + Sync> {
    FnMetric::new(2, |x: &[Jet]| {
        let s = x[0].sin();
        Ok(vec![Jet::scalar(1.0), Jet::scalar(0.0), Jet::scalar(0.0), &s * &s])
    })
}

/// Euclidean 4-space pulled back through a nonlinear chart, so the
/// components vary but the curvature is zero.
pub fn curvilinear_flat4() -> FnMetric<impl Fn(&[Jet]) -> Result<Vec<Jet>> + Sync> {
    FnMetric::new(4, |x: &[Jet]| {
        // y = (x0, x1 + x0^2, x2 * exp(x3 / 4), x3 + sin(x1))
        let zero = Jet::scalar(0.0);
        let one = Jet::scalar(1.0);
        let e = x[3].scale(0.25).exp();
        let j: [[Jet; 4]; 4] = [
            [one.clone(), zero.clone(), zero.clone(), zero.clone()],
            [x[0].scale(2.0), one.clone(), zero.clone(), zero.clone()],
            [zero.clone(), zero.clone(), e.clone(), (&x[2] * &e).scale(0.25)],
            [zero.clone(), x[1].cos(), zero.clone(), one.clone()],
        ];
        let mut g = Vec::with_capacity(16);
        for a in 0..4 {
            for b in 0..4 {
                let mut acc = Jet::scalar(0.0);
                for r in 0..4 {
                    acc = &acc + &(&j[r][a] * &j[r][b]);
                }
                g.push(acc);
            }
        }
        Ok(g)
    })
}

/// A generic 3-metric with nonzero curvature.
pub fn warped3() -> FnMetric<impl Fn(&[Jet]) -> Result<Vec<Jet>> + Sync> {
    FnMetric::new(3, |x: &[Jet]| Ok(warped3_components(x)))
}

pub fn warped3_components(x: &[Jet]) -> Vec<Jet> {
    let zero = Jet::scalar(0.0);
    let g00 = Jet::scalar(1.0) + (&x[1] * &x[1]).scale(0.5);
    let g11 = x[0].scale(0.3).exp();
    let g22 = Jet::scalar(2.0) + (&x[0] * &x[1]).sin().scale(0.4);
    let g01 = x[2].scale(0.2);
    vec![
        g00,
        g01.clone(),
        zero.clone(),
        g01,
        g11,
        zero.clone(),
        zero.clone(),
        zero,
        g22,
    ]
}

/// Reduced van der Waals entropy `S = 3/2 ln(U + 3/V) + ln(V - 1)`:
/// `det Hess S = 3 (U V^3 - 6 V^2 + 18 V - 9) / (2 (V - 1)^2 (U V + 3)^3)`.
pub fn vdw_hessian_det(u: f64, v: f64) -> f64 {
    3.0 * (u * v.powi(3) - 6.0 * v * v + 18.0 * v - 9.0)
        / (2.0 * (v - 1.0).powi(2) * (u * v + 3.0).powi(3))
}

/// Points on `det Hess S = 0` inside the box, found by bisection in `V`
/// along `samples` lines of constant `U`.
pub fn vdw_spinodal(u_range: (f64, f64), v_range: (f64, f64), samples: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let fine = 4000;
    for s in 0..samples {
        let u = u_range.0 + (u_range.1 - u_range.0) * s as f64 / (samples - 1) as f64;
        let f = |v: f64| vdw_hessian_det(u, v);
        let mut v0 = v_range.0;
        let mut f0 = f(v0);
        for j in 1..=fine {
            let v1 = v_range.0 + (v_range.1 - v_range.0) * j as f64 / fine as f64;
            let f1 = f(v1);
            if f0 == 0.0 {
                out.push((u, v0));
            } else if f0 * f1 < 0.0 {
                let (mut a, mut b) = (v0, v1);
                for _ in 0..80 {
                    let m = 0.5 * (a + b);
                    if f(a) * f(m) <= 0.0 {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                out.push((u, 0.5 * (a + b)));
            }
            v0 = v1;
            f0 = f1;
        }
    }
    out
}

pub fn distance_to(points: &[(f64, f64)], u: f64, v: f64) -> f64 {
    points
        .iter()
        .map(|(a, b)| ((a - u).powi(2) + (b - v).powi(2)).sqrt())
        .fold(f64::INFINITY, f64::min)
}

/// Independent assembly of `Theta^2 + h_ab dE^a dI^b` for diagonal `h`.
pub fn phase_metric_oracle(p: &PhasePoint, h_diag: &[f64]) -> DMatrix<f64> {
    let n = p.n();
    let dim = 2 * n + 1;
    let mut theta = vec![0.0; dim];
    theta[0] = 1.0;
    for a in 0..n {
        theta[1 + a] = -p.i[a];
    }
    let mut g = DMatrix::from_fn(dim, dim, |r, c| theta[r] * theta[c]);
    for a in 0..n {
        g[(1 + a, 1 + n + a)] += 0.5 * h_diag[a];
        g[(1 + n + a, 1 + a)] += 0.5 * h_diag[a];
    }
    g
}

/// Jacobian of the Legendre map written out by hand.
pub fn legendre_jacobian_oracle(p: &PhasePoint, indices: &[usize]) -> DMatrix<f64> {
    let n = p.n();
    let dim = 2 * n + 1;
    let mut j = DMatrix::identity(dim, dim);
    for &a in indices {
        let (e, i) = (1 + a, 1 + n + a);
        j[(e, e)] = 0.0;
        j[(e, i)] = 1.0;
        j[(i, i)] = 0.0;
        j[(i, e)] = -1.0;
        // Phi~ = Phi - sum E^a I^a
        j[(0, e)] = -p.i[a];
        j[(0, i)] = -p.e[a];
    }
    j
}

pub fn legendre_oracle(p: &PhasePoint, indices: &[usize]) -> PhasePoint {
    let mut q = p.clone();
    for &a in indices {
        q.phi -= p.e[a] * p.i[a];
        q.e[a] = p.i[a];
        q.i[a] = -p.e[a];
    }
    q
}
