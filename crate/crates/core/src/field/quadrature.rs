//! Product Gauss rules on the unit sphere and ball.
//!
//! Sphere rules are built in angular coordinates:
//!
//! * n = 1: the two points ±1 with unit weight (counting measure on `∂B_1`);
//! * n = 2: Gauss–Legendre panels in the angle, split at multiples of π/2;
//! * n = 3: Gauss–Legendre in `z = cos ϑ` on `[-1,0]` and `[0,1]` times
//!   Gauss–Legendre panels in the azimuth, split at multiples of π/2.
//!
//! Panel breaks sit on the coordinate hyperplanes, so integrands with a kink
//! across `{x_n = 0}` (such as `|x_n|`) are integrated to full accuracy.
//! Ball rules combine a radial Gauss rule carrying the `ρ^{n-1}` weight with
//! the sphere rule.

use std::f64::consts::PI;

use super::scalar::Evaluable;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadratureKind {
    Sphere,
    Ball,
}

#[derive(Clone, Debug)]
pub struct QuadratureRule {
    kind: QuadratureKind,
    dim: usize,
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Surface measure of the unit sphere `∂B_1 ⊂ R^n`.
pub fn unit_sphere_area(dim: usize) -> f64 {
    match dim {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (dim as f64 - 2.0) * unit_sphere_area(dim - 2),
    }
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    unit_sphere_area(dim) / dim as f64
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(count: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; count];
    let mut weights = vec![0.0; count];
    let n = count as f64;
    for i in 0..count.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=count {
                let j = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            dp = n * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() <= 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[count - 1 - i] = z;
        weights[i] = w;
        weights[count - 1 - i] = w;
    }
    if count % 2 == 1 {
        nodes[count / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
fn gauss_on(a: f64, b: f64, count: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(count);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter()
        .zip(&w)
        .map(|(xi, wi)| (mid + half * xi, half * wi))
        .collect()
}

/// Points per angular panel for a trigonometric integrand of degree `order`.
fn angular_panel_points(order: usize) -> usize {
    order / 2 + 12
}

impl QuadratureRule {
    /// Rule on `∂B_1` exact for polynomials of total degree `≤ order`.
    pub fn sphere(dim: usize, order: usize) -> Result<Self> {
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        match dim {
            1 => {
                nodes.extend([-1.0, 1.0]);
                weights.extend([1.0, 1.0]);
            }
            2 => {
                let k = angular_panel_points(order);
                for panel in 0..4 {
                    let a = panel as f64 * PI / 2.0;
                    for (t, w) in gauss_on(a, a + PI / 2.0, k) {
                        nodes.extend([t.cos(), t.sin()]);
                        weights.push(w);
                    }
                }
            }
            3 => {
                let kz = order / 2 + 1;
                let kphi = angular_panel_points(order);
                let mut zs = gauss_on(-1.0, 0.0, kz);
                zs.extend(gauss_on(0.0, 1.0, kz));
                let mut phis = Vec::new();
                for panel in 0..4 {
                    let a = panel as f64 * PI / 2.0;
                    phis.extend(gauss_on(a, a + PI / 2.0, kphi));
                }
                for &(z, wz) in &zs {
                    let s = (1.0 - z * z).max(0.0).sqrt();
                    for &(phi, wphi) in &phis {
                        nodes.extend([s * phi.cos(), s * phi.sin(), z]);
                        weights.push(wz * wphi);
                    }
                }
            }
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "sphere quadrature available for n in 1..=3, got {dim}"
                )))
            }
        }
        Ok(QuadratureRule {
            kind: QuadratureKind::Sphere,
            dim,
            order,
            nodes,
            weights,
        })
    }

    /// Rule on `B_1` exact for polynomials of total degree `≤ order`.
    pub fn ball(dim: usize, order: usize) -> Result<Self> {
        let sphere = QuadratureRule::sphere(dim, order)?;
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        if dim == 1 {
            for (x, w) in gauss_on(-1.0, 1.0, order / 2 + 1) {
                nodes.push(x);
                weights.push(w);
            }
        } else {
            // ∫_0^1 ρ^{n-1+k} dρ needs 2m-1 ≥ n-1+order
            let m = (order + dim) / 2 + 1;
            for (rho, wr) in gauss_on(0.0, 1.0, m) {
                let radial = wr * rho.powi(dim as i32 - 1);
                for i in 0..sphere.len() {
                    nodes.extend(sphere.node(i).iter().map(|c| rho * c));
                    weights.push(radial * sphere.weights[i]);
                }
            }
        }
        Ok(QuadratureRule {
            kind: QuadratureKind::Ball,
            dim,
            order,
            nodes,
            weights,
        })
    }

    pub fn kind(&self) -> QuadratureKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ w_i f(center + r·node_i)` for a plain closure, with no domain check.
    pub fn apply(&self, center: &[f64], r: f64, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        let mut x = vec![0.0; self.dim];
        let mut acc = 0.0;
        for i in 0..self.len() {
            for (k, slot) in x.iter_mut().enumerate() {
                *slot = center[k] + r * self.nodes[i * self.dim + k];
            }
            acc += self.weights[i] * f(&x);
        }
        acc
    }
}

fn check_rule(
    rule: &QuadratureRule,
    kind: QuadratureKind,
    f_dim: usize,
    center: &[f64],
) -> Result<()> {
    if rule.kind != kind {
        return Err(Error::InvalidArgument(format!(
            "expected a {kind:?} rule, got {:?}",
            rule.kind
        )));
    }
    if rule.dim != f_dim || center.len() != f_dim {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch: rule {}, function {}, center {}",
            rule.dim,
            f_dim,
            center.len()
        )));
    }
    Ok(())
}

/// `∫_{∂B_r(center)} f`.
pub fn sphere_integral<E: Evaluable + ?Sized>(
    f: &E,
    center: &[f64],
    r: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    check_rule(rule, QuadratureKind::Sphere, f.dim(), center)?;
    f.check_ball(center, r)?;
    let scale = r.powi(f.dim() as i32 - 1);
    Ok(scale * rule.apply(center, r, |x| f.value(x)))
}

/// `∫_{B_r(center)} f`.
pub fn ball_integral<E: Evaluable + ?Sized>(
    f: &E,
    center: &[f64],
    r: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    check_rule(rule, QuadratureKind::Ball, f.dim(), center)?;
    f.check_ball(center, r)?;
    let scale = r.powi(f.dim() as i32);
    Ok(scale * rule.apply(center, r, |x| f.value(x)))
}
