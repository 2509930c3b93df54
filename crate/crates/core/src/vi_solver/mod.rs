//! Obstacle problem `min(−Δ_h u + 1, u) = 0` by projected SOR, monotone
//! families, quasi-static Hele-Shaw flow, and discrete free boundaries.

mod free_boundary;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Grid, ScalarField};

pub use free_boundary::{free_boundary, FreeBoundary};

/// Solver knobs. `None` fields take grid-dependent defaults.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    /// Stop when the largest nodal update is below this; default `1e−10·h²`,
    /// raised to a roundoff floor for large data.
    pub tol: Option<f64>,
    pub max_iter: usize,
    /// Relaxation in `(1, 2)`; default `2/(1 + sin(πh/L))`.
    pub omega: Option<f64>,
    /// Contact when `u ≤ contact_scale·max(1, max u)`.
    pub contact_scale: f64,
    /// Warm start from a chain of coarser solves when no initial guess is given.
    pub coarse_start: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            tol: None,
            max_iter: 100_000,
            omega: None,
            contact_scale: 1e-12,
            coarse_start: true,
        }
    }
}

impl SolverParams {
    pub fn tolerance(&self, grid: &Grid) -> f64 {
        self.tol.unwrap_or_else(|| {
            let h = grid.max_spacing();
            1e-10 * h * h
        })
    }

    pub fn relaxation(&self, grid: &Grid) -> f64 {
        self.omega.unwrap_or_else(|| {
            let (mut ratio, mut count) = (0.0, 0);
            for a in 0..grid.dim() {
                ratio += grid.spacing(a) / grid.extent()[a];
                count += 1;
            }
            let ratio = ratio / count as f64;
            2.0 / (1.0 + (std::f64::consts::PI * ratio).sin())
        })
    }

    fn validate(&self) -> Result<()> {
        if let Some(w) = self.omega {
            if !(w > 0.0 && w < 2.0) {
                return Err(Error::InvalidArgument(format!(
                    "relaxation must lie in (0, 2), got {w}"
                )));
            }
        }
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                return Err(Error::InvalidArgument(format!("tolerance must be positive, got {t}")));
            }
        }
        Ok(())
    }
}

/// Obstacle problem with Dirichlet data on the box boundary and an optional
/// interior set `K` where `u` is held at a constant.
#[derive(Clone, Debug)]
pub struct ObstacleProblem {
    grid: Grid,
    /// Full-length array; only boundary entries are read.
    boundary: Vec<f64>,
    fixed: Option<(Vec<bool>, f64)>,
    pub params: SolverParams,
}

impl ObstacleProblem {
    pub fn new(grid: Grid, boundary: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let mut values = vec![0.0; grid.len()];
        let mut x = vec![0.0; grid.dim()];
        for (i, v) in values.iter_mut().enumerate() {
            if grid.is_boundary(i) {
                grid.node_into(i, &mut x);
                *v = boundary(&x);
                if !v.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "boundary data is not finite at {x:?}"
                    )));
                }
            }
        }
        Ok(ObstacleProblem {
            grid,
            boundary: values,
            fixed: None,
            params: SolverParams::default(),
        })
    }

    /// Holds `u = value` on the nodes of `mask`, which must avoid the boundary.
    pub fn with_fixed(mut self, mask: Vec<bool>, value: f64) -> Result<Self> {
        if mask.len() != self.grid.len() {
            return Err(Error::InvalidArgument("mask length differs from grid".into()));
        }
        if mask.iter().enumerate().any(|(i, &m)| m && self.grid.is_boundary(i)) {
            return Err(Error::InvalidArgument(
                "the fixed set must be disjoint from the domain boundary".into(),
            ));
        }
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "fixed value must be finite and nonnegative, got {value}"
            )));
        }
        self.fixed = Some((mask, value));
        Ok(self)
    }

    pub fn with_params(mut self, params: SolverParams) -> Self {
        self.params = params;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn is_free(&self, i: usize) -> bool {
        !self.grid.is_boundary(i) && !self.fixed.as_ref().is_some_and(|(m, _)| m[i])
    }

    fn initial_values(&self) -> Vec<f64> {
        let mut u = vec![0.0; self.grid.len()];
        for (i, v) in u.iter_mut().enumerate() {
            if self.grid.is_boundary(i) {
                *v = self.boundary[i].max(0.0);
            } else if let Some((m, t)) = &self.fixed {
                if m[i] {
                    *v = *t;
                }
            }
        }
        u
    }

    /// Restriction to a coarser grid whose nodes are a subset of ours.
    fn coarsened(&self, coarse: &Grid) -> ObstacleProblem {
        let mut boundary = vec![0.0; coarse.len()];
        let mut mask = self.fixed.as_ref().map(|_| vec![false; coarse.len()]);
        for i in 0..coarse.len() {
            let fine = self.grid.refine_index(coarse, i);
            boundary[i] = self.boundary[fine];
            if let (Some(m), Some((fm, _))) = (mask.as_mut(), &self.fixed) {
                m[i] = fm[fine] && !coarse.is_boundary(i);
            }
        }
        ObstacleProblem {
            grid: coarse.clone(),
            boundary,
            fixed: mask.zip(self.fixed.as_ref().map(|f| f.1)),
            params: SolverParams {
                tol: None,
                ..self.params.clone()
            },
        }
    }

    /// Projected SOR; `init` is used as the starting iterate when given.
    pub fn solve(&self, init: Option<&ScalarField>) -> Result<Solution> {
        self.params.validate()?;
        let g = &self.grid;
        let mut u = match init {
            Some(f) => {
                if f.grid() != g {
                    return Err(Error::InvalidArgument("initial guess lives on another grid".into()));
                }
                let mut u = self.initial_values();
                for i in 0..g.len() {
                    if self.is_free(i) {
                        u[i] = f.values()[i].max(0.0);
                    }
                }
                u
            }
            None => self.coarse_guess()?,
        };
        let free: Vec<usize> = (0..g.len()).filter(|&i| self.is_free(i)).collect();
        let dim = g.dim();
        let strides: Vec<usize> = g.strides().to_vec();
        let inv_h2: Vec<f64> = (0..dim).map(|a| 1.0 / (g.spacing(a) * g.spacing(a))).collect();
        let diag: f64 = inv_h2.iter().map(|c| 2.0 * c).sum();
        let omega = self.params.relaxation(g);
        let tol = match self.params.tol {
            Some(t) => t,
            None => self.params.tolerance(g).max(self.roundoff_floor()),
        };
        let mut iterations = 0;
        let mut last = f64::INFINITY;
        while iterations < self.params.max_iter {
            iterations += 1;
            let mut max_update: f64 = 0.0;
            for &i in &free {
                let mut s = -1.0;
                for a in 0..dim {
                    s += (u[i + strides[a]] + u[i - strides[a]]) * inv_h2[a];
                }
                let gs = s / diag;
                let old = u[i];
                let new = (old + omega * (gs - old)).max(0.0);
                max_update = max_update.max((new - old).abs());
                u[i] = new;
            }
            last = max_update;
            if max_update < tol {
                break;
            }
        }
        if last >= tol {
            return Err(Error::NoConvergence {
                iterations,
                residual: last,
            });
        }
        let field = ScalarField::new(g.clone(), u)?;
        Ok(self.finish(field, iterations))
    }

    /// SOR updates stall near `ε·|u|`; the default tolerance never asks for less.
    fn roundoff_floor(&self) -> f64 {
        let scale = self
            .boundary
            .iter()
            .map(|v| v.abs())
            .chain(self.fixed.as_ref().map(|f| f.1))
            .fold(1.0, f64::max);
        128.0 * f64::EPSILON * scale
    }

    fn coarse_guess(&self) -> Result<Vec<f64>> {
        let mut u = self.initial_values();
        if !self.params.coarse_start {
            return Ok(u);
        }
        let Some(coarse) = self.grid.coarsen(9) else {
            return Ok(u);
        };
        let coarse_problem = self.coarsened(&coarse);
        let coarse_sol = coarse_problem.solve(None)?;
        let mut x = vec![0.0; self.grid.dim()];
        for i in 0..self.grid.len() {
            if self.is_free(i) {
                self.grid.node_into(i, &mut x);
                u[i] = coarse_sol.u.interpolate_unchecked(&x).max(0.0);
            }
        }
        Ok(u)
    }

    fn finish(&self, u: ScalarField, iterations: usize) -> Solution {
        let g = &self.grid;
        let threshold = self.params.contact_scale * u.max().max(1.0);
        let contact: Vec<bool> = u.values().iter().map(|&v| v <= threshold).collect();
        let mut residual: f64 = 0.0;
        for i in 0..g.len() {
            if self.is_free(i) {
                let r = (1.0 - u.discrete_laplacian(i)).min(u.values()[i]);
                residual = residual.max(r.abs());
            }
        }
        Solution {
            u,
            contact,
            residual,
            iterations,
            contact_threshold: threshold,
        }
    }
}

/// Discrete solution with its contact set.
#[derive(Clone, Debug)]
pub struct Solution {
    pub u: ScalarField,
    /// `u ≤ contact_threshold`.
    pub contact: Vec<bool>,
    /// `max |min(1 − Δ_h u, u)|` over free nodes.
    pub residual: f64,
    pub iterations: usize,
    pub contact_threshold: f64,
}

impl Solution {
    /// Wraps a nodal field, e.g. one read back from disk; the residual is
    /// taken over interior nodes.
    pub fn from_field(u: ScalarField, contact_scale: f64) -> Solution {
        let g = u.grid().clone();
        let threshold = contact_scale * u.max().max(1.0);
        let contact: Vec<bool> = u.values().iter().map(|&v| v <= threshold).collect();
        let mut residual: f64 = 0.0;
        for i in 0..g.len() {
            if !g.is_boundary(i) {
                let r = (1.0 - u.discrete_laplacian(i)).min(u.values()[i]);
                residual = residual.max(r.abs());
            }
        }
        Solution {
            u,
            contact,
            residual,
            iterations: 0,
            contact_threshold: threshold,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    pub fn contact_count(&self) -> usize {
        self.contact.iter().filter(|&&c| c).count()
    }

    pub fn contact_fraction(&self) -> f64 {
        self.contact_count() as f64 / self.contact.len() as f64
    }

    /// Contact nodes with a non-contact neighbour.
    pub fn free_boundary_nodes(&self) -> Vec<usize> {
        let g = self.grid();
        (0..g.len())
            .filter(|&i| self.contact[i] && g.neighbors(i).any(|j| !self.contact[j]))
            .collect()
    }

    /// Connected components (axis neighbours) of `{u > threshold}` not meeting `exclude`.
    pub fn positive_components(&self, exclude: Option<&[bool]>) -> usize {
        let g = self.grid();
        let inside = |i: usize| !self.contact[i] && !exclude.is_some_and(|m| m[i]);
        count_components(g, inside)
    }

    /// Connected components of the contact set.
    pub fn contact_components(&self) -> usize {
        count_components(self.grid(), |i| self.contact[i])
    }

    /// JSON sidecar `{residual, iterations, t}`.
    pub fn sidecar(&self, t: Option<f64>) -> serde_json::Value {
        serde_json::json!({
            "residual": self.residual,
            "iterations": self.iterations,
            "t": t,
        })
    }
}

pub(crate) fn count_components(g: &Grid, inside: impl Fn(usize) -> bool) -> usize {
    let mut seen = vec![false; g.len()];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for start in 0..g.len() {
        if seen[start] || !inside(start) {
            continue;
        }
        count += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            for j in g.neighbors(i) {
                if !seen[j] && inside(j) {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    count
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub enum Provenance {
    /// `u^t = g + t` on the boundary.
    BoundaryShift,
    /// `u^t = t` on `K`, zero on the outer boundary.
    HeleShaw,
    Custom(String),
}

/// Solutions ordered by increasing parameter.
#[derive(Clone, Debug)]
pub struct SolutionFamily {
    pub t_values: Vec<f64>,
    pub solutions: Vec<Solution>,
    pub provenance: Provenance,
}

impl SolutionFamily {
    /// Largest `u^{t_k} − u^{t_{k+1}}` over nodes and consecutive pairs, with its location.
    pub fn worst_monotonicity(&self) -> Option<(usize, usize, f64)> {
        let mut worst: Option<(usize, usize, f64)> = None;
        for k in 0..self.solutions.len().saturating_sub(1) {
            let (a, b) = (self.solutions[k].u.values(), self.solutions[k + 1].u.values());
            for i in 0..a.len() {
                let excess = a[i] - b[i];
                if worst.is_none_or(|w| excess > w.2) {
                    worst = Some((k, i, excess));
                }
            }
        }
        worst
    }

    fn enforce_monotone(&self) -> Result<()> {
        if let Some((k, node, excess)) = self.worst_monotonicity() {
            if excess > 1e-10 {
                return Err(Error::MonotonicityViolation {
                    node,
                    t_low: self.t_values[k],
                    t_high: self.t_values[k + 1],
                    excess,
                });
            }
        }
        Ok(())
    }

    /// Contact masks are nested: `contact(t') ⊂ contact(t)` for `t ≤ t'`.
    pub fn contact_nested(&self) -> bool {
        self.solutions.windows(2).all(|w| {
            w[1].contact
                .iter()
                .zip(&w[0].contact)
                .all(|(&later, &earlier)| !later || earlier)
        })
    }

    /// Median time for the free boundary to advance one cell, `h / V` with
    /// `V = (swept volume / Δt) / free-boundary measure` per step. `None` if
    /// the contact set never shrinks.
    pub fn time_resolution(&self) -> Option<f64> {
        let g = self.solutions.first()?.grid();
        let h = g.max_spacing();
        let cell: f64 = (0..g.dim()).map(|a| g.spacing(a)).product();
        let mut taus: Vec<f64> = (0..self.solutions.len().saturating_sub(1))
            .filter_map(|k| {
                let swept = self.solutions[k].contact_count() as f64
                    - self.solutions[k + 1].contact_count() as f64;
                let measure = free_boundary(&self.solutions[k + 1]).measure();
                if swept <= 0.0 || measure <= 0.0 {
                    return None;
                }
                let speed = swept * cell / (self.t_values[k + 1] - self.t_values[k]) / measure;
                Some(h / speed)
            })
            .collect();
        if taus.is_empty() {
            return None;
        }
        taus.sort_by(f64::total_cmp);
        Some(taus[taus.len() / 2])
    }
}

fn check_increasing(t_values: &[f64]) -> Result<()> {
    if t_values.is_empty() {
        return Err(Error::InvalidArgument("no parameter values".into()));
    }
    if t_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("parameter values must be strictly increasing".into()));
    }
    Ok(())
}

/// Solves for boundary data `g_rule(t, x)` at each `t`, warm-starting from the previous `t`.
pub fn solve_family(
    grid: &Grid,
    g_rule: impl Fn(f64, &[f64]) -> f64,
    t_values: &[f64],
    params: &SolverParams,
) -> Result<SolutionFamily> {
    check_increasing(t_values)?;
    let mut solutions: Vec<Solution> = Vec::with_capacity(t_values.len());
    for &t in t_values {
        let problem = ObstacleProblem::new(grid.clone(), |x| g_rule(t, x))?.with_params(params.clone());
        let sol = problem.solve(solutions.last().map(|s| &s.u))?;
        solutions.push(sol);
    }
    let family = SolutionFamily {
        t_values: t_values.to_vec(),
        solutions,
        provenance: Provenance::BoundaryShift,
    };
    family.enforce_monotone()?;
    Ok(family)
}

/// Quasi-static Hele-Shaw: `u = t` on `K`, `u = 0` on the box boundary.
pub fn hele_shaw_evolve(
    grid: &Grid,
    k_mask: &[bool],
    t_values: &[f64],
    params: &SolverParams,
) -> Result<SolutionFamily> {
    check_increasing(t_values)?;
    if !k_mask.iter().any(|&m| m) {
        return Err(Error::InvalidArgument("the source set K is empty".into()));
    }
    if t_values[0] < 0.0 {
        return Err(Error::InvalidArgument("Hele-Shaw parameters must be nonnegative".into()));
    }
    // nodes whose positivity means the flow has reached the box
    let rim: Vec<usize> = (0..grid.len())
        .filter(|&i| !grid.is_boundary(i) && grid.neighbors(i).any(|j| grid.is_boundary(j)))
        .collect();
    let mut solutions: Vec<Solution> = Vec::with_capacity(t_values.len());
    for &t in t_values {
        let problem = ObstacleProblem::new(grid.clone(), |_| 0.0)?
            .with_fixed(k_mask.to_vec(), t)?
            .with_params(params.clone());
        let sol = problem.solve(solutions.last().map(|s| &s.u))?;
        if rim.iter().any(|&i| !sol.contact[i]) {
            return Err(Error::PositivityTouchesBoundary { t });
        }
        solutions.push(sol);
    }
    let family = SolutionFamily {
        t_values: t_values.to_vec(),
        solutions,
        provenance: Provenance::HeleShaw,
    };
    family.enforce_monotone()?;
    Ok(family)
}

/// Node mask of a union of closed balls `(center, radius)`.
pub fn disks_mask(grid: &Grid, disks: &[(Vec<f64>, f64)]) -> Vec<bool> {
    let mut x = vec![0.0; grid.dim()];
    (0..grid.len())
        .map(|i| {
            grid.node_into(i, &mut x);
            disks.iter().any(|(c, r)| {
                let d2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
                d2 <= r * r * (1.0 + 1e-12)
            })
        })
        .collect()
}

/// Radial solution `(ρ² − a²)/4 − (a²/2) ln(ρ/a)` for `ρ ≥ a`, zero inside.
pub fn radial_solution(a: f64, rho: f64) -> f64 {
    if rho <= a {
        0.0
    } else {
        (rho * rho - a * a) / 4.0 - 0.5 * a * a * (rho / a).ln()
    }
}

/// Free-boundary radius for the Hele-Shaw flow from a disk of radius `r0`:
/// the root `s > r0` of `t = radial_solution(s, r0)` evaluated backwards,
/// i.e. `t = (r0² − s²)/4 − (s²/2) ln(r0/s)`.
pub fn hele_shaw_radius(r0: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return r0;
    }
    let f = |s: f64| (r0 * r0 - s * s) / 4.0 - 0.5 * s * s * (r0 / s).ln() - t;
    let mut lo = r0;
    let mut hi = 2.0 * r0;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Bisects for the largest shift `c` in `[lo, hi]` whose solution for data
/// `g(c, x)` still has `x0` in its contact set. Data must increase with `c`;
/// each solve warm-starts from the last contact-keeping one.
pub fn critical_shift(
    grid: &Grid,
    g: impl Fn(f64, &[f64]) -> f64,
    x0: &[f64],
    bracket: (f64, f64),
    steps: usize,
    params: &SolverParams,
) -> Result<(f64, Solution)> {
    let node = grid
        .nearest_node(x0)
        .ok_or_else(|| Error::InvalidArgument(format!("{x0:?} lies outside the grid")))?;
    let solve = |c: f64, warm: Option<&Solution>| {
        ObstacleProblem::new(grid.clone(), |x| g(c, x))?
            .with_params(params.clone())
            .solve(warm.map(|s| &s.u))
    };
    let (mut lo, mut hi) = bracket;
    let mut best = solve(lo, None)?;
    if !best.contact[node] {
        return Err(Error::InvalidArgument(format!(
            "the lower shift {lo} already frees {x0:?}"
        )));
    }
    if solve(hi, Some(&best))?.contact[node] {
        return Err(Error::InvalidArgument(format!(
            "the upper shift {hi} keeps {x0:?} in contact"
        )));
    }
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        let s = solve(mid, Some(&best))?;
        if s.contact[node] {
            lo = mid;
            best = s;
        } else {
            hi = mid;
        }
    }
    Ok((lo, best))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(n: usize) -> Grid {
        Grid::centered_box(2, 1.0, n).unwrap()
    }

    #[test]
    fn critical_shift_of_explicit_family() {
        // ½x₂² + c keeps the origin in contact exactly for c ≤ 0
        let g = square(21);
        let (c, sol) = critical_shift(
            &g,
            |c, x| 0.5 * x[1] * x[1] + c,
            &[0.0, 0.0],
            (-0.5, 0.5),
            30,
            &SolverParams::default(),
        )
        .unwrap();
        assert!(c <= 0.0 && c > -1e-8, "{c}");
        assert!(sol.contact[g.nearest_node(&[0.0, 0.0]).unwrap()]);
        assert!(critical_shift(&g, |c, x| 0.5 * x[1] * x[1] + c, &[0.0, 0.0], (0.1, 0.5), 5, &SolverParams::default()).is_err());
    }

    #[test]
    fn explicit_positive_solution() {
        let g = square(41);
        let t = 0.1;
        let p = ObstacleProblem::new(g.clone(), |x| 0.5 * x[1] * x[1] + t).unwrap();
        let sol = p.solve(None).unwrap();
        let mut x = [0.0; 2];
        for i in 0..g.len() {
            g.node_into(i, &mut x);
            assert!((sol.u.values()[i] - 0.5 * x[1] * x[1] - t).abs() < 1e-10);
        }
        assert_eq!(sol.contact_count(), 0);
        assert!(sol.residual < 1e-8);
    }

    #[test]
    fn singular_line_solution() {
        let g = square(41);
        let p = ObstacleProblem::new(g.clone(), |x| 0.5 * x[1] * x[1]).unwrap();
        let sol = p.solve(None).unwrap();
        let mut x = [0.0; 2];
        for i in 0..g.len() {
            g.node_into(i, &mut x);
            assert!((sol.u.values()[i] - 0.5 * x[1] * x[1]).abs() < 1e-10);
            assert_eq!(sol.contact[i], x[1].abs() < 1e-12, "{x:?}");
        }
    }

    #[test]
    fn radial_free_boundary() {
        let g = square(81);
        let h = g.spacing(0);
        let p = ObstacleProblem::new(g.clone(), |x| radial_solution(0.5, x[0].hypot(x[1]))).unwrap();
        let sol = p.solve(None).unwrap();
        let fb = free_boundary(&sol);
        assert!(!fb.is_empty());
        for v in fb.vertices() {
            let r = v[0].hypot(v[1]);
            assert!((r - 0.5).abs() <= 2.0 * h, "vertex {v:?}");
        }
    }

    #[test]
    fn warm_start_and_cold_start_agree() {
        let g = square(33);
        let p = ObstacleProblem::new(g.clone(), |x| x[0] * x[0] - 0.3 * x[1]).unwrap();
        let warm = p.solve(None).unwrap();
        let cold = p
            .clone()
            .with_params(SolverParams {
                coarse_start: false,
                ..Default::default()
            })
            .solve(None)
            .unwrap();
        for (a, b) in warm.u.values().iter().zip(cold.u.values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn non_convergence_is_reported() {
        let g = square(33);
        let p = ObstacleProblem::new(g, |x| x[0] * x[0])
            .unwrap()
            .with_params(SolverParams {
                max_iter: 3,
                coarse_start: false,
                ..Default::default()
            });
        match p.solve(None) {
            Err(Error::NoConvergence { iterations, residual }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn family_examples() {
        let g = square(33);
        let fam = solve_family(
            &g,
            |t, x| 0.5 * x[1] * x[1] + t,
            &[0.0, 1e-6, 1e-3],
            &SolverParams::default(),
        )
        .unwrap();
        assert!(fam.solutions[0].contact_count() > 0);
        assert_eq!(fam.solutions[1].contact_count(), 0);
        assert_eq!(fam.solutions[2].contact_count(), 0);
        assert!(fam.contact_nested());

        let flat = solve_family(&g, |_, x| x[0] * x[0] - 0.2, &[0.0, 1.0], &SolverParams::default())
            .unwrap();
        for (a, b) in flat.solutions[0].u.values().iter().zip(flat.solutions[1].u.values()) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(solve_family(&g, |_, _| 0.0, &[1.0, 0.5], &SolverParams::default()).is_err());
    }

    #[test]
    fn decreasing_rule_is_rejected() {
        let g = square(17);
        match solve_family(&g, |t, _| 1.0 - t, &[0.0, 0.5], &SolverParams::default()) {
            Err(Error::MonotonicityViolation { t_low, t_high, .. }) => {
                assert_eq!((t_low, t_high), (0.0, 0.5));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hele_shaw_zero_time_and_escape() {
        let g = square(41);
        let k = disks_mask(&g, &[(vec![0.0, 0.0], 0.25)]);
        let fam = hele_shaw_evolve(&g, &k, &[0.0], &SolverParams::default()).unwrap();
        for (i, v) in fam.solutions[0].u.values().iter().enumerate() {
            if !k[i] {
                assert_eq!(*v, 0.0);
            }
        }
        assert!(matches!(
            hele_shaw_evolve(&g, &k, &[0.5], &SolverParams::default()),
            Err(Error::PositivityTouchesBoundary { .. })
        ));
        assert!(hele_shaw_evolve(&g, &vec![false; g.len()], &[0.1], &SolverParams::default()).is_err());
    }

    #[test]
    fn hele_shaw_radius_inverts_profile() {
        let s = hele_shaw_radius(0.5, 0.01);
        assert!(s > 0.5);
        // u(ρ) from free boundary s evaluated at ρ = 1/2 equals t
        assert!((radial_solution(s, 0.5) - 0.0).abs() < 1e-15);
        let t = (0.25 - s * s) / 4.0 - 0.5 * s * s * (0.5 / s).ln();
        assert!((t - 0.01).abs() < 1e-13);
    }

    #[test]
    fn components_of_two_disks() {
        let g = square(41);
        let k = disks_mask(&g, &[(vec![-0.4, 0.0], 0.15), (vec![0.4, 0.0], 0.15)]);
        let fam = hele_shaw_evolve(&g, &k, &[0.001, 0.05], &SolverParams::default()).unwrap();
        assert_eq!(fam.solutions[0].positive_components(None), 2);
        assert_eq!(fam.solutions[1].positive_components(None), 1);
        assert!(fam.contact_nested());
    }
}
