use crate::error::{Error, Result};
use crate::field::{Evaluable, Grid, ScalarField};
use crate::poly::FPoly;
use crate::vi_solver::Solution;

/// `w = u − P(· − x₀)` for a discrete solution `u` and a polynomial with
/// `ΔP = 1`. Values come from the nodal differences, so `w` is exact at
/// nodes, and `Δw = −χ_{u=0}` is integrated as a sum over contact nodes.
#[derive(Clone, Debug)]
pub struct Remainder<'a> {
    field: ScalarField,
    contact: &'a [bool],
    cell_volume: f64,
}

impl<'a> Remainder<'a> {
    pub fn new(sol: &'a Solution, x0: &[f64], p: &FPoly) -> Result<Self> {
        let g = sol.grid();
        if p.dim() != g.dim() || x0.len() != g.dim() {
            return Err(Error::InvalidArgument("remainder dimensions differ".into()));
        }
        let defect = &p.laplacian() - &FPoly::one(g.dim());
        if defect.max_abs_coeff() > 1e-9 {
            return Err(Error::InvalidArgument(
                "subtracted polynomial must satisfy ΔP = 1".into(),
            ));
        }
        let mut z = vec![0.0; g.dim()];
        let values: Vec<f64> = (0..g.len())
            .map(|i| {
                g.node_into(i, &mut z);
                for (a, b) in z.iter_mut().zip(x0) {
                    *a -= b;
                }
                sol.u.values()[i] - p.eval(&z)
            })
            .collect();
        let cell_volume = (0..g.dim()).map(|a| g.spacing(a)).product();
        Ok(Remainder {
            field: ScalarField::new(g.clone(), values)?,
            contact: &sol.contact,
            cell_volume,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }

    pub fn nodal(&self) -> &ScalarField {
        &self.field
    }

    /// `|w| ≤ tol·|x − x₀|²` at every node of the annulus `r_lo ≤ |x − x₀| ≤ r_hi`.
    pub fn is_degenerate(&self, x0: &[f64], r_lo: f64, r_hi: f64, tol: f64) -> bool {
        let g = self.grid();
        g.nodes_in_ball(x0, r_hi).into_iter().all(|i| {
            let x = g.node(i);
            let r2: f64 = x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum();
            r2 < r_lo * r_lo || self.field.values()[i].abs() <= tol * r2
        })
    }
}

impl Evaluable for Remainder<'_> {
    fn dim(&self) -> usize {
        self.field.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.field.value(x)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        self.field.gradient(x, out)
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        match self.grid().nearest_node(x) {
            Some(i) if self.contact[i] => -1.0,
            _ => 0.0,
        }
    }

    fn check_ball(&self, center: &[f64], radius: f64) -> Result<()> {
        self.field.check_ball(center, radius)
    }

    fn laplacian_integral(
        &self,
        center: &[f64],
        radius: f64,
        f: &mut dyn FnMut(&[f64]) -> f64,
    ) -> Option<f64> {
        let g = self.grid();
        let mut x = vec![0.0; g.dim()];
        let mut acc = 0.0;
        for i in g.nodes_in_ball(center, radius) {
            if self.contact[i] {
                g.node_into(i, &mut x);
                acc -= f(&x);
            }
        }
        Some(acc * self.cell_volume)
    }
}

/// `x ↦ w(x₀ + r x)/√H(r, w)`.
pub struct Rescaled<'a, E: ?Sized> {
    w: &'a E,
    x0: Vec<f64>,
    r: f64,
    scale: f64,
}

pub fn rescale<'a, E: Evaluable + ?Sized>(
    w: &'a E,
    x0: &[f64],
    r: f64,
    functionals: &crate::functionals::Functionals,
) -> Result<Rescaled<'a, E>> {
    let h = functionals.h(w, x0, r)?;
    if !(h > 0.0) {
        return Err(Error::ZeroBoundaryNorm);
    }
    Ok(Rescaled {
        w,
        x0: x0.to_vec(),
        r,
        scale: 1.0 / h.sqrt(),
    })
}

impl<E: Evaluable + ?Sized> Rescaled<'_, E> {
    fn map(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.x0).map(|(a, b)| b + self.r * a).collect()
    }
}

impl<E: Evaluable + ?Sized> Evaluable for Rescaled<'_, E> {
    fn dim(&self) -> usize {
        self.w.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.scale * self.w.value(&self.map(x))
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        self.w.gradient(&self.map(x), out);
        for o in out.iter_mut() {
            *o *= self.scale * self.r;
        }
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        self.scale * self.r * self.r * self.w.laplacian(&self.map(x))
    }

    fn check_ball(&self, center: &[f64], radius: f64) -> Result<()> {
        self.w.check_ball(&self.map(center), self.r * radius)
    }
}
