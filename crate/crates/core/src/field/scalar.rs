use super::grid::Grid;
use crate::error::{Error, Result};

/// Anything that can be sampled pointwise in `R^n`.
///
/// Integrals call [`Evaluable::check_ball`] once and then sample freely inside
/// the ball, so `value` may assume its argument is in the domain.
pub trait Evaluable {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Gradient by centered differences; override when something better exists.
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let step = 1e-5;
        let mut y = x.to_vec();
        for axis in 0..self.dim() {
            y[axis] = x[axis] + step;
            let fp = self.value(&y);
            y[axis] = x[axis] - step;
            let fm = self.value(&y);
            y[axis] = x[axis];
            out[axis] = (fp - fm) / (2.0 * step);
        }
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        let step = 1e-4;
        let f0 = self.value(x);
        let mut y = x.to_vec();
        let mut sum = 0.0;
        for axis in 0..self.dim() {
            y[axis] = x[axis] + step;
            let fp = self.value(&y);
            y[axis] = x[axis] - step;
            let fm = self.value(&y);
            y[axis] = x[axis];
            sum += (fp - 2.0 * f0 + fm) / (step * step);
        }
        sum
    }

    /// Fails when the closed ball of radius `radius` leaves the domain.
    fn check_ball(&self, _center: &[f64], _radius: f64) -> Result<()> {
        Ok(())
    }

    /// `∫_{B_r(center)} f Δw` when `Δw` is a known measure rather than a
    /// pointwise function; `None` means "use [`Evaluable::laplacian`]".
    fn laplacian_integral(
        &self,
        _center: &[f64],
        _radius: f64,
        _f: &mut dyn FnMut(&[f64]) -> f64,
    ) -> Option<f64> {
        None
    }
}

/// Closure-backed [`Evaluable`] on all of `R^n`.
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64> FnField<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnField { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64> Evaluable for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

impl<E: Evaluable + ?Sized> Evaluable for &E {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        (**self).gradient(x, out)
    }
    fn laplacian(&self, x: &[f64]) -> f64 {
        (**self).laplacian(x)
    }
    fn check_ball(&self, center: &[f64], radius: f64) -> Result<()> {
        (**self).check_ball(center, radius)
    }
    fn laplacian_integral(
        &self,
        center: &[f64],
        radius: f64,
        f: &mut dyn FnMut(&[f64]) -> f64,
    ) -> Option<f64> {
        (**self).laplacian_integral(center, radius, f)
    }
}

/// Grid-sampled function with multilinear interpolation.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values but the grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        ScalarField {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut x = vec![0.0; grid.dim()];
        let values = (0..grid.len())
            .map(|i| {
                grid.node_into(i, &mut x);
                f(&x)
            })
            .collect();
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Multilinear interpolation; errors when `x` is outside the box.
    pub fn interpolate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.grid.dim() {
            return Err(Error::InvalidArgument(format!(
                "query point has dimension {}, field has {}",
                x.len(),
                self.grid.dim()
            )));
        }
        if let Some(axis) = self.grid.locate_violation(x) {
            return Err(Error::OutOfDomain {
                point: x.to_vec(),
                axis,
                coordinate: x[axis],
            });
        }
        Ok(self.interpolate_unchecked(x))
    }

    /// Interpolation with coordinates clamped into the box.
    pub fn interpolate_unchecked(&self, x: &[f64]) -> f64 {
        let dim = self.grid.dim();
        let mut cell = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for axis in 0..dim {
            let n = self.grid.resolution()[axis];
            let t = (x[axis] - self.grid.origin()[axis]) * (n - 1) as f64
                / self.grid.extent()[axis];
            let t = t.clamp(0.0, (n - 1) as f64);
            let nearest = t.round();
            // snap onto nodes so that nodal values are reproduced exactly
            let t = if (t - nearest).abs() < 1e-9 { nearest } else { t };
            let i = (t.floor() as usize).min(n - 2);
            cell[axis] = i;
            frac[axis] = t - i as f64;
        }
        let strides = self.grid.strides();
        let base: usize = (0..dim).map(|a| cell[a] * strides[a]).sum();
        let mut acc = 0.0;
        for corner in 0..(1usize << dim) {
            let mut weight = 1.0;
            let mut offset = 0;
            for axis in 0..dim {
                if corner >> axis & 1 == 1 {
                    weight *= frac[axis];
                    offset += strides[axis];
                } else {
                    weight *= 1.0 - frac[axis];
                }
            }
            if weight != 0.0 {
                acc += weight * self.values[base + offset];
            }
        }
        acc
    }

    /// Discrete (2n+1)-point Laplacian at an interior node.
    pub fn discrete_laplacian(&self, index: usize) -> f64 {
        let g = &self.grid;
        let u0 = self.values[index];
        (0..g.dim())
            .map(|axis| {
                let s = g.strides()[axis];
                let h = g.spacing(axis);
                (self.values[index + s] + self.values[index - s] - 2.0 * u0) / (h * h)
            })
            .sum()
    }

    /// L2 norm over the box (trapezoid-free nodal sum times cell volume).
    pub fn l2_norm(&self) -> f64 {
        let cell: f64 = (0..self.grid.dim()).map(|a| self.grid.spacing(a)).product();
        (self.values.iter().map(|v| v * v).sum::<f64>() * cell).sqrt()
    }
}

impl Evaluable for ScalarField {
    fn dim(&self) -> usize {
        self.grid.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.interpolate_unchecked(x)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let mut y = x.to_vec();
        for axis in 0..self.grid.dim() {
            let h = self.grid.spacing(axis);
            y[axis] = x[axis] + h;
            let fp = self.interpolate_unchecked(&y);
            y[axis] = x[axis] - h;
            let fm = self.interpolate_unchecked(&y);
            y[axis] = x[axis];
            out[axis] = (fp - fm) / (2.0 * h);
        }
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        let f0 = self.interpolate_unchecked(x);
        let mut y = x.to_vec();
        let mut sum = 0.0;
        for axis in 0..self.grid.dim() {
            let h = self.grid.spacing(axis);
            y[axis] = x[axis] + h;
            let fp = self.interpolate_unchecked(&y);
            y[axis] = x[axis] - h;
            let fm = self.interpolate_unchecked(&y);
            y[axis] = x[axis];
            sum += (fp - 2.0 * f0 + fm) / (h * h);
        }
        sum
    }

    fn check_ball(&self, center: &[f64], radius: f64) -> Result<()> {
        if self.grid.contains_ball(center, radius) {
            Ok(())
        } else {
            Err(Error::DomainEscape {
                center: center.to_vec(),
                radius,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(n: usize) -> Grid {
        Grid::centered_box(2, 1.0, n).unwrap()
    }

    #[test]
    fn linear_functions_are_reproduced() {
        let f = ScalarField::from_fn(square(11), |x| x[0]);
        assert!((f.interpolate(&[0.3, 0.7]).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn nodal_values_are_exact() {
        let f = ScalarField::from_fn(square(11), |x| x[0] * x[1] + 0.1 * x[0].sin());
        for idx in 0..f.grid().len() {
            let x = f.grid().node(idx);
            assert_eq!(f.interpolate(&x).unwrap(), f.values()[idx]);
        }
    }

    #[test]
    fn parabola_error_at_cell_midpoint() {
        let g = square(21);
        let h = g.spacing(0);
        let f = ScalarField::from_fn(g, |x| x[0] * x[0]);
        let x = [0.3 + h / 2.0, 0.0];
        let err = f.interpolate(&x).unwrap() - x[0] * x[0];
        assert!(err.abs() <= h * h / 4.0 + 1e-14, "err = {err}");
    }

    #[test]
    fn outside_query_reports_coordinate() {
        let f = ScalarField::zeros(square(5));
        match f.interpolate(&[0.0, 1.5]) {
            Err(Error::OutOfDomain {
                axis, coordinate, ..
            }) => {
                assert_eq!(axis, 1);
                assert_eq!(coordinate, 1.5);
            }
            other => panic!("unexpected {other:?}"),
        }
        // boundary is allowed
        assert!(f.interpolate(&[1.0, -1.0]).is_ok());
    }

    #[test]
    fn discrete_laplacian_of_quadratic_is_exact() {
        let f = ScalarField::from_fn(square(11), |x| 0.5 * x[1] * x[1]);
        let idx = f.grid().index(&[4, 6]);
        assert!((f.discrete_laplacian(idx) - 1.0).abs() < 1e-12);
    }
}
