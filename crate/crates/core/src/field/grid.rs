use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform tensor grid on an axis-aligned box in 1, 2 or 3 dimensions.
///
/// Nodes are enumerated lexicographically with the last axis fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct Grid {
    origin: Vec<f64>,
    extent: Vec<f64>,
    resolution: Vec<usize>,
    strides: Vec<usize>,
}

/// Serialized form of a [`Grid`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: Vec<f64>,
    pub extent: Vec<f64>,
    pub resolution: Vec<usize>,
}

impl TryFrom<GridSpec> for Grid {
    type Error = Error;

    fn try_from(spec: GridSpec) -> Result<Self> {
        Grid::new(&spec.origin, &spec.extent, &spec.resolution)
    }
}

impl From<Grid> for GridSpec {
    fn from(grid: Grid) -> Self {
        GridSpec {
            origin: grid.origin,
            extent: grid.extent,
            resolution: grid.resolution,
        }
    }
}

impl Grid {
    pub fn new(origin: &[f64], extent: &[f64], resolution: &[usize]) -> Result<Self> {
        let dim = origin.len();
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if extent.len() != dim || resolution.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "origin, extent and resolution must all have length {dim}"
            )));
        }
        for axis in 0..dim {
            if !origin[axis].is_finite() {
                return Err(Error::InvalidGrid(format!("origin[{axis}] is not finite")));
            }
            if !(extent[axis] > 0.0 && extent[axis].is_finite()) {
                return Err(Error::InvalidGrid(format!(
                    "extent[{axis}] = {} must be positive",
                    extent[axis]
                )));
            }
            if resolution[axis] < 3 {
                return Err(Error::InvalidGrid(format!(
                    "resolution[{axis}] = {} must be at least 3",
                    resolution[axis]
                )));
            }
        }
        let mut strides = vec![1; dim];
        for axis in (0..dim - 1).rev() {
            strides[axis] = strides[axis + 1] * resolution[axis + 1];
        }
        Ok(Grid {
            origin: origin.to_vec(),
            extent: extent.to_vec(),
            resolution: resolution.to_vec(),
            strides,
        })
    }

    /// Square/cube `[-half_width, half_width]^dim` with `nodes` nodes per axis.
    pub fn centered_box(dim: usize, half_width: f64, nodes: usize) -> Result<Self> {
        Grid::new(
            &vec![-half_width; dim],
            &vec![2.0 * half_width; dim],
            &vec![nodes; dim],
        )
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn extent(&self) -> &[f64] {
        &self.extent
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extent[axis] / (self.resolution[axis] - 1) as f64
    }

    /// Largest spacing over all axes.
    pub fn max_spacing(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + (self.extent[axis] * i as f64) / (self.resolution[axis] - 1) as f64
    }

    pub fn index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn multi_index(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for axis in 0..self.dim() {
            out[axis] = index / self.strides[axis];
            index %= self.strides[axis];
        }
        out
    }

    /// Axis index of node `index` along `axis`.
    pub fn axis_index(&self, index: usize, axis: usize) -> usize {
        (index / self.strides[axis]) % self.resolution[axis]
    }

    pub fn node(&self, index: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        self.node_into(index, &mut x);
        x
    }

    pub fn node_into(&self, index: usize, out: &mut [f64]) {
        for (axis, slot) in out.iter_mut().enumerate() {
            *slot = self.coordinate(axis, self.axis_index(index, axis));
        }
    }

    pub fn is_boundary(&self, index: usize) -> bool {
        (0..self.dim()).any(|axis| {
            let i = self.axis_index(index, axis);
            i == 0 || i + 1 == self.resolution[axis]
        })
    }

    pub fn upper(&self, axis: usize) -> f64 {
        self.origin[axis] + self.extent[axis]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.locate_violation(x).is_none()
    }

    /// First axis on which `x` leaves the box (with a relative slack of a few ulps).
    pub(crate) fn locate_violation(&self, x: &[f64]) -> Option<usize> {
        (0..self.dim()).find(|&axis| {
            let slack = 1e-12 * self.extent[axis];
            x[axis] < self.origin[axis] - slack || x[axis] > self.upper(axis) + slack
        })
    }

    /// Whether the closed ball `B_r(center)` lies in the box.
    pub fn contains_ball(&self, center: &[f64], radius: f64) -> bool {
        (0..self.dim()).all(|axis| {
            let slack = 1e-12 * self.extent[axis];
            center[axis] - radius >= self.origin[axis] - slack
                && center[axis] + radius <= self.upper(axis) + slack
        })
    }

    /// Radius of the largest ball around `center` that stays in the box.
    pub fn inscribed_radius(&self, center: &[f64]) -> f64 {
        (0..self.dim())
            .map(|axis| (center[axis] - self.origin[axis]).min(self.upper(axis) - center[axis]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn nearest_node(&self, x: &[f64]) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let multi: Vec<usize> = (0..self.dim())
            .map(|axis| {
                let t = (x[axis] - self.origin[axis]) / self.spacing(axis);
                (t.round().max(0.0) as usize).min(self.resolution[axis] - 1)
            })
            .collect();
        Some(self.index(&multi))
    }

    /// Grid with every other node, when every `resolution - 1` is even and the
    /// coarse grid still has at least `min_nodes` nodes per axis.
    pub fn coarsen(&self, min_nodes: usize) -> Option<Grid> {
        let mut coarse = Vec::with_capacity(self.dim());
        for &n in &self.resolution {
            if (n - 1) % 2 != 0 || (n - 1) / 2 + 1 < min_nodes.max(3) {
                return None;
            }
            coarse.push((n - 1) / 2 + 1);
        }
        Grid::new(&self.origin, &self.extent, &coarse).ok()
    }

    /// Index of the fine node coinciding with coarse node `coarse_index` of `coarse`.
    pub fn refine_index(&self, coarse: &Grid, coarse_index: usize) -> usize {
        let multi: Vec<usize> = coarse
            .multi_index(coarse_index)
            .into_iter()
            .map(|i| 2 * i)
            .collect();
        self.index(&multi)
    }

    /// Indices of all nodes within distance `radius` of `center`.
    pub fn nodes_in_ball(&self, center: &[f64], radius: f64) -> Vec<usize> {
        let dim = self.dim();
        let mut lo = vec![0usize; dim];
        let mut hi = vec![0usize; dim];
        for axis in 0..dim {
            let h = self.spacing(axis);
            let a = ((center[axis] - radius - self.origin[axis]) / h).ceil();
            let b = ((center[axis] + radius - self.origin[axis]) / h).floor();
            let max = (self.resolution[axis] - 1) as f64;
            if b < 0.0 || a > max {
                return Vec::new();
            }
            lo[axis] = a.max(0.0) as usize;
            hi[axis] = b.min(max) as usize;
            if lo[axis] > hi[axis] {
                return Vec::new();
            }
        }
        let mut out = Vec::new();
        let mut multi = lo.clone();
        let mut x = vec![0.0; dim];
        let r2 = radius * radius * (1.0 + 1e-12);
        loop {
            let idx = self.index(&multi);
            self.node_into(idx, &mut x);
            let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 <= r2 {
                out.push(idx);
            }
            // odometer increment, last axis fastest
            let mut axis = dim;
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                if multi[axis] < hi[axis] {
                    multi[axis] += 1;
                    break;
                }
                multi[axis] = lo[axis];
            }
        }
    }

    /// Face neighbours of node `index` (2n of them for interior nodes).
    pub fn neighbors(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.dim()).flat_map(move |axis| {
            let i = self.axis_index(index, axis);
            let s = self.strides[axis];
            let down = (i > 0).then(|| index - s);
            let up = (i + 1 < self.resolution[axis]).then(|| index + s);
            down.into_iter().chain(up)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_of_unit_square_grid() {
        let g = Grid::new(&[-1.0, -1.0], &[2.0, 2.0], &[201, 201]).unwrap();
        assert!((g.spacing(0) - 0.01).abs() < 1e-15);
        assert!((g.spacing(1) - 0.01).abs() < 1e-15);
        assert_eq!(g.len(), 201 * 201);
    }

    #[test]
    fn one_dimensional_nodes() {
        let g = Grid::new(&[0.0], &[1.0], &[3]).unwrap();
        let xs: Vec<f64> = (0..3).map(|i| g.node(i)[0]).collect();
        assert_eq!(xs, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn three_dimensional_grid() {
        let g = Grid::new(&[-1.0; 3], &[2.0; 3], &[65; 3]).unwrap();
        assert_eq!(g.len(), 65 * 65 * 65);
        assert_eq!(g.spacing(2), 0.03125);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Grid::new(&[0.0], &[0.0], &[3]).is_err());
        assert!(Grid::new(&[0.0], &[-1.0], &[3]).is_err());
        assert!(Grid::new(&[0.0, 0.0], &[1.0, 1.0], &[3, 2]).is_err());
        assert!(Grid::new(&[0.0; 4], &[1.0; 4], &[3; 4]).is_err());
    }

    #[test]
    fn enumeration_is_last_axis_fastest() {
        let g = Grid::new(&[0.0, 0.0], &[1.0, 2.0], &[3, 5]).unwrap();
        assert_eq!(g.node(1), vec![0.0, 0.5]);
        assert_eq!(g.node(5), vec![0.5, 0.0]);
        for idx in 0..g.len() {
            assert_eq!(g.index(&g.multi_index(idx)), idx);
        }
    }

    #[test]
    fn node_coordinates_are_reproducible() {
        let a = Grid::new(&[-1.0, -1.0], &[2.0, 2.0], &[201, 201]).unwrap();
        let b = Grid::new(&[-1.0, -1.0], &[2.0, 2.0], &[201, 201]).unwrap();
        for idx in (0..a.len()).step_by(97) {
            let (x, y) = (a.node(idx), b.node(idx));
            assert!(x.iter().zip(&y).all(|(p, q)| p.to_bits() == q.to_bits()));
        }
        assert_eq!(a.node(a.index(&[100, 100])), vec![0.0, 0.0]);
    }

    #[test]
    fn ball_nodes_and_coarsening() {
        let g = Grid::centered_box(2, 1.0, 21).unwrap();
        let ball = g.nodes_in_ball(&[0.0, 0.0], 0.1);
        assert_eq!(ball.len(), 5);
        let c = g.coarsen(3).unwrap();
        assert_eq!(c.resolution(), &[11, 11]);
        let fine = g.refine_index(&c, c.index(&[5, 5]));
        assert_eq!(g.node(fine), vec![0.0, 0.0]);
        assert!(Grid::centered_box(2, 1.0, 20).unwrap().coarsen(3).is_none());
    }
}
