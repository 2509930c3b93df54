use serde::Serialize;

use super::Solution;
use crate::field::Grid;

/// Level-½ set of the contact indicator: points in 1D, segments in 2D,
/// triangles in 3D. Vertices sit at midpoints of edges whose endpoints
/// disagree about contact.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct FreeBoundary {
    pub dim: usize,
    pub simplices: Vec<Vec<Vec<f64>>>,
}

impl FreeBoundary {
    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.simplices.iter().flatten()
    }

    /// Total length (2D) or area (3D); the point count in 1D.
    pub fn measure(&self) -> f64 {
        self.simplices
            .iter()
            .map(|s| match s.len() {
                2 => dist(&s[0], &s[1]),
                3 => {
                    let u: Vec<f64> = s[1].iter().zip(&s[0]).map(|(a, b)| a - b).collect();
                    let v: Vec<f64> = s[2].iter().zip(&s[0]).map(|(a, b)| a - b).collect();
                    let c = [
                        u[1] * v[2] - u[2] * v[1],
                        u[2] * v[0] - u[0] * v[2],
                        u[0] * v[1] - u[1] * v[0],
                    ];
                    0.5 * (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
                }
                _ => 1.0,
            })
            .sum()
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn midpoint(g: &Grid, i: usize, j: usize) -> Vec<f64> {
    let (a, b) = (g.node(i), g.node(j));
    a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect()
}

pub fn free_boundary(sol: &Solution) -> FreeBoundary {
    let g = sol.grid();
    let c = &sol.contact;
    let dim = g.dim();
    let mut simplices = Vec::new();
    match dim {
        1 => {
            for i in 0..g.len() - 1 {
                if c[i] != c[i + 1] {
                    simplices.push(vec![midpoint(g, i, i + 1)]);
                }
            }
        }
        2 => marching_squares(g, c, &mut simplices),
        3 => marching_tetrahedra(g, c, &mut simplices),
        _ => {}
    }
    FreeBoundary { dim, simplices }
}

fn cell_origins(g: &Grid) -> impl Iterator<Item = usize> + '_ {
    let res = g.resolution().to_vec();
    (0..g.len()).filter(move |&i| {
        let m = g.multi_index(i);
        m.iter().zip(&res).all(|(&k, &n)| k + 1 < n)
    })
}

fn marching_squares(g: &Grid, c: &[bool], out: &mut Vec<Vec<Vec<f64>>>) {
    let s = g.strides();
    for base in cell_origins(g) {
        // corners counter-clockwise in (x1, x2)
        let corners = [base, base + s[0], base + s[0] + s[1], base + s[1]];
        let inside: Vec<bool> = corners.iter().map(|&i| c[i]).collect();
        let crossings: Vec<usize> = (0..4).filter(|&e| inside[e] != inside[(e + 1) % 4]).collect();
        let point = |e: usize| midpoint(g, corners[e], corners[(e + 1) % 4]);
        match crossings.len() {
            2 => out.push(vec![point(crossings[0]), point(crossings[1])]),
            4 => {
                // saddle: keep the contact corners separated
                if inside[0] {
                    out.push(vec![point(0), point(1)]);
                    out.push(vec![point(2), point(3)]);
                } else {
                    out.push(vec![point(3), point(0)]);
                    out.push(vec![point(1), point(2)]);
                }
            }
            _ => {}
        }
    }
}

const TETS: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
];

fn marching_tetrahedra(g: &Grid, c: &[bool], out: &mut Vec<Vec<Vec<f64>>>) {
    let s = g.strides();
    for base in cell_origins(g) {
        // corner bit k selects +1 along axis (2 − k) so corner 7 is the far vertex
        let corner = |k: usize| {
            base + (k >> 2 & 1) * s[0] + (k >> 1 & 1) * s[1] + (k & 1) * s[2]
        };
        for tet in TETS {
            let v: Vec<usize> = tet.iter().map(|&k| corner(k)).collect();
            let (ins, outs): (Vec<usize>, Vec<usize>) = v.iter().partition(|&&i| c[i]);
            match ins.len() {
                1 | 3 => {
                    let (lone, rest) = if ins.len() == 1 { (ins[0], outs) } else { (outs[0], ins) };
                    out.push(rest.iter().map(|&j| midpoint(g, lone, j)).collect());
                }
                2 => {
                    let p = |a: usize, b: usize| midpoint(g, ins[a], outs[b]);
                    out.push(vec![p(0, 0), p(0, 1), p(1, 1)]);
                    out.push(vec![p(0, 0), p(1, 1), p(1, 0)]);
                }
                _ => {}
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField;

    fn fake(grid: Grid, contact: impl Fn(&[f64]) -> bool) -> Solution {
        let u = ScalarField::from_fn(grid.clone(), |x| if contact(x) { 0.0 } else { 1.0 });
        let contact = (0..grid.len()).map(|i| contact(&grid.node(i))).collect();
        Solution {
            u,
            contact,
            residual: 0.0,
            iterations: 0,
            contact_threshold: 0.0,
        }
    }

    #[test]
    fn empty_contact_gives_empty_boundary() {
        let g = Grid::centered_box(2, 1.0, 11).unwrap();
        assert!(free_boundary(&fake(g, |_| false)).is_empty());
    }

    #[test]
    fn line_contact_gives_two_polylines() {
        let g = Grid::centered_box(2, 1.0, 21).unwrap();
        let h = g.spacing(1);
        let fb = free_boundary(&fake(g, |x| x[1].abs() < 1e-12));
        assert_eq!(fb.len(), 2 * 20);
        for v in fb.vertices() {
            assert!((v[1].abs() - h / 2.0).abs() < 1e-12);
        }
        assert!((fb.measure() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_in_three_dimensions() {
        let g = Grid::centered_box(3, 1.0, 21).unwrap();
        let h = g.spacing(0);
        let fb = free_boundary(&fake(g, |x| x.iter().map(|a| a * a).sum::<f64>() <= 0.25));
        assert!(!fb.is_empty());
        for v in fb.vertices() {
            let r = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            assert!((r - 0.5).abs() <= h, "{r}");
        }
        let area = fb.measure();
        // midpoint vertices overestimate the area of a curved surface
        assert!(area > 3.0 && area < 1.3 * std::f64::consts::PI, "{area}");
    }

    #[test]
    fn one_dimensional_points() {
        let g = Grid::centered_box(1, 1.0, 21).unwrap();
        let fb = free_boundary(&fake(g, |x| x[0].abs() <= 0.3 + 1e-12));
        assert_eq!(fb.len(), 2);
        assert!((fb.simplices[0][0][0] + 0.35).abs() < 1e-12);
    }
}
