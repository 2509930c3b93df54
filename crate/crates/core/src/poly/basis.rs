use num_traits::{One, Zero};

use super::{RPoly, Rational};

/// Exponent vectors of total degree `degree` in `dim` variables, lexicographically decreasing.
pub fn homogeneous_monomials(dim: usize, degree: u32) -> Vec<Vec<u32>> {
    fn rec(dim: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == dim {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=left).rev() {
            prefix.push(k);
            rec(dim, left - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if dim == 0 {
        return out;
    }
    rec(dim, degree, &mut Vec::with_capacity(dim), &mut out);
    out
}

/// Basis of the right nullspace of a rational matrix (rows), by exact RREF.
pub fn nullspace(rows: &[Vec<Rational>], cols: usize) -> Vec<Vec<Rational>> {
    let mut m: Vec<Vec<Rational>> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = Rational::one() / &m[r][c];
        for v in m[r].iter_mut() {
            *v = &*v * &inv;
        }
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let d = &f * &m[r][j];
                    m[i][j] -= d;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == m.len() {
            break;
        }
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Rational::zero(); cols];
            v[f] = Rational::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[row][f].clone();
            }
            v
        })
        .collect()
}

/// Basis of harmonic homogeneous polynomials of the given degree, optionally
/// restricted to multiples of `x_{axis+1}` (those vanishing on `{x_{axis+1} = 0}`).
pub fn harmonic_basis(dim: usize, degree: u32, divisible_by: Option<usize>) -> Vec<RPoly> {
    let candidates: Vec<RPoly> = match divisible_by {
        Some(_) if degree == 0 => Vec::new(),
        Some(axis) => homogeneous_monomials(dim, degree - 1)
            .into_iter()
            .map(|e| RPoly::monomial(dim, e, Rational::one()).mul_var(axis))
            .collect(),
        None => homogeneous_monomials(dim, degree)
            .into_iter()
            .map(|e| RPoly::monomial(dim, e, Rational::one()))
            .collect(),
    };
    if degree < 2 {
        return candidates;
    }
    let targets = homogeneous_monomials(dim, degree - 2);
    let laps: Vec<RPoly> = candidates.iter().map(RPoly::laplacian).collect();
    let rows: Vec<Vec<Rational>> = targets
        .iter()
        .map(|t| laps.iter().map(|l| l.coeff(t)).collect())
        .collect();
    nullspace(&rows, candidates.len())
        .into_iter()
        .map(|v| {
            let mut p = RPoly::zero(dim);
            for (c, cand) in v.iter().zip(&candidates) {
                p = &p + &cand.scale(c);
            }
            p
        })
        .collect()
}
