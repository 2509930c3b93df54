//! Quadratic and cubic blow-ups, rotation fields and the fourth-order ansatz.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{Coeff, FPoly, Poly};
use crate::error::{Error, Result};

const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-12;
const KERNEL_TOL: f64 = 1e-9;

/// `p₂(x) = ½ x·Ax` with `tr A = 1`, `A ⪰ 0`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct QuadraticBlowup {
    matrix: Vec<Vec<f64>>,
    kernel_dim: usize,
    /// Ascending.
    eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, ordered like `eigenvalues`.
    frame: Vec<Vec<f64>>,
}

/// Validates `A` and builds `p₂`.
pub fn make_p2(a: &DMatrix<f64>) -> Result<QuadraticBlowup> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::InvalidArgument("p2 matrix must be square".into()));
    }
    for i in 0..n {
        for j in 0..i {
            if (a[(i, j)] - a[(j, i)]).abs() > TRACE_TOL {
                return Err(Error::InvalidArgument("p2 matrix must be symmetric".into()));
            }
        }
    }
    let tr = a.trace();
    if (tr - 1.0).abs() > TRACE_TOL {
        return Err(Error::InvalidArgument(format!(
            "p2 matrix must have trace 1 (got {tr})"
        )));
    }
    let eig = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if eigenvalues[0] < -PSD_TOL {
        return Err(Error::InvalidArgument(format!(
            "p2 matrix has negative eigenvalue {}",
            eigenvalues[0]
        )));
    }
    let kernel_dim = eigenvalues.iter().filter(|&&l| l.abs() <= KERNEL_TOL).count();
    let mut frame = vec![vec![0.0; n]; n];
    for (col, &i) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(i);
        // sign: largest component positive, earliest index on ties
        let mut best = 0;
        for k in 1..n {
            if v[k].abs() > v[best].abs() + 1e-12 {
                best = k;
            }
        }
        let s = if v[best] < 0.0 { -1.0 } else { 1.0 };
        for k in 0..n {
            frame[k][col] = s * v[k];
        }
    }
    Ok(QuadraticBlowup {
        matrix: (0..n).map(|i| (0..n).map(|j| a[(i, j)]).collect()).collect(),
        kernel_dim,
        eigenvalues,
        frame,
    })
}

impl QuadraticBlowup {
    /// `½x_n²`, the top-stratum normal form.
    pub fn standard(dim: usize) -> Self {
        let mut a = DMatrix::zeros(dim, dim);
        a[(dim - 1, dim - 1)] = 1.0;
        make_p2(&a).expect("diag(0,…,0,1) is valid")
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.matrix[i][j])
    }

    pub fn kernel_dim(&self) -> usize {
        self.kernel_dim
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthogonal `R` with `p₂(R y) = ½ Σ λ_i y_i²`, eigenvalues ascending; for
    /// `m = n−1` this is the frame where `p₂ = ½y_n²`.
    pub fn frame(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.frame[i][j])
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (i, row) in self.matrix.iter().enumerate() {
            for (j, a) in row.iter().enumerate() {
                acc += a * x[i] * x[j];
            }
        }
        0.5 * acc
    }

    pub fn poly(&self) -> FPoly {
        let n = self.dim();
        let mut p = FPoly::zero(n);
        for i in 0..n {
            for j in 0..n {
                let mut e = vec![0; n];
                e[i] += 1;
                e[j] += 1;
                p.add_term(e, 0.5 * self.matrix[i][j]);
            }
        }
        p
    }
}

/// `p₃ = Σ_α (a_α/2) x_α² x_n + (a_n/6) x_n³` with `Σ_α a_α = −a_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct CubicBlowup<C: Coeff> {
    a: Vec<C>,
}

impl<C: Coeff> CubicBlowup<C> {
    /// From the tangential coefficients `a_1..a_{n−1}`; `a_n` is implied.
    pub fn new(tangential: Vec<C>) -> Self {
        let mut an = C::zero();
        for a in &tangential {
            an = an - a;
        }
        let mut a = tangential;
        a.push(an);
        CubicBlowup { a }
    }

    pub fn zero(dim: usize) -> Self {
        CubicBlowup::new(vec![C::zero(); dim - 1])
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// `a_1..a_n`.
    pub fn coefficients(&self) -> &[C] {
        &self.a
    }

    pub fn normal_coefficient(&self) -> &C {
        self.a.last().expect("nonempty")
    }

    pub fn poly(&self) -> Poly<C> {
        let n = self.dim();
        let mut p = Poly::zero(n);
        for (alpha, a) in self.a[..n - 1].iter().enumerate() {
            let mut e = vec![0; n];
            e[alpha] = 2;
            e[n - 1] = 1;
            p.add_term(e, a.divide(&C::from_i64(2)));
        }
        let mut e = vec![0; n];
        e[n - 1] = 3;
        p.add_term(e, self.normal_coefficient().divide(&C::from_i64(6)));
        p
    }

    /// `Q = Σ_α (a_α² − a_α a_n/3)(x_n³/12 − x_α² x_n/2)`.
    pub fn correction_q(&self) -> Poly<C> {
        let n = self.dim();
        let an = self.normal_coefficient();
        let mut p = Poly::zero(n);
        for (alpha, a) in self.a[..n - 1].iter().enumerate() {
            let w = a.clone() * a - &(a.clone() * an).divide(&C::from_i64(3));
            let mut e = vec![0; n];
            e[n - 1] = 3;
            p.add_term(e, w.divide(&C::from_i64(12)));
            let mut e = vec![0; n];
            e[alpha] = 2;
            e[n - 1] = 1;
            p.add_term(e, -w.divide(&C::from_i64(2)));
        }
        p
    }
}

/// `X_α = (1 + a_α x_n) e_α − a_α x_α e_n`.
#[derive(Clone, Debug)]
pub struct RotationField<C: Coeff> {
    alpha: usize,
    a: C,
    components: Vec<Poly<C>>,
}

impl<C: Coeff> RotationField<C> {
    /// `alpha` is zero-based and must be a tangential index `< dim − 1`.
    pub fn new(dim: usize, alpha: usize, a: C) -> Self {
        assert!(alpha + 1 < dim, "rotation index must be tangential");
        let mut components = vec![Poly::zero(dim); dim];
        components[alpha] =
            &Poly::one(dim) + &Poly::var(dim, dim - 1).scale(&a);
        components[dim - 1] = Poly::var(dim, alpha).scale(&-a.clone());
        RotationField {
            alpha,
            a,
            components,
        }
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn coefficient(&self) -> &C {
        &self.a
    }

    pub fn components(&self) -> &[Poly<C>] {
        &self.components
    }

    /// `X·∇p`.
    pub fn apply(&self, p: &Poly<C>) -> Poly<C> {
        p.directional(&self.components)
    }

    pub fn divergence(&self) -> Poly<C> {
        let n = self.components.len();
        let mut d = Poly::zero(n);
        for (axis, c) in self.components.iter().enumerate() {
            d = &d + &c.derivative(axis);
        }
        d
    }
}

/// `X(X p)`.
pub fn rotational_second_derivative<C: Coeff>(p: &Poly<C>, x: &RotationField<C>) -> Poly<C> {
    x.apply(&x.apply(p))
}

/// `𝒫 = ½x_n² + p₃ + ½(p₃/x_n)² + x_n Q` in the frame where `p₂ = ½x_n²`.
pub fn build_ansatz<C: Coeff>(p2: &QuadraticBlowup, p3: &CubicBlowup<C>) -> Result<Poly<C>> {
    let n = p3.dim();
    if p2.dim() != n {
        return Err(Error::InvalidArgument(format!(
            "p2 has dimension {}, p3 has {n}",
            p2.dim()
        )));
    }
    if p2.kernel_dim() != n - 1 {
        return Err(Error::InvalidArgument(format!(
            "ansatz needs kernel dimension {} (got {})",
            n - 1,
            p2.kernel_dim()
        )));
    }
    let xn = Poly::var(n, n - 1);
    let half = C::from_ratio(1, 2);
    let cubic = p3.poly();
    let quotient = cubic.div_var(n - 1)?;
    let mut p = (&xn * &xn).scale(&half);
    p = &p + &cubic;
    p = &p + &(&quotient * &quotient).scale(&half);
    p = &p + &p3.correction_q().mul_var(n - 1);
    Ok(p)
}

/// `½(x_n + p₃/x_n + Q)²`, which agrees with the ansatz up to degree 4.
pub fn ansatz_square_form<C: Coeff>(p3: &CubicBlowup<C>) -> Result<Poly<C>> {
    let n = p3.dim();
    let inner = &(&Poly::var(n, n - 1) + &p3.poly().div_var(n - 1)?) + &p3.correction_q();
    Ok((&inner * &inner).scale(&C::from_ratio(1, 2)))
}
