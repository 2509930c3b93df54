//! Sparse multivariate polynomials over exact rationals or doubles.

mod ansatz;
mod basis;
mod json;
mod moments;

use std::collections::BTreeMap;
use std::fmt::{self, Debug};
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub use ansatz::{
    ansatz_square_form, build_ansatz, make_p2, rotational_second_derivative, CubicBlowup, QuadraticBlowup,
    RotationField,
};
pub use basis::{harmonic_basis, homogeneous_monomials, nullspace};
pub use json::{PolyJson, TermJson};
pub use moments::{moment_product_formula, sphere_moment, sphere_moment_poly};

pub type Rational = BigRational;

/// Coefficient field of a [`Poly`].
pub trait Coeff:
    Clone
    + PartialEq
    + Debug
    + Zero
    + One
    + Neg<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
{
    const MODE: &'static str;

    fn from_i64(v: i64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn approx(&self) -> f64;
    /// Exact for rationals; ordinary division for doubles.
    fn divide(&self, other: &Self) -> Self;
    fn to_json_pair(&self) -> (serde_json::Value, serde_json::Value);
    fn from_json_pair(num: &serde_json::Value, den: &serde_json::Value) -> Result<Self>;
}

impl Coeff for Rational {
    const MODE: &'static str = "rational";

    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn approx(&self) -> f64 {
        // numerator and denominator may overflow f64 separately
        match (self.numer().to_f64(), self.denom().to_f64()) {
            (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
            _ => {
                let shift = self.denom().bits().max(self.numer().bits()) as i64 - 60;
                let scaled_n = (self.numer().abs() >> shift.max(0) as usize).to_f64().unwrap();
                let scaled_d = (self.denom() >> shift.max(0) as usize).to_f64().unwrap();
                let v = scaled_n / scaled_d;
                if self.is_negative() {
                    -v
                } else {
                    v
                }
            }
        }
    }

    fn divide(&self, other: &Self) -> Self {
        self / other
    }

    fn to_json_pair(&self) -> (serde_json::Value, serde_json::Value) {
        (
            serde_json::Value::String(self.numer().to_string()),
            serde_json::Value::String(self.denom().to_string()),
        )
    }

    fn from_json_pair(num: &serde_json::Value, den: &serde_json::Value) -> Result<Self> {
        let parse = |v: &serde_json::Value| -> Result<BigInt> {
            match v {
                serde_json::Value::String(s) => s
                    .parse()
                    .map_err(|_| Error::Format(format!("bad integer {s:?}"))),
                serde_json::Value::Number(n) if n.is_i64() => Ok(BigInt::from(n.as_i64().unwrap())),
                other => Err(Error::Format(format!("bad rational component {other}"))),
            }
        };
        let d = parse(den)?;
        if d.is_zero() {
            return Err(Error::Format("zero denominator".into()));
        }
        Ok(Rational::new(parse(num)?, d))
    }
}

impl Coeff for f64 {
    const MODE: &'static str = "double";

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn approx(&self) -> f64 {
        *self
    }

    fn divide(&self, other: &Self) -> Self {
        self / other
    }

    fn to_json_pair(&self) -> (serde_json::Value, serde_json::Value) {
        (serde_json::json!(*self), serde_json::json!(1))
    }

    fn from_json_pair(num: &serde_json::Value, den: &serde_json::Value) -> Result<Self> {
        let n = num
            .as_f64()
            .ok_or_else(|| Error::Format(format!("bad coefficient {num}")))?;
        let d = den
            .as_f64()
            .ok_or_else(|| Error::Format(format!("bad denominator {den}")))?;
        Ok(n / d)
    }
}

/// Polynomial in `dim` variables stored as exponent vector → coefficient.
#[derive(Clone, PartialEq)]
pub struct Poly<C: Coeff> {
    dim: usize,
    terms: BTreeMap<Vec<u32>, C>,
}

pub type RPoly = Poly<Rational>;
pub type FPoly = Poly<f64>;

impl<C: Coeff> Debug for Poly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl<C: Coeff> fmt::Display for Poly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (exps, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c:?})")?;
            for (i, &e) in exps.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "·x{}", i + 1)?,
                    _ => write!(f, "·x{}^{e}", i + 1)?,
                }
            }
        }
        Ok(())
    }
}

impl<C: Coeff> Poly<C> {
    pub fn zero(dim: usize) -> Self {
        Poly {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: C) -> Self {
        Self::monomial(dim, vec![0; dim], c)
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, C::one())
    }

    /// The coordinate `x_{axis+1}` (axes are zero-based).
    pub fn var(dim: usize, axis: usize) -> Self {
        let mut e = vec![0; dim];
        e[axis] = 1;
        Self::monomial(dim, e, C::one())
    }

    pub fn monomial(dim: usize, exps: Vec<u32>, c: C) -> Self {
        assert_eq!(exps.len(), dim, "exponent vector length");
        let mut p = Self::zero(dim);
        if !c.is_zero() {
            p.terms.insert(exps, c);
        }
        p
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (Vec<u32>, C)>) -> Self {
        let mut p = Self::zero(dim);
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &C)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, exps: &[u32]) -> C {
        self.terms.get(exps).cloned().unwrap_or_else(C::zero)
    }

    pub fn add_term(&mut self, exps: Vec<u32>, c: C) {
        assert_eq!(exps.len(), self.dim, "exponent vector length");
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&exps) {
            Some(existing) => {
                let sum = existing.clone() + &c;
                if sum.is_zero() {
                    self.terms.remove(&exps);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(exps, c);
            }
        }
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    /// Lowest total degree present; `None` for the zero polynomial.
    pub fn min_degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).min()
    }

    pub fn homogeneous_part(&self, degree: u32) -> Self {
        Poly {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e.iter().sum::<u32>() == degree)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    /// Terms of total degree `≤ degree`.
    pub fn truncate(&self, degree: u32) -> Self {
        Poly {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e.iter().sum::<u32>() <= degree)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn scale(&self, s: &C) -> Self {
        if s.is_zero() {
            return Self::zero(self.dim);
        }
        Poly {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), c.clone() * s))
                .filter(|(_, c)| !c.is_zero())
                .collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(self.dim);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    pub fn derivative(&self, axis: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            if e[axis] == 0 {
                continue;
            }
            let mut f = e.clone();
            f[axis] -= 1;
            out.add_term(f, c.clone() * &C::from_i64(e[axis] as i64));
        }
        out
    }

    pub fn laplacian(&self) -> Self {
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            for axis in 0..self.dim {
                if e[axis] < 2 {
                    continue;
                }
                let mut f = e.clone();
                f[axis] -= 2;
                let k = (e[axis] * (e[axis] - 1)) as i64;
                out.add_term(f, c.clone() * &C::from_i64(k));
            }
        }
        out
    }

    pub fn gradient(&self) -> Vec<Self> {
        (0..self.dim).map(|a| self.derivative(a)).collect()
    }

    /// `Σ_i v_i ∂_i p` for a polynomial vector field `v`.
    pub fn directional(&self, field: &[Self]) -> Self {
        assert_eq!(field.len(), self.dim, "vector field length");
        let mut out = Self::zero(self.dim);
        for (axis, v) in field.iter().enumerate() {
            out = &out + &(v * &self.derivative(axis));
        }
        out
    }

    /// Exact quotient by `x_{axis+1}`; errors on a nonzero remainder.
    pub fn div_var(&self, axis: usize) -> Result<Self> {
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            if e[axis] == 0 {
                return Err(Error::NotDivisible { variable: axis + 1 });
            }
            let mut f = e.clone();
            f[axis] -= 1;
            out.terms.insert(f, c.clone());
        }
        Ok(out)
    }

    pub fn mul_var(&self, axis: usize) -> Self {
        Poly {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| {
                    let mut f = e.clone();
                    f[axis] += 1;
                    (f, c.clone())
                })
                .collect(),
        }
    }

    /// Restriction to `{x_{axis+1} = 0}` (still a polynomial in `dim` variables).
    pub fn restrict_zero(&self, axis: usize) -> Self {
        Poly {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e[axis] == 0)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    /// `x ↦ p(M x)` for a `dim × dim` matrix given by rows.
    pub fn compose_linear(&self, m: &[Vec<C>]) -> Self {
        assert_eq!(m.len(), self.dim, "matrix rows");
        let images: Vec<Self> = m
            .iter()
            .map(|row| {
                Self::from_terms(
                    self.dim,
                    row.iter().enumerate().map(|(j, c)| {
                        let mut e = vec![0; self.dim];
                        e[j] = 1;
                        (e, c.clone())
                    }),
                )
            })
            .collect();
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            let mut term = Self::constant(self.dim, c.clone());
            for (axis, &k) in e.iter().enumerate() {
                if k > 0 {
                    term = &term * &images[axis].pow(k);
                }
            }
            out = &out + &term;
        }
        out
    }

    /// Same polynomial in `new_dim ≥ dim` variables, placed at `offset..offset+dim`.
    pub fn embed(&self, new_dim: usize, offset: usize) -> Self {
        assert!(offset + self.dim <= new_dim, "embedding does not fit");
        Poly {
            dim: new_dim,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| {
                    let mut f = vec![0; new_dim];
                    f[offset..offset + self.dim].copy_from_slice(e);
                    (f, c.clone())
                })
                .collect(),
        }
    }

    pub fn eval_exact(&self, x: &[C]) -> C {
        let mut acc = C::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (xi, &k) in x.iter().zip(e) {
                for _ in 0..k {
                    t = t * xi;
                }
            }
            acc = acc + &t;
        }
        acc
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                c.approx()
                    * x.iter()
                        .zip(e)
                        .map(|(xi, &k)| xi.powi(k as i32))
                        .product::<f64>()
            })
            .sum()
    }

    pub fn to_f64(&self) -> FPoly {
        Poly {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), c.approx()))
                .filter(|(_, c)| *c != 0.0)
                .collect(),
        }
    }

    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> Poly<D> {
        Poly::from_terms(self.dim, self.terms.iter().map(|(e, c)| (e.clone(), f(c))))
    }

    /// Largest coefficient magnitude (as a double).
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.approx().abs())
            .fold(0.0, f64::max)
    }
}

impl FPoly {
    /// Drops coefficients with magnitude `≤ tol`.
    pub fn chop(&self, tol: f64) -> Self {
        Poly {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.abs() > tol)
                .map(|(e, c)| (e.clone(), *c))
                .collect(),
        }
    }
}

impl<C: Coeff> Add for &Poly<C> {
    type Output = Poly<C>;

    fn add(self, rhs: &Poly<C>) -> Poly<C> {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl<C: Coeff> Sub for &Poly<C> {
    type Output = Poly<C>;

    fn sub(self, rhs: &Poly<C>) -> Poly<C> {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -c.clone());
        }
        out
    }
}

impl<C: Coeff> Mul for &Poly<C> {
    type Output = Poly<C>;

    fn mul(self, rhs: &Poly<C>) -> Poly<C> {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let mut out = Poly::zero(self.dim);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1.clone() * c2);
            }
        }
        out
    }
}

impl<C: Coeff> Neg for &Poly<C> {
    type Output = Poly<C>;

    fn neg(self) -> Poly<C> {
        Poly {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), -c.clone()))
                .collect(),
        }
    }
}

impl<C: Coeff> Add for Poly<C> {
    type Output = Poly<C>;
    fn add(self, rhs: Poly<C>) -> Poly<C> {
        &self + &rhs
    }
}

impl<C: Coeff> Sub for Poly<C> {
    type Output = Poly<C>;
    fn sub(self, rhs: Poly<C>) -> Poly<C> {
        &self - &rhs
    }
}

impl<C: Coeff> Mul for Poly<C> {
    type Output = Poly<C>;
    fn mul(self, rhs: Poly<C>) -> Poly<C> {
        &self * &rhs
    }
}

/// Polynomial with cached derivatives, usable as a sampled field.
#[derive(Clone, Debug)]
pub struct PolyField {
    p: FPoly,
    grad: Vec<FPoly>,
    lap: FPoly,
}

impl PolyField {
    pub fn new<C: Coeff>(p: &Poly<C>) -> Self {
        let p = p.to_f64();
        PolyField {
            grad: p.gradient(),
            lap: p.laplacian(),
            p,
        }
    }

    pub fn poly(&self) -> &FPoly {
        &self.p
    }
}

impl crate::field::Evaluable for PolyField {
    fn dim(&self) -> usize {
        self.p.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.p.eval(x)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for (o, g) in out.iter_mut().zip(&self.grad) {
            *o = g.eval(x);
        }
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        self.lap.eval(x)
    }
}

/// Shorthand for a rational `num/den`.
pub fn q(num: i64, den: i64) -> Rational {
    Rational::from_ratio(num, den)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(dim: usize, i: usize) -> RPoly {
        RPoly::var(dim, i)
    }

    #[test]
    fn laplacian_examples() {
        let half = RPoly::constant(2, q(1, 2));
        let p = &half * &(&x(2, 1) * &x(2, 1));
        assert_eq!(p.laplacian(), RPoly::one(2));

        let cubic = &(&(&x(2, 0) * &x(2, 0)) * &x(2, 1))
            - &x(2, 1).pow(3).scale(&q(1, 3));
        assert!(cubic.laplacian().is_zero());

        let r2 = (0..3).fold(RPoly::zero(3), |acc, i| &acc + &x(3, i).pow(2));
        assert_eq!(r2.laplacian(), RPoly::constant(3, q(6, 1)));
    }

    #[test]
    fn no_zero_coefficients_are_stored() {
        let p = &x(2, 0) - &x(2, 0);
        assert!(p.is_zero());
        assert_eq!(p.degree(), None);
        let s = x(3, 2).scale(&q(0, 1));
        assert_eq!(s.len(), 0);
    }

    #[test]
    fn exact_division() {
        let p = &x(2, 1).pow(3) + &(&x(2, 0) * &x(2, 1));
        let quo = p.div_var(1).unwrap();
        assert_eq!(quo.mul_var(1), p);
        assert!(matches!(
            (&p + &x(2, 0)).div_var(1),
            Err(Error::NotDivisible { variable: 2 })
        ));
    }

    #[test]
    fn composition_with_rotation() {
        // p = x1 x2 under the swap (x1, x2) -> (x2, x1) is unchanged
        let p = &x(2, 0) * &x(2, 1);
        let swap = vec![vec![q(0, 1), q(1, 1)], vec![q(1, 1), q(0, 1)]];
        assert_eq!(p.compose_linear(&swap), p);
        // x1^2 under x1 -> x1 + x2
        let shear = vec![vec![q(1, 1), q(1, 1)], vec![q(0, 1), q(1, 1)]];
        let img = x(2, 0).pow(2).compose_linear(&shear);
        assert_eq!(img.coeff(&[1, 1]), q(2, 1));
        assert_eq!(img.coeff(&[0, 2]), q(1, 1));
    }

    #[test]
    fn evaluation_agrees_between_modes() {
        let p = &(&x(3, 0).pow(2) * &x(3, 2)).scale(&q(7, 3)) - &x(3, 1);
        let pt = [q(1, 2), q(-2, 3), q(5, 4)];
        let exact = p.eval_exact(&pt).approx();
        let approx = p.to_f64().eval(&[0.5, -2.0 / 3.0, 1.25]);
        assert!((exact - approx).abs() < 1e-14);
    }

    #[test]
    fn huge_rationals_convert() {
        let big = Rational::new(BigInt::from(10).pow(400) * 3, BigInt::from(10).pow(400));
        assert!((big.approx() - 3.0).abs() < 1e-12);
    }
}
