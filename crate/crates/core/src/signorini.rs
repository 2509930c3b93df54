//! Homogeneous solutions of the thin-obstacle (Signorini) problem.
//!
//! A solution is stored as `q(x) = E(x', |x_n|) + O(x)` where `E` is the even
//! part written as a polynomial in `(x', s)` with `s = |x_n|`, and `O` is a
//! harmonic polynomial odd in `x_n`. The half-integer 2D solutions are not
//! polynomial and are kept as `c·ρ^λ cos(λθ)` in the `(x_{n-1}, |x_n|)` plane.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_traits::One;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::field::{sphere_integral, unit_sphere_area, Evaluable, QuadratureRule};
use crate::poly::{sphere_moment_poly, Coeff, FPoly, RPoly, Rational};

const SAMPLE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    TwoDimensional,
    #[serde(rename = "qA")]
    QA,
    SymmetrizedQ,
    Custom,
}

#[derive(Clone, Debug)]
enum Repr {
    Poly {
        even: RPoly,
        odd: RPoly,
        even_f: FPoly,
        odd_f: FPoly,
        even_grad: Vec<FPoly>,
        odd_grad: Vec<FPoly>,
    },
    /// `c ρ^λ cos(λθ)` in the plane of the last two coordinates.
    HalfInteger { c: f64 },
}

#[derive(Clone, Debug)]
pub struct SignoriniSolution {
    dim: usize,
    lambda: f64,
    family: Family,
    scale: f64,
    repr: Repr,
}

/// Outcome of the sampled/exact invariant suite.
#[derive(Clone, Debug, Serialize)]
pub struct InvariantReport {
    pub harmonic_off_plane: bool,
    pub nonnegative_on_plane: bool,
    pub jump_nonpositive: bool,
    pub complementarity: bool,
    pub min_on_plane: f64,
    pub max_jump: f64,
    pub max_complementarity: f64,
}

impl InvariantReport {
    pub fn all(&self) -> bool {
        self.harmonic_off_plane
            && self.nonnegative_on_plane
            && self.jump_nonpositive
            && self.complementarity
    }
}

fn is_admissible(lambda: f64) -> Option<bool> {
    // Some(true) for integers, Some(false) for 3/2 + 2k
    if lambda >= 1.0 && lambda.fract() == 0.0 {
        return Some(true);
    }
    let t = lambda - 1.5;
    if t >= 0.0 && (t / 2.0).fract() == 0.0 {
        return Some(false);
    }
    None
}

/// Real and imaginary parts of `(a + i b)^k` as polynomials in `(b, a)`,
/// i.e. variable 0 is `b` and variable 1 is `a`.
fn complex_power(k: u32) -> (RPoly, RPoly) {
    let mut re = RPoly::zero(2);
    let mut im = RPoly::zero(2);
    let mut binom = Rational::one();
    for j in 0..=k {
        // C(k,j) a^{k-j} (i b)^j
        let c = binom.clone();
        let e = vec![j, k - j];
        match j % 4 {
            0 => re.add_term(e, c),
            1 => im.add_term(e, c),
            2 => re.add_term(e, -c),
            _ => im.add_term(e, -c),
        }
        binom = binom * Rational::from_i64((k - j) as i64) / Rational::from_i64(j as i64 + 1);
    }
    (re, im)
}

impl SignoriniSolution {
    fn from_polys(dim: usize, lambda: f64, family: Family, even: RPoly, odd: RPoly) -> Self {
        let even_f = even.to_f64();
        let odd_f = odd.to_f64();
        SignoriniSolution {
            dim,
            lambda,
            family,
            scale: 1.0,
            repr: Repr::Poly {
                even_grad: even_f.gradient(),
                odd_grad: odd_f.gradient(),
                even,
                odd,
                even_f,
                odd_f,
            },
        }
    }

    /// A custom polynomial solution; invariants are not assumed.
    pub fn custom(lambda: f64, even: RPoly, odd: RPoly) -> Result<Self> {
        if even.dim() != odd.dim() {
            return Err(Error::InvalidArgument("even/odd parts differ in dimension".into()));
        }
        Ok(Self::from_polys(even.dim(), lambda, Family::Custom, even, odd))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn with_scale(mut self, s: f64) -> Self {
        self.scale *= s;
        self
    }

    /// Even part as a polynomial in `(x', s)`, `s = |x_n|`.
    pub fn even_part(&self) -> Option<&RPoly> {
        match &self.repr {
            Repr::Poly { even, .. } => Some(even),
            Repr::HalfInteger { .. } => None,
        }
    }

    pub fn odd_part(&self) -> Option<&RPoly> {
        match &self.repr {
            Repr::Poly { odd, .. } => Some(odd),
            Repr::HalfInteger { .. } => None,
        }
    }

    pub fn is_odd_integer(&self) -> bool {
        self.lambda.fract() == 0.0 && (self.lambda as i64) % 2 == 1
    }

    /// The even part continued by `s ↦ x_n`; for odd `λ` this is the odd
    /// reflection of `q|_{x_n>0}`, a global harmonic polynomial.
    pub fn odd_extension(&self) -> Option<RPoly> {
        if !self.is_odd_integer() {
            return None;
        }
        self.even_part().cloned()
    }

    /// Lifts a solution to `new_dim` variables, keeping the last axis normal.
    pub fn embed(&self, new_dim: usize) -> Self {
        assert!(new_dim >= self.dim);
        match &self.repr {
            Repr::Poly { even, odd, .. } => {
                let off = new_dim - self.dim;
                let mut s = Self::from_polys(
                    new_dim,
                    self.lambda,
                    self.family.clone(),
                    even.embed(new_dim, off),
                    odd.embed(new_dim, off),
                );
                s.scale = self.scale;
                s
            }
            Repr::HalfInteger { .. } => {
                let mut s = self.clone();
                s.dim = new_dim;
                s
            }
        }
    }

    /// `(value on the plane, 2∂_{x_n} q(x', 0⁺))` at a tangential point.
    fn plane_data(&self, xp: &[f64]) -> (f64, f64) {
        let n = self.dim;
        let mut x = xp.to_vec();
        x.push(0.0);
        match &self.repr {
            Repr::Poly {
                even_f, even_grad, ..
            } => (
                self.scale * even_f.eval(&x),
                2.0 * self.scale * even_grad[n - 1].eval(&x),
            ),
            Repr::HalfInteger { c } => {
                let y = xp[n - 2];
                let lambda = self.lambda;
                let rho = y.abs();
                let theta = if y >= 0.0 { 0.0 } else { PI };
                let value = c * rho.powf(lambda) * (lambda * theta).cos();
                // ∂_s f = −cλρ^{λ−1} sin((λ−1)θ)
                let ds = -c * lambda * rho.powf(lambda - 1.0) * ((lambda - 1.0) * theta).sin();
                (self.scale * value, 2.0 * self.scale * ds)
            }
        }
    }

    fn plane_samples(&self) -> Vec<Vec<f64>> {
        let m = self.dim - 1;
        match m {
            1 => vec![vec![1.0], vec![-1.0], vec![0.5], vec![-0.25]],
            2 => (0..256)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / 256.0;
                    vec![t.cos(), t.sin()]
                })
                .collect(),
            _ => {
                // Fibonacci-like directions on S^{m-1}, padded with axes
                let mut out = Vec::new();
                let golden = (1.0 + 5f64.sqrt()) / 2.0;
                for k in 0..512 {
                    let mut v: Vec<f64> = (0..m)
                        .map(|j| {
                            let t = (k as f64 + 0.5) * golden.powi(j as i32 + 1);
                            (2.0 * PI * t.fract()).sin()
                        })
                        .collect();
                    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                    if norm > 1e-6 {
                        v.iter_mut().for_each(|a| *a /= norm);
                        out.push(v);
                    }
                }
                for j in 0..m {
                    let mut e = vec![0.0; m];
                    e[j] = 1.0;
                    out.push(e.clone());
                    e[j] = -1.0;
                    out.push(e);
                }
                out
            }
        }
    }

    pub fn check_invariants(&self) -> InvariantReport {
        let harmonic = match &self.repr {
            Repr::Poly { even, odd, .. } => even.laplacian().is_zero() && odd.laplacian().is_zero(),
            Repr::HalfInteger { c } => {
                // f_ρρ + f_ρ/ρ + f_θθ/ρ² at sampled angles, ρ = 1
                let l = self.lambda;
                (0..=64).all(|k| {
                    let th = PI * k as f64 / 64.0;
                    let v = c * (l * (l - 1.0) + l - l * l) * (l * th).cos();
                    v.abs() <= SAMPLE_TOL
                })
            }
        };
        let mut min_on_plane = f64::INFINITY;
        let mut max_jump = f64::NEG_INFINITY;
        let mut max_comp: f64 = 0.0;
        for xp in self.plane_samples() {
            let (v, jump) = self.plane_data(&xp);
            min_on_plane = min_on_plane.min(v);
            max_jump = max_jump.max(jump);
            max_comp = max_comp.max((v * jump).abs());
        }
        InvariantReport {
            harmonic_off_plane: harmonic,
            nonnegative_on_plane: min_on_plane >= -SAMPLE_TOL,
            jump_nonpositive: max_jump <= SAMPLE_TOL,
            complementarity: max_comp <= SAMPLE_TOL,
            min_on_plane,
            max_jump,
            max_complementarity: max_comp,
        }
    }

    /// JSON catalog entry `{lambda, family, coefficients}`.
    pub fn to_json(&self) -> Value {
        let coefficients = match &self.repr {
            Repr::Poly { even, odd, .. } => json!({
                "even": even.to_json(),
                "odd": odd.to_json(),
                "scale": self.scale,
            }),
            Repr::HalfInteger { c } => json!({ "c": c * self.scale }),
        };
        json!({
            "dim": self.dim,
            "lambda": self.lambda,
            "family": self.family,
            "coefficients": coefficients,
        })
    }
}

impl Evaluable for SignoriniSolution {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        let n = self.dim;
        match &self.repr {
            Repr::Poly { even_f, odd_f, .. } => {
                let mut y = x.to_vec();
                y[n - 1] = y[n - 1].abs();
                self.scale * (even_f.eval(&y) + odd_f.eval(x))
            }
            Repr::HalfInteger { c } => {
                let (y, s) = (x[n - 2], x[n - 1].abs());
                let rho = y.hypot(s);
                if rho == 0.0 {
                    return 0.0;
                }
                let theta = s.atan2(y);
                self.scale * c * rho.powf(self.lambda) * (self.lambda * theta).cos()
            }
        }
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim;
        let sign = if x[n - 1] < 0.0 { -1.0 } else { 1.0 };
        match &self.repr {
            Repr::Poly {
                even_grad,
                odd_grad,
                ..
            } => {
                let mut y = x.to_vec();
                y[n - 1] = y[n - 1].abs();
                for a in 0..n {
                    let e = even_grad[a].eval(&y) * if a == n - 1 { sign } else { 1.0 };
                    out[a] = self.scale * (e + odd_grad[a].eval(x));
                }
            }
            Repr::HalfInteger { c } => {
                out.iter_mut().for_each(|v| *v = 0.0);
                let (y, s) = (x[n - 2], x[n - 1].abs());
                let rho = y.hypot(s);
                if rho == 0.0 {
                    return;
                }
                let theta = s.atan2(y);
                let l = self.lambda;
                let k = self.scale * c * l * rho.powf(l - 1.0);
                out[n - 2] = k * ((l - 1.0) * theta).cos();
                out[n - 1] = -k * ((l - 1.0) * theta).sin() * sign;
            }
        }
    }

    fn laplacian(&self, _x: &[f64]) -> f64 {
        // harmonic off the hyperplane
        0.0
    }
}

/// The 2D homogeneous solutions.
///
/// Integer `λ`: odd `λ` gives `−c·i^{1−λ}Re(|x_2| + i x_1)^λ + b·Re(x_2 + i x_1)^λ`,
/// even `λ` gives `c·i^λ Re(x_2 + i x_1)^λ + b·Im(x_2 + i x_1)^λ`.
/// Half-integer `λ ∈ {3/2, 7/2, …}`: `c ρ^λ cos(λθ)` with `θ ∈ [0, π]` the angle
/// from the positive `x_1` axis measured with `|x_2|`.
pub fn signorini_2d(lambda: f64, c: f64, b: f64) -> Result<SignoriniSolution> {
    if c < 0.0 {
        return Err(Error::InvalidArgument("c must be nonnegative".into()));
    }
    match is_admissible(lambda) {
        None => Err(Error::InadmissibleHomogeneity { lambda }),
        Some(false) => {
            if b != 0.0 {
                return Err(Error::InvalidArgument(
                    "half-integer homogeneities have no b-term".into(),
                ));
            }
            Ok(SignoriniSolution {
                dim: 2,
                lambda,
                family: Family::TwoDimensional,
                scale: 1.0,
                repr: Repr::HalfInteger { c },
            })
        }
        Some(true) => {
            let k = lambda as u32;
            let (re, im) = complex_power(k);
            let cq = Rational::from_float(c).expect("finite c");
            let bq = Rational::from_float(b).expect("finite b");
            let (even, odd) = if k % 2 == 1 {
                // i^{1−λ} = (−1)^{(1−λ)/2}
                let sign = if ((k - 1) / 2).is_multiple_of(2) { -1 } else { 1 };
                (
                    re.scale(&(cq * Rational::from_i64(sign))),
                    re.scale(&bq),
                )
            } else {
                let sign = if (k / 2).is_multiple_of(2) { 1 } else { -1 };
                (re.scale(&(cq * Rational::from_i64(sign))), im.scale(&bq))
            };
            Ok(SignoriniSolution::from_polys(
                2,
                lambda,
                Family::TwoDimensional,
                even,
                odd,
            ))
        }
    }
}

fn check_psd(a: &DMatrix<f64>) -> Result<()> {
    let m = a.nrows();
    if a.ncols() != m {
        return Err(Error::InvalidArgument("matrix must be square".into()));
    }
    for i in 0..m {
        for j in 0..i {
            if (a[(i, j)] - a[(j, i)]).abs() > 1e-12 {
                return Err(Error::InvalidArgument("matrix must be symmetric".into()));
            }
        }
    }
    if m > 0 {
        let min = SymmetricEigen::new(a.clone()).eigenvalues.min();
        if min < -1e-12 {
            return Err(Error::InvalidArgument(format!(
                "matrix has negative eigenvalue {min}"
            )));
        }
    }
    Ok(())
}

/// Even part of `q_A` as a rational polynomial in `(x', s)`.
fn qa_even_poly(a: &[Vec<Rational>]) -> RPoly {
    let m = a.len();
    let n = m + 1;
    let s = RPoly::var(n, m);
    let tr: Rational = (0..m).map(|i| a[i][i].clone()).sum();
    let mut quad = RPoly::zero(n);
    for i in 0..m {
        for j in 0..m {
            let mut e = vec![0; n];
            e[i] += 1;
            e[j] += 1;
            quad.add_term(e, a[i][j].clone());
        }
    }
    let inner = &(&s * &s).scale(&(tr / Rational::from_i64(3))) - &quad;
    &s * &inner
}

/// `q_A(x) = |x_n|((tr A)/3·x_n² − x'·Ax')` for a PSD `(n−1)×(n−1)` matrix.
pub fn make_qa(a: &DMatrix<f64>) -> Result<SignoriniSolution> {
    check_psd(a)?;
    let m = a.nrows();
    let rows: Vec<Vec<Rational>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    // symmetrize exactly
                    let v = 0.5 * (a[(i, j)] + a[(j, i)]);
                    Rational::from_float(v).expect("finite matrix entry")
                })
                .collect()
        })
        .collect();
    Ok(make_qa_exact(&rows))
}

/// `q_A` with an exact rational matrix (no PSD check).
pub fn make_qa_exact(a: &[Vec<Rational>]) -> SignoriniSolution {
    let n = a.len() + 1;
    SignoriniSolution::from_polys(n, 3.0, Family::QA, qa_even_poly(a), RPoly::zero(n))
}

/// `∫_{∂B_ρ} q_A q_Ā = 2ρ^{n+5}|∂B_1|/(n(n+2)(n+4))·(tr(AĀ) + ⅓ tr A tr Ā)`.
pub fn inner_qa(a: &DMatrix<f64>, abar: &DMatrix<f64>, rho: f64) -> Result<f64> {
    if a.shape() != abar.shape() || a.nrows() != a.ncols() {
        return Err(Error::InvalidArgument("matrices must be square and equal-sized".into()));
    }
    let n = (a.nrows() + 1) as f64;
    let bracket = (a * abar).trace() + a.trace() * abar.trace() / 3.0;
    let area = unit_sphere_area(a.nrows() + 1);
    Ok(2.0 * rho.powf(n + 5.0) * area / (n * (n + 2.0) * (n + 4.0)) * bracket)
}

/// `T[q] = q₀` where `q = −|x_n|(q₀(x') + x_n² q₁)`.
pub fn trace_t(q: &SignoriniSolution) -> Result<RPoly> {
    if !q.is_odd_integer() {
        return Err(Error::InvalidArgument(
            "trace operator needs an odd integer homogeneity".into(),
        ));
    }
    let even = q.even_part().expect("integer homogeneity is polynomial");
    let n = q.dim();
    let q0 = -&even.div_var(n - 1)?.restrict_zero(n - 1);
    let q0 = if q.scale() == 1.0 {
        q0
    } else {
        q0.scale(&Rational::from_float(q.scale()).expect("finite scale"))
    };
    let q0f = q0.to_f64();
    for xp in q.plane_samples() {
        let mut x = xp.clone();
        x.push(0.0);
        let v = q0f.eval(&x);
        if v < -SAMPLE_TOL {
            return Err(Error::InvalidArgument(format!(
                "trace is negative ({v:e}) at {xp:?}"
            )));
        }
    }
    Ok(q0)
}

/// The symmetrized odd-`λ` solution `Q = Σ_k a_k |x'|^{λ−1−2k} |x_n|^{1+2k}`.
#[derive(Clone, Debug)]
pub struct SymmetrizedQ {
    pub lambda: u32,
    pub dim: usize,
    /// `a_0 = −1` before normalization.
    pub coefficients: Vec<Rational>,
    /// Multiplier giving unit `L²(∂B_1)` norm.
    pub normalization: f64,
}

impl SymmetrizedQ {
    pub fn even_poly(&self) -> RPoly {
        let n = self.dim;
        let mut r2 = RPoly::zero(n);
        for i in 0..n - 1 {
            r2 = &r2 + &RPoly::var(n, i).pow(2);
        }
        let s = RPoly::var(n, n - 1);
        let mut p = RPoly::zero(n);
        for (k, a) in self.coefficients.iter().enumerate() {
            let tangential = r2.pow((self.lambda - 1) / 2 - k as u32);
            let normal = s.pow(1 + 2 * k as u32);
            p = &p + &(&tangential * &normal).scale(a);
        }
        p
    }

    /// Normalized solution.
    pub fn solution(&self) -> SignoriniSolution {
        SignoriniSolution::from_polys(
            self.dim,
            self.lambda as f64,
            Family::SymmetrizedQ,
            self.even_poly(),
            RPoly::zero(self.dim),
        )
        .with_scale(self.normalization)
    }

    /// Normalized coefficients as doubles.
    pub fn normalized(&self) -> Vec<f64> {
        self.coefficients
            .iter()
            .map(|a| a.approx() * self.normalization)
            .collect()
    }
}

/// Solves `a_j(λ−1−2j)(λ−4−2j+n) + a_{j+1}(3+2j)(2+2j) = 0` from `a_0 = −1`.
pub fn symmetrized_q(lambda: u32, dim: usize) -> Result<SymmetrizedQ> {
    if lambda < 3 || lambda.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "symmetrized solution needs odd λ ≥ 3, got {lambda}"
        )));
    }
    if dim < 2 {
        return Err(Error::InvalidArgument("dimension must be at least 2".into()));
    }
    let l = lambda as i64;
    let n = dim as i64;
    let mut a = vec![-Rational::one()];
    for j in 0..(l - 1) / 2 {
        let num = (l - 1 - 2 * j) * (l - 4 - 2 * j + n);
        let den = (3 + 2 * j) * (2 + 2 * j);
        let next = -a[j as usize].clone() * Rational::from_ratio(num, den);
        a.push(next);
    }
    let mut q = SymmetrizedQ {
        lambda,
        dim,
        coefficients: a,
        normalization: 1.0,
    };
    let e = q.even_poly();
    // |x_n|^{odd}·|x_n|^{odd} is an even power, so the square is polynomial
    let m = sphere_moment_poly(&(&e * &e)).approx() * unit_sphere_area(dim);
    q.normalization = 1.0 / m.sqrt();
    Ok(q)
}

/// `∫_{∂B_1} p q` by exact moments when the product is polynomial.
pub fn exact_sphere_inner(p: &SignoriniSolution, q: &SignoriniSolution) -> Option<f64> {
    let (pe, po) = (p.even_part()?, p.odd_part()?);
    let (qe, qo) = (q.even_part()?, q.odd_part()?);
    let n = p.dim();
    let parity_ok = |poly: &RPoly| poly.terms().all(|(e, _)| e[n - 1] % 2 == 0);
    // even·even: depends on |x_n| powers; mixed even·odd integrates to zero
    let ee = pe * qe;
    if !parity_ok(&ee) {
        return None;
    }
    let oo = po * qo;
    let total = sphere_moment_poly(&ee) + sphere_moment_poly(&oo);
    Some(total.approx() * unit_sphere_area(n) * p.scale() * q.scale())
}

/// Finite-difference report for `r ↦ r^{−λ}∫_{∂B_1} u(r·) q`.
#[derive(Clone, Debug, Serialize)]
pub struct OddFrequencyReport {
    pub lambda: f64,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub derivatives: Vec<f64>,
    pub min_derivative: f64,
}

pub fn odd_frequency_monotone_check<E: Evaluable + ?Sized>(
    u: &E,
    q: &SignoriniSolution,
    lambda: f64,
    radii: &[f64],
    rule: &QuadratureRule,
) -> Result<OddFrequencyReport> {
    if !q.is_odd_integer() {
        return Err(Error::InvalidArgument(
            "reference solution must have odd integer homogeneity".into(),
        ));
    }
    if radii.len() < 2 || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("radii must be increasing, at least two".into()));
    }
    let n = q.dim();
    let origin = vec![0.0; n];
    let mut values = Vec::with_capacity(radii.len());
    for &r in radii {
        u.check_ball(&origin, r)?;
        let integral = rule.apply(&origin, 1.0, |x| {
            let y: Vec<f64> = x.iter().map(|c| r * c).collect();
            u.value(&y) * q.value(x)
        });
        values.push(integral / r.powf(lambda));
    }
    let derivatives: Vec<f64> = values
        .windows(2)
        .zip(radii.windows(2))
        .map(|(v, r)| (v[1] - v[0]) / (r[1] - r[0]))
        .collect();
    let min_derivative = derivatives.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(OddFrequencyReport {
        lambda,
        radii: radii.to_vec(),
        values,
        derivatives,
        min_derivative,
    })
}

/// `ψ = ∫_{∂B_1} w q_A − 2∫_{∂B_{1/2}} w q_A` for an already rescaled `w`.
pub fn psi_functional<E: Evaluable + ?Sized>(
    w: &E,
    qa: &SignoriniSolution,
    rule: &QuadratureRule,
) -> Result<f64> {
    let n = qa.dim();
    let origin = vec![0.0; n];
    let product = crate::field::FnField::new(n, |x: &[f64]| w.value(x) * qa.value(x));
    w.check_ball(&origin, 1.0)?;
    let outer = sphere_integral(&product, &origin, 1.0, rule)?;
    let inner = sphere_integral(&product, &origin, 0.5, rule)?;
    Ok(outer - 2.0 * inner)
}

/// Catalog of 2D elements with `λ ≤ max_lambda` plus `q_Id` and the
/// symmetrized cubic in dimension `dim`.
pub fn catalog(dim: usize, max_lambda: u32) -> Vec<SignoriniSolution> {
    let mut out = Vec::new();
    for k in 1..=max_lambda {
        out.push(signorini_2d(k as f64, 1.0, 0.0).expect("admissible").embed(dim));
        out.push(signorini_2d(k as f64, 0.0, 1.0).expect("admissible").embed(dim));
    }
    let mut half = 1.5;
    while half <= max_lambda as f64 {
        out.push(signorini_2d(half, 1.0, 0.0).expect("admissible").embed(dim));
        half += 2.0;
    }
    if dim >= 2 {
        out.push(make_qa(&DMatrix::identity(dim - 1, dim - 1)).expect("identity is PSD"));
        let mut k = 3;
        while k <= max_lambda {
            out.push(symmetrized_q(k, dim).expect("odd λ").solution());
            k += 2;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::q;

    #[test]
    fn admissible_set() {
        for l in [1.0, 2.0, 3.0, 4.0, 5.0, 1.5, 3.5, 5.5] {
            assert!(signorini_2d(l, 1.0, 0.0).is_ok(), "{l}");
        }
        for l in [2.5, 4.5, 0.5, 0.0, 2.25, -1.0] {
            match signorini_2d(l, 1.0, 0.0) {
                Err(Error::InadmissibleHomogeneity { lambda }) => assert_eq!(lambda, l),
                other => panic!("{l}: {other:?}"),
            }
        }
        let msg = signorini_2d(2.5, 1.0, 0.0).unwrap_err().to_string();
        assert!(msg.contains("3/2,7/2"));
    }

    #[test]
    fn catalog_elements_satisfy_invariants() {
        for dim in 2..=3 {
            for q in catalog(dim, 7) {
                let rep = q.check_invariants();
                assert!(rep.all(), "λ={} {:?}: {rep:?}", q.lambda(), q.family());
            }
        }
    }

    #[test]
    fn quadratic_b_term_is_product() {
        let sol = signorini_2d(2.0, 0.0, 1.0).unwrap();
        let expected = (&RPoly::var(2, 0) * &RPoly::var(2, 1)).scale(&q(2, 1));
        assert_eq!(sol.odd_part().unwrap(), &expected);
        assert!(sol.even_part().unwrap().is_zero());
    }

    #[test]
    fn cubic_c_term_vanishes_on_plane() {
        let q = signorini_2d(3.0, 1.0, 0.0).unwrap();
        for y in [-1.0, -0.3, 0.2, 2.0] {
            assert_eq!(q.value(&[y, 0.0]), 0.0);
        }
        // equals 3 q_1 in 2D
        let qa = make_qa(&DMatrix::from_element(1, 1, 1.0)).unwrap();
        for x in [[0.3, 0.4], [-0.7, -0.2], [0.1, 0.9]] {
            assert!((q.value(&x) - 3.0 * qa.value(&x)).abs() < 1e-14);
        }
    }

    #[test]
    fn crack_solution_pattern() {
        let q = signorini_2d(1.5, 1.0, 0.0).unwrap();
        assert!((q.value(&[4.0, 0.0]) - 8.0).abs() < 1e-12);
        assert!(q.value(&[-4.0, 0.0]).abs() < 1e-12);
        assert!((q.value(&[0.3, 0.2]) - q.value(&[0.3, -0.2])).abs() < 1e-15);
        assert!(q.check_invariants().all());
        assert!(q.plane_data(&[-1.0]).1 < -1.0);
        let bad = SignoriniSolution {
            lambda: 2.5,
            ..q.clone()
        };
        assert!(!bad.check_invariants().jump_nonpositive);
    }

    #[test]
    fn half_integer_gradient_matches_differences() {
        let q = signorini_2d(3.5, 2.0, 0.0).unwrap();
        let x = [0.37, -0.52];
        let mut g = [0.0; 2];
        q.gradient(&x, &mut g);
        let h = 1e-6;
        for a in 0..2 {
            let mut p = x;
            let mut m = x;
            p[a] += h;
            m[a] -= h;
            let fd = (q.value(&p) - q.value(&m)) / (2.0 * h);
            assert!((fd - g[a]).abs() < 1e-7, "{a}: {fd} vs {}", g[a]);
        }
    }

    #[test]
    fn qa_examples() {
        let q2 = make_qa(&DMatrix::from_element(1, 1, 1.0)).unwrap();
        let expected = &RPoly::var(2, 1).pow(3).scale(&q(1, 3))
            - &(&RPoly::var(2, 0).pow(2) * &RPoly::var(2, 1));
        assert_eq!(q2.even_part().unwrap(), &expected);
        assert!(make_qa(&DMatrix::zeros(2, 2)).unwrap().even_part().unwrap().is_zero());
        let q3 = make_qa(&DMatrix::identity(2, 2)).unwrap();
        let x = [0.2, -0.3, -0.5];
        let v = 0.5 * (2.0 / 3.0 * 0.25 - 0.04 - 0.09);
        assert!((q3.value(&x) - v).abs() < 1e-15);
        assert!(make_qa(&DMatrix::from_diagonal(&nalgebra::dvector![1.0, -0.1])).is_err());
    }

    #[test]
    fn qa_jump_is_strictly_negative_somewhere() {
        let q = make_qa(&DMatrix::from_diagonal(&nalgebra::dvector![0.0, 2.0])).unwrap();
        let rep = q.check_invariants();
        assert!(rep.max_jump <= 0.0);
        let (_, jump) = q.plane_data(&[0.0, 1.0]);
        assert!((jump + 4.0).abs() < 1e-12);
    }

    #[test]
    fn inner_product_value_in_2d() {
        let one = DMatrix::from_element(1, 1, 1.0);
        let v = inner_qa(&one, &one, 1.0).unwrap();
        assert!((v - PI / 9.0).abs() < 1e-14);
        assert_eq!(inner_qa(&DMatrix::zeros(1, 1), &one, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn inner_product_matches_quadrature_in_2d_and_3d() {
        let rule2 = QuadratureRule::sphere(2, 12).unwrap();
        let a = DMatrix::from_element(1, 1, 0.7);
        let b = DMatrix::from_element(1, 1, 1.3);
        let (qa, qb) = (make_qa(&a).unwrap(), make_qa(&b).unwrap());
        let f = crate::field::FnField::new(2, |x: &[f64]| qa.value(x) * qb.value(x));
        let quad = sphere_integral(&f, &[0.0, 0.0], 0.8, &rule2).unwrap();
        let closed = inner_qa(&a, &b, 0.8).unwrap();
        assert!((quad - closed).abs() < 1e-12 * closed.abs());

        let rule3 = QuadratureRule::sphere(3, 12).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.5]);
        let b = DMatrix::from_row_slice(2, 2, &[0.3, -0.1, -0.1, 2.0]);
        let (qa, qb) = (make_qa(&a).unwrap(), make_qa(&b).unwrap());
        let f = crate::field::FnField::new(3, |x: &[f64]| qa.value(x) * qb.value(x));
        let quad = sphere_integral(&f, &[0.0; 3], 1.0, &rule3).unwrap();
        let closed = inner_qa(&a, &b, 1.0).unwrap();
        assert!((quad - closed).abs() < 1e-12 * closed.abs());
    }

    #[test]
    fn trace_operator() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.25, 0.25, 0.5]);
        let q0 = trace_t(&make_qa(&a).unwrap()).unwrap();
        assert_eq!(q0.coeff(&[2, 0, 0]), q(1, 1));
        assert_eq!(q0.coeff(&[1, 1, 0]), q(1, 2));
        assert_eq!(q0.coeff(&[0, 2, 0]), q(1, 2));
        assert!(trace_t(&make_qa(&DMatrix::zeros(2, 2)).unwrap()).unwrap().is_zero());
        let sq = symmetrized_q(3, 3).unwrap();
        let q0 = trace_t(&sq.solution().with_scale(1.0 / sq.normalization)).unwrap();
        assert_eq!(q0.coeff(&[2, 0, 0]), q(1, 1));
        assert!(trace_t(&signorini_2d(2.0, 1.0, 0.0).unwrap()).is_err());
    }

    #[test]
    fn symmetrized_cubic() {
        let q2 = symmetrized_q(3, 2).unwrap();
        assert_eq!(q2.coefficients, vec![q(-1, 1), q(1, 3)]);
        for n in 2..=4 {
            let s = symmetrized_q(3, n).unwrap();
            assert_eq!(s.coefficients[1], q(n as i64 - 1, 3));
            // parallel to q_Id: −a₀ q_Id
            let qid: Vec<Vec<Rational>> = (0..n - 1)
                .map(|i| (0..n - 1).map(|j| if i == j { q(1, 1) } else { q(0, 1) }).collect())
                .collect();
            assert_eq!(s.even_poly(), make_qa_exact(&qid).even_part().unwrap().clone());
        }
    }

    #[test]
    fn symmetrized_solutions_are_harmonic_and_normalized() {
        for lambda in [3, 5, 7] {
            for n in 2..=4 {
                let s = symmetrized_q(lambda, n).unwrap();
                assert!(s.even_poly().laplacian().is_zero(), "λ={lambda} n={n}");
                let sol = s.solution();
                let norm = exact_sphere_inner(&sol, &sol).unwrap();
                assert!((norm - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn odd_frequency_constant_for_q_itself() {
        let q = make_qa(&DMatrix::from_element(1, 1, 1.0)).unwrap();
        let rule = QuadratureRule::sphere(2, 16).unwrap();
        let radii = [0.2, 0.4, 0.6, 0.8];
        let rep = odd_frequency_monotone_check(&q, &q, 3.0, &radii, &rule).unwrap();
        assert!(rep.derivatives.iter().all(|d| d.abs() < 1e-12));
        let doubled = q.clone().with_scale(2.0);
        let rep2 = odd_frequency_monotone_check(&doubled, &q, 3.0, &radii, &rule).unwrap();
        assert!((rep2.values[0] - 2.0 * rep.values[0]).abs() < 1e-13);
    }

    #[test]
    fn psi_examples() {
        let rule = QuadratureRule::sphere(3, 12).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[0.6, 0.1, 0.1, 0.4]);
        let qa = make_qa(&a).unwrap();
        let norm = inner_qa(&a, &a, 1.0).unwrap().sqrt();
        let unit = qa.clone().with_scale(1.0 / norm);
        let psi = psi_functional(&unit, &unit, &rule).unwrap();
        assert!((psi - (1.0 - 2f64.powi(-7))).abs() < 1e-12);
        let zero = crate::field::FnField::new(3, |_: &[f64]| 0.0);
        assert_eq!(psi_functional(&zero, &qa, &rule).unwrap(), 0.0);
        let b = DMatrix::from_row_slice(2, 2, &[0.2, 0.0, 0.0, 1.0]);
        let qb = make_qa(&b).unwrap();
        let psi = psi_functional(&qb, &qa, &rule).unwrap();
        let expected = (1.0 - 2f64.powi(-7)) * inner_qa(&b, &a, 1.0).unwrap();
        assert!((psi - expected).abs() < 1e-12);
    }

    #[test]
    fn catalog_json_lists_entries() {
        let v: Vec<Value> = catalog(2, 4).iter().map(|q| q.to_json()).collect();
        assert!(v.iter().any(|e| e["family"] == "qA"));
        assert!(v.iter().any(|e| e["lambda"] == 1.5));
    }
}
