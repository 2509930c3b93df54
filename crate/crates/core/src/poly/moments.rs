//! Monomial integrals over the unit sphere, as rational multiples of `|∂B_1|`.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::{Coeff, RPoly, Rational};

/// `∫_{∂B_1} p / |∂B_1|` for a rational polynomial.
///
/// Uses `∫_{∂B_1} p = ∫_{∂B_1} Δp / (k(n+k−2))` for `p` homogeneous of degree `k`.
pub fn sphere_moment_poly(p: &RPoly) -> Rational {
    let n = p.dim() as i64;
    let Some(top) = p.degree() else {
        return Rational::zero();
    };
    let mut acc = Rational::zero();
    for k in 0..=top {
        let part = p.homogeneous_part(k);
        if part.is_zero() {
            continue;
        }
        if k == 0 {
            acc += part.coeff(&vec![0; p.dim()]);
            continue;
        }
        let lap = part.laplacian();
        if lap.is_zero() {
            continue;
        }
        let k = k as i64;
        acc += sphere_moment_poly(&lap) / Rational::from_i64(k * (n + k - 2));
    }
    acc
}

/// `∫_{∂B_1} x^α / |∂B_1|`; zero unless every exponent is even.
pub fn sphere_moment(exps: &[u32], dim: usize) -> Rational {
    assert_eq!(exps.len(), dim, "exponent vector length");
    if exps.iter().any(|e| e % 2 == 1) {
        return Rational::zero();
    }
    sphere_moment_poly(&RPoly::monomial(dim, exps.to_vec(), Rational::one()))
}

/// Closed form `Π(α_i−1)!! / (n(n+2)⋯(n+|α|−2))`, independent of the recursion.
pub fn moment_product_formula(exps: &[u32], dim: usize) -> Rational {
    if exps.iter().any(|e| e % 2 == 1) {
        return Rational::zero();
    }
    let mut num = BigInt::one();
    for &e in exps {
        let mut k = e as i64 - 1;
        while k > 1 {
            num *= k;
            k -= 2;
        }
    }
    let total: u32 = exps.iter().sum();
    let mut den = BigInt::one();
    let mut j = 0;
    while j < total {
        den *= dim as i64 + j as i64;
        j += 2;
    }
    Rational::new(num, den)
}

#[cfg(test)]
mod tests {
    use super::super::{homogeneous_monomials, q};
    use super::*;

    #[test]
    fn moment_examples() {
        for n in 2..=5usize {
            let ni = n as i64;
            let mut e = vec![0; n];
            e[0] = 2;
            assert_eq!(sphere_moment(&e, n), q(1, ni));
            e[0] = 4;
            assert_eq!(sphere_moment(&e, n), q(3, ni * (ni + 2)));
            e[0] = 6;
            assert_eq!(sphere_moment(&e, n), q(15, ni * (ni + 2) * (ni + 4)));
            if n >= 3 {
                let mut f = vec![0; n];
                f[0] = 2;
                f[1] = 2;
                f[2] = 2;
                assert_eq!(sphere_moment(&f, n), q(1, ni * (ni + 2) * (ni + 4)));
            }
        }
    }

    #[test]
    fn odd_exponents_vanish() {
        assert!(sphere_moment(&[3, 2], 2).is_zero());
        assert!(sphere_moment(&[1, 0, 1], 3).is_zero());
    }

    #[test]
    fn recursion_matches_product_formula() {
        for n in 1..=4usize {
            for d in (0..=10).step_by(2) {
                for e in homogeneous_monomials(n, d) {
                    assert_eq!(sphere_moment(&e, n), moment_product_formula(&e, n), "{e:?}");
                }
            }
        }
    }
}
