//! Frequency, Weiss and related functionals around a base point, and
//! frequency profiles over geometric radii.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Evaluable, QuadratureRule};

/// Default quadrature order for the sphere/ball rules.
pub const DEFAULT_ORDER: usize = 24;

/// Sphere and ball rules of matching order.
#[derive(Clone, Debug)]
pub struct Functionals {
    sphere: QuadratureRule,
    ball: QuadratureRule,
}

impl Functionals {
    pub fn new(dim: usize, order: usize) -> Result<Self> {
        Ok(Functionals {
            sphere: QuadratureRule::sphere(dim, order)?,
            ball: QuadratureRule::ball(dim, order)?,
        })
    }

    pub fn for_dim(dim: usize) -> Result<Self> {
        Self::new(dim, DEFAULT_ORDER)
    }

    pub fn dim(&self) -> usize {
        self.sphere.dim()
    }

    pub fn sphere_rule(&self) -> &QuadratureRule {
        &self.sphere
    }

    pub fn ball_rule(&self) -> &QuadratureRule {
        &self.ball
    }

    fn check<E: Evaluable + ?Sized>(&self, w: &E, x0: &[f64], r: f64) -> Result<()> {
        if w.dim() != self.dim() || x0.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "dimension mismatch: rules {}, field {}, base point {}",
                self.dim(),
                w.dim(),
                x0.len()
            )));
        }
        if !(r > 0.0) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
        }
        w.check_ball(x0, r)
    }

    /// `H(r,w) = r^{1−n}∫_{∂B_r} w²`.
    pub fn h<E: Evaluable + ?Sized>(&self, w: &E, x0: &[f64], r: f64) -> Result<f64> {
        self.check(w, x0, r)?;
        Ok(self.sphere.apply(x0, r, |x| {
            let v = w.value(x);
            v * v
        }))
    }

    /// `D(r,w) = r^{2−n}∫_{B_r} |∇w|²`.
    pub fn d<E: Evaluable + ?Sized>(&self, w: &E, x0: &[f64], r: f64) -> Result<f64> {
        self.check(w, x0, r)?;
        let mut g = vec![0.0; self.dim()];
        let s = self.ball.apply(x0, r, |x| {
            w.gradient(x, &mut g);
            g.iter().map(|c| c * c).sum()
        });
        Ok(r * r * s)
    }

    /// `φ = D/H`; errors when `H = 0`.
    pub fn phi<E: Evaluable + ?Sized>(&self, w: &E, x0: &[f64], r: f64) -> Result<f64> {
        let h = self.h(w, x0, r)?;
        if h == 0.0 {
            return Err(Error::ZeroBoundaryNorm);
        }
        Ok(self.d(w, x0, r)? / h)
    }

    /// `φ^γ = (D + γr^{2γ})/(H + r^{2γ})`.
    pub fn phi_gamma<E: Evaluable + ?Sized>(
        &self,
        w: &E,
        x0: &[f64],
        r: f64,
        gamma: f64,
    ) -> Result<f64> {
        let (h, d) = (self.h(w, x0, r)?, self.d(w, x0, r)?);
        Ok(truncated(h, d, r, gamma))
    }

    /// `W_λ = r^{−2λ}(D − λH)`.
    pub fn weiss<E: Evaluable + ?Sized>(
        &self,
        w: &E,
        x0: &[f64],
        r: f64,
        lambda: f64,
    ) -> Result<f64> {
        let (h, d) = (self.h(w, x0, r)?, self.d(w, x0, r)?);
        Ok(r.powf(-2.0 * lambda) * (d - lambda * h))
    }

    /// `(r^{2−n}∫_{B_r} wΔw, r^{2−n}∫_{B_r}((x−x₀)·∇w)Δw)`.
    pub fn laplacian_moments<E: Evaluable + ?Sized>(
        &self,
        w: &E,
        x0: &[f64],
        r: f64,
    ) -> Result<(f64, f64)> {
        self.check(w, x0, r)?;
        let n = self.dim();
        let scale = r.powi(2 - n as i32);
        let mut g = vec![0.0; n];
        let radial = |x: &[f64], g: &mut Vec<f64>| {
            w.gradient(x, g);
            x.iter().zip(x0).zip(g.iter()).map(|((a, b), c)| (a - b) * c).sum::<f64>()
        };
        let mut fw = |x: &[f64]| w.value(x);
        if let Some(a) = w.laplacian_integral(x0, r, &mut fw) {
            let mut g2 = vec![0.0; n];
            let mut fr = |x: &[f64]| radial(x, &mut g2);
            let b = w
                .laplacian_integral(x0, r, &mut fr)
                .expect("measure available for both integrands");
            return Ok((scale * a, scale * b));
        }
        let rn = r.powi(n as i32);
        let a = self.ball.apply(x0, r, |x| w.value(x) * w.laplacian(x));
        let b = self.ball.apply(x0, r, |x| radial(x, &mut g) * w.laplacian(x));
        Ok((scale * rn * a, scale * rn * b))
    }

    /// `E = (r^{2−n}∫wΔw)·D − (r^{2−n}∫(x·∇w)Δw)·H`.
    pub fn e<E: Evaluable + ?Sized>(&self, w: &E, x0: &[f64], r: f64) -> Result<f64> {
        let (a, b) = self.laplacian_moments(w, x0, r)?;
        let (h, d) = (self.h(w, x0, r)?, self.d(w, x0, r)?);
        Ok(a * d - b * h)
    }

    /// `E^γ` with `D + γr^{2γ}` and `H + r^{2γ}`.
    pub fn e_gamma<E: Evaluable + ?Sized>(
        &self,
        w: &E,
        x0: &[f64],
        r: f64,
        gamma: f64,
    ) -> Result<f64> {
        let (a, b) = self.laplacian_moments(w, x0, r)?;
        let (h, d) = (self.h(w, x0, r)?, self.d(w, x0, r)?);
        let t = r.powf(2.0 * gamma);
        Ok(a * (d + gamma * t) - b * (h + t))
    }

    /// Evaluates every functional on geometric radii `r_max θ^k ≥ r_min`.
    pub fn profile<E: Evaluable + ?Sized>(
        &self,
        w: &E,
        x0: &[f64],
        params: &ProfileParams,
    ) -> Result<FrequencyProfile> {
        params.validate()?;
        let mut records = Vec::new();
        let mut r = params.r_max;
        while r >= params.r_min * (1.0 - 1e-12) {
            let h = self.h(w, x0, r)?;
            let d = self.d(w, x0, r)?;
            let (a, b) = if params.with_e {
                self.laplacian_moments(w, x0, r)?
            } else {
                (0.0, 0.0)
            };
            records.push(ProfileRecord {
                r,
                h,
                d,
                phi: if h > 0.0 { Some(d / h) } else { None },
                phi_gamma: params.gammas.iter().map(|&g| truncated(h, d, r, g)).collect(),
                weiss: params
                    .lambdas
                    .iter()
                    .map(|&l| r.powf(-2.0 * l) * (d - l * h))
                    .collect(),
                e: a * d - b * h,
                e_gamma: params
                    .gammas
                    .iter()
                    .map(|&g| {
                        let t = r.powf(2.0 * g);
                        a * (d + g * t) - b * (h + t)
                    })
                    .collect(),
                monneau: h / r.powi(6),
            });
            r *= params.theta;
        }
        if records.is_empty() {
            return Err(Error::InvalidArgument("profile has no radii".into()));
        }
        let mut profile = FrequencyProfile {
            base: x0.to_vec(),
            gammas: params.gammas.clone(),
            lambdas: params.lambdas.clone(),
            slack: params.slack,
            records,
            phi_monotone: true,
            weiss_monotone: vec![],
        };
        profile.phi_monotone = profile
            .series(Quantity::Phi)
            .map(|s| nondecreasing_in_r(&s, params.slack))
            .unwrap_or(true);
        profile.weiss_monotone = (0..params.lambdas.len())
            .map(|k| {
                let s = profile.series(Quantity::Weiss(k)).expect("always defined");
                nondecreasing_in_r(&s, params.slack)
            })
            .collect();
        Ok(profile)
    }
}

fn truncated(h: f64, d: f64, r: f64, gamma: f64) -> f64 {
    if h == 0.0 && d == 0.0 {
        return gamma;
    }
    let t = r.powf(2.0 * gamma);
    (d + gamma * t) / (h + t)
}

/// `(r, value)` pairs sorted by decreasing `r`; checks `value(r_small) ≤ value(r_big) + slack`.
fn nondecreasing_in_r(series: &[(f64, f64)], slack: f64) -> bool {
    series.windows(2).all(|w| w[1].1 <= w[0].1 + slack)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProfileParams {
    pub r_max: f64,
    pub r_min: f64,
    pub theta: f64,
    pub gammas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub slack: f64,
    pub with_e: bool,
}

impl Default for ProfileParams {
    fn default() -> Self {
        ProfileParams {
            r_max: 0.5,
            r_min: 0.05,
            theta: 0.9,
            gammas: vec![],
            lambdas: vec![2.0],
            slack: 1e-6,
            with_e: true,
        }
    }
}

impl ProfileParams {
    fn validate(&self) -> Result<()> {
        if !(self.r_max > 0.0 && self.r_min > 0.0 && self.r_min <= self.r_max) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < r_min ≤ r_max (got {} and {})",
                self.r_min, self.r_max
            )));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "ratio θ must lie in (0,1), got {}",
                self.theta
            )));
        }
        Ok(())
    }

    /// Slack `1e−6 + C h`.
    pub fn slack_for(h: f64, c: f64) -> f64 {
        1e-6 + c * h
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ProfileRecord {
    pub r: f64,
    pub h: f64,
    pub d: f64,
    pub phi: Option<f64>,
    pub phi_gamma: Vec<f64>,
    pub weiss: Vec<f64>,
    pub e: f64,
    pub e_gamma: Vec<f64>,
    pub monneau: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Quantity {
    H,
    D,
    Phi,
    PhiGamma(usize),
    Weiss(usize),
    E,
    EGamma(usize),
    Monneau,
    /// `D − λH` for the λ at that index.
    DMinusLambdaH(usize),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FrequencyProfile {
    pub base: Vec<f64>,
    pub gammas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub slack: f64,
    /// Radii strictly decreasing.
    pub records: Vec<ProfileRecord>,
    pub phi_monotone: bool,
    pub weiss_monotone: Vec<bool>,
}

impl FrequencyProfile {
    /// `(r, value)` pairs in profile order; `None` when `φ` is undefined somewhere.
    pub fn series(&self, q: Quantity) -> Option<Vec<(f64, f64)>> {
        self.records
            .iter()
            .map(|rec| {
                let v = match q {
                    Quantity::H => Some(rec.h),
                    Quantity::D => Some(rec.d),
                    Quantity::Phi => rec.phi,
                    Quantity::PhiGamma(k) => rec.phi_gamma.get(k).copied(),
                    Quantity::Weiss(k) => rec.weiss.get(k).copied(),
                    Quantity::E => Some(rec.e),
                    Quantity::EGamma(k) => rec.e_gamma.get(k).copied(),
                    Quantity::Monneau => Some(rec.monneau),
                    Quantity::DMinusLambdaH(k) => self.lambdas.get(k).map(|l| rec.d - l * rec.h),
                };
                v.map(|v| (rec.r, v))
            })
            .collect()
    }

    /// Largest decrease of the quantity as `r` grows (0 when nondecreasing).
    pub fn max_decrease(&self, q: Quantity) -> Option<f64> {
        let s = self.series(q)?;
        Some(
            s.windows(2)
                .map(|w| (w[1].1 - w[0].1).max(0.0))
                .fold(0.0, f64::max),
        )
    }

    pub fn min_value(&self, q: Quantity) -> Option<f64> {
        self.series(q)
            .map(|s| s.iter().map(|p| p.1).fold(f64::INFINITY, f64::min))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut header = vec!["r", "H", "D", "phi"]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>();
        header.extend(self.gammas.iter().map(|g| format!("phi_gamma_{g}")));
        header.extend(self.lambdas.iter().map(|l| format!("W_{l}")));
        header.push("E".into());
        header.push("monneau".into());
        header.extend(self.gammas.iter().map(|g| format!("E_gamma_{g}")));
        writeln!(out, "{}", header.join(","))?;
        for rec in &self.records {
            let mut row = vec![
                rec.r.to_string(),
                rec.h.to_string(),
                rec.d.to_string(),
                rec.phi.map_or_else(String::new, |v| v.to_string()),
            ];
            row.extend(rec.phi_gamma.iter().map(f64::to_string));
            row.extend(rec.weiss.iter().map(f64::to_string));
            row.push(rec.e.to_string());
            row.push(rec.monneau.to_string());
            row.extend(rec.e_gamma.iter().map(f64::to_string));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Result of fitting `a + b r^c` to the smallest radii.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Extrapolation {
    pub limit: f64,
    pub coefficient: f64,
    pub exponent: f64,
    /// Root mean square of the fit residuals.
    pub residual: f64,
    pub points: usize,
    /// Tail fails to be monotone within the profile slack.
    pub nonmonotone_tail: bool,
}

fn fit_fixed_exponent(pts: &[(f64, f64)], c: f64) -> (f64, f64, f64) {
    // least squares for a + b t with t = r^c
    let m = pts.len() as f64;
    let (mut st, mut sv, mut stt, mut stv) = (0.0, 0.0, 0.0, 0.0);
    for &(r, v) in pts {
        let t = r.powf(c);
        st += t;
        sv += v;
        stt += t * t;
        stv += t * v;
    }
    let det = m * stt - st * st;
    let (a, b) = if det.abs() <= 1e-300 || det.abs() < 1e-14 * m * stt {
        (sv / m, 0.0)
    } else {
        ((stt * sv - st * stv) / det, (m * stv - st * sv) / det)
    };
    let rss: f64 = pts
        .iter()
        .map(|&(r, v)| {
            let e = a + b * r.powf(c) - v;
            e * e
        })
        .sum();
    (a, b, (rss / m).sqrt())
}

/// Fits `a + b r^c` over the `points` smallest radii and returns `a`.
pub fn extrapolate_series(series: &[(f64, f64)], points: usize, slack: f64) -> Result<Extrapolation> {
    if points < 4 || series.len() < points {
        return Err(Error::InvalidArgument(format!(
            "extrapolation needs at least 4 radii (have {}, asked {points})",
            series.len()
        )));
    }
    let mut pts: Vec<(f64, f64)> = series.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.truncate(points);
    let values: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let spread = values.iter().fold(0.0f64, |m, v| m.max((v - values[0]).abs()));
    if spread == 0.0 {
        return Ok(Extrapolation {
            limit: values[0],
            coefficient: 0.0,
            exponent: 1.0,
            residual: 0.0,
            points,
            nonmonotone_tail: false,
        });
    }
    let mut best = (f64::INFINITY, 1.0);
    let mut c = 0.1;
    while c <= 6.0 + 1e-12 {
        let (_, _, res) = fit_fixed_exponent(&pts, c);
        if res < best.0 {
            best = (res, c);
        }
        c += 0.1;
    }
    // golden-section refinement on [c−0.1, c+0.1]
    let (mut lo, mut hi) = ((best.1 - 0.1).max(0.02), best.1 + 0.1);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if fit_fixed_exponent(&pts, m1).2 <= fit_fixed_exponent(&pts, m2).2 {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let c = 0.5 * (lo + hi);
    let (a, b, res) = fit_fixed_exponent(&pts, c);
    // pts ascending in r: nondecreasing means v[i] ≤ v[i+1] + slack
    let nonmonotone = pts.windows(2).any(|w| w[0].1 > w[1].1 + slack);
    Ok(Extrapolation {
        limit: a,
        coefficient: b,
        exponent: c,
        residual: res,
        points,
        nonmonotone_tail: nonmonotone,
    })
}

/// Zero-radius limit of a profile quantity over the `points` smallest radii.
pub fn extrapolate_zero_limit(
    profile: &FrequencyProfile,
    q: Quantity,
    points: usize,
) -> Result<Extrapolation> {
    let s = profile
        .series(q)
        .ok_or_else(|| Error::InvalidArgument(format!("{q:?} undefined on this profile")))?;
    extrapolate_series(&s, points, profile.slack)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{unit_sphere_area, FnField};
    use crate::poly::{harmonic_basis, PolyField, RPoly};
    use std::f64::consts::PI;

    fn xn(dim: usize) -> PolyField {
        PolyField::new(&RPoly::var(dim, dim - 1))
    }

    fn x1x2(dim: usize) -> PolyField {
        PolyField::new(&(&RPoly::var(dim, 0) * &RPoly::var(dim, 1)))
    }

    #[test]
    fn h_examples() {
        let f = Functionals::for_dim(2).unwrap();
        for r in [0.3, 1.0, 2.5] {
            let h = f.h(&xn(2), &[0.0, 0.0], r).unwrap();
            assert!((h - PI * r * r).abs() < 1e-12 * h);
        }
        let zero = FnField::new(2, |_: &[f64]| 0.0);
        assert_eq!(f.h(&zero, &[0.0, 0.0], 1.0).unwrap(), 0.0);
        let one = FnField::new(3, |_: &[f64]| 1.0);
        let f3 = Functionals::for_dim(3).unwrap();
        assert!((f3.h(&one, &[0.0; 3], 0.7).unwrap() - unit_sphere_area(3)).abs() < 1e-12);
    }

    #[test]
    fn d_examples() {
        let f = Functionals::for_dim(2).unwrap();
        let d = f.d(&xn(2), &[0.0, 0.0], 0.6).unwrap();
        assert!((d - PI * 0.36).abs() < 1e-12);
        let c = FnField::new(2, |_: &[f64]| 4.0);
        assert!(f.d(&c, &[0.0, 0.0], 1.0).unwrap().abs() < 1e-12);
        for r in [0.5, 1.0] {
            let (h, d) = (f.h(&x1x2(2), &[0.0; 2], r).unwrap(), f.d(&x1x2(2), &[0.0; 2], r).unwrap());
            assert!((d - 2.0 * h).abs() < 1e-12 * d);
        }
    }

    #[test]
    fn frequency_of_homogeneous_harmonics() {
        for dim in [2, 3] {
            let f = Functionals::for_dim(dim).unwrap();
            for k in 1..=3 {
                for p in harmonic_basis(dim, k, None) {
                    let w = PolyField::new(&p);
                    for r in [0.1, 0.5, 1.3] {
                        let phi = f.phi(&w, &vec![0.0; dim], r).unwrap();
                        assert!((phi - k as f64).abs() < 1e-9, "n={dim} k={k}: {phi}");
                        let wl = f.weiss(&w, &vec![0.0; dim], r, k as f64).unwrap();
                        assert!(wl.abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn truncated_frequency_examples() {
        let f = Functionals::for_dim(2).unwrap();
        let zero = FnField::new(2, |_: &[f64]| 0.0);
        for g in [3.0, 3.5, 4.7] {
            assert_eq!(f.phi_gamma(&zero, &[0.0; 2], 0.4, g).unwrap(), g);
        }
        let v = f.phi_gamma(&x1x2(2), &[0.0; 2], 1.0, 3.0).unwrap();
        let expected = (PI / 2.0 + 3.0) / (PI / 4.0 + 1.0);
        assert!((v - expected).abs() < 1e-12);
        assert!(matches!(f.phi(&zero, &[0.0; 2], 1.0), Err(Error::ZeroBoundaryNorm)));
    }

    #[test]
    fn weiss_of_linear_function() {
        let f = Functionals::for_dim(2).unwrap();
        for r in [0.5, 1.0, 2.0] {
            let w = f.weiss(&xn(2), &[0.0; 2], r, 2.0).unwrap();
            assert!((w + PI / (r * r)).abs() < 1e-11);
        }
    }

    #[test]
    fn e_vanishes_for_harmonic() {
        let f = Functionals::for_dim(2).unwrap();
        assert!(f.e(&x1x2(2), &[0.0; 2], 0.8).unwrap().abs() < 1e-14);
        assert!(f.e_gamma(&x1x2(2), &[0.0; 2], 0.8, 3.5).unwrap().abs() < 1e-14);
    }

    #[test]
    fn profile_flags_and_extrapolation() {
        let f = Functionals::for_dim(2).unwrap();
        let params = ProfileParams {
            r_max: 1.0,
            r_min: 0.1,
            gammas: vec![3.5],
            lambdas: vec![2.0],
            ..Default::default()
        };
        let p = f.profile(&x1x2(2), &[0.0; 2], &params).unwrap();
        assert!(p.phi_monotone && p.weiss_monotone[0]);
        assert!(p.records.windows(2).all(|w| w[1].r < w[0].r));
        for rec in &p.records {
            assert!((rec.phi.unwrap() - 2.0).abs() < 1e-12);
        }
        let ex = extrapolate_zero_limit(&p, Quantity::Phi, 6).unwrap();
        assert!((ex.limit - 2.0).abs() < 1e-12 && ex.residual < 1e-12);

        let zero = FnField::new(2, |_: &[f64]| 0.0);
        let p0 = f.profile(&zero, &[0.0; 2], &params).unwrap();
        assert!(p0.records.iter().all(|r| r.phi_gamma[0] == 3.5 && r.monneau == 0.0));
        assert!(p0.records.iter().all(|r| r.phi.is_none()));
        assert_eq!(extrapolate_zero_limit(&p0, Quantity::Monneau, 4).unwrap().limit, 0.0);
    }

    #[test]
    fn dominant_homogeneity_wins() {
        let f = Functionals::for_dim(3).unwrap();
        let x = |i| RPoly::var(3, i);
        let p = &(&x(0) * &x(1)) + &(&(&x(0) * &x(1)) * &x(2)).scale(&crate::poly::q(1, 100));
        let params = ProfileParams {
            r_max: 0.5,
            r_min: 0.05,
            ..Default::default()
        };
        let prof = f.profile(&PolyField::new(&p), &[0.0; 3], &params).unwrap();
        let ex = extrapolate_zero_limit(&prof, Quantity::Phi, 8).unwrap();
        assert!((ex.limit - 2.0).abs() < 1e-3, "{ex:?}");
    }

    #[test]
    fn extrapolation_recovers_power_law() {
        let s: Vec<(f64, f64)> = (0..10)
            .map(|k| {
                let r = 0.5 * 0.9f64.powi(k);
                (r, 3.0 - 0.7 * r.powf(1.3))
            })
            .collect();
        let ex = extrapolate_series(&s, 8, 0.0).unwrap();
        assert!((ex.limit - 3.0).abs() < 1e-6, "{ex:?}");
        assert!((ex.exponent - 1.3).abs() < 1e-3);
        assert!(extrapolate_series(&s, 3, 0.0).is_err());
    }

    #[test]
    fn csv_has_declared_columns() {
        let f = Functionals::for_dim(2).unwrap();
        let params = ProfileParams {
            r_max: 0.5,
            r_min: 0.4,
            gammas: vec![3.5],
            lambdas: vec![2.0, 3.0],
            ..Default::default()
        };
        let p = f.profile(&xn(2), &[0.0; 2], &params).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("r,H,D,phi,phi_gamma_3.5,W_2,W_3,E,monneau,E_gamma_3.5\n"));
        assert_eq!(text.lines().count(), 1 + p.records.len());
    }
}
