use nalgebra::{DMatrix, DVector};

use super::{cubic_from_matrix, frequency_limit, in_frame, BlowupParams, FrequencyEstimate, Remainder};
use crate::error::{Error, Result};
use crate::functionals::{Functionals, ProfileParams, Quantity};
use crate::poly::{harmonic_basis, homogeneous_monomials, make_p2, CubicBlowup, FPoly, QuadraticBlowup};
use crate::vi_solver::Solution;

/// Nodes of the annulus `r_lo ≤ |x − x₀| ≤ r_hi` as `(x − x₀, |x − x₀|, node)`.
pub(super) fn annulus(sol: &Solution, x0: &[f64], r_lo: f64, r_hi: f64) -> Vec<(Vec<f64>, f64, usize)> {
    let g = sol.grid();
    g.nodes_in_ball(x0, r_hi)
        .into_iter()
        .filter_map(|i| {
            let z: Vec<f64> = g.node(i).iter().zip(x0).map(|(a, b)| a - b).collect();
            let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            (r >= r_lo).then_some((z, r, i))
        })
        .collect()
}

struct Lsq {
    coeffs: Vec<f64>,
    rank_deficient: bool,
}

/// Minimizes `Σ ω_i (Σ_k c_k f_k(i) − b_i)²`.
fn weighted_lsq(rows: &[Vec<f64>], rhs: &[f64], weights: &[f64]) -> Result<Lsq> {
    let cols = rows.first().map_or(0, |r| r.len());
    if cols == 0 {
        return Ok(Lsq {
            coeffs: vec![],
            rank_deficient: false,
        });
    }
    if rows.len() < cols {
        return Err(Error::InvalidArgument(format!(
            "least squares needs at least {cols} samples, have {}",
            rows.len()
        )));
    }
    let a = DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j] * weights[i].sqrt());
    let b = DVector::from_iterator(rhs.len(), rhs.iter().zip(weights).map(|(v, w)| v * w.sqrt()));
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * 1e-12;
    let rank_deficient = svd.singular_values.iter().any(|&s| s <= smax * 1e-9);
    let x = svd
        .solve(&b, eps)
        .map_err(|e| Error::InvalidArgument(format!("least squares failed: {e}")))?;
    Ok(Lsq {
        coeffs: x.iter().copied().collect(),
        rank_deficient,
    })
}

/// `sqrt(Σ ω (u − m)² / Σ ω u²)`.
fn relative_misfit(values: &[f64], model: &[f64], weights: &[f64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for ((v, m), w) in values.iter().zip(model).zip(weights) {
        num += w * (v - m) * (v - m);
        den += w * v * v;
    }
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (num / den).sqrt()
    }
}

fn monomial_eval(e: &[u32], z: &[f64]) -> f64 {
    e.iter().zip(z).map(|(&k, &x)| x.powi(k as i32)).product()
}

fn half_space_misfit(data: &[(Vec<f64>, f64, usize)], values: &[f64], weights: &[f64], e: &[f64]) -> f64 {
    let model: Vec<f64> = data
        .iter()
        .map(|(z, _, _)| {
            let s: f64 = z.iter().zip(e).map(|(a, b)| a * b).sum();
            0.5 * s.max(0.0).powi(2)
        })
        .collect();
    relative_misfit(values, &model, weights)
}

fn direction(angles: &[f64]) -> Vec<f64> {
    match angles.len() {
        0 => vec![1.0],
        1 => vec![angles[0].cos(), angles[0].sin()],
        _ => {
            let (th, ph) = (angles[0], angles[1]);
            vec![th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]
        }
    }
}

/// Best `½(max(0, e·(x−x₀)))²` over unit `e`: returns `(e, misfit)`.
pub fn half_space_fit(sol: &Solution, x0: &[f64], r_lo: f64, r_hi: f64) -> Result<(Vec<f64>, f64)> {
    let dim = x0.len();
    let data = annulus(sol, x0, r_lo, r_hi);
    if data.is_empty() {
        return Err(Error::InvalidArgument("no nodes in the fit annulus".into()));
    }
    let values: Vec<f64> = data.iter().map(|d| sol.u.values()[d.2]).collect();
    let weights: Vec<f64> = data.iter().map(|d| d.1.powi(-4)).collect();
    let f = |angles: &[f64]| half_space_misfit(&data, &values, &weights, &direction(angles));
    match dim {
        1 => {
            let (a, b) = (f(&[]), half_space_misfit(&data, &values, &weights, &[-1.0]));
            Ok(if a <= b { (vec![1.0], a) } else { (vec![-1.0], b) })
        }
        2 => {
            let steps = 720;
            let mut best = (f64::INFINITY, 0.0);
            for k in 0..steps {
                let a = 2.0 * std::f64::consts::PI * k as f64 / steps as f64;
                let m = f(&[a]);
                if m < best.0 {
                    best = (m, a);
                }
            }
            let d = 2.0 * std::f64::consts::PI / steps as f64;
            let a = golden(|a| f(&[a]), best.1 - d, best.1 + d);
            let m = f(&[a]);
            Ok((direction(&[a]), m.min(best.0)))
        }
        3 => {
            let count = 2000;
            let mut best = (f64::INFINITY, [0.0, 0.0]);
            let golden_angle = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            for k in 0..count {
                let zc = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                let th = zc.acos();
                let ph = golden_angle * k as f64;
                let m = f(&[th, ph]);
                if m < best.0 {
                    best = (m, [th, ph]);
                }
            }
            // pattern search in (θ, φ)
            let mut step = 0.05;
            let mut cur = best;
            while step > 1e-6 {
                let mut moved = false;
                for (dt, dp) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
                    let cand = [cur.1[0] + dt, cur.1[1] + dp];
                    let m = f(&cand);
                    if m < cur.0 {
                        cur = (m, cand);
                        moved = true;
                    }
                }
                if !moved {
                    step *= 0.5;
                }
            }
            Ok((direction(&cur.1), cur.0))
        }
        _ => Err(Error::InvalidArgument(format!("half-space fit supports n ≤ 3, got {dim}"))),
    }
}

fn golden(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Clone, Debug)]
pub struct P2Fit {
    pub p2: QuadraticBlowup,
    /// Relative misfit of `p₂` alone on the fit annulus.
    pub misfit: f64,
    /// Eigenvalues of the unconstrained trace-one fit.
    pub raw_eigenvalues: Vec<f64>,
}

/// Euclidean projection of `v` onto `{λ ≥ 0, Σλ = 1}`.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut s: Vec<f64> = v.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &x) in s.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Trace-one PSD quadratic fitted jointly with a cubic correction.
pub(super) fn fit_quadratic(
    sol: &Solution,
    x0: &[f64],
    r_lo: f64,
    r_hi: f64,
    params: &BlowupParams,
) -> Result<P2Fit> {
    let n = x0.len();
    let data = annulus(sol, x0, r_lo, r_hi);
    let values: Vec<f64> = data.iter().map(|d| sol.u.values()[d.2]).collect();
    let weights: Vec<f64> = data.iter().map(|d| d.1.powi(-4)).collect();
    // unknowns: A_ij (i ≤ j, without A_nn), then cubic monomials; A_nn = 1 − Σ A_ii
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i..n).map(move |j| (i, j)))
        .filter(|&(i, j)| !(i == n - 1 && j == n - 1))
        .collect();
    let cubics = homogeneous_monomials(n, 3);
    let mut rows = Vec::with_capacity(data.len());
    let mut rhs = Vec::with_capacity(data.len());
    for ((z, _, _), v) in data.iter().zip(&values) {
        let zn2 = 0.5 * z[n - 1] * z[n - 1];
        let mut row: Vec<f64> = pairs
            .iter()
            .map(|&(i, j)| {
                if i == j {
                    0.5 * z[i] * z[i] - zn2
                } else {
                    z[i] * z[j]
                }
            })
            .collect();
        row.extend(cubics.iter().map(|e| monomial_eval(e, z)));
        rows.push(row);
        rhs.push(v - zn2);
    }
    let lsq = weighted_lsq(&rows, &rhs, &weights)?;
    let mut a = DMatrix::zeros(n, n);
    for (k, &(i, j)) in pairs.iter().enumerate() {
        a[(i, j)] = lsq.coeffs[k];
        a[(j, i)] = lsq.coeffs[k];
    }
    a[(n - 1, n - 1)] = 1.0 - (0..n - 1).map(|i| a[(i, i)]).sum::<f64>();
    let eig = a.clone().symmetric_eigen();
    let raw: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let mut lam = project_simplex(&raw);
    for l in lam.iter_mut() {
        if *l < params.snap {
            *l = 0.0;
        }
    }
    let total: f64 = lam.iter().sum();
    for l in lam.iter_mut() {
        *l /= total;
    }
    let mut proj = DMatrix::zeros(n, n);
    for k in 0..n {
        let v = eig.eigenvectors.column(k);
        proj += lam[k] * v * v.transpose();
    }
    proj = 0.5 * (&proj + proj.transpose());
    // restore the exact trace after rounding
    let tr = proj.trace();
    proj /= tr;
    let p2 = make_p2(&proj)?;
    let model: Vec<f64> = data.iter().map(|(z, _, _)| p2.eval(z)).collect();
    let misfit = relative_misfit(&values, &model, &weights);
    let mut raw_sorted = raw;
    raw_sorted.sort_by(|a, b| a.total_cmp(b));
    Ok(P2Fit {
        p2,
        misfit,
        raw_eigenvalues: raw_sorted,
    })
}

/// Best `p₂ = ½x·Ax`, `tr A = 1`, `A ⪰ 0`, over shells in `[4h, r_fit]`.
pub fn fit_p2(sol: &Solution, x0: &[f64], params: &BlowupParams) -> Result<P2Fit> {
    let (r_lo, r_hi) = params.radii(sol, x0)?;
    let fit = fit_quadratic(sol, x0, r_lo, r_hi, params)?;
    if fit.misfit > params.misfit_max {
        return Err(Error::NotSingularQuadratic { misfit: fit.misfit });
    }
    Ok(fit)
}

#[derive(Clone, Debug)]
pub struct P3Fit {
    pub p3: CubicBlowup<f64>,
    /// Columns: tangential directions diagonalizing `p₃`, then the normal.
    pub frame: DMatrix<f64>,
    /// Relative misfit of `r⁻³w` against the harmonic cubic.
    pub misfit: f64,
    /// Same for the best `q_A`.
    pub qa_misfit: f64,
    pub harmonic_preferred: bool,
    /// Largest decrease of `r⁻⁶H(r, u − p₂ − p₃)` as `r` decreases.
    pub monneau_drift: Option<f64>,
}

fn frame_data(
    sol: &Solution,
    x0: &[f64],
    frame: &DMatrix<f64>,
    subtract: &FPoly,
    r_lo: f64,
    r_hi: f64,
) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let n = x0.len();
    let data = annulus(sol, x0, r_lo, r_hi);
    let mut ys = Vec::with_capacity(data.len());
    let mut ws = Vec::with_capacity(data.len());
    let mut rs = Vec::with_capacity(data.len());
    for (z, r, i) in data {
        let y: Vec<f64> = (0..n).map(|j| (0..n).map(|k| frame[(k, j)] * z[k]).sum()).collect();
        ws.push(sol.u.values()[i] - subtract.eval(&y));
        ys.push(y);
        rs.push(r);
    }
    (ys, ws, rs)
}

/// Fits `basis ∪ bias` to `w` with weights `r^{−2k}`; returns basis coefficients and
/// the relative misfit of the basis part alone.
fn fit_family(
    ys: &[Vec<f64>],
    ws: &[f64],
    rs: &[f64],
    k: i32,
    basis: &[Box<dyn Fn(&[f64]) -> f64 + '_>],
    bias: &[Vec<u32>],
) -> Result<(Vec<f64>, f64, bool)> {
    let weights: Vec<f64> = rs.iter().map(|r| r.powi(-2 * k)).collect();
    let rows: Vec<Vec<f64>> = ys
        .iter()
        .map(|y| {
            basis
                .iter()
                .map(|b| b(y))
                .chain(bias.iter().map(|e| monomial_eval(e, y)))
                .collect()
        })
        .collect();
    let lsq = weighted_lsq(&rows, ws, &weights)?;
    let coeffs = lsq.coeffs[..basis.len()].to_vec();
    let model: Vec<f64> = ys
        .iter()
        .map(|y| basis.iter().zip(&coeffs).map(|(b, c)| c * b(y)).sum())
        .collect();
    Ok((coeffs, relative_misfit(ws, &model, &weights), lsq.rank_deficient))
}

/// Harmonic cubic vanishing on `{p₂ = 0}`, fitted in the frame of `p₂` and
/// rotated so that it is diagonal in the tangential variables.
pub fn fit_p3(
    sol: &Solution,
    x0: &[f64],
    p2: &QuadraticBlowup,
    lambda2: f64,
    params: &BlowupParams,
) -> Result<P3Fit> {
    let n = x0.len();
    if lambda2 < 3.0 - params.thresholds.tol {
        return Err(Error::NotInSigmaAtLeast3 { frequency: lambda2 });
    }
    if p2.kernel_dim() + 1 != n || n < 2 {
        return Err(Error::InvalidArgument(format!(
            "cubic blowups need kernel dimension {} (got {})",
            n.saturating_sub(1),
            p2.kernel_dim()
        )));
    }
    let (r_lo, r_hi) = params.radii(sol, x0)?;
    let frame0 = p2.frame();
    let half_yn2 = QuadraticBlowup::standard(n).poly();
    let (ys, ws, rs) = frame_data(sol, x0, &frame0, &half_yn2, r_lo, r_hi);

    let cubic_basis: Vec<FPoly> = harmonic_basis(n, 3, Some(n - 1)).iter().map(|p| p.to_f64()).collect();
    let cubic_fns: Vec<Box<dyn Fn(&[f64]) -> f64 + '_>> = cubic_basis
        .iter()
        .map(|p| Box::new(move |y: &[f64]| p.eval(y)) as Box<dyn Fn(&[f64]) -> f64>)
        .collect();
    let quartics = homogeneous_monomials(n, 4);
    let (coeffs, misfit, _) = fit_family(&ys, &ws, &rs, 3, &cubic_fns, &quartics)?;

    // q_A(y) = |y_n|((tr A)/3 y_n² − y′·A y′), linear in the entries of A
    let pairs: Vec<(usize, usize)> = (0..n - 1).flat_map(|i| (i..n - 1).map(move |j| (i, j))).collect();
    let qa_fns: Vec<Box<dyn Fn(&[f64]) -> f64 + '_>> = pairs
        .iter()
        .map(|&(i, j)| {
            Box::new(move |y: &[f64]| {
                let yn = y[n - 1];
                if i == j {
                    yn.abs() * (yn * yn / 3.0 - y[i] * y[i])
                } else {
                    -2.0 * yn.abs() * y[i] * y[j]
                }
            }) as Box<dyn Fn(&[f64]) -> f64>
        })
        .collect();
    let (qa_coeffs, _, _) = fit_family(&ys, &ws, &rs, 3, &qa_fns, &quartics)?;
    // project the q_A matrix onto the PSD cone before measuring its misfit
    let mut a = DMatrix::zeros(n - 1, n - 1);
    for (k, &(i, j)) in pairs.iter().enumerate() {
        a[(i, j)] = qa_coeffs[k];
        a[(j, i)] = qa_coeffs[k];
    }
    let eig = a.symmetric_eigen();
    let mut psd = DMatrix::zeros(n - 1, n - 1);
    for k in 0..n - 1 {
        let v = eig.eigenvectors.column(k);
        psd += eig.eigenvalues[k].max(0.0) * v * v.transpose();
    }
    let qa_coeffs_psd: Vec<f64> = pairs.iter().map(|&(i, j)| psd[(i, j)]).collect();
    let qa_model = |y: &[f64]| -> f64 { qa_fns.iter().zip(&qa_coeffs_psd).map(|(f, c)| c * f(y)).sum() };
    let weights: Vec<f64> = rs.iter().map(|r| r.powi(-6)).collect();
    let qa_vals: Vec<f64> = ys.iter().map(|y| qa_model(y)).collect();
    let qa_misfit = relative_misfit(&ws, &qa_vals, &weights);

    // cubic in frame0: y_n(½y′My′ − (tr M/6) y_n²)
    let mut cubic = FPoly::zero(n);
    for (p, c) in cubic_basis.iter().zip(&coeffs) {
        cubic = &cubic + &p.scale(c);
    }
    let mut m = DMatrix::zeros(n - 1, n - 1);
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let mut e = vec![0u32; n];
            e[i] += 1;
            e[j] += 1;
            e[n - 1] += 1;
            let c = cubic.coeff(&e);
            m[(i, j)] = if i == j { 2.0 * c } else { c };
        }
    }
    let (p3, v) = cubic_from_matrix(&m);
    let mut rot = DMatrix::identity(n, n);
    rot.view_mut((0, 0), (n - 1, n - 1)).copy_from(&v);
    let frame = &frame0 * rot;

    let ws_total: f64 = ws.iter().map(|w| w.abs()).fold(0.0, f64::max);
    let harmonic_preferred = ws_total == 0.0 || misfit <= qa_misfit;

    let monneau_drift = {
        let p = &QuadraticBlowup::standard(n).poly() + &p3.poly();
        let w = Remainder::new(sol, x0, &in_frame(&p, &frame))?;
        if w.is_degenerate(x0, r_lo, r_hi, params.degenerate) {
            Some(0.0)
        } else {
            let functionals = Functionals::new(n, params.order)?;
            let pp = ProfileParams {
                r_max: r_hi,
                r_min: r_lo,
                theta: params.theta,
                gammas: vec![],
                lambdas: vec![],
                slack: 0.0,
                with_e: false,
            };
            functionals
                .profile(&w, x0, &pp)
                .ok()
                .and_then(|pr| pr.max_decrease(Quantity::Monneau))
        }
    };
    Ok(P3Fit {
        p3,
        frame,
        misfit,
        qa_misfit,
        harmonic_preferred,
        monneau_drift,
    })
}

#[derive(Clone, Debug)]
pub struct P4Fit {
    /// In frame coordinates.
    pub p4: FPoly,
    pub misfit: f64,
    pub degenerate: bool,
    pub rank_deficient: bool,
    pub lambda4: FrequencyEstimate,
}

/// Harmonic quartic vanishing on `{y_n = 0}` fitted to `u − 𝒫`, and the
/// truncated frequency limit of `u − 𝒫 − p₄`.
pub fn fit_p4(
    sol: &Solution,
    x0: &[f64],
    frame: &DMatrix<f64>,
    ansatz: &FPoly,
    params: &BlowupParams,
) -> Result<P4Fit> {
    let n = x0.len();
    let (r_lo, r_hi) = params.radii(sol, x0)?;
    let (ys, ws, rs) = frame_data(sol, x0, frame, ansatz, r_lo, r_hi);
    let quartic_basis: Vec<FPoly> = harmonic_basis(n, 4, Some(n - 1)).iter().map(|p| p.to_f64()).collect();
    let fns: Vec<Box<dyn Fn(&[f64]) -> f64 + '_>> = quartic_basis
        .iter()
        .map(|p| Box::new(move |y: &[f64]| p.eval(y)) as Box<dyn Fn(&[f64]) -> f64>)
        .collect();
    let degenerate = ws.iter().zip(&rs).all(|(w, r)| w.abs() <= params.degenerate * r * r);
    let (p4, misfit, rank_deficient) = if degenerate {
        (FPoly::zero(n), 0.0, false)
    } else {
        let quintics = homogeneous_monomials(n, 5);
        let (coeffs, misfit, rd) = fit_family(&ys, &ws, &rs, 4, &fns, &quintics)?;
        let mut p = FPoly::zero(n);
        for (b, c) in quartic_basis.iter().zip(&coeffs) {
            p = &p + &b.scale(c);
        }
        (p, misfit, rd)
    };
    let total = ansatz + &p4;
    let w = Remainder::new(sol, x0, &in_frame(&total, frame))?;
    let lambda4 = frequency_limit(&w, x0, Quantity::PhiGamma(0), vec![params.gamma4], r_lo, r_hi, params)?;
    Ok(P4Fit {
        p4,
        misfit,
        degenerate,
        rank_deficient,
        lambda4,
    })
}
