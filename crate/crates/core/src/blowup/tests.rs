use super::*;
use crate::field::{Evaluable, Grid, ScalarField};
use crate::functionals::Functionals;
use crate::poly::harmonic_basis;
use crate::vi_solver::{radial_solution, solve_family, ObstacleProblem, SolverParams};

fn grid(nodes: usize) -> Grid {
    Grid::centered_box(2, 1.0, nodes).unwrap()
}

fn field_solution(g: &Grid, f: impl Fn(&[f64]) -> f64) -> Solution {
    Solution::from_field(ScalarField::from_fn(g.clone(), f), 1e-12)
}

fn cubic_datum(eps: f64) -> impl Fn(&[f64]) -> f64 {
    move |x: &[f64]| {
        let v = 0.5 * x[1] * x[1] + eps * (0.5 * x[0] * x[0] * x[1] - x[1].powi(3) / 6.0);
        v.max(0.0)
    }
}

#[test]
fn line_solution_is_singular_with_exact_p2() {
    let g = grid(81);
    let sol = field_solution(&g, |x| 0.5 * x[1] * x[1]);
    let params = BlowupParams::default();
    match classify_point(&sol, &[0.0, 0.0], 0.0, &params).unwrap() {
        Classification::Singular(rec) => {
            assert_eq!(rec.m, 1);
            let a = rec.p2.matrix();
            assert!((a[(0, 0)]).abs() < 1e-10 && (a[(1, 1)] - 1.0).abs() < 1e-10);
            assert!(a[(0, 1)].abs() < 1e-10);
            assert!(!rec.ambiguous);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn solver_line_solution_fits_p2() {
    let g = grid(41);
    let sol = ObstacleProblem::new(g, |x| 0.5 * x[1] * x[1]).unwrap().solve(None).unwrap();
    let fit = fit_p2(&sol, &[0.0, 0.0], &BlowupParams::default()).unwrap();
    let a = fit.p2.matrix();
    assert!((a[(1, 1)] - 1.0).abs() < 1e-8, "{a}");
    assert_eq!(fit.p2.kernel_dim(), 1);
}

#[test]
fn radial_point_is_regular() {
    let g = grid(81);
    let sol = ObstacleProblem::new(g.clone(), |x| radial_solution(0.5, x[0].hypot(x[1])))
        .unwrap()
        .solve(None)
        .unwrap();
    let x0 = g.node(g.nearest_node(&[0.5, 0.0]).unwrap());
    let fb = sol.free_boundary_nodes();
    let node = *fb
        .iter()
        .min_by(|&&a, &&b| {
            let da: f64 = g.node(a).iter().zip(&x0).map(|(p, q)| (p - q).powi(2)).sum();
            let db: f64 = g.node(b).iter().zip(&x0).map(|(p, q)| (p - q).powi(2)).sum();
            da.total_cmp(&db)
        })
        .unwrap();
    match classify_point(&sol, &g.node(node), 0.0, &BlowupParams::default()).unwrap() {
        Classification::Regular(info) => {
            assert!(info.normal[0] > 0.9, "{:?}", info.normal);
            assert!(info.half_space_misfit < info.quadratic_misfit);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn point_away_from_free_boundary_is_rejected() {
    let g = grid(41);
    let sol = field_solution(&g, |x| 0.5 * x[1] * x[1]);
    assert!(matches!(
        classify_point(&sol, &[0.0, 0.5], 0.0, &BlowupParams::default()),
        Err(Error::NotOnFreeBoundary(_))
    ));
}

#[test]
fn isotropic_quadratic_has_trivial_kernel() {
    let g = grid(81);
    let sol = field_solution(&g, |x| 0.25 * (x[0] * x[0] + x[1] * x[1]));
    let fit = fit_p2(&sol, &[0.0, 0.0], &BlowupParams::default()).unwrap();
    let a = fit.p2.matrix();
    assert!((a[(0, 0)] - 0.5).abs() < 1e-10 && (a[(1, 1)] - 0.5).abs() < 1e-10);
    assert_eq!(fit.p2.kernel_dim(), 0);
    let rec = match classify_point(&sol, &[0.0, 0.0], 0.0, &BlowupParams::default()).unwrap() {
        Classification::Singular(r) => r,
        other => panic!("{other:?}"),
    };
    assert_eq!(rec.m, 0);
    assert_eq!(rec.stratum, Stratum::SigmaM);
}

#[test]
fn noisy_field_gives_stable_p2() {
    use rand::{Rng, SeedableRng};
    let g = grid(81);
    let clean = field_solution(&g, |x| 0.5 * x[1] * x[1]);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut noisy_u = clean.u.clone();
    for v in noisy_u.values_mut() {
        if *v > 0.0 {
            *v += 1e-8 * rng.random_range(-1.0..1.0);
        }
    }
    let noisy = Solution::from_field(noisy_u, 1e-12);
    let params = BlowupParams::default();
    let a = fit_p2(&clean, &[0.0, 0.0], &params).unwrap().p2.matrix();
    let b = fit_p2(&noisy, &[0.0, 0.0], &params).unwrap().p2.matrix();
    assert!((a - b).amax() < 1e-6);
}

#[test]
fn p3_recovered_from_cubic_datum() {
    let g = grid(81);
    let eps = 1e-3;
    let sol = ObstacleProblem::new(g.clone(), cubic_datum(eps)).unwrap().solve(None).unwrap();
    let params = BlowupParams::default();
    let fit = fit_p2(&sol, &[0.0, 0.0], &params).unwrap();
    let p3 = fit_p3(&sol, &[0.0, 0.0], &fit.p2, 3.0, &params).unwrap();
    let a = p3.p3.coefficients();
    // frame columns are e₁ and e₂ up to sign of the tangential one
    assert!((a[0] - eps).abs() < 1e-6, "{a:?}");
    assert!((a[1] + eps).abs() < 1e-6, "{a:?}");
    assert!((a[0] + a[1]).abs() < 1e-15);
    assert!(p3.harmonic_preferred);
    assert!(p3.monneau_drift.unwrap() < 1e-6);
}

#[test]
fn p3_of_pure_quadratic_vanishes() {
    let g = grid(41);
    let sol = field_solution(&g, |x| 0.5 * x[1] * x[1]);
    let params = BlowupParams::default();
    let fit = fit_p2(&sol, &[0.0, 0.0], &params).unwrap();
    let p3 = fit_p3(&sol, &[0.0, 0.0], &fit.p2, 3.0, &params).unwrap();
    assert!(p3.p3.coefficients().iter().all(|a| a.abs() < 1e-12));
    assert!(matches!(
        fit_p3(&sol, &[0.0, 0.0], &fit.p2, 2.5, &params),
        Err(Error::NotInSigmaAtLeast3 { .. })
    ));
}

#[test]
fn p4_recovered_from_quartic_datum() {
    let g = grid(81);
    let eps = 1e-3;
    // harmonic quartic divisible by x₂
    let q4 = |x: &[f64]| x[0].powi(3) * x[1] - x[0] * x[1].powi(3);
    let sol = field_solution(&g, |x| (0.5 * x[1] * x[1] + eps * q4(x)).max(0.0));
    let params = BlowupParams::default();
    let fit = fit_p2(&sol, &[0.0, 0.0], &params).unwrap();
    let p3 = fit_p3(&sol, &[0.0, 0.0], &fit.p2, 4.0, &params).unwrap();
    assert!(p3.p3.coefficients().iter().all(|a| a.abs() < 1e-9));
    let ansatz = build_ansatz(&QuadraticBlowup::standard(2), &p3.p3).unwrap();
    let p4 = fit_p4(&sol, &[0.0, 0.0], &p3.frame, &ansatz, &params).unwrap();
    // back in x coordinates
    let px = in_frame(&p4.p4, &p3.frame);
    for x in [[0.3, 0.2], [-0.1, 0.25], [0.2, -0.05]] {
        assert!((px.eval(&x) - eps * q4(&x)).abs() < 1e-5 * 0.1, "{x:?}");
    }
    for s in [-0.3, 0.1, 0.4] {
        assert!(p4.p4.eval(&[s, 0.0]).abs() < 1e-15);
    }
    assert!(!p4.degenerate);
}

#[test]
fn p4_of_pure_quadratic_is_degenerate() {
    let g = grid(41);
    let sol = field_solution(&g, |x| 0.5 * x[1] * x[1]);
    let params = BlowupParams::default();
    let ansatz = build_ansatz(&QuadraticBlowup::standard(2), &CubicBlowup::zero(2)).unwrap();
    let p4 = fit_p4(&sol, &[0.0, 0.0], &DMatrix::identity(2, 2), &ansatz, &params).unwrap();
    assert!(p4.degenerate);
    assert!(p4.p4.is_zero());
    assert!(p4.lambda4.degenerate);
}

#[test]
fn pure_quadratic_runs_the_whole_chain() {
    let g = grid(41);
    let sol = field_solution(&g, |x| 0.5 * x[1] * x[1]);
    let params = BlowupParams::default();
    let mut rec = match classify_point(&sol, &[0.0, 0.0], 0.0, &params).unwrap() {
        Classification::Singular(r) => *r,
        other => panic!("{other:?}"),
    };
    analyze_singular(&sol, &mut rec, &params).unwrap();
    assert!(rec.lambda2.as_ref().unwrap().degenerate);
    assert_eq!(rec.third_order, Some(true));
    assert_eq!(rec.fourth_order, Some(true));
    assert_eq!(rec.stratum, Stratum::StarCandidate);
    assert!(rec.notes.iter().any(|n| n.contains("degenerate")));
}

#[test]
fn rescaling_homogeneous_function() {
    let f = Functionals::for_dim(2).unwrap();
    let w = crate::field::FnField::new(2, |x: &[f64]| x[0] * x[0] * x[0] - 3.0 * x[0] * x[1] * x[1]);
    let a = rescale(&w, &[0.0, 0.0], 0.5, &f).unwrap();
    let b = rescale(&w, &[0.0, 0.0], 0.25, &f).unwrap();
    for x in [[0.3, 0.1], [-0.5, 0.7]] {
        assert!((a.value(&x) - b.value(&x)).abs() < 1e-12);
    }
    assert!((f.h(&a, &[0.0, 0.0], 1.0).unwrap() - 1.0).abs() < 1e-12);
    let zero = crate::field::FnField::new(2, |_: &[f64]| 0.0);
    assert!(matches!(rescale(&zero, &[0.0, 0.0], 0.5, &f), Err(Error::ZeroBoundaryNorm)));
}

#[test]
fn remainder_of_solver_is_bounded_after_rescaling() {
    let g = grid(81);
    let sol = ObstacleProblem::new(g, cubic_datum(0.1)).unwrap().solve(None).unwrap();
    let params = BlowupParams::default();
    let fit = fit_p2(&sol, &[0.0, 0.0], &params).unwrap();
    let w = Remainder::new(&sol, &[0.0, 0.0], &fit.p2.poly()).unwrap();
    let f = Functionals::for_dim(2).unwrap();
    let h = sol.grid().max_spacing();
    let mut sups = vec![];
    let mut r = 4.0 * h;
    while r <= 0.4 {
        let wt = rescale(&w, &[0.0, 0.0], r, &f).unwrap();
        let mut sup: f64 = 0.0;
        for k in 0..40 {
            for j in 1..=5 {
                let a = k as f64 * std::f64::consts::PI / 20.0;
                let rho = j as f64 / 5.0;
                sup = sup.max(wt.value(&[rho * a.cos(), rho * a.sin()]).abs());
            }
        }
        sups.push(sup);
        r *= 1.5;
    }
    assert!(sups.iter().all(|&s| s < 5.0), "{sups:?}");
}

#[test]
fn strata_thresholds() {
    let g = grid(41);
    let sol = field_solution(&g, |x| 0.5 * x[1] * x[1]);
    let params = BlowupParams::default();
    let base = match classify_point(&sol, &[0.0, 0.0], 0.0, &params).unwrap() {
        Classification::Singular(r) => *r,
        other => panic!("{other:?}"),
    };
    let est = |v: f64| FrequencyEstimate {
        value: Some(v),
        residual: 0.0,
        at_r_min: Some(v),
        degenerate: false,
        monotone: true,
        extrapolation: None,
    };
    let th = Thresholds::default();
    let mut r = base.clone();
    r.lambda2 = Some(est(2.5));
    assert_eq!(assign_stratum(&r, &th), Stratum::Below3);
    r.lambda2 = Some(est(3.0));
    assert_eq!(assign_stratum(&r, &th), Stratum::AtLeast3);
    r.third_order = Some(true);
    r.lambda3 = Some(est(3.5));
    assert_eq!(assign_stratum(&r, &th), Stratum::Third);
    r.lambda3 = Some(est(4.0));
    assert_eq!(assign_stratum(&r, &th), Stratum::AtLeast4);
    r.fourth_order = Some(true);
    r.lambda4 = Some(est(4.5));
    assert_eq!(assign_stratum(&r, &th), Stratum::Fourth);
    r.lambda4 = Some(est(4.9));
    assert_eq!(assign_stratum(&r, &th), Stratum::StarCandidate);

    // m ≤ n − 2 needs n = 3
    let mut low = base.clone();
    low.dim = 3;
    low.m = 1;
    low.lambda2 = Some(est(2.05));
    assert_eq!(assign_stratum(&low, &th), Stratum::Anomalous);
    low.lambda2 = Some(est(3.0));
    assert_eq!(assign_stratum(&low, &th), Stratum::SigmaM);

    let mut amb = base;
    amb.ambiguous = true;
    assert_eq!(assign_stratum(&amb, &th), Stratum::Ambiguous);
}

#[test]
fn stratum_depth_is_a_chain() {
    let chain = [
        Stratum::Below3,
        Stratum::AtLeast3,
        Stratum::Third,
        Stratum::AtLeast4,
        Stratum::Fourth,
        Stratum::StarCandidate,
    ];
    for (k, s) in chain.iter().enumerate() {
        assert_eq!(s.depth(), Some(k));
    }
    assert_eq!(Stratum::SigmaM.depth(), None);
    let json = serde_json::to_string(&Stratum::AtLeast3).unwrap();
    assert_eq!(json, "\"Sigma_{n-1}^{>=3}\"");
}

#[test]
fn explicit_family_cleans_instantly() {
    let g = grid(41);
    let ts = [0.0, 1e-6, 1e-4, 1e-2];
    let fam = solve_family(&g, |t, x| 0.5 * x[1] * x[1] + t, &ts, &SolverParams::default()).unwrap();
    let params = BlowupParams::default();
    let rec = match classify_point(&fam.solutions[0], &[0.0, 0.0], 0.0, &params).unwrap() {
        Classification::Singular(r) => *r,
        other => panic!("{other:?}"),
    };
    let report = cleaning_experiment(&fam, &rec, &[0.1, 0.2, 0.4]).unwrap();
    for row in &report.rows {
        assert_eq!(row.t_clear, Some(1e-6));
        // u^t − u⁰ = t everywhere
        assert!((row.barrier_min.unwrap() - 1e-6).abs() < 1e-9, "{row:?}");
    }
    assert!(report.nondecreasing);
}

#[test]
fn cleaning_needs_the_base_parameter() {
    let g = grid(21);
    let fam = solve_family(&g, |t, x| 0.5 * x[1] * x[1] + t, &[0.0, 0.1], &SolverParams::default()).unwrap();
    let params = BlowupParams {
        r_fit: 0.4,
        ..Default::default()
    };
    let mut rec = match classify_point(&fam.solutions[0], &[0.0, 0.0], 0.0, &params).unwrap() {
        Classification::Singular(r) => *r,
        other => panic!("{other:?}"),
    };
    rec.t = 0.5;
    assert!(cleaning_experiment(&fam, &rec, &[0.2]).is_err());
}

#[test]
fn detection_finds_the_line() {
    let g = grid(41);
    let sol = field_solution(&g, |x| 0.5 * x[1] * x[1]);
    let recs = detect_singular(&sol, 0.0, &BlowupParams::default());
    assert!(!recs.is_empty());
    for r in &recs {
        assert!(r.location[1].abs() < 1e-12);
        assert_eq!(r.m, 1);
    }
    let csv = records_csv(&recs);
    assert!(csv.starts_with("x1,x2,t,m,lambda2,lambda3,lambda4,stratum\n"));
}

#[test]
fn harmonic_quartic_basis_vanishes_on_plane() {
    for n in 2..=3 {
        for p in harmonic_basis(n, 4, Some(n - 1)) {
            assert!(p.restrict_zero(n - 1).is_zero());
        }
    }
}
