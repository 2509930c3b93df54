use fblab_core::dimension::{box_dim, geometric_scales, hausdorff_premeasure, PointCloud};
use fblab_core::field::{sphere_integral, FnField, Grid, QuadratureRule, ScalarField};
use fblab_core::functionals::Functionals;
use fblab_core::poly::{
    ansatz_square_form, build_ansatz, q, rotational_second_derivative, CubicBlowup, PolyField,
    QuadraticBlowup, RPoly, RotationField,
};
use fblab_core::signorini::{inner_qa, make_qa};
use fblab_core::vi_solver::{ObstacleProblem, SolverParams};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn rational() -> impl Strategy<Value = (i64, i64)> {
    (-9i64..=9, 1i64..=7)
}

fn psd(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| {
        let b = DMatrix::from_vec(n, n, v);
        &b * b.transpose()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ansatz_identities(n in 2usize..=4, coeffs in proptest::collection::vec(rational(), 3)) {
        let c = CubicBlowup::new(coeffs[..n - 1].iter().map(|&(a, b)| q(a, b)).collect());
        let p = build_ansatz(&QuadraticBlowup::standard(n), &c).unwrap();
        prop_assert_eq!(p.laplacian(), RPoly::one(n));
        for alpha in 0..n - 1 {
            let x = RotationField::new(n, alpha, c.coefficients()[alpha].clone());
            let d = rotational_second_derivative(&p, &x);
            prop_assert!(d.min_degree().is_none_or(|k| k >= 3));
        }
        let defect = &p - &ansatz_square_form(&c).unwrap();
        prop_assert!(defect.min_degree().is_none_or(|k| k >= 5));
    }

    #[test]
    fn interpolation_preserves_order(
        a in proptest::collection::vec(-1.0f64..1.0, 81),
        bump in proptest::collection::vec(0.0f64..1.0, 81),
        x in -1.0f64..1.0,
        y in -1.0f64..1.0,
    ) {
        let g = Grid::centered_box(2, 1.0, 9).unwrap();
        let lo = ScalarField::new(g.clone(), a.clone()).unwrap();
        let hi = ScalarField::new(g, a.iter().zip(&bump).map(|(u, v)| u + v).collect()).unwrap();
        prop_assert!(lo.interpolate(&[x, y]).unwrap() <= hi.interpolate(&[x, y]).unwrap() + 1e-15);
    }

    #[test]
    fn sphere_integral_of_radial_function(r in 0.1f64..2.0, k in 0u32..4) {
        for n in 2..=3 {
            let rule = QuadratureRule::sphere(n, 10).unwrap();
            let f = FnField::new(n, move |x: &[f64]| {
                let s: f64 = x.iter().map(|v| v * v).sum();
                s.powi(k as i32) + 1.0
            });
            let area = fblab_core::field::unit_sphere_area(n);
            let expected = r.powi(n as i32 - 1) * area * (r.powi(2 * k as i32) + 1.0);
            let got = sphere_integral(&f, &vec![0.0; n], r, &rule).unwrap();
            prop_assert!((got - expected).abs() <= 1e-12 * expected);
        }
    }

    #[test]
    fn inner_qa_bilinear_symmetric_positive(a in psd(2), b in psd(2), c in psd(2), s in 0.1f64..3.0) {
        let ab = inner_qa(&a, &b, 1.0).unwrap();
        prop_assert!((ab - inner_qa(&b, &a, 1.0).unwrap()).abs() <= 1e-12 * (1.0 + ab.abs()));
        let lhs = inner_qa(&(&a * s + &c), &b, 1.0).unwrap();
        let rhs = s * ab + inner_qa(&c, &b, 1.0).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        if a.norm() > 1e-6 {
            prop_assert!(inner_qa(&a, &a, 0.7).unwrap() > 0.0);
        }
    }

    #[test]
    fn qa_is_not_harmonic_across_the_plane(a in psd(2)) {
        prop_assume!(a.symmetric_eigenvalues().max() > 1e-3);
        use fblab_core::field::Evaluable;
        let qa = make_qa(&a).unwrap();
        prop_assert!(qa.check_invariants().max_jump <= 0.0);
        let eig = a.clone().symmetric_eigen();
        let top = eig.eigenvalues.imax();
        let v = eig.eigenvectors.column(top);
        let (mut up, mut down) = ([0.0; 3], [0.0; 3]);
        qa.gradient(&[v[0], v[1], 1e-7], &mut up);
        qa.gradient(&[v[0], v[1], -1e-7], &mut down);
        let jump = up[2] - down[2];
        prop_assert!((jump + 2.0 * eig.eigenvalues[top]).abs() < 1e-5, "{jump}");
    }

    #[test]
    fn growth_sandwich(c2 in 0.1f64..2.0, c3 in -2.0f64..2.0, r in 0.1f64..0.4, ratio in 1.2f64..2.5) {
        // harmonic x1² − x2² and x1³ − 3x1x2²
        let w = FnField::new(2, move |x: &[f64]| {
            c2 * (x[0] * x[0] - x[1] * x[1]) + c3 * (x[0].powi(3) - 3.0 * x[0] * x[1] * x[1])
        });
        let f = Functionals::for_dim(2).unwrap();
        let big = r * ratio;
        let samples: Vec<f64> = (0..=10).map(|k| r + (big - r) * k as f64 / 10.0).collect();
        let phis: Vec<f64> = samples.iter().map(|&s| f.phi(&w, &[0.0, 0.0], s).unwrap()).collect();
        let lo = phis.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = phis.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let growth = f.h(&w, &[0.0, 0.0], big).unwrap() / f.h(&w, &[0.0, 0.0], r).unwrap();
        prop_assert!(growth >= ratio.powf(2.0 * lo) * (1.0 - 1e-9));
        prop_assert!(growth <= ratio.powf(2.0 * hi + 0.1) * (1.0 + 1e-9));
    }

    #[test]
    fn comparison_principle(a in 0.0f64..1.0, b in -0.5f64..0.5, lift in 0.0f64..0.2, tilt in 0.0f64..0.1) {
        let g = Grid::centered_box(2, 1.0, 17).unwrap();
        let g1 = move |x: &[f64]| a * x[1] * x[1] - b * x[0] * x[0] - 0.1;
        let g2 = move |x: &[f64]| g1(x) + lift + tilt * (1.0 + x[0]);
        let u1 = ObstacleProblem::new(g.clone(), g1).unwrap().solve(None).unwrap();
        let u2 = ObstacleProblem::new(g, g2).unwrap().solve(None).unwrap();
        for (p, q) in u1.u.values().iter().zip(u2.u.values()) {
            prop_assert!(p <= &(q + 1e-10));
        }
    }

    #[test]
    fn premeasure_grows_as_delta_shrinks(
        pts in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..40),
        beta in 0.3f64..2.0,
    ) {
        let cloud = PointCloud::new(2, pts.into_iter().map(|(x, y)| vec![x, y]).collect(), 1e-3).unwrap();
        let mut last = 0.0;
        for delta in [f64::INFINITY, 1.0, 0.3, 0.1, 0.03, 0.01] {
            let b = hausdorff_premeasure(&cloud, beta, delta).unwrap().bound;
            prop_assert!(b >= last);
            last = b;
        }
    }

    #[test]
    fn projection_does_not_raise_dimension(amp in 0.0f64..0.5, freq in 1.0f64..6.0) {
        // graph of a Lipschitz function sampled finer than the box sizes
        let pts: Vec<Vec<f64>> = (0..=4000)
            .map(|k| {
                let x = k as f64 / 4000.0;
                vec![x, amp * (freq * x).sin()]
            })
            .collect();
        let cloud = PointCloud::new(2, pts, 1e-5).unwrap();
        let scales = geometric_scales(0.1, 2e-3, 6).unwrap();
        let full = box_dim(&cloud, &scales).unwrap().dimension;
        let proj = box_dim(&cloud.project(&[0], 1e-5).unwrap(), &scales).unwrap().dimension;
        prop_assert!(proj <= full + 0.1);
    }

    #[test]
    fn product_dimension_is_subadditive(keep_a in 0.2f64..0.45, keep_b in 0.2f64..0.45) {
        let cantor = |keep: f64| {
            let mut iv = vec![(0.0f64, 1.0f64)];
            for _ in 0..6 {
                iv = iv
                    .into_iter()
                    .flat_map(|(a, b)| [(a, a + keep * (b - a)), (b - keep * (b - a), b)])
                    .collect();
            }
            PointCloud::new(1, iv.into_iter().map(|(a, b)| vec![0.5 * (a + b)]).collect(), 1e-9).unwrap()
        };
        let (a, b) = (cantor(keep_a), cantor(keep_b));
        let lo = keep_a.max(keep_b).powi(5);
        let scales = geometric_scales(0.3, lo, 6).unwrap();
        let da = box_dim(&a, &scales).unwrap().dimension;
        let db = box_dim(&b, &scales).unwrap().dimension;
        let dab = box_dim(&a.product(&b).unwrap(), &scales).unwrap().dimension;
        prop_assert!(dab <= da + db + 0.1);
    }
}

#[test]
fn truncated_frequency_approaches_frequency_as_r_shrinks() {
    // degree-2 harmonic with γ = 4.5: the truncation weight r^{2γ}/H decreases as r ↓ 0
    let w = PolyField::new(&(&RPoly::var(2, 0).pow(2) - &RPoly::var(2, 1).pow(2)));
    let f = Functionals::for_dim(2).unwrap();
    let gaps: Vec<f64> = [0.8, 0.4, 0.2, 0.1, 0.05]
        .iter()
        .map(|&r| (f.phi_gamma(&w, &[0.0, 0.0], r, 4.5).unwrap() - f.phi(&w, &[0.0, 0.0], r).unwrap()).abs())
        .collect();
    assert!(gaps.windows(2).all(|g| g[1] < g[0]), "{gaps:?}");
    assert!(gaps[4] < 1e-5 * gaps[0], "{gaps:?}");
}

#[test]
fn nondegeneracy_on_radial_solution() {
    use fblab_core::vi_solver::radial_solution;
    let g = Grid::centered_box(2, 1.0, 101).unwrap();
    let sol = ObstacleProblem::new(g.clone(), |x| {
        let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
        if rho > 0.5 { radial_solution(0.5, rho) } else { 0.0 }
    })
    .unwrap()
    .with_params(SolverParams::default())
    .solve(None)
    .unwrap();
    let h = g.spacing(0);
    for i in sol.free_boundary_nodes() {
        let x = g.node(i);
        let mut r = 4.0 * h;
        while r <= g.inscribed_radius(&x) {
            let m = g
                .nodes_in_ball(&x, r)
                .into_iter()
                .map(|k| sol.u.values()[k])
                .fold(0.0, f64::max);
            assert!(m >= 0.1 * r * r, "{x:?} r={r} max={m}");
            r *= 1.5;
        }
    }
}
