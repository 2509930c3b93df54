//! Signorini catalog identities and the odd-frequency check.

use fblab_core::field::{FnField, QuadratureRule};
use fblab_core::signorini::{
    catalog, make_qa, make_qa_exact, odd_frequency_monotone_check, symmetrized_q, SignoriniSolution,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Artifacts, RunError, Stage};
use crate::config::ExperimentConfig;
use crate::summary::Suite;

/// Elements symmetric in `x_n`.
pub fn even_elements(dim: usize, max_lambda: u32) -> Vec<SignoriniSolution> {
    catalog(dim, max_lambda)
        .into_iter()
        .filter(|q| q.odd_part().is_none_or(|p| p.is_zero()))
        .collect()
}

/// `Σ w_k q_k` with weights in `[0, 1)`, each element kept with probability ½.
pub fn random_even_field(
    elements: &[SignoriniSolution],
    rng: &mut impl Rng,
) -> Vec<(f64, usize)> {
    let mut terms: Vec<(f64, usize)> = (0..elements.len())
        .filter_map(|k| rng.random_bool(0.5).then(|| (rng.random::<f64>(), k)))
        .collect();
    if terms.is_empty() {
        terms.push((1.0, rng.random_range(0..elements.len())));
    }
    terms
}

pub(super) fn signorini(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<Suite>, RunError> {
    let sc = cfg.signorini.as_ref().expect("validated");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut invariants = Suite::new("catalog-invariants", "homogeneous Signorini solutions: harmonic off the plane, q >= 0 and Δq <= 0 on it, qΔq = 0");
    let mut odd_ext = Suite::new("odd-extension-harmonic", "odd extensions of odd-homogeneity solutions are harmonic");
    let mut parallel = Suite::new("symmetrized-q-parallel", "the symmetrized cubic is a multiple of q_Id");
    let mut freq = Suite::new("odd-frequency-monotone", "d/dr (r^-λ ∫ u_r q) >= 0 for odd λ");
    let mut failures = Vec::new();
    let mut elements = 0usize;
    let mut extensions = 0usize;
    let mut worst_derivative = f64::INFINITY;
    let mut csv = String::from("dim,sample,terms,min_derivative\n");

    for &n in &sc.dims {
        let cat = catalog(n, sc.max_lambda);
        let listing: Vec<_> = cat.iter().map(|q| q.to_json()).collect();
        art.write_json(&format!("catalog_n{n}.json"), &listing)?;
        for q in &cat {
            elements += 1;
            let rep = q.check_invariants();
            if !rep.all() {
                failures.push(format!("n={n} λ={} {:?}", q.lambda(), q.family()));
            }
            if let Some(p) = q.odd_extension() {
                extensions += 1;
                if !p.laplacian().is_zero() {
                    odd_ext = odd_ext.check(false).note(format!("n={n} λ={} has Δ ≠ 0", q.lambda()));
                }
            }
        }

        let s = symmetrized_q(3, n).stage("symmetrized solution")?;
        let identity: Vec<Vec<_>> = (0..n - 1)
            .map(|i| {
                (0..n - 1)
                    .map(|j| fblab_core::poly::q(i64::from(i == j), 1))
                    .collect()
            })
            .collect();
        let qid = make_qa_exact(&identity);
        let target = qid.even_part().expect("polynomial").clone();
        let sym = s.even_poly();
        let (exps, c) = target.terms().next().expect("q_Id is nonzero");
        let ratio = sym.coeff(exps) / c.clone();
        let ok = !ratio.eq(&fblab_core::poly::q(0, 1)) && sym == target.scale(&ratio);
        parallel = parallel.check(ok).metric(&format!("ratio_n{n}"), ratio.to_string());

        let evens: Vec<SignoriniSolution> = even_elements(n, sc.max_lambda);
        let q = make_qa(&DMatrix::identity(n - 1, n - 1)).stage("q_Id")?;
        let rule = QuadratureRule::sphere(n, 24).stage("quadrature")?;
        let radii: Vec<f64> = (2..=10).map(|k| k as f64 / 10.0).collect();
        for sample in 0..sc.samples {
            let terms = random_even_field(&evens, &mut rng);
            let u = FnField::new(n, |x: &[f64]| {
                use fblab_core::field::Evaluable;
                terms.iter().map(|&(w, k)| w * evens[k].value(x)).sum()
            });
            let rep = odd_frequency_monotone_check(&u, &q, 3.0, &radii, &rule).stage("odd frequency")?;
            worst_derivative = worst_derivative.min(rep.min_derivative);
            csv.push_str(&format!("{n},{sample},{},{}\n", terms.len(), rep.min_derivative));
        }
    }
    art.write("odd_frequency.csv", csv)?;
    invariants = invariants
        .metric("elements", elements)
        .metric("failures", failures.clone())
        .check(failures.is_empty() && elements > 0);
    odd_ext = odd_ext.metric("checked", extensions).check(extensions > 0);
    freq = freq
        .metric("samples", sc.samples * sc.dims.len())
        .metric("min_derivative", worst_derivative)
        .metric("tolerance", sc.derivative_tol)
        .check(worst_derivative >= -sc.derivative_tol);
    Ok(vec![invariants, odd_ext, parallel, freq])
}
