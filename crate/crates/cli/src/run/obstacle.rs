//! Solver-backed kinds: solve, family, analyze, heleshaw.

use fblab_core::blowup::{
    analyze_solution, cleaning_experiment, detect_singular, records_csv, singular_times, Remainder,
    SingularPointRecord,
};
use fblab_core::expr::Expr;
use fblab_core::field::Grid;
use fblab_core::functionals::{Functionals, ProfileParams, Quantity};
use fblab_core::vi_solver::{
    critical_shift, disks_mask, free_boundary, hele_shaw_evolve, hele_shaw_radius, radial_solution,
    solve_family, ObstacleProblem, Provenance, Solution, SolutionFamily,
};
use rayon::prelude::*;

use super::{Artifacts, RunError, RunOptions, Stage};
use crate::config::{BoundaryConfig, ConfigError, ExperimentConfig};
use crate::summary::Suite;

type Rule = Box<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// Boundary data `g(t, x)` resolved from the config. A bisected two-bump
/// shift keeps the solution found at the critical shift.
pub struct Datum {
    rule: Rule,
    pub shift: Option<f64>,
    pub base: Option<Solution>,
}

impl Datum {
    pub fn build(cfg: &ExperimentConfig, grid: &Grid) -> Result<Datum, RunError> {
        let Some(b) = &cfg.boundary else {
            return Ok(Datum {
                rule: Box::new(|_, _| 0.0),
                shift: None,
                base: None,
            });
        };
        match b.clone() {
            BoundaryConfig::Expr { expr } => {
                let e = Expr::parse(&expr).map_err(|e| ConfigError::new("boundary.expr", e.to_string()))?;
                Ok(Datum {
                    rule: Box::new(move |t, x| e.eval(x, t)),
                    shift: None,
                    base: None,
                })
            }
            BoundaryConfig::Radial { radius } => Ok(Datum {
                rule: Box::new(move |t, x| radial_solution(radius, norm(x)) + t),
                shift: None,
                base: None,
            }),
            BoundaryConfig::TwoBump { a, shift, bisection_steps } => {
                let bump = move |c: f64, x: &[f64]| ((0.5 + a) * x[1] * x[1] - a * x[0] * x[0] + c).max(0.0);
                let (c, base) = match shift {
                    Some(c) => (c, None),
                    None => {
                        let (c, sol) = critical_shift(
                            grid,
                            bump,
                            &cfg.base_point(),
                            (-1.0, 1.0),
                            bisection_steps,
                            &cfg.solver,
                        )
                        .stage("critical shift")?;
                        (c, Some(sol))
                    }
                };
                Ok(Datum {
                    rule: Box::new(move |t, x| bump(c + t, x)),
                    shift: Some(c),
                    base,
                })
            }
        }
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        (self.rule)(t, x)
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `K` from the config is held fixed only when `with_source` is set.
fn problem(
    cfg: &ExperimentConfig,
    grid: &Grid,
    datum: &Datum,
    t: f64,
    with_source: bool,
) -> Result<ObstacleProblem, RunError> {
    let mut p = ObstacleProblem::new(grid.clone(), |x| datum.eval(t, x))
        .stage("boundary data")?
        .with_params(cfg.solver.clone());
    if let Some(src) = cfg.source.as_ref().filter(|_| with_source) {
        p = p
            .with_fixed(disks_mask(grid, &src.pairs()), src.value)
            .stage("source set")?;
    }
    Ok(p)
}

fn free_boundary_csv(sol: &Solution) -> String {
    let fb = free_boundary(sol);
    let mut out = String::from("simplex");
    for k in 1..=fb.dim {
        out.push_str(&format!(",x{k}"));
    }
    out.push('\n');
    for (s, simplex) in fb.simplices.iter().enumerate() {
        for v in simplex {
            out.push_str(&s.to_string());
            for c in v {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
    }
    out
}

fn solve_stats(sol: &Solution) -> serde_json::Value {
    serde_json::json!({
        "residual": sol.residual,
        "iterations": sol.iterations,
        "contact_fraction": sol.contact_fraction(),
        "contact_components": sol.contact_components(),
        "positive_components": sol.positive_components(None),
        "free_boundary_length": free_boundary(sol).measure(),
    })
}

pub(super) fn solve(cfg: &ExperimentConfig, art: &mut Artifacts, opts: &RunOptions) -> Result<Vec<Suite>, RunError> {
    let grid = cfg.grid.build().stage("grid")?;
    let mut datum = Datum::build(cfg, &grid)?;
    let sol = match datum.base.take() {
        Some(s) => s,
        None => problem(cfg, &grid, &datum, 0.0, true)?.solve(None).stage("solve")?,
    };
    let h = grid.max_spacing();
    art.write_field("u", &sol, Some(0.0), opts.csv)?;
    art.write("free_boundary.csv", free_boundary_csv(&sol))?;
    let mut stats = solve_stats(&sol);
    stats["h"] = h.into();
    stats["omega"] = cfg.solver.relaxation(&grid).into();
    stats["tol"] = cfg.solver.tolerance(&grid).into();
    if let Some(c) = datum.shift {
        stats["shift"] = c.into();
    }
    art.write_json("solve.json", &stats)?;

    let a = &cfg.analysis;
    let mut suites = vec![Suite::new("lcp-residual", "discrete complementarity min(1 - Δu, u) = 0")
        .metric("residual", sol.residual)
        .metric("limit", a.residual_max)
        .check(sol.residual <= a.residual_max)];
    if let Some(BoundaryConfig::Radial { radius }) = &cfg.boundary {
        let err = free_boundary(&sol)
            .vertices()
            .map(|v| (norm(v) - radius).abs())
            .fold(0.0, f64::max);
        suites.push(
            Suite::new("radial-radius", "radial obstacle solution: contact set is the ball of radius a")
                .metric("max_error", err)
                .metric("limit", a.radius_cells * h)
                .check(err <= a.radius_cells * h && sol.contact_count() > 0),
        );
    }
    if let Some(src) = &a.exact {
        let e = Expr::parse(src).map_err(|e| ConfigError::new("analysis.exact", e.to_string()))?;
        let err = (0..grid.len())
            .map(|i| (sol.u.values()[i] - e.eval(&grid.node(i), 0.0)).abs())
            .fold(0.0, f64::max);
        suites.push(
            Suite::new("exact-solution", "explicit solutions are reproduced")
                .metric("max_node_error", err)
                .metric("limit", a.exact_tol)
                .check(err <= a.exact_tol),
        );
    }
    Ok(suites)
}

pub(super) fn family(cfg: &ExperimentConfig, art: &mut Artifacts, opts: &RunOptions) -> Result<Vec<Suite>, RunError> {
    let grid = cfg.grid.build().stage("grid")?;
    let datum = Datum::build(cfg, &grid)?;
    let ts = cfg.family.as_ref().expect("validated").values()?;
    let fam = solve_family(&grid, |t, x| datum.eval(t, x), &ts, &cfg.solver).stage("family")?;
    art.write("family.csv", family_csv(&fam))?;
    let last = fam.solutions.last().expect("nonempty");
    art.write_field("u_last", last, ts.last().copied(), opts.csv)?;
    Ok(family_suites(&fam))
}

fn family_csv(fam: &SolutionFamily) -> String {
    let mut out = String::from("t,contact_count,contact_fraction,positive_components,residual,iterations\n");
    for (t, s) in fam.t_values.iter().zip(&fam.solutions) {
        out.push_str(&format!(
            "{t},{},{},{},{},{}\n",
            s.contact_count(),
            s.contact_fraction(),
            s.positive_components(None),
            s.residual,
            s.iterations
        ));
    }
    out
}

fn family_suites(fam: &SolutionFamily) -> Vec<Suite> {
    let worst = fam.worst_monotonicity().map_or(0.0, |w| w.2.max(0.0));
    vec![
        Suite::new("monotone-in-t", "comparison principle: u^t is nondecreasing in t")
            .metric("worst_decrease", worst)
            .check(worst <= 1e-9),
        Suite::new("contact-nested", "contact sets shrink as t grows").check(fam.contact_nested()),
    ]
}

/// Monotonicity of φ, W₂, D − 2H and E along `u − p₂` at each record.
pub fn monotonicity_suites(
    sol: &Solution,
    records: &[SingularPointRecord],
    cfg: &ExperimentConfig,
) -> Result<(Vec<Suite>, Vec<Option<fblab_core::functionals::FrequencyProfile>>), RunError> {
    let grid = sol.grid();
    let h = grid.max_spacing();
    let params = &cfg.analysis.blowup;
    let slack = cfg.analysis.slack_cells * h;
    let f = Functionals::new(grid.dim(), params.order).stage("functionals")?;
    let profiles: Vec<Result<Option<_>, fblab_core::Error>> = records
        .par_iter()
        .map(|rec| {
            let r_lo = params.r_min_cells * h;
            let r_hi = cfg.analysis.r_max.min(grid.inscribed_radius(&rec.location) - 2.0 * h);
            if r_hi < 2.0 * r_lo {
                return Ok(None);
            }
            let w = Remainder::new(sol, &rec.location, &rec.p2.poly())?;
            let pp = ProfileParams {
                r_max: r_hi,
                r_min: r_lo,
                theta: params.theta,
                gammas: vec![],
                lambdas: vec![2.0],
                slack,
                with_e: true,
            };
            f.profile(&w, &rec.location, &pp).map(Some)
        })
        .collect();
    let profiles: Vec<_> = profiles.into_iter().collect::<Result<_, _>>().stage("profiles")?;
    let evaluated: Vec<_> = profiles.iter().flatten().collect();
    let skipped = profiles.len() - evaluated.len();
    let worst = |q: Quantity| -> Option<f64> {
        evaluated
            .iter()
            .map(|p| p.max_decrease(q))
            .try_fold(0.0f64, |m, v| v.map(|v| m.max(v)))
    };
    let lowest = |q: Quantity| -> Option<f64> {
        evaluated
            .iter()
            .map(|p| p.min_value(q))
            .try_fold(f64::INFINITY, |m, v| v.map(|v| m.min(v)))
    };
    let decrease = |name: &str, claim: &str, q: Quantity| {
        let v = worst(q);
        Suite::new(name, claim)
            .metric("points", evaluated.len())
            .metric("skipped_near_box", skipped)
            .metric("max_decrease", v)
            .metric("slack", slack)
            .check(v.is_some_and(|v| v <= slack))
    };
    let floor = |name: &str, claim: &str, q: Quantity| {
        let v = lowest(q).map(|v| if v.is_finite() { v } else { 0.0 });
        Suite::new(name, claim)
            .metric("points", evaluated.len())
            .metric("min_value", v)
            .metric("slack", slack)
            .check(v.is_some_and(|v| v >= -slack))
    };
    let suites = vec![
        decrease("frequency-monotone", "Almgren frequency formula: r -> φ(r, u - p2) nondecreasing", Quantity::Phi),
        decrease("weiss-monotone", "Weiss monotonicity formula: r -> W2(r, u - p2) nondecreasing", Quantity::Weiss(0)),
        floor("d-minus-2h", "D(r, u - p2) - 2H(r, u - p2) >= 0", Quantity::DMinusLambdaH(0)),
        floor("e-nonnegative", "E(r, u - p2) >= 0", Quantity::E),
    ];
    Ok((suites, profiles))
}

pub(super) fn analyze(cfg: &ExperimentConfig, art: &mut Artifacts, opts: &RunOptions) -> Result<Vec<Suite>, RunError> {
    let grid = cfg.grid.build().stage("grid")?;
    let mut datum = Datum::build(cfg, &grid)?;
    let base = match datum.base.take() {
        Some(s) => s,
        None => problem(cfg, &grid, &datum, 0.0, false)?.solve(None).stage("solve")?,
    };
    art.write_field("base", &base, Some(0.0), opts.csv)?;
    let params = &cfg.analysis.blowup;
    let records = analyze_solution(&base, 0.0, params);
    art.write_json("records.json", &records)?;
    art.write("records.csv", records_csv(&records))?;

    let (mut suites, profiles) = monotonicity_suites(&base, &records, cfg)?;
    for (k, p) in profiles.iter().enumerate() {
        if let Some(p) = p {
            let mut text = Vec::new();
            p.write_csv(&mut text).stage("profile output")?;
            art.write(&format!("profiles/point_{k:03}.csv"), text)?;
        }
    }
    let mut strata = std::collections::BTreeMap::new();
    for r in &records {
        *strata.entry(r.stratum.label().to_string()).or_insert(0usize) += 1;
    }
    suites.insert(
        0,
        Suite::new("singular-detection", "singular points carry p2 >= 0 with Δp2 = 1")
            .metric("records", records.len())
            .metric("strata", serde_json::to_value(&strata).expect("map"))
            .metric("shift", datum.shift)
            .check(records.iter().all(|r| r.p2.eigenvalues().iter().all(|&l| l >= 0.0))),
    );

    if let (Some(fc), false) = (&cfg.family, cfg.analysis.cleaning_radii.is_empty()) {
        suites.extend(cleaning(cfg, art, &grid, &datum, base, &records, fc.values()?)?);
    }
    Ok(suites)
}

fn cleaning(
    cfg: &ExperimentConfig,
    art: &mut Artifacts,
    grid: &Grid,
    datum: &Datum,
    base: Solution,
    records: &[SingularPointRecord],
    mut ts: Vec<f64>,
) -> Result<Vec<Suite>, RunError> {
    if ts[0] < 0.0 {
        return Err(ConfigError::new("family", "cleaning needs parameters t >= 0").into());
    }
    if ts[0] > 0.0 {
        ts.insert(0, 0.0);
    }
    let params = &cfg.analysis.blowup;
    let radii = &cfg.analysis.cleaning_radii;
    let x0 = cfg.base_point();
    // the base solution starts the family so that t = 0 is exactly the analyzed one
    let mut solutions = vec![base];
    for &t in &ts[1..] {
        let prev = solutions.last().expect("nonempty");
        let next = problem(cfg, grid, datum, t, false)?.solve(Some(&prev.u)).stage("family")?;
        solutions.push(next);
    }
    let fam = SolutionFamily {
        t_values: ts.clone(),
        solutions,
        provenance: Provenance::BoundaryShift,
    };
    art.write("family.csv", family_csv(&fam))?;
    let mut suites = family_suites(&fam);

    let Some(rec) = records
        .iter()
        .filter(|r| dist(&r.location, &x0) <= radii[0])
        .min_by(|a, b| dist(&a.location, &x0).total_cmp(&dist(&b.location, &x0)))
    else {
        suites.push(
            Suite::new("cleaning-absent", "singular points disappear for t > 0")
                .check(false)
                .note("no singular point at the base parameter near the base point"),
        );
        return Ok(suites);
    };
    let report = cleaning_experiment(&fam, rec, radii).stage("cleaning")?;
    art.write_json("cleaning.json", &report)?;
    let mut csv = String::from("r,t_clear,barrier_min,growth_constant\n");
    let opt = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
    for row in &report.rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            row.r,
            opt(row.t_clear),
            opt(row.barrier_min),
            opt(row.growth_constant)
        ));
    }
    art.write("cleaning.csv", csv)?;

    let exclusion = radii[0];
    let mut tested = 0usize;
    let mut present = Vec::new();
    for (&t, sol) in ts.iter().zip(&fam.solutions) {
        if t < cfg.analysis.absent_from {
            continue;
        }
        tested += 1;
        if detect_singular(sol, t, params)
            .iter()
            .any(|r| dist(&r.location, &rec.location) <= exclusion)
        {
            present.push(t);
        }
    }
    suites.push(
        Suite::new("cleaning-absent", "singular points disappear for t > 0")
            .metric("base_location", rec.location.clone())
            .metric("tested_t", tested)
            .metric("exclusion_radius", exclusion)
            .metric("present_at", present.clone())
            .check(tested > 0 && present.is_empty()),
    );
    let a = &cfg.analysis;
    suites.push(
        Suite::new("cleaning-rate", "cleaning lemma: contact near x0 clears at t ~ r^s with s >= 1")
            .metric("exponent", report.exponent)
            .metric("prefactor", report.prefactor)
            .metric("fit_residual", report.residual)
            .metric("nondecreasing", report.nondecreasing)
            .metric("min_exponent", a.min_exponent)
            .metric("max_fit_residual", a.max_fit_residual)
            .check(
                report.nondecreasing
                    && report.exponent.is_some_and(|s| s >= a.min_exponent)
                    && report.residual.is_some_and(|r| r < a.max_fit_residual),
            ),
    );
    Ok(suites)
}

pub(super) fn heleshaw(cfg: &ExperimentConfig, art: &mut Artifacts, opts: &RunOptions) -> Result<Vec<Suite>, RunError> {
    let grid = cfg.grid.build().stage("grid")?;
    let src = cfg.source.as_ref().expect("validated");
    let ts = cfg.family.as_ref().expect("validated").values()?;
    let mask = disks_mask(&grid, &src.pairs());
    let fam = hele_shaw_evolve(&grid, &mask, &ts, &cfg.solver).stage("hele-shaw")?;
    let (report, records) = singular_times(&fam, &cfg.analysis.blowup).stage("singular times")?;

    let mut csv = String::from("t,contact_count,positive_components,free_boundary_length,singular_points\n");
    for (k, (&t, s)) in ts.iter().zip(&fam.solutions).enumerate() {
        let count = report.counts.iter().find(|c| c.0 == t).map_or(0, |c| c.1);
        csv.push_str(&format!(
            "{t},{},{},{},{count}\n",
            s.contact_count(),
            report.positive_components[k],
            free_boundary(s).measure()
        ));
    }
    art.write("heleshaw.csv", csv)?;
    art.write_json("singular_times.json", &report)?;
    let mut counts = Vec::new();
    report.box_dim.write_csv(&mut counts).stage("box counts")?;
    art.write("box_counts.csv", counts)?;
    art.write_json("records.json", &records)?;
    art.write("records.csv", records_csv(&records))?;
    art.write_field("u_last", fam.solutions.last().expect("nonempty"), ts.last().copied(), opts.csv)?;

    let h = grid.max_spacing();
    let a = &cfg.analysis;
    let mut suites = vec![
        Suite::new("contact-nested", "the wet region grows with t").check(fam.contact_nested()),
        Suite::new(
            "singular-times-dimension",
            "dim_H of singular times <= 1/4 (box-counting estimate with 0.1 slack)",
        )
        .metric("box_dim", report.box_dim.dimension)
        .metric("fit_residual", report.box_dim.residual)
        .metric("degenerate", report.box_dim.degenerate)
        .metric("time_resolution", report.time_resolution)
        .metric("singular_times", report.counts.len())
        .metric("intervals", serde_json::to_value(&report.intervals).expect("pairs"))
        .metric("limit", a.times_dim_max)
        .check(report.box_dim.dimension <= a.times_dim_max),
    ];
    if let [disk] = src.disks.as_slice() {
        let mut worst: f64 = 0.0;
        for (&t, s) in ts.iter().zip(&fam.solutions) {
            let s_t = hele_shaw_radius(disk.radius, t);
            for v in free_boundary(s).vertices() {
                worst = worst.max((dist(v, &disk.center) - s_t).abs());
            }
        }
        suites.push(
            Suite::new("radial-front", "radial Hele-Shaw front from the scalar radius equation")
                .metric("max_error", worst)
                .metric("limit", a.radius_cells * h)
                .check(worst <= a.radius_cells * h),
        );
    }
    Ok(suites)
}
