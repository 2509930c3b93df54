//! Classification of free-boundary points, blow-up polynomial fits, strata
//! and cleaning experiments on monotone families.

mod cleaning;
mod fit;
mod remainder;
mod times;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{extrapolate_series, Extrapolation, Functionals, ProfileParams, Quantity};
use crate::poly::{build_ansatz, CubicBlowup, FPoly, PolyJson, QuadraticBlowup};
use crate::vi_solver::Solution;

pub use cleaning::{cleaning_experiment, CleaningReport, CleaningRow};
pub use fit::{fit_p2, fit_p3, fit_p4, half_space_fit, P2Fit, P3Fit, P4Fit};
pub use remainder::{rescale, Remainder, Rescaled};
pub use times::{singular_times, spacetime_cloud, SingularTimesReport};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct Thresholds {
    /// Lower edge `2 + α` of the `Σ_{n−1}^{<3}` band.
    pub alpha: f64,
    /// `|λ2nd − 2| <` this marks an anomalous point.
    pub anomalous: f64,
    /// Slack on integer frequency thresholds.
    pub tol: f64,
    /// `Σ*` candidates need `λ4th ≥ 5 − ζ − tol`.
    pub zeta: f64,
    /// Largest relative misfit accepted for a harmonic quartic accumulation.
    pub quartic_misfit: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            alpha: 0.1,
            anomalous: 0.1,
            tol: 0.1,
            zeta: 0.1,
            quartic_misfit: 0.25,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct BlowupParams {
    pub r_fit: f64,
    /// Smallest radius in units of the grid spacing.
    pub r_min_cells: f64,
    /// Ratio between consecutive profile radii.
    pub theta: f64,
    /// Relative misfit gap below which a classification is ambiguous.
    pub margin_min: f64,
    /// Largest accepted relative misfit of the quadratic fit.
    pub misfit_max: f64,
    /// Eigenvalues of the fitted matrix below this are set to zero.
    pub snap: f64,
    /// Contact density in `B_{4h}` above which a node is not a singular candidate.
    pub density_max: f64,
    pub extrapolation_points: usize,
    pub gamma3: f64,
    pub gamma4: f64,
    pub order: usize,
    /// `w` counts as identically zero when `|w| ≤ degenerate·|x − x₀|²` on the fit nodes.
    pub degenerate: f64,
    pub thresholds: Thresholds,
}

impl Default for BlowupParams {
    fn default() -> Self {
        BlowupParams {
            r_fit: 0.2,
            r_min_cells: 4.0,
            theta: 0.9,
            margin_min: 0.1,
            misfit_max: 0.35,
            snap: 0.05,
            density_max: 0.3,
            extrapolation_points: 6,
            gamma3: 4.5,
            gamma4: 4.9,
            order: 24,
            degenerate: 1e-9,
            thresholds: Thresholds::default(),
        }
    }
}

impl BlowupParams {
    /// `(r_lo, r_hi)` for a base point, shrinking `r_fit` to stay in the box.
    pub fn radii(&self, sol: &Solution, x0: &[f64]) -> Result<(f64, f64)> {
        let g = sol.grid();
        let h = g.max_spacing();
        let r_lo = self.r_min_cells * h;
        let r_hi = self.r_fit.max(2.5 * r_lo).min(g.inscribed_radius(x0) - 2.0 * h);
        if !(r_hi >= 2.0 * r_lo) {
            return Err(Error::DomainEscape {
                center: x0.to_vec(),
                radius: 2.0 * r_lo,
            });
        }
        Ok((r_lo, r_hi))
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stratum {
    #[serde(rename = "Sigma_m")]
    SigmaM,
    #[serde(rename = "Sigma_m^a")]
    Anomalous,
    #[serde(rename = "Sigma_{n-1}^{<3}")]
    Below3,
    #[serde(rename = "Sigma_{n-1}^{>=3}")]
    AtLeast3,
    #[serde(rename = "Sigma_{n-1}^{3rd}")]
    Third,
    #[serde(rename = "Sigma_{n-1}^{>=4}")]
    AtLeast4,
    #[serde(rename = "Sigma_{n-1}^{4th}")]
    Fourth,
    #[serde(rename = "Sigma*-candidate")]
    StarCandidate,
    #[serde(rename = "ambiguous")]
    Ambiguous,
}

impl Stratum {
    pub fn label(&self) -> &'static str {
        match self {
            Stratum::SigmaM => "Sigma_m",
            Stratum::Anomalous => "Sigma_m^a",
            Stratum::Below3 => "Sigma_{n-1}^{<3}",
            Stratum::AtLeast3 => "Sigma_{n-1}^{>=3}",
            Stratum::Third => "Sigma_{n-1}^{3rd}",
            Stratum::AtLeast4 => "Sigma_{n-1}^{>=4}",
            Stratum::Fourth => "Sigma_{n-1}^{4th}",
            Stratum::StarCandidate => "Sigma*-candidate",
            Stratum::Ambiguous => "ambiguous",
        }
    }

    /// Depth in the chain `Σ_{n−1} ⊃ Σ^{≥3} ⊃ Σ^{3rd} ⊃ Σ^{≥4} ⊃ Σ^{4th} ⊃ Σ*`.
    pub fn depth(&self) -> Option<usize> {
        match self {
            Stratum::Below3 => Some(0),
            Stratum::AtLeast3 => Some(1),
            Stratum::Third => Some(2),
            Stratum::AtLeast4 => Some(3),
            Stratum::Fourth => Some(4),
            Stratum::StarCandidate => Some(5),
            _ => None,
        }
    }

    pub fn is_codimension_one(&self) -> bool {
        self.depth().is_some()
    }
}

/// Zero-radius limit of a frequency-type quantity.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FrequencyEstimate {
    /// `None` when `w` vanishes identically on the fit region.
    pub value: Option<f64>,
    pub residual: f64,
    /// Value at the smallest radius.
    pub at_r_min: Option<f64>,
    pub degenerate: bool,
    pub monotone: bool,
    pub extrapolation: Option<Extrapolation>,
}

impl FrequencyEstimate {
    fn degenerate(value: Option<f64>) -> Self {
        FrequencyEstimate {
            value,
            residual: 0.0,
            at_r_min: value,
            degenerate: true,
            monotone: true,
            extrapolation: None,
        }
    }

    /// Value used for thresholds; a vanishing remainder passes every threshold.
    pub fn effective(&self) -> f64 {
        self.value.unwrap_or(f64::INFINITY)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RegularInfo {
    pub location: Vec<f64>,
    pub normal: Vec<f64>,
    pub half_space_misfit: f64,
    pub quadratic_misfit: f64,
    pub ambiguous: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SingularPointRecord {
    pub location: Vec<f64>,
    pub t: f64,
    pub dim: usize,
    pub p2: QuadraticBlowup,
    /// `dim ker A`.
    pub m: usize,
    pub half_space_misfit: f64,
    pub quadratic_misfit: f64,
    pub ambiguous: bool,
    pub stratum: Stratum,
    pub lambda2: Option<FrequencyEstimate>,
    pub lambda3: Option<FrequencyEstimate>,
    pub lambda4: Option<FrequencyEstimate>,
    /// `a_1..a_n` in `frame`.
    pub p3: Option<Vec<f64>>,
    pub frame: Option<Vec<Vec<f64>>>,
    /// Harmonic cubic fits at least as well as the `q_A` family.
    pub third_order: Option<bool>,
    pub cubic_misfit: Option<f64>,
    pub qa_misfit: Option<f64>,
    pub monneau_drift: Option<f64>,
    pub fourth_order: Option<bool>,
    pub p4: Option<PolyJson>,
    pub p4_misfit: Option<f64>,
    pub ansatz: Option<PolyJson>,
    pub notes: Vec<String>,
}

impl SingularPointRecord {
    pub fn frame_matrix(&self) -> Option<DMatrix<f64>> {
        self.frame.as_ref().map(|f| {
            let n = f.len();
            DMatrix::from_fn(n, n, |i, j| f[i][j])
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub enum Classification {
    Regular(RegularInfo),
    Singular(Box<SingularPointRecord>),
}

impl Classification {
    pub fn is_singular(&self) -> bool {
        matches!(self, Classification::Singular(_))
    }
}

fn near_free_boundary(sol: &Solution, x0: &[f64]) -> bool {
    let g = sol.grid();
    let h = g.max_spacing();
    let reach = h * (1.0 + 1e-9);
    if !g.contains(x0) {
        return false;
    }
    g.nodes_in_ball(x0, reach)
        .into_iter()
        .any(|i| sol.contact[i] && g.neighbors(i).any(|j| !sol.contact[j]))
}

/// Regular if the half-space profile fits better than any `p₂`, singular otherwise.
pub fn classify_point(sol: &Solution, x0: &[f64], t: f64, params: &BlowupParams) -> Result<Classification> {
    if !near_free_boundary(sol, x0) {
        return Err(Error::NotOnFreeBoundary(x0.to_vec()));
    }
    let (r_lo, r_hi) = params.radii(sol, x0)?;
    let (normal, half) = half_space_fit(sol, x0, r_lo, r_hi)?;
    let quad = fit::fit_quadratic(sol, x0, r_lo, r_hi, params)?;
    let margin = (half - quad.misfit).abs() / half.max(quad.misfit).max(1e-300);
    let ambiguous = margin < params.margin_min;
    if half < quad.misfit {
        return Ok(Classification::Regular(RegularInfo {
            location: x0.to_vec(),
            normal,
            half_space_misfit: half,
            quadratic_misfit: quad.misfit,
            ambiguous,
        }));
    }
    let m = quad.p2.kernel_dim();
    let mut record = SingularPointRecord {
        location: x0.to_vec(),
        t,
        dim: x0.len(),
        p2: quad.p2,
        m,
        half_space_misfit: half,
        quadratic_misfit: quad.misfit,
        ambiguous,
        stratum: Stratum::Ambiguous,
        lambda2: None,
        lambda3: None,
        lambda4: None,
        p3: None,
        frame: None,
        third_order: None,
        cubic_misfit: None,
        qa_misfit: None,
        monneau_drift: None,
        fourth_order: None,
        p4: None,
        p4_misfit: None,
        ansatz: None,
        notes: Vec::new(),
    };
    if quad.misfit > params.misfit_max {
        record.notes.push(format!("quadratic misfit {:.3} above limit", quad.misfit));
    }
    record.stratum = assign_stratum(&record, &params.thresholds);
    Ok(Classification::Singular(Box::new(record)))
}

/// Frequency-type limit of `q` for the remainder `w` around `x0`.
pub fn frequency_limit(
    w: &Remainder,
    x0: &[f64],
    q: Quantity,
    gammas: Vec<f64>,
    r_lo: f64,
    r_hi: f64,
    params: &BlowupParams,
) -> Result<FrequencyEstimate> {
    let dim = x0.len();
    if w.is_degenerate(x0, r_lo, r_hi, params.degenerate) {
        let value = match q {
            Quantity::PhiGamma(k) => Some(gammas[k]),
            _ => None,
        };
        return Ok(FrequencyEstimate::degenerate(value));
    }
    let functionals = Functionals::new(dim, params.order)?;
    let h = w.grid().max_spacing();
    let pp = ProfileParams {
        r_max: r_hi,
        r_min: r_lo,
        theta: params.theta,
        gammas,
        lambdas: vec![2.0],
        slack: ProfileParams::slack_for(h, 10.0),
        with_e: false,
    };
    let profile = functionals.profile(w, x0, &pp)?;
    let series = profile
        .series(q)
        .ok_or_else(|| Error::InvalidArgument(format!("{q:?} undefined on this profile")))?;
    let monotone = series.windows(2).all(|s| s[1].1 <= s[0].1 + pp.slack);
    let at_r_min = series.last().map(|s| s.1);
    let points = params.extrapolation_points.min(series.len());
    if points < 4 {
        return Ok(FrequencyEstimate {
            value: at_r_min,
            residual: f64::NAN,
            at_r_min,
            degenerate: false,
            monotone,
            extrapolation: None,
        });
    }
    let ex = extrapolate_series(&series, points, pp.slack)?;
    // a fit that increases toward r = 0 contradicts monotonicity; fall back to the last value
    let value = if ex.coefficient >= 0.0 && ex.limit.is_finite() {
        ex.limit
    } else {
        at_r_min.unwrap_or(ex.limit)
    };
    Ok(FrequencyEstimate {
        value: Some(value),
        residual: ex.residual,
        at_r_min,
        degenerate: false,
        monotone,
        extrapolation: Some(ex),
    })
}

/// Thresholds the record's evidence into one label of the strata chain.
pub fn assign_stratum(record: &SingularPointRecord, th: &Thresholds) -> Stratum {
    if record.ambiguous {
        return Stratum::Ambiguous;
    }
    let n = record.dim;
    if record.m + 1 < n || n == 1 {
        return match &record.lambda2 {
            Some(l) if l.value.is_some_and(|v| (v - 2.0).abs() < th.anomalous) => Stratum::Anomalous,
            _ => Stratum::SigmaM,
        };
    }
    let Some(l2) = &record.lambda2 else {
        // no frequency evidence yet: only the coarse label
        return Stratum::Below3;
    };
    if l2.effective() < 3.0 - th.tol {
        return Stratum::Below3;
    }
    if record.third_order != Some(true) {
        return Stratum::AtLeast3;
    }
    match &record.lambda3 {
        Some(l3) if l3.effective() >= 4.0 - th.tol => {}
        _ => return Stratum::Third,
    }
    if record.fourth_order != Some(true) {
        return Stratum::AtLeast4;
    }
    match &record.lambda4 {
        Some(l4) if l4.effective() >= 5.0 - th.zeta - th.tol => Stratum::StarCandidate,
        _ => Stratum::Fourth,
    }
}

/// Runs the full chain of fits and frequency limits on a singular record.
pub fn analyze_singular(sol: &Solution, record: &mut SingularPointRecord, params: &BlowupParams) -> Result<()> {
    let x0 = record.location.clone();
    let (r_lo, r_hi) = params.radii(sol, &x0)?;
    let n = record.dim;
    let p2poly = record.p2.poly();
    let w2 = Remainder::new(sol, &x0, &p2poly)?;
    let l2 = frequency_limit(&w2, &x0, Quantity::Phi, vec![], r_lo, r_hi, params)?;
    record.lambda2 = Some(l2.clone());
    if record.m + 1 != n || n < 2 || l2.effective() < 3.0 - params.thresholds.tol {
        record.stratum = assign_stratum(record, &params.thresholds);
        return Ok(());
    }
    let p3 = fit_p3(sol, &x0, &record.p2, l2.effective(), params)?;
    record.p3 = Some(p3.p3.coefficients().to_vec());
    record.frame = Some(
        (0..n)
            .map(|i| (0..n).map(|j| p3.frame[(i, j)]).collect())
            .collect(),
    );
    record.third_order = Some(p3.harmonic_preferred);
    record.cubic_misfit = Some(p3.misfit);
    record.qa_misfit = Some(p3.qa_misfit);
    record.monneau_drift = p3.monneau_drift;
    if !p3.harmonic_preferred {
        record.stratum = assign_stratum(record, &params.thresholds);
        return Ok(());
    }
    let ansatz = build_ansatz(&QuadraticBlowup::standard(n), &p3.p3)?;
    record.ansatz = Some(ansatz.to_json());
    let ansatz_x = in_frame(&ansatz, &p3.frame);
    let w3 = Remainder::new(sol, &x0, &ansatz_x)?;
    let l3 = frequency_limit(&w3, &x0, Quantity::PhiGamma(0), vec![params.gamma3], r_lo, r_hi, params)?;
    record.lambda3 = Some(l3.clone());
    if l3.effective() >= 4.0 - params.thresholds.tol {
        let p4 = fit_p4(sol, &x0, &p3.frame, &ansatz, params)?;
        record.fourth_order = Some(p4.degenerate || p4.misfit <= params.thresholds.quartic_misfit);
        record.p4_misfit = Some(p4.misfit);
        record.p4 = Some(p4.p4.to_json());
        record.lambda4 = Some(p4.lambda4);
        if p4.rank_deficient {
            record.notes.push("quartic fit is rank deficient".into());
        }
        if p4.degenerate {
            record.notes.push("degenerate (w ≡ 0)".into());
        }
    }
    record.stratum = assign_stratum(record, &params.thresholds);
    Ok(())
}

/// `z ↦ p(Fᵀ z)` for a polynomial written in frame coordinates.
pub fn in_frame(p: &FPoly, frame: &DMatrix<f64>) -> FPoly {
    let n = frame.nrows();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| frame[(j, i)]).collect()).collect();
    p.compose_linear(&rows)
}

/// Contact fraction of the nodes in `B_r(x)`.
pub fn contact_density(sol: &Solution, x: &[f64], r: f64) -> f64 {
    let nodes = sol.grid().nodes_in_ball(x, r);
    if nodes.is_empty() {
        return 0.0;
    }
    nodes.iter().filter(|&&i| sol.contact[i]).count() as f64 / nodes.len() as f64
}

/// Free-boundary nodes of low contact density whose classification is singular.
pub fn detect_singular(sol: &Solution, t: f64, params: &BlowupParams) -> Vec<SingularPointRecord> {
    let g = sol.grid();
    let h = g.max_spacing();
    let reach = params.r_min_cells * h;
    let candidates: Vec<usize> = sol
        .free_boundary_nodes()
        .into_iter()
        .filter(|&i| {
            let x = g.node(i);
            g.inscribed_radius(&x) - 2.0 * h >= 2.0 * reach
                && contact_density(sol, &x, reach) <= params.density_max
        })
        .collect();
    candidates
        .par_iter()
        .filter_map(|&i| match classify_point(sol, &g.node(i), t, params) {
            Ok(Classification::Singular(rec)) if rec.quadratic_misfit <= params.misfit_max => Some(*rec),
            _ => None,
        })
        .collect()
}

/// Detects singular points and runs [`analyze_singular`] on each.
pub fn analyze_solution(sol: &Solution, t: f64, params: &BlowupParams) -> Vec<SingularPointRecord> {
    let mut records = detect_singular(sol, t, params);
    records.par_iter_mut().for_each(|rec| {
        if let Err(e) = analyze_singular(sol, rec, params) {
            rec.notes.push(format!("analysis stopped: {e}"));
        }
    });
    records
}

/// Flat CSV of records: `x0…,t,m,lambda2,lambda3,lambda4,stratum`.
pub fn records_csv(records: &[SingularPointRecord]) -> String {
    let dim = records.first().map_or(2, |r| r.dim);
    let mut out = String::new();
    for k in 1..=dim {
        out.push_str(&format!("x{k},"));
    }
    out.push_str("t,m,lambda2,lambda3,lambda4,stratum\n");
    let fmt = |l: &Option<FrequencyEstimate>| match l {
        Some(FrequencyEstimate { value: Some(v), .. }) => format!("{v}"),
        Some(_) => "degenerate".to_string(),
        None => String::new(),
    };
    for r in records {
        for x in &r.location {
            out.push_str(&format!("{x},"));
        }
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.t,
            r.m,
            fmt(&r.lambda2),
            fmt(&r.lambda3),
            fmt(&r.lambda4),
            r.stratum.label()
        ));
    }
    out
}

/// Tangential coefficients of a cubic blowup from `M` in `x_n(½x′Mx′ − (tr M/6)x_n²)`.
pub(crate) fn cubic_from_matrix(m: &DMatrix<f64>) -> (CubicBlowup<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let k = m.nrows();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut v = DMatrix::zeros(k, k);
    let mut coeffs = Vec::with_capacity(k);
    for (col, &j) in order.iter().enumerate() {
        let mut vec = eig.eigenvectors.column(j).clone_owned();
        let lead = vec.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        if lead < 0.0 {
            vec = -vec;
        }
        v.set_column(col, &vec);
        coeffs.push(eig.eigenvalues[j]);
    }
    (CubicBlowup::new(coeffs), v)
}

#[cfg(test)]
mod tests;
