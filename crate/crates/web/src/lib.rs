//! wasm-bindgen entry points for the static demo in `www/`.
//!
//! Every function returns a JSON string; failures come back as `{"error": ...}`
//! so the page never has to catch exceptions.

use fblab_core::dimension::{box_dim, default_scales, PointCloud};
use fblab_core::expr::Expr;
use fblab_core::field::Grid;
use fblab_core::signorini::catalog;
use fblab_core::vi_solver::{free_boundary, ObstacleProblem};
use serde_json::{json, Value};
use wasm_bindgen::prelude::wasm_bindgen;

const MAX_NODES: usize = 161;

fn render(r: Result<Value, String>) -> String {
    r.unwrap_or_else(|e| json!({ "error": e })).to_string()
}

fn solve(nodes: usize, expr: &str) -> Result<Value, String> {
    if !(5..=MAX_NODES).contains(&nodes) {
        return Err(format!("nodes must be in 5..={MAX_NODES}"));
    }
    let e = Expr::parse(expr).map_err(|e| e.to_string())?;
    if e.arity() > 2 {
        return Err("the demo grid is two-dimensional; use x1 and x2".into());
    }
    let grid = Grid::centered_box(2, 1.0, nodes).map_err(|e| e.to_string())?;
    let sol = ObstacleProblem::new(grid, |x| e.eval(x, 0.0))
        .and_then(|p| p.solve(None))
        .map_err(|e| e.to_string())?;
    let fb: Vec<Vec<f64>> = free_boundary(&sol).vertices().cloned().collect();
    Ok(json!({
        "nodes": nodes,
        "u": sol.u.values(),
        "contact": sol.contact,
        "residual": sol.residual,
        "iterations": sol.iterations,
        "contact_fraction": sol.contact_fraction(),
        "free_boundary": fb,
    }))
}

fn signorini(dim: usize, max_lambda: u32) -> Result<Value, String> {
    if !(2..=4).contains(&dim) || max_lambda > 9 {
        return Err("dim must be 2..=4 and max_lambda at most 9".into());
    }
    let list: Vec<Value> = catalog(dim, max_lambda)
        .iter()
        .map(|q| {
            let mut v = q.to_json();
            v["invariants"] = json!(q.check_invariants().all());
            v
        })
        .collect();
    Ok(json!({ "dim": dim, "elements": list }))
}

fn dimension(points_json: &str, resolution: f64) -> Result<Value, String> {
    let pts: Vec<Vec<f64>> = serde_json::from_str(points_json).map_err(|e| e.to_string())?;
    let dim = pts.first().map_or(1, Vec::len);
    let cloud = PointCloud::new(dim, pts, resolution).map_err(|e| e.to_string())?;
    let est = box_dim(&cloud, &default_scales(&cloud)).map_err(|e| e.to_string())?;
    serde_json::to_value(est).map_err(|e| e.to_string())
}

/// Obstacle solve on `[-1, 1]²` with boundary data `expr` in `x1, x2`.
#[wasm_bindgen]
pub fn solve_obstacle(nodes: usize, expr: &str) -> String {
    render(solve(nodes, expr))
}

#[wasm_bindgen]
pub fn signorini_catalog(dim: usize, max_lambda: u32) -> String {
    render(signorini(dim, max_lambda))
}

/// Box-counting dimension of a JSON array of points; the smallest box is
/// four `resolution` cells.
#[wasm_bindgen]
pub fn box_dimension(points_json: &str, resolution: f64) -> String {
    render(dimension(points_json, resolution))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: String) -> Value {
        serde_json::from_str(&s).unwrap()
    }

    #[test]
    fn solve_returns_field() {
        let v = parse(solve_obstacle(21, "0.5*x2^2"));
        assert_eq!(v["u"].as_array().unwrap().len(), 21 * 21);
        assert!(v["residual"].as_f64().unwrap() < 1e-6);
    }

    #[test]
    fn errors_are_json() {
        assert!(parse(solve_obstacle(3, "x1")).get("error").is_some());
        assert!(parse(solve_obstacle(21, "x1 +")).get("error").is_some());
        assert!(parse(box_dimension("not json", 1e-3)).get("error").is_some());
    }

    #[test]
    fn catalog_passes_invariants() {
        let v = parse(signorini_catalog(2, 4));
        let els = v["elements"].as_array().unwrap();
        assert!(!els.is_empty());
        assert!(els.iter().all(|e| e["invariants"] == true));
    }

    #[test]
    fn segment_dimension() {
        let pts: Vec<Vec<f64>> = (0..2000).map(|k| vec![k as f64 / 1999.0]).collect();
        let v = parse(box_dimension(&serde_json::to_string(&pts).unwrap(), 1.0 / 1999.0));
        assert!((v["dimension"].as_f64().unwrap() - 1.0).abs() < 0.1, "{v}");
    }
}
