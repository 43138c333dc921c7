//! Browser bindings. Each export takes plain numbers or strings and returns a
//! JSON document for the page to draw; the `*_json` functions are the same
//! computations without the wasm-bindgen wrapper.

use std::sync::Arc;

use serde::Serialize;
use serde_json::Value;
use toric_quant::expr::WeightExpr;
use toric_quant::polarization::decay_report;
use toric_quant::quadrature::concentration_experiment;
use toric_quant::sections::MonomialSection;
use toric_quant::subtorus::{adapted_basis, pullback, Quadratic};
use toric_quant::{fixtures, DelzantPolytope, SubtorusProjection, SymplecticPotential};
use wasm_bindgen::prelude::*;

type Out = Result<String, String>;

fn first_axis(n: usize) -> SubtorusProjection {
    let mut row = vec![0; n];
    row[0] = 1;
    SubtorusProjection::new(vec![row]).expect("e1 is primitive")
}

fn family(
    p: &DelzantPolytope,
    proj: &SubtorusProjection,
    t: f64,
) -> Result<SymplecticPotential, String> {
    let psi = pullback(Arc::new(Quadratic::half_norm_squared(proj.rank())), proj)
        .map_err(|e| e.to_string())?;
    SymplecticPotential::new(p.clone(), Arc::new(psi), t).map_err(|e| e.to_string())
}

fn parse_point(s: &str) -> Result<Vec<i64>, String> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<i64>()
                .map_err(|_| format!("bad integer {v:?}"))
        })
        .collect()
}

fn to_json<T: Serialize>(v: &T) -> Out {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Profile {
    dim: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    n: usize,
    /// `|σᵐ_t|` at cell centers scaled to max 1, row-major; `null` outside `P`.
    values: Vec<Option<f64>>,
    scale_log: f64,
}

/// Pointwise norm of `σᵐ` at time `t` on an `n`-point (per axis) grid over
/// the bounding box of a one- or two-dimensional fixture.
pub fn section_profile_json(fixture: &str, m: &str, t: f64, n: usize) -> Out {
    let p = fixtures::by_name(fixture).ok_or_else(|| format!("unknown fixture {fixture:?}"))?;
    if p.dim() > 2 {
        return Err("only one- and two-dimensional fixtures can be drawn".into());
    }
    if !(2..=400).contains(&n) {
        return Err("grid size must be between 2 and 400".into());
    }
    let section = MonomialSection::new(parse_point(m)?, family(&p, &first_axis(p.dim()), t)?)
        .map_err(|e| e.to_string())?;
    let (lo, hi) = p.bounding_box();
    let rows = if p.dim() == 1 { 1 } else { n };
    let mut logs = Vec::with_capacity(n * rows);
    for r in 0..rows {
        for c in 0..n {
            let mut x = vec![lo[0] + (hi[0] - lo[0]) * (c as f64 + 0.5) / n as f64];
            if p.dim() == 2 {
                x.push(lo[1] + (hi[1] - lo[1]) * (r as f64 + 0.5) / n as f64);
            }
            logs.push(
                section
                    .extended_norm(&x)
                    .ok()
                    .filter(|v| *v > 0.0)
                    .map(f64::ln),
            );
        }
    }
    let top = logs
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    to_json(&Profile {
        dim: p.dim(),
        lo,
        hi,
        n,
        values: logs.iter().map(|l| l.map(|v| (v - top).exp())).collect(),
        scale_log: top,
    })
}

/// Distance between the time-`t` and limit polarizations at `(x1, x2)` on the
/// square `[0,2]²` for `t = 1, 2, 4, …, t_max`.
pub fn polarization_decay_json(x1: f64, x2: f64, t_max: f64) -> Out {
    let p = fixtures::square(2);
    let proj = first_axis(2);
    let basis = adapted_basis(&proj).map_err(|e| e.to_string())?;
    let t_list: Vec<f64> = (0..20)
        .map(|i| 2f64.powi(i))
        .take_while(|t| *t <= t_max)
        .collect();
    if t_list.len() < 2 {
        return Err("t_max must be at least 2".into());
    }
    let report = decay_report(&family(&p, &proj, 0.0)?, &basis, &[x1, x2], &t_list)
        .map_err(|e| e.to_string())?;
    to_json(&report)
}

/// `R_t` against the slice pairing on the square `[0,2]²` for the weight `u`
/// and lattice point `m`.
pub fn concentration_json(u: &str, m: &str, resolution: usize) -> Out {
    let p = fixtures::square(2);
    let proj = first_axis(2);
    let expr: WeightExpr = u.parse().map_err(|e: toric_quant::Error| e.to_string())?;
    expr.check_dim(2).map_err(|e| e.to_string())?;
    let t_list = [4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0];
    let res = concentration_experiment(
        &family(&p, &proj, 0.0)?,
        &proj,
        &parse_point(m)?,
        |x| expr.eval(x),
        &t_list,
        resolution,
    )
    .map_err(|e| e.to_string())?;
    let mut v = serde_json::to_value(&res).map_err(|e| e.to_string())?;
    v["error_ratios"] = Value::from(res.error_ratios());
    to_json(&v)
}

fn js(r: Out) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn section_profile(fixture: &str, m: &str, t: f64, n: usize) -> Result<String, JsValue> {
    js(section_profile_json(fixture, m, t, n))
}

#[wasm_bindgen]
pub fn polarization_decay(x1: f64, x2: f64, t_max: f64) -> Result<String, JsValue> {
    js(polarization_decay_json(x1, x2, t_max))
}

#[wasm_bindgen]
pub fn concentration(u: &str, m: &str, resolution: usize) -> Result<String, JsValue> {
    js(concentration_json(u, m, resolution))
}
