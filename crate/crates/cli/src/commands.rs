//! One function per command; each returns a [`RunReport`] whose checks
//! decide the exit status.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::DVector;
use serde_json::json;
use sha2::{Digest, Sha256};
use toric_quant::legendre::{flow_identity_residual, LegendrePair};
use toric_quant::polarization::{
    decay_report, grassmann_distance, kernel_subframe, limit_frame, polarization_frame,
};
use toric_quant::potential::validate_potential;
use toric_quant::quadrature::{concentration_experiment, QuadratureRule};
use toric_quant::sections::{
    closed_form_norm_g0, l1_norm, l1_norm_ratio, pairwise_orthogonality, MonomialSection,
};
use toric_quant::{fixtures, sampling, SymplecticPotential};

use crate::config::{CliError, CliResult, ExperimentConfig};
use crate::report::{Check, RunReport, Series, Table};

pub const COMMANDS: [&str; 10] = [
    "validate",
    "lattice",
    "weights",
    "potential-validate",
    "legendre-roundtrip",
    "flow-check",
    "polarization-limit",
    "sections-norms",
    "concentrate",
    "full-suite",
];

const POTENTIAL_TIMES: [f64; 3] = [1.0, 10.0, 100.0];
const LEGENDRE_TIMES: [f64; 4] = [0.0, 1.0, 10.0, 100.0];
const FLOW_TIMES: [f64; 3] = [1.0, 5.0, 10.0];
const POTENTIAL_SAMPLES: usize = 1000;
const ROUNDTRIP_POINTS: usize = 100;
const FLOW_POINTS: usize = 20;
const FACTORIZATION_SAMPLES: usize = 100;

/// Maps `polytope validate`, `legendre flow-check`, … onto run commands.
/// Returns the command and how many words it consumed.
pub fn normalize_command(words: &[String]) -> CliResult<(String, usize)> {
    let first = words.first().map(String::as_str).unwrap_or("");
    let second = words.get(1).map(String::as_str).unwrap_or("");
    let two = match (first, second) {
        ("polytope", "validate") => Some("validate"),
        ("polytope", "lattice") => Some("lattice"),
        ("polytope", "weights") => Some("weights"),
        ("potential", "validate") => Some("potential-validate"),
        ("legendre", "roundtrip") => Some("legendre-roundtrip"),
        ("legendre", "flow-check") => Some("flow-check"),
        ("polarization", "limit") => Some("polarization-limit"),
        ("sections", "norms") => Some("sections-norms"),
        _ => None,
    };
    if let Some(c) = two {
        return Ok((c.to_string(), 2));
    }
    if COMMANDS.contains(&first) {
        return Ok((first.to_string(), 1));
    }
    Err(CliError::new(
        "E_USAGE",
        format!("unknown command {:?}", words.join(" ")),
    ))
}

pub fn config_digest(cfg: &ExperimentConfig) -> String {
    let bytes = serde_json::to_vec(&cfg.canonical()).expect("config serializes");
    Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn run(cfg: &ExperimentConfig, command: &str, timings: bool) -> CliResult<RunReport> {
    let digest = config_digest(cfg);
    let start = Instant::now();
    let mut report = match command {
        "validate" => validate(cfg, &digest),
        "lattice" => lattice(cfg, &digest),
        "weights" => weights(cfg, &digest),
        "potential-validate" => potential_validate(cfg, &digest),
        "legendre-roundtrip" => legendre_roundtrip(cfg, &digest),
        "flow-check" => flow_check(cfg, &digest),
        "polarization-limit" => polarization_limit(cfg, &digest),
        "sections-norms" => sections_norms(cfg, &digest),
        "concentrate" => concentrate(cfg, &digest),
        "full-suite" => full_suite(cfg, &digest, timings),
        other => Err(CliError::new(
            "E_USAGE",
            format!("unknown command {other:?}"),
        )),
    }?;
    if timings {
        report
            .timings
            .get_or_insert_with(BTreeMap::new)
            .insert("total_seconds".into(), start.elapsed().as_secs_f64());
    }
    Ok(report)
}

fn full_suite(cfg: &ExperimentConfig, digest: &str, timings: bool) -> CliResult<RunReport> {
    let parts = &COMMANDS[..COMMANDS.len() - 1];
    #[cfg(feature = "parallel")]
    let results: Vec<CliResult<RunReport>> = {
        use rayon::prelude::*;
        parts.par_iter().map(|c| run(cfg, c, timings)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<CliResult<RunReport>> = parts.iter().map(|c| run(cfg, c, timings)).collect();
    let mut report = RunReport::new("full-suite", digest);
    for (name, r) in parts.iter().zip(results) {
        report.absorb(name, r?);
    }
    report.plot_labels = ("t".into(), "distance / error".into());
    Ok(report)
}

fn validate(cfg: &ExperimentConfig, digest: &str) -> CliResult<RunReport> {
    let p = &cfg.polytope;
    let mut r = RunReport::new("validate", digest);
    let cert = p.is_delzant();
    r.output("dim", p.dim());
    r.output("facets", p.num_facets());
    r.output("vertices", p.vertices());
    r.output("certificate", &cert);
    r.check(Check::flag("delzant", cert.is_delzant));
    // each vertex has exactly n active facets
    let worst = p
        .vertices()
        .iter()
        .map(|v| (v.active_facets.len() as f64 - p.dim() as f64).abs())
        .fold(0.0, f64::max);
    r.check(Check::equals("active_facet_excess", worst, 0.0));
    let mut t = Table::new(&["vertex", "active_facets"]);
    for v in p.vertices() {
        t.push(vec![
            v.point
                .iter()
                .map(|q| q.to_string())
                .collect::<Vec<_>>()
                .join(" "),
            v.active_facets
                .iter()
                .map(|j| j.to_string())
                .collect::<Vec<_>>()
                .join(" "),
        ]);
    }
    r.table = Some(t);
    Ok(r)
}

fn lattice(cfg: &ExperimentConfig, digest: &str) -> CliResult<RunReport> {
    let pts = cfg.polytope.lattice_points();
    let mut r = RunReport::new("lattice", digest);
    r.output("count", pts.len());
    r.output("points", &pts);
    let sections =
        MonomialSection::all(&SymplecticPotential::canonical(cfg.polytope.clone())).len();
    r.check(Check::equals(
        "sections_minus_points",
        sections as f64 - pts.len() as f64,
        0.0,
    ));
    let mut t = Table::new(&["m"]);
    for m in &pts {
        t.push(vec![join_ints(m)]);
    }
    r.table = Some(t);
    Ok(r)
}

fn weights(cfg: &ExperimentConfig, digest: &str) -> CliResult<RunReport> {
    let mult = cfg.polytope.weight_multiplicities(&cfg.proj)?;
    let count = cfg.polytope.lattice_points().len();
    let mut r = RunReport::new("weights", digest);
    let keyed: BTreeMap<String, usize> = mult.iter().map(|(k, v)| (join_ints(k), *v)).collect();
    r.output("proj", cfg.proj.rows());
    r.output("multiplicities", &keyed);
    r.output("count", count);
    let total: usize = mult.values().sum();
    r.check(Check::equals(
        "multiplicity_sum_minus_count",
        total as f64 - count as f64,
        0.0,
    ));
    let mut t = Table::new(&["weight", "multiplicity"]);
    for (k, v) in &mult {
        t.push(vec![join_ints(k), v.to_string()]);
    }
    r.table = Some(t);
    Ok(r)
}

fn potential_validate(cfg: &ExperimentConfig, digest: &str) -> CliResult<RunReport> {
    let p = &cfg.polytope;
    let boundary = sampling::boundary_approach_points(p);
    let interior = sampling::interior_points(
        p,
        POTENTIAL_SAMPLES.saturating_sub(boundary.len()).max(1),
        cfg.seed,
        1e-6,
    );
    let mut r = RunReport::new("potential-validate", digest);
    let mut t = Table::new(&["t", "min_eigenvalue", "min_product", "max_product"]);

    let canon = validate_potential(
        &SymplecticPotential::canonical(p.clone()),
        &interior,
        &boundary,
    )?;
    r.output("g0", &canon);
    r.output("g0_product_spread", canon.max_product - canon.min_product);
    r.check(Check::flag("g0.positive_definite", canon.positive_definite));
    r.check(Check::flag("g0.product_positive_finite", canon.is_valid()));
    t.push(row(&[
        0.0,
        canon.min_eigenvalue,
        canon.min_product,
        canon.max_product,
    ]));

    let times = cfg.explicit_times().unwrap_or(&POTENTIAL_TIMES);
    let mut per_t = Vec::new();
    for &time in times {
        let rep = validate_potential(&cfg.family(time)?, &interior, &boundary)?;
        r.check(Check::flag(
            format!("t={time}.positive_definite"),
            rep.positive_definite,
        ));
        r.check(Check::flag(
            format!("t={time}.product_positive_finite"),
            rep.is_valid(),
        ));
        t.push(row(&[
            time,
            rep.min_eigenvalue,
            rep.min_product,
            rep.max_product,
        ]));
        per_t.push(json!({ "t": time, "report": rep }));
    }
    r.output("perturbed", per_t);
    r.output("samples", interior.len() + boundary.len());
    r.table = Some(t);
    Ok(r)
}

fn legendre_roundtrip(cfg: &ExperimentConfig, digest: &str) -> CliResult<RunReport> {
    let p = &cfg.polytope;
    let pts = sampling::interior_points(p, ROUNDTRIP_POINTS, cfg.seed, 1e-6);
    let mut r = RunReport::new("legendre-roundtrip", digest);
    let mut t = Table::new(&["t", "max_error"]);
    let times = cfg.explicit_times().unwrap_or(&LEGENDRE_TIMES);
    let mut worst_all = Vec::new();
    for &time in times {
        let pair = LegendrePair::new(cfg.family(time)?);
        let mut worst: f64 = 0.0;
        for x in &pts {
            let y = pair.forward(x)?;
            let back = pair.inverse(y.as_slice())?;
            worst = worst.max((back - DVector::from_column_slice(x)).amax());
        }
        r.check(Check::at_most(
            format!("t={time}.max_roundtrip_error"),
            worst,
            1e-8,
        ));
        t.push(row(&[time, worst]));
        worst_all.push(json!({ "t": time, "max_error": worst }));
    }
    r.output("roundtrip", worst_all);
    r.output("points", pts.len());
    if *p == fixtures::interval() {
        let pair = LegendrePair::new(SymplecticPotential::canonical(p.clone()));
        let mut worst: f64 = 0.0;
        for k in -40..=40 {
            let y = k as f64 * 0.25;
            let x = pair.inverse(&[y])?[0];
            worst = worst.max((x - 1.0 / (1.0 + (-2.0 * y).exp())).abs());
        }
        r.output("interval_logistic_error", worst);
        r.check(Check::at_most("interval_logistic_error", worst, 1e-10));
    }
    r.table = Some(t);
    Ok(r)
}

fn flow_check(cfg: &ExperimentConfig, digest: &str) -> CliResult<RunReport> {
    let pts = sampling::interior_points(&cfg.polytope, FLOW_POINTS, cfg.seed, 1e-4);
    let pair0 = LegendrePair::new(cfg.family(0.0)?);
    let mut r = RunReport::new("flow-check", digest);
    let mut t = Table::new(&["t", "max_residual"]);
    let times = cfg.explicit_times().unwrap_or(&FLOW_TIMES);
    let mut out = Vec::new();
    for &time in times {
        let pair_t = LegendrePair::new(cfg.family(time)?);
        let mut worst: f64 = 0.0;
        for x in &pts {
            worst = worst.max(flow_identity_residual(&pair0, &pair_t, x)?);
        }
        r.check(Check::at_most(
            format!("t={time}.max_flow_residual"),
            worst,
            1e-8,
        ));
        t.push(row(&[time, worst]));
        out.push(json!({ "t": time, "max_residual": worst }));
    }
    r.output("flow", out);
    r.table = Some(t);
    Ok(r)
}

/// Sample points pulled halfway towards the vertex barycenter.
fn central_points(cfg: &ExperimentConfig, count: usize) -> Vec<Vec<f64>> {
    let c = cfg.polytope.barycenter();
    sampling::interior_points(&cfg.polytope, count, cfg.seed, 0.0)
        .into_iter()
        .map(|x| x.iter().zip(&c).map(|(a, b)| b + 0.5 * (a - b)).collect())
        .collect()
}

fn polarization_limit(cfg: &ExperimentConfig, digest: &str) -> CliResult<RunReport> {
    if cfg.t_list.is_empty() {
        return Err(CliError::new(
            "E_T_LIST",
            "polarization-limit needs a nonempty t list",
        ));
    }
    let fam0 = cfg.family(0.0)?;
    let k = cfg.k();
    let pts = central_points(cfg, cfg.points);
    let mut r = RunReport::new("polarization-limit", digest);
    let mut t = Table::new(&["point", "t", "inverse_norm", "distance"]);
    let mut slopes = Vec::new();
    let mut invariance: f64 = 0.0;
    let mut isotropy: f64 = 0.0;
    let mut min_positivity = f64::INFINITY;
    let mut ranks = Vec::new();
    let mut per_point = Vec::new();
    for (i, x) in pts.iter().enumerate() {
        let rep = decay_report(&fam0, &cfg.basis, x, &cfg.t_list)?;
        let limit = limit_frame(&cfg.basis, &fam0, x)?;
        isotropy = isotropy.max(limit.isotropy_defect());
        ranks.push(limit.degenerate_rank(1e-10));
        let sub0 = kernel_subframe(&fam0, &cfg.basis, x)?;
        for &time in &cfg.t_list {
            let pot = cfg.family(time)?;
            let f = polarization_frame(&pot, &cfg.basis, x)?;
            isotropy = isotropy.max(f.isotropy_defect());
            min_positivity = min_positivity.min(f.positivity_spectrum()[0]);
            invariance = invariance.max(grassmann_distance(
                &kernel_subframe(&pot, &cfg.basis, x)?,
                &sub0,
            )?);
        }
        for row_ in &rep.rows {
            t.push(vec![
                i.to_string(),
                row_.t.to_string(),
                row_.inverse_norm.to_string(),
                row_.distance.to_string(),
            ]);
        }
        r.series.push(Series {
            label: format!(
                "x = ({})",
                x.iter()
                    .map(|v| format!("{v:.3}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
            x: rep.rows.iter().map(|q| q.t).collect(),
            y: rep.rows.iter().map(|q| q.distance).collect(),
        });
        slopes.push(rep.slope.unwrap_or(f64::NAN));
        per_point.push(rep);
    }
    let lo = slopes.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    r.output("k", k);
    r.output("t_list", &cfg.t_list);
    r.output("points", per_point);
    r.output("slopes", &slopes);
    r.output("limit_degenerate_ranks", &ranks);
    r.check(Check::within("decay_slope.min", lo, -1.1, -0.9));
    r.check(Check::within("decay_slope.max", hi, -1.1, -0.9));
    r.check(Check::at_most("kernel_subframe_drift", invariance, 1e-10));
    r.check(Check::at_most("isotropy_defect", isotropy, 1e-10));
    r.check(Check::flag("finite_t_positive", min_positivity > 0.0));
    let off = ranks
        .iter()
        .map(|d| (*d as f64 - k as f64).abs())
        .fold(0.0, f64::max);
    r.check(Check::equals("limit_rank_minus_k", off, 0.0));
    r.table = Some(t);
    r.plot_labels = ("t".into(), "Grassmann distance to limit frame".into());
    Ok(r)
}

fn sections_norms(cfg: &ExperimentConfig, digest: &str) -> CliResult<RunReport> {
    let p = &cfg.polytope;
    let m = cfg.lattice_point();
    let canon = SymplecticPotential::canonical(p.clone());
    let mut r = RunReport::new("sections-norms", digest);
    r.output("m", &m);

    let pts = sampling::interior_points(p, 20, cfg.seed, 1e-3);
    let lattice = p.lattice_points();
    let mut agree: f64 = 0.0;
    for s in MonomialSection::all(&canon) {
        for x in &pts {
            agree = agree.max((s.pointwise_norm(x)? - closed_form_norm_g0(p, s.m(), x)?).abs());
        }
    }
    r.check(Check::at_most("closed_form_vs_exponent", agree, 1e-10));

    let rule = QuadratureRule::for_polytope(p, cfg.resolution)?;
    let s0 = MonomialSection::new(m.clone(), cfg.family(0.0)?)?;
    let l1_0 = l1_norm(&s0, &rule)?;
    r.output("l1_norm_t0", l1_0);
    if *p == fixtures::interval() {
        let sigma0 = MonomialSection::new(vec![0], canon.clone())?;
        let v = l1_norm(&sigma0, &rule)?;
        r.output("interval_sigma0_l1", v);
        r.check(Check::at_most(
            "interval_sigma0_l1_error",
            (v - 2.0 / 3.0).abs(),
            1e-6,
        ));
    }

    // relative to max(1, |σ_t|) since e^{−t f_m} can be large
    let t_max = cfg.t_list.last().copied().unwrap_or(10.0).max(1e-9);
    let ts = sampling::box_points(&[0.0], &[t_max], FACTORIZATION_SAMPLES, cfg.seed ^ 0x5eed);
    let xs = sampling::interior_points(p, FACTORIZATION_SAMPLES, cfg.seed.wrapping_add(1), 1e-3);
    let mut fact: f64 = 0.0;
    for (x, t) in xs.iter().zip(&ts) {
        let st = s0.at_time(t[0])?;
        let res = toric_quant::sections::norm_factorization_check(s0.potential(), &m, t[0], x)?;
        fact = fact.max(res / st.pointwise_norm(x)?.max(1.0));
    }
    r.check(Check::at_most("factorization_residual", fact, 1e-10));

    let centre = p.barycenter();
    let max_diff = lattice
        .iter()
        .flat_map(|a| {
            lattice.iter().map(move |b| {
                a.iter()
                    .zip(b)
                    .map(|(u, v)| (u - v).abs())
                    .max()
                    .unwrap_or(0)
            })
        })
        .max()
        .unwrap_or(0);
    let grid = max_diff as usize + 1;
    let mut ortho: f64 = 0.0;
    for a in &lattice {
        for b in &lattice {
            if a != b {
                ortho = ortho.max(pairwise_orthogonality(&canon, a, b, grid, &centre)?.norm());
            }
        }
    }
    r.output("theta_grid", grid);
    r.check(Check::at_most("theta_orthogonality", ortho, 1e-12));

    let mut t = Table::new(&["t", "l1_norm", "l1_ratio"]);
    let mut per_t = Vec::new();
    for &time in &cfg.t_list {
        let st = s0.at_time(time)?;
        let n = l1_norm(&st, &rule)?;
        let ratio = l1_norm_ratio(&st, &rule)?;
        t.push(row(&[time, n, ratio]));
        per_t.push(json!({ "t": time, "l1_norm": n, "l1_ratio": ratio }));
    }
    r.output("norms", per_t);
    r.table = Some(t);
    Ok(r)
}

fn concentrate(cfg: &ExperimentConfig, digest: &str) -> CliResult<RunReport> {
    if cfg.t_list.is_empty() {
        return Err(CliError::new(
            "E_T_LIST",
            "concentrate needs a nonempty t list",
        ));
    }
    let m = cfg.lattice_point();
    let (u_text, u) = cfg.weight();
    let res = concentration_experiment(
        &cfg.family(0.0)?,
        &cfg.proj,
        &m,
        |x| u.eval(x),
        &cfg.t_list,
        cfg.resolution,
    )?;
    let mut r = RunReport::new("concentrate", digest);
    r.output("u", &u_text);
    r.output("resolution", cfg.resolution);
    r.output("result", &res);
    r.output("error_ratios", res.error_ratios());
    let within: Vec<bool> = res
        .t_values
        .iter()
        .zip(&res.errors)
        .map(|(t, e)| *e <= 2.0 / t)
        .collect();
    r.output("error_within_2_over_t", within);

    r.check(Check::flag(
        "ratios_finite",
        res.ratios.iter().all(|v| v.is_finite()),
    ));
    // past t = 32 the error may only shrink (rounding slack for exact limits)
    let rise = res
        .t_values
        .iter()
        .zip(res.errors.windows(2))
        .filter(|(t, _)| **t >= 32.0)
        .map(|(_, w)| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    if rise.is_finite() {
        r.check(Check::at_most("error_increase_after_t32", rise, 1e-12));
    }
    let mut t = Table::new(&["t", "R_t", "error"]);
    for i in 0..res.t_values.len() {
        t.push(row(&[res.t_values[i], res.ratios[i], res.errors[i]]));
    }
    r.table = Some(t);
    r.series.push(Series {
        label: format!("|R_t - R_inf|, u = {u_text}"),
        x: res.t_values.clone(),
        y: res.errors.clone(),
    });
    r.plot_labels = ("t".into(), "|R_t - R_inf|".into());
    Ok(r)
}

fn row(v: &[f64]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

fn join_ints(v: &[i64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}
