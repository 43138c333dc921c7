//! Quadrature over polytopes and slices, and the concentration experiment
//! comparing `R_t = ∫ e^{−t f_m}|σᵐ_{k,0}| u / ∫ e^{−t f_m}|σᵐ_{k,0}|` with the
//! slice pairing `δᵐ_k(u)`.

use std::f64::consts::PI;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, pairwise_sum};
use crate::polytope::{DelzantPolytope, RationalPolytope, Slice};
use crate::potential::SymplecticPotential;
use crate::rational::{q_int, q_to_f64, Q};
use crate::sections::{closed_form_norm_g0, ConcentrationWeight};
use crate::subtorus::SubtorusProjection;

pub const MIN_RESOLUTION: usize = 8;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // P_n(z) and P_n'(z) by the three-term recurrence
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RuleKind {
    TensorGauss,
    MidpointGrid,
    /// Zero-dimensional domain: one node of weight one.
    Point,
}

/// Nodes in ambient coordinates with weights for Lebesgue measure on the
/// domain (chart coordinates for slices).
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    kind: RuleKind,
    resolution: usize,
    domain_dim: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn for_polytope(p: &DelzantPolytope, resolution: usize) -> Result<Self> {
        check_resolution(resolution)?;
        let (kind, points, weights) = chart_rule(&p.hrep(), resolution)?;
        Ok(Self {
            kind,
            resolution,
            domain_dim: p.dim(),
            points,
            weights,
        })
    }

    pub fn for_slice(slice: &Slice, resolution: usize) -> Result<Self> {
        check_resolution(resolution)?;
        if slice.chart_dim() == 0 {
            return Ok(Self {
                kind: RuleKind::Point,
                resolution,
                domain_dim: 0,
                points: vec![slice.point_at(&[])],
                weights: vec![1.0],
            });
        }
        let (kind, chart_points, weights) = chart_rule(&slice.chart_polytope, resolution)?;
        Ok(Self {
            kind,
            resolution,
            domain_dim: slice.chart_dim(),
            points: chart_points.iter().map(|u| slice.point_at(u)).collect(),
            weights,
        })
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn domain_dim(&self) -> usize {
        self.domain_dim
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Quadrature of the constant 1, i.e. the domain volume.
    pub fn total_weight(&self) -> f64 {
        pairwise_sum(&self.weights)
    }

    /// Integrand values at the nodes, in node order.
    pub fn evaluate<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        #[cfg(feature = "parallel")]
        {
            self.points.par_iter().map(|x| f(x)).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            self.points.iter().map(|x| f(x)).collect()
        }
    }
}

fn check_resolution(resolution: usize) -> Result<()> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::Resolution(resolution));
    }
    Ok(())
}

type RawRule = (RuleKind, Vec<Vec<f64>>, Vec<f64>);

fn chart_rule(poly: &RationalPolytope, resolution: usize) -> Result<RawRule> {
    let (lo, hi) = poly
        .bounding_box()
        .ok_or_else(|| Error::EmptySlice("domain has no vertices".into()))?;
    let dim = poly.dim();
    if poly.is_axis_box() {
        let (nodes, w) = gauss_legendre(resolution);
        let lo: Vec<f64> = lo.iter().map(q_to_f64).collect();
        let hi: Vec<f64> = hi.iter().map(q_to_f64).collect();
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for idx in grid_indices(dim, resolution) {
            let mut x = Vec::with_capacity(dim);
            let mut wt = 1.0;
            for (i, &a) in idx.iter().enumerate() {
                let half = 0.5 * (hi[i] - lo[i]);
                x.push(lo[i] + half * (nodes[a] + 1.0));
                wt *= half * w[a];
            }
            points.push(x);
            weights.push(wt);
        }
        return Ok((RuleKind::TensorGauss, points, weights));
    }
    let n = q_int(resolution as i64);
    let step: Vec<Q> = lo.iter().zip(&hi).map(|(a, b)| (b - a) / &n).collect();
    let cell: f64 = step.iter().map(q_to_f64).product();
    let float_constraints: Vec<(Vec<f64>, f64)> = poly
        .constraints()
        .iter()
        .map(|(c, e)| (c.iter().map(q_to_f64).collect(), q_to_f64(e)))
        .collect();
    let half = Q::new(1.into(), 2.into());
    let mut points = Vec::new();
    for idx in grid_indices(dim, resolution) {
        let exact: Vec<Q> = idx
            .iter()
            .enumerate()
            .map(|(i, &a)| &lo[i] + (q_int(a as i64) + &half) * &step[i])
            .collect();
        let x: Vec<f64> = exact.iter().map(q_to_f64).collect();
        // floats settle clear cases; the exact test decides near facets
        let mut inside = true;
        let mut ambiguous = false;
        for (c, e) in &float_constraints {
            let v: f64 = c.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + e;
            let scale = 1.0 + e.abs() + c.iter().zip(&x).map(|(a, b)| (a * b).abs()).sum::<f64>();
            if v < -1e-9 * scale {
                inside = false;
                break;
            }
            if v <= 1e-9 * scale {
                ambiguous = true;
            }
        }
        if inside && ambiguous {
            inside = poly.contains(&exact);
        }
        if inside {
            points.push(x);
        }
    }
    let weights = vec![cell; points.len()];
    Ok((RuleKind::MidpointGrid, points, weights))
}

/// Multi-indices of `{0..n}^dim` in lexicographic order.
fn grid_indices(dim: usize, n: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = n.pow(dim as u32);
    (0..total).map(move |mut flat| {
        let mut idx = vec![0; dim];
        for slot in idx.iter_mut().rev() {
            *slot = flat % n;
            flat /= n;
        }
        idx
    })
}

fn weighted_sum(values: &[f64], rule: &QuadratureRule) -> Result<f64> {
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(rule.points[i].clone()));
    }
    let terms: Vec<f64> = values
        .iter()
        .zip(&rule.weights)
        .map(|(v, w)| v * w)
        .collect();
    Ok(pairwise_sum(&terms))
}

/// `Σ w_i f(x_i)`; fails at the first node where `f` is not finite.
pub fn integrate<F>(f: F, rule: &QuadratureRule) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    weighted_sum(&rule.evaluate(f), rule)
}

pub fn integrate_slice<F>(f: F, slice: &Slice, resolution: usize) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    integrate(f, &QuadratureRule::for_slice(slice, resolution)?)
}

/// `∫ |σᵐ_{k,0}| u / ∫ |σᵐ_{k,0}|` over the slice through `m` (over the face
/// it collapses to when `i_k*(m)` is on the boundary of the image).
pub fn delta_pairing<U>(
    p: &DelzantPolytope,
    proj: &SubtorusProjection,
    m: &[i64],
    u: U,
    resolution: usize,
) -> Result<f64>
where
    U: Fn(&[f64]) -> f64 + Sync,
{
    if !p.contains_int(m) {
        return Err(Error::InvalidArgument(format!(
            "{m:?} is not a lattice point of P"
        )));
    }
    let q: Vec<Q> = proj.apply_int(m).into_iter().map(q_int).collect();
    let slice = p.face_chart(proj, &q)?;
    let rule = QuadratureRule::for_slice(&slice, resolution)?;
    let w = rule.evaluate(|x| closed_form_norm_g0(p, m, x).unwrap_or(f64::NAN));
    let uw = rule.evaluate(&u);
    let num: Vec<f64> = w.iter().zip(&uw).map(|(a, b)| a * b).collect();
    let den = weighted_sum(&w, &rule)?;
    if !(den > 0.0) {
        return Err(Error::NonFinite(
            slice.point_at(&vec![0.0; slice.chart_dim()]),
        ));
    }
    Ok(weighted_sum(&num, &rule)? / den)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationResult {
    pub m: Vec<i64>,
    pub t_values: Vec<f64>,
    pub ratios: Vec<f64>,
    pub slice_value: f64,
    pub errors: Vec<f64>,
    /// Log-log slope of `errors` against `t`; `None` if some error is zero.
    pub decay_exponent: Option<f64>,
}

impl ConcentrationResult {
    /// `errors[i+1] / errors[i]`.
    pub fn error_ratios(&self) -> Vec<f64> {
        self.errors.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

/// Runs `R_t` over `t_list` against `R_∞ = δᵐ_k(u)`; `family` supplies `ψ`.
pub fn concentration_experiment<U>(
    family: &SymplecticPotential,
    proj: &SubtorusProjection,
    m: &[i64],
    u: U,
    t_list: &[f64],
    resolution: usize,
) -> Result<ConcentrationResult>
where
    U: Fn(&[f64]) -> f64 + Sync,
{
    if t_list.is_empty() || t_list.windows(2).any(|w| !(w[1] > w[0])) || t_list[0] < 0.0 {
        return Err(Error::InvalidArgument(
            "t_list must be nonempty, non-negative and strictly increasing".into(),
        ));
    }
    let psi = family
        .perturbation()
        .ok_or_else(|| Error::InvalidArgument("potential has no perturbation".into()))?;
    let p = family.polytope();
    let weight = ConcentrationWeight::new(m, psi.clone())?;
    let slice_value = delta_pairing(p, proj, m, &u, resolution)?;

    let rule = QuadratureRule::for_polytope(p, resolution)?;
    let sigma0 = rule.evaluate(|x| closed_form_norm_g0(p, m, x).unwrap_or(f64::NAN));
    let f = rule.evaluate(|x| weight.value(x));
    let uv = rule.evaluate(&u);
    for (i, v) in sigma0.iter().chain(&f).chain(&uv).enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite(rule.points()[i % rule.len()].clone()));
        }
    }
    let fmin = f.iter().copied().fold(f64::INFINITY, f64::min);

    let mut ratios = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let dens: Vec<f64> = sigma0
            .iter()
            .zip(&f)
            .zip(rule.weights())
            .map(|((s, fx), w)| (-t * (fx - fmin)).exp() * s * w)
            .collect();
        let num: Vec<f64> = dens.iter().zip(&uv).map(|(d, u)| d * u).collect();
        ratios.push(pairwise_sum(&num) / pairwise_sum(&dens));
    }
    let errors: Vec<f64> = ratios.iter().map(|r| (r - slice_value).abs()).collect();
    Ok(ConcentrationResult {
        m: m.to_vec(),
        t_values: t_list.to_vec(),
        decay_exponent: linalg::loglog_slope(t_list, &errors),
        ratios,
        slice_value,
        errors,
    })
}
