//! Experiment configuration: JSON file plus command-line overrides,
//! validated before any command runs.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::{json, Value};
use toric_quant::expr::WeightExpr;
use toric_quant::fixtures;
use toric_quant::subtorus::{
    adapted_basis, pullback, strict_convexity_check, AdaptedBasis, Pullback, Quadratic,
};
use toric_quant::{DelzantPolytope, Error, SubtorusProjection, SymplecticPotential};

pub const DEFAULT_T_LIST: [f64; 5] = [8.0, 16.0, 32.0, 64.0, 128.0];
pub const DEFAULT_RESOLUTION: usize = 256;
pub const DEFAULT_POINTS: usize = 10;

/// A failure with a stable machine-readable code.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
    pub detail: Value,
}

impl CliError {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            detail: Value::Null,
        }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }

    pub fn to_json(&self) -> Value {
        let mut e = json!({ "code": self.code, "message": self.message });
        if !self.detail.is_null() {
            e["detail"] = self.detail.clone();
        }
        json!({ "error": e })
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidPolytope(_) => "E_INVALID_POLYTOPE",
            Error::NotDelzant { .. } => "E_NOT_DELZANT",
            Error::FacetIndex { .. } => "E_FACET_INDEX",
            Error::Dimension { .. } => "E_DIMENSION",
            Error::RankDeficient { .. } => "E_RANK",
            Error::NonPrimitiveImage { .. } => "E_NON_PRIMITIVE",
            Error::NotInterior { .. } => "E_NOT_INTERIOR",
            Error::Exterior { .. } => "E_EXTERIOR",
            Error::EmptySlice(_) => "E_EMPTY_SLICE",
            Error::NotPositiveDefinite(_) => "E_NOT_POSITIVE_DEFINITE",
            Error::NoConvergence { .. } => "E_NO_CONVERGENCE",
            Error::NonFinite(_) => "E_NON_FINITE",
            Error::Resolution(_) => "E_RESOLUTION",
            Error::Aliasing { .. } => "E_ALIASING",
            Error::InvalidArgument(_) => "E_INVALID_ARGUMENT",
            Error::Expression(_) => "E_EXPRESSION",
        };
        CliError::new(code, e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// `φ(y) = ½ yᵀQy + bᵀy`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiSpec {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl PhiSpec {
    pub fn half_norm_squared(k: usize) -> Self {
        Self {
            kind: "quadratic".into(),
            q: (0..k)
                .map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
            b: vec![0.0; k],
        }
    }

    fn parse(v: &Value, k: usize) -> CliResult<Self> {
        let kind = v.get("type").and_then(Value::as_str).unwrap_or("quadratic");
        if kind != "quadratic" {
            return Err(CliError::new(
                "E_PHI",
                format!("unsupported phi type {kind:?}"),
            ));
        }
        let q: Vec<Vec<f64>> = match v.get("Q") {
            Some(q) => serde_json::from_value(q.clone())
                .map_err(|e| CliError::new("E_PARSE", format!("phi.Q: {e}")))?,
            None => Self::half_norm_squared(k).q,
        };
        let b: Vec<f64> = match v.get("b") {
            Some(b) => serde_json::from_value(b.clone())
                .map_err(|e| CliError::new("E_PARSE", format!("phi.b: {e}")))?,
            None => vec![0.0; q.len()],
        };
        Ok(Self {
            kind: kind.into(),
            q,
            b,
        })
    }

    fn build(&self) -> CliResult<Quadratic> {
        let k = self.q.len();
        if self.q.iter().any(|r| r.len() != k) {
            return Err(CliError::new("E_DIMENSION", "phi.Q must be square"));
        }
        let q = DMatrix::from_fn(k, k, |i, j| self.q[i][j]);
        Ok(Quadratic::new(q, DVector::from_vec(self.b.clone()))?)
    }
}

/// Overrides taken from the command line; `None` keeps the file value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub t_list: Option<Vec<f64>>,
    pub m: Option<Vec<i64>>,
    pub u: Option<String>,
    pub resolution: Option<usize>,
    pub points: Option<usize>,
    pub proj: Option<Vec<Vec<i64>>>,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub polytope: DelzantPolytope,
    pub proj: SubtorusProjection,
    pub basis: AdaptedBasis,
    pub phi: PhiSpec,
    pub psi: Arc<Pullback>,
    pub t_list: Vec<f64>,
    /// The t list came from the file or the command line.
    pub t_explicit: bool,
    pub resolution: usize,
    pub points: usize,
    pub seed: u64,
    pub m: Option<Vec<i64>>,
    pub u: Option<(String, WeightExpr)>,
}

impl ExperimentConfig {
    /// `g₀ + t·φ∘i_k*` at `t`.
    pub fn family(&self, t: f64) -> CliResult<SymplecticPotential> {
        Ok(SymplecticPotential::new(
            self.polytope.clone(),
            self.psi.clone(),
            t,
        )?)
    }

    /// The t list when the user gave one; commands with their own schedule
    /// fall back to it otherwise.
    pub fn explicit_times(&self) -> Option<&[f64]> {
        self.t_explicit.then_some(self.t_list.as_slice())
    }

    pub fn k(&self) -> usize {
        self.proj.rank()
    }

    /// Configured `m`, else the lattice point nearest the vertex barycenter
    /// (first in lexicographic order on ties).
    pub fn lattice_point(&self) -> Vec<i64> {
        if let Some(m) = &self.m {
            return m.clone();
        }
        let c = self.polytope.barycenter();
        let dist =
            |m: &Vec<i64>| -> f64 { m.iter().zip(&c).map(|(a, b)| (*a as f64 - b).powi(2)).sum() };
        let pts = self.polytope.lattice_points();
        let mut best = pts[0].clone();
        for p in pts {
            if dist(&p) < dist(&best) - 1e-12 {
                best = p;
            }
        }
        best
    }

    /// Configured weight, else the last coordinate.
    pub fn weight(&self) -> (String, WeightExpr) {
        self.u.clone().unwrap_or_else(|| {
            let s = format!("x{}", self.polytope.dim());
            let e = s.parse().expect("coordinate expression");
            (s, e)
        })
    }

    /// Canonical JSON of the effective configuration, the input of the digest.
    pub fn canonical(&self) -> Value {
        let facets: Vec<Value> = self
            .polytope
            .facets()
            .iter()
            .map(|f| json!({ "normal": f.normal, "offset": f.offset }))
            .collect();
        json!({
            "dim": self.polytope.dim(),
            "facets": facets,
            "proj": self.proj.rows(),
            "phi": self.phi,
            "t_list": self.t_list,
            "resolution": self.resolution,
            "points": self.points,
            "seed": self.seed,
            "m": self.lattice_point(),
            "u": self.weight().0,
        })
    }
}

/// Reads and validates a config. A non-Delzant polytope is refused with its
/// certificate in the error detail.
pub fn load_config(path: &Path, overrides: &Overrides) -> CliResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::new("E_IO", format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::new("E_PARSE", format!("{}: {e}", path.display())))?;
    config_from_value(&value, overrides)
}

pub fn config_from_value(value: &Value, overrides: &Overrides) -> CliResult<ExperimentConfig> {
    let polytope = parse_polytope(value)?;
    if let Err(e) = polytope.require_delzant() {
        let cert = polytope.is_delzant();
        return Err(
            CliError::from(e).with_detail(serde_json::to_value(cert).unwrap_or(Value::Null))
        );
    }
    let n = polytope.dim();

    let rows: Vec<Vec<i64>> = match (&overrides.proj, value.get("proj")) {
        (Some(r), _) => r.clone(),
        (None, Some(v)) => serde_json::from_value(v.clone())
            .map_err(|e| CliError::new("E_PARSE", format!("proj: {e}")))?,
        // default: the circle acting on the first coordinate
        (None, None) => vec![(0..n).map(|i| i64::from(i == 0)).collect()],
    };
    if rows.iter().any(|r| r.len() != n) {
        return Err(CliError::new(
            "E_DIMENSION",
            format!("proj rows must have length {n}"),
        ));
    }
    let proj = SubtorusProjection::new(rows)?;
    let basis = adapted_basis(&proj)?;

    let phi = match value.get("phi") {
        Some(v) => PhiSpec::parse(v, proj.rank())?,
        None => PhiSpec::half_norm_squared(proj.rank()),
    };
    let quad = phi.build()?;
    if phi.q.len() != proj.rank() {
        return Err(CliError::new(
            "E_DIMENSION",
            format!(
                "phi has {} variables but proj has rank {}",
                phi.q.len(),
                proj.rank()
            ),
        ));
    }
    let report = strict_convexity_check(&quad, &polytope, &proj, 9)?;
    if !report.strictly_convex {
        return Err(CliError::new(
            "E_NOT_CONVEX",
            "phi is not strictly convex on the image of P",
        )
        .with_detail(serde_json::to_value(&report).unwrap_or(Value::Null)));
    }
    let psi = Arc::new(pullback(Arc::new(quad), &proj)?);

    let t_explicit = overrides.t_list.is_some() || value.get("t_list").is_some();
    let t_list = match &overrides.t_list {
        Some(t) => t.clone(),
        None => match value.get("t_list") {
            Some(v) => serde_json::from_value(v.clone())
                .map_err(|e| CliError::new("E_PARSE", format!("t_list: {e}")))?,
            None => DEFAULT_T_LIST.to_vec(),
        },
    };
    if t_list.iter().any(|t| !t.is_finite() || *t < 0.0) || t_list.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(CliError::new(
            "E_T_LIST",
            "t values must be finite, non-negative and strictly increasing",
        ));
    }

    let resolution = overrides
        .resolution
        .or_else(|| {
            value
                .get("resolution")
                .and_then(Value::as_u64)
                .map(|v| v as usize)
        })
        .unwrap_or(DEFAULT_RESOLUTION);
    if resolution < toric_quant::quadrature::MIN_RESOLUTION {
        return Err(Error::Resolution(resolution).into());
    }
    let points = overrides
        .points
        .or_else(|| {
            value
                .get("points")
                .and_then(Value::as_u64)
                .map(|v| v as usize)
        })
        .unwrap_or(DEFAULT_POINTS);
    if points == 0 {
        return Err(CliError::new(
            "E_INVALID_ARGUMENT",
            "points must be positive",
        ));
    }
    let seed = value.get("seed").and_then(Value::as_u64).unwrap_or(0);

    let m: Option<Vec<i64>> = match &overrides.m {
        Some(m) => Some(m.clone()),
        None => match value.get("m") {
            Some(v) => Some(
                serde_json::from_value(v.clone())
                    .map_err(|e| CliError::new("E_PARSE", format!("m: {e}")))?,
            ),
            None => None,
        },
    };
    if let Some(m) = &m {
        if !polytope.contains_int(m) {
            return Err(CliError::new(
                "E_LATTICE_POINT",
                format!("{m:?} is not a lattice point of P"),
            ));
        }
    }
    let u_text = overrides
        .u
        .clone()
        .or_else(|| value.get("u").and_then(Value::as_str).map(String::from));
    let u = match u_text {
        Some(s) => {
            let e: WeightExpr = s.parse()?;
            e.check_dim(n)?;
            Some((s, e))
        }
        None => None,
    };

    Ok(ExperimentConfig {
        polytope,
        proj,
        basis,
        phi,
        psi,
        t_list,
        t_explicit,
        resolution,
        points,
        seed,
        m,
        u,
    })
}

/// The polytope from `{"dim", "facets"}` at top level, under `"polytope"`,
/// or a fixture name under `"fixture"`.
pub fn parse_polytope(value: &Value) -> CliResult<DelzantPolytope> {
    if let Some(name) = value.get("fixture").and_then(Value::as_str) {
        return fixtures::by_name(name)
            .ok_or_else(|| CliError::new("E_FIXTURE", format!("unknown fixture {name:?}")));
    }
    let raw = value.get("polytope").unwrap_or(value);
    if raw.get("dim").is_none() || raw.get("facets").is_none() {
        return Err(CliError::new(
            "E_PARSE",
            "config needs \"dim\" and \"facets\" (or \"polytope\")",
        ));
    }
    let raw = json!({ "dim": raw["dim"], "facets": raw["facets"] });
    serde_json::from_value::<DelzantPolytope>(raw).map_err(|e| {
        let msg = e.to_string();
        // serde wraps validation errors from the polytope constructor
        if msg.contains("not Delzant") {
            CliError::new("E_NOT_DELZANT", msg)
        } else if msg.contains("invalid polytope") {
            CliError::new("E_INVALID_POLYTOPE", msg)
        } else {
            CliError::new("E_PARSE", msg)
        }
    })
}
