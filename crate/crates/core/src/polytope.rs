//! Delzant polytopes in halfspace form and their exact combinatorics.
//!
//! A polytope is `P = {x : l_j(x) ≥ 0}` with `l_j(x) = ⟨x, r_j⟩ + λ_j`,
//! integer primitive normals `r_j` and integer offsets `λ_j`. Everything here
//! is exact; floating point only enters through [`DelzantPolytope::facet_value`]
//! and friends when the caller asks for it.

use std::collections::BTreeMap;

use itertools::Itertools;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, column_echelon, dot_int_q, dot_q, q_int, q_to_f64, Q};
use crate::subtorus::SubtorusProjection;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Facet {
    pub normal: Vec<i64>,
    pub offset: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct RawPolytope {
    dim: usize,
    facets: Vec<Facet>,
}

/// Bounded lattice polytope with primitive integer normals and integer offsets.
///
/// Construction checks primitivity, `d ≥ n + 1`, boundedness and a nonempty
/// interior. Smoothness (the Delzant condition proper) is a separate question
/// answered by [`DelzantPolytope::is_delzant`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPolytope", into = "RawPolytope")]
pub struct DelzantPolytope {
    dim: usize,
    facets: Vec<Facet>,
    vertices: Vec<Vertex>,
}

impl TryFrom<RawPolytope> for DelzantPolytope {
    type Error = Error;

    fn try_from(raw: RawPolytope) -> Result<Self> {
        DelzantPolytope::new(raw.dim, raw.facets)
    }
}

impl From<DelzantPolytope> for RawPolytope {
    fn from(p: DelzantPolytope) -> Self {
        RawPolytope {
            dim: p.dim,
            facets: p.facets,
        }
    }
}

/// A vertex with exact rational coordinates and the facets vanishing there.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex {
    #[serde(with = "rational_vec")]
    pub point: Vec<Q>,
    pub active_facets: Vec<usize>,
}

impl Vertex {
    pub fn point_f64(&self) -> Vec<f64> {
        self.point.iter().map(q_to_f64).collect()
    }
}

pub type LatticePoint = Vec<i64>;

/// Result of the smoothness test. When the test fails, `vertex` and
/// `determinant` identify the first offending vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DelzantCertificate {
    pub is_delzant: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vertex: Option<Vertex>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub active_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub determinant: Option<i64>,
}

impl DelzantPolytope {
    pub fn new(dim: usize, facets: Vec<Facet>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidPolytope("dimension must be positive".into()));
        }
        if facets.len() < dim + 1 {
            return Err(Error::InvalidPolytope(format!(
                "{} facets cannot bound a {dim}-dimensional polytope",
                facets.len()
            )));
        }
        for (j, f) in facets.iter().enumerate() {
            if f.normal.len() != dim {
                return Err(Error::InvalidPolytope(format!(
                    "facet {j} normal has length {}, expected {dim}",
                    f.normal.len()
                )));
            }
            if rational::gcd_all(&f.normal) != 1 {
                return Err(Error::InvalidPolytope(format!(
                    "facet {j} normal {:?} is not primitive",
                    f.normal
                )));
            }
        }
        let hrep = RationalPolytope::from_integer(dim, &facets);
        if !hrep.is_bounded() {
            return Err(Error::InvalidPolytope("polytope is unbounded".into()));
        }
        let vertices = hrep.vertices();
        if vertices.is_empty() {
            return Err(Error::InvalidPolytope("polytope is empty".into()));
        }
        let centre = barycenter(&vertices);
        if let Some(j) = (0..facets.len()).find(|&j| !hrep.value(j, &centre).is_positive()) {
            return Err(Error::InvalidPolytope(format!(
                "polytope has empty interior (facet {j} vanishes identically)"
            )));
        }
        Ok(Self {
            dim,
            facets,
            vertices,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn num_facets(&self) -> usize {
        self.facets.len()
    }

    /// `l_j(x) = ⟨x, r_j⟩ + λ_j` (zero-based `j`).
    pub fn facet_value(&self, j: usize, x: &[f64]) -> Result<f64> {
        let f = self.facets.get(j).ok_or(Error::FacetIndex {
            index: j,
            count: self.facets.len(),
        })?;
        if x.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(facet_eval(f, x))
    }

    /// Exact `l_j(x)` for a rational point.
    pub fn facet_value_exact(&self, j: usize, x: &[Q]) -> Result<Q> {
        let f = self.facets.get(j).ok_or(Error::FacetIndex {
            index: j,
            count: self.facets.len(),
        })?;
        Ok(dot_int_q(&f.normal, x) + q_int(f.offset))
    }

    /// Exact `l_j(m)` for a lattice point.
    pub fn facet_value_int(&self, j: usize, m: &[i64]) -> i64 {
        let f = &self.facets[j];
        f.normal.iter().zip(m).map(|(a, b)| a * b).sum::<i64>() + f.offset
    }

    /// All facet values at `x`, unchecked length.
    pub fn facet_values(&self, x: &[f64]) -> Vec<f64> {
        self.facets.iter().map(|f| facet_eval(f, x)).collect()
    }

    pub fn contains_int(&self, m: &[i64]) -> bool {
        m.len() == self.dim && (0..self.facets.len()).all(|j| self.facet_value_int(j, m) >= 0)
    }

    /// Fails with [`Error::NotInterior`] naming the first facet with `l_j(x) ≤ 0`.
    pub fn check_interior(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        let values = self.facet_values(x);
        if let Some((j, &v)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::NotInterior { facet: j, value: v });
        }
        Ok(values)
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn enumerate_vertices(&self) -> Vec<Vertex> {
        self.vertices.clone()
    }

    /// Mean of the vertices; always an interior point.
    pub fn barycenter(&self) -> Vec<f64> {
        barycenter(&self.vertices).iter().map(q_to_f64).collect()
    }

    /// Axis-aligned bounding box `(lower, upper)` in floating point.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let (lo, hi) = rational_bbox(&self.vertices, self.dim);
        (
            lo.iter().map(q_to_f64).collect(),
            hi.iter().map(q_to_f64).collect(),
        )
    }

    pub fn hrep(&self) -> RationalPolytope {
        RationalPolytope::from_integer(self.dim, &self.facets)
    }

    /// Vertex-unimodularity test: exactly `n` active facets at every vertex
    /// with normals of determinant ±1.
    pub fn is_delzant(&self) -> DelzantCertificate {
        for v in &self.vertices {
            if v.active_facets.len() != self.dim {
                return DelzantCertificate {
                    is_delzant: false,
                    vertex: Some(v.clone()),
                    active_count: Some(v.active_facets.len()),
                    determinant: None,
                };
            }
            let rows: Vec<Vec<Q>> = v
                .active_facets
                .iter()
                .map(|&j| self.facets[j].normal.iter().map(|&a| q_int(a)).collect())
                .collect();
            let d = rational::det(&rows);
            let d = d.to_integer().to_i64().unwrap_or(i64::MAX);
            if d.abs() != 1 {
                return DelzantCertificate {
                    is_delzant: false,
                    vertex: Some(v.clone()),
                    active_count: Some(v.active_facets.len()),
                    determinant: Some(d),
                };
            }
        }
        DelzantCertificate {
            is_delzant: true,
            vertex: None,
            active_count: None,
            determinant: None,
        }
    }

    /// Fails with [`Error::NotDelzant`] carrying the certificate data.
    pub fn require_delzant(&self) -> Result<()> {
        let cert = self.is_delzant();
        if cert.is_delzant {
            return Ok(());
        }
        let v = cert.vertex.expect("failing certificate carries a vertex");
        let reason = match cert.determinant {
            Some(d) => format!("active normals have determinant {d}"),
            None => format!("{} facets active", v.active_facets.len()),
        };
        Err(Error::NotDelzant {
            vertex: v.point.iter().map(|q| q.to_string()).collect(),
            reason,
        })
    }

    /// `P ∩ ℤⁿ` in lexicographic order.
    pub fn lattice_points(&self) -> Vec<LatticePoint> {
        let (lo, hi) = rational_bbox(&self.vertices, self.dim);
        let lo: Vec<i64> = lo
            .iter()
            .map(|q| q.ceil().to_integer().to_i64().unwrap())
            .collect();
        let hi: Vec<i64> = hi
            .iter()
            .map(|q| q.floor().to_integer().to_i64().unwrap())
            .collect();
        let mut out = Vec::new();
        let mut current = lo.clone();
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return out;
        }
        loop {
            if self.contains_int(&current) {
                out.push(current.clone());
            }
            // odometer over the box, last coordinate fastest
            let mut axis = self.dim;
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                if current[axis] < hi[axis] {
                    current[axis] += 1;
                    current[axis + 1..].copy_from_slice(&lo[axis + 1..]);
                    break;
                }
            }
        }
    }

    /// Lattice points grouped by their image `i_k*(m)`.
    pub fn weight_multiplicities(
        &self,
        proj: &SubtorusProjection,
    ) -> Result<BTreeMap<Vec<i64>, usize>> {
        proj.check_ambient(self.dim)?;
        let mut map = BTreeMap::new();
        for m in self.lattice_points() {
            *map.entry(proj.apply_int(&m)).or_insert(0) += 1;
        }
        Ok(map)
    }

    /// Chart of the slice `{x ∈ P : i_k*(x) = q}` for `q` in the relative
    /// interior of the image polytope.
    pub fn slice_chart(&self, proj: &SubtorusProjection, q: &[Q]) -> Result<Slice> {
        proj.check_ambient(self.dim)?;
        if q.len() != proj.rank() {
            return Err(Error::Dimension {
                expected: proj.rank(),
                got: q.len(),
            });
        }
        let slice = self.face_chart(proj, q)?;
        if !slice.extra_equalities.is_empty() {
            return Err(Error::EmptySlice(format!(
                "level {} lies on the boundary of the image polytope",
                format_q(q)
            )));
        }
        Ok(slice)
    }

    /// Like [`slice_chart`](Self::slice_chart) but also accepts levels on the
    /// boundary of the image: the chart then parametrizes the lower-dimensional
    /// face the slice collapses to, with its own lattice-normalized measure.
    pub fn face_chart(&self, proj: &SubtorusProjection, q: &[Q]) -> Result<Slice> {
        proj.check_ambient(self.dim)?;
        let mut eq_rows: Vec<Vec<i64>> = proj.rows().to_vec();
        let mut rhs: Vec<Q> = q.to_vec();
        let mut extra = Vec::new();
        loop {
            let ech = column_echelon(&eq_rows, self.dim);
            let base = ech.particular_solution(&rhs).ok_or_else(|| {
                Error::EmptySlice(format!("level {} has no solution", format_q(q)))
            })?;
            let kernel: Vec<Vec<i64>> = ech
                .kernel_basis()
                .iter()
                .map(|v| {
                    v.iter()
                        .map(|x| x.to_i64().expect("kernel entry fits i64"))
                        .collect()
                })
                .collect();
            let chart_poly = self.chart_polytope(&kernel, &base);
            let verts = chart_poly.vertices();
            if verts.is_empty() {
                return Err(Error::EmptySlice(format!(
                    "level {} lies outside the image polytope",
                    format_q(q)
                )));
            }
            let implicit: Vec<usize> = (0..self.facets.len())
                .filter(|j| !extra.contains(j))
                .filter(|&j| {
                    verts
                        .iter()
                        .all(|v| chart_poly.value(j, &v.point).is_zero())
                })
                .collect();
            if implicit.is_empty() {
                // recentre the base point at the vertex barycenter of the chart
                let centre = barycenter(&verts);
                let shifted: Vec<Q> = (0..self.dim)
                    .map(|i| {
                        kernel
                            .iter()
                            .zip(&centre)
                            .fold(base[i].clone(), |acc, (b, c)| acc + q_int(b[i]) * c)
                    })
                    .collect();
                let chart_poly = self.chart_polytope(&kernel, &shifted);
                let chart_vertices = chart_poly.vertices();
                return Ok(Slice {
                    base: self.clone(),
                    level: q.to_vec(),
                    chart: kernel,
                    base_point: shifted,
                    chart_polytope: chart_poly,
                    chart_vertices,
                    extra_equalities: extra,
                });
            }
            for j in implicit {
                eq_rows.push(self.facets[j].normal.clone());
                rhs.push(q_int(-self.facets[j].offset));
                extra.push(j);
            }
        }
    }

    fn chart_polytope(&self, kernel: &[Vec<i64>], base: &[Q]) -> RationalPolytope {
        let constraints = self
            .facets
            .iter()
            .map(|f| {
                let normal: Vec<Q> = kernel
                    .iter()
                    .map(|b| q_int(b.iter().zip(&f.normal).map(|(x, y)| x * y).sum()))
                    .collect();
                (normal, dot_int_q(&f.normal, base) + q_int(f.offset))
            })
            .collect();
        RationalPolytope::new(kernel.len(), constraints)
    }
}

fn facet_eval(f: &Facet, x: &[f64]) -> f64 {
    f.normal
        .iter()
        .zip(x)
        .map(|(&a, &b)| a as f64 * b)
        .sum::<f64>()
        + f.offset as f64
}

fn barycenter(vertices: &[Vertex]) -> Vec<Q> {
    let dim = vertices.first().map_or(0, |v| v.point.len());
    let count = q_int(vertices.len() as i64);
    (0..dim)
        .map(|i| vertices.iter().fold(Q::zero(), |acc, v| acc + &v.point[i]) / &count)
        .collect()
}

fn rational_bbox(vertices: &[Vertex], dim: usize) -> (Vec<Q>, Vec<Q>) {
    let lo = (0..dim)
        .map(|i| vertices.iter().map(|v| v.point[i].clone()).min().unwrap())
        .collect();
    let hi = (0..dim)
        .map(|i| vertices.iter().map(|v| v.point[i].clone()).max().unwrap())
        .collect();
    (lo, hi)
}

fn format_q(q: &[Q]) -> String {
    format!("({})", q.iter().map(|v| v.to_string()).join(", "))
}

/// Halfspace polytope `{u : ⟨c_j, u⟩ + e_j ≥ 0}` over ℚ. Used for the
/// polytope itself and for slice charts, whose normals need not be primitive
/// and whose offsets are rational.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalPolytope {
    dim: usize,
    constraints: Vec<(Vec<Q>, Q)>,
}

impl RationalPolytope {
    pub fn new(dim: usize, constraints: Vec<(Vec<Q>, Q)>) -> Self {
        Self { dim, constraints }
    }

    pub fn from_integer(dim: usize, facets: &[Facet]) -> Self {
        Self::new(
            dim,
            facets
                .iter()
                .map(|f| {
                    (
                        f.normal.iter().map(|&a| q_int(a)).collect(),
                        q_int(f.offset),
                    )
                })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constraints(&self) -> &[(Vec<Q>, Q)] {
        &self.constraints
    }

    pub fn value(&self, j: usize, u: &[Q]) -> Q {
        let (c, e) = &self.constraints[j];
        dot_q(c, u) + e
    }

    pub fn contains(&self, u: &[Q]) -> bool {
        (0..self.constraints.len()).all(|j| !self.value(j, u).is_negative())
    }

    /// Brute-force vertex enumeration over `dim`-subsets of constraints.
    pub fn vertices(&self) -> Vec<Vertex> {
        if self.dim == 0 {
            return if self.contains(&[]) {
                vec![Vertex {
                    point: vec![],
                    active_facets: (0..self.constraints.len())
                        .filter(|&j| self.constraints[j].1.is_zero())
                        .collect(),
                }]
            } else {
                vec![]
            };
        }
        let mut out: Vec<Vertex> = Vec::new();
        for subset in (0..self.constraints.len()).combinations(self.dim) {
            let mat: Vec<Vec<Q>> = subset
                .iter()
                .map(|&j| self.constraints[j].0.clone())
                .collect();
            let rhs: Vec<Q> = subset
                .iter()
                .map(|&j| -self.constraints[j].1.clone())
                .collect();
            let Some(point) = rational::solve(&mat, &rhs) else {
                continue;
            };
            if !self.contains(&point) || out.iter().any(|v| v.point == point) {
                continue;
            }
            let active = (0..self.constraints.len())
                .filter(|&j| self.value(j, &point).is_zero())
                .collect();
            out.push(Vertex {
                point,
                active_facets: active,
            });
        }
        out.sort_by(|a, b| a.point.cmp(&b.point));
        out
    }

    /// Whether the recession cone `{v : ⟨c_j, v⟩ ≥ 0}` is trivial.
    pub fn is_bounded(&self) -> bool {
        if self.dim == 0 {
            return true;
        }
        let normals: Vec<Vec<Q>> = self.constraints.iter().map(|(c, _)| c.clone()).collect();
        // full rank is needed for a pointed cone; otherwise a line escapes
        let full_rank = normals
            .iter()
            .cloned()
            .combinations(self.dim)
            .any(|rows| !rational::det(&rows).is_zero());
        if !full_rank {
            return false;
        }
        // a pointed cone is nontrivial iff it has an extreme ray cut out by
        // dim-1 independent constraints
        for subset in (0..normals.len()).combinations(self.dim - 1) {
            let ray = generalized_cross(
                &subset
                    .iter()
                    .map(|&j| normals[j].clone())
                    .collect::<Vec<_>>(),
                self.dim,
            );
            if ray.iter().all(|x| x.is_zero()) {
                continue;
            }
            for sign in [1i64, -1] {
                let v: Vec<Q> = ray.iter().map(|x| x * q_int(sign)).collect();
                if normals.iter().all(|c| !dot_q(c, &v).is_negative()) {
                    return false;
                }
            }
        }
        true
    }

    /// True when every constraint normal has exactly one nonzero entry (or
    /// none), i.e. the polytope is an axis-aligned box.
    pub fn is_axis_box(&self) -> bool {
        self.constraints
            .iter()
            .all(|(c, _)| c.iter().filter(|x| !x.is_zero()).count() <= 1)
    }

    pub fn bounding_box(&self) -> Option<(Vec<Q>, Vec<Q>)> {
        let v = self.vertices();
        if v.is_empty() {
            None
        } else {
            Some(rational_bbox(&v, self.dim))
        }
    }
}

/// Vector orthogonal to the given `dim - 1` rows, by cofactor expansion.
fn generalized_cross(rows: &[Vec<Q>], dim: usize) -> Vec<Q> {
    (0..dim)
        .map(|i| {
            let minor: Vec<Vec<Q>> = rows
                .iter()
                .map(|r| (0..dim).filter(|&c| c != i).map(|c| r[c].clone()).collect())
                .collect();
            let d = rational::det(&minor);
            if i % 2 == 0 {
                d
            } else {
                -d
            }
        })
        .collect()
}

/// Slice `{x ∈ P : i_k*(x) = q}` parametrized as `x = x₀ + Σ u_i b_i` with
/// the `b_i` a ℤ-basis of the integer kernel of the defining equations.
#[derive(Debug, Clone)]
pub struct Slice {
    pub base: DelzantPolytope,
    pub level: Vec<Q>,
    /// Rows `b_i` of the chart matrix.
    pub chart: Vec<Vec<i64>>,
    pub base_point: Vec<Q>,
    /// The slice as a polytope in chart coordinates `u`.
    pub chart_polytope: RationalPolytope,
    pub chart_vertices: Vec<Vertex>,
    /// Facets forced to vanish on the slice (nonempty only for face charts).
    pub extra_equalities: Vec<usize>,
}

impl Slice {
    pub fn chart_dim(&self) -> usize {
        self.chart.len()
    }

    /// Ambient point `x₀ + Bᵀu`.
    pub fn point_at(&self, u: &[f64]) -> Vec<f64> {
        (0..self.base.dim())
            .map(|i| {
                q_to_f64(&self.base_point[i])
                    + self
                        .chart
                        .iter()
                        .zip(u)
                        .map(|(b, ui)| b[i] as f64 * ui)
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn point_at_exact(&self, u: &[Q]) -> Vec<Q> {
        (0..self.base.dim())
            .map(|i| {
                self.chart
                    .iter()
                    .zip(u)
                    .fold(self.base_point[i].clone(), |acc, (b, ui)| {
                        acc + q_int(b[i]) * ui
                    })
            })
            .collect()
    }

    /// Lebesgue measure of the slice in chart coordinates, exact for
    /// one-dimensional charts (segment length); `None` otherwise.
    pub fn chart_length(&self) -> Option<Q> {
        if self.chart_dim() != 1 {
            return None;
        }
        let pts: Vec<&Q> = self.chart_vertices.iter().map(|v| &v.point[0]).collect();
        let lo = pts.iter().min()?;
        let hi = pts.iter().max()?;
        Some((*hi).clone() - (*lo).clone())
    }
}

mod rational_vec {
    use super::Q;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Q], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|q| q.to_string())
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Q>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|s| s.parse::<Q>().map_err(serde::de::Error::custom))
            .collect()
    }
}
