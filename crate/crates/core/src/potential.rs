//! Symplectic potentials `g_{k,t} = g₀ + t·ψ`, with `g₀ = ½ Σ_j l_j log l_j`
//! the canonical potential (linear part fixed to zero) and `ψ = φ∘i_k*`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::polytope::DelzantPolytope;
use crate::subtorus::ConvexFunction;

pub fn g0_value(p: &DelzantPolytope, x: &[f64]) -> Result<f64> {
    let l = p.check_interior(x)?;
    Ok(0.5 * l.iter().map(|v| v * v.ln()).sum::<f64>())
}

/// `∇g₀ = ½ Σ_j r_j (log l_j + 1)`.
pub fn g0_gradient(p: &DelzantPolytope, x: &[f64]) -> Result<DVector<f64>> {
    let l = p.check_interior(x)?;
    let mut g = DVector::zeros(p.dim());
    for (f, lj) in p.facets().iter().zip(&l) {
        let c = 0.5 * (lj.ln() + 1.0);
        for (gi, r) in g.iter_mut().zip(&f.normal) {
            *gi += c * *r as f64;
        }
    }
    Ok(g)
}

/// `Hess g₀ = ½ Σ_j r_j r_jᵀ / l_j`.
pub fn g0_hessian(p: &DelzantPolytope, x: &[f64]) -> Result<DMatrix<f64>> {
    let l = p.check_interior(x)?;
    Ok(g0_hessian_from_values(p, &l))
}

fn g0_hessian_from_values(p: &DelzantPolytope, l: &[f64]) -> DMatrix<f64> {
    let n = p.dim();
    let mut h = DMatrix::zeros(n, n);
    for (f, lj) in p.facets().iter().zip(l) {
        let c = 0.5 / lj;
        for a in 0..n {
            for b in 0..n {
                h[(a, b)] += c * (f.normal[a] * f.normal[b]) as f64;
            }
        }
    }
    h
}

/// `g₀ + t·ψ` on the interior of a polytope.
#[derive(Debug, Clone)]
pub struct SymplecticPotential {
    polytope: DelzantPolytope,
    perturbation: Option<Arc<dyn ConvexFunction>>,
    time: f64,
}

impl SymplecticPotential {
    pub fn canonical(polytope: DelzantPolytope) -> Self {
        Self {
            polytope,
            perturbation: None,
            time: 0.0,
        }
    }

    pub fn new(polytope: DelzantPolytope, psi: Arc<dyn ConvexFunction>, time: f64) -> Result<Self> {
        if psi.dim() != polytope.dim() {
            return Err(Error::Dimension {
                expected: polytope.dim(),
                got: psi.dim(),
            });
        }
        if !(time >= 0.0) || !time.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "time must be finite and ≥ 0, got {time}"
            )));
        }
        Ok(Self {
            polytope,
            perturbation: Some(psi),
            time,
        })
    }

    /// Same polytope and perturbation at another time.
    pub fn at_time(&self, time: f64) -> Result<Self> {
        match &self.perturbation {
            Some(psi) => Self::new(self.polytope.clone(), psi.clone(), time),
            None if time == 0.0 => Ok(self.clone()),
            None => Err(Error::InvalidArgument(
                "canonical potential has no time parameter".into(),
            )),
        }
    }

    pub fn polytope(&self) -> &DelzantPolytope {
        &self.polytope
    }

    pub fn perturbation(&self) -> Option<&Arc<dyn ConvexFunction>> {
        self.perturbation.as_ref()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn dim(&self) -> usize {
        self.polytope.dim()
    }

    fn active_perturbation(&self) -> Option<&Arc<dyn ConvexFunction>> {
        self.perturbation.as_ref().filter(|_| self.time != 0.0)
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let mut v = g0_value(&self.polytope, x)?;
        if let Some(psi) = self.active_perturbation() {
            v += self.time * psi.value(x);
        }
        Ok(v)
    }

    pub fn gradient(&self, x: &[f64]) -> Result<DVector<f64>> {
        let mut g = g0_gradient(&self.polytope, x)?;
        if let Some(psi) = self.active_perturbation() {
            g += self.time * psi.gradient(x);
        }
        Ok(g)
    }

    pub fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let mut h = g0_hessian(&self.polytope, x)?;
        if let Some(psi) = self.active_perturbation() {
            h += self.time * psi.hessian(x);
        }
        Ok(h)
    }

    /// `ψ(x)` and `∇ψ(x)`, zero for the canonical potential.
    pub fn perturbation_parts(&self, x: &[f64]) -> (f64, DVector<f64>) {
        match &self.perturbation {
            Some(psi) => (psi.value(x), psi.gradient(x)),
            None => (0.0, DVector::zeros(self.dim())),
        }
    }
}

/// Summary of [`validate_potential`]. `min_product`/`max_product` bound
/// `det(Hess g)·Π_j l_j = 1/β` over all samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialReport {
    pub positive_definite: bool,
    pub min_eigenvalue: f64,
    pub witness: Option<Vec<f64>>,
    pub min_product: f64,
    pub max_product: f64,
    pub samples: usize,
}

impl PotentialReport {
    pub fn is_valid(&self) -> bool {
        self.positive_definite && self.min_product > 0.0 && self.max_product.is_finite()
    }
}

/// Checks positive definiteness on interior samples and tracks
/// `det(Hess g)·Π l_j` on both sample sets.
pub fn validate_potential(
    pot: &SymplecticPotential,
    interior_samples: &[Vec<f64>],
    boundary_samples: &[Vec<f64>],
) -> Result<PotentialReport> {
    if interior_samples.is_empty() || boundary_samples.is_empty() {
        return Err(Error::InvalidArgument(
            "sample sets must be nonempty".into(),
        ));
    }
    let mut report = PotentialReport {
        positive_definite: true,
        min_eigenvalue: f64::INFINITY,
        witness: None,
        min_product: f64::INFINITY,
        max_product: f64::NEG_INFINITY,
        samples: 0,
    };
    for (i, x) in interior_samples.iter().chain(boundary_samples).enumerate() {
        let h = pot.hessian(x)?;
        if i < interior_samples.len() {
            let e = linalg::min_eigenvalue(&h);
            report.min_eigenvalue = report.min_eigenvalue.min(e);
            if !(e > 0.0) && report.positive_definite {
                report.positive_definite = false;
                report.witness = Some(x.clone());
            }
        }
        let l = pot.polytope().facet_values(x);
        let prod = h.determinant() * l.iter().product::<f64>();
        report.min_product = report.min_product.min(prod);
        report.max_product = report.max_product.max(prod);
        report.samples += 1;
    }
    Ok(report)
}
