//! Monomial sections `σᵐ_{k,t}`, `m ∈ P_ℤ`, through their pointwise norms
//! `|σᵐ|(x) = exp(g(x) − ⟨x − m, ∇g(x)⟩)` in the action-angle chart.

use std::f64::consts::TAU;
use std::sync::Arc;

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::polytope::{DelzantPolytope, LatticePoint};
use crate::potential::SymplecticPotential;
use crate::quadrature::{self, QuadratureRule};
use crate::subtorus::ConvexFunction;

// facet values this far below zero are read as rounding on the boundary
const BOUNDARY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct MonomialSection {
    m: LatticePoint,
    potential: SymplecticPotential,
}

impl MonomialSection {
    pub fn new(m: LatticePoint, potential: SymplecticPotential) -> Result<Self> {
        let p = potential.polytope();
        if m.len() != p.dim() {
            return Err(Error::Dimension {
                expected: p.dim(),
                got: m.len(),
            });
        }
        if let Some(j) = (0..p.num_facets()).find(|&j| p.facet_value_int(j, &m) < 0) {
            return Err(Error::Exterior {
                facet: j,
                value: p.facet_value_int(j, &m) as f64,
            });
        }
        Ok(Self { m, potential })
    }

    /// One section per lattice point.
    pub fn all(potential: &SymplecticPotential) -> Vec<Self> {
        potential
            .polytope()
            .lattice_points()
            .into_iter()
            .map(|m| Self {
                m,
                potential: potential.clone(),
            })
            .collect()
    }

    pub fn m(&self) -> &[i64] {
        &self.m
    }

    pub fn potential(&self) -> &SymplecticPotential {
        &self.potential
    }

    /// Exponents `l_j(m)` of the monomial `Π z_j^{l_j(m)}`.
    pub fn exponents(&self) -> Vec<i64> {
        let p = self.potential.polytope();
        (0..p.num_facets())
            .map(|j| p.facet_value_int(j, &self.m))
            .collect()
    }

    pub fn at_time(&self, t: f64) -> Result<Self> {
        Ok(Self {
            m: self.m.clone(),
            potential: self.potential.at_time(t)?,
        })
    }

    /// `g(x) − ⟨x − m, ∇g(x)⟩` at an interior point.
    pub fn log_pointwise_norm(&self, x: &[f64]) -> Result<f64> {
        let g = self.potential.value(x)?;
        let grad = self.potential.gradient(x)?;
        let pairing: f64 = x
            .iter()
            .zip(&self.m)
            .zip(grad.iter())
            .map(|((xi, mi), gi)| (xi - *mi as f64) * gi)
            .sum();
        Ok(g - pairing)
    }

    pub fn pointwise_norm(&self, x: &[f64]) -> Result<f64> {
        Ok(self.log_pointwise_norm(x)?.exp())
    }

    /// Continuous extension to all of `P`:
    /// `e^{−t f_m(x)}` times the closed form of the `t = 0` norm.
    pub fn extended_norm(&self, x: &[f64]) -> Result<f64> {
        let base = closed_form_norm_g0(self.potential.polytope(), &self.m, x)?;
        match self.weight() {
            Some(w) if self.potential.time() != 0.0 => {
                Ok(base * (-self.potential.time() * w.value(x)).exp())
            }
            _ => Ok(base),
        }
    }

    /// `f_m` for the perturbation of this section's potential, if any.
    pub fn weight(&self) -> Option<ConcentrationWeight> {
        self.potential
            .perturbation()
            .map(|psi| ConcentrationWeight {
                m: self.m.iter().map(|v| *v as f64).collect(),
                psi: psi.clone(),
            })
    }
}

/// `Π_j l_j(x)^{l_j(m)/2} e^{(l_j(m) − l_j(x))/2}`, the norm of `σᵐ` for `g₀`,
/// valid on the closed polytope with `0⁰ = 1`.
pub fn closed_form_norm_g0(p: &DelzantPolytope, m: &[i64], x: &[f64]) -> Result<f64> {
    if x.len() != p.dim() || m.len() != p.dim() {
        return Err(Error::Dimension {
            expected: p.dim(),
            got: x.len().min(m.len()),
        });
    }
    let mut log_sum = 0.0;
    for (j, lx) in p.facet_values(x).into_iter().enumerate() {
        if lx < -BOUNDARY_SLACK {
            return Err(Error::Exterior {
                facet: j,
                value: lx,
            });
        }
        let lx = lx.max(0.0);
        let lm = p.facet_value_int(j, m) as f64;
        if lm > 0.0 {
            if lx == 0.0 {
                return Ok(0.0);
            }
            log_sum += 0.5 * lm * lx.ln();
        }
        log_sum += 0.5 * (lm - lx);
    }
    Ok(log_sum.exp())
}

/// `f_m(x) = ⟨x − m, ∇ψ(x)⟩ − ψ(x)`.
#[derive(Debug, Clone)]
pub struct ConcentrationWeight {
    pub m: Vec<f64>,
    pub psi: Arc<dyn ConvexFunction>,
}

impl ConcentrationWeight {
    pub fn new(m: &[i64], psi: Arc<dyn ConvexFunction>) -> Result<Self> {
        if m.len() != psi.dim() {
            return Err(Error::Dimension {
                expected: psi.dim(),
                got: m.len(),
            });
        }
        Ok(Self {
            m: m.iter().map(|v| *v as f64).collect(),
            psi,
        })
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        concentration_weight(self, x)
    }
}

pub fn concentration_weight(w: &ConcentrationWeight, x: &[f64]) -> f64 {
    let grad = w.psi.gradient(x);
    let pairing: f64 = x
        .iter()
        .zip(&w.m)
        .zip(grad.iter())
        .map(|((xi, mi), gi)| (xi - mi) * gi)
        .sum();
    pairing - w.psi.value(x)
}

/// `| |σᵐ_{k,t}|(x) − e^{−t f_m(x)} |σᵐ_{k,0}|(x) |` for the family of
/// `family` (its own time is ignored).
pub fn norm_factorization_check(
    family: &SymplecticPotential,
    m: &[i64],
    t: f64,
    x: &[f64],
) -> Result<f64> {
    let s0 = MonomialSection::new(m.to_vec(), family.at_time(0.0)?)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let st = s0.at_time(t)?;
    let w = st
        .weight()
        .ok_or_else(|| Error::InvalidArgument("potential has no perturbation".into()))?;
    let lhs = st.pointwise_norm(x)?;
    let rhs = (-t * w.value(x)).exp() * s0.pointwise_norm(x)?;
    Ok((lhs - rhs).abs())
}

/// `∫_P |σᵐ_{k,t}| dx` using the factorized closed form, so nodes on `∂P`
/// are allowed.
pub fn l1_norm(section: &MonomialSection, rule: &QuadratureRule) -> Result<f64> {
    quadrature::integrate(|x| section.extended_norm(x).unwrap_or(f64::NAN), rule)
}

/// `‖σᵐ_{k,t}‖₁ / ‖e^{−t f_m}‖₁`, which stabilizes at `c_k^m` as `t` grows.
/// Both integrals share the shift `min f_m` so large `t` does not overflow.
pub fn l1_norm_ratio(section: &MonomialSection, rule: &QuadratureRule) -> Result<f64> {
    let t = section.potential().time();
    let w = section
        .weight()
        .ok_or_else(|| Error::InvalidArgument("potential has no perturbation".into()))?;
    let f: Vec<f64> = rule.points().iter().map(|x| w.value(x)).collect();
    let fmin = f.iter().copied().fold(f64::INFINITY, f64::min);
    let p = section.potential().polytope();
    let mut num = Vec::with_capacity(f.len());
    let mut den = Vec::with_capacity(f.len());
    for ((x, fx), wt) in rule.points().iter().zip(&f).zip(rule.weights()) {
        let e = (-t * (fx - fmin)).exp() * wt;
        num.push(e * closed_form_norm_g0(p, section.m(), x)?);
        den.push(e);
    }
    Ok(crate::linalg::pairwise_sum(&num) / crate::linalg::pairwise_sum(&den))
}

/// θ-average of `e^{i⟨m − m′, θ⟩}` over the uniform grid with `grid` points
/// per axis, times the radial factor `|σᵐ|(x)|σ^{m′}|(x)`.
pub fn pairwise_orthogonality(
    potential: &SymplecticPotential,
    m: &[i64],
    m_prime: &[i64],
    grid: usize,
    x: &[f64],
) -> Result<Complex<f64>> {
    let a = MonomialSection::new(m.to_vec(), potential.clone())?;
    let b = MonomialSection::new(m_prime.to_vec(), potential.clone())?;
    let max_diff = m
        .iter()
        .zip(m_prime)
        .map(|(u, v)| (u - v).abs())
        .max()
        .unwrap_or(0);
    if grid == 0 || grid as i64 <= max_diff {
        return Err(Error::Aliasing {
            size: grid,
            diff: max_diff,
        });
    }
    let radial = a.pointwise_norm(x)? * b.pointwise_norm(x)?;
    // the grid average factors over axes
    let mut avg = Complex::new(1.0, 0.0);
    for (u, v) in m.iter().zip(m_prime) {
        let d = (u - v) as f64;
        let axis: Complex<f64> = (0..grid)
            .map(|s| Complex::from_polar(1.0, d * TAU * s as f64 / grid as f64))
            .sum();
        avg *= axis / grid as f64;
    }
    Ok(avg * radial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::sampling;
    use crate::subtorus::{pullback, Quadratic, SubtorusProjection};
    use approx::assert_abs_diff_eq;

    fn family(p: DelzantPolytope, rows: Vec<Vec<i64>>) -> SymplecticPotential {
        let proj = SubtorusProjection::new(rows).unwrap();
        let psi =
            Arc::new(pullback(Arc::new(Quadratic::half_norm_squared(proj.rank())), &proj).unwrap());
        SymplecticPotential::new(p, psi, 0.0).unwrap()
    }

    #[test]
    fn interval_norms() {
        let pot = SymplecticPotential::canonical(fixtures::interval());
        let s0 = MonomialSection::new(vec![0], pot.clone()).unwrap();
        let s1 = MonomialSection::new(vec![1], pot.clone()).unwrap();
        for x in [0.1, 0.5, 0.75, 0.999] {
            assert_abs_diff_eq!(
                s0.pointwise_norm(&[x]).unwrap(),
                (1.0 - x).sqrt(),
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(s1.pointwise_norm(&[x]).unwrap(), x.sqrt(), epsilon = 1e-12);
        }
        assert_eq!(
            closed_form_norm_g0(pot.polytope(), &[0], &[0.0]).unwrap(),
            1.0
        );
        assert_eq!(
            closed_form_norm_g0(pot.polytope(), &[0], &[1.0]).unwrap(),
            0.0
        );
        assert_abs_diff_eq!(
            closed_form_norm_g0(pot.polytope(), &[0], &[0.75]).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        let g = pot.value(&[0.5]).unwrap();
        let mid = MonomialSection::new(vec![0], pot).unwrap();
        assert_abs_diff_eq!(
            mid.log_pointwise_norm(&[0.5]).unwrap(),
            g + 0.5 * 0.0,
            epsilon = 1e-15
        );
        assert!(MonomialSection::new(
            vec![2],
            SymplecticPotential::canonical(fixtures::interval())
        )
        .is_err());
    }

    #[test]
    fn closed_form_boundary_cases() {
        let simplex = fixtures::unit_simplex();
        assert_abs_diff_eq!(
            closed_form_norm_g0(&simplex, &[0, 0], &[0.0, 0.0]).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        let sq = fixtures::square(2);
        // (1,1) has every l_j(m) > 0, so each vertex gives zero
        assert_eq!(closed_form_norm_g0(&sq, &[1, 1], &[0.0, 2.0]).unwrap(), 0.0);
        assert!(matches!(
            closed_form_norm_g0(&sq, &[1, 1], &[-0.1, 1.0]),
            Err(Error::Exterior { facet: 0, .. })
        ));
    }

    #[test]
    fn closed_form_matches_exponent_formula() {
        for p in [
            fixtures::interval(),
            fixtures::unit_square(),
            fixtures::square(2),
            fixtures::unit_simplex(),
            fixtures::trapezoid(),
            fixtures::cube(),
        ] {
            let pot = SymplecticPotential::canonical(p.clone());
            let pts = sampling::interior_points(&p, 20, 7, 1e-3);
            for s in MonomialSection::all(&pot) {
                for x in &pts {
                    let a = s.pointwise_norm(x).unwrap();
                    let b = closed_form_norm_g0(&p, s.m(), x).unwrap();
                    assert!((a - b).abs() < 1e-10, "{:?} {x:?}: {a} vs {b}", s.m());
                }
            }
        }
    }

    #[test]
    fn weight_examples() {
        let id = family(fixtures::square(2), vec![vec![1, 0], vec![0, 1]]);
        let w = ConcentrationWeight::new(&[0, 0], id.perturbation().unwrap().clone()).unwrap();
        assert_abs_diff_eq!(w.value(&[0.3, 1.2]), 0.5 * (0.09 + 1.44), epsilon = 1e-14);
        assert_eq!(w.value(&[0.0, 0.0]), 0.0);

        let pot = family(fixtures::square(2), vec![vec![1, 0]]);
        let w = ConcentrationWeight::new(&[1, 1], pot.perturbation().unwrap().clone()).unwrap();
        for x2 in [0.1, 1.0, 1.9] {
            assert_abs_diff_eq!(w.value(&[1.0, x2]), -0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(w.value(&[0.4, x2]), 0.5 * 0.16 - 0.4, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(
            w.value(&[1.0, 1.0]),
            -pot.perturbation().unwrap().value(&[1.0, 1.0]),
            epsilon = 1e-15
        );
    }

    #[test]
    fn factorization_identity() {
        let pot = family(fixtures::interval(), vec![vec![1]]);
        assert_eq!(
            norm_factorization_check(&pot, &[0], 0.0, &[0.5]).unwrap(),
            0.0
        );
        assert!(norm_factorization_check(&pot, &[0], 3.0, &[0.5]).unwrap() < 1e-12);
        let pot = family(fixtures::square(2), vec![vec![1, 0]]);
        for x in sampling::interior_points(pot.polytope(), 30, 11, 1e-3) {
            for t in [0.5, 4.0, 20.0] {
                assert!(norm_factorization_check(&pot, &[1, 1], t, &x).unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn orthogonality() {
        let pot = SymplecticPotential::canonical(fixtures::interval());
        assert!(
            pairwise_orthogonality(&pot, &[0], &[1], 4, &[0.3])
                .unwrap()
                .norm()
                < 1e-15
        );
        let pot = SymplecticPotential::canonical(fixtures::square(2));
        assert!(
            pairwise_orthogonality(&pot, &[0, 0], &[1, 2], 8, &[0.5, 1.5])
                .unwrap()
                .norm()
                < 1e-12
        );
        let same = pairwise_orthogonality(&pot, &[1, 2], &[1, 2], 8, &[0.5, 1.5]).unwrap();
        assert!(same.re > 0.0 && same.im == 0.0);
        assert!(matches!(
            pairwise_orthogonality(&pot, &[0, 0], &[2, 0], 2, &[1.0, 1.0]),
            Err(Error::Aliasing { size: 2, diff: 2 })
        ));
    }

    #[test]
    fn l1_norms_interval() {
        let pot = SymplecticPotential::canonical(fixtures::interval());
        let rule = QuadratureRule::for_polytope(pot.polytope(), 64).unwrap();
        for m in [0, 1] {
            let s = MonomialSection::new(vec![m], pot.clone()).unwrap();
            assert_abs_diff_eq!(l1_norm(&s, &rule).unwrap(), 2.0 / 3.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn l1_ratio_stabilizes() {
        let pot = family(fixtures::square(2), vec![vec![1, 0]]);
        let rule = QuadratureRule::for_polytope(pot.polytope(), 128).unwrap();
        let s = MonomialSection::new(vec![1, 1], pot).unwrap();
        let r: Vec<f64> = [32.0, 64.0, 128.0]
            .iter()
            .map(|&t| l1_norm_ratio(&s.at_time(t).unwrap(), &rule).unwrap())
            .collect();
        assert!((r[2] - r[1]).abs() < (r[1] - r[0]).abs());
        assert!(r.iter().all(|v| v.is_finite() && *v > 0.0));
    }
}
