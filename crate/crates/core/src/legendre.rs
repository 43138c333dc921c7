//! Legendre duality between symplectic coordinates `x` and complex
//! coordinates `y = ∇g(x)`, with `h(y) = −g(x(y)) + ⟨x(y), y⟩`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::potential::SymplecticPotential;

pub const DEFAULT_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_MAX_ITERATIONS: usize = 200;

// a step is accepted only if every facet value stays above this fraction of
// its previous value
const FACET_SHRINK: f64 = 0.4;
const ARMIJO: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct LegendrePair {
    potential: SymplecticPotential,
    tolerance: f64,
    max_iterations: usize,
}

impl LegendrePair {
    pub fn new(potential: SymplecticPotential) -> Self {
        Self {
            potential,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64, max_iterations: usize) -> Result<Self> {
        if !(tolerance > 0.0) || max_iterations == 0 {
            return Err(Error::InvalidArgument(
                "tolerance and iteration budget must be positive".into(),
            ));
        }
        self.tolerance = tolerance;
        self.max_iterations = max_iterations;
        Ok(self)
    }

    pub fn potential(&self) -> &SymplecticPotential {
        &self.potential
    }

    /// `y = ∇g(x)`.
    pub fn forward(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.potential.gradient(x)
    }

    /// Solves `∇g(x) = y` by damped Newton from the vertex barycenter.
    ///
    /// Converged when `‖∇g(x) − y‖∞ ≤ tol·(1 + ‖y‖∞)` or when the Newton
    /// step drops to rounding level in `x`.
    pub fn inverse(&self, y: &[f64]) -> Result<DVector<f64>> {
        let n = self.potential.dim();
        if y.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: y.len(),
            });
        }
        let y = DVector::from_column_slice(y);
        let p = self.potential.polytope();
        let mut x = DVector::from_vec(p.barycenter());
        let scale = 1.0 + y.amax();
        // Φ(x) = g(x) − ⟨x, y⟩ is strictly convex with minimizer x(y)
        let merit = |x: &DVector<f64>| -> Result<f64> {
            Ok(self.potential.value(x.as_slice())? - x.dot(&y))
        };
        let mut residual = f64::INFINITY;
        for _ in 0..self.max_iterations {
            let r = self.potential.gradient(x.as_slice())? - &y;
            residual = r.amax();
            if residual <= self.tolerance * scale {
                return Ok(x);
            }
            let h = self.potential.hessian(x.as_slice())?;
            let dx = -linalg::spd_solve(&h, &r)?;
            // near a facet the gradient is steep and the residual floor is
            // set by rounding in x; a step at that level cannot improve it
            if dx.amax() <= 8.0 * f64::EPSILON * (1.0 + x.amax()) {
                return Ok(x);
            }
            let slope = r.dot(&dx);
            let l_now = p.facet_values(x.as_slice());
            let phi_now = merit(&x)?;
            let mut alpha = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let trial = &x + alpha * &dx;
                let l_trial = p.facet_values(trial.as_slice());
                let keeps_facets = l_trial
                    .iter()
                    .zip(&l_now)
                    .all(|(a, b)| *a > FACET_SHRINK * b);
                // the merit test alone stalls once its decrease is below rounding
                if keeps_facets
                    && (merit(&trial)? <= phi_now + ARMIJO * alpha * slope
                        || (self.potential.gradient(trial.as_slice())? - &y).amax()
                            <= (1.0 - ARMIJO * alpha) * residual)
                {
                    x = trial;
                    moved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !moved {
                // merit is flat to rounding; take the shortened step anyway
                let trial = &x + alpha * &dx;
                if p.check_interior(trial.as_slice()).is_err() {
                    break;
                }
                x = trial;
            }
        }
        let r = self.potential.gradient(x.as_slice())? - &y;
        residual = residual.min(r.amax());
        if residual <= self.tolerance * scale {
            return Ok(x);
        }
        Err(Error::NoConvergence {
            iterations: self.max_iterations,
            residual,
            last: x.as_slice().to_vec(),
        })
    }

    /// `h(y) = −g(x(y)) + ⟨x(y), y⟩`.
    pub fn kahler_potential(&self, y: &[f64]) -> Result<f64> {
        let x = self.inverse(y)?;
        Ok(-self.potential.value(x.as_slice())? + x.dot(&DVector::from_column_slice(y)))
    }

    /// `Hess h(y) = (Hess g(x(y)))⁻¹`.
    pub fn kahler_hessian(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        let x = self.inverse(y)?;
        linalg::spd_inverse(&self.potential.hessian(x.as_slice())?)
    }
}

/// `|h_t(∇g_t(x)) − [h₀(∇g₀(x)) − tψ(x) + t⟨x, ∇ψ(x)⟩]|`.
///
/// Both sides go through the Newton inverse, so this checks that adding
/// `t·ψ` to the symplectic potential shifts the Kähler potential exactly as
/// the imaginary-time flow of `ψ` does.
pub fn flow_identity_residual(
    pair0: &LegendrePair,
    pair_t: &LegendrePair,
    x: &[f64],
) -> Result<f64> {
    let g0 = pair0.potential();
    let gt = pair_t.potential();
    if g0.time() != 0.0 {
        return Err(Error::InvalidArgument(
            "reference pair must be at t = 0".into(),
        ));
    }
    if g0.polytope() != gt.polytope() {
        return Err(Error::InvalidArgument(
            "pairs must share the polytope".into(),
        ));
    }
    let t = gt.time();
    if t == 0.0 {
        return Ok(0.0);
    }
    let (psi, dpsi) = gt.perturbation_parts(x);
    let xv = DVector::from_column_slice(x);
    let y0 = pair0.forward(x)?;
    let yt = pair_t.forward(x)?;
    let h0 = pair0.kahler_potential(y0.as_slice())?;
    let ht = pair_t.kahler_potential(yt.as_slice())?;
    Ok((ht - (h0 - t * psi + t * xv.dot(&dpsi))).abs())
}
