//! Complex structures, Kähler polarization frames and their degeneration.
//!
//! Tangent vectors live in `ℂ^{2n}` with coordinates `(∂x₁..∂xₙ, ∂θ₁..∂θₙ)`,
//! taken in the adapted basis of the subtorus so that the first `k`
//! coordinates are the ones the projection sees.

use nalgebra::{Complex, DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::potential::SymplecticPotential;
use crate::subtorus::AdaptedBasis;

pub type C64 = Complex<f64>;

/// `J = [[0, −G⁻¹], [G, 0]]` at a point, `G = Hess g`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexStructureMatrix {
    pub matrix: DMatrix<f64>,
    pub metric_block: DMatrix<f64>,
    pub basepoint: Vec<f64>,
}

impl ComplexStructureMatrix {
    /// `max |J² + I|`.
    pub fn square_defect(&self) -> f64 {
        let n2 = self.matrix.nrows();
        (&self.matrix * &self.matrix + DMatrix::identity(n2, n2)).amax()
    }
}

pub fn complex_structure(pot: &SymplecticPotential, x: &[f64]) -> Result<ComplexStructureMatrix> {
    let g = pot.hessian(x)?;
    let g_inv = linalg::spd_inverse(&g)?;
    let n = g.nrows();
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    j.view_mut((0, n), (n, n)).copy_from(&(-g_inv));
    j.view_mut((n, 0), (n, n)).copy_from(&g);
    Ok(ComplexStructureMatrix {
        matrix: j,
        metric_block: g,
        basepoint: x.to_vec(),
    })
}

/// `γ = diag(G, G⁻¹)`.
pub fn kahler_metric(pot: &SymplecticPotential, x: &[f64]) -> Result<DMatrix<f64>> {
    let g = pot.hessian(x)?;
    let g_inv = linalg::spd_inverse(&g)?;
    let n = g.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&g);
    m.view_mut((n, n), (n, n)).copy_from(&g_inv);
    Ok(m)
}

/// Standard form `[[0, I], [−I, 0]]`.
pub fn symplectic_matrix(n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, n), (n, n)).fill_with_identity();
    m.view_mut((n, 0), (n, n))
        .copy_from(&(-DMatrix::<f64>::identity(n, n)));
    m
}

/// `Ω((a, b), (a′, b′)) = ⟨a, b′⟩ − ⟨b, a′⟩`, complex bilinear.
pub fn omega(v: &[C64], w: &[C64]) -> C64 {
    let n = v.len() / 2;
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        acc += v[i] * w[n + i] - v[n + i] * w[i];
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FrameLabel {
    Time(f64),
    Limit,
    /// `D^k_ℂ ∩ P_{k,t}` sub-frame at the given time.
    KernelPart(f64),
}

/// Rows spanning a complex subspace of `ℂ^{2n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarizationFrame {
    pub rows: DMatrix<C64>,
    pub basepoint: Vec<f64>,
    pub label: FrameLabel,
}

impl PolarizationFrame {
    pub fn from_rows(rows: DMatrix<C64>, basepoint: Vec<f64>, label: FrameLabel) -> Self {
        Self {
            rows,
            basepoint,
            label,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    pub fn ambient(&self) -> usize {
        self.rows.ncols()
    }

    fn row(&self, i: usize) -> Vec<C64> {
        self.rows.row(i).iter().copied().collect()
    }

    /// `max_{a,b} |Ω(row_a, row_b)|`; zero for a Lagrangian frame.
    pub fn isotropy_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..self.len() {
            for b in 0..self.len() {
                worst = worst.max(omega(&self.row(a), &self.row(b)).norm());
            }
        }
        worst
    }

    /// Eigenvalues (ascending) of the Hermitian form `−iΩ(v, v̄)` on the span.
    pub fn positivity_spectrum(&self) -> Vec<f64> {
        let k = self.len();
        let mut m = DMatrix::<C64>::zeros(k, k);
        let minus_i = C64::new(0.0, -1.0);
        for a in 0..k {
            for b in 0..k {
                let wb: Vec<C64> = self.row(b).iter().map(|z| z.conj()).collect();
                m[(a, b)] = minus_i * omega(&self.row(a), &wb);
            }
        }
        // symmetrize away rounding before the Hermitian eigen-solve
        let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// Complex dimension of the kernel of `−iΩ(v, v̄)` on the span.
    pub fn degenerate_rank(&self, tol: f64) -> usize {
        let ev = self.positivity_spectrum();
        let scale = ev.iter().fold(1.0f64, |a, b| a.max(b.abs()));
        ev.iter().filter(|e| e.abs() <= tol * scale).count()
    }

    /// Orthonormal basis (columns) of the span under the Euclidean Hermitian product.
    fn orthonormal_basis(&self) -> DMatrix<C64> {
        self.rows.transpose().qr().q()
    }
}

/// Rows `(row j of G_{k,t}⁻¹, −i e_j)`, `j = 1..n`, in adapted coordinates.
pub fn polarization_frame(
    pot: &SymplecticPotential,
    basis: &AdaptedBasis,
    x: &[f64],
) -> Result<PolarizationFrame> {
    let g = basis.hessian_to_adapted(&pot.hessian(x)?);
    let g_inv = linalg::spd_inverse(&g)?;
    let n = g.nrows();
    let rows = DMatrix::from_fn(n, 2 * n, |j, c| {
        if c < n {
            C64::new(g_inv[(j, c)], 0.0)
        } else if c - n == j {
            C64::new(0.0, -1.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(PolarizationFrame::from_rows(
        rows,
        x.to_vec(),
        FrameLabel::Time(pot.time()),
    ))
}

/// Limit of [`polarization_frame`] as `t → ∞`.
///
/// Rows `1..k` are the angle directions `∂θ_j`; rows `k+1..n` are
/// `((0, B⁻¹ row j), −i e_j)` with `B` the kernel block of `Hess g₀` in
/// adapted coordinates. When `Hess g₀` is block diagonal, `B⁻¹` rows are the
/// corresponding rows of `G₀⁻¹`.
pub fn limit_frame(
    basis: &AdaptedBasis,
    pot0: &SymplecticPotential,
    x: &[f64],
) -> Result<PolarizationFrame> {
    let g = basis.hessian_to_adapted(&crate::potential::g0_hessian(pot0.polytope(), x)?);
    let n = g.nrows();
    let k = basis.split();
    let b = g.view((k, k), (n - k, n - k)).into_owned();
    let b_inv = if n > k {
        linalg::spd_inverse(&b)?
    } else {
        DMatrix::zeros(0, 0)
    };
    let rows = DMatrix::from_fn(n, 2 * n, |j, c| {
        if j < k {
            if c == n + j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        } else if c < n {
            if c >= k {
                C64::new(b_inv[(j - k, c - k)], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        } else if c - n == j {
            C64::new(0.0, -1.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(PolarizationFrame::from_rows(
        rows,
        x.to_vec(),
        FrameLabel::Limit,
    ))
}

/// `D^k_ℂ ∩ P_{k,t}`: rows `(e_j, −i·G_{k,t} e_j)` for `j = k+1..n`.
///
/// The perturbation only touches the first `k` rows and columns of the
/// adapted Hessian, so these rows do not depend on `t`.
pub fn kernel_subframe(
    pot: &SymplecticPotential,
    basis: &AdaptedBasis,
    x: &[f64],
) -> Result<PolarizationFrame> {
    let g = basis.hessian_to_adapted(&pot.hessian(x)?);
    let n = g.nrows();
    let k = basis.split();
    let rows = DMatrix::from_fn(n - k, 2 * n, |r, c| {
        let j = r + k;
        if c < n {
            C64::new(if c == j { 1.0 } else { 0.0 }, 0.0)
        } else {
            C64::new(0.0, -g[(c - n, j)])
        }
    });
    Ok(PolarizationFrame::from_rows(
        rows,
        x.to_vec(),
        FrameLabel::KernelPart(pot.time()),
    ))
}

/// Rows `k+1..n` of a frame as a frame of their own.
pub fn subframe(frame: &PolarizationFrame, from: usize) -> PolarizationFrame {
    let rows = frame.rows.rows(from, frame.len() - from).into_owned();
    PolarizationFrame::from_rows(rows, frame.basepoint.clone(), frame.label)
}

/// Largest principal angle between the spans, in `[0, π/2]`.
pub fn grassmann_distance(a: &PolarizationFrame, b: &PolarizationFrame) -> Result<f64> {
    if a.ambient() != b.ambient() || a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let qa = a.orthonormal_basis();
    let qb = b.orthonormal_basis();
    // sin of the largest angle = ‖(I − Q_B Q_Bᴴ) Q_A‖₂
    let resid = &qa - &qb * (qb.adjoint() * &qa);
    let s = resid
        .singular_values()
        .iter()
        .fold(0.0f64, |m, v| m.max(*v));
    Ok(s.min(1.0).asin())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayRow {
    pub t: f64,
    /// Max-norm of rows `1..k` of `G_{k,t}⁻¹` (adapted coordinates).
    pub inverse_norm: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub basepoint: Vec<f64>,
    pub rows: Vec<DecayRow>,
    /// Least-squares slope of `log distance` against `log t`.
    pub slope: Option<f64>,
}

/// Frame distance to the limit over a schedule of times.
pub fn decay_report(
    family: &SymplecticPotential,
    basis: &AdaptedBasis,
    x: &[f64],
    t_list: &[f64],
) -> Result<DecayReport> {
    if t_list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(
            "t_list must be strictly increasing".into(),
        ));
    }
    let pot0 = family.at_time(0.0)?;
    let limit = limit_frame(basis, &pot0, x)?;
    let k = basis.split();
    let mut rows = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let pot = family.at_time(t)?;
        let g = basis.hessian_to_adapted(&pot.hessian(x)?);
        let g_inv = linalg::spd_inverse(&g)?;
        let inverse_norm = g_inv.rows(0, k).amax();
        let frame = polarization_frame(&pot, basis, x)?;
        rows.push(DecayRow {
            t,
            inverse_norm,
            distance: grassmann_distance(&frame, &limit)?,
        });
    }
    let ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let ds: Vec<f64> = rows.iter().map(|r| r.distance).collect();
    Ok(DecayReport {
        basepoint: x.to_vec(),
        slope: linalg::loglog_slope(&ts, &ds),
        rows,
    })
}

/// Convenience: `Σ_j |v_j|²` for a complex vector.
pub fn norm_sqr(v: &DVector<C64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}
