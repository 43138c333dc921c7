//! Subtorus projections `i_k*`, adapted lattice bases and the strictly convex
//! functions `φ_k` that drive the degeneration.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_traits::{One, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::polytope::DelzantPolytope;
use crate::rational::{self, column_echelon, q_int, Q};

/// Integer `k × n` matrix of rank `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<i64>>", into = "Vec<Vec<i64>>")]
pub struct SubtorusProjection {
    rows: Vec<Vec<i64>>,
    ambient: usize,
}

impl TryFrom<Vec<Vec<i64>>> for SubtorusProjection {
    type Error = Error;

    fn try_from(rows: Vec<Vec<i64>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<SubtorusProjection> for Vec<Vec<i64>> {
    fn from(p: SubtorusProjection) -> Self {
        p.rows
    }
}

impl SubtorusProjection {
    pub fn new(rows: Vec<Vec<i64>>) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(Error::InvalidArgument(
                "projection needs at least one row".into(),
            ));
        }
        let ambient = rows[0].len();
        if let Some(bad) = rows.iter().find(|r| r.len() != ambient) {
            return Err(Error::Dimension {
                expected: ambient,
                got: bad.len(),
            });
        }
        if k > ambient {
            return Err(Error::RankDeficient {
                rank: ambient,
                rows: k,
            });
        }
        let rank = column_echelon(&rows, ambient).rank;
        if rank < k {
            return Err(Error::RankDeficient { rank, rows: k });
        }
        Ok(Self { rows, ambient })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: (0..n)
                .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
                .collect(),
            ambient: n,
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn rows(&self) -> &[Vec<i64>] {
        &self.rows
    }

    pub fn check_ambient(&self, n: usize) -> Result<()> {
        if self.ambient != n {
            return Err(Error::Dimension {
                expected: n,
                got: self.ambient,
            });
        }
        Ok(())
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rank(), self.ambient, |i, j| self.rows[i][j] as f64)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().zip(x).map(|(a, b)| *a as f64 * b).sum())
            .collect()
    }

    pub fn apply_int(&self, m: &[i64]) -> Vec<i64> {
        self.rows
            .iter()
            .map(|r| r.iter().zip(m).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn apply_rational(&self, x: &[Q]) -> Vec<Q> {
        self.rows
            .iter()
            .map(|r| rational::dot_int_q(r, x))
            .collect()
    }

    /// Vertices of the image polytope `i_k*(P)` are among the images of the
    /// vertices of `P`; this returns the bounding box of those images.
    pub fn image_box(&self, p: &DelzantPolytope) -> (Vec<f64>, Vec<f64>) {
        let images: Vec<Vec<f64>> = p
            .vertices()
            .iter()
            .map(|v| self.apply(&v.point_f64()))
            .collect();
        let k = self.rank();
        let lo = (0..k)
            .map(|i| images.iter().map(|y| y[i]).fold(f64::INFINITY, f64::min))
            .collect();
        let hi = (0..k)
            .map(|i| {
                images
                    .iter()
                    .map(|y| y[i])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        (lo, hi)
    }
}

/// Unimodular `U` whose first `k` rows are the projection matrix, so that in
/// the coordinates `x̃ = U x` the projection keeps the first `k` entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdaptedBasis {
    change_of_basis: Vec<Vec<i64>>,
    inverse: Vec<Vec<i64>>,
    split: usize,
}

impl AdaptedBasis {
    pub fn matrix(&self) -> &[Vec<i64>] {
        &self.change_of_basis
    }

    pub fn inverse(&self) -> &[Vec<i64>] {
        &self.inverse
    }

    pub fn split(&self) -> usize {
        self.split
    }

    pub fn dim(&self) -> usize {
        self.change_of_basis.len()
    }

    /// Columns `k..n` of `U⁻¹`: a ℤ-basis of `ker(i_k*) ∩ ℤⁿ`.
    pub fn kernel_basis(&self) -> Vec<Vec<i64>> {
        let n = self.dim();
        (self.split..n)
            .map(|c| (0..n).map(|r| self.inverse[r][c]).collect())
            .collect()
    }

    pub fn to_adapted(&self, x: &[f64]) -> Vec<f64> {
        mat_vec(&self.change_of_basis, x)
    }

    pub fn from_adapted(&self, xt: &[f64]) -> Vec<f64> {
        mat_vec(&self.inverse, xt)
    }

    pub fn to_adapted_int(&self, m: &[i64]) -> Vec<i64> {
        self.change_of_basis
            .iter()
            .map(|r| r.iter().zip(m).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn from_adapted_int(&self, mt: &[i64]) -> Vec<i64> {
        self.inverse
            .iter()
            .map(|r| r.iter().zip(mt).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Hessian with respect to `x̃`: `Vᵀ H V` with `V = U⁻¹`.
    pub fn hessian_to_adapted(&self, h: &DMatrix<f64>) -> DMatrix<f64> {
        let v = self.inverse_matrix();
        v.transpose() * h * v
    }

    /// Gradient with respect to `x̃`: `Vᵀ ∇g`.
    pub fn gradient_to_adapted(&self, g: &DVector<f64>) -> DVector<f64> {
        self.inverse_matrix().transpose() * g
    }

    fn inverse_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.inverse[i][j] as f64)
    }
}

fn mat_vec(m: &[Vec<i64>], x: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|r| r.iter().zip(x).map(|(a, b)| *a as f64 * b).sum())
        .collect()
}

/// Completes the projection matrix to a unimodular change of basis.
///
/// Rejects projections whose image lattice has index greater than one.
pub fn adapted_basis(proj: &SubtorusProjection) -> Result<AdaptedBasis> {
    let n = proj.ambient_dim();
    let k = proj.rank();
    let ech = column_echelon(proj.rows(), n);
    if ech.rank < k {
        return Err(Error::RankDeficient {
            rank: ech.rank,
            rows: k,
        });
    }
    // A·V = [H | 0] with H lower triangular; index of the image lattice is |det H|
    let index = (0..k).fold(num_bigint::BigInt::one(), |acc, i| acc * &ech.reduced[i][i]);
    let index = index.abs();
    if !index.is_one() {
        return Err(Error::NonPrimitiveImage {
            index: index.to_u64().unwrap_or(u64::MAX),
        });
    }
    let v: Vec<Vec<Q>> = ech
        .transform
        .iter()
        .map(|r| r.iter().map(|x| Q::from_integer(x.clone())).collect())
        .collect();
    let v_inv = rational::inverse(&v).expect("unimodular transform is invertible");
    // U = diag(H, I) · V⁻¹
    let mut block = vec![vec![Q::from_integer(0.into()); n]; n];
    for i in 0..n {
        for j in 0..n {
            block[i][j] = if i < k && j < k {
                Q::from_integer(ech.reduced[i][j].clone())
            } else if i == j {
                q_int(1)
            } else {
                q_int(0)
            };
        }
    }
    let u: Vec<Vec<Q>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).fold(q_int(0), |acc, l| acc + &block[i][l] * &v_inv[l][j]))
                .collect()
        })
        .collect();
    let u_inv = rational::inverse(&u).expect("unimodular");
    let to_int = |m: Vec<Vec<Q>>| -> Vec<Vec<i64>> {
        m.into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|x| {
                        debug_assert!(x.is_integer());
                        x.to_integer().to_i64().expect("entry fits i64")
                    })
                    .collect()
            })
            .collect()
    };
    Ok(AdaptedBasis {
        change_of_basis: to_int(u),
        inverse: to_int(u_inv),
        split: k,
    })
}

/// A smooth function with gradient and Hessian, assumed convex.
///
/// Implementations must be stateless: evaluators are shared across threads.
pub trait ConvexFunction: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn value(&self, y: &[f64]) -> f64;
    fn gradient(&self, y: &[f64]) -> DVector<f64>;
    fn hessian(&self, y: &[f64]) -> DMatrix<f64>;
}

/// `φ(y) = ½ yᵀQy + bᵀy`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    q: DMatrix<f64>,
    b: DVector<f64>,
}

impl Quadratic {
    /// Checks shape and symmetry only; see [`Quadratic::checked`].
    pub fn new(q: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if !q.is_square() || q.nrows() != b.len() {
            return Err(Error::Dimension {
                expected: q.nrows(),
                got: b.len(),
            });
        }
        if (&q - q.transpose()).amax() > 1e-12 * q.amax().max(1.0) {
            return Err(Error::InvalidArgument("Q is not symmetric".into()));
        }
        Ok(Self { q, b })
    }

    /// Like [`Quadratic::new`] but also requires `Q` positive definite.
    pub fn checked(q: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let f = Self::new(q, b)?;
        if f.q.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite(" (quadratic Q)".into()));
        }
        Ok(f)
    }

    /// `½|y|²` on `k` variables.
    pub fn half_norm_squared(k: usize) -> Self {
        Self {
            q: DMatrix::identity(k, k),
            b: DVector::zeros(k),
        }
    }
}

impl ConvexFunction for Quadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, y: &[f64]) -> f64 {
        let y = DVector::from_column_slice(y);
        0.5 * y.dot(&(&self.q * &y)) + self.b.dot(&y)
    }

    fn gradient(&self, y: &[f64]) -> DVector<f64> {
        &self.q * DVector::from_column_slice(y) + &self.b
    }

    fn hessian(&self, _y: &[f64]) -> DMatrix<f64> {
        self.q.clone()
    }
}

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> DVector<f64> + Send + Sync;
type HessFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;

/// Convex function given by closures.
pub struct Custom {
    dim: usize,
    value: Box<ValueFn>,
    gradient: Box<GradFn>,
    hessian: Box<HessFn>,
}

impl Custom {
    pub fn new(
        dim: usize,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static,
        hessian: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            value: Box::new(value),
            gradient: Box::new(gradient),
            hessian: Box::new(hessian),
        }
    }
}

impl fmt::Debug for Custom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Custom")
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

impl ConvexFunction for Custom {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, y: &[f64]) -> f64 {
        (self.value)(y)
    }

    fn gradient(&self, y: &[f64]) -> DVector<f64> {
        (self.gradient)(y)
    }

    fn hessian(&self, y: &[f64]) -> DMatrix<f64> {
        (self.hessian)(y)
    }
}

/// `ψ(x) = φ(Ax)` on `n` variables.
#[derive(Debug, Clone)]
pub struct Pullback {
    phi: Arc<dyn ConvexFunction>,
    matrix: DMatrix<f64>,
}

impl Pullback {
    pub fn phi(&self) -> &Arc<dyn ConvexFunction> {
        &self.phi
    }

    fn image(&self, x: &[f64]) -> Vec<f64> {
        (&self.matrix * DVector::from_column_slice(x))
            .as_slice()
            .to_vec()
    }
}

impl ConvexFunction for Pullback {
    fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.phi.value(&self.image(x))
    }

    fn gradient(&self, x: &[f64]) -> DVector<f64> {
        self.matrix.transpose() * self.phi.gradient(&self.image(x))
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        self.matrix.transpose() * self.phi.hessian(&self.image(x)) * &self.matrix
    }
}

pub fn pullback(phi: Arc<dyn ConvexFunction>, proj: &SubtorusProjection) -> Result<Pullback> {
    if phi.dim() != proj.rank() {
        return Err(Error::Dimension {
            expected: proj.rank(),
            got: phi.dim(),
        });
    }
    Ok(Pullback {
        phi,
        matrix: proj.matrix(),
    })
}

/// Outcome of [`strict_convexity_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub strictly_convex: bool,
    pub min_eigenvalue: f64,
    pub failing_point: Option<Vec<f64>>,
    pub samples: usize,
}

pub const CONVEXITY_TOLERANCE: f64 = 1e-10;

/// Samples the Hessian of `φ` on a grid over a neighbourhood of the image
/// `i_k*(P)`, `samples` points per axis, and requires its smallest
/// eigenvalue to exceed [`CONVEXITY_TOLERANCE`].
pub fn strict_convexity_check(
    phi: &dyn ConvexFunction,
    polytope: &DelzantPolytope,
    proj: &SubtorusProjection,
    samples: usize,
) -> Result<ConvexityReport> {
    proj.check_ambient(polytope.dim())?;
    if phi.dim() != proj.rank() {
        return Err(Error::Dimension {
            expected: proj.rank(),
            got: phi.dim(),
        });
    }
    let (lo, hi) = proj.image_box(polytope);
    convexity_on_box(phi, &lo, &hi, samples)
}

/// Grid version of the convexity check on an explicit box, widened by 5%.
pub fn convexity_on_box(
    phi: &dyn ConvexFunction,
    lo: &[f64],
    hi: &[f64],
    samples: usize,
) -> Result<ConvexityReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument(
            "need at least one sample per axis".into(),
        ));
    }
    let k = lo.len();
    let pad: Vec<f64> = lo
        .iter()
        .zip(hi)
        .map(|(a, b)| 0.05 * (b - a).max(1e-3))
        .collect();
    let axis = |i: usize, s: usize| -> f64 {
        let a = lo[i] - pad[i];
        let b = hi[i] + pad[i];
        if samples == 1 {
            0.5 * (a + b)
        } else {
            a + (b - a) * s as f64 / (samples - 1) as f64
        }
    };
    let total = samples.pow(k as u32);
    let mut min_eig = f64::INFINITY;
    for idx in 0..total {
        let mut rem = idx;
        let y: Vec<f64> = (0..k)
            .map(|i| {
                let s = rem % samples;
                rem /= samples;
                axis(i, s)
            })
            .collect();
        let e = linalg::min_eigenvalue(&phi.hessian(&y));
        min_eig = min_eig.min(e);
        if !(e > CONVEXITY_TOLERANCE) {
            return Ok(ConvexityReport {
                strictly_convex: false,
                min_eigenvalue: e,
                failing_point: Some(y),
                samples: idx + 1,
            });
        }
    }
    Ok(ConvexityReport {
        strictly_convex: true,
        min_eigenvalue: min_eig,
        failing_point: None,
        samples: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn proj(rows: &[&[i64]]) -> SubtorusProjection {
        SubtorusProjection::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn rank_checks() {
        assert!(matches!(
            SubtorusProjection::new(vec![vec![1, 1], vec![2, 2]]),
            Err(Error::RankDeficient { rank: 1, rows: 2 })
        ));
        assert!(SubtorusProjection::new(vec![vec![1, 0], vec![0, 1], vec![1, 1]]).is_err());
    }

    #[test]
    fn adapted_basis_examples() {
        let b = adapted_basis(&proj(&[&[1, 0]])).unwrap();
        assert_eq!(b.matrix(), &[vec![1, 0], vec![0, 1]]);
        let b = adapted_basis(&proj(&[&[0, 1]])).unwrap();
        assert_eq!(b.matrix(), &[vec![0, 1], vec![1, 0]]);
        let b = adapted_basis(&proj(&[&[1, 1]])).unwrap();
        assert_eq!(b.matrix()[0], vec![1, 1]);
        assert_eq!(b.kernel_basis().len(), 1);
        let kb = &b.kernel_basis()[0];
        assert_eq!(kb[0] + kb[1], 0);
    }

    #[test]
    fn adapted_basis_rejects_index_two() {
        assert!(matches!(
            adapted_basis(&proj(&[&[2, 0]])),
            Err(Error::NonPrimitiveImage { index: 2 })
        ));
        assert!(matches!(
            adapted_basis(&proj(&[&[1, 1], &[1, -1]])),
            Err(Error::NonPrimitiveImage { index: 2 })
        ));
    }

    #[test]
    fn pullback_examples() {
        let phi: Arc<dyn ConvexFunction> = Arc::new(Quadratic::half_norm_squared(1));
        let psi = pullback(phi, &proj(&[&[1, 0]])).unwrap();
        assert_abs_diff_eq!(psi.value(&[2.0, 5.0]), 2.0);
        assert_eq!(psi.gradient(&[2.0, 5.0]).as_slice(), &[2.0, 0.0]);
        assert_eq!(
            psi.hessian(&[2.0, 5.0]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])
        );
        assert_eq!(psi.value(&[0.0, 7.0]), 0.0);
        assert_eq!(psi.gradient(&[0.0, 7.0]).as_slice(), &[0.0, 0.0]);

        let phi2: Arc<dyn ConvexFunction> = Arc::new(Quadratic::half_norm_squared(2));
        let psi = pullback(phi2.clone(), &SubtorusProjection::identity(2)).unwrap();
        assert_abs_diff_eq!(psi.value(&[1.0, 1.0]), 1.0);
        assert_eq!(psi.gradient(&[1.0, 1.0]).as_slice(), &[1.0, 1.0]);
        assert_eq!(psi.hessian(&[1.0, 1.0]), DMatrix::identity(2, 2));

        assert!(pullback(phi2, &proj(&[&[1, 0]])).is_err());
    }

    #[test]
    fn convexity_examples() {
        let interval2 = fixtures::square(2);
        let first = proj(&[&[1, 0]]);
        let q = Quadratic::half_norm_squared(1);
        assert!(
            strict_convexity_check(&q, &interval2, &first, 9)
                .unwrap()
                .strictly_convex
        );

        let zero = Quadratic::new(DMatrix::zeros(1, 1), DVector::zeros(1)).unwrap();
        let r = strict_convexity_check(&zero, &interval2, &first, 9).unwrap();
        assert!(!r.strictly_convex);
        assert_eq!(r.samples, 1);
        assert!(Quadratic::checked(DMatrix::zeros(1, 1), DVector::zeros(1)).is_err());

        let quartic = Custom::new(
            1,
            |y| y[0].powi(4),
            |y| DVector::from_element(1, 4.0 * y[0].powi(3)),
            |y| DMatrix::from_element(1, 1, 12.0 * y[0] * y[0]),
        );
        // symmetric grid with an odd count hits y = 0
        let r = convexity_on_box(&quartic, &[-1.0], &[1.0], 11).unwrap();
        assert!(!r.strictly_convex);
        assert_abs_diff_eq!(r.failing_point.unwrap()[0], 0.0, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn adapted_basis_roundtrip(a in -5i64..6, b in -5i64..6, x in -20i64..20, y in -20i64..20) {
            prop_assume!(rational::gcd_all(&[a, b]) == 1);
            let basis = adapted_basis(&proj(&[&[a, b]])).unwrap();
            let m = vec![x, y];
            prop_assert_eq!(basis.from_adapted_int(&basis.to_adapted_int(&m)), m.clone());
            // first adapted coordinate is the projection
            prop_assert_eq!(basis.to_adapted_int(&m)[0], a * x + b * y);
            // kernel columns are killed by the projection
            for kv in basis.kernel_basis() {
                prop_assert_eq!(a * kv[0] + b * kv[1], 0);
            }
        }

        #[test]
        fn pullback_hessian_is_psd(x0 in -3.0f64..3.0, x1 in -3.0f64..3.0, q11 in 0.1f64..4.0, q12 in -0.5f64..0.5) {
            let q = DMatrix::from_row_slice(2, 2, &[q11, q12 * q11.sqrt(), q12 * q11.sqrt(), 1.0]);
            prop_assume!(q.clone().cholesky().is_some());
            let phi: Arc<dyn ConvexFunction> = Arc::new(Quadratic::checked(q, DVector::zeros(2)).unwrap());
            let psi = pullback(phi, &proj(&[&[1, 0, 1], &[0, 1, -1]])).unwrap();
            let h = psi.hessian(&[x0, x1, 0.5]);
            prop_assert!(linalg::min_eigenvalue(&h) > -1e-12);
        }
    }
}
