//! Exact integer and rational linear algebra for the combinatorial side:
//! vertex systems, determinants, integer kernels and column echelon forms.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q_int(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

pub fn q_to_f64(v: &Q) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

pub fn dot_int_q(a: &[i64], b: &[Q]) -> Q {
    a.iter()
        .zip(b)
        .fold(Q::zero(), |acc, (x, y)| acc + q_int(*x) * y)
}

pub fn dot_q(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).fold(Q::zero(), |acc, (x, y)| acc + x * y)
}

/// Determinant by fraction-exact Gaussian elimination.
pub fn det(mat: &[Vec<Q>]) -> Q {
    let n = mat.len();
    let mut a: Vec<Vec<Q>> = mat.to_vec();
    let mut sign = Q::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return Q::zero();
        };
        if pivot != col {
            a.swap(pivot, col);
            sign = -sign;
        }
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = &a[r][col] / &a[col][col];
            for c in col..n {
                let delta = &factor * &a[col][c];
                a[r][c] -= delta;
            }
        }
    }
    (0..n).fold(sign, |acc, i| acc * &a[i][i])
}

/// Solves the square system `mat · x = rhs`; `None` if singular.
pub fn solve(mat: &[Vec<Q>], rhs: &[Q]) -> Option<Vec<Q>> {
    let n = mat.len();
    let mut a: Vec<Vec<Q>> = mat
        .iter()
        .zip(rhs)
        .map(|(row, b)| {
            let mut r = row.clone();
            r.push(b.clone());
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(pivot, col);
        let p = a[col][col].clone();
        for c in col..=n {
            a[col][c] = &a[col][c] / &p;
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            for c in col..=n {
                let delta = &factor * &a[col][c];
                a[r][c] -= delta;
            }
        }
    }
    Some(a.into_iter().map(|mut row| row.pop().unwrap()).collect())
}

/// Inverse of a square rational matrix; `None` if singular.
pub fn inverse(mat: &[Vec<Q>]) -> Option<Vec<Vec<Q>>> {
    let n = mat.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let e: Vec<Q> = (0..n)
            .map(|i| if i == j { Q::one() } else { Q::zero() })
            .collect();
        cols.push(solve(mat, &e)?);
    }
    Some(
        (0..n)
            .map(|i| (0..n).map(|j| cols[j][i].clone()).collect())
            .collect(),
    )
}

/// Column echelon form `L = M·V` of an integer matrix, with `V` unimodular.
///
/// Pivots sit in columns `0..rank` and the columns `rank..n` of `L` are zero,
/// so the trailing columns of `V` form a ℤ-basis of the integer kernel.
#[derive(Debug, Clone)]
pub struct ColumnEchelon {
    pub reduced: Vec<Vec<BigInt>>,
    pub transform: Vec<Vec<BigInt>>,
    pub rank: usize,
    /// Row index holding the pivot of each echelon column.
    pub pivot_rows: Vec<usize>,
}

fn ext_gcd(a: &BigInt, b: &BigInt) -> (BigInt, BigInt, BigInt) {
    let e = a.extended_gcd(b);
    (e.gcd, e.x, e.y)
}

pub fn column_echelon(mat: &[Vec<i64>], ncols: usize) -> ColumnEchelon {
    let rows = mat.len();
    let mut m: Vec<Vec<BigInt>> = mat
        .iter()
        .map(|r| r.iter().map(|&v| BigInt::from(v)).collect())
        .collect();
    let mut v: Vec<Vec<BigInt>> = (0..ncols)
        .map(|i| {
            (0..ncols)
                .map(|j| {
                    if i == j {
                        BigInt::one()
                    } else {
                        BigInt::zero()
                    }
                })
                .collect()
        })
        .collect();
    let mut rank = 0;
    let mut pivot_rows = Vec::new();

    let swap_cols = |x: &mut Vec<Vec<BigInt>>, a: usize, b: usize| {
        for row in x.iter_mut() {
            row.swap(a, b);
        }
    };

    for i in 0..rows {
        if rank == ncols {
            break;
        }
        let Some(nz) = (rank..ncols).find(|&c| !m[i][c].is_zero()) else {
            continue;
        };
        if nz != rank {
            swap_cols(&mut m, nz, rank);
            swap_cols(&mut v, nz, rank);
        }
        for j in rank + 1..ncols {
            if m[i][j].is_zero() {
                continue;
            }
            let a = m[i][rank].clone();
            let b = m[i][j].clone();
            let (g, s, t) = ext_gcd(&a, &b);
            let ag = &a / &g;
            let bg = &b / &g;
            for x in [&mut m, &mut v] {
                for row in x.iter_mut() {
                    let cr = row[rank].clone();
                    let cj = row[j].clone();
                    row[rank] = &s * &cr + &t * &cj;
                    row[j] = -&bg * &cr + &ag * &cj;
                }
            }
        }
        if m[i][rank].is_negative() {
            for x in [&mut m, &mut v] {
                for row in x.iter_mut() {
                    row[rank] = -row[rank].clone();
                }
            }
        }
        pivot_rows.push(i);
        rank += 1;
    }

    ColumnEchelon {
        reduced: m,
        transform: v,
        rank,
        pivot_rows,
    }
}

impl ColumnEchelon {
    /// Integer kernel basis, one basis vector per entry.
    pub fn kernel_basis(&self) -> Vec<Vec<BigInt>> {
        let n = self.transform.len();
        (self.rank..n)
            .map(|c| (0..n).map(|r| self.transform[r][c].clone()).collect())
            .collect()
    }

    /// Rational particular solution of `M x = rhs`, or `None` if inconsistent.
    pub fn particular_solution(&self, rhs: &[Q]) -> Option<Vec<Q>> {
        let n = self.transform.len();
        let mut z = vec![Q::zero(); n];
        for (c, &row) in self.pivot_rows.iter().enumerate() {
            let mut acc = rhs[row].clone();
            for (cc, zc) in z.iter().enumerate().take(c) {
                acc -= Q::from_integer(self.reduced[row][cc].clone()) * zc;
            }
            z[c] = acc / Q::from_integer(self.reduced[row][c].clone());
        }
        for (i, row) in self.reduced.iter().enumerate() {
            let lhs = row.iter().zip(&z).fold(Q::zero(), |acc, (a, b)| {
                acc + Q::from_integer(a.clone()) * b
            });
            if lhs != rhs[i] {
                return None;
            }
        }
        Some(
            (0..n)
                .map(|r| {
                    (0..n).fold(Q::zero(), |acc, c| {
                        acc + Q::from_integer(self.transform[r][c].clone()) * &z[c]
                    })
                })
                .collect(),
        )
    }
}

pub fn bigint_to_i64(v: &BigInt) -> Option<i64> {
    v.to_i64()
}

pub fn gcd_all(v: &[i64]) -> i64 {
    v.iter().fold(0i64, |acc, &x| acc.gcd(&x))
}
