//! Independent dense oracles over plain rationals. Nothing here goes through
//! the crate's span or recognizer code: matrices are `Vec<Vec<BigRational>>`
//! and every decision is made by textbook Gauss-Jordan elimination.
#![allow(dead_code)]

use genshift::{Exact, OperatorExpr, SparseVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

pub type Q = BigRational;
pub type Mat = Vec<Vec<Q>>;

pub fn q(n: i64, d: i64) -> Q {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn zeros(n: usize, m: usize) -> Mat {
    vec![vec![Q::zero(); m]; n]
}

pub fn identity(n: usize) -> Mat {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Q::one();
    }
    m
}

pub fn mul(a: &Mat, b: &Mat) -> Mat {
    let (n, k, m) = (a.len(), b.len(), b.first().map_or(0, Vec::len));
    let mut out = zeros(n, m);
    for i in 0..n {
        for t in 0..k {
            if a[i][t].is_zero() {
                continue;
            }
            for j in 0..m {
                out[i][j] += &a[i][t] * &b[t][j];
            }
        }
    }
    out
}

pub fn mat_vec(a: &Mat, v: &[Q]) -> Vec<Q> {
    a.iter()
        .map(|row| row.iter().zip(v).fold(Q::zero(), |acc, (x, y)| acc + x * y))
        .collect()
}

pub fn transpose(a: &Mat) -> Mat {
    let m = a.first().map_or(0, Vec::len);
    (0..m)
        .map(|j| a.iter().map(|r| r[j].clone()).collect())
        .collect()
}

/// Row rank by elimination.
pub fn rank(a: &Mat) -> usize {
    let mut m = a.clone();
    let cols = m.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let pivot = m[r][c].clone();
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let f = &m[i][c] / &pivot;
                for j in c..cols {
                    let sub = &f * &m[r][j];
                    m[i][j] -= sub;
                }
            }
        }
        r += 1;
    }
    r
}

pub fn inverse(a: &Mat) -> Option<Mat> {
    let n = a.len();
    let mut m: Mat = a
        .iter()
        .zip(identity(n))
        .map(|(row, id)| row.iter().cloned().chain(id).collect())
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&i| !m[i][c].is_zero())?;
        m.swap(c, p);
        let pivot = m[c][c].clone();
        for x in m[c].iter_mut() {
            *x = &*x / &pivot;
        }
        for i in 0..n {
            if i != c && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..2 * n {
                    let sub = &f * &m[c][j];
                    m[i][j] -= sub;
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Columns as a matrix.
pub fn from_columns(cols: &[Vec<Q>]) -> Mat {
    transpose(&cols.to_vec())
}

/// `v` lies in the column span of `cols`.
pub fn in_span(cols: &[Vec<Q>], v: &[Q]) -> bool {
    let mut with = cols.to_vec();
    with.push(v.to_vec());
    rank(&cols.to_vec()) == rank(&with)
}

pub fn real(x: &Exact) -> Q {
    assert!(x.im.is_zero(), "oracle works over real rationals");
    x.re.clone()
}

/// Coordinates `1..=dim` of a vector; panics on mass outside them.
pub fn dense(v: &SparseVector<Exact>, dim: usize) -> Vec<Q> {
    let mut out = vec![Q::zero(); dim];
    for (c, x) in v.iter() {
        assert!(
            c >= 1 && c as usize <= dim,
            "coordinate {c} outside 1..={dim}"
        );
        out[c as usize - 1] = real(x);
    }
    out
}

pub fn sparse(v: &[Q]) -> SparseVector<Exact> {
    SparseVector::from_entries(
        v.iter()
            .enumerate()
            .map(|(i, x)| (i as i64 + 1, Exact::new(x.clone(), Q::zero()))),
    )
}

/// Matrix of `op` on coordinates `1..=dim`, asserting the block is invariant.
pub fn matrix_of(op: &OperatorExpr<Exact>, dim: usize) -> Mat {
    let cols: Vec<Vec<Q>> = (1..=dim as i64)
        .map(|j| dense(&op.apply(&SparseVector::basis(j)).unwrap(), dim))
        .collect();
    from_columns(&cols)
}

/// `X^{-1} A X`.
pub fn change_of_basis(a: &Mat, x: &Mat) -> Mat {
    mul(&mul(&inverse(x).expect("basis is invertible"), a), x)
}

/// Whether `A` is a backward 1-shift in the ordered basis given by the
/// columns of `X`: the matrix `X^{-1} A X` is strictly upper triangular with
/// a nowhere-vanishing superdiagonal.
pub fn is_one_shift_in_basis(a: &Mat, x: &Mat) -> bool {
    let m = change_of_basis(a, x);
    let n = m.len();
    for i in 0..n {
        for j in 0..=i {
            if !m[i][j].is_zero() {
                return false;
            }
        }
        if i + 1 < n && m[i][i + 1].is_zero() {
            return false;
        }
    }
    true
}

/// Smallest `n <= k_max` with `A^n v = 0`.
pub fn kernel_exponent(a: &Mat, v: &[Q], k_max: usize) -> Option<usize> {
    let mut w = v.to_vec();
    for n in 0..=k_max {
        if w.iter().all(Zero::is_zero) {
            return Some(n);
        }
        w = mat_vec(a, &w);
    }
    None
}

pub fn power_vec(a: &Mat, v: &[Q], n: usize) -> Vec<Q> {
    (0..n).fold(v.to_vec(), |w, _| mat_vec(a, &w))
}

/// A random strictly upper triangular matrix with entries in `[-3, 3] / [1, 3]`;
/// each superdiagonal entry vanishes with probability `zero_diag`.
pub fn random_strict_upper<R: Rng>(n: usize, zero_diag: f64, rng: &mut R) -> Mat {
    let mut m = zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = if j == i + 1 {
                if rng.gen_bool(zero_diag) {
                    0
                } else {
                    *[-3, -2, -1, 1, 2, 3].get(rng.gen_range(0..6)).unwrap()
                }
            } else {
                rng.gen_range(-3..=3)
            };
            m[i][j] = q(v, rng.gen_range(1..=3));
        }
    }
    m
}

/// A random unit upper triangular basis with small integer entries.
pub fn random_unit_upper<R: Rng>(n: usize, rng: &mut R) -> Mat {
    let mut m = identity(n);
    for i in 0..n {
        for j in i + 1..n {
            m[i][j] = q(rng.gen_range(-1..=1), 1);
        }
    }
    m
}

/// Geometric mean of `|w_j ... w_{j+n-1}|` maximised over `j in js`, in
/// binary64 logarithms.
pub fn geometric_mean(
    weights: impl Fn(i64) -> f64,
    window: usize,
    js: std::ops::RangeInclusive<i64>,
) -> f64 {
    js.map(|j| {
        (0..window as i64)
            .map(|t| weights(j + t).abs().ln())
            .sum::<f64>()
            / window as f64
    })
    .fold(f64::NEG_INFINITY, f64::max)
    .exp()
}
