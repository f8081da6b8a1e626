//! Exact linear algebra over the rationals.
//!
//! Rank is computed by fraction-free (Bareiss) elimination on integer rows
//! obtained by clearing denominators row by row. The integer pass first runs
//! in `i128` with checked arithmetic and falls back to `BigInt` on overflow.
//! Kernels and particular solutions come from a reduced row echelon form.

#![allow(clippy::needless_range_loop)]

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::rational::Rational;

/// Scales a rational row by the lcm of its denominators.
fn integer_row(row: &[Rational]) -> Vec<BigInt> {
    let lcm = row
        .iter()
        .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
    row.iter()
        .map(|r| r.numer() * (&lcm / r.denom()))
        .collect()
}

fn bareiss_rank_i128(mut m: Vec<Vec<i128>>, cols: usize) -> Option<usize> {
    let rows = m.len();
    let mut rank = 0;
    let mut prev: i128 = 1;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| m[r][col] != 0) else {
            continue;
        };
        m.swap(rank, p);
        let pivot = m[rank][col];
        for r in rank + 1..rows {
            let factor = m[r][col];
            for c in col + 1..cols {
                let a = m[r][c].checked_mul(pivot)?;
                let b = m[rank][c].checked_mul(factor)?;
                m[r][c] = a.checked_sub(b)? / prev;
            }
            m[r][col] = 0;
        }
        prev = pivot;
        rank += 1;
    }
    Some(rank)
}

fn bareiss_rank_big(mut m: Vec<Vec<BigInt>>, cols: usize) -> usize {
    let rows = m.len();
    let mut rank = 0;
    let mut prev = BigInt::one();
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        let pivot = m[rank][col].clone();
        for r in rank + 1..rows {
            let factor = m[r][col].clone();
            for c in col + 1..cols {
                let v = (&m[r][c] * &pivot - &m[rank][c] * &factor) / &prev;
                m[r][c] = v;
            }
            m[r][col] = BigInt::zero();
        }
        prev = pivot;
        rank += 1;
    }
    rank
}

/// Rank of a rational matrix given as rows of equal length `cols`.
pub fn rank(rows: &[Vec<Rational>], cols: usize) -> usize {
    if rows.is_empty() || cols == 0 {
        return 0;
    }
    let ints: Vec<Vec<BigInt>> = rows.iter().map(|r| integer_row(r)).collect();
    let small: Option<Vec<Vec<i128>>> = ints
        .iter()
        .map(|r| r.iter().map(ToPrimitive::to_i128).collect())
        .collect();
    if let Some(small) = small {
        if let Some(r) = bareiss_rank_i128(small, cols) {
            return r;
        }
    }
    bareiss_rank_big(ints, cols)
}

/// Reduced row echelon form with the list of pivot columns.
#[derive(Debug, Clone)]
pub struct Rref {
    pub rows: Vec<Vec<Rational>>,
    pub pivots: Vec<usize>,
    pub cols: usize,
}

pub fn rref(rows: &[Vec<Rational>], cols: usize) -> Rref {
    let mut m: Vec<Vec<Rational>> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..cols {
        if r == m.len() {
            break;
        }
        let Some(p) = (r..m.len()).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][col].recip();
        for v in m[r].iter_mut() {
            *v = &*v * &inv;
        }
        for i in 0..m.len() {
            if i != r && !m[i][col].is_zero() {
                let factor = m[i][col].clone();
                for c in col..cols {
                    let delta = &m[r][c] * &factor;
                    m[i][c] -= delta;
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    m.truncate(r);
    Rref { rows: m, pivots, cols }
}

impl Rref {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Kernel basis: one vector per free column, with that column set to 1.
    pub fn kernel_basis(&self) -> Vec<Vec<Rational>> {
        let mut is_pivot = vec![false; self.cols];
        for &p in &self.pivots {
            is_pivot[p] = true;
        }
        (0..self.cols)
            .filter(|&c| !is_pivot[c])
            .map(|free| {
                let mut v = vec![Rational::zero(); self.cols];
                v[free] = Rational::one();
                for (row, &p) in self.rows.iter().zip(&self.pivots) {
                    v[p] = -row[free].clone();
                }
                v
            })
            .collect()
    }
}

pub fn kernel_basis(rows: &[Vec<Rational>], cols: usize) -> Vec<Vec<Rational>> {
    rref(rows, cols).kernel_basis()
}

/// Solves `rows · x = rhs`, returning the solution with all free variables
/// set to zero, or `None` when the system is inconsistent.
pub fn solve(rows: &[Vec<Rational>], cols: usize, rhs: &[Rational]) -> Option<Vec<Rational>> {
    assert_eq!(rows.len(), rhs.len(), "right-hand side length mismatch");
    let augmented: Vec<Vec<Rational>> = rows
        .iter()
        .zip(rhs)
        .map(|(r, b)| {
            let mut row = r.clone();
            row.push(b.clone());
            row
        })
        .collect();
    let red = rref(&augmented, cols + 1);
    if red.pivots.last() == Some(&cols) {
        return None;
    }
    let mut x = vec![Rational::zero(); cols];
    for (row, &p) in red.rows.iter().zip(&red.pivots) {
        x[p] = row[cols].clone();
    }
    Some(x)
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn is_zero_vec(v: &[Rational]) -> bool {
    v.iter().all(Zero::is_zero)
}

/// Applies `rows` to `x`.
pub fn mat_vec(rows: &[Vec<Rational>], x: &[Rational]) -> Vec<Rational> {
    rows.iter().map(|r| dot(r, x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn m(rows: &[&[i64]]) -> Vec<Vec<Rational>> {
        rows.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect()
    }

    #[test]
    fn rank_of_small_matrices() {
        assert_eq!(rank(&m(&[&[1, 2], &[2, 4]]), 2), 1);
        assert_eq!(rank(&m(&[&[1, 2], &[3, 4]]), 2), 2);
        assert_eq!(rank(&m(&[&[0, 0, 0]]), 3), 0);
        assert_eq!(rank(&[], 3), 0);
    }

    #[test]
    fn rank_falls_back_to_bigint() {
        let big = Rational::from_integer(BigInt::from(1u64 << 62) * BigInt::from(1u64 << 62));
        let rows = vec![
            vec![big.clone(), int(1), int(0)],
            vec![int(1), big.clone(), int(1)],
            vec![int(0), int(1), big],
        ];
        assert_eq!(rank(&rows, 3), 3);
    }

    #[test]
    fn kernel_of_bernoulli_grid_is_x1_minus_x2() {
        // Rows (1-t)^2, t(1-t), t(1-t), t^2 for a few t, and their reflections.
        let mut rows = Vec::new();
        for t in [ratio(1, 5), ratio(1, 4), ratio(1, 3)] {
            let s = int(1) - &t;
            rows.push(vec![&s * &s, &t * &s, &t * &s, &t * &t]);
            rows.push(vec![&t * &t, &t * &s, &t * &s, &s * &s]);
        }
        let basis = kernel_basis(&rows, 4);
        assert_eq!(basis, vec![vec![int(0), int(-1), int(1), int(0)]]);
        assert_eq!(rank(&rows, 4), 3);
    }

    #[test]
    fn solve_consistent_and_inconsistent() {
        let rows = m(&[&[1, 1], &[1, 1]]);
        assert_eq!(solve(&rows, 2, &[int(2), int(2)]), Some(vec![int(2), int(0)]));
        assert_eq!(solve(&rows, 2, &[int(2), int(3)]), None);
    }
}
