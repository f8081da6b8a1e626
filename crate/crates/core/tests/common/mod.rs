#![allow(dead_code)]

use fincomplete_core::model::ParamLabel;
use fincomplete_core::{FiniteModel, Partition, Rational};
use num_traits::{One, Zero};
use rand::Rng;

pub fn r(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

/// Every partition of `m` points, as restricted growth strings.
pub fn all_partitions(m: usize) -> Vec<Partition> {
    fn grow(prefix: &mut Vec<usize>, m: usize, out: &mut Vec<Partition>) {
        if prefix.len() == m {
            out.push(Partition::from_labels(prefix));
            return;
        }
        let next = prefix.iter().max().map_or(0, |b| b + 1);
        for b in 0..=next {
            prefix.push(b);
            grow(prefix, m, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    grow(&mut Vec::new(), m, &mut out);
    out
}

/// A model with masses drawn from `{0, 1/12, ..., 1}` and normalized, built
/// without the library's generators.
pub fn grid_model(rng: &mut impl Rng, m: usize, k: usize) -> FiniteModel {
    let rows = (0..k)
        .map(|_| {
            let w: Vec<i64> = (0..m).map(|_| rng.random_range(0..=12)).collect();
            let total: i64 = w.iter().sum();
            if total == 0 {
                let mut row = vec![Rational::zero(); m];
                row[rng.random_range(0..m)] = Rational::one();
                row
            } else {
                w.iter().map(|&v| r(v, total)).collect()
            }
        })
        .collect();
    model_from_rows(rows)
}

pub fn model_from_rows(rows: Vec<Vec<Rational>>) -> FiniteModel {
    let m = rows[0].len();
    let points: Vec<String> = (0..m).map(|x| format!("x{x}")).collect();
    let params: Vec<ParamLabel> = (0..rows.len()).map(|t| ParamLabel::atom(format!("p{t}"))).collect();
    FiniteModel::new(points, params, rows).expect("valid rows")
}

pub fn random_partition(rng: &mut impl Rng, m: usize) -> Partition {
    let b = rng.random_range(1..=m);
    let ids: Vec<usize> = (0..m).map(|_| rng.random_range(0..b)).collect();
    Partition::from_labels(&ids)
}

/// Determinant by the Leibniz permutation expansion.
pub fn leibniz_det(a: &[Vec<Rational>]) -> Rational {
    fn perms(n: usize) -> Vec<(Vec<usize>, bool)> {
        if n == 0 {
            return vec![(Vec::new(), true)];
        }
        let mut out = Vec::new();
        for (p, even) in perms(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                let moved = p.len() - pos;
                out.push((q, even == (moved % 2 == 0)));
            }
        }
        out
    }
    let n = a.len();
    let mut det = Rational::zero();
    for (p, even) in perms(n) {
        let mut term = Rational::one();
        for (i, &j) in p.iter().enumerate() {
            term *= &a[i][j];
        }
        if even {
            det += term;
        } else {
            det -= term;
        }
    }
    det
}

fn subsets(n: usize, size: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|s| s.count_ones() as usize == size)
        .map(|s| (0..n).filter(|i| s & (1 << i) != 0).collect())
        .collect()
}

/// Rank as the largest size of a nonzero minor.
pub fn minor_rank(a: &[Vec<Rational>], cols: usize) -> usize {
    for size in (1..=a.len().min(cols)).rev() {
        for rs in subsets(a.len(), size) {
            for cs in subsets(cols, size) {
                let minor: Vec<Vec<Rational>> =
                    rs.iter().map(|&i| cs.iter().map(|&j| a[i][j].clone()).collect()).collect();
                if !leibniz_det(&minor).is_zero() {
                    return size;
                }
            }
        }
    }
    0
}

/// Completeness of `c` decided from scratch: a block function with zero mean
/// under every parameter must vanish on every charged block, i.e. the
/// parameter-by-charged-block mass matrix has full column rank.
pub fn oracle_complete(c: &Partition, m: &FiniteModel) -> bool {
    let blocks = c.blocks();
    let masses: Vec<Vec<Rational>> = (0..m.num_params())
        .map(|t| blocks.iter().map(|b| b.iter().map(|&x| m.mass(t, x).clone()).sum()).collect())
        .collect();
    let charged: Vec<usize> =
        (0..blocks.len()).filter(|&b| masses.iter().any(|row| !row[b].is_zero())).collect();
    let matrix: Vec<Vec<Rational>> =
        masses.iter().map(|row| charged.iter().map(|&b| row[b].clone()).collect()).collect();
    minor_rank(&matrix, charged.len()) == charged.len()
}
