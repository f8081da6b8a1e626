//! Zero-unbiased estimators, the optimal σ-algebra and optimal unbiased
//! estimation.
//!
//! `O` is the family of events `A` with `P_theta(1_A h) = 0` for every
//! zero-unbiased `h` and every parameter. An estimator is optimal unbiased
//! (simultaneously for every convex loss) iff it is `O`-measurable, so
//! optimality is decided as `O`-measurability throughout.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::checks;
use crate::error::{Error, Result};
use crate::function::RationalFunction;
use crate::linalg;
use crate::model::{Exhaustion, FiniteModel, Limits, Submodel};
use crate::partition::Partition;
use crate::rational::Rational;
use crate::report::{CheckReport, Witness};

fn expectation_rows(m: &FiniteModel, sub: &Submodel) -> Vec<Vec<Rational>> {
    sub.indices().iter().map(|&t| m.row(t).to_vec()).collect()
}

/// A basis of `E_0 = {h : P_theta h = 0 for all theta in sub}`.
pub fn zero_unbiased_basis(m: &FiniteModel, sub: &Submodel) -> Vec<RationalFunction> {
    linalg::kernel_basis(&expectation_rows(m, sub), m.num_points())
}

/// All unbiased estimators of an estimand: `particular + span(zero_basis)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnbiasedClass {
    /// `None` when the estimand is not unbiasedly estimable.
    pub particular: Option<RationalFunction>,
    pub zero_basis: Vec<RationalFunction>,
}

fn estimand_on(sub: &Submodel, kappa: &[Rational], m: &FiniteModel) -> Result<Vec<Rational>> {
    if kappa.len() != m.num_params() {
        return Err(Error::InvalidInput(format!(
            "estimand has {} values, model has {} parameters",
            kappa.len(),
            m.num_params()
        )));
    }
    Ok(sub.indices().iter().map(|&t| kappa[t].clone()).collect())
}

/// Solves `P_theta g = kappa(theta)` over `sub`. `kappa` is indexed by all
/// parameters of the model.
pub fn unbiased_class(m: &FiniteModel, sub: &Submodel, kappa: &[Rational]) -> Result<UnbiasedClass> {
    let rhs = estimand_on(sub, kappa, m)?;
    let rows = expectation_rows(m, sub);
    Ok(UnbiasedClass {
        particular: linalg::solve(&rows, m.num_points(), &rhs),
        zero_basis: linalg::kernel_basis(&rows, m.num_points()),
    })
}

fn integer_rows(rows: &[Vec<Rational>]) -> Vec<Vec<BigInt>> {
    rows.iter()
        .map(|row| {
            let lcm = row.iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
            row.iter().map(|r| r.numer() * (&lcm / r.denom())).collect()
        })
        .collect()
}

/// Bitmasks (over `n` columns) of all column sets whose sum vanishes in every row.
fn zero_sum_subsets(rows: &[Vec<BigInt>], n: usize) -> Vec<u32> {
    let small: Option<Vec<Vec<i128>>> = rows
        .iter()
        .map(|r| r.iter().map(|v| v.to_i64().map(i128::from)).collect())
        .collect();
    let count = 1u32 << n;
    let mut members = vec![0u32];
    let mut mask = 0u32;
    match small {
        Some(rows) => {
            let mut sums = vec![0i128; rows.len()];
            for i in 1..count {
                let bit = i.trailing_zeros() as usize;
                mask ^= 1 << bit;
                let adding = mask & (1 << bit) != 0;
                for (s, r) in sums.iter_mut().zip(&rows) {
                    if adding {
                        *s += r[bit];
                    } else {
                        *s -= r[bit];
                    }
                }
                if sums.iter().all(|&s| s == 0) {
                    members.push(mask);
                }
            }
        }
        None => {
            let mut sums = vec![BigInt::zero(); rows.len()];
            for i in 1..count {
                let bit = i.trailing_zeros() as usize;
                mask ^= 1 << bit;
                let adding = mask & (1 << bit) != 0;
                for (s, r) in sums.iter_mut().zip(rows) {
                    if adding {
                        *s += &r[bit];
                    } else {
                        *s -= &r[bit];
                    }
                }
                if sums.iter().all(Zero::is_zero) {
                    members.push(mask);
                }
            }
        }
    }
    members.sort_unstable();
    members
}

/// Coarsest partition of `n` columns refining every member set.
fn atoms_of(members: &[u32], n: usize) -> Vec<u32> {
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut atoms = vec![full];
    for &mm in members {
        let mut next = Vec::with_capacity(atoms.len() + 1);
        for &a in &atoms {
            let inside = a & mm;
            let outside = a & !mm;
            if inside != 0 {
                next.push(inside);
            }
            if outside != 0 {
                next.push(outside);
            }
        }
        atoms = next;
    }
    atoms
}

/// The partition generating the optimal σ-algebra `O` of `sub`, using default limits.
pub fn optimal_sigma_algebra(m: &FiniteModel, sub: &Submodel) -> Result<Partition> {
    optimal_sigma_algebra_with(m, sub, &Limits::default())
}

/// The optimal σ-algebra `O`, by enumerating events on the support union.
///
/// Points outside the support union are null for every parameter, so they
/// are atoms of `O` on their own. The enumeration guard applies to the
/// support union. The family found is checked to be a σ-algebra: the support
/// union and every atom must be members.
pub fn optimal_sigma_algebra_with(m: &FiniteModel, sub: &Submodel, limits: &Limits) -> Result<Partition> {
    let support = m.support_union(sub);
    let pts: Vec<usize> = (0..m.num_points()).filter(|&x| support[x]).collect();
    let n = pts.len();
    if n > limits.max_enumeration_points.min(31) {
        return Err(Error::SizeGuard {
            what: "optimal σ-algebra enumeration",
            size: n,
            limit: limits.max_enumeration_points.min(31),
        });
    }
    let basis = zero_unbiased_basis(m, sub);
    let mut w_rows = Vec::new();
    for h in &basis {
        for &t in sub.indices() {
            let row: Vec<Rational> = pts.iter().map(|&x| &h[x] * m.mass(t, x)).collect();
            if !linalg::is_zero_vec(&row) {
                w_rows.push(row);
            }
        }
    }
    let reduced = linalg::rref(&w_rows, n);
    let atoms: Vec<u32> = if reduced.rank() == 0 {
        (0..n).map(|i| 1u32 << i).collect()
    } else {
        let members = zero_sum_subsets(&integer_rows(&reduced.rows), n);
        let full: u32 = (1u32 << n) - 1;
        if members.binary_search(&full).is_err() {
            return Err(Error::Invariant("support union is not a member of O".into()));
        }
        let atoms = atoms_of(&members, n);
        if let Some(a) = atoms.iter().find(|a| members.binary_search(a).is_err()) {
            return Err(Error::Invariant(format!("atom {a:#b} of O is not itself a member")));
        }
        atoms
    };
    let mut labels = vec![usize::MAX; m.num_points()];
    for (ai, a) in atoms.iter().enumerate() {
        for (i, &x) in pts.iter().enumerate() {
            if a & (1 << i) != 0 {
                labels[x] = ai;
            }
        }
    }
    let unlabeled = labels.iter_mut().filter(|l| **l == usize::MAX);
    for (next, l) in (atoms.len()..).zip(unlabeled) {
        *l = next;
    }
    Ok(Partition::from_labels(&labels))
}

/// `g` is optimal unbiased for its mean iff it is `O`-measurable on the support union.
pub fn is_optimal_unbiased(g: &[Rational], m: &FiniteModel, sub: &Submodel, limits: &Limits) -> Result<CheckReport> {
    check_len(g, m)?;
    let o = optimal_sigma_algebra_with(m, sub, limits)?;
    let support = m.support_union(sub);
    let report = match o.first_violation(g, Some(&support)) {
        None => CheckReport::pass("optimal-unbiased"),
        Some((first, second)) => CheckReport::fail("optimal-unbiased", Witness::PointPair { first, second })
            .with_note("the two points share an atom of O but g differs on them"),
    };
    Ok(report.with_note("optimality for every convex loss is decided as O-measurability"))
}

fn check_len(g: &[Rational], m: &FiniteModel) -> Result<()> {
    if g.len() != m.num_points() {
        return Err(Error::InvalidInput(format!(
            "function has {} values, model has {} points",
            g.len(),
            m.num_points()
        )));
    }
    Ok(())
}

/// Checks `P_theta(g h) = 0` for every basis element `h` of `E_0` and every `theta`.
pub fn covariance_criterion(g: &[Rational], m: &FiniteModel, sub: &Submodel) -> Result<CheckReport> {
    check_len(g, m)?;
    for h in zero_unbiased_basis(m, sub) {
        for &t in sub.indices() {
            let gh: Vec<Rational> = g.iter().zip(&h).map(|(a, b)| a * b).collect();
            if !m.expectation(t, &gh).is_zero() {
                return Ok(CheckReport::fail("covariance", Witness::function(h))
                    .with_note(format!("P(g·h) ≠ 0 under param {t}")));
            }
        }
    }
    Ok(CheckReport::pass("covariance"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum UmvueOutcome {
    Found {
        #[serde(with = "crate::rational::serde_str::vec")]
        estimator: RationalFunction,
        /// Value on each atom of `O` meeting the support union, by atom.
        #[serde(with = "crate::rational::serde_str::vec")]
        atom_values: Vec<Rational>,
        atoms: Vec<Vec<usize>>,
    },
    /// No unbiased estimator exists at all.
    NotEstimable,
    /// Unbiased estimators exist, but none is `O`-measurable.
    NoOptimal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Umvue {
    pub optimal: Partition,
    pub outcome: UmvueOutcome,
    pub notes: Vec<String>,
}

/// The optimal unbiased estimator of `kappa`, if any. It is unique up to null
/// sets; atoms of total mass zero get the value 0.
pub fn umvue(m: &FiniteModel, sub: &Submodel, kappa: &[Rational], limits: &Limits) -> Result<Umvue> {
    let rhs = estimand_on(sub, kappa, m)?;
    let o = optimal_sigma_algebra_with(m, sub, limits)?;
    let blocks = checks::support_blocks(&o, m, sub);
    let rows: Vec<Vec<Rational>> = sub
        .indices()
        .iter()
        .map(|&t| {
            let masses = m.block_masses(&o, t);
            blocks.iter().map(|&b| masses[b].clone()).collect()
        })
        .collect();
    let all_blocks = o.blocks();
    let outcome = match linalg::solve(&rows, blocks.len(), &rhs) {
        Some(values) => {
            let mut per_block = vec![Rational::zero(); o.num_blocks()];
            for (j, &b) in blocks.iter().enumerate() {
                per_block[b] = values[j].clone();
            }
            UmvueOutcome::Found {
                estimator: o.block_ids().iter().map(|&b| per_block[b].clone()).collect(),
                atom_values: values,
                atoms: blocks.iter().map(|&b| all_blocks[b].clone()).collect(),
            }
        }
        None if unbiased_class(m, sub, kappa)?.particular.is_none() => UmvueOutcome::NotEstimable,
        None => UmvueOutcome::NoOptimal,
    };
    let notes = vec!["unique up to null sets; zero on atoms of total mass zero".to_string()];
    Ok(Umvue { optimal: o, outcome, notes })
}

/// Decides whether a complete sufficient σ-algebra exists, which holds iff
/// `O` is sufficient. Returns `O` along with the report.
pub fn exists_complete_sufficient(m: &FiniteModel, sub: &Submodel, limits: &Limits) -> Result<(CheckReport, Partition)> {
    let o = optimal_sigma_algebra_with(m, sub, limits)?;
    let mut report = checks::is_sufficient(&o, m, sub).renamed("exists-complete-sufficient");
    if report.passed() {
        report.notes.push("O is complete sufficient".into());
    } else {
        report.notes.push("O is not sufficient, so no complete sufficient σ-algebra exists".into());
    }
    Ok((report, o))
}

/// The conditional expectation of `g` given a sufficient `c`, computed under the
/// first parameter charging each block.
pub fn rao_blackwell(g: &[Rational], c: &Partition, m: &FiniteModel, sub: &Submodel) -> Result<RationalFunction> {
    check_len(g, m)?;
    if checks::is_sufficient(c, m, sub).failed() {
        return Err(Error::NotSufficient);
    }
    let masses: Vec<Vec<Rational>> = sub.indices().iter().map(|&t| m.block_masses(c, t)).collect();
    let values: Vec<Rational> = c
        .blocks()
        .iter()
        .enumerate()
        .map(|(b, block)| {
            let charged = sub.indices().iter().zip(&masses).find(|(_, bm)| !bm[b].is_zero());
            match charged {
                None => Rational::zero(),
                Some((&t, bm)) => {
                    let total: Rational = block.iter().map(|&x| &g[x] * m.mass(t, x)).sum();
                    total / &bm[b]
                }
            }
        })
        .collect();
    Ok(c.block_ids().iter().map(|&b| values[b].clone()).collect())
}

/// Computes `O_eta` for every piece, their meet, and checks that the meet is
/// contained in `O` of the full model on its support union.
pub fn meet_of_optimal_sigmas(m: &FiniteModel, exhaustion: &Exhaustion, limits: &Limits) -> Result<(Partition, CheckReport)> {
    let full = m.all();
    exhaustion.validate(m, &full)?;
    let mut meet: Option<Partition> = None;
    for (_, piece) in &exhaustion.pieces {
        let o = optimal_sigma_algebra_with(m, piece, limits)?;
        meet = Some(match meet {
            None => o,
            Some(acc) => acc.meet(&o),
        });
    }
    let meet = meet.expect("validated exhaustions have pieces");
    let o = optimal_sigma_algebra_with(m, &full, limits)?;
    let support = m.support_union(&full);
    let report = if meet.coarser_on(&o, &support) {
        CheckReport::pass("meet-within-optimal")
    } else {
        let pts: Vec<usize> = (0..m.num_points()).filter(|&x| support[x]).collect();
        let pair = pts
            .iter()
            .flat_map(|&x| pts.iter().map(move |&y| (x, y)))
            .find(|&(x, y)| x < y && o.block_of(x) == o.block_of(y) && meet.block_of(x) != meet.block_of(y))
            .expect("a refinement failure has a separating pair");
        CheckReport::fail("meet-within-optimal", Witness::PointPair { first: pair.0, second: pair.1 })
    };
    Ok((meet, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ParamLabel;
    use crate::rational::{int, ratio};

    fn bernoulli_square(ts: &[Rational]) -> FiniteModel {
        let labels: Vec<String> = ts.iter().map(ToString::to_string).collect();
        let rows = ts
            .iter()
            .map(|t| {
                let s = int(1) - t;
                vec![&s * &s, t * &s, t * &s, t * t]
            })
            .collect();
        FiniteModel::from_rows(&["(0,0)", "(0,1)", "(1,0)", "(1,1)"], &labels, rows).unwrap()
    }

    fn ce52_grid() -> FiniteModel {
        let mut params = Vec::new();
        let mut rows = Vec::new();
        for t in [ratio(1, 5), ratio(1, 4), ratio(1, 3)] {
            let s = int(1) - &t;
            for th1 in 0..2 {
                let p = if th1 == 0 { t.clone() } else { s.clone() };
                let q = int(1) - &p;
                params.push(ParamLabel::tuple([th1.to_string(), t.to_string()]));
                rows.push(vec![&q * &q, &p * &q, &p * &q, &p * &p]);
            }
        }
        FiniteModel::new(
            ["(0,0)", "(0,1)", "(1,0)", "(1,1)"].iter().map(|s| s.to_string()).collect(),
            params,
            rows,
        )
        .unwrap()
    }

    fn ce55() -> FiniteModel {
        let third = ratio(1, 3);
        FiniteModel::from_rows(
            &["1", "2", "3"],
            &["11", "12", "21", "22"],
            vec![
                vec![third.clone(), third.clone(), third],
                vec![int(0), int(0), int(1)],
                vec![int(0), int(0), int(1)],
                vec![ratio(1, 6), ratio(1, 3), ratio(1, 2)],
            ],
        )
        .unwrap()
    }

    #[test]
    fn zero_basis_of_single_two_point_law() {
        let m = FiniteModel::from_rows(&["a", "b"], &["p"], vec![vec![ratio(1, 2), ratio(1, 2)]]).unwrap();
        assert_eq!(zero_unbiased_basis(&m, &m.all()), vec![vec![int(-1), int(1)]]);
        let full = FiniteModel::from_rows(&["a", "b"], &["p", "q"], vec![vec![ratio(1, 2), ratio(1, 2)], vec![int(1), int(0)]]).unwrap();
        assert!(zero_unbiased_basis(&full, &full.all()).is_empty());
        assert_eq!(optimal_sigma_algebra(&full, &full.all()).unwrap(), Partition::discrete(2));
    }

    #[test]
    fn ce52_zero_basis_contains_difference() {
        let m = ce52_grid();
        let basis = zero_unbiased_basis(&m, &m.all());
        assert_eq!(basis, vec![vec![int(0), int(-1), int(1), int(0)]]);
    }

    #[test]
    fn single_law_has_trivial_o() {
        let m = FiniteModel::from_rows(&["a", "b", "c"], &["p"], vec![vec![ratio(1, 6), ratio(1, 3), ratio(1, 2)]]).unwrap();
        assert_eq!(optimal_sigma_algebra(&m, &m.all()).unwrap(), Partition::trivial(3));
    }

    #[test]
    fn ce55_section_o_equals_c1() {
        let m = ce55();
        let sub = Submodel::new(vec![2, 3], 4).unwrap();
        assert_eq!(optimal_sigma_algebra(&m, &sub).unwrap(), Partition::from_block_ids(&[0, 0, 1]));
    }

    #[test]
    fn off_support_points_are_singleton_atoms() {
        let m = FiniteModel::from_rows(&["a", "b", "c"], &["p"], vec![vec![ratio(1, 2), int(0), ratio(1, 2)]]).unwrap();
        assert_eq!(optimal_sigma_algebra(&m, &m.all()).unwrap().block_ids(), &[0, 1, 0]);
    }

    #[test]
    fn unbiased_classes() {
        let b = bernoulli_square(&[ratio(1, 5), ratio(1, 4), ratio(1, 3)]);
        let kappa: Vec<Rational> = vec![ratio(1, 5), ratio(1, 4), ratio(1, 3)];
        let class = unbiased_class(&b, &b.all(), &kappa).unwrap();
        let g = class.particular.unwrap();
        for (t, k) in kappa.iter().enumerate() {
            assert_eq!(&b.expectation(t, &g), k);
        }
        let zero = unbiased_class(&b, &b.all(), &[int(0), int(0), int(0)]).unwrap();
        assert_eq!(zero.particular, Some(vec![int(0); 4]));
        let near = FiniteModel::from_rows(&["a", "b"], &["p", "q"], vec![vec![ratio(1, 2), ratio(1, 2)], vec![ratio(1, 2), ratio(1, 2)]]);
        assert!(near.is_ok());
        let near = near.unwrap();
        assert!(unbiased_class(&near, &near.all(), &[int(0), int(1)]).unwrap().particular.is_none());
    }

    #[test]
    fn umvue_of_bernoulli_mean() {
        let b = bernoulli_square(&[ratio(1, 5), ratio(1, 4), ratio(1, 3)]);
        let u = umvue(&b, &b.all(), &[ratio(1, 5), ratio(1, 4), ratio(1, 3)], &Limits::default()).unwrap();
        assert_eq!(u.optimal, Partition::from_labels(&[0, 1, 1, 2]));
        match u.outcome {
            UmvueOutcome::Found { estimator, .. } => {
                assert_eq!(estimator, vec![int(0), ratio(1, 2), ratio(1, 2), int(1)])
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn umvue_of_constant_and_ce52_zero() {
        let m = ce52_grid();
        let u = umvue(&m, &m.all(), &vec![int(0); 6], &Limits::default()).unwrap();
        assert!(matches!(u.outcome, UmvueOutcome::Found { ref estimator, .. } if estimator.iter().all(Zero::is_zero)));
        let diff = vec![int(0), int(-1), int(1), int(0)];
        assert!(is_optimal_unbiased(&diff, &m, &m.all(), &Limits::default()).unwrap().failed());
        let c = umvue(&m, &m.all(), &vec![int(3); 6], &Limits::default()).unwrap();
        assert!(matches!(c.outcome, UmvueOutcome::Found { ref estimator, .. } if estimator.iter().all(|v| *v == int(3))));
    }

    #[test]
    fn not_estimable_is_reported() {
        let m = FiniteModel::from_rows(&["a", "b"], &["p", "q"], vec![vec![ratio(1, 2), ratio(1, 2)], vec![ratio(1, 2), ratio(1, 2)]]).unwrap();
        let u = umvue(&m, &m.all(), &[int(0), int(1)], &Limits::default()).unwrap();
        assert_eq!(u.outcome, UmvueOutcome::NotEstimable);
    }

    #[test]
    fn rao_blackwell_of_first_coordinate() {
        let b = bernoulli_square(&[ratio(1, 5), ratio(1, 4), ratio(1, 3)]);
        let x1 = vec![int(0), int(0), int(1), int(1)];
        let sum = Partition::from_labels(&[0, 1, 1, 2]);
        assert_eq!(rao_blackwell(&x1, &sum, &b, &b.all()).unwrap(), vec![int(0), ratio(1, 2), ratio(1, 2), int(1)]);
        let first = Partition::from_labels(&[0, 0, 1, 1]);
        assert_eq!(rao_blackwell(&x1, &first, &b, &b.all()), Err(Error::NotSufficient));
    }

    #[test]
    fn covariance_flags_zero_unbiased() {
        let m = ce52_grid();
        let diff = vec![int(0), int(-1), int(1), int(0)];
        assert!(covariance_criterion(&diff, &m, &m.all()).unwrap().failed());
        assert!(covariance_criterion(&vec![int(2); 4], &m, &m.all()).unwrap().passed());
    }

    #[test]
    fn ce55_exists_complete_sufficient_and_meet() {
        let m = ce55();
        let (r, o) = exists_complete_sufficient(&m, &m.all(), &Limits::default()).unwrap();
        assert!(r.passed());
        assert_eq!(o, Partition::discrete(3));
        let ex = Exhaustion::new(
            "pairs",
            vec![
                ("a".into(), Submodel::new(vec![0, 1], 4).unwrap()),
                ("b".into(), Submodel::new(vec![2, 3], 4).unwrap()),
            ],
        );
        let (_, report) = meet_of_optimal_sigmas(&m, &ex, &Limits::default()).unwrap();
        assert!(report.passed());
        let (meet, single) = meet_of_optimal_sigmas(&m, &Exhaustion::single(&m), &Limits::default()).unwrap();
        assert!(single.passed());
        assert_eq!(meet, o);
    }

    #[test]
    fn guard_applies_to_support() {
        let lim = Limits { max_enumeration_points: 2, ..Limits::default() };
        let m = FiniteModel::from_rows(&["a", "b", "c"], &["p"], vec![vec![ratio(1, 3); 3]]).unwrap();
        assert!(matches!(optimal_sigma_algebra_with(&m, &m.all(), &lim), Err(Error::SizeGuard { .. })));
    }
}
