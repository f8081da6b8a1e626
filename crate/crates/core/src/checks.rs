//! Decision procedures for completeness, sufficiency and related properties
//! of a partition relative to a submodel.
//!
//! Every procedure returns a [`CheckReport`]. A failing report always carries
//! the first witness found in canonical scan order (blocks, then points, then
//! parameters), so reports are reproducible.

use num_traits::{One, Zero};

use crate::function::RationalFunction;
use crate::linalg;
use crate::model::{FiniteModel, Submodel};
use crate::partition::Partition;
use crate::rational::Rational;
use crate::report::{CheckReport, Verdict, Witness};

/// Largest number of support blocks for which the incompleteness witness is
/// searched among ancillary events before falling back to a kernel vector.
const ANCILLARY_SEARCH_LIMIT: usize = 12;

/// Blocks of `c` that meet the support union of `sub`, in block order.
pub fn support_blocks(c: &Partition, m: &FiniteModel, sub: &Submodel) -> Vec<usize> {
    let support = m.support_union(sub);
    let mut hit = vec![false; c.num_blocks()];
    for (x, &s) in support.iter().enumerate() {
        if s {
            hit[c.block_of(x)] = true;
        }
    }
    (0..c.num_blocks()).filter(|&b| hit[b]).collect()
}

/// Rows `P_theta(B)` for `theta` in `sub` and `B` in `blocks`.
fn block_mass_matrix(c: &Partition, m: &FiniteModel, sub: &Submodel, blocks: &[usize]) -> Vec<Vec<Rational>> {
    sub.indices()
        .iter()
        .map(|&t| {
            let masses = m.block_masses(c, t);
            blocks.iter().map(|&b| masses[b].clone()).collect()
        })
        .collect()
}

/// Smallest proper set of support blocks (containing the first one) whose
/// mass is the same under every parameter.
fn ancillary_event(rows: &[Vec<Rational>], nblocks: usize) -> Option<Vec<usize>> {
    if !(2..=ANCILLARY_SEARCH_LIMIT).contains(&nblocks) {
        return None;
    }
    let rest = nblocks - 1;
    let mut masks: Vec<u32> = (0..(1u32 << rest) - 1).collect();
    // subsets of the remaining blocks, by size then lexicographically on block order
    let key = |mask: &u32| {
        let members: Vec<usize> = (0..rest).filter(|i| mask & (1 << i) != 0).collect();
        (members.len(), members)
    };
    masks.sort_by_cached_key(key);
    masks.into_iter().find_map(|mask| {
        let members: Vec<usize> =
            std::iter::once(0).chain((0..rest).filter(|i| mask & (1 << i) != 0).map(|i| i + 1)).collect();
        let mass = |row: &Vec<Rational>| members.iter().map(|&j| row[j].clone()).sum::<Rational>();
        let first = mass(&rows[0]);
        rows[1..].iter().all(|r| mass(r) == first).then_some(members)
    })
}

/// Decides completeness of `c` for `sub`: every `c`-measurable `h` with
/// `P_theta h = 0` for all `theta` vanishes on the support union.
pub fn is_complete(c: &Partition, m: &FiniteModel, sub: &Submodel) -> CheckReport {
    let blocks = support_blocks(c, m, sub);
    let rows = block_mass_matrix(c, m, sub, &blocks);
    if linalg::rank(&rows, blocks.len()) == blocks.len() {
        return CheckReport::pass("complete");
    }
    let on_blocks = match ancillary_event(&rows, blocks.len()) {
        Some(event) => {
            let complement_mass: Rational = (0..blocks.len())
                .filter(|j| !event.contains(j))
                .map(|j| rows[0][j].clone())
                .sum();
            (0..blocks.len())
                .map(|j| {
                    let inside = if event.contains(&j) { Rational::zero() } else { Rational::one() };
                    inside - &complement_mass
                })
                .collect()
        }
        None => linalg::kernel_basis(&rows, blocks.len()).swap_remove(0),
    };
    let mut per_block = vec![Rational::zero(); c.num_blocks()];
    for (j, &b) in blocks.iter().enumerate() {
        per_block[b] = on_blocks[j].clone();
    }
    let h: RationalFunction = c.block_ids().iter().map(|&b| per_block[b].clone()).collect();
    CheckReport::fail("complete", Witness::function(h))
}

/// Same decision as [`is_complete`]: on a finite space every function is bounded.
pub fn is_boundedly_complete(c: &Partition, m: &FiniteModel, sub: &Submodel) -> CheckReport {
    is_complete(c, m, sub)
        .renamed("boundedly-complete")
        .with_note("on a finite sample space every function is bounded, so bounded completeness and completeness coincide")
}

/// Decides sufficiency: within every block the conditional law is the same for
/// all parameters charging the block.
pub fn is_sufficient(c: &Partition, m: &FiniteModel, sub: &Submodel) -> CheckReport {
    let masses: Vec<Vec<Rational>> = sub.indices().iter().map(|&t| m.block_masses(c, t)).collect();
    for (b, block) in c.blocks().iter().enumerate() {
        let mut charged = sub.indices().iter().zip(&masses).filter(|(_, bm)| !bm[b].is_zero());
        let Some((&reference, ref_masses)) = charged.next() else {
            continue;
        };
        for (&theta, theta_masses) in charged {
            for &x in block {
                let lhs = m.mass(reference, x) * &theta_masses[b];
                let rhs = m.mass(theta, x) * &ref_masses[b];
                if lhs != rhs {
                    return CheckReport::fail(
                        "sufficient",
                        Witness::Sufficiency { point: x, block: b, theta: reference, other: theta },
                    );
                }
            }
        }
    }
    CheckReport::pass("sufficient")
}

fn proportional(u: &[&Rational], v: &[&Rational]) -> bool {
    let i = u.iter().position(|r| !r.is_zero());
    let j = v.iter().position(|r| !r.is_zero());
    match (i, j) {
        (Some(i), Some(j)) if i == j => u.iter().zip(v).all(|(a, b)| *a * v[i] == *b * u[i]),
        _ => false,
    }
}

/// Partition of the support union by proportionality of likelihood vectors;
/// points outside the support union form one extra block.
pub fn minimal_sufficient_partition(m: &FiniteModel, sub: &Submodel) -> Partition {
    let support = m.support_union(sub);
    let vectors: Vec<Vec<&Rational>> = (0..m.num_points())
        .map(|x| sub.indices().iter().map(|&t| m.mass(t, x)).collect())
        .collect();
    let mut representatives: Vec<usize> = Vec::new();
    let labels: Vec<usize> = (0..m.num_points())
        .map(|x| {
            if !support[x] {
                return usize::MAX;
            }
            match representatives.iter().position(|&r| proportional(&vectors[r], &vectors[x])) {
                Some(class) => class,
                None => {
                    representatives.push(x);
                    representatives.len() - 1
                }
            }
        })
        .collect();
    Partition::from_labels(&labels)
}

/// First pair of support points on which two partitions disagree about
/// sharing a block.
fn first_disagreement(a: &Partition, b: &Partition, on: &[bool]) -> Option<(usize, usize)> {
    let pts: Vec<usize> = (0..a.len()).filter(|&x| on[x]).collect();
    for (i, &x) in pts.iter().enumerate() {
        for &y in &pts[i + 1..] {
            if (a.block_of(x) == a.block_of(y)) != (b.block_of(x) == b.block_of(y)) {
                return Some((x, y));
            }
        }
    }
    None
}

pub fn is_minimal_sufficient(c: &Partition, m: &FiniteModel, sub: &Submodel) -> CheckReport {
    let suff = is_sufficient(c, m, sub);
    let mut report = if suff.failed() {
        let mut r = suff.renamed("minimal-sufficient");
        r.notes.push("not sufficient".into());
        r
    } else {
        let minimal = minimal_sufficient_partition(m, sub);
        match first_disagreement(c, &minimal, &m.support_union(sub)) {
            None => CheckReport::pass("minimal-sufficient"),
            Some((first, second)) => CheckReport::fail("minimal-sufficient", Witness::PointPair { first, second })
                .with_note("sufficient but not minimal"),
        }
    };
    if is_homogeneous(m, sub).failed() {
        report.notes.push(
            "submodel is not homogeneous; minimality uses the likelihood-proportionality construction".into(),
        );
    }
    report
}

/// Block masses do not depend on the parameter.
pub fn is_ancillary(c: &Partition, m: &FiniteModel, sub: &Submodel) -> CheckReport {
    let masses: Vec<Vec<Rational>> = sub.indices().iter().map(|&t| m.block_masses(c, t)).collect();
    let first = sub.indices()[0];
    for b in 0..c.num_blocks() {
        for (&theta, bm) in sub.indices().iter().zip(&masses).skip(1) {
            if bm[b] != masses[0][b] {
                return CheckReport::fail("ancillary", Witness::Ancillarity { block: b, theta: first, other: theta });
            }
        }
    }
    CheckReport::pass("ancillary")
}

pub fn are_independent(c1: &Partition, c2: &Partition, m: &FiniteModel, sub: &Submodel) -> CheckReport {
    for &theta in sub.indices() {
        let m1 = m.block_masses(c1, theta);
        let m2 = m.block_masses(c2, theta);
        let mut both = vec![vec![Rational::zero(); c2.num_blocks()]; c1.num_blocks()];
        for (x, p) in m.row(theta).iter().enumerate() {
            if !p.is_zero() {
                both[c1.block_of(x)][c2.block_of(x)] += p;
            }
        }
        for b1 in 0..c1.num_blocks() {
            for b2 in 0..c2.num_blocks() {
                if both[b1][b2] != &m1[b1] * &m2[b2] {
                    return CheckReport::fail("independent", Witness::Independence { first: b1, second: b2, theta });
                }
            }
        }
    }
    CheckReport::pass("independent")
}

/// All parameters charge the same points.
pub fn is_homogeneous(m: &FiniteModel, sub: &Submodel) -> CheckReport {
    let first = sub.indices()[0];
    let base = m.support(first);
    for &theta in &sub.indices()[1..] {
        let s = m.support(theta);
        if let Some(x) = (0..m.num_points()).find(|&x| s[x] != base[x]) {
            let (theta, other) = if base[x] { (first, theta) } else { (theta, first) };
            return CheckReport::fail("homogeneous", Witness::Support { point: x, theta, other });
        }
    }
    CheckReport::pass("homogeneous")
}

/// Complete and sufficient; the witness is that of the first failing part.
pub fn is_complete_sufficient(c: &Partition, m: &FiniteModel, sub: &Submodel) -> CheckReport {
    let complete = is_complete(c, m, sub);
    if complete.failed() {
        return complete.renamed("complete-sufficient").with_note("not complete");
    }
    let sufficient = is_sufficient(c, m, sub);
    if sufficient.failed() {
        return sufficient.renamed("complete-sufficient").with_note("not sufficient");
    }
    CheckReport::pass("complete-sufficient")
}

/// A complete sufficient `c_cs` and an ancillary `c_anc` must be independent.
/// Vacuous when the premises fail.
pub fn basu_consistency(c_cs: &Partition, c_anc: &Partition, m: &FiniteModel, sub: &Submodel) -> CheckReport {
    let premises = [is_complete_sufficient(c_cs, m, sub), is_ancillary(c_anc, m, sub)];
    if let Some(bad) = premises.iter().find(|r| r.failed()) {
        return CheckReport {
            property: "basu".into(),
            verdict: Verdict::Vacuous,
            witness: None,
            notes: vec![format!("premise `{}` fails", bad.property)],
        };
    }
    are_independent(c_cs, c_anc, m, sub).renamed("basu")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ParamLabel;
    use crate::rational::{int, ratio};

    fn ce55() -> FiniteModel {
        let third = ratio(1, 3);
        FiniteModel::new(
            vec!["1".into(), "2".into(), "3".into()],
            ["11", "12", "21", "22"]
                .iter()
                .map(|s| ParamLabel::tuple([&s[0..1], &s[1..2]]))
                .collect(),
            vec![
                vec![third.clone(), third.clone(), third],
                vec![int(0), int(0), int(1)],
                vec![int(0), int(0), int(1)],
                vec![ratio(1, 6), ratio(1, 3), ratio(1, 2)],
            ],
        )
        .unwrap()
    }

    fn bernoulli_square(ts: &[Rational]) -> FiniteModel {
        let points = ["(0,0)", "(0,1)", "(1,0)", "(1,1)"];
        let labels: Vec<String> = ts.iter().map(ToString::to_string).collect();
        let rows = ts
            .iter()
            .map(|t| {
                let s = int(1) - t;
                vec![&s * &s, t * &s, t * &s, t * t]
            })
            .collect();
        FiniteModel::from_rows(&points, &labels, rows).unwrap()
    }

    fn sum_partition() -> Partition {
        Partition::from_labels(&[0, 1, 1, 2])
    }

    #[test]
    fn ce55_section_is_complete_sufficient() {
        let m = ce55();
        let c1 = Partition::from_block_ids(&[0, 0, 1]);
        let sec = m.select("theta1=2").unwrap();
        assert!(is_complete(&c1, &m, &sec).passed());
        assert!(is_sufficient(&c1, &m, &sec).passed());
        assert_eq!(minimal_sufficient_partition(&m, &sec), c1);
    }

    #[test]
    fn ce55_join_insufficient_and_full_minimal_is_discrete() {
        let m = ce55();
        let c1 = Partition::from_block_ids(&[0, 0, 1]);
        let r = is_sufficient(&c1.join(&c1), &m, &m.all());
        assert!(r.failed());
        assert_eq!(r.witness, Some(Witness::Sufficiency { point: 0, block: 0, theta: 0, other: 3 }));
        assert_eq!(minimal_sufficient_partition(&m, &m.all()), Partition::discrete(3));
        assert!(is_complete(&c1, &m, &m.all()).passed());
    }

    #[test]
    fn single_distribution_trivial_partition_complete() {
        let m = FiniteModel::from_rows(&["a", "b"], &["p"], vec![vec![ratio(1, 3), ratio(2, 3)]]).unwrap();
        assert!(is_complete(&Partition::trivial(2), &m, &m.all()).passed());
        let r = is_complete(&Partition::discrete(2), &m, &m.all());
        assert!(r.failed());
    }

    #[test]
    fn bernoulli_sum_is_sufficient_and_minimal() {
        let m = bernoulli_square(&[ratio(1, 5), ratio(1, 4), ratio(1, 3)]);
        assert!(is_sufficient(&sum_partition(), &m, &m.all()).passed());
        assert_eq!(minimal_sufficient_partition(&m, &m.all()), sum_partition());
        assert!(is_complete(&sum_partition(), &m, &m.all()).passed());
        assert!(is_sufficient(&Partition::discrete(4), &m, &m.all()).passed());
    }

    #[test]
    fn single_param_minimal_is_trivial_on_support() {
        let m = FiniteModel::from_rows(&["a", "b", "c"], &["p"], vec![vec![ratio(1, 2), int(0), ratio(1, 2)]]).unwrap();
        assert_eq!(minimal_sufficient_partition(&m, &m.all()).block_ids(), &[0, 1, 0]);
    }

    #[test]
    fn minimal_sufficiency_flags_refinements() {
        let m = bernoulli_square(&[ratio(1, 5), ratio(1, 4)]);
        let r = is_minimal_sufficient(&Partition::discrete(4), &m, &m.all());
        assert!(r.failed());
        assert!(r.notes.iter().any(|n| n == "sufficient but not minimal"));
        assert!(is_minimal_sufficient(&sum_partition(), &m, &m.all()).passed());
    }

    #[test]
    fn ancillarity_and_independence() {
        let m = bernoulli_square(&[ratio(1, 5), ratio(1, 4)]);
        let x1 = Partition::from_labels(&[0, 0, 1, 1]);
        assert!(is_ancillary(&Partition::trivial(4), &m, &m.all()).passed());
        assert!(is_ancillary(&x1, &m, &m.all()).failed());
        let x2 = Partition::from_labels(&[0, 1, 0, 1]);
        assert!(are_independent(&x1, &x2, &m, &m.all()).passed());
        assert!(are_independent(&x1, &Partition::trivial(4), &m, &m.all()).passed());
        let third = bernoulli_square(&[ratio(1, 3)]);
        assert!(are_independent(&x1, &sum_partition(), &third, &third.all()).failed());
    }

    #[test]
    fn homogeneity() {
        let m = ce55();
        let r = is_homogeneous(&m, &m.all());
        assert!(r.failed());
        assert_eq!(r.witness, Some(Witness::Support { point: 0, theta: 0, other: 1 }));
        let b = bernoulli_square(&[ratio(1, 5), ratio(1, 4)]);
        assert!(is_homogeneous(&b, &b.all()).passed());
    }

    #[test]
    fn bounded_completeness_carries_note() {
        let m = ce55();
        let r = is_boundedly_complete(&Partition::trivial(3), &m, &m.all());
        assert!(r.passed());
        assert_eq!(r.notes.len(), 1);
    }

    #[test]
    fn basu_vacuous_and_passing() {
        let b = bernoulli_square(&[ratio(1, 5), ratio(1, 4), ratio(1, 3)]);
        let x1 = Partition::from_labels(&[0, 0, 1, 1]);
        assert_eq!(basu_consistency(&x1, &x1, &b, &b.all()).verdict, Verdict::Vacuous);
        let r = basu_consistency(&sum_partition(), &Partition::trivial(4), &b, &b.all());
        assert!(r.passed());
    }
}
