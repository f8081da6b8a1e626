//! Partitions of a finite point set, standing for sub-σ-algebras.
//!
//! On a finite sample space every sub-σ-algebra is generated by a unique
//! partition (its atoms). A [`Partition`] stores one block id per point in
//! canonical form: blocks are numbered in order of first appearance, so two
//! partitions are equal as set partitions iff their id vectors are equal.
//!
//! Ordering convention: `p.refines(q)` means every block of `p` lies inside a
//! block of `q`, i.e. the σ-algebra of `q` is contained in that of `p`.
//! [`Partition::join`] is the common refinement (σ-algebra supremum) and
//! [`Partition::meet`] the finest common coarsening (σ-algebra intersection).

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;

use num_traits::Zero;

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    ids: Vec<usize>,
    blocks: usize,
}

impl Partition {
    /// Partition whose blocks are the level sets of `labels`.
    pub fn from_labels<T: Eq + Hash>(labels: &[T]) -> Self {
        let mut seen: HashMap<&T, usize> = HashMap::with_capacity(labels.len());
        let ids = labels
            .iter()
            .map(|l| {
                let next = seen.len();
                *seen.entry(l).or_insert(next)
            })
            .collect();
        Partition { ids, blocks: seen.len() }
    }

    /// Canonicalizes an arbitrary block labeling.
    pub fn from_block_ids(ids: &[usize]) -> Self {
        Self::from_labels(ids)
    }

    pub fn discrete(points: usize) -> Self {
        Partition { ids: (0..points).collect(), blocks: points }
    }

    pub fn trivial(points: usize) -> Self {
        Partition { ids: vec![0; points], blocks: usize::from(points > 0) }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks
    }

    pub fn block_of(&self, point: usize) -> usize {
        self.ids[point]
    }

    pub fn block_ids(&self) -> &[usize] {
        &self.ids
    }

    /// Blocks as sorted point lists, in block-id order.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.blocks];
        for (x, &b) in self.ids.iter().enumerate() {
            out[b].push(x);
        }
        out
    }

    fn check_len(&self, other: &Partition) {
        assert_eq!(
            self.len(),
            other.len(),
            "partitions live on point sets of different sizes"
        );
    }

    pub fn join(&self, other: &Partition) -> Partition {
        self.check_len(other);
        let pairs: Vec<(usize, usize)> = self.ids.iter().copied().zip(other.ids.iter().copied()).collect();
        Partition::from_labels(&pairs)
    }

    pub fn meet(&self, other: &Partition) -> Partition {
        self.check_len(other);
        let mut uf = UnionFind::new(self.len());
        for part in [self, other] {
            let mut first = vec![usize::MAX; part.blocks];
            for (x, &b) in part.ids.iter().enumerate() {
                if first[b] == usize::MAX {
                    first[b] = x;
                } else {
                    uf.union(first[b], x);
                }
            }
        }
        let roots: Vec<usize> = (0..self.len()).map(|x| uf.find(x)).collect();
        Partition::from_labels(&roots)
    }

    /// True when every block of `self` lies inside a block of `other`.
    pub fn refines(&self, other: &Partition) -> bool {
        self.check_len(other);
        let mut image = vec![usize::MAX; self.blocks];
        self.ids.iter().zip(&other.ids).all(|(&a, &b)| {
            if image[a] == usize::MAX {
                image[a] = b;
                true
            } else {
                image[a] == b
            }
        })
    }

    /// The partition induced on the points where `keep` is true, renumbered.
    pub fn restrict(&self, keep: &[bool]) -> Partition {
        assert_eq!(keep.len(), self.len());
        let ids: Vec<usize> = self
            .ids
            .iter()
            .zip(keep)
            .filter(|(_, &k)| k)
            .map(|(&b, _)| b)
            .collect();
        Partition::from_labels(&ids)
    }

    /// `self` is coarser than or equal to `other` on the points in `on`.
    pub fn coarser_on(&self, other: &Partition, on: &[bool]) -> bool {
        other.restrict(on).refines(&self.restrict(on))
    }

    pub fn equal_on(&self, other: &Partition, on: &[bool]) -> bool {
        self.restrict(on) == other.restrict(on)
    }

    /// A function is measurable iff it is constant on every block.
    pub fn is_measurable(&self, values: &[Rational]) -> bool {
        self.first_violation(values, None).is_none()
    }

    /// First pair of points sharing a block but carrying different values,
    /// looking only at points where `on` is true (all points when `None`).
    pub fn first_violation(&self, values: &[Rational], on: Option<&[bool]>) -> Option<(usize, usize)> {
        assert_eq!(values.len(), self.len());
        let mut rep: Vec<Option<usize>> = vec![None; self.blocks];
        for (x, &b) in self.ids.iter().enumerate() {
            if on.is_some_and(|mask| !mask[x]) {
                continue;
            }
            match rep[b] {
                None => rep[b] = Some(x),
                Some(r) if values[r] != values[x] => return Some((r, x)),
                Some(_) => {}
            }
        }
        None
    }

    /// Indicator vector of the union of the given blocks.
    pub fn indicator(&self, blocks: &[usize]) -> Vec<Rational> {
        let mut chosen = vec![false; self.blocks];
        for &b in blocks {
            chosen[b] = true;
        }
        self.ids
            .iter()
            .map(|&b| if chosen[b] { Rational::from_integer(1.into()) } else { Rational::zero() })
            .collect()
    }
}

impl fmt::Display for Partition {
    /// `{0,1}{2}`: blocks in canonical order, point indices inside.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for block in self.blocks() {
            write!(f, "{{")?;
            for (i, x) in block.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, "}}")?;
        }
        Ok(())
    }
}

/// Disjoint-set forest with path halving; shared with the exhaustion graph.
#[derive(Debug, Clone)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins so components are labeled by their first member
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(ids: &[usize]) -> Partition {
        Partition::from_block_ids(ids)
    }

    #[test]
    fn canonical_numbering_by_first_appearance() {
        assert_eq!(p(&[5, 5, 2, 7]).block_ids(), &[0, 0, 1, 2]);
        assert_eq!(Partition::from_labels(&["b", "a", "b"]).block_ids(), &[0, 1, 0]);
    }

    #[test]
    fn sorted_pair_statistic_on_two_by_two() {
        // points (1,1),(1,2),(2,1),(2,2) labelled by (min, max)
        let labels = [(1, 1), (1, 2), (1, 2), (2, 2)];
        assert_eq!(Partition::from_labels(&labels).blocks(), vec![vec![0], vec![1, 2], vec![3]]);
        assert_eq!(Partition::from_labels(&[0, 0, 0]).num_blocks(), 1);
    }

    #[test]
    fn join_with_trivial_is_identity() {
        let a = p(&[0, 1, 0, 2]);
        assert_eq!(a.join(&Partition::trivial(4)), a);
    }

    #[test]
    fn join_of_first_coordinate_and_sum_is_discrete() {
        // {0,1}^2 in order 00,01,10,11
        let x1 = Partition::from_labels(&[0, 0, 1, 1]);
        let sum = Partition::from_labels(&[0, 1, 1, 2]);
        assert_eq!(sum.num_blocks(), 3);
        assert_eq!(x1.join(&sum), Partition::discrete(4));
    }

    #[test]
    fn meet_examples() {
        let a = p(&[0, 1, 2]);
        let b = p(&[0, 0, 1]);
        assert_eq!(a.meet(&Partition::discrete(3)), a);
        assert_eq!(a.meet(&b), b);
        let c = p(&[0, 0, 1, 1]);
        let d = p(&[0, 1, 1, 2]);
        assert_eq!(c.meet(&d), Partition::trivial(4));
    }

    #[test]
    fn refinement_and_restriction() {
        let fine = p(&[0, 1, 2, 2]);
        let coarse = p(&[0, 0, 1, 1]);
        assert!(fine.refines(&coarse));
        assert!(!coarse.refines(&fine));
        let keep = [true, false, true, true];
        assert_eq!(coarse.restrict(&keep).block_ids(), &[0, 1, 1]);
        assert!(coarse.coarser_on(&fine, &keep));
        assert!(coarse.equal_on(&p(&[0, 1, 2, 2]), &[false, false, true, true]));
    }

    #[test]
    fn display_lists_blocks() {
        assert_eq!(p(&[0, 0, 1]).to_string(), "{0,1}{2}");
    }
}
