//! Point-indexed functions and parameter-indexed estimands.

use num_traits::Zero;

use crate::model::FiniteModel;
use crate::partition::Partition;
use crate::rational::Rational;

/// A function on the points of a model: `values[x]` is its value at point `x`.
pub type RationalFunction = Vec<Rational>;

/// A parameter-indexed target `kappa(P_theta)`.
pub type Estimand = Vec<Rational>;

/// `E_theta[h | c]` as a point-indexed function. Blocks of `P_theta`-mass
/// zero get the value 0.
pub fn conditional_expectation(h: &[Rational], c: &Partition, m: &FiniteModel, theta: usize) -> RationalFunction {
    assert_eq!(h.len(), m.num_points(), "function/model size mismatch");
    assert_eq!(c.len(), m.num_points(), "partition/model size mismatch");
    let mut mass = vec![Rational::zero(); c.num_blocks()];
    let mut weighted = vec![Rational::zero(); c.num_blocks()];
    for (x, p) in m.row(theta).iter().enumerate() {
        if p.is_zero() {
            continue;
        }
        let b = c.block_of(x);
        mass[b] += p;
        weighted[b] += p * &h[x];
    }
    let averages: Vec<Rational> = mass
        .iter()
        .zip(weighted)
        .map(|(m, w)| if m.is_zero() { Rational::zero() } else { w / m })
        .collect();
    (0..h.len()).map(|x| averages[c.block_of(x)].clone()).collect()
}

/// Values of `g` on the blocks of `c`, taking the value at each block's first
/// point. Only meaningful when `g` is `c`-measurable.
pub fn block_values(g: &[Rational], c: &Partition) -> Vec<Rational> {
    c.blocks().iter().map(|b| g[b[0]].clone()).collect()
}

pub fn lift(block_values: &[Rational], c: &Partition) -> RationalFunction {
    c.block_ids().iter().map(|&b| block_values[b].clone()).collect()
}

pub fn pointwise_product(a: &[Rational], b: &[Rational]) -> RationalFunction {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}
