//! Model builders: products, i.i.d. powers, weightings and truncations.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::model::{FiniteModel, Limits, ParamLabel};
use crate::partition::Partition;
use crate::rational::Rational;

fn tuple_label(parts: &[&str]) -> String {
    format!("({})", parts.join(","))
}

/// Product of two models: points and params are ordered pairs, masses multiply.
/// Point `(i, j)` has index `i * b.num_points() + j`.
pub fn product_model(a: &FiniteModel, b: &FiniteModel, limits: &Limits) -> Result<FiniteModel> {
    let size = a.num_points().saturating_mul(b.num_points());
    limits.check_points("product point set", size)?;
    let points = a
        .points()
        .iter()
        .flat_map(|pa| b.points().iter().map(move |pb| tuple_label(&[pa, pb])))
        .collect();
    let mut params = Vec::with_capacity(a.num_params() * b.num_params());
    let mut prob = Vec::with_capacity(a.num_params() * b.num_params());
    for (ta, la) in a.params().iter().enumerate() {
        for (tb, lb) in b.params().iter().enumerate() {
            params.push(ParamLabel::pair(la, lb));
            prob.push(outer(a.row(ta), b.row(tb)));
        }
    }
    Ok(FiniteModel::from_parts_unchecked(points, params, prob))
}

fn outer(p: &[Rational], q: &[Rational]) -> Vec<Rational> {
    p.iter().flat_map(|x| q.iter().map(move |y| x * y)).collect()
}

/// Product with matched parameters: `P_t = a_{pair(t).0} ⊗ b_{pair(t).1}`,
/// labeled by `b`'s parameter labels.
pub fn coupled_product(
    a: &FiniteModel,
    b: &FiniteModel,
    pairs: &[(usize, usize)],
    limits: &Limits,
) -> Result<FiniteModel> {
    let size = a.num_points().saturating_mul(b.num_points());
    limits.check_points("product point set", size)?;
    let points = a
        .points()
        .iter()
        .flat_map(|pa| b.points().iter().map(move |pb| tuple_label(&[pa, pb])))
        .collect();
    let params = pairs.iter().map(|&(_, tb)| b.params()[tb].clone()).collect();
    let prob = pairs.iter().map(|&(ta, tb)| outer(a.row(ta), b.row(tb))).collect();
    FiniteModel::new(points, params, prob)
}

/// `σ(π_1)` and `σ(π_2)` on a product point set of `ma × mb` points.
pub fn coordinate_partitions(ma: usize, mb: usize) -> (Partition, Partition) {
    let first: Vec<usize> = (0..ma * mb).map(|x| x / mb).collect();
    let second: Vec<usize> = (0..ma * mb).map(|x| x % mb).collect();
    (Partition::from_labels(&first), Partition::from_labels(&second))
}

/// All `n`-tuples of point indices in lexicographic order (first coordinate slowest).
pub fn power_tuples(m: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..m).map(move |x| {
                    let mut next = t.clone();
                    next.push(x);
                    next
                })
            })
            .collect();
    }
    out
}

fn power_size(m: usize, n: usize, limits: &Limits) -> Result<usize> {
    let size = u32::try_from(n)
        .ok()
        .and_then(|n| m.checked_pow(n))
        .unwrap_or(usize::MAX);
    limits.check_points("power point set", size)?;
    Ok(size)
}

/// The i.i.d. power `P_theta^{⊗n}` for every parameter; parameters are not powered.
pub fn power_model(a: &FiniteModel, n: usize, limits: &Limits) -> Result<FiniteModel> {
    if n == 0 {
        return Err(Error::InvalidInput("power exponent must be at least 1".into()));
    }
    if n == 1 {
        return Ok(a.clone());
    }
    power_size(a.num_points(), n, limits)?;
    let tuples = power_tuples(a.num_points(), n);
    let points = tuples
        .iter()
        .map(|t| {
            let parts: Vec<&str> = t.iter().map(|&x| a.points()[x].as_str()).collect();
            tuple_label(&parts)
        })
        .collect();
    let prob = (0..a.num_params())
        .map(|theta| {
            let row = a.row(theta);
            tuples
                .iter()
                .map(|t| t.iter().fold(Rational::from_integer(1.into()), |acc, &x| acc * &row[x]))
                .collect()
        })
        .collect();
    Ok(FiniteModel::from_parts_unchecked(points, a.params().to_vec(), prob))
}

/// Partition of the `n`-fold point set by the value of `stat` on each tuple.
pub fn power_statistic<L, F>(m: usize, n: usize, stat: F) -> Partition
where
    L: Eq + std::hash::Hash,
    F: Fn(&[usize]) -> L,
{
    let labels: Vec<L> = power_tuples(m, n).iter().map(|t| stat(t)).collect();
    Partition::from_labels(&labels)
}

/// The `q`-weighted model `P_q(A) = P(1_A q) / P(q)`; parameters with `P(q) = 0`
/// are dropped.
pub fn weighted_model(m: &FiniteModel, q: &[Rational]) -> Result<FiniteModel> {
    if q.len() != m.num_points() {
        return Err(Error::InvalidInput(format!(
            "weight has length {}, model has {} points",
            q.len(),
            m.num_points()
        )));
    }
    if let Some(x) = q.iter().position(|v| v < &Rational::zero()) {
        return Err(Error::InvalidInput(format!("weight is negative at point {x}")));
    }
    let mut params = Vec::new();
    let mut prob = Vec::new();
    for theta in 0..m.num_params() {
        let total = m.expectation(theta, q);
        if total.is_zero() {
            continue;
        }
        params.push(m.params()[theta].clone());
        prob.push(m.row(theta).iter().zip(q).map(|(p, w)| p * w / &total).collect());
    }
    if params.is_empty() {
        return Err(Error::EmptyModel("weight annihilates model"));
    }
    Ok(FiniteModel::from_parts_unchecked(m.points().to_vec(), params, prob))
}

/// A labeled set of points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub label: String,
    pub points: Vec<usize>,
}

impl Event {
    pub fn new(label: impl Into<String>, mut points: Vec<usize>) -> Self {
        points.sort_unstable();
        points.dedup();
        Event { label: label.into(), points }
    }

    pub fn indicator(&self, m: usize) -> Vec<bool> {
        let mut out = vec![false; m];
        for &x in &self.points {
            out[x] = true;
        }
        out
    }

    fn intersect(&self, other: &Event) -> Vec<usize> {
        self.points.iter().copied().filter(|x| other.points.binary_search(x).is_ok()).collect()
    }
}

/// First pair of events whose intersection is neither empty nor in the list.
pub fn cap_stability_violation(events: &[Event]) -> Option<(usize, usize)> {
    for i in 0..events.len() {
        for j in i + 1..events.len() {
            let cap = events[i].intersect(&events[j]);
            if !cap.is_empty() && !events.iter().any(|e| e.points == cap) {
                return Some((i, j));
            }
        }
    }
    None
}

/// Closes an event list under nonempty intersections, keeping first-seen order.
pub fn cap_closure(events: &[Event]) -> Vec<Event> {
    let mut out: Vec<Event> = Vec::new();
    for e in events {
        if !e.points.is_empty() && !out.iter().any(|o| o.points == e.points) {
            out.push(e.clone());
        }
    }
    loop {
        let mut added = false;
        let n = out.len();
        for i in 0..n {
            for j in i + 1..n {
                let cap = out[i].intersect(&out[j]);
                if !cap.is_empty() && !out.iter().any(|o| o.points == cap) {
                    let label = format!("{}∩{}", out[i].label, out[j].label);
                    out.push(Event::new(label, cap));
                    added = true;
                }
            }
        }
        if !added {
            return out;
        }
    }
}

fn chain_label(points: &[String], lo: usize, hi: usize) -> String {
    format!("[{},{}]", points[lo], points[hi])
}

/// All nonempty intervals `[a, b]` of a chain given in increasing order.
pub fn chain_intervals(points: &[String]) -> Vec<Event> {
    let m = points.len();
    let mut out = Vec::new();
    for lo in 0..m {
        for hi in lo..m {
            out.push(Event::new(chain_label(points, lo, hi), (lo..=hi).collect()));
        }
    }
    out
}

/// All nonempty upward-closed sets of a chain.
pub fn chain_uprays(points: &[String]) -> Vec<Event> {
    let m = points.len();
    (0..m).map(|lo| Event::new(chain_label(points, lo, m - 1), (lo..m).collect())).collect()
}

/// All nonempty downward-closed sets of a chain.
pub fn chain_downrays(points: &[String]) -> Vec<Event> {
    (0..points.len())
        .map(|hi| Event::new(chain_label(points, 0, hi), (0..=hi).collect()))
        .collect()
}

/// A truncation model `{P(·|E)^{⊗n}}` with the partition `σ(E^n : E)`.
#[derive(Debug, Clone)]
pub struct TruncatedFamily {
    pub model: FiniteModel,
    /// `σ(E^n : E ∈ events)` on the `n`-fold point set.
    pub partition: Partition,
    /// For each parameter: (base parameter index, event index).
    pub origin: Vec<(usize, usize)>,
}

/// Builds the truncation model after checking ∩-stability of `events`.
pub fn truncated_family(m0: &FiniteModel, events: &[Event], n: usize, limits: &Limits) -> Result<TruncatedFamily> {
    if let Some((i, j)) = cap_stability_violation(events) {
        return Err(Error::NotCapStable(i, j));
    }
    truncated_family_unchecked(m0, events, n, limits)
}

/// Builds the truncation model without the ∩-stability check.
pub fn truncated_family_unchecked(
    m0: &FiniteModel,
    events: &[Event],
    n: usize,
    limits: &Limits,
) -> Result<TruncatedFamily> {
    if n == 0 {
        return Err(Error::InvalidInput("power exponent must be at least 1".into()));
    }
    for e in events {
        if let Some(&x) = e.points.iter().find(|&&x| x >= m0.num_points()) {
            return Err(Error::InvalidInput(format!("event `{}` names point {x} out of range", e.label)));
        }
    }
    let power = power_model(m0, n, limits)?;
    let tuples = power_tuples(m0.num_points(), n);
    let masks: Vec<Vec<bool>> = events.iter().map(|e| e.indicator(m0.num_points())).collect();
    let mut params = Vec::new();
    let mut prob = Vec::new();
    let mut origin = Vec::new();
    for theta in 0..m0.num_params() {
        for (ei, (e, mask)) in events.iter().zip(&masks).enumerate() {
            if m0.event_mass(theta, mask).is_zero() {
                continue;
            }
            let inside: Vec<Rational> = tuples
                .iter()
                .map(|t| {
                    let all_in = t.iter().all(|&x| mask[x]);
                    Rational::from_integer(i64::from(all_in).into())
                })
                .collect();
            let total = power.expectation(theta, &inside);
            params.push(ParamLabel::pair(&m0.params()[theta], &ParamLabel::atom(e.label.clone())));
            prob.push(power.row(theta).iter().zip(&inside).map(|(p, w)| p * w / &total).collect());
            origin.push((theta, ei));
        }
    }
    if params.is_empty() {
        return Err(Error::EmptyModel("truncation leaves no parameter"));
    }
    let model = FiniteModel::new(power.points().to_vec(), params, prob)?;
    let partition = events_power_partition(&masks, &tuples);
    Ok(TruncatedFamily { model, partition, origin })
}

fn events_power_partition(masks: &[Vec<bool>], tuples: &[Vec<usize>]) -> Partition {
    let labels: Vec<Vec<bool>> = tuples
        .iter()
        .map(|t| masks.iter().map(|mask| t.iter().all(|&x| mask[x])).collect())
        .collect();
    Partition::from_labels(&labels)
}

/// `σ(E^n : E ∈ events)` on the `n`-fold power of an `m`-point set.
pub fn events_partition(events: &[Event], m: usize, n: usize) -> Partition {
    let masks: Vec<Vec<bool>> = events.iter().map(|e| e.indicator(m)).collect();
    events_power_partition(&masks, &power_tuples(m, n))
}
