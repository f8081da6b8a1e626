//! Finite statistical models with exact masses.

use std::collections::HashSet;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::rational::{format_rational, Rational};
use crate::report::{CheckReport, Witness};

/// Size guards. Desk-scale defaults; override through [`Limits::from_env`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Largest point set any constructor may produce.
    pub max_points: usize,
    /// Largest point set for subset enumeration of the optimal σ-algebra.
    pub max_enumeration_points: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_points: 4096, max_enumeration_points: 16 }
    }
}

pub const ENV_MAX_POINTS: &str = "FINCOMPLETE_MAX_POINTS";
pub const ENV_ENUM_GUARD: &str = "FINCOMPLETE_ENUM_GUARD";

impl Limits {
    /// Defaults overridden by `FINCOMPLETE_MAX_POINTS` / `FINCOMPLETE_ENUM_GUARD`.
    pub fn from_env() -> Self {
        let read = |key: &str| std::env::var(key).ok().and_then(|v| v.trim().parse().ok());
        let d = Limits::default();
        Limits {
            max_points: read(ENV_MAX_POINTS).unwrap_or(d.max_points),
            max_enumeration_points: read(ENV_ENUM_GUARD).unwrap_or(d.max_enumeration_points),
        }
    }

    pub fn check_points(&self, what: &'static str, size: usize) -> Result<()> {
        if size > self.max_points {
            return Err(Error::SizeGuard { what, size, limit: self.max_points });
        }
        Ok(())
    }
}

/// A parameter label: an opaque atom or a tuple for product parameter spaces.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamLabel {
    Atom(String),
    Tuple(Vec<String>),
}

impl ParamLabel {
    pub fn atom(s: impl Into<String>) -> Self {
        ParamLabel::Atom(s.into())
    }

    pub fn tuple<S: Into<String>>(parts: impl IntoIterator<Item = S>) -> Self {
        ParamLabel::Tuple(parts.into_iter().map(Into::into).collect())
    }

    /// Coordinates of the label; an atom is a one-element list.
    pub fn coords(&self) -> Vec<&str> {
        match self {
            ParamLabel::Atom(a) => vec![a.as_str()],
            ParamLabel::Tuple(t) => t.iter().map(String::as_str).collect(),
        }
    }

    /// 1-based coordinate of a tuple label.
    pub fn coord(&self, i: usize) -> Option<&str> {
        match self {
            ParamLabel::Tuple(t) if i >= 1 => t.get(i - 1).map(String::as_str),
            _ => None,
        }
    }

    pub fn arity(&self) -> Option<usize> {
        match self {
            ParamLabel::Tuple(t) => Some(t.len()),
            ParamLabel::Atom(_) => None,
        }
    }

    /// Concatenates coordinates; atoms count as one coordinate.
    pub fn pair(a: &ParamLabel, b: &ParamLabel) -> ParamLabel {
        let mut parts: Vec<String> = a.coords().into_iter().map(str::to_string).collect();
        parts.extend(b.coords().into_iter().map(str::to_string));
        ParamLabel::Tuple(parts)
    }
}

impl fmt::Display for ParamLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamLabel::Atom(a) => write!(f, "{a}"),
            ParamLabel::Tuple(t) => write!(f, "({})", t.join(",")),
        }
    }
}

/// A non-empty set of parameter indices, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Submodel(Vec<usize>);

impl Submodel {
    pub fn new(mut indices: Vec<usize>, num_params: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::BadSubmodel("empty parameter set".into()));
        }
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::BadSubmodel(format!("parameter {} listed twice", w[0])));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= num_params) {
            return Err(Error::BadSubmodel(format!(
                "parameter index {bad} out of range (model has {num_params})"
            )));
        }
        Ok(Submodel(indices))
    }

    pub fn all(num_params: usize) -> Self {
        assert!(num_params > 0, "models have at least one parameter");
        Submodel((0..num_params).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, theta: usize) -> bool {
        self.0.binary_search(&theta).is_ok()
    }
}

/// A finite family of distributions on a common finite point set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteModel {
    points: Vec<String>,
    params: Vec<ParamLabel>,
    prob: Vec<Vec<Rational>>,
}

/// Checks every model invariant, reporting the first violation.
pub fn validate_model(points: &[String], params: &[ParamLabel], prob: &[Vec<Rational>]) -> CheckReport {
    let fail = |msg: String, param: Option<usize>, point: Option<usize>| {
        CheckReport::fail("valid-model", Witness::Location { param, point }).with_note(msg)
    };
    if points.is_empty() {
        return fail("model has no points".into(), None, None);
    }
    if params.is_empty() {
        return fail("model has no parameters".into(), None, None);
    }
    let mut seen = HashSet::new();
    for (x, p) in points.iter().enumerate() {
        if !seen.insert(p) {
            return fail(format!("duplicate point label `{p}` at point {x}"), None, Some(x));
        }
    }
    let mut seen = HashSet::new();
    for (t, p) in params.iter().enumerate() {
        if !seen.insert(p) {
            return fail(format!("duplicate parameter label `{p}` at param {t}"), Some(t), None);
        }
    }
    if prob.len() != params.len() {
        return fail(
            format!("{} probability rows for {} parameters", prob.len(), params.len()),
            None,
            None,
        );
    }
    for (t, row) in prob.iter().enumerate() {
        if row.len() != points.len() {
            return fail(
                format!("row length {} ≠ {} points at param {t}", row.len(), points.len()),
                Some(t),
                None,
            );
        }
        if let Some(x) = row.iter().position(|r| r < &Rational::zero()) {
            return fail(format!("negative mass at param {t}, point {x}"), Some(t), Some(x));
        }
        let total: Rational = row.iter().sum();
        if !total.is_one() {
            return fail(
                format!("row sum ≠ 1 at param {t} (sum is {})", format_rational(&total)),
                Some(t),
                None,
            );
        }
    }
    CheckReport::pass("valid-model")
}

impl FiniteModel {
    pub fn new(points: Vec<String>, params: Vec<ParamLabel>, prob: Vec<Vec<Rational>>) -> Result<Self> {
        let report = validate_model(&points, &params, &prob);
        if !report.passed() {
            return Err(Error::InvalidModel(report.notes.join("; ")));
        }
        Ok(FiniteModel { points, params, prob })
    }

    /// Builds a model from labels given as plain strings (atoms).
    pub fn from_rows<P, Q>(points: &[P], params: &[Q], prob: Vec<Vec<Rational>>) -> Result<Self>
    where
        P: AsRef<str>,
        Q: AsRef<str>,
    {
        Self::new(
            points.iter().map(|p| p.as_ref().to_string()).collect(),
            params.iter().map(|p| ParamLabel::atom(p.as_ref())).collect(),
            prob,
        )
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn params(&self) -> &[ParamLabel] {
        &self.params
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.prob
    }

    pub fn row(&self, theta: usize) -> &[Rational] {
        &self.prob[theta]
    }

    pub fn mass(&self, theta: usize, x: usize) -> &Rational {
        &self.prob[theta][x]
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn all(&self) -> Submodel {
        Submodel::all(self.num_params())
    }

    pub fn point_index(&self, label: &str) -> Option<usize> {
        self.points.iter().position(|p| p == label)
    }

    pub fn param_index(&self, label: &ParamLabel) -> Option<usize> {
        self.params.iter().position(|p| p == label)
    }

    pub fn support(&self, theta: usize) -> Vec<bool> {
        self.prob[theta].iter().map(|r| !r.is_zero()).collect()
    }

    /// Points charged by at least one parameter of `sub`.
    pub fn support_union(&self, sub: &Submodel) -> Vec<bool> {
        let mut out = vec![false; self.num_points()];
        for &t in sub.indices() {
            for (o, r) in out.iter_mut().zip(&self.prob[t]) {
                *o |= !r.is_zero();
            }
        }
        out
    }

    pub fn block_masses(&self, c: &Partition, theta: usize) -> Vec<Rational> {
        assert_eq!(c.len(), self.num_points(), "partition/model size mismatch");
        let mut out = vec![Rational::zero(); c.num_blocks()];
        for (x, r) in self.prob[theta].iter().enumerate() {
            if !r.is_zero() {
                out[c.block_of(x)] += r;
            }
        }
        out
    }

    pub fn expectation(&self, theta: usize, values: &[Rational]) -> Rational {
        assert_eq!(values.len(), self.num_points(), "function/model size mismatch");
        self.prob[theta]
            .iter()
            .zip(values)
            .filter(|(p, _)| !p.is_zero())
            .map(|(p, v)| p * v)
            .sum()
    }

    pub fn event_mass(&self, theta: usize, event: &[bool]) -> Rational {
        self.prob[theta]
            .iter()
            .zip(event)
            .filter(|(_, &e)| e)
            .map(|(p, _)| p.clone())
            .sum()
    }

    /// Params whose labels are tuples of arity `n`, or an error.
    pub fn require_tuples(&self, n: usize) -> Result<()> {
        if self.params.iter().all(|p| p.arity() == Some(n)) {
            Ok(())
        } else {
            Err(Error::NotTupleParams(n))
        }
    }

    /// All params whose `coord`-th (1-based) coordinate equals `value`.
    pub fn section(&self, coord: usize, value: &str) -> Result<Submodel> {
        if self.params.iter().any(|p| p.coord(coord).is_none()) {
            return Err(Error::BadSubmodel(format!(
                "coordinate {coord} does not exist on every parameter label"
            )));
        }
        let idx: Vec<usize> = (0..self.num_params())
            .filter(|&t| self.params[t].coord(coord) == Some(value))
            .collect();
        if idx.is_empty() {
            return Err(Error::BadSubmodel(format!("no parameter has theta{coord} = {value}")));
        }
        Submodel::new(idx, self.num_params())
    }

    /// The sections obtained by fixing coordinate `coord`, one per distinct
    /// value in order of first appearance.
    pub fn sections(&self, coord: usize) -> Result<Vec<(String, Submodel)>> {
        let mut values: Vec<&str> = Vec::new();
        for p in &self.params {
            let v = p.coord(coord).ok_or_else(|| {
                Error::BadSubmodel(format!("coordinate {coord} does not exist on label {p}"))
            })?;
            if !values.contains(&v) {
                values.push(v);
            }
        }
        values
            .into_iter()
            .map(|v| Ok((format!("theta{coord}={v}"), self.section(coord, v)?)))
            .collect()
    }

    /// Parses a submodel selector: `all`, `theta<i>=<value>` or `params=0,2,3`.
    pub fn select(&self, selector: &str) -> Result<Submodel> {
        let s = selector.trim();
        if s.is_empty() || s == "all" {
            return Ok(self.all());
        }
        if let Some(list) = s.strip_prefix("params=") {
            let idx = list
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::BadSubmodel(format!("bad parameter index `{t}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            return Submodel::new(idx, self.num_params());
        }
        if let Some(rest) = s.strip_prefix("theta") {
            if let Some((coord, value)) = rest.split_once('=') {
                let coord: usize = coord
                    .trim()
                    .parse()
                    .map_err(|_| Error::BadSubmodel(format!("bad coordinate in `{s}`")))?;
                return self.section(coord, value.trim());
            }
        }
        Err(Error::BadSubmodel(format!("unrecognized selector `{s}`")))
    }

    /// The model restricted to the parameters of `sub`, relabeled in order.
    pub fn restrict_params(&self, sub: &Submodel) -> FiniteModel {
        FiniteModel {
            points: self.points.clone(),
            params: sub.indices().iter().map(|&t| self.params[t].clone()).collect(),
            prob: sub.indices().iter().map(|&t| self.prob[t].clone()).collect(),
        }
    }

    /// Human-readable rendering of a partition using point labels.
    pub fn describe_partition(&self, c: &Partition) -> String {
        c.blocks()
            .iter()
            .map(|b| {
                let labels: Vec<&str> = b.iter().map(|&x| self.points[x].as_str()).collect();
                format!("{{{}}}", labels.join(","))
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub(crate) fn from_parts_unchecked(
        points: Vec<String>,
        params: Vec<ParamLabel>,
        prob: Vec<Vec<Rational>>,
    ) -> Self {
        debug_assert!(validate_model(&points, &params, &prob).passed());
        FiniteModel { points, params, prob }
    }
}

/// A labeled family of submodels covering a target submodel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exhaustion {
    pub label: String,
    pub pieces: Vec<(String, Submodel)>,
}

impl Exhaustion {
    pub fn new(label: impl Into<String>, pieces: Vec<(String, Submodel)>) -> Self {
        Exhaustion { label: label.into(), pieces }
    }

    /// The one-piece exhaustion by the full model.
    pub fn single(m: &FiniteModel) -> Self {
        Exhaustion::new("full", vec![("all".into(), m.all())])
    }

    /// Sections fixing tuple coordinate `coord` (1-based), one piece per value.
    pub fn sections(m: &FiniteModel, coord: usize) -> Result<Self> {
        Ok(Exhaustion::new(format!("theta{coord}-sections"), m.sections(coord)?))
    }

    /// Groups parameters by a key, one piece per key in order of first appearance.
    pub fn group_by<F>(label: impl Into<String>, m: &FiniteModel, key: F) -> Self
    where
        F: Fn(usize, &ParamLabel) -> String,
    {
        let mut pieces: Vec<(String, Vec<usize>)> = Vec::new();
        for (t, p) in m.params().iter().enumerate() {
            let k = key(t, p);
            match pieces.iter_mut().find(|(name, _)| *name == k) {
                Some((_, idx)) => idx.push(t),
                None => pieces.push((k, vec![t])),
            }
        }
        let pieces = pieces.into_iter().map(|(k, idx)| (k, Submodel(idx))).collect();
        Exhaustion::new(label, pieces)
    }

    /// Checks that every piece is a nonempty subset of `target` and that the
    /// pieces cover it.
    pub fn validate(&self, m: &FiniteModel, target: &Submodel) -> Result<()> {
        let err = |reason: String| Error::Exhaustion { label: self.label.clone(), reason };
        if self.pieces.is_empty() {
            return Err(err("no pieces".into()));
        }
        let mut covered = vec![false; m.num_params()];
        for (name, piece) in &self.pieces {
            if piece.is_empty() {
                return Err(err(format!("piece `{name}` is empty")));
            }
            for &t in piece.indices() {
                if t >= m.num_params() || !target.contains(t) {
                    return Err(err(format!("piece `{name}` contains parameter {t} outside the model")));
                }
                covered[t] = true;
            }
        }
        if let Some(&t) = target.indices().iter().find(|&&t| !covered[t]) {
            return Err(err(format!("parameter {t} is not covered by any piece")));
        }
        Ok(())
    }
}
