//! Verdicts and witnesses returned by every decision procedure.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::FiniteModel;
use crate::rational::{format_rational, serde_str, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// The property holds because its premises do not apply.
    Vacuous,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Vacuous => "vacuous",
        })
    }
}

/// A concrete, independently re-checkable certificate for a failed property.
/// Indices refer to points, blocks and parameters of the model the check ran on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    /// A point-indexed function, e.g. a nonzero zero-mean `h`.
    Function {
        #[serde(with = "serde_str::vec")]
        values: Vec<Rational>,
    },
    /// `P_theta({point}) P_other(block) != P_other({point}) P_theta(block)`.
    Sufficiency { point: usize, block: usize, theta: usize, other: usize },
    /// `P_theta(block) != P_other(block)`.
    Ancillarity { block: usize, theta: usize, other: usize },
    /// `P_theta(first ∩ second) != P_theta(first) P_theta(second)`.
    Independence { first: usize, second: usize, theta: usize },
    /// `point` is charged by `theta` but not by `other`.
    Support { point: usize, theta: usize, other: usize },
    /// Two points that should (or should not) share a block.
    PointPair { first: usize, second: usize },
    /// A set of points.
    Event { points: Vec<usize> },
    /// Connected components of a parameter graph.
    Components { components: Vec<Vec<usize>> },
    /// Where a model invariant fails.
    Location { param: Option<usize>, point: Option<usize> },
}

fn join_usize(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Function { values } => {
                let parts: Vec<String> = values.iter().map(format_rational).collect();
                write!(f, "h = [{}]", parts.join(", "))
            }
            Witness::Sufficiency { point, block, theta, other } => write!(
                f,
                "conditional law differs at point {point} in block {block} between params {theta} and {other}"
            ),
            Witness::Ancillarity { block, theta, other } => {
                write!(f, "mass of block {block} differs between params {theta} and {other}")
            }
            Witness::Independence { first, second, theta } => {
                write!(f, "blocks {first} and {second} are dependent under param {theta}")
            }
            Witness::Support { point, theta, other } => {
                write!(f, "point {point} is charged by param {theta} but not by param {other}")
            }
            Witness::PointPair { first, second } => write!(f, "points {first} and {second}"),
            Witness::Event { points } => write!(f, "event {{{}}}", join_usize(points)),
            Witness::Components { components } => {
                let parts: Vec<String> =
                    components.iter().map(|c| format!("{{{}}}", join_usize(c))).collect();
                write!(f, "components {}", parts.join(" "))
            }
            Witness::Location { param, point } => match (param, point) {
                (Some(t), Some(x)) => write!(f, "param {t}, point {x}"),
                (Some(t), None) => write!(f, "param {t}"),
                (None, Some(x)) => write!(f, "point {x}"),
                (None, None) => write!(f, "model"),
            },
        }
    }
}

impl Witness {
    pub fn function(values: Vec<Rational>) -> Self {
        Witness::Function { values }
    }

    /// Like `Display`, but names points and parameters by their labels.
    pub fn describe(&self, m: &FiniteModel) -> String {
        let pt = |x: &usize| m.points().get(*x).cloned().unwrap_or_else(|| x.to_string());
        let pm = |t: &usize| m.params().get(*t).map(ToString::to_string).unwrap_or_else(|| t.to_string());
        match self {
            Witness::Function { values } if values.len() == m.num_points() => {
                let parts: Vec<String> = m
                    .points()
                    .iter()
                    .zip(values)
                    .map(|(p, v)| format!("{p}: {}", format_rational(v)))
                    .collect();
                format!("h = {{{}}}", parts.join(", "))
            }
            Witness::Sufficiency { point, block, theta, other } => format!(
                "conditional law differs at point {} in block {block} between params {} and {}",
                pt(point),
                pm(theta),
                pm(other)
            ),
            Witness::Ancillarity { block, theta, other } => {
                format!("mass of block {block} differs between params {} and {}", pm(theta), pm(other))
            }
            Witness::Independence { first, second, theta } => {
                format!("blocks {first} and {second} are dependent under param {}", pm(theta))
            }
            Witness::Support { point, theta, other } => format!(
                "point {} is charged by param {} but not by param {}",
                pt(point),
                pm(theta),
                pm(other)
            ),
            Witness::PointPair { first, second } => format!("points {} and {}", pt(first), pt(second)),
            Witness::Event { points } => {
                format!("event {{{}}}", points.iter().map(pt).collect::<Vec<_>>().join(","))
            }
            Witness::Components { components } => {
                let parts: Vec<String> = components
                    .iter()
                    .map(|c| format!("{{{}}}", c.iter().map(pm).collect::<Vec<_>>().join(", ")))
                    .collect();
                format!("components {}", parts.join(" "))
            }
            other => other.to_string(),
        }
    }
}

/// Outcome of one decision procedure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub property: String,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn pass(property: impl Into<String>) -> Self {
        CheckReport { property: property.into(), verdict: Verdict::Pass, witness: None, notes: Vec::new() }
    }

    pub fn fail(property: impl Into<String>, witness: Witness) -> Self {
        CheckReport {
            property: property.into(),
            verdict: Verdict::Fail,
            witness: Some(witness),
            notes: Vec::new(),
        }
    }

    pub fn vacuous(property: impl Into<String>) -> Self {
        CheckReport { property: property.into(), verdict: Verdict::Vacuous, witness: None, notes: Vec::new() }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn renamed(mut self, property: impl Into<String>) -> Self {
        self.property = property.into();
        self
    }

    /// Verdict is `Pass`.
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Verdict is not `Fail`; vacuous truth counts as holding.
    pub fn holds(&self) -> bool {
        self.verdict != Verdict::Fail
    }

    pub fn failed(&self) -> bool {
        self.verdict == Verdict::Fail
    }

    /// One-line human rendering, with labels when a model is given.
    pub fn summary(&self, model: Option<&FiniteModel>) -> String {
        let mut line = format!("{}: {}", self.property, self.verdict);
        if let Some(w) = &self.witness {
            let text = model.map_or_else(|| w.to_string(), |m| w.describe(m));
            line.push_str(&format!(" ({text})"));
        }
        line
    }
}
