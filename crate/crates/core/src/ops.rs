//! Named operations shared by the command line and registry replay.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::checks;
use crate::construct;
use crate::error::{Error, Result};
use crate::format::LoadedModel;
use crate::model::{Exhaustion, Limits};
use crate::optimal;
use crate::partition::Partition;
use crate::report::CheckReport;
use crate::verify::{self, HomMode, SmithMode, TheoremReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Property {
    Complete,
    BoundedlyComplete,
    Sufficient,
    MinimalSufficient,
    Ancillary,
    Homogeneous,
    CompleteSufficient,
    Independent,
    Basu,
    ExistsCompleteSufficient,
}

impl Property {
    pub const ALL: [Property; 10] = [
        Property::Complete,
        Property::BoundedlyComplete,
        Property::Sufficient,
        Property::MinimalSufficient,
        Property::Ancillary,
        Property::Homogeneous,
        Property::CompleteSufficient,
        Property::Independent,
        Property::Basu,
        Property::ExistsCompleteSufficient,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Property::Complete => "complete",
            Property::BoundedlyComplete => "boundedly-complete",
            Property::Sufficient => "sufficient",
            Property::MinimalSufficient => "minimal-sufficient",
            Property::Ancillary => "ancillary",
            Property::Homogeneous => "homogeneous",
            Property::CompleteSufficient => "complete-sufficient",
            Property::Independent => "independent",
            Property::Basu => "basu",
            Property::ExistsCompleteSufficient => "exists-complete-sufficient",
        }
    }

    fn partitions_needed(self) -> usize {
        match self {
            Property::Homogeneous | Property::ExistsCompleteSufficient => 0,
            Property::Independent | Property::Basu => 2,
            _ => 1,
        }
    }
}

impl FromStr for Property {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Property::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown property `{s}`")))
    }
}

/// Runs one property check. `partition` and `other` are partition names
/// resolved against the model file.
pub fn run_check(
    loaded: &LoadedModel,
    property: Property,
    partition: Option<&str>,
    other: Option<&str>,
    sub: &str,
    limits: &Limits,
) -> Result<CheckReport> {
    let m = &loaded.model;
    let sub = m.select(sub)?;
    let need = |name: Option<&str>, flag: &str| -> Result<Partition> {
        let name = name.ok_or_else(|| {
            Error::InvalidInput(format!("property `{}` needs {flag}", property.as_str()))
        })?;
        loaded.partition(name)
    };
    let c = if property.partitions_needed() >= 1 { Some(need(partition, "a partition")?) } else { None };
    let c2 = if property.partitions_needed() == 2 { Some(need(other, "a second partition")?) } else { None };
    let (c, c2) = (c.as_ref(), c2.as_ref());
    Ok(match property {
        Property::Complete => checks::is_complete(c.unwrap(), m, &sub),
        Property::BoundedlyComplete => checks::is_boundedly_complete(c.unwrap(), m, &sub),
        Property::Sufficient => checks::is_sufficient(c.unwrap(), m, &sub),
        Property::MinimalSufficient => checks::is_minimal_sufficient(c.unwrap(), m, &sub),
        Property::Ancillary => checks::is_ancillary(c.unwrap(), m, &sub),
        Property::Homogeneous => checks::is_homogeneous(m, &sub),
        Property::CompleteSufficient => checks::is_complete_sufficient(c.unwrap(), m, &sub),
        Property::Independent => checks::are_independent(c.unwrap(), c2.unwrap(), m, &sub),
        Property::Basu => checks::basu_consistency(c.unwrap(), c2.unwrap(), m, &sub),
        Property::ExistsCompleteSufficient => {
            let (report, o) = optimal::exists_complete_sufficient(m, &sub, limits)?;
            report.with_note(format!("optimal σ-algebra {o}"))
        }
    })
}

/// Arguments of a theorem verification, mirroring the command-line flags.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyArgs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c2: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub partitions: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub exhaustions: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub weak: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub events: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimator: Option<String>,
}

impl VerifyArgs {
    /// Command-line flags, excluding `--model` and `--r-model`.
    pub fn to_flags(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut push = |flag: &str, v: &str| {
            out.push(flag.to_string());
            out.push(v.to_string());
        };
        if let Some(c) = &self.c1 {
            push("--c1", c);
        }
        if let Some(c) = &self.c2 {
            push("--c2", c);
        }
        for p in &self.partitions {
            push("--partition", p);
        }
        for e in &self.exhaustions {
            push("--exhaustion", e);
        }
        if let Some(m) = &self.mode {
            push("--mode", m);
        }
        if let Some(e) = &self.events {
            push("--events", e);
        }
        if let Some(n) = self.n {
            push("--n", &n.to_string());
        }
        if let Some(w) = &self.weight {
            push("--weight", w);
        }
        if let Some(g) = &self.estimator {
            push("--estimator", g);
        }
        if self.weak {
            out.push("--weak".into());
        }
        out
    }
}

pub const THEOREMS: [&str; 9] = [
    "main",
    "cor-two-blocks",
    "cks",
    "cks-rewrite",
    "hom-connected",
    "uniform-truncation",
    "unknown-truncation",
    "smith",
    "bondesson",
];

fn required<'a>(v: &'a Option<String>, flag: &str, theorem: &str) -> Result<&'a str> {
    v.as_deref().ok_or_else(|| Error::InvalidInput(format!("`{theorem}` needs --{flag}")))
}

fn paired_family(loaded: &LoadedModel, args: &VerifyArgs, theorem: &str) -> Result<Vec<(Partition, Exhaustion)>> {
    if args.partitions.is_empty() || args.partitions.len() != args.exhaustions.len() {
        return Err(Error::InvalidInput(format!(
            "`{theorem}` needs one --exhaustion per --partition, in the same order"
        )));
    }
    args.partitions
        .iter()
        .zip(&args.exhaustions)
        .map(|(p, e)| Ok((loaded.partition(p)?, loaded.exhaustion(e)?)))
        .collect()
}

/// A builtin partition of the `n`-fold power: `symmetric`, `minimal`,
/// `discrete` or `trivial`.
fn power_partition(base: &LoadedModel, name: &str, n: usize, limits: &Limits) -> Result<Partition> {
    let power = construct::power_model(&base.model, n, limits)?;
    if name == "symmetric" {
        return Ok(construct::power_statistic(base.model.num_points(), n, |t| {
            let mut s = t.to_vec();
            s.sort_unstable();
            s
        }));
    }
    LoadedModel::bare(power).partition(name)
}

/// Runs a theorem verifier by name.
pub fn run_verify(
    theorem: &str,
    loaded: &LoadedModel,
    r_model: Option<&LoadedModel>,
    args: &VerifyArgs,
    limits: &Limits,
) -> Result<TheoremReport> {
    let m = &loaded.model;
    match theorem {
        "main" => verify::verify_main(m, &paired_family(loaded, args, theorem)?),
        "cor-two-blocks" | "cks-rewrite" => {
            let c1 = loaded.partition(required(&args.c1, "c1", theorem)?)?;
            let c2 = loaded.partition(required(&args.c2, "c2", theorem)?)?;
            if theorem == "cor-two-blocks" {
                verify::verify_cor_two_blocks(m, &c1, &c2)
            } else {
                verify::verify_cks_rewrite(m, &c1, &c2)
            }
        }
        "cks" => {
            let r = r_model.ok_or_else(|| Error::InvalidInput("`cks` needs --r-model".into()))?;
            verify::verify_cks(m, &r.model, limits)
        }
        "hom-connected" => {
            let mode: HomMode = args.mode.as_deref().unwrap_or("sufficient").parse()?;
            verify::verify_hom_connected(m, &paired_family(loaded, args, theorem)?, mode, args.weak)
        }
        "uniform-truncation" | "unknown-truncation" => {
            let events = loaded.events(required(&args.events, "events", theorem)?)?;
            let n = args.n.ok_or_else(|| Error::InvalidInput(format!("`{theorem}` needs --n")))?;
            if theorem == "uniform-truncation" {
                verify::verify_uniform_truncation(m, &events, n, limits)
            } else {
                let name = args.partitions.first().map(String::as_str).unwrap_or("minimal");
                let c = power_partition(loaded, name, n, limits)?;
                verify::verify_unknown_truncation(m, &c, &events, n, limits)
            }
        }
        "smith" => {
            let c = loaded.partition(args.partitions.first().map(String::as_str).unwrap_or("minimal"))?;
            let q = loaded.function(required(&args.weight, "weight", theorem)?)?;
            let mode = match args.mode.as_deref().unwrap_or("sufficient") {
                "sufficient" => SmithMode::Sufficient,
                "complete-sufficient" => SmithMode::CompleteSufficient,
                other => return Err(Error::InvalidInput(format!("unknown mode `{other}`"))),
            };
            verify::verify_smith(m, &c, &q, mode)
        }
        "bondesson" => {
            let ex = loaded.exhaustion(args.exhaustions.first().map(String::as_str).unwrap_or("full"))?;
            let g = loaded.function(required(&args.estimator, "estimator", theorem)?)?;
            verify::verify_bondesson(m, &ex, &g, limits)
        }
        other => Err(Error::InvalidInput(format!(
            "unknown theorem `{other}`; expected one of {}",
            THEOREMS.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str = r#"{
        "points": ["(0,0)", "(0,1)", "(1,0)", "(1,1)"],
        "params": [["a", "x"], ["a", "y"], ["b", "x"], ["b", "y"]],
        "prob": [
            ["1/4", "1/4", "1/4", "1/4"],
            ["1/6", "1/3", "1/6", "1/3"],
            ["1/12", "1/12", "5/12", "5/12"],
            ["1/18", "1/9", "5/18", "5/9"]
        ],
        "partitions": {"X1": [0, 0, 1, 1], "X2": [0, 1, 0, 1]}
    }"#;

    #[test]
    fn properties_parse_and_dispatch() {
        for p in Property::ALL {
            assert_eq!(p.as_str().parse::<Property>().unwrap(), p);
        }
        let l = LoadedModel::parse(SQUARE).unwrap();
        let lim = Limits::default();
        let r = run_check(&l, Property::Independent, Some("X1"), Some("X2"), "all", &lim).unwrap();
        assert!(r.passed());
        assert!(run_check(&l, Property::Complete, None, None, "all", &lim).is_err());
        let r = run_check(&l, Property::Ancillary, Some("X1"), None, "theta1=a", &lim).unwrap();
        assert!(r.passed());
    }

    #[test]
    fn product_grid_verifies_by_name() {
        let l = LoadedModel::parse(SQUARE).unwrap();
        let args = VerifyArgs { c1: Some("X1".into()), c2: Some("X2".into()), ..Default::default() };
        let r = run_verify("cor-two-blocks", &l, None, &args, &Limits::default()).unwrap();
        assert_eq!(r.status, verify::Status::Verified);
        assert_eq!(args.to_flags(), vec!["--c1", "X1", "--c2", "X2"]);
        let main = VerifyArgs {
            partitions: vec!["X1".into(), "X2".into()],
            exhaustions: vec!["theta2-sections".into(), "theta1-sections".into()],
            ..Default::default()
        };
        assert_eq!(run_verify("main", &l, None, &main, &Limits::default()).unwrap().status, verify::Status::Verified);
        assert!(run_verify("nope", &l, None, &args, &Limits::default()).is_err());
    }
}
