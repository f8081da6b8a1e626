//! Exact encodings of four finite counterexamples with expected reports.
//!
//! Each entry is a JSON document listing rows: an operation, its arguments
//! and the expected verdict, witness or status. Replaying a row recomputes
//! it and compares the renderings byte for byte.

use std::collections::btree_map::{BTreeMap, Entry};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checks;
use crate::error::{Error, Result};
use crate::format::LoadedModel;
use crate::model::Limits;
use crate::ops::{self, Property, VerifyArgs};
use crate::optimal;
use crate::report::Verdict;
use crate::verify::Status;

pub const IDS: [&str; 4] = ["CE52", "CE53", "CE54", "CE55"];

/// Directory name used when rendering rows as command lines.
pub const DIR: &str = "registry";

const ENTRIES: [(&str, &str); 4] = [
    ("CE52", include_str!("../../../registry/ce52.json")),
    ("CE53", include_str!("../../../registry/ce53.json")),
    ("CE54", include_str!("../../../registry/ce54.json")),
    ("CE55", include_str!("../../../registry/ce55.json")),
];

const MODEL_FILES: [(&str, &str); 8] = [
    ("ce52.model", include_str!("../../../registry/ce52.model")),
    ("ce53.model", include_str!("../../../registry/ce53.model")),
    ("ce53-q.model", include_str!("../../../registry/ce53-q.model")),
    ("ce53-r.model", include_str!("../../../registry/ce53-r.model")),
    ("ce54.model", include_str!("../../../registry/ce54.model")),
    ("ce54-q.model", include_str!("../../../registry/ce54-q.model")),
    ("ce54-r.model", include_str!("../../../registry/ce54-r.model")),
    ("ce55.model", include_str!("../../../registry/ce55.model")),
];

/// Text of a shipped model file.
pub fn model_file(name: &str) -> Option<&'static str> {
    MODEL_FILES.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn model_files() -> impl Iterator<Item = (&'static str, &'static str)> {
    MODEL_FILES.iter().copied()
}

fn all_sub() -> String {
    "all".into()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Row {
    Check {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model: Option<String>,
        property: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        partition: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        other: Option<String>,
        #[serde(default = "all_sub")]
        sub: String,
        verdict: Verdict,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        witness: Option<String>,
    },
    Minimal {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model: Option<String>,
        #[serde(default = "all_sub")]
        sub: String,
        partition: String,
    },
    OptimalSigma {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model: Option<String>,
        #[serde(default = "all_sub")]
        sub: String,
        partition: String,
    },
    Verify {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r_model: Option<String>,
        theorem: String,
        #[serde(default)]
        args: VerifyArgs,
        status: Status,
        #[serde(default)]
        failing: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        witness: Option<String>,
    },
}

fn render_check(verdict: Verdict, witness: Option<&str>) -> String {
    match witness {
        Some(w) => format!("verdict {verdict}; witness {w}"),
        None => format!("verdict {verdict}"),
    }
}

fn render_verify(status: Status, failing: &[String], witness: Option<&str>) -> String {
    let mut s = format!("status {}; failing [{}]", status.as_str(), failing.join(", "));
    if let Some(w) = witness {
        s.push_str(&format!("; witness {w}"));
    }
    s
}

impl Row {
    fn model_name(&self) -> Option<&str> {
        match self {
            Row::Check { model, .. }
            | Row::Minimal { model, .. }
            | Row::OptimalSigma { model, .. }
            | Row::Verify { model, .. } => model.as_deref(),
        }
    }

    /// Short description naming the operation and its arguments.
    pub fn describe(&self) -> String {
        match self {
            Row::Check { property, partition, other, sub, .. } => {
                let parts: Vec<&str> = partition.iter().chain(other).map(String::as_str).collect();
                if parts.is_empty() {
                    format!("check {property} on {sub}")
                } else {
                    format!("check {property} of {} on {sub}", parts.join(" vs "))
                }
            }
            Row::Minimal { sub, .. } => format!("minimal-sufficient partition on {sub}"),
            Row::OptimalSigma { sub, .. } => format!("optimal σ-algebra on {sub}"),
            Row::Verify { theorem, args, .. } => {
                let flags = args.to_flags();
                if flags.is_empty() {
                    format!("verify {theorem}")
                } else {
                    format!("verify {theorem} {}", flags.join(" "))
                }
            }
        }
    }

    /// The expected result, rendered as replay renders the actual one.
    pub fn expected(&self) -> String {
        match self {
            Row::Check { verdict, witness, .. } => render_check(*verdict, witness.as_deref()),
            Row::Minimal { partition, .. } | Row::OptimalSigma { partition, .. } => format!("partition {partition}"),
            Row::Verify { status, failing, witness, .. } => render_verify(*status, failing, witness.as_deref()),
        }
    }

    /// Exit code the command-line rendering of this row should produce.
    pub fn expected_exit(&self) -> i32 {
        match self {
            Row::Check { verdict: Verdict::Fail, .. } => 1,
            Row::Check { .. } | Row::Minimal { .. } | Row::OptimalSigma { .. } => 0,
            Row::Verify { status, .. } => status.exit_code(),
        }
    }

    /// Arguments of the equivalent command-line invocation.
    pub fn cli_args(&self, default_model: &str) -> Vec<String> {
        let path = |m: &Option<String>| format!("{DIR}/{}", m.as_deref().unwrap_or(default_model));
        let mut out: Vec<String> = Vec::new();
        match self {
            Row::Check { model, property, partition, other, sub, .. } => {
                out.extend(["check".into(), "--model".into(), path(model), "--property".into(), property.clone()]);
                if let Some(p) = partition {
                    out.extend(["--partition".into(), p.clone()]);
                }
                if let Some(o) = other {
                    out.extend(["--other".into(), o.clone()]);
                }
                out.extend(["--sub".into(), sub.clone()]);
            }
            Row::Minimal { model, sub, .. } => {
                out.extend(["minimal".into(), "--model".into(), path(model), "--sub".into(), sub.clone()]);
            }
            Row::OptimalSigma { model, sub, .. } => {
                out.extend(["optimal-sigma".into(), "--model".into(), path(model), "--sub".into(), sub.clone()]);
            }
            Row::Verify { model, r_model, theorem, args, .. } => {
                out.extend(["verify".into(), theorem.clone(), "--model".into(), path(model)]);
                if r_model.is_some() {
                    out.extend(["--r-model".into(), path(r_model)]);
                }
                out.extend(args.to_flags());
            }
        }
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryDocument {
    id: String,
    title: String,
    model: String,
    #[serde(default)]
    notes: Vec<String>,
    rows: Vec<Row>,
}

#[derive(Debug, Clone)]
pub struct RegistryEntry {
    pub id: String,
    pub title: String,
    /// File name of the model rows use by default.
    pub model: String,
    pub notes: Vec<String>,
    /// Every model file the rows refer to, by file name.
    pub models: BTreeMap<String, LoadedModel>,
    pub rows: Vec<Row>,
}

/// Outcome of replaying one row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowOutcome {
    pub entry: String,
    pub row: usize,
    pub description: String,
    pub expected: String,
    pub actual: String,
}

impl RowOutcome {
    pub fn ok(&self) -> bool {
        self.expected == self.actual
    }

    pub fn render(&self) -> String {
        if self.ok() {
            format!("ok   {} #{} {}: {}", self.entry, self.row, self.description, self.actual)
        } else {
            format!(
                "FAIL {} #{} {}\n  - expected: {}\n  + actual:   {}",
                self.entry, self.row, self.description, self.expected, self.actual
            )
        }
    }
}

fn parse_model(name: &str) -> Result<LoadedModel> {
    let text = model_file(name).ok_or_else(|| Error::Invariant(format!("registry model `{name}` is not shipped")))?;
    LoadedModel::parse(text)
}

/// Loads an entry by id, case-insensitively.
pub fn load(id: &str) -> Result<RegistryEntry> {
    let (_, text) = ENTRIES
        .iter()
        .find(|(k, _)| k.eq_ignore_ascii_case(id))
        .ok_or_else(|| Error::UnknownEntry(id.to_string()))?;
    let doc: EntryDocument =
        serde_json::from_str(text).map_err(|e| Error::Invariant(format!("registry entry {id}: {e}")))?;
    let mut models = BTreeMap::new();
    let mut names = vec![doc.model.clone()];
    for row in &doc.rows {
        names.extend(row.model_name().map(str::to_string));
        if let Row::Verify { r_model: Some(r), .. } = row {
            names.push(r.clone());
        }
    }
    for name in names {
        if let Entry::Vacant(slot) = models.entry(name) {
            let loaded = parse_model(slot.key())?;
            slot.insert(loaded);
        }
    }
    Ok(RegistryEntry { id: doc.id, title: doc.title, model: doc.model, notes: doc.notes, models, rows: doc.rows })
}

impl RegistryEntry {
    fn model(&self, name: Option<&str>) -> &LoadedModel {
        &self.models[name.unwrap_or(&self.model)]
    }

    fn compute(&self, row: &Row, limits: &Limits) -> Result<String> {
        let loaded = self.model(row.model_name());
        match row {
            Row::Check { property, partition, other, sub, .. } => {
                let prop: Property = property.parse()?;
                let report = ops::run_check(loaded, prop, partition.as_deref(), other.as_deref(), sub, limits)?;
                let w = report.witness.as_ref().map(ToString::to_string);
                Ok(render_check(report.verdict, w.as_deref()))
            }
            Row::Minimal { sub, .. } => {
                let s = loaded.model.select(sub)?;
                Ok(format!("partition {}", checks::minimal_sufficient_partition(&loaded.model, &s)))
            }
            Row::OptimalSigma { sub, .. } => {
                let s = loaded.model.select(sub)?;
                Ok(format!("partition {}", optimal::optimal_sigma_algebra_with(&loaded.model, &s, limits)?))
            }
            Row::Verify { r_model, theorem, args, .. } => {
                let r = r_model.as_deref().map(|n| self.model(Some(n)));
                let report = ops::run_verify(theorem, loaded, r, args, limits)?;
                let failing: Vec<String> = report.failed_hypotheses().into_iter().map(str::to_string).collect();
                let w = report.conclusion_result.witness.as_ref().map(ToString::to_string);
                Ok(render_verify(report.status, &failing, w.as_deref()))
            }
        }
    }

    /// Replays every row; outcomes come back in row order.
    pub fn replay(&self) -> Vec<RowOutcome> {
        let limits = Limits::default();
        self.rows
            .par_iter()
            .enumerate()
            .map(|(i, row)| RowOutcome {
                entry: self.id.clone(),
                row: i + 1,
                description: row.describe(),
                expected: row.expected(),
                actual: self.compute(row, &limits).unwrap_or_else(|e| format!("error: {e}")),
            })
            .collect()
    }

    /// Command lines equivalent to the rows, with their expected exit codes.
    pub fn cli_scripts(&self) -> Vec<(Vec<String>, i32)> {
        self.rows.iter().map(|r| (r.cli_args(&self.model), r.expected_exit())).collect()
    }
}

/// Replays every row of every entry.
pub fn replay_all() -> Result<Vec<RowOutcome>> {
    let mut out = Vec::new();
    for id in IDS {
        out.extend(load(id)?.replay());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct;
    use crate::rational::ratio;

    #[test]
    fn every_row_replays() {
        let outcomes = replay_all().unwrap();
        let failures: Vec<String> = outcomes.iter().filter(|o| !o.ok()).map(RowOutcome::render).collect();
        assert!(failures.is_empty(), "{}", failures.join("\n"));
        assert!(outcomes.len() > 30);
    }

    #[test]
    fn ce55_matches_printed_densities() {
        let e = load("ce55").unwrap();
        let m = &e.models["ce55.model"].model;
        assert_eq!(m.row(3), &[ratio(1, 6), ratio(2, 6), ratio(3, 6)]);
    }

    #[test]
    fn coupled_products_match_shipped_files() {
        for id in ["CE53", "CE54"] {
            let e = load(id).unwrap();
            let lower = id.to_lowercase();
            let q = &e.models[&format!("{lower}-q.model")].model;
            let r = &e.models[&format!("{lower}-r.model")].model;
            let p = crate::verify::cks_product(q, r, &Limits::default()).unwrap();
            assert_eq!(&p, &e.models[&format!("{lower}.model")].model, "{id}");
        }
    }

    #[test]
    fn mutated_mass_is_reported_by_row() {
        let mut e = load("CE55").unwrap();
        let m = &e.models["ce55.model"].model;
        let mut rows = m.rows().to_vec();
        rows[3] = vec![ratio(1, 6), ratio(1, 6), ratio(2, 3)];
        let mutated = crate::model::FiniteModel::new(m.points().to_vec(), m.params().to_vec(), rows).unwrap();
        e.models.get_mut("ce55.model").unwrap().model = mutated;
        let bad: Vec<RowOutcome> = e.replay().into_iter().filter(|o| !o.ok()).collect();
        assert!(!bad.is_empty());
        assert!(bad.iter().any(|o| o.description == "check sufficient of C1+C2 on all"));
        assert!(bad[0].render().starts_with("FAIL CE55 #"));
    }

    #[test]
    fn shipped_files_are_in_canonical_form() {
        for (name, text) in model_files() {
            assert_eq!(LoadedModel::parse(text).unwrap().to_json(), text, "{name}");
        }
        let _ = construct::coordinate_partitions(2, 2);
    }

    #[test]
    fn unknown_id_is_an_error() {
        assert!(matches!(load("CE51"), Err(Error::UnknownEntry(_))));
    }
}
