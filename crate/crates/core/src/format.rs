//! Model files: a UTF-8 JSON document with exact rational entries.
//!
//! ```json
//! {
//!   "points": ["1", "2", "3"],
//!   "params": [["1", "1"], ["1", "2"]],
//!   "prob": [["1/3", "1/3", "1/3"], ["0", "0", "1"]],
//!   "partitions": { "C1": [0, 0, 1] },
//!   "functions": { "h": ["1", "-1/2", "0"] },
//!   "estimands": { "mean": ["2", "3"] },
//!   "events": { "E": [["1", "2"], ["2"]] },
//!   "exhaustions": { "rows": [{ "label": "a", "sub": "theta1=1" }] }
//! }
//! ```
//!
//! Entries of `prob`, `functions` and `estimands` are strings `"a/b"` or
//! integers. Decimal literals are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::construct::{self, Event};
use crate::error::{Error, Result};
use crate::function::{Estimand, RationalFunction};
use crate::model::{Exhaustion, FiniteModel, ParamLabel};
use crate::partition::Partition;
use crate::rational::{format_rational, parse_rational, Rational};

/// One exact entry: a string `"a/b"` or a JSON integer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell(pub Rational);

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(&self.0))
    }
}

impl<'de> Deserialize<'de> for Cell {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct CellVisitor;

        impl Visitor<'_> for CellVisitor {
            type Value = Cell;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a rational string \"a/b\" or an integer")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Cell, E> {
                parse_rational(v).map(Cell).map_err(|e| E::custom(format!("`{v}`: {e}")))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Cell, E> {
                Ok(Cell(Rational::from_integer(v.into())))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Cell, E> {
                Ok(Cell(Rational::from_integer(v.into())))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Cell, E> {
                Err(E::custom(format!("decimal literal {v} rejected; write an exact fraction \"a/b\"")))
            }
        }

        d.deserialize_any(CellVisitor)
    }
}

fn cells(v: Vec<Cell>) -> Vec<Rational> {
    v.into_iter().map(|c| c.0).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PieceSpec {
    pub label: String,
    /// A submodel selector: `all`, `theta<i>=<v>` or `params=0,2`.
    pub sub: String,
}

/// The raw document as written on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub points: Vec<String>,
    pub params: Vec<ParamLabel>,
    pub prob: Vec<Vec<Cell>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub partitions: BTreeMap<String, Vec<usize>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub functions: BTreeMap<String, Vec<Cell>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub estimands: BTreeMap<String, Vec<Cell>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub events: BTreeMap<String, Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub exhaustions: BTreeMap<String, Vec<PieceSpec>>,
}

/// A parsed model with its named objects resolved.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub model: FiniteModel,
    pub partitions: BTreeMap<String, Partition>,
    pub functions: BTreeMap<String, RationalFunction>,
    pub estimands: BTreeMap<String, Estimand>,
    pub events: BTreeMap<String, Vec<Event>>,
    pub exhaustions: BTreeMap<String, Exhaustion>,
}

fn event_label(points: &[String]) -> String {
    format!("{{{}}}", points.join(","))
}

impl LoadedModel {
    pub fn parse(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        Self::from_document(doc)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn from_document(doc: ModelDocument) -> Result<Self> {
        let prob = doc.prob.into_iter().map(cells).collect();
        let model = FiniteModel::new(doc.points, doc.params, prob)?;
        let m = model.num_points();
        let mut partitions = BTreeMap::new();
        for (name, ids) in doc.partitions {
            if ids.len() != m {
                return Err(Error::Format(format!("partition `{name}` has {} entries, expected {m}", ids.len())));
            }
            partitions.insert(name, Partition::from_labels(&ids));
        }
        let mut functions = BTreeMap::new();
        for (name, v) in doc.functions {
            if v.len() != m {
                return Err(Error::Format(format!("function `{name}` has {} entries, expected {m}", v.len())));
            }
            functions.insert(name, cells(v));
        }
        let mut estimands = BTreeMap::new();
        for (name, v) in doc.estimands {
            if v.len() != model.num_params() {
                return Err(Error::Format(format!(
                    "estimand `{name}` has {} entries, expected {}",
                    v.len(),
                    model.num_params()
                )));
            }
            estimands.insert(name, cells(v));
        }
        let mut events = BTreeMap::new();
        for (name, list) in doc.events {
            let evs = list
                .iter()
                .map(|labels| {
                    let idx = labels
                        .iter()
                        .map(|l| {
                            model
                                .point_index(l)
                                .ok_or_else(|| Error::Format(format!("event list `{name}` names unknown point `{l}`")))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Ok(Event::new(event_label(labels), idx))
                })
                .collect::<Result<Vec<_>>>()?;
            events.insert(name, evs);
        }
        let mut exhaustions = BTreeMap::new();
        for (name, specs) in doc.exhaustions {
            let pieces = specs
                .iter()
                .map(|p| Ok((p.label.clone(), model.select(&p.sub)?)))
                .collect::<Result<Vec<_>>>()?;
            exhaustions.insert(name.clone(), Exhaustion::new(name, pieces));
        }
        Ok(LoadedModel { model, partitions, functions, estimands, events, exhaustions })
    }

    /// A bare model with no named objects.
    pub fn bare(model: FiniteModel) -> Self {
        LoadedModel {
            model,
            partitions: BTreeMap::new(),
            functions: BTreeMap::new(),
            estimands: BTreeMap::new(),
            events: BTreeMap::new(),
            exhaustions: BTreeMap::new(),
        }
    }

    /// Resolves a partition name. Besides the named partitions, accepts
    /// `discrete`, `trivial`, `minimal` and joins written `A+B`.
    pub fn partition(&self, name: &str) -> Result<Partition> {
        let m = self.model.num_points();
        let mut acc: Option<Partition> = None;
        for part in name.split('+').map(str::trim) {
            let p = match part {
                _ if self.partitions.contains_key(part) => self.partitions[part].clone(),
                "discrete" => Partition::discrete(m),
                "trivial" => Partition::trivial(m),
                "minimal" => crate::checks::minimal_sufficient_partition(&self.model, &self.model.all()),
                _ => return Err(Error::InvalidInput(format!("unknown partition `{part}`"))),
            };
            acc = Some(match acc {
                Some(a) => a.join(&p),
                None => p,
            });
        }
        acc.ok_or_else(|| Error::InvalidInput("empty partition name".into()))
    }

    /// A named function or an inline comma-separated list of rationals.
    pub fn function(&self, name: &str) -> Result<RationalFunction> {
        self.vector(name, &self.functions, self.model.num_points(), "function")
    }

    /// A named estimand (indexed by parameter) or an inline list.
    pub fn estimand(&self, name: &str) -> Result<Estimand> {
        self.vector(name, &self.estimands, self.model.num_params(), "estimand")
    }

    fn vector(&self, name: &str, named: &BTreeMap<String, Vec<Rational>>, len: usize, what: &str) -> Result<Vec<Rational>> {
        if let Some(v) = named.get(name) {
            return Ok(v.clone());
        }
        if !name.contains(',') && len != 1 {
            return Err(Error::InvalidInput(format!("unknown {what} `{name}`")));
        }
        let v = name
            .split(',')
            .map(|t| parse_rational(t.trim()).map_err(|e| Error::InvalidInput(format!("{what} entry `{t}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if v.len() != len {
            return Err(Error::InvalidInput(format!("{what} has {} entries, expected {len}", v.len())));
        }
        Ok(v)
    }

    /// A named event list, or `intervals`, `uprays`, `downrays` of the
    /// points taken in file order as a chain.
    pub fn events(&self, name: &str) -> Result<Vec<Event>> {
        if let Some(e) = self.events.get(name) {
            return Ok(e.clone());
        }
        let pts = self.model.points();
        match name {
            "intervals" => Ok(construct::chain_intervals(pts)),
            "uprays" => Ok(construct::chain_uprays(pts)),
            "downrays" => Ok(construct::chain_downrays(pts)),
            "full" => Ok(vec![Event::new(event_label(pts), (0..pts.len()).collect())]),
            _ => Err(Error::InvalidInput(format!("unknown event list `{name}`"))),
        }
    }

    /// A named exhaustion, or `full`, `theta1-sections`, `theta2-sections`, ...
    pub fn exhaustion(&self, name: &str) -> Result<Exhaustion> {
        if let Some(e) = self.exhaustions.get(name) {
            return Ok(e.clone());
        }
        if name == "full" {
            return Ok(Exhaustion::single(&self.model));
        }
        if let Some(c) = name.strip_prefix("theta").and_then(|r| r.strip_suffix("-sections")) {
            if let Ok(coord) = c.parse::<usize>() {
                return Exhaustion::sections(&self.model, coord);
            }
        }
        Err(Error::InvalidInput(format!("unknown exhaustion `{name}`")))
    }

    pub fn to_document(&self) -> ModelDocument {
        let to_cells = |v: &[Rational]| v.iter().cloned().map(Cell).collect::<Vec<_>>();
        let m = &self.model;
        ModelDocument {
            points: m.points().to_vec(),
            params: m.params().to_vec(),
            prob: m.rows().iter().map(|r| to_cells(r)).collect(),
            partitions: self.partitions.iter().map(|(k, p)| (k.clone(), p.block_ids().to_vec())).collect(),
            functions: self.functions.iter().map(|(k, v)| (k.clone(), to_cells(v))).collect(),
            estimands: self.estimands.iter().map(|(k, v)| (k.clone(), to_cells(v))).collect(),
            events: self
                .events
                .iter()
                .map(|(k, evs)| {
                    let lists = evs
                        .iter()
                        .map(|e| e.points.iter().map(|&x| m.points()[x].clone()).collect())
                        .collect();
                    (k.clone(), lists)
                })
                .collect(),
            exhaustions: self
                .exhaustions
                .iter()
                .map(|(k, ex)| {
                    let specs = ex
                        .pieces
                        .iter()
                        .map(|(label, sub)| PieceSpec {
                            label: label.clone(),
                            sub: format!(
                                "params={}",
                                sub.indices().iter().map(|t| t.to_string()).collect::<Vec<_>>().join(",")
                            ),
                        })
                        .collect();
                    (k.clone(), specs)
                })
                .collect(),
        }
    }

    /// Stable rendering: one line per matrix row, keys in fixed order.
    pub fn to_json(&self) -> String {
        write_document(&self.to_document())
    }
}

fn line<T: Serialize + ?Sized>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

fn write_map<V, F>(out: &mut Vec<String>, key: &str, map: &BTreeMap<String, V>, render: F)
where
    F: Fn(&V) -> String,
{
    if map.is_empty() {
        return;
    }
    let body: Vec<String> = map.iter().map(|(k, v)| format!("    {}: {}", line(k), render(v))).collect();
    out.push(format!("  {}: {{\n{}\n  }}", line(key), body.join(",\n")));
}

pub fn write_document(doc: &ModelDocument) -> String {
    let mut fields = vec![
        format!("  \"points\": {}", line(&doc.points)),
        format!("  \"params\": {}", line(&doc.params)),
        format!(
            "  \"prob\": [\n{}\n  ]",
            doc.prob.iter().map(|r| format!("    {}", line(r))).collect::<Vec<_>>().join(",\n")
        ),
    ];
    write_map(&mut fields, "partitions", &doc.partitions, line);
    write_map(&mut fields, "functions", &doc.functions, line);
    write_map(&mut fields, "estimands", &doc.estimands, line);
    write_map(&mut fields, "events", &doc.events, line);
    write_map(&mut fields, "exhaustions", &doc.exhaustions, line);
    format!("{{\n{}\n}}\n", fields.join(",\n"))
}

/// Renders a bare model with optional named partitions.
pub fn model_to_json(m: &FiniteModel, partitions: &[(String, Partition)]) -> String {
    let mut loaded = LoadedModel::bare(m.clone());
    loaded.partitions = partitions.iter().cloned().collect();
    loaded.to_json()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    const CE55: &str = r#"{
        "points": ["1", "2", "3"],
        "params": [["1","1"], ["1","2"], ["2","1"], ["2","2"]],
        "prob": [["1/3","1/3","1/3"], [0,0,1], ["0","0","1"], ["1/6","2/6","1/2"]],
        "partitions": {"C1": [5, 5, 2]},
        "exhaustions": {"rows": [{"label": "a", "sub": "theta1=1"}, {"label": "b", "sub": "theta1=2"}]}
    }"#;

    #[test]
    fn parses_and_canonicalizes() {
        let l = LoadedModel::parse(CE55).unwrap();
        assert_eq!(l.model.mass(3, 1), &ratio(1, 3));
        assert_eq!(l.partitions["C1"].block_ids(), &[0, 0, 1]);
        assert_eq!(l.partition("C1+C1").unwrap(), l.partitions["C1"]);
        assert_eq!(l.partition("C1+discrete").unwrap(), Partition::discrete(3));
        assert_eq!(l.exhaustion("rows").unwrap().pieces.len(), 2);
        assert_eq!(l.exhaustion("theta2-sections").unwrap().pieces.len(), 2);
    }

    #[test]
    fn decimals_and_bad_rows_rejected() {
        let dec = CE55.replace("\"1/6\"", "0.1666");
        assert!(matches!(LoadedModel::parse(&dec), Err(Error::Format(_))));
        let dec_str = CE55.replace("\"1/6\"", "\"0.5\"");
        assert!(matches!(LoadedModel::parse(&dec_str), Err(Error::Format(_))));
        let bad = CE55.replace("\"1/6\"", "\"1/5\"");
        assert!(matches!(LoadedModel::parse(&bad), Err(Error::InvalidModel(_))));
        let extra = CE55.replace("\"points\"", "\"colour\": 1, \"points\"");
        assert!(LoadedModel::parse(&extra).is_err());
    }

    #[test]
    fn round_trip_is_stable() {
        let l = LoadedModel::parse(CE55).unwrap();
        let text = l.to_json();
        let again = LoadedModel::parse(&text).unwrap();
        assert_eq!(again.model, l.model);
        assert_eq!(again.to_json(), text);
        assert!(text.contains("    [\"1/6\",\"1/3\",\"1/2\"]"));
    }

    #[test]
    fn inline_vectors_and_builtin_events() {
        let l = LoadedModel::parse(CE55).unwrap();
        assert_eq!(l.function("1, -1/2, 0").unwrap(), vec![ratio(1, 1), ratio(-1, 2), ratio(0, 1)]);
        assert!(l.function("1,2").is_err());
        assert!(l.function("h").is_err());
        assert_eq!(l.events("intervals").unwrap().len(), 6);
        assert_eq!(l.events("uprays").unwrap()[0].label, "[1,3]");
    }
}
