//! Seeded random models, hypothesis-satisfying theorem instances and
//! counterexample hunting with greedy minimization.
//!
//! Iteration `i` of a run draws from `ChaCha8Rng` seeded with the run seed on
//! stream `i`, so every instance is reproducible from `(seed, i)` alone and
//! results do not depend on how iterations are scheduled across threads.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::checks;
use crate::construct::{self, Event};
use crate::error::{Error, Result};
use crate::format::LoadedModel;
use crate::model::{Exhaustion, FiniteModel, Limits, ParamLabel, Submodel};
use crate::partition::Partition;
use crate::rational::{is_positive, ratio, Rational};
use crate::verify::{self, label_matches, Status, TheoremReport};

/// `{0, 1/12, 1/6, ..., 1}`: every multiple of 1/12 in the unit interval.
pub fn default_mass_grid() -> Vec<Rational> {
    (0..=12).map(|i| ratio(i, 12)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenConfig {
    pub seed: u64,
    pub max_points: usize,
    pub max_params: usize,
    pub mass_grid: Vec<Rational>,
    /// All rows share one support.
    pub homogeneous: bool,
    /// The model is a product of two factor models.
    pub product_shaped: bool,
    /// Parameters are pairs `(theta1, theta2)` over a grid.
    pub grid_parametrized: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            max_points: 6,
            max_params: 4,
            mass_grid: default_mass_grid(),
            homogeneous: false,
            product_shaped: false,
            grid_parametrized: false,
        }
    }
}

impl GenConfig {
    pub fn with_seed(seed: u64) -> Self {
        GenConfig { seed, ..GenConfig::default() }
    }

    pub fn sized(seed: u64, max_points: usize, max_params: usize) -> Self {
        GenConfig { seed, max_points, max_params, ..GenConfig::default() }
    }

    fn check(&self) -> Result<()> {
        if self.max_points == 0 || self.max_params == 0 {
            return Err(Error::InvalidInput("infeasible configuration: sizes must be positive".into()));
        }
        if self.mass_grid.iter().any(|g| !crate::rational::is_nonneg(g)) {
            return Err(Error::InvalidInput("infeasible configuration: negative mass on the grid".into()));
        }
        if !self.mass_grid.iter().any(is_positive) {
            return Err(Error::InvalidInput("infeasible configuration: the mass grid has no positive value".into()));
        }
        Ok(())
    }

    fn positive_grid(&self) -> Vec<Rational> {
        self.mass_grid.iter().filter(|g| is_positive(g)).cloned().collect()
    }
}

/// The generator of iteration `stream` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn pick<'a, T>(rng: &mut impl Rng, items: &'a [T]) -> &'a T {
    &items[rng.random_range(0..items.len())]
}

/// One probability row: grid weights on `support`, exactly normalized. A row
/// whose draws are all zero gets one random support point set to 1.
fn random_row(rng: &mut impl Rng, cfg: &GenConfig, support: &[bool]) -> Vec<Rational> {
    let positive = cfg.positive_grid();
    let mut w: Vec<Rational> = support
        .iter()
        .map(|&on| {
            if !on {
                Rational::from_integer(0.into())
            } else if cfg.homogeneous {
                pick(rng, &positive).clone()
            } else {
                pick(rng, &cfg.mass_grid).clone()
            }
        })
        .collect();
    let total: Rational = w.iter().sum();
    if !is_positive(&total) {
        let on: Vec<usize> = (0..support.len()).filter(|&x| support[x]).collect();
        w[*pick(rng, &on)] = Rational::from_integer(1.into());
        return w;
    }
    w.iter().map(|x| x / &total).collect()
}

fn random_rows(rng: &mut impl Rng, cfg: &GenConfig, m: usize, k: usize) -> Vec<Vec<Rational>> {
    let support: Vec<bool> = if cfg.homogeneous {
        let mut s: Vec<bool> = (0..m).map(|_| rng.random_bool(0.75)).collect();
        if !s.contains(&true) {
            s[rng.random_range(0..m)] = true;
        }
        s
    } else {
        vec![true; m]
    };
    (0..k).map(|_| random_row(rng, cfg, &support)).collect()
}

fn plain_model(rng: &mut impl Rng, cfg: &GenConfig, m: usize, k: usize) -> FiniteModel {
    let points: Vec<String> = (0..m).map(|x| x.to_string()).collect();
    let params: Vec<ParamLabel> = (0..k).map(|t| ParamLabel::atom(format!("t{t}"))).collect();
    FiniteModel::from_parts_unchecked(points, params, random_rows(rng, cfg, m, k))
}

/// Two factors whose sizes multiply to at most `max`.
fn split(rng: &mut impl Rng, max: usize) -> (usize, usize) {
    let a = rng.random_range(1..=max);
    let b = rng.random_range(1..=(max / a).max(1));
    (a, b)
}

/// A random model drawn with a generator.
pub fn random_model_with(rng: &mut impl Rng, cfg: &GenConfig) -> Result<FiniteModel> {
    cfg.check()?;
    if cfg.product_shaped {
        let (ma, mb) = split(rng, cfg.max_points);
        let (ka, kb) = split(rng, cfg.max_params);
        let a = plain_model(rng, cfg, ma, ka);
        let b = plain_model(rng, cfg, mb, kb);
        let limits = Limits { max_points: cfg.max_points.max(1), ..Limits::default() };
        return construct::product_model(&a, &b, &limits);
    }
    let m = rng.random_range(1..=cfg.max_points);
    if cfg.grid_parametrized {
        let (k1, k2) = split(rng, cfg.max_params);
        let points: Vec<String> = (0..m).map(|x| x.to_string()).collect();
        let params = (0..k1)
            .flat_map(|i| (0..k2).map(move |j| ParamLabel::tuple([i.to_string(), j.to_string()])))
            .collect();
        return Ok(FiniteModel::from_parts_unchecked(points, params, random_rows(rng, cfg, m, k1 * k2)));
    }
    let k = rng.random_range(1..=cfg.max_params);
    Ok(plain_model(rng, cfg, m, k))
}

/// A random model determined by `cfg.seed`.
pub fn random_model(cfg: &GenConfig) -> Result<FiniteModel> {
    random_model_with(&mut stream_rng(cfg.seed, 0), cfg)
}

/// A random partition of `m` points into at most `max_blocks` blocks.
pub fn random_partition(rng: &mut impl Rng, m: usize, max_blocks: usize) -> Partition {
    let b = rng.random_range(1..=max_blocks.max(1));
    let ids: Vec<usize> = (0..m).map(|_| rng.random_range(0..b)).collect();
    Partition::from_labels(&ids)
}

/// A random exhaustion: every parameter lands in one piece, some in more.
pub fn random_exhaustion(rng: &mut impl Rng, m: &FiniteModel) -> Exhaustion {
    let k = m.num_params();
    let pieces = rng.random_range(1..=k.clamp(1, 4));
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); pieces];
    for t in 0..k {
        members[rng.random_range(0..pieces)].push(t);
        for mem in members.iter_mut() {
            if rng.random_bool(0.2) && !mem.contains(&t) {
                mem.push(t);
            }
        }
    }
    let list = members
        .into_iter()
        .filter(|v| !v.is_empty())
        .enumerate()
        .map(|(i, v)| (format!("E{}", i + 1), Submodel::new(v, k).expect("indices in range")))
        .collect();
    Exhaustion::new("random", list)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Recipe {
    Product,
    Truncation,
    Weighting,
}

impl Recipe {
    pub const ALL: [Recipe; 3] = [Recipe::Product, Recipe::Truncation, Recipe::Weighting];
}

/// A model with a family of (partition, exhaustion) pairs meeting every
/// hypothesis of the main theorem.
#[derive(Debug, Clone)]
pub struct MainInstance {
    pub recipe: Recipe,
    pub model: FiniteModel,
    pub family: Vec<(Partition, Exhaustion)>,
}

const RETRY_BUDGET: usize = 64;

/// A factor model with a complete sufficient partition, or `None`.
fn complete_factor(rng: &mut impl Rng, cfg: &GenConfig, k: usize) -> Option<(FiniteModel, Partition)> {
    let m = rng.random_range(1..=(k + 1).min(8));
    let f = plain_model(rng, cfg, m, k);
    let c = checks::minimal_sufficient_partition(&f, &f.all());
    checks::is_complete(&c, &f, &f.all()).passed().then_some((f, c))
}

fn product_instance(rng: &mut impl Rng, cfg: &GenConfig) -> Option<MainInstance> {
    let ka = rng.random_range(1..=4usize);
    let kb = rng.random_range(1..=(8 / ka).min(4));
    let (a, ca) = complete_factor(rng, cfg, ka)?;
    let (b, cb) = complete_factor(rng, cfg, kb)?;
    let model = construct::product_model(&a, &b, &Limits::default()).ok()?;
    let mb = b.num_points();
    let c1 = Partition::from_labels(&(0..model.num_points()).map(|x| ca.block_of(x / mb)).collect::<Vec<_>>());
    let c2 = Partition::from_labels(&(0..model.num_points()).map(|x| cb.block_of(x % mb)).collect::<Vec<_>>());
    let e1 = Exhaustion::sections(&model, 2).ok()?;
    let e2 = Exhaustion::sections(&model, 1).ok()?;
    Some(MainInstance { recipe: Recipe::Product, model, family: vec![(c1, e1), (c2, e2)] })
}

fn truncation_instance(rng: &mut impl Rng, cfg: &GenConfig) -> Option<MainInstance> {
    let base = rng.random_range(2..=4usize);
    let n_max = if base == 2 { 6 } else { 3 };
    let n = rng.random_range(1..=n_max);
    let k0 = rng.random_range(1..=3usize);
    let hom = GenConfig { homogeneous: true, ..cfg.clone() };
    let points: Vec<String> = (0..base).map(|x| x.to_string()).collect();
    let params: Vec<ParamLabel> = (0..k0).map(|t| ParamLabel::atom(format!("t{t}"))).collect();
    let rows = (0..k0).map(|_| random_row(rng, &hom, &vec![true; base])).collect();
    let m0 = FiniteModel::from_parts_unchecked(points, params, rows);
    let limits = Limits::default();
    let power = construct::power_model(&m0, n, &limits).ok()?;
    let c = if k0 == 1 {
        Partition::trivial(power.num_points())
    } else {
        checks::minimal_sufficient_partition(&power, &power.all())
    };
    if !checks::is_complete(&c, &power, &power.all()).passed() {
        return None;
    }
    let raw: Vec<Event> = (0..rng.random_range(1..=3))
        .map(|i| {
            let mut pts: Vec<usize> = (0..base).filter(|_| rng.random_bool(0.6)).collect();
            if pts.is_empty() {
                pts.push(rng.random_range(0..base));
            }
            Event::new(format!("E{i}"), pts)
        })
        .collect();
    let events = construct::cap_closure(&raw);
    if events.len() * k0 > 8 {
        return None;
    }
    let tf = construct::truncated_family(&m0, &events, n, &limits).ok()?;
    let (by_event, by_param) = verify::truncation_exhaustions(&tf, &events, &m0);
    let family = vec![(c, by_event), (tf.partition.clone(), by_param)];
    Some(MainInstance { recipe: Recipe::Truncation, model: tf.model, family })
}

fn weighting_instance(rng: &mut impl Rng, cfg: &GenConfig) -> Option<MainInstance> {
    let inner = product_instance(rng, cfg)?;
    let positive = cfg.positive_grid();
    let q: Vec<Rational> = (0..inner.model.num_points()).map(|_| pick(rng, &positive).clone()).collect();
    let model = construct::weighted_model(&inner.model, &q).ok()?;
    Some(MainInstance { recipe: Recipe::Weighting, model, family: inner.family })
}

/// Draws an instance by `recipe` with the generator, re-checking every
/// hypothesis and retrying within a fixed budget.
pub fn gen_main_instance_with(rng: &mut impl Rng, cfg: &GenConfig, recipe: Recipe) -> Result<MainInstance> {
    cfg.check()?;
    for _ in 0..RETRY_BUDGET {
        let drawn = match recipe {
            Recipe::Product => product_instance(rng, cfg),
            Recipe::Truncation => truncation_instance(rng, cfg),
            Recipe::Weighting => weighting_instance(rng, cfg),
        };
        let Some(inst) = drawn else { continue };
        let report = verify::verify_main(&inst.model, &inst.family)?;
        if report.hypothesis_results.iter().all(|h| h.report.holds()) {
            return Ok(inst);
        }
    }
    Err(Error::InvalidInput(format!("no {recipe:?} instance met the hypotheses within {RETRY_BUDGET} draws")))
}

/// An instance determined by `cfg.seed`, with the recipe drawn at random.
pub fn gen_main_instance(cfg: &GenConfig) -> Result<MainInstance> {
    let mut rng = stream_rng(cfg.seed, 0);
    let recipe = *pick(&mut rng, &Recipe::ALL);
    gen_main_instance_with(&mut rng, cfg, recipe)
}

// ---------------------------------------------------------------------------
// Hunting

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Template {
    Main,
    CorTwoBlocks,
    Cks,
    CksRewrite,
}

impl Template {
    pub fn parse(name: &str) -> Result<Self> {
        match name.replace('_', "-").as_str() {
            "main" => Ok(Template::Main),
            "cor-two-blocks" => Ok(Template::CorTwoBlocks),
            "cks" => Ok(Template::Cks),
            "cks-rewrite" => Ok(Template::CksRewrite),
            other => Err(Error::InvalidInput(format!(
                "unknown template `{other}`; expected main, cor-two-blocks, cks or cks-rewrite"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Template::Main => "main",
            Template::CorTwoBlocks => "cor-two-blocks",
            Template::Cks => "cks",
            Template::CksRewrite => "cks-rewrite",
        }
    }

    /// Hypothesis labels, without their piece suffix.
    pub fn hypotheses(self) -> &'static [&'static str] {
        match self {
            Template::Main => &["C1.complete", "C1.sufficient", "C2.complete", "C2.sufficient"],
            Template::CorTwoBlocks => &["i.complete", "i.sufficient", "ii.complete", "ii.sufficient"],
            Template::Cks => &["i.complete", "ii.complete", "iii.homogeneous", "iv.integrable"],
            Template::CksRewrite => &[
                "i.complete",
                "ii.ancillary",
                "ii.complete",
                "ii.sufficient",
                "iii.homogeneous",
                "iv.integrable",
            ],
        }
    }

    /// Resolves a dropped-hypothesis name: a label prefix, an alias, or
    /// `none`.
    pub fn resolve_drop(self, name: Option<&str>) -> Result<Option<String>> {
        let Some(name) = name.map(str::trim).filter(|n| !n.is_empty() && *n != "none") else {
            return Ok(None);
        };
        let alias = match (self, name) {
            (Template::CorTwoBlocks | Template::CksRewrite, "C1-completeness") => "i.complete",
            (Template::CorTwoBlocks, "C1-sufficiency") => "i.sufficient",
            (Template::CorTwoBlocks | Template::CksRewrite, "C2-completeness") => "ii.complete",
            (Template::CorTwoBlocks | Template::CksRewrite, "C2-sufficiency") => "ii.sufficient",
            (Template::CksRewrite, "ancillarity") => "ii.ancillary",
            (Template::Cks | Template::CksRewrite, "homogeneity") => "iii.homogeneous",
            (Template::Main, "C1-sufficiency") => "C1.sufficient",
            (Template::Main, "C2-sufficiency") => "C2.sufficient",
            (_, other) => other,
        };
        if self.hypotheses().iter().any(|h| label_matches(h, alias)) {
            Ok(Some(alias.to_string()))
        } else {
            Err(Error::InvalidInput(format!(
                "`{name}` names no hypothesis of `{}`; expected one of {}",
                self.as_str(),
                self.hypotheses().join(", ")
            )))
        }
    }
}

/// A candidate instance of one of the hunting templates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instance {
    /// Tuple-parametrized model with two partitions.
    Grid { model: FiniteModel, c1: Partition, c2: Partition },
    /// Model with a family of (partition, exhaustion) pairs.
    Family { model: FiniteModel, family: Vec<(Partition, Exhaustion)> },
    /// Factor `Q` and the `(theta1, theta2)`-indexed family `R`.
    Cks { q: FiniteModel, r: FiniteModel },
}

impl Instance {
    /// Points plus parameters, the order used when ranking finds.
    pub fn size(&self) -> usize {
        match self {
            Instance::Grid { model, .. } | Instance::Family { model, .. } => model.num_points() + model.num_params(),
            Instance::Cks { q, r } => q.num_points() + r.num_points() + r.num_params(),
        }
    }

    fn num_params(&self) -> usize {
        match self {
            Instance::Grid { model, .. } | Instance::Family { model, .. } => model.num_params(),
            Instance::Cks { r, .. } => r.num_params(),
        }
    }

    fn num_points(&self) -> usize {
        match self {
            Instance::Grid { model, .. } | Instance::Family { model, .. } => model.num_points(),
            Instance::Cks { q, r } => q.num_points() + r.num_points(),
        }
    }

    /// Runs the template's verifier with every hypothesis.
    pub fn report(&self, template: Template) -> Result<TheoremReport> {
        match (template, self) {
            (Template::CorTwoBlocks, Instance::Grid { model, c1, c2 }) => verify::verify_cor_two_blocks(model, c1, c2),
            (Template::CksRewrite, Instance::Grid { model, c1, c2 }) => verify::verify_cks_rewrite(model, c1, c2),
            (Template::Main, Instance::Family { model, family }) => verify::verify_main(model, family),
            (Template::Cks, Instance::Cks { q, r }) => verify::verify_cks(q, r, &Limits::default()),
            _ => Err(Error::Invariant("instance shape does not fit the template".into())),
        }
    }

    /// Every kept hypothesis holds and the conclusion fails.
    pub fn violates(&self, template: Template, dropped: Option<&str>) -> Result<bool> {
        Ok(match (template, self) {
            (Template::CorTwoBlocks, Instance::Grid { model, c1, c2 }) => {
                verify::plan_cor_two_blocks(model, c1, c2)?.violates_without(dropped)
            }
            (Template::CksRewrite, Instance::Grid { model, c1, c2 }) => {
                verify::plan_cks_rewrite(model, c1, c2)?.violates_without(dropped)
            }
            (Template::Main, Instance::Family { model, family }) => {
                verify::plan_main(model, family)?.violates_without(dropped)
            }
            (Template::Cks, Instance::Cks { q, r }) => {
                let p = verify::cks_product(q, r, &Limits::default())?;
                let hit = verify::plan_cks(q, r, &p)?.violates_without(dropped);
                hit
            }
            _ => return Err(Error::Invariant("instance shape does not fit the template".into())),
        })
    }

    fn without_param(&self, t: usize) -> Option<Instance> {
        match self {
            Instance::Grid { model, c1, c2 } => {
                let sub = keep_params(model.num_params(), &[t])?;
                Some(Instance::Grid { model: model.restrict_params(&sub), c1: c1.clone(), c2: c2.clone() })
            }
            Instance::Family { model, family } => {
                let sub = keep_params(model.num_params(), &[t])?;
                let family = family
                    .iter()
                    .map(|(c, ex)| Some((c.clone(), reindex_exhaustion(ex, &sub)?)))
                    .collect::<Option<Vec<_>>>()?;
                Some(Instance::Family { model: model.restrict_params(&sub), family })
            }
            Instance::Cks { q, r } => {
                let sub = keep_params(r.num_params(), &[t])?;
                let r = r.restrict_params(&sub);
                let q = used_q_params(q, &r)?;
                Some(Instance::Cks { q, r })
            }
        }
    }

    fn without_point(&self, x: usize) -> Option<Instance> {
        match self {
            Instance::Grid { model, c1, c2 } => {
                let (m, _, keep) = condition_out(model, x)?;
                Some(Instance::Grid { model: m, c1: c1.restrict(&keep), c2: c2.restrict(&keep) })
            }
            Instance::Family { model, family } => {
                let (m, kept, keep) = condition_out(model, x)?;
                let sub = Submodel::new(kept, model.num_params()).ok()?;
                let family = family
                    .iter()
                    .map(|(c, ex)| Some((c.restrict(&keep), reindex_exhaustion(ex, &sub)?)))
                    .collect::<Option<Vec<_>>>()?;
                Some(Instance::Family { model: m, family })
            }
            Instance::Cks { q, r } => {
                if x < q.num_points() {
                    let (q2, kept, _) = condition_out(q, x)?;
                    let survivors: Vec<&ParamLabel> = kept.iter().map(|&t| &q.params()[t]).collect();
                    let keep_r: Vec<usize> = (0..r.num_params())
                        .filter(|&t| {
                            let theta1 = r.params()[t].coord(1).unwrap_or_default();
                            survivors.iter().any(|p| p.to_string() == theta1)
                        })
                        .collect();
                    if keep_r.is_empty() {
                        return None;
                    }
                    let sub = Submodel::new(keep_r, r.num_params()).ok()?;
                    Some(Instance::Cks { q: q2, r: r.restrict_params(&sub) })
                } else {
                    let (r2, _, _) = condition_out(r, x - q.num_points())?;
                    let q2 = used_q_params(q, &r2)?;
                    Some(Instance::Cks { q: q2, r: r2 })
                }
            }
        }
    }

    /// Greedy minimization: drop parameters first, then points, in index
    /// order, keeping a step only when the violation survives it.
    pub fn minimize(self, template: Template, dropped: Option<&str>) -> Instance {
        let mut cur = self;
        'outer: loop {
            for t in 0..cur.num_params() {
                if let Some(next) = cur.without_param(t) {
                    if next.violates(template, dropped).unwrap_or(false) {
                        cur = next;
                        continue 'outer;
                    }
                }
            }
            for x in 0..cur.num_points() {
                if let Some(next) = cur.without_point(x) {
                    if next.violates(template, dropped).unwrap_or(false) {
                        cur = next;
                        continue 'outer;
                    }
                }
            }
            return cur;
        }
    }

    /// Model files describing the instance, by file name.
    pub fn files(&self) -> Vec<(String, String)> {
        match self {
            Instance::Grid { model, c1, c2 } => {
                let mut l = LoadedModel::bare(model.clone());
                l.partitions.insert("C1".into(), c1.clone());
                l.partitions.insert("C2".into(), c2.clone());
                vec![("model.json".into(), l.to_json())]
            }
            Instance::Family { model, family } => {
                let mut l = LoadedModel::bare(model.clone());
                for (i, (c, ex)) in family.iter().enumerate() {
                    l.partitions.insert(format!("C{}", i + 1), c.clone());
                    l.exhaustions.insert(format!("E{}", i + 1), ex.clone());
                }
                vec![("model.json".into(), l.to_json())]
            }
            Instance::Cks { q, r } => vec![
                ("q.json".into(), LoadedModel::bare(q.clone()).to_json()),
                ("r.json".into(), LoadedModel::bare(r.clone()).to_json()),
            ],
        }
    }
}

fn keep_params(k: usize, drop: &[usize]) -> Option<Submodel> {
    let kept: Vec<usize> = (0..k).filter(|t| !drop.contains(t)).collect();
    if kept.is_empty() {
        return None;
    }
    Submodel::new(kept, k).ok()
}

/// Pieces of `ex` re-indexed onto the parameters kept in `sub`; empty pieces vanish.
fn reindex_exhaustion(ex: &Exhaustion, sub: &Submodel) -> Option<Exhaustion> {
    let new_index: BTreeMap<usize, usize> = sub.indices().iter().enumerate().map(|(i, &t)| (t, i)).collect();
    let pieces: Vec<(String, Submodel)> = ex
        .pieces
        .iter()
        .filter_map(|(label, piece)| {
            let idx: Vec<usize> = piece.indices().iter().filter_map(|t| new_index.get(t).copied()).collect();
            (!idx.is_empty()).then(|| Submodel::new(idx, sub.len()).map(|s| (label.clone(), s)).ok())?
        })
        .collect();
    (!pieces.is_empty()).then(|| Exhaustion::new(ex.label.clone(), pieces))
}

/// The model conditioned on the complement of point `x`, that point removed.
/// Returns the new model, the surviving parameter indices and the kept-point mask.
fn condition_out(m: &FiniteModel, x: usize) -> Option<(FiniteModel, Vec<usize>, Vec<bool>)> {
    if m.num_points() <= 1 {
        return None;
    }
    let keep: Vec<bool> = (0..m.num_points()).map(|y| y != x).collect();
    let mut kept = Vec::new();
    let mut rows = Vec::new();
    for t in 0..m.num_params() {
        let mass = m.event_mass(t, &keep);
        if is_positive(&mass) {
            kept.push(t);
            rows.push((0..m.num_points()).filter(|&y| keep[y]).map(|y| m.mass(t, y) / &mass).collect());
        }
    }
    if kept.is_empty() {
        return None;
    }
    let points = (0..m.num_points()).filter(|&y| keep[y]).map(|y| m.points()[y].clone()).collect();
    let params = kept.iter().map(|&t| m.params()[t].clone()).collect();
    Some((FiniteModel::from_parts_unchecked(points, params, rows), kept, keep))
}

/// `q` restricted to the parameters that `r` still refers to.
fn used_q_params(q: &FiniteModel, r: &FiniteModel) -> Option<FiniteModel> {
    let used: Vec<usize> = (0..q.num_params())
        .filter(|&t| {
            let label = q.params()[t].to_string();
            r.params().iter().any(|p| p.coord(1) == Some(label.as_str()))
        })
        .collect();
    if used.is_empty() {
        return None;
    }
    Some(q.restrict_params(&Submodel::new(used, q.num_params()).ok()?))
}

const SQUARE_POINTS: [&str; 4] = ["(0,0)", "(0,1)", "(1,0)", "(1,1)"];

/// Partitions of `{0,1}^2` by simple statistics.
fn square_statistics() -> Vec<Partition> {
    let labels: [[usize; 4]; 7] = [
        [0, 0, 1, 1], // x1
        [0, 1, 0, 1], // x2
        [0, 1, 1, 2], // x1 + x2
        [0, 0, 0, 1], // min
        [0, 1, 1, 1], // max
        [0, 0, 0, 0], // trivial
        [0, 1, 2, 3], // discrete
    ];
    labels.iter().map(|l| Partition::from_labels(l)).collect()
}

/// A tuple-parametrized model on `{0,1}^2`: laws of two Bernoulli
/// coordinates whose success probabilities depend on the grid point.
fn grid_square(rng: &mut impl Rng, cfg: &GenConfig) -> FiniteModel {
    let k1 = rng.random_range(1..=3usize);
    let k2 = rng.random_range(1..=3usize);
    let one = Rational::from_integer(1.into());
    let ts: Vec<Rational> = (0..k2).map(|_| pick(rng, &cfg.mass_grid).clone()).collect();
    let us: Vec<Rational> = (0..k1).map(|_| pick(rng, &cfg.mass_grid).clone()).collect();
    let shape = rng.random_range(0..3u8);
    let mut params = Vec::new();
    let mut rows = Vec::new();
    for (i, u) in us.iter().enumerate() {
        for (j, t) in ts.iter().enumerate() {
            let (a, b) = match shape {
                // i.i.d. square, reflected on odd theta1
                0 => {
                    let p = if i % 2 == 0 { t.clone() } else { &one - t };
                    (p.clone(), p)
                }
                // independent coordinates driven by theta1 and theta2
                1 => (u.clone(), t.clone()),
                // unrelated cells
                _ => (pick(rng, &cfg.mass_grid).clone(), pick(rng, &cfg.mass_grid).clone()),
            };
            let (na, nb) = (&one - &a, &one - &b);
            params.push(ParamLabel::tuple([i.to_string(), j.to_string()]));
            rows.push(vec![&na * &nb, &na * &b, &a * &nb, &a * &b]);
        }
    }
    let points = SQUARE_POINTS.iter().map(|s| s.to_string()).collect();
    FiniteModel::from_parts_unchecked(points, params, rows)
}

fn random_cks(rng: &mut impl Rng, cfg: &GenConfig) -> Instance {
    let mq = rng.random_range(2..=3usize);
    let k1 = rng.random_range(1..=3usize);
    let k2 = rng.random_range(1..=2usize);
    let mr = rng.random_range(2..=3usize);
    let q = FiniteModel::from_parts_unchecked(
        (0..mq).map(|x| x.to_string()).collect(),
        (0..k1).map(|t| ParamLabel::atom(t.to_string())).collect(),
        random_rows(rng, cfg, mq, k1),
    );
    let mut params = Vec::new();
    let mut rows = Vec::new();
    for i in 0..k1 {
        for j in 0..k2 {
            let support: Vec<bool> = (0..mr).map(|_| rng.random_bool(0.5)).collect();
            let support = if support.contains(&true) { support } else { vec![true; mr] };
            params.push(ParamLabel::tuple([i.to_string(), j.to_string()]));
            rows.push(random_row(rng, cfg, &support));
        }
    }
    let r = FiniteModel::from_parts_unchecked((0..mr).map(|x| x.to_string()).collect(), params, rows);
    Instance::Cks { q, r }
}

/// Draws the candidate of iteration `stream` for a template.
pub fn candidate(template: Template, cfg: &GenConfig, stream: u64) -> Result<Instance> {
    cfg.check()?;
    let mut rng = stream_rng(cfg.seed, stream);
    let stats = square_statistics();
    Ok(match template {
        Template::CorTwoBlocks | Template::CksRewrite => {
            let model = grid_square(&mut rng, cfg);
            let c1 = pick(&mut rng, &stats).clone();
            let c2 = pick(&mut rng, &stats).clone();
            Instance::Grid { model, c1, c2 }
        }
        Template::Main => {
            let model = grid_square(&mut rng, cfg);
            let mut family = Vec::new();
            for _ in 0..2 {
                let c = pick(&mut rng, &stats).clone();
                let ex = match rng.random_range(0..4u8) {
                    0 => Exhaustion::sections(&model, 1)?,
                    1 => Exhaustion::sections(&model, 2)?,
                    2 => Exhaustion::single(&model),
                    _ => random_exhaustion(&mut rng, &model),
                };
                family.push((c, ex));
            }
            Instance::Family { model, family }
        }
        Template::Cks => random_cks(&mut rng, cfg),
    })
}

#[derive(Debug, Clone)]
pub struct Found {
    /// Iteration (stream) that produced the instance.
    pub index: u64,
    pub original_size: usize,
    pub instance: Instance,
    /// Full report on the minimized instance.
    pub report: TheoremReport,
}

#[derive(Debug, Clone)]
pub struct HuntOutcome {
    pub template: Template,
    pub dropped: Option<String>,
    pub seed: u64,
    /// Iterations actually examined.
    pub examined: u64,
    pub found: Vec<Found>,
}

const BATCH: u64 = 4096;

/// Searches for instances where every hypothesis except `dropped` holds and
/// the conclusion fails. Stops after the batch in which `max_found` hits have
/// accumulated, or after `budget` iterations.
pub fn hunt(template: &str, dropped: Option<&str>, budget: u64, cfg: &GenConfig, max_found: usize) -> Result<HuntOutcome> {
    let template = Template::parse(template)?;
    let dropped = template.resolve_drop(dropped)?;
    cfg.check()?;
    let d = dropped.as_deref();
    let mut hits: Vec<(u64, Instance)> = Vec::new();
    let mut examined = 0;
    while examined < budget && hits.len() < max_found.max(1) {
        let end = (examined + BATCH).min(budget);
        let batch: Vec<(u64, Instance)> = (examined..end)
            .into_par_iter()
            .filter_map(|i| {
                let inst = candidate(template, cfg, i).ok()?;
                inst.violates(template, d).unwrap_or(false).then_some((i, inst))
            })
            .collect();
        hits.extend(batch);
        examined = end;
    }
    hits.truncate(max_found);
    let mut found = hits
        .into_par_iter()
        .map(|(index, inst)| {
            let original_size = inst.size();
            let instance = inst.minimize(template, d);
            if !instance.violates(template, d)? {
                return Err(Error::Invariant("minimization lost the violation".into()));
            }
            let report = instance.report(template)?;
            Ok(Found { index, original_size, instance, report })
        })
        .collect::<Result<Vec<_>>>()?;
    found.sort_by_key(|f| (f.instance.size(), f.index));
    Ok(HuntOutcome { template, dropped, seed: cfg.seed, examined, found })
}

impl HuntOutcome {
    /// Instances whose report has every hypothesis holding: refutations of
    /// the theorem itself.
    pub fn refutations(&self) -> usize {
        self.found.iter().filter(|f| f.report.status == Status::Refuted).count()
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "template {}; dropped {}; seed {}; examined {}; found {}\n",
            self.template.as_str(),
            self.dropped.as_deref().unwrap_or("none"),
            self.seed,
            self.examined,
            self.found.len()
        );
        for f in &self.found {
            out.push_str(&format!(
                "-- iteration {} (size {} -> {})\n",
                f.index,
                f.original_size,
                f.instance.size()
            ));
            out.push_str(&f.report.render());
        }
        out
    }
}
