//! Executable statements of joint-completeness theorems.
//!
//! A verifier checks every hypothesis of a theorem on a concrete instance,
//! then checks the conclusion. Hypotheses never short-circuit, so a report
//! lists every gap. If all hypotheses hold and the conclusion fails, the
//! instance refutes the theorem; that status must never occur.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checks;
use crate::construct::{self, Event};
use crate::error::{Error, Result};
use crate::function::RationalFunction;
use crate::model::{Exhaustion, FiniteModel, Limits, ParamLabel, Submodel};
use crate::optimal;
use crate::partition::{Partition, UnionFind};
use crate::report::{CheckReport, Verdict, Witness};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    /// All hypotheses hold and so does the conclusion.
    Verified,
    /// Some hypothesis fails; the conclusion holds anyway.
    HypothesisUnmet,
    /// Some hypothesis fails and the conclusion fails too.
    ConclusionFailsWithHypothesisGap,
    /// All hypotheses hold but the conclusion fails.
    Refuted,
}

impl Status {
    pub fn from_results(hypotheses_hold: bool, conclusion_holds: bool) -> Self {
        match (hypotheses_hold, conclusion_holds) {
            (true, true) => Status::Verified,
            (false, true) => Status::HypothesisUnmet,
            (false, false) => Status::ConclusionFailsWithHypothesisGap,
            (true, false) => Status::Refuted,
        }
    }

    /// Process exit code: 0 verified, 1 conclusion fails under its hypotheses,
    /// 2 some hypothesis unmet.
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Verified => 0,
            Status::Refuted => 1,
            Status::HypothesisUnmet | Status::ConclusionFailsWithHypothesisGap => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Verified => "verified",
            Status::HypothesisUnmet => "hypothesis-unmet",
            Status::ConclusionFailsWithHypothesisGap => "conclusion-fails-with-hypothesis-gap",
            Status::Refuted => "refuted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisResult {
    pub label: String,
    pub report: CheckReport,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub theorem: String,
    pub hypothesis_results: Vec<HypothesisResult>,
    pub conclusion_result: CheckReport,
    pub status: Status,
    pub notes: Vec<String>,
}

impl TheoremReport {
    /// Labels of failing hypotheses, in plan order.
    pub fn failed_hypotheses(&self) -> Vec<&str> {
        self.hypothesis_results
            .iter()
            .filter(|h| h.report.failed())
            .map(|h| h.label.as_str())
            .collect()
    }

    pub fn render(&self) -> String {
        let mut out = format!("theorem: {}\nstatus: {}\n", self.theorem, self.status.as_str());
        for h in &self.hypothesis_results {
            let tag = match h.report.verdict {
                Verdict::Pass => "pass",
                Verdict::Fail => "FAIL",
                Verdict::Vacuous => "vacuous",
            };
            out.push_str(&format!("  [{tag}] {}", h.label));
            if let Some(w) = &h.report.witness {
                out.push_str(&format!(": {w}"));
            }
            out.push('\n');
        }
        out.push_str(&format!("conclusion: {}\n", self.conclusion_result.summary(None)));
        for n in self.notes.iter().chain(&self.conclusion_result.notes) {
            out.push_str(&format!("note: {n}\n"));
        }
        out
    }
}

type Thunk<'a> = Box<dyn Fn() -> CheckReport + Send + Sync + 'a>;

/// Hypotheses and conclusion of one theorem instance, not yet evaluated.
pub(crate) struct Plan<'a> {
    theorem: &'static str,
    hypotheses: Vec<(String, Thunk<'a>)>,
    conclusion: Thunk<'a>,
    notes: Vec<String>,
}

impl<'a> Plan<'a> {
    fn new(theorem: &'static str, conclusion: Thunk<'a>) -> Self {
        Plan { theorem, hypotheses: Vec::new(), conclusion, notes: Vec::new() }
    }

    fn hypothesis(&mut self, label: impl Into<String>, check: Thunk<'a>) {
        self.hypotheses.push((label.into(), check));
    }

    /// Evaluates every hypothesis and the conclusion.
    pub(crate) fn run(&self) -> TheoremReport {
        let hypothesis_results: Vec<HypothesisResult> = self
            .hypotheses
            .par_iter()
            .map(|(label, check)| HypothesisResult { label: label.clone(), report: check() })
            .collect();
        let conclusion_result = (self.conclusion)();
        let holds = hypothesis_results.iter().all(|h| h.report.holds());
        TheoremReport {
            theorem: self.theorem.to_string(),
            status: Status::from_results(holds, conclusion_result.holds()),
            hypothesis_results,
            conclusion_result,
            notes: self.notes.clone(),
        }
    }

    /// True when every hypothesis not matching `dropped` holds and the
    /// conclusion fails. Stops at the first failing hypothesis.
    pub(crate) fn violates_without(&self, dropped: Option<&str>) -> bool {
        let kept = self
            .hypotheses
            .iter()
            .filter(|(label, _)| dropped.is_none_or(|d| !label_matches(label, d)));
        for (_, check) in kept {
            if check().failed() {
                return false;
            }
        }
        (self.conclusion)().failed()
    }
}

/// `label` is `prefix` itself or extends it at a `.` or `[` boundary, so
/// `i` matches `i.complete[theta2=1]` but not `ii.complete[theta1=0]`.
pub fn label_matches(label: &str, prefix: &str) -> bool {
    match label.strip_prefix(prefix) {
        Some(rest) => rest.is_empty() || rest.starts_with('.') || rest.starts_with('[') || prefix.ends_with('.'),
        None => false,
    }
}

fn thunk<'a, F>(f: F) -> Thunk<'a>
where
    F: Fn() -> CheckReport + Send + Sync + 'a,
{
    Box::new(f)
}

fn check_partition(c: &Partition, m: &FiniteModel, name: &str) -> Result<()> {
    if c.len() != m.num_points() {
        return Err(Error::InvalidInput(format!(
            "partition {name} has {} entries, model has {} points",
            c.len(),
            m.num_points()
        )));
    }
    Ok(())
}

fn join_all<'p>(parts: impl IntoIterator<Item = &'p Partition>, m: usize) -> Partition {
    parts.into_iter().fold(Partition::trivial(m), |acc, c| acc.join(c))
}

pub(crate) fn plan_main<'a>(m: &'a FiniteModel, family: &[(Partition, Exhaustion)]) -> Result<Plan<'a>> {
    if family.is_empty() {
        return Err(Error::InvalidInput("the family of partitions is empty".into()));
    }
    let full = m.all();
    for (i, (c, ex)) in family.iter().enumerate() {
        check_partition(c, m, &format!("C{}", i + 1))?;
        ex.validate(m, &full)?;
    }
    let join = join_all(family.iter().map(|(c, _)| c), m.num_points());
    let mut plan = Plan::new("main", thunk(move || checks::is_complete(&join, m, &m.all())));
    for (i, (c, ex)) in family.iter().enumerate() {
        for (eta, piece) in &ex.pieces {
            let (c1, p1) = (c.clone(), piece.clone());
            plan.hypothesis(format!("C{}.complete[{eta}]", i + 1), thunk(move || checks::is_complete(&c1, m, &p1)));
            let (c2, p2) = (c.clone(), piece.clone());
            plan.hypothesis(format!("C{}.sufficient[{eta}]", i + 1), thunk(move || checks::is_sufficient(&c2, m, &p2)));
        }
    }
    Ok(plan)
}

/// Each `C_i` complete sufficient for every piece of its exhaustion implies
/// the join of all `C_i` is complete for the model.
pub fn verify_main(m: &FiniteModel, family: &[(Partition, Exhaustion)]) -> Result<TheoremReport> {
    Ok(plan_main(m, family)?.run())
}

pub(crate) fn plan_cor_two_blocks<'a>(m: &'a FiniteModel, c1: &Partition, c2: &Partition) -> Result<Plan<'a>> {
    m.require_tuples(2)?;
    check_partition(c1, m, "C1")?;
    check_partition(c2, m, "C2")?;
    let join = c1.join(c2);
    let mut plan = Plan::new("cor-two-blocks", thunk(move || checks::is_complete(&join, m, &m.all())));
    for (tag, c, coord) in [("i", c1, 2), ("ii", c2, 1)] {
        for (eta, piece) in m.sections(coord)? {
            let (ca, pa) = (c.clone(), piece.clone());
            plan.hypothesis(format!("{tag}.complete[{eta}]"), thunk(move || checks::is_complete(&ca, m, &pa)));
            let (cb, pb) = (c.clone(), piece);
            plan.hypothesis(format!("{tag}.sufficient[{eta}]"), thunk(move || checks::is_sufficient(&cb, m, &pb)));
        }
    }
    plan.notes.push("the conclusion is completeness of the join only; its sufficiency is not claimed".into());
    Ok(plan)
}

/// Two-block grid case: `C1` complete sufficient on every `theta2`-section and
/// `C2` on every `theta1`-section imply `C1 ∨ C2` complete.
pub fn verify_cor_two_blocks(m: &FiniteModel, c1: &Partition, c2: &Partition) -> Result<TheoremReport> {
    Ok(plan_cor_two_blocks(m, c1, c2)?.run())
}

/// The model `{Q_{theta1} ⊗ R_{theta1,theta2}}`, labeled by `r`'s parameters.
pub fn cks_product(q: &FiniteModel, r: &FiniteModel, limits: &Limits) -> Result<FiniteModel> {
    r.require_tuples(2)?;
    let pairs = r
        .params()
        .iter()
        .enumerate()
        .map(|(tr, label)| {
            let theta1 = label.coord(1).unwrap_or_default();
            let tq = q
                .params()
                .iter()
                .position(|p| p == &ParamLabel::atom(theta1) || p.to_string() == theta1)
                .ok_or_else(|| {
                    Error::InvalidInput(format!("R parameter {label} names theta1 = {theta1}, which Q lacks"))
                })?;
            Ok((tq, tr))
        })
        .collect::<Result<Vec<_>>>()?;
    construct::coupled_product(q, r, &pairs, limits)
}

const INTEGRABILITY_NOTE: &str =
    "vacuous on finite spaces: every function is integrable under every law";

pub(crate) fn plan_cks<'a>(q: &'a FiniteModel, r: &'a FiniteModel, p: &'a FiniteModel) -> Result<Plan<'a>> {
    r.require_tuples(2)?;
    let discrete = Partition::discrete(p.num_points());
    let mut plan = Plan::new("cks", thunk(move || checks::is_complete(&discrete, p, &p.all())));
    plan.hypothesis(
        "i.complete",
        thunk(move || checks::is_complete(&Partition::discrete(q.num_points()), q, &q.all())),
    );
    for (eta, piece) in r.sections(1)? {
        plan.hypothesis(
            format!("ii.complete[{eta}]"),
            thunk(move || checks::is_complete(&Partition::discrete(r.num_points()), r, &piece)),
        );
    }
    for (eta, piece) in r.sections(2)? {
        plan.hypothesis(format!("iii.homogeneous[{eta}]"), thunk(move || checks::is_homogeneous(r, &piece)));
    }
    plan.hypothesis(
        "iv.integrable",
        thunk(|| CheckReport::vacuous("integrable").with_note(INTEGRABILITY_NOTE)),
    );
    plan.notes.push(
        "whether the theorem survives without the integrability hypothesis cannot be probed here: it is vacuous on finite spaces"
            .into(),
    );
    Ok(plan)
}

/// `Q` complete, each `theta1`-section of `R` complete and each
/// `theta2`-section of `R` homogeneous imply `{Q ⊗ R}` complete.
pub fn verify_cks(q: &FiniteModel, r: &FiniteModel, limits: &Limits) -> Result<TheoremReport> {
    let p = cks_product(q, r, limits)?;
    let report = plan_cks(q, r, &p)?.run();
    Ok(report)
}

/// Supports of the block-mass vectors agree across the submodel.
fn marginal_homogeneous(c: &Partition, m: &FiniteModel, sub: &Submodel) -> CheckReport {
    let first = sub.indices()[0];
    let base = m.block_masses(c, first);
    for &theta in &sub.indices()[1..] {
        let masses = m.block_masses(c, theta);
        if let Some(b) = (0..c.num_blocks()).find(|&b| base[b].is_zero_mass() != masses[b].is_zero_mass()) {
            let (theta, other) = if base[b].is_zero_mass() { (theta, first) } else { (first, theta) };
            let point = c.blocks()[b][0];
            return CheckReport::fail("marginal-homogeneous", Witness::Support { point, theta, other })
                .with_note(format!("block {b} is charged by one law only"));
        }
    }
    CheckReport::pass("marginal-homogeneous")
}

trait ZeroMass {
    fn is_zero_mass(&self) -> bool;
}

impl ZeroMass for crate::rational::Rational {
    fn is_zero_mass(&self) -> bool {
        num_traits::Zero::is_zero(self)
    }
}

pub(crate) fn plan_cks_rewrite<'a>(m: &'a FiniteModel, c1: &Partition, c2: &Partition) -> Result<Plan<'a>> {
    m.require_tuples(2)?;
    check_partition(c1, m, "C1")?;
    check_partition(c2, m, "C2")?;
    let join = c1.join(c2);
    let mut plan = Plan::new("cks-rewrite", thunk(move || checks::is_complete(&join, m, &m.all())));
    let theta2_sections = m.sections(2)?;
    for (eta, piece) in theta2_sections.clone() {
        let c = c1.clone();
        plan.hypothesis(format!("i.complete[{eta}]"), thunk(move || checks::is_complete(&c, m, &piece)));
    }
    for (eta, piece) in m.sections(1)? {
        let (a, pa) = (c1.clone(), piece.clone());
        plan.hypothesis(format!("ii.ancillary[{eta}]"), thunk(move || checks::is_ancillary(&a, m, &pa)));
        let (b, pb) = (c2.clone(), piece.clone());
        plan.hypothesis(format!("ii.complete[{eta}]"), thunk(move || checks::is_complete(&b, m, &pb)));
        let (s, ps) = (c2.clone(), piece);
        plan.hypothesis(format!("ii.sufficient[{eta}]"), thunk(move || checks::is_sufficient(&s, m, &ps)));
    }
    for (eta, piece) in theta2_sections {
        let c = c2.clone();
        plan.hypothesis(format!("iii.homogeneous[{eta}]"), thunk(move || marginal_homogeneous(&c, m, &piece)));
    }
    plan.hypothesis(
        "iv.integrable",
        thunk(|| CheckReport::vacuous("integrable").with_note(INTEGRABILITY_NOTE)),
    );
    Ok(plan)
}

/// Partition form: `C1` complete per `theta2`-section, `C1` ancillary and `C2`
/// complete sufficient per `theta1`-section, `C2`-marginals homogeneous per
/// `theta2`-section imply `C1 ∨ C2` complete.
pub fn verify_cks_rewrite(m: &FiniteModel, c1: &Partition, c2: &Partition) -> Result<TheoremReport> {
    Ok(plan_cks_rewrite(m, c1, c2)?.run())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HomMode {
    Sufficient,
    Minimal,
    Complete,
}

impl std::str::FromStr for HomMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sufficient" => Ok(HomMode::Sufficient),
            "minimal" => Ok(HomMode::Minimal),
            "complete" => Ok(HomMode::Complete),
            other => Err(Error::InvalidInput(format!("unknown mode `{other}`"))),
        }
    }
}

/// Connected components of the graph joining parameters that share a piece.
pub fn exhaustion_components(num_params: usize, exhaustions: &[&Exhaustion]) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::new(num_params);
    for ex in exhaustions {
        for (_, piece) in &ex.pieces {
            for w in piece.indices().windows(2) {
                uf.union(w[0], w[1]);
            }
        }
    }
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut root_of: Vec<Option<usize>> = vec![None; num_params];
    for t in 0..num_params {
        let r = uf.find(t);
        match root_of[r] {
            Some(i) => comps[i].push(t),
            None => {
                root_of[r] = Some(comps.len());
                comps.push(vec![t]);
            }
        }
    }
    comps
}

fn hom_property(mode: HomMode, c: &Partition, m: &FiniteModel, sub: &Submodel) -> CheckReport {
    match mode {
        HomMode::Sufficient => checks::is_sufficient(c, m, sub),
        HomMode::Minimal => checks::is_minimal_sufficient(c, m, sub),
        HomMode::Complete => checks::is_complete_sufficient(c, m, sub),
    }
}

/// Homogeneous model, connected exhaustions and the per-piece property imply
/// the same property for the join. `weak` checks the second partition on its
/// first piece only (two-block grid case, mode `sufficient`).
pub fn verify_hom_connected(
    m: &FiniteModel,
    family: &[(Partition, Exhaustion)],
    mode: HomMode,
    weak: bool,
) -> Result<TheoremReport> {
    if family.is_empty() {
        return Err(Error::InvalidInput("the family of partitions is empty".into()));
    }
    if weak && (mode != HomMode::Sufficient || family.len() != 2) {
        return Err(Error::InvalidInput(
            "the weak form applies to mode `sufficient` with exactly two partitions".into(),
        ));
    }
    let full = m.all();
    for (i, (c, ex)) in family.iter().enumerate() {
        check_partition(c, m, &format!("C{}", i + 1))?;
        ex.validate(m, &full)?;
    }
    let join = join_all(family.iter().map(|(c, _)| c), m.num_points());
    let mut plan = Plan::new("hom-connected", thunk(move || hom_property(mode, &join, m, &m.all())));
    plan.hypothesis("homogeneous", thunk(move || checks::is_homogeneous(m, &m.all())));
    let exhaustions: Vec<&Exhaustion> = family.iter().map(|(_, e)| e).collect();
    let comps = exhaustion_components(m.num_params(), &exhaustions);
    plan.hypothesis(
        "connected",
        thunk(move || {
            if comps.len() == 1 {
                CheckReport::pass("connected")
            } else {
                CheckReport::fail("connected", Witness::Components { components: comps.clone() })
            }
        }),
    );
    for (i, (c, ex)) in family.iter().enumerate() {
        let pieces = if weak && i == 1 { &ex.pieces[..1] } else { &ex.pieces[..] };
        for (eta, piece) in pieces {
            let (cc, pp) = (c.clone(), piece.clone());
            let tag = match mode {
                HomMode::Sufficient => "sufficient",
                HomMode::Minimal => "minimal-sufficient",
                HomMode::Complete => "complete-sufficient",
            };
            plan.hypothesis(format!("C{}.{tag}[{eta}]", i + 1), thunk(move || hom_property(mode, &cc, m, &pp)));
        }
    }
    if weak {
        plan.notes.push("weak form: the second partition is checked on its first piece only".into());
    }
    Ok(plan.run())
}

fn cap_stability_report(events: &[Event]) -> CheckReport {
    match construct::cap_stability_violation(events) {
        None => CheckReport::pass("cap-stable"),
        Some((i, j)) => {
            let cap: Vec<usize> = events[i]
                .points
                .iter()
                .copied()
                .filter(|x| events[j].points.contains(x))
                .collect();
            CheckReport::fail("cap-stable", Witness::Event { points: cap }).with_note(format!(
                "events `{}` and `{}` intersect outside the list",
                events[i].label, events[j].label
            ))
        }
    }
}

/// Conditioned uniform-type family: `σ(E^n : E)` is sufficient for
/// `{μ(·|E)^{⊗n}}`, and complete when the events are ∩-stable.
pub fn verify_uniform_truncation(m0: &FiniteModel, events: &[Event], n: usize, limits: &Limits) -> Result<TheoremReport> {
    if m0.num_params() != 1 {
        return Err(Error::InvalidInput("uniform truncation takes a single base law".into()));
    }
    let family = construct::truncated_family_unchecked(m0, events, n, limits)?;
    let stable = cap_stability_report(events);
    let t = &family;
    let mut plan = Plan::new(
        "uniform-truncation",
        thunk(move || checks::is_complete_sufficient(&t.partition, &t.model, &t.model.all())),
    );
    plan.hypothesis("cap-stable", thunk(move || stable.clone()));
    plan.notes.push("sufficiency holds for any event list; completeness needs ∩-stability".into());
    Ok(plan.run())
}

/// Exhaustions of a truncation family by event and by base parameter.
pub fn truncation_exhaustions(family: &construct::TruncatedFamily, events: &[Event], m0: &FiniteModel) -> (Exhaustion, Exhaustion) {
    let by_event = Exhaustion::group_by("by-event", &family.model, |t, _| {
        format!("E={}", events[family.origin[t].1].label)
    });
    let by_param = Exhaustion::group_by("by-param", &family.model, |t, _| {
        format!("P={}", m0.params()[family.origin[t].0])
    });
    (by_event, by_param)
}

/// `C` complete sufficient for `{P^{⊗n}}` and ∩-stable events imply
/// `C ∨ σ(E^n : E)` complete sufficient for the truncated family. The route
/// through [`verify_main`] is run as well and recorded in the notes.
pub fn verify_unknown_truncation(
    m0: &FiniteModel,
    c: &Partition,
    events: &[Event],
    n: usize,
    limits: &Limits,
) -> Result<TheoremReport> {
    let power = construct::power_model(m0, n, limits)?;
    check_partition(c, &power, "C")?;
    let family = construct::truncated_family_unchecked(m0, events, n, limits)?;
    let join = c.join(&family.partition);
    let stable = cap_stability_report(events);
    let (t, pw) = (&family, &power);
    let mut plan = Plan::new(
        "unknown-truncation",
        thunk(move || checks::is_complete_sufficient(&join, &t.model, &t.model.all())),
    );
    plan.hypothesis("cap-stable", thunk(move || stable.clone()));
    let (ca, cb) = (c.clone(), c.clone());
    plan.hypothesis("complete[power]", thunk(move || checks::is_complete(&ca, pw, &pw.all())));
    plan.hypothesis("sufficient[power]", thunk(move || checks::is_sufficient(&cb, pw, &pw.all())));
    let (by_event, by_param) = truncation_exhaustions(&family, events, m0);
    let route = verify_main(&family.model, &[(c.clone(), by_event), (family.partition.clone(), by_param)])?;
    plan.notes.push(format!(
        "route through the main theorem (C per event, σ(E^n) per base law): {}",
        route.status.as_str()
    ));
    Ok(plan.run())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmithMode {
    /// Sufficiency is preserved by weighting.
    Sufficient,
    /// Complete sufficiency is preserved by weighting.
    CompleteSufficient,
}

/// A (complete) sufficient `c` stays (complete) sufficient for the `q`-weighted model.
pub fn verify_smith(m: &FiniteModel, c: &Partition, q: &[crate::rational::Rational], mode: SmithMode) -> Result<TheoremReport> {
    check_partition(c, m, "C")?;
    let weighted = construct::weighted_model(m, q)?;
    let w = &weighted;
    let conclusion: Thunk<'_> = match mode {
        SmithMode::Sufficient => {
            let cc = c.clone();
            thunk(move || checks::is_sufficient(&cc, w, &w.all()))
        }
        SmithMode::CompleteSufficient => {
            let cc = c.clone();
            thunk(move || checks::is_complete_sufficient(&cc, w, &w.all()))
        }
    };
    let mut plan = Plan::new("smith", conclusion);
    let cs = c.clone();
    plan.hypothesis("sufficient", thunk(move || checks::is_sufficient(&cs, m, &m.all())));
    if mode == SmithMode::CompleteSufficient {
        let cc = c.clone();
        plan.hypothesis("complete", thunk(move || checks::is_complete(&cc, m, &m.all())));
    }
    let dropped = m.num_params() - weighted.num_params();
    if dropped > 0 {
        plan.notes.push(format!("{dropped} parameter(s) with P(q) = 0 dropped from the weighted model"));
    }
    Ok(plan.run())
}

/// An estimator optimal unbiased in every piece of an exhaustion is optimal
/// unbiased in the whole model.
pub fn verify_bondesson(m: &FiniteModel, exhaustion: &Exhaustion, g: &RationalFunction, limits: &Limits) -> Result<TheoremReport> {
    exhaustion.validate(m, &m.all())?;
    if g.len() != m.num_points() {
        return Err(Error::InvalidInput("estimator length differs from the number of points".into()));
    }
    // Surface guard errors before building thunks that cannot return them.
    for (_, piece) in &exhaustion.pieces {
        optimal::optimal_sigma_algebra_with(m, piece, limits)?;
    }
    let full = m.all();
    optimal::optimal_sigma_algebra_with(m, &full, limits)?;
    let optimal_on = move |sub: &Submodel| {
        optimal::is_optimal_unbiased(g, m, sub, limits).expect("guard checked above")
    };
    let mut plan = Plan::new("bondesson", thunk(move || optimal_on(&full)));
    for (eta, piece) in &exhaustion.pieces {
        let p = piece.clone();
        plan.hypothesis(format!("optimal[{eta}]"), thunk(move || optimal_on(&p)));
    }
    Ok(plan.run())
}
