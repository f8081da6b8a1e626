use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fincomplete_core::construct::{self, Event};
use fincomplete_core::format::LoadedModel;
use fincomplete_core::ops::{self, Property, VerifyArgs};
use fincomplete_core::optimal::{self, UmvueOutcome};
use fincomplete_core::search::{self, GenConfig};
use fincomplete_core::{checks, registry, verify};
use fincomplete_core::{format_rational, CheckReport, Error, FiniteModel, Limits, Partition, Rational, Verdict};
use serde_json::{json, Value};

#[derive(Debug, Parser)]
#[command(name = "fincomplete", version, about = "Exact completeness and sufficiency checks for finite statistical models")]
pub struct Cli {
    /// Emit the structured JSON report instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Worker threads for internal parallelism.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a model file and check its invariants.
    Validate(ModelArg),
    /// Check one property of a partition (or of the model).
    Check(CheckCmd),
    /// Minimal sufficient partition.
    Minimal(SubCmd),
    /// The optimal σ-algebra O.
    OptimalSigma(SubCmd),
    /// Optimal unbiased estimator of an estimand.
    Umvue(UmvueCmd),
    /// Conditional expectation of an estimator given a sufficient partition.
    RaoBlackwell(RaoBlackwellCmd),
    /// Evaluate a theorem's hypotheses and conclusion on an instance.
    Verify(VerifyCmd),
    /// Replay counterexample registry entries.
    Counterexample(CounterexampleCmd),
    /// Hunt for instances that violate a theorem with one hypothesis dropped.
    Search(SearchCmd),
    /// Build product, power, weighted, coupled or truncated models.
    Construct(ConstructCmd),
}

#[derive(Debug, Args)]
pub struct ModelArg {
    /// Model file (JSON).
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Args)]
pub struct SubCmd {
    #[arg(long)]
    pub model: PathBuf,
    /// Submodel selector: `all`, `theta<i>=<value>` or `params=0,2`.
    #[arg(long, default_value = "all")]
    pub sub: String,
}

#[derive(Debug, Args)]
pub struct CheckCmd {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub property: String,
    /// Partition name, builtin (`discrete`, `trivial`, `minimal`) or `A+B` join.
    #[arg(long)]
    pub partition: Option<String>,
    /// Second partition for `independent` and `basu`.
    #[arg(long)]
    pub other: Option<String>,
    #[arg(long, default_value = "all")]
    pub sub: String,
}

#[derive(Debug, Args)]
pub struct UmvueCmd {
    #[arg(long)]
    pub model: PathBuf,
    /// Estimand name or inline comma list, one value per parameter.
    #[arg(long)]
    pub estimand: String,
    #[arg(long, default_value = "all")]
    pub sub: String,
}

#[derive(Debug, Args)]
pub struct RaoBlackwellCmd {
    #[arg(long)]
    pub model: PathBuf,
    /// Function name or inline comma list, one value per point.
    #[arg(long)]
    pub estimator: String,
    #[arg(long)]
    pub partition: String,
    #[arg(long, default_value = "all")]
    pub sub: String,
}

#[derive(Debug, Args)]
pub struct VerifyCmd {
    /// One of main, cor-two-blocks, cks, cks-rewrite, hom-connected,
    /// uniform-truncation, unknown-truncation, smith, bondesson.
    pub theorem: String,
    #[arg(long)]
    pub model: PathBuf,
    /// Family model `R` for `cks`.
    #[arg(long)]
    pub r_model: Option<PathBuf>,
    #[arg(long)]
    pub c1: Option<String>,
    #[arg(long)]
    pub c2: Option<String>,
    /// Partitions, repeated; paired in order with `--exhaustion`.
    #[arg(long = "partition")]
    pub partitions: Vec<String>,
    /// Exhaustions, repeated: a name, `full` or `theta<k>-sections`.
    #[arg(long = "exhaustion")]
    pub exhaustions: Vec<String>,
    #[arg(long)]
    pub mode: Option<String>,
    /// Check only the first piece of the second exhaustion.
    #[arg(long)]
    pub weak: bool,
    /// Event list: a name, `intervals`, `uprays`, `downrays` or `full`.
    #[arg(long)]
    pub events: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub weight: Option<String>,
    #[arg(long)]
    pub estimator: Option<String>,
}

#[derive(Debug, Args)]
pub struct CounterexampleCmd {
    /// Entry ids (e.g. CE55); all entries when omitted.
    pub ids: Vec<String>,
    /// Print the equivalent command lines instead of replaying.
    #[arg(long)]
    pub script: bool,
}

#[derive(Debug, Args)]
pub struct SearchCmd {
    /// main, cor-two-blocks, cks or cks-rewrite.
    #[arg(long)]
    pub template: String,
    /// Hypothesis label prefix to drop, or `none`.
    #[arg(long)]
    pub drop: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    pub budget: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stop after this many violating instances.
    #[arg(long, default_value_t = 1)]
    pub max_found: usize,
    /// Directory for the found instances' model files and reports.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Builder {
    Product,
    Power,
    Weight,
    Coupled,
    Truncate,
}

#[derive(Debug, Args)]
pub struct ConstructCmd {
    pub builder: Builder,
    #[arg(long)]
    pub model: PathBuf,
    /// Second factor for `product`.
    #[arg(long)]
    pub factor: Option<PathBuf>,
    /// Family model `R` for `coupled`.
    #[arg(long)]
    pub r_model: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Weight function name or inline list, for `weight`.
    #[arg(long)]
    pub weight: Option<String>,
    /// Event list for `truncate`.
    #[arg(long)]
    pub events: Option<String>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub struct Output {
    pub text: String,
    pub code: u8,
}

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NotSufficient | Error::NotCapStable(..) => 2,
            _ => 3,
        };
        Failure { code, message: e.to_string() }
    }
}

type Run = Result<Output, Failure>;

fn input(message: impl Into<String>) -> Failure {
    Failure { code: 3, message: message.into() }
}

fn load(path: &Path) -> Result<LoadedModel, Failure> {
    LoadedModel::read(path).map_err(Failure::from)
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn rationals(v: &[Rational]) -> Vec<String> {
    v.iter().map(format_rational).collect()
}

fn partition_json(m: &FiniteModel, c: &Partition) -> Value {
    let blocks: Vec<Vec<&str>> =
        c.blocks().iter().map(|b| b.iter().map(|&x| m.points()[x].as_str()).collect()).collect();
    json!({ "partition": c.to_string(), "blocks": blocks })
}

fn check_text(report: &CheckReport, m: &FiniteModel) -> String {
    let mut out = report.summary(Some(m));
    out.push('\n');
    if let Some(w) = &report.witness {
        let _ = writeln!(out, "witness: {w}");
    }
    for n in &report.notes {
        let _ = writeln!(out, "note: {n}");
    }
    out
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Fail => 1,
        Verdict::Pass | Verdict::Vacuous => 0,
    }
}

pub fn run(cli: &Cli) -> Run {
    let limits = Limits::from_env();
    let json = cli.json;
    match &cli.command {
        Command::Validate(a) => validate(a, json),
        Command::Check(a) => check(a, json, &limits),
        Command::Minimal(a) => {
            let l = load(&a.model)?;
            let sub = l.model.select(&a.sub)?;
            partition_out("minimal", &l.model, &checks::minimal_sufficient_partition(&l.model, &sub), json)
        }
        Command::OptimalSigma(a) => {
            let l = load(&a.model)?;
            let sub = l.model.select(&a.sub)?;
            let o = optimal::optimal_sigma_algebra_with(&l.model, &sub, &limits)?;
            partition_out("optimal-sigma", &l.model, &o, json)
        }
        Command::Umvue(a) => umvue(a, json, &limits),
        Command::RaoBlackwell(a) => rao_blackwell(a, json),
        Command::Verify(a) => verify_cmd(a, json, &limits),
        Command::Counterexample(a) => counterexample(a, json),
        Command::Search(a) => search_cmd(a, json),
        Command::Construct(a) => construct_cmd(a, json, &limits),
    }
}

fn validate(a: &ModelArg, json: bool) -> Run {
    let (report, shape) = match LoadedModel::read(&a.model) {
        Ok(l) => (CheckReport::pass("valid-model"), Some((l.model.num_points(), l.model.num_params()))),
        Err(Error::InvalidModel(msg)) => (
            CheckReport::fail("valid-model", fincomplete_core::Witness::Location { param: None, point: None })
                .with_note(msg),
            None,
        ),
        Err(e) => return Err(e.into()),
    };
    let code = verdict_code(report.verdict);
    let text = if json {
        json_text(&json!({
            "command": "validate",
            "report": report,
            "points": shape.map(|s| s.0),
            "params": shape.map(|s| s.1),
        }))
    } else {
        let mut t = format!("valid-model: {}\n", report.verdict);
        if let Some((m, k)) = shape {
            let _ = writeln!(t, "{m} points, {k} parameters");
        }
        for n in &report.notes {
            let _ = writeln!(t, "note: {n}");
        }
        t
    };
    Ok(Output { text, code })
}

fn check(a: &CheckCmd, json: bool, limits: &Limits) -> Run {
    let l = load(&a.model)?;
    let prop: Property = a.property.parse()?;
    let report = ops::run_check(&l, prop, a.partition.as_deref(), a.other.as_deref(), &a.sub, limits)?;
    let text = if json {
        json_text(&json!({ "command": "check", "sub": a.sub, "report": report }))
    } else {
        check_text(&report, &l.model)
    };
    Ok(Output { text, code: verdict_code(report.verdict) })
}

fn partition_out(command: &str, m: &FiniteModel, c: &Partition, json: bool) -> Run {
    let text = if json {
        let mut v = partition_json(m, c);
        v["command"] = json!(command);
        json_text(&v)
    } else {
        format!("partition {c}\nlabels {}\n", m.describe_partition(c))
    };
    Ok(Output { text, code: 0 })
}

fn umvue(a: &UmvueCmd, json: bool, limits: &Limits) -> Run {
    let l = load(&a.model)?;
    let sub = l.model.select(&a.sub)?;
    let kappa = l.estimand(&a.estimand)?;
    let u = optimal::umvue(&l.model, &sub, &kappa, limits)?;
    let code = match u.outcome {
        UmvueOutcome::Found { .. } => 0,
        UmvueOutcome::NoOptimal => 1,
        UmvueOutcome::NotEstimable => 2,
    };
    let text = if json {
        json_text(&json!({
            "command": "umvue",
            "optimal": partition_json(&l.model, &u.optimal),
            "outcome": u.outcome,
            "notes": u.notes,
        }))
    } else {
        let mut t = format!("optimal σ-algebra {}\n", u.optimal);
        match &u.outcome {
            UmvueOutcome::Found { estimator, .. } => {
                let _ = writeln!(t, "estimator [{}]", rationals(estimator).join(", "));
            }
            UmvueOutcome::NoOptimal => t.push_str("no optimal unbiased estimator: none is O-measurable\n"),
            UmvueOutcome::NotEstimable => t.push_str("not estimable: no unbiased estimator exists\n"),
        }
        for n in &u.notes {
            let _ = writeln!(t, "note: {n}");
        }
        t
    };
    Ok(Output { text, code })
}

fn rao_blackwell(a: &RaoBlackwellCmd, json: bool) -> Run {
    let l = load(&a.model)?;
    let sub = l.model.select(&a.sub)?;
    let g = l.function(&a.estimator)?;
    let c = l.partition(&a.partition)?;
    let rb = optimal::rao_blackwell(&g, &c, &l.model, &sub)?;
    let text = if json {
        json_text(&json!({ "command": "rao-blackwell", "partition": c.to_string(), "estimator": rationals(&rb) }))
    } else {
        format!("estimator [{}]\n", rationals(&rb).join(", "))
    };
    Ok(Output { text, code: 0 })
}

fn verify_cmd(a: &VerifyCmd, json: bool, limits: &Limits) -> Run {
    let l = load(&a.model)?;
    let r = a.r_model.as_deref().map(load).transpose()?;
    let args = VerifyArgs {
        c1: a.c1.clone(),
        c2: a.c2.clone(),
        partitions: a.partitions.clone(),
        exhaustions: a.exhaustions.clone(),
        mode: a.mode.clone(),
        weak: a.weak,
        events: a.events.clone(),
        n: a.n,
        weight: a.weight.clone(),
        estimator: a.estimator.clone(),
    };
    let report = ops::run_verify(&a.theorem, &l, r.as_ref(), &args, limits)?;
    let code = report.status.exit_code() as u8;
    let text = if json { json_text(&serde_json::to_value(&report).expect("reports serialize")) } else { report.render() };
    Ok(Output { text, code })
}

fn counterexample(a: &CounterexampleCmd, json: bool) -> Run {
    let ids: Vec<String> =
        if a.ids.is_empty() { registry::IDS.iter().map(|s| s.to_string()).collect() } else { a.ids.clone() };
    let entries = ids.iter().map(|id| registry::load(id)).collect::<Result<Vec<_>, _>>()?;
    if a.script {
        let mut t = String::new();
        for e in &entries {
            let _ = writeln!(t, "# {} {}", e.id, e.title);
            for (args, exit) in e.cli_scripts() {
                let quoted: Vec<String> =
                    args.iter().map(|s| if s.contains([' ', '=', '{']) { format!("'{s}'") } else { s.clone() }).collect();
                let _ = writeln!(t, "fincomplete {}  # exit {exit}", quoted.join(" "));
            }
        }
        return Ok(Output { text: t, code: 0 });
    }
    let mut all_ok = true;
    let mut t = String::new();
    let mut docs = Vec::new();
    for e in &entries {
        let outcomes = e.replay();
        all_ok &= outcomes.iter().all(|o| o.ok());
        if json {
            let rows: Vec<Value> = outcomes
                .iter()
                .map(|o| {
                    json!({
                        "row": o.row,
                        "description": o.description,
                        "expected": o.expected,
                        "actual": o.actual,
                        "ok": o.ok(),
                    })
                })
                .collect();
            docs.push(json!({ "id": e.id, "title": e.title, "notes": e.notes, "rows": rows }));
        } else {
            let passed = outcomes.iter().filter(|o| o.ok()).count();
            let _ = writeln!(t, "{} {}: {passed}/{} rows", e.id, e.title, outcomes.len());
            for o in &outcomes {
                let _ = writeln!(t, "{}", o.render());
            }
        }
    }
    if json {
        t = json_text(&json!({ "command": "counterexample", "ok": all_ok, "entries": docs }));
    }
    Ok(Output { text: t, code: u8::from(!all_ok) })
}

fn search_cmd(a: &SearchCmd, json: bool) -> Run {
    let cfg = GenConfig::with_seed(a.seed);
    let out = search::hunt(&a.template, a.drop.as_deref(), a.budget, &cfg, a.max_found)?;
    if let Some(dir) = &a.out {
        for (i, f) in out.found.iter().enumerate() {
            let sub = dir.join(format!("found-{}-iter{}", i + 1, f.index));
            fs::create_dir_all(&sub).map_err(|e| input(format!("cannot create {}: {e}", sub.display())))?;
            for (name, body) in f.instance.files() {
                write_file(&sub.join(name), &body)?;
            }
            write_file(&sub.join("report.txt"), &f.report.render())?;
        }
    }
    let text = if json {
        let found: Vec<Value> = out
            .found
            .iter()
            .map(|f| {
                json!({
                    "iteration": f.index,
                    "original_size": f.original_size,
                    "size": f.instance.size(),
                    "files": f.instance.files().into_iter().map(|(n, b)| json!({ "name": n, "content": b })).collect::<Vec<_>>(),
                    "report": f.report,
                })
            })
            .collect();
        json_text(&json!({
            "command": "search",
            "template": out.template,
            "dropped": out.dropped,
            "seed": out.seed,
            "examined": out.examined,
            "found": found,
        }))
    } else {
        out.render()
    };
    Ok(Output { text, code: 0 })
}

fn write_file(path: &Path, body: &str) -> Result<(), Failure> {
    fs::write(path, body).map_err(|e| input(format!("cannot write {}: {e}", path.display())))
}

fn needed<'a, T>(v: &'a Option<T>, flag: &str, builder: &str) -> Result<&'a T, Failure> {
    v.as_ref().ok_or_else(|| input(format!("`construct {builder}` needs {flag}")))
}

fn construct_cmd(a: &ConstructCmd, json: bool, limits: &Limits) -> Run {
    let l = load(&a.model)?;
    let m = &l.model;
    let built = match a.builder {
        Builder::Product => {
            let b = load(needed(&a.factor, "--factor", "product")?)?;
            let p = construct::product_model(m, &b.model, limits)?;
            with_coordinates(p, m.num_points(), b.model.num_points())
        }
        Builder::Coupled => {
            let r = load(needed(&a.r_model, "--r-model", "coupled")?)?;
            let p = verify::cks_product(m, &r.model, limits)?;
            with_coordinates(p, m.num_points(), r.model.num_points())
        }
        Builder::Power => {
            let n = *needed(&a.n, "--n", "power")?;
            LoadedModel::bare(construct::power_model(m, n, limits)?)
        }
        Builder::Weight => {
            let q = l.function(needed(&a.weight, "--weight", "weight")?)?;
            LoadedModel::bare(construct::weighted_model(m, &q)?)
        }
        Builder::Truncate => {
            let events: Vec<Event> = l.events(needed(&a.events, "--events", "truncate")?)?;
            let n = *needed(&a.n, "--n", "truncate")?;
            let tf = construct::truncated_family(m, &events, n, limits)?;
            let (by_event, by_param) = verify::truncation_exhaustions(&tf, &events, m);
            let mut out = LoadedModel::bare(tf.model);
            out.partitions.insert("events".into(), tf.partition);
            out.exhaustions.insert("by-event".into(), by_event);
            out.exhaustions.insert("by-param".into(), by_param);
            out
        }
    };
    let body = built.to_json();
    let text = match &a.out {
        None => body,
        Some(path) => {
            write_file(path, &body)?;
            let (pts, params) = (built.model.num_points(), built.model.num_params());
            if json {
                json_text(&json!({ "command": "construct", "out": path.display().to_string(), "points": pts, "params": params }))
            } else {
                format!("wrote {} ({pts} points, {params} parameters)\n", path.display())
            }
        }
    };
    Ok(Output { text, code: 0 })
}

fn with_coordinates(p: FiniteModel, ma: usize, mb: usize) -> LoadedModel {
    let (x1, x2) = construct::coordinate_partitions(ma, mb);
    let mut out = LoadedModel::bare(p);
    out.partitions.insert("X1".into(), x1);
    out.partitions.insert("X2".into(), x2);
    out
}
