//! Acceptance criteria 1-9, one PASS/FAIL line each. Runs as its own binary
//! so the lines always reach the test log.

mod common;

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use common::r;
use fincomplete_core::construct::{self, Event};
use fincomplete_core::format::LoadedModel;
use fincomplete_core::model::ParamLabel;
use fincomplete_core::search::{self, GenConfig, Recipe};
use fincomplete_core::{checks, optimal, registry, verify};
use fincomplete_core::{Exhaustion, FiniteModel, Limits, Partition, Rational, Status, Witness};
use num_traits::Zero;
use rayon::prelude::*;

const SEED: u64 = 20_261_016;

/// A criterion's outcome: a digest of everything it computed plus a one-line
/// summary, or the reason it failed.
type Outcome = Result<(String, String), String>;

fn ensure(ok: bool, why: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(why())
    }
}

fn shipped(name: &str) -> LoadedModel {
    LoadedModel::parse(registry::model_file(name).expect("shipped model")).expect("shipped model parses")
}

fn abs_diff_minus(c: Rational) -> Vec<Rational> {
    [0, 1, 1, 0].iter().map(|&d| r(d, 1) - &c).collect()
}

fn zero_means(m: &FiniteModel, h: &[Rational]) -> bool {
    (0..m.num_params()).all(|t| m.expectation(t, h).is_zero())
}

fn registry_replay() -> Outcome {
    let outcomes = registry::replay_all().map_err(|e| e.to_string())?;
    let mut digest = String::new();
    for o in &outcomes {
        ensure(o.ok(), || o.render())?;
        let _ = writeln!(digest, "{}", o.render());
    }

    let l = shipped("ce55.model");
    let m = &l.model;
    let c1 = l.partition("C1").map_err(|e| e.to_string())?;
    for sel in ["theta1=1", "theta1=2", "theta2=1", "theta2=2"] {
        let sub = m.select(sel).map_err(|e| e.to_string())?;
        ensure(checks::is_complete_sufficient(&c1, m, &sub).passed(), || format!("CE55 C1 on {sel}"))?;
    }
    let join = l.partition("C1+C2").map_err(|e| e.to_string())?;
    ensure(join.to_string() == "{0,1}{2}", || format!("CE55 join is {join}"))?;
    ensure(checks::is_complete(&join, m, &m.all()).passed(), || "CE55 join incomplete".into())?;
    ensure(checks::is_sufficient(&join, m, &m.all()).failed(), || "CE55 join sufficient".into())?;

    let (q, rr) = (shipped("ce53-q.model").model, shipped("ce53-r.model").model);
    let report = verify::verify_cks(&q, &rr, &Limits::default()).map_err(|e| e.to_string())?;
    let w53 = abs_diff_minus(r(2, 3));
    ensure(report.failed_hypotheses().iter().all(|h| h.starts_with("iii.")), || "CE53 flags".into())?;
    ensure(report.conclusion_result.witness == Some(Witness::function(w53.clone())), || "CE53 witness".into())?;
    ensure(zero_means(&shipped("ce53.model").model, &w53), || "CE53 witness means".into())?;

    let r54 = shipped("ce54-r.model").model;
    ensure(checks::is_complete(&Partition::discrete(2), &r54, &r54.all()).passed(), || "CE54 R".into())?;
    let p54 = shipped("ce54.model").model;
    let w54 = abs_diff_minus(r(4, 9));
    let rep54 = checks::is_complete(&Partition::discrete(4), &p54, &p54.all());
    ensure(rep54.witness == Some(Witness::function(w54.clone())), || format!("CE54 witness {:?}", rep54.witness))?;
    ensure(zero_means(&p54, &w54), || "CE54 witness means".into())?;

    let l52 = shipped("ce52.model");
    let m52 = &l52.model;
    let j52 = l52.partition("sigmaX1+sigmaSum").map_err(|e| e.to_string())?;
    let diff: Vec<Rational> = [0, -1, 1, 0].iter().map(|&v| r(v, 1)).collect();
    let rep52 = checks::is_complete(&j52, m52, &m52.all());
    ensure(rep52.witness == Some(Witness::function(diff.clone())), || "CE52 witness".into())?;
    ensure(zero_means(m52, &diff), || "CE52 witness means".into())?;
    Ok((digest, format!("{} rows replayed, witnesses re-checked", outcomes.len())))
}

fn main_theorem_suite() -> Outcome {
    let draws: Vec<Result<(String, usize), String>> = (0..510u64)
        .into_par_iter()
        .map(|i| {
            let recipe = Recipe::ALL[(i % 3) as usize];
            let mut rng = search::stream_rng(SEED, i);
            let inst = search::gen_main_instance_with(&mut rng, &GenConfig::with_seed(SEED), recipe)
                .map_err(|e| format!("draw {i}: {e}"))?;
            let (m, k) = (inst.model.num_points(), inst.model.num_params());
            ensure(m <= 64 && k <= 8, || format!("draw {i}: size {m}x{k}"))?;
            let report = verify::verify_main(&inst.model, &inst.family).map_err(|e| e.to_string())?;
            ensure(report.status == Status::Verified, || format!("draw {i}:\n{}", report.render()))?;
            Ok((format!("{i} {recipe:?} {m}x{k} {}", report.conclusion_result.verdict), m))
        })
        .collect();
    let lines = draws.into_iter().collect::<Result<Vec<_>, _>>()?;
    let largest = lines.iter().map(|(_, m)| *m).max().unwrap_or(0);
    let digest: Vec<String> = lines.into_iter().map(|(l, _)| l).collect();
    Ok((digest.join("\n"), format!("{} verified, up to {largest} points", digest.len())))
}

fn oracle_equivalence() -> Outcome {
    let rows: Vec<Result<String, String>> = (0..2000u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = search::stream_rng(SEED ^ 3, i);
            let m = rand::Rng::random_range(&mut rng, 1..=5usize);
            let k = rand::Rng::random_range(&mut rng, 1..=4usize);
            let model = common::grid_model(&mut rng, m, k);
            let cands = [
                Partition::discrete(m),
                common::random_partition(&mut rng, m),
                checks::minimal_sufficient_partition(&model, &model.all()),
            ];
            let mut line = format!("{i}");
            for c in &cands {
                let engine = checks::is_complete(c, &model, &model.all()).passed();
                let oracle = common::oracle_complete(c, &model);
                ensure(engine == oracle, || format!("model {i}, partition {c}: engine {engine}, oracle {oracle}"))?;
                line.push(if engine { '+' } else { '-' });
            }
            Ok(line)
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    let complete = rows.iter().map(|l| l.matches('+').count()).sum::<usize>();
    Ok((rows.join(" "), format!("{} verdicts agree, {complete} complete", rows.len() * 3)))
}

/// Complete sufficient partitions found by search: exhaustive for small
/// models, randomized refinements of candidates otherwise.
fn complete_sufficient_candidates(m: &FiniteModel, rng: &mut impl rand::Rng) -> Vec<Partition> {
    let n = m.num_points();
    let all = m.all();
    let pool: Vec<Partition> = if n <= 6 {
        common::all_partitions(n)
    } else {
        let min = checks::minimal_sufficient_partition(m, &all);
        let mut pool = vec![min.clone(), Partition::discrete(n)];
        for _ in 0..200 {
            let p = common::random_partition(rng, n);
            pool.push(min.join(&p));
            pool.push(p);
        }
        pool
    };
    pool.into_iter().filter(|c| checks::is_complete_sufficient(c, m, &all).passed()).collect()
}

fn optimal_sigma_suite() -> Outcome {
    let limits = Limits::default();
    let rows: Vec<Result<(String, usize), String>> = (0..300u64)
        .into_par_iter()
        .map(|i| {
            let cfg = GenConfig { homogeneous: i % 2 == 1, ..GenConfig::sized(SEED, 12, 5) };
            let mut rng = search::stream_rng(SEED ^ 4, i);
            let m = search::random_model_with(&mut rng, &cfg).map_err(|e| e.to_string())?;
            let all = m.all();
            let support = m.support_union(&all);
            let o = optimal::optimal_sigma_algebra_with(&m, &all, &limits).map_err(|e| e.to_string())?;
            ensure(checks::is_complete(&o, &m, &all).passed(), || format!("model {i}: O incomplete"))?;
            let min = checks::minimal_sufficient_partition(&m, &all);
            let mut sufficient = vec![min.clone(), Partition::discrete(m.num_points())];
            for _ in 0..5 {
                let p = common::random_partition(&mut rng, m.num_points());
                sufficient.push(min.join(&p));
                if checks::is_sufficient(&p, &m, &all).passed() {
                    sufficient.push(p);
                }
            }
            for c in &sufficient {
                ensure(checks::is_sufficient(c, &m, &all).passed(), || format!("model {i}: {c} not sufficient"))?;
                ensure(o.coarser_on(c, &support), || format!("model {i}: O not below sufficient {c}"))?;
            }
            let (exists, o2) = optimal::exists_complete_sufficient(&m, &all, &limits).map_err(|e| e.to_string())?;
            let mut found = 0;
            if exists.passed() {
                ensure(o2 == o, || format!("model {i}: O differs between calls"))?;
                ensure(checks::is_complete_sufficient(&o, &m, &all).passed(), || format!("model {i}: O not cs"))?;
                for c in complete_sufficient_candidates(&m, &mut rng) {
                    ensure(c.equal_on(&o, &support) && o.refines(&c), || format!("model {i}: cs {c} vs O {o}"))?;
                    found += 1;
                }
                ensure(found > 0, || format!("model {i}: search found no complete sufficient partition"))?;
            }
            Ok((format!("{i} {} {o} {found}", m.num_points()), found))
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    let with_cs = rows.iter().filter(|(_, f)| *f > 0).count();
    let compared: usize = rows.iter().map(|(_, f)| f).sum();
    let digest: Vec<String> = rows.into_iter().map(|(l, _)| l).collect();
    Ok((digest.join("\n"), format!("complete sufficient exists in {with_cs} models, {compared} found partitions equal O")))
}

fn meet_suite() -> Outcome {
    let limits = Limits::default();
    let rows: Vec<Result<String, String>> = (0..200u64)
        .into_par_iter()
        .map(|i| {
            let cfg = GenConfig::sized(SEED, 10, 6);
            let mut rng = search::stream_rng(SEED ^ 5, i);
            let m = search::random_model_with(&mut rng, &cfg).map_err(|e| e.to_string())?;
            let ex = search::random_exhaustion(&mut rng, &m);
            let (meet, report) = optimal::meet_of_optimal_sigmas(&m, &ex, &limits).map_err(|e| e.to_string())?;
            ensure(report.passed(), || format!("exhaustion {i}: {}", report.summary(Some(&m))))?;
            Ok(format!("{i} {} {meet}", ex.pieces.len()))
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    let summary = format!("{} exhaustions pass", rows.len());
    Ok((rows.join("\n"), summary))
}

fn uniform_base() -> FiniteModel {
    FiniteModel::new(
        (1..=5).map(|x| x.to_string()).collect(),
        vec![ParamLabel::atom("u")],
        vec![vec![r(1, 5); 5]],
    )
    .expect("uniform law")
}

fn taxi() -> Outcome {
    let m0 = uniform_base();
    let limits = Limits::default();
    let mut digest = String::new();
    for n in [2, 3] {
        let by_min = construct::power_statistic(5, n, |t| *t.iter().min().unwrap());
        let by_max = construct::power_statistic(5, n, |t| *t.iter().max().unwrap());
        let cases: [(&str, Vec<Event>, Partition); 3] = [
            ("intervals", construct::chain_intervals(m0.points()), by_min.join(&by_max)),
            ("uprays", construct::chain_uprays(m0.points()), by_min),
            ("downrays", construct::chain_downrays(m0.points()), by_max),
        ];
        for (name, events, stat) in cases {
            let tf = construct::truncated_family(&m0, &events, n, &limits).map_err(|e| e.to_string())?;
            let report = checks::is_complete_sufficient(&stat, &tf.model, &tf.model.all());
            ensure(report.passed(), || format!("{name}, n={n}: {}", report.summary(None)))?;
            ensure(tf.partition == stat, || format!("{name}, n={n}: σ(E^n) differs from the order statistic"))?;
            let _ = writeln!(digest, "{name} n={n} {} params {} blocks", tf.model.num_params(), stat.num_blocks());
        }
    }
    Ok((digest, "σ(min,max), σ(min), σ(max) complete sufficient for n = 2, 3".into()))
}

fn route_equality() -> Outcome {
    let m0 = uniform_base();
    let limits = Limits::default();
    let events = construct::chain_intervals(m0.points());
    let mut digest = String::new();
    for n in [2, 3] {
        let tf = construct::truncated_family(&m0, &events, n, &limits).map_err(|e| e.to_string())?;
        let ends = |t: usize| {
            let pts = &events[tf.origin[t].1].points;
            (pts[0], pts[pts.len() - 1])
        };
        let by_upper = Exhaustion::group_by("by-upper", &tf.model, |t, _| format!("b={}", ends(t).1));
        let by_lower = Exhaustion::group_by("by-lower", &tf.model, |t, _| format!("a={}", ends(t).0));
        let by_min = construct::power_statistic(5, n, |t| *t.iter().min().unwrap());
        let by_max = construct::power_statistic(5, n, |t| *t.iter().max().unwrap());
        let main = verify::verify_main(&tf.model, &[(by_min, by_upper), (by_max, by_lower)]).map_err(|e| e.to_string())?;
        let direct = verify::verify_uniform_truncation(&m0, &events, n, &limits).map_err(|e| e.to_string())?;
        ensure(main.status == Status::Verified, || format!("n={n} main route:\n{}", main.render()))?;
        ensure(direct.status == Status::Verified, || format!("n={n} direct:\n{}", direct.render()))?;
        ensure(
            main.conclusion_result.verdict == direct.conclusion_result.verdict,
            || format!("n={n}: routes disagree"),
        )?;
        let _ = writeln!(digest, "n={n} main {} direct {}", main.status.as_str(), direct.status.as_str());
    }
    Ok((digest, "both routes verified for n = 2, 3".into()))
}

fn hunt_regression() -> Outcome {
    let cfg = GenConfig::with_seed(SEED);
    let hit = search::hunt("cor-two-blocks", Some("C1-sufficiency"), 100_000, &cfg, 1).map_err(|e| e.to_string())?;
    ensure(!hit.found.is_empty(), || format!("nothing found in {} iterations", hit.examined))?;
    let f = &hit.found[0];
    ensure(f.report.status == Status::ConclusionFailsWithHypothesisGap, || f.report.render())?;
    ensure(f.report.failed_hypotheses().iter().all(|h| h.starts_with("i.sufficient")), || f.report.render())?;
    let none = search::hunt("cor-two-blocks", None, 100_000, &cfg, usize::MAX).map_err(|e| e.to_string())?;
    ensure(none.examined == 100_000, || format!("stopped after {}", none.examined))?;
    ensure(none.found.is_empty(), || none.render())?;
    let summary = format!(
        "hit at iteration {} (size {} -> {}), none in {} with nothing dropped",
        f.index,
        f.original_size,
        f.instance.size(),
        none.examined
    );
    Ok((format!("{}\n{}", hit.render(), none.render()), summary))
}

struct Criterion {
    number: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

const CRITERIA: [Criterion; 8] = [
    Criterion { number: 1, name: "registry replay", limit: Duration::from_secs(1), run: registry_replay },
    Criterion { number: 2, name: "main-theorem suite (510 draws)", limit: Duration::from_secs(60), run: main_theorem_suite },
    Criterion { number: 3, name: "completeness vs minor oracle (2000 models)", limit: Duration::from_secs(30), run: oracle_equivalence },
    Criterion { number: 4, name: "optimal σ-algebra suite (300 models)", limit: Duration::from_secs(120), run: optimal_sigma_suite },
    Criterion { number: 5, name: "meet of optimal σ-algebras (200 exhaustions)", limit: Duration::from_secs(60), run: meet_suite },
    Criterion { number: 6, name: "discrete taxi truncations", limit: Duration::from_secs(5), run: taxi },
    Criterion { number: 7, name: "truncation route equality", limit: Duration::from_secs(5), run: route_equality },
    Criterion { number: 8, name: "hunt regression (budget 10^5)", limit: Duration::from_secs(120), run: hunt_regression },
];

fn line(number: u32, pass: bool, name: &str, detail: &str) {
    println!("criterion {number} [{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
}

fn digests_in_pool(threads: usize) -> Vec<Outcome> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
    pool.install(|| CRITERIA.iter().map(|c| (c.run)()).collect())
}

fn main() {
    let mut all_pass = true;
    let mut first = Vec::new();
    for c in &CRITERIA {
        let start = Instant::now();
        let outcome = (c.run)();
        let took = start.elapsed();
        let in_time = took <= c.limit;
        let pass = outcome.is_ok() && in_time;
        let detail = match &outcome {
            Ok((_, summary)) if in_time => {
                format!("{summary}; {:.2} s (limit {} s)", took.as_secs_f64(), c.limit.as_secs())
            }
            Ok(_) => format!("too slow: {:.2} s (limit {} s)", took.as_secs_f64(), c.limit.as_secs()),
            Err(why) => why.clone(),
        };
        line(c.number, pass, c.name, &detail);
        all_pass &= pass;
        first.push(outcome);
    }

    let start = Instant::now();
    let runs = [digests_in_pool(1), digests_in_pool(4), digests_in_pool(1)];
    let mismatched: Vec<u32> = CRITERIA
        .iter()
        .enumerate()
        .filter(|(i, _)| runs.iter().any(|run| run[*i] != first[*i]))
        .map(|(_, c)| c.number)
        .collect();
    let pass = mismatched.is_empty();
    let detail = if pass {
        format!("criteria 1-8 identical over 4 runs on 1, 4 and default threads ({:.2} s)", start.elapsed().as_secs_f64())
    } else {
        format!("reports differ for criteria {mismatched:?}")
    };
    line(9, pass, "determinism", &detail);
    all_pass &= pass;

    if !all_pass {
        std::process::exit(1);
    }
}
