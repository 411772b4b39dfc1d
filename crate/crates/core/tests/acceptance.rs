//! Acceptance suite, built without the libtest harness so that every
//! criterion prints exactly one `PASS`/`FAIL` line.
//!
//! Run with `cargo test -p splitsim --test acceptance`; extra arguments
//! select criteria by name. The long runs are shared between criteria
//! through `OnceLock`s.

use std::path::Path;
use std::sync::OnceLock;
use std::time::Instant;

use splitsim::audit::{TagSplitAudit, WorkConservationAudit};
use splitsim::distributions::{solve_dstar, solve_tags_dstar, SizeDistribution, SystemParams};
use splitsim::experiment::{preset, run_experiment};
use splitsim::oracles::{mm1_mean_response, pk_mean_wait, ps_mean_response, random_trace, reference_simulate};
use splitsim::policies::PolicySpec;
use splitsim::sim::{simulate, CompletionLog, Observer, PoissonArrivals, SimResult, TraceArrivals};
use splitsim::stats::{Grid, LjfPromptness, PackingProbe, TailEstimate, TailSink};

const SEED: u64 = 42;
const LONG: u64 = 100_000_000;
const SHORT: u64 = 10_000_000;
/// Exceedance count a grid point needs before its ratio is trusted.
const RESOLVABLE: u64 = 100;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: &str) -> Outcome {
    Outcome { pass, detail: detail.to_string() }
}

type Criterion = (u32, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 11] = [
    (1, "oracle suite", c01_oracle_suite),
    (2, "engine equivalence", c02_engine_equivalence),
    (3, "determinism", c03_determinism),
    (4, "SPLIT strong optimality trend", c04_split_strong_optimality_trend),
    (5, "pathwise lower bound", c05_pathwise_lower_bound),
    (6, "SplitThresh asymptote", c06_splitthresh_asymptote),
    (7, "LJF promptness", c07_ljf_promptness),
    (8, "TAG-SPLIT discipline", c08_tag_split_discipline),
    (9, "packing probe", c09_packing_probe),
    (10, "work conservation", c10_work_conservation),
    (11, "threshold math", c11_threshold_math),
];

/// Runs every criterion (or those whose name contains one of the
/// arguments) and exits non-zero if any fails.
fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let (mut passed, mut failed) = (0, 0);
    for (id, name, check) in CRITERIA {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let out = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Outcome { pass: false, detail: format!("panicked: {}", msg.unwrap_or_default()) }
        });
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        println!("{verdict} [{id:>2}] {name}: {} ({:.0}s)", out.detail, start.elapsed().as_secs_f64());
        if out.pass {
            passed += 1;
        } else {
            failed += 1;
        }
    }
    println!("acceptance: {passed} passed, {failed} failed");
    if failed > 0 {
        std::process::exit(1);
    }
}

fn pareto(alpha: f64) -> SizeDistribution {
    SizeDistribution::pareto(alpha, 1.0).unwrap()
}

struct Run {
    label: String,
    sink: TailSink,
    result: SimResult,
    secs: f64,
}

fn run(n: usize, rho: f64, dist: SizeDistribution, spec: &str, arrivals: u64, extra: &mut [&mut dyn Observer]) -> Run {
    let params = SystemParams::new(n, rho, &dist).unwrap();
    let policy: PolicySpec = spec.parse().unwrap();
    let mut sink = TailSink::new(Grid::for_distribution(&dist, 400).unwrap());
    let start = Instant::now();
    let result = {
        let mut observers: Vec<&mut dyn Observer> = vec![&mut sink];
        observers.extend(extra.iter_mut().map(|o| &mut **o as &mut dyn Observer));
        simulate(policy.build(n).unwrap(), PoissonArrivals::new(params.lambda, dist, arrivals, SEED), arrivals / 100, &mut observers)
            .unwrap()
    };
    Run { label: format!("{spec} n={n} rho={rho}"), sink, result, secs: start.elapsed().as_secs_f64() }
}

/// Empirical `P{T > t_j} / P{S > scale * t_j}` at grid index `j`.
fn ratio(est: &TailEstimate, dist: &SizeDistribution, j: usize, scale: f64) -> f64 {
    let t = est.grid().points()[j];
    est.exceedances()[j] as f64 / est.count() as f64 / dist.tail(scale * t)
}

/// Largest grid index at which every estimate still has enough exceedances.
fn last_resolvable(ests: &[&TailEstimate]) -> usize {
    let len = ests[0].grid().len();
    (0..len).rev().find(|&j| ests.iter().all(|e| e.exceedances()[j] >= RESOLVABLE)).expect("some grid point is resolvable")
}

/// SPLIT (with the LJF probe), SRPT-3 and FCFS-3 at n=3, rho=0.5, alpha=1.5.
struct LowLoad {
    split: Run,
    srpt: Run,
    fcfs: Run,
    ljf: LjfPromptness,
}

fn low_load() -> &'static LowLoad {
    static CELL: OnceLock<LowLoad> = OnceLock::new();
    CELL.get_or_init(|| {
        let dist = pareto(1.5);
        let mut ljf = LjfPromptness::new(dist.quantile(0.9999).unwrap());
        let split = run(3, 0.5, dist, "split", LONG, &mut [&mut ljf]);
        let srpt = run(3, 0.5, dist, "srpt", LONG, &mut []);
        let fcfs = run(3, 0.5, dist, "fcfs", LONG, &mut []);
        LowLoad { split, srpt, fcfs, ljf }
    })
}

fn thresh_d() -> f64 {
    (2.4f64 / 0.45).powi(2)
}

fn thresh_run() -> &'static Run {
    static CELL: OnceLock<Run> = OnceLock::new();
    CELL.get_or_init(|| run(3, 0.8, pareto(1.5), &format!("splitthresh:d={},small=srpt,steal=true", thresh_d()), LONG, &mut []))
}

struct TagsRun {
    quantile: f64,
    run: Run,
    audit: TagSplitAudit,
}

fn tags_runs() -> &'static [TagsRun] {
    static CELL: OnceLock<Vec<TagsRun>> = OnceLock::new();
    CELL.get_or_init(|| {
        let dist = pareto(1.5);
        [0.99, 0.999, 0.9999]
            .into_iter()
            .map(|quantile| {
                let d = dist.quantile(quantile).unwrap();
                let mut audit = TagSplitAudit::new(d);
                let run = run(3, 0.5, dist, &format!("tagsplit:d={d}"), LONG, &mut [&mut audit]);
                TagsRun { quantile, run, audit }
            })
            .collect()
    })
}

fn packing_runs() -> &'static [(Run, PackingProbe)] {
    static CELL: OnceLock<Vec<(Run, PackingProbe)>> = OnceLock::new();
    CELL.get_or_init(|| {
        let dist = pareto(1.5);
        ["srpt", "split"]
            .into_iter()
            .map(|spec| {
                let mut probe = PackingProbe::for_distribution(&dist);
                let run = run(2, 0.25, dist, spec, SHORT, &mut [&mut probe]);
                (run, probe)
            })
            .collect()
    })
}

fn c01_oracle_suite() -> Outcome {
    let expo = SizeDistribution::exponential(1.0).unwrap();
    let mm1 = run(1, 0.5, expo, "fcfs", SHORT, &mut []);
    let want_mm1 = mm1_mean_response(0.5, 1.0).unwrap().value;
    let err_mm1 = (mm1.result.mean_response - want_mm1).abs() / want_mm1;

    let heavy = pareto(2.5);
    let pk = run(1, 0.5, heavy, "fcfs", LONG, &mut []);
    let want_pk = pk_mean_wait(0.3, &heavy).unwrap().value;
    let err_pk = (pk.result.mean_wait() - want_pk).abs() / want_pk;

    let ps = run(1, 0.5, heavy, "ps", SHORT, &mut []);
    let want_ps = ps_mean_response(0.3, &heavy).unwrap().value;
    let err_ps = (ps.result.mean_response - want_ps).abs() / want_ps;

    let slowest = mm1.secs.max(pk.secs).max(ps.secs);
    let pass = err_mm1 <= 0.01 && err_pk <= 0.02 && err_ps <= 0.02 && slowest <= 120.0;
    outcome(pass,
        &format!(
            "M/M/1 {:.4} vs {want_mm1:.4} ({:.2}%), P-K wait {:.4} vs {want_pk:.4} ({:.2}%), PS {:.4} vs {want_ps:.4} ({:.2}%), slowest run {slowest:.0}s",
            mm1.result.mean_response,
            100.0 * err_mm1,
            pk.result.mean_wait(),
            100.0 * err_pk,
            ps.result.mean_response,
            100.0 * err_ps,
        ),
    )
}

fn c02_engine_equivalence() -> Outcome {
    let policies = [
        "fcfs",
        "srpt",
        "sek:eps=10",
        "split",
        "splitthresh:d=5,small=srpt,steal=true",
        "tagsplit:d=4",
    ];
    let mut worst = 0.0f64;
    let mut max_events = 0u64;
    let mut mismatches = Vec::new();
    for spec in policies {
        let policy: PolicySpec = spec.parse().unwrap();
        for seed in 0..200 {
            let trace = random_trace(seed, 500, 3);
            let want = reference_simulate(&trace, &policy, 3).unwrap();
            let mut log = CompletionLog::default();
            let result =
                simulate(policy.build(3).unwrap(), TraceArrivals::new(trace).unwrap(), 0, &mut [&mut log]).unwrap();
            max_events = max_events.max(result.events);
            let got = log.response_times();
            let err = if got.len() == want.len() {
                got.iter().zip(&want).map(|(g, w)| (g - w).abs() / w.max(1.0)).fold(0.0, f64::max)
            } else {
                f64::INFINITY
            };
            worst = worst.max(err);
            if err > 1e-9 {
                mismatches.push(format!("{spec} seed {seed}"));
            }
        }
    }
    let pass = mismatches.is_empty() && max_events <= 2000;
    outcome(pass,
        &format!("6 policies x 200 traces, worst relative gap {worst:.1e}, max events {max_events}, mismatches {mismatches:?}"),
    )
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn c03_determinism() -> Outcome {
    let mut configs = preset("exp1").unwrap().configs;
    for c in &mut configs {
        c.seed = SEED;
    }
    let root = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance-exp1");
    let _ = std::fs::remove_dir_all(&root);
    let a = root.join("a");
    let b = root.join("b");
    run_experiment(&configs, 1, &a).unwrap();
    run_experiment(&configs, 1, &b).unwrap();
    let (fa, fb) = (csv_files(&a), csv_files(&b));
    let pass = !fa.is_empty() && fa == fb;
    outcome(pass, &format!("exp1 seed {SEED}: {} CSV files, identical: {}", fa.len(), fa == fb))
}

fn c04_split_strong_optimality_trend() -> Outcome {
    let low = low_load();
    let dist = pareto(1.5);
    let est = &low.split.sink.all;
    let j = est.percentile_index(0.9999).unwrap();
    let at_p9999 = ratio(est, &dist, j, 1.0);

    let runs = [&low.split, &low.srpt, &low.fcfs];
    let ests: Vec<&TailEstimate> = runs.iter().map(|r| &r.sink.all).collect();
    let top = last_resolvable(&ests);
    let t_max = est.grid().points()[top];
    let decade: Vec<usize> = (0..=top).filter(|&k| est.grid().points()[k] >= t_max / 10.0).collect();
    let mean_ratio = |e: &TailEstimate| decade.iter().map(|&k| ratio(e, &dist, k, 1.0)).sum::<f64>() / decade.len() as f64;
    let means: Vec<f64> = ests.iter().map(|e| mean_ratio(e)).collect();

    let pass = (0.9..=1.5).contains(&at_p9999) && means[0] < means[1] && means[0] < means[2];
    outcome(pass,
        &format!(
            "ratio {at_p9999:.3} at t={:.1} (p99.99); mean ratio over t in [{:.0}, {t_max:.0}]: SPLIT {:.3}, SRPT {:.3}, FCFS {:.3}",
            est.grid().points()[j],
            t_max / 10.0,
            means[0],
            means[1],
            means[2],
        ),
    )
}

fn c05_pathwise_lower_bound() -> Outcome {
    let low = low_load();
    let mut runs: Vec<&Run> = vec![&low.split, &low.srpt, &low.fcfs, thresh_run()];
    runs.extend(tags_runs().iter().map(|t| &t.run));
    runs.extend(packing_runs().iter().map(|(r, _)| r));
    let mut bad = Vec::new();
    let mut classes = 0;
    for r in &runs {
        let mut ests = vec![&r.sink.all];
        if let Some((_, small, big)) = &r.sink.by_threshold {
            ests.push(small);
            ests.push(big);
        }
        for e in ests {
            classes += 1;
            if let Some(j) = e.dominance_violation() {
                bad.push(format!("{} at t={}", r.label, e.grid().points()[j]));
            }
        }
    }
    outcome(bad.is_empty(), &format!("{} runs, {classes} estimates, violations {bad:?}", runs.len()))
}

fn c06_splitthresh_asymptote() -> Outcome {
    let r = thresh_run();
    let dist = pareto(1.5);
    let params = SystemParams::new(3, 0.8, &dist).unwrap();
    let r_above = splitsim::distributions::resource_above(&params, &dist, thresh_d());
    let est = &r.sink.all;
    let j = est.percentile_index(0.9999).unwrap();
    let value = ratio(est, &dist, j, 1.0 - r_above);
    let pass = (0.7..=1.8).contains(&value);
    outcome(pass,
        &format!(
            "d={:.2} (r_>d={r_above:.3}), P{{T>t}}/P{{S>{:.2}t}} = {value:.3} at t={:.1} (p99.99)",
            thresh_d(),
            1.0 - r_above,
            est.grid().points()[j]
        ),
    )
}

fn c07_ljf_promptness() -> Outcome {
    let low = low_load();
    let fraction = low.ljf.fraction().unwrap();
    outcome(fraction >= 0.9,
        &format!("{} of {} jobs above the 0.9999 quantile start LJF service within sqrt(x): {fraction:.3}", low.ljf.prompt(), low.ljf.qualifying()),
    )
}

fn c08_tag_split_discipline() -> Outcome {
    let runs = tags_runs();
    let dist = pareto(1.5);
    let mut audit_notes = Vec::new();
    let mut audits_ok = true;
    for t in runs {
        audits_ok &= t.audit.report.passed();
        audit_notes.push(format!(
            "q{}: max FCFS attained {:.3} (d={:.3}), violations {}",
            t.quantile,
            t.audit.max_fcfs_attained,
            dist.quantile(t.quantile).unwrap(),
            t.audit.report.violations
        ));
    }
    let ests: Vec<&TailEstimate> = runs.iter().map(|t| &t.run.sink.all).collect();
    let j = last_resolvable(&ests);
    let ratios: Vec<f64> = ests.iter().map(|e| ratio(e, &dist, j, 1.0)).collect();
    let ordered = ratios.windows(2).all(|w| w[0] > w[1]);
    outcome(audits_ok && ordered,
        &format!(
            "{}; normalized tail at t={:.0}: {:.3} > {:.3} > {:.3} holds: {ordered}",
            audit_notes.join("; "),
            ests[0].grid().points()[j],
            ratios[0],
            ratios[1],
            ratios[2]
        ),
    )
}

fn c09_packing_probe() -> Outcome {
    let runs = packing_runs();
    let srpt = runs[0].1.p_idle().unwrap();
    let split = runs[1].1.p_idle().unwrap();
    let pass = srpt >= 0.8 && (split - 0.5).abs() <= 0.1;
    outcome(pass,
        &format!(
            "P_idle SRPT-2 {srpt:.3} (>= 0.8, {} jobs), SPLIT {split:.3} (0.5 +- 0.1, {} jobs)",
            runs[0].1.records.len(),
            runs[1].1.records.len()
        ),
    )
}

fn c10_work_conservation() -> Outcome {
    let dist = pareto(1.5);
    let d = dist.quantile(0.99).unwrap();
    let specs = ["fcfs".to_string(), "srpt".into(), "sek:eps=200".into(), "split".into(), format!("splitthresh:d={d},small=srpt,steal=true")];
    let mut notes = Vec::new();
    let mut pass = true;
    for spec in &specs {
        let mut audit = WorkConservationAudit::default();
        let r = run(3, 0.6, dist, spec, 600_000, &mut [&mut audit]);
        let ok = audit.report.passed() && r.result.events >= 1_000_000;
        pass &= ok;
        let first = audit.report.first.as_deref().map(|f| format!(", first: {f}")).unwrap_or_default();
        notes.push(format!("{spec}: {} events, {} violations{first}", r.result.events, audit.report.violations));
    }
    outcome(pass, &notes.join("; "))
}

fn c11_threshold_math() -> Outcome {
    let dist = pareto(1.5);
    let params = SystemParams::new(3, 0.8, &dist).unwrap();
    let dstar = solve_dstar(&params, &dist).unwrap();
    let tags = solve_tags_dstar(&params, &dist).unwrap();
    // r_{>d} = lambda * 3 / sqrt(d) and lambda * E[(S-d)^+] = lambda * 2 / sqrt(d),
    // each set equal to n*rho - (n-1) = 0.4.
    let lambda = params.lambda;
    let closed = (3.0 * lambda / 0.4f64).powi(2);
    let closed_tags = (2.0 * lambda / 0.4f64).powi(2);
    let rel = |x: f64, y: f64| (x - y).abs() / y;
    let pass = rel(dstar, 36.0) <= 1e-8 && rel(tags, 16.0) <= 1e-8 && rel(dstar, closed) <= 1e-8 && rel(tags, closed_tags) <= 1e-8;
    outcome(pass,
        &format!("d* = {dstar:.10} (closed form {closed}), TAGS d* = {tags:.10} (closed form {closed_tags})"),
    )
}
