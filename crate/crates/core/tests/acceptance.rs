//! Acceptance suite. Run with `--nocapture` to see one line per criterion.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use grnn_qos::harness::{compare_predictors, run_scenario, scenarios, write_comparison, write_run, Scenario};
use grnn_qos::verify::{self, CheckReport, Instance};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Criteria run one at a time so wall-clock checks see an idle machine.
static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(id: &str, name: &str, ok: bool, detail: impl std::fmt::Display) {
    println!("criterion {id} [{}] {name}: {detail}", if ok { "PASS" } else { "FAIL" });
}

fn report(id: &str, r: &CheckReport, limit: Option<Duration>) {
    let in_time = limit.is_none_or(|l| r.elapsed < l);
    verdict(
        id,
        r.name,
        r.passed() && in_time,
        format_args!("{} checks over {} runs, {} violations, {:.2?}", r.checks, r.instances, r.violations, r.elapsed),
    );
    assert!(r.passed(), "{r}");
    if let Some(l) = limit {
        assert!(r.elapsed < l, "{} took {:.2?}, limit {l:?}", r.name, r.elapsed);
    }
}

#[test]
fn c1_monotonicity() {
    let _g = serial();
    let r = verify::monotonicity(1000, 101).unwrap();
    assert!(r.instances >= 1000);
    report("1", &r, Some(Duration::from_secs(60)));
}

#[test]
fn c2_membership_forms() {
    let _g = serial();
    let r = verify::membership_forms(100, 102).unwrap();
    assert!(r.instances >= 100);
    report("2", &r, None);
}

#[test]
fn c3_variation_bound() {
    let _g = serial();
    let r = verify::variation_bound_check(1000, 103).unwrap();
    assert!(r.checks >= 1000);
    report("3", &r, None);
}

#[test]
fn c4_closed_loop_tracking() {
    let _g = serial();
    let mut failures = Vec::new();
    for q in 1..=3 {
        let s = scenarios::tracking(q);
        let started = Instant::now();
        let run = run_scenario(&s).unwrap();
        let elapsed = started.elapsed();
        let a = s.qos.target(q).unwrap() as usize;
        let eta = &s.qos.thresholds;
        let (lo, hi) = (eta[a - 2] - 2.5, eta[a - 1] + 2.5);
        let tail = run.services[0].metrics.window(20);
        let ok = tail.epochs == 20
            && tail.mean_erab >= lo
            && tail.mean_erab <= hi
            && tail.avg_dlr <= 0.5
            && elapsed < Duration::from_secs(10);
        verdict(
            "4",
            &format!("tracking q={q}"),
            ok,
            format_args!(
                "last-20 mean ERAB {:.3} in [{lo}, {hi}], avg DLR {:.3} <= 0.5, {elapsed:.2?}",
                tail.mean_erab, tail.avg_dlr
            ),
        );
        if !ok {
            failures.push(q);
        }
    }
    assert!(failures.is_empty(), "levels out of band: {failures:?}");
}

#[test]
fn c5_predictor_orderings() {
    let _g = serial();
    let mut s = scenarios::surge();
    s.timing_repeats = 20;
    let runs = compare_predictors(&s, &s.variants).unwrap();
    let by: BTreeMap<&str, _> = runs.iter().map(|r| (r.label.as_str(), &r.services[0])).collect();
    let m = |l: &str| &by[l].metrics;

    let t: Vec<f64> = ["grnn_S16", "grnn_S31", "grnn_S46"].iter().map(|l| m(l).final_search_time_ms).collect();
    let a = t[0] < t[1] && t[1] < t[2];
    verdict("5a", "search time grows with S", a, format_args!("{:.3} < {:.3} < {:.3} ms", t[0], t[1], t[2]));

    let v: Vec<f64> = ["grnn_S16", "grnn_S31", "grnn_S46"].iter().map(|l| m(l).avg_bw_variation).collect();
    let b = v[0] >= v[1] && v[1] >= v[2];
    verdict("5b", "BW variation non-increasing in S", b, format_args!("{:.3} >= {:.3} >= {:.3} Mbps", v[0], v[1], v[2]));

    let (knn, grnn) = (m("knn_k5").avg_dlr, m("grnn_S31").avg_dlr);
    let c = knn >= grnn;
    verdict("5c", "kNN loses at least as much as GRNN", c, format_args!("{knn:.3} >= {grnn:.3} Mbps"));

    let applied = |l: &str| -> Vec<_> { by[l].records[..16].iter().map(|r| r.outcome.applied_allocation.clone()).collect() };
    let d = applied("grnn_S31") == applied("grnn_unbounded");
    verdict("5d", "bounded and unbounded agree while appending", d, "epochs 0..=15 identical");

    assert!(a && b && c && d);
}

#[test]
fn c6_search_oracle() {
    let _g = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let (mut feasible, mut infeasible, mut errors) = (0, 0, Vec::new());
    for _ in 0..200 {
        match common::check(&Instance::random(&mut rng, 1, 40)) {
            Ok(true) => feasible += 1,
            Ok(false) => infeasible += 1,
            Err(e) => errors.push(e),
        }
    }
    let ok = errors.is_empty() && infeasible > 0 && feasible > 0;
    verdict(
        "6",
        "search matches brute-force oracle",
        ok,
        format_args!("200 instances, {feasible} feasible, {infeasible} fallback, {} mismatches", errors.len()),
    );
    assert!(ok, "{:?}", errors.first());
}

#[test]
fn c7_profile_laws() {
    let _g = serial();
    let r = verify::profile_laws(10_000, 107).unwrap();
    assert!(r.checks >= 10_000);
    report("7", &r, None);
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                if !rel.contains("timing") {
                    out.insert(rel, fs::read(&p).unwrap());
                }
            }
        }
    }
    out
}

fn outputs(s: &Scenario) -> BTreeMap<String, Vec<u8>> {
    let dir = tempfile::tempdir().unwrap();
    write_run(&dir.path().join("run"), &run_scenario(s).unwrap()).unwrap();
    if !s.variants.is_empty() {
        write_comparison(&dir.path().join("compare"), &compare_predictors(s, &s.variants).unwrap()).unwrap();
    }
    snapshot(dir.path())
}

#[test]
fn c8_determinism() {
    let _g = serial();
    let mut noisy = scenarios::tracking(2);
    noisy.noise_std = 0.75;
    let cases = [("tracking q=3", scenarios::tracking(3)), ("surge", scenarios::surge()), ("noisy", noisy)];
    let mut all = true;
    for (name, s) in &cases {
        let (a, b) = (outputs(s), outputs(s));
        let ok = !a.is_empty() && a == b;
        all &= ok;
        verdict("8", &format!("determinism ({name})"), ok, format_args!("{} files byte-identical", a.len()));
    }
    assert!(all);
}
