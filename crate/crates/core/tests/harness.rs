use std::path::PathBuf;
use std::time::Instant;

use grnn_qos::harness::{
    format_log, format_metrics, format_plot, metrics_from_log, run_scenario, run_variant, scenarios, Scenario,
    SeedSpec, Variant,
};
use grnn_qos::{search, Allocation, Controller, Grid, Grnn, Kernel, PredictorKind, QosConfig, ServiceProfile};

fn shipped(name: &str) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    Scenario::load(&path).unwrap()
}

#[test]
fn shipped_scenarios_match_builtins() {
    for q in 1..=3 {
        assert_eq!(shipped(&format!("tracking_q{q}.toml")), scenarios::tracking(q), "q={q}");
    }
    assert_eq!(shipped("surge.toml"), scenarios::surge());
}

#[test]
fn log_alone_reproduces_metrics() {
    let run = run_scenario(&scenarios::tracking(2)).unwrap();
    let rebuilt = metrics_from_log(&format_log(&run)).unwrap();
    assert_eq!(rebuilt.len(), run.services.len());
    for (r, s) in rebuilt.iter().zip(&run.services) {
        let mut m = s.metrics.clone();
        m.final_search_time_ms = 0.0;
        assert_eq!(*r, m);
        assert!(r.reconciles(1e-12));
        assert!(r.window(20).reconciles(1e-12));
    }
}

#[test]
fn reruns_are_identical() {
    let s = scenarios::surge();
    let a = run_variant(&s, &s.variants[1]).unwrap();
    let b = run_variant(&s, &s.variants[1]).unwrap();
    assert_eq!(format_log(&a), format_log(&b));
    assert_eq!(format_metrics(std::slice::from_ref(&a)), format_metrics(std::slice::from_ref(&b)));
    assert_eq!(format_plot(std::slice::from_ref(&a), 0), format_plot(std::slice::from_ref(&b), 0));
    assert_eq!(a.services[0].final_profile.save(), b.services[0].final_profile.save());
}

#[test]
fn noisy_reruns_are_identical_and_seed_sensitive() {
    let mut s = scenarios::tracking(1);
    s.noise_std = 1.0;
    let a = format_log(&run_scenario(&s).unwrap());
    assert_eq!(a, format_log(&run_scenario(&s).unwrap()));
    s.rng_seed += 1;
    assert_ne!(a, format_log(&run_scenario(&s).unwrap()));
}

/// An all-level-L seed makes the origin a member, so the first allocation
/// is empty; with nothing to send there is nothing to lose.
#[test]
fn top_level_seed_with_idle_source() {
    let mut s = scenarios::tracking(3);
    let mut seed = ServiceProfile::unbounded(2, 12).unwrap();
    for (a, b) in [(50.0, 30.0), (20.0, 10.0), (0.0, 0.0)] {
        seed.push(Allocation::new(vec![a, b]), 12).unwrap();
    }
    s.seed = SeedSpec::Profile(seed);
    s.services[0].rate_trace = vec![0.0; s.run_length];
    let run = run_scenario(&s).unwrap();
    let m = &run.services[0].metrics;
    assert_eq!(run.services[0].records[0].outcome.applied_allocation, Allocation::zeros(2));
    assert_eq!(m.avg_dlr, 0.0);
    assert_eq!(m.count_dlr, 0);
    assert!(m.reconciles(1e-12));
}

#[test]
fn kernel_work_grows_with_unbounded_profile() {
    let mut s = scenarios::surge();
    s.run_length = 40;
    let run = run_variant(
        &s,
        &Variant {
            label: "u".into(),
            kind: PredictorKind::GrnnUnbounded,
            capacity: 31,
        },
    )
    .unwrap();
    let recs = &run.services[0].records;
    assert_eq!(recs.last().unwrap().profile_size, 16 + recs.len());
    for w in recs.windows(2) {
        assert!(w[1].kernel_evals > w[0].kernel_evals);
    }
    let bounded = run_variant(&s, &s.variants[1]).unwrap();
    let tail = &bounded.services[0].records[20..];
    assert!(tail.iter().all(|r| r.profile_size == 31 && r.kernel_evals == tail[0].kernel_evals));
}

fn search_time(p: usize, repeats: usize) -> f64 {
    let cfg = QosConfig::<f64>::home_network_default();
    let mut prof = ServiceProfile::unbounded(2, 12).unwrap();
    for i in 0..p {
        let x = Allocation::new(vec![(i * 7 % 41) as f64 * 1.25, (i * 5 % 25) as f64 * 1.25]);
        let y = cfg.quantize(x.total() - 40.0);
        prof.push(x, y).unwrap();
    }
    let kern = Grnn::new(Kernel::default());
    search(&cfg.grid, &prof, &kern, 9).unwrap();
    (0..repeats)
        .map(|_| {
            let t = Instant::now();
            std::hint::black_box(search(&cfg.grid, &prof, &kern, 9).unwrap());
            t.elapsed().as_secs_f64()
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn search_cost_is_linear_in_profile_size() {
    let t16 = search_time(16, 15);
    let t64 = search_time(64, 15);
    assert!(t64 <= 8.0 * t16, "t16 = {t16}, t64 = {t64}");
    assert!(t64 > t16, "t16 = {t16}, t64 = {t64}");
}

#[test]
fn controller_moves_the_right_way() {
    let cfg = QosConfig::<f64>::home_network_default();
    let seed = grnn_qos::harness::seed_profile_generate(&cfg.grid, &cfg.thresholds, 16, 40.0, 7).unwrap();
    let mut c = Controller::initialize(cfg.clone(), seed, 2).unwrap();
    let before = c.current().total;
    // Heavy loss is a negative record for a_2 = 9: the next total can't drop.
    let (next, out) = c.step(-20.0, 40.0).unwrap();
    assert_eq!(out.response, 1);
    assert!(next.total >= before);
    // A surplus far above the target is positive: the next total can't rise.
    let before = next.total;
    let (next, out) = c.step(20.0, 40.0).unwrap();
    assert_eq!(out.response, 12);
    assert!(next.total <= before);
    assert_eq!(c.profile().len(), 18);
    assert!(Grid::new(1.25, vec![50.0, 30.0]).unwrap().contains(&next.allocation));
}
