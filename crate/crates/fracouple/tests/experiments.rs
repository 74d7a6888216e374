use fracouple::experiments::*;
use proptest::prelude::*;

fn small(workers: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::new("additive_baseline", 1);
    c.n_replicas = 24;
    c.t_max = 120.0;
    c.ck_runs = 20;
    c.workers = workers;
    c
}

#[test]
fn pareto_eighth_power_is_recovered() {
    let times = synthetic_pareto(10_000, 0.125, 1e4, 42);
    let tail = TailEstimate::from_times(times, 1e4, &TailOpts::default());
    assert!(tail.reliable);
    let s = tail.slope.unwrap();
    assert!((s + 0.125).abs() <= 0.02, "{s}");
    let fit = rate_fit(&tail, 0.01);
    assert_eq!(fit.consistency, Consistency::Consistent);
}

#[test]
fn exponential_tail_is_consistent() {
    let times = synthetic_exponential(5000, 0.05, 1e3, 1);
    let tail = TailEstimate::from_times(times, 1e3, &TailOpts::default());
    assert_eq!(rate_fit(&tail, 0.01).consistency, Consistency::Consistent);
}

#[test]
fn never_coupled_is_undetermined() {
    let tail = TailEstimate::from_times(vec![None; 300], 500.0, &TailOpts::default());
    assert!(tail.survival.iter().all(|&s| s == 1.0));
    let fit = rate_fit(&tail, 0.01);
    assert_eq!(fit.consistency, Consistency::Undetermined);
    assert!(!fit.reliable);
}

#[test]
fn slower_than_envelope_is_flagged() {
    // S(t) = t^{-0.02} decays far slower than t^{-0.115}
    let times = synthetic_pareto(20_000, 0.02, 1e30, 9);
    let tail = TailEstimate::from_times(times, 1e30, &TailOpts { window: (0.05, 0.95), ..TailOpts::default() });
    assert_eq!(rate_fit(&tail, 0.01).consistency, Consistency::Inconsistent);
}

#[test]
fn survival_csv_has_documented_header() {
    let tail = TailEstimate::from_times(synthetic_pareto(100, 0.5, 100.0, 2), 100.0, &TailOpts::default());
    let mut buf = Vec::new();
    tail.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some(SURVIVAL_HEADER));
    assert_eq!(text.lines().count(), tail.t.len() + 1);
}

#[test]
fn tail_is_identical_across_worker_counts() {
    let a = estimate_coupling_tail(&small(1)).unwrap();
    let b = estimate_coupling_tail(&small(3)).unwrap();
    assert_eq!(a.tail.times, b.tail.times);
    assert_eq!(a.tail.survival, b.tail.survival);
    assert_eq!(a.tail.slope.map(f64::to_bits), b.tail.slope.map(f64::to_bits));
    assert_eq!(a.replicas, b.replicas);
    assert!(a.replicas.iter().all(|r| r.budget_violations == 0 && r.schedule_violations == 0));
}

#[test]
fn config_rejects_zero_replicas() {
    let mut c = small(1);
    c.n_replicas = 0;
    assert!(estimate_coupling_tail(&c).is_err());
}

#[test]
fn tv_bound_is_the_upper_confidence_limit() {
    let tail = TailEstimate::from_times(synthetic_exponential(400, 0.1, 50.0, 3), 50.0, &TailOpts::default());
    let tv = tv_bound(&tail, &[1.0, 10.0, 40.0]);
    for i in 0..3 {
        assert!(tv.bound[i] >= tv.survival[i] && tv.bound[i] <= 1.0);
    }
}

#[test]
fn dyadic_failure_rates_sit_in_their_bands() {
    let mut c = ExperimentConfig::new("additive_baseline", 1);
    c.coupling.k = 1.0;
    c.coupling.delta1 = 0.0;
    c.ck_runs = 20;
    let s = dyadic_statistics(&c, 60, 10, &[2, 3]).unwrap();
    assert!(s.stuck > 0 && s.exact_checked > 0);
    assert!(s.max_exactness <= 1e-12);
    for l in &s.levels {
        assert_eq!(l.budget_violations, 0);
        assert!(l.within_band(3.0), "{l:?}");
    }
}

#[test]
fn corrupted_alpha_h_fails_the_variance_check() {
    let c = ExperimentConfig::new("additive_baseline", 1);
    let opts = ValidateOpts { alpha_h_scale: 1.1, ..ValidateOpts::quick() };
    let r = validate_suite(&c, &opts).unwrap();
    assert!(!r.get("mvn_variance").unwrap().pass);
    assert!(r.get("fgn_covariance").unwrap().pass);
}

fn survival_at_nodes(times: &[Option<f64>], t_max: f64, nodes: &[f64]) -> Vec<f64> {
    let tail = TailEstimate::from_times(times.to_vec(), t_max, &TailOpts::default());
    nodes.iter().map(|&t| tail.survival_at(t).0).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn survival_is_nonincreasing_with_valid_ci(seed in 0u64..10_000, gamma in 0.05f64..2.0, n in 10usize..400) {
        let tail = TailEstimate::from_times(synthetic_pareto(n, gamma, 1e3, seed), 1e3, &TailOpts::default());
        for w in tail.survival.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
        for i in 0..tail.t.len() {
            prop_assert!(tail.ci_lo[i] <= tail.survival[i] + 1e-12 && tail.survival[i] <= tail.ci_hi[i] + 1e-12);
            prop_assert!(tail.ci_lo[i] >= 0.0 && tail.ci_hi[i] <= 1.0);
        }
    }

    #[test]
    fn censoring_matches_uncensored_where_defined(seed in 0u64..10_000, gamma in 0.05f64..2.0, cut in 2.0f64..500.0) {
        let full = synthetic_pareto(300, gamma, 1e6, seed);
        let censored: Vec<Option<f64>> = full.iter().map(|t| t.filter(|&t| t <= cut)).collect();
        let nodes: Vec<f64> = log_nodes(1.0, cut, 20).into_iter().filter(|&t| t <= cut).collect();
        let a = survival_at_nodes(&full, 1e6, &nodes);
        let b = survival_at_nodes(&censored, cut, &nodes);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn raising_t_max_never_raises_survival(seed in 0u64..10_000, gamma in 0.05f64..2.0, lo in 2.0f64..100.0, f in 1.5f64..20.0) {
        let hi = lo * f;
        let short = synthetic_pareto(200, gamma, lo, seed);
        let long = synthetic_pareto(200, gamma, hi, seed);
        let nodes = log_nodes(1.0, lo, 15);
        let a = survival_at_nodes(&short, lo, &nodes);
        let b = survival_at_nodes(&long, hi, &nodes);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(y <= x);
        }
    }

    #[test]
    fn censored_count_is_exact(seed in 0u64..10_000, t_max in 1.5f64..1e4) {
        let times = synthetic_pareto(250, 0.3, t_max, seed);
        let tail = TailEstimate::from_times(times.clone(), t_max, &TailOpts::default());
        prop_assert_eq!(tail.n_censored, times.iter().filter(|t| t.is_none()).count());
        prop_assert!((tail.survival_at(t_max).0 - tail.n_censored as f64 / 250.0).abs() < 1e-12);
    }
}
