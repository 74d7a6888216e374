use fracouple::fractional_kernels::*;
use fracouple::rng::stream;
use proptest::prelude::*;

// (H, T, t, R_T 1_{[-1,0]}(t)) from a 30-digit quadrature
const ORACLE: [(f64, f64, f64, f64); 4] = [
    (0.6, 0.0, 0.25, 1.6071012253383833956),
    (0.7, 2.0, 3.0, 0.17538841638256400461),
    (0.8, 0.0, 3.0, 0.15611494557411999102),
    (0.9, 2.0, 0.25, 0.91764278234338528649),
];

fn unit_block() -> DriftRecord {
    let mut g = DriftRecord::zeros(UniformGrid::new(-1.0, 1.0 / 8.0, 8).unwrap(), 1, 10.0);
    g.gw[0].fill(1.0);
    g
}

#[test]
fn r_operator_matches_quadrature_oracle() {
    for (h, big_t, t, want) in ORACLE {
        let params = KernelParams::with_hurst(h, 10.0).unwrap();
        let v = r_operator(&unit_block(), big_t, &[t], &params).unwrap()[0][0];
        assert!((v - want).abs() <= 1e-6 * want, "H={h} T={big_t} t={t}: {v} vs {want}");
    }
}

#[test]
fn fgn_variance_scales_like_t_2h() {
    let params = KernelParams::new(0.8, 0.6, 20.0).unwrap();
    let n_paths = 4000;
    let nodes = [8usize, 32, 128];
    let mut acc = [0.0; 3];
    for r in 0..n_paths {
        let b = sample_fgn(&params, UniformGrid::new(0.0, 1.0 / 32.0, 128).unwrap(), 1, &mut stream(17, r)).unwrap();
        let v = b.values(0);
        for (a, &i) in acc.iter_mut().zip(&nodes) {
            *a += v[i] * v[i];
        }
    }
    for (a, &i) in acc.iter().zip(&nodes) {
        let t = i as f64 / 32.0;
        let want = t.powf(1.6);
        let got = a / n_paths as f64;
        // Var of a χ²₁ mean: 2σ⁴/n
        let se = want * (2.0 / n_paths as f64).sqrt();
        assert!((got - want).abs() < 4.0 * se, "t={t}: {got} vs {want}");
    }
}

#[test]
fn mvn_variance_after_deficit_correction() {
    let params = KernelParams::new(0.7, 0.6, 20.0).unwrap();
    let dt = 1.0 / 16.0;
    let m = params.lags(dt);
    let n_paths = 4000;
    let mut acc = 0.0;
    for r in 0..n_paths {
        let w = WienerPath::sample(UniformGrid::new(-(m as f64) * dt, dt, m + 16).unwrap(), 1, &mut stream(23, r));
        acc += mvn_map(&w, &params).unwrap().values(0)[16].powi(2);
    }
    let var = acc / n_paths as f64 + truncation_deficit(&params);
    let se = (2.0 / n_paths as f64).sqrt();
    assert!((var - 1.0).abs() < 4.0 * se, "{var}");
}

#[test]
fn fgn_rejects_bad_hurst() {
    assert!(check_hurst(0.5).is_err());
    assert!(check_hurst(1.0).is_err());
    assert!(KernelParams::with_hurst(0.4, 10.0).is_err());
}

#[test]
fn noise_csv_round_trip_drives_the_same_path() {
    let params = KernelParams::new(0.7, 0.6, 20.0).unwrap();
    let b = sample_fgn(&params, UniformGrid::new(0.0, 1.0 / 16.0, 48).unwrap(), 2, &mut stream(5, 0)).unwrap();
    let mut buf = Vec::new();
    write_path_csv(&b, &mut buf).unwrap();
    let back = read_path_csv(&buf[..], 0.7).unwrap();
    assert_eq!(back.d, 2);
    for c in 0..2 {
        for (x, y) in b.values(c).iter().zip(back.values(c)) {
            assert!((x - y).abs() < 1e-14);
        }
    }
}

#[test]
fn continuation_constant_fit_agrees() {
    for h in [0.6, 0.75, 0.9] {
        let params = KernelParams::new(h, 0.55, 64.0).unwrap();
        let (fit, exact) = fit_continuation_constant(&params, 1.0 / 64.0, 8.0);
        assert!((fit - exact).abs() < 1e-3 * exact.abs().max(1.0), "H={h}: {fit} vs {exact}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fgn_autocov_is_a_covariance(h in 0.51f64..0.99, dt in 0.01f64..1.0) {
        let g0 = fgn_autocov(h, 0, dt);
        prop_assert!((g0 - dt.powf(2.0 * h)).abs() < 1e-12 * g0);
        for k in 1..20 {
            let g = fgn_autocov(h, k, dt);
            // H > 1/2: positive, decreasing correlations
            prop_assert!(g > 0.0 && g < g0);
            prop_assert!(g <= fgn_autocov(h, k - 1, dt));
        }
    }

    #[test]
    fn alpha_h_closed_form_matches_quadrature(h in 0.51f64..0.99) {
        let a = alpha_h(h);
        prop_assert!((a - alpha_h_by_quadrature(h)).abs() < 1e-8 * a);
    }

    #[test]
    fn drift_maps_are_mutually_inverse(
        a in -2.0f64..2.0, f in 0.5f64..6.0, c in -1.0f64..1.0, h in 0.55f64..0.95,
    ) {
        let params = KernelParams::new(h, 0.55, 4.0).unwrap();
        let dt = 1.0 / 32.0;
        let mut hist = DriftRecord::zeros(UniformGrid::new(-1.0, dt, 32).unwrap(), 1, 4.0);
        for (i, v) in hist.gw[0].iter_mut().enumerate() {
            *v = c * (i as f64 * dt * 3.0).cos();
        }
        let g = vec![(0..48).map(|i| a * ((i as f64 + 0.5) * dt * f).sin() + c).collect::<Vec<_>>()];
        let scale = g[0].iter().fold(1e-3f64, |m, v| m.max(v.abs()));
        let back = gb_to_gw(&gw_to_gb(&g, &hist, &params).unwrap(), &hist, &params).unwrap();
        for (x, y) in g[0].iter().zip(&back[0]) {
            prop_assert!((x - y).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn r_operator_is_linear(s in -3.0f64..3.0, t in 0.1f64..5.0, h in 0.55f64..0.95) {
        let params = KernelParams::with_hurst(h, 10.0).unwrap();
        let g = unit_block();
        let mut sg = g.clone();
        sg.gw[0].iter_mut().for_each(|v| *v *= s);
        let a = r_operator(&g, 0.0, &[t], &params).unwrap()[0][0];
        let b = r_operator(&sg, 0.0, &[t], &params).unwrap()[0][0];
        prop_assert!((b - s * a).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn mvn_map_is_linear_in_the_wiener_path(seed in 0u64..1000, s in -3.0f64..3.0) {
        let params = KernelParams::new(0.7, 0.6, 4.0).unwrap();
        let dt = 1.0 / 8.0;
        let m = params.lags(dt);
        let grid = UniformGrid::new(-(m as f64) * dt, dt, m + 8).unwrap();
        let w = WienerPath::sample(grid, 1, &mut stream(seed, 0));
        let sw = WienerPath::new(grid, vec![w.increments[0].iter().map(|x| s * x).collect()]).unwrap();
        let a = mvn_map(&w, &params).unwrap().values(0);
        let b = mvn_map(&sw, &params).unwrap().values(0);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((y - s * x).abs() <= 1e-10 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn holder_norm_of_linear_path(slope in -5.0f64..5.0, theta in 0.1f64..0.9) {
        let grid = UniformGrid::new(0.0, 1.0 / 16.0, 16).unwrap();
        let v = vec![(0..=16).map(|i| slope * i as f64 / 16.0).collect::<Vec<_>>()];
        let n = holder_norm(&v, &grid, theta, 0.0, 1.0).unwrap();
        // sup of |slope| h^{1-θ} is attained at h = 1
        prop_assert!((n - slope.abs()).abs() < 1e-12 * (1.0 + slope.abs()));
    }
}
