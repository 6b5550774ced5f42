use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sigiscc::qfunc::q;
use sigiscc::*;

fn cfg(p_fa: f64, p_d: f64, t: f64, sigma2: f64) -> SensingConfig {
    SensingConfig {
        p_false_alarm: p_fa,
        p_detect_threshold: p_d,
        signal_duration: t,
        sensing_noise_power: sigma2,
        ..Default::default()
    }
}

/// Energy meeting the detection target, by bisection on the detector curve.
fn eta_by_bisection(c: &SensingConfig) -> f64 {
    let t = c.signal_duration;
    let pd = |e: f64| {
        let mut lo = -40.0;
        let mut hi = 40.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if q(mid) > c.p_false_alarm {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        q(0.5 * (lo + hi) - (2.0 * t * t * e / c.sensing_noise_power).sqrt())
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while pd(hi) < c.p_detect_threshold {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pd(mid) < c.p_detect_threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn preset_threshold_matches_bisection() {
    let c = cfg(1e-2, 0.99, 8.0, 1.0);
    let eta = compute_eta_d(&c).unwrap();
    assert!((detection_probability(eta, &c) - 0.99).abs() < 1e-9);
    let oracle = eta_by_bisection(&c);
    assert!((eta - oracle).abs() <= 1e-9 * oracle, "{eta} vs {oracle}");
}

proptest! {
    #[test]
    fn threshold_round_trips(
        p_fa in 1e-6f64..0.5,
        lift in 0.01f64..0.99,
        t in 0.5f64..20.0,
        sigma2 in 1e-14f64..10.0,
    ) {
        let p_d = p_fa + lift * (1.0 - 1e-6 - p_fa);
        let c = cfg(p_fa, p_d, t, sigma2);
        let eta = compute_eta_d(&c).unwrap();
        prop_assert!((detection_probability(eta, &c) - p_d).abs() < 1e-9);
        let oracle = eta_by_bisection(&c);
        prop_assert!((eta - oracle).abs() <= 1e-8 * oracle);
    }
}

#[test]
fn sensing_coefficients_scale_with_rcs_and_antennas() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let geom = two_group_layout(&mut rng, 120.0, 110.0, 3, 3, 1.0).unwrap();
    let base = SensingConfig::default();
    let b0 = geom.sensing_coeffs(&base).unwrap();
    let b_rcs = geom.sensing_coeffs(&SensingConfig { rcs: 2.0 * base.rcs, ..base }).unwrap();
    let b_nr = geom
        .sensing_coeffs(&SensingConfig {
            n_rx_antennas: 2 * base.n_rx_antennas,
            ..base
        })
        .unwrap();
    for k in 0..b0.len() {
        assert!((b_rcs[k] - 4.0 * b0[k]).abs() <= 1e-14 * b_rcs[k]);
        assert!((b_nr[k] - 2.0 * b0[k]).abs() <= 1e-14 * b_nr[k]);
    }
}

#[test]
fn gains_fall_with_distance() {
    let pl = PathLoss::default();
    let mut prev = (f64::INFINITY, f64::INFINITY);
    for d in [0.5, 1.0, 2.0, 10.0, 50.0, 300.0, 1000.0] {
        let cur = (pl.comm_power_gain(d), pl.sensing_roundtrip_gain(d));
        assert!(cur.0 < prev.0 && cur.1 < prev.1);
        prev = cur;
    }
}
