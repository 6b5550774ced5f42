mod common;

use common::{active_instances, rel, unit_instance};
use sigiscc::oracle::{inner_solve_given_alpha, phi};
use sigiscc::*;

#[test]
fn partial_objective_is_convex_in_alpha() {
    let cfg = OracleConfig::default();
    let mut insts = active_instances(60, 101);
    insts.extend((0..40).map(|s| unit_instance(1100 + s, 1 + (s % 7) as usize)));
    for s in &insts {
        let centre = solve_oracle(s, &cfg).unwrap().alpha;
        let (lo, hi) = (centre / 20.0, 4.0 * centre);
        let vals: Vec<f64> = (0..200)
            .map(|t| phi(lo + (hi - lo) * t as f64 / 199.0, s, &cfg).unwrap())
            .collect();
        let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for w in vals.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-8 * scale);
        }
    }
}

#[test]
fn inner_solution_meets_sensing_with_equality_when_binding() {
    let cfg = OracleConfig::default();
    for s in active_instances(100, 111) {
        let alpha = solve(&s).unwrap().alpha;
        let (x, lambda, _) = inner_solve_given_alpha(alpha, &s, &cfg).unwrap();
        let echo: f64 = s.b.iter().zip(&x).map(|(b, x)| b * x).sum();
        assert!(lambda > 0.0);
        assert!(echo >= s.eta_d * alpha);
        assert!(rel(echo, s.eta_d * alpha) < 1e-9);
    }
}

#[test]
fn oracle_agrees_with_the_exact_solver() {
    let cfg = OracleConfig::default();
    for s in active_instances(300, 121) {
        let exact = solve(&s).unwrap();
        let oracle = solve_oracle(&s, &cfg).unwrap();
        oracle.check_invariants(&s).unwrap();
        assert!(exact.objective <= oracle.objective + 1e-6 * exact.objective.abs());
        assert!(rel(oracle.objective, exact.objective) < 1e-6);
        assert!(rel(oracle.alpha, exact.alpha) < 1e-3);
    }
}
