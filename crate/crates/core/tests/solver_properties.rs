mod common;

use common::{active_instances, rel, to_physical, unit_instance};
use proptest::prelude::*;
use sigiscc::solver::{
    alpha_given_active, find_root, interior_point, interval_bounds, iota, lhs_rhs, permutation_at, transition_points,
};
use sigiscc::*;

#[test]
fn transition_points_ascend_and_orderings_are_constant_inside_cells() {
    for seed in 0..300 {
        let s = unit_instance(seed, 2 + (seed % 8) as usize);
        let pts = transition_points(&s);
        assert!(pts.windows(2).all(|w| w[0] < w[1]), "seed {seed}: {pts:?}");
        for n in 0..=pts.len() {
            let (lo, hi) = interval_bounds(n, &pts);
            let probes: Vec<f64> = if hi.is_finite() {
                [0.25, 0.5, 0.75].iter().map(|t| lo + t * (hi - lo)).collect()
            } else {
                let base = interior_point(lo, hi);
                vec![base, 4.0 * base, 16.0 * base]
            };
            let reference = permutation_at(probes[0], &s);
            for &a in &probes[1..] {
                let perm = permutation_at(a, &s);
                // equal thresholds may swap order; compare the threshold sequences instead
                let same = perm
                    .iter()
                    .zip(&reference)
                    .all(|(&p, &r)| p == r || rel(iota(p, a, &s), iota(r, a, &s)) < 1e-12);
                assert!(same, "seed {seed} cell {n}: {reference:?} vs {perm:?}");
            }
        }
    }
}

#[test]
fn scalar_equation_is_nondecreasing_on_brackets() {
    let opts = SolverOptions::default();
    let mut checked = 0;
    for s in active_instances(150, 1) {
        let pts = transition_points(&s);
        for n in 0..=pts.len() {
            for i in 1..s.k() {
                let c = CandidateIndex::new(n, i, &pts, &s);
                let Some(root) = find_root(&c, &s, &opts) else { continue };
                assert!(root.f >= 0.0);
                let br = root.bracket;
                let mut prev = f64::NEG_INFINITY;
                for t in 0..100 {
                    let lam = br.lo + (br.hi - br.lo) * t as f64 / 99.0;
                    let Ok((l, r)) = lhs_rhs(lam, &c, &s) else { break };
                    let f = l - r;
                    assert!(f >= prev - 1e-12 * (l.abs() + r.abs()), "n={n} i={i}: {f} after {prev}");
                    prev = f;
                }
                checked += 1;
            }
        }
    }
    assert!(checked > 100, "only {checked} brackets");
}

#[test]
fn thresholds_move_affinely_in_the_multiplier() {
    let mut checked = 0;
    for (idx, s) in active_instances(100, 7).into_iter().enumerate() {
        let pts = transition_points(&s);
        let n = idx % (pts.len() + 1);
        for i in 1..s.k() {
            let c = CandidateIndex::new(n, i, &pts, &s);
            if c.d_ni <= 0.0 {
                break;
            }
            let sum_h: f64 = c.active_set.iter().map(|&k| s.h[k]).sum();
            for j in (0..s.k()).filter(|&j| s.b[j] > 0.0) {
                let slope = s.h[j] * c.d_ni / (s.b[j] * s.p_max * sum_h);
                for (lam, eps) in [(0.0, 0.3), (0.7, 1.9), (3.0, 0.01)] {
                    let at = |l: f64| iota(j, alpha_given_active(l, &c, &s), &s);
                    let lhs = at(lam + eps);
                    let rhs = at(lam) - slope * eps;
                    let scale = s.h[j] * s.h[j] / s.b[j] + slope * eps;
                    assert!((lhs - rhs).abs() <= 1e-10 * scale, "j={j}: {lhs} vs {rhs}");
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 1000);
}

#[test]
fn accepted_candidates_satisfy_corollary_conditions() {
    for s in active_instances(500, 11) {
        let rep = solve_with(&s, &SolverOptions::default()).unwrap();
        assert!(rep.certified, "{:?}", rep.kkt);
        let c = rep.accepted.expect("sensing is active");
        let sol = &rep.solution;
        assert!(c.d_ni > 0.0);
        assert!(!c.active_set.is_empty() && c.active_set.len() < s.k());
        assert_eq!(c.active_set, sol.active_set);
        let floor = (0..s.k())
            .filter(|k| !c.active_set.contains(k))
            .map(|k| iota(k, sol.alpha, &s))
            .fold(f64::INFINITY, f64::min);
        assert!(sol.lambda > 0.0);
        assert!(sol.lambda < floor + 1e-9 * floor.abs().max(1.0), "{} vs {floor}", sol.lambda);
        assert!(sol.x.iter().all(|&x| x > 0.0));
    }
}

#[test]
fn prescreen_does_not_change_the_answer() {
    let full = SolverOptions {
        prescreen: false,
        ..Default::default()
    };
    for s in active_instances(300, 21) {
        let a = solve_with(&s, &SolverOptions::default()).unwrap();
        let b = solve_with(&s, &full).unwrap();
        let (ca, cb) = (a.accepted.unwrap(), b.accepted.unwrap());
        assert_eq!((ca.n, ca.i), (cb.n, cb.i));
        assert!(rel(a.solution.objective, b.solution.objective) < 1e-12);
    }
}

#[test]
fn loose_root_tolerance_keeps_the_active_set() {
    let loose = SolverOptions {
        root_tol: 1e-6,
        ..Default::default()
    };
    let insts = active_instances(1000, 31);
    let mut same = 0;
    for s in &insts {
        let tight = solve_with(s, &SolverOptions::default()).unwrap();
        let rough = solve_with(s, &loose).unwrap();
        assert!(tight.f_at_root.unwrap() >= 0.0 && rough.f_at_root.unwrap() >= 0.0);
        let (ct, cr) = (tight.accepted.unwrap(), rough.accepted.unwrap());
        if (ct.n, ct.i) == (cr.n, cr.i) && ct.active_set == cr.active_set {
            same += 1;
        }
        assert!(rel(rough.solution.objective, tight.solution.objective) < 1e-5);
    }
    assert!(same * 1000 >= 999 * insts.len(), "{same} of {}", insts.len());
}

#[test]
fn physical_units_give_the_same_decision() {
    for s in active_instances(100, 41) {
        let phys = to_physical(&s, 1e-11, 0.2, 3.7e-13);
        let a = solve_with(&s, &SolverOptions::default()).unwrap();
        let b = solve_with(&phys, &SolverOptions::default()).unwrap();
        assert!(b.certified);
        assert_eq!(a.solution.active_set, b.solution.active_set);
        assert!(rel(b.solution.objective, a.solution.objective) < 1e-9);
        assert!(rel(b.solution.alpha * 1e-11, a.solution.alpha) < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn solver_never_loses_to_the_oracle(
        h in prop::collection::vec(0.05f64..20.0, 2..7),
        raw in prop::collection::vec(1e-3f64..1.0, 7),
        fill in 0.05f64..0.95,
    ) {
        let k = h.len();
        let total: f64 = raw[..k].iter().sum();
        let b = raw[..k].iter().map(|v| v / (fill * total)).collect();
        let s = Scenario::new(h, b, 1.0, 1.0, 1.0).unwrap();
        let rep = solve_with(&s, &SolverOptions::default()).unwrap();
        prop_assert!(rep.certified);
        prop_assert!(rep.solution.check_invariants(&s).is_ok());
        let oracle = solve_oracle(&s, &OracleConfig::default()).unwrap();
        let obj = rep.solution.objective;
        prop_assert!(obj <= oracle.objective + 1e-6 * obj.abs(), "{} vs {}", obj, oracle.objective);
        prop_assert!(oracle.objective - obj <= 1e-6 * obj.abs());
    }
}
