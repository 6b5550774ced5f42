use sigiscc_cli::config::Config;
use sigiscc_cli::gap::{bucket_rows, run_gap_suite, BUCKETS};
use sigiscc_cli::sweep::run_draws;

fn small_gap_config() -> Config {
    let mut cfg = Config::default();
    cfg.gap.n_layouts = 20;
    cfg.gap.n_fading = 5;
    cfg
}

#[test]
fn bucket_table_accounts_for_every_scenario() {
    let cfg = small_gap_config();
    let suite = run_gap_suite(&cfg, 3).unwrap();
    let rows = bucket_rows(&suite);
    assert_eq!(rows.len(), 4 * BUCKETS.len());
    for method in ["oracle", "greedy", "zf", "nosensing"] {
        let mine: Vec<_> = rows.iter().filter(|r| r.method == method).collect();
        assert_eq!(mine.iter().map(|r| r.count).sum::<usize>(), suite.outcomes.len());
        assert!((mine.last().unwrap().cumulative - 1.0).abs() < 1e-12);
        assert_eq!(mine.iter().all(|r| r.relaxation), method == "nosensing");
    }
    let oracle_close = rows.iter().find(|r| r.method == "oracle" && r.bucket == "<0.01%").unwrap();
    assert_eq!(oracle_close.count, suite.outcomes.len());
    // only the relaxation may undercut the optimum
    for r in rows.iter().filter(|r| r.bucket == "<0%" && !r.relaxation) {
        assert_eq!(r.count, 0, "{}", r.method);
    }
    let greedy_inf = rows.iter().find(|r| r.method == "greedy" && r.bucket == "infeasible").unwrap();
    assert_eq!(greedy_inf.count, 0);
}

#[test]
fn greedy_pays_where_the_sensing_constraint_binds() {
    let mut cfg = Config::default();
    cfg.sweep.d_2nd_m = vec![70.0];
    cfg.sweep.gaps_m = vec![10.0];
    let draws = run_draws(&cfg, 11).unwrap();
    let mut strictly_worse = 0;
    for d in &draws {
        let mse = d.mse.unwrap();
        let (opt, greedy) = (mse[0].unwrap(), mse[1].unwrap());
        assert!(opt <= greedy * (1.0 + 1e-9));
        strictly_worse += (greedy > opt * (1.0 + 1e-6)) as usize;
    }
    assert!(strictly_worse > 0);
}
