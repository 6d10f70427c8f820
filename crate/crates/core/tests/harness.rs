use proptest::prelude::*;
use rvfl_core::*;

fn small(target: TargetFunction) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(target, 2);
    cfg.n_train = 150;
    cfg.n_test = 200;
    cfg.trials = 4;
    cfg.grids.m_values = vec![1, 2, 3, 10, 30];
    cfg.grids.u_values = vec![1.0, 10.0];
    cfg.grids.alpha_min_values = vec![0.0, 45.0];
    cfg.grids.alpha_step = 45.0;
    cfg
}

fn full_small_run() -> ExperimentResults {
    let mut cfg = small(TargetFunction::NlfL);
    cfg.trials = 3;
    run_experiment(&cfg, &RunOptions::default()).unwrap()
}

#[test]
fn csv_has_one_row_per_cell() {
    let res = full_small_run();
    let csv = emit_table(&res, TableFormat::Csv).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3 * 4 + 1);
    assert!(lines[0].starts_with("strategy,configuration,mean_rmse,std_rmse,significant,mean_m"));
    assert!(lines[1].starts_with("Gs,+dl+b,"));
}

#[test]
fn markdown_groups_rows_by_strategy() {
    let res = full_small_run();
    let md = emit_table(&res, TableFormat::Markdown).unwrap();
    let rows: Vec<&str> = md.lines().filter(|l| l.starts_with("| G")).collect();
    assert_eq!(rows.len(), 12);
    let strategies: Vec<&str> = rows.iter().map(|r| r.split('|').nth(1).unwrap().trim()).collect();
    assert_eq!(&strategies[..4], &["Gs"; 4]);
    assert_eq!(&strategies[4..8], &["Gu"; 4]);
    assert_eq!(&strategies[8..], &["Galpha"; 4]);
}

#[test]
fn json_round_trip_is_identical() {
    let res = full_small_run();
    let text = emit_table(&res, TableFormat::Json).unwrap();
    let back = ExperimentResults::from_json(&text).unwrap();
    assert_eq!(back, res);
    assert_eq!(back.to_json().unwrap(), text);
}

#[test]
fn table_format_parsing() {
    assert_eq!("markdown".parse::<TableFormat>().unwrap(), TableFormat::Markdown);
    assert!(matches!("xml".parse::<TableFormat>(), Err(Error::InvalidParameter(_))));
}

#[test]
fn cell_means_match_stored_trials() {
    let res = full_small_run();
    for cell in &res.cells {
        let errors = res.test_errors(cell.strategy, cell.configuration);
        assert_eq!(errors.len(), res.config.trials);
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        assert_eq!(cell.test_rmse.unwrap().mean, aggregate(&errors).unwrap().mean);
        assert!((cell.test_rmse.unwrap().mean - mean).abs() <= 1e-15 * mean);
        let m = res.selected_nodes(cell.strategy, cell.configuration);
        let m_mean = m.iter().sum::<usize>() as f64 / m.len() as f64;
        assert!((cell.hidden_nodes.unwrap().mean - m_mean).abs() < 1e-12);
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let mut cfg = small(TargetFunction::Nl);
    cfg.trials = 2;
    cfg.parallelism = 1;
    let one = run_experiment(&cfg, &RunOptions::default()).unwrap();
    cfg.parallelism = 4;
    let four = run_experiment(&cfg, &RunOptions::default()).unwrap();
    assert_eq!(one.to_json().unwrap(), four.to_json().unwrap());
}

#[test]
fn single_trial_experiment_matches_run_trial() {
    let mut cfg = small(TargetFunction::Nl);
    cfg.trials = 1;
    cfg.configurations = vec![Configuration::NoLinksWithBias];
    cfg.strategies = vec![StrategyKind::Gu];
    let res = run_experiment(&cfg, &RunOptions::default()).unwrap();
    assert_eq!(res.cells.len(), 1);
    let direct = run_trial(&cfg, Configuration::NoLinksWithBias, StrategyKind::Gu, 0);
    assert_eq!(res.trials, vec![direct.clone()]);
    assert_eq!(res.cells[0].test_rmse.unwrap().mean, direct.test_rmse.unwrap());
}

#[test]
fn timings_only_when_requested() {
    let mut cfg = small(TargetFunction::Nl);
    cfg.trials = 1;
    cfg.strategies = vec![StrategyKind::Gs];
    cfg.configurations = vec![Configuration::NoLinksNoBias];
    let res = run_experiment(&cfg, &RunOptions { record_timings: true }).unwrap();
    assert!(res.trials[0].wall_time_secs.unwrap() > 0.0);
    let res = run_experiment(&cfg, &RunOptions::default()).unwrap();
    assert!(res.trials[0].wall_time_secs.is_none());
    assert!(!res.to_json().unwrap().contains("wall_time"));
}

#[test]
fn exact_linear_fit_without_noise() {
    let mut cfg = small(TargetFunction::L);
    cfg.noise_sigma = 0.0;
    cfg.trials = 5;
    cfg.configurations = vec![Configuration::WithLinksWithBias];
    for kind in StrategyKind::ALL {
        for t in 0..cfg.trials {
            let r = run_trial(&cfg, Configuration::WithLinksWithBias, kind, t);
            assert!(r.test_rmse.unwrap() < 1e-6, "{kind} trial {t}: {r:?}");
        }
    }
}

#[test]
fn linear_target_with_direct_links_picks_few_nodes() {
    let mut cfg = small(TargetFunction::L);
    cfg.n_train = 400;
    cfg.configurations = vec![Configuration::WithLinksWithBias];
    let small_m = (0..6)
        .filter(|&t| run_trial(&cfg, Configuration::WithLinksWithBias, StrategyKind::Gs, t).m.unwrap() <= 2)
        .count();
    assert!(small_m >= 5, "{small_m} of 6");
}

#[test]
fn nl_sanity_bound() {
    let mut cfg = small(TargetFunction::Nl);
    cfg.n_train = 500;
    cfg.grids.m_values = vec![5, 10, 20, 50];
    for configuration in Configuration::ALL {
        let r = run_trial(&cfg, configuration, StrategyKind::Gu, 0);
        assert!(r.test_rmse.unwrap() < 0.05, "{configuration}: {r:?}");
    }
}

#[test]
fn empty_results_cannot_be_rendered() {
    let cfg = small(TargetFunction::Nl);
    let res = ExperimentResults { config: cfg, trials: vec![], cells: vec![] };
    assert!(emit_table(&res, TableFormat::Csv).is_err());
}

#[test]
fn grid_search_streams_are_reproducible() {
    let cfg = small(TargetFunction::Nlf);
    let streams = TrialStreams::new(3, 1);
    let data = sample_dataset(cfg.target, 2, cfg.n_train, cfg.noise_sigma, &streams.train()).unwrap();
    let a = grid_search(&cfg, Configuration::WithLinksNoBias, StrategyKind::GAlpha, &data, &streams).unwrap();
    let b = grid_search(&cfg, Configuration::WithLinksNoBias, StrategyKind::GAlpha, &data, &streams).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn grid_search_stays_on_the_grid(
        seed in any::<u64>(),
        kind_ix in 0usize..3,
        conf_ix in 0usize..4,
        ms in proptest::collection::btree_set(1usize..25, 1..4),
        us in proptest::collection::btree_set(1u32..20, 1..3),
    ) {
        let mut cfg = small(TargetFunction::NlfL);
        cfg.n_train = 60;
        cfg.n_test = 60;
        cfg.master_seed = seed;
        cfg.grids.m_values = ms.into_iter().collect();
        cfg.grids.u_values = us.into_iter().map(|u| u as f64 / 2.0).collect();
        let kind = StrategyKind::ALL[kind_ix];
        let configuration = Configuration::ALL[conf_ix];
        let streams = TrialStreams::new(seed, 0);
        let data = sample_dataset(cfg.target, 2, cfg.n_train, 0.05, &streams.train()).unwrap();
        let choice = grid_search(&cfg, configuration, kind, &data, &streams).unwrap();
        prop_assert!(cfg.grids.m_values.contains(&choice.m));
        prop_assert!(cfg.grids.strategies(kind).contains(&choice.strategy));
        prop_assert_eq!(cfg.grids.strategies(kind)[choice.cell], choice.strategy);
        prop_assert!(choice.validation_rmse >= 0.0);
    }
}
