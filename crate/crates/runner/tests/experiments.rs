use ram_runner::config::{AdaptationConfig, ExperimentConfig, TuneConfig};
use ram_runner::experiments::run_experiment;
use ram_runner::tune::tune_sigma;
use ram_runner::RunnerError;

fn cube() -> ExperimentConfig {
    ExperimentConfig::from_toml(
        r#"
        length = 6000
        burn_in = 2000
        seed = 11
        budget = "by_evals"
        kernels = [
            { name = "ram" },
            { name = "metropolis" },
            { name = "parallel_tempering", temps = [1, 2, 4, 8, 16] },
        ]

        [target]
        name = "cube"
        dim = 3

        [adaptation]
        pre_chain_length = 1000
        "#,
    )
    .unwrap()
}

fn twenty() -> ExperimentConfig {
    ExperimentConfig::from_toml(
        r#"
        length = 3000
        burn_in = 1000
        seed = 3
        kernels = [{ name = "ram" }]

        [target]
        name = "twenty_modes"
        case = "a"

        [proposal]
        sigma = 4.0
        "#,
    )
    .unwrap()
}

#[test]
fn matched_budgets_agree_within_two_percent() {
    let out = run_experiment(&cube()).unwrap();
    let n_ram = out.summary.kernels[0].evals_per_iteration;
    for k in &out.summary.kernels[1..] {
        let r = k.budget_ratio.unwrap();
        assert!((r - 1.0).abs() < 0.02, "{}: {r}", k.kernel);
    }
    // burn-in scales with the length
    let met = &out.summary.kernels[1];
    assert_eq!(met.length, (6000.0 * n_ram).round() as usize);
    assert_eq!(
        met.burn_in,
        (2000.0 * met.length as f64 / 6000.0).round() as usize
    );
}

#[test]
fn too_short_pilots_abort_with_a_diagnostic() {
    let mut cfg = cube();
    cfg.adaptation = Some(AdaptationConfig {
        pre_chain_length: 1,
    });
    let err = run_experiment(&cfg).unwrap_err();
    assert!(matches!(err, RunnerError::Core(_)), "{err}");
}

#[test]
fn no_draws_after_burn_in_is_rejected() {
    let mut cfg = twenty();
    cfg.burn_in = cfg.length;
    assert!(matches!(run_experiment(&cfg), Err(RunnerError::Config(_))));
}

#[test]
fn same_seed_same_summary_other_seed_differs() {
    let a = run_experiment(&twenty()).unwrap();
    let b = run_experiment(&twenty()).unwrap();
    assert_eq!(a.summary, b.summary);
    let mut other = twenty();
    other.seed += 1;
    assert_ne!(
        run_experiment(&other).unwrap().summary.chains[0].summary,
        a.summary.chains[0].summary
    );
}

#[test]
fn wall_time_budget_produces_runnable_lengths() {
    let mut cfg = cube();
    cfg.budget = ram_runner::config::BudgetRule::ByWalltime;
    let out = run_experiment(&cfg).unwrap();
    for k in &out.summary.kernels {
        assert!(
            k.length > k.burn_in,
            "{}: {} <= {}",
            k.kernel,
            k.length,
            k.burn_in
        );
    }
}

#[test]
fn single_grid_value_is_chosen() {
    let mut cfg = twenty();
    cfg.tune = Some(TuneConfig {
        grid: vec![4.0],
        length: 3000,
        burn_in: 1000,
        max_lag: 50,
    });
    let r = tune_sigma(&cfg).unwrap();
    assert_eq!(r.chosen, 4.0);
    assert_eq!(r.candidates.len(), 1);
}

#[test]
fn short_pilots_that_miss_modes_are_flagged() {
    let mut cfg = twenty();
    cfg.tune = Some(TuneConfig {
        grid: vec![0.5, 4.0],
        length: 200,
        burn_in: 100,
        max_lag: 20,
    });
    let r = tune_sigma(&cfg).unwrap();
    assert!(!r.visited_all_modes);
    let best = r.candidates.iter().map(|c| c.modes_visited).max().unwrap();
    let chosen = r.candidates.iter().find(|c| c.sigma == r.chosen).unwrap();
    assert_eq!(chosen.modes_visited, best);
}

#[test]
fn a_mode_file_with_wrong_moments_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("modes.txt");
    let shifted: String = ram_runner::modes::BUNDLED
        .lines()
        .map(|l| {
            let v: Vec<f64> = l.split_whitespace().map(|t| t.parse().unwrap()).collect();
            format!("{} {}\n", v[0] + 0.1, v[1])
        })
        .collect();
    std::fs::write(&path, shifted).unwrap();
    let mut cfg = twenty();
    cfg.target = ram_runner::config::TargetConfig::TwentyModes {
        case: ram_runner::config::MixtureCase::A,
        modes_file: Some(path),
    };
    assert!(matches!(
        run_experiment(&cfg),
        Err(RunnerError::ModeFile(_))
    ));
}
