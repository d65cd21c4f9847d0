// Alone in its binary: it sets a process-wide environment variable.
use cliquelab::harness::*;
use cliquelab::{ExperimentConfig, ScalingSchedule as S, WeightDistribution as D};

fn csv(cfg: &ExperimentConfig) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(&run_concentration_experiment(cfg).unwrap(), &mut buf).unwrap();
    buf
}

#[test]
fn thread_override_keeps_results() {
    let mut cfg = ExperimentConfig::new(D::Uniform01, S::Constant { value: 1.1 }, vec![40, 60]);
    cfg.trials = 10;
    cfg.master_seed = 8;
    let default = csv(&cfg);
    std::env::set_var(THREADS_ENV, "1");
    assert_eq!(resolve_threads(Some(4)).unwrap(), Some(1));
    let pinned = csv(&cfg);
    std::env::set_var(THREADS_ENV, "0");
    assert!(run_concentration_experiment(&cfg).is_err());
    std::env::remove_var(THREADS_ENV);
    assert_eq!(resolve_threads(Some(4)).unwrap(), Some(4));
    assert_eq!(default, pinned);
}
