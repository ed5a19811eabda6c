use tqdsim::diffusive::{run_diffusive_trajectory, WienerStream};
use tqdsim::harness::{
    batch_mean, correlation_experiment, master_curve, run_ensemble, sweep_steady_state, ExperimentConfig, Mode,
};
use tqdsim::steady::steady_state;
use tqdsim::{Basis, DensityMatrix, Error, SystemParams};

fn weak_jump_set() -> SystemParams {
    SystemParams::default().with_delta(20.0).with_leads(20.0, 16.0).with_gamma(0.5)
}

#[test]
fn ensemble_is_independent_of_worker_count() {
    for mode in [Mode::Diffusive, Mode::Jump] {
        let base = ExperimentConfig {
            mode,
            n_traj: 70,
            t_final: 0.5,
            seed: 11,
            ..ExperimentConfig::default()
        };
        let one = run_ensemble(&ExperimentConfig { threads: 1, ..base.clone() }).unwrap();
        let four = run_ensemble(&ExperimentConfig { threads: 4, ..base.clone() }).unwrap();
        assert_eq!(one, four);
    }
}

#[test]
fn sweep_rows_follow_grid_order() {
    let cfg = ExperimentConfig {
        mode: Mode::Sweep,
        delta_values: vec![10.0, 20.0],
        gamma_values: vec![0.0, 1.0, 100.0],
        ..ExperimentConfig::default()
    };
    let t = sweep_steady_state(&cfg).unwrap();
    let cells: Vec<(f64, f64)> = t.rows.iter().map(|r| (r.delta, r.gamma)).collect();
    assert_eq!(
        cells,
        vec![(10.0, 0.0), (10.0, 1.0), (10.0, 100.0), (20.0, 0.0), (20.0, 1.0), (20.0, 100.0)]
    );
    assert!(t.rows[0].rho_cc_ss < 0.02);
    assert!((0.28..=0.38).contains(&t.rows[2].rho_cc_ss));
    assert_eq!(t.rho_cc_decreases, 0);
    assert!(t.rows.iter().all(|r| !r.degenerate));
}

#[test]
fn swapping_transmittances_flips_the_cross_correlation() {
    let mut cfg = ExperimentConfig {
        mode: Mode::Correlate,
        params: SystemParams::default().with_leads(20.0, 16.0),
        n_traj: 1,
        t_final: 200.0,
        delta_values: vec![14.0],
        gamma_values: vec![10.0],
        decimate: 100,
        ..ExperimentConfig::default()
    };
    let a = correlation_experiment(&cfg).unwrap()[0].result.unwrap();
    std::mem::swap(&mut cfg.detector.t0, &mut cfg.detector.t1);
    let b = correlation_experiment(&cfg).unwrap()[0].result.unwrap();
    assert_eq!(a.s_tq, -b.s_tq);
    assert_eq!(a.pearson, -b.pearson);
    assert_eq!(a.s_tt, b.s_tt);
    assert_eq!(a.s_qq, b.s_qq);
}

#[test]
fn insufficient_data_is_recorded_per_cell() {
    let cfg = ExperimentConfig {
        mode: Mode::Correlate,
        t_final: 30.0,
        delta_values: vec![10.0],
        gamma_values: vec![10.0],
        decimate: 100,
        ..ExperimentConfig::default()
    };
    let rows = correlation_experiment(&cfg).unwrap();
    assert!(rows[0].result.is_none());
    assert!(rows[0].error.as_deref().unwrap().contains("insufficient"));
}

#[test]
fn long_trajectory_time_average_matches_steady_state() {
    let p = SystemParams::default();
    let ss = steady_state(&p).unwrap();
    let mut s = WienerStream::new(314, 0, p.dt);
    let rec = run_diffusive_trajectory(&DensityMatrix::pure(Basis::Left), &p, 300.0, &mut s, 10).unwrap();
    // bins of 1e-3; burn 10, batches of 5 time units
    let (mean, err) = batch_mean(&rec.rho_cc, 10_000, 5_000).unwrap();
    assert!(
        (mean - ss.rho_cc()).abs() < 3.0 * err,
        "time average {mean} +- {err}, steady {}",
        ss.rho_cc()
    );
}

#[test]
fn weak_measurement_unravelings_agree_with_lindblad() {
    let base = ExperimentConfig {
        params: weak_jump_set(),
        n_traj: 400,
        t_final: 5.0,
        seed: 3,
        decimate: 100,
        ..ExperimentConfig::default()
    };
    let exact = master_curve(&ExperimentConfig { mode: Mode::Master, ..base.clone() }).unwrap();
    for mode in [Mode::Jump, Mode::Diffusive] {
        let stats = run_ensemble(&ExperimentConfig { mode, ..base.clone() }).unwrap();
        let inside = stats
            .mean_rho_cc
            .iter()
            .zip(&stats.err_rho_cc)
            .zip(&exact.mean_rho_cc)
            .filter(|((m, e), x)| (*m - *x).abs() <= 3.0 * **e + 1e-12)
            .count();
        let frac = inside as f64 / stats.times.len() as f64;
        assert!(frac >= 0.95, "{mode:?}: {inside}/{}", stats.times.len());
    }
}

#[test]
fn invalid_trajectories_beyond_one_percent_fail_the_run() {
    // gamma * dt right at the guard makes the Euler-Maruyama clamp large
    let cfg = ExperimentConfig {
        mode: Mode::Diffusive,
        params: SystemParams::default().with_gamma(990.0),
        n_traj: 20,
        t_final: 0.5,
        ..ExperimentConfig::default()
    };
    match run_ensemble(&cfg) {
        Err(Error::TooManyInvalid { failed, total, limit }) => {
            assert_eq!((total, limit), (20, 0));
            assert!(failed >= 1);
        }
        other => panic!("expected TooManyInvalid, got {other:?}"),
    }
}
