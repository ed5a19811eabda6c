use std::ffi::{CStr, CString};
use std::ptr;

use tqdsim_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(tqd_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

struct Config(*mut TqdConfig);

impl Config {
    fn new(mode: &str) -> Self {
        let m = cstr(mode);
        let p = unsafe { tqd_config_new(m.as_ptr()) };
        assert!(!p.is_null());
        Config(p)
    }

    fn set(&self, key: &str, value: &str) -> TqdStatus {
        let (k, v) = (cstr(key), cstr(value));
        unsafe { tqd_config_set(self.0, k.as_ptr(), v.as_ptr()) }
    }
}

impl Drop for Config {
    fn drop(&mut self) {
        unsafe { tqd_config_free(self.0) }
    }
}

#[test]
fn steady_state_matches_core() {
    let cfg = Config::new("steady");
    assert_eq!(cfg.set("gamma", "100"), TqdStatus::Ok);
    let mut pops = [0.0; 4];
    let mut current = 0.0;
    let s = unsafe { tqd_steady_state(cfg.0, pops.as_mut_ptr(), &mut current) };
    assert_eq!(s, TqdStatus::Ok);
    let p = tqdsim::SystemParams::default().with_gamma(100.0);
    let ss = tqdsim::steady::steady_state(&p).unwrap();
    assert_eq!(pops[2], ss.rho_cc());
    assert!((pops.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert_eq!(current, 8.0 * ss.rho_rr());
}

#[test]
fn config_errors_are_reported() {
    let cfg = Config::new("steady");
    assert_eq!(cfg.set("t1", "1.5"), TqdStatus::Ok);
    assert_eq!(unsafe { tqd_config_validate(cfg.0) }, TqdStatus::Config);
    assert!(last_error().contains("t1"), "{}", last_error());

    assert_eq!(cfg.set("nonsense", "1"), TqdStatus::Config);
    assert!(last_error().contains("nonsense"));

    let cfg = Config::new("steady");
    assert_eq!(cfg.set("dt", "1"), TqdStatus::Ok);
    assert_eq!(unsafe { tqd_config_validate(cfg.0) }, TqdStatus::Config);

    let bad = cstr("warp");
    assert!(unsafe { tqd_config_new(bad.as_ptr()) }.is_null());
}

#[test]
fn null_pointers_are_rejected() {
    let mut out = 0.0;
    unsafe {
        assert_eq!(tqd_config_validate(ptr::null()), TqdStatus::NullPointer);
        assert_eq!(tqd_steady_state(ptr::null(), ptr::null_mut(), ptr::null_mut()), TqdStatus::NullPointer);
        assert_eq!(tqd_effective_coupling(ptr::null(), &mut out), TqdStatus::NullPointer);
        assert_eq!(tqd_pearson(1.0, 1.0, 1.0, ptr::null_mut()), TqdStatus::NullPointer);
        tqd_config_free(ptr::null_mut());
        tqd_trajectory_free(ptr::null_mut());
    }
}

#[test]
fn diffusive_trajectory_columns() {
    let cfg = Config::new("diffusive");
    assert_eq!(cfg.set("t_final", "0.5"), TqdStatus::Ok);
    assert_eq!(cfg.set("seed", "42"), TqdStatus::Ok);
    let mut tr = ptr::null_mut();
    assert_eq!(unsafe { tqd_run_trajectory(cfg.0, 3, &mut tr) }, TqdStatus::Ok);
    let mut len = 0;
    assert_eq!(unsafe { tqd_trajectory_len(tr, &mut len) }, TqdStatus::Ok);
    assert_eq!(len, 501);

    let mut cc = vec![0.0; len];
    assert_eq!(
        unsafe { tqd_trajectory_column(tr, TqdColumn::RhoCc, cc.as_mut_ptr(), len) },
        TqdStatus::Ok
    );
    let p = tqdsim::SystemParams::default();
    let mut stream = tqdsim::diffusive::WienerStream::new(42, 3, p.dt);
    let rec = tqdsim::diffusive::run_diffusive_trajectory(
        &tqdsim::DensityMatrix::pure(tqdsim::Basis::Left),
        &p,
        0.5,
        &mut stream,
        10,
    )
    .unwrap();
    assert_eq!(cc, rec.rho_cc);

    let mut small = vec![0.0; 10];
    assert_eq!(
        unsafe { tqd_trajectory_column(tr, TqdColumn::Time, small.as_mut_ptr(), 10) },
        TqdStatus::BufferTooSmall
    );
    assert_eq!(
        unsafe { tqd_trajectory_column(tr, TqdColumn::Detected, cc.as_mut_ptr(), len) },
        TqdStatus::Config
    );
    unsafe { tqd_trajectory_free(tr) };
}

#[test]
fn jump_trajectory_counts() {
    let cfg = Config::new("jump");
    assert_eq!(cfg.set("gamma", "5"), TqdStatus::Ok);
    assert_eq!(cfg.set("t_final", "20"), TqdStatus::Ok);
    let mut tr = ptr::null_mut();
    assert_eq!(unsafe { tqd_run_trajectory(cfg.0, 0, &mut tr) }, TqdStatus::Ok);
    let mut len = 0;
    unsafe { tqd_trajectory_len(tr, &mut len) };
    let mut n = vec![0.0; len];
    assert_eq!(
        unsafe { tqd_trajectory_column(tr, TqdColumn::Detected, n.as_mut_ptr(), len) },
        TqdStatus::Ok
    );
    assert!(n.windows(2).all(|w| w[1] >= w[0]));
    assert!(n[len - 1] > 0.0);
    unsafe { tqd_trajectory_free(tr) };
}

#[test]
fn steady_mode_cannot_run_trajectories() {
    let cfg = Config::new("steady");
    let mut tr = ptr::null_mut();
    assert_eq!(unsafe { tqd_run_trajectory(cfg.0, 0, &mut tr) }, TqdStatus::Config);
    assert!(tr.is_null());
}

#[test]
fn scalar_helpers() {
    let cfg = Config::new("jump");
    let mut v = 0.0;
    assert_eq!(unsafe { tqd_effective_coupling(cfg.0, &mut v) }, TqdStatus::Ok);
    assert_eq!(v, 1.0 / 20.0);
    assert_eq!(unsafe { tqd_analytic_rho_cc(cfg.0, 0.0, &mut v) }, TqdStatus::Ok);
    assert_eq!(v, 0.0);
    assert_eq!(unsafe { tqd_pearson(-1.0, 4.0, 1.0, &mut v) }, TqdStatus::Ok);
    assert_eq!(v, -0.5);
    assert_eq!(unsafe { tqd_pearson(1.0, 0.0, 1.0, &mut v) }, TqdStatus::InsufficientData);
}

#[test]
fn zero_frequency_cross_of_short_series_is_insufficient() {
    let x = [0.0; 100];
    let (mut s, mut e) = (0.0, 0.0);
    let status = unsafe { tqd_zero_freq_cross(x.as_ptr(), x.as_ptr(), 100, 0.01, 0.0, 1.0, &mut s, &mut e) };
    assert_eq!(status, TqdStatus::InsufficientData);
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(tqd_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
