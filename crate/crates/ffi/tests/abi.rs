use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use sketch_anomaly::eval::synth::{gaussian, rng};
use sketch_anomaly::scores::batch_scores;
use sketch_anomaly_ffi::*;

fn matrix(a: &sketch_anomaly::DenseMatrix) -> *mut SkaMatrix {
    let mut m = ptr::null_mut();
    let st = unsafe { ska_matrix_new(a.rows(), a.cols(), a.as_slice().as_ptr(), &mut m) };
    assert_eq!(st, SkaStatus::Ok);
    m
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(ska_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn exact_scores_match_library() {
    let a = gaussian(50, 8, &mut rng(1));
    let m = matrix(&a);
    assert_eq!(unsafe { (ska_matrix_rows(m), ska_matrix_cols(m)) }, (50, 8));
    let opts = SkaScoreOptions { mode: SkaMode::Exact, k: 3, ell: 0, seed: 0, lambda: 0.5 };
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { ska_score(m, &opts, &mut s) }, SkaStatus::Ok);
    assert_eq!(unsafe { ska_scores_len(s) }, 50);
    let want = batch_scores(&a, 3, Some(0.5)).unwrap();
    for (i, r) in want.iter().enumerate() {
        let mut v = 0.0;
        assert_eq!(unsafe { ska_scores_get(s, i, SkaScoreKind::RankK, &mut v) }, SkaStatus::Ok);
        assert_eq!(v, r.rank_k_leverage.unwrap());
        assert_eq!(unsafe { ska_scores_get(s, i, SkaScoreKind::Ridge, &mut v) }, SkaStatus::Ok);
        assert_eq!(v, r.ridge_leverage.unwrap());
    }
    unsafe { ska_scores_free(s) };
    let no_ridge = SkaScoreOptions { lambda: -1.0, ..opts };
    assert_eq!(unsafe { ska_score(m, &no_ridge, &mut s) }, SkaStatus::Ok);
    let mut v = 0.0;
    assert_eq!(unsafe { ska_scores_get(s, 0, SkaScoreKind::Ridge, &mut v) }, SkaStatus::Undefined);
    assert_eq!(unsafe { ska_scores_get(s, 50, SkaScoreKind::Full, &mut v) }, SkaStatus::InvalidArgument);
    assert!(last_error().contains("out of range"));
    unsafe {
        ska_scores_free(s);
        ska_matrix_free(m);
    }
}

#[test]
fn sketched_and_online_modes() {
    let a = gaussian(60, 10, &mut rng(2));
    let m = matrix(&a);
    for mode in [SkaMode::Fd, SkaMode::Rproj, SkaMode::Colsample, SkaMode::Rowsample, SkaMode::OnlineFd, SkaMode::ExactOnline] {
        let opts = SkaScoreOptions { mode, k: 2, ell: 6, seed: 3, lambda: -1.0 };
        let mut s = ptr::null_mut();
        assert_eq!(unsafe { ska_score(m, &opts, &mut s) }, SkaStatus::Ok, "{mode:?}: {}", last_error());
        assert_eq!(unsafe { ska_scores_len(s) }, 60);
        let mut v = 0.0;
        let st = unsafe { ska_scores_get(s, 0, SkaScoreKind::ProjectionDistance, &mut v) };
        if matches!(mode, SkaMode::OnlineFd | SkaMode::ExactOnline) {
            // First row has an empty prefix.
            assert_eq!(st, SkaStatus::Undefined);
        } else {
            assert_eq!(st, SkaStatus::Ok);
            assert!(v >= 0.0);
        }
        unsafe { ska_scores_free(s) };
    }
    unsafe { ska_matrix_free(m) };
}

#[test]
fn error_codes() {
    let a = gaussian(20, 4, &mut rng(3));
    let m = matrix(&a);
    let mut s = ptr::null_mut();
    let bad = SkaScoreOptions { mode: SkaMode::Fd, k: 3, ell: 3, seed: 0, lambda: -1.0 };
    assert_eq!(unsafe { ska_score(m, &bad, &mut s) }, SkaStatus::InvalidArgument);
    assert!(s.is_null());
    assert_eq!(unsafe { ska_score(ptr::null(), &bad, &mut s) }, SkaStatus::NullPointer);
    assert!(last_error().contains("matrix is null"));
    let mut out = ptr::null_mut();
    let data = [1.0, 2.0, 3.0];
    assert_eq!(unsafe { ska_matrix_new(2, 2, data.as_ptr(), &mut out) }, SkaStatus::Ok);
    unsafe { ska_matrix_free(out) };
    let nan = [f64::NAN, 1.0];
    assert_eq!(unsafe { ska_matrix_new(1, 2, nan.as_ptr(), &mut out) }, SkaStatus::Parse);
    let path = CString::new("/nonexistent/x.csv").unwrap();
    assert_eq!(unsafe { ska_matrix_load_csv(path.as_ptr(), false, &mut out) }, SkaStatus::Io);
    unsafe {
        ska_matrix_free(m);
        ska_matrix_free(ptr::null_mut());
        ska_scores_free(ptr::null_mut());
        ska_fd_free(ptr::null_mut());
    }
}

#[test]
fn fd_handle_round_trip() {
    let a = gaussian(40, 6, &mut rng(4));
    let mut fd = ptr::null_mut();
    assert_eq!(unsafe { ska_fd_new(4, 6, &mut fd) }, SkaStatus::Ok);
    for i in 0..40 {
        assert_eq!(unsafe { ska_fd_update(fd, a.row(i).as_ptr(), 6) }, SkaStatus::Ok);
    }
    assert_eq!(unsafe { ska_fd_update(fd, a.row(0).as_ptr(), 5) }, SkaStatus::Shape);
    let rows = unsafe { ska_fd_rows(fd) };
    assert!(rows > 0 && rows < 8);
    let mut buf = vec![0.0; rows * 6];
    assert_eq!(unsafe { ska_fd_sketch(fd, buf.as_mut_ptr(), 1) }, SkaStatus::Shape);
    assert_eq!(unsafe { ska_fd_sketch(fd, buf.as_mut_ptr(), buf.len()) }, SkaStatus::Ok);
    let want = sketch_anomaly::sketch::fd_sketch(&a, 4).unwrap();
    assert_eq!(buf, want.sketch().as_slice());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fd.bin");
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { ska_fd_save(fd, cpath.as_ptr()) }, SkaStatus::Ok);
    let loaded = sketch_anomaly::sketch::Snapshot::load(&path).unwrap().into_fd().unwrap();
    assert_eq!(loaded.sketch().as_slice(), buf.as_slice());
    unsafe { ska_fd_free(fd) };
}

#[test]
fn spectral_stats_of_diagonal() {
    let a = sketch_anomaly::DenseMatrix::from_fn(4, 3, |i, j| if i == j { [3.0, 2.0, 1.0][i] } else { 0.0 });
    let m = matrix(&a);
    let mut st = SkaSpectralStats::default();
    assert_eq!(unsafe { ska_spectral_stats(m, 1, &mut st) }, SkaStatus::Ok);
    assert!((st.separation_delta - 5.0 / 9.0).abs() < 1e-12);
    assert!((st.frobenius_sq - 14.0).abs() < 1e-12);
    assert!((st.tail_mass - 5.0).abs() < 1e-12);
    assert!((st.stable_rank - 14.0 / 9.0).abs() < 1e-12);
    unsafe { ska_matrix_free(m) };
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let Ok(cc) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(cc.status.success());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("t.c");
    std::fs::write(
        &src,
        "#include \"sketch_anomaly.h\"\nint main(void) { SkaMatrix *m = 0; SkaStatus s = ska_matrix_new(0, 0, 0, &m); return s == SKA_STATUS_OK; }\n",
    )
    .unwrap();
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&header)
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
