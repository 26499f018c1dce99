use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use gbadmm_ffi::*;

fn last_error() -> String {
    let p = gb_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn model_lifecycle_and_energy() {
    let mut m: *mut GbModel = ptr::null_mut();
    unsafe {
        assert_eq!(gb_model_fcc111(2.5, &mut m), GbStatus::Ok);
        assert_eq!(gb_model_num_blocks(m), 6);
        let u = [0.0; 12];
        let mut e = f64::NAN;
        assert_eq!(gb_model_energy(m, u.as_ptr(), 12, &mut e), GbStatus::Ok);
        // at u = 0 every family contributes b√ε ln(1/(r_g √ε))
        let eps = 2.5f64.to_radians().powi(2) / 400.0;
        let expected = 6.0 * eps.sqrt() * (1.0 / (0.85 * eps.sqrt())).ln();
        assert!((e - expected).abs() <= 1e-14 * expected);

        let mut r = [f64::NAN; 6];
        assert_eq!(gb_model_residual(m, u.as_ptr(), 12, r.as_mut_ptr()), GbStatus::Ok);
        // residual at zero is -c with c = θ(0, -a3, a2, a3, 0, -a1), a = (0,0,1)
        let t = 2.5f64.to_radians();
        let want = [0.0, t, 0.0, -t, 0.0, 0.0];
        for (a, b) in r.iter().zip(want) {
            assert!((a - b).abs() <= 1e-15);
        }
        assert_eq!(
            gb_model_energy(m, u.as_ptr(), 4, &mut e),
            GbStatus::DimensionMismatch
        );
        assert!(last_error().contains("expected 12"));
        gb_model_free(m);
    }
}

#[test]
fn null_and_invalid_arguments() {
    unsafe {
        assert_eq!(gb_model_fcc111(2.5, ptr::null_mut()), GbStatus::NullPointer);
        let mut m: *mut GbModel = ptr::null_mut();
        assert_eq!(gb_model_fcc111(40.0, &mut m), GbStatus::InvalidArgument);
        assert!(m.is_null());
        assert!(last_error().contains("theta"));
        let b = [1.0, 0.0, 0.0, 0.0, 2.0, 0.0];
        let a = [0.0, 0.0, 1.0];
        assert_eq!(
            gb_model_new(b.as_ptr(), 2, 0.01, a.as_ptr(), a.as_ptr(), 0.3, 0.85, 1e-6, &mut m),
            GbStatus::InvalidArgument
        );
        assert_eq!(gb_model_num_blocks(ptr::null()), 0);
        assert!(gb_result_residual_norm(ptr::null()).is_nan());
        gb_model_free(ptr::null_mut());
        gb_result_free(ptr::null_mut());
    }
}

#[test]
fn admm_through_the_c_abi() {
    unsafe {
        let mut m: *mut GbModel = ptr::null_mut();
        assert_eq!(gb_model_fcc111(2.5, &mut m), GbStatus::Ok);
        let p = gb_auglag_params_default();
        assert_eq!(p.rho0, 100.0);
        assert_eq!(p.beta, 1.001);
        let mut r: *mut GbSolveResult = ptr::null_mut();
        assert_eq!(gb_admm_solve(m, &p, &mut r), GbStatus::Ok);
        assert!(gb_result_converged(r));
        assert!(gb_result_residual_norm(r) <= 1e-6);
        assert!(gb_result_iterations(r) > 0);
        let mut u = [0.0; 12];
        assert_eq!(gb_result_state(r, u.as_mut_ptr(), 12), GbStatus::Ok);
        assert!((u[0].hypot(u[1]) - 0.0283).abs() <= 5e-4);

        let mut bad = p;
        bad.beta = 1.0;
        let mut r2: *mut GbSolveResult = ptr::null_mut();
        assert_eq!(gb_admm_solve(m, &bad, &mut r2), GbStatus::InvalidArgument);
        assert!(r2.is_null());
        assert_eq!(gb_alm_solve(m, &bad, &mut r2), GbStatus::Ok);
        assert!(gb_result_converged(r2));
        gb_result_free(r2);
        gb_result_free(r);
        gb_model_free(m);
    }
}

#[test]
fn counterexample_radius() {
    let mut s = 0.0;
    unsafe {
        assert_eq!(gb_counterexample_spectral_radius(1.0, &mut s), GbStatus::Ok);
        assert!((s - 1.0278).abs() <= 1e-3);
        assert_eq!(gb_counterexample_spectral_radius(1.1, &mut s), GbStatus::Ok);
        assert!((s - 0.9809).abs() <= 1e-3);
        assert_eq!(gb_counterexample_spectral_radius(0.5, &mut s), GbStatus::InvalidArgument);
    }
}

#[test]
fn certificate_and_epsilon0() {
    unsafe {
        let mut m: *mut GbModel = ptr::null_mut();
        assert_eq!(gb_model_fcc111_inplane(2.5, &mut m), GbStatus::Ok);
        let mut c = GbCertSummary::default();
        assert_eq!(gb_certify(m, 0.01, 32, 64, &mut c), GbStatus::Ok);
        assert!(c.pass);
        assert!(c.min_s1 > 0.0);
        assert_eq!(c.points, 1 + 32 * 64);
        let mut ratio = 0.0;
        assert_eq!(gb_epsilon0(m, 0.01, 32, 64, &mut ratio), GbStatus::Ok);
        assert!(ratio > 0.0 && ratio < 0.1);
        gb_model_free(m);

        let mut m6: *mut GbModel = ptr::null_mut();
        assert_eq!(gb_model_fcc111(2.5, &mut m6), GbStatus::Ok);
        assert_eq!(gb_certify(m6, 0.01, 32, 64, &mut c), GbStatus::InvalidArgument);
        gb_model_free(m6);

        let mut m7: *mut GbModel = ptr::null_mut();
        assert_eq!(gb_model_fcc111_inplane(7.5, &mut m7), GbStatus::Ok);
        assert_eq!(gb_epsilon0(m7, 0.01, 32, 64, &mut ratio), GbStatus::NoCertifiableEpsilon);
        gb_model_free(m7);
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/gbadmm.h")).unwrap();
    for sym in [
        "gb_model_new",
        "gb_model_free",
        "gb_admm_solve",
        "gb_result_state",
        "gb_counterexample_spectral_radius",
        "gb_certify",
        "gb_epsilon0",
        "gb_last_error_message",
        "typedef struct GbModel GbModel;",
        "GB_STATUS_NO_CERTIFIABLE_EPSILON = 7",
    ] {
        assert!(header.contains(sym), "header lacks {sym}");
    }
}

fn cc_available() -> bool {
    Command::new("cc").arg("--version").output().is_ok_and(|o| o.status.success())
}

#[test]
fn c_program_links_against_static_library() {
    assert!(cc_available(), "a C compiler is needed for the C ABI check");
    let exe = std::env::current_exe().unwrap();
    let profile_dir: PathBuf = exe.parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libgbadmm_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let dir = env!("CARGO_MANIFEST_DIR");
    let out = tempfile::tempdir().unwrap();
    let bin = out.path().join("smoke");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(format!("{dir}/include"))
        .arg(format!("{dir}/tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "smoke program exited with {:?}", run.status.code());
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.starts_with("density 0.028"), "{stdout}");
}
