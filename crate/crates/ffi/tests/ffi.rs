use std::ffi::{CStr, CString};
use std::ptr;

use tm_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(tm_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn sphere(level: u32, group: &str) -> *mut TmSurface {
    let g = CString::new(group).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { tm_surface_sphere(level, g.as_ptr(), &mut s) }, TmStatus::Ok);
    assert!(!s.is_null());
    s
}

#[test]
fn sphere_spectrum_and_green() {
    unsafe {
        let s = sphere(4, "antipodal");
        let mut n = 0;
        assert_eq!(tm_surface_vertex_count(s, &mut n), TmStatus::Ok);
        assert_eq!(n, 2562);
        let mut ell = 0;
        assert_eq!(tm_surface_ell(s, &mut ell), TmStatus::Ok);
        assert_eq!(ell, 2);
        let mut area = 0.0;
        assert_eq!(tm_surface_area(s, &mut area), TmStatus::Ok);
        assert!((area - 4.0 * std::f64::consts::PI).abs() < 0.1);

        let mut sp = ptr::null_mut();
        assert_eq!(tm_spectrum_compute(s, 8, &mut sp), TmStatus::Ok);
        let mut len = 0;
        assert_eq!(tm_spectrum_len(sp, &mut len), TmStatus::Ok);
        assert_eq!(len, 8);
        let (mut l1, mut mult) = (0.0, 0);
        assert_eq!(tm_spectrum_lambda(sp, 1, &mut l1, &mut mult), TmStatus::Ok);
        assert_eq!(mult, 5);
        assert!((l1 - 6.0).abs() < 0.12);
        let mut e0 = 0.0;
        assert_eq!(tm_spectrum_eigenvalue(sp, 0, &mut e0), TmStatus::Ok);
        assert_eq!(e0, l1);
        assert_eq!(tm_spectrum_eigenvalue(sp, 99, &mut e0), TmStatus::OutOfRange);
        assert!(last_error().contains("99"));
        assert_eq!(
            tm_spectrum_lambda(sp, 9, &mut l1, ptr::null_mut()),
            TmStatus::OutOfRange
        );

        let (mut a, mut lub) = (0.0, 0.0);
        assert_eq!(tm_green_constant(s, sp, 1, 0.0, &mut a, &mut lub), TmStatus::Ok);
        // Closed form for the antipodal pair at α = 0.
        assert!((a - (-0.0244186)).abs() < 1e-3, "{a}");
        assert!(lub > area.ln());
        assert_eq!(
            tm_green_constant(s, sp, 1, 100.0, &mut a, ptr::null_mut()),
            TmStatus::ConfigError
        );
        assert!(last_error().contains("alpha"));

        tm_spectrum_free(sp);
        tm_surface_free(s);
    }
}

#[test]
fn maximizer_through_handles() {
    unsafe {
        let s = sphere(2, "antipodal");
        let mut sp = ptr::null_mut();
        assert_eq!(tm_spectrum_compute(s, 8, &mut sp), TmStatus::Ok);
        let mut l1 = 0.0;
        assert_eq!(tm_spectrum_lambda(sp, 1, &mut l1, ptr::null_mut()), TmStatus::Ok);
        let mut st = ptr::null_mut();
        assert_eq!(tm_maximize(s, sp, 1, 0.25 * l1, 6.0, 1, &mut st), TmStatus::Ok);
        let mut sum = TmStateSummary::default();
        assert_eq!(tm_state_summary(st, &mut sum), TmStatus::Ok);
        assert!(sum.converged && sum.lambda_eps > 0.0 && sum.el_residual < 1e-8);
        let mut n = 0;
        tm_surface_vertex_count(s, &mut n);
        let mut u = vec![0.0; n];
        assert_eq!(tm_state_values(st, u.as_mut_ptr(), n), TmStatus::Ok);
        assert_eq!(u[sum.x_eps].abs(), sum.c_eps);
        assert_eq!(tm_state_values(st, u.as_mut_ptr(), n - 1), TmStatus::OutOfRange);
        tm_state_free(st);

        let mut st = ptr::null_mut();
        assert_eq!(tm_maximize(s, sp, 1, 2.0 * l1, 6.0, 1, &mut st), TmStatus::ConfigError);
        assert!(st.is_null());
        tm_spectrum_free(sp);
        tm_surface_free(s);
    }
}

#[test]
fn errors_and_null_handling() {
    unsafe {
        let mut s = ptr::null_mut();
        let bad = CString::new("icosahedral").unwrap();
        assert_eq!(tm_surface_sphere(2, bad.as_ptr(), &mut s), TmStatus::ConfigError);
        assert!(last_error().contains("icosahedral"));
        assert!(s.is_null());
        assert_eq!(tm_surface_sphere(2, ptr::null(), &mut s), TmStatus::NullPointer);
        let g = CString::new("trivial").unwrap();
        assert_eq!(tm_surface_sphere(2, g.as_ptr(), ptr::null_mut()), TmStatus::NullPointer);
        let invalid = [0xffu8, 0xfe, 0];
        assert_eq!(
            tm_surface_sphere(2, invalid.as_ptr().cast(), &mut s),
            TmStatus::InvalidUtf8
        );
        let mut n = 0;
        assert_eq!(tm_surface_vertex_count(ptr::null(), &mut n), TmStatus::NullPointer);
        tm_surface_free(ptr::null_mut());
        tm_spectrum_free(ptr::null_mut());
        tm_state_free(ptr::null_mut());
        assert_eq!(
            tm_surface_torus(8, 8, 1.0, 1.0, ptr::null(), 1, &mut s),
            TmStatus::NullPointer
        );
        assert!(!CStr::from_ptr(tm_version()).to_bytes().is_empty());
    }
}

#[test]
fn mismatched_spectrum_is_rejected() {
    unsafe {
        let a = sphere(1, "antipodal");
        let b = sphere(2, "antipodal");
        let mut sp = ptr::null_mut();
        assert_eq!(tm_spectrum_compute(a, 4, &mut sp), TmStatus::Ok);
        let mut x = 0.0;
        assert_eq!(
            tm_green_constant(b, sp, 1, 0.0, &mut x, ptr::null_mut()),
            TmStatus::ConfigError
        );
        assert!(last_error().contains("different surface"));
        tm_spectrum_free(sp);
        tm_surface_free(a);
        tm_surface_free(b);
    }
}

#[test]
fn torus_off_round_trip_and_run() {
    unsafe {
        let d = tempfile::tempdir().unwrap();
        let shifts = [4usize, 0];
        let mut t = ptr::null_mut();
        assert_eq!(
            tm_surface_torus(8, 8, 1.0, 1.0, shifts.as_ptr(), 1, &mut t),
            TmStatus::Ok
        );
        let mut ell = 0;
        tm_surface_ell(t, &mut ell);
        assert_eq!(ell, 2);
        let path = CString::new(d.path().join("t.off").to_str().unwrap()).unwrap();
        assert_eq!(tm_surface_write_off(t, path.as_ptr()), TmStatus::Ok);
        let trivial = CString::new("trivial").unwrap();
        let mut back = ptr::null_mut();
        assert_eq!(
            tm_surface_load(path.as_ptr(), trivial.as_ptr(), &mut back),
            TmStatus::Ok
        );
        let mut n = 0;
        tm_surface_vertex_count(back, &mut n);
        assert_eq!(n, 64);
        tm_surface_free(back);
        tm_surface_free(t);

        let cfg = d.path().join("c.json");
        std::fs::write(
            &cfg,
            r#"{"surface":{"kind":"sphere","level":2,"group":"antipodal"},"pipeline":["spectrum"],"output_dir":"out"}"#,
        )
        .unwrap();
        let c = CString::new(cfg.to_str().unwrap()).unwrap();
        assert_eq!(tm_run_experiment(c.as_ptr()), TmStatus::Ok);
        assert!(d.path().join("out/spectrum.json").is_file());
        std::fs::write(&cfg, r#"{"bogus": 1}"#).unwrap();
        assert_eq!(tm_run_experiment(c.as_ptr()), TmStatus::ConfigError);
    }
}
