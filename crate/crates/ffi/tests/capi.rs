use sfhe_ffi::*;
use std::ffi::CString;
use std::ptr;

fn model() -> *mut SfheModel {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { sfhe_model_new(1.5, 0.4, &mut m) }, SfheStatus::Ok);
    m
}

fn last_error() -> String {
    let mut buf = vec![0u8; 256];
    let n = unsafe { sfhe_last_error_message(buf.as_mut_ptr() as *mut _, buf.len()) };
    buf.truncate(n.min(255));
    String::from_utf8(buf).unwrap()
}

#[test]
fn constants_and_variance() {
    let m = model();
    let mut c = SfheConstants::default();
    let mut v = 0.0;
    unsafe {
        assert_eq!(sfhe_model_constants(m, &mut c), SfheStatus::Ok);
        assert_eq!(sfhe_model_variance(m, 1.0, &mut v), SfheStatus::Ok);
        sfhe_model_free(m);
    }
    assert!((c.c1h - 0.140979226499995).abs() < 1e-12);
    assert!((c.c21 - 0.628461311072915).abs() < 1e-12);
    assert!((v - 0.628461311072915).abs() < 1e-12);
}

#[test]
fn inadmissible_parameters_report_out_of_range() {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { sfhe_model_new(1.5, 0.2, &mut m) }, SfheStatus::OutOfRange);
    assert!(m.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn null_handles_are_rejected() {
    let mut v = 0.0;
    assert_eq!(unsafe { sfhe_model_variance(ptr::null(), 1.0, &mut v) }, SfheStatus::NullPointer);
    assert!(last_error().contains("model"));
    let m = model();
    assert_eq!(unsafe { sfhe_model_variance(m, 1.0, ptr::null_mut()) }, SfheStatus::NullPointer);
    unsafe {
        sfhe_model_free(m);
        sfhe_model_free(ptr::null_mut());
    }
}

#[test]
fn d1_at_equal_points_is_zero_and_symmetric() {
    let m = model();
    let (mut a, mut b, mut e) = (0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(sfhe_metric_d1(m, 1.0, 0.3, 1.0, 0.3, &mut a, &mut e), SfheStatus::Ok);
        assert!(a.abs() < 1e-12);
        sfhe_metric_d1(m, 1.0, 0.0, 0.5, 2.0, &mut a, &mut e);
        sfhe_metric_d1(m, 0.5, 2.0, 1.0, 0.0, &mut b, &mut e);
        sfhe_model_free(m);
    }
    assert!(a > 0.0 && (a - b).abs() < 1e-12);
}

#[test]
fn sampler_fills_buffer_deterministically() {
    let m = model();
    let mut s = ptr::null_mut();
    let mut len = 0usize;
    unsafe {
        assert_eq!(sfhe_sampler_new(m, 1.0, 0.0, 1, -32.0, 0.5, 128, &mut s), SfheStatus::Ok);
        sfhe_model_free(m);
        assert_eq!(sfhe_sampler_len(s, &mut len), SfheStatus::Ok);
    }
    assert_eq!(len, 128);
    let mut a = vec![0.0; len];
    let mut b = vec![0.0; len];
    let mut short = vec![0.0; len - 1];
    unsafe {
        assert_eq!(sfhe_sampler_draw(s, 7, 0, a.as_mut_ptr(), len), SfheStatus::Ok);
        assert_eq!(sfhe_sampler_draw(s, 7, 0, b.as_mut_ptr(), len), SfheStatus::Ok);
        assert_eq!(
            sfhe_sampler_draw(s, 7, 0, short.as_mut_ptr(), len - 1),
            SfheStatus::BufferTooSmall
        );
        sfhe_sampler_free(s);
    }
    assert_eq!(a, b);
    assert!(a.iter().any(|v| *v != 0.0));
}

#[test]
fn short_period_is_a_numerical_failure() {
    let m = model();
    let mut s = ptr::null_mut();
    let st = unsafe { sfhe_sampler_new(m, 1.0, 0.0, 1, 0.0, 0.1, 16, &mut s) };
    unsafe { sfhe_model_free(m) };
    assert_eq!(st, SfheStatus::TruncationBudgetExceeded, "{}", last_error());
    assert!(s.is_null());
}

#[test]
fn borell_tail_values() {
    assert!((sfhe_borell_tail(1.0, 0.0) - 2.0).abs() < 1e-15);
    assert!((sfhe_borell_tail(1.0, 2.0) - 2.0 * (-2.0f64).exp()).abs() < 1e-15);
}

#[test]
fn config_errors_surface_as_status() {
    let cfg = CString::new("[experiment]\nkind = supGrowthL\nwibble = 3\n").unwrap();
    let out = CString::new("/nonexistent/out.csv").unwrap();
    assert_eq!(unsafe { sfhe_experiment_run(cfg.as_ptr(), out.as_ptr()) }, SfheStatus::Config);
    assert!(last_error().contains("line 3"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/sfhe.h")).unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|s| s.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for f in exports {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else { return };
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("use.c");
    std::fs::write(
        &file,
        "#include \"sfhe.h\"\nint f(void) { SfheModel *m = 0; \
         return sfhe_model_new(1.5, 0.4, &m) == SFHE_STATUS_OK; }\n",
    )
    .unwrap();
    let o = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&file)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok())
        .ok_or(())
}
