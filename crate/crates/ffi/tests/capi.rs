use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use hypercircle_ffi::*;

fn last_error() -> String {
    let p = hc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn example(name: &str) -> *mut HcAngleData {
    let name = CString::new(name).unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { hc_angle_data_example(name.as_ptr(), &mut h) }, HcStatus::Ok);
    h
}

#[test]
fn uniformize_through_handles() {
    let d = example("lawson-squares");
    let (mut v, mut e, mut f, mut g) = (0, 0, 0, 0);
    assert_eq!(unsafe { hc_angle_data_counts(d, &mut v, &mut e, &mut f, &mut g) }, HcStatus::Ok);
    assert_eq!((v, g), (4, 2));

    let mut u = ptr::null_mut();
    assert_eq!(unsafe { hc_uniformize(d, 0.0, 0, &mut u) }, HcStatus::Ok);
    let (mut it, mut gn, mut ar, mut cr) = (0, 0.0, 0.0, 0.0);
    assert_eq!(unsafe { hc_uniformization_stats(u, &mut it, &mut gn, &mut ar, &mut cr) }, HcStatus::Ok);
    assert!(gn <= 1e-10 && ar < 1e-9 && cr < 1e-9);

    let mut count = 0;
    assert_eq!(unsafe { hc_uniformization_radii(u, ptr::null_mut(), 0, &mut count) }, HcStatus::Ok);
    let mut radii = vec![0.0; count];
    assert_eq!(unsafe { hc_uniformization_radii(u, radii.as_mut_ptr(), radii.len(), &mut count) }, HcStatus::Ok);
    assert!(radii.iter().all(|&r| r > 0.0));

    let n = unsafe { hc_uniformization_generator_count(u) };
    assert!(n >= 4);
    let mut m = [0.0; 4];
    assert_eq!(unsafe { hc_uniformization_generator(u, 0, m.as_mut_ptr()) }, HcStatus::Ok);
    assert!((m[0] * m[3] - m[1] * m[2] - 1.0).abs() < 1e-9);
    assert_eq!(unsafe { hc_uniformization_generator(u, n, m.as_mut_ptr()) }, HcStatus::OutOfRange);
    assert!(last_error().contains("out of range"));

    let report = unsafe { hc_uniformization_report(u) };
    assert!(unsafe { CStr::from_ptr(report) }.to_str().unwrap().starts_with("# generators"));
    unsafe {
        hc_string_free(report);
        hc_uniformization_free(u);
        hc_angle_data_free(d);
    }
}

#[test]
fn errors_set_status_and_message() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { hc_angle_data_example(ptr::null(), &mut h) }, HcStatus::NullPointer);
    let bad = CString::new("{").unwrap();
    assert_eq!(unsafe { hc_angle_data_from_json(HcInputKind::AngleData, bad.as_ptr(), ptr::null(), &mut h) }, HcStatus::InvalidInput);
    assert!(last_error().contains("angle data"));
    assert!(h.is_null());

    let d = example("lawson-squares");
    let mut u = ptr::null_mut();
    assert_eq!(unsafe { hc_uniformize(d, 0.0, 2, &mut u) }, HcStatus::NotConverged);
    assert!(u.is_null());
    unsafe { hc_angle_data_free(d) };
    assert_eq!(unsafe { hc_uniformize(ptr::null(), 0.0, 0, &mut u) }, HcStatus::NullPointer);
}

#[test]
fn validate_and_sphere() {
    let d = example("lawson-curve");
    let (mut passed, mut exhaustive) = (0, 0);
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { hc_validate(d, &mut passed, &mut exhaustive, &mut report) }, HcStatus::Ok);
    assert_eq!((passed, exhaustive), (1, 1));
    unsafe {
        hc_string_free(report);
        hc_angle_data_free(d);
    }

    let o = example("octahedron");
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { hc_sphere_realize(o, -1, 1, &mut s) }, HcStatus::Ok);
    let (mut theta, mut sym) = (1.0, 1.0);
    assert_eq!(unsafe { hc_sphere_residuals(s, &mut theta, &mut sym) }, HcStatus::Ok);
    assert!(theta < 1e-7 && sym < 1e-8);
    let json = unsafe { hc_sphere_pattern_json(s) };
    assert!(unsafe { CStr::from_ptr(json) }.to_str().unwrap().contains("face_circles"));
    unsafe {
        hc_string_free(json);
        hc_sphere_free(s);
    }
    let mut s2 = ptr::null_mut();
    assert_eq!(unsafe { hc_sphere_realize(o, 0, 0, &mut s2) }, HcStatus::InvalidInput);
    unsafe { hc_angle_data_free(o) };

    let p = example("octahedron-pi2");
    assert_eq!(unsafe { hc_sphere_realize(p, -1, 0, &mut s2) }, HcStatus::NotRealized);
    unsafe { hc_angle_data_free(p) };
}

#[test]
fn header_declares_the_interface() {
    let header = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/hypercircle.h")).unwrap();
    for name in [
        "typedef struct HcAngleData HcAngleData",
        "HC_STATUS_NOT_CONVERGED = 3",
        "hc_last_error(void)",
        "hc_uniformize(",
        "hc_sphere_realize(",
        "hc_string_free(",
    ] {
        assert!(header.contains(name), "{name}");
    }
}

#[test]
fn c_program_links_against_the_static_library() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/<test> -> target/<profile>
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libhypercircle_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let tmp = tempfile::tempdir().unwrap();
    let exe = tmp.path().join("smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler runs");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
