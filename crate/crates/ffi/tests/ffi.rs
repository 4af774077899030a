use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use kepler_cz_ffi::*;

fn last_error() -> String {
    let p = kcz_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn catalog_handle_round_trip() {
    let mut cat = ptr::null_mut();
    assert_eq!(unsafe { kcz_catalog_new(-2.1, 3, 11, &mut cat) }, KczStatus::Ok);
    assert!(kcz_last_error().is_null());
    let n = unsafe { kcz_catalog_len(cat) };
    assert_eq!(n, 19);
    let mut row = KczOrbit { kind: KczOrbitKind::Retrograde, k: 0, l: 0, cover: 0, kepler_energy: 0.0, period: 0.0, index_doubled: 0, l3_sign: 0 };
    let mut fam81 = None;
    for i in 0..n {
        assert_eq!(unsafe { kcz_catalog_get(cat, i, &mut row) }, KczStatus::Ok);
        if row.kind == KczOrbitKind::Family && (row.k, row.l) == (8, 1) {
            fam81 = Some(row);
        }
    }
    assert_eq!(fam81.unwrap().index_doubled, 63);
    assert_eq!(unsafe { kcz_catalog_get(cat, n, &mut row) }, KczStatus::InvalidArgument);
    assert!(last_error().contains("out of range"));
    unsafe { kcz_catalog_free(cat) };
    unsafe { kcz_catalog_free(ptr::null_mut()) };
    assert_eq!(unsafe { kcz_catalog_len(ptr::null()) }, 0);
}

#[test]
fn error_codes() {
    let mut cat = ptr::null_mut();
    assert_eq!(unsafe { kcz_catalog_new(-1.4, 1, 5, &mut cat) }, KczStatus::Domain);
    assert!(cat.is_null());
    assert!(last_error().contains("critical"));
    assert_eq!(unsafe { kcz_catalog_new(-2.5, 1, 11, &mut cat) }, KczStatus::NotGeneric);
    assert_eq!(unsafe { kcz_catalog_new(-2.1, 1, 11, ptr::null_mut()) }, KczStatus::NullPointer);
    let mut d = 0;
    assert_eq!(unsafe { kcz_rs_family(16, 2, &mut d) }, KczStatus::InvalidArgument);
    assert_eq!(unsafe { kcz_cz_closed_form(-2.1, KczOrbitKind::Family, 1, &mut d) }, KczStatus::InvalidArgument);
}

#[test]
fn indices() {
    let mut d = 0;
    assert_eq!(unsafe { kcz_rs_family(8, 1, &mut d) }, KczStatus::Ok);
    assert_eq!(d, 63);
    assert_eq!(unsafe { kcz_cz_closed_form(-2.1, KczOrbitKind::CollisionPlus, 3, &mut d) }, KczStatus::Ok);
    assert_eq!(d, 24);
    let (mut num, mut closed) = (0, 0);
    assert_eq!(unsafe { kcz_cz_numeric(-2.1, KczOrbitKind::Direct, 2, &mut num, &mut closed) }, KczStatus::Ok);
    assert_eq!((num, closed), (20, 20));
}

#[test]
fn invariants_of_a_circular_state() {
    let state = [2.0, 0.0, 0.0, 0.0, 0.5f64.sqrt(), 0.0];
    let mut inv = KczInvariants::default();
    assert_eq!(unsafe { kcz_invariants(state.as_ptr(), &mut inv) }, KczStatus::Ok);
    assert!((inv.energy + 0.25).abs() < 1e-15);
    assert!((inv.angular_momentum[2] - 2.0f64.sqrt()).abs() < 1e-15);
    assert!(inv.lrl.iter().all(|a| a.abs() < 1e-15));
    assert_eq!(unsafe { kcz_invariants(ptr::null(), &mut inv) }, KczStatus::NullPointer);
}

#[test]
fn ledger_json_string() {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { kcz_ledger_json(-2.1, 10, &mut s) }, KczStatus::Ok);
    let text = unsafe { CString::from_raw(s) }.into_string().unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["all_match"], true);
    unsafe { kcz_string_free(ptr::null_mut()) };
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(kcz_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn which(tool: &str) -> bool {
    Command::new(tool).arg("--version").output().is_ok_and(|o| o.status.success())
}

/// target/<profile>, two levels above the test binary in `deps/`.
fn profile_dir() -> PathBuf {
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_example_links_against_the_static_library() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let archive = profile_dir().join("libkepler_cz_ffi.a");
    if !which("cc") || !archive.exists() {
        eprintln!("skipping: no C compiler or no {}", archive.display());
        return;
    }
    let exe = std::env::temp_dir().join(format!("kcz-catalog-{}", std::process::id()));
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(manifest.join("include"))
        .arg(manifest.join("examples/catalog.c"))
        .arg(&archive)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    let _ = std::fs::remove_file(&exe);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 21, "{text}");
    assert!(text.contains("family(8,1) 63/2"));
    assert!(text.contains("above critical: 2 "));
}
