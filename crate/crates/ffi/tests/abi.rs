use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use lowdeg_ffi::*;

fn comm(n: u64, k: f64, x: &[f64]) -> LdCommunities {
    LdCommunities { n, k, x: x.as_ptr(), m: x.len(), c: 1.0 }
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(ld_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(ld_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn catalog_round_trip() {
    let mut cat = ptr::null_mut();
    assert_eq!(unsafe { ld_catalog_enumerate(2, true, false, &mut cat) }, LdStatus::Ok);
    assert_eq!(unsafe { ld_catalog_len(cat) }, 9);
    let mut info = LdClassInfo::default();
    let mut seen_loop = false;
    for i in 0..9 {
        assert_eq!(unsafe { ld_catalog_class_info(cat, i, &mut info) }, LdStatus::Ok);
        let mut needed = 0usize;
        let status = unsafe { ld_catalog_class_edges(cat, i, ptr::null_mut(), 0, &mut needed) };
        assert_eq!(status, LdStatus::BufferTooSmall);
        let mut buf = vec![0 as std::ffi::c_char; needed];
        assert_eq!(unsafe { ld_catalog_class_edges(cat, i, buf.as_mut_ptr(), buf.len(), ptr::null_mut()) }, LdStatus::Ok);
        let text = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_string();
        if info.d == 1 && info.v == 1 {
            assert_eq!(text, "0-0");
            seen_loop = true;
        }
    }
    assert!(seen_loop);
    assert_eq!(unsafe { ld_catalog_class_info(cat, 99, &mut info) }, LdStatus::InvalidArgument);
    assert!(last_error().contains("out of range"));
    unsafe { ld_catalog_free(cat) };
    unsafe { ld_catalog_free(ptr::null_mut()) };
    assert_eq!(unsafe { ld_catalog_len(ptr::null()) }, 0);
}

#[test]
fn catalog_limit_is_reported() {
    let mut cat = ptr::null_mut();
    assert_eq!(unsafe { ld_catalog_enumerate(40, true, false, &mut cat) }, LdStatus::SizeLimit);
    assert!(cat.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn r_values_through_handle() {
    let one = [1.0];
    let two = [0.5, 0.5];
    let p = LdGaussianParams { communities: comm(100, 20.0, &one), lambda: 0.5 };
    let q = LdGaussianParams { communities: comm(100, 20.0, &two), lambda: 0.5 };
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { ld_rtable_new_gaussian(&p, &q, &mut t) }, LdStatus::Ok);
    let edges = CString::new("0-0").unwrap();
    let mut v = 0.0;
    let mut buf = [0 as std::ffi::c_char; 32];
    assert_eq!(unsafe { ld_rtable_r_value(t, edges.as_ptr(), &mut v, buf.as_mut_ptr(), buf.len(), ptr::null_mut()) }, LdStatus::Ok);
    // λ (k/n) (M - M') = 0.5 * 0.2 * (1 - 2)
    assert_eq!(v, -0.1);
    assert_eq!(unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap(), "-1/10");
    let tree = CString::new("0-1 1-2").unwrap();
    assert_eq!(unsafe { ld_rtable_r_value(t, tree.as_ptr(), &mut v, ptr::null_mut(), 0, ptr::null_mut()) }, LdStatus::Ok);
    assert_eq!(v, 0.0);
    let bad = CString::new("0-x").unwrap();
    assert_eq!(unsafe { ld_rtable_r_value(t, bad.as_ptr(), &mut v, ptr::null_mut(), 0, ptr::null_mut()) }, LdStatus::InvalidArgument);
    unsafe { ld_rtable_free(t) };
}

#[test]
fn invalid_params_and_nulls() {
    let bad = [0.3, 0.3];
    let p = LdGaussianParams { communities: comm(100, 20.0, &bad), lambda: 0.5 };
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { ld_rtable_new_gaussian(&p, &p, &mut t) }, LdStatus::InvalidArgument);
    assert!(last_error().contains("sum of x"));
    assert_eq!(unsafe { ld_rtable_new_gaussian(ptr::null(), &p, &mut t) }, LdStatus::NullPointer);
    let mut out = LdAdvantage::default();
    assert_eq!(unsafe { ld_advantage_gaussian(&p, &p, 3, ptr::null_mut()) }, LdStatus::NullPointer);
    assert_eq!(unsafe { ld_advantage_gaussian(&p, &p, 3, &mut out) }, LdStatus::InvalidArgument);
}

#[test]
fn advantage_bounds() {
    let one = [1.0];
    let two = [0.5, 0.5];
    let p = LdGaussianParams { communities: comm(50, 10.0, &one), lambda: 0.25 };
    let mut out = LdAdvantage::default();
    assert_eq!(unsafe { ld_advantage_gaussian(&p, &p, 4, &mut out) }, LdStatus::Ok);
    assert_eq!(out.total_bound, 1.0);
    let q = LdGaussianParams { communities: comm(50, 10.0, &two), lambda: 0.25 };
    assert_eq!(unsafe { ld_advantage_gaussian(&p, &q, 1, &mut out) }, LdStatus::Ok);
    let r: f64 = 0.25 * 0.2;
    assert!((out.total_bound - (1.0 + 50.0 * r * r).sqrt()).abs() < 1e-12);
    assert_eq!((out.m_hat, out.m_tilde), (2, 1));

    let bp = LdBinaryParams { communities: comm(50, 10.0, &one), q: 0.2, s: 0.05, tau1: 0.5 };
    let bq = LdBinaryParams { communities: comm(50, 10.0, &two), q: 0.2, s: 0.05, tau1: 0.5 };
    assert_eq!(unsafe { ld_advantage_binary(&bp, &bq, 2, &mut out) }, LdStatus::Ok);
    assert_eq!(out.total_bound, 1.0);
    assert_eq!(unsafe { ld_advantage_binary(&bp, &bq, 3, &mut out) }, LdStatus::Ok);
    assert!(out.total_bound > 1.0);
}

#[test]
fn samplers_and_statistics() {
    let one = [1.0];
    let b = LdBinaryParams { communities: comm(20, 10.0, &one), q: 0.2, s: 0.1, tau1: 0.5 };
    let mut adj = vec![0u8; 400];
    assert_eq!(unsafe { ld_sample_binary(&b, 5, adj.as_mut_ptr()) }, LdStatus::Ok);
    let mut again = vec![0u8; 400];
    assert_eq!(unsafe { ld_sample_binary(&b, 5, again.as_mut_ptr()) }, LdStatus::Ok);
    assert_eq!(adj, again);
    let mut t = 0.0;
    assert_eq!(unsafe { ld_signed_triangles(adj.as_ptr(), 20, 0.2, &mut t) }, LdStatus::Ok);
    assert!(t.is_finite());
    let k3 = [0u8, 1, 1, 1, 0, 1, 1, 1, 0];
    assert_eq!(unsafe { ld_signed_triangles(k3.as_ptr(), 3, 0.0, &mut t) }, LdStatus::Ok);
    assert_eq!(t, 1.0);
    let asym = [0u8, 1, 0, 0];
    assert_eq!(unsafe { ld_signed_triangles(asym.as_ptr(), 2, 0.0, &mut t) }, LdStatus::InvalidArgument);

    let g = LdGaussianParams { communities: comm(10, 5.0, &one), lambda: 1.0 };
    let mut y = vec![0.0f64; 100];
    assert_eq!(unsafe { ld_sample_gaussian(&g, 3, y.as_mut_ptr()) }, LdStatus::Ok);
    let mut d = 0.0;
    assert_eq!(unsafe { ld_diag_sum(y.as_ptr(), 10, &mut d) }, LdStatus::Ok);
    assert_eq!(d, (0..10).map(|i| y[i * 11]).sum::<f64>());
}

/// The generated header is valid C and declares the exported symbols.
#[test]
fn header_compiles() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/lowdeg.h");
    let text = std::fs::read_to_string(&header).expect("header generated by build.rs");
    for sym in ["ld_catalog_enumerate", "ld_rtable_r_value", "ld_advantage_binary", "LD_STATUS_OK", "LdCatalog"] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    let tmp = tempfile_dir();
    let src = tmp.join("use_header.c");
    std::fs::write(
        &src,
        "#include \"lowdeg.h\"\nint main(void) { LdStatus s = LD_STATUS_OK; LdCatalog *c = 0; (void)c; return (int)s; }\n",
    )
    .unwrap();
    let status = Command::new("cc").arg("-fsyntax-only").arg("-std=c99").arg("-I").arg(dir.join("include")).arg(&src).status();
    match status {
        Ok(s) => assert!(s.success(), "header failed to compile"),
        Err(_) => eprintln!("no C compiler found; header compile check skipped"),
    }
}

fn tempfile_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lowdeg-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
