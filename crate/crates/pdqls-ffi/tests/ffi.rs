use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use pdqls_ffi::*;

fn last_error() -> String {
    let p = pdqls_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn random_pd(n: usize, kappa: f64, seed: u64) -> *mut PdqlsInstance {
    let family = CString::new("random_pd").unwrap();
    let params = CString::new(format!(r#"{{"n":{n},"kappa":{kappa}}}"#)).unwrap();
    let mut inst = ptr::null_mut();
    let rc = unsafe { pdqls_instance_generate(family.as_ptr(), seed, params.as_ptr(), &mut inst) };
    assert_eq!(rc, PDQLS_OK);
    inst
}

#[test]
fn solve_roundtrip() {
    let inst = random_pd(16, 8.0, 1);
    unsafe {
        assert_eq!(pdqls_instance_dim(inst), 16);
        assert_eq!(pdqls_instance_kappa(inst), 8.0);
        let mut sol = ptr::null_mut();
        assert_eq!(pdqls_solve(inst, 1.0, 0.01, PDQLS_MODE_POSTSELECT, &mut sol), PDQLS_OK);
        let n = pdqls_solution_dim(sol);
        let (mut re, mut im) = (vec![0.0; n], vec![0.0; n]);
        assert_eq!(
            pdqls_solution_amplitudes(sol, re.as_mut_ptr(), im.as_mut_ptr(), n),
            PDQLS_OK
        );
        let norm: f64 = re.iter().zip(&im).map(|(a, b)| a * a + b * b).sum();
        assert!((norm - 1.0).abs() < 1e-10);
        let report: serde_json::Value =
            serde_json::from_str(CStr::from_ptr(pdqls_solution_report(sol)).to_str().unwrap()).unwrap();
        assert!(report["trace_error"].as_f64().unwrap() <= 0.01);
        pdqls_solution_free(sol);
        pdqls_instance_free(inst);
    }
}

#[test]
fn instance_json_roundtrip() {
    let inst = random_pd(8, 4.0, 2);
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(pdqls_instance_to_json(inst, &mut s), PDQLS_OK);
        let mut back = ptr::null_mut();
        assert_eq!(pdqls_instance_from_json(s, &mut back), PDQLS_OK);
        assert_eq!(pdqls_instance_dim(back), 8);
        pdqls_string_free(s);
        pdqls_instance_free(back);
        pdqls_instance_free(inst);
    }
}

#[test]
fn errors_set_code_and_message() {
    let mut inst = ptr::null_mut();
    let family = CString::new("no_such_family").unwrap();
    let rc = unsafe { pdqls_instance_generate(family.as_ptr(), 0, ptr::null(), &mut inst) };
    assert_eq!(rc, PDQLS_ERR_INVALID);
    assert!(last_error().contains("no_such_family"));
    assert!(inst.is_null());

    let rc = unsafe { pdqls_instance_generate(ptr::null(), 0, ptr::null(), &mut inst) };
    assert_eq!(rc, PDQLS_ERR_NULL);

    let bad = CString::new("{not json").unwrap();
    assert_eq!(
        unsafe { pdqls_instance_from_json(bad.as_ptr(), &mut inst) },
        PDQLS_ERR_INVALID
    );

    let pd = random_pd(8, 4.0, 3);
    let mut sol = ptr::null_mut();
    assert_eq!(unsafe { pdqls_sumqls(pd, 0.01, &mut sol) }, PDQLS_ERR_INVALID);
    assert_eq!(unsafe { pdqls_solve(pd, 1.0, 0.01, 7, &mut sol) }, PDQLS_ERR_INVALID);
    pdqls_clear_error();
    assert!(pdqls_last_error().is_null());
    unsafe { pdqls_instance_free(pd) };
}

#[test]
fn sumqls_and_vtaa() {
    let family = CString::new("random_sum").unwrap();
    let params = CString::new(r#"{"n":3,"j":2,"s":2,"d_b":1}"#).unwrap();
    let mut inst = ptr::null_mut();
    unsafe {
        assert_eq!(
            pdqls_instance_generate(family.as_ptr(), 5, params.as_ptr(), &mut inst),
            PDQLS_OK
        );
        let mut sol = ptr::null_mut();
        assert_eq!(pdqls_sumqls(inst, 0.01, &mut sol), PDQLS_OK);
        assert_eq!(pdqls_solution_dim(sol), 8);
        pdqls_solution_free(sol);
        pdqls_instance_free(inst);
    }
    let pd = random_pd(16, 8.0, 4);
    let mut sol = ptr::null_mut();
    unsafe {
        assert_eq!(pdqls_vtaa(pd, 1.0, 0.05, &mut sol), PDQLS_OK);
        pdqls_solution_free(sol);
        pdqls_instance_free(pd);
    }
}

#[test]
fn approx_matches_inverse_away_from_one() {
    let xs = [-1.0, -0.5, 0.0, 0.5];
    let mut ys = [0.0; 4];
    let mut k = 0.0;
    let rc = unsafe { pdqls_approx_eval(4.0, 30, xs.as_ptr(), ys.as_mut_ptr(), 4, &mut k) };
    assert_eq!(rc, PDQLS_OK);
    for (x, y) in xs.iter().zip(ys) {
        assert!((y - 1.0 / (1.0 - x)).abs() < 1e-6);
    }
    assert!(k > 0.0);
    let rc = unsafe { pdqls_approx_eval(0.5, 3, xs.as_ptr(), ys.as_mut_ptr(), 4, ptr::null_mut()) };
    assert_eq!(rc, PDQLS_ERR_INVALID);
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(pdqls_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/pdqls.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in [
        "pdqls_instance_generate",
        "pdqls_solution_free",
        "pdqls_last_error",
        "typedef struct PdqlsInstance",
    ] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"pdqls.h\"\nint main(void) { PdqlsInstance *i = 0; int rc = pdqls_instance_generate(\"grover\", 0, 0, &i); pdqls_instance_free(i); return rc; }\n",
    )
    .unwrap();
    let Ok(out) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header.parent().unwrap())
        .arg(&src)
        .output()
    else {
        eprintln!("no C compiler found, syntax check skipped");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
