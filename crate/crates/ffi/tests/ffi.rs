use std::ffi::{c_char, CString};
use std::ptr;

use pwqre_ffi::*;

fn last_error() -> String {
    let mut needed = 0usize;
    unsafe { pwqre_last_error(ptr::null_mut(), 0, &mut needed) };
    let mut buf = vec![0u8; needed];
    let st = unsafe { pwqre_last_error(buf.as_mut_ptr() as *mut c_char, buf.len(), &mut needed) };
    assert_eq!(st, PwqreStatus::Ok);
    buf.pop();
    String::from_utf8(buf).unwrap()
}

fn builtin(name: &str) -> *mut PwqreInstance {
    let name = CString::new(name).unwrap();
    let mut inst = ptr::null_mut();
    assert_eq!(unsafe { pwqre_instance_builtin(name.as_ptr(), &mut inst) }, PwqreStatus::Ok);
    assert!(!inst.is_null());
    inst
}

#[test]
fn instance_basis_and_eta() {
    let inst = builtin("nh3bf3");
    let mut b = PwqreBasis::default();
    assert_eq!(unsafe { pwqre_instance_basis(inst, &mut b) }, PwqreStatus::Ok);
    assert_eq!((b.g_size, b.gbar_size, b.system_qubits), (504_063, 33_227_775, 808));
    assert_eq!((b.n, b.nbar), ([6, 6, 7], [8, 8, 9]));
    let mut eta = [0u64; 3];
    assert_eq!(unsafe { pwqre_instance_eta(inst, eta.as_mut_ptr()) }, PwqreStatus::Ok);
    assert_eq!(eta, [32, 8, 40]);
    unsafe { pwqre_instance_free(inst) };
}

#[test]
fn report_round_trip() {
    let inst = builtin("NH3BF3");
    let times = [1.0, 2.0];
    let mut rep = ptr::null_mut();
    assert_eq!(unsafe { pwqre_report_run(inst, times.as_ptr(), 2, 1e-9, &mut rep) }, PwqreStatus::Ok);
    assert_eq!(unsafe { pwqre_report_plan_count(rep) }, 2);
    let mut per_call = 0u64;
    assert_eq!(unsafe { pwqre_report_toffolis_per_call(rep, &mut per_call) }, PwqreStatus::Ok);
    let mut lambda = 0.0;
    assert_eq!(unsafe { pwqre_report_lambda(rep, &mut lambda) }, PwqreStatus::Ok);
    let mut plan = PwqrePlan::default();
    assert_eq!(unsafe { pwqre_report_plan(rep, 1, &mut plan) }, PwqreStatus::Ok);
    assert_eq!(plan.t, 2.0);
    assert!((plan.tau - 2.0 * lambda).abs() < 1e-9 * plan.tau);
    assert_eq!(plan.toffoli_total, (plan.iterate_calls * per_call) as f64);
    assert_eq!(unsafe { pwqre_report_plan(rep, 2, &mut plan) }, PwqreStatus::OutOfRange);

    let mut needed = 0usize;
    let mut tiny = [0 as c_char; 4];
    assert_eq!(
        unsafe { pwqre_report_json(rep, tiny.as_mut_ptr(), tiny.len(), &mut needed) },
        PwqreStatus::BufferTooSmall
    );
    let mut buf = vec![0u8; needed];
    assert_eq!(
        unsafe { pwqre_report_json(rep, buf.as_mut_ptr() as *mut c_char, buf.len(), &mut needed) },
        PwqreStatus::Ok
    );
    assert_eq!(buf.pop(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
    assert_eq!(v["schema"], "pwqre-report/1");
    assert_eq!(v["cost"]["grand_total"].as_u64(), Some(per_call));
    unsafe {
        pwqre_report_free(rep);
        pwqre_instance_free(inst);
    }
}

#[test]
fn errors_map_to_codes() {
    let mut inst = ptr::null_mut();
    let name = CString::new("no-such-instance").unwrap();
    assert_eq!(unsafe { pwqre_instance_builtin(name.as_ptr(), &mut inst) }, PwqreStatus::Validation);
    assert!(last_error().contains("no-such-instance"));
    assert!(inst.is_null());

    assert_eq!(unsafe { pwqre_instance_builtin(ptr::null(), &mut inst) }, PwqreStatus::NullPointer);
    let bad = [0xffu8, 0];
    assert_eq!(unsafe { pwqre_instance_builtin(bad.as_ptr() as *const c_char, &mut inst) }, PwqreStatus::InvalidUtf8);
    let text = CString::new("name = 3").unwrap();
    assert_eq!(unsafe { pwqre_instance_parse(text.as_ptr(), &mut inst) }, PwqreStatus::Validation);

    let mut r = 0u64;
    assert_eq!(unsafe { pwqre_jacobi_anger_degree(10.0, 0.0, &mut r) }, PwqreStatus::Validation);
    assert_eq!(unsafe { pwqre_jacobi_anger_degree(10.0, 1e-9, &mut r) }, PwqreStatus::Ok);
    assert!(r > 10);
    assert_eq!(unsafe { pwqre_report_plan_count(ptr::null()) }, 0);
    unsafe {
        pwqre_instance_free(ptr::null_mut());
        pwqre_report_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_the_api_and_compiles() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/pwqre.h")).unwrap();
    for sym in [
        "typedef struct PwqreInstance PwqreInstance;",
        "typedef struct PwqreReport PwqreReport;",
        "PWQRE_STATUS_OK = 0",
        "PWQRE_STATUS_NUMERIC = 4",
        "pwqre_instance_builtin",
        "pwqre_report_run",
        "pwqre_report_json",
        "pwqre_last_error",
    ] {
        assert!(header.contains(sym), "header lacks {sym}");
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"pwqre.h\"\nint main(void) { PwqreInstance *i = 0; PwqreStatus s = pwqre_instance_builtin(\"nh3bf3\", &i); pwqre_instance_free(i); return (int)s; }\n",
    )
    .unwrap();
    let out = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(&src)
        .output()
        .expect("a C compiler is available");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
