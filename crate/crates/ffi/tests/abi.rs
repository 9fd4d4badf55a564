use std::ffi::{CStr, CString};
use std::ptr;

use learnwidth_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(lw_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn matrix_width_round_trip() {
    let json = cstr(r#"{"n": 4, "entries": [[2, 1, 1, -1], [1, 2, 0, 1], [1, 0, 2, -1], [-1, 1, -1, 2]]}"#);
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(lw_matrix_from_json(json.as_ptr(), &mut m), LwStatus::Ok);
        assert_eq!(lw_matrix_dim(m), 4);
        let mut w = 0;
        assert_eq!(lw_factor_width(m, 1e-7, 0, &mut w), LwStatus::Ok);
        assert_eq!(w, 3);
        let mut mu = 0.0;
        assert_eq!(lw_mu_oracle(m, 1, &mut mu), LwStatus::Ok);
        assert!((mu - 2.0).abs() < 1e-12);
        lw_matrix_free(m);
    }
}

#[test]
fn matrix_from_arrays() {
    let re = [0.5, 0.0, 0.0, 0.5];
    let im = [0.0, 0.0, 0.0, 0.0];
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(lw_matrix_new(2, re.as_ptr(), im.as_ptr(), &mut m), LwStatus::Ok);
        let (mut a, mut d) = (LwAnswer::Boundary, -1.0);
        assert_eq!(lw_wmem(m, 1, 1e-3, &mut a, &mut d), LwStatus::Ok);
        assert_eq!(a, LwAnswer::Inside);
        assert!(d < 1e-3);
        lw_matrix_free(m);
        let bad = [1.0, 2.0, 0.0, 1.0];
        assert_eq!(lw_matrix_new(2, bad.as_ptr(), ptr::null(), &mut m), LwStatus::InvalidArgument);
        assert!(last_error().contains("Hermitian"), "{}", last_error());
    }
}

#[test]
fn fixture_learnability() {
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(lw_states_fixture(cstr("trine").as_ptr(), 0, &mut s), LwStatus::Ok);
        assert_eq!(lw_states_len(s), 3);
        let mut v = LwVerdict::Undecided;
        assert_eq!(lw_is_k_learnable(s, 2, 0.0, &mut v), LwStatus::Ok);
        assert_eq!(v, LwVerdict::Learnable);
        assert_eq!(lw_is_k_learnable(s, 1, 0.0, &mut v), LwStatus::Ok);
        assert_eq!(v, LwVerdict::NotLearnable);
        let (mut lo, mut hi) = (0, 0);
        assert_eq!(lw_learning_width(s, 0.0, &mut lo, &mut hi), LwStatus::Ok);
        assert_eq!((lo, hi), (2, 2));
        let mut json = ptr::null_mut();
        assert_eq!(lw_povm_json(s, 1, &mut json), LwStatus::Ok);
        assert!(json.is_null());
        assert_eq!(lw_povm_json(s, 2, &mut json), LwStatus::Ok);
        assert!(CStr::from_ptr(json).to_str().unwrap().contains("elements"));
        lw_string_free(json);
        lw_states_free(s);
    }
}

#[test]
fn certificates_through_the_abi() {
    let mut s = ptr::null_mut();
    let mut g = ptr::null_mut();
    unsafe {
        assert_eq!(lw_states_fixture(cstr("tetrahedral").as_ptr(), 0, &mut s), LwStatus::Ok);
        assert_eq!(lw_states_gram(s, &mut g), LwStatus::Ok);
        let mut json = ptr::null_mut();
        assert_eq!(lw_certificate_json(g, 2, 1e-9, &mut json), LwStatus::Ok);
        assert!(!json.is_null());
        let mut valid = false;
        assert_eq!(lw_certificate_verify(g, json, 1e-7, &mut valid), LwStatus::Ok);
        assert!(valid);
        let text = CStr::from_ptr(json).to_str().unwrap().replace("\"k\":2", "\"k\":1");
        assert_eq!(lw_certificate_verify(g, cstr(&text).as_ptr(), 1e-7, &mut valid), LwStatus::Ok);
        assert!(!valid);
        assert!(last_error().contains("more than k = 1"), "{}", last_error());
        lw_string_free(json);
        lw_matrix_free(g);
        lw_states_free(s);
    }
}

#[test]
fn clique_and_errors() {
    let mut yes = false;
    unsafe {
        let tri = cstr("3 3\n1 2\n2 3\n1 3\n");
        assert_eq!(lw_clique_decide(tri.as_ptr(), 3, LwCliqueMethod::Oracle, &mut yes), LwStatus::Ok);
        assert!(yes);
        assert_eq!(lw_clique_decide(tri.as_ptr(), 3, LwCliqueMethod::Sdp, &mut yes), LwStatus::Ok);
        assert!(yes);
        assert_eq!(lw_clique_decide(cstr("3 9\n1 2\n").as_ptr(), 2, LwCliqueMethod::Oracle, &mut yes), LwStatus::Parse);
        assert!(last_error().contains("line"), "{}", last_error());
        let mut s = ptr::null_mut();
        assert_eq!(lw_states_fixture(cstr("nope").as_ptr(), 0, &mut s), LwStatus::UnknownFixture);
        assert_eq!(lw_states_fixture(ptr::null(), 0, &mut s), LwStatus::NullPointer);
        assert_eq!(lw_factor_width(ptr::null(), 1e-7, 0, &mut 0), LwStatus::NullPointer);
        assert_eq!(lw_matrix_from_json(cstr("{").as_ptr(), &mut ptr::null_mut()), LwStatus::Parse);
        assert_eq!(lw_states_fixture(cstr("basis(6)").as_ptr(), 0, &mut s), LwStatus::Ok);
        let mut g = ptr::null_mut();
        assert_eq!(lw_states_gram(s, &mut g), LwStatus::Ok);
        let mut mu = 0.0;
        assert_eq!(lw_mu_oracle(g, 7, &mut mu), LwStatus::InvalidArgument);
        let mut w = 0;
        assert_eq!(lw_factor_width(g, 1e-7, 1, &mut w), LwStatus::Ok);
        assert_eq!(w, 1);
        lw_matrix_free(g);
        lw_states_free(s);
        assert_eq!(lw_matrix_dim(ptr::null()), 0);
        lw_matrix_free(ptr::null_mut());
        lw_string_free(ptr::null_mut());
        assert!(!CStr::from_ptr(lw_version()).to_str().unwrap().is_empty());
    }
}
