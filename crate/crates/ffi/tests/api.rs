use std::ffi::{CStr, CString};
use std::ptr;

use crosstalk_ffi::*;

fn pair(p: &str, q: &str) -> *mut CtPair {
    let (p, q) = (CString::new(p).unwrap(), CString::new(q).unwrap());
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { ct_pair_new(p.as_ptr(), q.as_ptr(), &mut out) },
        CtStatus::Ok
    );
    out
}

fn last_error() -> String {
    let p = ct_last_error_message();
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
    unsafe { ct_string_free(p) };
    s
}

fn take_string(p: *mut std::ffi::c_char) -> String {
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
    unsafe { ct_string_free(p) };
    s
}

#[test]
fn pair_lifecycle_and_errors() {
    let fp = pair("101", "010");
    assert_eq!(unsafe { ct_pair_k(fp) }, 3);
    unsafe { ct_pair_free(fp) };
    unsafe { ct_pair_free(ptr::null_mut()) };

    let (p, q) = (CString::new("10").unwrap(), CString::new("010").unwrap());
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { ct_pair_new(p.as_ptr(), q.as_ptr(), &mut out) },
        CtStatus::InvalidArgument
    );
    assert!(out.is_null());
    assert!(last_error().contains("length"));
    assert_eq!(
        unsafe { ct_pair_new(ptr::null(), q.as_ptr(), &mut out) },
        CtStatus::NullPointer
    );
    assert_eq!(unsafe { ct_pair_k(ptr::null()) }, 0);
}

#[test]
fn counting_and_spectra() {
    let fp = pair("10", "01");
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { ct_count_pairs(fp, 3, &mut s) }, CtStatus::Ok);
    assert_eq!(take_string(s), "50");
    assert_eq!(unsafe { ct_count_pairs(fp, 200, &mut s) }, CtStatus::Ok);
    assert_eq!(take_string(s).len(), 111);

    let mut lambda = 0.0;
    assert_eq!(
        unsafe { ct_spectral_radius(fp, 1e-12, &mut lambda) },
        CtStatus::Ok
    );
    assert!((lambda - (3.0 + 17f64.sqrt()) / 2.0).abs() < 1e-9);
    let mut a = 0.0;
    assert_eq!(unsafe { ct_alpha(fp, 1e-12, &mut a) }, CtStatus::Ok);
    let mut b = CtRateBounds::default();
    assert_eq!(unsafe { ct_rate_bounds(a, &mut b) }, CtStatus::Ok);
    assert!((b.upper - (1.0 + a) / 2.0).abs() < 1e-15);
    assert_eq!(
        unsafe { ct_rate_bounds(-1.0, &mut b) },
        CtStatus::OutOfDomain
    );
    assert_eq!(
        unsafe { ct_alpha(fp, -1.0, &mut a) },
        CtStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { ct_alpha(fp, 1e-12, ptr::null_mut()) },
        CtStatus::NullPointer
    );

    let mut free = false;
    assert_eq!(
        unsafe { ct_is_transition_free(fp, 0b10, 0b01, 2, &mut free) },
        CtStatus::Ok
    );
    assert!(!free);
    assert_eq!(
        unsafe { ct_is_transition_free(fp, 0b00, 0b11, 2, &mut free) },
        CtStatus::Ok
    );
    assert!(free);
    assert_eq!(
        unsafe { ct_is_transition_free(fp, 0b100, 0b01, 2, &mut free) },
        CtStatus::InvalidArgument
    );
    unsafe { ct_pair_free(fp) };
}

#[test]
fn codec_round_trip() {
    let fp = pair("10", "01");
    let mut c = ptr::null_mut();
    assert_eq!(
        unsafe { ct_codec_synthesize(fp, 3, true, 0, &mut c) },
        CtStatus::Ok
    );
    assert_eq!(unsafe { ct_codec_message_count(c) }, 5);
    assert_eq!(unsafe { ct_codec_word_length(c) }, 3);
    let states = unsafe { ct_codec_state_count(c) };
    assert!(states >= 5);

    let mut ok = false;
    assert_eq!(unsafe { ct_codec_verify(c, &mut ok) }, CtStatus::Ok);
    assert!(ok);

    let mut state = 0;
    assert_eq!(
        unsafe { ct_codec_initial_state(c, &mut state) },
        CtStatus::Ok
    );
    let check = pair("10", "01");
    for i in 0..500u32 {
        let m = i * 7 % 5 + 1;
        let mut next = 0;
        assert_eq!(
            unsafe { ct_codec_encode(c, m, state, &mut next) },
            CtStatus::Ok
        );
        let mut free = false;
        unsafe { ct_is_transition_free(check, state, next, 3, &mut free) };
        assert!(free);
        let mut d = 0;
        assert_eq!(unsafe { ct_codec_decode(c, next, &mut d) }, CtStatus::Ok);
        assert_eq!(d, m);
        state = next;
    }
    let mut next = 0;
    assert_eq!(
        unsafe { ct_codec_encode(c, 6, state, &mut next) },
        CtStatus::InvalidArgument
    );

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { ct_codec_to_json(c, &mut json) }, CtStatus::Ok);
    let text = CString::new(take_string(json)).unwrap();
    let mut c2 = ptr::null_mut();
    assert_eq!(
        unsafe { ct_codec_from_json(text.as_ptr(), &mut c2) },
        CtStatus::Ok
    );
    assert_eq!(unsafe { ct_codec_message_count(c2) }, 5);

    let bad = CString::new("{\"n\": 3}").unwrap();
    let mut c3 = ptr::null_mut();
    assert_eq!(
        unsafe { ct_codec_from_json(bad.as_ptr(), &mut c3) },
        CtStatus::InvalidArgument
    );

    unsafe {
        ct_codec_free(c);
        ct_codec_free(c2);
        ct_codec_free(ptr::null_mut());
        ct_pair_free(fp);
        ct_pair_free(check);
    }
}

#[test]
fn heuristic_and_limits() {
    let fp = pair("10", "01");
    let mut c = ptr::null_mut();
    assert_eq!(
        unsafe { ct_codec_synthesize(fp, 6, false, 1, &mut c) },
        CtStatus::Ok
    );
    let mut ok = false;
    unsafe { ct_codec_verify(c, &mut ok) };
    assert!(ok);
    unsafe { ct_codec_free(c) };

    let mut c = ptr::null_mut();
    assert_eq!(
        unsafe { ct_codec_synthesize(fp, 6, true, 0, &mut c) },
        CtStatus::ResourceLimit
    );
    assert!(last_error().contains("cap"));
    assert_eq!(
        unsafe { ct_codec_synthesize(fp, 30, false, 0, &mut c) },
        CtStatus::ResourceLimit
    );
    unsafe { ct_pair_free(fp) };
}
