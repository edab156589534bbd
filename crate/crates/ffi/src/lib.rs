//! C ABI over `crosstalk-core`.
//!
//! Every fallible call returns a [`CtStatus`] and writes its result through an
//! out-pointer. On failure the message is kept per thread and can be fetched
//! with [`ct_last_error_message`]. Strings handed out by this library must be
//! released with [`ct_string_free`], handles with their matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use crosstalk_core::analysis::rate_bounds;
use crosstalk_core::codec::{self, Codec};
use crosstalk_core::pairgraph;
use crosstalk_core::subdp::{subdp_exact, subdp_heuristic};
use crosstalk_core::tfgraph::build_graph;
use crosstalk_core::word::is_transition_free;
use crosstalk_core::{BitWord, Error, ForbiddenPair};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CtStatus {
    Ok = 0,
    InvalidArgument = 1,
    ResourceLimit = 2,
    NumericalFailure = 3,
    OutOfDomain = 4,
    NullPointer = 5,
    Panic = 6,
}

/// Opaque forbidden transition pair.
pub struct CtPair(ForbiddenPair);

/// Opaque encoder/decoder tables.
pub struct CtCodec(Codec);

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CtRateBounds {
    pub alpha: f64,
    pub lower: f64,
    pub upper: f64,
    pub comparison_stateless: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(CtStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::ResourceLimit { .. } => CtStatus::ResourceLimit,
            Error::NumericalFailure { .. } => CtStatus::NumericalFailure,
            Error::OutOfDomain(_) => CtStatus::OutOfDomain,
            _ => CtStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(CtStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(CtStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CtStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            CtStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not UTF-8")))
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| invalid("string contains a nul byte"))
}

fn word(bits: u64, len: u32) -> Result<BitWord, Failure> {
    Ok(BitWord::new(bits, len as usize)?)
}

/// Message of the last failed call on this thread, or null. Free with
/// [`ct_string_free`].
#[no_mangle]
pub extern "C" fn ct_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| match &*e.borrow() {
        Some(msg) => msg.clone().into_raw(),
        None => ptr::null_mut(),
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ct_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses two equal-length '0'/'1' patterns.
///
/// # Safety
/// `p` and `q` must be nul-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_pair_new(
    p: *const c_char,
    q: *const c_char,
    out: *mut *mut CtPair,
) -> CtStatus {
    guard(|| {
        let fp = ForbiddenPair::parse(read_str(p, "p")?, read_str(q, "q")?)?;
        put(out, Box::into_raw(Box::new(CtPair(fp))))
    })
}

/// # Safety
/// `pair` must be null or a handle from [`ct_pair_new`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ct_pair_free(pair: *mut CtPair) {
    if !pair.is_null() {
        drop(Box::from_raw(pair));
    }
}

/// Pattern length `k`, or 0 for a null handle.
///
/// # Safety
/// `pair` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ct_pair_k(pair: *const CtPair) -> u32 {
    pair.as_ref().map_or(0, |p| p.0.k() as u32)
}

/// Whether the transition `a -> b` between `n`-bit words (given by their
/// low `n` bits, first bus line most significant) avoids the pair.
///
/// # Safety
/// `pair` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_is_transition_free(
    pair: *const CtPair,
    a: u64,
    b: u64,
    n: u32,
    out: *mut bool,
) -> CtStatus {
    guard(|| {
        let fp = &deref(pair, "pair")?.0;
        let free = is_transition_free(&word(a, n)?, &word(b, n)?, fp)?;
        put(out, free)
    })
}

/// Exact `N(p,q,n)` as a decimal string. Free with [`ct_string_free`].
///
/// # Safety
/// `pair` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_count_pairs(
    pair: *const CtPair,
    n: u32,
    out: *mut *mut c_char,
) -> CtStatus {
    guard(|| {
        let fp = &deref(pair, "pair")?.0;
        let count = pairgraph::count_pairs(fp, n as usize)?;
        put(out, into_c_string(count.to_string())?)
    })
}

/// Perron root of the pair transfer matrix.
///
/// # Safety
/// `pair` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_spectral_radius(
    pair: *const CtPair,
    tol: f64,
    out: *mut f64,
) -> CtStatus {
    guard(|| {
        let m = pairgraph::build_pair_graph(&deref(pair, "pair")?.0)?;
        put(out, pairgraph::spectral_radius(&m, tol)?)
    })
}

/// Edge-density growth rate `log2(lambda / 2)`.
///
/// # Safety
/// `pair` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_alpha(pair: *const CtPair, tol: f64, out: *mut f64) -> CtStatus {
    guard(|| put(out, pairgraph::alpha(&deref(pair, "pair")?.0, tol)?))
}

/// Rate bounds `alpha <= R <= (1 + alpha) / 2`; needs `alpha > 0`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_rate_bounds(alpha: f64, out: *mut CtRateBounds) -> CtStatus {
    guard(|| {
        let b = rate_bounds(alpha)?;
        put(
            out,
            CtRateBounds {
                alpha: b.alpha,
                lower: b.lower,
                upper: b.upper,
                comparison_stateless: b.comparison_stateless,
            },
        )
    })
}

/// Builds `G(p,q,n)`, partitions it (exactly, or with the seeded heuristic)
/// and synthesizes the codec.
///
/// # Safety
/// `pair` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_codec_synthesize(
    pair: *const CtPair,
    n: u32,
    exact: bool,
    seed: u64,
    out: *mut *mut CtCodec,
) -> CtStatus {
    guard(|| {
        let fp = &deref(pair, "pair")?.0;
        let tfg = build_graph(fp, n as usize)?;
        let r = if exact {
            subdp_exact(tfg.graph())?
        } else {
            subdp_heuristic(tfg.graph(), None, seed)?
        };
        let c = codec::synthesize_on(&tfg, &r.partition)?;
        put(out, Box::into_raw(Box::new(CtCodec(c))))
    })
}

/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_codec_from_json(
    json: *const c_char,
    out: *mut *mut CtCodec,
) -> CtStatus {
    guard(|| {
        let c = Codec::from_json(read_str(json, "json")?)?;
        put(out, Box::into_raw(Box::new(CtCodec(c))))
    })
}

/// Codec JSON. Free with [`ct_string_free`].
///
/// # Safety
/// `codec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_codec_to_json(
    codec: *const CtCodec,
    out: *mut *mut c_char,
) -> CtStatus {
    guard(|| {
        let text = deref(codec, "codec")?.0.to_json()?;
        put(out, into_c_string(text)?)
    })
}

/// # Safety
/// `codec` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ct_codec_free(codec: *mut CtCodec) {
    if !codec.is_null() {
        drop(Box::from_raw(codec));
    }
}

/// Next bus word for `message` (1-based) from `state`.
///
/// # Safety
/// `codec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_codec_encode(
    codec: *const CtCodec,
    message: u32,
    state: u64,
    out: *mut u64,
) -> CtStatus {
    guard(|| {
        let c = &deref(codec, "codec")?.0;
        let next = c.encode(message, &word(state, c.n() as u32)?)?;
        put(out, next.bits())
    })
}

/// Message carried by `word`, or 0 when `word` is not a codeword.
///
/// # Safety
/// `codec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_codec_decode(
    codec: *const CtCodec,
    word_bits: u64,
    out: *mut u32,
) -> CtStatus {
    guard(|| {
        let c = &deref(codec, "codec")?.0;
        put(out, c.decode(&word(word_bits, c.n() as u32)?).unwrap_or(0))
    })
}

/// Exhaustive table check: every encoded transition is allowed and decodes
/// back to its message.
///
/// # Safety
/// `codec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_codec_verify(codec: *const CtCodec, out: *mut bool) -> CtStatus {
    guard(|| {
        let report = codec::verify_consistency(&deref(codec, "codec")?.0);
        if let Some(cx) = &report.counterexample {
            set_error(format!(
                "message {} from state {} gives {}: {:?}",
                cx.message, cx.state, cx.word, cx.violation
            ));
        }
        put(out, report.consistent)
    })
}

/// Smallest state, a valid start for the bus.
///
/// # Safety
/// `codec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_codec_initial_state(codec: *const CtCodec, out: *mut u64) -> CtStatus {
    guard(|| put(out, deref(codec, "codec")?.0.default_initial_state().bits()))
}

/// Number of messages `M`, or 0 for a null handle.
///
/// # Safety
/// `codec` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ct_codec_message_count(codec: *const CtCodec) -> u32 {
    codec.as_ref().map_or(0, |c| c.0.message_count() as u32)
}

/// Bus width `n`, or 0 for a null handle.
///
/// # Safety
/// `codec` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ct_codec_word_length(codec: *const CtCodec) -> u32 {
    codec.as_ref().map_or(0, |c| c.0.n() as u32)
}

/// Number of encoder states, or 0 for a null handle.
///
/// # Safety
/// `codec` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ct_codec_state_count(codec: *const CtCodec) -> u32 {
    codec.as_ref().map_or(0, |c| c.0.states().len() as u32)
}
