//! C interface to `frobtower`.
//!
//! Objects cross the boundary as opaque handles built from JSON. Results
//! come back as JSON strings owned by the caller and released with
//! [`ft_string_free`]. Every call returns an [`FtStatus`]; the message of the
//! last failure on the calling thread is available from [`ft_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use frobtower::cli::{error_json, parse_input, Input};
use frobtower::series::Ring;
use frobtower::special::{self, SpecialSide};
use frobtower::tower::{self, AnyTower, AnyWitness};
use frobtower::unipotent::{self, UnipClass};
use frobtower::Error;

/// Status codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Validation = 4,
    Precision = 5,
    Failed = 6,
    Panic = 7,
}

/// Ring selector.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FtRing {
    Gm = 0,
    Disc0 = 1,
    DiscInf = 2,
}

/// Side selector for the special test.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FtSide {
    Rsi = 0,
    Rs0 = 1,
}

pub struct FtTower(AnyTower);
pub struct FtClass(UnipClass);
pub struct FtWitness(AnyWitness);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> FtStatus {
    match e {
        Error::Parse(_) => FtStatus::Parse,
        Error::Validation(_) => FtStatus::Validation,
        Error::PrecisionInsufficient(_) | Error::NonStabilized { .. } | Error::Overflow | Error::NotLaurent(_) => {
            FtStatus::Precision
        }
        _ => FtStatus::Failed,
    }
}

fn guard(f: impl FnOnce() -> Result<(), FtStatus>) -> FtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FtStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            FtStatus::Panic
        }
    }
}

fn lib<T>(r: frobtower::Result<T>) -> Result<T, FtStatus> {
    r.map_err(|e| {
        set_error(error_json(&e).to_string());
        status_of(&e)
    })
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, FtStatus> {
    if s.is_null() {
        set_error("null string".into());
        return Err(FtStatus::NullPointer);
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error("input is not UTF-8".into());
        FtStatus::InvalidUtf8
    })
}

unsafe fn handle<'a, T>(h: *const T) -> Result<&'a T, FtStatus> {
    h.as_ref().ok_or_else(|| {
        set_error("null handle".into());
        FtStatus::NullPointer
    })
}

unsafe fn put<T>(out: *mut *mut T, v: T) -> Result<(), FtStatus> {
    if out.is_null() {
        set_error("null output pointer".into());
        return Err(FtStatus::NullPointer);
    }
    *out = Box::into_raw(Box::new(v));
    Ok(())
}

unsafe fn put_json(out: *mut *mut c_char, v: &serde_json::Value) -> Result<(), FtStatus> {
    if out.is_null() {
        set_error("null output pointer".into());
        return Err(FtStatus::NullPointer);
    }
    *out = CString::new(v.to_string()).unwrap_or_default().into_raw();
    Ok(())
}

fn to_value<T: serde::Serialize>(x: &T) -> Result<serde_json::Value, FtStatus> {
    lib(serde_json::to_value(x).map_err(|e| Error::Parse(e.to_string())))
}

unsafe fn parse(json: *const c_char) -> Result<Input, FtStatus> {
    lib(parse_input(read_str(json)?))
}

fn wrong_kind(what: &str) -> FtStatus {
    set_error(format!("expected a {what}"));
    FtStatus::Parse
}

/// Message of the last failure on this thread, or null. Owned by the library.
#[no_mangle]
pub extern "C" fn ft_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn ft_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_tower_from_json(json: *const c_char, out: *mut *mut FtTower) -> FtStatus {
    guard(|| match parse(json)? {
        Input::Tower(t) => put(out, FtTower(t)),
        _ => Err(wrong_kind("tower")),
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_class_from_json(json: *const c_char, out: *mut *mut FtClass) -> FtStatus {
    guard(|| match parse(json)? {
        Input::Class(c) => put(out, FtClass(c)),
        _ => Err(wrong_kind("class")),
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_witness_from_json(json: *const c_char, out: *mut *mut FtWitness) -> FtStatus {
    guard(|| match parse(json)? {
        Input::Witness(w) => put(out, FtWitness(w)),
        _ => Err(wrong_kind("witness")),
    })
}

/// # Safety
/// `t` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ft_tower_free(t: *mut FtTower) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// # Safety
/// `c` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ft_class_free(c: *mut FtClass) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// # Safety
/// `w` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ft_witness_free(w: *mut FtWitness) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// # Safety
/// `t` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_tower_to_json(t: *const FtTower, out: *mut *mut c_char) -> FtStatus {
    guard(|| {
        let t = handle(t)?;
        put_json(out, &to_value(&t.0.to_repr())?)
    })
}

/// # Safety
/// `c` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_class_to_json(c: *const FtClass, out: *mut *mut c_char) -> FtStatus {
    guard(|| {
        let c = handle(c)?;
        put_json(out, &to_value(&c.0)?)
    })
}

/// Class of a rank-one tower.
///
/// # Safety
/// `t` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_classify(t: *const FtTower, out: *mut *mut c_char) -> FtStatus {
    guard(|| {
        let v = match &handle(t)?.0 {
            AnyTower::Gm(t) => to_value(&lib(frobtower::rank1::classify_rank1(t))?)?,
            AnyTower::Local(t) => to_value(&lib(frobtower::rank1::classify_rank1(t))?)?,
        };
        put_json(out, &v)
    })
}

/// Triviality decision with witness or certificate.
///
/// # Safety
/// `c` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_decide(
    c: *const FtClass,
    ring: FtRing,
    max_depth: usize,
    precision: i64,
    out: *mut *mut c_char,
) -> FtStatus {
    guard(|| {
        let c = &handle(c)?.0;
        let ring = match ring {
            FtRing::Gm => Ring::Gm,
            FtRing::Disc0 => Ring::Disc0,
            FtRing::DiscInf => Ring::DiscInf,
        };
        let d = lib(unipotent::decide_trivial(c, ring, max_depth, precision))?;
        put_json(out, &lib(d.to_json(c.prefix.len() + 2))?)
    })
}

/// # Safety
/// `t` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_is_special(
    t: *const FtTower,
    side: FtSide,
    max_depth: usize,
    precision: i64,
    out: *mut *mut c_char,
) -> FtStatus {
    guard(|| {
        let AnyTower::Gm(t) = &handle(t)?.0 else {
            return Err(wrong_kind("tower over gm"));
        };
        let side = match side {
            FtSide::Rsi => SpecialSide::Rsi,
            FtSide::Rs0 => SpecialSide::Rs0,
        };
        put_json(out, &to_value(&lib(special::is_special(t, side, max_depth, precision))?)?)
    })
}

/// Lifts a triangular tower over `k((t))`; `out` receives the global tower
/// and `witness` the local gauge to its restriction.
///
/// # Safety
/// `t` must be a live handle; `out` and `witness` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ft_lift(
    t: *const FtTower,
    max_depth: usize,
    precision: i64,
    out: *mut *mut FtTower,
    witness: *mut *mut FtWitness,
) -> FtStatus {
    guard(|| {
        let AnyTower::Local(t) = &handle(t)?.0 else {
            return Err(wrong_kind("tower over a disc"));
        };
        if out.is_null() || witness.is_null() {
            set_error("null output pointer".into());
            return Err(FtStatus::NullPointer);
        }
        let r = lib(special::lift_triangular(t, max_depth, precision))?;
        put(out, FtTower(AnyTower::Gm(r.special.tower)))?;
        put(witness, FtWitness(AnyWitness::Local(r.witness)))
    })
}

/// Restriction of a tower over gm to the disc at `0` or at `∞`.
///
/// # Safety
/// `t` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_restrict(t: *const FtTower, at_infinity: bool, precision: i64, out: *mut *mut FtTower) -> FtStatus {
    guard(|| {
        let AnyTower::Gm(t) = &handle(t)?.0 else {
            return Err(wrong_kind("tower over gm"));
        };
        let side = if at_infinity {
            frobtower::series::Side::AtInf
        } else {
            frobtower::series::Side::At0
        };
        put(out, FtTower(AnyTower::Local(tower::restrict(t, side, precision))))
    })
}

/// Sets `ok` to whether `w` carries `a` to `b` at all explicit levels.
///
/// # Safety
/// Handles must be live; `ok` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_verify(
    a: *const FtTower,
    b: *const FtTower,
    w: *const FtWitness,
    precision: i64,
    ok: *mut bool,
) -> FtStatus {
    guard(|| {
        let r = match (&handle(a)?.0, &handle(b)?.0, &handle(w)?.0) {
            (AnyTower::Gm(a), AnyTower::Gm(b), AnyWitness::Gm(w)) => tower::verify_witness(a, b, w, precision),
            (AnyTower::Local(a), AnyTower::Local(b), AnyWitness::Local(w)) => tower::verify_witness(a, b, w, precision),
            _ => Err(Error::ShapeMismatch("towers and witness must share a ring".into())),
        };
        let r = lib(r)?;
        match ok.as_mut() {
            Some(ok) => {
                *ok = r;
                Ok(())
            }
            None => Err(FtStatus::NullPointer),
        }
    })
}
