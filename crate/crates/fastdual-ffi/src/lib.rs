//! C ABI over `fastdual`.
//!
//! Every call returns an [`FdStatus`]; results go through out-pointers. On a
//! status other than `FD_STATUS_OK`, `fd_last_error` describes the failure on the calling thread.
//! Bit vectors cross the boundary packed LSB-first: bit `i` is `(buf[i / 8] >> (i % 8)) & 1`.

// Pointer arguments are checked for null; validity otherwise is the caller's contract above.
#![allow(clippy::not_unsafe_ptr_arg_deref)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fastdual::code::{dual_product_check, sample_pair, DualPair, EncoderChain, Family};
use fastdual::distance::exact_min_distance;
use fastdual::spectral::{delta_m_solver, entropy_inverse};
use fastdual::transition::{markov_failure_bound, WeightModel};
use fastdual::{BitVector, Error};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    CapExceeded = 4,
    Parse = 5,
    NoConvergence = 6,
    Internal = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FdFamily {
    Ra = 0,
    Rad = 1,
    Rda = 2,
}

/// Which chain of a pair to use.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FdSide {
    Primal = 0,
    Dual = 1,
}

/// Opaque handle to a sampled primal/dual pair.
pub struct FdPair {
    inner: DualPair,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> FdStatus {
    match err {
        Error::DimensionMismatch { .. } => FdStatus::DimensionMismatch,
        Error::InvalidArgument(_) => FdStatus::InvalidArgument,
        Error::CapExceeded { .. } => FdStatus::CapExceeded,
        Error::Parse(_) => FdStatus::Parse,
        Error::Internal(_) => FdStatus::Internal,
        Error::NoConvergence(_) => FdStatus::NoConvergence,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> FdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            FdStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            FdStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            FdStatus::Panic
        }
    }
}

fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    // SAFETY: callers pass either null or a valid, aligned, writable pointer.
    unsafe { p.as_mut() }.ok_or(Fail::Null(what))
}

fn handle<'a>(p: *const FdPair) -> Result<&'a DualPair, Fail> {
    // SAFETY: non-null handles come from `fd_pair_sample` and are live until `fd_pair_free`.
    unsafe { p.as_ref() }.map(|h| &h.inner).ok_or(Fail::Null("pair"))
}

fn chain(p: &DualPair, side: FdSide) -> &EncoderChain {
    match side {
        FdSide::Primal => p.primal(),
        FdSide::Dual => p.dual(),
    }
}

fn packed_len(bits: usize) -> usize {
    bits.div_ceil(8)
}

fn read_bits(buf: *const u8, buf_len: usize, bits: usize) -> Result<BitVector, Fail> {
    if buf_len != packed_len(bits) {
        return Err(Error::DimensionMismatch { expected: packed_len(bits), got: buf_len }.into());
    }
    if buf.is_null() {
        return Err(Fail::Null("input buffer"));
    }
    // SAFETY: non-null and the caller guarantees `buf_len` readable bytes.
    let bytes = unsafe { std::slice::from_raw_parts(buf, buf_len) };
    Ok(BitVector::from_bits((0..bits).map(|i| (bytes[i / 8] >> (i % 8)) & 1 == 1)))
}

fn write_bits(v: &BitVector, buf: *mut u8, buf_len: usize) -> Result<(), Fail> {
    if buf_len != packed_len(v.len()) {
        return Err(Error::DimensionMismatch { expected: packed_len(v.len()), got: buf_len }.into());
    }
    if buf.is_null() {
        return Err(Fail::Null("output buffer"));
    }
    // SAFETY: non-null and the caller guarantees `buf_len` writable bytes.
    let bytes = unsafe { std::slice::from_raw_parts_mut(buf, buf_len) };
    bytes.fill(0);
    for i in v.ones() {
        bytes[i / 8] |= 1 << (i % 8);
    }
    Ok(())
}

/// Message of the thread's last failed call, or an empty string. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn fd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Samples the pair of block length `n` with `m` rounds from `seed`. Free with `fd_pair_free`.
#[no_mangle]
pub extern "C" fn fd_pair_sample(n: usize, m: usize, seed: u64, out_pair: *mut *mut FdPair) -> FdStatus {
    guard(|| {
        let slot = out(out_pair, "out_pair")?;
        *slot = ptr::null_mut();
        let inner = sample_pair(n, m, seed)?;
        *slot = Box::into_raw(Box::new(FdPair { inner }));
        Ok(())
    })
}

/// Releases a handle from `fd_pair_sample`; null is ignored.
#[no_mangle]
pub extern "C" fn fd_pair_free(pair: *mut FdPair) {
    if !pair.is_null() {
        // SAFETY: the pointer came from `Box::into_raw` in `fd_pair_sample` and is freed once.
        drop(unsafe { Box::from_raw(pair) });
    }
}

/// Block length and message length of the pair's chains.
#[no_mangle]
pub extern "C" fn fd_pair_shape(pair: *const FdPair, out_n: *mut usize, out_k: *mut usize) -> FdStatus {
    guard(|| {
        let p = handle(pair)?;
        *out(out_n, "out_n")? = p.n();
        *out(out_k, "out_k")? = p.primal().k();
        Ok(())
    })
}

/// Encodes a packed `k`-bit message into a packed `n`-bit codeword.
#[no_mangle]
pub extern "C" fn fd_encode(
    pair: *const FdPair,
    side: FdSide,
    msg: *const u8,
    msg_len: usize,
    codeword: *mut u8,
    codeword_len: usize,
) -> FdStatus {
    guard(|| {
        let c = chain(handle(pair)?, side);
        let x = read_bits(msg, msg_len, c.k())?;
        write_bits(&c.encode(&x)?, codeword, codeword_len)
    })
}

/// Sets `*out_ok` to whether every dual generator column is orthogonal to every primal one.
#[no_mangle]
pub extern "C" fn fd_dual_check(pair: *const FdPair, out_ok: *mut bool) -> FdStatus {
    guard(|| {
        let p = handle(pair)?;
        let slot = out(out_ok, "out_ok")?;
        *slot = dual_product_check(p).ok;
        Ok(())
    })
}

/// Exact minimum distance of one chain (`k ≤ 28` unless raised via FASTDUAL_MAX_K).
#[no_mangle]
pub extern "C" fn fd_min_distance(pair: *const FdPair, side: FdSide, out_distance: *mut usize) -> FdStatus {
    guard(|| {
        let c = chain(handle(pair)?, side);
        let slot = out(out_distance, "out_distance")?;
        *slot = exact_min_distance(c)?.abs_distance;
        Ok(())
    })
}

/// Critical-point estimate of the distance threshold for `2 ≤ m ≤ 6` rounds.
#[no_mangle]
pub extern "C" fn fd_delta_m(m: usize, r: usize, tol: f64, out_delta: *mut f64) -> FdStatus {
    guard(|| {
        let slot = out(out_delta, "out_delta")?;
        *slot = delta_m_solver(m, r, tol)?.delta;
        Ok(())
    })
}

/// Preimage of `y ∈ [0, 1]` under binary entropy on `[0, 1/2]`.
#[no_mangle]
pub extern "C" fn fd_entropy_inverse(y: f64, out_x: *mut f64) -> FdStatus {
    guard(|| {
        let slot = out(out_x, "out_x")?;
        *slot = entropy_inverse(y)?;
        Ok(())
    })
}

/// Expected number of codewords of weight `1..=d` over the code ensemble.
#[no_mangle]
pub extern "C" fn fd_markov_bound(family: FdFamily, n: usize, m: usize, d: usize, out_bound: *mut f64) -> FdStatus {
    guard(|| {
        let slot = out(out_bound, "out_bound")?;
        let family = match family {
            FdFamily::Ra => Family::RA,
            FdFamily::Rad => Family::RAD,
            FdFamily::Rda => Family::RDA,
        };
        *slot = markov_failure_bound(&WeightModel::new(family, n, m), d)?;
        Ok(())
    })
}
