//! C ABI over the clustering toolkit.
//!
//! Conventions:
//!
//! * Handles (`BaireKey`, `BaireTree`) are opaque; create them through the
//!   constructors here and release them with the matching `_free` function.
//! * Every fallible call returns a [`BaireStatus`]; out-parameters are only
//!   written on `BAIRE_STATUS_OK` (except the two-call buffer protocol of
//!   `baire_tree_retrieve`, which always reports the required length).
//! * On any non-OK status, `baire_last_error_message` returns a
//!   human-readable description. The pointer stays valid until the next
//!   failing call on the same thread and must not be freed.
//! * Panics never cross the boundary; they surface as `BAIRE_STATUS_PANIC`.
//! * Every function taking pointers is `unsafe`: null pointers are caught
//!   and reported as `BAIRE_STATUS_NULL_ARGUMENT`, but non-null pointers
//!   must be valid for the access each function documents.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe, UnwindSafe};

use baire::error::Error;

/// Status code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaireStatus {
    Ok = 0,
    /// Input outside an operation's domain (bad digit, bad base, k > n, ...).
    Domain = 1,
    /// Text is not a plain non-negative decimal numeral.
    Parse = 2,
    /// Keys with mismatched base, precision, or digit convention.
    Convention = 3,
    /// Level or depth out of range.
    Range = 4,
    /// Unknown item id.
    NotFound = 5,
    /// Incompatible shapes.
    Shape = 6,
    /// Input too large for a demo-scale operation.
    Scale = 7,
    /// Malformed input file.
    Format = 8,
    /// Bad data row.
    Row = 9,
    /// Invalid configuration.
    Config = 10,
    /// I/O failure.
    Io = 11,
    /// A required pointer argument was null.
    NullArgument = 12,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 13,
    /// The caller-provided buffer is too small; the length out-parameter
    /// holds the required capacity.
    BufferTooSmall = 14,
    /// An internal panic was caught at the boundary.
    Panic = 15,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn status_of(error: &Error) -> BaireStatus {
    match error {
        Error::Domain(_) => BaireStatus::Domain,
        Error::Parse(_) => BaireStatus::Parse,
        Error::Convention(_) => BaireStatus::Convention,
        Error::Range(_) => BaireStatus::Range,
        Error::NotFound(_) => BaireStatus::NotFound,
        Error::Shape(_) => BaireStatus::Shape,
        Error::Scale(_) => BaireStatus::Scale,
        Error::Format(_) => BaireStatus::Format,
        Error::Row(_) => BaireStatus::Row,
        Error::Config(_) => BaireStatus::Config,
        Error::Io(_) => BaireStatus::Io,
    }
}

fn report(error: Error) -> BaireStatus {
    let status = status_of(&error);
    set_error(error.to_string());
    status
}

fn null_argument(name: &str) -> BaireStatus {
    set_error(format!("argument {name} must not be null"));
    BaireStatus::NullArgument
}

fn guarded<F: FnOnce() -> BaireStatus + UnwindSafe>(body: F) -> BaireStatus {
    match catch_unwind(body) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic".into());
            BaireStatus::Panic
        }
    }
}

/// Opaque digit-key handle.
pub struct BaireKey(baire::madic::DigitKey);

/// Opaque prefix-tree handle.
pub struct BaireTree(baire::bairetree::BaireTree);

/// Message for the most recent failure on this thread, or null if none.
/// Valid until the next failing call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn baire_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |c| c.as_ptr())
    })
}

/// Encodes decimal text as a digit key. On success writes a new handle to
/// `out_key`; release it with `baire_key_free`.
///
/// # Safety
/// `text` must be null or a valid NUL-terminated string; `out_key` must be
/// null or valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn baire_key_encode(
    text: *const c_char,
    base: u32,
    precision: usize,
    include_integer_digit: bool,
    out_key: *mut *mut BaireKey,
) -> BaireStatus {
    guarded(AssertUnwindSafe(|| {
        if text.is_null() {
            return null_argument("text");
        }
        if out_key.is_null() {
            return null_argument("out_key");
        }
        let text = match unsafe { CStr::from_ptr(text) }.to_str() {
            Ok(t) => t,
            Err(_) => {
                set_error("text is not valid UTF-8".into());
                return BaireStatus::InvalidUtf8;
            }
        };
        match baire::madic::encode(text, base, precision, include_integer_digit) {
            Ok(key) => {
                unsafe { *out_key = Box::into_raw(Box::new(BaireKey(key))) };
                BaireStatus::Ok
            }
            Err(e) => report(e),
        }
    }))
}

/// Releases a key handle. Null is a no-op.
///
/// # Safety
/// `key` must be null or a handle from `baire_key_encode` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn baire_key_free(key: *mut BaireKey) {
    if !key.is_null() {
        drop(unsafe { Box::from_raw(key) });
    }
}

/// Copies the key's digits into `buffer` (at most `capacity` bytes) and
/// writes the digit count to `out_len`. With a null `buffer` only the count
/// is reported.
///
/// # Safety
/// `key` must be a live key handle or null; `buffer` must be null or valid
/// for `capacity` byte writes; `out_len` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn baire_key_digits(
    key: *const BaireKey,
    buffer: *mut u8,
    capacity: usize,
    out_len: *mut usize,
) -> BaireStatus {
    guarded(AssertUnwindSafe(|| {
        let Some(key) = (unsafe { key.as_ref() }) else {
            return null_argument("key");
        };
        if out_len.is_null() {
            return null_argument("out_len");
        }
        let digits = key.0.digits();
        unsafe { *out_len = digits.len() };
        if buffer.is_null() {
            return BaireStatus::Ok;
        }
        if capacity < digits.len() {
            set_error(format!(
                "buffer holds {capacity} bytes, need {}",
                digits.len()
            ));
            return BaireStatus::BufferTooSmall;
        }
        unsafe { std::ptr::copy_nonoverlapping(digits.as_ptr(), buffer, digits.len()) };
        BaireStatus::Ok
    }))
}

/// Longest-common-prefix length of two keys sharing one convention.
///
/// # Safety
/// `a` and `b` must be live key handles or null; `out_length` must be null
/// or writable.
#[no_mangle]
pub unsafe extern "C" fn baire_lcp_length(
    a: *const BaireKey,
    b: *const BaireKey,
    out_length: *mut usize,
) -> BaireStatus {
    guarded(AssertUnwindSafe(|| {
        let (Some(a), Some(b)) = (unsafe { a.as_ref() }, unsafe { b.as_ref() }) else {
            return null_argument("a/b");
        };
        if out_length.is_null() {
            return null_argument("out_length");
        }
        match baire::madic::lcp_length(&a.0, &b.0) {
            Ok(length) => {
                unsafe { *out_length = length };
                BaireStatus::Ok
            }
            Err(e) => report(e),
        }
    }))
}

/// Baire distance of two keys: writes the shared-prefix exponent `p` and the
/// value `base^(-p)`.
///
/// # Safety
/// `a` and `b` must be live key handles or null; the out-pointers must be
/// null or writable.
#[no_mangle]
pub unsafe extern "C" fn baire_distance(
    a: *const BaireKey,
    b: *const BaireKey,
    out_exponent: *mut u32,
    out_value: *mut f64,
) -> BaireStatus {
    guarded(AssertUnwindSafe(|| {
        let (Some(a), Some(b)) = (unsafe { a.as_ref() }, unsafe { b.as_ref() }) else {
            return null_argument("a/b");
        };
        if out_exponent.is_null() || out_value.is_null() {
            return null_argument("out_exponent/out_value");
        }
        match baire::madic::baire_distance(&a.0, &b.0) {
            Ok(d) => {
                unsafe {
                    *out_exponent = d.exponent();
                    *out_value = d.value();
                }
                BaireStatus::Ok
            }
            Err(e) => report(e),
        }
    }))
}

/// Builds a prefix tree from `count` keys with caller-chosen item ids.
/// On success writes a new handle to `out_tree`; release it with
/// `baire_tree_free`.
///
/// # Safety
/// `keys` and `item_ids` must be null or valid for `count` reads, with every
/// key entry a live handle; `out_tree` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn baire_tree_build(
    keys: *const *const BaireKey,
    item_ids: *const u64,
    count: usize,
    max_depth: usize,
    out_tree: *mut *mut BaireTree,
) -> BaireStatus {
    guarded(AssertUnwindSafe(|| {
        if out_tree.is_null() {
            return null_argument("out_tree");
        }
        if count > 0 && (keys.is_null() || item_ids.is_null()) {
            return null_argument("keys/item_ids");
        }
        let key_ptrs = if count == 0 {
            &[]
        } else {
            unsafe { std::slice::from_raw_parts(keys, count) }
        };
        let ids = if count == 0 {
            &[]
        } else {
            unsafe { std::slice::from_raw_parts(item_ids, count) }
        };
        let mut pairs = Vec::with_capacity(count);
        for (&key, &id) in key_ptrs.iter().zip(ids) {
            let Some(key) = (unsafe { key.as_ref() }) else {
                return null_argument("keys[i]");
            };
            let Ok(id) = usize::try_from(id) else {
                set_error(format!("item id {id} does not fit this platform"));
                return BaireStatus::Domain;
            };
            pairs.push((id, &key.0));
        }
        match baire::bairetree::BaireTree::build(pairs, max_depth) {
            Ok(tree) => {
                unsafe { *out_tree = Box::into_raw(Box::new(BaireTree(tree))) };
                BaireStatus::Ok
            }
            Err(e) => report(e),
        }
    }))
}

/// Releases a tree handle. Null is a no-op.
///
/// # Safety
/// `tree` must be null or a handle from `baire_tree_build` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn baire_tree_free(tree: *mut BaireTree) {
    if !tree.is_null() {
        drop(unsafe { Box::from_raw(tree) });
    }
}

/// Number of items inserted into the tree.
///
/// # Safety
/// `tree` must be a live tree handle or null; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn baire_tree_item_count(
    tree: *const BaireTree,
    out: *mut usize,
) -> BaireStatus {
    guarded(AssertUnwindSafe(|| {
        let Some(tree) = (unsafe { tree.as_ref() }) else {
            return null_argument("tree");
        };
        if out.is_null() {
            return null_argument("out");
        }
        unsafe { *out = tree.0.item_count() };
        BaireStatus::Ok
    }))
}

/// Number of materialized nodes below the root.
///
/// # Safety
/// `tree` must be a live tree handle or null; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn baire_tree_node_count(
    tree: *const BaireTree,
    out: *mut usize,
) -> BaireStatus {
    guarded(AssertUnwindSafe(|| {
        let Some(tree) = (unsafe { tree.as_ref() }) else {
            return null_argument("tree");
        };
        if out.is_null() {
            return null_argument("out");
        }
        unsafe { *out = tree.0.node_count() };
        BaireStatus::Ok
    }))
}

/// Number of occupied clusters at one level (1-based).
///
/// # Safety
/// `tree` must be a live tree handle or null; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn baire_tree_cluster_count(
    tree: *const BaireTree,
    level: usize,
    out: *mut usize,
) -> BaireStatus {
    guarded(AssertUnwindSafe(|| {
        let Some(tree) = (unsafe { tree.as_ref() }) else {
            return null_argument("tree");
        };
        if out.is_null() {
            return null_argument("out");
        }
        match tree.0.level_node_count(level) {
            Ok(count) => {
                unsafe { *out = count };
                BaireStatus::Ok
            }
            Err(e) => report(e),
        }
    }))
}

/// Tree-induced distance of two inserted items: the exponent is the depth of
/// the deepest shared node, the value `base^(-depth)`.
///
/// # Safety
/// `tree` must be a live tree handle or null; the out-pointers must be null
/// or writable.
#[no_mangle]
pub unsafe extern "C" fn baire_tree_cophenetic(
    tree: *const BaireTree,
    item_a: u64,
    item_b: u64,
    out_exponent: *mut u32,
    out_value: *mut f64,
) -> BaireStatus {
    guarded(AssertUnwindSafe(|| {
        let Some(tree) = (unsafe { tree.as_ref() }) else {
            return null_argument("tree");
        };
        if out_exponent.is_null() || out_value.is_null() {
            return null_argument("out_exponent/out_value");
        }
        let (Ok(a), Ok(b)) = (usize::try_from(item_a), usize::try_from(item_b)) else {
            set_error("item id does not fit this platform".into());
            return BaireStatus::Domain;
        };
        match tree.0.cophenetic_distance(a, b) {
            Ok(d) => {
                unsafe {
                    *out_exponent = d.exponent();
                    *out_value = d.value();
                }
                BaireStatus::Ok
            }
            Err(e) => report(e),
        }
    }))
}

/// Ids of all items whose key starts with `prefix` (`prefix_len` digits),
/// in ascending order. Two-call protocol: pass a null `out_ids` to get the
/// required capacity in `out_len`; with a buffer too small the status is
/// `BAIRE_STATUS_BUFFER_TOO_SMALL` and `out_len` still holds the requirement.
///
/// # Safety
/// `tree` must be a live tree handle or null; `prefix` must be null or valid
/// for `prefix_len` reads; `out_ids` must be null or valid for `capacity`
/// writes; `out_len` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn baire_tree_retrieve(
    tree: *const BaireTree,
    prefix: *const u8,
    prefix_len: usize,
    out_ids: *mut u64,
    capacity: usize,
    out_len: *mut usize,
) -> BaireStatus {
    guarded(AssertUnwindSafe(|| {
        let Some(tree) = (unsafe { tree.as_ref() }) else {
            return null_argument("tree");
        };
        if out_len.is_null() {
            return null_argument("out_len");
        }
        if prefix.is_null() && prefix_len > 0 {
            return null_argument("prefix");
        }
        let prefix = if prefix_len == 0 {
            &[]
        } else {
            unsafe { std::slice::from_raw_parts(prefix, prefix_len) }
        };
        let members = match tree.0.retrieve_subtree(prefix) {
            Ok(members) => members,
            Err(e) => return report(e),
        };
        unsafe { *out_len = members.len() };
        if out_ids.is_null() {
            return BaireStatus::Ok;
        }
        if capacity < members.len() {
            set_error(format!(
                "buffer holds {capacity} ids, need {}",
                members.len()
            ));
            return BaireStatus::BufferTooSmall;
        }
        for (i, id) in members.iter().enumerate() {
            unsafe { *out_ids.add(i) = *id as u64 };
        }
        BaireStatus::Ok
    }))
}

/// Share (in percent) of key pairs whose spectroscopic and photometric keys
/// agree on at least `digits` leading digits.
///
/// # Safety
/// `spec_keys` and `phot_keys` must be null or valid for `count` reads with
/// every entry a live key handle; `out_percent` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn baire_confidence_at_least(
    spec_keys: *const *const BaireKey,
    phot_keys: *const *const BaireKey,
    count: usize,
    digits: usize,
    out_percent: *mut f64,
) -> BaireStatus {
    guarded(AssertUnwindSafe(|| {
        if out_percent.is_null() {
            return null_argument("out_percent");
        }
        if count > 0 && (spec_keys.is_null() || phot_keys.is_null()) {
            return null_argument("spec_keys/phot_keys");
        }
        let spec = if count == 0 {
            &[]
        } else {
            unsafe { std::slice::from_raw_parts(spec_keys, count) }
        };
        let phot = if count == 0 {
            &[]
        } else {
            unsafe { std::slice::from_raw_parts(phot_keys, count) }
        };
        let mut records = Vec::with_capacity(count);
        for (i, (&s, &p)) in spec.iter().zip(phot).enumerate() {
            let (Some(s), Some(p)) = (unsafe { s.as_ref() }, unsafe { p.as_ref() }) else {
                return null_argument("spec_keys[i]/phot_keys[i]");
            };
            match baire::coincidence::coincide(i, &s.0, &p.0) {
                Ok(record) => records.push(record),
                Err(e) => return report(e),
            }
        }
        let census = baire::coincidence::census(&records);
        match baire::coincidence::confidence_at_least(&census, digits) {
            Ok(percent) => {
                unsafe { *out_percent = percent };
                BaireStatus::Ok
            }
            Err(e) => report(e),
        }
    }))
}
