//! C ABI over `varitree`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`,
//! `*_generate`, `*_from_json` or a computation, and released with the
//! matching `*_free`. Every fallible function returns a [`VtStatus`] and
//! writes its result through an out-pointer only on success. The message of
//! the most recent failure on the calling thread is available from
//! [`vt_last_error_message`].
//!
//! Handles are not synchronized: a handle may be read from several threads
//! at once but must not be freed while in use.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use varitree::inference::{is_isomorphic, reconstruct};
use varitree::similarity::{delta_matrix, node_ids};
use varitree::tree::{embed, random_tree};
use varitree::{io, varifold, EmbedConfig, EmbeddedTree, Error, Exec, InferredTree, IsoMode, KernelParams};
use varitree::{PolygonalCurve, SimilarityMatrix};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidData = 3,
    Numerical = 4,
    Io = 5,
    OutOfRange = 6,
    Panic = 7,
}

/// A polyline in R^n.
pub struct VtCurve(PolygonalCurve);

/// A rooted tree embedded in R^n with polyline edges.
pub struct VtTree(EmbeddedTree);

/// A square similarity matrix over named nodes.
pub struct VtMatrix(SimilarityMatrix);

/// A tree reconstructed from a similarity matrix.
pub struct VtInferred(InferredTree);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(VtStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidArgument(_) | Error::DimensionMismatch { .. } | Error::NodeCountMismatch(..) => {
                VtStatus::InvalidArgument
            }
            Error::StationOutOfRange { .. } | Error::RootHasNoPath | Error::NotLemmaConfiguration(..) => {
                VtStatus::OutOfRange
            }
            Error::NegativeDistance { .. }
            | Error::EmbeddingFailed { .. }
            | Error::Integration { .. }
            | Error::TooManyFailures { .. } => VtStatus::Numerical,
            Error::Io(_) => VtStatus::Io,
            _ => VtStatus::InvalidData,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: VtStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> VtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VtStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal panic: {msg}"));
            VtStatus::Panic
        }
    }
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(VtStatus::NullPointer, format!("{name} is null")))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| fail(VtStatus::NullPointer, format!("{name} is null")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(VtStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(VtStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(VtStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

fn kernel(sigma_x: f64, sigma_t: f64) -> Result<KernelParams, Failure> {
    Ok(KernelParams::new(sigma_x, sigma_t)?)
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failed call on this thread, or null if none failed.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn vt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn vt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` is null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a curve from `n_points` row-major points of dimension `dim`.
///
/// # Safety
/// `points` holds `dim * n_points` doubles; `out_curve` is writable.
#[no_mangle]
pub unsafe extern "C" fn vt_curve_new(
    dim: usize,
    points: *const f64,
    n_points: usize,
    out_curve: *mut *mut VtCurve,
) -> VtStatus {
    guard(|| {
        let dst = out(out_curve, "out_curve")?;
        let len = dim
            .checked_mul(n_points)
            .ok_or_else(|| fail(VtStatus::InvalidArgument, "dim * n_points overflows"))?;
        let pts = slice(points, len, "points")?;
        *dst = boxed(VtCurve(PolygonalCurve::new(dim, pts.to_vec())?));
        Ok(())
    })
}

/// # Safety
/// `curve` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vt_curve_free(curve: *mut VtCurve) {
    free(curve)
}

/// # Safety
/// `curve` is a live handle; `out_len` is writable.
#[no_mangle]
pub unsafe extern "C" fn vt_curve_arc_length(curve: *const VtCurve, out_len: *mut f64) -> VtStatus {
    guard(|| {
        let c = handle(curve, "curve")?;
        *out(out_len, "out_len")? = c.0.arc_length();
        Ok(())
    })
}

/// Kernel inner product of the varifolds of two curves.
///
/// # Safety
/// `a` and `b` are live handles; `out_value` is writable.
#[no_mangle]
pub unsafe extern "C" fn vt_varifold_inner(
    a: *const VtCurve,
    b: *const VtCurve,
    sigma_x: f64,
    sigma_t: f64,
    out_value: *mut f64,
) -> VtStatus {
    guard(|| {
        let (a, b) = (handle(a, "a")?, handle(b, "b")?);
        let k = kernel(sigma_x, sigma_t)?;
        *out(out_value, "out_value")? = varifold::inner(&a.0.to_varifold(), &b.0.to_varifold(), &k)?;
        Ok(())
    })
}

/// Squared varifold distance between two curves.
///
/// # Safety
/// `a` and `b` are live handles; `out_value` is writable.
#[no_mangle]
pub unsafe extern "C" fn vt_varifold_distance_sq(
    a: *const VtCurve,
    b: *const VtCurve,
    sigma_x: f64,
    sigma_t: f64,
    out_value: *mut f64,
) -> VtStatus {
    guard(|| {
        let (a, b) = (handle(a, "a")?, handle(b, "b")?);
        let k = kernel(sigma_x, sigma_t)?;
        *out(out_value, "out_value")? = varifold::distance_sq(&a.0.to_varifold(), &b.0.to_varifold(), &k)?;
        Ok(())
    })
}

/// Random rooted tree with straight polyline edges, using the default
/// embedding parameters. Deterministic given `seed`.
///
/// # Safety
/// `out_tree` is writable.
#[no_mangle]
pub unsafe extern "C" fn vt_tree_generate(
    nodes: usize,
    dim: usize,
    max_children: usize,
    seed: u64,
    out_tree: *mut *mut VtTree,
) -> VtStatus {
    guard(|| {
        let dst = out(out_tree, "out_tree")?;
        let t = random_tree(nodes, max_children, seed)?;
        *dst = boxed(VtTree(embed(&t, dim, &EmbedConfig::default(), seed)?));
        Ok(())
    })
}

/// Parses a tree from its JSON form.
///
/// # Safety
/// `json` is a NUL-terminated string; `out_tree` is writable.
#[no_mangle]
pub unsafe extern "C" fn vt_tree_from_json(json: *const c_char, out_tree: *mut *mut VtTree) -> VtStatus {
    guard(|| {
        let dst = out(out_tree, "out_tree")?;
        *dst = boxed(VtTree(io::tree_from_json(str_arg(json, "json")?)?));
        Ok(())
    })
}

/// Serializes a tree to JSON. Release the string with [`vt_string_free`].
///
/// # Safety
/// `tree` is a live handle; `out_json` is writable.
#[no_mangle]
pub unsafe extern "C" fn vt_tree_to_json(tree: *const VtTree, out_json: *mut *mut c_char) -> VtStatus {
    guard(|| {
        let t = handle(tree, "tree")?;
        let dst = out(out_json, "out_json")?;
        let s = io::tree_to_json(&t.0)?;
        *dst = CString::new(s).map_err(|_| fail(VtStatus::InvalidData, "NUL in JSON"))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `tree` is a live handle; `out_count` is writable.
#[no_mangle]
pub unsafe extern "C" fn vt_tree_node_count(tree: *const VtTree, out_count: *mut usize) -> VtStatus {
    guard(|| {
        *out(out_count, "out_count")? = handle(tree, "tree")?.0.node_count();
        Ok(())
    })
}

/// Writes the parent of each node into `parents` (length `len`, at least
/// the node count); the root gets -1.
///
/// # Safety
/// `tree` is a live handle; `parents` holds `len` writable slots.
#[no_mangle]
pub unsafe extern "C" fn vt_tree_parents(tree: *const VtTree, parents: *mut i64, len: usize) -> VtStatus {
    guard(|| {
        let t = handle(tree, "tree")?;
        write_parents(t.0.tree().parents(), parents, len)
    })
}

/// # Safety
/// `tree` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vt_tree_free(tree: *mut VtTree) {
    free(tree)
}

unsafe fn write_parents(src: &[Option<usize>], dst: *mut i64, len: usize) -> Result<(), Failure> {
    if len < src.len() {
        return Err(fail(VtStatus::OutOfRange, format!("buffer holds {len}, need {}", src.len())));
    }
    if dst.is_null() {
        return Err(fail(VtStatus::NullPointer, "parents is null"));
    }
    let dst = std::slice::from_raw_parts_mut(dst, src.len());
    for (d, p) in dst.iter_mut().zip(src) {
        *d = p.map_or(-1, |p| p as i64);
    }
    Ok(())
}

/// Node similarity matrix of an embedded tree: squared varifold distances
/// between root-to-node path curves. `threads == 1` runs the sequential
/// reference path; any other value uses the global thread pool. Both give
/// identical results.
///
/// # Safety
/// `tree` is a live handle; `out_matrix` is writable.
#[no_mangle]
pub unsafe extern "C" fn vt_delta_matrix(
    tree: *const VtTree,
    sigma_x: f64,
    sigma_t: f64,
    threads: usize,
    out_matrix: *mut *mut VtMatrix,
) -> VtStatus {
    guard(|| {
        let t = handle(tree, "tree")?;
        let dst = out(out_matrix, "out_matrix")?;
        let k = kernel(sigma_x, sigma_t)?;
        *dst = boxed(VtMatrix(delta_matrix(&t.0, &k, Exec::from_threads(threads))?));
        Ok(())
    })
}

/// Wraps `n * n` row-major values as a similarity matrix over nodes named
/// `0 .. n-1`. The values must be finite, symmetric and nonnegative with a
/// zero diagonal.
///
/// # Safety
/// `values` holds `n * n` doubles; `out_matrix` is writable.
#[no_mangle]
pub unsafe extern "C" fn vt_matrix_from_values(
    n: usize,
    values: *const f64,
    out_matrix: *mut *mut VtMatrix,
) -> VtStatus {
    guard(|| {
        let dst = out(out_matrix, "out_matrix")?;
        let len = n
            .checked_mul(n)
            .ok_or_else(|| fail(VtStatus::InvalidArgument, "n * n overflows"))?;
        let v = slice(values, len, "values")?;
        *dst = boxed(VtMatrix(SimilarityMatrix::new(node_ids(n), v.to_vec(), None)?));
        Ok(())
    })
}

/// # Safety
/// `matrix` is a live handle; `out_size` is writable.
#[no_mangle]
pub unsafe extern "C" fn vt_matrix_size(matrix: *const VtMatrix, out_size: *mut usize) -> VtStatus {
    guard(|| {
        *out(out_size, "out_size")? = handle(matrix, "matrix")?.0.len();
        Ok(())
    })
}

/// # Safety
/// `matrix` is a live handle; `out_value` is writable.
#[no_mangle]
pub unsafe extern "C" fn vt_matrix_get(
    matrix: *const VtMatrix,
    i: usize,
    j: usize,
    out_value: *mut f64,
) -> VtStatus {
    guard(|| {
        let m = &handle(matrix, "matrix")?.0;
        if i >= m.len() || j >= m.len() {
            return Err(fail(VtStatus::OutOfRange, format!("({i}, {j}) outside {0}x{0}", m.len())));
        }
        *out(out_value, "out_value")? = m.get(i, j);
        Ok(())
    })
}

/// Copies the matrix row-major into `buf`, which holds `len >= n * n`
/// doubles.
///
/// # Safety
/// `matrix` is a live handle; `buf` holds `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn vt_matrix_copy(matrix: *const VtMatrix, buf: *mut f64, len: usize) -> VtStatus {
    guard(|| {
        let v = handle(matrix, "matrix")?.0.values();
        if len < v.len() {
            return Err(fail(VtStatus::OutOfRange, format!("buffer holds {len}, need {}", v.len())));
        }
        if buf.is_null() {
            return Err(fail(VtStatus::NullPointer, "buf is null"));
        }
        std::slice::from_raw_parts_mut(buf, v.len()).copy_from_slice(v);
        Ok(())
    })
}

/// # Safety
/// `matrix` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vt_matrix_free(matrix: *mut VtMatrix) {
    free(matrix)
}

/// Minimum spanning tree of the matrix, rooted at node index `root`.
///
/// # Safety
/// `matrix` is a live handle; `out_tree` is writable.
#[no_mangle]
pub unsafe extern "C" fn vt_reconstruct(
    matrix: *const VtMatrix,
    root: usize,
    out_tree: *mut *mut VtInferred,
) -> VtStatus {
    guard(|| {
        let m = &handle(matrix, "matrix")?.0;
        let dst = out(out_tree, "out_tree")?;
        let id = m
            .ids()
            .get(root)
            .ok_or_else(|| fail(VtStatus::OutOfRange, format!("root {root} outside {} nodes", m.len())))?;
        *dst = boxed(VtInferred(reconstruct(m, id)?));
        Ok(())
    })
}

/// # Safety
/// `tree` is a live handle; `out_count` is writable.
#[no_mangle]
pub unsafe extern "C" fn vt_inferred_node_count(tree: *const VtInferred, out_count: *mut usize) -> VtStatus {
    guard(|| {
        *out(out_count, "out_count")? = handle(tree, "tree")?.0.node_count();
        Ok(())
    })
}

/// Writes the parent of each node into `parents`; the root gets -1.
///
/// # Safety
/// `tree` is a live handle; `parents` holds `len` writable slots.
#[no_mangle]
pub unsafe extern "C" fn vt_inferred_parent(tree: *const VtInferred, parents: *mut i64, len: usize) -> VtStatus {
    guard(|| write_parents(handle(tree, "tree")?.0.parent(), parents, len))
}

/// Compares an inferred tree with the topology of an embedded tree whose
/// nodes are indexed the same way. `relaxed != 0` ignores node labels.
///
/// # Safety
/// Both handles are live; `out_equal` is writable.
#[no_mangle]
pub unsafe extern "C" fn vt_inferred_matches(
    inferred: *const VtInferred,
    truth: *const VtTree,
    relaxed: i32,
    out_equal: *mut bool,
) -> VtStatus {
    guard(|| {
        let a = &handle(inferred, "inferred")?.0;
        let b = &handle(truth, "truth")?.0;
        let mode = if relaxed != 0 { IsoMode::Relaxed } else { IsoMode::Strict };
        *out(out_equal, "out_equal")? = is_isomorphic(a, b.tree(), &node_ids(b.node_count()), mode)?;
        Ok(())
    })
}

/// # Safety
/// `tree` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vt_inferred_free(tree: *mut VtInferred) {
    free(tree)
}
