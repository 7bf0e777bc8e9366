//! C ABI over the `copg` library.
//!
//! Every fallible function returns a [`CopgStatus`]. On failure the
//! message is kept per thread and can be read with [`copg_last_error`].
//! Objects are exposed as opaque handles that the caller releases with
//! the matching `*_free` function. Panics never cross the boundary; they
//! are reported as `COPG_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use copg::graph::{read_copg, write_copg_file, GraphError};
use copg::sampler::{precompute_walks, WalkParams, WalkTable};
use copg::synthetic::{generate, SyntheticSpec};
use copg::{EdgeList, Error, Graph, NodeId};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CopgStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Arguments or inputs violate a precondition.
    InvalidArgument = 2,
    /// Reading or writing a file failed.
    Io = 3,
    /// Training or autodiff produced non-finite values.
    Numerical = 4,
    /// An internal panic was caught.
    Panic = 5,
}

/// Undirected graph handle.
pub struct CopgGraph(Graph);

/// Precomputed random-walk neighborhoods.
pub struct CopgWalks(WalkTable);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> CopgStatus {
    match err {
        Error::Io { .. } | Error::Graph(GraphError::Io(_)) => CopgStatus::Io,
        e if e.exit_code() == copg::error::EXIT_NUMERICAL => CopgStatus::Numerical,
        _ => CopgStatus::InvalidArgument,
    }
}

struct Fail(CopgStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

impl From<GraphError> for Fail {
    fn from(e: GraphError) -> Self {
        Error::from(e).into()
    }
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(CopgStatus::InvalidArgument, msg.into())
}

fn null(name: &str) -> Fail {
    Fail(CopgStatus::NullPointer, format!("{name} is null"))
}

/// Runs `f`, records any failure and maps it to a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CopgStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CopgStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
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
            CopgStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn path_arg(p: *const c_char, name: &str) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(null(name));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{name} is not valid UTF-8")))?;
    Ok(PathBuf::from(s))
}

fn need_out<T>(out: *mut *mut T) -> Result<(), Fail> {
    if out.is_null() {
        Err(null("out"))
    } else {
        Ok(())
    }
}

unsafe fn out_ptr<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    need_out(out)?;
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn graph_ref<'a>(g: *const CopgGraph) -> Result<&'a Graph, Fail> {
    g.as_ref().map(|g| &g.0).ok_or_else(|| null("graph"))
}

static VERSION: &CStr =
    match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!("version contains a nul byte"),
    };

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn copg_version() -> *const c_char {
    VERSION.as_ptr()
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next `copg_*` call on the same thread.
#[no_mangle]
pub extern "C" fn copg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Builds a graph with `num_nodes` nodes from `num_edges` pairs
/// `(src[i], dst[i])`. Duplicate and reversed pairs collapse into one
/// undirected edge; self-loops are ignored.
///
/// # Safety
/// `src` and `dst` must point to `num_edges` readable values and `out`
/// to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn copg_graph_from_edges(
    num_nodes: usize,
    src: *const u32,
    dst: *const u32,
    num_edges: usize,
    out: *mut *mut CopgGraph,
) -> CopgStatus {
    guard(|| {
        need_out(out)?;
        let s = slice(src, num_edges, "src")?;
        let d = slice(dst, num_edges, "dst")?;
        let edges = EdgeList::from_pairs(s.iter().copied().zip(d.iter().copied()));
        let g = Graph::from_edges(num_nodes, &edges)?;
        out_ptr(out, CopgGraph(g))
    })
}

/// Reads a COPG1 graph file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn copg_graph_read(
    path: *const c_char,
    out: *mut *mut CopgGraph,
) -> CopgStatus {
    guard(|| {
        need_out(out)?;
        let p = path_arg(path, "path")?;
        let file = std::fs::File::open(&p).map_err(|e| Fail::from(Error::io(&p, e)))?;
        let g = read_copg(std::io::BufReader::new(file))?;
        out_ptr(out, CopgGraph(g))
    })
}

/// Writes `graph` as a COPG1 file.
///
/// # Safety
/// `graph` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn copg_graph_write(
    graph: *const CopgGraph,
    path: *const c_char,
) -> CopgStatus {
    guard(|| {
        let g = graph_ref(graph)?;
        write_copg_file(g, &path_arg(path, "path")?)?;
        Ok(())
    })
}

/// Planted-partition graph: `n` nodes in `clusters` contiguous blocks,
/// edge probability `p_in` inside a block and `p_out` across.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn copg_graph_planted(
    n: usize,
    clusters: usize,
    p_in: f64,
    p_out: f64,
    seed: u64,
    out: *mut *mut CopgGraph,
) -> CopgStatus {
    guard(|| {
        need_out(out)?;
        let s = generate(&SyntheticSpec::planted(
            n, clusters, p_in, p_out, 1, 0.0, seed,
        ))?;
        out_ptr(out, CopgGraph(s.graph))
    })
}

/// Number of nodes; 0 for a null handle.
///
/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn copg_graph_num_nodes(graph: *const CopgGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.num_nodes())
}

/// Number of undirected edges; 0 for a null handle.
///
/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn copg_graph_num_edges(graph: *const CopgGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.num_edges())
}

/// Copies the sorted neighbors of `node` into `buf` (up to `cap`) and
/// stores the full degree in `degree`.
///
/// # Safety
/// `graph` must be live, `buf` writable for `cap` values (may be null
/// when `cap` is 0) and `degree` writable.
#[no_mangle]
pub unsafe extern "C" fn copg_graph_neighbors(
    graph: *const CopgGraph,
    node: u32,
    buf: *mut u32,
    cap: usize,
    degree: *mut usize,
) -> CopgStatus {
    guard(|| {
        let g = graph_ref(graph)?;
        if node as usize >= g.num_nodes() {
            return Err(invalid(format!(
                "node {node} out of range for {} nodes",
                g.num_nodes()
            )));
        }
        if degree.is_null() {
            return Err(null("degree"));
        }
        let nb = g.neighbors(node as NodeId);
        if cap > 0 {
            if buf.is_null() {
                return Err(null("buf"));
            }
            let k = nb.len().min(cap);
            ptr::copy_nonoverlapping(nb.as_ptr(), buf, k);
        }
        *degree = nb.len();
        Ok(())
    })
}

/// Releases a graph. Null is ignored.
///
/// # Safety
/// `graph` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn copg_graph_free(graph: *mut CopgGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Random-walk importance neighborhoods: `num_walks` walks of
/// `walk_length` steps from every node, keeping the `top_k` most visited.
///
/// # Safety
/// `graph` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn copg_walks_compute(
    graph: *const CopgGraph,
    num_walks: usize,
    walk_length: usize,
    top_k: usize,
    seed: u64,
    out: *mut *mut CopgWalks,
) -> CopgStatus {
    guard(|| {
        need_out(out)?;
        let g = graph_ref(graph)?;
        let t = precompute_walks(
            g,
            WalkParams {
                num_walks,
                walk_length,
                k: top_k,
                seed,
            },
        )?;
        out_ptr(out, CopgWalks(t))
    })
}

/// Copies up to `cap` (neighbor, weight) entries of `node`; weights sum
/// to 1 over the full list. The full length goes to `len`.
///
/// # Safety
/// `walks` must be live; `ids` and `weights` writable for `cap` values
/// (may be null when `cap` is 0); `len` writable.
#[no_mangle]
pub unsafe extern "C" fn copg_walks_neighbors(
    walks: *const CopgWalks,
    node: u32,
    ids: *mut u32,
    weights: *mut f64,
    cap: usize,
    len: *mut usize,
) -> CopgStatus {
    guard(|| {
        let w = walks.as_ref().ok_or_else(|| null("walks"))?;
        if node as usize >= w.0.num_nodes() {
            return Err(invalid(format!(
                "node {node} out of range for {} nodes",
                w.0.num_nodes()
            )));
        }
        if len.is_null() {
            return Err(null("len"));
        }
        let entry = w.0.entry(node as NodeId);
        if cap > 0 {
            if ids.is_null() || weights.is_null() {
                return Err(null("ids or weights"));
            }
            for (i, &(v, x)) in entry.iter().take(cap).enumerate() {
                *ids.add(i) = v;
                *weights.add(i) = x;
            }
        }
        *len = entry.len();
        Ok(())
    })
}

/// Releases a walk table. Null is ignored.
///
/// # Safety
/// `walks` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn copg_walks_free(walks: *mut CopgWalks) {
    if !walks.is_null() {
        drop(Box::from_raw(walks));
    }
}

type Metric = fn(&[f64], &[f64]) -> Result<f64, copg::trainer::TrainError>;

unsafe fn metric(
    f: Metric,
    scores: *const f64,
    labels: *const f64,
    n: usize,
    out: *mut f64,
) -> CopgStatus {
    guard(|| {
        let s = slice(scores, n, "scores")?;
        let l = slice(labels, n, "labels")?;
        if out.is_null() {
            return Err(null("out"));
        }
        if l.iter().any(|&y| y != 0.0 && y != 1.0) {
            return Err(invalid("labels must be 0 or 1"));
        }
        *out = f(s, l).map_err(|e| Fail::from(Error::from(e)))?;
        Ok(())
    })
}

/// ROC AUC with tied scores counted as half.
///
/// # Safety
/// `scores` and `labels` must hold `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn copg_auc(
    scores: *const f64,
    labels: *const f64,
    n: usize,
    out: *mut f64,
) -> CopgStatus {
    metric(copg::trainer::auc, scores, labels, n, out)
}

/// Average precision over the ranking by descending score.
///
/// # Safety
/// `scores` and `labels` must hold `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn copg_average_precision(
    scores: *const f64,
    labels: *const f64,
    n: usize,
    out: *mut f64,
) -> CopgStatus {
    metric(copg::trainer::average_precision, scores, labels, n, out)
}

/// Runs the `copg` command line with `argc` arguments (including the
/// program name) and returns its exit code.
///
/// # Safety
/// `argv` must hold `argc` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn copg_cli_main(argc: c_int, argv: *const *const c_char) -> c_int {
    let mut args = Vec::new();
    let st = guard(|| {
        let ptrs = slice(argv, argc.max(0) as usize, "argv")?;
        for (i, &p) in ptrs.iter().enumerate() {
            if p.is_null() {
                return Err(null(&format!("argv[{i}]")));
            }
            args.push(CStr::from_ptr(p).to_string_lossy().into_owned());
        }
        Ok(())
    });
    if st != CopgStatus::Ok {
        return copg::error::EXIT_USAGE;
    }
    match catch_unwind(|| copg::cli::main_with_args(args)) {
        Ok(code) => code,
        Err(_) => {
            set_error("panic in command line");
            copg::error::EXIT_VALIDATION
        }
    }
}
