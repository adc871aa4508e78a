//! C ABI over `wepkit`.
//!
//! Conventions:
//! - Every fallible function returns a [`WepStatus`]; results are written
//!   through out-pointers only on [`WepStatus::Ok`].
//! - The message for the most recent failure on the calling thread is
//!   available from [`wep_last_error_message`].
//! - Objects are opaque handles released with their `*_free` function.
//! - Strings returned through `char **` out-pointers are owned by the caller
//!   and must be released with [`wep_string_free`].
//! - Panics never cross the boundary; they are reported as
//!   [`WepStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wepkit::eval_harness::{read_scores, score_runs};
use wepkit::prob_logic::{infer_compositional, infer_enumeration, parse_formula};
use wepkit::wep_scale::verbalize;
use wepkit::{
    DatasetBundle, Error, Formula, GenConfig, Generator, Hops, Method, ProbMap, WepScale,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WepStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// A value lies outside its domain (probability, token count, ...).
    Domain = 3,
    /// Formula text is malformed.
    Syntax = 4,
    /// A data file is malformed.
    Parse = 5,
    /// A size limit was exceeded.
    Capacity = 6,
    /// A formula shape is not supported by the requested engine.
    Structure = 7,
    /// A configuration or argument was rejected.
    Validation = 8,
    /// Records do not match the expected schema.
    Schema = 9,
    /// A file could not be read or written.
    Io = 10,
    /// An internal panic was caught.
    Panic = 11,
}

/// Inference engine for [`wep_formula_infer`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WepEngine {
    /// Exact possible-worlds enumeration; any formula up to the atom limit.
    Enumeration = 0,
    /// Bottom-up combination; formulas whose siblings share no atoms.
    Compositional = 1,
}

/// Opaque WEP scale handle.
pub struct WepScaleHandle(WepScale);

/// Opaque parsed-formula handle.
pub struct WepFormulaHandle(Formula);

/// Opaque example-generator handle.
pub struct WepGeneratorHandle(Generator);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
}

fn status_of(e: &Error) -> WepStatus {
    match e {
        Error::Domain(_) => WepStatus::Domain,
        Error::Syntax { .. } => WepStatus::Syntax,
        Error::Parse { .. } => WepStatus::Parse,
        Error::Capacity(_) => WepStatus::Capacity,
        Error::Structure(_) => WepStatus::Structure,
        Error::Validation(_) => WepStatus::Validation,
        Error::Schema(_) => WepStatus::Schema,
        Error::Io { .. } => WepStatus::Io,
    }
}

struct Failure(WepStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

/// Run `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> WepStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error(String::new());
            WepStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_owned());
            set_last_error(format!("internal panic: {message}"));
            WepStatus::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure(WepStatus::NullPointer, format!("{name} is NULL"))
}

/// # Safety
/// `ptr` must be NULL or a NUL-terminated string valid for the call.
unsafe fn text<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| Failure(WepStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

/// # Safety
/// `ptr` must be NULL or point to a live `T`.
unsafe fn handle<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| null(name))
}

/// # Safety
/// `out` must be NULL or valid for a pointer-sized write.
unsafe fn put<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .unwrap_or_default()
        .into_raw()
}

/// Message for the most recent failed call on this thread ("" after a
/// success). The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn wep_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version string (static; do not free).
#[no_mangle]
pub extern "C" fn wep_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Release a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wep_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Create a handle for the built-in scale.
///
/// # Safety
/// `out` must be valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn wep_scale_new_default(out: *mut *mut WepScaleHandle) -> WepStatus {
    guard(|| {
        put(
            out,
            Box::into_raw(Box::new(WepScaleHandle(WepScale::default()))),
            "out",
        )
    })
}

/// Load a tab-separated scale override file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn wep_scale_load(
    path: *const c_char,
    out: *mut *mut WepScaleHandle,
) -> WepStatus {
    guard(|| {
        let scale = WepScale::load(Path::new(text(path, "path")?))?;
        put(out, Box::into_raw(Box::new(WepScaleHandle(scale))), "out")
    })
}

/// Release a scale handle. NULL is ignored.
///
/// # Safety
/// `scale` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wep_scale_free(scale: *mut WepScaleHandle) {
    if !scale.is_null() {
        drop(Box::from_raw(scale));
    }
}

/// Number of entries in the scale (0 for NULL).
///
/// # Safety
/// `scale` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wep_scale_len(scale: *const WepScaleHandle) -> usize {
    scale.as_ref().map_or(0, |s| s.0.entries().len())
}

/// Name of the WEP nearest to `p`; ties are broken by a generator seeded
/// with `seed`.
///
/// # Safety
/// `scale` must be a live handle; `out_name` must be valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn wep_scale_nearest(
    scale: *const WepScaleHandle,
    p: f64,
    seed: u64,
    out_name: *mut *mut c_char,
) -> WepStatus {
    guard(|| {
        let scale = handle(scale, "scale")?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entry = scale.0.nearest_wep(p, &mut rng)?;
        put(out_name, owned_string(entry.name.clone()), "out_name")
    })
}

/// Number of distractor WEPs for `p`, written to `out_count`.
///
/// # Safety
/// `scale` must be a live handle; `out_count` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn wep_scale_distractor_count(
    scale: *const WepScaleHandle,
    p: f64,
    out_count: *mut usize,
) -> WepStatus {
    guard(|| {
        let scale = handle(scale, "scale")?;
        put(out_count, scale.0.distractor_weps(p)?.len(), "out_count")
    })
}

/// Sentence stating `fact` with the WEP named `wep`.
///
/// # Safety
/// `scale` must be a live handle; `wep` and `fact` NUL-terminated strings;
/// `out_sentence` valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn wep_verbalize(
    scale: *const WepScaleHandle,
    wep: *const c_char,
    fact: *const c_char,
    out_sentence: *mut *mut c_char,
) -> WepStatus {
    guard(|| {
        let scale = handle(scale, "scale")?;
        let name = text(wep, "wep")?;
        let entry = scale
            .0
            .get(name)
            .ok_or_else(|| Failure(WepStatus::Domain, format!("unknown WEP {name:?}")))?;
        let sentence = verbalize(entry, text(fact, "fact")?)?;
        put(out_sentence, owned_string(sentence), "out_sentence")
    })
}

/// Recover the WEP name and fact text from a verbalized sentence.
///
/// # Safety
/// `scale` must be a live handle; `sentence` a NUL-terminated string;
/// `out_wep` and `out_fact` valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn wep_extract(
    scale: *const WepScaleHandle,
    sentence: *const c_char,
    out_wep: *mut *mut c_char,
    out_fact: *mut *mut c_char,
) -> WepStatus {
    guard(|| {
        let scale = handle(scale, "scale")?;
        if out_wep.is_null() || out_fact.is_null() {
            return Err(null("out_wep/out_fact"));
        }
        let (entry, fact) = scale.0.extract_wep(text(sentence, "sentence")?)?;
        put(out_wep, owned_string(entry.name.clone()), "out_wep")?;
        put(out_fact, owned_string(fact), "out_fact")
    })
}

/// Parse formula text such as `((f0 & f1) ^ (f2 | f3))`.
///
/// # Safety
/// `text_in` must be a NUL-terminated string; `out` valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn wep_formula_parse(
    text_in: *const c_char,
    out: *mut *mut WepFormulaHandle,
) -> WepStatus {
    guard(|| {
        let f = parse_formula(text(text_in, "text")?)?;
        put(out, Box::into_raw(Box::new(WepFormulaHandle(f))), "out")
    })
}

/// Release a formula handle. NULL is ignored.
///
/// # Safety
/// `formula` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wep_formula_free(formula: *mut WepFormulaHandle) {
    if !formula.is_null() {
        drop(Box::from_raw(formula));
    }
}

/// Canonical text of a formula.
///
/// # Safety
/// `formula` must be a live handle; `out_text` valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn wep_formula_to_string(
    formula: *const WepFormulaHandle,
    out_text: *mut *mut c_char,
) -> WepStatus {
    guard(|| {
        let f = handle(formula, "formula")?;
        put(out_text, owned_string(f.0.to_string()), "out_text")
    })
}

/// Probability that the formula holds, where atom `fi` is true independently
/// with probability `probs[i]`.
///
/// # Safety
/// `formula` must be a live handle; `probs` must point to `n_probs` doubles
/// (may be NULL when `n_probs` is 0); `out_p` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn wep_formula_infer(
    formula: *const WepFormulaHandle,
    probs: *const f64,
    n_probs: usize,
    engine: WepEngine,
    out_p: *mut f64,
) -> WepStatus {
    guard(|| {
        let f = handle(formula, "formula")?;
        let probs: &[f64] = match (probs.is_null(), n_probs) {
            (_, 0) => &[],
            (true, _) => return Err(null("probs")),
            (false, n) => std::slice::from_raw_parts(probs, n),
        };
        let map = ProbMap::from_slice(probs)?;
        let p = match engine {
            WepEngine::Enumeration => infer_enumeration(&f.0, &map)?,
            WepEngine::Compositional => infer_compositional(&f.0, &map)?,
        };
        put(out_p, p, "out_p")
    })
}

/// Create a generator for `hops` (1 or 2) reasoning steps, `n_examples`
/// records and run seed `seed`, with default vocabulary, scale and splits.
///
/// # Safety
/// `out` must be valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn wep_generator_new(
    hops: u32,
    n_examples: usize,
    seed: u64,
    out: *mut *mut WepGeneratorHandle,
) -> WepStatus {
    guard(|| {
        let hops = Hops::from_count(hops)?;
        let g = Generator::with_defaults(GenConfig::new(hops, n_examples, seed))?;
        put(out, Box::into_raw(Box::new(WepGeneratorHandle(g))), "out")
    })
}

/// Release a generator handle. NULL is ignored.
///
/// # Safety
/// `generator` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wep_generator_free(generator: *mut WepGeneratorHandle) {
    if !generator.is_null() {
        drop(Box::from_raw(generator));
    }
}

/// The record at `index` as one line of dataset JSON (no trailing newline).
///
/// # Safety
/// `generator` must be a live handle; `out_json` valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn wep_generator_example_json(
    generator: *const WepGeneratorHandle,
    index: usize,
    out_json: *mut *mut c_char,
) -> WepStatus {
    guard(|| {
        let g = handle(generator, "generator")?;
        let ex = g.0.example(index)?;
        put(out_json, owned_string(ex.to_json_line()), "out_json")
    })
}

/// Generate all records and write one JSONL file per split into `dir`.
///
/// # Safety
/// `generator` must be a live handle; `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn wep_generator_write_dataset(
    generator: *const WepGeneratorHandle,
    dir: *const c_char,
) -> WepStatus {
    guard(|| {
        let g = handle(generator, "generator")?;
        let dir = Path::new(text(dir, "dir")?);
        g.0.generate_dataset()?.write_dir(dir)?;
        Ok(())
    })
}

/// Evaluate score files against a dataset directory and write the report as
/// JSON. `method` is "raw", "per-token", "calibrated", or NULL / "auto" to
/// select on the validation split; `eval_split` NULL means "test".
///
/// # Safety
/// `dataset_dir` must be a NUL-terminated string; `score_paths` must point to
/// `n_paths` NUL-terminated strings; `method` and `eval_split` NULL or
/// NUL-terminated; `out_json` valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn wep_score_files(
    dataset_dir: *const c_char,
    score_paths: *const *const c_char,
    n_paths: usize,
    method: *const c_char,
    eval_split: *const c_char,
    out_json: *mut *mut c_char,
) -> WepStatus {
    guard(|| {
        let bundle = DatasetBundle::read_dir(Path::new(text(dataset_dir, "dataset_dir")?))?;
        if score_paths.is_null() && n_paths > 0 {
            return Err(null("score_paths"));
        }
        let mut runs = Vec::with_capacity(n_paths);
        for i in 0..n_paths {
            let p = text(*score_paths.add(i), "score path")?;
            runs.push((p.to_owned(), read_scores(Path::new(p))?));
        }
        let method = match method.is_null() {
            true => None,
            false => match text(method, "method")? {
                "auto" => None,
                m => Some(m.parse::<Method>()?),
            },
        };
        let split = if eval_split.is_null() {
            "test"
        } else {
            text(eval_split, "eval_split")?
        };
        let report = score_runs(&bundle, &runs, method, split)?;
        let json = serde_json::to_string(&report)
            .map_err(|e| Failure(WepStatus::Schema, e.to_string()))?;
        put(out_json, owned_string(json), "out_json")
    })
}
