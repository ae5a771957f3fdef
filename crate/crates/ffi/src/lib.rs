//! C ABI over the traffic-dbn toolkit.
//!
//! Every entry point returns a [`TdStatus`]; on failure the message is kept in
//! a thread-local slot readable with [`td_last_error`]. Objects cross the
//! boundary as opaque handles that the caller releases with the matching
//! `*_free` function. Panics are caught and reported as `TD_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use traffic_dbn::baselines::{GnbModel, LdaModel};
use traffic_dbn::data::{parse_aligned_csv, Dataset, TrafficState};
use traffic_dbn::dbn::{self, Dbn, DbnConfig};
use traffic_dbn::eval::to_matrix;
use traffic_dbn::features::{featurize, FeatureVector, Stage1Config, Stage2Config, ThresholdTable};
use traffic_dbn::model_file;
use traffic_dbn::rng::SeededRng;
use traffic_dbn::synth;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Training = 5,
    DimensionMismatch = 6,
    Panic = 7,
}

/// Class index returned by predictions: 0 free, 1 steady, 2 congested.
pub type TdState = i32;

/// Loaded or generated aligned stream.
pub struct TdDataset {
    inner: Dataset,
}

/// Feature vectors produced by the two-stage window pipeline.
pub struct TdFeatures {
    inner: Vec<FeatureVector>,
}

/// Trained classifier of any supported kind.
pub struct TdModel {
    inner: Model,
}

enum Model {
    Dbn(Dbn),
    Gnb(GnbModel),
    Lda(LdaModel),
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Fail(TdStatus, String);

fn fail(status: TdStatus, msg: impl ToString) -> Fail {
    Fail(status, msg.to_string())
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            TdStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            TdStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(fail(TdStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(TdStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| fail(TdStatus::NullPointer, format!("{name} is null")))
}

fn out_arg<T>(out: *mut *mut T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(fail(TdStatus::NullPointer, "output pointer is null"));
    }
    Ok(())
}

fn state_code(s: TrafficState) -> TdState {
    s.index() as TdState
}

/// Copies the last error message of this thread into `buf` (NUL terminated,
/// truncated to `len - 1` bytes). Returns the full message length in bytes,
/// or 0 when the last call succeeded.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn td_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| match slot.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn td_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Generates a synthetic stream from a named preset.
///
/// # Safety
/// `preset` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn td_dataset_generate(
    preset: *const c_char,
    seed: u64,
    duration: f64,
    out: *mut *mut TdDataset,
) -> TdStatus {
    guard(|| {
        out_arg(out)?;
        let name = str_arg(preset, "preset")?;
        let presets = synth::default_presets();
        let mut cfg = presets.get(name).cloned().ok_or_else(|| {
            let known: Vec<&str> = presets.keys().map(String::as_str).collect();
            fail(TdStatus::InvalidArgument, format!("unknown preset {name:?}; available: {}", known.join(", ")))
        })?;
        cfg.seed = seed;
        cfg.duration = duration;
        let ds = synth::generate(&cfg).map_err(|e| fail(TdStatus::InvalidArgument, e))?;
        *out = Box::into_raw(Box::new(TdDataset { inner: ds }));
        Ok(())
    })
}

/// Reads an aligned stream CSV.
///
/// # Safety
/// `path` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn td_dataset_load_csv(path: *const c_char, out: *mut *mut TdDataset) -> TdStatus {
    guard(|| {
        out_arg(out)?;
        let path = str_arg(path, "path")?;
        let text = std::fs::read_to_string(path).map_err(|e| fail(TdStatus::Io, format!("{path}: {e}")))?;
        let ds = parse_aligned_csv(&text).map_err(|e| fail(TdStatus::Parse, e))?;
        *out = Box::into_raw(Box::new(TdDataset { inner: ds }));
        Ok(())
    })
}

/// Number of aligned samples, 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn td_dataset_len(ds: *const TdDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.len())
}

/// # Safety
/// `ds` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn td_dataset_free(ds: *mut TdDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Runs the two-stage window pipeline with the built-in threshold table.
///
/// # Safety
/// `ds` must be a live dataset handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn td_features_compute(
    ds: *const TdDataset,
    n1: usize,
    m1: usize,
    n2: usize,
    m2: usize,
    out: *mut *mut TdFeatures,
) -> TdStatus {
    guard(|| {
        out_arg(out)?;
        let ds = ref_arg(ds, "dataset")?;
        let s1 = Stage1Config::new(n1, m1);
        let s2 = Stage2Config::new(n2, m2, ThresholdTable::default());
        let vectors = featurize(&ds.inner, &s1, &s2).map_err(|e| fail(TdStatus::InvalidArgument, e))?;
        *out = Box::into_raw(Box::new(TdFeatures { inner: vectors }));
        Ok(())
    })
}

/// Number of feature vectors, 0 for a null handle.
///
/// # Safety
/// `f` must be null or a live features handle.
#[no_mangle]
pub unsafe extern "C" fn td_features_count(f: *const TdFeatures) -> usize {
    f.as_ref().map_or(0, |f| f.inner.len())
}

/// Values per vector, 0 for a null or empty handle.
///
/// # Safety
/// `f` must be null or a live features handle.
#[no_mangle]
pub unsafe extern "C" fn td_features_width(f: *const TdFeatures) -> usize {
    f.as_ref().and_then(|f| f.inner.first()).map_or(0, |v| v.values.len())
}

/// Copies vector `index` into `values` (exactly `len` slots) and its label
/// into `label`.
///
/// # Safety
/// `f` must be a live handle, `values` must hold `len` doubles, `label`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn td_features_get(
    f: *const TdFeatures,
    index: usize,
    values: *mut f64,
    len: usize,
    label: *mut TdState,
) -> TdStatus {
    guard(|| {
        let f = ref_arg(f, "features")?;
        if values.is_null() || label.is_null() {
            return Err(fail(TdStatus::NullPointer, "values or label is null"));
        }
        let v = f
            .inner
            .get(index)
            .ok_or_else(|| fail(TdStatus::InvalidArgument, format!("index {index} out of range ({} vectors)", f.inner.len())))?;
        if v.values.len() != len {
            return Err(fail(TdStatus::DimensionMismatch, format!("vector has {} values, buffer holds {len}", v.values.len())));
        }
        ptr::copy_nonoverlapping(v.values.as_ptr(), values, len);
        *label = state_code(v.label);
        Ok(())
    })
}

/// # Safety
/// `f` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn td_features_free(f: *mut TdFeatures) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Trains `kind` ("dbn", "gnb" or "lda") on every vector. For the DBN the
/// default configuration is used with the given seed and supervised step
/// count, and the input layer width follows the features.
///
/// # Safety
/// `f` must be a live features handle, `kind` a valid C string, `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn td_model_train(
    f: *const TdFeatures,
    kind: *const c_char,
    seed: u64,
    sup_iters: usize,
    out: *mut *mut TdModel,
) -> TdStatus {
    guard(|| {
        out_arg(out)?;
        let f = ref_arg(f, "features")?;
        let kind = str_arg(kind, "kind")?;
        if f.inner.is_empty() {
            return Err(fail(TdStatus::InvalidArgument, "no feature vectors"));
        }
        let (x, labels) = to_matrix(&f.inner).map_err(|e| fail(TdStatus::DimensionMismatch, e))?;
        let model = match kind.to_ascii_lowercase().as_str() {
            "dbn" => {
                let mut cfg = DbnConfig { seed, sup_iters, ..DbnConfig::default() };
                cfg.layer_sizes[0] = x.ncols();
                let y: Vec<usize> = labels.iter().map(|s| s.index()).collect();
                let m = dbn::train(&cfg, x.view(), &y, &mut SeededRng::new(seed)).map_err(|e| fail(TdStatus::Training, e))?;
                Model::Dbn(m)
            }
            "gnb" => Model::Gnb(GnbModel::train(x.view(), &labels).map_err(|e| fail(TdStatus::Training, e))?),
            "lda" => Model::Lda(LdaModel::train(x.view(), &labels).map_err(|e| fail(TdStatus::Training, e))?),
            other => {
                return Err(fail(TdStatus::InvalidArgument, format!("unknown model kind {other:?} (expected dbn, gnb or lda)")))
            }
        };
        *out = Box::into_raw(Box::new(TdModel { inner: model }));
        Ok(())
    })
}

/// Loads a model file of any kind.
///
/// # Safety
/// `path` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn td_model_load(path: *const c_char, out: *mut *mut TdModel) -> TdStatus {
    guard(|| {
        out_arg(out)?;
        let path = PathBuf::from(str_arg(path, "path")?);
        let text = std::fs::read_to_string(&path).map_err(|e| fail(TdStatus::Io, format!("{}: {e}", path.display())))?;
        let kind = model_file::peek_kind(&text).map_err(|e| fail(TdStatus::Parse, e))?;
        let model = match kind.as_str() {
            "dbn" => Model::Dbn(dbn::model_from_json(&text).map_err(|e| fail(TdStatus::Parse, e))?),
            "gnb" => Model::Gnb(GnbModel::load(&path).map_err(|e| fail(TdStatus::Parse, e))?),
            "lda" => Model::Lda(LdaModel::load(&path).map_err(|e| fail(TdStatus::Parse, e))?),
            other => return Err(fail(TdStatus::Parse, format!("unsupported model kind {other:?}"))),
        };
        *out = Box::into_raw(Box::new(TdModel { inner: model }));
        Ok(())
    })
}

/// Writes the model to `path`.
///
/// # Safety
/// `m` must be a live model handle; `path` a valid C string.
#[no_mangle]
pub unsafe extern "C" fn td_model_save(m: *const TdModel, path: *const c_char) -> TdStatus {
    guard(|| {
        let m = ref_arg(m, "model")?;
        let path = PathBuf::from(str_arg(path, "path")?);
        let io = |e: &dyn std::fmt::Display| fail(TdStatus::Io, format!("{}: {e}", path.display()));
        match &m.inner {
            Model::Dbn(d) => dbn::save_model(d, &path).map_err(|e| io(&e)),
            Model::Gnb(g) => g.save(&path).map_err(|e| io(&e)),
            Model::Lda(l) => l.save(&path).map_err(|e| io(&e)),
        }
    })
}

/// Number of inputs the model expects, 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn td_model_arity(m: *const TdModel) -> usize {
    m.as_ref().map_or(0, |m| match &m.inner {
        Model::Dbn(d) => d.input_width(),
        Model::Gnb(g) => g.arity(),
        Model::Lda(l) => l.arity(),
    })
}

/// Classifies one vector of `len` values; writes the class index to `state`.
///
/// # Safety
/// `m` must be a live model handle, `values` must hold `len` doubles,
/// `state` must be writable.
#[no_mangle]
pub unsafe extern "C" fn td_model_predict(m: *const TdModel, values: *const f64, len: usize, state: *mut TdState) -> TdStatus {
    guard(|| {
        let m = ref_arg(m, "model")?;
        if values.is_null() || state.is_null() {
            return Err(fail(TdStatus::NullPointer, "values or state is null"));
        }
        let x = ndarray::ArrayView1::from(std::slice::from_raw_parts(values, len));
        let mismatch = |e: &dyn std::fmt::Display| fail(TdStatus::DimensionMismatch, e);
        let s = match &m.inner {
            Model::Dbn(d) => d.predict(x).map_err(|e| mismatch(&e))?,
            Model::Gnb(g) => g.predict(x).map_err(|e| mismatch(&e))?,
            Model::Lda(l) => l.predict(x).map_err(|e| mismatch(&e))?,
        };
        *state = state_code(s);
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn td_model_free(m: *mut TdModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}
