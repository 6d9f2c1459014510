//! C interface to `tofcorr`: scene sampling, rendering, model loading and
//! depth correction.
//!
//! Every fallible call returns a [`TofcorrStatus`]; on failure the message is
//! kept per thread and can be read with [`tofcorr_last_error`]. Handles are
//! opaque and must be released with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use tofcorr::features::{ConfidenceMode, FeatureConfig, FeatureSet};
use tofcorr::forest::RegressionForest;
use tofcorr::pipeline;
use tofcorr::scene::{
    sample_challenging_scene, sample_simple_scene, CornerKind, CornerScene, Resolution,
};
use tofcorr::tofsim::{render, FrameSet, ToFConfig};
use tofcorr::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TofcorrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    DimensionMismatch = 5,
    Numeric = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TofcorrChannel {
    Depth = 0,
    Amplitude = 1,
    Intensity = 2,
    GroundTruth = 3,
}

pub struct TofcorrScene(CornerScene);

pub struct TofcorrFrames(FrameSet);

pub struct TofcorrForest(RegressionForest);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> TofcorrStatus {
    match e {
        Error::Io { .. } => TofcorrStatus::Io,
        Error::BadMagic { .. }
        | Error::VersionMismatch { .. }
        | Error::TruncatedFile
        | Error::Corrupt(_)
        | Error::Json(_) => TofcorrStatus::Format,
        Error::DimensionMismatch(_) | Error::LayoutMismatch(_) => TofcorrStatus::DimensionMismatch,
        Error::NonFiniteData(_) | Error::ZeroSignal | Error::DivisionByZeroGroundTruth => {
            TofcorrStatus::Numeric
        }
        _ => TofcorrStatus::InvalidArgument,
    }
}

struct Fail(TofcorrStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TofcorrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            TofcorrStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            TofcorrStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(TofcorrStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_slice<'a, T>(p: *mut T, len: usize, need: usize) -> Result<&'a mut [T], Fail> {
    if p.is_null() {
        return Err(null("output buffer"));
    }
    if len < need {
        return Err(Fail(
            TofcorrStatus::BufferTooSmall,
            format!("buffer holds {len} values, {need} needed"),
        ));
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| {
        Fail(
            TofcorrStatus::InvalidArgument,
            "path is not valid UTF-8".into(),
        )
    })?;
    Ok(PathBuf::from(s))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tofcorr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies the calling thread's last error message into `buf` (truncated and
/// NUL-terminated) and returns the full message length, or 0 if there is none.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn tofcorr_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Samples a scene. `planes` is 0 for the simple two-plane dataset, or 2 or
/// 3 for the challenging datasets. `resolution` is the square image side.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn tofcorr_scene_sample(
    seed: u64,
    planes: u32,
    resolution: u32,
    out: *mut *mut TofcorrScene,
) -> TofcorrStatus {
    guard(|| {
        let scene = match planes {
            0 => sample_simple_scene(seed),
            2 => sample_challenging_scene(seed, CornerKind::TwoPlane),
            3 => sample_challenging_scene(seed, CornerKind::ThreePlane),
            n => {
                return Err(Fail(
                    TofcorrStatus::InvalidArgument,
                    format!("planes must be 0, 2 or 3, got {n}"),
                ))
            }
        };
        let scene = scene.with_resolution(Resolution::square(resolution as usize));
        scene.validate()?;
        emit(out, TofcorrScene(scene))
    })
}

/// Reads a scene from its JSON description.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn tofcorr_scene_from_json(
    json: *const c_char,
    out: *mut *mut TofcorrScene,
) -> TofcorrStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json).to_string_lossy();
        let scene: CornerScene = serde_json::from_str(&text).map_err(Error::from)?;
        scene.validate()?;
        emit(out, TofcorrScene(scene))
    })
}

/// # Safety
/// `scene` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tofcorr_scene_free(scene: *mut TofcorrScene) {
    if !scene.is_null() {
        drop(Box::from_raw(scene));
    }
}

/// Renders `scene`. `bounce_samples` of 0 keeps the default.
///
/// # Safety
/// `scene` must be a live handle and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn tofcorr_render(
    scene: *const TofcorrScene,
    multipath: bool,
    bounce_samples: u32,
    out: *mut *mut TofcorrFrames,
) -> TofcorrStatus {
    guard(|| {
        let scene = borrow(scene, "scene")?;
        let mut cfg = ToFConfig {
            multipath_enabled: multipath,
            ..ToFConfig::default()
        };
        if bounce_samples > 0 {
            cfg.bounce_samples = bounce_samples as usize;
        }
        let frames = render(&scene.0, &cfg)?;
        emit(out, TofcorrFrames(frames))
    })
}

/// Loads frames saved by the `render` command; `stem` is the path without
/// extension.
///
/// # Safety
/// `stem` must be a NUL-terminated string and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn tofcorr_frames_load(
    stem: *const c_char,
    out: *mut *mut TofcorrFrames,
) -> TofcorrStatus {
    guard(|| {
        let frames = FrameSet::load(&path_arg(stem)?)?;
        emit(out, TofcorrFrames(frames))
    })
}

/// # Safety
/// `frames` must be a live handle; `width` and `height` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tofcorr_frames_dims(
    frames: *const TofcorrFrames,
    width: *mut usize,
    height: *mut usize,
) -> TofcorrStatus {
    guard(|| {
        let frames = borrow(frames, "frames")?;
        if width.is_null() || height.is_null() {
            return Err(null("dimension output"));
        }
        *width = frames.0.width();
        *height = frames.0.height();
        Ok(())
    })
}

/// Copies one channel, row-major, into `buf` of `len` values.
///
/// # Safety
/// `frames` must be a live handle and `buf` point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tofcorr_frames_copy_channel(
    frames: *const TofcorrFrames,
    channel: TofcorrChannel,
    buf: *mut f64,
    len: usize,
) -> TofcorrStatus {
    guard(|| {
        let fs = &borrow(frames, "frames")?.0;
        let src = match channel {
            TofcorrChannel::Depth => &fs.depth,
            TofcorrChannel::Amplitude => &fs.amplitude,
            TofcorrChannel::Intensity => &fs.intensity,
            TofcorrChannel::GroundTruth => &fs.ground_truth,
        };
        out_slice(buf, len, src.len())?.copy_from_slice(src.as_slice());
        Ok(())
    })
}

/// Copies the validity mask as bytes of 0 or 1.
///
/// # Safety
/// `frames` must be a live handle and `buf` point to `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn tofcorr_frames_copy_valid(
    frames: *const TofcorrFrames,
    buf: *mut u8,
    len: usize,
) -> TofcorrStatus {
    guard(|| {
        let bits = &borrow(frames, "frames")?.0.valid.bits;
        let out = out_slice(buf, len, bits.len())?;
        for (o, &b) in out.iter_mut().zip(bits) {
            *o = b as u8;
        }
        Ok(())
    })
}

/// # Safety
/// `frames` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tofcorr_frames_free(frames: *mut TofcorrFrames) {
    if !frames.is_null() {
        drop(Box::from_raw(frames));
    }
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn tofcorr_forest_load(
    path: *const c_char,
    out: *mut *mut TofcorrForest,
) -> TofcorrStatus {
    guard(|| {
        let forest = RegressionForest::load(&path_arg(path)?)?;
        emit(out, TofcorrForest(forest))
    })
}

/// Number of input features the model expects, or 0 for a null handle.
///
/// # Safety
/// `forest` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tofcorr_forest_n_features(forest: *const TofcorrForest) -> usize {
    forest.as_ref().map_or(0, |f| f.0.n_features())
}

/// Predicts `n_rows` row-major feature rows of `n_cols` values each.
///
/// # Safety
/// `rows` must point to `n_rows * n_cols` floats and `out` to `out_len`
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn tofcorr_forest_predict(
    forest: *const TofcorrForest,
    rows: *const f32,
    n_rows: usize,
    n_cols: usize,
    out: *mut f64,
    out_len: usize,
) -> TofcorrStatus {
    guard(|| {
        let forest = &borrow(forest, "forest")?.0;
        if n_cols != forest.n_features() {
            return Err(Fail(
                TofcorrStatus::DimensionMismatch,
                format!(
                    "model expects {} features, got {n_cols}",
                    forest.n_features()
                ),
            ));
        }
        let total = n_rows
            .checked_mul(n_cols)
            .ok_or_else(|| Fail(TofcorrStatus::InvalidArgument, "row count overflows".into()))?;
        if n_rows == 0 {
            return Ok(());
        }
        if rows.is_null() {
            return Err(null("rows"));
        }
        let data = std::slice::from_raw_parts(rows, total);
        let pred = forest.predict_rows(data);
        out_slice(out, out_len, n_rows)?.copy_from_slice(&pred);
        Ok(())
    })
}

/// Writes the corrected depth of `frames` into `buf`. The feature set is
/// chosen from the model's layout; `amplitude_confidence` selects the
/// amplitude-depth confidence channel instead of the constant one.
///
/// # Safety
/// Handles must be live and `buf` point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tofcorr_correct(
    forest: *const TofcorrForest,
    frames: *const TofcorrFrames,
    amplitude_confidence: bool,
    buf: *mut f64,
    len: usize,
) -> TofcorrStatus {
    guard(|| {
        let forest = &borrow(forest, "forest")?.0;
        let frames = &borrow(frames, "frames")?.0;
        let set = if forest.layout == FeatureSet::Reduced.layout() {
            FeatureSet::Reduced
        } else {
            FeatureSet::Full
        };
        let cfg = FeatureConfig {
            confidence: if amplitude_confidence {
                ConfidenceMode::AmplitudeDepth
            } else {
                ConfidenceMode::Literal
            },
            set,
        };
        let corrected = pipeline::correct_frames(frames, forest, &cfg)?;
        out_slice(buf, len, corrected.len())?.copy_from_slice(corrected.as_slice());
        Ok(())
    })
}

/// # Safety
/// `forest` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tofcorr_forest_free(forest: *mut TofcorrForest) {
    if !forest.is_null() {
        drop(Box::from_raw(forest));
    }
}

/// Relative pixel error `|gt − d| / |gt|`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tofcorr_rpe(gt: f64, d: f64, out: *mut f64) -> TofcorrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = tofcorr::eval::rpe(gt, d)?;
        Ok(())
    })
}
