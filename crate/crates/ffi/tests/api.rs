use std::ffi::{c_char, CStr, CString};
use std::ptr;

use tofcorr::features::FeatureSet;
use tofcorr::forest::RegressionForest;
use tofcorr_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    unsafe {
        tofcorr_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn sample(seed: u64, planes: u32, res: u32) -> *mut TofcorrScene {
    let mut scene = ptr::null_mut();
    let st = unsafe { tofcorr_scene_sample(seed, planes, res, &mut scene) };
    assert_eq!(st, TofcorrStatus::Ok, "{}", last_error());
    scene
}

fn rendered(seed: u64, multipath: bool) -> *mut TofcorrFrames {
    let scene = sample(seed, 0, 12);
    let mut frames = ptr::null_mut();
    let st = unsafe { tofcorr_render(scene, multipath, 8, &mut frames) };
    assert_eq!(st, TofcorrStatus::Ok, "{}", last_error());
    unsafe { tofcorr_scene_free(scene) };
    frames
}

fn channel(frames: *const TofcorrFrames, c: TofcorrChannel) -> Vec<f64> {
    let mut buf = vec![0.0; 144];
    let st = unsafe { tofcorr_frames_copy_channel(frames, c, buf.as_mut_ptr(), buf.len()) };
    assert_eq!(st, TofcorrStatus::Ok);
    buf
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(tofcorr_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn render_without_multipath_matches_ground_truth() {
    let frames = rendered(4, false);
    let (mut w, mut h) = (0usize, 0usize);
    assert_eq!(
        unsafe { tofcorr_frames_dims(frames, &mut w, &mut h) },
        TofcorrStatus::Ok
    );
    assert_eq!((w, h), (12, 12));
    let depth = channel(frames, TofcorrChannel::Depth);
    let gt = channel(frames, TofcorrChannel::GroundTruth);
    let mut valid = vec![9u8; 144];
    assert_eq!(
        unsafe { tofcorr_frames_copy_valid(frames, valid.as_mut_ptr(), valid.len()) },
        TofcorrStatus::Ok
    );
    assert!(valid.iter().all(|&b| b <= 1));
    assert!(valid.contains(&1));
    for i in 0..144 {
        if valid[i] == 1 {
            assert!((depth[i] - gt[i]).abs() <= 1e-9 * gt[i]);
        }
    }
    unsafe { tofcorr_frames_free(frames) };
}

#[test]
fn zero_model_correction_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zero.tfor");
    RegressionForest::constant(1, 0.0, FeatureSet::Full.layout())
        .save(&path)
        .unwrap();
    let c_path = CString::new(path.to_str().unwrap()).unwrap();
    let mut forest = ptr::null_mut();
    assert_eq!(
        unsafe { tofcorr_forest_load(c_path.as_ptr(), &mut forest) },
        TofcorrStatus::Ok
    );
    assert_eq!(unsafe { tofcorr_forest_n_features(forest) }, 39);
    let frames = rendered(8, true);
    let mut out = vec![0.0; 144];
    let st = unsafe { tofcorr_correct(forest, frames, false, out.as_mut_ptr(), out.len()) };
    assert_eq!(st, TofcorrStatus::Ok, "{}", last_error());
    assert_eq!(out, channel(frames, TofcorrChannel::Depth));

    let rows = vec![0.5f32; 3 * 39];
    let mut pred = vec![1.0; 3];
    let st = unsafe { tofcorr_forest_predict(forest, rows.as_ptr(), 3, 39, pred.as_mut_ptr(), 3) };
    assert_eq!(st, TofcorrStatus::Ok);
    assert_eq!(pred, [0.0; 3]);
    let st = unsafe { tofcorr_forest_predict(forest, rows.as_ptr(), 3, 38, pred.as_mut_ptr(), 3) };
    assert_eq!(st, TofcorrStatus::DimensionMismatch);
    unsafe {
        tofcorr_frames_free(frames);
        tofcorr_forest_free(forest);
    }
}

#[test]
fn errors_are_reported() {
    let mut scene = ptr::null_mut();
    assert_eq!(
        unsafe { tofcorr_scene_sample(1, 5, 12, &mut scene) },
        TofcorrStatus::InvalidArgument
    );
    assert!(scene.is_null());
    assert!(last_error().contains("planes"));
    assert_eq!(
        unsafe { tofcorr_scene_sample(1, 0, 12, ptr::null_mut()) },
        TofcorrStatus::NullPointer
    );
    let missing = CString::new("/nonexistent/model.tfor").unwrap();
    let mut forest = ptr::null_mut();
    assert_eq!(
        unsafe { tofcorr_forest_load(missing.as_ptr(), &mut forest) },
        TofcorrStatus::Io
    );

    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.tfor");
    std::fs::write(&junk, b"nothing like a model").unwrap();
    let junk = CString::new(junk.to_str().unwrap()).unwrap();
    assert_eq!(
        unsafe { tofcorr_forest_load(junk.as_ptr(), &mut forest) },
        TofcorrStatus::Format
    );

    let frames = rendered(2, false);
    let mut small = vec![0.0; 10];
    assert_eq!(
        unsafe {
            tofcorr_frames_copy_channel(frames, TofcorrChannel::Depth, small.as_mut_ptr(), 10)
        },
        TofcorrStatus::BufferTooSmall
    );
    unsafe { tofcorr_frames_free(frames) };

    let mut v = 0.0;
    assert_eq!(
        unsafe { tofcorr_rpe(0.0, 1.0, &mut v) },
        TofcorrStatus::Numeric
    );
    assert_eq!(unsafe { tofcorr_rpe(2.0, 1.5, &mut v) }, TofcorrStatus::Ok);
    assert_eq!(v, 0.25);
    assert_eq!(unsafe { tofcorr_last_error(ptr::null_mut(), 0) }, 0);
}

#[test]
fn long_errors_are_truncated() {
    let mut scene = ptr::null_mut();
    unsafe { tofcorr_scene_sample(1, 7, 12, &mut scene) };
    let full = unsafe { tofcorr_last_error(ptr::null_mut(), 0) };
    assert!(full > 8);
    let mut buf = [1 as c_char; 8];
    assert_eq!(unsafe { tofcorr_last_error(buf.as_mut_ptr(), 8) }, full);
    assert_eq!(buf[7], 0);
}

#[test]
fn scene_round_trips_through_json() {
    let text = serde_json::to_string(&tofcorr::scene::sample_simple_scene(3)).unwrap();
    let c = CString::new(text).unwrap();
    let mut scene = ptr::null_mut();
    assert_eq!(
        unsafe { tofcorr_scene_from_json(c.as_ptr(), &mut scene) },
        TofcorrStatus::Ok
    );
    unsafe { tofcorr_scene_free(scene) };
    let bad = CString::new("{\"alpha\": 1}").unwrap();
    assert_eq!(
        unsafe { tofcorr_scene_from_json(bad.as_ptr(), &mut scene) },
        TofcorrStatus::Format
    );
    unsafe { tofcorr_scene_free(ptr::null_mut()) };
}
