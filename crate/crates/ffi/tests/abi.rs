use std::ffi::{CStr, CString};
use std::ptr;

use kickrec::features::{FeatureSet, GOAL_LOG, N_FEATURES, COMMENT_COUNT_LOG};
use kickrec::models::{train, ModelKind, ModelParams};
use kickrec_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(kr_last_error()) }.to_string_lossy().into_owned()
}

fn toy_model(dir: &std::path::Path) -> (std::path::PathBuf, kickrec::models::TrainedModel) {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..60 {
        let mut v = vec![None; N_FEATURES];
        let label = (i % 2) as u8;
        let shift = if label == 1 { 1.0 } else { -1.0 };
        v[GOAL_LOG] = Some(shift + (i as f64 * 0.37).sin());
        v[COMMENT_COUNT_LOG] = Some(shift * 0.5 + (i as f64 * 0.91).cos());
        rows.push(v);
        labels.push(label);
    }
    let refs: Vec<_> = rows.iter().collect();
    let model = train(ModelKind::Lr, &ModelParams::default(), &refs, &labels, &FeatureSet::parse("GL+C").unwrap()).unwrap();
    let path = dir.join("model.txt");
    model.save(&path).unwrap();
    (path, model)
}

#[test]
fn load_predict_and_free() {
    let dir = tempfile::tempdir().unwrap();
    let (path, model) = toy_model(dir.path());
    let c_path = CString::new(path.to_str().unwrap()).unwrap();
    let mut handle = ptr::null_mut();
    assert_eq!(unsafe { kr_model_load(c_path.as_ptr(), &mut handle) }, KrStatus::Ok);
    assert!(!handle.is_null());

    let mut dim = 0usize;
    assert_eq!(unsafe { kr_model_dim(handle, &mut dim) }, KrStatus::Ok);
    assert_eq!(dim, model.dim());

    let mut x = vec![f64::NAN; kr_feature_count()];
    x[GOAL_LOG] = 0.8;
    x[COMMENT_COUNT_LOG] = 0.3;
    let mut p = 0.0;
    assert_eq!(unsafe { kr_model_predict_proba(handle, x.as_ptr(), x.len(), &mut p) }, KrStatus::Ok);
    let mut expected = vec![None; N_FEATURES];
    expected[GOAL_LOG] = Some(0.8);
    expected[COMMENT_COUNT_LOG] = Some(0.3);
    assert!((p - model.predict_proba(&expected).unwrap()).abs() < 1e-12);
    assert!(p > 0.5);

    let short = [0.0; 2];
    assert_eq!(unsafe { kr_model_predict_proba(handle, short.as_ptr(), short.len(), &mut p) }, KrStatus::Dimension);
    assert!(!last_error().is_empty());

    x[GOAL_LOG] = f64::INFINITY;
    assert_eq!(unsafe { kr_model_predict_proba(handle, x.as_ptr(), x.len(), &mut p) }, KrStatus::InvalidArgument);

    unsafe { kr_model_free(handle) };
    unsafe { kr_model_free(ptr::null_mut()) };
}

#[test]
fn missing_and_malformed_model_files() {
    let dir = tempfile::tempdir().unwrap();
    let missing = CString::new(dir.path().join("absent.txt").to_str().unwrap()).unwrap();
    let mut handle = ptr::null_mut();
    assert_eq!(unsafe { kr_model_load(missing.as_ptr(), &mut handle) }, KrStatus::NotFound);
    assert!(handle.is_null());
    assert!(last_error().contains("absent.txt"));

    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "not a model\n").unwrap();
    let bad = CString::new(bad.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { kr_model_load(bad.as_ptr(), &mut handle) }, KrStatus::Parse);
    assert!(handle.is_null());
}

#[test]
fn null_arguments_rejected() {
    let mut handle = ptr::null_mut();
    assert_eq!(unsafe { kr_model_load(ptr::null(), &mut handle) }, KrStatus::NullPointer);
    let mut dim = 0;
    assert_eq!(unsafe { kr_model_dim(ptr::null(), &mut dim) }, KrStatus::NullPointer);
    let mut out = 0.0;
    assert_eq!(unsafe { kr_model_predict_proba(ptr::null(), ptr::null(), 0, &mut out) }, KrStatus::NullPointer);
    assert_eq!(unsafe { kr_haversine_km(0.0, 0.0, 1.0, 1.0, ptr::null_mut()) }, KrStatus::NullPointer);
}

#[test]
fn auc_matches_pair_counting() {
    let scores = [0.9, 0.8, 0.8, 0.3, 0.2, 0.7];
    let labels = [1u8, 0, 1, 0, 0, 1];
    let mut wins = 0.0;
    let mut total = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li == 1 && lj == 0 {
                total += 1.0;
                wins += match scores[i].partial_cmp(&scores[j]).unwrap() {
                    std::cmp::Ordering::Greater => 1.0,
                    std::cmp::Ordering::Equal => 0.5,
                    std::cmp::Ordering::Less => 0.0,
                };
            }
        }
    }
    let mut out = 0.0;
    assert_eq!(unsafe { kr_auc(scores.as_ptr(), labels.as_ptr(), scores.len(), &mut out) }, KrStatus::Ok);
    assert!((out - wins / total).abs() < 1e-12);

    let one_class = [1u8; 6];
    assert_eq!(unsafe { kr_auc(scores.as_ptr(), one_class.as_ptr(), 6, &mut out) }, KrStatus::InvalidArgument);
    let bad = [2u8, 0, 1, 0, 0, 1];
    assert_eq!(unsafe { kr_auc(scores.as_ptr(), bad.as_ptr(), 6, &mut out) }, KrStatus::InvalidArgument);
}

#[test]
fn haversine_new_york_los_angeles() {
    let mut km = 0.0;
    assert_eq!(unsafe { kr_haversine_km(40.7128, -74.0060, 34.0522, -118.2437, &mut km) }, KrStatus::Ok);
    assert!((km - 3936.0).abs() < 10.0, "{km}");
    assert_eq!(unsafe { kr_haversine_km(91.0, 0.0, 0.0, 0.0, &mut km) }, KrStatus::InvalidArgument);
}

#[test]
fn header_declares_the_abi() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/kickrec.h")).unwrap();
    for name in [
        "kr_model_load",
        "kr_model_free",
        "kr_model_dim",
        "kr_model_predict_proba",
        "kr_auc",
        "kr_haversine_km",
        "kr_last_error",
        "kr_feature_count",
        "typedef struct KrModel KrModel",
        "KR_STATUS_OK = 0",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}
