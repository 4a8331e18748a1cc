use std::ffi::{CStr, CString};
use std::ptr;

use ect_core::domain::{LabelTree, Side};
use ect_core::reductions::{model_to_json, save_model, NodeClassifierSet, ReductionKind, ReductionModel};
use ect_ffi::*;

fn last_error() -> String {
    let p = ect_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

/// Filter tree over 4 labels whose nodes always pick the right input.
fn right_model() -> ReductionModel {
    let tree = LabelTree::balanced(4).unwrap();
    let n = tree.num_internal();
    ReductionModel::from_parts(
        ReductionKind::FilterTree,
        tree,
        NodeClassifierSet::from_decisions(&vec![Side::Right; n]),
    )
    .unwrap()
}

#[test]
fn version_matches_the_crate() {
    let v = unsafe { CStr::from_ptr(ect_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn model_round_trip_through_handles() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    save_model(&right_model(), &path).unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    let mut h: *mut EctModel = ptr::null_mut();
    unsafe {
        assert_eq!(ect_model_load(cpath.as_ptr(), &mut h), EctStatus::Ok);
        let mut k = 0;
        assert_eq!(ect_model_k(h, &mut k), EctStatus::Ok);
        assert_eq!(k, 4);
        let mut label = 99;
        assert_eq!(ect_model_decode(h, ptr::null(), 0, &mut label), EctStatus::Ok);
        assert_eq!(label, 3);
        ect_model_free(h);
    }

    let json = CString::new(model_to_json(&right_model()).unwrap()).unwrap();
    let mut h2: *mut EctModel = ptr::null_mut();
    unsafe {
        assert_eq!(ect_model_from_json(json.as_ptr(), &mut h2), EctStatus::Ok);
        let x = [0.5, 1.5];
        let mut label = 99;
        assert_eq!(ect_model_decode(h2, x.as_ptr(), 2, &mut label), EctStatus::Ok);
        assert_eq!(label, 3);
        ect_model_free(h2);
        ect_model_free(ptr::null_mut());
    }
}

#[test]
fn errors_set_codes_and_messages() {
    let mut h: *mut EctModel = ptr::null_mut();
    let missing = CString::new("/nonexistent/model.json").unwrap();
    let garbage = CString::new("{not json").unwrap();
    unsafe {
        assert_eq!(ect_model_load(missing.as_ptr(), &mut h), EctStatus::Io);
        assert!(!last_error().is_empty());
        assert_eq!(ect_model_from_json(garbage.as_ptr(), &mut h), EctStatus::Format);
        assert_eq!(ect_model_load(ptr::null(), &mut h), EctStatus::NullPointer);
        assert!(last_error().contains("path"));
        assert!(h.is_null());
        let mut b = EctDepthBounds::default();
        assert_eq!(ect_depth_bounds(1, 1, &mut b), EctStatus::InvalidArgument);
        assert_eq!(ect_depth_bounds(8, 3, &mut b), EctStatus::Ok);
        assert!(ect_last_error().is_null());
    }
}

#[test]
fn analysis_entry_points() {
    unsafe {
        let mut b = EctDepthBounds::default();
        assert_eq!(ect_depth_bounds(8, 3, &mut b), EctStatus::Ok);
        assert_eq!(b.importance[..3], [13.0, 17.5, 14.0]);
        assert_eq!(b.bracketed_final_rounds, 3);

        let mut t = EctTightness::default();
        assert_eq!(ect_tightness(8, &mut t), EctStatus::Ok);
        assert_eq!((t.reg_t, t.s_t, t.i_t, t.ratio), (1.0, 6.0, 3.0, 2.0));
        assert_eq!(ect_tightness(6, &mut t), EctStatus::InvalidArgument);

        let mut cost = 0;
        assert_eq!(ect_min_dethroning_cost(8, 3, 0, 0, &mut cost), EctStatus::Ok);
        assert!(cost >= 3);
        assert_eq!(ect_min_dethroning_cost(8, 3, 0, 1, &mut cost), EctStatus::SearchLimit);
    }
}

#[test]
fn simulate_with_and_without_adversary() {
    let mut s = EctSimulation::default();
    unsafe {
        assert_eq!(ect_simulate(8, 3, 0, ptr::null(), &mut s), EctStatus::Ok);
        assert_eq!((s.winner, s.best, s.contradictions), (0, 0, 0));
        let adv = CString::new(r#"{"kind":"budget_full_lie","budget":2}"#).unwrap();
        assert_eq!(ect_simulate(8, 3, 0, adv.as_ptr(), &mut s), EctStatus::Ok);
        assert_eq!(s.winner, 0);
        assert_eq!(s.weighted_errors, 2);
        let bad = CString::new(r#"{"kind":"parity","i":0,"j":0}"#).unwrap();
        assert_eq!(ect_simulate(8, 3, 0, bad.as_ptr(), &mut s), EctStatus::InvalidArgument);
    }
}
