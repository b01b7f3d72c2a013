use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use blockpulse::detect::cusum_detect;
use blockpulse::detrend::{stl_decompose, StlParams};
use blockpulse_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { bp_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let s = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_string();
    assert_eq!(s.len(), n.min(255));
    s
}

#[test]
fn version_matches_the_crate() {
    let v = unsafe { CStr::from_ptr(bp_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn cusum_matches_the_library() {
    let mut x = vec![0.0; 50];
    x.extend(vec![-3.0; 50]);
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { bp_cusum(x.as_ptr(), x.len(), 5.0, 0.5, &mut h) }, BpStatus::Ok);
    let want = cusum_detect(&x, 5.0, 0.5).unwrap();
    assert_eq!(unsafe { bp_events_len(h) }, want.len());
    for (i, w) in want.iter().enumerate() {
        let mut e = BpCusumEvent { direction: BpDirection::Up, onset: 0, peak: 0, end: 0, magnitude: 0.0, reference: 0.0 };
        assert_eq!(unsafe { bp_events_get(h, i, &mut e) }, BpStatus::Ok);
        assert_eq!((e.direction, e.onset, e.peak, e.end), (BpDirection::Down, w.onset, w.peak, w.end));
        assert_eq!(e.magnitude, w.magnitude);
    }
    let mut e = BpCusumEvent { direction: BpDirection::Up, onset: 0, peak: 0, end: 0, magnitude: 0.0, reference: 0.0 };
    assert_eq!(unsafe { bp_events_get(h, want.len(), &mut e) }, BpStatus::InvalidArgument);
    unsafe { bp_events_free(h) };
}

#[test]
fn bad_threshold_sets_the_message() {
    let x = [1.0, 2.0];
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { bp_cusum(x.as_ptr(), 2, 0.0, 0.5, &mut h) }, BpStatus::InvalidArgument);
    assert!(h.is_null());
    assert!(last_error().contains("h > 0"), "{}", last_error());
    assert_eq!(unsafe { bp_cusum(ptr::null(), 2, 5.0, 0.5, &mut h) }, BpStatus::NullPointer);
    assert_eq!(last_error(), "x is null");
}

#[test]
fn message_is_truncated_to_the_buffer() {
    assert_eq!(unsafe { bp_grid_cell(95.0, 0.0, ptr::null_mut()) }, BpStatus::NullPointer);
    let mut small = [0 as c_char; 4];
    let n = unsafe { bp_last_error_message(small.as_mut_ptr(), small.len()) };
    assert_eq!(n, "cell is null".len());
    assert_eq!(unsafe { CStr::from_ptr(small.as_ptr()) }.to_str().unwrap(), "cel");
}

#[test]
fn stl_matches_the_library() {
    let p = 24;
    let x: Vec<f64> = (0..10 * p).map(|i| 5.0 + (i as f64 * std::f64::consts::TAU / p as f64).sin() + i as f64 * 0.01).collect();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { bp_stl(x.as_ptr(), x.len(), p, &mut h) }, BpStatus::Ok);
    let want = stl_decompose(&x, &StlParams::new(p)).unwrap();
    let n = unsafe { bp_decomposition_len(h) };
    assert_eq!(n, x.len());
    let get = |f: unsafe extern "C" fn(*const BpDecomposition) -> *const f64| unsafe { std::slice::from_raw_parts(f(h), n).to_vec() };
    assert_eq!(get(bp_decomposition_trend), want.trend);
    assert_eq!(get(bp_decomposition_seasonal), want.seasonal);
    assert_eq!(get(bp_decomposition_residual), want.residual);
    unsafe { bp_decomposition_free(h) };

    assert_eq!(unsafe { bp_stl(x.as_ptr(), 5, p, &mut h) }, BpStatus::Insufficient);
}

#[test]
fn grid_cells() {
    let mut c = BpGridCell::default();
    assert_eq!(unsafe { bp_grid_cell(30.59, 114.31, &mut c) }, BpStatus::Ok);
    assert_eq!(c, BpGridCell { lat: 30, lon: 114 });
    assert_eq!(unsafe { bp_grid_cell(-91.0, 0.0, &mut c) }, BpStatus::InvalidArgument);
}

#[test]
fn classify_flat_and_empty_series() {
    let start = 18_262 * 86_400;
    let ts: Vec<i64> = (0..14 * 131).map(|i| start + i * 660).collect();
    let counts = vec![20u32; ts.len()];
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { bp_series_new(0x0a0000, 64, 660, ts.as_ptr(), counts.as_ptr(), ts.len(), &mut s) }, BpStatus::Ok);
    let mut c = BpClassification::default();
    assert_eq!(unsafe { bp_classify(s, &mut c) }, BpStatus::Ok);
    assert!(c.responsive && !c.diurnal && !c.change_sensitive, "{c:?}");
    assert_eq!(c.max_daily_swing, 0);
    unsafe { bp_series_free(s) };

    assert_eq!(unsafe { bp_series_new(0x0a0001, 64, 660, ptr::null(), ptr::null(), 0, &mut s) }, BpStatus::Ok);
    assert_eq!(unsafe { bp_classify(s, &mut c) }, BpStatus::Ok);
    assert!(!c.responsive);
    unsafe { bp_series_free(s) };

    assert_eq!(unsafe { bp_series_new(1 << 24, 64, 660, ptr::null(), ptr::null(), 0, &mut s) }, BpStatus::InvalidArgument);
    assert_eq!(unsafe { bp_classify(ptr::null(), &mut c) }, BpStatus::NullPointer);
}

#[test]
fn stages_run_from_a_config() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/sample/sample.conf");
    let conf = CString::new(conf.to_str().unwrap()).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { bp_config_load(conf.as_ptr(), &mut cfg) }, BpStatus::Ok);
    let out = CString::new(tmp.path().join("out").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { bp_config_set_output(cfg, out.as_ptr()) }, BpStatus::Ok);

    let detect = CString::new("detect").unwrap();
    assert_eq!(unsafe { bp_run_stage(cfg, detect.as_ptr()) }, BpStatus::MissingInput);
    let bogus = CString::new("bogus").unwrap();
    assert_eq!(unsafe { bp_run_stage(cfg, bogus.as_ptr()) }, BpStatus::InvalidArgument);
    for stage in ["simulate", "reconstruct"] {
        let s = CString::new(stage).unwrap();
        assert_eq!(unsafe { bp_run_stage(cfg, s.as_ptr()) }, BpStatus::Ok, "{}", last_error());
    }
    assert!(tmp.path().join("out/series.txt").exists());
    unsafe { bp_config_free(cfg) };

    let missing = CString::new(tmp.path().join("absent.conf").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { bp_config_load(missing.as_ptr(), &mut cfg) }, BpStatus::MissingInput);
}

#[test]
fn header_declares_every_export() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/blockpulse.h")).unwrap();
    let src = std::fs::read_to_string(dir.join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(header.contains(&format!(" {name}(")) || header.contains(&format!("*{name}(")), "{name} missing from header");
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"blockpulse.h\"\nint main(void) { BpGridCell c; return bp_grid_cell(1.0, 2.0, &c) == BP_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&dir)
        .arg(&src)
        .status()
        .expect("a C compiler on PATH");
    assert!(status.success());
}
