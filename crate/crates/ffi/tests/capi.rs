use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use phgas_ffi::*;

fn core_data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data")
        .join(name)
}

fn cstring(path: PathBuf) -> CString {
    CString::new(std::fs::read_to_string(path).unwrap()).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(phgas_last_error_message()) }
        .to_str()
        .unwrap()
        .to_owned()
}

struct Loaded {
    net: *mut PhgasNetwork,
    scn: *mut PhgasScenario,
}

impl Loaded {
    fn benchmark() -> Self {
        let mut net = ptr::null_mut();
        let mut scn = ptr::null_mut();
        unsafe {
            assert_eq!(
                phgas_network_from_json(cstring(core_data("yamal.net.json")).as_ptr(), &mut net),
                PhgasStatus::Ok
            );
            assert_eq!(
                phgas_scenario_from_json(net, cstring(core_data("day.scn.json")).as_ptr(), &mut scn),
                PhgasStatus::Ok
            );
        }
        Self { net, scn }
    }
}

impl Drop for Loaded {
    fn drop(&mut self) {
        unsafe {
            phgas_scenario_free(self.scn);
            phgas_network_free(self.net);
        }
    }
}

#[test]
fn sound_speed_matches_benchmark_gas() {
    let mut c = 0.0;
    assert_eq!(
        unsafe { phgas_sound_speed(530.0, 276.25, 1.0, &mut c) },
        PhgasStatus::Ok
    );
    assert!((c - 382.638_863_682_193_2).abs() < 1e-9);
    assert_eq!(
        unsafe { phgas_sound_speed(-1.0, 276.25, 1.0, &mut c) },
        PhgasStatus::Invalid
    );
    assert!(!last_error().is_empty());
    assert_eq!(
        unsafe { phgas_sound_speed(530.0, 276.25, 1.0, ptr::null_mut()) },
        PhgasStatus::NullPointer
    );
}

#[test]
fn steady_and_transient_through_handles() {
    let l = Loaded::benchmark();
    unsafe {
        let mut ts = ptr::null_mut();
        assert_eq!(
            phgas_steady(l.net, l.scn, PHGAS_MODEL_DECLARED, 0, &mut ts),
            PhgasStatus::Ok
        );
        assert_eq!(phgas_timeseries_rows(ts), 1);
        let cols = phgas_timeseries_cols(ts);
        let names: Vec<String> = (0..cols)
            .map(|j| {
                CStr::from_ptr(phgas_timeseries_column_name(ts, j))
                    .to_str()
                    .unwrap()
                    .to_owned()
            })
            .collect();
        assert_eq!(names[0], "time_s");
        let col = |n: &str| names.iter().position(|x| x == n).unwrap();
        let (mut p1, mut p2) = (0.0, 0.0);
        assert_eq!(
            phgas_timeseries_value(ts, 0, col("P1.out.p_Pa"), &mut p1),
            PhgasStatus::Ok
        );
        assert_eq!(
            phgas_timeseries_value(ts, 0, col("P2.in.p_Pa"), &mut p2),
            PhgasStatus::Ok
        );
        assert!((p2 / p1 - 1.2).abs() < 1e-8);
        assert!(phgas_timeseries_column_name(ts, cols).is_null());
        phgas_timeseries_free(ts);

        let mut ts = ptr::null_mut();
        assert_eq!(
            phgas_simulate(l.net, l.scn, PHGAS_MODEL_NONE, 8, 1800.0, &mut ts),
            PhgasStatus::Ok
        );
        assert_eq!(phgas_timeseries_rows(ts), 49);
        assert_eq!(phgas_timeseries_cols(ts), 10);
        phgas_timeseries_free(ts);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut net = ptr::null_mut();
        let bad = CString::new("{ \"nodes\": [,").unwrap();
        assert_eq!(phgas_network_from_json(bad.as_ptr(), &mut net), PhgasStatus::Parse);
        assert!(net.is_null());
        assert!(last_error().contains("line 1"), "{}", last_error());
        assert_eq!(phgas_network_from_json(ptr::null(), &mut net), PhgasStatus::NullPointer);
        let invalid = [0xffu8 as c_char, 0];
        assert_eq!(
            phgas_network_from_json(invalid.as_ptr(), &mut net),
            PhgasStatus::InvalidUtf8
        );

        let l = Loaded::benchmark();
        let mut ts = ptr::null_mut();
        assert_eq!(phgas_simulate(l.net, l.scn, 9, 0, 0.0, &mut ts), PhgasStatus::Invalid);
        assert_eq!(
            phgas_simulate(l.net, l.scn, PHGAS_MODEL_FC_AM, 1, 0.0, &mut ts),
            PhgasStatus::Invalid
        );
        assert!(ts.is_null());
        assert_eq!(
            phgas_simulate(ptr::null(), l.scn, 0, 0, 0.0, &mut ts),
            PhgasStatus::NullPointer
        );

        let heavy = std::fs::read_to_string(core_data("day.scn.json"))
            .unwrap()
            .replace("[0, 200]", "[0, 5000]");
        let mut scn = ptr::null_mut();
        assert_eq!(
            phgas_scenario_from_json(l.net, CString::new(heavy).unwrap().as_ptr(), &mut scn),
            PhgasStatus::Ok
        );
        assert_eq!(
            phgas_steady(l.net, scn, PHGAS_MODEL_DECLARED, 0, &mut ts),
            PhgasStatus::Solver
        );
        phgas_scenario_free(scn);

        assert_eq!(phgas_timeseries_rows(ptr::null()), 0);
        phgas_timeseries_free(ptr::null_mut());
        assert!(!CStr::from_ptr(phgas_version()).to_bytes().is_empty());
    }
}

/// Compiles a C program against the generated header and the static library.
#[test]
fn c_program_links_and_runs() {
    let exe = std::env::current_exe().unwrap();
    // Cargo writes the staticlib next to the test executable.
    let lib = exe.parent().unwrap().join("libphgas_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = dir.path().join("out.csv");
    let out = Command::new(&bin)
        .arg(core_data("yamal.net.json"))
        .arg(core_data("day.scn.json"))
        .arg(&csv)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let line = String::from_utf8(out.stdout).unwrap();
    let fields: Vec<&str> = line.split_whitespace().collect();
    assert_eq!(&fields[..2], ["865", "11"]);
    let p: f64 = fields[2].parse().unwrap();
    let (spec, scenario) = {
        let spec = phgas::app::load_network(core_data("yamal.net.json")).unwrap();
        let scn = phgas::app::load_scenario(core_data("day.scn.json"), &spec).unwrap();
        (spec.with_model(phgas::ModelKind::ALL[0]), scn)
    };
    let system = phgas::GlobalSystem::assemble(&spec).unwrap();
    let schedule = scenario.schedule(&system).unwrap();
    let series = phgas::simulate(&system, &schedule, &scenario.solver_config())
        .unwrap()
        .series;
    let expected = *series.column("P2.out.p_Pa").unwrap().last().unwrap();
    assert!((p - expected).abs() < 1e-6 * expected, "{line}");
    assert_eq!(std::fs::read_to_string(csv).unwrap().lines().count(), 866);
}
