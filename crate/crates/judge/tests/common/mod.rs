#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Mutex, MutexGuard, OnceLock};

use judge::sandbox::{Sandbox, SandboxConfig};
use judge::Artifact;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Timing-sensitive tests take this lock so they never compete for the CPU.
pub fn serial() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

pub fn sandbox() -> &'static Sandbox {
    static SANDBOX: OnceLock<Sandbox> = OnceLock::new();
    SANDBOX.get_or_init(|| Sandbox::new(SandboxConfig::default()).expect("sandbox"))
}

/// Builds `tests/fixtures/<name>.c` with gcc, outside any sandbox.
pub fn native(name: &str) -> Artifact {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("main");
    let status = Command::new("gcc")
        .args(["-O2", "-o"])
        .arg(&out)
        .arg(fixture(&format!("{name}.c")))
        .status()
        .expect("gcc");
    assert!(status.success(), "fixture {name} failed to build");
    Artifact::new(dir, "main", vec![judge::artifact::BIN_PATH.into()], None, String::new()).unwrap()
}

pub mod crash;
pub mod synth;

pub fn package(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../packages").join(name)
}

pub fn judge() -> &'static judge::pipeline::Judge {
    static JUDGE: OnceLock<judge::pipeline::Judge> = OnceLock::new();
    JUDGE.get_or_init(|| {
        judge::pipeline::Judge::new(SandboxConfig::default(), judge::toolchain::Registry::default())
            .expect("judge")
    })
}

pub fn source_payload(language: &str, file: &Path) -> judge_core::Payload {
    judge_core::Payload::Source {
        language_id: language.into(),
        files: vec![judge_core::model::SourceFile {
            name: file.file_name().unwrap().to_string_lossy().into_owned(),
            content: judge_core::model::Bytes(std::fs::read(file).unwrap()),
        }],
    }
}

pub fn submission(id: &str, problem_id: &str, payload: judge_core::Payload) -> judge_core::Submission {
    judge_core::Submission {
        id: id.into(),
        problem_id: problem_id.into(),
        user_id: "tester".into(),
        payload,
        submitted_at: 0,
    }
}

/// Writes a package: `manifest`, then `tests/NN.in` (and `.out` when given).
pub fn write_package(dir: &Path, manifest: &serde_json::Value, tests: &[(&str, Option<&str>)]) {
    std::fs::create_dir_all(dir.join("tests")).unwrap();
    std::fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(manifest).unwrap()).unwrap();
    std::fs::write(dir.join("statement.md"), "test problem\n").unwrap();
    for (i, (input, output)) in tests.iter().enumerate() {
        std::fs::write(dir.join(format!("tests/{:02}.in", i + 1)), input).unwrap();
        if let Some(out) = output {
            std::fs::write(dir.join(format!("tests/{:02}.out", i + 1)), out).unwrap();
        }
    }
}

/// Copy of the facility package keeping the instances numbered `keep`
/// (1-based, renumbered from 01) and, optionally, their reference scores.
pub fn facility_subset(dir: &Path, keep: &[usize], keep_references: bool) {
    let src = package("facility");
    let mut manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(src.join("manifest.json")).unwrap()).unwrap();
    let obj = manifest.as_object_mut().unwrap();
    if keep_references {
        let all = obj["reference_scores"].as_array().unwrap().clone();
        let refs: Vec<_> = keep.iter().map(|&n| all[n - 1].clone()).collect();
        obj.insert("reference_scores".into(), refs.into());
    } else {
        obj.remove("reference_scores");
    }
    std::fs::create_dir_all(dir.join("tests")).unwrap();
    std::fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest).unwrap()).unwrap();
    std::fs::copy(src.join("statement.md"), dir.join("statement.md")).unwrap();
    for (i, n) in keep.iter().enumerate() {
        std::fs::copy(
            src.join(format!("tests/{n:02}.in")),
            dir.join(format!("tests/{:02}.in", i + 1)),
        )
        .unwrap();
    }
}

/// Zeroes measured quantities and wall-clock stamps, which legitimately
/// differ between two runs of the same submission.
pub fn mask_measurements(value: &mut serde_json::Value) {
    const MEASURED: [&str; 4] = ["cpu_time", "wall_time", "peak_memory", "submitted_at"];
    match value {
        serde_json::Value::Object(map) => {
            for (key, v) in map.iter_mut() {
                if MEASURED.contains(&key.as_str()) {
                    *v = serde_json::Value::from(0);
                } else {
                    mask_measurements(v);
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(mask_measurements),
        _ => {}
    }
}

pub fn masked(json: &str) -> String {
    let mut v: serde_json::Value = serde_json::from_str(json).unwrap();
    mask_measurements(&mut v);
    serde_json::to_string_pretty(&v).unwrap()
}
