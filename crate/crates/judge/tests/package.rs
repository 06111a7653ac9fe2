mod common;

use common::{package, write_package};
use judge::package::{load_package, PackageError};
use judge_core::facility::{facility_greedy, facility_objective, FacilityInstance};
use judge_core::scoring::BestTable;
use judge_core::{validate_problem, Direction, PolicyKind};

#[test]
fn bundled_packages_load_and_validate() {
    let echo = load_package(&package("echo")).unwrap();
    assert_eq!(echo.instances.len(), 3);
    assert!(validate_problem(&echo).is_empty());

    let facility = load_package(&package("facility")).unwrap();
    assert_eq!(facility.direction, Direction::Minimize);
    assert_eq!(facility.policy.kind, PolicyKind::OptimizationNormalized);
    assert!(validate_problem(&facility).is_empty());
    let best = BestTable::for_problem(&facility);
    for instance in &facility.instances {
        let parsed = FacilityInstance::parse(&instance.input.0).unwrap();
        parsed.check_contest_bounds().unwrap();
        // The shipped reference is never worse than the baseline heuristic.
        let greedy = facility_objective(&parsed, &facility_greedy(&parsed));
        let reference = best.get(instance.id).unwrap();
        assert!(*reference <= judge_core::Score::from(greedy), "instance {}", instance.id);
    }
}

#[test]
fn every_problem_is_reported_at_once() {
    let dir = tempfile::tempdir().unwrap();
    write_package(
        dir.path(),
        &serde_json::json!({
            "id": "bad",
            "kind": "decision",
            "policy": {"kind": "binary_icpc"},
            "checker": {"kind": "objective", "name": "nonexistent"}
        }),
        &[("1\n", None), ("2\n", Some("2\n"))],
    );
    std::fs::write(dir.path().join("tests/05.in"), "x").unwrap();
    let err = load_package(dir.path()).unwrap_err();
    assert!(matches!(err, PackageError::Malformed(_)));
    let files: Vec<&str> = err.diagnostics().iter().map(|d| d.file.as_str()).collect();
    assert!(files.contains(&"manifest.json"), "{err}");
    assert!(files.contains(&"tests/03.in"), "{err}");
    assert!(files.contains(&"tests/05.in"), "{err}");
    assert!(err.to_string().contains("nonexistent"));
}

#[test]
fn unreadable_manifest_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("tests")).unwrap();
    std::fs::write(dir.path().join("manifest.json"), "{ not json").unwrap();
    let err = load_package(dir.path()).unwrap_err();
    assert_eq!(err.diagnostics()[0].file, "manifest.json");
    assert!(matches!(load_package(&dir.path().join("missing")), Err(PackageError::NotFound(_))));
}
