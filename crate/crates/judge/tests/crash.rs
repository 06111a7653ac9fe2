mod common;

#[test]
fn killed_server_recovers_to_the_uninterrupted_state() {
    let _guard = common::serial();
    let work = tempfile::tempdir().unwrap();
    let report = common::crash::run(work.path());
    assert_eq!(report.attempts, 2, "{} should be judged again exactly once", report.interrupted);
    assert_eq!(report.recovered, report.oracle);
}
