use std::path::PathBuf;

use rodentsim::experiment::{self, ExecutionOptions, Figure};
use rodentsim::io::{self, LogFormat};
use rodentsim::{MatchDistance, SimConfig};

fn small_config() -> SimConfig {
    let mut c = SimConfig::default();
    c.protocol.trials_per_session = 50;
    c
}

#[test]
fn cohort_roundtrips_through_csv_and_json() {
    let (cohort, _) = experiment::run_experiment_executions(&small_config(), 4, 3, 21, ExecutionOptions::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for (name, fmt) in [("t.csv", LogFormat::Csv), ("t.json", LogFormat::Json)] {
        let p = dir.path().join(name);
        io::export_trial_log(&p, fmt, &cohort, &[("seeds".into(), "21 22 23".into())]).unwrap();
        assert_eq!(io::import_trial_log(&p, fmt).unwrap(), cohort);
    }
}

#[test]
fn trained_sequence_roundtrips() {
    let (run, _) = experiment::simulate(&SimConfig::default(), 5).unwrap();
    assert!(run.sequence.trained);
    let cohort = rodentsim::Cohort::new(vec![run.sequence]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.csv");
    io::write_trial_log_csv(&p, &cohort, &[]).unwrap();
    assert_eq!(io::import_trial_log(&p, LogFormat::Csv).unwrap(), cohort);
}

#[test]
fn run_records_replay() {
    let (cohort, records) = experiment::run_experiment_executions(&small_config(), 3, 2, 7, ExecutionOptions::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("runs.jsonl");
    io::append_run_records(&p, &records).unwrap();
    io::append_run_records(&p, &records[..1]).unwrap();
    let back = io::read_run_records::<f64>(&p).unwrap();
    assert_eq!(back.len(), 3);
    assert_eq!(back[0], records[0]);
    for (rec, member) in back.iter().zip(&cohort.members) {
        assert_eq!(&experiment::replay(rec).unwrap(), member);
    }
}

#[test]
fn qtable_file_roundtrip() {
    let (run, _) = experiment::simulate(&small_config(), 2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("q.json");
    io::write_qtable_json(&p, &run.qtable).unwrap();
    assert_eq!(io::read_qtable_json::<f64>(&p).unwrap(), run.qtable);
}

#[test]
fn figure_files_reparse() {
    let (cohort, _) = experiment::run_experiment_executions(&small_config(), 12, 3, 1, ExecutionOptions::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let md = vec![("seeds".to_string(), "1 2 3".to_string())];

    let fig3 = experiment::emit_figure_data::<f64, _>(&cohort, Figure::ExecutionDistances, 10, &MatchDistance, dir.path(), None, &md).unwrap();
    let m = io::read_matrix_csv::<f64>(&fig3[0]).unwrap();
    assert_eq!(m.len(), 9);
    m.validate(1e-12, 2.0).unwrap();
    let meta = io::read_metadata(&fig3[0]).unwrap();
    assert!(meta.contains(&("delta".into(), "10".into())));
    assert!(meta.contains(&("seeds".into(), "1 2 3".into())));

    let fig4 = experiment::emit_figure_data::<f64, _>(&cohort, Figure::SessionDistances, 10, &MatchDistance, dir.path(), None, &md).unwrap();
    let m = io::read_matrix_csv::<f64>(&fig4[0]).unwrap();
    assert_eq!(m.len(), 12);
    m.validate(1e-12, 2.0).unwrap();

    let fig2 = experiment::emit_figure_data::<f64, _>(&cohort, Figure::AccuracyCurves, 10, &MatchDistance, dir.path(), Some(&[1, 12]), &md).unwrap();
    assert_eq!(fig2.len(), 6);
    let curve = io::read_series_csv(&fig2[0]).unwrap();
    assert_eq!(curve.len(), 50 - 10 + 1);

    let again = tempfile::tempdir().unwrap();
    let fig4b = experiment::emit_figure_data::<f64, _>(&cohort, Figure::SessionDistances, 10, &MatchDistance, again.path(), None, &md).unwrap();
    assert_eq!(std::fs::read(&fig4[0]).unwrap(), std::fs::read(&fig4b[0]).unwrap());
}

#[test]
fn all_correct_curve_is_flat() {
    use rodentsim::{Cohort, Outcome, Response, Session, Stimulus, TrainingSequence, Trial};
    let trials = vec![Trial::new(Stimulus::Sweet, Response::Left, Outcome::Correct); 30];
    let sessions = (1..=12).map(|j| Session::new(j, trials.clone()).unwrap()).collect();
    let seq = TrainingSequence::from_sessions("real:perfect", sessions, 0.70, 3).unwrap();
    let cohort = Cohort::new(vec![seq]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = experiment::emit_figure_data::<f64, _>(&cohort, Figure::AccuracyCurves, 5, &MatchDistance, dir.path(), None, &[]).unwrap();
    assert_eq!(files.len(), 3);
    for f in files {
        assert!(io::read_series_csv(&f).unwrap().iter().all(|v| *v == 1.0));
    }
}

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/golden").join(name)
}

#[test]
fn golden_files_parse() {
    let csv = io::import_trial_log(&golden("trials.csv"), LogFormat::Csv).unwrap();
    let json = io::import_trial_log(&golden("trials.json"), LogFormat::Json).unwrap();
    assert_eq!(csv, json);
    io::read_qtable_json::<f64>(&golden("qtable.json")).unwrap();
    io::read_matrix_csv::<f64>(&golden("fig3.csv")).unwrap().validate(1e-12, 2.0).unwrap();
    io::read_matrix_csv::<f64>(&golden("fig4.csv")).unwrap().validate(1e-12, 2.0).unwrap();
    let m3 = io::read_matrix_csv::<f64>(&golden("fig3.csv")).unwrap();
    assert_eq!(io::read_matrix_json::<f64>(&golden("fig3.json")).unwrap(), m3);
    let curve = io::read_series_json::<f64>(&golden("fig2.json")).unwrap();
    assert_eq!(curve.values, io::read_series_csv(&golden("fig2.csv")).unwrap());
    io::read_comparison_csv(&golden("compare.csv")).unwrap();
    let records = io::read_run_records::<f64>(&golden("runs.jsonl")).unwrap();
    for (rec, member) in records.iter().zip(&csv.members) {
        assert_eq!(&experiment::replay(rec).unwrap(), member);
    }
    SimConfig::load(&golden("config.toml")).unwrap();
}
