//! File formats: trial logs (CSV/JSON), Q-table snapshots, distance matrices,
//! accuracy curves, run records (JSONL) and the TOML run configuration.
//!
//! CSV outputs may start with `# key: value` metadata lines; readers skip
//! any line starting with `#`.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::agent::{AgentConfig, QTable, State};
use crate::error::{Error, Result};
use crate::metrics::{DistanceMatrix, Label, WindowedSeries, DEFAULT_WINDOW};
use crate::model::{
    Cohort, Outcome, Response, Session, Stimulus, TrainingSequence, Trial, DEFAULT_SUCCESS_THRESHOLD,
    DEFAULT_SUCCESS_WINDOW,
};
use crate::protocol::ProtocolConfig;
use crate::scalar::Scalar;

/// Ordered `key: value` pairs written as `#` comment lines above a CSV body.
pub type Metadata = Vec<(String, String)>;

/// One trial as stored in a log file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialLogRow {
    pub individual_id: String,
    pub session_index: u32,
    pub trial_index: u32,
    pub stimulus: Stimulus,
    pub response: Response,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogFormat {
    Csv,
    Json,
}

impl FromStr for LogFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(LogFormat::Csv),
            "json" => Ok(LogFormat::Json),
            other => Err(Error::Domain(format!("unknown log format {other:?}"))),
        }
    }
}

impl LogFormat {
    /// Guesses the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> LogFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => LogFormat::Json,
            _ => LogFormat::Csv,
        }
    }
}

pub fn cohort_to_rows(cohort: &Cohort) -> Vec<TrialLogRow> {
    let mut rows = Vec::new();
    for member in &cohort.members {
        for session in &member.sessions {
            for (k, t) in session.trials.iter().enumerate() {
                rows.push(TrialLogRow {
                    individual_id: member.individual_id.clone(),
                    session_index: session.index,
                    trial_index: k as u32 + 1,
                    stimulus: t.stimulus,
                    response: t.response,
                    outcome: t.outcome,
                });
            }
        }
    }
    rows
}

/// Groups rows into a cohort. Members keep first-appearance order; sessions
/// and trials are sorted by index and must be consecutive from 1. Each
/// member's training verdict is derived from its session accuracies.
pub fn rows_to_cohort<T: Scalar>(rows: Vec<TrialLogRow>, threshold: T, window: usize) -> Result<Cohort> {
    let mut order: Vec<String> = Vec::new();
    let mut by_id: HashMap<String, HashMap<u32, Vec<(u32, Trial)>>> = HashMap::new();
    for row in rows {
        let sessions = by_id.entry(row.individual_id.clone()).or_insert_with(|| {
            order.push(row.individual_id.clone());
            HashMap::new()
        });
        sessions
            .entry(row.session_index)
            .or_default()
            .push((row.trial_index, Trial::new(row.stimulus, row.response, row.outcome)));
    }

    let mut members = Vec::with_capacity(order.len());
    for id in order {
        let mut sessions_map = by_id.remove(&id).unwrap();
        let mut indices: Vec<u32> = sessions_map.keys().copied().collect();
        indices.sort_unstable();
        let mut sessions = Vec::with_capacity(indices.len());
        for (pos, idx) in indices.into_iter().enumerate() {
            if idx as usize != pos + 1 {
                return Err(Error::Integrity(format!(
                    "{id}: session indices must be consecutive from 1, found {idx} at position {}",
                    pos + 1
                )));
            }
            let mut trials = sessions_map.remove(&idx).unwrap();
            trials.sort_by_key(|(k, _)| *k);
            for (pos, (k, _)) in trials.iter().enumerate() {
                let want = pos as u32 + 1;
                if *k != want {
                    let what = if *k < want { "duplicate" } else { "missing" };
                    let shown = if *k < want { *k } else { want };
                    return Err(Error::Integrity(format!(
                        "{id}, session {idx}: {what} trial index {shown}"
                    )));
                }
            }
            sessions.push(Session::new(idx, trials.into_iter().map(|(_, t)| t).collect())?);
        }
        members.push(TrainingSequence::from_sessions(id, sessions, threshold, window)?);
    }
    Cohort::new(members)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

fn write_metadata<W: Write>(w: &mut W, metadata: &[(String, String)]) -> std::io::Result<()> {
    for (k, v) in metadata {
        writeln!(w, "# {k}: {}", v.replace('\n', " "))?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file))
}

/// Reads the `# key: value` lines at the top of a CSV file.
pub fn read_metadata(path: &Path) -> Result<Metadata> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let Some(rest) = line.strip_prefix('#') else {
            break;
        };
        if let Some((k, v)) = rest.split_once(':') {
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
    }
    Ok(out)
}

pub fn write_trial_log_csv(path: &Path, cohort: &Cohort, metadata: &[(String, String)]) -> Result<()> {
    let mut w = create(path)?;
    write_metadata(&mut w, metadata).map_err(|e| Error::io(path, e))?;
    let mut csv = csv::Writer::from_writer(w);
    for row in cohort_to_rows(cohort) {
        csv.serialize(row)?;
    }
    csv.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_trial_log_rows_csv(path: &Path) -> Result<Vec<TrialLogRow>> {
    let mut reader = csv_reader(path)?;
    reader
        .deserialize::<TrialLogRow>()
        .map(|r| r.map_err(csv_error))
        .collect()
}

pub fn write_trial_log_json(path: &Path, cohort: &Cohort) -> Result<()> {
    write_json(path, &cohort_to_rows(cohort))
}

pub fn read_trial_log_rows_json(path: &Path) -> Result<Vec<TrialLogRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line() as u64,
        message: e.to_string(),
    })
}

/// Reads a trial log, judging training success with the default criterion.
pub fn import_trial_log(path: &Path, format: LogFormat) -> Result<Cohort> {
    import_trial_log_with(path, format, DEFAULT_SUCCESS_THRESHOLD, DEFAULT_SUCCESS_WINDOW)
}

pub fn import_trial_log_with<T: Scalar>(
    path: &Path,
    format: LogFormat,
    threshold: T,
    window: usize,
) -> Result<Cohort> {
    let rows = match format {
        LogFormat::Csv => read_trial_log_rows_csv(path)?,
        LogFormat::Json => read_trial_log_rows_json(path)?,
    };
    if rows.is_empty() {
        return Err(Error::InsufficientData(format!("{} has no trials", path.display())));
    }
    rows_to_cohort(rows, threshold, window)
}

pub fn export_trial_log(path: &Path, format: LogFormat, cohort: &Cohort, metadata: &[(String, String)]) -> Result<()> {
    match format {
        LogFormat::Csv => write_trial_log_csv(path, cohort, metadata),
        LogFormat::Json => write_trial_log_json(path, cohort),
    }
}

/// JSON form of a Q-table: only rows that differ from `q_init` are listed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTableSnapshot<T> {
    pub k: usize,
    pub q_init: T,
    pub entries: Vec<QTableEntry<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTableEntry<T> {
    pub state: Vec<Stimulus>,
    /// Values for `left`, `right`, `none`.
    pub values: [T; 3],
}

impl<T: Scalar> QTableSnapshot<T> {
    pub fn from_table(table: &QTable<T>) -> Self {
        QTableSnapshot {
            k: table.k(),
            q_init: table.q_init(),
            entries: table
                .touched()
                .map(|(s, values)| QTableEntry {
                    state: s.stimuli().to_vec(),
                    values,
                })
                .collect(),
        }
    }

    pub fn to_table(&self) -> Result<QTable<T>> {
        let mut table = QTable::new(self.k, self.q_init)?;
        for e in &self.entries {
            if e.state.len() != self.k {
                return Err(Error::Integrity(format!(
                    "Q-table entry {:?} does not have k={} stimuli",
                    e.state, self.k
                )));
            }
            let state = State::new(e.state.clone())?;
            for (a, v) in Response::ALL.iter().zip(e.values) {
                table.set(&state, *a, v)?;
            }
        }
        Ok(table)
    }
}

fn write_json<V: Serialize>(path: &Path, value: &V) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn read_json<V: DeserializeOwned>(path: &Path) -> Result<V> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_qtable_json<T: Scalar>(path: &Path, table: &QTable<T>) -> Result<()> {
    write_json(path, &QTableSnapshot::from_table(table))
}

pub fn read_qtable_json<T: Scalar>(path: &Path) -> Result<QTable<T>> {
    read_json::<QTableSnapshot<T>>(path)?.to_table()
}

/// Matrix as `{"labels": [...], "entries": [[...], ...]}`.
pub fn write_matrix_json<T: Scalar>(path: &Path, matrix: &DistanceMatrix<T>) -> Result<()> {
    write_json(path, matrix)
}

pub fn read_matrix_json<T: Scalar>(path: &Path) -> Result<DistanceMatrix<T>> {
    let m: DistanceMatrix<T> = read_json(path)?;
    let n = m.labels.len();
    if m.entries.len() != n || m.entries.iter().any(|r| r.len() != n) {
        return Err(Error::Integrity(format!("matrix is not {n}x{n}")));
    }
    Ok(m)
}

/// Series as `{"values": [...], "window": .., "source_len": ..}`.
pub fn write_series_json<T: Scalar>(path: &Path, series: &WindowedSeries<T>) -> Result<()> {
    write_json(path, series)
}

pub fn read_series_json<T: Scalar>(path: &Path) -> Result<WindowedSeries<T>> {
    let s: WindowedSeries<T> = read_json(path)?;
    let expected = (s.source_len + 1).saturating_sub(s.window);
    if s.window == 0 || s.values.len() != expected {
        return Err(Error::Integrity(format!(
            "{} values for window {} over {} trials",
            s.values.len(),
            s.window,
            s.source_len
        )));
    }
    Ok(s)
}

/// Square matrix CSV: a `label` header followed by one column per label, then
/// one row per label.
pub fn write_matrix_csv<T: Scalar>(path: &Path, matrix: &DistanceMatrix<T>, metadata: &[(String, String)]) -> Result<()> {
    let mut w = create(path)?;
    write_metadata(&mut w, metadata).map_err(|e| Error::io(path, e))?;
    let mut csv = csv::Writer::from_writer(w);
    let mut header = vec!["label".to_string()];
    header.extend(matrix.labels.iter().map(Label::to_string));
    csv.write_record(&header)?;
    for (label, row) in matrix.labels.iter().zip(&matrix.entries) {
        let mut rec = vec![label.to_string()];
        rec.extend(row.iter().map(|v| format!("{v:?}")));
        csv.write_record(&rec)?;
    }
    csv.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_matrix_csv<T: Scalar>(path: &Path) -> Result<DistanceMatrix<T>> {
    let mut reader = csv_reader(path)?;
    let header = reader.headers().map_err(csv_error)?.clone();
    let labels = header
        .iter()
        .skip(1)
        .map(Label::from_str)
        .collect::<Result<Vec<_>>>()?;
    let mut entries = Vec::with_capacity(labels.len());
    for rec in reader.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let parse_err = |message: String| Error::Parse { line, message };
        let row_label: Label = rec.get(0).unwrap_or_default().parse()?;
        if entries.len() >= labels.len() || row_label != labels[entries.len()] {
            return Err(parse_err(format!("unexpected row label {row_label}")));
        }
        let row = rec
            .iter()
            .skip(1)
            .map(|v| {
                v.parse::<f64>()
                    .map(T::lit)
                    .map_err(|e| parse_err(format!("bad number {v:?}: {e}")))
            })
            .collect::<Result<Vec<T>>>()?;
        if row.len() != labels.len() {
            return Err(parse_err(format!("expected {} values, got {}", labels.len(), row.len())));
        }
        entries.push(row);
    }
    if entries.len() != labels.len() {
        return Err(Error::Integrity(format!(
            "{} rows for {} labels",
            entries.len(),
            labels.len()
        )));
    }
    Ok(DistanceMatrix { labels, entries })
}

/// Two-column CSV `t,accuracy` of a windowed series.
pub fn write_series_csv<T: Scalar>(path: &Path, series: &WindowedSeries<T>, metadata: &[(String, String)]) -> Result<()> {
    let mut w = create(path)?;
    write_metadata(&mut w, metadata).map_err(|e| Error::io(path, e))?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["t", "accuracy"])?;
    for (t, v) in series.values.iter().enumerate() {
        csv.write_record([t.to_string(), format!("{v:?}")])?;
    }
    csv.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_series_csv(path: &Path) -> Result<Vec<f64>> {
    #[derive(Deserialize)]
    struct Row {
        t: usize,
        accuracy: f64,
    }
    let mut reader = csv_reader(path)?;
    let mut out = Vec::new();
    for row in reader.deserialize::<Row>() {
        let row = row.map_err(csv_error)?;
        if row.t != out.len() {
            return Err(Error::Integrity(format!("series position {} out of order", row.t)));
        }
        out.push(row.accuracy);
    }
    Ok(out)
}

/// One pairwise session comparison in long form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub a_id: String,
    pub a_session: u32,
    pub b_id: String,
    pub b_session: u32,
    pub distance: f64,
}

pub fn write_comparison_csv(path: &Path, rows: &[ComparisonRow], metadata: &[(String, String)]) -> Result<()> {
    let mut w = create(path)?;
    write_metadata(&mut w, metadata).map_err(|e| Error::io(path, e))?;
    let mut csv = csv::Writer::from_writer(w);
    for r in rows {
        csv.serialize(r)?;
    }
    csv.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_comparison_csv(path: &Path) -> Result<Vec<ComparisonRow>> {
    let mut reader = csv_reader(path)?;
    reader
        .deserialize::<ComparisonRow>()
        .map(|r| r.map_err(csv_error))
        .collect()
}

/// Metric parameters attached to a run or analysis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub delta: usize,
    pub distance: String,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            delta: DEFAULT_WINDOW,
            distance: "match".into(),
        }
    }
}

/// Contents of the TOML configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "T: Scalar")]
pub struct SimConfig<T> {
    pub agent: AgentConfig<T>,
    pub protocol: ProtocolConfig<T>,
    pub metrics: MetricsConfig,
}

impl<T: Scalar> Default for SimConfig<T> {
    fn default() -> Self {
        SimConfig {
            agent: AgentConfig::default(),
            protocol: ProtocolConfig::default(),
            metrics: MetricsConfig::default(),
        }
    }
}

impl<T: Scalar> SimConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.agent.validate()?;
        self.protocol.validate()?;
        if self.metrics.delta == 0 {
            return Err(Error::Config("metrics.delta must be >= 1".into()));
        }
        crate::metrics::distance_by_name(&self.metrics.distance)?;
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SimConfig<T> = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// How a run's sessions were scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlanRecord {
    UntilSuccess,
    Fixed { sessions: u32, stop_on_success: bool },
    FreshPerSession { sessions: u32 },
}

/// One simulated training with everything needed to replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RunRecord<T> {
    pub run_id: String,
    pub seed: u64,
    pub agent_config: AgentConfig<T>,
    pub protocol_config: ProtocolConfig<T>,
    pub plan: PlanRecord,
    pub training_sequence: TrainingSequence,
    pub created_at: DateTime<Utc>,
    pub metric_params: MetricsConfig,
}

/// Appends records to a JSONL file, one per line.
pub fn append_run_records<T: Scalar>(path: &Path, records: &[RunRecord<T>]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_run_records<T: Scalar>(path: &Path) -> Result<Vec<RunRecord<T>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i as u64 + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: &str, s: u32, t: u32) -> TrialLogRow {
        TrialLogRow {
            individual_id: id.into(),
            session_index: s,
            trial_index: t,
            stimulus: Stimulus::Sweet,
            response: Response::Left,
            outcome: Outcome::Correct,
        }
    }

    #[test]
    fn rows_group_into_cohort() {
        let c = rows_to_cohort(vec![row("real:a", 1, 2), row("real:a", 1, 1)], 0.7, 3).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.members[0].sessions.len(), 1);
        assert_eq!(c.members[0].sessions[0].len(), 2);
    }

    #[test]
    fn duplicate_and_gap_are_integrity_errors() {
        let dup = rows_to_cohort(vec![row("a", 1, 1), row("a", 1, 1)], 0.7, 3).unwrap_err();
        assert!(matches!(dup, Error::Integrity(ref m) if m.contains("duplicate")), "{dup}");
        let gap = rows_to_cohort(vec![row("a", 1, 1), row("a", 1, 3)], 0.7, 3).unwrap_err();
        assert!(matches!(gap, Error::Integrity(ref m) if m.contains("missing")), "{gap}");
        let sgap = rows_to_cohort(vec![row("a", 2, 1)], 0.7, 3).unwrap_err();
        assert!(matches!(sgap, Error::Integrity(_)));
    }

    #[test]
    fn malformed_csv_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        fs::write(
            &p,
            "# note: x\nindividual_id,session_index,trial_index,stimulus,response,outcome\n\
             a,1,1,sweet,left,correct\na,1,2,sour,left,correct\n",
        )
        .unwrap();
        match import_trial_log(&p, LogFormat::Csv).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn matrix_and_series_json_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let m = DistanceMatrix {
            labels: vec![Label::new("sim:a", 1, 1), Label::new("sim:a", 2, 1)],
            entries: vec![vec![0.0, 0.1], vec![0.1, 0.0]],
        };
        let p = dir.path().join("m.json");
        write_matrix_json(&p, &m).unwrap();
        assert_eq!(read_matrix_json::<f64>(&p).unwrap(), m);

        let s = WindowedSeries { values: vec![0.5, 1.0], window: 2, source_len: 3 };
        let p = dir.path().join("s.json");
        write_series_json(&p, &s).unwrap();
        assert_eq!(read_series_json::<f64>(&p).unwrap(), s);
        fs::write(&p, r#"{"values":[0.5],"window":2,"source_len":3}"#).unwrap();
        assert!(matches!(read_series_json::<f64>(&p), Err(Error::Integrity(_))));
    }

    #[test]
    fn qtable_snapshot_roundtrip() {
        let mut t = QTable::<f64>::new(2, 0.0).unwrap();
        let s = State::new(vec![Stimulus::Salt, Stimulus::Sweet55]).unwrap();
        t.set(&s, Response::Right, 1.25).unwrap();
        let snap = QTableSnapshot::from_table(&t);
        assert_eq!(snap.entries.len(), 1);
        assert_eq!(snap.to_table().unwrap(), t);
        let bad = QTableSnapshot {
            k: 3,
            ..snap
        };
        assert!(bad.to_table().is_err());
    }

    #[test]
    fn config_defaults_from_empty_toml() {
        let c = SimConfig::<f64>::from_toml_str("").unwrap();
        assert_eq!(c, SimConfig::default());
        let c = SimConfig::<f64>::from_toml_str("[agent]\nk = 2\n[metrics]\ndelta = 10\n").unwrap();
        assert_eq!(c.agent.k, 2);
        assert_eq!(c.metrics.delta, 10);
        assert!(SimConfig::<f64>::from_toml_str("[agent]\nkk = 2\n").is_err());
        assert!(SimConfig::<f64>::from_toml_str("[protocol]\nsweet_target = \"none\"\n").is_err());
        let text = SimConfig::<f64>::default().to_toml_string().unwrap();
        assert_eq!(SimConfig::<f64>::from_toml_str(&text).unwrap(), SimConfig::default());
    }

    #[test]
    fn metadata_lines() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let series = WindowedSeries {
            values: vec![0.5f64, 0.75],
            window: 4,
            source_len: 5,
        };
        let md = vec![("delta".to_string(), "4".to_string())];
        write_series_csv(&p, &series, &md).unwrap();
        assert_eq!(read_metadata(&p).unwrap(), md);
        assert_eq!(read_series_csv(&p).unwrap(), vec![0.5, 0.75]);
    }
}
