//! Experiment runners and figure-data emitters.

use std::path::{Path, PathBuf};

use chrono::Utc;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::{self, Metadata, PlanRecord, RunRecord, SimConfig};
use crate::metrics::{self, DistributionDistance, Label};
use crate::model::{sim_id, Cohort, Session};
use crate::protocol::{self, SessionPlan, TrainingRun};
use crate::scalar::Scalar;

/// Sessions plotted for accuracy curves and compared across executions.
pub const DEFAULT_FIGURE_SESSIONS: [u32; 3] = [1, 6, 12];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExecutionOptions {
    /// End an execution once the success criterion fires.
    pub stop_on_success: bool,
    /// Give every session a fresh agent instead of one agent per execution.
    pub fresh_per_session: bool,
}

impl ExecutionOptions {
    fn plan(&self, sessions: u32) -> SessionPlan {
        if self.fresh_per_session {
            SessionPlan::FreshPerSession { sessions }
        } else {
            SessionPlan::Fixed {
                sessions,
                stop_on_success: self.stop_on_success,
            }
        }
    }
}

pub fn plan_record(plan: SessionPlan) -> PlanRecord {
    match plan {
        SessionPlan::UntilSuccess => PlanRecord::UntilSuccess,
        SessionPlan::Fixed {
            sessions,
            stop_on_success,
        } => PlanRecord::Fixed {
            sessions,
            stop_on_success,
        },
        SessionPlan::FreshPerSession { sessions } => PlanRecord::FreshPerSession { sessions },
    }
}

pub fn session_plan(record: PlanRecord) -> SessionPlan {
    match record {
        PlanRecord::UntilSuccess => SessionPlan::UntilSuccess,
        PlanRecord::Fixed {
            sessions,
            stop_on_success,
        } => SessionPlan::Fixed {
            sessions,
            stop_on_success,
        },
        PlanRecord::FreshPerSession { sessions } => SessionPlan::FreshPerSession { sessions },
    }
}

fn record<T: Scalar>(config: &SimConfig<T>, seed: u64, plan: SessionPlan, run: &TrainingRun<T>) -> RunRecord<T> {
    RunRecord {
        run_id: run.sequence.individual_id.clone(),
        seed,
        agent_config: config.agent.clone(),
        protocol_config: config.protocol.clone(),
        plan: plan_record(plan),
        training_sequence: run.sequence.clone(),
        created_at: Utc::now(),
        metric_params: config.metrics.clone(),
    }
}

/// A single training until success (or the session cap).
pub fn simulate<T: Scalar>(config: &SimConfig<T>, seed: u64) -> Result<(TrainingRun<T>, RunRecord<T>)> {
    config.validate()?;
    let plan = SessionPlan::UntilSuccess;
    let run = protocol::train(
        protocol::seed_id(seed),
        &config.protocol,
        &config.agent,
        seed,
        plan,
    )?;
    let rec = record(config, seed, plan, &run);
    Ok((run, rec))
}

/// Runs `executions` independent trainings of `sessions` sessions each, with
/// seeds `seed_base..seed_base + executions`. Executions run in parallel; the
/// result is ordered by execution.
pub fn run_experiment_executions<T: Scalar>(
    config: &SimConfig<T>,
    sessions: u32,
    executions: usize,
    seed_base: u64,
    options: ExecutionOptions,
) -> Result<(Cohort, Vec<RunRecord<T>>)> {
    if sessions == 0 || executions == 0 {
        return Err(Error::Domain("sessions and executions must be >= 1".into()));
    }
    config.validate()?;
    let plan = options.plan(sessions);
    let runs = (0..executions)
        .into_par_iter()
        .map(|e| {
            let seed = seed_base + e as u64;
            let run = protocol::train(sim_id(e + 1), &config.protocol, &config.agent, seed, plan)?;
            let rec = record(config, seed, plan, &run);
            Ok((run.sequence, rec))
        })
        .collect::<Result<Vec<_>>>()?;
    let (members, records): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    Ok((Cohort::new(members)?, records))
}

/// Regenerates the training sequence stored in `record`.
pub fn replay<T: Scalar>(record: &RunRecord<T>) -> Result<crate::model::TrainingSequence> {
    protocol::train(
        record.run_id.clone(),
        &record.protocol_config,
        &record.agent_config,
        record.seed,
        session_plan(record.plan),
    )
    .map(|r| r.sequence)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Sliding-window accuracy curves.
    AccuracyCurves,
    /// Pairwise individual distances across executions and sessions.
    ExecutionDistances,
    /// Pairwise group distances between session indices.
    SessionDistances,
}

impl std::str::FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig2" => Ok(Figure::AccuracyCurves),
            "fig3" => Ok(Figure::ExecutionDistances),
            "fig4" => Ok(Figure::SessionDistances),
            other => Err(Error::Domain(format!("unknown figure {other:?}"))),
        }
    }
}

impl Figure {
    pub fn as_str(self) -> &'static str {
        match self {
            Figure::AccuracyCurves => "fig2",
            Figure::ExecutionDistances => "fig3",
            Figure::SessionDistances => "fig4",
        }
    }
}

fn file_safe(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn check_sessions_present(cohort: &Cohort, sessions: &[u32]) -> Result<()> {
    for &j in sessions {
        if cohort.sessions_at(j).is_empty() {
            return Err(Error::MissingSession(j));
        }
    }
    Ok(())
}

/// Labeled sessions for the execution-distance figure, session-major.
pub fn execution_items<'a>(cohort: &'a Cohort, sessions: &[u32]) -> Result<Vec<(Label, &'a Session)>> {
    check_sessions_present(cohort, sessions)?;
    let mut items = Vec::new();
    for &j in sessions {
        for (e, m) in cohort.members.iter().enumerate() {
            if let Some(s) = m.session(j) {
                items.push((Label::new(m.individual_id.clone(), j, e as u32 + 1), s));
            }
        }
    }
    Ok(items)
}

/// Group distances between every pair of session indices `1..=max`.
pub fn session_group_matrix<T: Scalar, D: DistributionDistance<T> + ?Sized>(
    cohort: &Cohort,
    group_name: &str,
    delta: usize,
    dist: &D,
) -> Result<metrics::DistanceMatrix<T>> {
    let max = cohort.max_session_index();
    let items = (1..=max)
        .map(|j| {
            let members = cohort.sessions_at(j);
            if members.is_empty() {
                return Err(Error::MissingSession(j));
            }
            Ok((
                Label::new(group_name, j, 0),
                metrics::group_series::<T>(&members, delta)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    metrics::group_distance_matrix(&items, dist)
}

/// Writes the data behind one figure into `out_dir` and returns the files written.
///
/// `sessions` selects the sessions for `fig2`/`fig3` (default 1, 6, 12);
/// `fig4` always uses every session index. `metadata` is written into every
/// CSV after the window and distance name.
pub fn emit_figure_data<T: Scalar, D: DistributionDistance<T> + ?Sized>(
    cohort: &Cohort,
    which: Figure,
    delta: usize,
    dist: &D,
    out_dir: &Path,
    sessions: Option<&[u32]>,
    metadata: &[(String, String)],
) -> Result<Vec<PathBuf>> {
    emit_figure_data_as(cohort, which, delta, dist, out_dir, sessions, metadata, false)
}

/// As [`emit_figure_data`], additionally writing a `.json` sibling of every
/// CSV when `json` is set.
#[allow(clippy::too_many_arguments)]
pub fn emit_figure_data_as<T: Scalar, D: DistributionDistance<T> + ?Sized>(
    cohort: &Cohort,
    which: Figure,
    delta: usize,
    dist: &D,
    out_dir: &Path,
    sessions: Option<&[u32]>,
    metadata: &[(String, String)],
    json: bool,
) -> Result<Vec<PathBuf>> {
    if cohort.is_empty() {
        return Err(Error::Domain("empty cohort".into()));
    }
    let selected = sessions.unwrap_or(&DEFAULT_FIGURE_SESSIONS);
    let mut md: Metadata = vec![
        ("figure".into(), which.as_str().into()),
        ("delta".into(), delta.to_string()),
        ("distance".into(), dist.name().into()),
    ];
    md.extend(metadata.iter().cloned());

    let mut written = Vec::new();
    match which {
        Figure::AccuracyCurves => {
            check_sessions_present(cohort, selected)?;
            for m in &cohort.members {
                for &j in selected {
                    let Some(s) = m.session(j) else { continue };
                    let curve = metrics::accuracy_curve::<T>(s, delta)?;
                    let path = out_dir.join(format!("fig2_{}_s{j}.csv", file_safe(&m.individual_id)));
                    let mut file_md = md.clone();
                    file_md.push(("individual_id".into(), m.individual_id.clone()));
                    file_md.push(("session_index".into(), j.to_string()));
                    io::write_series_csv(&path, &curve, &file_md)?;
                    let jpath = path.with_extension("json");
                    written.push(path);
                    if json {
                        io::write_series_json(&jpath, &curve)?;
                        written.push(jpath);
                    }
                }
            }
        }
        Figure::ExecutionDistances => {
            let items = execution_items(cohort, selected)?;
            let matrix = metrics::session_distance_matrix::<T, D>(&items, delta, dist)?;
            let path = out_dir.join("fig3.csv");
            md.push((
                "sessions".into(),
                selected.iter().map(u32::to_string).collect::<Vec<_>>().join(" "),
            ));
            io::write_matrix_csv(&path, &matrix, &md)?;
            let jpath = path.with_extension("json");
            written.push(path);
            if json {
                io::write_matrix_json(&jpath, &matrix)?;
                written.push(jpath);
            }
        }
        Figure::SessionDistances => {
            let matrix = session_group_matrix::<T, D>(cohort, "cohort", delta, dist)?;
            md.push(("group_size".into(), cohort.len().to_string()));
            let path = out_dir.join("fig4.csv");
            io::write_matrix_csv(&path, &matrix, &md)?;
            let jpath = path.with_extension("json");
            written.push(path);
            if json {
                io::write_matrix_json(&jpath, &matrix)?;
                written.push(jpath);
            }
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MatchDistance;

    fn small() -> SimConfig<f64> {
        let mut c = SimConfig::default();
        c.protocol.trials_per_session = 40;
        c
    }

    #[test]
    fn execution_grid_shape() {
        let (cohort, records) = run_experiment_executions(&small(), 12, 5, 100, ExecutionOptions::default()).unwrap();
        assert_eq!(cohort.len(), 5);
        assert_eq!(records.len(), 5);
        let total: usize = cohort.members.iter().map(|m| m.sessions.len()).sum();
        assert_eq!(total, 60);
        assert_eq!(records[2].seed, 102);
        assert_eq!(cohort.members[0].individual_id, "sim:exec-0001");
    }

    #[test]
    fn single_execution() {
        let (cohort, _) = run_experiment_executions(&small(), 2, 1, 0, ExecutionOptions::default()).unwrap();
        assert_eq!(cohort.len(), 1);
        assert!(run_experiment_executions(&small(), 0, 1, 0, ExecutionOptions::default()).is_err());
    }

    #[test]
    fn executions_are_reproducible() {
        let opts = ExecutionOptions::default();
        let a = run_experiment_executions(&small(), 3, 4, 9, opts).unwrap().0;
        let b = run_experiment_executions(&small(), 3, 4, 9, opts).unwrap().0;
        assert_eq!(a, b);
    }

    #[test]
    fn fresh_per_session_runs() {
        let opts = ExecutionOptions {
            fresh_per_session: true,
            ..Default::default()
        };
        let (cohort, recs) = run_experiment_executions(&small(), 3, 2, 1, opts).unwrap();
        assert!(cohort.members.iter().all(|m| m.sessions.len() == 3));
        assert_eq!(replay(&recs[1]).unwrap(), cohort.members[1]);
    }

    #[test]
    fn missing_session_is_named() {
        let (cohort, _) = run_experiment_executions(&small(), 3, 2, 1, ExecutionOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let err = emit_figure_data::<f64, _>(&cohort, Figure::ExecutionDistances, 5, &MatchDistance, dir.path(), None, &[])
            .unwrap_err();
        assert!(matches!(err, Error::MissingSession(6)), "{err}");
    }

    #[test]
    fn figure_names() {
        for f in [Figure::AccuracyCurves, Figure::ExecutionDistances, Figure::SessionDistances] {
            assert_eq!(f.as_str().parse::<Figure>().unwrap(), f);
        }
        assert!("fig5".parse::<Figure>().is_err());
    }
}
