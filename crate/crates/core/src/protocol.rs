//! The training environment: stimulus sequences, judging, sessions and trainings.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{Agent, AgentConfig, QTable};
use crate::error::{Error, Result};
use crate::model::{
    accuracy, first_success, Outcome, Response, Session, Stimulus, TrainingSequence, Trial,
    DEFAULT_SUCCESS_THRESHOLD, DEFAULT_SUCCESS_WINDOW, SIM_PREFIX,
};
use crate::scalar::Scalar;

/// When mixtures join the pure stimuli.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseSwitch {
    /// Switch to all four stimuli after the first session whose accuracy
    /// reaches `success_threshold`.
    #[default]
    SessionAccuracy,
    /// Keep `phase_stimuli` for the whole training.
    Never,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig<T> {
    /// Longest allowed run of identical consecutive stimuli.
    pub max_run_length: usize,
    pub trials_per_session: usize,
    /// Stimuli presented in the first curriculum phase.
    pub phase_stimuli: Vec<Stimulus>,
    /// Spout rewarded for sweet-category stimuli; salt-category uses the other one.
    pub sweet_target: Response,
    pub phase_switch: PhaseSwitch,
    pub success_threshold: T,
    pub success_window: usize,
    pub max_sessions: u32,
}

impl<T: Scalar> Default for ProtocolConfig<T> {
    fn default() -> Self {
        ProtocolConfig {
            max_run_length: 3,
            trials_per_session: 150,
            phase_stimuli: Stimulus::PURE.to_vec(),
            sweet_target: Response::Left,
            phase_switch: PhaseSwitch::SessionAccuracy,
            success_threshold: T::lit(DEFAULT_SUCCESS_THRESHOLD),
            success_window: DEFAULT_SUCCESS_WINDOW,
            max_sessions: 100,
        }
    }
}

impl<T: Scalar> ProtocolConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.max_run_length == 0 {
            return Err(Error::Config("max_run_length must be >= 1".into()));
        }
        if self.trials_per_session == 0 {
            return Err(Error::Config("trials_per_session must be >= 1".into()));
        }
        if self.phase_stimuli.is_empty() {
            return Err(Error::Config("phase_stimuli must not be empty".into()));
        }
        if self.sweet_target == Response::None {
            return Err(Error::Config("sweet_target must be left or right".into()));
        }
        if !(self.success_threshold >= T::zero() && self.success_threshold <= T::one()) {
            return Err(Error::Config(format!(
                "success_threshold must be in [0, 1], got {}",
                self.success_threshold
            )));
        }
        if self.success_window == 0 {
            return Err(Error::Config("success_window must be >= 1".into()));
        }
        if self.max_sessions == 0 {
            return Err(Error::Config("max_sessions must be >= 1".into()));
        }
        Ok(())
    }

    fn distinct_stimuli(&self) -> Vec<Stimulus> {
        let mut set = self.phase_stimuli.clone();
        set.sort();
        set.dedup();
        set
    }
}

/// Draws `length` stimuli uniformly from the phase set, never letting a run of
/// identical stimuli exceed `max_run_length`. After a maximal run the next
/// draw is uniform over the remaining stimuli.
pub fn generate_stimulus_sequence<T: Scalar, R: Rng + ?Sized>(
    config: &ProtocolConfig<T>,
    length: usize,
    rng: &mut R,
) -> Result<Vec<Stimulus>> {
    if length == 0 {
        return Err(Error::Domain("sequence length must be >= 1".into()));
    }
    let stimuli = config.distinct_stimuli();
    if stimuli.is_empty() {
        return Err(Error::Config("phase_stimuli must not be empty".into()));
    }
    if config.max_run_length == 0 {
        return Err(Error::Config("max_run_length must be >= 1".into()));
    }
    if stimuli.len() == 1 && length > config.max_run_length {
        return Err(Error::InfeasibleConstraint(format!(
            "{length} stimuli from the single stimulus {} with runs of at most {}",
            stimuli[0], config.max_run_length
        )));
    }

    let mut out = Vec::with_capacity(length);
    let mut run = 0usize;
    for _ in 0..length {
        let next = match out.last() {
            Some(&prev) if run >= config.max_run_length => {
                let others: Vec<Stimulus> = stimuli.iter().copied().filter(|s| *s != prev).collect();
                *others.choose(rng).unwrap()
            }
            _ => *stimuli.choose(rng).unwrap(),
        };
        run = if out.last() == Some(&next) { run + 1 } else { 1 };
        out.push(next);
    }
    Ok(out)
}

/// The rewarded spout for `stimulus`.
pub fn target_response(stimulus: Stimulus, sweet_target: Response) -> Response {
    match stimulus.category() {
        crate::model::Category::Sweet => sweet_target,
        crate::model::Category::Salt => sweet_target.opposite(),
    }
}

/// Correct iff the response is the rewarded spout; `none` is never correct.
pub fn judge<T>(stimulus: Stimulus, response: Response, config: &ProtocolConfig<T>) -> Outcome {
    if response != Response::None && response == target_response(stimulus, config.sweet_target) {
        Outcome::Correct
    } else {
        Outcome::Incorrect
    }
}

/// Runs one session with the exploration rate scheduled for `session_index`.
pub fn run_session<T: Scalar, R: Rng + ?Sized>(
    agent: &mut Agent<T>,
    config: &ProtocolConfig<T>,
    session_index: u32,
    rng: &mut R,
) -> Result<Session> {
    let eps = agent.epsilon(session_index)?;
    run_session_with_epsilon(agent, config, session_index, eps, rng)
}

/// Runs one session at a fixed exploration rate.
pub fn run_session_with_epsilon<T: Scalar, R: Rng + ?Sized>(
    agent: &mut Agent<T>,
    config: &ProtocolConfig<T>,
    session_index: u32,
    eps: T,
    rng: &mut R,
) -> Result<Session> {
    if session_index < 1 {
        return Err(Error::Domain("session index is 1-based".into()));
    }
    let stimuli = generate_stimulus_sequence(config, config.trials_per_session, rng)?;
    let mut trials = Vec::with_capacity(stimuli.len());
    for stimulus in stimuli {
        let trial = match agent.observe(stimulus)? {
            Some(_) => {
                let action = agent.act(eps, rng)?;
                let outcome = judge(stimulus, action, config);
                agent.reward(action, outcome.reward())?;
                Trial::new(stimulus, action, outcome)
            }
            None => Trial::new(stimulus, Response::None, judge(stimulus, Response::None, config)),
        };
        trials.push(trial);
    }
    Session::new(session_index, trials)
}

/// How many sessions a training runs for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionPlan {
    /// Until the success criterion fires or `max_sessions` is reached.
    UntilSuccess,
    /// Exactly `sessions` sessions. Unless `stop_on_success` is set, training
    /// continues past success with exploration frozen at its value for the
    /// session that met the criterion.
    Fixed { sessions: u32, stop_on_success: bool },
    /// Session `j` is run by a fresh agent at `eps(j)`; nothing carries over.
    FreshPerSession { sessions: u32 },
}

/// A finished training plus the learned table.
#[derive(Debug, Clone)]
pub struct TrainingRun<T> {
    pub sequence: TrainingSequence,
    pub qtable: QTable<T>,
}

/// Id given to the training started from `seed` by [`run_training`].
pub fn seed_id(seed: u64) -> String {
    format!("{SIM_PREFIX}seed-{seed}")
}

/// Trains a fresh agent from `seed` until success or `max_sessions`.
pub fn run_training<T: Scalar>(
    config: &ProtocolConfig<T>,
    agent_config: &AgentConfig<T>,
    seed: u64,
) -> Result<TrainingSequence> {
    train(
        seed_id(seed),
        config,
        agent_config,
        seed,
        SessionPlan::UntilSuccess,
    )
    .map(|run| run.sequence)
}

/// General training driver; all randomness comes from a ChaCha8 stream seeded
/// with `seed`.
pub fn train<T: Scalar>(
    individual_id: impl Into<String>,
    config: &ProtocolConfig<T>,
    agent_config: &AgentConfig<T>,
    seed: u64,
    plan: SessionPlan,
) -> Result<TrainingRun<T>> {
    config.validate()?;
    agent_config.validate()?;
    let individual_id = individual_id.into();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    if let SessionPlan::FreshPerSession { sessions } = plan {
        let mut agent = Agent::new(agent_config.clone())?;
        let mut phase = config.clone();
        let mut out = Vec::new();
        for j in 1..=sessions {
            if j > 1 {
                agent = Agent::new(agent_config.clone())?;
            }
            let session = run_session(&mut agent, &phase, j, &mut rng)?;
            advance_phase(&mut phase, &session)?;
            out.push(session);
        }
        let sequence = TrainingSequence::from_sessions(
            individual_id,
            out,
            config.success_threshold,
            config.success_window,
        )?;
        return Ok(TrainingRun {
            sequence,
            qtable: agent.qtable().clone(),
        });
    }

    let (limit, stop_on_success) = match plan {
        SessionPlan::UntilSuccess => (config.max_sessions, true),
        SessionPlan::Fixed {
            sessions,
            stop_on_success,
        } => (sessions, stop_on_success),
        SessionPlan::FreshPerSession { .. } => unreachable!(),
    };

    let mut agent = Agent::new(agent_config.clone())?;
    let mut phase = config.clone();
    let mut sessions = Vec::new();
    let mut accuracies: Vec<T> = Vec::new();
    let mut frozen_eps: Option<T> = None;

    for j in 1..=limit {
        let session = match frozen_eps {
            Some(eps) => run_session_with_epsilon(&mut agent, &phase, j, eps, &mut rng)?,
            None => run_session(&mut agent, &phase, j, &mut rng)?,
        };
        accuracies.push(accuracy(&session)?);
        advance_phase(&mut phase, &session)?;
        sessions.push(session);

        if frozen_eps.is_none() {
            if let Some(done) = first_success(&accuracies, config.success_threshold, config.success_window) {
                if stop_on_success {
                    break;
                }
                frozen_eps = Some(agent.epsilon(done as u32)?);
            }
        }
    }

    let sequence = TrainingSequence::from_sessions(
        individual_id,
        sessions,
        config.success_threshold,
        config.success_window,
    )?;
    Ok(TrainingRun {
        sequence,
        qtable: agent.qtable().clone(),
    })
}

fn advance_phase<T: Scalar>(phase: &mut ProtocolConfig<T>, session: &Session) -> Result<()> {
    if phase.phase_switch == PhaseSwitch::SessionAccuracy
        && phase.distinct_stimuli().len() < Stimulus::ALL.len()
        && accuracy::<T>(session)? >= phase.success_threshold
    {
        phase.phase_stimuli = Stimulus::ALL.to_vec();
    }
    Ok(())
}
