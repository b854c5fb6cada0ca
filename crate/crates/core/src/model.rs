//! Domain types for training data: trials, sessions, training sequences and cohorts.
//!
//! A training sequence for one individual is a list of sessions; a session is a
//! list of trials; a trial is a `(stimulus, response, outcome)` triple.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Accuracy a session must reach to count towards the success criterion.
pub const DEFAULT_SUCCESS_THRESHOLD: f64 = 0.70;
/// Number of consecutive sessions that must reach the threshold.
pub const DEFAULT_SUCCESS_WINDOW: usize = 3;

/// Prefix for individuals produced by the simulator.
pub const SIM_PREFIX: &str = "sim:";
/// Prefix for individuals imported from real-animal logs.
pub const REAL_PREFIX: &str = "real:";

/// Gustatory stimulus presented at the start of a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stimulus {
    /// 100mM sucrose.
    Sweet,
    /// 55% sucrose / 45% NaCl.
    #[serde(rename = "sweet_55")]
    Sweet55,
    /// 45% sucrose / 55% NaCl.
    #[serde(rename = "salt_55")]
    Salt55,
    /// 100mM NaCl.
    Salt,
}

/// Which spout a stimulus is rewarded at is decided by its category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Category {
    Sweet,
    Salt,
}

impl Stimulus {
    pub const ALL: [Stimulus; 4] = [
        Stimulus::Sweet,
        Stimulus::Sweet55,
        Stimulus::Salt55,
        Stimulus::Salt,
    ];

    /// The two pure stimuli used before mixtures are introduced.
    pub const PURE: [Stimulus; 2] = [Stimulus::Sweet, Stimulus::Salt];

    pub fn category(self) -> Category {
        match self {
            Stimulus::Sweet | Stimulus::Sweet55 => Category::Sweet,
            Stimulus::Salt | Stimulus::Salt55 => Category::Salt,
        }
    }

    /// Dense index in `0..4`, in the order of [`Stimulus::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Stimulus> {
        Stimulus::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stimulus::Sweet => "sweet",
            Stimulus::Sweet55 => "sweet_55",
            Stimulus::Salt55 => "salt_55",
            Stimulus::Salt => "salt",
        }
    }
}

impl fmt::Display for Stimulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stimulus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sweet" => Ok(Stimulus::Sweet),
            "sweet_55" => Ok(Stimulus::Sweet55),
            "salt_55" => Ok(Stimulus::Salt55),
            "salt" => Ok(Stimulus::Salt),
            other => Err(Error::Domain(format!("unknown stimulus {other:?}"))),
        }
    }
}

/// Licking response of the animal; also the agent's action set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Response {
    Left,
    Right,
    None,
}

/// The agent's actions are the responses.
pub type Action = Response;

impl Response {
    pub const ALL: [Response; 3] = [Response::Left, Response::Right, Response::None];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Response> {
        Response::ALL.get(i).copied()
    }

    /// The other lateral spout. `None` maps to itself.
    pub fn opposite(self) -> Response {
        match self {
            Response::Left => Response::Right,
            Response::Right => Response::Left,
            Response::None => Response::None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Response::Left => "left",
            Response::Right => "right",
            Response::None => "none",
        }
    }
}

impl fmt::Display for Response {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Response {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "left" => Ok(Response::Left),
            "right" => Ok(Response::Right),
            "none" => Ok(Response::None),
            other => Err(Error::Domain(format!("unknown response {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Correct,
    Incorrect,
}

impl Outcome {
    pub fn is_correct(self) -> bool {
        self == Outcome::Correct
    }

    /// +1 for correct, -1 for incorrect.
    pub fn reward<T: Scalar>(self) -> T {
        match self {
            Outcome::Correct => T::one(),
            Outcome::Incorrect => -T::one(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Correct => "correct",
            Outcome::Incorrect => "incorrect",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "correct" => Ok(Outcome::Correct),
            "incorrect" => Ok(Outcome::Incorrect),
            other => Err(Error::Domain(format!("unknown outcome {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Trial {
    pub stimulus: Stimulus,
    pub response: Response,
    pub outcome: Outcome,
}

impl Trial {
    pub fn new(stimulus: Stimulus, response: Response, outcome: Outcome) -> Self {
        Trial {
            stimulus,
            response,
            outcome,
        }
    }
}

/// One day of training: an ordered, non-empty list of trials with a 1-based index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub index: u32,
    pub trials: Vec<Trial>,
}

impl Session {
    pub fn new(index: u32, trials: Vec<Trial>) -> Result<Self> {
        if index == 0 {
            return Err(Error::Domain("session index is 1-based".into()));
        }
        if trials.is_empty() {
            return Err(Error::Domain(format!("session {index} has no trials")));
        }
        Ok(Session { index, trials })
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    /// Outcomes in trial order.
    pub fn outcomes(&self) -> impl ExactSizeIterator<Item = Outcome> + '_ {
        self.trials.iter().map(|t| t.outcome)
    }

    pub fn correct_count(&self) -> usize {
        self.outcomes().filter(|o| o.is_correct()).count()
    }

    pub fn accuracy<T: Scalar>(&self) -> Result<T> {
        accuracy(self)
    }
}

/// Fraction of trials in `session` with a correct outcome.
pub fn accuracy<T: Scalar>(session: &Session) -> Result<T> {
    if session.trials.is_empty() {
        return Err(Error::Domain(format!(
            "accuracy of empty session {}",
            session.index
        )));
    }
    Ok(T::from_count(session.correct_count()) / T::from_count(session.len()))
}

/// 1-based index of the entry closing the first run of `window` consecutive
/// accuracies that are all `>= threshold`.
pub fn first_success<T: Scalar>(accuracies: &[T], threshold: T, window: usize) -> Option<usize> {
    if window == 0 {
        return None;
    }
    let mut run = 0;
    for (i, &a) in accuracies.iter().enumerate() {
        if a >= threshold {
            run += 1;
            if run >= window {
                return Some(i + 1);
            }
        } else {
            run = 0;
        }
    }
    None
}

/// True iff `accuracies` contains `window` consecutive entries each `>= threshold`.
pub fn check_success<T: Scalar>(accuracies: &[T], threshold: T, window: usize) -> bool {
    first_success(accuracies, threshold, window).is_some()
}

/// All sessions of one individual.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingSequence {
    pub individual_id: String,
    pub sessions: Vec<Session>,
    pub trained: bool,
    pub sessions_to_criterion: Option<u32>,
}

impl TrainingSequence {
    /// Builds a sequence and derives `trained`/`sessions_to_criterion` from the
    /// session accuracies.
    pub fn from_sessions<T: Scalar>(
        individual_id: impl Into<String>,
        sessions: Vec<Session>,
        threshold: T,
        window: usize,
    ) -> Result<Self> {
        let accuracies = sessions
            .iter()
            .map(accuracy::<T>)
            .collect::<Result<Vec<_>>>()?;
        let stc = first_success(&accuracies, threshold, window).map(|i| sessions[i - 1].index);
        let seq = TrainingSequence {
            individual_id: individual_id.into(),
            sessions,
            trained: stc.is_some(),
            sessions_to_criterion: stc,
        };
        seq.check_indices()?;
        Ok(seq)
    }

    /// Sequence without a training verdict, as produced by importing a log.
    pub fn untrained(individual_id: impl Into<String>, sessions: Vec<Session>) -> Result<Self> {
        let seq = TrainingSequence {
            individual_id: individual_id.into(),
            sessions,
            trained: false,
            sessions_to_criterion: None,
        };
        seq.check_indices()?;
        Ok(seq)
    }

    fn check_indices(&self) -> Result<()> {
        for (i, s) in self.sessions.iter().enumerate() {
            if s.index as usize != i + 1 {
                return Err(Error::Integrity(format!(
                    "{}: session at position {} has index {}, expected {}",
                    self.individual_id,
                    i + 1,
                    s.index,
                    i + 1
                )));
            }
            if s.trials.is_empty() {
                return Err(Error::Integrity(format!(
                    "{}: session {} is empty",
                    self.individual_id, s.index
                )));
            }
        }
        if !self.trained && self.sessions_to_criterion.is_some() {
            return Err(Error::Integrity(format!(
                "{}: sessions_to_criterion set on an untrained sequence",
                self.individual_id
            )));
        }
        Ok(())
    }

    pub fn session(&self, index: u32) -> Option<&Session> {
        index
            .checked_sub(1)
            .and_then(|i| self.sessions.get(i as usize))
            .filter(|s| s.index == index)
    }

    pub fn accuracies<T: Scalar>(&self) -> Result<Vec<T>> {
        self.sessions.iter().map(accuracy::<T>).collect()
    }
}

/// A group of individuals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cohort {
    pub members: Vec<TrainingSequence>,
}

impl Cohort {
    pub fn new(members: Vec<TrainingSequence>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Domain("cohort needs at least one member".into()));
        }
        if let Some(m) = members.iter().find(|m| m.sessions.is_empty()) {
            return Err(Error::Domain(format!(
                "cohort member {} has no sessions",
                m.individual_id
            )));
        }
        Ok(Cohort { members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn member(&self, id: &str) -> Option<&TrainingSequence> {
        self.members.iter().find(|m| m.individual_id == id)
    }

    /// Session `index` of every member that has it, in member order.
    pub fn sessions_at(&self, index: u32) -> Vec<&Session> {
        self.members.iter().filter_map(|m| m.session(index)).collect()
    }

    /// Largest session index present in any member.
    pub fn max_session_index(&self) -> u32 {
        self.members
            .iter()
            .filter_map(|m| m.sessions.last())
            .map(|s| s.index)
            .max()
            .unwrap_or(0)
    }
}

/// Id for the `n`-th simulated execution.
pub fn sim_id(execution: usize) -> String {
    format!("{SIM_PREFIX}exec-{execution:04}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session_from(outcomes: &[Outcome]) -> Session {
        let trials = outcomes
            .iter()
            .map(|&o| Trial::new(Stimulus::Sweet, Response::Left, o))
            .collect();
        Session::new(1, trials).unwrap()
    }

    use Outcome::{Correct as C, Incorrect as I};

    #[test]
    fn category_projection() {
        assert_eq!(Stimulus::Sweet.category(), Category::Sweet);
        assert_eq!(Stimulus::Sweet55.category(), Category::Sweet);
        assert_eq!(Stimulus::Salt55.category(), Category::Salt);
        assert_eq!(Stimulus::Salt.category(), Category::Salt);
        for (i, s) in Stimulus::ALL.iter().enumerate() {
            assert_eq!(s.index(), i);
            assert_eq!(Stimulus::from_index(i), Some(*s));
            assert_eq!(s.as_str().parse::<Stimulus>().unwrap(), *s);
        }
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy::<f64>(&session_from(&[C; 10])).unwrap(), 1.0);
        assert_eq!(accuracy::<f64>(&session_from(&[C, C, I, C])).unwrap(), 0.75);
        let empty = Session {
            index: 1,
            trials: vec![],
        };
        assert!(matches!(accuracy::<f64>(&empty), Err(Error::Domain(_))));
        assert!(Session::new(1, vec![]).is_err());
        assert!(Session::new(0, vec![Trial::new(Stimulus::Salt, Response::Right, C)]).is_err());
    }

    #[test]
    fn success_examples() {
        assert!(check_success(&[0.70, 0.72, 0.71], 0.70, 3));
        assert!(!check_success(&[0.9, 0.69, 0.9, 0.9], 0.70, 3));
        assert!(check_success(&[0.2, 0.71, 0.71, 0.71], 0.70, 3));
        assert_eq!(first_success(&[0.2, 0.71, 0.71, 0.71], 0.70, 3), Some(4));
        assert!(!check_success::<f64>(&[], 0.70, 3));
    }

    #[test]
    fn training_sequence_derives_criterion() {
        let good = session_from(&[C, C, C, I]);
        let bad = session_from(&[I, I, C, I]);
        let sessions: Vec<Session> = [&bad, &good, &good, &good, &bad]
            .iter()
            .enumerate()
            .map(|(i, s)| Session::new(i as u32 + 1, s.trials.clone()).unwrap())
            .collect();
        let seq = TrainingSequence::from_sessions("sim:x", sessions.clone(), 0.70, 3).unwrap();
        assert!(seq.trained);
        assert_eq!(seq.sessions_to_criterion, Some(4));

        let seq = TrainingSequence::from_sessions("sim:x", sessions[..3].to_vec(), 0.70, 3).unwrap();
        assert!(!seq.trained);
        assert_eq!(seq.sessions_to_criterion, None);

        let mut gapped = sessions.clone();
        gapped.remove(1);
        assert!(matches!(
            TrainingSequence::untrained("real:a", gapped),
            Err(Error::Integrity(_))
        ));
    }

    #[test]
    fn cohort_rejects_empty() {
        assert!(Cohort::new(vec![]).is_err());
        let seq = TrainingSequence::untrained("real:a", vec![]).unwrap();
        assert!(Cohort::new(vec![seq]).is_err());
    }
}
