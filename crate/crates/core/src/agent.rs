//! The artificial rodent: tabular Q-learning over the last `k` stimuli.
//!
//! Exploration follows a per-session schedule `eps_start + exp(-rate * j) - 1`
//! clamped to `[0, 1]`. When exploiting, the agent samples from a softmax over
//! the Q-row of the current state rather than taking the arg-max.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Action, Stimulus};
use crate::scalar::Scalar;

/// Largest supported state window; the table is dense with `4^k` rows.
pub const MAX_WINDOW: usize = 10;

/// How the first trials are handled before `k` stimuli have been seen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarmUp {
    /// Fill the window with `k` copies of the first stimulus and act from trial 1.
    #[default]
    Prefill,
    /// Stay silent (response `none`) for the first `k - 1` trials of a training.
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig<T> {
    /// Number of most recent stimuli forming a state.
    pub k: usize,
    pub alpha: T,
    pub gamma: T,
    pub eps_start: T,
    pub eps_decay_rate: T,
    pub q_init: T,
    pub warmup: WarmUp,
}

impl<T: Scalar> Default for AgentConfig<T> {
    fn default() -> Self {
        AgentConfig {
            k: 3,
            alpha: T::lit(0.2),
            gamma: T::one(),
            eps_start: T::lit(0.8),
            eps_decay_rate: T::lit(0.025),
            q_init: T::zero(),
            warmup: WarmUp::Prefill,
        }
    }
}

impl<T: Scalar> AgentConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > MAX_WINDOW {
            return Err(Error::Config(format!(
                "k must be in 1..={MAX_WINDOW}, got {}",
                self.k
            )));
        }
        if !(self.alpha > T::zero() && self.alpha <= T::one()) {
            return Err(Error::Config(format!("alpha must be in (0, 1], got {}", self.alpha)));
        }
        if !(self.gamma >= T::zero() && self.gamma <= T::one()) {
            return Err(Error::Config(format!("gamma must be in [0, 1], got {}", self.gamma)));
        }
        if !(self.eps_start >= T::zero() && self.eps_start <= T::one()) {
            return Err(Error::Config(format!(
                "eps_start must be in [0, 1], got {}",
                self.eps_start
            )));
        }
        if !self.eps_decay_rate.is_finite() || self.eps_decay_rate < T::zero() {
            return Err(Error::Config(format!(
                "eps_decay_rate must be finite and non-negative, got {}",
                self.eps_decay_rate
            )));
        }
        if !self.q_init.is_finite() {
            return Err(Error::Config("q_init must be finite".into()));
        }
        Ok(())
    }
}

/// Exploration probability at the start of session `j` (1-based).
pub fn epsilon_for_session<T: Scalar>(j: u32, config: &AgentConfig<T>) -> Result<T> {
    if j < 1 {
        return Err(Error::Domain("session index is 1-based".into()));
    }
    let raw = config.eps_start + (-config.eps_decay_rate * T::from(j).unwrap()).exp() - T::one();
    Ok(raw.max(T::zero()).min(T::one()))
}

/// Softmax over a Q-row, with the row maximum subtracted before exponentiating.
pub fn action_distribution<T: Scalar>(q_row: [T; 3]) -> Result<[T; 3]> {
    if q_row.iter().any(|q| !q.is_finite()) {
        return Err(Error::Domain(format!("non-finite Q-row {q_row:?}")));
    }
    let max = q_row.iter().copied().fold(T::neg_infinity(), T::max);
    let exps = q_row.map(|q| (q - max).exp());
    let total = exps[0] + exps[1] + exps[2];
    Ok(exps.map(|e| e / total))
}

/// The last `k` stimuli, most recent last.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct State {
    window: Vec<Stimulus>,
}

impl State {
    pub fn new(window: Vec<Stimulus>) -> Result<Self> {
        if window.is_empty() || window.len() > MAX_WINDOW {
            return Err(Error::Domain(format!(
                "state window length must be in 1..={MAX_WINDOW}, got {}",
                window.len()
            )));
        }
        Ok(State { window })
    }

    /// `k` copies of `stimulus`.
    pub fn filled(stimulus: Stimulus, k: usize) -> Result<Self> {
        State::new(vec![stimulus; k])
    }

    pub fn k(&self) -> usize {
        self.window.len()
    }

    pub fn stimuli(&self) -> &[Stimulus] {
        &self.window
    }

    /// Dense row index in `0..4^k`: the window read as base-4 digits, oldest first.
    pub fn index(&self) -> usize {
        self.window.iter().fold(0, |acc, s| acc * 4 + s.index())
    }

    pub fn from_index(mut index: usize, k: usize) -> Result<Self> {
        let mut window = vec![Stimulus::Sweet; k];
        for slot in window.iter_mut().rev() {
            *slot = Stimulus::from_index(index % 4).unwrap();
            index /= 4;
        }
        if index != 0 {
            return Err(Error::Domain(format!("state index out of range for k={k}")));
        }
        State::new(window)
    }
}

/// Shifts the window: drops the oldest stimulus and appends `stimulus`.
pub fn push_stimulus(state: &State, stimulus: Stimulus) -> State {
    let mut window = Vec::with_capacity(state.k());
    window.extend_from_slice(&state.window[1..]);
    window.push(stimulus);
    State { window }
}

/// Action values for every `(state, action)` pair, dense over the `4^k` states.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable<T> {
    k: usize,
    q_init: T,
    rows: Vec<[T; 3]>,
}

impl<T: Scalar> QTable<T> {
    pub fn new(k: usize, q_init: T) -> Result<Self> {
        if k == 0 || k > MAX_WINDOW {
            return Err(Error::Domain(format!("k must be in 1..={MAX_WINDOW}")));
        }
        if !q_init.is_finite() {
            return Err(Error::Domain("q_init must be finite".into()));
        }
        Ok(QTable {
            k,
            q_init,
            rows: vec![[q_init; 3]; 4usize.pow(k as u32)],
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn q_init(&self) -> T {
        self.q_init
    }

    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    fn slot(&self, state: &State) -> usize {
        assert_eq!(state.k(), self.k, "state window does not match table");
        state.index()
    }

    pub fn row(&self, state: &State) -> [T; 3] {
        self.rows[self.slot(state)]
    }

    pub fn get(&self, state: &State, action: Action) -> T {
        self.row(state)[action.index()]
    }

    pub fn set(&mut self, state: &State, action: Action, value: T) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::Domain(format!("non-finite Q-value {value}")));
        }
        let slot = self.slot(state);
        self.rows[slot][action.index()] = value;
        Ok(())
    }

    pub fn max_value(&self, state: &State) -> T {
        let row = self.row(state);
        row[0].max(row[1]).max(row[2])
    }

    /// Rows that differ from the initial value, in state-index order.
    pub fn touched(&self) -> impl Iterator<Item = (State, [T; 3])> + '_ {
        let init = [self.q_init; 3];
        self.rows
            .iter()
            .enumerate()
            .filter(move |(_, r)| **r != init)
            .map(move |(i, r)| (State::from_index(i, self.k).unwrap(), *r))
    }
}

/// Samples an action: uniform with probability `eps`, otherwise from the
/// softmax of the state's Q-row.
pub fn select_action<T: Scalar, R: Rng + ?Sized>(
    state: &State,
    eps: T,
    qtable: &QTable<T>,
    rng: &mut R,
) -> Action {
    let explore: f64 = rng.gen();
    if T::lit(explore) < eps {
        return Action::from_index(rng.gen_range(0..3)).unwrap();
    }
    let pmf = action_distribution(qtable.row(state)).expect("Q-table values are finite");
    let u = T::lit(rng.gen::<f64>());
    let mut acc = T::zero();
    for (i, p) in pmf.iter().enumerate() {
        acc = acc + *p;
        if u < acc {
            return Action::from_index(i).unwrap();
        }
    }
    // u landed in the rounding gap above the cumulative sum.
    pmf.iter()
        .rposition(|p| *p > T::zero())
        .and_then(Action::from_index)
        .unwrap()
}

/// One-step Q-learning update of `q(s, a)` towards `r + gamma * max q(s', .)`.
/// Returns the new value.
pub fn q_update<T: Scalar>(
    qtable: &mut QTable<T>,
    s: &State,
    a: Action,
    r: T,
    s_next: &State,
    config: &AgentConfig<T>,
) -> Result<T> {
    let old = qtable.get(s, a);
    let max_next = qtable.max_value(s_next);
    let new = old + config.alpha * (r + config.gamma * max_next - old);
    qtable.set(s, a, new)?;
    debug_assert_eq!(
        qtable.get(s, a),
        old + config.alpha * (r + config.gamma * max_next - old)
    );
    Ok(new)
}

/// A learning agent: its Q-table, the current state window and the transition
/// still waiting for its successor state.
#[derive(Debug, Clone)]
pub struct Agent<T> {
    config: AgentConfig<T>,
    qtable: QTable<T>,
    state: Option<State>,
    warmup_buffer: Vec<Stimulus>,
    pending: Option<(State, Action, T)>,
}

impl<T: Scalar> Agent<T> {
    pub fn new(config: AgentConfig<T>) -> Result<Self> {
        config.validate()?;
        let qtable = QTable::new(config.k, config.q_init)?;
        Ok(Agent {
            config,
            qtable,
            state: None,
            warmup_buffer: Vec::new(),
            pending: None,
        })
    }

    /// Agent resuming from an existing table.
    pub fn with_qtable(config: AgentConfig<T>, qtable: QTable<T>) -> Result<Self> {
        config.validate()?;
        if qtable.k() != config.k {
            return Err(Error::Config(format!(
                "Q-table has k={}, config has k={}",
                qtable.k(),
                config.k
            )));
        }
        Ok(Agent {
            config,
            qtable,
            state: None,
            warmup_buffer: Vec::new(),
            pending: None,
        })
    }

    pub fn config(&self) -> &AgentConfig<T> {
        &self.config
    }

    pub fn qtable(&self) -> &QTable<T> {
        &self.qtable
    }

    pub fn state(&self) -> Option<&State> {
        self.state.as_ref()
    }

    pub fn epsilon(&self, session_index: u32) -> Result<T> {
        epsilon_for_session(session_index, &self.config)
    }

    /// Feeds the next stimulus. Completes the pending update, whose successor
    /// state is the new window, and returns the state to act in. Returns `None`
    /// while the window is still warming up.
    pub fn observe(&mut self, stimulus: Stimulus) -> Result<Option<State>> {
        let next = match (&self.state, self.config.warmup) {
            (Some(s), _) => push_stimulus(s, stimulus),
            (None, WarmUp::Prefill) => State::filled(stimulus, self.config.k)?,
            (None, WarmUp::Skip) => {
                self.warmup_buffer.push(stimulus);
                if self.warmup_buffer.len() < self.config.k {
                    return Ok(None);
                }
                State::new(std::mem::take(&mut self.warmup_buffer))?
            }
        };
        if let Some((s, a, r)) = self.pending.take() {
            q_update(&mut self.qtable, &s, a, r, &next, &self.config)?;
        }
        self.state = Some(next.clone());
        Ok(Some(next))
    }

    pub fn act<R: Rng + ?Sized>(&self, eps: T, rng: &mut R) -> Result<Action> {
        let state = self
            .state
            .as_ref()
            .ok_or_else(|| Error::Domain("agent has no state yet".into()))?;
        Ok(select_action(state, eps, &self.qtable, rng))
    }

    /// Records the reward for `action` taken in the current state. The update
    /// is applied on the next [`Agent::observe`].
    pub fn reward(&mut self, action: Action, reward: T) -> Result<()> {
        let state = self
            .state
            .clone()
            .ok_or_else(|| Error::Domain("reward before any state".into()))?;
        self.pending = Some((state, action, reward));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Stimulus::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> AgentConfig<f64> {
        AgentConfig::default()
    }

    #[test]
    fn epsilon_examples() {
        let e1 = epsilon_for_session(1, &cfg()).unwrap();
        assert!((e1 - 0.7753099).abs() < 1e-6, "{e1}");
        assert_eq!(e1, 0.8 + (-0.025f64).exp() - 1.0);
        assert_eq!(epsilon_for_session(200, &cfg()).unwrap(), 0.0);
        assert!(epsilon_for_session(0, &cfg()).is_err());
        let full = AgentConfig {
            eps_start: 1.0,
            ..cfg()
        };
        for j in [1u32, 10, 100, 1000] {
            let e = epsilon_for_session(j, &full).unwrap();
            assert!((e - (-0.025 * j as f64).exp()).abs() < 1e-15);
            assert!(e > 0.0 && e < 1.0);
        }
    }

    #[test]
    fn epsilon_zero_from_closed_form_threshold() {
        let c = cfg();
        let j0 = ((1.0 / (1.0 - c.eps_start)).ln() / c.eps_decay_rate).ceil() as u32;
        assert_eq!(j0, 65);
        assert!(epsilon_for_session(j0 - 1, &c).unwrap() > 0.0);
        for j in j0..j0 + 100 {
            assert_eq!(epsilon_for_session(j, &c).unwrap(), 0.0);
        }
    }

    #[test]
    fn softmax_examples() {
        let u = action_distribution([0.0f64, 0.0, 0.0]).unwrap();
        for p in u {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
        let e = std::f64::consts::E;
        let p = action_distribution([1.0f64, 0.0, 0.0]).unwrap();
        let want = [e / (e + 2.0), 1.0 / (e + 2.0), 1.0 / (e + 2.0)];
        for (a, b) in p.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((p[0] - 0.576117).abs() < 1e-6);
        assert!((p[1] - 0.211942).abs() < 1e-6);
        let shifted = action_distribution([1001.0f64, 1000.0, 1000.0]).unwrap();
        for (a, b) in p.iter().zip(shifted) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(action_distribution([f64::NAN, 0.0, 0.0]).is_err());
        assert!(action_distribution([f64::INFINITY, 0.0, 0.0]).is_err());
    }

    #[test]
    fn q_update_examples() {
        let c = cfg();
        let s = State::new(vec![Sweet, Salt, Sweet]).unwrap();
        let s2 = State::new(vec![Salt, Sweet, Salt]).unwrap();
        let mut q = QTable::new(3, 0.0).unwrap();
        assert_eq!(q_update(&mut q, &s, Action::Left, 1.0, &s2, &c).unwrap(), 0.2);

        let mut q = QTable::new(3, 0.0).unwrap();
        q.set(&s, Action::Left, 0.2).unwrap();
        q.set(&s2, Action::Right, 0.2).unwrap();
        assert_eq!(q_update(&mut q, &s, Action::Left, -1.0, &s2, &c).unwrap(), 0.0);

        let frozen = AgentConfig { alpha: 0.0, ..c };
        let mut q = QTable::new(3, 0.0).unwrap();
        q.set(&s, Action::None, 0.7).unwrap();
        // alpha = 0 is rejected by validate() but the update itself is the identity.
        assert_eq!(q_update(&mut q, &s, Action::None, 1.0, &s2, &frozen).unwrap(), 0.7);
    }

    #[test]
    fn q_update_touches_one_entry() {
        let c = cfg();
        let mut q = QTable::new(2, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for i in 0..q.num_states() {
            for a in Action::ALL {
                q.set(&State::from_index(i, 2).unwrap(), a, rng.gen_range(-3.0..3.0))
                    .unwrap();
            }
        }
        let before = q.clone();
        let s = State::new(vec![Salt55, Sweet]).unwrap();
        let s2 = State::new(vec![Sweet, Sweet55]).unwrap();
        q_update(&mut q, &s, Action::Right, 1.0, &s2, &c).unwrap();
        let mut changed = 0;
        for i in 0..q.num_states() {
            let st = State::from_index(i, 2).unwrap();
            for a in Action::ALL {
                if q.get(&st, a).to_bits() != before.get(&st, a).to_bits() {
                    changed += 1;
                    assert_eq!((st.clone(), a), (s.clone(), Action::Right));
                }
            }
        }
        assert_eq!(changed, 1);
    }

    #[test]
    fn push_examples() {
        let s = State::new(vec![Sweet, Salt, Sweet]).unwrap();
        assert_eq!(push_stimulus(&s, Salt).stimuli(), &[Salt, Sweet, Salt]);
        let mut t = s.clone();
        for _ in 0..3 {
            t = push_stimulus(&t, Salt55);
        }
        assert_eq!(t, State::filled(Salt55, 3).unwrap());
        let one = State::new(vec![Sweet]).unwrap();
        assert_eq!(push_stimulus(&one, Salt).stimuli(), &[Salt]);
    }

    #[test]
    fn state_index_roundtrip() {
        for k in 1..=4 {
            for i in 0..4usize.pow(k as u32) {
                assert_eq!(State::from_index(i, k).unwrap().index(), i);
            }
        }
        assert!(State::from_index(64, 3).is_err());
    }

    #[test]
    fn select_action_uniform_when_exploring() {
        let q = QTable::<f64>::new(3, 0.0).unwrap();
        let s = State::filled(Sweet, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = [0usize; 3];
        let n = 100_000;
        for _ in 0..n {
            counts[select_action(&s, 1.0, &q, &mut rng).index()] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 1.0 / 3.0).abs() < 0.01, "{counts:?}");
        }
    }

    #[test]
    fn select_action_exploits_softmax() {
        let mut q = QTable::<f64>::new(3, 0.0).unwrap();
        let s = State::filled(Salt, 3).unwrap();
        q.set(&s, Action::Left, 10.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 10_000;
        let left = (0..n)
            .filter(|_| select_action(&s, 0.0, &q, &mut rng) == Action::Left)
            .count();
        assert!(left as f64 / n as f64 >= 0.99);
    }

    #[test]
    fn select_action_is_deterministic() {
        let q = QTable::<f64>::new(3, 0.0).unwrap();
        let s = State::filled(Sweet55, 3).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..500)
                .map(|_| select_action(&s, 0.4, &q, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
    }

    #[test]
    fn warmup_modes() {
        let mut prefill = Agent::new(cfg()).unwrap();
        let s = prefill.observe(Salt).unwrap().unwrap();
        assert_eq!(s, State::filled(Salt, 3).unwrap());

        let mut skip = Agent::new(AgentConfig {
            warmup: WarmUp::Skip,
            ..cfg()
        })
        .unwrap();
        assert!(skip.observe(Sweet).unwrap().is_none());
        assert!(skip.observe(Salt).unwrap().is_none());
        let s = skip.observe(Salt55).unwrap().unwrap();
        assert_eq!(s.stimuli(), &[Sweet, Salt, Salt55]);
    }

    #[test]
    fn pending_update_applied_on_next_observe() {
        let mut agent = Agent::new(cfg()).unwrap();
        let s = agent.observe(Sweet).unwrap().unwrap();
        agent.reward(Action::Left, 1.0).unwrap();
        assert_eq!(agent.qtable().get(&s, Action::Left), 0.0);
        agent.observe(Salt).unwrap();
        assert_eq!(agent.qtable().get(&s, Action::Left), 0.2);
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        assert!(AgentConfig { k: 0, ..cfg() }.validate().is_err());
        assert!(AgentConfig { alpha: 0.0, ..cfg() }.validate().is_err());
        assert!(AgentConfig { gamma: 1.5, ..cfg() }.validate().is_err());
        assert!(AgentConfig { eps_start: -0.1, ..cfg() }.validate().is_err());
    }

    #[test]
    fn works_in_f32() {
        let c = AgentConfig::<f32>::default();
        let e = epsilon_for_session(1, &c).unwrap();
        assert!((e - 0.7753099).abs() < 1e-5);
        let p = action_distribution([0.0f32, 0.0, 0.0]).unwrap();
        assert!((p.iter().sum::<f32>() - 1.0).abs() < 1e-6);
    }
}
