use std::collections::{BTreeMap, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::abstraction::SpaceSignature;
use crate::env::{Action, NUM_PRIMITIVES};
use crate::symbolic::{EnvState, GroundOperator};

use super::{Controller, LearnerParams, SkillView};

/// Discretized, robot-centred abstract state.
pub type StateKey = Vec<i16>;

fn bin(v: f64, width: f64) -> i16 {
    (v / width).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

/// Egocentric discretization of the abstract state of `op`: the robot's
/// absolute position is dropped, parameter objects are located relative to
/// the robot, remaining features are binned. Only the robot and the
/// operator's parameters are read.
pub fn encode(x: &EnvState, op: &GroundOperator, robot: &str, width: f64) -> StateKey {
    let r = x.get(robot).expect("robot present");
    let mut key = Vec::with_capacity(3 + 4 * op.args().len());
    key.push(bin(r[2], width));
    key.extend(r[3..].iter().map(|v| v.round() as i16));
    for e in op.args() {
        let v = x.get(e).expect("parameter present");
        key.push((v[0] - r[0]).round() as i16);
        key.push((v[1] - r[1]).round() as i16);
        key.extend(v[2..].iter().map(|f| bin(*f, width)));
    }
    key
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: StateKey,
    pub action: u8,
    pub reward: f64,
    pub next: StateKey,
    pub done: bool,
}

/// Bounded FIFO of transitions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReplayStore {
    capacity: usize,
    buf: VecDeque<Transition>,
}

impl ReplayStore {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            buf: VecDeque::with_capacity(capacity.min(4096)),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.capacity == 0 {
            return;
        }
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(t);
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.buf.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.buf.iter()
    }
}

/// Tabular Q-learning policy for one skill; owns the skill's replay store.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPolicy {
    pub signature: SpaceSignature,
    pub params: LearnerParams,
    pub q: BTreeMap<StateKey, [f64; NUM_PRIMITIVES]>,
    pub replay: ReplayStore,
    /// Exploring episodes completed; drives epsilon annealing.
    pub episodes: u64,
}

impl TabularPolicy {
    pub fn new(signature: SpaceSignature, params: LearnerParams) -> Self {
        let replay = ReplayStore::new(params.replay_capacity);
        Self {
            signature,
            params,
            q: BTreeMap::new(),
            replay,
            episodes: 0,
        }
    }

    pub fn values(&self, key: &StateKey) -> [f64; NUM_PRIMITIVES] {
        self.q.get(key).copied().unwrap_or([0.0; NUM_PRIMITIVES])
    }

    /// Highest-valued action; ties go to the lowest index.
    pub fn greedy(&self, key: &StateKey) -> usize {
        let v = self.values(key);
        let mut best = 0;
        for i in 1..NUM_PRIMITIVES {
            if v[i] > v[best] {
                best = i;
            }
        }
        best
    }

    pub fn epsilon(&self) -> f64 {
        self.params.epsilon(self.episodes)
    }

    /// Stores the transition, applies it, then replays a uniform minibatch.
    pub fn learn(&mut self, t: &Transition, rng: &mut ChaCha8Rng) {
        self.replay.push(t.clone());
        q_update(&mut self.q, &self.params, t);
        let n = self.replay.len();
        for _ in 0..self.params.minibatch.min(n) {
            let s = self.replay.get(rng.gen_range(0..n)).expect("in range");
            q_update(&mut self.q, &self.params, s);
        }
    }
}

fn q_update(q: &mut BTreeMap<StateKey, [f64; NUM_PRIMITIVES]>, p: &LearnerParams, t: &Transition) {
    let bootstrap = if t.done {
        0.0
    } else {
        q.get(&t.next)
            .map_or(0.0, |v| v.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    };
    let target = t.reward + p.gamma * bootstrap;
    let a = t.action as usize;
    match q.get_mut(&t.state) {
        Some(row) => row[a] += p.alpha * (target - row[a]),
        None => {
            let mut row = [0.0; NUM_PRIMITIVES];
            row[a] = p.alpha * target;
            q.insert(t.state.clone(), row);
        }
    }
}

impl Controller for TabularPolicy {
    fn act(&mut self, view: &SkillView<'_>, explore: bool, rng: &mut ChaCha8Rng) -> Action {
        let key = encode(
            view.state,
            view.op,
            &view.world.roster.robot,
            self.params.bin,
        );
        let i = if explore && rng.gen::<f64>() < self.epsilon() {
            rng.gen_range(0..NUM_PRIMITIVES)
        } else {
            self.greedy(&key)
        };
        Action::primitive(i)
    }

    fn observe(&mut self, _view: &SkillView<'_>, t: &Transition, rng: &mut ChaCha8Rng) {
        self.learn(t, rng);
    }

    fn end_episode(&mut self) {
        self.episodes += 1;
    }

    fn as_tabular(&self) -> Option<&TabularPolicy> {
        Some(self)
    }

    fn as_tabular_mut(&mut self) -> Option<&mut TabularPolicy> {
        Some(self)
    }
}
