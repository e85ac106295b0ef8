//! Per-operator skill controllers: operator-guided reward, tabular
//! Q-learning over abstract states with a replay store, rollouts with
//! effect verification, and scheduling-round optimization.

pub mod checkpoint;
mod reward;
mod tabular;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::{abstract_space_signature, AbstractionError, SpaceSignature};
use crate::env::rules::{ATTACHED, THRESHOLD};
use crate::env::{Action, EnvError, GridEnv, Kind, World, NUM_PRIMITIVES};
use crate::symbolic::{
    applicable, atom_holds, successor, EnvState, GroundAtom, GroundOperator, SymbolicError,
};

pub use reward::{OperatorReward, RewardSpec};
pub use tabular::{encode, ReplayStore, StateKey, TabularPolicy, Transition};

#[derive(Debug, Error)]
pub enum SkillError {
    #[error("{0} has no effects; the operator-guided reward is undefined")]
    EmptyEffects(String),
    #[error("precondition of {0} does not hold in the current state")]
    PreconditionViolated(String),
    #[error("invalid learner parameter: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
    #[error(transparent)]
    Abstraction(#[from] AbstractionError),
}

/// Learner and rollout hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerParams {
    pub gamma: f64,
    pub alpha: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Training episodes over which epsilon is annealed linearly.
    pub epsilon_anneal_episodes: u64,
    /// Policy steps per skill execution.
    pub horizon: usize,
    pub replay_capacity: usize,
    pub minibatch: usize,
    /// Learning episodes per scheduling round.
    pub k_episodes: usize,
    pub lambda_eff: f64,
    /// Bin width for non-positional features.
    pub bin: f64,
}

impl Default for LearnerParams {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            alpha: 0.1,
            epsilon_start: 0.3,
            epsilon_end: 0.05,
            epsilon_anneal_episodes: 200,
            horizon: 64,
            replay_capacity: 50_000,
            minibatch: 32,
            k_episodes: 50,
            lambda_eff: 0.5,
            bin: 0.25,
        }
    }
}

impl LearnerParams {
    pub fn validate(&self) -> Result<(), SkillError> {
        let bad = |m: &str| Err(SkillError::InvalidParams(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must be in (0, 1)");
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must be in (0, 1]");
        }
        for e in [self.epsilon_start, self.epsilon_end] {
            if !(0.0..=1.0).contains(&e) {
                return bad("epsilon must be in [0, 1]");
            }
        }
        if !(0.0..=1.0).contains(&self.lambda_eff) {
            return bad("lambda_eff must be in [0, 1]");
        }
        if self.horizon == 0 || self.replay_capacity == 0 || self.minibatch == 0 {
            return bad("horizon, replay_capacity and minibatch must be positive");
        }
        if self.bin <= 0.0 {
            return bad("bin must be positive");
        }
        Ok(())
    }

    pub fn epsilon(&self, episodes: u64) -> f64 {
        if self.epsilon_anneal_episodes == 0 {
            return self.epsilon_end;
        }
        if episodes >= self.epsilon_anneal_episodes {
            return self.epsilon_end;
        }
        let frac = episodes as f64 / self.epsilon_anneal_episodes as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }
}

/// Everything a controller may look at when choosing an action.
pub struct SkillView<'a> {
    pub world: &'a World,
    pub op: &'a GroundOperator,
    pub state: &'a EnvState,
    /// Entity the skill approached first.
    pub target: &'a str,
}

/// A skill controller. Learners update from transitions; scripted and stub
/// controllers ignore them.
pub trait Controller: Send {
    fn act(&mut self, view: &SkillView<'_>, explore: bool, rng: &mut ChaCha8Rng) -> Action;

    /// Called after every exploring step.
    fn observe(&mut self, _view: &SkillView<'_>, _t: &Transition, _rng: &mut ChaCha8Rng) {}

    /// Called once at the start of each scheduling round.
    fn begin_round(&mut self) {}

    /// Called after each exploring episode.
    fn end_episode(&mut self) {}

    fn as_tabular(&self) -> Option<&TabularPolicy> {
        None
    }

    fn as_tabular_mut(&mut self) -> Option<&mut TabularPolicy> {
        None
    }
}

/// Primitive that realizes an operator once the robot stands on its target.
pub fn finishing_action(op_name: &str) -> Option<Action> {
    Some(match op_name {
        "pick" => Action::Grasp,
        "place" => Action::Release,
        "pull" => Action::Pull,
        "push" | "closelid" => Action::Push,
        "insert" | "insertholder" => Action::Insert,
        _ => return None,
    })
}

/// Hand-written controller: walk to the target, then issue the operator's
/// finishing primitive.
#[derive(Debug, Clone, Default)]
pub struct ScriptedController;

impl Controller for ScriptedController {
    fn act(&mut self, view: &SkillView<'_>, _explore: bool, _rng: &mut ChaCha8Rng) -> Action {
        let robot = &view.world.roster.robot;
        let r = view.state.get(robot).expect("robot present");
        let t = view.state.get(view.target).expect("target present");
        let (dx, dy) = ((t[0] - r[0]).round() as i64, (t[1] - r[1]).round() as i64);
        if dx > 0 {
            Action::EAST
        } else if dx < 0 {
            Action::WEST
        } else if dy > 0 {
            Action::NORTH
        } else if dy < 0 {
            Action::SOUTH
        } else {
            finishing_action(view.op.name()).unwrap_or(Action::Grasp)
        }
    }
}

/// Uniformly random primitive actions.
#[derive(Debug, Clone, Default)]
pub struct RandomController;

impl Controller for RandomController {
    fn act(&mut self, _view: &SkillView<'_>, _explore: bool, rng: &mut ChaCha8Rng) -> Action {
        Action::primitive(rng.gen_range(0..NUM_PRIMITIVES))
    }
}

/// Never moves (always grasps); a skill that always fails unless its
/// effects hold trivially.
#[derive(Debug, Clone, Default)]
pub struct InertController;

impl Controller for InertController {
    fn act(&mut self, _view: &SkillView<'_>, _explore: bool, _rng: &mut ChaCha8Rng) -> Action {
        Action::Insert
    }
}

/// Acts inert until it has seen `rounds` scheduling rounds, then scripted.
#[derive(Debug, Clone)]
pub struct MasteryStub {
    pub rounds_needed: usize,
    pub rounds_seen: usize,
}

impl MasteryStub {
    pub fn new(rounds_needed: usize) -> Self {
        Self {
            rounds_needed,
            rounds_seen: 0,
        }
    }
}

impl Controller for MasteryStub {
    fn act(&mut self, view: &SkillView<'_>, explore: bool, rng: &mut ChaCha8Rng) -> Action {
        if self.rounds_seen >= self.rounds_needed {
            ScriptedController.act(view, explore, rng)
        } else {
            InertController.act(view, explore, rng)
        }
    }

    fn begin_round(&mut self) {
        self.rounds_seen += 1;
    }
}

/// How skills are indexed: one per lifted operator (shared policy and
/// replay store across groundings) or one per ground operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sharing {
    #[default]
    Lifted,
    Grounded,
}

pub type ControllerFactory =
    Box<dyn Fn(&GroundOperator, &SpaceSignature) -> Box<dyn Controller> + Send>;

/// The set of skill controllers, created on first use.
pub struct SkillLibrary {
    pub sharing: Sharing,
    pub params: LearnerParams,
    controllers: BTreeMap<String, Box<dyn Controller>>,
    factory: ControllerFactory,
}

impl fmt::Debug for SkillLibrary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SkillLibrary")
            .field("sharing", &self.sharing)
            .field("skills", &self.controllers.keys().collect::<Vec<_>>())
            .finish_non_exhaustive()
    }
}

impl SkillLibrary {
    /// Tabular learners for every skill.
    pub fn tabular(params: LearnerParams, sharing: Sharing) -> Self {
        let p = params.clone();
        Self::with_factory(
            params,
            sharing,
            Box::new(move |_, sig| Box::new(TabularPolicy::new(sig.clone(), p.clone()))),
        )
    }

    pub fn with_factory(
        params: LearnerParams,
        sharing: Sharing,
        factory: ControllerFactory,
    ) -> Self {
        Self {
            sharing,
            params,
            controllers: BTreeMap::new(),
            factory,
        }
    }

    pub fn key(&self, op: &GroundOperator) -> String {
        match self.sharing {
            Sharing::Lifted => op.name().to_string(),
            Sharing::Grounded => op.to_string(),
        }
    }

    pub fn insert(&mut self, key: impl Into<String>, c: Box<dyn Controller>) {
        self.controllers.insert(key.into(), c);
    }

    pub fn get(&self, key: &str) -> Option<&dyn Controller> {
        self.controllers.get(key).map(|c| c.as_ref())
    }

    pub fn keys(&self) -> impl Iterator<Item = &String> {
        self.controllers.keys()
    }

    pub fn contains(&self, key: &str) -> bool {
        self.controllers.contains_key(key)
    }

    pub fn controller(
        &mut self,
        world: &World,
        op: &GroundOperator,
    ) -> Result<&mut Box<dyn Controller>, SkillError> {
        let key = self.key(op);
        if !self.controllers.contains_key(&key) {
            let sig = abstract_space_signature(op.lifted(), &world.domain)?;
            let c = (self.factory)(op, &sig);
            self.controllers.insert(key.clone(), c);
        }
        Ok(self.controllers.get_mut(&key).expect("inserted"))
    }

    pub fn tabular_policies(&self) -> impl Iterator<Item = (&String, &TabularPolicy)> {
        self.controllers
            .iter()
            .filter_map(|(k, c)| c.as_tabular().map(|t| (k, t)))
    }
}

/// Entity a skill approaches and measures distance to: the first parameter
/// object not currently held.
pub fn skill_target<'a>(world: &'a World, op: &'a GroundOperator, x: &EnvState) -> &'a str {
    let held = |e: &str| {
        world.kind_of(e) == Some(Kind::Item) && x.get(e).is_some_and(|v| v[ATTACHED] > THRESHOLD)
    };
    op.args()
        .iter()
        .find(|a| !held(a))
        .or(op.args().first())
        .map(String::as_str)
        .unwrap_or(world.roster.robot.as_str())
}

/// `F(s, op)` restricted to what verification checks: the expected state
/// after the operator.
pub fn expected_atoms(
    op: &GroundOperator,
    s: &crate::symbolic::SymbolicState,
) -> BTreeSet<GroundAtom> {
    successor(op, s).atoms().clone()
}

/// `expected ⊆ parse(x)`, evaluated atom by atom.
pub fn verify(
    world: &World,
    expected: &BTreeSet<GroundAtom>,
    x: &EnvState,
) -> Result<bool, SkillError> {
    for a in expected {
        if !atom_holds(x, &world.domain.predicates, a)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutRecord {
    pub op: GroundOperator,
    pub transitions: Vec<Transition>,
    pub success: bool,
    /// Policy steps taken (≤ H).
    pub steps: usize,
    /// Primitive environment steps including the approach path.
    pub env_steps: u64,
    /// Operator-guided reward of the final state.
    pub final_reward: f64,
    pub final_state: EnvState,
}

/// Executes one skill from the env's current state: approach the target,
/// then up to `H` controller steps until the expected effects verify.
pub fn rollout_skill(
    env: &mut GridEnv,
    world: &World,
    lib: &mut SkillLibrary,
    op: &GroundOperator,
    explore: bool,
    rng: &mut ChaCha8Rng,
) -> Result<RolloutRecord, SkillError> {
    let start = world.parse(env.state())?;
    if !applicable(op, &start) {
        return Err(SkillError::PreconditionViolated(op.to_string()));
    }
    let expected = expected_atoms(op, &start);
    let reward = OperatorReward::new(
        world,
        op,
        RewardSpec::from_params(&lib.params, env.config()),
    )?;
    let horizon = lib.params.horizon;
    let (gamma, bin) = (lib.params.gamma, lib.params.bin);
    let steps_before = env.total_steps();

    let target = skill_target(world, op, env.state()).to_string();
    env.set_focus(Some(&target));
    env.step(&Action::Approach(target.clone()));

    let controller = lib.controller(world, op)?;
    let mut transitions = Vec::new();
    let mut success = verify(world, &expected, env.state())?;
    let mut x = env.state().clone();
    let mut r_x = reward.eval(&x)?;
    let mut steps = 0;
    while !success && steps < horizon {
        let view = SkillView {
            world,
            op,
            state: &x,
            target: &target,
        };
        let a = controller.act(&view, explore, rng);
        let x2 = env.step(&a).state;
        steps += 1;
        success = verify(world, &expected, &x2)?;
        let r_x2 = reward.eval(&x2)?;
        let signal = if success { 1.0 } else { gamma * r_x2 - r_x };
        let t = Transition {
            state: encode(&x, op, &world.roster.robot, bin),
            action: a.primitive_index().expect("controllers emit primitives") as u8,
            reward: signal,
            next: encode(&x2, op, &world.roster.robot, bin),
            done: success,
        };
        if explore {
            controller.observe(&view, &t, rng);
        }
        transitions.push(t);
        x = x2;
        r_x = r_x2;
    }
    if explore {
        controller.end_episode();
    }
    Ok(RolloutRecord {
        op: op.clone(),
        transitions,
        success,
        steps,
        env_steps: env.total_steps() - steps_before,
        final_reward: r_x,
        final_state: x,
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OptimizeStats {
    pub episodes: usize,
    pub successes: usize,
    /// Episodes skipped because no precondition state could be prepared.
    pub skipped: usize,
    pub env_steps: u64,
}

/// One scheduling round: `K` exploring episodes of `op`, each from a state
/// produced by `prepare` (which must leave `op` applicable, or return false
/// to skip the episode). Steps spent inside `prepare` are counted.
pub fn optimize(
    env: &mut GridEnv,
    world: &World,
    lib: &mut SkillLibrary,
    op: &GroundOperator,
    k: usize,
    rng: &mut ChaCha8Rng,
    prepare: &mut dyn FnMut(
        &mut GridEnv,
        &mut SkillLibrary,
        &mut ChaCha8Rng,
    ) -> Result<bool, SkillError>,
) -> Result<OptimizeStats, SkillError> {
    let mut stats = OptimizeStats::default();
    if k == 0 {
        return Ok(stats);
    }
    lib.controller(world, op)?.begin_round();
    for _ in 0..k {
        let before = env.total_steps();
        let ready = prepare(env, lib, rng)?;
        if !ready {
            stats.skipped += 1;
            stats.env_steps += env.total_steps() - before;
            continue;
        }
        let rec = rollout_skill(env, world, lib, op, true, rng)?;
        stats.episodes += 1;
        stats.successes += rec.success as usize;
        stats.env_steps += env.total_steps() - before;
    }
    Ok(stats)
}

/// Mean episode-final reward with exploration off, one episode per
/// prepared start state.
pub fn proficiency(
    env: &mut GridEnv,
    world: &World,
    lib: &mut SkillLibrary,
    op: &GroundOperator,
    starts: &[EnvState],
    rng: &mut ChaCha8Rng,
) -> Result<f64, SkillError> {
    if starts.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for s in starts {
        env.set_state(s.clone());
        total += rollout_skill(env, world, lib, op, false, rng)?.final_reward;
    }
    Ok(total / starts.len() as f64)
}
