//! The planner as a curriculum: evaluate the task plan with the current
//! skills, schedule every skill that failed, train it from states that
//! satisfy its precondition, repeat until the plan executes reliably.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{GridEnv, World};
use crate::planner::{plan, PlanError, PlannerConfig, TaskPlan};
use crate::skill::{optimize, rollout_skill, SkillError, SkillLibrary};
use crate::symbolic::{applicable, EnvState, GroundOperator};

#[derive(Debug, Error)]
pub enum CurriculumError {
    #[error("planning failed: {0}")]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Skill(#[from] SkillError),
    #[error("invalid curriculum config: {0}")]
    InvalidConfig(String),
}

impl From<crate::env::EnvError> for CurriculumError {
    fn from(e: crate::env::EnvError) -> Self {
        CurriculumError::Skill(e.into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurriculumConfig {
    /// Evaluation episodes per outer iteration (N).
    pub episodes: usize,
    pub max_outer: usize,
    /// Consecutive all-success iterations required to stop.
    pub convergence_window: usize,
    /// Prefix replays tried before falling back to snapshot injection.
    pub prefix_attempts: usize,
    /// Stop once this many primitive steps have been spent.
    pub step_budget: Option<u64>,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        Self {
            episodes: 10,
            max_outer: 500,
            convergence_window: 3,
            prefix_attempts: 5,
            step_budget: None,
        }
    }
}

impl CurriculumConfig {
    pub fn validate(&self, k: usize) -> Result<(), CurriculumError> {
        if self.episodes == 0 || k == 0 {
            return Err(CurriculumError::InvalidConfig(
                "N and K must be at least 1".into(),
            ));
        }
        if self.convergence_window == 0 {
            return Err(CurriculumError::InvalidConfig(
                "convergence_window must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Success {
        op: GroundOperator,
        reward: f64,
        env_steps: u64,
    },
    Failed {
        op: GroundOperator,
        /// State the skill started from; its precondition holds here.
        state_before: EnvState,
        reward: f64,
        env_steps: u64,
    },
}

impl StepOutcome {
    pub fn op(&self) -> &GroundOperator {
        match self {
            StepOutcome::Success { op, .. } | StepOutcome::Failed { op, .. } => op,
        }
    }

    pub fn reward(&self) -> f64 {
        match self {
            StepOutcome::Success { reward, .. } | StepOutcome::Failed { reward, .. } => *reward,
        }
    }

    pub fn is_success(&self) -> bool {
        matches!(self, StepOutcome::Success { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionRecord {
    pub episode: usize,
    pub seed: u64,
    pub plan: TaskPlan,
    /// One entry per executed step; a failure is always the last entry.
    pub outcomes: Vec<StepOutcome>,
    pub progress: f64,
    pub env_steps: u64,
}

impl ExecutionRecord {
    pub fn verified(&self) -> usize {
        self.outcomes.iter().filter(|o| o.is_success()).count()
    }

    /// Plan index and outcome of the failed step, if any.
    pub fn failure(&self) -> Option<(usize, &StepOutcome)> {
        self.outcomes
            .last()
            .filter(|o| !o.is_success())
            .map(|o| (self.outcomes.len() - 1, o))
    }
}

/// Verified steps over plan length; an empty plan counts as complete.
pub fn progress_score(verified: usize, plan_len: usize) -> f64 {
    if plan_len == 0 {
        1.0
    } else {
        verified.min(plan_len) as f64 / plan_len as f64
    }
}

/// One evaluation episode: reset to `seed`, parse, plan, then execute the
/// plan step by step with the skills (exploration off), stopping at the
/// first step whose effects do not verify.
pub fn planning_with_skills(
    env: &mut GridEnv,
    world: &World,
    lib: &mut SkillLibrary,
    planner: &PlannerConfig,
    episode: usize,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<ExecutionRecord, CurriculumError> {
    let before = env.total_steps();
    env.reset(seed);
    let s = world.parse(env.state())?;
    let task = plan(&s, &world.problem.goal, &world.grounded, planner)?;
    let outcomes = execute(env, world, lib, &task.steps, rng)?;
    let verified = outcomes.iter().filter(|o| o.is_success()).count();
    Ok(ExecutionRecord {
        episode,
        seed,
        progress: progress_score(verified, task.len()),
        plan: task,
        outcomes,
        env_steps: env.total_steps() - before,
    })
}

fn execute(
    env: &mut GridEnv,
    world: &World,
    lib: &mut SkillLibrary,
    steps: &[GroundOperator],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<StepOutcome>, SkillError> {
    let mut outcomes = Vec::with_capacity(steps.len());
    for op in steps {
        let state_before = env.state().clone();
        let before = env.total_steps();
        let rec = match rollout_skill(env, world, lib, op, false, rng) {
            Ok(rec) => rec,
            Err(SkillError::PreconditionViolated(_)) => {
                outcomes.push(StepOutcome::Failed {
                    op: op.clone(),
                    state_before,
                    reward: 0.0,
                    env_steps: 0,
                });
                break;
            }
            Err(e) => return Err(e),
        };
        let env_steps = env.total_steps() - before;
        if rec.success {
            outcomes.push(StepOutcome::Success {
                op: op.clone(),
                reward: rec.final_reward,
                env_steps,
            });
        } else {
            outcomes.push(StepOutcome::Failed {
                op: op.clone(),
                state_before,
                reward: rec.final_reward,
                env_steps,
            });
            break;
        }
    }
    Ok(outcomes)
}

/// Training log entry.
#[derive(Debug, Clone, PartialEq)]
pub enum LogRecord {
    Episode {
        iteration: usize,
        episode: usize,
        progress: f64,
        /// Skill whose step failed, if any.
        failed: Option<String>,
        env_steps: u64,
    },
    Optimize {
        iteration: usize,
        skill: String,
        op: String,
        episodes: usize,
        successes: usize,
        skipped: usize,
        injected: usize,
        env_steps: u64,
    },
    Proficiency {
        iteration: usize,
        skill: String,
        proficiency: f64,
    },
}

impl fmt::Display for LogRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogRecord::Episode {
                iteration,
                episode,
                progress,
                failed,
                env_steps,
            } => write!(
                f,
                "iteration={iteration} kind=episode episode={episode} progress={progress} failed={} env_steps={env_steps}",
                failed.as_deref().unwrap_or("-")
            ),
            LogRecord::Optimize {
                iteration,
                skill,
                op,
                episodes,
                successes,
                skipped,
                injected,
                env_steps,
            } => write!(
                f,
                "iteration={iteration} kind=optimize skill={skill} op={op} episodes={episodes} successes={successes} skipped={skipped} injected={injected} env_steps={env_steps}"
            ),
            LogRecord::Proficiency {
                iteration,
                skill,
                proficiency,
            } => write!(f, "iteration={iteration} kind=proficiency skill={skill} proficiency={proficiency}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationSummary {
    /// 1-based.
    pub iteration: usize,
    pub mean_progress: f64,
    pub all_success: bool,
    /// Cumulative primitive steps at the end of the iteration.
    pub env_steps: u64,
    /// Mean final reward of each skill's evaluation rollouts.
    pub proficiency: BTreeMap<String, f64>,
    /// Skills scheduled for training, in order.
    pub scheduled: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxOuter,
    StepBudget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub stop: StopReason,
    pub iterations: Vec<IterationSummary>,
    pub log: Vec<LogRecord>,
    pub optimize_calls: usize,
    /// Primitive steps spent in total.
    pub env_steps: u64,
    /// Steps spent when an iteration first had every episode at progress 1.
    pub threshold_steps: Option<u64>,
    /// Iteration in which each skill first succeeded during evaluation.
    pub first_success: BTreeMap<String, usize>,
}

impl TrainOutcome {
    pub fn converged(&self) -> bool {
        self.stop == StopReason::Converged
    }

    /// Skills in scheduling order, one entry per optimize call.
    pub fn schedule(&self) -> Vec<(usize, &str)> {
        self.iterations
            .iter()
            .flat_map(|it| it.scheduled.iter().map(move |s| (it.iteration, s.as_str())))
            .collect()
    }
}

struct FailureContext {
    index: usize,
    plan: TaskPlan,
    snapshot: EnvState,
}

/// Runs the curriculum until `convergence_window` consecutive iterations
/// have every episode at progress 1, `max_outer` is hit, or the step budget
/// is spent. Skills in `lib` are trained in place.
pub fn train(
    env: &mut GridEnv,
    world: &World,
    lib: &mut SkillLibrary,
    cfg: &CurriculumConfig,
    planner: &PlannerConfig,
    seed: u64,
) -> Result<TrainOutcome, CurriculumError> {
    let k = lib.params.k_episodes;
    cfg.validate(k)?;
    lib.params.validate()?;
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    let start = env.total_steps();
    let mut out = TrainOutcome {
        stop: StopReason::MaxOuter,
        iterations: Vec::new(),
        log: Vec::new(),
        optimize_calls: 0,
        env_steps: 0,
        threshold_steps: None,
        first_success: BTreeMap::new(),
    };
    let mut streak = 0;

    for iteration in 1..=cfg.max_outer {
        // evaluate; the failure set is rebuilt every iteration
        let mut failures: BTreeMap<String, FailureContext> = BTreeMap::new();
        let mut order: Vec<(usize, usize, String)> = Vec::new();
        let mut rewards: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        let mut total_progress = 0.0;
        let mut all_success = true;
        for episode in 0..cfg.episodes {
            let ep_seed = rng.gen();
            let rec = planning_with_skills(env, world, lib, planner, episode, ep_seed, &mut rng)?;
            for o in &rec.outcomes {
                let key = lib.key(o.op());
                let e = rewards.entry(key.clone()).or_default();
                e.0 += o.reward();
                e.1 += 1;
                if o.is_success() {
                    out.first_success.entry(key).or_insert(iteration);
                }
            }
            if let Some((
                index,
                StepOutcome::Failed {
                    op, state_before, ..
                },
            )) = rec.failure()
            {
                let key = lib.key(op);
                if !failures.contains_key(&key) {
                    order.push((index, episode, key.clone()));
                    failures.insert(
                        key,
                        FailureContext {
                            index,
                            plan: rec.plan.clone(),
                            snapshot: state_before.clone(),
                        },
                    );
                } else if index < failures[&key].index {
                    // keep the earliest plan position as the context
                    let pos = order
                        .iter()
                        .position(|(_, _, k)| *k == key)
                        .expect("tracked");
                    order[pos].0 = index;
                    failures.insert(
                        key,
                        FailureContext {
                            index,
                            plan: rec.plan.clone(),
                            snapshot: state_before.clone(),
                        },
                    );
                }
            }
            let failed = rec.failure().map(|(_, o)| lib.key(o.op()));
            total_progress += rec.progress;
            all_success &= rec.progress >= 1.0;
            out.log.push(LogRecord::Episode {
                iteration,
                episode,
                progress: rec.progress,
                failed,
                env_steps: rec.env_steps,
            });
        }
        let proficiency: BTreeMap<String, f64> = rewards
            .into_iter()
            .map(|(k, (sum, n))| (k, sum / n as f64))
            .collect();
        for (skill, p) in &proficiency {
            out.log.push(LogRecord::Proficiency {
                iteration,
                skill: skill.clone(),
                proficiency: *p,
            });
        }
        if all_success && out.threshold_steps.is_none() {
            out.threshold_steps = Some(env.total_steps() - start);
        }

        // schedule failed skills in plan order
        order.sort();
        let mut scheduled = Vec::new();
        for (_, _, key) in order {
            if cfg
                .step_budget
                .is_some_and(|b| env.total_steps() - start >= b)
            {
                break;
            }
            let ctx = &failures[&key];
            let op = ctx.plan.steps[ctx.index].clone();
            let prefix = &ctx.plan.steps[..ctx.index];
            let mut injected = 0;
            let mut prepare = |env: &mut GridEnv, lib: &mut SkillLibrary, rng: &mut ChaCha8Rng| {
                for _ in 0..cfg.prefix_attempts {
                    env.reset(rng.gen());
                    let outcomes = execute(env, world, lib, prefix, rng)?;
                    if outcomes.iter().all(StepOutcome::is_success)
                        && applicable(&op, &world.parse(env.state())?)
                    {
                        return Ok(true);
                    }
                }
                env.set_state(ctx.snapshot.clone());
                injected += 1;
                Ok(applicable(&op, &world.parse(env.state())?))
            };
            let before = env.total_steps();
            let stats = optimize(env, world, lib, &op, k, &mut rng, &mut prepare)?;
            out.optimize_calls += 1;
            out.log.push(LogRecord::Optimize {
                iteration,
                skill: key.clone(),
                op: op.to_string(),
                episodes: stats.episodes,
                successes: stats.successes,
                skipped: stats.skipped,
                injected,
                env_steps: env.total_steps() - before,
            });
            scheduled.push(key);
        }

        out.iterations.push(IterationSummary {
            iteration,
            mean_progress: total_progress / cfg.episodes as f64,
            all_success,
            env_steps: env.total_steps() - start,
            proficiency,
            scheduled,
        });
        streak = if all_success { streak + 1 } else { 0 };
        if streak >= cfg.convergence_window {
            out.stop = StopReason::Converged;
            break;
        }
        if cfg
            .step_budget
            .is_some_and(|b| env.total_steps() - start >= b)
        {
            out.stop = StopReason::StepBudget;
            break;
        }
    }
    out.env_steps = env.total_steps() - start;
    Ok(out)
}
