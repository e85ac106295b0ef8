//! Experiment driver: configs, metrics tables and the train / eval /
//! transfer / plan commands behind the CLI.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::abstraction::abstract_space_signature;
use crate::corpus::{self, DomainId, GoalId};
use crate::curriculum::{
    planning_with_skills, train, CurriculumConfig, CurriculumError, TrainOutcome,
};
use crate::env::{EnvConfig, EnvError, GridEnv, World};
use crate::pddl::{parse_domain, parse_problem, ParseError};
use crate::planner::{enumerate_groundings, plan, Heuristic, PlanError, PlannerConfig, TaskPlan};
use crate::skill::checkpoint::{self, CheckpointError};
use crate::skill::{LearnerParams, Sharing, SkillError, SkillLibrary, TabularPolicy};
use crate::symbolic::SymbolicState;

pub const SCHEMA_VERSION: u32 = 1;
pub const CSV_HEADER: [&str; 7] = [
    "schema_version",
    "experiment",
    "seed",
    "iteration",
    "subject",
    "metric",
    "value",
];
pub const OUTPUT_DIR_ENV: &str = "OUTPUT_DIR";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("config {path}: {reason}")]
    Config { path: PathBuf, reason: String },
    #[error("{}:{source}", file.display())]
    Parse { file: PathBuf, source: ParseError },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Curriculum(#[from] CurriculumError),
    #[error(transparent)]
    Skill(#[from] SkillError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("no checkpoint for operator `{operator}` needed by goal {goal}")]
    MissingCheckpoint { operator: String, goal: GoalId },
    #[error("cannot map `{source_op}` onto `{target}`: {reason}")]
    SignatureMismatch {
        source_op: String,
        target: String,
        reason: String,
    },
    #[error("evaluation modified checkpoint {0}")]
    Impure(PathBuf),
    #[error("metrics {path}: {reason}")]
    Metrics { path: PathBuf, reason: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

// ---------------------------------------------------------------- config

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub env: EnvSection,
    #[serde(default)]
    pub learner: LearnerParams,
    #[serde(default)]
    pub curriculum: CurriculumConfig,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub transfer: Option<TransferSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub name: String,
    pub domain: DomainId,
    #[serde(default = "default_goal")]
    pub goal: GoalId,
    pub seeds: Vec<u64>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Optional PDDL overrides for the built-in domain and problem text.
    #[serde(default)]
    pub domain_file: Option<PathBuf>,
    #[serde(default)]
    pub problem_file: Option<PathBuf>,
    #[serde(default)]
    pub sharing: Sharing,
    #[serde(default)]
    pub heuristic: Heuristic,
}

fn default_goal() -> GoalId {
    GoalId::Train
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvSection {
    pub width: u32,
    pub height: u32,
    pub randomize_layout: bool,
    pub walls: Vec<(i64, i64)>,
    pub max_steps: Option<u64>,
}

impl Default for EnvSection {
    fn default() -> Self {
        let c = EnvConfig::new(DomainId::Drawer);
        Self {
            width: c.width,
            height: c.height,
            randomize_layout: c.randomize_layout,
            walls: c.walls,
            max_steps: c.max_steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// Episodes per (seed, goal).
    pub episodes: usize,
    /// Goals to evaluate; empty means every goal of the domain.
    pub goals: Vec<GoalId>,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            episodes: 50,
            goals: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferSection {
    pub source_domain: DomainId,
    /// Directory holding `seed-<n>` checkpoint directories of the source.
    pub source_checkpoints: PathBuf,
    /// Source lifted operator -> target lifted operator.
    pub remap: BTreeMap<String, String>,
}

impl ExperimentConfig {
    /// Defaults for a built-in domain.
    pub fn for_domain(name: &str, domain: DomainId, seeds: Vec<u64>) -> Self {
        Self {
            experiment: ExperimentSection {
                name: name.to_string(),
                domain,
                goal: GoalId::Train,
                seeds,
                output_dir: default_output(),
                domain_file: None,
                problem_file: None,
                sharing: Sharing::Lifted,
                heuristic: Heuristic::Zero,
            },
            env: EnvSection::default(),
            learner: LearnerParams::default(),
            curriculum: CurriculumConfig::default(),
            eval: EvalSection::default(),
            transfer: None,
        }
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    /// Reads a config file and applies the `OUTPUT_DIR` override.
    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg = Self::parse(&text, path)?;
        cfg.apply_env();
        cfg.validate(path)?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self) {
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|d| !d.is_empty()) {
            self.experiment.output_dir = PathBuf::from(dir);
        }
    }

    pub fn validate(&self, path: &Path) -> Result<(), ExperimentError> {
        let bad = |reason: String| ExperimentError::Config {
            path: path.to_path_buf(),
            reason,
        };
        if self.experiment.seeds.is_empty() {
            return Err(bad("seeds must not be empty".into()));
        }
        for f in [&self.experiment.domain_file, &self.experiment.problem_file]
            .into_iter()
            .flatten()
        {
            if !f.is_file() {
                return Err(bad(format!("{} does not exist", f.display())));
            }
        }
        if let Some(t) = &self.transfer {
            if t.remap.is_empty() {
                return Err(bad("transfer.remap must not be empty".into()));
            }
        }
        self.learner.validate().map_err(|e| bad(e.to_string()))?;
        self.curriculum
            .validate(self.learner.k_episodes)
            .map_err(|e| bad(e.to_string()))?;
        self.env_config(0)
            .validate()
            .map_err(|e| bad(e.to_string()))?;
        Ok(())
    }

    pub fn env_config(&self, seed: u64) -> EnvConfig {
        EnvConfig {
            domain: self.experiment.domain,
            width: self.env.width,
            height: self.env.height,
            seed,
            randomize_layout: self.env.randomize_layout,
            walls: self.env.walls.clone(),
            max_steps: self.env.max_steps,
        }
    }

    pub fn planner(&self) -> PlannerConfig {
        PlannerConfig {
            heuristic: self.experiment.heuristic,
            ..PlannerConfig::default()
        }
    }

    pub fn out(&self) -> &Path {
        &self.experiment.output_dir
    }

    pub fn checkpoint_dir(&self, seed: u64) -> PathBuf {
        self.out().join("checkpoints").join(format!("seed-{seed}"))
    }

    /// The world for `goal`; file overrides apply to the configured goal.
    pub fn world(&self, goal: GoalId) -> Result<World, ExperimentError> {
        let d = self.experiment.domain;
        let dtext = match &self.experiment.domain_file {
            Some(p) => fs::read_to_string(p).map_err(io_err(p))?,
            None => corpus::domain_text(d).to_string(),
        };
        let ptext = match (&self.experiment.problem_file, goal == self.experiment.goal) {
            (Some(p), true) => fs::read_to_string(p).map_err(io_err(p))?,
            _ => corpus::problem_text(d, goal)
                .ok_or(EnvError::UnknownGoal { domain: d, goal })?
                .to_string(),
        };
        Ok(World::from_text(d, &dtext, &ptext)?)
    }

    pub fn eval_goals(&self) -> Vec<GoalId> {
        if self.eval.goals.is_empty() {
            self.experiment.domain.goals().to_vec()
        } else {
            self.eval.goals.clone()
        }
    }
}

// --------------------------------------------------------------- metrics

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub experiment: String,
    pub seed: u64,
    pub iteration: usize,
    /// A skill name, a goal, `task`, or an arm such as `warm`/`cold`.
    pub subject: String,
    pub metric: String,
    pub value: f64,
}

/// Append-only metrics rows with a versioned CSV form.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsTable {
    rows: Vec<MetricRow>,
}

impl MetricsTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(
        &mut self,
        experiment: &str,
        seed: u64,
        iteration: usize,
        subject: &str,
        metric: &str,
        value: f64,
    ) {
        self.rows.push(MetricRow {
            experiment: experiment.to_string(),
            seed,
            iteration,
            subject: subject.to_string(),
            metric: metric.to_string(),
            value,
        });
    }

    pub fn extend(&mut self, other: MetricsTable) {
        self.rows.extend(other.rows);
    }

    pub fn rows(&self) -> &[MetricRow] {
        &self.rows
    }

    /// Rows matching `metric` and `subject`.
    pub fn select<'a>(
        &'a self,
        subject: &'a str,
        metric: &'a str,
    ) -> impl Iterator<Item = &'a MetricRow> + 'a {
        self.rows
            .iter()
            .filter(move |r| r.subject == subject && r.metric == metric)
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                SCHEMA_VERSION.to_string(),
                r.experiment.clone(),
                r.seed.to_string(),
                r.iteration.to_string(),
                r.subject.clone(),
                r.metric.clone(),
                r.value.to_string(),
            ])
            .expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    pub fn write(&self, path: &Path) -> Result<(), ExperimentError> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        fs::write(path, self.to_csv()).map_err(io_err(path))
    }

    /// Parses a metrics file, checking the header and schema version of
    /// every row.
    pub fn read(path: &Path) -> Result<Self, ExperimentError> {
        let bad = |reason: String| ExperimentError::Metrics {
            path: path.to_path_buf(),
            reason,
        };
        let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
        let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
        if header.iter().ne(CSV_HEADER) {
            return Err(bad(format!(
                "unexpected header {:?}",
                header.iter().collect::<Vec<_>>()
            )));
        }
        let mut table = MetricsTable::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let field = |j: usize| rec.get(j).unwrap_or("");
            let num = |j: usize| -> Result<u64, ExperimentError> {
                field(j)
                    .parse()
                    .map_err(|_| bad(format!("row {}: bad integer `{}`", i + 1, field(j))))
            };
            if num(0)? != SCHEMA_VERSION as u64 {
                return Err(bad(format!("row {}: schema version {}", i + 1, field(0))));
            }
            let value = field(6)
                .parse()
                .map_err(|_| bad(format!("row {}: bad value `{}`", i + 1, field(6))))?;
            table.rows.push(MetricRow {
                experiment: field(1).to_string(),
                seed: num(2)?,
                iteration: num(3)? as usize,
                subject: field(4).to_string(),
                metric: field(5).to_string(),
                value,
            });
        }
        Ok(table)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Population standard deviation.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

// ----------------------------------------------------------------- train

#[derive(Debug)]
pub struct SeedRun {
    pub seed: u64,
    pub outcome: TrainOutcome,
    pub library: SkillLibrary,
}

#[derive(Debug)]
pub struct TrainReport {
    pub runs: Vec<SeedRun>,
    pub metrics: MetricsTable,
}

impl TrainReport {
    pub fn all_converged(&self) -> bool {
        self.runs.iter().all(|r| r.outcome.converged())
    }
}

/// Trains one seed starting from `lib`.
pub fn train_seed(
    cfg: &ExperimentConfig,
    world: &World,
    seed: u64,
    mut lib: SkillLibrary,
) -> Result<SeedRun, ExperimentError> {
    let mut env = GridEnv::new(cfg.env_config(seed), world)?;
    let outcome = train(
        &mut env,
        world,
        &mut lib,
        &cfg.curriculum,
        &cfg.planner(),
        seed,
    )?;
    Ok(SeedRun {
        seed,
        outcome,
        library: lib,
    })
}

/// Per-iteration and summary rows for one training run.
pub fn outcome_metrics(
    experiment: &str,
    seed: u64,
    subject: &str,
    o: &TrainOutcome,
) -> MetricsTable {
    let mut t = MetricsTable::new();
    for it in &o.iterations {
        let i = it.iteration;
        t.push(
            experiment,
            seed,
            i,
            subject,
            "mean_progress",
            it.mean_progress,
        );
        t.push(
            experiment,
            seed,
            i,
            subject,
            "env_steps",
            it.env_steps as f64,
        );
        for (skill, p) in &it.proficiency {
            t.push(experiment, seed, i, skill, "proficiency", *p);
        }
        for (pos, skill) in it.scheduled.iter().enumerate() {
            t.push(experiment, seed, i, skill, "scheduled", pos as f64);
        }
    }
    let last = o.iterations.len();
    t.push(
        experiment,
        seed,
        last,
        subject,
        "converged",
        o.converged() as u8 as f64,
    );
    t.push(
        experiment,
        seed,
        last,
        subject,
        "total_env_steps",
        o.env_steps as f64,
    );
    t.push(
        experiment,
        seed,
        last,
        subject,
        "optimize_calls",
        o.optimize_calls as f64,
    );
    if let Some(s) = o.threshold_steps {
        t.push(experiment, seed, last, subject, "threshold_steps", s as f64);
    }
    t
}

/// Runs the curriculum for every seed, writing checkpoints, logs and
/// `train_metrics.csv` under the output directory.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<TrainReport, ExperimentError> {
    let world = cfg.world(cfg.experiment.goal)?;
    let mut report = TrainReport {
        runs: Vec::new(),
        metrics: MetricsTable::new(),
    };
    let logs = cfg.out().join("logs");
    fs::create_dir_all(&logs).map_err(io_err(&logs))?;
    for &seed in &cfg.experiment.seeds {
        let lib = SkillLibrary::tabular(cfg.learner.clone(), cfg.experiment.sharing);
        let run = train_seed(cfg, &world, seed, lib)?;
        report.metrics.extend(outcome_metrics(
            &cfg.experiment.name,
            seed,
            "task",
            &run.outcome,
        ));
        checkpoint::save(
            &cfg.checkpoint_dir(seed),
            world.id.as_str(),
            run.library.tabular_policies(),
        )?;
        let log: String = run.outcome.log.iter().map(|r| format!("{r}\n")).collect();
        let path = logs.join(format!("train-seed-{seed}.log"));
        fs::write(&path, log).map_err(io_err(&path))?;
        report.runs.push(run);
        // rewrite after every seed so partial artifacts survive a failure
        report.metrics.write(&cfg.out().join("train_metrics.csv"))?;
    }
    Ok(report)
}

// ------------------------------------------------------------------ eval

/// Loads a checkpoint directory into a tabular library.
pub fn load_library(
    dir: &Path,
    params: &LearnerParams,
    sharing: Sharing,
) -> Result<SkillLibrary, ExperimentError> {
    let (_, policies) = checkpoint::load(dir)?;
    let mut lib = SkillLibrary::tabular(params.clone(), sharing);
    for (k, p) in policies {
        lib.insert(k, Box::new(p));
    }
    Ok(lib)
}

fn goal_salt(goal: GoalId) -> u64 {
    match goal {
        GoalId::Train => 0x7472_6169_6e00_0000,
        GoalId::Test1 => 0x7465_7374_3100_0000,
        GoalId::Test2 => 0x7465_7374_3200_0000,
    }
}

/// Progress of `episodes` exploration-free episodes of `lib` on `world`.
/// Episode layouts depend only on `seed` and the goal.
pub fn zero_shot(
    cfg: &ExperimentConfig,
    world: &World,
    lib: &mut SkillLibrary,
    goal: GoalId,
    seed: u64,
    episodes: usize,
) -> Result<Vec<f64>, ExperimentError> {
    let mut env = GridEnv::new(cfg.env_config(seed), world)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ goal_salt(goal));
    let planner = cfg.planner();
    let mut out = Vec::with_capacity(episodes);
    for ep in 0..episodes {
        let ep_seed = rng.gen();
        out.push(
            planning_with_skills(&mut env, world, lib, &planner, ep, ep_seed, &mut rng)?.progress,
        );
    }
    Ok(out)
}

/// Checks that every operator on the plan for `world` has a trained skill.
pub fn check_vocabulary(
    world: &World,
    lib: &SkillLibrary,
    goal: GoalId,
    planner: &PlannerConfig,
) -> Result<TaskPlan, ExperimentError> {
    let p = plan(
        &world.problem.init,
        &world.problem.goal,
        &world.grounded,
        planner,
    )?;
    for op in &p.steps {
        if !lib.contains(&lib.key(op)) {
            return Err(ExperimentError::MissingCheckpoint {
                operator: lib.key(op),
                goal,
            });
        }
    }
    Ok(p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Every episode's progress per goal, pooled over seeds.
    pub progress: BTreeMap<GoalId, Vec<f64>>,
    pub metrics: MetricsTable,
}

impl EvalReport {
    pub fn mean(&self, goal: GoalId) -> f64 {
        mean(self.progress.get(&goal).map_or(&[][..], Vec::as_slice))
    }

    pub fn std(&self, goal: GoalId) -> f64 {
        std_dev(self.progress.get(&goal).map_or(&[][..], Vec::as_slice))
    }

    /// Mean over the pooled episodes of every non-train goal.
    pub fn test_mean(&self) -> f64 {
        let v: Vec<f64> = self
            .progress
            .iter()
            .filter(|(g, _)| **g != GoalId::Train)
            .flat_map(|(_, v)| v.iter().copied())
            .collect();
        mean(&v)
    }
}

fn digest_tree(dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) -> Result<(), ExperimentError> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io_err(dir))?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            digest_tree(&p, out)?;
        } else {
            let bytes = fs::read(&p).map_err(io_err(&p))?;
            out.insert(p, Sha256::digest(&bytes).to_vec());
        }
    }
    Ok(())
}

/// Checksums of every file below `dir`.
pub fn checksums(dir: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>, ExperimentError> {
    let mut out = BTreeMap::new();
    digest_tree(dir, &mut out)?;
    Ok(out)
}

/// Zero-shot evaluation of trained checkpoints on every configured goal.
/// Checkpoint files are checksummed before and after; any change is an
/// error.
pub fn cmd_eval_generalize(
    cfg: &ExperimentConfig,
    checkpoints: &Path,
) -> Result<EvalReport, ExperimentError> {
    let before = checksums(checkpoints)?;
    let mut report = EvalReport {
        progress: BTreeMap::new(),
        metrics: MetricsTable::new(),
    };
    let goals = cfg.eval_goals();
    let worlds: Vec<(GoalId, World)> = goals
        .iter()
        .map(|&g| cfg.world(g).map(|w| (g, w)))
        .collect::<Result<_, _>>()?;
    for &seed in &cfg.experiment.seeds {
        let dir = checkpoints.join(format!("seed-{seed}"));
        let mut lib = load_library(&dir, &cfg.learner, cfg.experiment.sharing)?;
        let frozen: Vec<(String, TabularPolicy)> = lib
            .tabular_policies()
            .map(|(k, p)| (k.clone(), p.clone()))
            .collect();
        for (goal, world) in &worlds {
            check_vocabulary(world, &lib, *goal, &cfg.planner())?;
            let p = zero_shot(cfg, world, &mut lib, *goal, seed, cfg.eval.episodes)?;
            let name = &cfg.experiment.name;
            report
                .metrics
                .push(name, seed, 0, goal.as_str(), "mean_progress", mean(&p));
            report
                .metrics
                .push(name, seed, 0, goal.as_str(), "std_progress", std_dev(&p));
            report
                .metrics
                .push(name, seed, 0, goal.as_str(), "episodes", p.len() as f64);
            report.progress.entry(*goal).or_default().extend(p);
        }
        let after: Vec<(String, TabularPolicy)> = lib
            .tabular_policies()
            .map(|(k, p)| (k.clone(), p.clone()))
            .collect();
        if after != frozen {
            return Err(ExperimentError::Impure(dir));
        }
    }
    let after = checksums(checkpoints)?;
    if let Some(p) = before
        .keys()
        .chain(after.keys())
        .find(|p| before.get(*p) != after.get(*p))
    {
        return Err(ExperimentError::Impure(p.clone()));
    }
    report.metrics.write(&cfg.out().join("eval_metrics.csv"))?;
    Ok(report)
}

// -------------------------------------------------------------- transfer

/// Builds a warm-start library for the target world from source policies,
/// renaming skills through `remap` and checking that each pair has the same
/// slot structure.
pub fn remap_library(
    source: Vec<(String, TabularPolicy)>,
    remap: &BTreeMap<String, String>,
    target: &World,
    params: &LearnerParams,
) -> Result<SkillLibrary, ExperimentError> {
    let mut lib = SkillLibrary::tabular(params.clone(), Sharing::Lifted);
    let mut source: BTreeMap<String, TabularPolicy> = source.into_iter().collect();
    for (from, to) in remap {
        let mismatch = |reason: String| ExperimentError::SignatureMismatch {
            source_op: from.clone(),
            target: to.clone(),
            reason,
        };
        let mut p = source
            .remove(from)
            .ok_or_else(|| mismatch("no source skill with that name".into()))?;
        let op = target
            .domain
            .operator(to)
            .ok_or_else(|| mismatch("target domain has no such operator".into()))?;
        let sig = abstract_space_signature(op, &target.domain).map_err(SkillError::from)?;
        if !p.signature.structurally_compatible(&sig) {
            return Err(mismatch(format!(
                "slot dims {:?} vs {:?}",
                p.signature.slots, sig.slots
            )));
        }
        p.signature = sig;
        lib.insert(to.clone(), Box::new(p));
    }
    Ok(lib)
}

#[derive(Debug)]
pub struct TransferPair {
    pub seed: u64,
    pub cold: TrainOutcome,
    pub warm: TrainOutcome,
    /// Zero-shot progress of the remapped skills before any target training.
    pub warm_zero_shot: f64,
}

#[derive(Debug)]
pub struct TransferReport {
    pub pairs: Vec<TransferPair>,
    pub metrics: MetricsTable,
}

impl TransferReport {
    /// Steps to the first all-success iteration, or the total spent when
    /// that never happened.
    fn steps(o: &TrainOutcome) -> f64 {
        o.threshold_steps.unwrap_or(o.env_steps) as f64
    }

    pub fn cold_median(&self) -> f64 {
        median(
            &self
                .pairs
                .iter()
                .map(|p| Self::steps(&p.cold))
                .collect::<Vec<_>>(),
        )
    }

    pub fn warm_median(&self) -> f64 {
        median(
            &self
                .pairs
                .iter()
                .map(|p| Self::steps(&p.warm))
                .collect::<Vec<_>>(),
        )
    }

    pub fn all_reached(&self) -> bool {
        self.pairs
            .iter()
            .all(|p| p.cold.threshold_steps.is_some() && p.warm.threshold_steps.is_some())
    }
}

/// Paired warm/cold training on the target domain. Warm runs start from the
/// remapped source checkpoint of the same seed.
pub fn cmd_transfer(cfg: &ExperimentConfig) -> Result<TransferReport, ExperimentError> {
    let t = cfg
        .transfer
        .as_ref()
        .ok_or_else(|| ExperimentError::Config {
            path: PathBuf::from("<config>"),
            reason: "missing [transfer] section".into(),
        })?;
    let world = cfg.world(cfg.experiment.goal)?;
    let name = &cfg.experiment.name;
    let mut report = TransferReport {
        pairs: Vec::new(),
        metrics: MetricsTable::new(),
    };
    for &seed in &cfg.experiment.seeds {
        let (_, source) = checkpoint::load(&t.source_checkpoints.join(format!("seed-{seed}")))?;
        let mut warm_lib = remap_library(source, &t.remap, &world, &cfg.learner)?;
        let zs = zero_shot(
            cfg,
            &world,
            &mut warm_lib,
            cfg.experiment.goal,
            seed,
            cfg.eval.episodes,
        )?;
        let warm = train_seed(cfg, &world, seed, warm_lib)?;
        let cold_lib = SkillLibrary::tabular(cfg.learner.clone(), Sharing::Lifted);
        let cold = train_seed(cfg, &world, seed, cold_lib)?;
        report
            .metrics
            .extend(outcome_metrics(name, seed, "cold", &cold.outcome));
        report
            .metrics
            .extend(outcome_metrics(name, seed, "warm", &warm.outcome));
        report
            .metrics
            .push(name, seed, 0, "warm", "zero_shot_progress", mean(&zs));
        report.pairs.push(TransferPair {
            seed,
            cold: cold.outcome,
            warm: warm.outcome,
            warm_zero_shot: mean(&zs),
        });
    }
    report
        .metrics
        .write(&cfg.out().join("transfer_metrics.csv"))?;
    Ok(report)
}

// -------------------------------------------------------------- ablation

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AblationPair {
    pub seed: u64,
    pub shared: f64,
    pub unshared: f64,
}

/// Trains `Pick` on the first peg only, then measures zero-shot success of
/// picking the second peg with one skill per lifted operator (shared policy
/// and replay store) versus one per grounding.
pub fn replay_sharing_ablation(
    seed: u64,
    k: usize,
    episodes: usize,
) -> Result<AblationPair, ExperimentError> {
    let world = World::load(DomainId::Peg, GoalId::Train)?;
    let first = world
        .ground("pick", &["peg1"])
        .expect("peg world has peg1")
        .clone();
    let second = world
        .ground("pick", &["peg2"])
        .expect("peg world has peg2")
        .clone();
    let mut rates = [0.0; 2];
    for (slot, sharing) in [Sharing::Lifted, Sharing::Grounded].into_iter().enumerate() {
        let mut env = GridEnv::new(EnvConfig::new(DomainId::Peg), &world)?;
        let mut lib = SkillLibrary::tabular(LearnerParams::default(), sharing);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut prepare = |env: &mut GridEnv, _: &mut SkillLibrary, rng: &mut ChaCha8Rng| {
            env.reset(rng.gen());
            Ok(true)
        };
        crate::skill::optimize(
            &mut env,
            &world,
            &mut lib,
            &first,
            k,
            &mut rng,
            &mut prepare,
        )?;
        let mut eval_rng = ChaCha8Rng::seed_from_u64(seed ^ 0xab1a_7e00);
        let mut wins = 0;
        for _ in 0..episodes {
            env.reset(eval_rng.gen());
            wins += crate::skill::rollout_skill(
                &mut env,
                &world,
                &mut lib,
                &second,
                false,
                &mut eval_rng,
            )?
            .success as usize;
        }
        rates[slot] = wins as f64 / episodes as f64;
    }
    Ok(AblationPair {
        seed,
        shared: rates[0],
        unshared: rates[1],
    })
}

// ------------------------------------------------------------------ plan

/// Parses a domain and problem and plans purely symbolically; no
/// classifiers are needed. `Ok(None)` means the goal is unreachable.
pub fn cmd_plan(
    domain_text: &str,
    domain_file: &Path,
    problem_text: &str,
    problem_file: &Path,
    cfg: &PlannerConfig,
) -> Result<Option<TaskPlan>, ExperimentError> {
    let spec = parse_domain(domain_text).map_err(|source| ExperimentError::Parse {
        file: domain_file.to_path_buf(),
        source,
    })?;
    let prob = parse_problem(problem_text, &spec).map_err(|source| ExperimentError::Parse {
        file: problem_file.to_path_buf(),
        source,
    })?;
    let ops: Vec<_> = spec
        .operators
        .iter()
        .cloned()
        .map(std::sync::Arc::new)
        .collect();
    let grounded = enumerate_groundings(&ops, &prob.objects);
    let init: SymbolicState = prob.init.iter().cloned().collect();
    match plan(&init, &prob.goal, &grounded, cfg) {
        Ok(p) => Ok(Some(p)),
        Err(PlanError::Unsolvable { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}
