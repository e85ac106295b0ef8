//! Deterministic grid-manipulation environments: a single robot with a
//! gripper moves on a W x H grid among graspable items (hammers, pegs, pods)
//! and fixtures (cabinets, holes, a coffee machine). Layout, dynamics and
//! classifier rules are documented in `docs/domains.md`.

pub mod rules;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{self, DomainId, GoalId};
use crate::pddl::{parse_domain, parse_problem, DomainSpec, ParseError};
use crate::planner::enumerate_groundings;
use crate::symbolic::{
    parse_state, Domain, EnvState, GroundOperator, Problem, SymbolicError, SymbolicState,
};

pub use rules::{bind, Kind, Roster};
use rules::{cell, ATTACHED, EXTENT, FOCUS_DX, FOCUS_DY, GRIPPER_OPEN, LID_OPEN, THRESHOLD};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid environment config: {0}")]
    InvalidConfig(String),
    #[error("no entity kind registered for type `{0}`")]
    UnknownType(String),
    #[error("problem must declare exactly one robot, found {0}")]
    RobotCount(usize),
    #[error("no classifier registered for predicate `{0}`")]
    MissingClassifier(String),
    #[error("domain `{domain}` has no goal variant `{goal}`")]
    UnknownGoal { domain: DomainId, goal: GoalId },
    #[error("{file}: {source}")]
    Parse { file: String, source: ParseError },
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
    #[error("invalid action `{0}`")]
    BadAction(String),
    #[error("script line {line}: {reason}")]
    Script { line: usize, reason: String },
}

fn default_width() -> u32 {
    6
}

fn default_height() -> u32 {
    6
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub domain: DomainId,
    #[serde(default = "default_width")]
    pub width: u32,
    #[serde(default = "default_height")]
    pub height: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub randomize_layout: bool,
    /// Static blocked cells. Moves into a wall are no-ops and approach
    /// paths route around them.
    #[serde(default)]
    pub walls: Vec<(i64, i64)>,
    /// Episode-level primitive step budget; `None` is unbounded.
    #[serde(default)]
    pub max_steps: Option<u64>,
}

impl EnvConfig {
    pub fn new(domain: DomainId) -> Self {
        Self {
            domain,
            width: default_width(),
            height: default_height(),
            seed: 0,
            randomize_layout: true,
            walls: Vec::new(),
            max_steps: None,
        }
    }

    pub fn canonical(domain: DomainId) -> Self {
        Self {
            randomize_layout: false,
            ..Self::new(domain)
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if self.width < 4 || self.height < 4 {
            return Err(EnvError::InvalidConfig(format!(
                "grid must be at least 4x4, got {}x{}",
                self.width, self.height
            )));
        }
        if self.width > 64 || self.height > 64 {
            return Err(EnvError::InvalidConfig("grid larger than 64x64".into()));
        }
        for &(x, y) in &self.walls {
            if !self.in_bounds((x, y)) {
                return Err(EnvError::InvalidConfig(format!(
                    "wall ({x}, {y}) outside the grid"
                )));
            }
        }
        Ok(())
    }

    fn in_bounds(&self, (x, y): (i64, i64)) -> bool {
        x >= 0 && y >= 0 && x < self.width as i64 && y < self.height as i64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Move {
        dx: i8,
        dy: i8,
    },
    Grasp,
    Release,
    Pull,
    Push,
    Insert,
    /// Motion primitive: shortest wall-avoiding path to a cell adjacent to
    /// the entity.
    Approach(String),
}

/// Number of primitive (non-approach) actions.
pub const NUM_PRIMITIVES: usize = 9;

impl Action {
    pub const EAST: Action = Action::Move { dx: 1, dy: 0 };
    pub const WEST: Action = Action::Move { dx: -1, dy: 0 };
    pub const NORTH: Action = Action::Move { dx: 0, dy: 1 };
    pub const SOUTH: Action = Action::Move { dx: 0, dy: -1 };

    /// Primitive action by index: e, w, n, s, grasp, release, pull, push,
    /// insert.
    pub fn primitive(i: usize) -> Action {
        match i {
            0 => Action::EAST,
            1 => Action::WEST,
            2 => Action::NORTH,
            3 => Action::SOUTH,
            4 => Action::Grasp,
            5 => Action::Release,
            6 => Action::Pull,
            7 => Action::Push,
            8 => Action::Insert,
            _ => panic!("primitive action index {i} out of range"),
        }
    }

    pub fn primitive_index(&self) -> Option<usize> {
        (0..NUM_PRIMITIVES).find(|&i| &Action::primitive(i) == self)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Move { dx: 1, dy: 0 } => f.write_str("e"),
            Action::Move { dx: -1, dy: 0 } => f.write_str("w"),
            Action::Move { dx: 0, dy: 1 } => f.write_str("n"),
            Action::Move { dx: 0, dy: -1 } => f.write_str("s"),
            Action::Move { dx, dy } => write!(f, "move {dx} {dy}"),
            Action::Grasp => f.write_str("grasp"),
            Action::Release => f.write_str("release"),
            Action::Pull => f.write_str("pull"),
            Action::Push => f.write_str("push"),
            Action::Insert => f.write_str("insert"),
            Action::Approach(e) => write!(f, "approach {e}"),
        }
    }
}

impl FromStr for Action {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let words: Vec<&str> = s.split_whitespace().collect();
        Ok(match words.as_slice() {
            ["e"] => Action::EAST,
            ["w"] => Action::WEST,
            ["n"] => Action::NORTH,
            ["s"] => Action::SOUTH,
            ["grasp"] => Action::Grasp,
            ["release"] => Action::Release,
            ["pull"] => Action::Pull,
            ["push"] => Action::Push,
            ["insert"] => Action::Insert,
            ["approach", e] => Action::Approach(e.to_ascii_lowercase()),
            _ => return Err(EnvError::BadAction(s.to_string())),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub state: EnvState,
    /// Episode step budget exhausted.
    pub terminated: bool,
    /// Primitive steps consumed: 1 for primitives, the path length for
    /// approach.
    pub internal_steps: u64,
}

/// A domain and problem bound to this environment family, plus the
/// grounding table shared by planner and learner.
#[derive(Debug, Clone)]
pub struct World {
    pub id: DomainId,
    pub spec: DomainSpec,
    pub domain: Domain,
    pub problem: Problem,
    pub roster: Roster,
    pub grounded: Vec<GroundOperator>,
}

impl World {
    pub fn load(id: DomainId, goal: GoalId) -> Result<Self, EnvError> {
        let problem =
            corpus::problem_text(id, goal).ok_or(EnvError::UnknownGoal { domain: id, goal })?;
        Self::from_text(id, corpus::domain_text(id), problem)
    }

    pub fn from_text(
        id: DomainId,
        domain_text: &str,
        problem_text: &str,
    ) -> Result<Self, EnvError> {
        let spec = parse_domain(domain_text).map_err(|source| EnvError::Parse {
            file: "domain".into(),
            source,
        })?;
        let p = parse_problem(problem_text, &spec).map_err(|source| EnvError::Parse {
            file: "problem".into(),
            source,
        })?;
        let (domain, problem) = bind(&spec, &p)?;
        let roster = Roster::new(&problem.objects)?;
        let grounded = enumerate_groundings(&domain.operators, &problem.objects);
        Ok(Self {
            id,
            spec,
            domain,
            problem,
            roster,
            grounded,
        })
    }

    pub fn parse(&self, x: &EnvState) -> Result<SymbolicState, EnvError> {
        Ok(parse_state(
            x,
            &self.domain.predicates,
            &self.problem.objects,
        )?)
    }

    pub fn kind_of(&self, entity: &str) -> Option<Kind> {
        self.problem
            .object(entity)
            .and_then(|o| Kind::of_type(&o.type_name))
    }

    pub fn ground(&self, name: &str, args: &[&str]) -> Option<&GroundOperator> {
        self.grounded.iter().find(|g| {
            g.name() == name && g.args().iter().map(String::as_str).eq(args.iter().copied())
        })
    }
}

fn features(kind: Kind, (x, y): (i64, i64)) -> Vec<f64> {
    let (x, y) = (x as f64, y as f64);
    match kind {
        Kind::Robot => vec![x, y, 1.0, 0.0, 0.0],
        Kind::Item => vec![x, y, 0.0],
        Kind::Cabinet => vec![x, y, 0.0],
        Kind::Hole => vec![x, y],
        Kind::Machine => vec![x, y, 1.0],
    }
}

/// Initial state. With `randomize_layout` every entity gets a distinct
/// uniformly drawn free cell (seeded); otherwise the canonical layout: robot
/// at the origin, items on the left, fixtures down the right edge. In the
/// coffee domain items start inside the first cabinet.
pub fn layout(cfg: &EnvConfig, roster: &Roster, seed: u64) -> Result<EnvState, EnvError> {
    cfg.validate()?;
    let (w, h) = (cfg.width as i64, cfg.height as i64);
    let walls: BTreeSet<(i64, i64)> = cfg.walls.iter().copied().collect();
    let fixtures: Vec<(&String, Kind)> = roster
        .cabinets
        .iter()
        .map(|c| (c, Kind::Cabinet))
        .chain(roster.holes.iter().map(|c| (c, Kind::Hole)))
        .chain(roster.machines.iter().map(|c| (c, Kind::Machine)))
        .collect();
    let items_in_cabinet = cfg.domain == DomainId::Coffee && !roster.cabinets.is_empty();
    let loose_items = if items_in_cabinet {
        0
    } else {
        roster.items.len()
    };

    let cells: Vec<(i64, i64)> = if cfg.randomize_layout {
        let mut free: Vec<(i64, i64)> = (0..w)
            .flat_map(|x| (0..h).map(move |y| (x, y)))
            .filter(|c| !walls.contains(c))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        free.shuffle(&mut rng);
        free
    } else {
        let mut c = vec![(0, 0)];
        let item_slots = [
            (1, h - 2),
            (2, 1),
            (1, 1),
            (2, h - 2),
            (1, h / 2),
            (2, h / 2),
        ];
        c.extend(item_slots.iter().take(loose_items));
        let fixture_slots = [
            (w - 1, h - 1),
            (w - 1, 1),
            (w - 1, h / 2),
            (w - 2, h - 1),
            (w - 2, 1),
        ];
        c.extend(fixture_slots.iter().take(fixtures.len()));
        if c.iter().any(|x| walls.contains(x)) {
            return Err(EnvError::InvalidConfig(
                "wall on a canonical layout cell".into(),
            ));
        }
        c
    };
    let needed = 1 + loose_items + fixtures.len();
    if cells.len() < needed || (!cfg.randomize_layout && (loose_items > 6 || fixtures.len() > 5)) {
        return Err(EnvError::InvalidConfig(format!(
            "grid too small for {needed} entities"
        )));
    }

    let mut it = cells.into_iter();
    let mut x = EnvState::new();
    x.insert(
        roster.robot.clone(),
        features(Kind::Robot, it.next().expect("robot cell")),
    );
    let mut item_cells = Vec::new();
    for _ in 0..loose_items {
        item_cells.push(it.next().expect("item cell"));
    }
    let mut first_cabinet = None;
    for (name, kind) in &fixtures {
        let c = it.next().expect("fixture cell");
        if *kind == Kind::Cabinet && first_cabinet.is_none() {
            first_cabinet = Some(c);
        }
        x.insert((*name).clone(), features(*kind, c));
    }
    for (i, name) in roster.items.iter().enumerate() {
        let c = if items_in_cabinet {
            first_cabinet.expect("cabinet present")
        } else {
            item_cells[i]
        };
        x.insert(name.clone(), features(Kind::Item, c));
    }
    Ok(x)
}

fn manhattan(a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - b.0).abs() + (a.1 - b.1).abs()
}

const MOVES: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

/// A stateful environment instance: current state, focus entity and step
/// counter. `transition` is the pure dynamics; `step` applies it.
#[derive(Debug, Clone)]
pub struct GridEnv {
    cfg: EnvConfig,
    roster: Roster,
    kinds: BTreeMap<String, Kind>,
    walls: BTreeSet<(i64, i64)>,
    state: EnvState,
    focus: Option<String>,
    steps: u64,
    total_steps: u64,
}

impl GridEnv {
    pub fn new(cfg: EnvConfig, world: &World) -> Result<Self, EnvError> {
        cfg.validate()?;
        let kinds = world
            .problem
            .objects
            .iter()
            .map(|o| {
                (
                    o.name.clone(),
                    Kind::of_type(&o.type_name).expect("bound types have kinds"),
                )
            })
            .collect();
        let walls = cfg.walls.iter().copied().collect();
        let state = layout(&cfg, &world.roster, cfg.seed)?;
        Ok(Self {
            cfg,
            roster: world.roster.clone(),
            kinds,
            walls,
            state,
            focus: None,
            steps: 0,
            total_steps: 0,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    /// Primitive steps since the last reset.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Primitive steps over the lifetime of this instance; never reset.
    pub fn total_steps(&self) -> u64 {
        self.total_steps
    }

    pub fn focus(&self) -> Option<&str> {
        self.focus.as_deref()
    }

    /// Resets to the layout for `seed`; clears focus and the step counter.
    pub fn reset(&mut self, seed: u64) -> &EnvState {
        self.state =
            layout(&self.cfg, &self.roster, seed).expect("config validated at construction");
        self.focus = None;
        self.steps = 0;
        &self.state
    }

    /// Replaces the current state (snapshot restore). The step counter is
    /// kept; the focus is cleared.
    pub fn set_state(&mut self, x: EnvState) {
        self.state = x;
        self.focus = None;
        self.refresh_focus_features();
    }

    /// Sets the entity the robot's offset features point at.
    pub fn set_focus(&mut self, entity: Option<&str>) {
        self.focus = entity
            .filter(|e| self.kinds.contains_key(*e))
            .map(str::to_string);
        self.refresh_focus_features();
    }

    fn refresh_focus_features(&mut self) {
        let next = with_focus(&self.state, &self.roster.robot, self.focus.as_deref());
        self.state = next;
    }

    pub fn step(&mut self, a: &Action) -> StepResult {
        let (next, internal) = self.transition(&self.state, a);
        self.state = next;
        self.steps += internal;
        self.total_steps += internal;
        StepResult {
            state: self.state.clone(),
            terminated: self.cfg.max_steps.is_some_and(|m| self.steps >= m),
            internal_steps: internal,
        }
    }

    /// Pure dynamics under the current focus. Returns the next state and
    /// the number of primitive steps consumed.
    pub fn transition(&self, s: &EnvState, a: &Action) -> (EnvState, u64) {
        let mut x = s.clone();
        let steps = match a {
            Action::Approach(target) => match self.approach_path(s, target) {
                Some(path) => {
                    if let Some(&last) = path.last() {
                        self.put_robot(&mut x, last);
                    }
                    path.len() as u64
                }
                None => 0,
            },
            Action::Move { dx, dy } => {
                let r = self.robot_cell(s);
                let to = (r.0 + *dx as i64, r.1 + *dy as i64);
                if (dx.abs() + dy.abs()) == 1 && self.cfg.in_bounds(to) && !self.walls.contains(&to)
                {
                    self.put_robot(&mut x, to);
                }
                1
            }
            Action::Grasp => {
                self.grasp(&mut x);
                1
            }
            Action::Release => {
                self.release(&mut x);
                1
            }
            Action::Pull => {
                self.pull(&mut x);
                1
            }
            Action::Push => {
                self.push(&mut x);
                1
            }
            Action::Insert => {
                self.insert(&mut x);
                1
            }
        };
        (
            with_focus(&x, &self.roster.robot, self.focus.as_deref()),
            steps,
        )
    }

    fn robot_cell(&self, x: &EnvState) -> (i64, i64) {
        cell(x, &self.roster.robot).expect("robot present")
    }

    fn cell_of(&self, x: &EnvState, e: &str) -> (i64, i64) {
        cell(x, e).expect("entity present")
    }

    fn f(&self, x: &EnvState, e: &str, i: usize) -> f64 {
        x.get(e).expect("entity present")[i]
    }

    fn set(&self, x: &mut EnvState, e: &str, i: usize, v: f64) {
        x.get_mut(e).expect("entity present")[i] = v;
    }

    fn held(&self, x: &EnvState) -> Option<String> {
        self.roster
            .items
            .iter()
            .find(|i| self.f(x, i, ATTACHED) > THRESHOLD)
            .cloned()
    }

    fn hand_empty(&self, x: &EnvState) -> bool {
        self.f(x, &self.roster.robot, GRIPPER_OPEN) > THRESHOLD
    }

    fn fixture_at(&self, x: &EnvState, c: (i64, i64), kind: Kind) -> Option<String> {
        let names = match kind {
            Kind::Cabinet => &self.roster.cabinets,
            Kind::Hole => &self.roster.holes,
            Kind::Machine => &self.roster.machines,
            _ => return None,
        };
        names.iter().find(|n| self.cell_of(x, n) == c).cloned()
    }

    fn loose_items_at(&self, x: &EnvState, c: (i64, i64)) -> Vec<String> {
        self.roster
            .items
            .iter()
            .filter(|i| self.f(x, i, ATTACHED) <= THRESHOLD && self.cell_of(x, i) == c)
            .cloned()
            .collect()
    }

    fn put_robot(&self, x: &mut EnvState, to: (i64, i64)) {
        let held = self.held(x);
        let robot = self.roster.robot.clone();
        for e in std::iter::once(robot).chain(held) {
            self.set(x, &e, rules::X, to.0 as f64);
            self.set(x, &e, rules::Y, to.1 as f64);
        }
    }

    fn grasp(&self, x: &mut EnvState) {
        if !self.hand_empty(x) {
            return;
        }
        let c = self.robot_cell(x);
        if self.fixture_at(x, c, Kind::Hole).is_some()
            || self.fixture_at(x, c, Kind::Machine).is_some()
        {
            return;
        }
        if let Some(cab) = self.fixture_at(x, c, Kind::Cabinet) {
            if self.f(x, &cab, EXTENT) <= THRESHOLD {
                return;
            }
        }
        if let Some(item) = self.loose_items_at(x, c).first() {
            self.set(x, item, ATTACHED, 1.0);
            let robot = self.roster.robot.clone();
            self.set(x, &robot, GRIPPER_OPEN, 0.0);
        }
    }

    fn drop_held(&self, x: &mut EnvState, item: &str) {
        self.set(x, item, ATTACHED, 0.0);
        let robot = self.roster.robot.clone();
        self.set(x, &robot, GRIPPER_OPEN, 1.0);
    }

    fn release(&self, x: &mut EnvState) {
        let Some(item) = self.held(x) else { return };
        let c = self.robot_cell(x);
        if self.fixture_at(x, c, Kind::Hole).is_some()
            || self.fixture_at(x, c, Kind::Machine).is_some()
        {
            return;
        }
        match self.fixture_at(x, c, Kind::Cabinet) {
            Some(cab) if self.f(x, &cab, EXTENT) > THRESHOLD => self.drop_held(x, &item),
            Some(_) => {}
            None if self.loose_items_at(x, c).is_empty() => self.drop_held(x, &item),
            None => {}
        }
    }

    fn pull(&self, x: &mut EnvState) {
        if !self.hand_empty(x) {
            return;
        }
        let c = self.robot_cell(x);
        let Some(cab) = self.fixture_at(x, c, Kind::Cabinet) else {
            return;
        };
        let other_open = self
            .roster
            .cabinets
            .iter()
            .any(|o| *o != cab && self.f(x, o, EXTENT) > 0.0);
        if other_open {
            return;
        }
        let e = (self.f(x, &cab, EXTENT) + 0.5).min(1.0);
        self.set(x, &cab, EXTENT, e);
    }

    fn push(&self, x: &mut EnvState) {
        if !self.hand_empty(x) {
            return;
        }
        let c = self.robot_cell(x);
        if let Some(cab) = self.fixture_at(x, c, Kind::Cabinet) {
            self.set(x, &cab, EXTENT, 0.0);
        } else if let Some(m) = self.fixture_at(x, c, Kind::Machine) {
            self.set(x, &m, LID_OPEN, 0.0);
        }
    }

    fn insert(&self, x: &mut EnvState) {
        let Some(item) = self.held(x) else { return };
        let c = self.robot_cell(x);
        let fits = if self.fixture_at(x, c, Kind::Hole).is_some() {
            true
        } else if let Some(m) = self.fixture_at(x, c, Kind::Machine) {
            self.f(x, &m, LID_OPEN) > THRESHOLD
        } else {
            false
        };
        if fits && self.loose_items_at(x, c).is_empty() {
            self.drop_held(x, &item);
        }
    }

    /// Item inside a cabinet that is not open.
    fn enclosed(&self, x: &EnvState, e: &str) -> bool {
        if self.kinds.get(e) != Some(&Kind::Item) || self.f(x, e, ATTACHED) > THRESHOLD {
            return false;
        }
        let c = self.cell_of(x, e);
        self.fixture_at(x, c, Kind::Cabinet)
            .is_some_and(|cab| self.f(x, &cab, EXTENT) <= THRESHOLD)
    }

    /// Cells visited (excluding the start) on a shortest wall-avoiding path
    /// to the nearest cell adjacent to `target`. `Some(vec![])` when the
    /// robot is already within distance 1; `None` when unreachable.
    pub fn approach_path(&self, x: &EnvState, target: &str) -> Option<Vec<(i64, i64)>> {
        if !self.kinds.contains_key(target)
            || target == self.roster.robot
            || self.enclosed(x, target)
        {
            return None;
        }
        let t = self.cell_of(x, target);
        let start = self.robot_cell(x);
        if manhattan(start, t) <= 1 {
            return Some(Vec::new());
        }
        let mut prev: BTreeMap<(i64, i64), (i64, i64)> = BTreeMap::new();
        let mut queue = VecDeque::from([start]);
        prev.insert(start, start);
        while let Some(c) = queue.pop_front() {
            if manhattan(c, t) == 1 {
                let mut path = vec![c];
                let mut cur = c;
                while prev[&cur] != start {
                    cur = prev[&cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            for (dx, dy) in MOVES {
                let n = (c.0 + dx, c.1 + dy);
                if self.cfg.in_bounds(n) && !self.walls.contains(&n) && !prev.contains_key(&n) {
                    prev.insert(n, c);
                    queue.push_back(n);
                }
            }
        }
        None
    }
}

fn with_focus(x: &EnvState, robot: &str, focus: Option<&str>) -> EnvState {
    let mut out = x.clone();
    let (dx, dy) = match focus.and_then(|f| x.get(f)) {
        Some(t) => {
            let r = x.get(robot).expect("robot present");
            (t[0] - r[0], t[1] - r[1])
        }
        None => (0.0, 0.0),
    };
    let r = out.get_mut(robot).expect("robot present");
    r[FOCUS_DX] = dx;
    r[FOCUS_DY] = dy;
    out
}

/// A scripted trajectory: segments of primitive actions, each labelled with
/// the ground operator it realizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Script {
    pub segments: Vec<(String, Vec<Action>)>,
}

impl Script {
    /// Format: `[op arg...]` starts a segment; other non-blank lines are
    /// actions, optionally with a repeat count (`e 5`); `#` starts a comment.
    pub fn parse(text: &str) -> Result<Script, EnvError> {
        let mut segments: Vec<(String, Vec<Action>)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |reason: &str| EnvError::Script {
                line: i + 1,
                reason: reason.to_string(),
            };
            if let Some(op) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                segments.push((format!("({})", op.trim().to_ascii_lowercase()), Vec::new()));
                continue;
            }
            let seg = segments
                .last_mut()
                .ok_or_else(|| bad("action before the first `[op]` header"))?;
            let (act, count) = match line.rsplit_once(' ') {
                Some((a, n)) if n.chars().all(|c| c.is_ascii_digit()) => {
                    (a, n.parse::<usize>().map_err(|_| bad("bad repeat count"))?)
                }
                _ => (line, 1),
            };
            let a: Action = act.parse().map_err(|_| bad("unknown action"))?;
            seg.1.extend(std::iter::repeat_n(a, count));
        }
        Ok(Script { segments })
    }

    pub fn actions(&self) -> impl Iterator<Item = &Action> {
        self.segments.iter().flat_map(|(_, a)| a)
    }
}
