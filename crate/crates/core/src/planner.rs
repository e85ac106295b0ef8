//! Grounding and forward A* search over symbolic states.

use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::symbolic::{
    applicable, ground_operator, holds, successor, typed_tuples, Goal, GroundOperator,
    LiftedOperator, Object, Substitution, SymbolicState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Heuristic {
    /// Uniform-cost search; plans are shortest.
    #[default]
    Zero,
    /// Number of goal atoms not yet true. Admissible only when no operator
    /// achieves more than one goal atom.
    GoalCount,
}

impl std::str::FromStr for Heuristic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zero" => Ok(Heuristic::Zero),
            "goal-count" | "goal_count" => Ok(Heuristic::GoalCount),
            other => Err(format!("unknown heuristic `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlannerConfig {
    pub heuristic: Heuristic,
    pub max_expansions: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            heuristic: Heuristic::Zero,
            max_expansions: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("goal unreachable: search space exhausted after {expanded} expansions")]
    Unsolvable { expanded: usize },
    #[error("search budget of {limit} expansions exceeded")]
    BudgetExceeded { limit: usize },
    #[error("invalid planner config: max_expansions must be at least 1")]
    InvalidConfig,
}

/// A plan plus the symbolic states it is expected to pass through.
/// `expected_states[0]` is the initial state and `expected_states[i + 1]`
/// the state after `steps[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskPlan {
    pub steps: Vec<GroundOperator>,
    pub expected_states: Vec<SymbolicState>,
}

impl TaskPlan {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Builds the expected state chain; `None` if a step is inapplicable.
    pub fn from_steps(init: &SymbolicState, steps: Vec<GroundOperator>) -> Option<Self> {
        let mut expected_states = vec![init.clone()];
        for op in &steps {
            let s = expected_states.last().expect("non-empty");
            if !applicable(op, s) {
                return None;
            }
            expected_states.push(successor(op, s));
        }
        Some(Self {
            steps,
            expected_states,
        })
    }

    /// One step per line, `(op arg1 arg2)`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&s.to_string());
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for TaskPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

/// All type-correct groundings. Order: operators as given, then bindings in
/// lexicographic object-name order per parameter.
pub fn enumerate_groundings(
    operators: &[Arc<LiftedOperator>],
    objects: &[Object],
) -> Vec<GroundOperator> {
    let mut out = Vec::new();
    for op in operators {
        let types = op.param_types();
        for tuple in typed_tuples(&types, objects) {
            let delta: Substitution = op
                .params
                .iter()
                .zip(&tuple)
                .map(|(p, o)| (p.name.clone(), o.name.clone()))
                .collect();
            out.push(ground_operator(op, &delta, objects).expect("typed tuple grounds"));
        }
    }
    out
}

fn estimate(h: Heuristic, s: &SymbolicState, goal: &Goal) -> usize {
    match h {
        Heuristic::Zero => 0,
        Heuristic::GoalCount => goal.atoms.iter().filter(|a| !s.contains(a)).count(),
    }
}

struct Node {
    state: SymbolicState,
    parent: Option<(usize, usize)>,
    g: usize,
    closed: bool,
}

/// A* from `init` to `goal` with unit costs. The open list is ordered by
/// (f, g, insertion order); successors are inserted in grounding order, so
/// ties between equally short plans go to the canonically earlier operator.
pub fn plan(
    init: &SymbolicState,
    goal: &Goal,
    grounded: &[GroundOperator],
    cfg: &PlannerConfig,
) -> Result<TaskPlan, PlanError> {
    if cfg.max_expansions == 0 {
        return Err(PlanError::InvalidConfig);
    }
    let mut nodes: Vec<Node> = vec![Node {
        state: init.clone(),
        parent: None,
        g: 0,
        closed: false,
    }];
    let mut index: HashMap<SymbolicState, usize> = HashMap::new();
    index.insert(init.clone(), 0);
    let mut open = BinaryHeap::new();
    let mut seq = 0usize;
    open.push(Reverse((
        estimate(cfg.heuristic, init, goal),
        0usize,
        seq,
        0usize,
    )));
    let mut expanded = 0usize;

    while let Some(Reverse((_, g, _, id))) = open.pop() {
        if nodes[id].closed || g > nodes[id].g {
            continue;
        }
        if holds(goal, &nodes[id].state) {
            return Ok(reconstruct(&nodes, grounded, id));
        }
        if expanded == cfg.max_expansions {
            return Err(PlanError::BudgetExceeded {
                limit: cfg.max_expansions,
            });
        }
        expanded += 1;
        nodes[id].closed = true;
        for (k, op) in grounded.iter().enumerate() {
            if !applicable(op, &nodes[id].state) {
                continue;
            }
            let next = successor(op, &nodes[id].state);
            let g2 = g + 1;
            let target = match index.entry(next) {
                Entry::Occupied(e) => {
                    let j = *e.get();
                    if g2 >= nodes[j].g {
                        continue;
                    }
                    nodes[j].g = g2;
                    nodes[j].parent = Some((id, k));
                    nodes[j].closed = false;
                    j
                }
                Entry::Vacant(e) => {
                    let j = nodes.len();
                    nodes.push(Node {
                        state: e.key().clone(),
                        parent: Some((id, k)),
                        g: g2,
                        closed: false,
                    });
                    e.insert(j);
                    j
                }
            };
            seq += 1;
            let f = g2 + estimate(cfg.heuristic, &nodes[target].state, goal);
            open.push(Reverse((f, g2, seq, target)));
        }
    }
    Err(PlanError::Unsolvable { expanded })
}

fn reconstruct(nodes: &[Node], grounded: &[GroundOperator], mut id: usize) -> TaskPlan {
    let mut steps = Vec::new();
    let mut states = vec![nodes[id].state.clone()];
    while let Some((parent, k)) = nodes[id].parent {
        steps.push(grounded[k].clone());
        id = parent;
        states.push(nodes[id].state.clone());
    }
    steps.reverse();
    states.reverse();
    TaskPlan {
        steps,
        expected_states: states,
    }
}

/// True iff every step applies in turn starting from `init` and the final
/// state satisfies `goal`. The plan's cached `expected_states` are ignored.
pub fn validate_plan(p: &TaskPlan, init: &SymbolicState, goal: &Goal) -> bool {
    let mut s = init.clone();
    for op in &p.steps {
        if !applicable(op, &s) {
            return false;
        }
        s = successor(op, &s);
    }
    holds(goal, &s)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("plan line {line}: {reason}")]
pub struct PlanParseError {
    pub line: usize,
    pub reason: String,
}

/// Reads a plan dump back against a grounding table.
pub fn parse_plan_dump(
    text: &str,
    grounded: &[GroundOperator],
) -> Result<Vec<GroundOperator>, PlanParseError> {
    let mut steps = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let err = |reason: String| PlanParseError {
            line: i + 1,
            reason,
        };
        let inner = line
            .strip_prefix('(')
            .and_then(|l| l.strip_suffix(')'))
            .ok_or_else(|| err("expected `(op arg...)`".into()))?;
        let mut words = inner.split_whitespace().map(str::to_ascii_lowercase);
        let name = words.next().ok_or_else(|| err("empty step".into()))?;
        let args: Vec<String> = words.collect();
        let op = grounded
            .iter()
            .find(|g| g.name() == name && g.args() == args.as_slice())
            .ok_or_else(|| err(format!("no grounding `{line}`")))?;
        steps.push(op.clone());
    }
    Ok(steps)
}
