//! Bundled domain/problem files and golden trajectories, embedded at
//! compile time so every binary ships the evaluation domains.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainId {
    Drawer,
    Peg,
    Coffee,
}

impl DomainId {
    pub const ALL: [DomainId; 3] = [DomainId::Drawer, DomainId::Peg, DomainId::Coffee];

    pub fn as_str(self) -> &'static str {
        match self {
            DomainId::Drawer => "drawer",
            DomainId::Peg => "peg",
            DomainId::Coffee => "coffee",
        }
    }

    pub fn goals(self) -> &'static [GoalId] {
        match self {
            DomainId::Drawer | DomainId::Peg => &[GoalId::Train, GoalId::Test1, GoalId::Test2],
            DomainId::Coffee => &[GoalId::Train],
        }
    }
}

impl fmt::Display for DomainId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DomainId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "drawer" => Ok(DomainId::Drawer),
            "peg" => Ok(DomainId::Peg),
            "coffee" => Ok(DomainId::Coffee),
            other => Err(format!(
                "unknown domain `{other}` (expected drawer, peg or coffee)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoalId {
    Train,
    Test1,
    Test2,
}

impl GoalId {
    pub fn as_str(self) -> &'static str {
        match self {
            GoalId::Train => "train",
            GoalId::Test1 => "test1",
            GoalId::Test2 => "test2",
        }
    }
}

impl fmt::Display for GoalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GoalId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(GoalId::Train),
            "test1" => Ok(GoalId::Test1),
            "test2" => Ok(GoalId::Test2),
            other => Err(format!(
                "unknown goal `{other}` (expected train, test1 or test2)"
            )),
        }
    }
}

pub fn domain_text(d: DomainId) -> &'static str {
    match d {
        DomainId::Drawer => include_str!("../corpus/drawer/domain.pddl"),
        DomainId::Peg => include_str!("../corpus/peg/domain.pddl"),
        DomainId::Coffee => include_str!("../corpus/coffee/domain.pddl"),
    }
}

pub fn problem_text(d: DomainId, g: GoalId) -> Option<&'static str> {
    Some(match (d, g) {
        (DomainId::Drawer, GoalId::Train) => include_str!("../corpus/drawer/train.pddl"),
        (DomainId::Drawer, GoalId::Test1) => include_str!("../corpus/drawer/test1.pddl"),
        (DomainId::Drawer, GoalId::Test2) => include_str!("../corpus/drawer/test2.pddl"),
        (DomainId::Peg, GoalId::Train) => include_str!("../corpus/peg/train.pddl"),
        (DomainId::Peg, GoalId::Test1) => include_str!("../corpus/peg/test1.pddl"),
        (DomainId::Peg, GoalId::Test2) => include_str!("../corpus/peg/test2.pddl"),
        (DomainId::Coffee, GoalId::Train) => include_str!("../corpus/coffee/train.pddl"),
        (DomainId::Coffee, _) => return None,
    })
}

/// Scripted action list solving the train goal from the canonical layout.
pub fn golden_trajectory(d: DomainId) -> &'static str {
    match d {
        DomainId::Drawer => include_str!("../corpus/drawer/train.golden"),
        DomainId::Peg => include_str!("../corpus/peg/train.golden"),
        DomainId::Coffee => include_str!("../corpus/coffee/train.golden"),
    }
}

/// Every bundled planning-language file as (relative path, text).
pub fn pddl_files() -> Vec<(String, &'static str)> {
    let mut out = Vec::new();
    for d in DomainId::ALL {
        out.push((format!("{d}/domain.pddl"), domain_text(d)));
        for g in d.goals() {
            if let Some(t) = problem_text(d, *g) {
                out.push((format!("{d}/{g}.pddl"), t));
            }
        }
    }
    out
}
