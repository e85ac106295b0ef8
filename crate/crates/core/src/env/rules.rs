//! Entity kinds, feature layouts and the predicate classifier registry.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::pddl::{DomainSpec, ProblemSpec};
use crate::symbolic::{
    ClassifierFn, Domain, EnvState, LiftedOperator, Object, ObjectType, Predicate, Problem,
};

use super::EnvError;

pub const ROBOT_TYPE: &str = "robot";

/// Threshold on 0/1 flags and on the cabinet opening extent.
pub const THRESHOLD: f64 = 0.5;

// feature indices
pub const X: usize = 0;
pub const Y: usize = 1;
pub const GRIPPER_OPEN: usize = 2;
pub const FOCUS_DX: usize = 3;
pub const FOCUS_DY: usize = 4;
pub const ATTACHED: usize = 2;
pub const EXTENT: usize = 2;
pub const LID_OPEN: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Kind {
    Robot,
    /// Graspable: hammer, peg, pod.
    Item,
    Cabinet,
    Hole,
    Machine,
}

impl Kind {
    pub fn of_type(type_name: &str) -> Option<Kind> {
        Some(match type_name {
            ROBOT_TYPE => Kind::Robot,
            "hammer" | "peg" | "pod" => Kind::Item,
            "cabinet" => Kind::Cabinet,
            "hole" => Kind::Hole,
            "machine" => Kind::Machine,
            _ => return None,
        })
    }

    /// robot (x, y, gripper_open, dx, dy); item (x, y, attached);
    /// cabinet (x, y, extent); hole (x, y); machine (x, y, lid_open)
    pub fn feature_dim(self) -> usize {
        match self {
            Kind::Robot => 5,
            Kind::Item | Kind::Cabinet | Kind::Machine => 3,
            Kind::Hole => 2,
        }
    }

    pub fn is_fixture(self) -> bool {
        matches!(self, Kind::Cabinet | Kind::Hole | Kind::Machine)
    }
}

/// Names of the problem's entities grouped by kind, captured by classifiers.
#[derive(Debug, Clone, Default)]
pub struct Roster {
    pub robot: String,
    pub items: Vec<String>,
    pub cabinets: Vec<String>,
    pub holes: Vec<String>,
    pub machines: Vec<String>,
}

impl Roster {
    pub fn new(objects: &[Object]) -> Result<Self, EnvError> {
        let mut r = Roster::default();
        let mut robots = 0;
        for o in objects {
            match Kind::of_type(&o.type_name)
                .ok_or_else(|| EnvError::UnknownType(o.type_name.clone()))?
            {
                Kind::Robot => {
                    robots += 1;
                    r.robot = o.name.clone();
                }
                Kind::Item => r.items.push(o.name.clone()),
                Kind::Cabinet => r.cabinets.push(o.name.clone()),
                Kind::Hole => r.holes.push(o.name.clone()),
                Kind::Machine => r.machines.push(o.name.clone()),
            }
        }
        if robots != 1 {
            return Err(EnvError::RobotCount(robots));
        }
        Ok(r)
    }

    pub fn fixtures(&self) -> impl Iterator<Item = &String> {
        self.cabinets
            .iter()
            .chain(&self.holes)
            .chain(&self.machines)
    }
}

fn feat(x: &EnvState, e: &str, i: usize) -> Result<f64, String> {
    let v = x.get(e).ok_or_else(|| format!("no features for `{e}`"))?;
    v.get(i)
        .copied()
        .ok_or_else(|| format!("`{e}` has no feature {i}"))
}

pub(crate) fn cell(x: &EnvState, e: &str) -> Result<(i64, i64), String> {
    Ok((feat(x, e, X)?.round() as i64, feat(x, e, Y)?.round() as i64))
}

fn flag(x: &EnvState, e: &str, i: usize) -> Result<bool, String> {
    Ok(feat(x, e, i)? > THRESHOLD)
}

fn colocated(x: &EnvState, a: &str, b: &str) -> Result<bool, String> {
    Ok(cell(x, a)? == cell(x, b)?)
}

/// An unattached item sits at `e`'s cell.
fn occupied(x: &EnvState, roster: &Roster, e: &str) -> Result<bool, String> {
    for i in &roster.items {
        if !flag(x, i, ATTACHED)? && colocated(x, i, e)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Classifier for a predicate name, bound to a roster. `None` if the name
/// is not in the registry.
pub fn classifier(name: &str, roster: &Roster) -> Option<Arc<ClassifierFn>> {
    let r = roster.clone();
    let f: Arc<ClassifierFn> = match name {
        "handempty" => Arc::new(move |x, _| flag(x, &r.robot, GRIPPER_OPEN)),
        "holding" => Arc::new(|x, a| flag(x, a[0], ATTACHED)),
        "ontable" => Arc::new(move |x, a| {
            if flag(x, a[0], ATTACHED)? {
                return Ok(false);
            }
            for f in r.fixtures() {
                if colocated(x, a[0], f)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }),
        "open" => Arc::new(|x, a| flag(x, a[0], EXTENT)),
        "closed" => Arc::new(|x, a| Ok(!flag(x, a[0], EXTENT)?)),
        "allclosed" => Arc::new(move |x, _| {
            for c in &r.cabinets {
                if flag(x, c, EXTENT)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }),
        "cabinetopen" => Arc::new(move |x, _| {
            for c in &r.cabinets {
                if flag(x, c, EXTENT)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }),
        "incabinet" | "inhole" | "inholder" => {
            Arc::new(|x, a| Ok(!flag(x, a[0], ATTACHED)? && colocated(x, a[0], a[1])?))
        }
        "holeempty" | "holderempty" => Arc::new(move |x, a| Ok(!occupied(x, &r, a[0])?)),
        "accessible" => Arc::new(move |x, a| {
            if flag(x, a[0], ATTACHED)? {
                return Ok(false);
            }
            for m in &r.machines {
                if colocated(x, a[0], m)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }),
        "lidopen" => Arc::new(|x, a| flag(x, a[0], LID_OPEN)),
        "lidclosed" => Arc::new(|x, a| Ok(!flag(x, a[0], LID_OPEN)?)),
        _ => return None,
    };
    Some(f)
}

/// Every predicate name the registry can bind.
pub const REGISTERED: &[&str] = &[
    "handempty",
    "holding",
    "ontable",
    "open",
    "closed",
    "allclosed",
    "cabinetopen",
    "incabinet",
    "inhole",
    "inholder",
    "holeempty",
    "holderempty",
    "accessible",
    "lidopen",
    "lidclosed",
];

/// Binds a parsed domain and problem to feature dimensions and
/// classifiers. Unknown types and predicates without a classifier are
/// load errors.
pub fn bind(spec: &DomainSpec, problem: &ProblemSpec) -> Result<(Domain, Problem), EnvError> {
    let roster = Roster::new(&problem.objects)?;
    let mut types = Vec::new();
    for t in &spec.types {
        let kind = Kind::of_type(t).ok_or_else(|| EnvError::UnknownType(t.clone()))?;
        types.push(ObjectType::new(t.clone(), kind.feature_dim()).expect("non-zero dims"));
    }
    if !spec.types.iter().any(|t| t == ROBOT_TYPE) {
        return Err(EnvError::UnknownType(ROBOT_TYPE.into()));
    }
    let mut predicates = Vec::new();
    for sig in &spec.predicates {
        let f = classifier(&sig.name, &roster)
            .ok_or_else(|| EnvError::MissingClassifier(sig.name.clone()))?;
        predicates.push(Predicate::new(
            sig.name.clone(),
            sig.arg_types.clone(),
            move |x, a| f(x, a),
        ));
    }
    let operators: Vec<Arc<LiftedOperator>> =
        spec.operators.iter().cloned().map(Arc::new).collect();
    let domain = Domain {
        name: spec.name.clone(),
        types,
        predicates,
        operators,
        robot_type: ROBOT_TYPE.into(),
    };
    let problem = Problem {
        name: problem.name.clone(),
        objects: problem.objects.clone(),
        init: problem.init.iter().cloned().collect(),
        goal: problem.goal.clone(),
    };
    Ok((domain, problem))
}

/// Predicate names of a domain spec that the registry cannot bind.
pub fn unbound_predicates(spec: &DomainSpec) -> BTreeSet<String> {
    spec.predicates
        .iter()
        .filter(|p| !REGISTERED.contains(&p.name.as_str()))
        .map(|p| p.name.clone())
        .collect()
}
