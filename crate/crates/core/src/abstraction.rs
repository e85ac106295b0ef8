//! Skill-relevant state projection: the robot's features followed by the
//! features of the operator's parameter objects, in parameter order.

use thiserror::Error;

use crate::symbolic::{Domain, EnvState, GroundOperator, LiftedOperator, SymbolicError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AbstractionError {
    #[error("state integrity: no features for `{0}`")]
    MissingEntity(String),
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbstractState {
    pub layout: Vec<(String, Vec<f64>)>,
}

impl AbstractState {
    pub fn dim(&self) -> usize {
        self.layout.iter().map(|(_, v)| v.len()).sum()
    }

    /// Flat concatenation.
    pub fn vector(&self) -> Vec<f64> {
        self.layout
            .iter()
            .flat_map(|(_, v)| v.iter().copied())
            .collect()
    }

    /// Writes the abstract features back into `x`, leaving every other
    /// entity untouched.
    pub fn embed(&self, x: &EnvState) -> EnvState {
        let mut out = x.clone();
        for (e, v) in &self.layout {
            out.insert(e.clone(), v.clone());
        }
        out
    }
}

/// Projects `x` onto `robot` plus the image of `op`'s substitution.
pub fn extract(
    x: &EnvState,
    op: &GroundOperator,
    robot: &str,
) -> Result<AbstractState, AbstractionError> {
    let mut layout = Vec::with_capacity(op.args().len() + 1);
    for e in std::iter::once(robot).chain(op.args().iter().map(String::as_str)) {
        let v = x
            .get(e)
            .ok_or_else(|| AbstractionError::MissingEntity(e.to_string()))?;
        layout.push((e.to_string(), v.to_vec()));
    }
    Ok(AbstractState { layout })
}

/// Layout of a lifted operator's abstract space: (type, dim) per slot,
/// robot first. Shared by all groundings.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpaceSignature {
    pub operator: String,
    pub slots: Vec<(String, usize)>,
}

impl SpaceSignature {
    pub fn dim(&self) -> usize {
        self.slots.iter().map(|(_, d)| d).sum()
    }

    /// Same slot dimensions in the same order. Type names may differ, so a
    /// hammer-picking skill can serve a pod-picking operator.
    pub fn structurally_compatible(&self, other: &SpaceSignature) -> bool {
        self.slots.len() == other.slots.len()
            && self.slots.iter().zip(&other.slots).all(|(a, b)| a.1 == b.1)
    }
}

pub fn abstract_space_signature(
    op: &LiftedOperator,
    domain: &Domain,
) -> Result<SpaceSignature, AbstractionError> {
    let mut slots = Vec::with_capacity(op.params.len() + 1);
    let robot = domain.object_type(&domain.robot_type)?;
    slots.push((robot.name.clone(), robot.feature_dim));
    for p in &op.params {
        let t = domain.object_type(&p.type_name)?;
        slots.push((t.name.clone(), t.feature_dim));
    }
    Ok(SpaceSignature {
        operator: op.name.clone(),
        slots,
    })
}
