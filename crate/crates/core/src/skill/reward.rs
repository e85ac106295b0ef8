use crate::env::{EnvConfig, World};
use crate::symbolic::{atom_holds, EnvState, GroundAtom, GroundOperator};

use super::{skill_target, LearnerParams, SkillError};

#[derive(Debug, Clone, PartialEq)]
pub struct RewardSpec {
    /// Weight of the effect fraction; the shaping term gets `1 - lambda_eff`.
    pub lambda_eff: f64,
    /// Distance normalizer for the shaping potential (grid diameter).
    pub max_dist: f64,
}

impl RewardSpec {
    pub fn from_params(p: &LearnerParams, cfg: &EnvConfig) -> Self {
        Self {
            lambda_eff: p.lambda_eff,
            max_dist: (cfg.width + cfg.height - 2) as f64,
        }
    }
}

/// `R(x) = λ·effect_fraction(x) + (1-λ)·Φ(x)` for one ground operator, with
/// `Φ = 1 - d/max_dist` and `d` the Manhattan distance from the gripper to
/// the skill target (the held object's distance once the first parameter
/// is in hand).
#[derive(Debug, Clone)]
pub struct OperatorReward<'w> {
    world: &'w World,
    op: GroundOperator,
    spec: RewardSpec,
    add: Vec<GroundAtom>,
    del: Vec<GroundAtom>,
}

impl<'w> OperatorReward<'w> {
    pub fn new(
        world: &'w World,
        op: &GroundOperator,
        spec: RewardSpec,
    ) -> Result<Self, SkillError> {
        if !op.has_effects() {
            return Err(SkillError::EmptyEffects(op.to_string()));
        }
        Ok(Self {
            world,
            op: op.clone(),
            spec,
            add: op.add.iter().cloned().collect(),
            del: op.del.iter().cloned().collect(),
        })
    }

    /// Fraction of add atoms true plus delete atoms false.
    pub fn effect_fraction(&self, x: &EnvState) -> Result<f64, SkillError> {
        let preds = &self.world.domain.predicates;
        let mut hit = 0usize;
        for a in &self.add {
            hit += atom_holds(x, preds, a)? as usize;
        }
        for a in &self.del {
            hit += !atom_holds(x, preds, a)? as usize;
        }
        Ok(hit as f64 / (self.add.len() + self.del.len()) as f64)
    }

    pub fn potential(&self, x: &EnvState) -> f64 {
        let robot = x.get(&self.world.roster.robot).expect("robot present");
        let target = skill_target(self.world, &self.op, x);
        let Some(t) = x.get(target) else { return 0.0 };
        let d = (t[0] - robot[0]).abs() + (t[1] - robot[1]).abs();
        if self.spec.max_dist <= 0.0 {
            return 1.0;
        }
        (1.0 - d / self.spec.max_dist).clamp(0.0, 1.0)
    }

    pub fn eval(&self, x: &EnvState) -> Result<f64, SkillError> {
        let l = self.spec.lambda_eff.clamp(0.0, 1.0);
        let r = l * self.effect_fraction(x)? + (1.0 - l) * self.potential(x);
        Ok(r.clamp(0.0, 1.0))
    }
}
