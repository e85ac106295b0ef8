//! Symbolic planning with learned low-level skills.

pub mod abstraction;
pub mod corpus;
pub mod curriculum;
pub mod env;
pub mod experiment;
pub mod pddl;
pub mod planner;
pub mod skill;
pub mod symbolic;
