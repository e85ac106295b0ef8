//! Typed vocabulary (object types, predicates, lifted and ground operators),
//! state parsing and the set-algebraic transition model the planner searches.
//!
//! Everything here is an immutable value after construction, so domains and
//! ground-operator tables can be shared freely between planner and learner
//! workers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymbolicError {
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("duplicate type `{0}`")]
    DuplicateType(String),
    #[error("type `{0}` must have a feature dimension of at least 1")]
    EmptyFeatureDim(String),
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("duplicate object `{0}`")]
    DuplicateObject(String),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("duplicate predicate `{0}`")]
    DuplicatePredicate(String),
    #[error("`{predicate}` takes {expected} argument(s), got {found}")]
    Arity {
        predicate: String,
        expected: usize,
        found: usize,
    },
    #[error("argument `{arg}` of `{predicate}` has type `{found}`, expected `{expected}`")]
    ArgumentType {
        predicate: String,
        arg: String,
        expected: String,
        found: String,
    },
    #[error("operator `{op}`: variable `{var}` is not a parameter")]
    UnboundVariable { op: String, var: String },
    #[error("operator `{op}`: duplicate parameter `{var}`")]
    DuplicateParameter { op: String, var: String },
    #[error("operator `{op}` both adds and deletes {atom}")]
    ConflictingEffects { op: String, atom: String },
    #[error("substitution for `{op}` does not bind parameter `{var}`")]
    PartialSubstitution { op: String, var: String },
    #[error("substitution for `{op}` binds unknown parameter `{var}`")]
    ExtraSubstitution { op: String, var: String },
    #[error("precondition of {0} does not hold")]
    NotApplicable(String),
    #[error("state has no features for `{0}`")]
    MissingFeatures(String),
    #[error("features of `{entity}` have length {found}, expected {expected}")]
    FeatureDim {
        entity: String,
        expected: usize,
        found: usize,
    },
    #[error("classifier for `{predicate}` failed: {reason}")]
    Classifier { predicate: String, reason: String },
}

pub type Result<T, E = SymbolicError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjectType {
    pub name: String,
    pub feature_dim: usize,
}

impl ObjectType {
    pub fn new(name: impl Into<String>, feature_dim: usize) -> Result<Self> {
        let name = name.into();
        if feature_dim == 0 {
            return Err(SymbolicError::EmptyFeatureDim(name));
        }
        Ok(Self { name, feature_dim })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Object {
    pub name: String,
    pub type_name: String,
}

impl Object {
    pub fn new(name: impl Into<String>, type_name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            type_name: type_name.into(),
        }
    }
}

/// Mapping from object entities to their feature vectors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnvState {
    features: BTreeMap<String, Vec<f64>>,
}

impl EnvState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, entity: impl Into<String>, features: Vec<f64>) -> Self {
        self.insert(entity, features);
        self
    }

    pub fn insert(&mut self, entity: impl Into<String>, features: Vec<f64>) {
        self.features.insert(entity.into(), features);
    }

    pub fn get(&self, entity: &str) -> Option<&[f64]> {
        self.features.get(entity).map(Vec::as_slice)
    }

    pub fn get_mut(&mut self, entity: &str) -> Option<&mut Vec<f64>> {
        self.features.get_mut(entity)
    }

    /// Feature vector of `entity`, or a [`SymbolicError::MissingFeatures`] error.
    pub fn require(&self, entity: &str) -> Result<&[f64]> {
        self.get(entity)
            .ok_or_else(|| SymbolicError::MissingFeatures(entity.to_string()))
    }

    pub fn entities(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.features
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// Sum of all feature-vector lengths.
    pub fn total_dim(&self) -> usize {
        self.features.values().map(Vec::len).sum()
    }

    /// Checks that the state covers every object with a vector of the
    /// declared dimension.
    pub fn validate(&self, objects: &[Object], types: &[ObjectType]) -> Result<()> {
        for obj in objects {
            let ty = find_type(types, &obj.type_name)?;
            let v = self.require(&obj.name)?;
            if v.len() != ty.feature_dim {
                return Err(SymbolicError::FeatureDim {
                    entity: obj.name.clone(),
                    expected: ty.feature_dim,
                    found: v.len(),
                });
            }
        }
        Ok(())
    }
}

fn find_type<'a>(types: &'a [ObjectType], name: &str) -> Result<&'a ObjectType> {
    types
        .iter()
        .find(|t| t.name == name)
        .ok_or_else(|| SymbolicError::UnknownType(name.to_string()))
}

/// A predicate applied to concrete objects. Ordering is (predicate, args),
/// which is the canonical order used for serialization and tie-breaking.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new<S: Into<String>>(
        predicate: impl Into<String>,
        args: impl IntoIterator<Item = S>,
    ) -> Self {
        Self {
            predicate: predicate.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

/// A predicate applied to typed variables (`?o`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LiftedAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl LiftedAtom {
    pub fn new<S: Into<String>>(
        predicate: impl Into<String>,
        args: impl IntoIterator<Item = S>,
    ) -> Self {
        Self {
            predicate: predicate.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }
}

impl fmt::Display for LiftedAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

/// Set of true ground atoms. Absent atoms are false.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolicState {
    atoms: BTreeSet<GroundAtom>,
}

impl SymbolicState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, atom: &GroundAtom) -> bool {
        self.atoms.contains(atom)
    }

    pub fn insert(&mut self, atom: GroundAtom) -> bool {
        self.atoms.insert(atom)
    }

    pub fn remove(&mut self, atom: &GroundAtom) -> bool {
        self.atoms.remove(atom)
    }

    pub fn atoms(&self) -> &BTreeSet<GroundAtom> {
        &self.atoms
    }

    pub fn iter(&self) -> impl Iterator<Item = &GroundAtom> {
        self.atoms.iter()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn contains_all<'a>(&self, atoms: impl IntoIterator<Item = &'a GroundAtom>) -> bool {
        atoms.into_iter().all(|a| self.atoms.contains(a))
    }

    pub fn is_subset(&self, other: &SymbolicState) -> bool {
        self.atoms.is_subset(&other.atoms)
    }
}

impl FromIterator<GroundAtom> for SymbolicState {
    fn from_iter<I: IntoIterator<Item = GroundAtom>>(iter: I) -> Self {
        Self {
            atoms: iter.into_iter().collect(),
        }
    }
}

impl fmt::Display for SymbolicState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Goal {
    pub atoms: BTreeSet<GroundAtom>,
}

impl Goal {
    pub fn new(atoms: impl IntoIterator<Item = GroundAtom>) -> Self {
        Self {
            atoms: atoms.into_iter().collect(),
        }
    }
}

/// Classifier failure: the rule could not be evaluated on the given tuple.
pub type ClassifierResult = std::result::Result<bool, String>;
pub type ClassifierFn = dyn Fn(&EnvState, &[&str]) -> ClassifierResult + Send + Sync;

/// A typed predicate paired with the classifier that decides it on
/// continuous states.
#[derive(Clone)]
pub struct Predicate {
    pub name: String,
    pub arg_types: Vec<String>,
    classifier: Arc<ClassifierFn>,
}

impl Predicate {
    pub fn new(
        name: impl Into<String>,
        arg_types: Vec<String>,
        classifier: impl Fn(&EnvState, &[&str]) -> ClassifierResult + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            arg_types,
            classifier: Arc::new(classifier),
        }
    }

    pub fn arity(&self) -> usize {
        self.arg_types.len()
    }

    pub fn evaluate(&self, x: &EnvState, args: &[&str]) -> Result<bool> {
        if args.len() != self.arity() {
            return Err(SymbolicError::Arity {
                predicate: self.name.clone(),
                expected: self.arity(),
                found: args.len(),
            });
        }
        (self.classifier)(x, args).map_err(|reason| SymbolicError::Classifier {
            predicate: self.name.clone(),
            reason,
        })
    }
}

impl fmt::Debug for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Predicate")
            .field("name", &self.name)
            .field("arg_types", &self.arg_types)
            .finish_non_exhaustive()
    }
}

/// Every tuple of objects whose types match `types`, in canonical
/// (lexicographic by object name) order.
pub fn typed_tuples<'a>(types: &[String], objects: &'a [Object]) -> Vec<Vec<&'a Object>> {
    let mut sorted: Vec<&Object> = objects.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    let mut tuples: Vec<Vec<&Object>> = vec![Vec::new()];
    for ty in types {
        let candidates: Vec<&Object> = sorted
            .iter()
            .copied()
            .filter(|o| &o.type_name == ty)
            .collect();
        let mut next = Vec::with_capacity(tuples.len() * candidates.len());
        for t in &tuples {
            for c in &candidates {
                let mut extended = t.clone();
                extended.push(*c);
                next.push(extended);
            }
        }
        tuples = next;
    }
    tuples
}

/// Symbolic state of `x`: every type-correct ground atom whose classifier
/// holds.
pub fn parse_state(
    x: &EnvState,
    predicates: &[Predicate],
    objects: &[Object],
) -> Result<SymbolicState> {
    for o in objects {
        x.require(&o.name)?;
    }
    let mut state = SymbolicState::new();
    for p in predicates {
        for tuple in typed_tuples(&p.arg_types, objects) {
            let args: Vec<&str> = tuple.iter().map(|o| o.name.as_str()).collect();
            if p.evaluate(x, &args)? {
                state.insert(GroundAtom::new(p.name.clone(), args));
            }
        }
    }
    Ok(state)
}

/// Evaluates a single ground atom against `x`.
pub fn atom_holds(x: &EnvState, predicates: &[Predicate], atom: &GroundAtom) -> Result<bool> {
    let p = predicates
        .iter()
        .find(|p| p.name == atom.predicate)
        .ok_or_else(|| SymbolicError::UnknownPredicate(atom.predicate.clone()))?;
    let args: Vec<&str> = atom.args.iter().map(String::as_str).collect();
    p.evaluate(x, &args)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Parameter {
    pub name: String,
    pub type_name: String,
}

impl Parameter {
    pub fn new(name: impl Into<String>, type_name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            type_name: type_name.into(),
        }
    }
}

/// Operator schema: typed parameters, preconditions and add/delete effects.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LiftedOperator {
    pub name: String,
    pub params: Vec<Parameter>,
    pub pre: BTreeSet<LiftedAtom>,
    pub add: BTreeSet<LiftedAtom>,
    pub del: BTreeSet<LiftedAtom>,
}

impl LiftedOperator {
    pub fn new(
        name: impl Into<String>,
        params: Vec<Parameter>,
        pre: impl IntoIterator<Item = LiftedAtom>,
        add: impl IntoIterator<Item = LiftedAtom>,
        del: impl IntoIterator<Item = LiftedAtom>,
    ) -> Result<Self> {
        let op = Self {
            name: name.into(),
            params,
            pre: pre.into_iter().collect(),
            add: add.into_iter().collect(),
            del: del.into_iter().collect(),
        };
        op.check()?;
        Ok(op)
    }

    fn check(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for p in &self.params {
            if !seen.insert(p.name.as_str()) {
                return Err(SymbolicError::DuplicateParameter {
                    op: self.name.clone(),
                    var: p.name.clone(),
                });
            }
        }
        for atom in self.pre.iter().chain(&self.add).chain(&self.del) {
            for v in &atom.args {
                if !seen.contains(v.as_str()) {
                    return Err(SymbolicError::UnboundVariable {
                        op: self.name.clone(),
                        var: v.clone(),
                    });
                }
            }
        }
        if let Some(a) = self.add.intersection(&self.del).next() {
            return Err(SymbolicError::ConflictingEffects {
                op: self.name.clone(),
                atom: a.to_string(),
            });
        }
        Ok(())
    }

    /// Type of each parameter, in declaration order.
    pub fn param_types(&self) -> Vec<String> {
        self.params.iter().map(|p| p.type_name.clone()).collect()
    }

    /// Checks every atom against the predicate signatures.
    pub fn type_check(&self, predicates: &[PredicateSig]) -> Result<()> {
        for atom in self.pre.iter().chain(&self.add).chain(&self.del) {
            let sig = predicates
                .iter()
                .find(|s| s.name == atom.predicate)
                .ok_or_else(|| SymbolicError::UnknownPredicate(atom.predicate.clone()))?;
            if sig.arg_types.len() != atom.args.len() {
                return Err(SymbolicError::Arity {
                    predicate: atom.predicate.clone(),
                    expected: sig.arg_types.len(),
                    found: atom.args.len(),
                });
            }
            for (var, expected) in atom.args.iter().zip(&sig.arg_types) {
                let p = self
                    .params
                    .iter()
                    .find(|p| &p.name == var)
                    .expect("checked at construction");
                if &p.type_name != expected {
                    return Err(SymbolicError::ArgumentType {
                        predicate: atom.predicate.clone(),
                        arg: var.clone(),
                        expected: expected.clone(),
                        found: p.type_name.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Name and argument types of a predicate, without its classifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PredicateSig {
    pub name: String,
    pub arg_types: Vec<String>,
}

impl From<&Predicate> for PredicateSig {
    fn from(p: &Predicate) -> Self {
        Self {
            name: p.name.clone(),
            arg_types: p.arg_types.clone(),
        }
    }
}

/// Parameter substitution, variable name to object name.
pub type Substitution = BTreeMap<String, String>;

/// A lifted operator with all parameters bound to objects. Identity is the
/// operator name plus the binding.
#[derive(Debug, Clone)]
pub struct GroundOperator {
    lifted: Arc<LiftedOperator>,
    binding: Vec<String>,
    pub pre: BTreeSet<GroundAtom>,
    pub add: BTreeSet<GroundAtom>,
    pub del: BTreeSet<GroundAtom>,
}

impl GroundOperator {
    pub fn name(&self) -> &str {
        &self.lifted.name
    }

    pub fn lifted(&self) -> &Arc<LiftedOperator> {
        &self.lifted
    }

    /// Objects bound to the parameters, in parameter order.
    pub fn args(&self) -> &[String] {
        &self.binding
    }

    pub fn substitution(&self) -> Substitution {
        self.lifted
            .params
            .iter()
            .zip(&self.binding)
            .map(|(p, o)| (p.name.clone(), o.clone()))
            .collect()
    }

    pub fn has_effects(&self) -> bool {
        !(self.add.is_empty() && self.del.is_empty())
    }
}

impl PartialEq for GroundOperator {
    fn eq(&self, other: &Self) -> bool {
        self.lifted.name == other.lifted.name && self.binding == other.binding
    }
}

impl Eq for GroundOperator {}

impl Hash for GroundOperator {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.lifted.name.hash(state);
        self.binding.hash(state);
    }
}

impl PartialOrd for GroundOperator {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GroundOperator {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (&self.lifted.name, &self.binding).cmp(&(&other.lifted.name, &other.binding))
    }
}

impl fmt::Display for GroundOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.lifted.name)?;
        for a in &self.binding {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

fn substitute(atoms: &BTreeSet<LiftedAtom>, delta: &Substitution) -> BTreeSet<GroundAtom> {
    atoms
        .iter()
        .map(|a| GroundAtom {
            predicate: a.predicate.clone(),
            args: a.args.iter().map(|v| delta[v].clone()).collect(),
        })
        .collect()
}

/// Binds every parameter of `lifted` through `delta`. The substitution must
/// be total and respect parameter types.
pub fn ground_operator(
    lifted: &Arc<LiftedOperator>,
    delta: &Substitution,
    objects: &[Object],
) -> Result<GroundOperator> {
    for var in delta.keys() {
        if !lifted.params.iter().any(|p| &p.name == var) {
            return Err(SymbolicError::ExtraSubstitution {
                op: lifted.name.clone(),
                var: var.clone(),
            });
        }
    }
    let mut binding = Vec::with_capacity(lifted.params.len());
    for p in &lifted.params {
        let obj_name = delta
            .get(&p.name)
            .ok_or_else(|| SymbolicError::PartialSubstitution {
                op: lifted.name.clone(),
                var: p.name.clone(),
            })?;
        let obj = objects
            .iter()
            .find(|o| &o.name == obj_name)
            .ok_or_else(|| SymbolicError::UnknownObject(obj_name.clone()))?;
        if obj.type_name != p.type_name {
            return Err(SymbolicError::ArgumentType {
                predicate: lifted.name.clone(),
                arg: obj.name.clone(),
                expected: p.type_name.clone(),
                found: obj.type_name.clone(),
            });
        }
        binding.push(obj_name.clone());
    }
    Ok(GroundOperator {
        lifted: Arc::clone(lifted),
        binding,
        pre: substitute(&lifted.pre, delta),
        add: substitute(&lifted.add, delta),
        del: substitute(&lifted.del, delta),
    })
}

/// `op.pre ⊆ s`.
pub fn applicable(op: &GroundOperator, s: &SymbolicState) -> bool {
    s.contains_all(&op.pre)
}

/// Successor `(s \ del) ∪ add`. Fails when `op` is not applicable in `s`.
pub fn apply(op: &GroundOperator, s: &SymbolicState) -> Result<SymbolicState> {
    if !applicable(op, s) {
        return Err(SymbolicError::NotApplicable(op.to_string()));
    }
    Ok(successor(op, s))
}

/// Successor without the applicability check; used for effect verification
/// where the predecessor is known to satisfy the preconditions.
pub fn successor(op: &GroundOperator, s: &SymbolicState) -> SymbolicState {
    let mut next = s.clone();
    for a in &op.del {
        next.remove(a);
    }
    for a in &op.add {
        next.insert(a.clone());
    }
    next
}

/// `g ⊆ s`.
pub fn holds(goal: &Goal, s: &SymbolicState) -> bool {
    s.contains_all(&goal.atoms)
}

/// A domain bound to its environment: feature dimensions per type,
/// classifiers per predicate and the lifted operators.
#[derive(Debug, Clone)]
pub struct Domain {
    pub name: String,
    pub types: Vec<ObjectType>,
    pub predicates: Vec<Predicate>,
    pub operators: Vec<Arc<LiftedOperator>>,
    /// Type of the single agent entity whose features prefix every
    /// abstract state.
    pub robot_type: String,
}

impl Domain {
    pub fn object_type(&self, name: &str) -> Result<&ObjectType> {
        find_type(&self.types, name)
    }

    pub fn operator(&self, name: &str) -> Option<&Arc<LiftedOperator>> {
        self.operators.iter().find(|o| o.name == name)
    }

    pub fn predicate_sigs(&self) -> Vec<PredicateSig> {
        self.predicates.iter().map(PredicateSig::from).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub name: String,
    pub objects: Vec<Object>,
    pub init: SymbolicState,
    pub goal: Goal,
}

impl Problem {
    pub fn object(&self, name: &str) -> Option<&Object> {
        self.objects.iter().find(|o| o.name == name)
    }

    /// The unique object of the robot type.
    pub fn robot<'a>(&'a self, domain: &Domain) -> Option<&'a Object> {
        let mut it = self
            .objects
            .iter()
            .filter(|o| o.type_name == domain.robot_type);
        match (it.next(), it.next()) {
            (Some(r), None) => Some(r),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pick() -> Arc<LiftedOperator> {
        Arc::new(
            LiftedOperator::new(
                "pick",
                vec![Parameter::new("?o", "peg")],
                [
                    LiftedAtom::new("handempty", Vec::<String>::new()),
                    LiftedAtom::new("ontable", ["?o"]),
                ],
                [LiftedAtom::new("holding", ["?o"])],
                [
                    LiftedAtom::new("handempty", Vec::<String>::new()),
                    LiftedAtom::new("ontable", ["?o"]),
                ],
            )
            .unwrap(),
        )
    }

    fn pegs() -> Vec<Object> {
        vec![
            Object::new("peg1", "peg"),
            Object::new("peg2", "peg"),
            Object::new("hole1", "hole"),
        ]
    }

    fn atom(p: &str, args: &[&str]) -> GroundAtom {
        GroundAtom::new(p, args.iter().copied())
    }

    #[test]
    fn grounding_pick_adds_holding() {
        let delta: Substitution = [("?o".to_string(), "peg1".to_string())].into();
        let g = ground_operator(&pick(), &delta, &pegs()).unwrap();
        assert!(g.add.contains(&atom("holding", &["peg1"])));
        assert_eq!(g.to_string(), "(pick peg1)");
    }

    #[test]
    fn grounding_errors() {
        let empty = Substitution::new();
        assert!(matches!(
            ground_operator(&pick(), &empty, &pegs()),
            Err(SymbolicError::PartialSubstitution { .. })
        ));
        let wrong: Substitution = [("?o".to_string(), "hole1".to_string())].into();
        assert!(matches!(
            ground_operator(&pick(), &wrong, &pegs()),
            Err(SymbolicError::ArgumentType { .. })
        ));
        let extra: Substitution = [
            ("?o".to_string(), "peg1".to_string()),
            ("?x".to_string(), "peg2".to_string()),
        ]
        .into();
        assert!(matches!(
            ground_operator(&pick(), &extra, &pegs()),
            Err(SymbolicError::ExtraSubstitution { .. })
        ));
    }

    #[test]
    fn parameterless_operator_grounds_to_itself() {
        let op = Arc::new(
            LiftedOperator::new(
                "noop",
                vec![],
                [LiftedAtom::new("a", Vec::<String>::new())],
                [],
                [],
            )
            .unwrap(),
        );
        let g = ground_operator(&op, &Substitution::new(), &[]).unwrap();
        assert_eq!(g.pre, [atom("a", &[])].into());
        assert!(g.add.is_empty() && g.del.is_empty());
    }

    #[test]
    fn grounding_twice_is_equal() {
        let delta: Substitution = [("?o".to_string(), "peg2".to_string())].into();
        let a = ground_operator(&pick(), &delta, &pegs()).unwrap();
        let b = ground_operator(&pick(), &delta, &pegs()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn operator_invariants_enforced() {
        let err = LiftedOperator::new(
            "bad",
            vec![Parameter::new("?o", "peg")],
            [],
            [LiftedAtom::new("p", ["?o"])],
            [LiftedAtom::new("p", ["?o"])],
        );
        assert!(matches!(err, Err(SymbolicError::ConflictingEffects { .. })));
        let err = LiftedOperator::new("bad", vec![], [LiftedAtom::new("p", ["?z"])], [], []);
        assert!(matches!(err, Err(SymbolicError::UnboundVariable { .. })));
    }

    #[test]
    fn applicability_and_apply() {
        let delta: Substitution = [("?o".to_string(), "peg1".to_string())].into();
        let g = ground_operator(&pick(), &delta, &pegs()).unwrap();
        let s: SymbolicState = [atom("handempty", &[])].into_iter().collect();
        assert!(!applicable(&g, &s));
        assert!(matches!(
            apply(&g, &s),
            Err(SymbolicError::NotApplicable(_))
        ));

        let s: SymbolicState = [
            atom("handempty", &[]),
            atom("ontable", &["peg1"]),
            atom("ontable", &["peg2"]),
        ]
        .into_iter()
        .collect();
        let next = apply(&g, &s).unwrap();
        let expected: SymbolicState = [atom("holding", &["peg1"]), atom("ontable", &["peg2"])]
            .into_iter()
            .collect();
        assert_eq!(next, expected);
        assert_eq!(s.len(), 3, "input untouched");
    }

    #[test]
    fn pull_set_algebra() {
        let pull = Arc::new(
            LiftedOperator::new(
                "pull",
                vec![Parameter::new("?c", "cabinet")],
                [LiftedAtom::new("closed", ["?c"])],
                [LiftedAtom::new("open", ["?c"])],
                [LiftedAtom::new("closed", ["?c"])],
            )
            .unwrap(),
        );
        let objs = [Object::new("cab1", "cabinet")];
        let delta: Substitution = [("?c".to_string(), "cab1".to_string())].into();
        let g = ground_operator(&pull, &delta, &objs).unwrap();
        let s: SymbolicState = [atom("closed", &["cab1"]), atom("handempty", &[])]
            .into_iter()
            .collect();
        let expected: SymbolicState = [atom("open", &["cab1"]), atom("handempty", &[])]
            .into_iter()
            .collect();
        assert_eq!(apply(&g, &s).unwrap(), expected);
    }

    #[test]
    fn goal_holds() {
        let s: SymbolicState = [atom("closed", &["cab1"])].into_iter().collect();
        assert!(holds(&Goal::default(), &s));
        assert!(!holds(&Goal::new([atom("open", &["cab1"])]), &s));
    }

    #[test]
    fn parse_state_without_predicates_is_empty() {
        let x = EnvState::new().with("peg1", vec![0.0]);
        let s = parse_state(&x, &[], &[Object::new("peg1", "peg")]).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn parse_state_enumerates_typed_tuples() {
        let high = Predicate::new("high", vec!["peg".into()], |x, a| {
            Ok(x.get(a[0]).ok_or("missing")?[0] > 0.5)
        });
        let objs = pegs();
        let x = EnvState::new()
            .with("peg1", vec![1.0])
            .with("peg2", vec![0.0])
            .with("hole1", vec![1.0]);
        let s = parse_state(&x, std::slice::from_ref(&high), &objs).unwrap();
        assert_eq!(s, [atom("high", &["peg1"])].into_iter().collect());
        assert_eq!(parse_state(&x, &[high], &objs).unwrap(), s);
    }

    #[test]
    fn parse_state_surfaces_classifier_errors() {
        let bad = Predicate::new("bad", vec!["peg".into()], |x, a| {
            let v = x.get(a[0]).ok_or("missing")?;
            v.get(5)
                .map(|f| *f > 0.0)
                .ok_or_else(|| "feature index 5 out of range".to_string())
        });
        let x = EnvState::new().with("peg1", vec![1.0]);
        let err = parse_state(&x, &[bad], &[Object::new("peg1", "peg")]).unwrap_err();
        assert!(matches!(err, SymbolicError::Classifier { .. }));
    }

    #[test]
    fn env_state_validation() {
        let types = [ObjectType::new("peg", 2).unwrap()];
        let objs = [Object::new("peg1", "peg")];
        assert!(EnvState::new()
            .with("peg1", vec![0.0, 1.0])
            .validate(&objs, &types)
            .is_ok());
        assert!(matches!(
            EnvState::new()
                .with("peg1", vec![0.0])
                .validate(&objs, &types),
            Err(SymbolicError::FeatureDim { .. })
        ));
        assert!(matches!(
            EnvState::new().validate(&objs, &types),
            Err(SymbolicError::MissingFeatures(_))
        ));
        assert!(ObjectType::new("x", 0).is_err());
    }

    #[test]
    fn typed_tuples_count_is_cartesian_product() {
        let objs = pegs();
        assert_eq!(typed_tuples(&["peg".into(), "hole".into()], &objs).len(), 2);
        assert_eq!(typed_tuples(&["peg".into(), "peg".into()], &objs).len(), 4);
        assert_eq!(typed_tuples(&[], &objs).len(), 1);
        assert_eq!(typed_tuples(&["cabinet".into()], &objs).len(), 0);
    }
}
