use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::{DomainSpec, ProblemSpec};
use crate::symbolic::{GroundAtom, LiftedAtom, Object, Parameter};

/// Groups consecutive same-typed names: `a b - t c - u`.
fn typed_names<'a>(entries: impl Iterator<Item = (&'a str, &'a str)>) -> String {
    let mut out = String::new();
    let mut current: Option<&str> = None;
    for (name, ty) in entries {
        if let Some(prev) = current {
            if prev != ty {
                let _ = write!(out, " - {prev} ");
            } else {
                out.push(' ');
            }
        }
        out.push_str(name);
        current = Some(ty);
    }
    if let Some(ty) = current {
        let _ = write!(out, " - {ty}");
    }
    out
}

fn params(ps: &[Parameter]) -> String {
    typed_names(ps.iter().map(|p| (p.name.as_str(), p.type_name.as_str())))
}

fn conjunction<T: std::fmt::Display>(pos: &BTreeSet<T>, neg: Option<&BTreeSet<T>>) -> String {
    let mut parts: Vec<String> = pos.iter().map(ToString::to_string).collect();
    if let Some(neg) = neg {
        parts.extend(neg.iter().map(|a| format!("(not {a})")));
    }
    match parts.len() {
        0 => "()".to_string(),
        _ => format!("(and {})", parts.join(" ")),
    }
}

/// Canonical text for a domain. Declaration order is kept for types,
/// predicates and actions; atoms within a formula are sorted.
pub fn serialize_domain(d: &DomainSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (domain {})", d.name);
    if !d.requirements.is_empty() {
        let _ = writeln!(out, "  (:requirements {})", d.requirements.join(" "));
    }
    if !d.types.is_empty() {
        let _ = writeln!(out, "  (:types {})", d.types.join(" "));
    }
    if !d.predicates.is_empty() {
        out.push_str("  (:predicates");
        for p in &d.predicates {
            let vars: Vec<String> = (0..p.arg_types.len()).map(|i| format!("?x{i}")).collect();
            let sig = typed_names(
                vars.iter()
                    .map(String::as_str)
                    .zip(p.arg_types.iter().map(String::as_str)),
            );
            if sig.is_empty() {
                let _ = write!(out, "\n    ({})", p.name);
            } else {
                let _ = write!(out, "\n    ({} {sig})", p.name);
            }
        }
        out.push_str(")\n");
    }
    for op in &d.operators {
        let _ = writeln!(out, "  (:action {}", op.name);
        let _ = writeln!(out, "    :parameters ({})", params(&op.params));
        let _ = writeln!(
            out,
            "    :precondition {}",
            conjunction::<LiftedAtom>(&op.pre, None)
        );
        let _ = writeln!(out, "    :effect {})", conjunction(&op.add, Some(&op.del)));
    }
    out.push_str(")\n");
    out
}

pub fn serialize_problem(p: &ProblemSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (problem {})", p.name);
    let _ = writeln!(out, "  (:domain {})", p.domain);
    let objs = typed_names(
        p.objects
            .iter()
            .map(|o: &Object| (o.name.as_str(), o.type_name.as_str())),
    );
    let _ = writeln!(out, "  (:objects {objs})");
    out.push_str("  (:init");
    for a in &p.init {
        let _ = write!(out, "\n    {a}");
    }
    out.push_str(")\n");
    let _ = writeln!(
        out,
        "  (:goal {}))",
        conjunction::<GroundAtom>(&p.goal.atoms, None)
    );
    out
}
