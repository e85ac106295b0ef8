use std::collections::BTreeSet;

use super::sexp::{read, Pos, Sexp};
use super::{DomainSpec, ParseError, ParseErrorKind as K, ProblemSpec};
use crate::symbolic::{
    Goal, GroundAtom, LiftedAtom, LiftedOperator, Object, Parameter, PredicateSig, SymbolicError,
};

type Result<T> = std::result::Result<T, ParseError>;

fn err(node: &Sexp, kind: K) -> ParseError {
    ParseError::new(node.pos(), node.token(), kind)
}

fn err_at(pos: Pos, token: &str, kind: K) -> ParseError {
    ParseError::new(pos, token, kind)
}

fn is_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

fn expect_list<'a>(node: &'a Sexp, what: &str) -> Result<&'a [Sexp]> {
    node.list()
        .ok_or_else(|| err(node, K::Syntax(format!("expected a list ({what})"))))
}

fn expect_name(node: &Sexp, what: &str) -> Result<String> {
    match node.symbol() {
        Some(s) if is_name(s) => Ok(s.to_string()),
        _ => Err(err(node, K::Syntax(format!("expected {what}")))),
    }
}

fn expect_keyword(node: &Sexp, kw: &str) -> Result<()> {
    if node.symbol() == Some(kw) {
        Ok(())
    } else {
        Err(err(node, K::Syntax(format!("expected `{kw}`"))))
    }
}

/// `(define (<kind> NAME) sections...)` → (name, sections)
fn header<'a>(root: &'a Sexp, kind: &str) -> Result<(String, &'a [Sexp])> {
    let items = expect_list(root, "define form")?;
    let first = items
        .first()
        .ok_or_else(|| err(root, K::Syntax("expected `define`".into())))?;
    expect_keyword(first, "define")?;
    let head = items
        .get(1)
        .ok_or_else(|| err(root, K::Syntax(format!("expected `({kind} NAME)`"))))?;
    let head_items = expect_list(head, kind)?;
    match head_items {
        [k, name] => {
            expect_keyword(k, kind)?;
            Ok((expect_name(name, &format!("{kind} name"))?, &items[2..]))
        }
        _ => Err(err(head, K::Syntax(format!("expected `({kind} NAME)`")))),
    }
}

const UNSUPPORTED_SECTIONS: &[&str] = &[
    ":constants",
    ":functions",
    ":durative-action",
    ":derived",
    ":constraints",
    ":metric",
];

fn section(node: &Sexp) -> Result<(&Sexp, &str, &[Sexp])> {
    let items = expect_list(node, "section")?;
    let kw = items
        .first()
        .ok_or_else(|| err(node, K::Syntax("empty section".into())))?;
    let name = kw
        .symbol()
        .filter(|s| s.starts_with(':'))
        .ok_or_else(|| err(kw, K::Syntax("expected a section keyword".into())))?;
    if UNSUPPORTED_SECTIONS.contains(&name) {
        return Err(err(kw, K::Unsupported(format!("section {name}"))));
    }
    Ok((kw, name, &items[1..]))
}

/// Typed list `a b - t c - u`; every entry must be typed.
fn typed_list(items: &[Sexp], variables: bool) -> Result<Vec<(String, String, Pos)>> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Pos)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let node = &items[i];
        let sym = node
            .symbol()
            .ok_or_else(|| err(node, K::Syntax("expected a name".into())))?;
        if sym == "-" {
            if pending.is_empty() {
                return Err(err(node, K::Syntax("`-` without preceding names".into())));
            }
            let ty_node = items
                .get(i + 1)
                .ok_or_else(|| err(node, K::Syntax("expected a type after `-`".into())))?;
            if ty_node
                .list()
                .is_some_and(|l| l.first().and_then(Sexp::symbol) == Some("either"))
            {
                return Err(err(ty_node, K::Unsupported("`either` types".into())));
            }
            let ty = expect_name(ty_node, "type name")?;
            for (name, pos) in pending.drain(..) {
                out.push((name, ty.clone(), pos));
            }
            i += 2;
            continue;
        }
        let ok = if variables {
            sym.strip_prefix('?').is_some_and(is_name)
        } else {
            is_name(sym)
        };
        if !ok {
            let what = if variables {
                "a variable `?name`"
            } else {
                "a name"
            };
            return Err(err(node, K::Syntax(format!("expected {what}"))));
        }
        pending.push((sym.to_string(), node.pos()));
        i += 1;
    }
    if let Some((name, pos)) = pending.first() {
        return Err(err_at(
            *pos,
            name,
            K::Invalid("typing required: missing `- type`".into()),
        ));
    }
    Ok(out)
}

const UNSUPPORTED_FORMS: &[&str] = &[
    "or",
    "imply",
    "exists",
    "forall",
    "when",
    "=",
    "<",
    ">",
    "<=",
    ">=",
    "increase",
    "decrease",
    "assign",
    "scale-up",
    "scale-down",
    "either",
    "preference",
    "at",
    "over",
];

/// An atom `(pred a b)` with raw argument tokens.
fn raw_atom(node: &Sexp) -> Result<(String, Vec<(String, Pos)>)> {
    let items = expect_list(node, "atom")?;
    let head = items
        .first()
        .ok_or_else(|| err(node, K::Syntax("empty atom".into())))?;
    let name = head
        .symbol()
        .ok_or_else(|| err(head, K::Syntax("expected a predicate name".into())))?;
    if UNSUPPORTED_FORMS.contains(&name) {
        return Err(err(head, K::Unsupported(format!("`{name}`"))));
    }
    if !is_name(name) {
        return Err(err(head, K::Syntax("expected a predicate name".into())));
    }
    let mut args = Vec::new();
    for a in &items[1..] {
        let s = a
            .symbol()
            .ok_or_else(|| err(a, K::Syntax("nested term in atom".into())))?;
        args.push((s.to_string(), a.pos()));
    }
    Ok((name.to_string(), args))
}

/// A formula flattened into (negated, atom node) literals.
fn literals<'a>(node: &'a Sexp, out: &mut Vec<(bool, &'a Sexp)>) -> Result<()> {
    let items = expect_list(node, "formula")?;
    match items.first().and_then(Sexp::symbol) {
        None if items.is_empty() => Ok(()),
        Some("and") => {
            for child in &items[1..] {
                literals(child, out)?;
            }
            Ok(())
        }
        Some("not") => match &items[1..] {
            [inner] => {
                if let Some(h) = inner.list().and_then(|l| l.first()).and_then(Sexp::symbol) {
                    if h == "and" || h == "not" || UNSUPPORTED_FORMS.contains(&h) {
                        return Err(err(inner, K::Unsupported(format!("`{h}` under negation"))));
                    }
                }
                out.push((true, inner));
                Ok(())
            }
            _ => Err(err(node, K::Syntax("`not` takes one atom".into()))),
        },
        Some(_) => {
            out.push((false, node));
            Ok(())
        }
        None => Err(err(node, K::Syntax("expected a predicate name".into()))),
    }
}

fn check_signature(
    node: &Sexp,
    pred: &str,
    args: &[(String, Pos)],
    predicates: &[PredicateSig],
) -> Result<Vec<String>> {
    let sig = predicates
        .iter()
        .find(|p| p.name == pred)
        .ok_or_else(|| err(node, K::UndeclaredPredicate))?;
    if sig.arg_types.len() != args.len() {
        return Err(err(
            node,
            K::Arity {
                expected: sig.arg_types.len(),
                found: args.len(),
            },
        ));
    }
    Ok(sig.arg_types.clone())
}

fn lifted_atom(
    node: &Sexp,
    params: &[Parameter],
    predicates: &[PredicateSig],
) -> Result<LiftedAtom> {
    let (pred, args) = raw_atom(node)?;
    let types = check_signature(node, &pred, &args, predicates)?;
    for ((arg, pos), expected) in args.iter().zip(&types) {
        if !arg.starts_with('?') {
            return Err(err_at(
                *pos,
                arg,
                K::Unsupported("constants in domain files".into()),
            ));
        }
        let p = params
            .iter()
            .find(|p| &p.name == arg)
            .ok_or_else(|| err_at(*pos, arg, K::UndeclaredVariable))?;
        if &p.type_name != expected {
            return Err(err_at(
                *pos,
                arg,
                K::TypeMismatch {
                    expected: expected.clone(),
                    found: p.type_name.clone(),
                },
            ));
        }
    }
    Ok(LiftedAtom::new(pred, args.into_iter().map(|(a, _)| a)))
}

fn action(
    kw: &Sexp,
    rest: &[Sexp],
    types: &[String],
    predicates: &[PredicateSig],
) -> Result<LiftedOperator> {
    let name_node = rest
        .first()
        .ok_or_else(|| err(kw, K::Syntax("expected an action name".into())))?;
    let name = expect_name(name_node, "action name")?;
    let mut params: Option<Vec<Parameter>> = None;
    let mut pre_node: Option<&Sexp> = None;
    let mut eff_node: Option<&Sexp> = None;
    let mut i = 1;
    while i < rest.len() {
        let key = &rest[i];
        let value = rest
            .get(i + 1)
            .ok_or_else(|| err(key, K::Syntax("expected a value after the keyword".into())))?;
        match key.symbol() {
            Some(":parameters") if params.is_none() => {
                let list = expect_list(value, "parameter list")?;
                let mut ps: Vec<Parameter> = Vec::new();
                for (var, ty, pos) in typed_list(list, true)? {
                    if !types.contains(&ty) {
                        return Err(err_at(pos, &ty, K::UnknownType));
                    }
                    if ps.iter().any(|p| p.name == var) {
                        return Err(err_at(pos, &var, K::Duplicate("parameter".into())));
                    }
                    ps.push(Parameter::new(var, ty));
                }
                params = Some(ps);
            }
            Some(":precondition") if pre_node.is_none() => pre_node = Some(value),
            Some(":effect") if eff_node.is_none() => eff_node = Some(value),
            Some(k @ (":parameters" | ":precondition" | ":effect")) => {
                return Err(err(key, K::Duplicate(format!("`{k}`"))));
            }
            Some(k) if k.starts_with(':') => {
                return Err(err(key, K::Unsupported(format!("action field `{k}`"))));
            }
            _ => return Err(err(key, K::Syntax("expected an action keyword".into()))),
        }
        i += 2;
    }
    let params = params.unwrap_or_default();

    let mut pre = Vec::new();
    if let Some(node) = pre_node {
        let mut lits = Vec::new();
        literals(node, &mut lits)?;
        for (neg, atom) in lits {
            if neg {
                return Err(err(atom, K::Unsupported("negative precondition".into())));
            }
            pre.push(lifted_atom(atom, &params, predicates)?);
        }
    }
    let mut add = Vec::new();
    let mut del = Vec::new();
    if let Some(node) = eff_node {
        let mut lits = Vec::new();
        literals(node, &mut lits)?;
        for (neg, atom) in lits {
            let a = lifted_atom(atom, &params, predicates)?;
            if neg {
                del.push(a);
            } else {
                add.push(a);
            }
        }
    }
    LiftedOperator::new(name, params, pre, add, del).map_err(|e| {
        let kind = match e {
            SymbolicError::ConflictingEffects { atom, .. } => {
                K::Invalid(format!("effect both adds and deletes {atom}"))
            }
            other => K::Invalid(other.to_string()),
        };
        err(name_node, kind)
    })
}

/// Parses a domain definition.
pub fn parse_domain(text: &str) -> Result<DomainSpec> {
    let root = read(text)?;
    let (name, sections) = header(&root, "domain")?;
    let mut spec = DomainSpec {
        name,
        requirements: Vec::new(),
        types: Vec::new(),
        predicates: Vec::new(),
        operators: Vec::new(),
    };
    let mut seen = BTreeSet::new();
    for node in sections {
        let (kw, sec, rest) = section(node)?;
        if sec != ":action" && !seen.insert(sec.to_string()) {
            return Err(err(kw, K::Duplicate(format!("section {sec}"))));
        }
        match sec {
            ":requirements" => {
                for r in rest {
                    match r.symbol() {
                        Some(req @ (":strips" | ":typing")) => {
                            if !spec.requirements.iter().any(|x| x == req) {
                                spec.requirements.push(req.to_string());
                            }
                        }
                        Some(req) if req.starts_with(':') => {
                            return Err(err(r, K::Unsupported(format!("requirement {req}"))));
                        }
                        _ => {
                            return Err(err(r, K::Syntax("expected a requirement keyword".into())))
                        }
                    }
                }
            }
            ":types" => {
                if !spec.predicates.is_empty() || !spec.operators.is_empty() {
                    return Err(err(
                        kw,
                        K::Syntax("`:types` must precede predicates and actions".into()),
                    ));
                }
                for t in rest {
                    match t.symbol() {
                        Some("-") => return Err(err(t, K::Unsupported("type hierarchy".into()))),
                        _ => {
                            let ty = expect_name(t, "type name")?;
                            if spec.types.contains(&ty) {
                                return Err(err(t, K::Duplicate("type".into())));
                            }
                            spec.types.push(ty);
                        }
                    }
                }
            }
            ":predicates" => {
                if !spec.operators.is_empty() {
                    return Err(err(
                        kw,
                        K::Syntax("`:predicates` must precede actions".into()),
                    ));
                }
                for p in rest {
                    let items = expect_list(p, "predicate signature")?;
                    let head = items
                        .first()
                        .ok_or_else(|| err(p, K::Syntax("empty predicate signature".into())))?;
                    let pname = expect_name(head, "predicate name")?;
                    if spec.predicates.iter().any(|x| x.name == pname) {
                        return Err(err(head, K::Duplicate("predicate".into())));
                    }
                    let mut arg_types = Vec::new();
                    for (_, ty, pos) in typed_list(&items[1..], true)? {
                        if !spec.types.contains(&ty) {
                            return Err(err_at(pos, &ty, K::UnknownType));
                        }
                        arg_types.push(ty);
                    }
                    spec.predicates.push(PredicateSig {
                        name: pname,
                        arg_types,
                    });
                }
            }
            ":action" => {
                let op = action(kw, rest, &spec.types, &spec.predicates)?;
                if spec.operators.iter().any(|o| o.name == op.name) {
                    return Err(err(&rest[0], K::Duplicate("action".into())));
                }
                spec.operators.push(op);
            }
            _ => return Err(err(kw, K::UnknownSection)),
        }
    }
    Ok(spec)
}

fn ground_atom(node: &Sexp, objects: &[Object], predicates: &[PredicateSig]) -> Result<GroundAtom> {
    let (pred, args) = raw_atom(node)?;
    let types = check_signature(node, &pred, &args, predicates)?;
    for ((arg, pos), expected) in args.iter().zip(&types) {
        let obj = objects
            .iter()
            .find(|o| &o.name == arg)
            .ok_or_else(|| err_at(*pos, arg, K::UndeclaredObject))?;
        if &obj.type_name != expected {
            return Err(err_at(
                *pos,
                arg,
                K::TypeMismatch {
                    expected: expected.clone(),
                    found: obj.type_name.clone(),
                },
            ));
        }
    }
    Ok(GroundAtom::new(pred, args.into_iter().map(|(a, _)| a)))
}

/// Parses a problem definition against an already parsed domain.
pub fn parse_problem(text: &str, domain: &DomainSpec) -> Result<ProblemSpec> {
    let root = read(text)?;
    let (name, sections) = header(&root, "problem")?;
    let mut domain_name: Option<String> = None;
    let mut objects: Vec<Object> = Vec::new();
    let mut init = BTreeSet::new();
    let mut goal = Goal::default();
    let mut seen = BTreeSet::new();
    for node in sections {
        let (kw, sec, rest) = section(node)?;
        if !seen.insert(sec.to_string()) {
            return Err(err(kw, K::Duplicate(format!("section {sec}"))));
        }
        match sec {
            ":domain" => {
                let [d] = rest else {
                    return Err(err(kw, K::Syntax("expected `(:domain NAME)`".into())));
                };
                let d_name = expect_name(d, "domain name")?;
                if d_name != domain.name {
                    return Err(err(
                        d,
                        K::DomainMismatch {
                            expected: domain.name.clone(),
                        },
                    ));
                }
                domain_name = Some(d_name);
            }
            ":objects" => {
                for (obj, ty, pos) in typed_list(rest, false)? {
                    if !domain.types.contains(&ty) {
                        return Err(err_at(pos, &ty, K::UnknownType));
                    }
                    if objects.iter().any(|o| o.name == obj) {
                        return Err(err_at(pos, &obj, K::Duplicate("object".into())));
                    }
                    objects.push(Object::new(obj, ty));
                }
            }
            ":init" => {
                for a in rest {
                    if a.list().and_then(|l| l.first()).and_then(Sexp::symbol) == Some("not") {
                        return Err(err(a, K::Unsupported("negative initial atom".into())));
                    }
                    init.insert(ground_atom(a, &objects, &domain.predicates)?);
                }
            }
            ":goal" => {
                let [g] = rest else {
                    return Err(err(kw, K::Syntax("expected one goal formula".into())));
                };
                let mut lits = Vec::new();
                literals(g, &mut lits)?;
                let mut atoms = BTreeSet::new();
                for (neg, atom) in lits {
                    if neg {
                        return Err(err(atom, K::Unsupported("negative goal".into())));
                    }
                    atoms.insert(ground_atom(atom, &objects, &domain.predicates)?);
                }
                goal = Goal { atoms };
            }
            ":requirements" => {
                return Err(err(
                    kw,
                    K::Unsupported("requirements in problem files".into()),
                ));
            }
            _ => return Err(err(kw, K::UnknownSection)),
        }
    }
    let domain_name =
        domain_name.ok_or_else(|| err(&root, K::Syntax("missing `(:domain NAME)`".into())))?;
    Ok(ProblemSpec {
        name,
        domain: domain_name,
        objects,
        init,
        goal,
    })
}
