use planskill::abstraction::{abstract_space_signature, extract, AbstractionError};
use planskill::corpus::{DomainId, GoalId};
use planskill::env::{EnvConfig, GridEnv, World};
use planskill::symbolic::{
    ground_operator, EnvState, GroundOperator, LiftedOperator, Parameter, Substitution,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn world(d: DomainId) -> World {
    World::load(d, GoalId::Train).unwrap()
}

fn op<'a>(w: &'a World, text: &str) -> &'a GroundOperator {
    w.grounded.iter().find(|g| g.to_string() == text).unwrap()
}

fn random_state(w: &World, rng: &mut ChaCha8Rng) -> EnvState {
    let mut e = GridEnv::new(EnvConfig::new(w.id), w).unwrap();
    let mut x = e.reset(rng.gen()).clone();
    for o in &w.problem.objects {
        for f in x.get_mut(&o.name).unwrap().iter_mut().skip(2) {
            *f = rng.gen_range(0.0..1.0);
        }
    }
    x
}

#[test]
fn parameters_covering_everything_hide_nothing() {
    let robot = Arc::new(LiftedOperator::new("noop", vec![], vec![], vec![], vec![]).unwrap());
    let w = world(DomainId::Peg);
    let x = GridEnv::new(EnvConfig::new(DomainId::Peg), &w)
        .unwrap()
        .state()
        .clone();
    let none = ground_operator(&robot, &Substitution::new(), &w.problem.objects).unwrap();
    assert_eq!(extract(&x, &none, "robot").unwrap().dim(), 5);
    // operator over every non-robot entity
    let params: Vec<Parameter> = w
        .problem
        .objects
        .iter()
        .filter(|o| o.type_name != "robot")
        .map(|o| Parameter::new(format!("?{}", o.name), o.type_name.clone()))
        .collect();
    let all = Arc::new(LiftedOperator::new("all", params, vec![], vec![], vec![]).unwrap());
    let delta: Substitution = w
        .problem
        .objects
        .iter()
        .filter(|o| o.type_name != "robot")
        .map(|o| (format!("?{}", o.name), o.name.clone()))
        .collect();
    let g = ground_operator(&all, &delta, &w.problem.objects).unwrap();
    assert_eq!(extract(&x, &g, "robot").unwrap().dim(), x.total_dim());
}

#[test]
fn pick_ignores_other_objects() {
    let w = world(DomainId::Peg);
    let pick = op(&w, "(pick peg1)");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = random_state(&w, &mut rng);
    let a = extract(&x, pick, "robot").unwrap();
    assert_eq!(
        a.layout.iter().map(|(e, _)| e.as_str()).collect::<Vec<_>>(),
        ["robot", "peg1"]
    );
    let mut y = x.clone();
    for e in ["peg2", "hole1", "hole2"] {
        for f in y.get_mut(e).unwrap().iter_mut() {
            *f += 3.25;
        }
    }
    let b = extract(&y, pick, "robot").unwrap();
    assert_eq!(
        a.vector().iter().map(|f| f.to_bits()).collect::<Vec<_>>(),
        b.vector().iter().map(|f| f.to_bits()).collect::<Vec<_>>()
    );
}

#[test]
fn dimension_matches_type_table() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for d in DomainId::ALL {
        let w = world(d);
        for _ in 0..50 {
            let x = random_state(&w, &mut rng);
            for g in &w.grounded {
                // independent accounting: robot 5, items 3, cabinets 3, holes 2, machines 3
                let dim_of = |t: &str| match t {
                    "robot" => 5,
                    "hammer" | "peg" | "pod" | "cabinet" | "machine" => 3,
                    "hole" => 2,
                    _ => unreachable!(),
                };
                let expected: usize = 5 + g
                    .args()
                    .iter()
                    .map(|a| dim_of(&w.problem.object(a).unwrap().type_name))
                    .sum::<usize>();
                let a = extract(&x, g, "robot").unwrap();
                assert_eq!(a.dim(), expected);
                let sig = abstract_space_signature(g.lifted(), &w.domain).unwrap();
                assert_eq!(sig.dim(), a.dim(), "{g}");
            }
        }
    }
}

#[test]
fn signatures_are_shared_per_lifted_operator() {
    let w = world(DomainId::Peg);
    let s1 = abstract_space_signature(op(&w, "(pick peg1)").lifted(), &w.domain).unwrap();
    let s2 = abstract_space_signature(op(&w, "(pick peg2)").lifted(), &w.domain).unwrap();
    assert_eq!(s1, s2);
    let ins = abstract_space_signature(op(&w, "(insert peg1 hole1)").lifted(), &w.domain).unwrap();
    assert_ne!(s1, ins);
    assert!(!s1.structurally_compatible(&ins));
    // drawer pick and coffee pick share structure despite different types
    let dw = world(DomainId::Drawer);
    let cw = world(DomainId::Coffee);
    let dp = abstract_space_signature(dw.domain.operator("pick").unwrap(), &dw.domain).unwrap();
    let cp = abstract_space_signature(cw.domain.operator("pick").unwrap(), &cw.domain).unwrap();
    assert_ne!(dp, cp);
    assert!(dp.structurally_compatible(&cp));
}

#[test]
fn hiding_invariance_and_idempotence() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let w = world(DomainId::Drawer);
    for _ in 0..200 {
        let x = random_state(&w, &mut rng);
        let y = random_state(&w, &mut rng);
        let g = &w.grounded[rng.gen_range(0..w.grounded.len())];
        let a = extract(&x, g, "robot").unwrap();
        // y agreeing with x on the abstract entities
        let y2 = a.embed(&y);
        assert_eq!(extract(&y2, g, "robot").unwrap(), a);
        assert_eq!(extract(&a.embed(&x), g, "robot").unwrap(), a);
        assert_eq!(a.embed(&x), x);
    }
}

#[test]
fn missing_entity_is_an_integrity_error() {
    let w = world(DomainId::Drawer);
    let x = EnvState::new().with("robot", vec![0.0; 5]);
    let err = extract(&x, op(&w, "(pick hammer1)"), "robot").unwrap_err();
    assert_eq!(err, AbstractionError::MissingEntity("hammer1".into()));
}
