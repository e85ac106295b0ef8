//! Acceptance run. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::{BTreeSet, VecDeque};
use std::panic;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use planskill::abstraction::extract;
use planskill::corpus::{self, DomainId, GoalId};
use planskill::curriculum::TrainOutcome;
use planskill::env::{Action, EnvConfig, GridEnv, Script, World};
use planskill::experiment::{
    cmd_eval_generalize, cmd_train, cmd_transfer, mean, replay_sharing_ablation, train_seed,
    ExperimentConfig, TrainReport, TransferReport, TransferSection,
};
use planskill::pddl::{
    parse_domain, parse_problem, serialize_domain, serialize_problem, DomainSpec, ParseError,
};
use planskill::planner::{plan, validate_plan, Heuristic, PlannerConfig};
use planskill::skill::{
    encode, rollout_skill, skill_target, Controller, LearnerParams, OperatorReward, RewardSpec,
    ScriptedController, Sharing, SkillLibrary, SkillView, TabularPolicy,
};
use planskill::symbolic::{EnvState, Goal, GroundAtom, GroundOperator, SymbolicState};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: std::ops::Range<u64> = 0..10;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

// ------------------------------------------------------------ symbolic

type Atoms = BTreeSet<GroundAtom>;

/// Breadth-first shortest plan length, written against the raw operator
/// sets rather than the planner.
fn bfs_len(init: &Atoms, goal: &Atoms, ops: &[GroundOperator]) -> Option<usize> {
    if goal.is_subset(init) {
        return Some(0);
    }
    let mut seen: BTreeSet<Atoms> = BTreeSet::from([init.clone()]);
    let mut queue = VecDeque::from([(init.clone(), 0usize)]);
    while let Some((s, d)) = queue.pop_front() {
        for op in ops.iter().filter(|op| op.pre.is_subset(&s)) {
            let next: Atoms = s
                .difference(&op.del)
                .chain(op.add.iter())
                .cloned()
                .collect();
            if goal.is_subset(&next) {
                return Some(d + 1);
            }
            if seen.insert(next.clone()) {
                queue.push_back((next, d + 1));
            }
        }
    }
    None
}

fn walk(
    s: &SymbolicState,
    ops: &[GroundOperator],
    len: usize,
    rng: &mut ChaCha8Rng,
) -> SymbolicState {
    let mut s = s.clone();
    for _ in 0..len {
        let options: Vec<&GroundOperator> =
            ops.iter().filter(|op| s.contains_all(&op.pre)).collect();
        let Some(op) = options.choose(rng) else { break };
        s = planskill::symbolic::successor(op, &s);
    }
    s
}

/// A goal of one to three atoms true after a random walk from `from`,
/// preferring atoms that are not already true.
fn reachable_goal(from: &SymbolicState, ops: &[GroundOperator], rng: &mut ChaCha8Rng) -> Goal {
    let len = rng.gen_range(1..=10);
    let end = walk(from, ops, len, rng);
    let mut fresh: Vec<&GroundAtom> = end.iter().filter(|a| !from.contains(a)).collect();
    let mut old: Vec<&GroundAtom> = end.iter().filter(|a| from.contains(a)).collect();
    fresh.shuffle(rng);
    old.shuffle(rng);
    let k = rng.gen_range(1..=3);
    Goal::new(fresh.into_iter().chain(old).take(k).cloned())
}

fn criterion_1() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let cfg = PlannerConfig::default();
    let (mut matched, mut total, mut secs) = (0, 0, 0.0);
    for d in [DomainId::Drawer, DomainId::Peg] {
        let w = World::load(d, GoalId::Train).unwrap();
        for _ in 0..100 {
            let goal = reachable_goal(&w.problem.init, &w.grounded, &mut rng);
            let oracle = bfs_len(w.problem.init.atoms(), &goal.atoms, &w.grounded);
            let t = Instant::now();
            let p = plan(&w.problem.init, &goal, &w.grounded, &cfg);
            secs += t.elapsed().as_secs_f64();
            total += 1;
            if let (Ok(p), Some(n)) = (p, oracle) {
                matched += (p.len() == n && validate_plan(&p, &w.problem.init, &goal)) as usize;
            }
        }
    }
    verdict(
        matched == total && secs < 30.0,
        format!(
            "{matched}/{total} A* lengths equal BFS over drawer and peg, search time {secs:.2}s"
        ),
    )
}

fn golden_chain(d: DomainId) -> Result<usize, String> {
    let w = World::load(d, GoalId::Train).unwrap();
    let mut e = GridEnv::new(EnvConfig::canonical(d), &w).unwrap();
    e.reset(0);
    let script = Script::parse(corpus::golden_trajectory(d)).map_err(|e| e.to_string())?;
    // chained expected states built by hand from the operator sets
    let mut chain: Vec<Atoms> = vec![w.problem.init.atoms().clone()];
    for (name, _) in &script.segments {
        let op = w
            .grounded
            .iter()
            .find(|g| &g.to_string() == name)
            .ok_or(format!("{d}: unknown {name}"))?;
        let s = chain.last().unwrap();
        if !op.pre.is_subset(s) {
            return Err(format!("{d}: {name} inapplicable"));
        }
        chain.push(
            s.difference(&op.del)
                .chain(op.add.iter())
                .cloned()
                .collect(),
        );
    }
    let mut seen: Vec<Atoms> = vec![w.parse(e.state()).unwrap().atoms().clone()];
    for (i, (name, actions)) in script.segments.iter().enumerate() {
        for a in actions {
            let s = w.parse(&e.step(a).state).unwrap().atoms().clone();
            if seen.last() != Some(&s) {
                seen.push(s);
            }
        }
        if seen.last() != Some(&chain[i + 1]) {
            return Err(format!(
                "{d}: parsed state after {name} differs from the chain"
            ));
        }
    }
    if seen != chain {
        return Err(format!(
            "{d}: parsed sequence has {} states, chain {}",
            seen.len(),
            chain.len()
        ));
    }
    Ok(chain.len() - 1)
}

fn criterion_2() -> Verdict {
    let mut notes = Vec::new();
    let mut ok = true;
    for d in DomainId::ALL {
        match golden_chain(d) {
            Ok(n) => notes.push(format!("{d} {n} ops")),
            Err(e) => {
                ok = false;
                notes.push(e);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let worlds: Vec<World> = DomainId::ALL
        .iter()
        .map(|d| World::load(*d, GoalId::Train).unwrap())
        .collect();
    let (mut planned, mut failures) = (0, 0);
    for i in 0..1000 {
        let w = &worlds[i % worlds.len()];
        let start = walk(&w.problem.init, &w.grounded, rng.gen_range(0..6), &mut rng);
        let goal = reachable_goal(&start, &w.grounded, &mut rng);
        let cfg = PlannerConfig {
            heuristic: if i % 2 == 0 {
                Heuristic::Zero
            } else {
                Heuristic::GoalCount
            },
            ..PlannerConfig::default()
        };
        match plan(&start, &goal, &w.grounded, &cfg) {
            Ok(p) => {
                planned += 1;
                failures += !validate_plan(&p, &start, &goal) as usize;
            }
            Err(_) => failures += 1,
        }
    }
    ok &= failures == 0;
    verdict(
        ok,
        format!(
            "golden chains [{}]; sweep {planned}/1000 planned, {failures} failures",
            notes.join(", ")
        ),
    )
}

// -------------------------------------------------------------- parser

const TOKENS: &[&str] = &[
    "(",
    ")",
    "(",
    ")",
    "define",
    "domain",
    "problem",
    ":domain",
    ":requirements",
    ":strips",
    ":typing",
    ":types",
    ":predicates",
    ":action",
    ":parameters",
    ":precondition",
    ":effect",
    ":objects",
    ":init",
    ":goal",
    "and",
    "not",
    "or",
    "forall",
    "?x",
    "?y",
    "-",
    "robot",
    "object",
    "t",
    "a",
    "b",
    ";",
    "\n",
    " ",
    "\t",
    "\"",
    "=",
    "\u{0}",
    "é",
    "😀",
];

fn fuzz_input(rng: &mut ChaCha8Rng, files: &[(String, &'static str)]) -> (usize, String) {
    let which = rng.gen_range(0..files.len());
    let text = files[which].1;
    let s = match rng.gen_range(0..4) {
        0 | 1 => {
            let mut s = text.to_string();
            for _ in 0..rng.gen_range(1..=4) {
                let at = floor_boundary(&s, rng.gen_range(0..=s.len()));
                match rng.gen_range(0..4) {
                    0 => s.insert_str(at, TOKENS.choose(rng).unwrap()),
                    1 => {
                        let end = floor_boundary(&s, (at + rng.gen_range(1..40)).min(s.len()));
                        s.replace_range(at..end, "");
                    }
                    2 => s.truncate(at),
                    _ => {
                        let c = char::from_u32(rng.gen_range(0..0x250)).unwrap_or('?');
                        s.insert(at, c);
                    }
                }
            }
            s
        }
        2 => (0..rng.gen_range(0..80))
            .map(|_| *TOKENS.choose(rng).unwrap())
            .collect::<Vec<_>>()
            .join(" "),
        _ => (0..rng.gen_range(0..120))
            .map(|_| char::from_u32(rng.gen_range(0..0x3000)).unwrap_or('x'))
            .collect(),
    };
    (which, s)
}

fn floor_boundary(s: &str, at: usize) -> usize {
    (0..=at).rev().find(|i| s.is_char_boundary(*i)).unwrap()
}

fn positioned(e: &ParseError, text: &str) -> bool {
    e.line >= 1 && e.column >= 1 && e.line <= text.split('\n').count()
}

fn criterion_3() -> Verdict {
    let files = corpus::pddl_files();
    let domain_of = |path: &str| -> DomainSpec {
        let d: DomainId = path.split('/').next().unwrap().parse().unwrap();
        parse_domain(corpus::domain_text(d)).unwrap()
    };
    let mut round_trips = 0;
    for (path, text) in &files {
        let ok = if path.ends_with("domain.pddl") {
            parse_domain(text).is_ok_and(|spec| {
                let out = serialize_domain(&spec);
                parse_domain(&out)
                    .is_ok_and(|again| again == spec && serialize_domain(&again) == out)
            })
        } else {
            let dom = domain_of(path);
            parse_problem(text, &dom).is_ok_and(|p| {
                let out = serialize_problem(&p);
                parse_problem(&out, &dom)
                    .is_ok_and(|again| again == p && serialize_problem(&again) == out)
            })
        };
        round_trips += ok as usize;
    }

    let domains: Vec<DomainSpec> = files.iter().map(|(p, _)| domain_of(p)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let hook = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    let (mut panics, mut unpositioned, mut accepted) = (0, 0, 0);
    for _ in 0..100_000 {
        let (which, input) = fuzz_input(&mut rng, &files);
        let as_domain = rng.gen_bool(0.5);
        let dom = &domains[which];
        let r = panic::catch_unwind(|| {
            if as_domain {
                parse_domain(&input).map(|_| ())
            } else {
                parse_problem(&input, dom).map(|_| ())
            }
        });
        match r {
            Err(_) => panics += 1,
            Ok(Ok(())) => accepted += 1,
            Ok(Err(e)) => unpositioned += !positioned(&e, &input) as usize,
        }
    }
    panic::set_hook(hook);
    verdict(
        round_trips == files.len() && panics == 0 && unpositioned == 0,
        format!(
            "round trip {round_trips}/{} files; 100000 fuzz inputs: {panics} panics, {unpositioned} unpositioned errors, {accepted} accepted",
            files.len()
        ),
    )
}

// ------------------------------------------------------------ learning

/// Trained runs shared by the learning criteria.
struct Runs {
    _tmp: tempfile::TempDir,
    drawer_cfg: ExperimentConfig,
    drawer: TrainReport,
    drawer_secs: f64,
    peg_cfg: ExperimentConfig,
    peg: TrainReport,
    coffee: SkillLibrary,
    transfer: TransferReport,
    transfer_cfg: ExperimentConfig,
}

fn config(name: &str, d: DomainId, out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::for_domain(name, d, SEEDS.collect());
    cfg.experiment.output_dir = out.to_path_buf();
    cfg
}

fn transfer_config(out: &Path, source: &Path) -> ExperimentConfig {
    let mut cfg = config("accept-transfer", DomainId::Coffee, out);
    cfg.transfer = Some(TransferSection {
        source_domain: DomainId::Drawer,
        source_checkpoints: source.join("checkpoints"),
        remap: ["pick", "pull", "push"]
            .iter()
            .map(|s| (s.to_string(), s.to_string()))
            .collect(),
    });
    cfg
}

fn runs() -> Runs {
    let tmp = tempfile::tempdir().unwrap();
    let drawer_cfg = config(
        "accept-drawer",
        DomainId::Drawer,
        &tmp.path().join("drawer"),
    );
    let t = Instant::now();
    let drawer = cmd_train(&drawer_cfg).unwrap();
    let drawer_secs = t.elapsed().as_secs_f64();
    let peg_cfg = config("accept-peg", DomainId::Peg, &tmp.path().join("peg"));
    let peg = cmd_train(&peg_cfg).unwrap();
    let coffee_cfg = config(
        "accept-coffee",
        DomainId::Coffee,
        &tmp.path().join("coffee"),
    );
    let w = coffee_cfg.world(GoalId::Train).unwrap();
    let coffee = train_seed(
        &coffee_cfg,
        &w,
        0,
        SkillLibrary::tabular(coffee_cfg.learner.clone(), Sharing::Lifted),
    )
    .unwrap()
    .library;
    let transfer_cfg = transfer_config(&tmp.path().join("transfer"), drawer_cfg.out());
    let transfer = cmd_transfer(&transfer_cfg).unwrap();
    Runs {
        _tmp: tmp,
        drawer_cfg,
        drawer,
        drawer_secs,
        peg_cfg,
        peg,
        coffee,
        transfer,
        transfer_cfg,
    }
}

/// A state from the training distribution of the next plan step: scripted
/// skills execute a random prefix of the plan, then the robot approaches
/// the step's target and follows `lib`'s greedy policy for a few steps.
fn visited_state(
    env: &mut GridEnv,
    w: &World,
    lib: &SkillLibrary,
    rng: &mut ChaCha8Rng,
) -> Option<(EnvState, GroundOperator, String)> {
    let mut scripted = SkillLibrary::with_factory(
        LearnerParams::default(),
        Sharing::Lifted,
        Box::new(|_, _| Box::new(ScriptedController)),
    );
    env.reset(rng.gen());
    let p = plan(
        &w.parse(env.state()).unwrap(),
        &w.problem.goal,
        &w.grounded,
        &PlannerConfig::default(),
    )
    .ok()?;
    let j = rng.gen_range(0..p.len());
    for op in &p.steps[..j] {
        if !rollout_skill(env, w, &mut scripted, op, false, rng)
            .ok()?
            .success
        {
            return None;
        }
    }
    let op = p.steps[j].clone();
    let mut policy = lib.get(&lib.key(&op))?.as_tabular()?.clone();
    let target = skill_target(w, &op, env.state()).to_string();
    env.set_focus(Some(&target));
    env.step(&Action::Approach(target.clone()));
    for _ in 0..rng.gen_range(0..8) {
        let x = env.state().clone();
        let view = SkillView {
            world: w,
            op: &op,
            state: &x,
            target: &target,
        };
        let a = policy.act(&view, false, rng);
        env.step(&a);
    }
    Some((env.state().clone(), op, target))
}

fn perturb(v: &mut [f64], rng: &mut ChaCha8Rng) {
    for f in v.iter_mut() {
        *f = match rng.gen_range(0..3) {
            0 => rng.gen_range(-3..12) as f64,
            1 => rng.gen_range(0.0..1.0),
            _ => rng.gen_range(-1e3..1e3),
        };
    }
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|f| f.to_bits()).collect()
}

fn criterion_4(r: &Runs) -> Verdict {
    let libs: Vec<(DomainId, &SkillLibrary)> = vec![
        (DomainId::Drawer, &r.drawer.runs[0].library),
        (DomainId::Peg, &r.peg.runs[0].library),
        (DomainId::Coffee, &r.coffee),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let (mut violations, mut covered, mut total) = (0, 0, 0);
    let mut i = 0u64;
    while total < 10_000 {
        let (d, lib) = &libs[i as usize % libs.len()];
        i += 1;
        let w = World::load(*d, GoalId::Train).unwrap();
        let mut env = GridEnv::new(EnvConfig::new(*d), &w).unwrap();
        let Some((x, op, target)) =
            visited_state(&mut env, &w, lib, &mut ChaCha8Rng::seed_from_u64(i))
        else {
            continue;
        };
        let op = &op;
        let mut policy: TabularPolicy =
            lib.get(&lib.key(op)).unwrap().as_tabular().unwrap().clone();
        let robot = w.roster.robot.as_str();
        let mut y = x.clone();
        let frozen: Vec<&str> = std::iter::once(robot)
            .chain(op.args().iter().map(String::as_str))
            .collect();
        let others: Vec<String> = x
            .entities()
            .map(|(e, _)| e.to_string())
            .filter(|e| !frozen.contains(&e.as_str()))
            .collect();
        for e in &others {
            if rng.gen_bool(0.7) {
                perturb(y.get_mut(e).unwrap(), &mut rng);
            }
        }
        let (ax, ay) = (
            extract(&x, op, robot).unwrap(),
            extract(&y, op, robot).unwrap(),
        );
        let same_extract = ax
            .layout
            .iter()
            .map(|(e, v)| (e, bits(v)))
            .eq(ay.layout.iter().map(|(e, v)| (e, bits(v))));
        let act = |p: &mut TabularPolicy, s: &EnvState| {
            let view = SkillView {
                world: &w,
                op,
                state: s,
                target: &target,
            };
            p.act(&view, false, &mut ChaCha8Rng::seed_from_u64(0))
        };
        let (gx, gy) = (act(&mut policy, &x), act(&mut policy, &y));
        violations += (!same_extract || gx != gy) as usize;
        covered += policy
            .values(&encode(&x, op, robot, lib.params.bin))
            .iter()
            .any(|q| *q != 0.0) as usize;
        total += 1;
    }
    verdict(
        violations == 0 && total == 10_000,
        format!(
            "{violations} violations in {total} perturbations ({covered} on learned table entries)"
        ),
    )
}

fn scrambled(w: &World, env: &mut GridEnv, rng: &mut ChaCha8Rng) -> EnvState {
    let mut x = env.reset(rng.gen()).clone();
    let (wd, ht) = (env.config().width as i64, env.config().height as i64);
    for o in &w.problem.objects {
        let v = x.get_mut(&o.name).unwrap();
        v[0] = rng.gen_range(0..wd) as f64;
        v[1] = rng.gen_range(0..ht) as f64;
        for f in v.iter_mut().skip(2) {
            *f = *[0.0, 0.5, 1.0, rng.gen_range(0.0..1.0)]
                .choose(rng)
                .unwrap();
        }
    }
    x
}

fn golden_states(w: &World) -> Vec<EnvState> {
    let mut e = GridEnv::new(EnvConfig::canonical(w.id), w).unwrap();
    let mut out = vec![e.reset(0).clone()];
    for a in Script::parse(corpus::golden_trajectory(w.id))
        .unwrap()
        .actions()
    {
        out.push(e.step(a).state);
    }
    out
}

fn criterion_5() -> Verdict {
    let worlds: Vec<World> = DomainId::ALL
        .iter()
        .map(|d| World::load(*d, GoalId::Train).unwrap())
        .collect();
    let golden: Vec<Vec<EnvState>> = worlds.iter().map(golden_states).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let (mut out_of_range, mut mismatches, mut ones, mut total) = (0, 0, 0, 0);
    for i in 0..100_000 {
        let k = i % worlds.len();
        let w = &worlds[k];
        let mut env = GridEnv::new(EnvConfig::new(w.id), w).unwrap();
        let x = if rng.gen_bool(0.5) {
            scrambled(w, &mut env, &mut rng)
        } else {
            golden[k].choose(&mut rng).unwrap().clone()
        };
        let op = w.grounded.choose(&mut rng).unwrap();
        let max_dist = (env.config().width + env.config().height - 2) as f64;
        let spec = |lambda_eff| RewardSpec {
            lambda_eff,
            max_dist,
        };
        let r = OperatorReward::new(w, op, spec(rng.gen_range(0.0..=1.0)))
            .unwrap()
            .eval(&x)
            .unwrap();
        out_of_range += !(0.0..=1.0).contains(&r) as usize;
        let r1 = OperatorReward::new(w, op, spec(1.0))
            .unwrap()
            .eval(&x)
            .unwrap();
        let s = w.parse(&x).unwrap();
        let effects_hold =
            op.add.iter().all(|a| s.contains(a)) && op.del.iter().all(|a| !s.contains(a));
        mismatches += ((r1 == 1.0) != effects_hold) as usize;
        ones += effects_hold as usize;
        total += 1;
    }
    verdict(
        out_of_range == 0 && mismatches == 0,
        format!("{total} pairs: {out_of_range} out of [0,1], {mismatches} terminal mismatches ({ones} with effects verified)"),
    )
}

fn first_scheduled(o: &TrainOutcome, skill: &str) -> Option<usize> {
    o.schedule()
        .iter()
        .find(|(_, s)| *s == skill)
        .map(|(i, _)| *i)
}

fn criterion_6(r: &Runs) -> Verdict {
    let w = World::load(DomainId::Drawer, GoalId::Train).unwrap();
    let len = plan(
        &w.problem.init,
        &w.problem.goal,
        &w.grounded,
        &PlannerConfig::default(),
    )
    .map_or(0, |p| p.len());
    let reached: Vec<u64> = r
        .drawer
        .runs
        .iter()
        .filter_map(|s| s.outcome.threshold_steps)
        .filter(|s| *s <= 200_000)
        .collect();
    verdict(
        len == 8 && reached.len() >= 8 && r.drawer_secs < 600.0,
        format!(
            "plan length {len}; {}/10 seeds reach progress 1.0 within 2e5 steps (max {}), {:.1}s wall",
            reached.len(),
            reached.iter().max().copied().unwrap_or(0),
            r.drawer_secs
        ),
    )
}

fn criterion_7(r: &Runs) -> Verdict {
    let mut converged = 0;
    let mut bad = Vec::new();
    for s in r.drawer.runs.iter().filter(|s| s.outcome.converged()) {
        converged += 1;
        let o = &s.outcome;
        let first = o.schedule().first().map(|(_, n)| n.to_string());
        let pull_ok = o.first_success.get("pull");
        let pick = first_scheduled(o, "pick");
        let ordered = match (pull_ok, pick) {
            (_, None) => true,
            (Some(p), Some(k)) => *p <= k,
            (None, Some(_)) => false,
        };
        if first.as_deref() != Some("pull") || !ordered {
            bad.push(s.seed);
        }
    }
    verdict(
        converged > 0 && bad.is_empty(),
        format!("{converged} converged seeds, order violated on {bad:?}"),
    )
}

fn criterion_8(r: &Runs) -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for cfg in [&r.drawer_cfg, &r.peg_cfg] {
        let rep = cmd_eval_generalize(cfg, &cfg.out().join("checkpoints")).unwrap();
        let (train, test) = (rep.mean(GoalId::Train), rep.test_mean());
        let episodes = rep.progress[&GoalId::Train].len();
        ok &= episodes == 500 && test >= 0.75 * train;
        notes.push(format!(
            "{} train {train:.3} test {test:.3} ratio {:.3}",
            cfg.experiment.domain,
            if train > 0.0 { test / train } else { 0.0 }
        ));
    }
    verdict(
        ok,
        format!("{} over 10 seeds x 50 episodes", notes.join("; ")),
    )
}

fn criterion_9(r: &Runs) -> Verdict {
    let t = &r.transfer;
    let (cold, warm) = (t.cold_median(), t.warm_median());
    let zero_shot = mean(&t.pairs.iter().map(|p| p.warm_zero_shot).collect::<Vec<_>>());
    verdict(
        t.pairs.len() == 10 && t.all_reached() && warm <= 0.5 * cold,
        format!(
            "median steps to progress 1.0: cold {cold} warm {warm} (ratio {:.3}), warm zero-shot {zero_shot:.2}",
            warm / cold
        ),
    )
}

fn criterion_10() -> Verdict {
    let k = LearnerParams::default().k_episodes;
    let pairs: Vec<_> = SEEDS
        .map(|s| replay_sharing_ablation(s, k, 50).unwrap())
        .collect();
    let wins = pairs.iter().filter(|p| p.shared > p.unshared).count();
    let shared = mean(&pairs.iter().map(|p| p.shared).collect::<Vec<_>>());
    let unshared = mean(&pairs.iter().map(|p| p.unshared).collect::<Vec<_>>());
    verdict(
        wins >= 8,
        format!(
            "shared wins {wins}/10 seeds; mean success shared {shared:.2} unshared {unshared:.2}"
        ),
    )
}

fn same_file(a: &Path, b: &Path) -> bool {
    matches!((std::fs::read(a), std::fs::read(b)), (Ok(x), Ok(y)) if x == y)
}

fn criterion_11(r: &Runs) -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let again = config(
        "accept-drawer",
        DomainId::Drawer,
        &tmp.path().join("drawer"),
    );
    cmd_train(&again).unwrap();
    cmd_eval_generalize(&r.drawer_cfg, &r.drawer_cfg.out().join("checkpoints")).unwrap();
    cmd_eval_generalize(&again, &again.out().join("checkpoints")).unwrap();
    let transfer = transfer_config(&tmp.path().join("transfer"), again.out());
    cmd_transfer(&transfer).unwrap();
    let files = [
        (r.drawer_cfg.out(), again.out(), "train_metrics.csv"),
        (r.drawer_cfg.out(), again.out(), "eval_metrics.csv"),
        (r.transfer_cfg.out(), transfer.out(), "transfer_metrics.csv"),
    ];
    let differing: Vec<&str> = files
        .iter()
        .filter(|(a, b, f)| !same_file(&a.join(f), &b.join(f)))
        .map(|t| t.2)
        .collect();
    verdict(
        differing.is_empty(),
        format!(
            "reran train, eval and transfer; {} of {} metrics files differ {differing:?}",
            differing.len(),
            files.len()
        ),
    )
}

fn main() -> ExitCode {
    // the harness passes libtest flags; listing must not run anything
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let names = [
        "planner optimality",
        "symbolic soundness",
        "parser robustness",
        "abstraction invariance",
        "reward contract",
        "curriculum end-to-end",
        "scheduling order",
        "goal generalization",
        "transfer",
        "replay-sharing ablation",
        "determinism",
    ];
    let mut results: Vec<Verdict> =
        vec![criterion_1(), criterion_2(), criterion_3(), criterion_5()];
    let r = runs();
    results.insert(3, criterion_4(&r));
    results.extend([
        criterion_6(&r),
        criterion_7(&r),
        criterion_8(&r),
        criterion_9(&r),
        criterion_10(),
        criterion_11(&r),
    ]);
    let mut failed = 0;
    for (i, (name, v)) in names.iter().zip(&results).enumerate() {
        println!(
            "{} {:>2} {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            i + 1,
            v.detail
        );
        failed += !v.pass as usize;
    }
    println!(
        "{}/{} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
