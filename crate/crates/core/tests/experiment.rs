use std::collections::BTreeMap;
use std::path::Path;

use planskill::corpus::{self, DomainId, GoalId};
use planskill::curriculum::CurriculumConfig;
use planskill::experiment::*;
use planskill::planner::PlannerConfig;
use planskill::skill::checkpoint;
use planskill::skill::{LearnerParams, ScriptedController, Sharing, SkillLibrary};

fn config(d: DomainId, seeds: Vec<u64>, out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::for_domain("test", d, seeds);
    cfg.experiment.output_dir = out.to_path_buf();
    cfg
}

#[test]
fn metrics_csv_round_trip() {
    let mut t = MetricsTable::new();
    t.push("exp", 3, 1, "task", "mean_progress", 0.125);
    t.push("exp", 3, 2, "pull", "proficiency", 1.0 / 3.0);
    t.push("exp", 4, 0, "test1", "std_progress", 0.0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    t.write(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("schema_version,experiment,seed,iteration,subject,metric,value\n1,exp,3,1,task,mean_progress,0.125\n"));
    assert_eq!(MetricsTable::read(&path).unwrap(), t);
}

#[test]
fn metrics_schema_is_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    std::fs::write(
        &path,
        "schema_version,experiment,seed,iteration,subject,metric,value\n2,e,0,0,task,x,1\n",
    )
    .unwrap();
    assert!(matches!(
        MetricsTable::read(&path),
        Err(ExperimentError::Metrics { .. })
    ));
    std::fs::write(&path, "version,experiment\n1,e\n").unwrap();
    assert!(matches!(
        MetricsTable::read(&path),
        Err(ExperimentError::Metrics { .. })
    ));
    std::fs::write(
        &path,
        "schema_version,experiment,seed,iteration,subject,metric,value\n1,e,0,0,task,x,abc\n",
    )
    .unwrap();
    assert!(matches!(
        MetricsTable::read(&path),
        Err(ExperimentError::Metrics { .. })
    ));
}

#[test]
fn summary_statistics() {
    assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
    assert_eq!(std_dev(&[1.0, 1.0]), 0.0);
    assert_eq!(std_dev(&[0.0, 2.0]), 1.0);
    assert_eq!(median(&[5.0, 1.0, 3.0]), 3.0);
    assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
}

#[test]
fn config_file_parses_with_defaults() {
    let text = r#"
[experiment]
name = "drawer-train"
domain = "drawer"
seeds = [0, 1, 2]
heuristic = "goal-count"

[learner]
k_episodes = 20
gamma = 0.95

[curriculum]
episodes = 5
convergence_window = 2

[eval]
goals = ["test1"]
"#;
    let cfg = ExperimentConfig::parse(text, Path::new("c.toml")).unwrap();
    assert_eq!(cfg.experiment.goal, GoalId::Train);
    assert_eq!(cfg.experiment.seeds, [0, 1, 2]);
    assert_eq!(cfg.learner.k_episodes, 20);
    assert_eq!(cfg.learner.alpha, LearnerParams::default().alpha);
    assert_eq!(cfg.curriculum.episodes, 5);
    assert_eq!(
        cfg.curriculum.max_outer,
        CurriculumConfig::default().max_outer
    );
    assert_eq!(cfg.eval.episodes, 50);
    assert_eq!(cfg.eval_goals(), [GoalId::Test1]);
    assert_eq!(cfg.env.width, 6);
    assert!(cfg.validate(Path::new("c.toml")).is_ok());

    let typo = text.replace("gamma", "gama");
    assert!(matches!(
        ExperimentConfig::parse(&typo, Path::new("c.toml")),
        Err(ExperimentError::Config { .. })
    ));
    let mut empty = cfg.clone();
    empty.experiment.seeds.clear();
    assert!(empty.validate(Path::new("c.toml")).is_err());
    let mut missing = cfg;
    missing.experiment.domain_file = Some("/no/such/file.pddl".into());
    assert!(missing.validate(Path::new("c.toml")).is_err());
}

#[test]
fn plan_command_examples() {
    let dtext = corpus::domain_text(DomainId::Drawer);
    let f = Path::new("x.pddl");
    let p = cmd_plan(
        dtext,
        f,
        corpus::problem_text(DomainId::Drawer, GoalId::Train).unwrap(),
        f,
        &PlannerConfig::default(),
    )
    .unwrap()
    .unwrap();
    assert_eq!(p.len(), 8);

    let satisfied = "(define (problem done) (:domain drawer)
      (:objects hammer1 - hammer cab1 - cabinet)
      (:init (handempty) (allclosed) (ontable hammer1) (closed cab1))
      (:goal (and (ontable hammer1))))";
    let p = cmd_plan(dtext, f, satisfied, f, &PlannerConfig::default())
        .unwrap()
        .unwrap();
    assert!(p.is_empty());
    assert_eq!(p.dump(), "");

    // only one cabinet can be open at a time
    let contradictory = "(define (problem both) (:domain drawer)
      (:objects hammer1 - hammer cab1 cab2 - cabinet)
      (:init (handempty) (allclosed) (ontable hammer1) (closed cab1) (closed cab2))
      (:goal (and (open cab1) (open cab2))))";
    assert!(
        cmd_plan(dtext, f, contradictory, f, &PlannerConfig::default())
            .unwrap()
            .is_none()
    );

    let err = cmd_plan(
        dtext,
        f,
        "(define (problem p)\n  (:domain drawer)\n  (:goal (or)))",
        Path::new("p.pddl"),
        &PlannerConfig::default(),
    )
    .unwrap_err();
    let msg = err.to_string();
    assert!(msg.starts_with("p.pddl:3:"), "{msg}");
}

#[test]
fn train_writes_artifacts_and_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = cmd_train(&config(DomainId::Peg, vec![0, 1], a.path())).unwrap();
    let rb = cmd_train(&config(DomainId::Peg, vec![0, 1], b.path())).unwrap();
    assert!(ra.all_converged() && rb.all_converged());
    let read = |d: &Path, f: &str| std::fs::read(d.join(f)).unwrap();
    assert_eq!(
        read(a.path(), "train_metrics.csv"),
        read(b.path(), "train_metrics.csv")
    );
    for f in [
        "checkpoints/seed-1/pick.policy",
        "checkpoints/seed-1/insert.replay",
        "logs/train-seed-0.log",
    ] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f}");
    }
    let m = MetricsTable::read(&a.path().join("train_metrics.csv")).unwrap();
    assert_eq!(m, ra.metrics);
    let converged: Vec<f64> = m.select("task", "converged").map(|r| r.value).collect();
    assert_eq!(converged, [1.0, 1.0]);
}

#[test]
fn scripted_skills_report_full_progress() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(DomainId::Drawer, vec![5], dir.path());
    let world = cfg.world(GoalId::Train).unwrap();
    let lib = SkillLibrary::with_factory(
        LearnerParams::default(),
        Sharing::Lifted,
        Box::new(|_, _| Box::new(ScriptedController)),
    );
    let run = train_seed(&cfg, &world, 5, lib).unwrap();
    let m = outcome_metrics("scripted", 5, "task", &run.outcome);
    let progress: Vec<f64> = m.select("task", "mean_progress").map(|r| r.value).collect();
    assert_eq!(progress.len(), cfg.curriculum.convergence_window);
    assert!(progress.iter().all(|p| *p == 1.0));
}

#[test]
fn eval_is_pure_and_covers_every_goal() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(DomainId::Drawer, vec![0], dir.path());
    cfg.eval.episodes = 10;
    cmd_train(&cfg).unwrap();
    let ckpt = dir.path().join("checkpoints");
    let before = checksums(&ckpt).unwrap();
    let r1 = cmd_eval_generalize(&cfg, &ckpt).unwrap();
    assert_eq!(checksums(&ckpt).unwrap(), before);
    assert_eq!(
        r1.progress.keys().copied().collect::<Vec<_>>(),
        [GoalId::Train, GoalId::Test1, GoalId::Test2]
    );
    assert!(r1.progress.values().all(|v| v.len() == 10));
    let first = std::fs::read(dir.path().join("eval_metrics.csv")).unwrap();
    let r2 = cmd_eval_generalize(&cfg, &ckpt).unwrap();
    assert_eq!(r1, r2);
    assert_eq!(
        std::fs::read(dir.path().join("eval_metrics.csv")).unwrap(),
        first
    );
}

#[test]
fn eval_names_the_missing_operator() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(DomainId::Peg, vec![0], dir.path());
    cfg.eval.episodes = 2;
    cmd_train(&cfg).unwrap();
    let seed_dir = dir.path().join("checkpoints/seed-0");
    let (_, policies) = checkpoint::load(&seed_dir).unwrap();
    let only_pick: Vec<_> = policies.into_iter().filter(|(k, _)| k == "pick").collect();
    std::fs::remove_dir_all(&seed_dir).unwrap();
    checkpoint::save(&seed_dir, "peg", only_pick.iter().map(|(k, p)| (k, p))).unwrap();
    let err = cmd_eval_generalize(&cfg, &dir.path().join("checkpoints")).unwrap_err();
    assert!(
        matches!(&err, ExperimentError::MissingCheckpoint { operator, goal: GoalId::Train } if operator == "insert"),
        "{err}"
    );
}

#[test]
fn checksums_detect_modification() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir_all(dir.path().join("a")).unwrap();
    std::fs::write(dir.path().join("a/x"), b"one").unwrap();
    let before = checksums(dir.path()).unwrap();
    std::fs::write(dir.path().join("a/x"), b"two").unwrap();
    assert_ne!(checksums(dir.path()).unwrap(), before);
}

fn remap(ops: &[(&str, &str)]) -> BTreeMap<String, String> {
    ops.iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect()
}

#[test]
fn transfer_checks_signatures() {
    let dir = tempfile::tempdir().unwrap();
    let src = config(DomainId::Drawer, vec![0], &dir.path().join("drawer"));
    cmd_train(&src).unwrap();
    let (_, policies) = checkpoint::load(&src.checkpoint_dir(0)).unwrap();
    let coffee = planskill::env::World::load(DomainId::Coffee, GoalId::Train).unwrap();

    let lib = remap_library(
        policies.clone(),
        &remap(&[("pick", "pick"), ("pull", "pull"), ("push", "push")]),
        &coffee,
        &LearnerParams::default(),
    )
    .unwrap();
    assert_eq!(lib.keys().collect::<Vec<_>>(), ["pick", "pull", "push"]);

    let err = remap_library(
        policies.clone(),
        &remap(&[("pick", "insertholder")]),
        &coffee,
        &LearnerParams::default(),
    )
    .unwrap_err();
    assert!(
        matches!(err, ExperimentError::SignatureMismatch { .. }),
        "{err}"
    );
    let err = remap_library(
        policies,
        &remap(&[("pick", "fly")]),
        &coffee,
        &LearnerParams::default(),
    )
    .unwrap_err();
    assert!(
        matches!(err, ExperimentError::SignatureMismatch { .. }),
        "{err}"
    );
}

#[test]
fn identity_transfer_matches_source_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let mut src = config(DomainId::Peg, vec![0, 1], &dir.path().join("peg"));
    src.eval.episodes = 20;
    src.eval.goals = vec![GoalId::Train];
    cmd_train(&src).unwrap();
    let eval = cmd_eval_generalize(&src, &src.out().join("checkpoints")).unwrap();

    let mut t = src.clone();
    t.experiment.output_dir = dir.path().join("transfer");
    t.transfer = Some(TransferSection {
        source_domain: DomainId::Peg,
        source_checkpoints: src.out().join("checkpoints"),
        remap: remap(&[("pick", "pick"), ("insert", "insert")]),
    });
    let report = cmd_transfer(&t).unwrap();
    for (pair, chunk) in report
        .pairs
        .iter()
        .zip(eval.progress[&GoalId::Train].chunks(20))
    {
        assert_eq!(pair.warm_zero_shot, mean(chunk), "seed {}", pair.seed);
    }
    assert!(t.out().join("transfer_metrics.csv").is_file());
}

#[test]
fn sharing_ablation_pair_is_deterministic() {
    let a = replay_sharing_ablation(0, 20, 10).unwrap();
    assert_eq!(a, replay_sharing_ablation(0, 20, 10).unwrap());
    assert!((0.0..=1.0).contains(&a.shared) && (0.0..=1.0).contains(&a.unshared));
}
