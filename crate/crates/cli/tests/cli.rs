use std::path::Path;
use std::process::{Command, Output};

fn planskill() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_planskill"));
    c.env_remove("OUTPUT_DIR");
    c
}

fn run(c: &mut Command) -> (i32, String, String) {
    let Output {
        status,
        stdout,
        stderr,
    } = c.output().unwrap();
    (
        status.code().unwrap(),
        String::from_utf8(stdout).unwrap(),
        String::from_utf8(stderr).unwrap(),
    )
}

#[test]
fn plan_builtin_drawer() {
    let (code, out, _) = run(planskill().args(["plan", "--domain", "drawer", "--goal", "train"]));
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 8);
    assert_eq!(out.lines().next(), Some("(pull cab1)"));
}

#[test]
fn plan_files_solved_unsolvable_and_malformed() {
    let dir = tempfile::tempdir().unwrap();
    let domain = dir.path().join("d.pddl");
    std::fs::write(
        &domain,
        "(define (domain lights)
  (:requirements :strips :typing)
  (:types light)
  (:predicates (on ?l - light) (off ?l - light))
  (:action flip :parameters (?l - light) :precondition (off ?l) :effect (and (on ?l) (not (off ?l)))))",
    )
    .unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    };
    let done = write(
        "done.pddl",
        "(define (problem p) (:domain lights) (:objects a - light) (:init (on a)) (:goal (on a)))",
    );
    let stuck = write(
        "stuck.pddl",
        "(define (problem p) (:domain lights) (:objects a - light) (:init (on a)) (:goal (off a)))",
    );
    let two = write(
        "two.pddl",
        "(define (problem p) (:domain lights) (:objects a b - light) (:init (off a) (off b)) (:goal (and (on a) (on b))))",
    );
    let bad = write(
        "bad.pddl",
        "(define (problem p)\n  (:domain lights)\n  (:goal (or (on a))))",
    );
    let p = |goal: &Path| {
        run(planskill().args([
            "plan",
            "--domain",
            domain.to_str().unwrap(),
            "--goal",
            goal.to_str().unwrap(),
        ]))
    };

    let (code, out, _) = p(&done);
    assert_eq!((code, out.as_str()), (0, ""));
    let (code, out, _) = p(&stuck);
    assert_eq!((code, out.as_str()), (1, "UNSOLVABLE\n"));
    let (code, out, _) = p(&two);
    assert_eq!((code, out.as_str()), (0, "(flip a)\n(flip b)\n"));
    let (code, _, err) = p(&bad);
    assert_eq!(code, 1);
    assert!(err.contains("bad.pddl:3:"), "{err}");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(planskill().args(["frobnicate"])).0, 1);
    assert_eq!(run(planskill().args(["train"])).0, 1);
    assert_eq!(
        run(planskill().args(["train", "--domain", "atlantis"])).0,
        1
    );
    assert_eq!(
        run(planskill().args(["train", "--domain", "peg", "--seeds", "3..3"])).0,
        1
    );
    assert_eq!(run(planskill().args(["--help"])).0, 0);
}

#[test]
fn train_then_eval_and_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let out = |n: &str| dir.path().join(n);
    for n in ["a", "b"] {
        let (code, stdout, err) = run(planskill().args([
            "train",
            "--domain",
            "peg",
            "--seeds",
            "0,1",
            "--out",
            out(n).to_str().unwrap(),
        ]));
        assert_eq!(code, 0, "{stdout}{err}");
        assert!(stdout.contains("seed 1: Converged"));
    }
    let a = std::fs::read(out("a").join("train_metrics.csv")).unwrap();
    assert_eq!(
        a,
        std::fs::read(out("b").join("train_metrics.csv")).unwrap()
    );

    let (code, stdout, _) = run(planskill().args([
        "eval",
        "--domain",
        "peg",
        "--seeds",
        "0..2",
        "--episodes",
        "5",
        "--out",
        out("a").to_str().unwrap(),
    ]));
    assert_eq!(code, 0);
    assert_eq!(stdout.lines().filter(|l| l.contains("progress")).count(), 3);
    assert!(out("a").join("eval_metrics.csv").is_file());

    let (code, _, err) = run(planskill().args([
        "eval",
        "--domain",
        "peg",
        "--out",
        out("nothing").to_str().unwrap(),
    ]));
    assert_eq!(code, 1);
    assert!(err.contains("error"));
}

#[test]
fn config_file_output_dir_override_and_nonconvergence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "[experiment]\nname = \"short\"\ndomain = \"drawer\"\nseeds = [0]\noutput_dir = \"ignored\"\n\n[curriculum]\nmax_outer = 1\n",
    )
    .unwrap();
    let target = dir.path().join("from-env");
    let (code, _, err) = run(planskill()
        .current_dir(dir.path())
        .env("OUTPUT_DIR", &target)
        .args(["train", "--config", cfg.to_str().unwrap()]));
    assert_eq!(code, 2, "{err}");
    assert!(target.join("train_metrics.csv").is_file());
    assert!(target.join("checkpoints/seed-0/manifest.toml").is_file());
    assert!(!dir.path().join("ignored").exists());
}

#[test]
fn transfer_from_flags() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("drawer");
    let (code, _, _) = run(planskill().args([
        "train",
        "--domain",
        "drawer",
        "--out",
        src.to_str().unwrap(),
    ]));
    assert_eq!(code, 0);
    let ckpt = src.join("checkpoints");
    let (code, stdout, err) = run(planskill().args([
        "transfer",
        "--domain",
        "coffee",
        "--source-domain",
        "drawer",
        "--source-checkpoints",
        ckpt.to_str().unwrap(),
        "--remap",
        "pick,pull,push",
        "--out",
        dir.path().join("coffee").to_str().unwrap(),
    ]));
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("median steps to threshold"));

    let (code, _, err) = run(planskill().args([
        "transfer",
        "--domain",
        "coffee",
        "--source-domain",
        "drawer",
        "--source-checkpoints",
        ckpt.to_str().unwrap(),
        "--remap",
        "pick=insertholder",
        "--out",
        dir.path().join("bad").to_str().unwrap(),
    ]));
    assert_eq!(code, 1);
    assert!(
        err.contains("cannot map `pick` onto `insertholder`"),
        "{err}"
    );
}
