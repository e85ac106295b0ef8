use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use planskill::corpus::{self, DomainId, GoalId};
use planskill::experiment::{
    cmd_eval_generalize, cmd_plan, cmd_train, cmd_transfer, ExperimentConfig, ExperimentError,
    TransferSection,
};
use planskill::planner::{Heuristic, PlannerConfig};

#[derive(Parser)]
#[command(
    name = "planskill",
    version,
    about = "Symbolic planning with learned skills"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a plan for a domain and goal, or UNSOLVABLE.
    Plan {
        /// Built-in domain name or a PDDL domain file.
        #[arg(long)]
        domain: String,
        /// Built-in goal name (train, test1, test2) or a PDDL problem file.
        #[arg(long, default_value = "train")]
        goal: String,
        #[arg(long, default_value = "zero")]
        heuristic: Heuristic,
    },
    /// Train skills with the planner-driven curriculum.
    Train(Common),
    /// Zero-shot evaluation of trained checkpoints on every goal.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Checkpoint root holding seed-<n> directories [default: <out>/checkpoints].
        #[arg(long)]
        checkpoints: Option<PathBuf>,
        /// Episodes per seed and goal.
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Warm-start a target domain from source checkpoints and compare with
    /// training from scratch.
    Transfer {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        source_domain: Option<DomainId>,
        /// Checkpoint root of the source run.
        #[arg(long)]
        source_checkpoints: Option<PathBuf>,
        /// Comma-separated `source=target` operator pairs; a bare name maps
        /// to itself.
        #[arg(long)]
        remap: Option<String>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    domain: Option<DomainId>,
    #[arg(long)]
    goal: Option<GoalId>,
    /// `0,1,2` or a half-open range `0..10`.
    #[arg(long, value_parser = parse_seeds)]
    seeds: Option<Seeds>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone)]
struct Seeds(Vec<u64>);

fn parse_seeds(s: &str) -> Result<Seeds, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a
            .trim()
            .parse()
            .map_err(|_| format!("bad seed range `{s}`"))?;
        let b: u64 = b
            .trim()
            .parse()
            .map_err(|_| format!("bad seed range `{s}`"))?;
        if a >= b {
            return Err(format!("empty seed range `{s}`"));
        }
        return Ok(Seeds((a..b).collect()));
    }
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| format!("bad seed `{t}`")))
        .collect::<Result<Vec<_>, _>>()
        .map(Seeds)
}

fn parse_remap(s: &str) -> Result<BTreeMap<String, String>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| match t.split_once('=') {
            Some((a, b)) if !a.is_empty() && !b.is_empty() => Ok((a.to_string(), b.to_string())),
            Some(_) => Err(format!("bad remap entry `{t}`")),
            None => Ok((t.to_string(), t.to_string())),
        })
        .collect()
}

enum Failure {
    Usage(String),
    Run(ExperimentError),
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        Failure::Run(e)
    }
}

fn config(c: &Common, name: &str) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &c.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            ExperimentConfig::parse(&text, p)?
        }
        None => {
            let d = c
                .domain
                .ok_or_else(|| Failure::Usage("either --config or --domain is required".into()))?;
            ExperimentConfig::for_domain(&format!("{name}-{d}"), d, vec![0])
        }
    };
    if let Some(d) = c.domain {
        cfg.experiment.domain = d;
    }
    if let Some(g) = c.goal {
        cfg.experiment.goal = g;
    }
    if let Some(s) = &c.seeds {
        cfg.experiment.seeds = s.0.clone();
    }
    cfg.apply_env();
    if let Some(o) = &c.out {
        cfg.experiment.output_dir = o.clone();
    }
    Ok(cfg)
}

fn validate(cfg: &ExperimentConfig, c: &Common) -> Result<(), Failure> {
    let path = c.config.clone().unwrap_or_else(|| PathBuf::from("<flags>"));
    cfg.validate(&path)
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn read_or_builtin(
    value: &str,
    builtin: impl FnOnce() -> Option<String>,
) -> Result<(String, PathBuf), Failure> {
    let p = Path::new(value);
    if p.is_file() {
        let text =
            std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{value}: {e}")))?;
        return Ok((text, p.to_path_buf()));
    }
    builtin()
        .map(|t| (t, PathBuf::from(value)))
        .ok_or_else(|| Failure::Usage(format!("`{value}` is neither a file nor a built-in name")))
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    match cli.command {
        Command::Plan {
            domain,
            goal,
            heuristic,
        } => {
            let id: Option<DomainId> = domain.parse().ok();
            let (dtext, dpath) =
                read_or_builtin(&domain, || id.map(|d| corpus::domain_text(d).to_string()))?;
            let (ptext, ppath) = read_or_builtin(&goal, || {
                let g: GoalId = goal.parse().ok()?;
                corpus::problem_text(id?, g).map(str::to_string)
            })?;
            let cfg = PlannerConfig {
                heuristic,
                ..PlannerConfig::default()
            };
            match cmd_plan(&dtext, &dpath, &ptext, &ppath, &cfg)? {
                Some(p) => {
                    print!("{}", p.dump());
                    Ok(ExitCode::SUCCESS)
                }
                None => {
                    println!("UNSOLVABLE");
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::Train(c) => {
            let cfg = config(&c, "train")?;
            validate(&cfg, &c)?;
            let report = cmd_train(&cfg)?;
            for r in &report.runs {
                let o = &r.outcome;
                println!(
                    "seed {}: {:?} after {} iterations, {} env steps, threshold {}",
                    r.seed,
                    o.stop,
                    o.iterations.len(),
                    o.env_steps,
                    o.threshold_steps.map_or("-".to_string(), |s| s.to_string())
                );
            }
            println!("metrics: {}", cfg.out().join("train_metrics.csv").display());
            Ok(if report.all_converged() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::Eval {
            common,
            checkpoints,
            episodes,
        } => {
            let mut cfg = config(&common, "eval")?;
            if let Some(m) = episodes {
                cfg.eval.episodes = m;
            }
            validate(&cfg, &common)?;
            let dir = checkpoints.unwrap_or_else(|| cfg.out().join("checkpoints"));
            let report = cmd_eval_generalize(&cfg, &dir)?;
            for g in report.progress.keys() {
                println!(
                    "{g}: progress {:.3} ± {:.3}",
                    report.mean(*g),
                    report.std(*g)
                );
            }
            println!("metrics: {}", cfg.out().join("eval_metrics.csv").display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Transfer {
            common,
            source_domain,
            source_checkpoints,
            remap,
        } => {
            let mut cfg = config(&common, "transfer")?;
            let remap = remap
                .map(|r| parse_remap(&r))
                .transpose()
                .map_err(Failure::Usage)?;
            match (&mut cfg.transfer, source_checkpoints) {
                (Some(t), dir) => {
                    if let Some(d) = dir {
                        t.source_checkpoints = d;
                    }
                    if let Some(d) = source_domain {
                        t.source_domain = d;
                    }
                    if let Some(r) = remap {
                        t.remap = r;
                    }
                }
                (None, Some(dir)) => {
                    cfg.transfer = Some(TransferSection {
                        source_domain: source_domain
                            .ok_or_else(|| Failure::Usage("--source-domain is required".into()))?,
                        source_checkpoints: dir,
                        remap: remap.ok_or_else(|| Failure::Usage("--remap is required".into()))?,
                    })
                }
                (None, None) => {
                    return Err(Failure::Usage(
                        "transfer needs a [transfer] config section or --source-checkpoints".into(),
                    ))
                }
            }
            validate(&cfg, &common)?;
            let report = cmd_transfer(&cfg)?;
            for p in &report.pairs {
                let show = |s: Option<u64>| s.map_or("-".to_string(), |s| s.to_string());
                println!(
                    "seed {}: cold {} warm {} (warm zero-shot progress {:.3})",
                    p.seed,
                    show(p.cold.threshold_steps),
                    show(p.warm.threshold_steps),
                    p.warm_zero_shot
                );
            }
            println!(
                "median steps to threshold: cold {} warm {}",
                report.cold_median(),
                report.warm_median()
            );
            println!(
                "metrics: {}",
                cfg.out().join("transfer_metrics.csv").display()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
