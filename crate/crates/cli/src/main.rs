use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use advlogic::eval::{evaluator_from_spec, Evaluator};
use advlogic::game::{verify_trace, Trace};
use advlogic::harness::{run_eval, run_training, solve_problem, RunConfig};
use advlogic::logic::{bundled_logic, bundled_logic_names, bundled_problems, load_logic, load_problems, LogicDef, ProblemSet};
use advlogic::replay::generate_baseline;
use advlogic::term::parse_term;
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "advlogic", version, about = "Learn to prove in any logic through an adversarial theorem-construction game")]
struct Cli {
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Flags {
    /// Bundled logic name or path to a `.logic` file.
    #[arg(long, global = true)]
    logic: Option<String>,
    /// Problem file; defaults to the logic's bundled set.
    #[arg(long, global = true)]
    problems: Option<PathBuf>,
    /// JSON config file; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Nodes per evaluated problem.
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Nodes per test-time decision.
    #[arg(long, global = true)]
    move_budget: Option<usize>,
    /// Nodes per training decision.
    #[arg(long, global = true)]
    search_budget: Option<usize>,
    /// Games per episode.
    #[arg(long, global = true)]
    games: Option<usize>,
    #[arg(long, global = true)]
    episodes: Option<usize>,
    /// `uniform`, `feature`, `feature:<params>`, `external:<host>:<port>` or
    /// `external:exec:<command>`.
    #[arg(long, global = true)]
    evaluator: Option<String>,
    #[arg(long, global = true)]
    no_cvp: bool,
    #[arg(long, global = true)]
    no_aux: bool,
    #[arg(long, global = true)]
    no_balance: bool,
    #[arg(long, global = true)]
    train_steps: Option<usize>,
    #[arg(long, global = true)]
    batch_size: Option<usize>,
    #[arg(long, global = true)]
    max_moves: Option<u32>,
    #[arg(long, global = true)]
    baseline_playouts: Option<usize>,
    /// Output file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

impl Flags {
    fn to_config(&self) -> RunConfig {
        let off = |flag: bool| flag.then_some(false);
        RunConfig {
            logic: self.logic.clone(),
            problems: self.problems.clone(),
            seed: self.seed,
            workers: self.workers,
            budget: self.budget,
            move_budget: self.move_budget,
            search_budget: self.search_budget,
            games: self.games,
            episodes: self.episodes,
            evaluator: self.evaluator.clone(),
            cvp: off(self.no_cvp),
            aux: off(self.no_aux),
            balance: off(self.no_balance),
            train_steps: self.train_steps,
            batch_size: self.batch_size,
            max_moves: self.max_moves,
            baseline_playouts: self.baseline_playouts,
            out: self.out.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Self-play training with an evaluation after every episode.
    Train,
    /// Train an evaluator on random constructions and evaluate it.
    Baseline,
    /// Run the test-time prover on a problem set.
    Eval,
    /// Prove one conjecture and print its trace.
    Solve {
        /// Ground term, for example `tee(b, implies(b, b))`.
        conjecture: String,
    },
    /// List the bundled logics.
    Logics,
    /// Replay a trace file through the game engine.
    Verify { trace: PathBuf },
}

fn load_logic_arg(name: &str) -> Result<Arc<LogicDef>> {
    let logic = if bundled_logic_names().contains(&name) {
        bundled_logic(name)?
    } else if Path::new(name).exists() {
        load_logic(name)?
    } else {
        bail!("unknown logic `{name}` (see `advlogic logics`)");
    };
    Ok(logic.into_shared())
}

fn load_problem_set(cfg: &RunConfig, logic: &LogicDef) -> Result<ProblemSet> {
    match &cfg.problems {
        Some(p) => Ok(load_problems(p)?),
        None => bundled_problems(&logic.name).with_context(|| format!("no bundled problems for `{}`; pass --problems", logic.name)),
    }
}

fn make_evaluator(cfg: &RunConfig, logic: &LogicDef, default: &str) -> Result<Box<dyn Evaluator>> {
    let spec = cfg.evaluator.as_deref().unwrap_or(default);
    let e = evaluator_from_spec(spec, logic.action_space()).with_context(|| format!("evaluator `{spec}`"))?;
    log::info!("evaluator: {}", e.name());
    Ok(e)
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn save_params(evaluator: &dyn Evaluator, out: Option<&Path>) -> Result<()> {
    if let (Some(out), true) = (out, evaluator.is_trainable()) {
        let path = out.with_extension("params");
        evaluator.save_params(&path)?;
        eprintln!("parameters saved to {}", path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let flags = cli.flags.to_config();
    let cfg = match &cli.flags.config {
        Some(path) => RunConfig::load(path)?.overlay(flags),
        None => flags,
    };
    cfg.validate()?;
    match cli.command {
        Command::Logics => {
            for name in bundled_logic_names() {
                let logic = bundled_logic(name)?;
                let problems = bundled_problems(name).map(|p| p.len()).unwrap_or(0);
                println!("{name}\t{} rules\t{problems} problems", logic.rules.len());
            }
        }
        Command::Solve { conjecture } => {
            let logic = load_logic_arg(cfg.logic_name())?;
            let term = parse_term(&conjecture).context("conjecture")?;
            let evaluator = make_evaluator(&cfg, &logic, "uniform")?;
            let r = solve_problem(logic.clone(), "cli", &term, &*evaluator, &cfg.solve_config());
            if let Some(e) = &r.error {
                bail!("{e}");
            }
            eprintln!("solved={} moves={} nodes={} seconds={:.3}", r.solved, r.moves, r.nodes, r.seconds);
            if let (true, Some(trace)) = (r.solved, &r.trace) {
                write_or_print(cfg.out.as_deref(), &trace.format(&logic))?;
            }
        }
        Command::Eval => {
            let logic = load_logic_arg(cfg.logic_name())?;
            let problems = load_problem_set(&cfg, &logic)?;
            let evaluator = make_evaluator(&cfg, &logic, "uniform")?;
            let report = run_eval(logic, &problems, &*evaluator, &cfg.solve_config(), cfg.workers());
            write_or_print(cfg.out.as_deref(), &report.to_csv())?;
            eprintln!("{}", report.summary_line());
        }
        Command::Baseline => {
            let logic = load_logic_arg(cfg.logic_name())?;
            let problems = load_problem_set(&cfg, &logic)?;
            let mut evaluator = make_evaluator(&cfg, &logic, "feature")?;
            let (data, loss) = generate_baseline(logic.clone(), &cfg.baseline_config(), &mut *evaluator)?;
            eprintln!(
                "baseline: {}/{} playouts constructed a theorem ({:.3}), {} examples, loss {:.4}/{:.4}",
                data.constructed,
                data.playouts,
                data.construction_rate(),
                data.examples.len(),
                loss.policy_loss,
                loss.value_loss
            );
            let report = run_eval(logic, &problems, &*evaluator, &cfg.solve_config(), cfg.workers());
            write_or_print(cfg.out.as_deref(), &report.to_csv())?;
            eprintln!("{}", report.summary_line());
            save_params(&*evaluator, cfg.out.as_deref())?;
        }
        Command::Train => {
            let logic = load_logic_arg(cfg.logic_name())?;
            let problems = load_problem_set(&cfg, &logic)?;
            let mut evaluator = make_evaluator(&cfg, &logic, "feature")?;
            let report = run_training(logic, &problems, &mut *evaluator, &cfg.training_config())?;
            if cfg.out.is_none() {
                print!("{}", report.to_csv());
            }
            for stats in &report.episodes {
                eprintln!("{}", serde_json::to_string(stats)?);
            }
            eprintln!("cumulative unique solved: {}/{}", report.cumulative_unique(), problems.len());
            save_params(&*evaluator, cfg.out.as_deref())?;
        }
        Command::Verify { trace } => {
            let text = std::fs::read_to_string(&trace).with_context(|| format!("reading {}", trace.display()))?;
            let parsed = Trace::parse(&text)?;
            let logic = load_logic_arg(cfg.logic.as_deref().unwrap_or(&parsed.logic))?;
            let outcome = verify_trace(logic, &parsed, cfg.game_config())?;
            match outcome {
                Some(o) => println!("verified: {} won ({})", o.winner.as_str(), o.reason.as_str()),
                None => println!("verified: game unfinished"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
