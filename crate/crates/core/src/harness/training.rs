use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use super::{io_error, render_curve_svg, run_eval, HarnessError, SolveConfig};
use crate::eval::Evaluator;
use crate::logic::{LogicDef, ProblemSet};
use crate::replay::{run_episode, EpisodeConfig, EpisodeStats, ReplayBuffer};

pub const CURVE_CSV_HEADER: &str = "episode,solved,cumulative_unique,adv_wins,prover_wins,aux_replays";

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingConfig {
    pub episodes: usize,
    pub episode: EpisodeConfig,
    pub solve: SolveConfig,
    /// Equal-count batches and proportional value weights.
    pub balance: bool,
    /// Curve CSV; an SVG chart is written next to it.
    pub curve_path: Option<PathBuf>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            episodes: 5,
            episode: EpisodeConfig::default(),
            solve: SolveConfig::default(),
            balance: true,
            curve_path: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CurveRow {
    pub episode: usize,
    pub solved: usize,
    pub cumulative_unique: usize,
    pub adv_wins: usize,
    pub prover_wins: usize,
    pub aux_replays: usize,
}

impl CurveRow {
    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.episode, self.solved, self.cumulative_unique, self.adv_wins, self.prover_wins, self.aux_replays
        )
    }
}

#[derive(Clone, Debug, Default)]
pub struct TrainingReport {
    pub curve: Vec<CurveRow>,
    pub episodes: Vec<EpisodeStats>,
    /// Ids solved in at least one evaluation.
    pub solved_ids: BTreeSet<String>,
}

impl TrainingReport {
    pub fn cumulative_unique(&self) -> usize {
        self.solved_ids.len()
    }

    /// Training ended below `reference` solved problems.
    pub fn stagnated_against(&self, reference: usize) -> bool {
        self.cumulative_unique() < reference
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{CURVE_CSV_HEADER}\n");
        for row in &self.curve {
            out.push_str(&row.csv());
            out.push('\n');
        }
        out
    }
}

/// Alternates self-play episodes and evaluations on `problems`, one curve
/// row per episode. The curve file is flushed after every row.
pub fn run_training(
    logic: Arc<LogicDef>,
    problems: &ProblemSet,
    evaluator: &mut dyn Evaluator,
    cfg: &TrainingConfig,
) -> Result<TrainingReport, HarnessError> {
    let mut report = TrainingReport::default();
    let mut buffer = ReplayBuffer::new(cfg.episode.seed, cfg.balance);
    let mut curve_file = match &cfg.curve_path {
        Some(p) => {
            let mut f = BufWriter::new(File::create(p).map_err(io_error(p))?);
            writeln!(f, "{CURVE_CSV_HEADER}").map_err(io_error(p))?;
            f.flush().map_err(io_error(p))?;
            Some((p.as_path(), f))
        }
        None => None,
    };
    for episode in 0..cfg.episodes {
        let mut stats = run_episode(logic.clone(), evaluator, &mut buffer, &cfg.episode, episode as u64)?;
        let eval = run_eval(logic.clone(), problems, &*evaluator, &cfg.solve, cfg.episode.workers);
        stats.test_solved = Some(eval.solved());
        report.solved_ids.extend(eval.solved_ids().map(str::to_string));
        let row = CurveRow {
            episode: episode + 1,
            solved: eval.solved(),
            cumulative_unique: report.cumulative_unique(),
            adv_wins: stats.adversary_wins,
            prover_wins: stats.prover_wins,
            aux_replays: stats.aux_replays,
        };
        log::info!("episode {}: {}, cumulative unique {}", row.episode, eval.summary_line(), row.cumulative_unique);
        if let Some((path, f)) = &mut curve_file {
            writeln!(f, "{}", row.csv()).map_err(io_error(path))?;
            f.flush().map_err(io_error(path))?;
        }
        report.curve.push(row);
        report.episodes.push(stats);
    }
    if let Some(p) = &cfg.curve_path {
        let svg = svg_path(p);
        std::fs::write(&svg, render_curve_svg(&report.curve)).map_err(io_error(&svg))?;
    }
    Ok(report)
}

fn svg_path(csv: &Path) -> PathBuf {
    csv.with_extension("svg")
}
