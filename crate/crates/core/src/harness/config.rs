use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{io_error, HarnessError, SolveConfig, TrainingConfig};
use crate::game::GameConfig;
use crate::replay::{BaselineConfig, EpisodeConfig};
use crate::search::SearchConfig;

/// Run settings shared by the config file and the command line. Every key
/// is optional; unset keys take the defaults below.
///
/// | key | default |
/// |---|---|
/// | `logic` | `fig2-mini` |
/// | `problems` | the logic's bundled set |
/// | `seed` | 0 |
/// | `workers` | 1 |
/// | `budget` | 10000 nodes per evaluated problem |
/// | `move_budget` | whole remaining budget |
/// | `search_budget` | 128 nodes per training decision |
/// | `games` | 200 per episode |
/// | `episodes` | 5 |
/// | `evaluator` | `feature` for training, `uniform` otherwise |
/// | `cvp`, `aux`, `balance` | true |
/// | `train_steps` | 64 per episode |
/// | `batch_size` | 48 |
/// | `max_moves` | 64 per phase |
/// | `baseline_playouts` | 2000 |
/// | `out` | none |
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub logic: Option<String>,
    pub problems: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub budget: Option<usize>,
    pub move_budget: Option<usize>,
    pub search_budget: Option<usize>,
    pub games: Option<usize>,
    pub episodes: Option<usize>,
    pub evaluator: Option<String>,
    pub cvp: Option<bool>,
    pub aux: Option<bool>,
    pub balance: Option<bool>,
    pub train_steps: Option<usize>,
    pub batch_size: Option<usize>,
    pub max_moves: Option<u32>,
    pub baseline_playouts: Option<usize>,
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),*) => {
        RunConfig { $($field: $top.$field.or($base.$field),)* }
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(io_error(path))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }

    /// Keys set in `top` win.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        overlay!(
            self,
            top,
            logic,
            problems,
            seed,
            workers,
            budget,
            move_budget,
            search_budget,
            games,
            episodes,
            evaluator,
            cvp,
            aux,
            balance,
            train_steps,
            batch_size,
            max_moves,
            baseline_playouts,
            out
        )
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let positive = [
            ("budget", self.budget),
            ("move_budget", self.move_budget),
            ("search_budget", self.search_budget),
            ("workers", self.workers),
            ("batch_size", self.batch_size),
        ];
        for (key, value) in positive {
            if value == Some(0) {
                return Err(HarnessError::Config(format!("`{key}` must be at least 1")));
            }
        }
        if self.max_moves == Some(0) {
            return Err(HarnessError::Config("`max_moves` must be at least 1".into()));
        }
        Ok(())
    }

    pub fn logic_name(&self) -> &str {
        self.logic.as_deref().unwrap_or("fig2-mini")
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or(1)
    }

    pub fn game_config(&self) -> GameConfig {
        GameConfig {
            max_moves_per_phase: self.max_moves.unwrap_or(64),
            ..GameConfig::default()
        }
    }

    fn search_config(&self) -> SearchConfig {
        SearchConfig {
            node_budget: self.search_budget.unwrap_or(128),
            cvp: self.cvp.unwrap_or(true),
            ..SearchConfig::default()
        }
    }

    pub fn solve_config(&self) -> SolveConfig {
        SolveConfig {
            node_budget: self.budget.unwrap_or(10_000),
            move_budget: self.move_budget,
            search: SearchConfig {
                test_mode: true,
                ..self.search_config()
            },
            game: self.game_config(),
        }
    }

    pub fn episode_config(&self) -> EpisodeConfig {
        let d = EpisodeConfig::default();
        EpisodeConfig {
            games: self.games.unwrap_or(d.games),
            search: self.search_config(),
            game: self.game_config(),
            train_steps: self.train_steps.unwrap_or(d.train_steps),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            auxiliary: self.aux.unwrap_or(true),
            workers: self.workers(),
            seed: self.seed(),
            ..d
        }
    }

    pub fn training_config(&self) -> TrainingConfig {
        TrainingConfig {
            episodes: self.episodes.unwrap_or(5),
            episode: self.episode_config(),
            solve: self.solve_config(),
            balance: self.balance.unwrap_or(true),
            curve_path: self.out.clone(),
        }
    }

    pub fn baseline_config(&self) -> BaselineConfig {
        let d = BaselineConfig::default();
        BaselineConfig {
            playouts: self.baseline_playouts.unwrap_or(d.playouts),
            game: self.game_config(),
            seed: self.seed(),
            train_steps: self.train_steps.unwrap_or(d.train_steps),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
        }
    }
}
