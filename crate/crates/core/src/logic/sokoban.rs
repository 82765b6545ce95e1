//! Sokoban as a pseudo-logic.
//!
//! A board is `board(Row1, ..., RowH)` with `row(Cell1, ..., CellW)` and
//! cells drawn from
//!
//! | atom | meaning           | ascii |
//! |------|-------------------|-------|
//! | `w`  | wall              | `#`   |
//! | `e`  | empty floor       | ` `   |
//! | `g`  | empty goal square | `.`   |
//! | `b`  | box on floor      | `$`   |
//! | `bg` | box on goal       | `*`   |
//! | `p`  | player on floor   | `@`   |
//! | `pg` | player on goal    | `+`   |
//!
//! The top goal is `solvable(Board)`. Rule order (and therefore action
//! indices) is:
//!
//! 1. `finish`: a board is solvable when every row passes `row_ok`;
//! 2. `row_ok`, then one `cell_ok_<x>` fact per cell kind other than `b`;
//! 3. `move_up`, `move_down`, `move_left`, `move_right`:
//!    `solvable(B) <- <dir>(B, B2), solvable(B2)`;
//! 4. four `walk(From, To, From2, To2)` cell-rewriting facts and eight
//!    `push(From, Box, To, From2, Box2, To2)` facts;
//! 5. positional rules, per direction (up, down, left, right): every walk
//!    position then every push position, rows outer and columns inner.
//!    A positional rule names the player's cell, e.g. `up_push_4_2`, and
//!    relates the two boards by rewriting only the two or three cells on
//!    the line of movement.
//!
//! Several players may appear on a constructed board; any of them may
//! move. Cells that end up as unknown constants behave like walls.

use super::{InferenceRule, LogicDef, LogicError};
use crate::term::Term;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cell {
    Wall,
    Floor,
    Goal,
    Box,
    BoxOnGoal,
    Player,
    PlayerOnGoal,
}

impl Cell {
    pub const ALL: [Cell; 7] = [
        Cell::Wall,
        Cell::Floor,
        Cell::Goal,
        Cell::Box,
        Cell::BoxOnGoal,
        Cell::Player,
        Cell::PlayerOnGoal,
    ];

    pub fn atom(self) -> &'static str {
        match self {
            Cell::Wall => "w",
            Cell::Floor => "e",
            Cell::Goal => "g",
            Cell::Box => "b",
            Cell::BoxOnGoal => "bg",
            Cell::Player => "p",
            Cell::PlayerOnGoal => "pg",
        }
    }

    pub fn ascii(self) -> char {
        match self {
            Cell::Wall => '#',
            Cell::Floor => ' ',
            Cell::Goal => '.',
            Cell::Box => '$',
            Cell::BoxOnGoal => '*',
            Cell::Player => '@',
            Cell::PlayerOnGoal => '+',
        }
    }

    pub fn from_ascii(c: char) -> Option<Cell> {
        Cell::ALL.into_iter().find(|cell| cell.ascii() == c || (c == '-' && *cell == Cell::Floor))
    }

    pub fn from_atom(name: &str) -> Option<Cell> {
        Cell::ALL.into_iter().find(|cell| cell.atom() == name)
    }
}

/// Builds a board term from ascii rows (`#`, ` ` or `-`, `.`, `$`, `*`, `@`, `+`).
pub fn board_from_ascii(rows: &[&str]) -> Option<Term> {
    let rows: Option<Vec<Term>> = rows
        .iter()
        .map(|r| {
            let cells: Option<Vec<Term>> = r.chars().map(|c| Cell::from_ascii(c).map(|x| Term::constant(x.atom()))).collect();
            cells.map(|c| Term::app("row", c))
        })
        .collect();
    Some(Term::app("board", rows?))
}

/// Decodes a ground board term. Cells that are not one of the seven known
/// atoms come back as `None`.
pub fn decode_board(board: &Term) -> Option<Vec<Vec<Option<Cell>>>> {
    let (f, _) = board.functor()?;
    if &*f.name() != "board" {
        return None;
    }
    board
        .args()
        .iter()
        .map(|row| {
            let (f, _) = row.functor()?;
            if &*f.name() != "row" {
                return None;
            }
            Some(
                row.args()
                    .iter()
                    .map(|c| match c.functor() {
                        Some((s, 0)) => Cell::from_atom(&s.name()),
                        _ => None,
                    })
                    .collect(),
            )
        })
        .collect()
}

#[derive(Clone, Copy)]
enum Dir {
    Up,
    Down,
    Left,
    Right,
}

impl Dir {
    fn name(self) -> &'static str {
        match self {
            Dir::Up => "up",
            Dir::Down => "down",
            Dir::Left => "left",
            Dir::Right => "right",
        }
    }

    fn delta(self) -> (isize, isize) {
        match self {
            Dir::Up => (-1, 0),
            Dir::Down => (1, 0),
            Dir::Left => (0, -1),
            Dir::Right => (0, 1),
        }
    }
}

struct Grid {
    width: usize,
    height: usize,
}

impl Grid {
    fn cell_var(prefix: &str, r: usize, c: usize) -> Term {
        Term::var(&format!("{prefix}{}_{}", r + 1, c + 1))
    }

    /// Board term in which rows listed in `open_rows` are spelled out cell by
    /// cell and `changed` cells use the primed prefix.
    fn board(&self, open_rows: &[usize], changed: &[(usize, usize)], primed: bool) -> Term {
        let rows = (0..self.height)
            .map(|r| {
                if !open_rows.contains(&r) {
                    return Term::var(&format!("R{}", r + 1));
                }
                let cells = (0..self.width)
                    .map(|c| {
                        let prefix = if primed && changed.contains(&(r, c)) { "D" } else { "C" };
                        Grid::cell_var(prefix, r, c)
                    })
                    .collect();
                Term::app("row", cells)
            })
            .collect();
        Term::app("board", rows)
    }

    fn positional_rule(&self, dir: Dir, line: &[(usize, usize)]) -> InferenceRule {
        let kind = if line.len() == 2 { "walk" } else { "push" };
        let (pr, pc) = line[0];
        let name = format!("{}_{kind}_{}_{}", dir.name(), pr + 1, pc + 1);
        let mut open_rows: Vec<usize> = line.iter().map(|(r, _)| *r).collect();
        open_rows.dedup();
        let before = self.board(&open_rows, line, false);
        let after = self.board(&open_rows, line, true);
        let mut args: Vec<Term> = line.iter().map(|&(r, c)| Grid::cell_var("C", r, c)).collect();
        args.extend(line.iter().map(|&(r, c)| Grid::cell_var("D", r, c)));
        InferenceRule::new(name, Term::app(dir.name(), vec![before, after]), vec![Term::app(kind, args)])
    }

    /// Cells along the line of movement starting at the player, if in bounds.
    fn line(&self, start: (usize, usize), dir: Dir, len: usize) -> Option<Vec<(usize, usize)>> {
        let (dr, dc) = dir.delta();
        (0..len as isize)
            .map(|k| {
                let r = start.0 as isize + dr * k;
                let c = start.1 as isize + dc * k;
                (r >= 0 && c >= 0 && (r as usize) < self.height && (c as usize) < self.width).then(|| (r as usize, c as usize))
            })
            .collect()
    }
}

fn fact(name: &str, pred: &str, atoms: &[&str]) -> InferenceRule {
    InferenceRule::new(name, Term::app(pred, atoms.iter().map(|a| Term::constant(a)).collect()), vec![])
}

/// Horn-clause encoding of `width` x `height` Sokoban.
pub fn generate_sokoban_logic(width: usize, height: usize) -> Result<LogicDef, LogicError> {
    let grid = Grid { width, height };
    let mut rules = Vec::new();

    let row_vars: Vec<Term> = (0..height).map(|r| Term::var(&format!("R{}", r + 1))).collect();
    rules.push(InferenceRule::new(
        "finish",
        Term::app("solvable", vec![Term::app("board", row_vars.clone())]),
        row_vars.iter().map(|r| Term::app("row_ok", vec![r.clone()])).collect(),
    ));
    let cell_vars: Vec<Term> = (0..width).map(|c| Term::var(&format!("C{}", c + 1))).collect();
    rules.push(InferenceRule::new(
        "row_ok",
        Term::app("row_ok", vec![Term::app("row", cell_vars.clone())]),
        cell_vars.iter().map(|c| Term::app("cell_ok", vec![c.clone()])).collect(),
    ));
    for cell in Cell::ALL.into_iter().filter(|c| *c != Cell::Box) {
        rules.push(fact(&format!("cell_ok_{}", cell.atom()), "cell_ok", &[cell.atom()]));
    }

    let dirs = [Dir::Up, Dir::Down, Dir::Left, Dir::Right];
    for dir in dirs {
        rules.push(InferenceRule::new(
            format!("move_{}", dir.name()),
            Term::app("solvable", vec![Term::var("B")]),
            vec![
                Term::app(dir.name(), vec![Term::var("B"), Term::var("B2")]),
                Term::app("solvable", vec![Term::var("B2")]),
            ],
        ));
    }

    for (from, from2) in [("p", "e"), ("pg", "g")] {
        for (to, to2) in [("e", "p"), ("g", "pg")] {
            rules.push(fact(&format!("walk_{from}_{to}"), "walk", &[from, to, from2, to2]));
        }
    }
    for (from, from2) in [("p", "e"), ("pg", "g")] {
        for (bx, bx2) in [("b", "p"), ("bg", "pg")] {
            for (to, to2) in [("e", "b"), ("g", "bg")] {
                rules.push(fact(&format!("push_{from}_{bx}_{to}"), "push", &[from, bx, to, from2, bx2, to2]));
            }
        }
    }

    for dir in dirs {
        for len in [2, 3] {
            for r in 0..height {
                for c in 0..width {
                    if let Some(line) = grid.line((r, c), dir, len) {
                        rules.push(grid.positional_rule(dir, &line));
                    }
                }
            }
        }
    }

    LogicDef::new(
        format!("sokoban-{width}x{height}"),
        rules,
        true,
        Term::app("solvable", vec![Term::var("B")]),
    )
}
