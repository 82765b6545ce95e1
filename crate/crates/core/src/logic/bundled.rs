//! Logic definitions and problem sets shipped with the crate.

use super::{generate_sokoban_logic, parse_logic, parse_problems, LogicDef, LogicError, ProblemSet};

const SOKOBAN: &str = "sokoban-6x6";

const FILES: &[(&str, &str, &str)] = &[
    (
        "fig2-mini",
        include_str!("../../logics/fig2-mini.logic"),
        include_str!("../../problems/fig2-mini.problems"),
    ),
    (
        "int-prop-sequent",
        include_str!("../../logics/int-prop-sequent.logic"),
        include_str!("../../problems/int-prop-sequent.problems"),
    ),
    (
        "cl-prop-sequent",
        include_str!("../../logics/cl-prop-sequent.logic"),
        include_str!("../../problems/cl-prop-sequent.problems"),
    ),
    (
        "modal-k",
        include_str!("../../logics/modal-k.logic"),
        include_str!("../../problems/modal-k.problems"),
    ),
    (
        "modal-t",
        include_str!("../../logics/modal-t.logic"),
        include_str!("../../problems/modal-t.problems"),
    ),
    (
        "modal-s4",
        include_str!("../../logics/modal-s4.logic"),
        include_str!("../../problems/modal-s4.problems"),
    ),
    (
        "modal-s5",
        include_str!("../../logics/modal-s5.logic"),
        include_str!("../../problems/modal-s5.problems"),
    ),
    (
        "linear-prop",
        include_str!("../../logics/linear-prop.logic"),
        include_str!("../../problems/linear-prop.problems"),
    ),
    (
        "fo-tableaux",
        include_str!("../../logics/fo-tableaux.logic"),
        include_str!("../../problems/fo-tableaux.problems"),
    ),
];

const SOKOBAN_PROBLEMS: &str = include_str!("../../problems/sokoban-6x6.problems");

pub fn bundled_logic_names() -> Vec<&'static str> {
    FILES.iter().map(|(n, _, _)| *n).chain([SOKOBAN]).collect()
}

pub fn bundled_logic(name: &str) -> Result<LogicDef, LogicError> {
    if name == SOKOBAN {
        return generate_sokoban_logic(6, 6);
    }
    let (_, text, _) = FILES
        .iter()
        .find(|(n, _, _)| *n == name)
        .ok_or_else(|| LogicError::UnknownLogic(name.to_string()))?;
    parse_logic(text)
}

/// All bundled logics, in listing order.
pub fn bundled_logics() -> Vec<LogicDef> {
    bundled_logic_names()
        .into_iter()
        .map(|n| bundled_logic(n).expect("bundled logic is valid"))
        .collect()
}

pub fn bundled_problems(name: &str) -> Result<ProblemSet, LogicError> {
    let text = if name == SOKOBAN {
        SOKOBAN_PROBLEMS
    } else {
        FILES
            .iter()
            .find(|(n, _, _)| *n == name)
            .map(|(_, _, p)| *p)
            .ok_or_else(|| LogicError::UnknownLogic(name.to_string()))?
    };
    parse_problems(name, text)
}
