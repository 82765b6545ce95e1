//! Learning to prove in an arbitrary logic through an adversarial
//! theorem-construction game.
//!
//! A logic is nothing but an ordered list of inference rules over
//! first-order terms. An adversary builds a provable statement by proving a
//! bare variable backwards, the statement is frozen, and a prover then has
//! to prove it. Both sides are driven by a Monte-Carlo tree search that
//! tracks certain value bounds, and the search statistics are fed back into
//! a trainable evaluator.

pub mod eval;
pub mod game;
pub mod harness;
pub mod logic;
pub mod replay;
pub mod search;
pub mod term;
