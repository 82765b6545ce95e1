//! Reference implementations the library is checked against. None of them
//! call into the code under test except for term construction and the
//! search tree accessors they read.

#![allow(dead_code)]

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::Arc;

use advlogic::eval::{EvalError, Evaluation};
use advlogic::game::Player;
use advlogic::logic::sokoban::Cell;
use advlogic::logic::LogicDef;
use advlogic::search::{NodeId, Oracle, Position, Transition, Tree};
use advlogic::term::{Term, Var};
use rand::Rng;

// ---------------------------------------------------------------- terms

const FUNCTORS: [(&str, usize); 5] = [("f", 2), ("g", 1), ("h", 3), ("a", 0), ("b", 0)];
const VARS: [&str; 4] = ["X", "Y", "Z", "W"];

pub fn random_term<R: Rng>(rng: &mut R, depth: u32) -> Term {
    if depth == 0 || rng.random_bool(0.3) {
        return if rng.random_bool(0.6) {
            Term::var(VARS[rng.random_range(0..VARS.len())])
        } else {
            Term::constant(FUNCTORS[rng.random_range(3..5)].0)
        };
    }
    let (f, n) = FUNCTORS[rng.random_range(0..3)];
    Term::app(f, (0..n).map(|_| random_term(rng, depth - 1)).collect())
}

/// A copy of `t` with some subterms replaced, so that pairs unify often.
pub fn mutate<R: Rng>(rng: &mut R, t: &Term, depth: u32) -> Term {
    if rng.random_bool(0.2) {
        return random_term(rng, depth.min(2));
    }
    match t {
        Term::Var(_) => t.clone(),
        Term::App(f, args) => Term::App(*f, args.iter().map(|a| mutate(rng, a, depth.saturating_sub(1))).collect()),
    }
}

pub type Bindings = HashMap<Var, Term>;

pub fn substitute(t: &Term, s: &Bindings) -> Term {
    match t {
        Term::Var(v) => match s.get(v) {
            Some(x) => substitute(x, s),
            None => t.clone(),
        },
        Term::App(f, args) => Term::App(*f, args.iter().map(|a| substitute(a, s)).collect()),
    }
}

fn occurs(v: Var, t: &Term) -> bool {
    match t {
        Term::Var(w) => *w == v,
        Term::App(_, args) => args.iter().any(|a| occurs(v, a)),
    }
}

/// Equation-set unification (delete, decompose, orient, eliminate). The
/// result is idempotent: no bound variable occurs in any image.
pub fn naive_unify(a: &Term, b: &Term) -> Option<Bindings> {
    let mut eqs = vec![(a.clone(), b.clone())];
    let mut solved: Vec<(Var, Term)> = Vec::new();
    while let Some((l, r)) = eqs.pop() {
        match (&l, &r) {
            _ if l == r => {}
            (Term::App(f, xs), Term::App(g, ys)) => {
                if f != g || xs.len() != ys.len() {
                    return None;
                }
                eqs.extend(xs.iter().cloned().zip(ys.iter().cloned()));
            }
            (Term::App(..), Term::Var(_)) => eqs.push((r, l)),
            (Term::Var(v), _) => {
                if occurs(*v, &r) {
                    return None;
                }
                let one: Bindings = HashMap::from([(*v, r.clone())]);
                for (x, y) in eqs.iter_mut() {
                    *x = substitute(x, &one);
                    *y = substitute(y, &one);
                }
                for (_, t) in solved.iter_mut() {
                    *t = substitute(t, &one);
                }
                solved.push((*v, r.clone()));
            }
        }
    }
    Some(solved.into_iter().collect())
}

pub fn vars_of(ts: &[&Term]) -> HashSet<Var> {
    fn go(t: &Term, out: &mut HashSet<Var>) {
        match t {
            Term::Var(v) => {
                out.insert(*v);
            }
            Term::App(_, args) => args.iter().for_each(|a| go(a, out)),
        }
    }
    let mut out = HashSet::new();
    ts.iter().for_each(|t| go(t, &mut out));
    out
}

/// `general` is at least as general as `specific` on `vars`: applying
/// `specific` after `general` equals applying `specific` alone.
pub fn more_general(general: &dyn Fn(&Term) -> Term, specific: &Bindings, vars: &HashSet<Var>) -> bool {
    vars.iter().all(|v| {
        let x = Term::Var(*v);
        substitute(&general(&x), specific) == substitute(&x, specific)
    })
}

// ------------------------------------------------------- synthetic games

#[derive(Clone, Debug)]
pub enum SynNode {
    Terminal(f64),
    Inner {
        owner: Player,
        children: Vec<usize>,
        v_theta: f64,
        prior: Vec<f64>,
    },
}

/// An explicit game tree; a position is an index into it.
#[derive(Clone, Debug)]
pub struct SynGame {
    pub nodes: Arc<Vec<SynNode>>,
    pub width: usize,
    pub at: usize,
}

impl SynGame {
    /// Random tree of at most `max_nodes` nodes whose leaves are terminal
    /// with reward ±1.
    pub fn random<R: Rng>(rng: &mut R, max_nodes: usize, width: usize, max_depth: u32) -> SynGame {
        let mut nodes = vec![SynNode::Terminal(0.0)];
        let mut queue = VecDeque::from([(0usize, 0u32)]);
        while let Some((id, depth)) = queue.pop_front() {
            let room = max_nodes.saturating_sub(nodes.len() + queue.len());
            let k = if depth >= max_depth || room == 0 || (depth > 0 && rng.random_bool(0.25)) {
                0
            } else {
                rng.random_range(1..=width.min(room))
            };
            if k == 0 {
                nodes[id] = SynNode::Terminal(if rng.random_bool(0.5) { 1.0 } else { -1.0 });
                continue;
            }
            let children: Vec<usize> = (0..k)
                .map(|_| {
                    nodes.push(SynNode::Terminal(0.0));
                    nodes.len() - 1
                })
                .collect();
            for &c in &children {
                queue.push_back((c, depth + 1));
            }
            let owner = if rng.random_bool(0.5) { Player::Prover } else { Player::Adversary };
            let v_theta = rng.random_range(-0.99..0.99);
            let prior = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
            nodes[id] = SynNode::Inner {
                owner,
                children,
                v_theta,
                prior,
            };
        }
        SynGame {
            nodes: Arc::new(nodes),
            width,
            at: 0,
        }
    }

    pub fn minimax(&self, id: usize) -> f64 {
        match &self.nodes[id] {
            SynNode::Terminal(r) => *r,
            SynNode::Inner { owner, children, .. } => {
                let values = children.iter().map(|&c| self.minimax(c));
                match owner {
                    Player::Prover => values.fold(f64::NEG_INFINITY, f64::max),
                    Player::Adversary => values.fold(f64::INFINITY, f64::min),
                }
            }
        }
    }
}

impl Position for SynGame {
    fn mover(&self) -> Player {
        match &self.nodes[self.at] {
            SynNode::Inner { owner, .. } => *owner,
            SynNode::Terminal(_) => Player::Prover,
        }
    }

    fn legal_actions(&self) -> Vec<usize> {
        match &self.nodes[self.at] {
            SynNode::Inner { children, .. } => (0..children.len()).collect(),
            SynNode::Terminal(_) => Vec::new(),
        }
    }

    fn action_space(&self) -> usize {
        self.width
    }

    fn play(&self, action: usize) -> Transition<Self> {
        let SynNode::Inner { children, .. } = &self.nodes[self.at] else {
            panic!("play on a terminal");
        };
        let next = children[action];
        match self.nodes[next] {
            SynNode::Terminal(r) => Transition::Terminal(r),
            SynNode::Inner { .. } => Transition::Continue(SynGame { at: next, ..self.clone() }),
        }
    }
}

/// Returns the value and prior stored in the synthetic tree.
pub struct SynOracle;

impl Oracle<SynGame> for SynOracle {
    fn evaluate(&self, p: &SynGame) -> Result<Evaluation, EvalError> {
        let SynNode::Inner { v_theta, prior, .. } = &p.nodes[p.at] else {
            panic!("evaluating a terminal");
        };
        let mut policy = vec![0.0; p.width];
        policy[..prior.len()].copy_from_slice(prior);
        Ok(Evaluation {
            value: *v_theta,
            policy,
        })
    }
}

/// `(v, v_c, lower, upper, size)` of a node, recomputed from scratch from
/// the expanded tree.
pub fn reference_stats<P>(tree: &Tree<P>, id: NodeId, cvp: bool) -> (f64, f64, f64, f64, u32) {
    let n = tree.node(id);
    if let Some(r) = n.terminal {
        return (r, r, r, r, 1);
    }
    let kids: Vec<(f64, f64, f64, f64, u32)> = n
        .children
        .iter()
        .flatten()
        .map(|&c| reference_stats(tree, c, cvp))
        .collect();
    let all = kids.len() == n.legal.len();
    let (mut lower, mut upper) = (-1.0f64, 1.0f64);
    match n.owner {
        Player::Prover => {
            for k in &kids {
                lower = lower.max(k.2);
            }
            if all {
                upper = kids.iter().map(|k| k.3).fold(-1.0, f64::max);
            }
        }
        Player::Adversary => {
            for k in &kids {
                upper = upper.min(k.3);
            }
            if all {
                lower = kids.iter().map(|k| k.2).fold(1.0, f64::min);
            }
        }
    }
    let size = 1 + kids.iter().map(|k| k.4).sum::<u32>();
    let mut total = n.v_theta;
    for k in &kids {
        total += k.1 * k.4 as f64;
    }
    let v = total / size as f64;
    let v_c = if cvp { lower.max(upper.min(v)) } else { v };
    (v, v_c, lower, upper, size)
}

pub fn expand_all(tree: &mut Tree<SynGame>) {
    let mut stack = vec![tree.root()];
    while let Some(id) = stack.pop() {
        let legal = tree.node(id).legal.clone();
        for a in legal {
            let c = tree.expand(id, a, &SynOracle).unwrap();
            if !tree.node(c).is_terminal() {
                stack.push(c);
            }
        }
    }
}

/// Expands `count` random frontier actions.
pub fn expand_random(tree: &mut Tree<SynGame>, rng: &mut impl Rng, count: usize) {
    for _ in 0..count {
        let frontier: Vec<(NodeId, usize)> = tree_nodes(tree)
            .into_iter()
            .filter(|(id, _)| !tree.node(*id).is_terminal())
            .flat_map(|(id, _)| {
                let n = tree.node(id);
                n.legal
                    .iter()
                    .zip(&n.children)
                    .filter(|(_, c)| c.is_none())
                    .map(move |(&a, _)| (id, a))
                    .collect::<Vec<_>>()
            })
            .collect();
        if frontier.is_empty() {
            return;
        }
        let (id, a) = frontier[rng.random_range(0..frontier.len())];
        tree.expand(id, a, &SynOracle).unwrap();
    }
}

/// Every node of the tree with the synthetic node it stands for.
pub fn tree_nodes(tree: &Tree<SynGame>) -> Vec<(NodeId, Option<usize>)> {
    let mut out = Vec::new();
    let mut stack = vec![tree.root()];
    while let Some(id) = stack.pop() {
        let n = tree.node(id);
        out.push((id, n.position.as_ref().map(|p| p.at)));
        stack.extend(n.children.iter().flatten());
    }
    out
}

// --------------------------------------------------------------- sokoban

/// Breadth-first Sokoban solver over full boards. Unknown cells are walls;
/// any player may move; solved when no box is off a goal.
pub fn sokoban_solvable(board: &[Vec<Option<Cell>>], max_pushes_and_steps: usize) -> Option<usize> {
    type Grid = Vec<Vec<Option<Cell>>>;
    let solved = |g: &Grid| g.iter().flatten().all(|c| *c != Some(Cell::Box));
    let free = |c: Option<Cell>| matches!(c, Some(Cell::Floor) | Some(Cell::Goal));
    let on_goal = |c: Option<Cell>| matches!(c, Some(Cell::Goal) | Some(Cell::BoxOnGoal) | Some(Cell::PlayerOnGoal));
    let h = board.len() as i32;
    let w = board.first().map_or(0, |r| r.len()) as i32;
    let get = |g: &Grid, r: i32, c: i32| {
        if r < 0 || c < 0 || r >= h || c >= w {
            None
        } else {
            g[r as usize][c as usize]
        }
    };
    let start: Grid = board.to_vec();
    let mut seen = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([(start, 0usize)]);
    while let Some((g, d)) = queue.pop_front() {
        if solved(&g) {
            return Some(d);
        }
        if d == max_pushes_and_steps {
            continue;
        }
        for r in 0..h {
            for c in 0..w {
                let here = get(&g, r, c);
                if !matches!(here, Some(Cell::Player) | Some(Cell::PlayerOnGoal)) {
                    continue;
                }
                for (dr, dc) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                    let (r1, c1, r2, c2) = (r + dr, c + dc, r + 2 * dr, c + 2 * dc);
                    let t1 = get(&g, r1, c1);
                    let mut next = g.clone();
                    let leave = if on_goal(here) { Cell::Goal } else { Cell::Floor };
                    let player_at = |x: Option<Cell>| if on_goal(x) { Cell::PlayerOnGoal } else { Cell::Player };
                    if free(t1) {
                        next[r as usize][c as usize] = Some(leave);
                        next[r1 as usize][c1 as usize] = Some(player_at(t1));
                    } else if matches!(t1, Some(Cell::Box) | Some(Cell::BoxOnGoal)) && free(get(&g, r2, c2)) {
                        let t2 = get(&g, r2, c2);
                        next[r as usize][c as usize] = Some(leave);
                        next[r1 as usize][c1 as usize] = Some(player_at(t1));
                        next[r2 as usize][c2 as usize] = Some(if on_goal(t2) { Cell::BoxOnGoal } else { Cell::Box });
                    } else {
                        continue;
                    }
                    if seen.insert(next.clone()) {
                        queue.push_back((next, d + 1));
                    }
                }
            }
        }
    }
    None
}

// ---------------------------------------------------------- sld prover

/// Depth-first backward chaining on the leftmost goal with the naive
/// unifier, iteratively deepened. Returns the shortest rule sequence of at
/// most `max_depth` steps.
pub fn shortest_proof(logic: &LogicDef, goal: &Term, max_depth: usize) -> Option<Vec<usize>> {
    fn rename(t: &Term, tag: usize) -> Term {
        match t {
            Term::Var(v) => Term::var(&format!("{v}__{tag}")),
            Term::App(f, args) => Term::App(*f, args.iter().map(|a| rename(a, tag)).collect()),
        }
    }
    fn dfs(logic: &LogicDef, goals: Vec<Term>, depth: usize, path: &mut Vec<usize>) -> bool {
        let Some(first) = goals.first() else {
            return true;
        };
        if depth == 0 {
            return false;
        }
        for (i, rule) in logic.rules.iter().enumerate() {
            let tag = path.len();
            let head = rename(&rule.head, tag);
            let Some(s) = naive_unify(&head, first) else {
                continue;
            };
            let next: Vec<Term> = rule
                .body
                .iter()
                .map(|b| substitute(&rename(b, tag), &s))
                .chain(goals[1..].iter().map(|g| substitute(g, &s)))
                .collect();
            path.push(i);
            if dfs(logic, next, depth - 1, path) {
                return true;
            }
            path.pop();
        }
        false
    }
    (1..=max_depth).find_map(|d| {
        let mut path = Vec::new();
        dfs(logic, vec![goal.clone()], d, &mut path).then_some(path)
    })
}

// ------------------------------------------------------- worked example

/// Rule indices (0-based) of the worked example: construction, then proof.
pub const WORKED_CONSTRUCTION: [usize; 7] = [1, 2, 3, 0, 5, 4, 0];
pub const WORKED_PROOF: [usize; 4] = [1, 5, 4, 0];

/// Expected `(goals, theorem)` after the start and after every move or
/// handover of the worked example. Upper-case names are variables; `b`,
/// `d` and `e` are the constants the frozen theorem received.
pub const WORKED_ROWS: [(&[&str], &str); 13] = [
    (&["X"], "X"),
    (&["tee(comma(A, B), C)"], "tee(B, implies(A, C))"),
    (&["tee(comma(A, B), D)", "tee(comma(A, B), E)"], "tee(B, implies(A, and(D, E)))"),
    (&["tee(comma(A, B), and(D, F))", "tee(comma(A, B), E)"], "tee(B, implies(A, and(D, E)))"),
    (&["tee(comma(and(D, F), B), E)"], "tee(B, implies(and(D, F), and(D, E)))"),
    (&["tee(comma(and(D, F), B), false)"], "tee(B, implies(and(D, F), and(D, E)))"),
    (&["tee(comma(and(D, F), B), and(G, false))"], "tee(B, implies(and(D, F), and(D, E)))"),
    (&[], "tee(B, implies(and(D, false), and(D, E)))"),
    (&["tee(b, implies(and(d, false), and(d, e)))"], "tee(b, implies(and(d, false), and(d, e)))"),
    (&["tee(comma(and(d, false), b), and(d, e))"], "tee(b, implies(and(d, false), and(d, e)))"),
    (&["tee(comma(and(d, false), b), false)"], "tee(b, implies(and(d, false), and(d, e)))"),
    (&["tee(comma(and(d, false), b), and(A, false))"], "tee(b, implies(and(d, false), and(d, e)))"),
    (&[], "tee(b, implies(and(d, false), and(d, e)))"),
];

/// Replaces the constants selected by `pick` with variables of the same
/// name, so that frozen constants compare up to renaming.
pub fn constants_to_vars(t: &Term, pick: &dyn Fn(&str) -> bool) -> Term {
    match t {
        Term::Var(_) => t.clone(),
        Term::App(f, args) if args.is_empty() && pick(&f.name()) => Term::var(&format!("K_{}", f.name())),
        Term::App(f, args) => Term::App(*f, args.iter().map(|a| constants_to_vars(a, pick)).collect()),
    }
}

/// Checks a trace row against an expected row up to a consistent renaming
/// of variables and frozen constants.
pub fn row_matches(goals: &[Term], theorem: &Term, expected: (&[&str], &str)) -> bool {
    use advlogic::term::{alpha_equivalent, is_fresh_constant_name, parse_term};
    let ours: Vec<Term> = goals
        .iter()
        .chain([theorem])
        .map(|t| constants_to_vars(t, &|n| is_fresh_constant_name(n)))
        .collect();
    let frozen = |n: &str| matches!(n, "b" | "d" | "e");
    let want: Vec<Term> = expected
        .0
        .iter()
        .chain([&expected.1])
        .map(|s| constants_to_vars(&parse_term(s).unwrap(), &frozen))
        .collect();
    alpha_equivalent(&ours, &want)
}

// ------------------------------------------------------- gradient check

/// Graphs of states reached by random legal play.
pub fn random_graphs<R: Rng>(rng: &mut R, logic: &std::sync::Arc<LogicDef>, count: usize) -> Vec<advlogic::eval::StateGraph> {
    use advlogic::eval::encode_graph;
    use advlogic::game::{GameConfig, GameState, Step};
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut state = GameState::initial(logic.clone(), GameConfig::default()).unwrap();
        for _ in 0..rng.random_range(0..12) {
            if state.stuck_outcome().is_some() {
                break;
            }
            let legal = state.legal_actions();
            match state.step(legal[rng.random_range(0..legal.len())]).unwrap() {
                Step::Continue(s) => state = s,
                Step::Over(_) => break,
            }
        }
        out.push(encode_graph(&state));
    }
    out
}

/// Largest relative disagreement between the analytic gradient of a
/// feature model and central finite differences, over `batches` random
/// batches, random parameters and targets. Checks every parameter the
/// analytic gradient touches plus random others, whose derivative must
/// then be zero.
pub fn gradient_check(seed: u64, batches: usize) -> f64 {
    use advlogic::eval::{FeatureModel, Part, TrainExample};
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let logic = advlogic::logic::bundled_logic("int-prop-sequent").unwrap().into_shared();
    let n = logic.action_space();
    let mut worst: f64 = 0.0;
    for _ in 0..batches {
        let mut model = FeatureModel::new(n, 97);
        for i in 0..model.num_params() {
            model.set_param(i, rng.random_range(-0.3..0.3));
        }
        let size = rng.random_range(1..6);
        let examples: Vec<TrainExample> = random_graphs(&mut rng, &logic, size)
            .into_iter()
            .map(|graph| {
                let part = Part::ALL[rng.random_range(0..3)];
                let policy_target = if part == Part::Auxiliary {
                    let mut t = vec![0.0; n];
                    t[rng.random_range(0..n)] = 1.0;
                    t
                } else {
                    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
                    let s: f64 = raw.iter().sum();
                    raw.into_iter().map(|x| x / s).collect()
                };
                TrainExample {
                    graph,
                    policy_target,
                    value_target: rng.random_range(-1.0..1.0),
                    value_weight: if part == Part::Auxiliary { 0.0 } else { rng.random_range(0.0..1.0) },
                    part,
                }
            })
            .collect();
        let (_, grad) = model.loss_and_gradient(&examples).unwrap();
        let analytic: HashMap<usize, f64> = grad.into_iter().collect();
        let mut indices: Vec<usize> = analytic.keys().copied().collect();
        indices.extend((0..20).map(|_| rng.random_range(0..model.num_params())));
        let total = |m: &FeatureModel| {
            let l = m.loss(&examples).unwrap();
            l.policy_loss + l.value_loss
        };
        let h = 1e-5;
        for i in indices {
            let x = model.param(i);
            model.set_param(i, x + h);
            let up = total(&model);
            model.set_param(i, x - h);
            let down = total(&model);
            model.set_param(i, x);
            let numeric = (up - down) / (2.0 * h);
            let g = analytic.get(&i).copied().unwrap_or(0.0);
            let err = (g - numeric).abs() / g.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(err);
        }
    }
    worst
}

// ------------------------------------------------- certified-loss game

/// Complete binary subtree of `depth` levels with alternating owners and
/// leaves alternating between win and loss. Returns its root.
fn binary_subtree(nodes: &mut Vec<SynNode>, owner: Player, depth: u32, leaf: &mut bool) -> usize {
    let id = nodes.len();
    nodes.push(SynNode::Terminal(0.0));
    if depth == 0 {
        *leaf = !*leaf;
        nodes[id] = SynNode::Terminal(if *leaf { 1.0 } else { -1.0 });
        return id;
    }
    let children = (0..2).map(|_| binary_subtree(nodes, owner.opponent(), depth - 1, leaf)).collect();
    nodes[id] = SynNode::Inner {
        owner,
        children,
        v_theta: 0.1,
        prior: vec![0.5, 0.5],
    };
    id
}

/// Prover root whose favoured action 0 leads to an adversary node that
/// looks good (value 0.6, prior 0.9) but whose first reply wins outright
/// for the adversary. Action 1 leads to an undecided binary game.
pub fn trap_game() -> SynGame {
    let mut nodes = vec![SynNode::Terminal(0.0); 4];
    let mut leaf = false;
    let deep_a = binary_subtree(&mut nodes, Player::Prover, 7, &mut leaf);
    let deep_b = binary_subtree(&mut nodes, Player::Prover, 7, &mut leaf);
    let deep_c = binary_subtree(&mut nodes, Player::Prover, 7, &mut leaf);
    nodes[0] = SynNode::Inner {
        owner: Player::Prover,
        children: vec![1, 2],
        v_theta: 0.0,
        prior: vec![0.9, 0.1],
    };
    nodes[1] = SynNode::Inner {
        owner: Player::Adversary,
        children: vec![3, deep_a, deep_b],
        v_theta: 0.6,
        prior: vec![0.8, 0.1, 0.1],
    };
    nodes[3] = SynNode::Terminal(-1.0);
    nodes[2] = SynNode::Inner {
        owner: Player::Adversary,
        children: vec![deep_c],
        v_theta: -0.2,
        prior: vec![1.0],
    };
    SynGame {
        nodes: Arc::new(nodes),
        width: 3,
        at: 0,
    }
}
