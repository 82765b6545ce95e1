//! PUCT tree search with certain value propagation.
//!
//! Every node keeps prover-centric value bounds. Terminal nodes have both
//! bounds equal to their reward; bounds flow upwards by max at prover nodes
//! and min at adversary nodes (the open side only once every legal action
//! has been expanded). A node's value `v` is the subtree-size weighted
//! average of its own estimate and its children's clamped values `v_c`, and
//! `v_c` is `v` clamped into the node's bounds. Subtrees whose value is
//! settled (equal bounds) or that have nothing left to expand are not
//! searched any further.

mod tree;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Gamma;

use crate::eval::{EvalError, Evaluation};
use crate::game::{GameState, Player, Step};

pub use tree::{Node, NodeId, Tree};

/// A game position as seen by the search.
pub trait Position: Clone {
    fn mover(&self) -> Player;
    /// Non-empty for every non-terminal position.
    fn legal_actions(&self) -> Vec<usize>;
    fn action_space(&self) -> usize;
    fn play(&self, action: usize) -> Transition<Self>;
}

pub enum Transition<P> {
    Continue(P),
    /// Prover-centric reward.
    Terminal(f64),
}

/// Source of value and policy estimates for positions.
pub trait Oracle<P> {
    fn evaluate(&self, position: &P) -> Result<Evaluation, EvalError>;
}

impl Position for GameState {
    fn mover(&self) -> Player {
        GameState::mover(self)
    }

    fn legal_actions(&self) -> Vec<usize> {
        GameState::legal_actions(self).to_vec()
    }

    fn action_space(&self) -> usize {
        self.logic().action_space()
    }

    fn play(&self, action: usize) -> Transition<Self> {
        match self.step(action).expect("legal action index") {
            Step::Continue(s) => Transition::Continue(s),
            Step::Over(o) => Transition::Terminal(o.reward()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    /// Nodes added to the tree per decision.
    pub node_budget: usize,
    pub c_puct: f64,
    pub dirichlet_alpha: f64,
    pub noise_fraction: f64,
    /// Sampling temperature in training mode.
    pub temperature: f64,
    /// Number of moves per phase sampled with `temperature`; later moves
    /// take the argmax.
    pub temperature_moves: u32,
    /// No noise, argmax action choice.
    pub test_mode: bool,
    /// Certain value propagation. When off, `v_c = v` and certified losses
    /// are not avoided.
    pub cvp: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            node_budget: 128,
            c_puct: 1.5,
            dirichlet_alpha: 0.3,
            noise_fraction: 0.25,
            temperature: 1.0,
            temperature_moves: 30,
            test_mode: false,
            cvp: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    /// Child subtree sizes over the action space, normalised.
    pub improved_policy: Vec<f64>,
    /// `v_c` of the root.
    pub root_value: f64,
    pub root_bounds: (f64, f64),
    /// Nodes added during this call.
    pub expanded: usize,
    /// Size of the root's subtree after the call.
    pub tree_size: u32,
}

impl SearchResult {
    /// One-line summary for debug output.
    pub fn trace_line(&self) -> String {
        let policy: Vec<String> = self
            .improved_policy
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(a, p)| format!("{a}:{p:.3}"))
            .collect();
        format!(
            "expanded={} nodes={} v_c={:.4} bounds=({}, {}) policy=[{}]",
            self.expanded,
            self.tree_size,
            self.root_value,
            self.root_bounds.0,
            self.root_bounds.1,
            policy.join(" ")
        )
    }
}

impl<P: Position> Tree<P> {
    /// Tree whose root is `position`, evaluated by `oracle`.
    pub fn new_root<O: Oracle<P> + ?Sized>(position: P, oracle: &O, cvp: bool) -> Result<Tree<P>, EvalError> {
        let eval = oracle.evaluate(&position)?;
        Ok(Tree::from_root(Node::inner(position, eval, None), cvp))
    }

    /// Adds up to `cfg.node_budget` nodes below the root. Stops early once
    /// the root value is settled or the tree is exhausted.
    pub fn run_search<O: Oracle<P> + ?Sized>(&mut self, oracle: &O, cfg: &SearchConfig) -> Result<SearchResult, EvalError> {
        let mut expanded = 0;
        while expanded < cfg.node_budget && !self.done(self.root()) {
            let Some((parent, action)) = self.select_leaf(cfg) else {
                break;
            };
            self.expand(parent, action, oracle)?;
            expanded += 1;
        }
        Ok(self.result(expanded))
    }

    /// Improved policy and root statistics without further search.
    pub fn result(&self, expanded: usize) -> SearchResult {
        let root = self.node(self.root());
        SearchResult {
            improved_policy: self.improved_policy(),
            root_value: root.v_c,
            root_bounds: (root.lower, root.upper),
            expanded,
            tree_size: root.size,
        }
    }

    fn done(&self, id: NodeId) -> bool {
        let n = self.node(id);
        n.exhausted || (self.cvp() && n.lower == n.upper)
    }

    /// Certified loss for `mover` choosing child `c`.
    fn certified_loss(&self, mover: Player, c: NodeId) -> bool {
        let n = self.node(c);
        match mover {
            Player::Prover => n.upper == -1.0,
            Player::Adversary => n.lower == 1.0,
        }
    }

    /// Descends from the root by PUCT to the first unexpanded action.
    /// Returns the parent and the action to expand, or `None` when nothing
    /// below the root can be expanded.
    pub fn select_leaf(&self, cfg: &SearchConfig) -> Option<(NodeId, usize)> {
        let mut id = self.root();
        loop {
            let node = self.node(id);
            if node.is_terminal() {
                return None;
            }
            let sign = node.owner.sign();
            let sqrt_n = (node.size as f64).sqrt();
            let open: Vec<usize> = (0..node.legal.len())
                .filter(|&k| node.children[k].is_none_or(|c| !self.done(c)))
                .collect();
            let avoid = cfg.cvp
                && open
                    .iter()
                    .any(|&k| node.children[k].is_none_or(|c| !self.certified_loss(node.owner, c)));
            let mut best: Option<(f64, usize)> = None;
            for &k in &open {
                let child = node.children[k];
                if avoid && child.is_some_and(|c| self.certified_loss(node.owner, c)) {
                    continue;
                }
                let (q, n_child) = match child {
                    Some(c) => (sign * self.node(c).v_c, self.node(c).size as f64),
                    None => (0.0, 0.0),
                };
                let score = q + cfg.c_puct * node.prior[k] * sqrt_n / (1.0 + n_child);
                if best.is_none_or(|(s, _)| score > s) {
                    best = Some((score, k));
                }
            }
            let (_, k) = best?;
            match node.children[k] {
                Some(c) => id = c,
                None => return Some((id, node.legal[k])),
            }
        }
    }

    /// Expands `action` below `parent`, evaluates the new node and
    /// backpropagates. Returns the new node.
    pub fn expand<O: Oracle<P> + ?Sized>(&mut self, parent: NodeId, action: usize, oracle: &O) -> Result<NodeId, EvalError> {
        let position = self.node(parent).position.as_ref().expect("expanding a terminal node");
        let node = match position.play(action) {
            Transition::Terminal(r) => Node::terminal(r, Some((parent, action))),
            Transition::Continue(p) => {
                let eval = oracle.evaluate(&p)?;
                Node::inner(p, eval, Some((parent, action)))
            }
        };
        let id = self.attach(parent, action, node);
        self.backpropagate(parent);
        Ok(id)
    }

    /// Distribution over the action space proportional to child subtree
    /// sizes; the prior restricted to legal actions when nothing has been
    /// expanded.
    pub fn improved_policy(&self) -> Vec<f64> {
        let root = self.node(self.root());
        let mut policy = vec![0.0; root.action_space];
        let total: u32 = root.children.iter().flatten().map(|&c| self.node(c).size).sum();
        for (k, &a) in root.legal.iter().enumerate() {
            policy[a] = match root.children[k] {
                _ if total == 0 => root.prior[k],
                Some(c) => self.node(c).size as f64 / total as f64,
                None => 0.0,
            };
        }
        policy
    }

    /// Picks the action to play. Children certified losing for the mover
    /// are excluded unless every legal action is. With `temperature == 0`
    /// (or in test mode) the most probable action wins, lowest index first;
    /// otherwise actions are sampled from `policy^(1/temperature)`.
    pub fn choose_action<R: Rng + ?Sized>(&self, policy: &[f64], cfg: &SearchConfig, temperature: f64, rng: &mut R) -> usize {
        let root = self.node(self.root());
        let mut candidates: Vec<usize> = (0..root.legal.len())
            .filter(|&k| !cfg.cvp || root.children[k].is_none_or(|c| !self.certified_loss(root.owner, c)))
            .collect();
        if candidates.is_empty() {
            candidates = (0..root.legal.len()).collect();
        }
        let actions: Vec<usize> = candidates.iter().map(|&k| root.legal[k]).collect();
        if cfg.test_mode || temperature <= 0.0 {
            return argmax(&actions, policy);
        }
        let weights: Vec<f64> = actions.iter().map(|&a| policy[a].powf(1.0 / temperature)).collect();
        match WeightedIndex::new(&weights) {
            Ok(dist) => actions[dist.sample(rng)],
            Err(_) => argmax(&actions, policy),
        }
    }

    /// Mixes Dirichlet noise into the root prior:
    /// `(1 - eps) * prior + eps * Dir(alpha)` over the legal actions.
    pub fn add_root_noise<R: Rng + ?Sized>(&mut self, cfg: &SearchConfig, rng: &mut R) {
        let eps = cfg.noise_fraction;
        if cfg.test_mode || eps == 0.0 {
            return;
        }
        let root = self.root();
        let k = self.node(root).legal.len();
        let gamma = Gamma::new(cfg.dirichlet_alpha, 1.0).expect("positive dirichlet alpha");
        let mut noise: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
        let sum: f64 = noise.iter().sum();
        if sum > 0.0 {
            noise.iter_mut().for_each(|x| *x /= sum);
        } else {
            noise = vec![1.0 / k as f64; k];
        }
        let node = self.node_mut(root);
        for (p, n) in node.prior.iter_mut().zip(noise) {
            *p = (1.0 - eps) * *p + eps * n;
        }
    }

    /// Shortest action sequence from the root to a winning terminal through
    /// prover-owned nodes certified winning (`lower == 1`).
    pub fn follow_final_path(&self) -> Option<Vec<usize>> {
        let root = self.root();
        if self.node(root).lower < 1.0 {
            return None;
        }
        let mut queue = std::collections::VecDeque::from([(root, Vec::new())]);
        while let Some((id, path)) = queue.pop_front() {
            let node = self.node(id);
            if node.is_terminal() {
                if node.terminal == Some(1.0) {
                    return Some(path);
                }
                continue;
            }
            if node.owner != Player::Prover {
                continue;
            }
            for (k, child) in node.children.iter().enumerate() {
                if let Some(c) = *child {
                    if self.node(c).lower == 1.0 {
                        let mut p = path.clone();
                        p.push(node.legal[k]);
                        queue.push_back((c, p));
                    }
                }
            }
        }
        None
    }
}

fn argmax(actions: &[usize], policy: &[f64]) -> usize {
    let mut best = actions[0];
    for &a in &actions[1..] {
        if policy[a] > policy[best] || (policy[a] == policy[best] && a < best) {
            best = a;
        }
    }
    best
}
