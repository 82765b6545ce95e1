use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::game::{GameState, Phase, Player};
use crate::term::{Term, Var};

/// Label used for every variable node.
pub const VAR_LABEL: &str = "VAR";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    Symbol,
    Variable,
    RootMarker,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: usize,
    pub label: String,
    pub kind: NodeKind,
}

/// Syntactic graph of a game state.
///
/// Node 0 is a root marker labelled with the mover and has an edge to the
/// root of goal `i` with arg position `i`. Compound subterms are expanded
/// as trees, each distinct variable is a single node shared by all its
/// occurrences. In the construction phase the tracked theorem is encoded
/// as well and `theorem_root` points at it. Edges are
/// `(parent, child, arg position)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<(usize, usize, usize)>,
    pub goal_roots: Vec<usize>,
    pub theorem_root: Option<usize>,
    pub mover: Player,
    #[serde(default)]
    pub action_space: usize,
}

struct Builder {
    graph: StateGraph,
    vars: HashMap<Var, usize>,
}

impl Builder {
    fn push(&mut self, label: String, kind: NodeKind) -> usize {
        let id = self.graph.nodes.len();
        self.graph.nodes.push(GraphNode { id, label, kind });
        id
    }

    fn term(&mut self, t: &Term) -> usize {
        match t {
            Term::Var(v) => {
                if let Some(&id) = self.vars.get(v) {
                    return id;
                }
                let id = self.push(VAR_LABEL.to_string(), NodeKind::Variable);
                self.vars.insert(*v, id);
                id
            }
            Term::App(f, args) => {
                let id = self.push(f.name().to_string(), NodeKind::Symbol);
                for (i, a) in args.iter().enumerate() {
                    let c = self.term(a);
                    self.graph.edges.push((id, c, i));
                }
                id
            }
        }
    }
}

/// Deterministic graph encoding: goals in order, then the theorem.
pub fn encode_graph(state: &GameState) -> StateGraph {
    let mover = state.mover();
    let mut b = Builder {
        graph: StateGraph {
            nodes: Vec::new(),
            edges: Vec::new(),
            goal_roots: Vec::new(),
            theorem_root: None,
            mover,
            action_space: state.logic().action_space(),
        },
        vars: HashMap::new(),
    };
    let marker = b.push(mover.as_str().to_string(), NodeKind::RootMarker);
    for (i, g) in state.goals().iter().enumerate() {
        let r = b.term(g);
        b.graph.goal_roots.push(r);
        b.graph.edges.push((marker, r, i));
    }
    if state.phase() == Phase::Construct {
        let r = b.term(state.theorem());
        b.graph.theorem_root = Some(r);
    }
    b.graph
}

impl StateGraph {
    /// A graph holding only the mover marker.
    pub fn empty_for_tests(action_space: usize) -> StateGraph {
        StateGraph {
            nodes: vec![GraphNode {
                id: 0,
                label: Player::Prover.as_str().into(),
                kind: NodeKind::RootMarker,
            }],
            edges: Vec::new(),
            goal_roots: Vec::new(),
            theorem_root: None,
            mover: Player::Prover,
            action_space,
        }
    }

    /// Children of every node in arg-position order.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        let mut edges = self.edges.clone();
        edges.sort_by_key(|&(p, _, i)| (p, i));
        for (p, c, _) in edges {
            out[p].push(c);
        }
        out
    }
}
