use crate::eval::Evaluation;
use crate::game::Player;

use super::Position;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodeId(u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Search statistics of one position. All values are prover-centric.
#[derive(Clone, Debug)]
pub struct Node<P> {
    /// `None` for terminal nodes and for hand-built nodes.
    pub position: Option<P>,
    /// Player to move.
    pub owner: Player,
    pub parent: Option<(NodeId, usize)>,
    pub action_space: usize,
    /// Legal actions in increasing order; `prior` and `children` are aligned
    /// with it.
    pub legal: Vec<usize>,
    pub prior: Vec<f64>,
    pub children: Vec<Option<NodeId>>,
    pub v_theta: f64,
    pub v: f64,
    pub v_c: f64,
    pub lower: f64,
    pub upper: f64,
    /// Number of nodes in the subtree, this node included.
    pub size: u32,
    /// Prover-centric reward of a final state.
    pub terminal: Option<f64>,
    /// Terminal, or every legal action expanded into an exhausted child.
    pub exhausted: bool,
}

impl<P> Node<P> {
    pub fn is_terminal(&self) -> bool {
        self.terminal.is_some()
    }

    pub fn terminal(reward: f64, parent: Option<(NodeId, usize)>) -> Node<P> {
        Node {
            position: None,
            owner: Player::Prover,
            parent,
            action_space: 0,
            legal: Vec::new(),
            prior: Vec::new(),
            children: Vec::new(),
            v_theta: reward,
            v: reward,
            v_c: reward,
            lower: reward,
            upper: reward,
            size: 1,
            terminal: Some(reward),
            exhausted: true,
        }
    }

    /// Non-terminal node without a position, for hand-built trees. `prior`
    /// is aligned with `legal` and renormalised.
    pub fn manual(owner: Player, v_theta: f64, legal: Vec<usize>, prior: Vec<f64>, action_space: usize) -> Node<P> {
        assert!(!legal.is_empty(), "non-terminal node without legal actions");
        assert_eq!(legal.len(), prior.len());
        let prior = normalise(prior);
        Node {
            position: None,
            owner,
            parent: None,
            action_space,
            children: vec![None; legal.len()],
            legal,
            prior,
            v_theta,
            v: v_theta,
            v_c: v_theta,
            lower: -1.0,
            upper: 1.0,
            size: 1,
            terminal: None,
            exhausted: false,
        }
    }
}

impl<P: Position> Node<P> {
    /// Fresh leaf for an evaluated position. The policy is restricted to the
    /// legal actions and renormalised (uniform if it has no mass there).
    pub fn inner(position: P, eval: Evaluation, parent: Option<(NodeId, usize)>) -> Node<P> {
        let legal = position.legal_actions();
        let prior = legal.iter().map(|&a| eval.policy.get(a).copied().unwrap_or(0.0)).collect();
        let mut node = Node::manual(position.mover(), eval.value, legal, prior, position.action_space());
        node.position = Some(position);
        node.parent = parent;
        node
    }
}

fn normalise(mut prior: Vec<f64>) -> Vec<f64> {
    let sum: f64 = prior.iter().filter(|p| p.is_finite() && **p > 0.0).sum();
    if sum > 0.0 {
        for p in &mut prior {
            *p = if p.is_finite() && *p > 0.0 { *p / sum } else { 0.0 };
        }
    } else {
        let k = prior.len() as f64;
        prior.iter_mut().for_each(|p| *p = 1.0 / k);
    }
    prior
}

/// Arena-allocated search tree.
#[derive(Clone, Debug)]
pub struct Tree<P> {
    nodes: Vec<Node<P>>,
    root: NodeId,
    cvp: bool,
}

impl<P> Tree<P> {
    pub fn from_root(mut node: Node<P>, cvp: bool) -> Tree<P> {
        node.parent = None;
        Tree {
            nodes: vec![node],
            root: NodeId(0),
            cvp,
        }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn cvp(&self) -> bool {
        self.cvp
    }

    pub fn node(&self, id: NodeId) -> &Node<P> {
        &self.nodes[id.index()]
    }

    pub(super) fn node_mut(&mut self, id: NodeId) -> &mut Node<P> {
        &mut self.nodes[id.index()]
    }

    /// Nodes held in the arena.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn child(&self, id: NodeId, action: usize) -> Option<NodeId> {
        let n = self.node(id);
        let k = n.legal.binary_search(&action).ok()?;
        n.children[k]
    }

    /// Links `node` as the child reached by `action`. Statistics above it
    /// are not refreshed; call `backpropagate` for that.
    pub fn attach(&mut self, parent: NodeId, action: usize, mut node: Node<P>) -> NodeId {
        let id = NodeId(u32::try_from(self.nodes.len()).expect("tree too large"));
        let k = self
            .node(parent)
            .legal
            .binary_search(&action)
            .expect("attaching an illegal action");
        assert!(self.node(parent).children[k].is_none(), "action already expanded");
        node.parent = Some((parent, action));
        self.nodes.push(node);
        self.node_mut(parent).children[k] = Some(id);
        id
    }

    /// Recomputes bounds, `v`, `v_c`, size and exhaustion for `id` and all
    /// its ancestors.
    pub fn backpropagate(&mut self, id: NodeId) {
        let mut cur = Some(id);
        while let Some(id) = cur {
            self.recompute(id);
            cur = self.node(id).parent.map(|(p, _)| p);
        }
    }

    /// Recomputes every node, children before parents.
    pub fn recompute_all(&mut self) {
        let mut order = vec![self.root];
        let mut i = 0;
        while i < order.len() {
            order.extend(self.node(order[i]).children.iter().flatten().copied());
            i += 1;
        }
        for id in order.into_iter().rev() {
            self.recompute(id);
        }
    }

    fn recompute(&mut self, id: NodeId) {
        let node = self.node(id);
        if node.is_terminal() {
            return;
        }
        let children: Vec<&Node<P>> = node.children.iter().flatten().map(|&c| self.node(c)).collect();
        let complete = children.len() == node.legal.len();
        let (lower, upper) = match node.owner {
            Player::Prover => (
                children.iter().map(|c| c.lower).fold(-1.0, f64::max),
                if complete {
                    children.iter().map(|c| c.upper).fold(-1.0, f64::max)
                } else {
                    1.0
                },
            ),
            Player::Adversary => (
                if complete {
                    children.iter().map(|c| c.lower).fold(1.0, f64::min)
                } else {
                    -1.0
                },
                children.iter().map(|c| c.upper).fold(1.0, f64::min),
            ),
        };
        let size = 1 + children.iter().map(|c| c.size).sum::<u32>();
        let mut total = node.v_theta;
        for c in &children {
            total += c.v_c * c.size as f64;
        }
        let v = total / size as f64;
        let v_c = if self.cvp { v.min(upper).max(lower) } else { v };
        let exhausted = complete && children.iter().all(|c| c.exhausted);
        let node = self.node_mut(id);
        node.lower = lower;
        node.upper = upper;
        node.size = size;
        node.v = v;
        node.v_c = v_c;
        node.exhausted = exhausted;
    }
}

impl<P: Clone> Tree<P> {
    /// The subtree below `action` as a new tree, statistics intact. `None`
    /// when the action was never expanded.
    pub fn reuse_subtree(&self, action: usize) -> Option<Tree<P>> {
        let start = self.child(self.root, action)?;
        let mut nodes: Vec<Node<P>> = Vec::new();
        let mut stack = vec![(start, None::<(NodeId, usize)>)];
        while let Some((old, parent)) = stack.pop() {
            let new_id = NodeId(nodes.len() as u32);
            let mut node = self.node(old).clone();
            node.parent = parent;
            if let Some((p, _)) = parent {
                let k = nodes[p.index()].legal.binary_search(&node.parent.unwrap().1).unwrap();
                nodes[p.index()].children[k] = Some(new_id);
            }
            let kids: Vec<(NodeId, usize)> = node
                .children
                .iter()
                .zip(&node.legal)
                .filter_map(|(c, &a)| c.map(|c| (c, a)))
                .collect();
            node.children.iter_mut().for_each(|c| *c = None);
            nodes.push(node);
            for (c, a) in kids.into_iter().rev() {
                stack.push((c, Some((new_id, a))));
            }
        }
        Some(Tree {
            nodes,
            root: NodeId(0),
            cvp: self.cvp,
        })
    }
}
