//! Hash-consed Boolean formula DAG with constant folding.

use std::collections::HashMap;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub(crate) fn from_index(i: usize) -> Self {
        NodeId(i as u32)
    }
}

/// Variable roles, in CNF numbering order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarRole {
    PrimaryInput,
    Control,
    Selection,
    AuxD,
    Tseitin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    Const(bool),
    Var(u32),
    Not(NodeId),
    And(NodeId, NodeId),
    Or(NodeId, NodeId),
    Xor(NodeId, NodeId),
    Iff(NodeId, NodeId),
    Ite(NodeId, NodeId, NodeId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarInfo {
    pub name: String,
    pub role: VarRole,
}

/// `Σ lits ≤ k` over formula nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtMost {
    pub lits: Vec<NodeId>,
    pub k: usize,
}

/// Node arena plus the asserted constraints. Operands always precede their
/// parents, so node order is a topological order.
#[derive(Debug, Clone, Default)]
pub struct Formula {
    nodes: Vec<Node>,
    index: HashMap<Node, NodeId>,
    vars: Vec<VarInfo>,
    var_nodes: Vec<NodeId>,
    by_name: HashMap<String, u32>,
    assertions: Vec<NodeId>,
    at_most: Vec<AtMost>,
}

impl Formula {
    pub fn new() -> Self {
        Formula::default()
    }

    fn intern(&mut self, n: Node) -> NodeId {
        if let Some(&id) = self.index.get(&n) {
            return id;
        }
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(n);
        self.index.insert(n, id);
        id
    }

    pub fn node(&self, id: NodeId) -> Node {
        self.nodes[id.index()]
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn vars(&self) -> &[VarInfo] {
        &self.vars
    }

    pub fn var_node(&self, var: u32) -> NodeId {
        self.var_nodes[var as usize]
    }

    pub fn var_by_name(&self, name: &str) -> Option<u32> {
        self.by_name.get(name).copied()
    }

    pub fn assertions(&self) -> &[NodeId] {
        &self.assertions
    }

    pub fn at_most_constraints(&self) -> &[AtMost] {
        &self.at_most
    }

    pub fn constant(&mut self, b: bool) -> NodeId {
        self.intern(Node::Const(b))
    }

    /// Returns the existing variable if `name` is already declared.
    pub fn var(&mut self, name: &str, role: VarRole) -> NodeId {
        if let Some(&v) = self.by_name.get(name) {
            return self.var_nodes[v as usize];
        }
        let v = self.vars.len() as u32;
        self.vars.push(VarInfo { name: name.to_string(), role });
        self.by_name.insert(name.to_string(), v);
        let id = self.intern(Node::Var(v));
        self.var_nodes.push(id);
        id
    }

    fn as_const(&self, a: NodeId) -> Option<bool> {
        match self.node(a) {
            Node::Const(b) => Some(b),
            _ => None,
        }
    }

    fn is_negation(&self, a: NodeId, b: NodeId) -> bool {
        self.node(a) == Node::Not(b) || self.node(b) == Node::Not(a)
    }

    pub fn not(&mut self, a: NodeId) -> NodeId {
        match self.node(a) {
            Node::Const(b) => self.constant(!b),
            Node::Not(x) => x,
            _ => self.intern(Node::Not(a)),
        }
    }

    pub fn and(&mut self, a: NodeId, b: NodeId) -> NodeId {
        match (self.as_const(a), self.as_const(b)) {
            (Some(false), _) | (_, Some(false)) => return self.constant(false),
            (Some(true), _) => return b,
            (_, Some(true)) => return a,
            _ => {}
        }
        if a == b {
            return a;
        }
        if self.is_negation(a, b) {
            return self.constant(false);
        }
        self.intern(Node::And(a.min(b), a.max(b)))
    }

    pub fn or(&mut self, a: NodeId, b: NodeId) -> NodeId {
        match (self.as_const(a), self.as_const(b)) {
            (Some(true), _) | (_, Some(true)) => return self.constant(true),
            (Some(false), _) => return b,
            (_, Some(false)) => return a,
            _ => {}
        }
        if a == b {
            return a;
        }
        if self.is_negation(a, b) {
            return self.constant(true);
        }
        self.intern(Node::Or(a.min(b), a.max(b)))
    }

    pub fn xor(&mut self, a: NodeId, b: NodeId) -> NodeId {
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) => return self.constant(x ^ y),
            (Some(false), _) => return b,
            (_, Some(false)) => return a,
            (Some(true), _) => return self.not(b),
            (_, Some(true)) => return self.not(a),
            _ => {}
        }
        if a == b {
            return self.constant(false);
        }
        if self.is_negation(a, b) {
            return self.constant(true);
        }
        self.intern(Node::Xor(a.min(b), a.max(b)))
    }

    pub fn iff(&mut self, a: NodeId, b: NodeId) -> NodeId {
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) => return self.constant(x == y),
            (Some(true), _) => return b,
            (_, Some(true)) => return a,
            (Some(false), _) => return self.not(b),
            (_, Some(false)) => return self.not(a),
            _ => {}
        }
        if a == b {
            return self.constant(true);
        }
        if self.is_negation(a, b) {
            return self.constant(false);
        }
        self.intern(Node::Iff(a.min(b), a.max(b)))
    }

    pub fn ite(&mut self, c: NodeId, t: NodeId, e: NodeId) -> NodeId {
        match self.as_const(c) {
            Some(true) => return t,
            Some(false) => return e,
            None => {}
        }
        if t == e {
            return t;
        }
        match (self.as_const(t), self.as_const(e)) {
            (Some(true), Some(false)) => return c,
            (Some(false), Some(true)) => return self.not(c),
            (Some(true), _) => return self.or(c, e),
            (Some(false), _) => {
                let nc = self.not(c);
                return self.and(nc, e);
            }
            (_, Some(true)) => {
                let nc = self.not(c);
                return self.or(nc, t);
            }
            (_, Some(false)) => return self.and(c, t),
            _ => {}
        }
        self.intern(Node::Ite(c, t, e))
    }

    /// Balanced conjunction; `true` when empty.
    pub fn and_all(&mut self, xs: &[NodeId]) -> NodeId {
        match xs {
            [] => self.constant(true),
            [x] => *x,
            _ => {
                let (l, r) = xs.split_at(xs.len() / 2);
                let l = self.and_all(l);
                let r = self.and_all(r);
                self.and(l, r)
            }
        }
    }

    /// Balanced disjunction; `false` when empty.
    pub fn or_all(&mut self, xs: &[NodeId]) -> NodeId {
        match xs {
            [] => self.constant(false),
            [x] => *x,
            _ => {
                let (l, r) = xs.split_at(xs.len() / 2);
                let l = self.or_all(l);
                let r = self.or_all(r);
                self.or(l, r)
            }
        }
    }

    pub fn assert(&mut self, n: NodeId) {
        self.assertions.push(n);
    }

    pub fn assert_at_most(&mut self, lits: Vec<NodeId>, k: usize) {
        self.at_most.push(AtMost { lits, k });
    }

    /// Values of every node under a variable assignment (indexed by var).
    pub fn eval_all(&self, assignment: &[bool]) -> Vec<bool> {
        let mut v: Vec<bool> = Vec::with_capacity(self.nodes.len());
        for n in &self.nodes {
            let x = match *n {
                Node::Const(b) => b,
                Node::Var(i) => assignment[i as usize],
                Node::Not(a) => !v[a.index()],
                Node::And(a, b) => v[a.index()] && v[b.index()],
                Node::Or(a, b) => v[a.index()] || v[b.index()],
                Node::Xor(a, b) => v[a.index()] ^ v[b.index()],
                Node::Iff(a, b) => v[a.index()] == v[b.index()],
                Node::Ite(c, t, e) => {
                    if v[c.index()] {
                        v[t.index()]
                    } else {
                        v[e.index()]
                    }
                }
            };
            v.push(x);
        }
        v
    }

    pub fn eval(&self, node: NodeId, assignment: &[bool]) -> bool {
        self.eval_all(assignment)[node.index()]
    }

    /// Whether all assertions and cardinality constraints hold.
    pub fn satisfied(&self, assignment: &[bool]) -> bool {
        let v = self.eval_all(assignment);
        self.assertions.iter().all(|a| v[a.index()])
            && self.at_most.iter().all(|c| c.lits.iter().filter(|l| v[l.index()]).count() <= c.k)
    }
}
