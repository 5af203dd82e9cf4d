//! Tseitin lowering and DIMACS I/O.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use super::cardinality::{at_most_k, Lit};
use super::formula::{Formula, Node, NodeId, VarRole};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VarMapEntry {
    pub name: String,
    pub role: VarRole,
    pub index: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: u32,
    pub clauses: Vec<Vec<Lit>>,
    /// Formula variables, in numbering order.
    pub var_map: Vec<VarMapEntry>,
    pub tseitin_vars: u32,
    pub cardinality_vars: u32,
    by_name: HashMap<String, u32>,
}

impl Cnf {
    pub fn from_clauses(num_vars: u32, clauses: Vec<Vec<Lit>>) -> Self {
        Cnf { num_vars, clauses, var_map: Vec::new(), tseitin_vars: 0, cardinality_vars: 0, by_name: HashMap::new() }
    }

    pub fn index_of(&self, name: &str) -> Option<u32> {
        self.by_name.get(name).copied()
    }

    /// Value of a named variable in a model (`model[i - 1]` is variable `i`).
    pub fn value(&self, model: &[bool], name: &str) -> Option<bool> {
        self.index_of(name).map(|i| model[i as usize - 1])
    }
}

/// Equisatisfiable CNF. Formula variables come first, ordered by role then
/// declaration; Tseitin definitions follow in node order, then cardinality
/// auxiliaries.
pub fn tseitin_cnf(f: &Formula) -> Cnf {
    let mut order: Vec<u32> = (0..f.vars().len() as u32).collect();
    order.sort_by_key(|&v| (f.vars()[v as usize].role, v));
    let mut var_map = Vec::with_capacity(order.len());
    let mut by_name = HashMap::new();
    let mut var_index = vec![0u32; order.len()];
    for (i, &v) in order.iter().enumerate() {
        let idx = i as u32 + 1;
        var_index[v as usize] = idx;
        let info = &f.vars()[v as usize];
        var_map.push(VarMapEntry { name: info.name.clone(), role: info.role, index: idx });
        by_name.insert(info.name.clone(), idx);
    }
    let mut next = order.len() as u32;

    let n = f.num_nodes();
    let mut reach = vec![false; n];
    for &a in f.assertions() {
        reach[a.index()] = true;
    }
    for c in f.at_most_constraints() {
        for &l in &c.lits {
            reach[l.index()] = true;
        }
    }
    for i in (0..n).rev() {
        if !reach[i] {
            continue;
        }
        let mut mark = |x: NodeId| reach[x.index()] = true;
        match f.node(NodeId::from_index(i)) {
            Node::Const(_) | Node::Var(_) => {}
            Node::Not(a) => mark(a),
            Node::And(a, b) | Node::Or(a, b) | Node::Xor(a, b) | Node::Iff(a, b) => {
                mark(a);
                mark(b);
            }
            Node::Ite(c, t, e) => {
                mark(c);
                mark(t);
                mark(e);
            }
        }
    }

    let mut clauses: Vec<Vec<Lit>> = Vec::new();
    let mut lit = vec![0 as Lit; n];
    let mut true_var: Option<Lit> = None;
    let first_aux = next;
    for i in 0..n {
        if !reach[i] {
            continue;
        }
        let l = |x: NodeId, lit: &Vec<Lit>| lit[x.index()];
        lit[i] = match f.node(NodeId::from_index(i)) {
            Node::Var(v) => var_index[v as usize] as Lit,
            Node::Const(b) => {
                let t = *true_var.get_or_insert_with(|| {
                    next += 1;
                    clauses.push(vec![next as Lit]);
                    next as Lit
                });
                if b { t } else { -t }
            }
            Node::Not(a) => -l(a, &lit),
            node => {
                next += 1;
                let t = next as Lit;
                match node {
                    Node::And(a, b) => {
                        let (a, b) = (l(a, &lit), l(b, &lit));
                        clauses.extend([vec![-t, a], vec![-t, b], vec![t, -a, -b]]);
                    }
                    Node::Or(a, b) => {
                        let (a, b) = (l(a, &lit), l(b, &lit));
                        clauses.extend([vec![t, -a], vec![t, -b], vec![-t, a, b]]);
                    }
                    Node::Xor(a, b) => {
                        let (a, b) = (l(a, &lit), l(b, &lit));
                        clauses.extend([vec![-t, a, b], vec![-t, -a, -b], vec![t, -a, b], vec![t, a, -b]]);
                    }
                    Node::Iff(a, b) => {
                        let (a, b) = (l(a, &lit), l(b, &lit));
                        clauses.extend([vec![t, a, b], vec![t, -a, -b], vec![-t, -a, b], vec![-t, a, -b]]);
                    }
                    Node::Ite(c, x, y) => {
                        let (c, x, y) = (l(c, &lit), l(x, &lit), l(y, &lit));
                        clauses.extend([vec![-t, -c, x], vec![-t, c, y], vec![t, -c, -x], vec![t, c, -y]]);
                    }
                    _ => unreachable!(),
                }
                t
            }
        };
    }
    let tseitin_vars = next - first_aux;

    for &a in f.assertions() {
        match f.node(a) {
            Node::Const(true) => {}
            Node::Const(false) => clauses.push(Vec::new()),
            _ => clauses.push(vec![lit[a.index()]]),
        }
    }
    let card_start = next;
    for c in f.at_most_constraints() {
        let lits: Vec<Lit> = c.lits.iter().map(|x| lit[x.index()]).collect();
        clauses.extend(at_most_k(&lits, c.k, &mut next));
    }
    Cnf {
        num_vars: next,
        clauses,
        var_map,
        tseitin_vars,
        cardinality_vars: next - card_start,
        by_name,
    }
}

#[derive(Serialize)]
struct Sidecar<'a> {
    variables: u32,
    clauses: usize,
    map: &'a [VarMapEntry],
    tseitin_vars: u32,
    cardinality_vars: u32,
}

/// DIMACS text and the JSON variable-map sidecar.
pub fn emit_dimacs(cnf: &Cnf) -> (String, String) {
    let mut text = String::with_capacity(cnf.clauses.len() * 12 + 24);
    let _ = writeln!(text, "p cnf {} {}", cnf.num_vars, cnf.clauses.len());
    for c in &cnf.clauses {
        for l in c {
            let _ = write!(text, "{l} ");
        }
        text.push_str("0\n");
    }
    let sidecar = Sidecar {
        variables: cnf.num_vars,
        clauses: cnf.clauses.len(),
        map: &cnf.var_map,
        tseitin_vars: cnf.tseitin_vars,
        cardinality_vars: cnf.cardinality_vars,
    };
    (text, serde_json::to_string_pretty(&sidecar).expect("sidecar serializes"))
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DimacsError {
    #[error("line {0}: missing or malformed `p cnf` header")]
    Header(usize),
    #[error("line {0}: bad literal `{1}`")]
    Literal(usize, String),
    #[error("literal {0} exceeds declared variable count")]
    OutOfRange(Lit),
}

/// Reads DIMACS CNF; `c` lines are comments, clauses may span lines.
pub fn parse_dimacs(text: &str) -> Result<Cnf, DimacsError> {
    let mut header: Option<u32> = None;
    let mut clauses = Vec::new();
    let mut cur = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
            continue;
        }
        if line.starts_with('p') {
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                ["p", "cnf", v, _] => header = Some(v.parse().map_err(|_| DimacsError::Header(no + 1))?),
                _ => return Err(DimacsError::Header(no + 1)),
            }
            continue;
        }
        let vars = header.ok_or(DimacsError::Header(no + 1))?;
        for tok in line.split_whitespace() {
            let l: Lit = tok.parse().map_err(|_| DimacsError::Literal(no + 1, tok.to_string()))?;
            if l == 0 {
                clauses.push(std::mem::take(&mut cur));
            } else if l.unsigned_abs() > vars {
                return Err(DimacsError::OutOfRange(l));
            } else {
                cur.push(l);
            }
        }
    }
    let vars = header.ok_or(DimacsError::Header(1))?;
    if !cur.is_empty() {
        clauses.push(cur);
    }
    Ok(Cnf::from_clauses(vars, clauses))
}
