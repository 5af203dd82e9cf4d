//! SAT backends: a builtin conflict-driven solver and external DIMACS
//! solvers spoken to over the usual exit-code convention.

use std::io::Write;
use std::process::Command;

use thiserror::Error;

use super::cardinality::Lit;
use super::cnf::{emit_dimacs, Cnf};
use crate::netlist_io::SolverBackend;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    /// `model[i - 1]` is the value of variable `i`.
    Sat(Vec<bool>),
    Unsat,
    Unknown(String),
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("could not run solver `{0}`: {1}")]
    BackendSpawnFailure(String, String),
    #[error("bad solver model: {0}")]
    ModelParseError(String),
}

pub fn solve_cnf(cnf: &Cnf, backend: &SolverBackend) -> Result<SatResult, SolverError> {
    match backend {
        SolverBackend::Builtin => Ok(Solver::new(cnf.num_vars as usize, &cnf.clauses).solve()),
        SolverBackend::External(argv) => solve_external(cnf, argv),
    }
}

pub fn model_satisfies(clauses: &[Vec<Lit>], model: &[bool]) -> bool {
    clauses.iter().all(|c| c.iter().any(|&l| model[l.unsigned_abs() as usize - 1] == (l > 0)))
}

fn solve_external(cnf: &Cnf, argv: &[String]) -> Result<SatResult, SolverError> {
    let cmd = argv.first().cloned().unwrap_or_default();
    let spawn_err = |e: std::io::Error| SolverError::BackendSpawnFailure(cmd.clone(), e.to_string());
    let mut file = tempfile::Builder::new().suffix(".cnf").tempfile().map_err(spawn_err)?;
    file.write_all(emit_dimacs(cnf).0.as_bytes()).map_err(spawn_err)?;
    file.flush().map_err(spawn_err)?;
    let out = Command::new(&cmd).args(&argv[1..]).arg(file.path()).output().map_err(spawn_err)?;
    match out.status.code() {
        Some(10) => {
            let model = parse_model(&String::from_utf8_lossy(&out.stdout), cnf.num_vars)?;
            if !model_satisfies(&cnf.clauses, &model) {
                return Err(SolverError::ModelParseError("model does not satisfy the formula".into()));
            }
            Ok(SatResult::Sat(model))
        }
        Some(20) => Ok(SatResult::Unsat),
        code => Ok(SatResult::Unknown(match code {
            Some(c) => format!("solver exited with status {c}"),
            None => "solver terminated by signal".into(),
        })),
    }
}

/// Reads `v` lines; unmentioned variables default to false.
fn parse_model(stdout: &str, num_vars: u32) -> Result<Vec<bool>, SolverError> {
    let mut model = vec![false; num_vars as usize];
    for line in stdout.lines().filter_map(|l| l.strip_prefix('v')) {
        for tok in line.split_whitespace() {
            let l: i64 = tok.parse().map_err(|_| SolverError::ModelParseError(format!("bad literal `{tok}`")))?;
            if l == 0 {
                continue;
            }
            let v = l.unsigned_abs();
            if v > u64::from(num_vars) {
                return Err(SolverError::ModelParseError(format!("variable {v} out of range")));
            }
            model[v as usize - 1] = l > 0;
        }
    }
    Ok(model)
}

const UNDEF: u32 = u32::MAX;

/// Conflict-driven clause learning with two watched literals, first-UIP
/// learning and non-chronological backjumping. Branches on the lowest
/// unassigned variable, false first, so runs are deterministic.
struct Solver {
    n: usize,
    clauses: Vec<Vec<u32>>,
    watches: Vec<Vec<u32>>,
    /// 0 undef, 1 true, -1 false, per variable.
    assign: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    trail: Vec<u32>,
    trail_lim: Vec<usize>,
    qhead: usize,
    next_branch: usize,
    seen: Vec<bool>,
    units: Vec<u32>,
    empty: bool,
}

#[inline]
fn lit_of(l: Lit) -> u32 {
    ((l.unsigned_abs() - 1) << 1) | u32::from(l < 0)
}

#[inline]
fn var(l: u32) -> usize {
    (l >> 1) as usize
}

impl Solver {
    fn new(n: usize, input: &[Vec<Lit>]) -> Self {
        let mut s = Solver {
            n,
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * n],
            assign: vec![0; n],
            level: vec![0; n],
            reason: vec![UNDEF; n],
            trail: Vec::with_capacity(n),
            trail_lim: Vec::new(),
            qhead: 0,
            next_branch: 0,
            seen: vec![false; n],
            units: Vec::new(),
            empty: false,
        };
        for c in input {
            let mut c: Vec<u32> = c.iter().map(|&l| lit_of(l)).collect();
            c.sort_unstable();
            c.dedup();
            if c.windows(2).any(|w| w[0] ^ 1 == w[1]) {
                continue;
            }
            match c.len() {
                0 => s.empty = true,
                1 => s.units.push(c[0]),
                _ => {
                    s.add_clause(c);
                }
            }
        }
        s
    }

    fn add_clause(&mut self, c: Vec<u32>) -> u32 {
        let cref = self.clauses.len() as u32;
        self.watches[c[0] as usize].push(cref);
        self.watches[c[1] as usize].push(cref);
        self.clauses.push(c);
        cref
    }

    #[inline]
    fn value(&self, l: u32) -> i8 {
        let a = self.assign[var(l)];
        if l & 1 == 1 {
            -a
        } else {
            a
        }
    }

    fn enqueue(&mut self, l: u32, reason: u32) {
        let v = var(l);
        self.assign[v] = if l & 1 == 1 { -1 } else { 1 };
        self.level[v] = self.trail_lim.len() as u32;
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn propagate(&mut self) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = p ^ 1;
            let ws = std::mem::take(&mut self.watches[false_lit as usize]);
            let mut keep = Vec::with_capacity(ws.len());
            let mut conflict = None;
            let mut i = 0;
            while i < ws.len() {
                let cref = ws[i];
                i += 1;
                let c = &mut self.clauses[cref as usize];
                if c[0] == false_lit {
                    c.swap(0, 1);
                }
                let first = c[0];
                if self.value_of(first) == 1 {
                    keep.push(cref);
                    continue;
                }
                let mut moved = false;
                for k in 2..self.clauses[cref as usize].len() {
                    let lk = self.clauses[cref as usize][k];
                    if self.value_of(lk) != -1 {
                        self.clauses[cref as usize].swap(1, k);
                        self.watches[lk as usize].push(cref);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                keep.push(cref);
                if self.value_of(first) == -1 {
                    conflict = Some(cref);
                    keep.extend_from_slice(&ws[i..]);
                    break;
                }
                self.enqueue(first, cref);
            }
            self.watches[false_lit as usize].extend(keep);
            if conflict.is_some() {
                return conflict;
            }
        }
        None
    }

    #[inline]
    fn value_of(&self, l: u32) -> i8 {
        self.value(l)
    }

    fn analyze(&mut self, mut confl: u32) -> (Vec<u32>, u32) {
        let current = self.trail_lim.len() as u32;
        let mut learnt = vec![0u32];
        let mut counter = 0;
        let mut p: Option<u32> = None;
        let mut idx = self.trail.len();
        loop {
            let start = usize::from(p.is_some());
            for j in start..self.clauses[confl as usize].len() {
                let q = self.clauses[confl as usize][j];
                let v = var(q);
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    if self.level[v] >= current {
                        counter += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[var(self.trail[idx])] {
                    break;
                }
            }
            let lit = self.trail[idx];
            self.seen[var(lit)] = false;
            counter -= 1;
            p = Some(lit);
            if counter == 0 {
                break;
            }
            confl = self.reason[var(lit)];
        }
        learnt[0] = p.expect("conflict has a current-level literal") ^ 1;
        for &l in &learnt[1..] {
            self.seen[var(l)] = false;
        }
        let mut bt = 0;
        if learnt.len() > 1 {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[var(learnt[i])] > self.level[var(learnt[max_i])] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            bt = self.level[var(learnt[1])];
        }
        (learnt, bt)
    }

    fn cancel_until(&mut self, lvl: u32) {
        if self.trail_lim.len() as u32 <= lvl {
            return;
        }
        let lim = self.trail_lim[lvl as usize];
        for &l in &self.trail[lim..] {
            let v = var(l);
            self.assign[v] = 0;
            self.reason[v] = UNDEF;
            self.next_branch = self.next_branch.min(v);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(lvl as usize);
        self.qhead = lim;
    }

    fn solve(mut self) -> SatResult {
        if self.empty {
            return SatResult::Unsat;
        }
        for l in std::mem::take(&mut self.units) {
            match self.value(l) {
                -1 => return SatResult::Unsat,
                0 => self.enqueue(l, UNDEF),
                _ => {}
            }
        }
        loop {
            if let Some(confl) = self.propagate() {
                if self.trail_lim.is_empty() {
                    return SatResult::Unsat;
                }
                let (learnt, bt) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], UNDEF);
                } else {
                    let first = learnt[0];
                    let cref = self.add_clause(learnt);
                    self.enqueue(first, cref);
                }
                continue;
            }
            while self.next_branch < self.n && self.assign[self.next_branch] != 0 {
                self.next_branch += 1;
            }
            if self.next_branch == self.n {
                return SatResult::Sat(self.assign.iter().map(|&a| a == 1).collect());
            }
            self.trail_lim.push(self.trail.len());
            self.enqueue(((self.next_branch as u32) << 1) | 1, UNDEF);
        }
    }
}
