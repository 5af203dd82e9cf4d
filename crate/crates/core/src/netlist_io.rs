//! Line-based netlist format and the JSON verification config.
//!
//! ```text
//! .name <ident>
//! .inputs <ident>+
//! .outputs <ident>+
//! .flag <ident>            # optional
//! .reg <ident> init=<0|1>  # zero or more
//! .cycles <n>              # optional default unroll depth
//! gate <ident> = <kind>(<ident>[, <ident>])
//! next <reg-ident> = <ident>
//! ```
//!
//! `#` starts a comment that runs to the end of the line.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use serde::Deserialize;
use thiserror::Error;

use crate::circuit::{FaultResistanceModel, GateKind, Location};
use crate::simulator::FaultType;

/// 1-based source position.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UndefinedNet(String),
    DuplicateName(String),
    ArityMismatch { gate: String, expected: usize, found: usize },
    MissingOutputDriver(String),
    MissingNextState(String),
    UnknownGateKind(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {kind}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub span: Span,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Syntax(msg) => write!(f, "syntax error: {msg}"),
            ParseErrorKind::UndefinedNet(n) => write!(f, "undefined net `{n}`"),
            ParseErrorKind::DuplicateName(n) => write!(f, "duplicate name `{n}`"),
            ParseErrorKind::ArityMismatch { gate, expected, found } => write!(
                f,
                "gate `{gate}` takes {expected} operand(s), found {found}"
            ),
            ParseErrorKind::MissingOutputDriver(n) => {
                write!(f, "output `{n}` is not driven by any declared net")
            }
            ParseErrorKind::MissingNextState(n) => {
                write!(f, "register `{n}` has no `next` assignment")
            }
            ParseErrorKind::UnknownGateKind(k) => write!(f, "unknown gate kind `{k}`"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RegisterDecl {
    pub name: String,
    pub init: bool,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct GateDecl {
    pub name: String,
    pub kind: GateKind,
    pub operands: Vec<String>,
    pub span: Span,
}

/// Parsed netlist. Equality is structural: source spans are ignored.
#[derive(Debug, Clone, Default)]
pub struct NetlistDoc {
    pub name: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub flag_output: Option<String>,
    pub registers: Vec<RegisterDecl>,
    pub gates: Vec<GateDecl>,
    /// Register name to driving net, in register declaration order once
    /// parsed.
    pub next_state: BTreeMap<String, String>,
    pub default_cycles: Option<usize>,
    /// Span of each named element (inputs, outputs, flag, next lines).
    pub spans: HashMap<String, Span>,
}

impl PartialEq for RegisterDecl {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.init == other.init
    }
}

impl PartialEq for GateDecl {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.kind == other.kind && self.operands == other.operands
    }
}

impl PartialEq for NetlistDoc {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.inputs == other.inputs
            && self.outputs == other.outputs
            && self.flag_output == other.flag_output
            && self.registers == other.registers
            && self.gates == other.gates
            && self.next_state == other.next_state
            && self.default_cycles == other.default_cycles
    }
}

impl NetlistDoc {
    pub fn span_of(&self, name: &str) -> Span {
        if let Some(g) = self.gates.iter().find(|g| g.name == name) {
            return g.span;
        }
        if let Some(r) = self.registers.iter().find(|r| r.name == name) {
            return r.span;
        }
        self.spans.get(name).copied().unwrap_or_default()
    }

    /// Checks the structural invariants. `parse_netlist` always returns a doc
    /// that passes; programmatically built docs go through here too.
    pub fn validate(&self) -> Result<(), ParseError> {
        let mut declared: HashMap<String, Span> = HashMap::new();
        let mut declare = |name: &str, span: Span| -> Result<(), ParseError> {
            if declared.insert(name.to_string(), span).is_some() {
                return Err(ParseError {
                    kind: ParseErrorKind::DuplicateName(name.to_string()),
                    span,
                });
            }
            Ok(())
        };
        for i in &self.inputs {
            declare(i, self.spans.get(i.as_str()).copied().unwrap_or_default())?;
        }
        for r in &self.registers {
            declare(&r.name, r.span)?;
        }
        for g in &self.gates {
            declare(&g.name, g.span)?;
        }
        for g in &self.gates {
            if g.operands.len() != g.kind.arity() {
                return Err(ParseError {
                    kind: ParseErrorKind::ArityMismatch {
                        gate: g.name.clone(),
                        expected: g.kind.arity(),
                        found: g.operands.len(),
                    },
                    span: g.span,
                });
            }
            for op in &g.operands {
                if !declared.contains_key(op.as_str()) {
                    return Err(ParseError {
                        kind: ParseErrorKind::UndefinedNet(op.clone()),
                        span: g.span,
                    });
                }
            }
        }
        let mut seen_out = BTreeSet::new();
        for o in &self.outputs {
            let span = self.spans.get(&format!(".outputs {o}")).copied().unwrap_or_default();
            if !seen_out.insert(o.as_str()) {
                return Err(ParseError { kind: ParseErrorKind::DuplicateName(o.clone()), span });
            }
            if !declared.contains_key(o.as_str()) {
                return Err(ParseError {
                    kind: ParseErrorKind::MissingOutputDriver(o.clone()),
                    span,
                });
            }
        }
        if let Some(flag) = &self.flag_output {
            if !seen_out.contains(flag.as_str()) {
                return Err(ParseError {
                    kind: ParseErrorKind::Syntax(format!("flag `{flag}` is not a declared output")),
                    span: self.spans.get(".flag").copied().unwrap_or_default(),
                });
            }
        }
        for r in &self.registers {
            match self.next_state.get(&r.name) {
                None => {
                    return Err(ParseError {
                        kind: ParseErrorKind::MissingNextState(r.name.clone()),
                        span: r.span,
                    })
                }
                Some(driver) if !declared.contains_key(driver.as_str()) => {
                    return Err(ParseError {
                        kind: ParseErrorKind::UndefinedNet(driver.clone()),
                        span: self.spans.get(&format!("next {}", r.name)).copied().unwrap_or(r.span),
                    })
                }
                Some(_) => {}
            }
        }
        for reg in self.next_state.keys() {
            if !self.registers.iter().any(|r| &r.name == reg) {
                return Err(ParseError {
                    kind: ParseErrorKind::UndefinedNet(reg.clone()),
                    span: self.spans.get(&format!("next {reg}")).copied().unwrap_or_default(),
                });
            }
        }
        Ok(())
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '[' || c == ']' || c == '$'
}

/// Single-line tokenizer tracking columns.
struct Cursor<'a> {
    line: &'a str,
    pos: usize,
    line_no: usize,
}

impl<'a> Cursor<'a> {
    fn new(line: &'a str, line_no: usize) -> Self {
        Cursor { line, pos: 0, line_no }
    }

    fn span(&self) -> Span {
        Span { line: self.line_no, col: self.line[..self.pos].chars().count() + 1 }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { kind: ParseErrorKind::Syntax(msg.into()), span: self.span() })
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.line[self.pos..].chars().next()
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.line.len()
    }

    fn ident(&mut self) -> Result<(String, Span), ParseError> {
        self.skip_ws();
        let span = self.span();
        let start = self.pos;
        match self.peek() {
            Some(c) if is_ident_start(c) => self.pos += c.len_utf8(),
            Some(c) => return self.err(format!("expected identifier, found `{c}`")),
            None => return self.err("expected identifier, found end of line"),
        }
        while let Some(c) = self.peek() {
            if is_ident_char(c) {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        Ok((self.line[start..self.pos].to_string(), span))
    }

    fn expect(&mut self, ch: char) -> Result<(), ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c == ch => {
                self.pos += c.len_utf8();
                Ok(())
            }
            Some(c) => self.err(format!("expected `{ch}`, found `{c}`")),
            None => self.err(format!("expected `{ch}`, found end of line")),
        }
    }

    fn eat(&mut self, ch: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(ch) {
            self.pos += ch.len_utf8();
            true
        } else {
            false
        }
    }

    fn word(&mut self) -> (String, Span) {
        self.skip_ws();
        let span = self.span();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
        (self.line[start..self.pos].to_string(), span)
    }

    fn end(&mut self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            let c = self.peek().unwrap_or(' ');
            self.err(format!("unexpected `{c}` after statement"))
        }
    }
}

pub fn parse_netlist(text: &str) -> Result<NetlistDoc, ParseError> {
    let mut doc = NetlistDoc::default();
    let mut name_seen = false;
    let mut next_lines: Vec<(String, String, Span)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let mut cur = Cursor::new(line, line_no);
        if cur.at_end() {
            continue;
        }
        let (head, head_span) = cur.word();
        match head.as_str() {
            ".name" => {
                if name_seen {
                    return Err(ParseError {
                        kind: ParseErrorKind::Syntax("`.name` given twice".into()),
                        span: head_span,
                    });
                }
                doc.name = cur.ident()?.0;
                name_seen = true;
                cur.end()?;
            }
            ".inputs" | ".outputs" => {
                let mut any = false;
                while !cur.at_end() {
                    let (id, span) = cur.ident()?;
                    if head == ".inputs" {
                        doc.spans.insert(id.clone(), span);
                        doc.inputs.push(id);
                    } else {
                        doc.spans.insert(format!(".outputs {id}"), span);
                        doc.outputs.push(id);
                    }
                    any = true;
                }
                if !any {
                    return cur.err(format!("`{head}` needs at least one name"));
                }
            }
            ".flag" => {
                if doc.flag_output.is_some() {
                    return Err(ParseError {
                        kind: ParseErrorKind::Syntax("`.flag` given twice".into()),
                        span: head_span,
                    });
                }
                let (id, span) = cur.ident()?;
                doc.spans.insert(".flag".into(), span);
                doc.flag_output = Some(id);
                cur.end()?;
            }
            ".reg" => {
                let (id, span) = cur.ident()?;
                let (kw, _) = cur.ident()?;
                if kw != "init" {
                    return cur.err("expected `init=<0|1>`");
                }
                cur.expect('=')?;
                let (bit, bit_span) = cur.word();
                let init = match bit.as_str() {
                    "0" => false,
                    "1" => true,
                    _ => {
                        return Err(ParseError {
                            kind: ParseErrorKind::Syntax(format!(
                                "register init must be 0 or 1, found `{bit}`"
                            )),
                            span: bit_span,
                        })
                    }
                };
                cur.end()?;
                doc.registers.push(RegisterDecl { name: id, init, span });
            }
            ".cycles" => {
                let (n, span) = cur.word();
                match n.parse::<usize>() {
                    Ok(v) if v >= 1 => doc.default_cycles = Some(v),
                    _ => {
                        return Err(ParseError {
                            kind: ParseErrorKind::Syntax(format!(
                                "`.cycles` needs a positive integer, found `{n}`"
                            )),
                            span,
                        })
                    }
                }
                cur.end()?;
            }
            "gate" => {
                let (id, span) = cur.ident()?;
                cur.expect('=')?;
                let (kind_tok, kind_span) = cur.ident()?;
                let kind = GateKind::from_keyword(&kind_tok).ok_or(ParseError {
                    kind: ParseErrorKind::UnknownGateKind(kind_tok.clone()),
                    span: kind_span,
                })?;
                cur.expect('(')?;
                let mut operands = Vec::new();
                if !cur.eat(')') {
                    loop {
                        operands.push(cur.ident()?.0);
                        if cur.eat(')') {
                            break;
                        }
                        cur.expect(',')?;
                    }
                }
                cur.end()?;
                if operands.len() != kind.arity() {
                    return Err(ParseError {
                        kind: ParseErrorKind::ArityMismatch {
                            gate: id,
                            expected: kind.arity(),
                            found: operands.len(),
                        },
                        span,
                    });
                }
                doc.gates.push(GateDecl { name: id, kind, operands, span });
            }
            "next" => {
                let (reg, span) = cur.ident()?;
                cur.expect('=')?;
                let (driver, _) = cur.ident()?;
                cur.end()?;
                next_lines.push((reg, driver, span));
            }
            other => {
                return Err(ParseError {
                    kind: ParseErrorKind::Syntax(format!("unknown statement `{other}`")),
                    span: head_span,
                })
            }
        }
    }

    if !name_seen {
        return Err(ParseError {
            kind: ParseErrorKind::Syntax("missing `.name`".into()),
            span: Span { line: 1, col: 1 },
        });
    }
    if doc.inputs.is_empty() && doc.registers.is_empty() && doc.gates.is_empty() {
        return Err(ParseError {
            kind: ParseErrorKind::Syntax("netlist declares no nets".into()),
            span: Span { line: 1, col: 1 },
        });
    }
    if doc.outputs.is_empty() {
        return Err(ParseError {
            kind: ParseErrorKind::Syntax("missing `.outputs`".into()),
            span: Span { line: 1, col: 1 },
        });
    }
    for (reg, driver, span) in next_lines {
        doc.spans.insert(format!("next {reg}"), span);
        if doc.next_state.insert(reg.clone(), driver).is_some() {
            return Err(ParseError { kind: ParseErrorKind::DuplicateName(reg), span });
        }
    }
    doc.validate()?;
    Ok(doc)
}

/// Canonical text form. Comments and spacing from the source are not kept.
pub fn write_netlist(doc: &NetlistDoc) -> String {
    let mut out = String::new();
    let _ = writeln!(out, ".name {}", doc.name);
    if !doc.inputs.is_empty() {
        let _ = writeln!(out, ".inputs {}", doc.inputs.join(" "));
    }
    let _ = writeln!(out, ".outputs {}", doc.outputs.join(" "));
    if let Some(flag) = &doc.flag_output {
        let _ = writeln!(out, ".flag {flag}");
    }
    if let Some(k) = doc.default_cycles {
        let _ = writeln!(out, ".cycles {k}");
    }
    for r in &doc.registers {
        let _ = writeln!(out, ".reg {} init={}", r.name, u8::from(r.init));
    }
    for g in &doc.gates {
        let _ = writeln!(out, "gate {} = {}({})", g.name, g.kind.keyword(), g.operands.join(", "));
    }
    for r in &doc.registers {
        if let Some(driver) = doc.next_state.get(&r.name) {
            let _ = writeln!(out, "next {} = {}", r.name, driver);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReductionFlags {
    pub fault_type: bool,
    pub single_successor: bool,
    pub single_exit: bool,
}

impl Default for ReductionFlags {
    fn default() -> Self {
        ReductionFlags { fault_type: true, single_successor: true, single_exit: false }
    }
}

impl ReductionFlags {
    pub const NONE: ReductionFlags =
        ReductionFlags { fault_type: false, single_successor: false, single_exit: false };

    /// All eight flag combinations.
    pub fn all_combinations() -> impl Iterator<Item = ReductionFlags> {
        (0..8u8).map(|m| ReductionFlags {
            fault_type: m & 1 != 0,
            single_successor: m & 2 != 0,
            single_exit: m & 4 != 0,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum SolverBackend {
    #[default]
    Builtin,
    /// argv prefix; the DIMACS path is appended.
    External(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationConfig {
    pub unroll_k: usize,
    pub model: FaultResistanceModel,
    pub blacklist: BTreeSet<String>,
    pub reductions: ReductionFlags,
    pub solver: SolverBackend,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("invalid fault-resistance model: {0}")]
    InvalidModel(String),
    #[error("blacklisted gate `{0}` does not exist in the netlist")]
    UnknownBlacklistGate(String),
    #[error("config schema error: {0}")]
    SchemaError(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    ne: i64,
    nc: i64,
    types: Vec<String>,
    location: String,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct RawReductions {
    fault_type: Option<bool>,
    single_successor: Option<bool>,
    single_exit: Option<bool>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawSolver {
    Name(String),
    External { external: Vec<String> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    k: Option<i64>,
    model: RawModel,
    #[serde(default)]
    blacklist: Vec<String>,
    #[serde(default)]
    reductions: Option<RawReductions>,
    #[serde(default)]
    solver: Option<RawSolver>,
}

pub fn parse_config(text: &str, doc: &NetlistDoc) -> Result<VerificationConfig, ConfigError> {
    let raw: RawConfig =
        serde_json::from_str(text).map_err(|e| ConfigError::SchemaError(e.to_string()))?;

    let unroll_k = match raw.k {
        Some(k) if k >= 1 => k as usize,
        Some(k) => return Err(ConfigError::InvalidModel(format!("k must be ≥ 1, got {k}"))),
        None => doc.default_cycles.ok_or_else(|| {
            ConfigError::SchemaError("`k` missing and the netlist has no `.cycles`".into())
        })?,
    };
    if raw.model.ne < 1 {
        return Err(ConfigError::InvalidModel("ne must be ≥ 1".into()));
    }
    if raw.model.nc < 1 {
        return Err(ConfigError::InvalidModel("nc must be ≥ 1".into()));
    }
    let mut types = BTreeSet::new();
    for t in &raw.model.types {
        let ft = FaultType::from_keyword(t)
            .ok_or_else(|| ConfigError::InvalidModel(format!("unknown fault type `{t}`")))?;
        types.insert(ft);
    }
    if types.is_empty() {
        return Err(ConfigError::InvalidModel("types must be non-empty".into()));
    }
    let location = Location::from_keyword(&raw.model.location).ok_or_else(|| {
        ConfigError::InvalidModel(format!("unknown location `{}`", raw.model.location))
    })?;
    let model = FaultResistanceModel {
        n_e: raw.model.ne as usize,
        n_c: (raw.model.nc as usize).min(unroll_k),
        types,
        location,
    };

    let mut blacklist = BTreeSet::new();
    for b in raw.blacklist {
        let exists = doc.gates.iter().any(|g| g.name == b) || doc.registers.iter().any(|r| r.name == b);
        if !exists {
            return Err(ConfigError::UnknownBlacklistGate(b));
        }
        blacklist.insert(b);
    }

    let mut reductions = ReductionFlags::default();
    if let Some(r) = raw.reductions {
        if let Some(v) = r.fault_type {
            reductions.fault_type = v;
        }
        if let Some(v) = r.single_successor {
            reductions.single_successor = v;
        }
        if let Some(v) = r.single_exit {
            reductions.single_exit = v;
        }
    }

    let solver = match raw.solver {
        None => SolverBackend::Builtin,
        Some(RawSolver::Name(n)) if n == "builtin" => SolverBackend::Builtin,
        Some(RawSolver::Name(n)) => {
            return Err(ConfigError::SchemaError(format!("unknown solver `{n}`")))
        }
        Some(RawSolver::External { external }) if !external.is_empty() => {
            SolverBackend::External(external)
        }
        Some(RawSolver::External { .. }) => {
            return Err(ConfigError::SchemaError("external solver command is empty".into()))
        }
    };

    Ok(VerificationConfig { unroll_k, model, blacklist, reductions, solver })
}
