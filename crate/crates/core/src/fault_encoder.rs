//! Fault gadgets and the conditionally-controlled circuit.
//!
//! Each vulnerable instance is replaced by a gadget: an if-then-else tree
//! over a control bit `c` (fault on/off) and up to two selection bits that
//! pick the fault type. Gadgets stay formula trees; `sat::encode` lowers
//! them.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::circuit::{GateInstance, GateKind, UnrolledCircuit};
use crate::simulator::{FaultType, FaultVector, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cond {
    C,
    B1,
    B2,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GadgetExpr {
    /// The operands combined by `kind`.
    Gate(GateKind),
    Ite(Cond, Box<GadgetExpr>, Box<GadgetExpr>),
}

impl GadgetExpr {
    fn ite(c: Cond, t: GadgetExpr, e: GadgetExpr) -> Self {
        GadgetExpr::Ite(c, Box::new(t), Box::new(e))
    }

    pub fn node_count(&self) -> usize {
        match self {
            GadgetExpr::Gate(_) => 1,
            GadgetExpr::Ite(_, t, e) => 1 + t.node_count() + e.node_count(),
        }
    }

    pub fn eval(&self, ins: &[bool], c: bool, b1: bool, b2: bool) -> bool {
        match self {
            GadgetExpr::Gate(k) => k.eval(ins),
            GadgetExpr::Ite(cond, t, e) => {
                let v = match cond {
                    Cond::C => c,
                    Cond::B1 => b1,
                    Cond::B2 => b2,
                };
                if v { t.eval(ins, c, b1, b2) } else { e.eval(ins, c, b1, b2) }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gadget {
    pub kind: GateKind,
    /// Fault types in canonical order.
    pub types: Vec<FaultType>,
    pub expr: GadgetExpr,
}

impl Gadget {
    pub fn selection_bits(&self) -> usize {
        selection_bits(self.types.len())
    }
}

fn selection_bits(types: usize) -> usize {
    match types {
        1 => 0,
        2 => 1,
        _ => 2,
    }
}

/// `types` is deduplicated and sorted; it must be non-empty.
pub fn build_gadget(kind: GateKind, types: &[FaultType]) -> Gadget {
    let mut t = types.to_vec();
    t.sort();
    t.dedup();
    assert!(!t.is_empty(), "gadget needs at least one fault type");
    let f = |ty: FaultType| GadgetExpr::Gate(kind.faulted(ty));
    let faulty = match t.as_slice() {
        [a] => f(*a),
        [a, b] => GadgetExpr::ite(Cond::B1, f(*a), f(*b)),
        _ => GadgetExpr::ite(
            Cond::B1,
            GadgetExpr::ite(Cond::B2, f(FaultType::Set), f(FaultType::Reset)),
            f(FaultType::BitFlip),
        ),
    };
    Gadget { kind, types: t, expr: GadgetExpr::ite(Cond::C, faulty, GadgetExpr::Gate(kind)) }
}

/// Selection-bit values `(b1, b2)` that pick `ty` among `types`.
pub fn selection_for(types: &[FaultType], ty: FaultType) -> Option<(bool, bool)> {
    if !types.contains(&ty) {
        return None;
    }
    Some(match types.len() {
        1 => (false, false),
        2 => (ty == types[0], false),
        _ => match ty {
            FaultType::Set => (true, true),
            FaultType::Reset => (true, false),
            FaultType::BitFlip => (false, false),
        },
    })
}

fn decode_type(types: &[FaultType], b1: bool, b2: bool) -> FaultType {
    match types.len() {
        1 => types[0],
        2 => if b1 { types[0] } else { types[1] },
        _ => match (b1, b2) {
            (true, true) => FaultType::Set,
            (true, false) => FaultType::Reset,
            (false, _) => FaultType::BitFlip,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ControlVars {
    pub c: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b1: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b2: Option<String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("assignment has no value for `{0}`")]
    IncompleteAssignment(String),
    #[error("instance {0} is not instrumented")]
    NotInstrumented(String),
    #[error("fault type {0} is not in the model")]
    TypeNotInModel(FaultType),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

/// Control and selection variable values, by variable name.
pub type ControlAssignment = BTreeMap<String, bool>;

/// The unrolled circuit with gadgets at every vulnerable instance.
#[derive(Debug, Clone)]
pub struct ControlledCircuit {
    base: UnrolledCircuit,
    types: Vec<FaultType>,
    control_map: BTreeMap<GateInstance, ControlVars>,
    gadgets: BTreeMap<GateInstance, Gadget>,
}

pub fn instrument(circuit: &UnrolledCircuit, locations: &[GateInstance], types: &[FaultType]) -> ControlledCircuit {
    let mut t = types.to_vec();
    t.sort();
    t.dedup();
    let frame = circuit.frame();
    let mut control_map = BTreeMap::new();
    let mut gadgets = BTreeMap::new();
    for &inst in locations {
        let name = frame.instance_name(inst);
        let sel = selection_bits(t.len());
        control_map.insert(
            inst,
            ControlVars {
                c: format!("c[{name}]"),
                b1: (sel >= 1).then(|| format!("b1[{name}]")),
                b2: (sel >= 2).then(|| format!("b2[{name}]")),
            },
        );
        gadgets.insert(inst, build_gadget(circuit.instance_kind(inst), &t));
    }
    ControlledCircuit { base: circuit.clone(), types: t, control_map, gadgets }
}

impl ControlledCircuit {
    pub fn base(&self) -> &UnrolledCircuit {
        &self.base
    }

    pub fn types(&self) -> &[FaultType] {
        &self.types
    }

    pub fn control_map(&self) -> &BTreeMap<GateInstance, ControlVars> {
        &self.control_map
    }

    pub fn gadget(&self, inst: GateInstance) -> Option<&Gadget> {
        self.gadgets.get(&inst)
    }

    /// Instrumented instances of cycle `cycle` (the per-cycle control group).
    pub fn controls_in_cycle(&self, cycle: usize) -> impl Iterator<Item = (&GateInstance, &ControlVars)> {
        self.control_map.iter().filter(move |(i, _)| i.cycle == cycle)
    }

    /// Every control and selection variable name, grouped by instance.
    pub fn variables(&self) -> Vec<String> {
        let mut v = Vec::new();
        for cv in self.control_map.values() {
            v.push(cv.c.clone());
            v.extend(cv.b1.clone());
            v.extend(cv.b2.clone());
        }
        v
    }

    /// Gate and register-read nodes of the unrolled circuit.
    pub fn base_gate_count(&self) -> usize {
        self.base.k() * (self.base.frame().gates.len() + self.base.frame().registers.len())
    }

    /// Node count with every instrumented instance counted as its gadget tree.
    pub fn gate_count(&self) -> usize {
        let extra: usize = self.gadgets.values().map(|g| g.expr.node_count() - 1).sum();
        self.base_gate_count() + extra
    }

    /// Cycle-by-cycle outputs under `inputs` and a control assignment;
    /// missing variables read as 0.
    pub fn run(&self, inputs: &[Vec<bool>], assignment: &ControlAssignment) -> Result<Vec<Vec<bool>>, SimError> {
        let frame = self.base.frame();
        if inputs.len() != self.base.k() || inputs.iter().any(|v| v.len() != frame.inputs.len()) {
            return Err(SimError::ShapeMismatch("inputs do not match circuit".into()));
        }
        let get = |name: &Option<String>| name.as_ref().is_some_and(|n| assignment.get(n).copied().unwrap_or(false));
        let eval = |inst: GateInstance, ins: &[bool]| -> bool {
            match (self.gadgets.get(&inst), self.control_map.get(&inst)) {
                (Some(g), Some(cv)) => {
                    g.expr.eval(ins, assignment.get(&cv.c).copied().unwrap_or(false), get(&cv.b1), get(&cv.b2))
                }
                _ => self.base.instance_kind(inst).eval(ins),
            }
        };
        let mut state: Vec<bool> = frame.registers.iter().map(|r| r.init).collect();
        let mut vals = vec![false; frame.num_nets()];
        let mut outs = Vec::new();
        for cycle in 1..=self.base.k() {
            for (j, &b) in inputs[cycle - 1].iter().enumerate() {
                vals[j] = b;
            }
            for r in 0..frame.registers.len() {
                vals[frame.register_net(r).index()] = eval(GateInstance::register(cycle, r), &[state[r]]);
            }
            for &g in frame.topo_order() {
                let ins: Vec<bool> = frame.gates[g].operands.iter().map(|n| vals[n.index()]).collect();
                vals[frame.gate_net(g).index()] = eval(GateInstance::gate(cycle, g), &ins);
            }
            outs.push(frame.outputs.iter().map(|o| vals[o.net.index()]).collect());
            for (r, reg) in frame.registers.iter().enumerate() {
                state[r] = vals[reg.next.index()];
            }
        }
        Ok(outs)
    }
}

/// Reads the fault vector selected by an assignment. Selection bits are only
/// required where they influence the decoded type.
pub fn decode_fault_vector(assignment: &ControlAssignment, cc: &ControlledCircuit) -> Result<FaultVector, EncodeError> {
    let need = |name: &str| {
        assignment.get(name).copied().ok_or_else(|| EncodeError::IncompleteAssignment(name.to_string()))
    };
    let mut events = Vec::new();
    for (&inst, cv) in &cc.control_map {
        if !need(&cv.c)? {
            continue;
        }
        let b1 = match &cv.b1 {
            Some(n) => need(n)?,
            None => false,
        };
        let b2 = match &cv.b2 {
            Some(n) if b1 => need(n)?,
            _ => false,
        };
        events.push(crate::simulator::FaultEvent::new(inst, decode_type(&cc.types, b1, b2)));
    }
    Ok(FaultVector::new(events).expect("control map keys are distinct"))
}

/// The assignment that encodes `v`: `c = 1` exactly at its instances,
/// selection bits per type, everything else 0.
pub fn canonical_assignment(v: &FaultVector, cc: &ControlledCircuit) -> Result<ControlAssignment, EncodeError> {
    let mut a: ControlAssignment = cc.variables().into_iter().map(|n| (n, false)).collect();
    for e in v.events() {
        let cv = cc
            .control_map
            .get(&e.instance)
            .ok_or_else(|| EncodeError::NotInstrumented(cc.base.frame().instance_name(e.instance)))?;
        let (b1, b2) = selection_for(&cc.types, e.fault_type).ok_or(EncodeError::TypeNotInModel(e.fault_type))?;
        a.insert(cv.c.clone(), true);
        if let Some(n) = &cv.b1 {
            a.insert(n.clone(), b1);
        }
        if let Some(n) = &cv.b2 {
            a.insert(n.clone(), b2);
        }
    }
    Ok(a)
}
