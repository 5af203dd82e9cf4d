//! The fault-resistance miter: golden outputs against the controlled
//! circuit, gated by the faulty flag, plus the adversary budget.

use std::collections::BTreeMap;

use super::formula::{Formula, NodeId, VarRole};
use crate::circuit::{GateInstance, GateKind, SequentialCircuit, UnrolledCircuit};
use crate::fault_encoder::{Cond, ControlledCircuit, EncodeError, GadgetExpr};
use crate::circuit::FaultResistanceModel;
use crate::simulator::pair_outputs;

/// The formula together with its named taps.
#[derive(Debug, Clone)]
pub struct FrFormula {
    pub formula: Formula,
    /// `golden[cycle][output]`, 0-based cycle, golden output order.
    pub golden: Vec<Vec<NodeId>>,
    /// `controlled[cycle][output]`, controlled output order.
    pub controlled: Vec<Vec<NodeId>>,
    /// `(golden, controlled)` output index pairs compared by the miter.
    pub pairs: Vec<(usize, usize)>,
    /// Per-cycle `d_i`, present only when the cycle budget is encoded.
    pub d_vars: Vec<Option<NodeId>>,
    pub has_ne: bool,
    pub has_nc: bool,
}

pub fn input_var_name(circuit: &SequentialCircuit, input: usize, cycle: usize) -> String {
    format!("{}@{}", circuit.inputs[input], cycle)
}

pub fn apply_kind(f: &mut Formula, kind: GateKind, ins: &[NodeId]) -> NodeId {
    let a = ins.first().copied();
    let b = ins.get(1).copied();
    match kind {
        GateKind::Const0 => f.constant(false),
        GateKind::Const1 => f.constant(true),
        GateKind::Buf => a.unwrap(),
        GateKind::Not => f.not(a.unwrap()),
        GateKind::And => f.and(a.unwrap(), b.unwrap()),
        GateKind::Nand => {
            let x = f.and(a.unwrap(), b.unwrap());
            f.not(x)
        }
        GateKind::Or => f.or(a.unwrap(), b.unwrap()),
        GateKind::Nor => {
            let x = f.or(a.unwrap(), b.unwrap());
            f.not(x)
        }
        GateKind::Xor => f.xor(a.unwrap(), b.unwrap()),
        GateKind::Xnor => f.iff(a.unwrap(), b.unwrap()),
    }
}

fn lower_gadget(f: &mut Formula, e: &GadgetExpr, ins: &[NodeId], c: NodeId, b1: NodeId, b2: NodeId) -> NodeId {
    match e {
        GadgetExpr::Gate(k) => apply_kind(f, *k, ins),
        GadgetExpr::Ite(cond, t, el) => {
            let sel = match cond {
                Cond::C => c,
                Cond::B1 => b1,
                Cond::B2 => b2,
            };
            let t = lower_gadget(f, t, ins, c, b1, b2);
            let el = lower_gadget(f, el, ins, c, b1, b2);
            f.ite(sel, t, el)
        }
    }
}

/// Per-cycle output nodes of an unrolled circuit; instances with a gadget in
/// `controls` are lowered through it.
fn unroll_formula(
    f: &mut Formula,
    circuit: &UnrolledCircuit,
    controls: Option<&ControlledCircuit>,
    vars: &BTreeMap<GateInstance, (NodeId, NodeId, NodeId)>,
) -> Vec<Vec<NodeId>> {
    let frame = circuit.frame();
    let mut state: Vec<NodeId> = frame.registers.iter().map(|r| f.constant(r.init)).collect();
    let mut vals: Vec<NodeId> = Vec::with_capacity(frame.num_nets());
    let mut outs = Vec::with_capacity(circuit.k());
    for cycle in 1..=circuit.k() {
        vals.clear();
        for i in 0..frame.inputs.len() {
            vals.push(f.var(&input_var_name(frame, i, cycle), VarRole::PrimaryInput));
        }
        let node = |f: &mut Formula, inst: GateInstance, ins: &[NodeId]| -> NodeId {
            match controls.and_then(|cc| cc.gadget(inst)) {
                Some(g) => {
                    let (c, b1, b2) = vars[&inst];
                    lower_gadget(f, &g.expr, ins, c, b1, b2)
                }
                None => apply_kind(f, circuit.instance_kind(inst), ins),
            }
        };
        for r in 0..frame.registers.len() {
            let v = node(f, GateInstance::register(cycle, r), &[state[r]]);
            vals.push(v);
        }
        vals.resize(frame.num_nets(), NodeId::from_index(0));
        for &g in frame.topo_order() {
            let ins: Vec<NodeId> = frame.gates[g].operands.iter().map(|n| vals[n.index()]).collect();
            vals[frame.gate_net(g).index()] = node(f, GateInstance::gate(cycle, g), &ins);
        }
        outs.push(frame.outputs.iter().map(|o| vals[o.net.index()]).collect());
        for (r, reg) in frame.registers.iter().enumerate() {
            state[r] = vals[reg.next.index()];
        }
    }
    outs
}

/// Builds `Ψ_nc ∧ Ψ_ne ∧ miter`. `golden` may be the unfaulted protected
/// circuit itself or a separate reference design with the same inputs and
/// data-output names.
pub fn build_fr_formula(
    golden: &UnrolledCircuit,
    controlled: &ControlledCircuit,
    model: &FaultResistanceModel,
) -> Result<FrFormula, EncodeError> {
    let base = controlled.base();
    if golden.k() != base.k() {
        return Err(EncodeError::ShapeMismatch("golden and protected unroll depths differ".into()));
    }
    let pairs = pair_outputs(golden.frame(), base.frame()).map_err(|e| EncodeError::ShapeMismatch(e.to_string()))?;
    let k = base.k();
    let mut f = Formula::new();
    for c in 1..=k {
        for i in 0..base.frame().inputs.len() {
            f.var(&input_var_name(base.frame(), i, c), VarRole::PrimaryInput);
        }
    }
    let mut vars = BTreeMap::new();
    for (&inst, cv) in controlled.control_map() {
        let c = f.var(&cv.c, VarRole::Control);
        vars.insert(inst, (c, c, c));
    }
    for (&inst, cv) in controlled.control_map() {
        let fl = f.constant(false);
        let b1 = cv.b1.as_ref().map_or(fl, |n| f.var(n, VarRole::Selection));
        let b2 = cv.b2.as_ref().map_or(fl, |n| f.var(n, VarRole::Selection));
        vars.get_mut(&inst).expect("inserted above").1 = b1;
        vars.get_mut(&inst).expect("inserted above").2 = b2;
    }

    let g_out = unroll_formula(&mut f, golden, None, &vars);
    let c_out = unroll_formula(&mut f, base, Some(controlled), &vars);

    let flag = base.frame().flag;
    let mut terms = Vec::with_capacity(k);
    let mut flag_ok = f.constant(true);
    for i in 0..k {
        if let Some(fl) = flag {
            let off = f.not(c_out[i][fl]);
            flag_ok = f.and(flag_ok, off);
        }
        let diffs: Vec<NodeId> = pairs.iter().map(|&(g, c)| f.xor(g_out[i][g], c_out[i][c])).collect();
        let diff = f.or_all(&diffs);
        terms.push(f.and(diff, flag_ok));
    }
    let miter = f.or_all(&terms);
    f.assert(miter);

    let groups: Vec<Vec<NodeId>> = (1..=k)
        .map(|c| controlled.controls_in_cycle(c).map(|(inst, _)| vars[inst].0).collect())
        .collect();
    let mut has_ne = false;
    for g in &groups {
        if model.n_e < g.len() {
            f.assert_at_most(g.clone(), model.n_e);
            has_ne = true;
        }
    }
    let mut d_vars = vec![None; k];
    let active = groups.iter().filter(|g| !g.is_empty()).count();
    let has_nc = model.n_c < k && model.n_c < active;
    if has_nc {
        let mut ds = Vec::new();
        for (i, g) in groups.iter().enumerate() {
            if g.is_empty() {
                continue;
            }
            let d = f.var(&format!("d{}", i + 1), VarRole::AuxD);
            let any = f.or_all(g);
            let def = f.iff(d, any);
            f.assert(def);
            d_vars[i] = Some(d);
            ds.push(d);
        }
        f.assert_at_most(ds, model.n_c);
    }
    Ok(FrFormula { formula: f, golden: g_out, controlled: c_out, pairs, d_vars, has_ne, has_nc })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_and_validate, fault_locations, unroll, Blacklist, Location};
    use crate::fault_encoder::instrument;
    use crate::netlist_io::parse_netlist;
    use crate::simulator::FaultType;

    fn rect() -> UnrolledCircuit {
        unroll(&build_and_validate(&parse_netlist(include_str!("../../fixtures/rect_parity.nl")).unwrap()).unwrap(), 1)
            .unwrap()
    }

    fn encode(c: &UnrolledCircuit, model: &FaultResistanceModel, bl: &[&str]) -> FrFormula {
        let b = Blacklist::new(bl.iter().copied(), c.frame()).unwrap();
        let locs = fault_locations(c, &b, model.location);
        let types: Vec<FaultType> = model.types.iter().copied().collect();
        let cc = instrument(c, &locs, &types);
        build_fr_formula(c, &cc, model).unwrap()
    }

    const FULL: [&str; 10] = ["p1", "p2", "p3", "p4", "p5", "p6", "c1", "c2", "c3", "flag"];

    #[test]
    fn rect_budget_parts() {
        let c = rect();
        let m = FaultResistanceModel::new(1, 1, &FaultType::ALL, Location::Comb);
        let fr = encode(&c, &m, &FULL);
        assert!(fr.has_ne);
        assert!(!fr.has_nc);
        assert_eq!(fr.formula.at_most_constraints().len(), 1);
        assert_eq!(fr.formula.at_most_constraints()[0].lits.len(), 12);
        assert_eq!(fr.pairs.len(), 4);

        let m = FaultResistanceModel::new(12, 1, &FaultType::ALL, Location::Comb);
        let fr = encode(&c, &m, &FULL);
        assert!(!fr.has_ne && !fr.has_nc);
        assert!(fr.formula.at_most_constraints().is_empty());
    }

    #[test]
    fn two_cycle_flag_conjunct() {
        let src = ".name t\n.inputs i\n.outputs o f\n.flag f\n.reg r init=0\ngate o = xor(i, r)\ngate f = and(i, r)\nnext r = o\n";
        let c = unroll(&build_and_validate(&parse_netlist(src).unwrap()).unwrap(), 2).unwrap();
        let m = FaultResistanceModel::new(1, 1, &[FaultType::BitFlip], Location::Both);
        let fr = encode(&c, &m, &[]);
        assert!(fr.has_nc);
        assert_eq!(fr.d_vars.iter().flatten().count(), 2);
        let f = &fr.formula;
        let n = f.vars().len();
        let idx = |name: &str| f.var_by_name(name).unwrap() as usize;
        // faulty flag high at cycle 1 masks a divergence at cycle 2
        let mut a = vec![false; n];
        a[idx("i@1")] = true;
        a[idx("c[r@1]")] = true;
        a[idx("d1")] = true;
        assert!(f.eval(fr.controlled[0][1], &a));
        assert!(!f.satisfied(&a));
        // the same fault with input 0 at cycle 1 diverges at cycle 1 with flag 0
        a[idx("i@1")] = false;
        assert!(f.satisfied(&a));
    }
}
