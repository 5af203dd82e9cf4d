//! Verdict-preserving shrinking of the fault space before encoding.
//!
//! All gate reductions are computed on the frame and hold for every cycle.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Blacklist, FaultResistanceModel, Location, Successor, UnrolledCircuit};
use crate::netlist_io::ReductionFlags;
use crate::simulator::FaultType;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("reduction `{reduction}` not applicable to {model}: {reason}")]
pub struct NotApplicable {
    pub reduction: &'static str,
    pub model: String,
    pub reason: String,
}

fn not_applicable(reduction: &'static str, model: &FaultResistanceModel, reason: &str) -> NotApplicable {
    NotApplicable { reduction, model: model.to_string(), reason: reason.to_string() }
}

/// Restricts `T` to `{bf}` when `bf ∈ T`; the returned note explains a
/// no-op.
pub fn reduce_fault_types(model: &FaultResistanceModel) -> (FaultResistanceModel, Option<String>) {
    if model.types.contains(&FaultType::BitFlip) {
        let mut m = model.clone();
        m.types = BTreeSet::from([FaultType::BitFlip]);
        (m, None)
    } else {
        (model.clone(), Some("bf not in T; restricting types would lose counterexamples".into()))
    }
}

fn single_successor_check(model: &FaultResistanceModel) -> Result<(), NotApplicable> {
    let t = &model.types;
    let types_ok = t.contains(&FaultType::BitFlip) || (t.contains(&FaultType::Set) && t.contains(&FaultType::Reset));
    if !types_ok {
        return Err(not_applicable("single_successor", model, "needs bf in T or both s and r in T"));
    }
    if model.location == Location::Reg {
        return Err(not_applicable("single_successor", model, "needs location c or cr"));
    }
    Ok(())
}

fn single_exit_check(model: &FaultResistanceModel) -> Result<(), NotApplicable> {
    if model.types != BTreeSet::from([FaultType::BitFlip]) {
        return Err(not_applicable("single_exit", model, "needs T = {bf}"));
    }
    if model.location == Location::Reg {
        return Err(not_applicable("single_exit", model, "needs location c or cr"));
    }
    Ok(())
}

/// Logic gates outside `blacklist` whose output feeds exactly one consumer,
/// that consumer being a non-blacklisted logic gate.
pub fn single_successor_blacklist(
    circuit: &UnrolledCircuit,
    blacklist: &Blacklist,
    model: &FaultResistanceModel,
) -> Result<BTreeSet<String>, NotApplicable> {
    single_successor_check(model)?;
    let frame = circuit.frame();
    let mut out = BTreeSet::new();
    for (g, gate) in frame.gates.iter().enumerate() {
        if blacklist.contains(&gate.name) {
            continue;
        }
        if let [Successor::Gate(h)] = frame.successors(frame.gate_net(g)) {
            if !blacklist.contains(&frame.gates[*h].name) {
                out.insert(gate.name.clone());
            }
        }
    }
    Ok(out)
}

/// Single-exit decomposition: `m1` maps every gate and register to its exit,
/// `m2` maps each exit to the sites it absorbs (itself included).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExitMap {
    pub m1: BTreeMap<String, String>,
    pub m2: BTreeMap<String, BTreeSet<String>>,
    /// Gate visits plus successor edges inspected.
    pub visits: usize,
}

impl ExitMap {
    pub fn exits(&self) -> impl Iterator<Item = &String> {
        self.m2.keys()
    }
}

pub fn single_exit_map(circuit: &UnrolledCircuit, blacklist: &Blacklist) -> ExitMap {
    let frame = circuit.frame();
    let n = frame.gates.len();
    let mut exit: Vec<usize> = vec![usize::MAX; n];
    let mut visits = 0;
    for &g in frame.topo_order().iter().rev() {
        visits += 1;
        let succs = frame.successors(frame.gate_net(g));
        let mut target: Option<usize> = None;
        let mut merge = !succs.is_empty();
        for s in succs {
            visits += 1;
            match *s {
                Successor::Gate(h) if target.is_none() || target == Some(exit[h]) => target = Some(exit[h]),
                _ => {
                    merge = false;
                    break;
                }
            }
        }
        exit[g] = match target {
            Some(t) if merge && !blacklist.contains(&frame.gates[t].name) => t,
            _ => g,
        };
    }
    let mut m1 = BTreeMap::new();
    let mut m2: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (g, gate) in frame.gates.iter().enumerate() {
        let e = frame.gates[exit[g]].name.clone();
        m1.insert(gate.name.clone(), e.clone());
        m2.entry(e).or_default().insert(gate.name.clone());
    }
    for r in &frame.registers {
        visits += 1;
        m1.insert(r.name.clone(), r.name.clone());
        m2.insert(r.name.clone(), BTreeSet::from([r.name.clone()]));
    }
    ExitMap { m1, m2, visits }
}

/// Every site absorbed into another site's exit set.
pub fn aggressive_blacklist(
    exit_map: &ExitMap,
    _blacklist: &Blacklist,
    model: &FaultResistanceModel,
) -> Result<BTreeSet<String>, NotApplicable> {
    single_exit_check(model)?;
    Ok(exit_map.m1.iter().filter(|(g, e)| g != e).map(|(g, _)| g.clone()).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AppliedReduction {
    pub name: &'static str,
    /// Sites newly added to the blacklist.
    pub gates_removed: Vec<String>,
    /// Fault types dropped from `T`.
    pub types_removed: Vec<FaultType>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedReduction {
    pub name: &'static str,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionPlan {
    pub effective_model: FaultResistanceModel,
    pub effective_blacklist: Blacklist,
    pub applied: Vec<AppliedReduction>,
    pub skipped: Vec<SkippedReduction>,
}

impl ReductionPlan {
    pub fn is_applied(&self, name: &str) -> bool {
        self.applied.iter().any(|a| a.name == name)
    }
}

/// Fault-type reduction, then single-exit when `T = {bf}` and requested,
/// else single-successor when applicable. Requested reductions that do not
/// apply are recorded in `skipped`.
pub fn plan_reductions(
    circuit: &UnrolledCircuit,
    blacklist: &Blacklist,
    model: &FaultResistanceModel,
    flags: ReductionFlags,
) -> ReductionPlan {
    let mut plan = ReductionPlan {
        effective_model: model.clone(),
        effective_blacklist: blacklist.clone(),
        applied: Vec::new(),
        skipped: Vec::new(),
    };
    if flags.fault_type {
        match reduce_fault_types(model) {
            (m, None) => {
                let removed = model.types.difference(&m.types).copied().collect();
                plan.effective_model = m;
                plan.applied.push(AppliedReduction { name: "fault_type", gates_removed: vec![], types_removed: removed });
            }
            (_, Some(reason)) => plan.skipped.push(SkippedReduction { name: "fault_type", reason }),
        }
    }
    let m = plan.effective_model.clone();
    let add = |plan: &mut ReductionPlan, name: &'static str, extra: BTreeSet<String>| {
        let fresh: Vec<String> = extra.into_iter().filter(|g| !plan.effective_blacklist.contains(g)).collect();
        plan.effective_blacklist = plan.effective_blacklist.union(fresh.iter().cloned());
        plan.applied.push(AppliedReduction { name, gates_removed: fresh, types_removed: vec![] });
    };
    let mut exit_done = false;
    if flags.single_exit {
        match single_exit_check(&m) {
            Ok(()) => {
                let map = single_exit_map(circuit, blacklist);
                let extra = aggressive_blacklist(&map, blacklist, &m).expect("checked above");
                add(&mut plan, "single_exit", extra);
                exit_done = true;
            }
            Err(e) => plan.skipped.push(SkippedReduction { name: "single_exit", reason: e.reason }),
        }
    }
    if flags.single_successor {
        if exit_done {
            plan.skipped.push(SkippedReduction {
                name: "single_successor",
                reason: "subsumed by single_exit".into(),
            });
        } else {
            match single_successor_blacklist(circuit, blacklist, &m) {
                Ok(extra) => add(&mut plan, "single_successor", extra),
                Err(e) => plan.skipped.push(SkippedReduction { name: "single_successor", reason: e.reason }),
            }
        }
    }
    plan
}
