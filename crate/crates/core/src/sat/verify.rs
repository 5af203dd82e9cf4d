//! End-to-end verification: reduce, instrument, encode, solve, replay.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;

use super::cnf::{tseitin_cnf, Cnf};
use super::encode::{build_fr_formula, input_var_name, FrFormula};
use super::solver::{solve_cnf, SatResult, SolverError};
use crate::circuit::{
    fault_locations, Blacklist, CircuitError, GateInstance, SequentialCircuit, UnrolledCircuit,
};
use crate::fault_encoder::{decode_fault_vector, instrument, ControlAssignment, ControlledCircuit, EncodeError};
use crate::netlist_io::{SolverBackend, VerificationConfig};
use crate::reductions::{plan_reductions, ReductionPlan};
use crate::simulator::{check_effectiveness_against, run_trace, FaultType, FaultVector, SimError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub fault_vector: FaultVector,
    /// `inputs[cycle]`, one bit per primary input.
    pub inputs: Vec<Vec<bool>>,
    pub divergence_cycle: usize,
    pub differing_output: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerdictKind {
    Resistant,
    NotResistant(Counterexample),
}

impl VerdictKind {
    pub fn is_resistant(&self) -> bool {
        matches!(self, VerdictKind::Resistant)
    }

    pub fn counterexample(&self) -> Option<&Counterexample> {
        match self {
            VerdictKind::Resistant => None,
            VerdictKind::NotResistant(c) => Some(c),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stats {
    pub vars: u32,
    pub clauses: usize,
    pub locations: usize,
    pub encode_secs: f64,
    pub solve_secs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub plan: ReductionPlan,
    pub stats: Stats,
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("solver gave no answer: {0}")]
    Unknown(String),
    #[error("golden and protected circuits differ without any fault (first at cycle {0})")]
    GoldenMismatch(usize),
    #[error("internal encoding error: {0}")]
    InternalEncodingError(String),
}

/// Everything produced before the solver runs.
#[derive(Debug, Clone)]
pub struct Encoding {
    pub protected: UnrolledCircuit,
    pub golden: UnrolledCircuit,
    pub plan: ReductionPlan,
    pub locations: Vec<GateInstance>,
    pub controlled: ControlledCircuit,
    pub fr: FrFormula,
    pub cnf: Cnf,
    pub encode_secs: f64,
}

pub fn encode(
    circuit: &SequentialCircuit,
    golden: Option<&SequentialCircuit>,
    config: &VerificationConfig,
) -> Result<Encoding, VerifyError> {
    let start = Instant::now();
    let protected = UnrolledCircuit::new(Arc::new(circuit.clone()), config.unroll_k)?;
    let golden = match golden {
        Some(g) => UnrolledCircuit::new(Arc::new(g.clone()), config.unroll_k)?,
        None => protected.clone(),
    };
    let blacklist = Blacklist::new(config.blacklist.iter().cloned(), circuit)?;
    let plan = plan_reductions(&protected, &blacklist, &config.model, config.reductions);
    let model = &plan.effective_model;
    let locations = fault_locations(&protected, &plan.effective_blacklist, model.location);
    let types: Vec<FaultType> = model.types.iter().copied().collect();
    let controlled = instrument(&protected, &locations, &types);
    let fr = build_fr_formula(&golden, &controlled, model)?;
    let cnf = tseitin_cnf(&fr.formula);
    Ok(Encoding {
        protected,
        golden,
        plan,
        locations,
        controlled,
        fr,
        cnf,
        encode_secs: start.elapsed().as_secs_f64(),
    })
}

/// Input bits and control assignment read back from a CNF model.
pub fn decode_model(enc: &Encoding, model: &[bool]) -> (Vec<Vec<bool>>, ControlAssignment) {
    let frame = enc.protected.frame();
    let inputs = (1..=enc.protected.k())
        .map(|c| {
            (0..frame.inputs.len())
                .map(|i| enc.cnf.value(model, &input_var_name(frame, i, c)).unwrap_or(false))
                .collect()
        })
        .collect();
    let assignment: BTreeMap<String, bool> = enc
        .controlled
        .variables()
        .into_iter()
        .map(|n| {
            let v = enc.cnf.value(model, &n).unwrap_or(false);
            (n, v)
        })
        .collect();
    (inputs, assignment)
}

pub fn solve(enc: &Encoding, backend: &SolverBackend) -> Result<Verdict, VerifyError> {
    let start = Instant::now();
    let result = solve_cnf(&enc.cnf, backend)?;
    let solve_secs = start.elapsed().as_secs_f64();
    let stats = Stats {
        vars: enc.cnf.num_vars,
        clauses: enc.cnf.clauses.len(),
        locations: enc.locations.len(),
        encode_secs: enc.encode_secs,
        solve_secs,
    };
    let kind = match result {
        SatResult::Unsat => VerdictKind::Resistant,
        SatResult::Unknown(r) => return Err(VerifyError::Unknown(r)),
        SatResult::Sat(model) => VerdictKind::NotResistant(replay(enc, &model)?),
    };
    Ok(Verdict { kind, plan: enc.plan.clone(), stats })
}

fn replay(enc: &Encoding, model: &[bool]) -> Result<Counterexample, VerifyError> {
    let (inputs, assignment) = decode_model(enc, model);
    let v = decode_fault_vector(&assignment, &enc.controlled)?;
    let internal = |m: String| VerifyError::InternalEncodingError(m);
    let m = &enc.plan.effective_model;
    if v.max_epc() > m.n_e || v.sharp_clk() > m.n_c {
        return Err(internal(format!("decoded vector {:?} exceeds the model budget", v.describe(enc.protected.frame()))));
    }
    let r = match check_effectiveness_against(&enc.golden, &enc.protected, &v, &inputs) {
        Ok(r) => r,
        Err(SimError::EmptyVector) => return Err(VerifyError::GoldenMismatch(unfaulted_divergence(enc, &inputs))),
        Err(e) => return Err(internal(e.to_string())),
    };
    if !r.effective {
        return Err(internal(format!(
            "replay of {:?} on inputs {:?} is not effective",
            v.describe(enc.protected.frame()),
            inputs
        )));
    }
    Ok(Counterexample {
        fault_vector: v,
        inputs,
        divergence_cycle: r.divergence_cycle.expect("effective"),
        differing_output: r.differing_output.expect("effective"),
    })
}

fn unfaulted_divergence(enc: &Encoding, inputs: &[Vec<bool>]) -> usize {
    let (Ok(g), Ok(p)) = (run_trace(&enc.golden, inputs), run_trace(&enc.protected, inputs)) else {
        return 1;
    };
    let names = |c: &SequentialCircuit| -> Vec<String> { c.data_outputs().map(|o| c.outputs[o].name.clone()).collect() };
    let gn = names(enc.golden.frame());
    let pn = names(enc.protected.frame());
    for (c, (gc, pc)) in g.cycles.iter().zip(&p.cycles).enumerate() {
        for (j, name) in pn.iter().enumerate() {
            if gn.iter().position(|n| n == name).is_some_and(|x| gc.outputs[x] != pc.outputs[j]) {
                return c + 1;
            }
        }
    }
    1
}

pub fn verify(circuit: &SequentialCircuit, config: &VerificationConfig) -> Result<Verdict, VerifyError> {
    verify_with_golden(circuit, None, config)
}

/// Like [`verify`], comparing against a separate unprotected design when
/// `golden` is given.
pub fn verify_with_golden(
    circuit: &SequentialCircuit,
    golden: Option<&SequentialCircuit>,
    config: &VerificationConfig,
) -> Result<Verdict, VerifyError> {
    let enc = encode(circuit, golden, config)?;
    solve(&enc, &config.solver)
}
