//! Machine-readable verification reports (schema in `docs/report.schema.json`).

use serde::Serialize;
use serde_json::{json, Value};

use crate::circuit::{FaultResistanceModel, SequentialCircuit};
use crate::netlist_io::VerificationConfig;
use crate::reductions::{AppliedReduction, ReductionPlan, SkippedReduction};
use crate::sat::verify::{Counterexample, Stats, VerdictKind};
use crate::simulator::bits_to_string;

pub const TOOL: &str = "frv";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize)]
struct ModelJson {
    ne: usize,
    nc: usize,
    types: Vec<&'static str>,
    location: &'static str,
}

pub fn model_json(m: &FaultResistanceModel) -> Value {
    serde_json::to_value(ModelJson {
        ne: m.n_e,
        nc: m.n_c,
        types: m.types.iter().map(|t| t.keyword()).collect(),
        location: m.location.keyword(),
    })
    .expect("model serializes")
}

pub fn counterexample_json(circuit: &SequentialCircuit, c: &Counterexample) -> Value {
    let events: Vec<Value> = c
        .fault_vector
        .events()
        .map(|e| {
            json!({
                "instance": circuit.instance_name(e.instance),
                "gate": circuit.site_name(e.instance.site),
                "cycle": e.instance.cycle,
                "type": e.fault_type.keyword(),
            })
        })
        .collect();
    json!({
        "events": events,
        "inputs": c.inputs.iter().map(|x| bits_to_string(x)).collect::<Vec<_>>(),
        "divergence_cycle": c.divergence_cycle,
        "differing_output": c.differing_output,
    })
}

pub fn plan_json(plan: &ReductionPlan) -> Value {
    #[derive(Serialize)]
    struct P<'a> {
        applied: &'a [AppliedReduction],
        skipped: &'a [SkippedReduction],
    }
    serde_json::to_value(P { applied: &plan.applied, skipped: &plan.skipped }).expect("plan serializes")
}

/// `engine` is `"sat"` or `"oracle"`; `stats` is absent for the oracle.
pub fn build_report(
    circuit: &SequentialCircuit,
    config: &VerificationConfig,
    engine: &str,
    kind: &VerdictKind,
    plan: Option<&ReductionPlan>,
    stats: Option<&Stats>,
) -> Value {
    let effective = plan.map_or(&config.model, |p| &p.effective_model);
    let effective_bl = plan.map_or(config.blacklist.len(), |p| p.effective_blacklist.len());
    json!({
        "tool": TOOL,
        "format_version": FORMAT_VERSION,
        "engine": engine,
        "netlist": circuit.name,
        "k": config.unroll_k,
        "verdict": if kind.is_resistant() { "RESISTANT" } else { "NOT_RESISTANT" },
        "model": { "requested": model_json(&config.model), "effective": model_json(effective) },
        "blacklist": { "original": config.blacklist.len(), "effective": effective_bl },
        "reductions": plan.map_or(json!({"applied": [], "skipped": []}), plan_json),
        "counterexample": kind.counterexample().map(|c| counterexample_json(circuit, c)),
        "stats": stats.map(|s| json!({
            "vars": s.vars,
            "clauses": s.clauses,
            "locations": s.locations,
            "encode_seconds": s.encode_secs,
            "solve_seconds": s.solve_secs,
        })),
    })
}
