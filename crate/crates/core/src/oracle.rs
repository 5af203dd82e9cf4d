//! Exhaustive ground truth for small circuits, plus instance generators.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::circuit::{fault_locations, Blacklist, CircuitError, FaultResistanceModel, GateInstance, UnrolledCircuit};
use crate::netlist_io::{parse_netlist, NetlistDoc};
use crate::sat::verify::{Counterexample, VerdictKind};
use crate::simulator::{
    check_effectiveness_against, effective_lanes, pair_outputs, simulate_packed, FaultEvent, FaultTable, FaultType,
    FaultVector, InputSpace, SimError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBudget {
    /// Input bits summed over all cycles.
    pub max_input_bits: usize,
    pub max_vectors: u128,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget { max_input_bits: 16, max_vectors: 1_000_000 }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("{what}: {needed} exceeds the oracle budget of {limit}")]
    BudgetExceeded { what: &'static str, needed: u128, limit: u128 },
    #[error("{0} variables is too many for the hardness construction (limit 8)")]
    TooManyVars(usize),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Number of admissible non-empty vectors over `locations`, by a per-cycle
/// generating function.
pub fn count_fault_vectors(locations: &[GateInstance], model: &FaultResistanceModel) -> u128 {
    let t = model.types.len() as u128;
    let mut per_cycle: std::collections::BTreeMap<usize, u128> = Default::default();
    for l in locations {
        *per_cycle.entry(l.cycle).or_default() += 1;
    }
    // ways[c] = vectors touching exactly c cycles
    let mut ways = vec![0u128; per_cycle.len() + 1];
    ways[0] = 1;
    for &m in per_cycle.values() {
        let mut active = 0u128;
        let mut binom = 1u128;
        for j in 1..=(model.n_e as u128).min(m) {
            binom = binom * (m - j + 1) / j;
            active = active.saturating_add(binom.saturating_mul(t.saturating_pow(j as u32)));
        }
        for c in (1..ways.len()).rev() {
            ways[c] = ways[c].saturating_add(ways[c - 1].saturating_mul(active));
        }
    }
    ways.iter().skip(1).take(model.n_c).fold(0u128, |a, &w| a.saturating_add(w))
}

/// Calls `visit` on every admissible non-empty vector, in lexicographic
/// order of (location, type) sequences; stops early when `visit` returns
/// false. Returns whether enumeration ran to completion.
pub fn for_each_fault_vector<F>(locations: &[GateInstance], model: &FaultResistanceModel, mut visit: F) -> bool
where
    F: FnMut(&[FaultEvent]) -> bool,
{
    let types: Vec<FaultType> = model.types.iter().copied().collect();
    let mut locs = locations.to_vec();
    locs.sort();
    locs.dedup();
    struct St<'a> {
        locs: &'a [GateInstance],
        types: &'a [FaultType],
        n_e: usize,
        n_c: usize,
        stack: Vec<FaultEvent>,
    }
    fn rec<F: FnMut(&[FaultEvent]) -> bool>(st: &mut St<'_>, start: usize, visit: &mut F) -> bool {
        for i in start..st.locs.len() {
            let inst = st.locs[i];
            let same = st.stack.iter().filter(|e| e.instance.cycle == inst.cycle).count();
            if same >= st.n_e {
                continue;
            }
            if same == 0 {
                let cycles: BTreeSet<usize> = st.stack.iter().map(|e| e.instance.cycle).collect();
                if cycles.len() >= st.n_c {
                    continue;
                }
            }
            for ti in 0..st.types.len() {
                st.stack.push(FaultEvent::new(inst, st.types[ti]));
                let go = visit(&st.stack) && rec(st, i + 1, visit);
                st.stack.pop();
                if !go {
                    return false;
                }
            }
        }
        true
    }
    let mut st = St { locs: &locs, types: &types, n_e: model.n_e, n_c: model.n_c, stack: Vec::new() };
    rec(&mut st, 0, &mut visit)
}

fn check_vectors(locations: &[GateInstance], model: &FaultResistanceModel, budget: &OracleBudget) -> Result<(), OracleError> {
    let n = count_fault_vectors(locations, model);
    if n > budget.max_vectors {
        return Err(OracleError::BudgetExceeded { what: "fault vectors", needed: n, limit: budget.max_vectors });
    }
    Ok(())
}

pub fn enumerate_fault_vectors(
    locations: &[GateInstance],
    model: &FaultResistanceModel,
    budget: &OracleBudget,
) -> Result<Vec<FaultVector>, OracleError> {
    check_vectors(locations, model, budget)?;
    let mut out = Vec::new();
    for_each_fault_vector(locations, model, |ev| {
        out.push(FaultVector::new(ev.iter().copied()).expect("distinct locations"));
        true
    });
    Ok(out)
}

pub fn brute_force_verdict(
    circuit: &UnrolledCircuit,
    blacklist: &Blacklist,
    model: &FaultResistanceModel,
    budget: &OracleBudget,
) -> Result<VerdictKind, OracleError> {
    brute_force_verdict_against(circuit, circuit, blacklist, model, budget)
}

/// Every admissible vector against every input sequence, comparing with
/// `reference`. The first effective (vector, input) pair in enumeration
/// order is returned.
pub fn brute_force_verdict_against(
    reference: &UnrolledCircuit,
    circuit: &UnrolledCircuit,
    blacklist: &Blacklist,
    model: &FaultResistanceModel,
    budget: &OracleBudget,
) -> Result<VerdictKind, OracleError> {
    let frame = circuit.frame();
    let k = circuit.k();
    let space = InputSpace { inputs: frame.inputs.len(), k };
    if space.bits() > budget.max_input_bits {
        return Err(OracleError::BudgetExceeded {
            what: "input bits",
            needed: space.bits() as u128,
            limit: budget.max_input_bits as u128,
        });
    }
    if reference.k() != k {
        return Err(SimError::ShapeMismatch("reference and protected unroll depths differ".into()).into());
    }
    let locations = fault_locations(circuit, blacklist, model.location);
    check_vectors(&locations, model, budget)?;
    let pairs = pair_outputs(reference.frame(), frame)?;

    let mut scratch = Vec::new();
    let words: Vec<Vec<Vec<u64>>> = (0..space.words()).map(|w| space.word(w)).collect();
    let ref_table = FaultTable::from_map(reference.frame(), k, reference.faults());
    let golden: Vec<_> =
        words.iter().map(|w| simulate_packed(reference.frame(), k, &ref_table, w, &mut scratch)).collect();

    let mut table = FaultTable::from_map(frame, k, circuit.faults());
    let mut found: Option<(Vec<FaultEvent>, u64)> = None;
    for_each_fault_vector(&locations, model, |events| {
        for e in events {
            table.set(frame, e.instance, Some(e.fault_type));
        }
        for (w, inputs) in words.iter().enumerate() {
            let run = simulate_packed(frame, k, &table, inputs, &mut scratch);
            let hits = effective_lanes(&golden[w], &run, &pairs, frame.flag) & space.lane_mask(w as u64);
            if hits != 0 {
                found = Some((events.to_vec(), w as u64 * 64 + u64::from(hits.trailing_zeros())));
                break;
            }
        }
        for e in events {
            table.set(frame, e.instance, circuit.faults().get(&e.instance).copied());
        }
        found.is_none()
    });
    let Some((events, n)) = found else {
        return Ok(VerdictKind::Resistant);
    };
    let v = FaultVector::new(events).expect("distinct locations");
    let inputs = space.sequence(n);
    let r = check_effectiveness_against(reference, circuit, &v, &inputs)?;
    Ok(VerdictKind::NotResistant(Counterexample {
        fault_vector: v,
        inputs,
        divergence_cycle: r.divergence_cycle.expect("packed and scalar evaluation agree"),
        differing_output: r.differing_output.expect("packed and scalar evaluation agree"),
    }))
}

/// All input sequences on which `v` is effective, in lexicographic order.
pub fn effective_inputs(golden: &UnrolledCircuit, v: &FaultVector) -> Result<Vec<Vec<Vec<bool>>>, OracleError> {
    let frame = golden.frame();
    let space = InputSpace { inputs: frame.inputs.len(), k: golden.k() };
    if space.bits() > crate::simulator::EXHAUSTIVE_LIMIT {
        return Err(SimError::TooLargeForExhaustive(space.bits(), crate::simulator::EXHAUSTIVE_LIMIT).into());
    }
    let mut out = Vec::new();
    for n in 0..space.sequences() {
        let inputs = space.sequence(n);
        if check_effectiveness_against(golden, golden, v, &inputs)?.effective {
            out.push(inputs);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expected {
    Resistant,
    NotResistant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedInstance {
    pub netlist: NetlistDoc,
    pub expected: Option<Expected>,
    /// Generator name and parameters.
    pub provenance: String,
    /// Sites that model protected logic (detector copies, flag logic).
    pub suggested_blacklist: Vec<String>,
    pub suggested_k: usize,
}

/// Netlist text builder with constant folding.
#[derive(Default)]
struct Builder {
    gates: String,
    count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Sig {
    Const(bool),
    Net(String),
}

impl Builder {
    fn emit(&mut self, prefix: &str, kind: &str, ops: &[&str]) -> Sig {
        self.count += 1;
        let name = format!("{prefix}{}", self.count);
        let _ = writeln!(self.gates, "gate {name} = {kind}({})", ops.join(", "));
        Sig::Net(name)
    }

    fn named(&mut self, name: &str, s: &Sig) {
        match s {
            Sig::Const(b) => {
                let _ = writeln!(self.gates, "gate {name} = const{}()", u8::from(*b));
            }
            Sig::Net(n) => {
                let _ = writeln!(self.gates, "gate {name} = buf({n})");
            }
        }
    }

    fn not(&mut self, p: &str, a: &Sig) -> Sig {
        match a {
            Sig::Const(b) => Sig::Const(!b),
            Sig::Net(n) => self.emit(p, "not", &[n]),
        }
    }

    fn and(&mut self, p: &str, a: &Sig, b: &Sig) -> Sig {
        match (a, b) {
            (Sig::Const(false), _) | (_, Sig::Const(false)) => Sig::Const(false),
            (Sig::Const(true), x) | (x, Sig::Const(true)) => x.clone(),
            (Sig::Net(x), Sig::Net(y)) => self.emit(p, "and", &[x, y]),
        }
    }

    fn or(&mut self, p: &str, a: &Sig, b: &Sig) -> Sig {
        match (a, b) {
            (Sig::Const(true), _) | (_, Sig::Const(true)) => Sig::Const(true),
            (Sig::Const(false), x) | (x, Sig::Const(false)) => x.clone(),
            (Sig::Net(x), Sig::Net(y)) => self.emit(p, "or", &[x, y]),
        }
    }

    fn tree(&mut self, p: &str, xs: &[Sig], and: bool) -> Sig {
        match xs {
            [] => Sig::Const(and),
            [x] => x.clone(),
            _ => {
                let (l, r) = xs.split_at(xs.len() / 2);
                let l = self.tree(p, l, and);
                let r = self.tree(p, r, and);
                if and { self.and(p, &l, &r) } else { self.or(p, &l, &r) }
            }
        }
    }

    /// `1 ≤ Σ bits ≤ hi` via a unary counter: `atl[j]` = at least `j` of the
    /// bits seen so far.
    fn in_range(&mut self, p: &str, bits: &[Sig], hi: usize) -> Sig {
        let mut atl: Vec<Sig> = (0..=hi + 1).map(|j| Sig::Const(j == 0)).collect();
        for b in bits {
            for j in (1..=hi + 1).rev() {
                let carry = self.and(p, b, &atl[j - 1]);
                atl[j] = self.or(p, &atl[j], &carry);
            }
        }
        let over = self.not(p, &atl[hi + 1]);
        self.and(p, &atl[1], &over)
    }
}

fn truth_table_sat(clauses: &[Vec<i32>], m: usize) -> bool {
    (0..1u32 << m).any(|a| {
        clauses.iter().all(|c| c.iter().any(|&l| (a >> (l.unsigned_abs() - 1) & 1 == 1) == (l > 0)))
    })
}

/// Three-cycle instance that is not resistant under `ζ(n_e, 1, {bf}, r)`
/// with an empty blacklist iff `clauses` (over `x1..xm`) is satisfiable.
///
/// Registers `r_i` latch `2n_e + 1` copies of the CNF circuit, `q_i`
/// latch `r_i`; outputs expose `r_i`; the flag is raised when
/// `1 ≤ Σ r ≤ n_e` or `1 ≤ Σ q ≤ 2n_e`.
pub fn np_hardness_instance(clauses: &[Vec<i32>], m: usize, n_e: usize) -> Result<GeneratedInstance, OracleError> {
    let m = m.max(clauses.iter().flatten().map(|l| l.unsigned_abs() as usize).max().unwrap_or(0)).max(1);
    if m > 8 {
        return Err(OracleError::TooManyVars(m));
    }
    let n_e = n_e.max(1);
    let copies = 2 * n_e + 1;
    let mut b = Builder::default();
    let mut phi = Vec::new();
    for j in 1..=copies {
        let p = format!("k{j}_");
        let mut neg: Vec<Option<Sig>> = vec![None; m + 1];
        let mut cls = Vec::new();
        for c in clauses {
            let mut lits = Vec::new();
            for &l in c {
                let v = l.unsigned_abs() as usize;
                let x = Sig::Net(format!("x{v}"));
                lits.push(if l > 0 {
                    x
                } else {
                    if neg[v].is_none() {
                        neg[v] = Some(b.not(&p, &x));
                    }
                    neg[v].clone().expect("set above")
                });
            }
            cls.push(b.tree(&p, &lits, false));
        }
        let out = b.tree(&p, &cls, true);
        let name = format!("phi{j}");
        b.named(&name, &out);
        phi.push(name);
    }
    let rs: Vec<Sig> = (1..=copies).map(|j| Sig::Net(format!("r{j}"))).collect();
    let qs: Vec<Sig> = (1..=copies).map(|j| Sig::Net(format!("q{j}"))).collect();
    let in_r = b.in_range("cr", &rs, n_e);
    let in_q = b.in_range("cq", &qs, 2 * n_e);
    let flag = b.or("cf", &in_r, &in_q);
    b.named("flag", &flag);
    for j in 1..=copies {
        let _ = writeln!(b.gates, "gate o{j} = buf(r{j})");
    }

    let mut text = String::new();
    let _ = writeln!(text, ".name np_m{m}_ne{n_e}");
    let xs: Vec<String> = (1..=m).map(|v| format!("x{v}")).collect();
    let _ = writeln!(text, ".inputs {}", xs.join(" "));
    let os: Vec<String> = (1..=copies).map(|j| format!("o{j}")).collect();
    let _ = writeln!(text, ".outputs {} flag", os.join(" "));
    let _ = writeln!(text, ".flag flag\n.cycles 3");
    for j in 1..=copies {
        let _ = writeln!(text, ".reg r{j} init=0\n.reg q{j} init=0");
    }
    text.push_str(&b.gates);
    for j in 1..=copies {
        let _ = writeln!(text, "next r{j} = phi{j}\nnext q{j} = r{j}");
    }
    let netlist = parse_netlist(&text).expect("generated hardness netlist is well formed");
    let sat = truth_table_sat(clauses, m);
    Ok(GeneratedInstance {
        netlist,
        expected: Some(if sat { Expected::NotResistant } else { Expected::Resistant }),
        provenance: format!("np_hardness(m={m}, clauses={}, ne={n_e})", clauses.len()),
        suggested_blacklist: Vec::new(),
        suggested_k: 3,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomParams {
    pub max_gates: usize,
    pub max_regs: usize,
    pub num_inputs: usize,
    pub with_flag: bool,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams { max_gates: 15, max_regs: 2, num_inputs: 3, with_flag: true }
    }
}

const BINARY: [&str; 6] = ["and", "or", "xor", "nand", "nor", "xnor"];

/// Seed-deterministic random sequential netlist. With a flag, the flag is
/// one of: a duplicate-and-compare detector over the first output's cone, a
/// junk function of internal nets, or a constant.
pub fn random_netlist(seed: u64, params: RandomParams) -> GeneratedInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ni = params.num_inputs.max(1);
    let nr = rng.gen_range(0..=params.max_regs);
    let cap = if params.with_flag { (params.max_gates.saturating_sub(1) / 2).max(2) } else { params.max_gates.max(2) };
    let np = rng.gen_range(2..=cap);

    let inputs: Vec<String> = (0..ni).map(|i| format!("i{i}")).collect();
    let regs: Vec<String> = (0..nr).map(|r| format!("r{r}")).collect();
    let mut pool: Vec<String> = inputs.iter().chain(&regs).cloned().collect();
    // (name, kind, operands)
    let mut gates: Vec<(String, String, Vec<String>)> = Vec::new();
    let pick = |rng: &mut ChaCha8Rng, pool: &[String]| -> String {
        if pool.len() > 4 && rng.gen_bool(0.6) {
            pool[rng.gen_range(pool.len() - 4..pool.len())].clone()
        } else {
            pool[rng.gen_range(0..pool.len())].clone()
        }
    };
    for g in 0..np {
        let name = format!("g{g}");
        let roll = rng.gen_range(0..40);
        let (kind, ops) = if roll == 0 {
            (if rng.gen_bool(0.5) { "const0" } else { "const1" }.to_string(), vec![])
        } else if roll < 6 {
            (if roll < 4 { "not" } else { "buf" }.to_string(), vec![pick(&mut rng, &pool)])
        } else {
            let a = pick(&mut rng, &pool);
            let mut b = pick(&mut rng, &pool);
            if b == a {
                b = pool[rng.gen_range(0..pool.len())].clone();
            }
            (BINARY[rng.gen_range(0..BINARY.len())].to_string(), vec![a, b])
        };
        gates.push((name.clone(), kind, ops));
        pool.push(name);
    }
    let main_out = format!("g{}", np - 1);
    let mut outputs = vec![main_out.clone()];
    if np > 2 && rng.gen_bool(0.5) {
        let other = format!("g{}", rng.gen_range(0..np - 1));
        outputs.push(other);
    }
    let gate_names: Vec<String> = gates.iter().map(|g| g.0.clone()).collect();
    let nexts: Vec<String> = (0..nr).map(|_| gate_names[rng.gen_range(0..np)].clone()).collect();

    let mut blacklist = Vec::new();
    let mut strategy = "none";
    if params.with_flag {
        let s = rng.gen_range(0..4);
        if s <= 1 {
            strategy = "detector";
            let mut cone = BTreeSet::new();
            let mut stack = vec![main_out.clone()];
            while let Some(n) = stack.pop() {
                if let Some(g) = gates.iter().find(|g| g.0 == n) {
                    if cone.insert(n.clone()) {
                        stack.extend(g.2.iter().cloned());
                    }
                }
            }
            let dup = |n: &String| if cone.contains(n) { format!("d{}", &n[1..]) } else { n.clone() };
            let copies: Vec<_> = gates
                .iter()
                .filter(|g| cone.contains(&g.0))
                .map(|g| (dup(&g.0), g.1.clone(), g.2.iter().map(dup).collect::<Vec<_>>()))
                .collect();
            blacklist.extend(copies.iter().map(|g| g.0.clone()));
            let dup_out = dup(&main_out);
            gates.extend(copies);
            gates.push(("flag".into(), "xor".into(), vec![main_out.clone(), dup_out]));
        } else if s == 2 {
            strategy = "junk";
            let a = gate_names[rng.gen_range(0..np)].clone();
            let b = pick(&mut rng, &pool);
            let kind = BINARY[rng.gen_range(0..BINARY.len())];
            gates.push(("flag".into(), kind.into(), if a == b { vec![a, inputs[0].clone()] } else { vec![a, b] }));
        } else {
            strategy = "constant";
            let kind = if rng.gen_bool(0.5) { "const0" } else { "const1" };
            gates.push(("flag".into(), kind.into(), vec![]));
        }
        blacklist.push("flag".to_string());
    }

    let mut text = String::new();
    let _ = writeln!(text, ".name rand{seed}");
    let _ = writeln!(text, ".inputs {}", inputs.join(" "));
    let flag_out = if params.with_flag { " flag" } else { "" };
    let _ = writeln!(text, ".outputs {}{flag_out}", outputs.join(" "));
    if params.with_flag {
        text.push_str(".flag flag\n");
    }
    for r in &regs {
        let _ = writeln!(text, ".reg {r} init={}", u8::from(rng.gen_bool(0.5)));
    }
    for (n, k, ops) in &gates {
        let _ = writeln!(text, "gate {n} = {k}({})", ops.join(", "));
    }
    for (r, n) in regs.iter().zip(&nexts) {
        let _ = writeln!(text, "next {r} = {n}");
    }
    let k = rng.gen_range(1..=2);
    GeneratedInstance {
        netlist: parse_netlist(&text).expect("generated netlist is well formed"),
        expected: None,
        provenance: format!(
            "random(seed={seed}, max_gates={}, max_regs={}, inputs={ni}, flag={strategy})",
            params.max_gates, params.max_regs
        ),
        suggested_blacklist: blacklist,
        suggested_k: k,
    }
}
