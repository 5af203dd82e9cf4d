//! Cycle-accurate evaluation of golden and faulted circuits, and ground-truth
//! effectiveness checks.
//!
//! Evaluation is bit-parallel: each `u64` lane carries one input sequence,
//! so exhaustive checks visit 64 sequences per pass over the frame.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::circuit::{GateInstance, SequentialCircuit, Site, UnrolledCircuit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub enum FaultType {
    #[serde(rename = "s")]
    Set,
    #[serde(rename = "r")]
    Reset,
    #[serde(rename = "bf")]
    BitFlip,
}

impl FaultType {
    /// Canonical order s < r < bf.
    pub const ALL: [FaultType; 3] = [FaultType::Set, FaultType::Reset, FaultType::BitFlip];

    pub fn keyword(self) -> &'static str {
        match self {
            FaultType::Set => "s",
            FaultType::Reset => "r",
            FaultType::BitFlip => "bf",
        }
    }

    pub fn from_keyword(s: &str) -> Option<FaultType> {
        FaultType::ALL.into_iter().find(|t| t.keyword() == s)
    }

    /// Value of a faulted signal whose fault-free value is `v`.
    #[inline]
    pub fn apply_word(self, v: u64) -> u64 {
        match self {
            FaultType::Set => !0,
            FaultType::Reset => 0,
            FaultType::BitFlip => !v,
        }
    }
}

impl fmt::Display for FaultType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FaultEvent {
    pub instance: GateInstance,
    pub fault_type: FaultType,
}

impl FaultEvent {
    pub fn new(instance: GateInstance, fault_type: FaultType) -> Self {
        FaultEvent { instance, fault_type }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("fault targets unknown instance {0}")]
    UnknownInstance(String),
    #[error("instance {0} is faulted more than once")]
    DuplicateInstance(String),
    #[error("fault vector is empty")]
    EmptyVector,
    #[error("{0} input bits is too many for exhaustive search (limit {1})")]
    TooLargeForExhaustive(usize, usize),
    #[error("malformed fault event `{0}` (expected name@cycle:type)")]
    BadEvent(String),
}

/// A set of fault events with pairwise-distinct instances.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct FaultVector {
    events: BTreeMap<GateInstance, FaultType>,
}

impl FaultVector {
    pub fn new<I: IntoIterator<Item = FaultEvent>>(events: I) -> Result<Self, SimError> {
        let mut map = BTreeMap::new();
        for e in events {
            if map.insert(e.instance, e.fault_type).is_some() {
                return Err(SimError::DuplicateInstance(format!("{:?}", e.instance)));
            }
        }
        Ok(FaultVector { events: map })
    }

    pub fn empty() -> Self {
        FaultVector::default()
    }

    /// Parses events written as `name@cycle:type`, e.g. `z@1:bf`.
    pub fn parse<S: AsRef<str>>(circuit: &SequentialCircuit, events: &[S]) -> Result<Self, SimError> {
        let mut out = Vec::new();
        for e in events {
            let e = e.as_ref();
            let (inst, ty) = e.rsplit_once(':').ok_or_else(|| SimError::BadEvent(e.to_string()))?;
            let instance = circuit.parse_instance(inst).map_err(|_| SimError::BadEvent(e.to_string()))?;
            let fault_type = FaultType::from_keyword(ty).ok_or_else(|| SimError::BadEvent(e.to_string()))?;
            out.push(FaultEvent { instance, fault_type });
        }
        FaultVector::new(out).map_err(|err| match err {
            SimError::DuplicateInstance(_) => SimError::DuplicateInstance(events.iter().map(|e| e.as_ref()).collect::<Vec<_>>().join(",")),
            other => other,
        })
    }

    pub fn events(&self) -> impl Iterator<Item = FaultEvent> + '_ {
        self.events.iter().map(|(&instance, &fault_type)| FaultEvent { instance, fault_type })
    }

    pub fn get(&self, inst: GateInstance) -> Option<FaultType> {
        self.events.get(&inst).copied()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Number of distinct cycles carrying an event.
    pub fn sharp_clk(&self) -> usize {
        self.events.keys().map(|i| i.cycle).collect::<BTreeSet<_>>().len()
    }

    /// Largest number of events in any single cycle.
    pub fn max_epc(&self) -> usize {
        let mut per: BTreeMap<usize, usize> = BTreeMap::new();
        for i in self.events.keys() {
            *per.entry(i.cycle).or_default() += 1;
        }
        per.values().copied().max().unwrap_or(0)
    }

    /// `name@cycle:type` strings in event order.
    pub fn describe(&self, circuit: &SequentialCircuit) -> Vec<String> {
        self.events().map(|e| format!("{}:{}", circuit.instance_name(e.instance), e.fault_type)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleTrace {
    pub inputs: Vec<bool>,
    /// Non-flag outputs in declaration order.
    pub outputs: Vec<bool>,
    pub flag: bool,
    /// Register state after the cycle.
    pub state: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub cycles: Vec<CycleTrace>,
}

pub fn bits_to_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.cycles.iter().enumerate() {
            writeln!(
                f,
                "cycle {}: in={} out={} flag={}",
                i + 1,
                bits_to_string(&c.inputs),
                bits_to_string(&c.outputs),
                u8::from(c.flag)
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EffectivenessResult {
    pub effective: bool,
    pub divergence_cycle: Option<usize>,
    pub differing_output: Option<String>,
}

/// Dense per-instance fault table for the packed evaluator.
pub(crate) struct FaultTable {
    nets: usize,
    table: Vec<Option<FaultType>>,
}

impl FaultTable {
    pub(crate) fn new(frame: &SequentialCircuit, k: usize) -> Self {
        FaultTable { nets: frame.num_nets(), table: vec![None; frame.num_nets() * k] }
    }

    pub(crate) fn set(&mut self, frame: &SequentialCircuit, inst: GateInstance, f: Option<FaultType>) {
        let net = frame.site_net(inst.site).index();
        self.table[(inst.cycle - 1) * self.nets + net] = f;
    }

    pub(crate) fn from_map<'a, I>(frame: &SequentialCircuit, k: usize, faults: I) -> Self
    where
        I: IntoIterator<Item = (&'a GateInstance, &'a FaultType)>,
    {
        let mut t = FaultTable::new(frame, k);
        for (&inst, &f) in faults {
            t.set(frame, inst, Some(f));
        }
        t
    }

    #[inline]
    fn get(&self, cycle: usize, net: usize) -> Option<FaultType> {
        self.table[(cycle - 1) * self.nets + net]
    }
}

/// Packed run: `outputs[cycle][output]`, `states[cycle][register]`, cycles
/// 0-based.
pub(crate) struct PackedRun {
    pub outputs: Vec<Vec<u64>>,
    pub states: Vec<Vec<u64>>,
}

/// Evaluates `k` cycles; `inputs[cycle][input]` holds one lane per input
/// sequence.
pub(crate) fn simulate_packed(
    frame: &SequentialCircuit,
    k: usize,
    faults: &FaultTable,
    inputs: &[Vec<u64>],
    scratch: &mut Vec<u64>,
) -> PackedRun {
    let ni = frame.inputs.len();
    let nr = frame.registers.len();
    scratch.clear();
    scratch.resize(frame.num_nets(), 0);
    let vals = scratch;
    let mut state: Vec<u64> = frame.registers.iter().map(|r| if r.init { !0 } else { 0 }).collect();
    let mut outputs = Vec::with_capacity(k);
    let mut states = Vec::with_capacity(k);
    for cycle in 1..=k {
        vals[..ni].copy_from_slice(&inputs[cycle - 1]);
        for r in 0..nr {
            let v = state[r];
            vals[ni + r] = match faults.get(cycle, ni + r) {
                Some(f) => f.apply_word(v),
                None => v,
            };
        }
        for &g in frame.topo_order() {
            let gate = &frame.gates[g];
            let net = ni + nr + g;
            let a = gate.operands.first().map_or(0, |n| vals[n.index()]);
            let b = gate.operands.get(1).map_or(0, |n| vals[n.index()]);
            let v = gate.kind.eval_word(a, b);
            vals[net] = match faults.get(cycle, net) {
                Some(f) => f.apply_word(v),
                None => v,
            };
        }
        outputs.push(frame.outputs.iter().map(|o| vals[o.net.index()]).collect());
        for (r, reg) in frame.registers.iter().enumerate() {
            state[r] = vals[reg.next.index()];
        }
        states.push(state.clone());
    }
    PackedRun { outputs, states }
}

/// Enumerates input sequences in lexicographic order of the bit string
/// `x_1 x_2 .. x_k` (first input most significant), 64 per word.
pub(crate) struct InputSpace {
    pub inputs: usize,
    pub k: usize,
}

impl InputSpace {
    pub(crate) fn bits(&self) -> usize {
        self.inputs * self.k
    }

    pub(crate) fn sequences(&self) -> u64 {
        1u64 << self.bits()
    }

    pub(crate) fn words(&self) -> u64 {
        self.sequences().div_ceil(64)
    }

    pub(crate) fn lane_mask(&self, word: u64) -> u64 {
        let remaining = self.sequences() - word * 64;
        if remaining >= 64 {
            !0
        } else {
            (1u64 << remaining) - 1
        }
    }

    pub(crate) fn word(&self, word: u64) -> Vec<Vec<u64>> {
        let total = self.bits();
        let mut out = vec![vec![0u64; self.inputs]; self.k];
        for lane in 0..64u64 {
            let n = word * 64 + lane;
            if n >= self.sequences() {
                break;
            }
            for c in 0..self.k {
                for j in 0..self.inputs {
                    let shift = total - 1 - (c * self.inputs + j);
                    if (n >> shift) & 1 == 1 {
                        out[c][j] |= 1 << lane;
                    }
                }
            }
        }
        out
    }

    pub(crate) fn sequence(&self, n: u64) -> Vec<Vec<bool>> {
        let total = self.bits();
        (0..self.k)
            .map(|c| (0..self.inputs).map(|j| (n >> (total - 1 - (c * self.inputs + j))) & 1 == 1).collect())
            .collect()
    }
}

/// Pairs each data output of the protected circuit with the reference
/// output of the same name.
pub(crate) fn pair_outputs(
    reference: &SequentialCircuit,
    protected: &SequentialCircuit,
) -> Result<Vec<(usize, usize)>, SimError> {
    let mut pairs = Vec::new();
    for p in protected.data_outputs() {
        let name = &protected.outputs[p].name;
        let r = reference
            .data_outputs()
            .find(|&r| &reference.outputs[r].name == name)
            .ok_or_else(|| SimError::ShapeMismatch(format!("reference has no output `{name}`")))?;
        pairs.push((r, p));
    }
    if pairs.len() != reference.data_outputs().count() {
        return Err(SimError::ShapeMismatch("reference and protected outputs differ".into()));
    }
    if reference.inputs != protected.inputs {
        return Err(SimError::ShapeMismatch("reference and protected inputs differ".into()));
    }
    Ok(pairs)
}

/// Lanes where some data output diverges at a cycle at which (and before
/// which) the faulty flag is still 0.
pub(crate) fn effective_lanes(
    reference: &PackedRun,
    faulty: &PackedRun,
    pairs: &[(usize, usize)],
    flag: Option<usize>,
) -> u64 {
    let mut effective = 0u64;
    let mut decided = 0u64;
    let mut flag_seen = 0u64;
    for (r, f) in reference.outputs.iter().zip(&faulty.outputs) {
        if let Some(fl) = flag {
            flag_seen |= f[fl];
        }
        let diff = pairs.iter().fold(0u64, |acc, &(ri, pi)| acc | (r[ri] ^ f[pi]));
        let fresh = diff & !decided;
        effective |= fresh & !flag_seen;
        decided |= diff;
    }
    effective
}

fn check_shape(circuit: &UnrolledCircuit, inputs: &[Vec<bool>]) -> Result<(), SimError> {
    if inputs.len() != circuit.k() {
        return Err(SimError::ShapeMismatch(format!(
            "expected {} cycles of inputs, got {}",
            circuit.k(),
            inputs.len()
        )));
    }
    let ni = circuit.frame().inputs.len();
    if let Some(bad) = inputs.iter().position(|v| v.len() != ni) {
        return Err(SimError::ShapeMismatch(format!(
            "cycle {} has {} input bits, expected {ni}",
            bad + 1,
            inputs[bad].len()
        )));
    }
    Ok(())
}

fn broadcast(inputs: &[Vec<bool>]) -> Vec<Vec<u64>> {
    inputs.iter().map(|c| c.iter().map(|&b| if b { !0 } else { 0 }).collect()).collect()
}

fn run_lane0(circuit: &UnrolledCircuit, inputs: &[Vec<bool>]) -> PackedRun {
    let table = FaultTable::from_map(circuit.frame(), circuit.k(), circuit.faults());
    simulate_packed(circuit.frame(), circuit.k(), &table, &broadcast(inputs), &mut Vec::new())
}

pub fn run_trace(circuit: &UnrolledCircuit, inputs: &[Vec<bool>]) -> Result<Trace, SimError> {
    check_shape(circuit, inputs)?;
    let frame = circuit.frame();
    let run = run_lane0(circuit, inputs);
    let cycles = (0..circuit.k())
        .map(|c| CycleTrace {
            inputs: inputs[c].clone(),
            outputs: frame.data_outputs().map(|o| run.outputs[c][o] & 1 == 1).collect(),
            flag: frame.flag.is_some_and(|f| run.outputs[c][f] & 1 == 1),
            state: run.states[c].iter().map(|&s| s & 1 == 1).collect(),
        })
        .collect();
    Ok(Trace { cycles })
}

/// Returns a copy of `circuit` with every event of `v` applied on top of
/// the faults it already carries.
pub fn apply_fault_vector(circuit: &UnrolledCircuit, v: &FaultVector) -> Result<UnrolledCircuit, SimError> {
    let mut faults = circuit.faults().clone();
    for e in v.events() {
        if !circuit.contains(e.instance) {
            return Err(SimError::UnknownInstance(format!("{:?}", e.instance)));
        }
        if faults.insert(e.instance, e.fault_type).is_some() {
            return Err(SimError::DuplicateInstance(circuit.frame().instance_name(e.instance)));
        }
    }
    Ok(circuit.with_faults(faults))
}

pub fn check_effectiveness(
    golden: &UnrolledCircuit,
    v: &FaultVector,
    inputs: &[Vec<bool>],
) -> Result<EffectivenessResult, SimError> {
    check_effectiveness_against(golden, golden, v, inputs)
}

/// Effectiveness of `v` on `protected`, judged against the outputs of
/// `reference` (a separate unprotected design, or `protected` itself).
pub fn check_effectiveness_against(
    reference: &UnrolledCircuit,
    protected: &UnrolledCircuit,
    v: &FaultVector,
    inputs: &[Vec<bool>],
) -> Result<EffectivenessResult, SimError> {
    if v.is_empty() {
        return Err(SimError::EmptyVector);
    }
    check_shape(protected, inputs)?;
    if reference.k() != protected.k() {
        return Err(SimError::ShapeMismatch("reference and protected unroll depths differ".into()));
    }
    let pairs = pair_outputs(reference.frame(), protected.frame())?;
    let faulty = apply_fault_vector(protected, v)?;
    let golden_run = run_lane0(reference, inputs);
    let faulty_run = run_lane0(&faulty, inputs);
    let frame = protected.frame();
    for c in 0..protected.k() {
        if let Some(f) = frame.flag {
            if faulty_run.outputs[c][f] & 1 == 1 {
                break;
            }
        }
        if let Some(&(_, p)) =
            pairs.iter().find(|&&(r, p)| (golden_run.outputs[c][r] ^ faulty_run.outputs[c][p]) & 1 == 1)
        {
            return Ok(EffectivenessResult {
                effective: true,
                divergence_cycle: Some(c + 1),
                differing_output: Some(frame.outputs[p].name.clone()),
            });
        }
    }
    Ok(EffectivenessResult { effective: false, divergence_cycle: None, differing_output: None })
}

/// Largest input space (bits across all cycles) searched exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 24;

/// First input sequence, in lexicographic order, on which `v` is effective.
pub fn find_witness(golden: &UnrolledCircuit, v: &FaultVector) -> Result<Option<Vec<Vec<bool>>>, SimError> {
    if v.is_empty() {
        return Err(SimError::EmptyVector);
    }
    let frame = golden.frame();
    let space = InputSpace { inputs: frame.inputs.len(), k: golden.k() };
    if space.bits() > EXHAUSTIVE_LIMIT {
        return Err(SimError::TooLargeForExhaustive(space.bits(), EXHAUSTIVE_LIMIT));
    }
    let faulty = apply_fault_vector(golden, v)?;
    let pairs = pair_outputs(frame, frame)?;
    let golden_table = FaultTable::from_map(frame, golden.k(), golden.faults());
    let faulty_table = FaultTable::from_map(frame, golden.k(), faulty.faults());
    let mut scratch = Vec::new();
    for w in 0..space.words() {
        let inputs = space.word(w);
        let g = simulate_packed(frame, golden.k(), &golden_table, &inputs, &mut scratch);
        let f = simulate_packed(frame, golden.k(), &faulty_table, &inputs, &mut scratch);
        let hits = effective_lanes(&g, &f, &pairs, frame.flag) & space.lane_mask(w);
        if hits != 0 {
            let n = w * 64 + u64::from(hits.trailing_zeros());
            return Ok(Some(space.sequence(n)));
        }
    }
    Ok(None)
}

/// Whether `site` is a register read; used by callers that need to treat
/// register instances as `buf` gates.
pub fn is_register_site(site: Site) -> bool {
    matches!(site, Site::Register(_))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_and_validate, unroll};
    use crate::netlist_io::parse_netlist;

    fn rect() -> UnrolledCircuit {
        let doc = parse_netlist(include_str!("../fixtures/rect_parity.nl")).unwrap();
        unroll(&build_and_validate(&doc).unwrap(), 1).unwrap()
    }

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    fn vector(c: &UnrolledCircuit, ev: &[&str]) -> FaultVector {
        FaultVector::parse(c.frame(), ev).unwrap()
    }

    #[test]
    fn golden_sbox_rows() {
        let c = rect();
        let t = run_trace(&c, &[bits("0000")]).unwrap();
        assert_eq!(bits_to_string(&t.cycles[0].outputs), "0110");
        assert!(!t.cycles[0].flag);
        let t = run_trace(&c, &[bits("1111")]).unwrap();
        assert_eq!(bits_to_string(&t.cycles[0].outputs), "0010");
    }

    #[test]
    fn one_cycle_delay() {
        let doc = parse_netlist(".name d\n.inputs in\n.outputs out\n.reg r init=0\ngate out = buf(r)\nnext r = in\n")
            .unwrap();
        let c = unroll(&build_and_validate(&doc).unwrap(), 2).unwrap();
        let t = run_trace(&c, &[vec![true], vec![false]]).unwrap();
        assert_eq!(t.cycles[0].outputs, [false]);
        assert_eq!(t.cycles[1].outputs, [true]);
        assert_eq!(t.to_string(), "cycle 1: in=1 out=0 flag=0\ncycle 2: in=0 out=1 flag=0\n");
    }

    #[test]
    fn shape_mismatch() {
        let c = rect();
        assert!(matches!(run_trace(&c, &[bits("000")]), Err(SimError::ShapeMismatch(_))));
        assert!(matches!(run_trace(&c, &[]), Err(SimError::ShapeMismatch(_))));
    }

    #[test]
    fn faulted_rows() {
        let c = rect();
        let f = apply_fault_vector(&c, &vector(&c, &["s7@1:s"])).unwrap();
        let t = run_trace(&f, &[bits("0000")]).unwrap();
        assert_eq!(bits_to_string(&t.cycles[0].outputs), "1110");
        let f = apply_fault_vector(&c, &vector(&c, &["z@1:bf"])).unwrap();
        let t = run_trace(&f, &[bits("0100")]).unwrap();
        assert_eq!(bits_to_string(&t.cycles[0].outputs), "0000");
    }

    #[test]
    fn empty_vector_is_identity() {
        let c = rect();
        let f = apply_fault_vector(&c, &FaultVector::empty()).unwrap();
        for n in 0..16u8 {
            let x: Vec<bool> = (0..4).map(|i| (n >> (3 - i)) & 1 == 1).collect();
            assert_eq!(run_trace(&c, &[x.clone()]).unwrap(), run_trace(&f, &[x]).unwrap());
        }
    }

    #[test]
    fn apply_rejects_bad_instances() {
        let c = rect();
        let v = vector(&c, &["z@1:bf"]);
        let f = apply_fault_vector(&c, &v).unwrap();
        assert!(matches!(apply_fault_vector(&f, &v), Err(SimError::DuplicateInstance(_))));
        let out_of_range = FaultVector::new([FaultEvent::new(GateInstance::gate(2, 0), FaultType::Set)]).unwrap();
        assert!(matches!(apply_fault_vector(&c, &out_of_range), Err(SimError::UnknownInstance(_))));
        assert!(matches!(
            FaultVector::parse(c.frame(), &["z@1:bf", "z@1:s"]),
            Err(SimError::DuplicateInstance(_))
        ));
        assert!(matches!(FaultVector::parse(c.frame(), &["z@1"]), Err(SimError::BadEvent(_))));
    }

    #[test]
    fn bit_flip_kind_involution() {
        let c = rect();
        let z = c.frame().parse_instance("z@1").unwrap();
        let f = apply_fault_vector(&c, &FaultVector::new([FaultEvent::new(z, FaultType::BitFlip)]).unwrap()).unwrap();
        assert_eq!(f.instance_kind(z), crate::GateKind::Xnor);
        assert_eq!(f.instance_kind(z).complement(), c.instance_kind(z));
    }

    #[test]
    fn effectiveness_examples() {
        let c = rect();
        let r = check_effectiveness(&c, &vector(&c, &["z@1:s"]), &[bits("0000")]).unwrap();
        assert!(r.effective);
        assert_eq!(r.divergence_cycle, Some(1));
        assert_eq!(r.differing_output.as_deref(), Some("x"));
        let r = check_effectiveness(&c, &vector(&c, &["s7@1:s"]), &[bits("0000")]).unwrap();
        assert!(!r.effective);
        assert_eq!(check_effectiveness(&c, &FaultVector::empty(), &[bits("0000")]), Err(SimError::EmptyVector));
    }

    #[test]
    fn witnesses() {
        let c = rect();
        let w = find_witness(&c, &vector(&c, &["z@1:r"])).unwrap().unwrap();
        assert_eq!(bits_to_string(&w[0]), "0001");
        assert_eq!(find_witness(&c, &vector(&c, &["s7@1:bf"])).unwrap(), None);

        let inputs: Vec<String> = (0..30).map(|i| format!("i{i}")).collect();
        let src = format!(".name wide\n.inputs {}\n.outputs g\ngate g = and(i0, i1)\n", inputs.join(" "));
        let wide = unroll(&build_and_validate(&parse_netlist(&src).unwrap()).unwrap(), 1).unwrap();
        let v = vector(&wide, &["g@1:bf"]);
        assert_eq!(find_witness(&wide, &v), Err(SimError::TooLargeForExhaustive(30, EXHAUSTIVE_LIMIT)));
    }

    #[test]
    fn vector_statistics() {
        let doc = parse_netlist(".name s\n.inputs in\n.outputs g\n.reg r init=0\ngate g = xor(in, r)\ngate h = not(g)\nnext r = h\n")
            .unwrap();
        let c = unroll(&build_and_validate(&doc).unwrap(), 3).unwrap();
        let v = vector(&c, &["g@1:bf", "h@1:s", "r@3:r"]);
        assert_eq!(v.sharp_clk(), 2);
        assert_eq!(v.max_epc(), 2);
        assert_eq!(v.describe(c.frame()), ["g@1:bf", "h@1:s", "r@3:r"]);
    }

    #[test]
    fn input_space_order() {
        let s = InputSpace { inputs: 2, k: 2 };
        assert_eq!(s.sequences(), 16);
        assert_eq!(s.words(), 1);
        assert_eq!(s.lane_mask(0), 0xffff);
        assert_eq!(s.sequence(0b0110), vec![vec![false, true], vec![true, false]]);
        let w = s.word(0);
        // lane 6 = 0110: cycle 1 input 1 and cycle 2 input 0 set
        assert_eq!((w[0][0] >> 6) & 1, 0);
        assert_eq!((w[0][1] >> 6) & 1, 1);
        assert_eq!((w[1][0] >> 6) & 1, 1);
        assert_eq!((w[1][1] >> 6) & 1, 0);
    }
}
