//! Validated circuit graph, cycle unrolling, and fault-location sets.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::netlist_io::{NetlistDoc, ParseError};
use crate::simulator::FaultType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    And,
    Or,
    Nand,
    Nor,
    Xor,
    Xnor,
    Not,
    Buf,
    Const1,
    Const0,
}

impl GateKind {
    pub const ALL: [GateKind; 10] = [
        GateKind::And,
        GateKind::Or,
        GateKind::Nand,
        GateKind::Nor,
        GateKind::Xor,
        GateKind::Xnor,
        GateKind::Not,
        GateKind::Buf,
        GateKind::Const1,
        GateKind::Const0,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateKind::Not | GateKind::Buf => 1,
            GateKind::Const1 | GateKind::Const0 => 0,
            _ => 2,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            GateKind::And => "and",
            GateKind::Or => "or",
            GateKind::Nand => "nand",
            GateKind::Nor => "nor",
            GateKind::Xor => "xor",
            GateKind::Xnor => "xnor",
            GateKind::Not => "not",
            GateKind::Buf => "buf",
            GateKind::Const1 => "const1",
            GateKind::Const0 => "const0",
        }
    }

    pub fn from_keyword(s: &str) -> Option<GateKind> {
        GateKind::ALL.into_iter().find(|k| k.keyword() == s)
    }

    /// The kind computing the negated function. An involution.
    pub fn complement(self) -> GateKind {
        match self {
            GateKind::And => GateKind::Nand,
            GateKind::Nand => GateKind::And,
            GateKind::Or => GateKind::Nor,
            GateKind::Nor => GateKind::Or,
            GateKind::Xor => GateKind::Xnor,
            GateKind::Xnor => GateKind::Xor,
            GateKind::Not => GateKind::Buf,
            GateKind::Buf => GateKind::Not,
            GateKind::Const1 => GateKind::Const0,
            GateKind::Const0 => GateKind::Const1,
        }
    }

    /// The kind after a fault of type `fault`: set and reset drop the
    /// operands and become constants, bit-flip complements.
    pub fn faulted(self, fault: FaultType) -> GateKind {
        match fault {
            FaultType::Set => GateKind::Const1,
            FaultType::Reset => GateKind::Const0,
            FaultType::BitFlip => self.complement(),
        }
    }

    /// Bit-parallel evaluation; unused operands are ignored.
    #[inline]
    pub fn eval_word(self, a: u64, b: u64) -> u64 {
        match self {
            GateKind::And => a & b,
            GateKind::Or => a | b,
            GateKind::Nand => !(a & b),
            GateKind::Nor => !(a | b),
            GateKind::Xor => a ^ b,
            GateKind::Xnor => !(a ^ b),
            GateKind::Not => !a,
            GateKind::Buf => a,
            GateKind::Const1 => !0,
            GateKind::Const0 => 0,
        }
    }

    pub fn eval(self, inputs: &[bool]) -> bool {
        let a = inputs.first().copied().unwrap_or(false) as u64;
        let b = inputs.get(1).copied().unwrap_or(false) as u64;
        self.eval_word(a, b) & 1 == 1
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Index into the circuit's net table: inputs, then register outputs, then
/// gates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NetId(pub u32);

impl NetId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetSource {
    Input(usize),
    Register(usize),
    Gate(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    pub name: String,
    pub kind: GateKind,
    pub operands: Vec<NetId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Register {
    pub name: String,
    pub init: bool,
    pub next: NetId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub name: String,
    pub net: NetId,
}

/// A consumer of a net within one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Successor {
    Gate(usize),
    Output(usize),
    /// The net drives this register's next state.
    Register(usize),
}

/// One combinational frame plus registers; every cycle of the unrolled
/// circuit is a copy of the frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequentialCircuit {
    pub name: String,
    pub inputs: Vec<String>,
    pub registers: Vec<Register>,
    pub gates: Vec<Gate>,
    pub outputs: Vec<Output>,
    /// Index into `outputs` of the error flag, if the design has one.
    pub flag: Option<usize>,
    pub default_cycles: Option<usize>,
    topo_order: Vec<usize>,
    successors: Vec<Vec<Successor>>,
    by_name: HashMap<String, NetId>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CircuitError {
    #[error(transparent)]
    Netlist(#[from] ParseError),
    #[error("combinational cycle through {}", .0.join(" -> "))]
    CombinationalCycle(Vec<String>),
    #[error("gate `{0}` has the wrong number of operands for its kind")]
    ArityMismatch(String),
    #[error("unroll depth must be at least 1")]
    InvalidK,
    #[error("unknown gate or register `{0}`")]
    UnknownName(String),
    #[error("malformed gate instance `{0}` (expected name@cycle)")]
    BadInstance(String),
}

pub fn build_and_validate(doc: &NetlistDoc) -> Result<SequentialCircuit, CircuitError> {
    for g in &doc.gates {
        if g.operands.len() != g.kind.arity() {
            return Err(CircuitError::ArityMismatch(g.name.clone()));
        }
    }
    doc.validate()?;

    let ni = doc.inputs.len();
    let nr = doc.registers.len();
    let mut by_name = HashMap::new();
    for (i, n) in doc.inputs.iter().enumerate() {
        by_name.insert(n.clone(), NetId(i as u32));
    }
    for (i, r) in doc.registers.iter().enumerate() {
        by_name.insert(r.name.clone(), NetId((ni + i) as u32));
    }
    for (i, g) in doc.gates.iter().enumerate() {
        by_name.insert(g.name.clone(), NetId((ni + nr + i) as u32));
    }

    let gates: Vec<Gate> = doc
        .gates
        .iter()
        .map(|g| Gate {
            name: g.name.clone(),
            kind: g.kind,
            operands: g.operands.iter().map(|o| by_name[o]).collect(),
        })
        .collect();
    let registers: Vec<Register> = doc
        .registers
        .iter()
        .map(|r| Register { name: r.name.clone(), init: r.init, next: by_name[&doc.next_state[&r.name]] })
        .collect();
    let outputs: Vec<Output> =
        doc.outputs.iter().map(|o| Output { name: o.clone(), net: by_name[o] }).collect();
    let flag = doc.flag_output.as_ref().map(|f| doc.outputs.iter().position(|o| o == f).unwrap());

    let topo_order = topo_sort(&gates, ni + nr)?;

    let mut successors = vec![Vec::new(); ni + nr + gates.len()];
    for (gi, g) in gates.iter().enumerate() {
        for op in &g.operands {
            let s = Successor::Gate(gi);
            if !successors[op.index()].contains(&s) {
                successors[op.index()].push(s);
            }
        }
    }
    for (oi, o) in outputs.iter().enumerate() {
        successors[o.net.index()].push(Successor::Output(oi));
    }
    for (ri, r) in registers.iter().enumerate() {
        successors[r.next.index()].push(Successor::Register(ri));
    }

    Ok(SequentialCircuit {
        name: doc.name.clone(),
        inputs: doc.inputs.clone(),
        registers,
        gates,
        outputs,
        flag,
        default_cycles: doc.default_cycles,
        topo_order,
        successors,
        by_name,
    })
}

/// DFS post-order over operands. On a back edge, returns the cycle as the
/// list of gate names along the DFS stack.
fn topo_sort(gates: &[Gate], gate_base: usize) -> Result<Vec<usize>, CircuitError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Grey,
        Black,
    }
    let mut mark = vec![Mark::White; gates.len()];
    let mut order = Vec::with_capacity(gates.len());
    let gate_of = |n: NetId| n.index().checked_sub(gate_base);

    for root in 0..gates.len() {
        if mark[root] != Mark::White {
            continue;
        }
        // (gate, next operand to visit)
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        mark[root] = Mark::Grey;
        while let Some(&mut (g, ref mut next)) = stack.last_mut() {
            if let Some(&op) = gates[g].operands.get(*next) {
                *next += 1;
                if let Some(h) = gate_of(op) {
                    match mark[h] {
                        Mark::White => {
                            mark[h] = Mark::Grey;
                            stack.push((h, 0));
                        }
                        Mark::Grey => {
                            let start = stack.iter().position(|&(s, _)| s == h).unwrap();
                            let path = stack[start..].iter().map(|&(s, _)| gates[s].name.clone()).collect();
                            return Err(CircuitError::CombinationalCycle(path));
                        }
                        Mark::Black => {}
                    }
                }
            } else {
                mark[g] = Mark::Black;
                order.push(g);
                stack.pop();
            }
        }
    }
    Ok(order)
}

/// A gate or register of the frame. Register sites denote the value read
/// from the register during a cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Site {
    Gate(usize),
    Register(usize),
}

/// `(cycle, site)`; cycles are 1-based. A register instance at cycle σ is
/// the register value consumed during cycle σ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GateInstance {
    pub cycle: usize,
    pub site: Site,
}

impl GateInstance {
    pub fn gate(cycle: usize, gate: usize) -> Self {
        GateInstance { cycle, site: Site::Gate(gate) }
    }

    pub fn register(cycle: usize, reg: usize) -> Self {
        GateInstance { cycle, site: Site::Register(reg) }
    }

    pub fn is_register(&self) -> bool {
        matches!(self.site, Site::Register(_))
    }
}

impl SequentialCircuit {
    pub fn num_nets(&self) -> usize {
        self.inputs.len() + self.registers.len() + self.gates.len()
    }

    pub fn gate_net(&self, gate: usize) -> NetId {
        NetId((self.inputs.len() + self.registers.len() + gate) as u32)
    }

    pub fn register_net(&self, reg: usize) -> NetId {
        NetId((self.inputs.len() + reg) as u32)
    }

    pub fn site_net(&self, site: Site) -> NetId {
        match site {
            Site::Gate(g) => self.gate_net(g),
            Site::Register(r) => self.register_net(r),
        }
    }

    pub fn source(&self, net: NetId) -> NetSource {
        let ni = self.inputs.len();
        let nr = self.registers.len();
        let i = net.index();
        if i < ni {
            NetSource::Input(i)
        } else if i < ni + nr {
            NetSource::Register(i - ni)
        } else {
            NetSource::Gate(i - ni - nr)
        }
    }

    pub fn net(&self, name: &str) -> Option<NetId> {
        self.by_name.get(name).copied()
    }

    pub fn net_name(&self, net: NetId) -> &str {
        match self.source(net) {
            NetSource::Input(i) => &self.inputs[i],
            NetSource::Register(r) => &self.registers[r].name,
            NetSource::Gate(g) => &self.gates[g].name,
        }
    }

    pub fn site(&self, name: &str) -> Option<Site> {
        match self.source(self.net(name)?) {
            NetSource::Input(_) => None,
            NetSource::Register(r) => Some(Site::Register(r)),
            NetSource::Gate(g) => Some(Site::Gate(g)),
        }
    }

    pub fn site_name(&self, site: Site) -> &str {
        match site {
            Site::Gate(g) => &self.gates[g].name,
            Site::Register(r) => &self.registers[r].name,
        }
    }

    /// Gate indices, operands before consumers.
    pub fn topo_order(&self) -> &[usize] {
        &self.topo_order
    }

    /// Distinct consumers of `net` within a cycle.
    pub fn successors(&self, net: NetId) -> &[Successor] {
        &self.successors[net.index()]
    }

    /// Indices of the outputs other than the flag.
    pub fn data_outputs(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.outputs.len()).filter(move |&i| Some(i) != self.flag)
    }

    pub fn flag_name(&self) -> Option<&str> {
        self.flag.map(|i| self.outputs[i].name.as_str())
    }

    pub fn instance_name(&self, inst: GateInstance) -> String {
        format!("{}@{}", self.site_name(inst.site), inst.cycle)
    }

    /// Parses the canonical `name@cycle` form.
    pub fn parse_instance(&self, text: &str) -> Result<GateInstance, CircuitError> {
        let (name, cycle) =
            text.rsplit_once('@').ok_or_else(|| CircuitError::BadInstance(text.to_string()))?;
        let cycle: usize = cycle.parse().map_err(|_| CircuitError::BadInstance(text.to_string()))?;
        if cycle == 0 {
            return Err(CircuitError::BadInstance(text.to_string()));
        }
        let site = self.site(name).ok_or_else(|| CircuitError::UnknownName(name.to_string()))?;
        Ok(GateInstance { cycle, site })
    }
}

/// Fault locations class: logic gates, registers, or both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Location {
    Comb,
    Reg,
    Both,
}

impl Location {
    pub fn keyword(self) -> &'static str {
        match self {
            Location::Comb => "c",
            Location::Reg => "r",
            Location::Both => "cr",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Location> {
        match s {
            "c" => Some(Location::Comb),
            "r" => Some(Location::Reg),
            "cr" => Some(Location::Both),
            _ => None,
        }
    }

    pub fn includes_logic(self) -> bool {
        self != Location::Reg
    }

    pub fn includes_registers(self) -> bool {
        self != Location::Comb
    }
}

/// Adversary budget: at most `n_e` events per cycle, events in at most
/// `n_c` cycles, types drawn from `types`, sites restricted by `location`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FaultResistanceModel {
    pub n_e: usize,
    pub n_c: usize,
    pub types: BTreeSet<FaultType>,
    pub location: Location,
}

impl FaultResistanceModel {
    pub fn new(n_e: usize, n_c: usize, types: &[FaultType], location: Location) -> Self {
        FaultResistanceModel { n_e, n_c, types: types.iter().copied().collect(), location }
    }
}

impl fmt::Display for FaultResistanceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let types: Vec<&str> = self.types.iter().map(|t| t.keyword()).collect();
        write!(f, "zeta({}, {}, {{{}}}, {})", self.n_e, self.n_c, types.join(","), self.location.keyword())
    }
}

/// Gates and registers assumed protected against fault injection.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Blacklist(BTreeSet<String>);

impl Blacklist {
    pub fn new<I, S>(names: I, circuit: &SequentialCircuit) -> Result<Self, CircuitError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set = BTreeSet::new();
        for n in names {
            let n = n.into();
            if circuit.site(&n).is_none() {
                return Err(CircuitError::UnknownName(n));
            }
            set.insert(n);
        }
        Ok(Blacklist(set))
    }

    pub fn empty() -> Self {
        Blacklist(BTreeSet::new())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains(name)
    }

    pub fn names(&self) -> &BTreeSet<String> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn union<I: IntoIterator<Item = String>>(&self, more: I) -> Blacklist {
        let mut set = self.0.clone();
        set.extend(more);
        Blacklist(set)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegisterDriver {
    Init(bool),
    Net { cycle: usize, net: NetId },
}

/// The frame unrolled `k` times, possibly carrying transient faults.
#[derive(Debug, Clone)]
pub struct UnrolledCircuit {
    frame: Arc<SequentialCircuit>,
    k: usize,
    faults: BTreeMap<GateInstance, FaultType>,
}

pub fn unroll(circuit: &SequentialCircuit, k: usize) -> Result<UnrolledCircuit, CircuitError> {
    UnrolledCircuit::new(Arc::new(circuit.clone()), k)
}

impl UnrolledCircuit {
    pub fn new(frame: Arc<SequentialCircuit>, k: usize) -> Result<Self, CircuitError> {
        if k < 1 {
            return Err(CircuitError::InvalidK);
        }
        Ok(UnrolledCircuit { frame, k, faults: BTreeMap::new() })
    }

    pub fn frame(&self) -> &SequentialCircuit {
        &self.frame
    }

    pub fn frame_arc(&self) -> &Arc<SequentialCircuit> {
        &self.frame
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn faults(&self) -> &BTreeMap<GateInstance, FaultType> {
        &self.faults
    }

    pub(crate) fn with_faults(&self, faults: BTreeMap<GateInstance, FaultType>) -> Self {
        UnrolledCircuit { frame: Arc::clone(&self.frame), k: self.k, faults }
    }

    pub fn contains(&self, inst: GateInstance) -> bool {
        inst.cycle >= 1
            && inst.cycle <= self.k
            && match inst.site {
                Site::Gate(g) => g < self.frame.gates.len(),
                Site::Register(r) => r < self.frame.registers.len(),
            }
    }

    /// Logic-gate instances `g@1 ..= g@k`, cycle-major.
    pub fn gate_instances(&self) -> impl Iterator<Item = GateInstance> + '_ {
        (1..=self.k).flat_map(move |c| (0..self.frame.gates.len()).map(move |g| GateInstance::gate(c, g)))
    }

    /// Register read instances `r@1 ..= r@k`.
    pub fn register_instances(&self) -> impl Iterator<Item = GateInstance> + '_ {
        (1..=self.k)
            .flat_map(move |c| (0..self.frame.registers.len()).map(move |r| GateInstance::register(c, r)))
    }

    pub fn instance_count(&self) -> usize {
        self.k * self.frame.gates.len()
    }

    /// Kind of an instance after faults. Register reads behave as `buf`.
    pub fn instance_kind(&self, inst: GateInstance) -> GateKind {
        let base = match inst.site {
            Site::Gate(g) => self.frame.gates[g].kind,
            Site::Register(_) => GateKind::Buf,
        };
        match self.faults.get(&inst) {
            Some(&f) => base.faulted(f),
            None => base,
        }
    }

    /// What drives the register instance `reg@cycle` (the state after
    /// `cycle`): the init bit at cycle 0, else the next-state net of that
    /// cycle's frame copy.
    pub fn register_driver(&self, reg: usize, cycle: usize) -> RegisterDriver {
        if cycle == 0 {
            RegisterDriver::Init(self.frame.registers[reg].init)
        } else {
            RegisterDriver::Net { cycle, net: self.frame.registers[reg].next }
        }
    }
}

/// All fault-injectable instances: the complement of the blacklist and of
/// the class excluded by `location`, over cycles `1..=k`, sorted by cycle
/// then name.
pub fn fault_locations(
    unrolled: &UnrolledCircuit,
    blacklist: &Blacklist,
    location: Location,
) -> Vec<GateInstance> {
    let frame = unrolled.frame();
    let mut sites: Vec<Site> = Vec::new();
    if location.includes_logic() {
        sites.extend(
            (0..frame.gates.len()).filter(|&g| !blacklist.contains(&frame.gates[g].name)).map(Site::Gate),
        );
    }
    if location.includes_registers() {
        sites.extend(
            (0..frame.registers.len())
                .filter(|&r| !blacklist.contains(&frame.registers[r].name))
                .map(Site::Register),
        );
    }
    sites.sort_by(|a, b| frame.site_name(*a).cmp(frame.site_name(*b)));
    (1..=unrolled.k())
        .flat_map(|c| sites.iter().map(move |&site| GateInstance { cycle: c, site }))
        .collect()
}
