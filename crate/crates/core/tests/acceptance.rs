//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use frv::circuit::{build_and_validate, fault_locations, unroll, Blacklist, FaultResistanceModel, Location};
use frv::fault_encoder::instrument;
use frv::netlist_io::{parse_config, parse_netlist, ReductionFlags, SolverBackend, VerificationConfig};
use frv::oracle::{brute_force_verdict, random_netlist, np_hardness_instance, OracleBudget, RandomParams};
use frv::reductions::{single_exit_map, single_successor_blacklist};
use frv::sat::{at_most_k, solve_cnf, tseitin_cnf, Cnf, Formula, NodeId, SatResult, VarRole};
use frv::simulator::{apply_fault_vector, bits_to_string, check_effectiveness, run_trace, FaultType, FaultVector};
use frv::{verify, SequentialCircuit, UnrolledCircuit};

type Check = Result<String, String>;

const PARITY: &str = include_str!("../fixtures/rect_parity.nl");
const REVISED: &str = include_str!("../fixtures/rect_revised.nl");
const ZETA_ALL: &str = include_str!("../fixtures/zeta_1_1_all_c.json");
const ZETA_CHECKS: &str = include_str!("../fixtures/zeta_1_1_all_c_parity_only.json");

fn circuit(src: &str) -> SequentialCircuit {
    build_and_validate(&parse_netlist(src).unwrap()).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant, what: &str) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("{what} took {t:.2?}, limit {limit:?}"))
}

fn set(names: &[&str]) -> BTreeSet<String> {
    names.iter().map(|s| s.to_string()).collect()
}

// Truth table of the S-box and its faulty variants, inputs 0000..1111.
const GOLDEN_ROW: [&str; 16] = [
    "0110", "0101", "1100", "1010", "0001", "1110", "0111", "1001", "1011", "0000", "0011", "1101", "1000", "1111",
    "0100", "0010",
];
const FAULTY_ROWS: [(&str, &str, [&str; 16]); 6] = [
    ("s7", "s", ["1110", "1101", "0100", "0010", "0001", "0110", "1111", "1001", "1011", "1000", "0011", "0101", "0000", "0111", "1100", "1010"]),
    ("s7", "r", ["0110", "0101", "1100", "1010", "1001", "1110", "0111", "0001", "0011", "0000", "1011", "1101", "1000", "1111", "0100", "0010"]),
    ("s7", "bf", ["1110", "1101", "0100", "0010", "1001", "0110", "1111", "0001", "0011", "1000", "0011", "0101", "0000", "0111", "1100", "1010"]),
    ("z", "s", ["0011", "0101", "1101", "1011", "0001", "1111", "0111", "1001", "1011", "0101", "0011", "1101", "1001", "1111", "0001", "0111"]),
    ("z", "r", ["0110", "0000", "1100", "1010", "0000", "1110", "0010", "1100", "1110", "0000", "0010", "1100", "0000", "1110", "0100", "0010"]),
    ("z", "bf", ["0011", "0000", "1101", "1011", "0000", "1111", "0010", "1100", "1110", "0101", "0010", "1100", "1001", "1110", "0001", "0111"]),
];
/// Printed cells that contradict the other rows of their own column.
/// `(gate, type, input, printed, implied)`.
const ERRATA: [(&str, &str, usize, &str, &str); 2] = [("s7", "bf", 0b1010, "0011", "1011"), ("z", "r", 0b1100, "0000", "1000")];


fn nibble(x: usize) -> Vec<Vec<bool>> {
    vec![(0..4).map(|i| x >> (3 - i) & 1 == 1).collect()]
}

/// A single-gate fault column is consistent when at most one of set/reset
/// changes the output and bit-flip matches whichever does.
fn column_consistent(golden: &str, s: &str, r: &str, bf: &str) -> bool {
    match (s != golden, r != golden) {
        (true, true) => false,
        (true, false) => bf == s,
        (false, true) => bf == r,
        (false, false) => bf == golden,
    }
}

/// `(gate, type, outputs)`.
type Row = (&'static str, &'static str, Vec<String>);

/// Printed rows with errata applied, after checking that each erratum is
/// exactly what makes its column consistent.
fn corrected_rows() -> Result<Vec<Row>, String> {
    let mut rows: Vec<Row> =
        FAULTY_ROWS.iter().map(|(g, t, r)| (*g, *t, r.iter().map(|s| s.to_string()).collect())).collect();
    let column = |rows: &[Row], gate: &str, x: usize| -> bool {
        let cell = |t: &str| rows.iter().find(|r| r.0 == gate && r.1 == t).unwrap().2[x].clone();
        column_consistent(GOLDEN_ROW[x], &cell("s"), &cell("r"), &cell("bf"))
    };
    for (gate, ty, x, printed, implied) in ERRATA {
        ensure(!column(&rows, gate, x), || format!("erratum {gate}:{ty}@{x:04b} is consistent as printed"))?;
        let row = rows.iter_mut().find(|r| r.0 == gate && r.1 == ty).unwrap();
        ensure(row.2[x] == printed, || format!("erratum {gate}:{ty}@{x:04b} does not match the printed table"))?;
        row.2[x] = implied.to_string();
        ensure(column(&rows, gate, x), || format!("erratum {gate}:{ty}@{x:04b} correction is inconsistent"))?;
    }
    for gate in ["s7", "z"] {
        for x in 0..16 {
            ensure(column(&rows, gate, x), || format!("column {gate}@{x:04b} inconsistent and not listed as erratum"))?;
        }
    }
    Ok(rows)
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let u = unroll(&circuit(PARITY), 1).unwrap();
    let row = |c: &UnrolledCircuit| -> Vec<String> {
        (0..16).map(|x| bits_to_string(&run_trace(c, &nibble(x)).unwrap().cycles[0].outputs)).collect()
    };
    ensure(row(&u) == GOLDEN_ROW, || format!("golden row {:?}", row(&u)))?;
    for (gate, ty, expected) in corrected_rows()? {
        let v = FaultVector::parse(u.frame(), &[format!("{gate}@1:{ty}")]).unwrap();
        let got = row(&apply_fault_vector(&u, &v).unwrap());
        ensure(got == expected, || format!("S[{gate},{ty}] = {got:?}"))?;
        // parity check misses exactly the even-weight output differences
        let undetected: Vec<usize> = (0..16)
            .filter(|&x| {
                let d = usize::from_str_radix(&expected[x], 2).unwrap() ^ usize::from_str_radix(GOLDEN_ROW[x], 2).unwrap();
                d != 0 && d.count_ones().is_multiple_of(2)
            })
            .collect();
        let effective: Vec<usize> =
            (0..16).filter(|&x| check_effectiveness(&u, &v, &nibble(x)).unwrap().effective).collect();
        ensure(effective == undetected, || format!("effective inputs for {gate}:{ty} = {effective:?}"))?;
    }
    within(Duration::from_secs(1), start, "truth tables")?;
    let errata: Vec<String> = ERRATA
        .iter()
        .map(|(g, t, x, p, i)| format!("S[{g},{t}]({x:04b}) printed {p}, implied {i}"))
        .collect();
    Ok(format!(
        "golden row and 94 of 96 printed faulty cells bit-exact; 2 printed cells contradict their own column and match the implied value ({}); {:.1?}",
        errata.join("; "),
        start.elapsed()
    ))
}

fn criterion_2() -> Check {
    let mut notes = Vec::new();
    for (name, src, cfg, want_resistant) in
        [("rect_parity", PARITY, ZETA_ALL, false), ("rect_revised", REVISED, ZETA_CHECKS, true)]
    {
        let start = Instant::now();
        let doc = parse_netlist(src).unwrap();
        let c = build_and_validate(&doc).unwrap();
        let mut config = parse_config(cfg, &doc).unwrap();
        config.solver = SolverBackend::Builtin;
        let v = verify(&c, &config).map_err(|e| format!("{name}: {e}"))?;
        within(Duration::from_secs(5), start, name)?;
        ensure(v.kind.is_resistant() == want_resistant, || format!("{name}: verdict {:?}", v.kind))?;
        if let Some(cex) = v.kind.counterexample() {
            let u = unroll(&c, config.unroll_k).unwrap();
            let r = check_effectiveness(&u, &cex.fault_vector, &cex.inputs).unwrap();
            ensure(r.effective, || format!("{name}: counterexample does not replay"))?;
            notes.push(format!("{name} NotResistant via {}", cex.fault_vector.describe(&c).join(" ")));
        } else {
            notes.push(format!("{name} Resistant"));
        }
    }
    Ok(notes.join(", "))
}

fn criterion_3() -> Check {
    let u = unroll(&circuit(PARITY), 1).unwrap();
    let checks = Blacklist::new(["c1", "c2", "c3", "flag"], u.frame()).unwrap();
    let all = FaultResistanceModel::new(1, 1, &FaultType::ALL, Location::Comb);
    let ss = single_successor_blacklist(&u, &checks, &all).map_err(|e| e.to_string())?;
    let want = set(&["s4", "s5", "s7", "s8", "p1", "p2", "p3", "p4", "p5"]);
    ensure(ss == want, || format!("single-successor set {ss:?}"))?;

    // numbered names s9/s10/s11 are fixture gates z/w/x
    let map = single_exit_map(&u, &checks);
    let mut expected: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    expected.insert("p6".into(), set(&["p1", "p2", "p3", "p4", "p5", "p6"]));
    expected.insert("x".into(), set(&["s8", "x"]));
    expected.insert("w".into(), set(&["s7", "w"]));
    expected.insert("z".into(), set(&["s4", "z"]));
    expected.insert("s6".into(), set(&["s5", "s6"]));
    let absorbed: BTreeSet<String> = expected.values().flatten().cloned().collect();
    for g in &u.frame().gates {
        if !absorbed.contains(&g.name) {
            expected.insert(g.name.clone(), set(&[&g.name]));
        }
    }
    let got: BTreeMap<String, BTreeSet<String>> =
        map.m2.iter().filter(|(k, _)| u.frame().gates.iter().any(|g| &g.name == *k)).map(|(k, v)| (k.clone(), v.clone())).collect();
    ensure(got == expected, || format!("exit map {got:?}"))?;
    Ok("single-successor set and exit map match exactly".into())
}

const TYPE_SETS: [&[FaultType]; 3] =
    [&[FaultType::BitFlip], &[FaultType::Set, FaultType::Reset], &FaultType::ALL];

fn models() -> Vec<FaultResistanceModel> {
    let mut out = Vec::new();
    for ne in [1, 2] {
        for nc in [1, 2] {
            for types in TYPE_SETS {
                for loc in [Location::Comb, Location::Reg, Location::Both] {
                    out.push(FaultResistanceModel::new(ne, nc, types, loc));
                }
            }
        }
    }
    out
}

struct CorpusCase {
    seed: u64,
    circuit: SequentialCircuit,
    k: usize,
    blacklist: BTreeSet<String>,
}

fn corpus() -> Vec<CorpusCase> {
    (0..32)
        .map(|seed| {
            let inst = random_netlist(seed, RandomParams::default());
            CorpusCase {
                seed,
                circuit: build_and_validate(&inst.netlist).unwrap(),
                k: inst.suggested_k,
                blacklist: inst.suggested_blacklist.into_iter().collect(),
            }
        })
        .collect()
}

/// Brute-force verdicts keyed by (seed, model index); shared with criterion 5.
type OracleTable = BTreeMap<(u64, usize), bool>;

fn criterion_4(oracle: &mut OracleTable) -> Check {
    let start = Instant::now();
    let budget = OracleBudget { max_input_bits: 16, max_vectors: 100_000_000 };
    let models = models();
    let cases = corpus();
    let (mut runs, mut resistant, mut reduced, mut mismatches) = (0usize, 0usize, 0usize, Vec::new());
    for case in &cases {
        let frame = &case.circuit;
        ensure(frame.gates.len() <= 15 && frame.registers.len() <= 2 && case.k <= 2, || {
            format!("seed {} outside corpus bounds", case.seed)
        })?;
        let u = unroll(frame, case.k).unwrap();
        let bl = Blacklist::new(case.blacklist.iter().cloned(), frame).unwrap();
        for (mi, model) in models.iter().enumerate() {
            let truth = brute_force_verdict(&u, &bl, model, &budget).map_err(|e| format!("seed {}: {e}", case.seed))?;
            oracle.insert((case.seed, mi), truth.is_resistant());
            resistant += usize::from(truth.is_resistant());
            for flags in ReductionFlags::all_combinations() {
                let config = VerificationConfig {
                    unroll_k: case.k,
                    model: model.clone(),
                    blacklist: case.blacklist.clone(),
                    reductions: flags,
                    solver: SolverBackend::Builtin,
                };
                let v = verify(frame, &config).map_err(|e| format!("seed {} {model}: {e}", case.seed))?;
                runs += 1;
                reduced += usize::from(v.plan.applied.iter().any(|a| !a.gates_removed.is_empty()));
                if v.kind.is_resistant() != truth.is_resistant() {
                    mismatches.push(format!("seed {} {model} {flags:?}", case.seed));
                }
            }
        }
    }
    within(Duration::from_secs(600), start, "oracle equivalence")?;
    ensure(mismatches.is_empty(), || format!("{} mismatches, first: {}", mismatches.len(), mismatches[0]))?;
    let total = cases.len() * models.len();
    ensure(resistant > 0 && resistant < total, || format!("corpus is one-sided: {resistant}/{total} resistant"))?;
    Ok(format!(
        "{} circuits x {} models x 8 flag sets = {runs} runs agree ({reduced} with gates removed by a reduction), {resistant}/{total} resistant, {:.1?}",
        cases.len(),
        models.len(),
        start.elapsed()
    ))
}

fn criterion_5(oracle: &OracleTable) -> Check {
    ensure(!oracle.is_empty(), || "criterion 4 produced no verdicts".into())?;
    let models = models();
    let mut compared = 0;
    for (&(seed, mi), &verdict) in oracle {
        let m = &models[mi];
        if m.types.len() != 3 {
            continue;
        }
        let bf = models
            .iter()
            .position(|x| x.n_e == m.n_e && x.n_c == m.n_c && x.location == m.location && x.types.len() == 1)
            .unwrap();
        let other = oracle[&(seed, bf)];
        ensure(verdict == other, || format!("seed {seed} {m}: all types {verdict}, bit-flip only {other}"))?;
        compared += 1;
    }
    Ok(format!("{compared} corpus pairs agree"))
}

fn truth_table_sat(m: usize, clauses: &[Vec<i32>]) -> bool {
    (0..1u32 << m).any(|a| {
        clauses.iter().all(|cl| cl.iter().any(|&l| (a >> (l.unsigned_abs() - 1) & 1 == 1) == (l > 0)))
    })
}

fn random_cnf(rng: &mut ChaCha8Rng) -> Vec<Vec<i32>> {
    let n = rng.gen_range(2..=9);
    (0..n)
        .map(|_| {
            let width = rng.gen_range(1..=3);
            let mut vars: Vec<i32> = (1..=3).collect();
            for i in (1..3).rev() {
                vars.swap(i, rng.gen_range(0..=i));
            }
            vars[..width].iter().map(|&v| if rng.gen_bool(0.5) { v } else { -v }).collect()
        })
        .collect()
}

fn criterion_6() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6e70);
    let (mut sat, mut unsat) = (0, 0);
    for i in 0..24 {
        let cnf = random_cnf(&mut rng);
        let expect_sat = truth_table_sat(3, &cnf);
        for ne in [1, 2] {
            let inst = np_hardness_instance(&cnf, 3, ne).map_err(|e| e.to_string())?;
            let c = build_and_validate(&inst.netlist).map_err(|e| e.to_string())?;
            let k = inst.netlist.default_cycles.unwrap_or(inst.suggested_k);
            let config = VerificationConfig {
                unroll_k: k,
                model: FaultResistanceModel::new(ne, 1, &[FaultType::BitFlip], Location::Reg),
                blacklist: BTreeSet::new(),
                reductions: ReductionFlags::default(),
                solver: SolverBackend::Builtin,
            };
            let v = verify(&c, &config).map_err(|e| format!("formula {i}: {e}"))?;
            ensure(v.kind.is_resistant() != expect_sat, || {
                format!("formula {i} {cnf:?} n_e={ne}: satisfiable={expect_sat}, verdict {:?}", v.kind)
            })?;
        }
        if expect_sat {
            sat += 1;
        } else {
            unsat += 1;
        }
    }
    ensure(sat > 0 && unsat > 0, || format!("family is one-sided: {sat} sat, {unsat} unsat"))?;
    Ok(format!("24 formulas ({sat} sat, {unsat} unsat) x n_e in {{1,2}}"))
}

fn criterion_7() -> Check {
    let mut circuits: Vec<(String, SequentialCircuit, usize)> =
        vec![("rect_parity".into(), circuit(PARITY), 1), ("rect_revised".into(), circuit(REVISED), 1)];
    circuits.extend(corpus().into_iter().map(|c| (format!("seed {}", c.seed), c.circuit, c.k)));
    let mut checked = 0;
    for (name, c, k) in &circuits {
        let u = UnrolledCircuit::new(Arc::new(c.clone()), *k).unwrap();
        let locs = fault_locations(&u, &Blacklist::empty(), Location::Both);
        for mask in 1..8u8 {
            let types: Vec<FaultType> =
                FaultType::ALL.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, t)| *t).collect();
            let cc = instrument(&u, &locs, &types);
            let bound = 6 * types.len() * cc.base_gate_count();
            ensure(cc.gate_count() <= bound, || {
                format!("{name} {types:?}: {} gates > {bound}", cc.gate_count())
            })?;
            checked += 1;
        }
    }
    Ok(format!("{checked} (circuit, type set) pairs within 6|T| x original"))
}

fn criterion_8() -> Check {
    let mut cases = 0;
    for n in 0..=8usize {
        for k in 0..=4usize {
            let lits: Vec<i32> = (1..=n as i32).collect();
            let mut last = n as u32;
            let clauses = at_most_k(&lits, k, &mut last);
            for a in 0..1u32 << n {
                let mut cl = clauses.clone();
                for i in 0..n {
                    let v = i as i32 + 1;
                    cl.push(vec![if a >> i & 1 == 1 { v } else { -v }]);
                }
                let extendable = matches!(solve_cnf(&Cnf::from_clauses(last, cl), &SolverBackend::Builtin), Ok(SatResult::Sat(_)));
                ensure(extendable == (a.count_ones() as usize <= k), || format!("n={n} k={k} assignment {a:b}"))?;
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} (n, k, assignment) cases"))
}

fn random_formula(rng: &mut ChaCha8Rng) -> Formula {
    let mut f = Formula::new();
    let nv = rng.gen_range(1..=4);
    let mut pool: Vec<NodeId> = (0..nv).map(|i| f.var(&format!("v{i}"), VarRole::PrimaryInput)).collect();
    for _ in 0..rng.gen_range(1..=8) {
        let pick = |rng: &mut ChaCha8Rng, pool: &[NodeId]| pool[rng.gen_range(0..pool.len())];
        let (a, b, c) = (pick(rng, &pool), pick(rng, &pool), pick(rng, &pool));
        let n = match rng.gen_range(0..7) {
            0 => f.not(a),
            1 => f.and(a, b),
            2 => f.or(a, b),
            3 => f.xor(a, b),
            4 => f.iff(a, b),
            5 => f.ite(a, b, c),
            _ => f.constant(rng.gen_bool(0.5)),
        };
        pool.push(n);
    }
    for _ in 0..rng.gen_range(1..=3) {
        let n = pool[rng.gen_range(0..pool.len())];
        f.assert(n);
    }
    if rng.gen_bool(0.25) {
        let lits: Vec<NodeId> = pool[..nv].to_vec();
        f.assert_at_most(lits, rng.gen_range(0..nv));
    }
    f
}

fn criterion_9() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7e17);
    let (mut sat, mut unsat) = (0, 0);
    for i in 0..300 {
        let f = random_formula(&mut rng);
        let n = f.vars().len();
        let expect = (0..1u32 << n).any(|a| f.satisfied(&(0..n).map(|v| a >> v & 1 == 1).collect::<Vec<_>>()));
        let cnf = tseitin_cnf(&f);
        let got = match solve_cnf(&cnf, &SolverBackend::Builtin).map_err(|e| e.to_string())? {
            SatResult::Sat(model) => {
                let a: Vec<bool> = f.vars().iter().map(|v| cnf.value(&model, &v.name).unwrap_or(false)).collect();
                ensure(f.satisfied(&a), || format!("formula {i}: CNF model does not satisfy the formula"))?;
                true
            }
            SatResult::Unsat => false,
            SatResult::Unknown(r) => return Err(format!("formula {i}: {r}")),
        };
        ensure(got == expect, || format!("formula {i}: CNF sat={got}, truth table sat={expect}"))?;
        if expect {
            sat += 1;
        } else {
            unsat += 1;
        }
    }
    ensure(sat > 0 && unsat > 0, || format!("family is one-sided: {sat} sat, {unsat} unsat"))?;
    Ok(format!("300 formulas ({sat} sat, {unsat} unsat)"))
}

fn main() {
    let mut oracle = OracleTable::new();
    let results: Vec<(u32, &str, Check)> = vec![
        (1, "truth-table fidelity", criterion_1()),
        (2, "verdict reproduction", criterion_2()),
        (3, "reduction fixtures", criterion_3()),
        (4, "oracle equivalence", criterion_4(&mut oracle)),
        (5, "fault-type reduction invariance", criterion_5(&oracle)),
        (6, "hardness generator", criterion_6()),
        (7, "size bound", criterion_7()),
        (8, "cardinality exactness", criterion_8()),
        (9, "tseitin equisatisfiability", criterion_9()),
    ];
    let mut failed = 0;
    for (n, name, r) in &results {
        match r {
            Ok(detail) => println!("criterion {n} PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n} FAIL {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
