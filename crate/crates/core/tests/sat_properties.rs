use proptest::prelude::*;

use frv::netlist_io::SolverBackend;
use frv::sat::{at_most_k, emit_dimacs, parse_dimacs, solve_cnf, tseitin_cnf, Cnf, Formula, Lit, NodeId, SatResult, VarRole};

fn brute_sat(num_vars: u32, clauses: &[Vec<Lit>]) -> bool {
    (0..1u64 << num_vars).any(|a| {
        clauses.iter().all(|c| c.iter().any(|&l| (a >> (l.unsigned_abs() - 1) & 1 == 1) == (l > 0)))
    })
}

fn cnf_strategy(max_vars: u32) -> impl Strategy<Value = (u32, Vec<Vec<Lit>>)> {
    (1..=max_vars).prop_flat_map(|n| {
        let lit = (1..=n as i32, any::<bool>()).prop_map(|(v, pos)| if pos { v } else { -v });
        (Just(n), prop::collection::vec(prop::collection::vec(lit, 1..=3), 0..24))
    })
}

#[derive(Debug, Clone)]
enum Op {
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
    Xor(usize, usize),
    Iff(usize, usize),
    Ite(usize, usize, usize),
    Const(bool),
}

fn op_strategy() -> impl Strategy<Value = Op> {
    let i = || 0usize..64;
    prop_oneof![
        i().prop_map(Op::Not),
        (i(), i()).prop_map(|(a, b)| Op::And(a, b)),
        (i(), i()).prop_map(|(a, b)| Op::Or(a, b)),
        (i(), i()).prop_map(|(a, b)| Op::Xor(a, b)),
        (i(), i()).prop_map(|(a, b)| Op::Iff(a, b)),
        (i(), i(), i()).prop_map(|(a, b, c)| Op::Ite(a, b, c)),
        any::<bool>().prop_map(Op::Const),
    ]
}

/// Builds a formula over `nv` variables; operand indices wrap around the pool.
fn build(nv: usize, ops: &[Op], asserts: &[usize], bound: Option<usize>) -> Formula {
    let mut f = Formula::new();
    let mut pool: Vec<NodeId> = (0..nv).map(|i| f.var(&format!("x{i}"), VarRole::PrimaryInput)).collect();
    for op in ops {
        let p = |i: usize| pool[i % pool.len()];
        let n = match *op {
            Op::Not(a) => f.not(p(a)),
            Op::And(a, b) => f.and(p(a), p(b)),
            Op::Or(a, b) => f.or(p(a), p(b)),
            Op::Xor(a, b) => f.xor(p(a), p(b)),
            Op::Iff(a, b) => f.iff(p(a), p(b)),
            Op::Ite(a, b, c) => f.ite(p(a), p(b), p(c)),
            Op::Const(b) => f.constant(b),
        };
        pool.push(n);
    }
    for &a in asserts {
        let n = pool[a % pool.len()];
        f.assert(n);
    }
    if let Some(k) = bound {
        f.assert_at_most(pool[..nv].to_vec(), k);
    }
    f
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn tseitin_preserves_satisfiability(
        nv in 1usize..=4,
        ops in prop::collection::vec(op_strategy(), 0..12),
        asserts in prop::collection::vec(0usize..64, 1..4),
        bound in prop::option::of(0usize..4),
    ) {
        let f = build(nv, &ops, &asserts, bound);
        let n = f.vars().len();
        let truth = (0..1u32 << n).any(|a| f.satisfied(&(0..n).map(|i| a >> i & 1 == 1).collect::<Vec<_>>()));
        let cnf = tseitin_cnf(&f);
        match solve_cnf(&cnf, &SolverBackend::Builtin).unwrap() {
            SatResult::Sat(model) => {
                prop_assert!(truth);
                let a: Vec<bool> = f.vars().iter().map(|v| cnf.value(&model, &v.name).unwrap()).collect();
                prop_assert!(f.satisfied(&a));
            }
            SatResult::Unsat => prop_assert!(!truth),
            SatResult::Unknown(r) => prop_assert!(false, "unknown: {}", r),
        }
        if cnf.num_vars <= 20 {
            prop_assert_eq!(brute_sat(cnf.num_vars, &cnf.clauses), truth);
        }
    }

    #[test]
    fn tseitin_numbering_is_deterministic(nv in 1usize..=4, ops in prop::collection::vec(op_strategy(), 0..12), asserts in prop::collection::vec(0usize..64, 1..4)) {
        let a = tseitin_cnf(&build(nv, &ops, &asserts, None));
        let b = tseitin_cnf(&build(nv, &ops, &asserts, None));
        prop_assert_eq!(emit_dimacs(&a), emit_dimacs(&b));
        for (i, v) in a.var_map.iter().enumerate().take(nv) {
            prop_assert_eq!(v.index as usize, i + 1);
        }
    }

    #[test]
    fn builtin_solver_agrees_with_truth_tables((n, clauses) in cnf_strategy(10)) {
        let cnf = Cnf::from_clauses(n, clauses.clone());
        let expect = brute_sat(n, &clauses);
        match solve_cnf(&cnf, &SolverBackend::Builtin).unwrap() {
            SatResult::Sat(model) => {
                prop_assert!(expect);
                prop_assert!(clauses.iter().all(|c| c.iter().any(|&l| model[l.unsigned_abs() as usize - 1] == (l > 0))));
            }
            SatResult::Unsat => prop_assert!(!expect),
            SatResult::Unknown(r) => prop_assert!(false, "unknown: {}", r),
        }
    }

    #[test]
    fn dimacs_round_trips((n, clauses) in cnf_strategy(12)) {
        let cnf = Cnf::from_clauses(n, clauses);
        let (text, _) = emit_dimacs(&cnf);
        let back = parse_dimacs(&text).unwrap();
        prop_assert_eq!(back.num_vars, cnf.num_vars);
        prop_assert_eq!(&back.clauses, &cnf.clauses);
        prop_assert_eq!(emit_dimacs(&back).0, text);
    }

    #[test]
    fn at_most_k_is_exact(n in 1usize..=10, k in 0usize..=5, bits in any::<u16>()) {
        let lits: Vec<Lit> = (1..=n as Lit).collect();
        let mut last = n as u32;
        let mut clauses = at_most_k(&lits, k, &mut last);
        let ones = (0..n).filter(|i| bits >> i & 1 == 1).count();
        for i in 0..n {
            let v = i as Lit + 1;
            clauses.push(vec![if bits >> i & 1 == 1 { v } else { -v }]);
        }
        let sat = matches!(solve_cnf(&Cnf::from_clauses(last, clauses), &SolverBackend::Builtin).unwrap(), SatResult::Sat(_));
        prop_assert_eq!(sat, ones <= k);
        if k > 0 && k < n {
            prop_assert!(last as usize - n <= (n - 1) * k);
        }
    }
}
