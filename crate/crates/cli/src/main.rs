//! `frv`: verify fault resistance of gate-level netlists.
//!
//! Exit status is 0 for a resistant design, 1 when a counterexample was
//! found, and 2 for any error.

use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use frv::circuit::{build_and_validate, fault_locations, Blacklist, SequentialCircuit, UnrolledCircuit};
use frv::netlist_io::{parse_config, parse_netlist, write_netlist, NetlistDoc, SolverBackend, VerificationConfig};
use frv::oracle::{brute_force_verdict_against, np_hardness_instance, random_netlist, OracleBudget, RandomParams};
use frv::reductions::plan_reductions;
use frv::report::{build_report, model_json, plan_json};
use frv::sat::verify::{encode, solve};
use frv::sat::{emit_dimacs, parse_dimacs};
use frv::simulator::{bits_to_string, apply_fault_vector, check_effectiveness_against, run_trace, FaultVector};
use frv::VerdictKind;

type Res<T> = Result<T, Box<dyn Error>>;

// stdout may be a closed pipe (`frv ... | head`); output errors are ignored.
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

macro_rules! say_raw {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = write!(std::io::stdout(), $($t)*);
    }};
}

#[derive(Parser)]
#[command(name = "frv", version, about = "SAT-based fault-resistance verification for gate-level netlists")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide fault resistance with the SAT encoding.
    Verify(VerifyArgs),
    /// Print a cycle-by-cycle trace, optionally with faults injected.
    Simulate(SimulateArgs),
    /// Print the reduction plan as JSON.
    Reduce(CommonArgs),
    /// Build the encoding and print its size.
    Encode(EncodeArgs),
    /// Decide fault resistance by exhaustive enumeration.
    Oracle(OracleArgs),
    /// Emit generated netlists.
    #[command(subcommand)]
    Gen(GenCmd),
}

#[derive(Args)]
struct CommonArgs {
    netlist: PathBuf,
    #[arg(long)]
    config: PathBuf,
    /// Disable fault-type reduction.
    #[arg(long)]
    no_reduce_types: bool,
    /// Disable vulnerable-gate reductions.
    #[arg(long)]
    no_reduce_gates: bool,
    /// Use single-exit reduction where applicable.
    #[arg(long, conflicts_with = "no_reduce_gates")]
    aggressive: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Unprotected reference design; defaults to the protected netlist.
    #[arg(long)]
    golden: Option<PathBuf>,
    /// External solver command (`builtin` for the bundled one). The DIMACS path is appended.
    #[arg(long)]
    solver: Option<String>,
    /// Write the JSON report here (`-` for stdout).
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write the DIMACS encoding here, with a `.map.json` sidecar.
    #[arg(long)]
    dimacs: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    netlist: PathBuf,
    /// Input bits per cycle, comma separated (e.g. `0101,1100`).
    #[arg(long, value_delimiter = ',', required = true)]
    inputs: Vec<String>,
    /// Fault event `name@cycle:type`; repeatable.
    #[arg(long = "fault")]
    faults: Vec<String>,
}

#[derive(Args)]
struct EncodeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Print the control and selection variables of every instrumented instance.
    #[arg(long)]
    dump_controls: bool,
    #[arg(long)]
    dimacs: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    golden: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long, default_value_t = OracleBudget::default().max_input_bits)]
    max_input_bits: usize,
    #[arg(long, default_value_t = OracleBudget::default().max_vectors)]
    max_vectors: u128,
}

#[derive(Subcommand)]
enum GenCmd {
    /// Hardness instance from a DIMACS CNF.
    Np {
        #[arg(long)]
        cnf: PathBuf,
        #[arg(long, default_value_t = 1)]
        ne: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seeded random sequential netlist.
    Random {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = RandomParams::default().max_gates)]
        max_gates: usize,
        #[arg(long, default_value_t = RandomParams::default().max_regs)]
        max_regs: usize,
        #[arg(long, default_value_t = RandomParams::default().num_inputs)]
        inputs: usize,
        #[arg(long)]
        no_flag: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Res<String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn load_netlist(path: &Path) -> Res<(NetlistDoc, SequentialCircuit)> {
    let text = read(path)?;
    let doc = parse_netlist(&text).map_err(|e| format!("{}:{e}", path.display()))?;
    let circuit = build_and_validate(&doc).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok((doc, circuit))
}

fn load_config(a: &CommonArgs, doc: &NetlistDoc) -> Res<VerificationConfig> {
    let mut cfg = parse_config(&read(&a.config)?, doc).map_err(|e| format!("{}: {e}", a.config.display()))?;
    if a.no_reduce_types {
        cfg.reductions.fault_type = false;
    }
    if a.no_reduce_gates {
        cfg.reductions.single_successor = false;
        cfg.reductions.single_exit = false;
    }
    if a.aggressive {
        cfg.reductions.single_exit = true;
    }
    Ok(cfg)
}

/// `--solver`, then an external solver named in the config, then `FRV_SOLVER`.
fn pick_solver(flag: Option<&str>, cfg: &SolverBackend) -> SolverBackend {
    let parse = |s: &str| {
        let argv: Vec<String> = s.split_whitespace().map(str::to_string).collect();
        if argv.is_empty() || argv == ["builtin"] {
            SolverBackend::Builtin
        } else {
            SolverBackend::External(argv)
        }
    };
    if let Some(s) = flag {
        return parse(s);
    }
    if matches!(cfg, SolverBackend::External(_)) {
        return cfg.clone();
    }
    std::env::var("FRV_SOLVER").map(|s| parse(&s)).unwrap_or(SolverBackend::Builtin)
}

fn write_out(path: Option<&Path>, text: &str) -> Res<()> {
    match path {
        None => say_raw!("{text}"),
        Some(p) if json_to_stdout(Some(p)) => say_raw!("{text}"),
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display()))?,
    }
    Ok(())
}

fn json_to_stdout(path: Option<&Path>) -> bool {
    path == Some(Path::new("-"))
}

fn print_summary(circuit: &SequentialCircuit, kind: &VerdictKind) {
    match kind {
        VerdictKind::Resistant => say!("RESISTANT"),
        VerdictKind::NotResistant(c) => {
            say!("NOT RESISTANT");
            say!("  faults: {}", c.fault_vector.describe(circuit).join(" "));
            for (i, bits) in c.inputs.iter().enumerate() {
                say!("  inputs@{}: {}", i + 1, bits_to_string(bits));
            }
            say!("  diverges at cycle {} on `{}`", c.divergence_cycle, c.differing_output);
        }
    }
}

fn exit_for(kind: &VerdictKind) -> u8 {
    if kind.is_resistant() {
        0
    } else {
        1
    }
}

fn cmd_verify(a: VerifyArgs) -> Res<u8> {
    let (doc, circuit) = load_netlist(&a.common.netlist)?;
    let mut cfg = load_config(&a.common, &doc)?;
    cfg.solver = pick_solver(a.solver.as_deref(), &cfg.solver);
    let golden = a.golden.as_deref().map(load_netlist).transpose()?.map(|(_, c)| c);

    let enc = encode(&circuit, golden.as_ref(), &cfg)?;
    if let Some(path) = &a.dimacs {
        let (text, map) = emit_dimacs(&enc.cnf);
        fs::write(path, text)?;
        let mut side = path.clone().into_os_string();
        side.push(".map.json");
        fs::write(side, map)?;
    }
    let verdict = solve(&enc, &cfg.solver)?;
    if !json_to_stdout(a.json.as_deref()) {
        print_summary(&circuit, &verdict.kind);
        say!(
        "  {} locations, {} vars, {} clauses, encode {:.3}s, solve {:.3}s",
        verdict.stats.locations, verdict.stats.vars, verdict.stats.clauses, verdict.stats.encode_secs, verdict.stats.solve_secs
        );
    }
    if let Some(path) = &a.json {
        let report = build_report(&circuit, &cfg, "sat", &verdict.kind, Some(&verdict.plan), Some(&verdict.stats));
        write_out(Some(path), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    }
    Ok(exit_for(&verdict.kind))
}

fn cmd_simulate(a: SimulateArgs) -> Res<u8> {
    let (_, circuit) = load_netlist(&a.netlist)?;
    let inputs = a
        .inputs
        .iter()
        .map(|s| {
            s.chars()
                .map(|ch| match ch {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(format!("bad input bit `{ch}` in `{s}`")),
                })
                .collect::<Result<Vec<bool>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let golden = UnrolledCircuit::new(circuit.clone().into(), inputs.len())?;
    let v = FaultVector::parse(&circuit, &a.faults)?;
    let faulty = apply_fault_vector(&golden, &v)?;
    say_raw!("{}", run_trace(&faulty, &inputs)?);
    if !v.is_empty() {
        let r = check_effectiveness_against(&golden, &golden, &v, &inputs)?;
        match (r.effective, r.divergence_cycle, r.differing_output) {
            (true, Some(c), Some(o)) => say!("effective: diverges at cycle {c} on `{o}`"),
            _ => say!("not effective"),
        }
    }
    Ok(0)
}

fn cmd_reduce(a: CommonArgs) -> Res<u8> {
    let (doc, circuit) = load_netlist(&a.netlist)?;
    let cfg = load_config(&a, &doc)?;
    let u = UnrolledCircuit::new(circuit.into(), cfg.unroll_k)?;
    let bl = Blacklist::new(cfg.blacklist.iter().cloned(), u.frame())?;
    let plan = plan_reductions(&u, &bl, &cfg.model, cfg.reductions);
    let before = fault_locations(&u, &bl, cfg.model.location).len();
    let after = fault_locations(&u, &plan.effective_blacklist, plan.effective_model.location).len();
    let mut out = plan_json(&plan);
    out["model"] = json!({ "requested": model_json(&cfg.model), "effective": model_json(&plan.effective_model) });
    out["blacklist"] = json!({ "original": bl.len(), "effective": plan.effective_blacklist.len() });
    out["locations"] = json!({ "original": before, "effective": after });
    say!("{}", serde_json::to_string_pretty(&out)?);
    Ok(0)
}

fn cmd_encode(a: EncodeArgs) -> Res<u8> {
    let (doc, circuit) = load_netlist(&a.common.netlist)?;
    let cfg = load_config(&a.common, &doc)?;
    let enc = encode(&circuit, None, &cfg)?;
    if a.dump_controls {
        let controls: serde_json::Map<String, serde_json::Value> = enc
            .controlled
            .control_map()
            .iter()
            .map(|(inst, cv)| (circuit.instance_name(*inst), serde_json::to_value(cv).expect("serializable")))
            .collect();
        say!("{}", serde_json::to_string_pretty(&controls)?);
    }
    if let Some(path) = &a.dimacs {
        let (text, map) = emit_dimacs(&enc.cnf);
        fs::write(path, text)?;
        let mut side = path.clone().into_os_string();
        side.push(".map.json");
        fs::write(side, map)?;
    }
    say!(
        "locations={} gates={} instrumented_gates={} vars={} clauses={}",
        enc.locations.len(),
        enc.controlled.base_gate_count(),
        enc.controlled.gate_count(),
        enc.cnf.num_vars,
        enc.cnf.clauses.len()
    );
    Ok(0)
}

fn cmd_oracle(a: OracleArgs) -> Res<u8> {
    let (doc, circuit) = load_netlist(&a.common.netlist)?;
    let cfg = load_config(&a.common, &doc)?;
    let u = UnrolledCircuit::new(circuit.clone().into(), cfg.unroll_k)?;
    let reference = match &a.golden {
        Some(p) => UnrolledCircuit::new(load_netlist(p)?.1.into(), cfg.unroll_k)?,
        None => u.clone(),
    };
    let bl = Blacklist::new(cfg.blacklist.iter().cloned(), u.frame())?;
    let plan = plan_reductions(&u, &bl, &cfg.model, cfg.reductions);
    let budget = OracleBudget { max_input_bits: a.max_input_bits, max_vectors: a.max_vectors };
    let kind = brute_force_verdict_against(&reference, &u, &plan.effective_blacklist, &plan.effective_model, &budget)?;
    if !json_to_stdout(a.json.as_deref()) {
        print_summary(&circuit, &kind);
    }
    if let Some(path) = &a.json {
        let report = build_report(&circuit, &cfg, "oracle", &kind, Some(&plan), None);
        write_out(Some(path), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    }
    Ok(exit_for(&kind))
}

fn emit_generated(netlist: &NetlistDoc, header: &[String], out: Option<&Path>) -> Res<u8> {
    let mut text = String::new();
    for h in header {
        text.push_str("# ");
        text.push_str(h);
        text.push('\n');
    }
    text.push_str(&write_netlist(netlist));
    write_out(out, &text)?;
    Ok(0)
}

fn cmd_gen(g: GenCmd) -> Res<u8> {
    match g {
        GenCmd::Np { cnf, ne, out } => {
            let parsed = parse_dimacs(&read(&cnf)?).map_err(|e| format!("{}: {e}", cnf.display()))?;
            let inst = np_hardness_instance(&parsed.clauses, parsed.num_vars as usize, ne)?;
            let mut header = vec![inst.provenance.clone()];
            if let Some(e) = inst.expected {
                header.push(format!("expected: {e:?}"));
            }
            emit_generated(&inst.netlist, &header, out.as_deref())
        }
        GenCmd::Random { seed, max_gates, max_regs, inputs, no_flag, out } => {
            let params = RandomParams { max_gates, max_regs, num_inputs: inputs, with_flag: !no_flag };
            let inst = random_netlist(seed, params);
            let header = vec![
                inst.provenance.clone(),
                format!("suggested k: {}", inst.suggested_k),
                format!("suggested blacklist: {}", inst.suggested_blacklist.join(" ")),
            ];
            emit_generated(&inst.netlist, &header, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::Simulate(a) => cmd_simulate(a),
        Cmd::Reduce(a) => cmd_reduce(a),
        Cmd::Encode(a) => cmd_encode(a),
        Cmd::Oracle(a) => cmd_oracle(a),
        Cmd::Gen(g) => cmd_gen(g),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("frv: error: {e}");
            ExitCode::from(2)
        }
    }
}
