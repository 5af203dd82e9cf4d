//! SAT-based fault-resistance verification for gate-level circuits hardened
//! with detection or correction countermeasures.
//!
//! The pipeline is: parse a netlist ([`netlist_io`]), build and unroll the
//! sequential circuit ([`circuit`]), shrink the fault space
//! ([`reductions`]), instrument every vulnerable gate with a fault gadget
//! ([`fault_encoder`]), and decide the miter with a SAT backend ([`sat`]).
//! Counterexamples are replayed on the cycle-accurate [`simulator`];
//! [`oracle`] provides exhaustive ground truth for small circuits.

pub mod circuit;
pub mod fault_encoder;
pub mod netlist_io;
pub mod oracle;
pub mod reductions;
pub mod report;
pub mod sat;
pub mod simulator;

pub use circuit::{
    build_and_validate, fault_locations, unroll, Blacklist, FaultResistanceModel, GateInstance,
    GateKind, Location, SequentialCircuit, UnrolledCircuit,
};
pub use netlist_io::{parse_config, parse_netlist, write_netlist, NetlistDoc, VerificationConfig};
pub use sat::verify::{verify, verify_with_golden, Counterexample, Verdict, VerdictKind};
pub use simulator::{FaultEvent, FaultType, FaultVector};
