//! End-to-end execution of the three MapReduce phases on a simulated
//! multicast bus, with exact bit accounting and a centralized oracle.
//!
//! The map and reduce functions the framework leaves abstract are stood in
//! for by a keyed PRF (SHA-256 of seed, indices, and file bytes, truncated
//! to T bits) and an XOR fold over all n IVs of a function. The fold needs
//! every IV, so a wrong or missing decoded value always surfaces in the
//! verification report.

use std::collections::BTreeMap;
use std::io::Write;

use num::BigRational;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::finite_field::FieldElement;
use crate::scheme::{
    decode_missing_ivs_with, encode_signals, required_iv_set, CodedSignal, DecodeMethod, IVKey,
    SchemeError, SchemePlan,
};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("world needs exactly {expected} files, got {got}")]
    WrongFileCount { expected: u32, got: usize },
    #[error("files must share one length of at least 1 byte (file {index} has {got} bytes, expected {expected})")]
    BadFileLength {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("decode failed at node {node}, file {file}: {source}")]
    DecodeFailure {
        node: u32,
        file: u32,
        source: SchemeError,
    },
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error("transcript write failed: {0}")]
    Io(#[from] std::io::Error),
}

// ---------------------------------------------------------------------------
// World and node state
// ---------------------------------------------------------------------------

/// The immutable inputs of one run: the plan, the n input files, and the
/// seed every pseudorandom choice flows from.
#[derive(Debug, Clone)]
pub struct World {
    plan: SchemePlan,
    files: Vec<Vec<u8>>,
    map_fn_seed: u64,
}

impl World {
    /// A world with deterministic seed-derived file contents.
    pub fn generate(plan: SchemePlan, file_len_bytes: usize, seed: u64) -> Result<Self, EngineError> {
        let n = plan.n();
        let len = file_len_bytes.max(1);
        let files = (0..n)
            .map(|i| {
                let mut bytes = Vec::with_capacity(len);
                let mut counter = 0u64;
                while bytes.len() < len {
                    let mut h = Sha256::new();
                    h.update(seed.to_le_bytes());
                    h.update(b"file");
                    h.update(i.to_le_bytes());
                    h.update(counter.to_le_bytes());
                    bytes.extend_from_slice(&h.finalize());
                    counter += 1;
                }
                bytes.truncate(len);
                bytes
            })
            .collect();
        World::with_files(plan, files, seed)
    }

    pub fn with_files(
        plan: SchemePlan,
        files: Vec<Vec<u8>>,
        map_fn_seed: u64,
    ) -> Result<Self, EngineError> {
        let n = plan.n();
        if files.len() != n as usize {
            return Err(EngineError::WrongFileCount {
                expected: n,
                got: files.len(),
            });
        }
        let expected = files[0].len();
        for (index, f) in files.iter().enumerate() {
            if f.is_empty() || f.len() != expected {
                return Err(EngineError::BadFileLength {
                    index,
                    got: f.len(),
                    expected: expected.max(1),
                });
            }
        }
        Ok(World {
            plan,
            files,
            map_fn_seed,
        })
    }

    pub fn plan(&self) -> &SchemePlan {
        &self.plan
    }

    pub fn files(&self) -> &[Vec<u8>] {
        &self.files
    }

    pub fn seed(&self) -> u64 {
        self.map_fn_seed
    }

    /// The toy map function g_{q,x}: a keyed PRF of (seed, q, x, file bytes)
    /// truncated to T bits.
    pub fn map_iv(&self, q: u32, x: u32) -> FieldElement {
        let mut h = Sha256::new();
        h.update(self.map_fn_seed.to_le_bytes());
        h.update(b"map");
        h.update(q.to_le_bytes());
        h.update(x.to_le_bytes());
        h.update(&self.files[x as usize]);
        let digest = h.finalize();
        let raw = u16::from_le_bytes([digest[0], digest[1]]);
        let mask = (self.plan.field().order() - 1) as u16;
        self.plan
            .field()
            .element((raw & mask) as u64)
            .expect("masked value is in range")
    }

    /// The toy reduce function h_q: XOR fold of all n IVs of function q.
    /// Order-independent but sensitive to every single input.
    pub fn reduce_fold(&self, values: impl IntoIterator<Item = FieldElement>) -> FieldElement {
        values
            .into_iter()
            .fold(self.plan.field().zero(), |acc, v| {
                acc.add(&v).expect("engine IVs share the plan field")
            })
    }

    /// Centralized reference value of u_q, computed from the files alone.
    pub fn oracle_output(&self, q: u32) -> FieldElement {
        self.reduce_fold((0..self.plan.n()).map(|x| self.map_iv(q, x)))
    }
}

/// Per-node state as the phases advance.
#[derive(Debug, Clone)]
pub struct NodeState {
    pub node_id: u32,
    pub stored_files: Vec<u32>,
    pub computed_ivs: BTreeMap<IVKey, FieldElement>,
    pub received_ivs: BTreeMap<IVKey, FieldElement>,
    pub reduced_outputs: BTreeMap<u32, FieldElement>,
}

// ---------------------------------------------------------------------------
// Phases
// ---------------------------------------------------------------------------

/// Map phase: every node computes v_{q,x} for all q and each stored x.
pub fn run_map_phase(world: &World) -> Vec<NodeState> {
    let plan = world.plan();
    let n = plan.n();
    (0..n)
        .map(|node| {
            let mut computed = BTreeMap::new();
            for q in 0..n {
                for &x in plan.placement(node) {
                    computed.insert(IVKey { q, x }, world.map_iv(q, x));
                }
            }
            NodeState {
                node_id: node,
                stored_files: plan.placement(node).to_vec(),
                computed_ivs: computed,
                received_ivs: BTreeMap::new(),
                reduced_outputs: BTreeMap::new(),
            }
        })
        .collect()
}

/// Everything multicast during the shuffle phase, with exact bit counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShuffleTranscript {
    pub signals: Vec<CodedSignal>,
    pub bits_sent_per_node: BTreeMap<u32, u64>,
}

impl ShuffleTranscript {
    pub fn total_bits(&self) -> u64 {
        self.bits_sent_per_node.values().sum()
    }

    /// Measured communication load: total bits / (Q * N * T).
    pub fn measured_load(&self, plan: &SchemePlan) -> BigRational {
        let denom = plan.n() as u64 * plan.n() as u64 * plan.field().width_bits() as u64;
        BigRational::new((self.total_bits() as i64).into(), (denom as i64).into())
    }

    /// One JSON object per signal: sender, file, slot, payload hex.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for sig in &self.signals {
            let record = SignalRecord {
                sender: sig.sender,
                file: sig.file,
                slot: sig.slot,
                payload: format!("{:04x}", sig.payload.value()),
            };
            serde_json::to_writer(&mut out, &record)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SignalRecord {
    sender: u32,
    file: u32,
    slot: u32,
    payload: String,
}

/// Shuffle phase: every node multicasts its coded signals onto the bus.
/// Only payload bits count toward the per-node totals.
pub fn run_shuffle_phase(
    states: &[NodeState],
    plan: &SchemePlan,
) -> Result<ShuffleTranscript, EngineError> {
    let t_bits = plan.field().width_bits() as u64;
    let mut signals = Vec::new();
    let mut bits = BTreeMap::new();
    for state in states {
        let sent = encode_signals(plan, state.node_id, &state.computed_ivs)?;
        bits.insert(state.node_id, sent.len() as u64 * t_bits);
        signals.extend(sent);
    }
    Ok(ShuffleTranscript {
        signals,
        bits_sent_per_node: bits,
    })
}

/// Reduce phase: every node decodes each group it computes, checks coverage
/// of its required IV set, and folds u_q for each assigned function.
pub fn run_reduce_phase(
    states: &mut [NodeState],
    transcript: &ShuffleTranscript,
    plan: &SchemePlan,
    world: &World,
) -> Result<(), EngineError> {
    run_reduce_phase_with(states, transcript, plan, world, DecodeMethod::Structural)
}

pub fn run_reduce_phase_with(
    states: &mut [NodeState],
    transcript: &ShuffleTranscript,
    plan: &SchemePlan,
    world: &World,
    method: DecodeMethod,
) -> Result<(), EngineError> {
    let n = plan.n();
    for state in states.iter_mut() {
        let node = state.node_id;
        for &q in plan.assignment(node) {
            let decoded = decode_missing_ivs_with(
                plan,
                node,
                q,
                &transcript.signals,
                &state.computed_ivs,
                method,
            )
            .map_err(|source| EngineError::DecodeFailure {
                node,
                file: q,
                source,
            })?;
            state.received_ivs.extend(decoded);
        }
        // every required IV must now be on hand
        for key in required_iv_set(plan, node)? {
            if !state.received_ivs.contains_key(&key) {
                return Err(EngineError::DecodeFailure {
                    node,
                    file: key.q,
                    source: SchemeError::IncompleteMapPhase {
                        node,
                        q: key.q,
                        x: key.x,
                    },
                });
            }
        }
        for &q in plan.assignment(node) {
            let values = (0..n).map(|x| {
                let key = IVKey { q, x };
                *state
                    .computed_ivs
                    .get(&key)
                    .or_else(|| state.received_ivs.get(&key))
                    .expect("coverage checked above")
            });
            let folded = world.reduce_fold(values);
            state.reduced_outputs.insert(q, folded);
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationEntry {
    pub node: u32,
    pub q: u32,
    pub expected: u16,
    pub actual: u16,
    pub ok: bool,
}

/// Per-(node, function) comparison against the centralized oracle, plus the
/// replication tally: each function must be produced by exactly t nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub entries: Vec<VerificationEntry>,
    pub producers_per_function: BTreeMap<u32, Vec<u32>>,
    pub replication: u32,
}

impl VerificationReport {
    pub fn pass(&self) -> bool {
        self.entries.iter().all(|e| e.ok)
            && self
                .producers_per_function
                .values()
                .all(|nodes| nodes.len() == self.replication as usize)
    }

    pub fn mismatches(&self) -> impl Iterator<Item = &VerificationEntry> {
        self.entries.iter().filter(|e| !e.ok)
    }
}

/// Recomputes every u_q from the raw files (no coding involved) and compares
/// with what each assigned node produced.
pub fn verify_against_oracle(world: &World, states: &[NodeState]) -> VerificationReport {
    let plan = world.plan();
    let n = plan.n();
    let oracle: BTreeMap<u32, FieldElement> =
        (0..n).map(|q| (q, world.oracle_output(q))).collect();
    let mut entries = Vec::new();
    let mut producers: BTreeMap<u32, Vec<u32>> = (0..n).map(|q| (q, Vec::new())).collect();
    for state in states {
        for (&q, &actual) in &state.reduced_outputs {
            producers.entry(q).or_default().push(state.node_id);
            let expected = oracle[&q];
            entries.push(VerificationEntry {
                node: state.node_id,
                q,
                expected: expected.value(),
                actual: actual.value(),
                ok: expected == actual,
            });
        }
    }
    VerificationReport {
        entries,
        producers_per_function: producers,
        replication: plan.t(),
    }
}

/// Flips one payload bit of one transcript signal, for fault-injection runs.
pub fn corrupt_payload_bit(
    transcript: &mut ShuffleTranscript,
    signal_index: usize,
    bit: u32,
) -> Result<(), SchemeError> {
    let sig = &mut transcript.signals[signal_index];
    let field = sig.payload.spec();
    let flipped = (sig.payload.value() as u64) ^ (1u64 << (bit % field.width_bits()));
    sig.payload = field.element(flipped)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// One-call simulation
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct SimulationOutcome {
    pub world: World,
    pub states: Vec<NodeState>,
    pub transcript: ShuffleTranscript,
    pub report: VerificationReport,
    pub measured_load: BigRational,
    pub predicted_load: BigRational,
}

impl SimulationOutcome {
    pub fn load_matches(&self) -> bool {
        self.measured_load == self.predicted_load
    }
}

/// Runs map, shuffle, and reduce, then verifies every output.
pub fn run_simulation(
    plan: SchemePlan,
    file_len_bytes: usize,
    seed: u64,
) -> Result<SimulationOutcome, EngineError> {
    let world = World::generate(plan, file_len_bytes, seed)?;
    let mut states = run_map_phase(&world);
    let transcript = run_shuffle_phase(&states, world.plan())?;
    let plan_copy = world.plan().clone();
    run_reduce_phase(&mut states, &transcript, &plan_copy, &world)?;
    let report = verify_against_oracle(&world, &states);
    let measured_load = transcript.measured_load(world.plan());
    let predicted_load = crate::scheme::communication_load(world.plan());
    Ok(SimulationOutcome {
        world,
        states,
        transcript,
        report,
        measured_load,
        predicted_load,
    })
}
