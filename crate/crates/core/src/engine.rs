//! The PBC procedure: every measurement of an adaptive Clifford circuit is
//! pulled back to the circuit front, pushed through the V-corrections of
//! earlier anti-commuting measurements, and classified as
//!
//! * (i) anti-commuting with a stabilizer or an earlier measurement: the
//!   outcome is a fair coin and a [`VUnitary`] replaces the measurement;
//! * (ii) in the span of earlier measurements: the outcome is inferred;
//! * (iii) otherwise: its magic-register part is measured by the backend.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::circuit::{BitId, Instruction};
use crate::gadget::AdaptiveCliffordCircuit;
use crate::greedy::{self, GreedyConfig, GreedyError};
use crate::pauli::{Direction, Pauli, PauliOperator, VUnitary};
use crate::statevec::{Outcome, StateError, StateVector};

pub const DEFAULT_STATEVECTOR_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("step {step}: back-propagation crosses a gate conditioned on unresolved bit {bit}")]
    UnresolvedBit { step: usize, bit: BitId },
    #[error("instruction {0} is not a Clifford operation; gadgetize first")]
    NonClifford(usize),
    #[error("invalid processing order: {0}")]
    InvalidOrder(String),
    #[error("step {step} depends on later step {dep}")]
    CyclicDependency { step: usize, dep: usize },
    #[error("operator {0} is not Hermitian")]
    NotHermitian(String),
    #[error("backend: {0}")]
    Backend(String),
    #[error("magic register of {t} qubits exceeds statevector cap {cap}")]
    TooManyMagicQubits { t: usize, cap: usize },
    #[error(transparent)]
    Greedy(#[from] GreedyError),
}

impl From<StateError> for EngineError {
    fn from(e: StateError) -> Self {
        EngineError::Backend(e.to_string())
    }
}

fn pauli_text<S: Serializer>(p: &PauliOperator, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&p.to_string())
}

fn opt_pauli_text<S: Serializer>(p: &Option<PauliOperator>, s: S) -> Result<S::Ok, S::Error> {
    match p {
        Some(p) => s.serialize_some(&p.to_string()),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    #[serde(rename = "i")]
    Anticommuting,
    #[serde(rename = "ii")]
    Dependent,
    #[serde(rename = "iii")]
    Quantum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    /// `Z_q` on stabilizer-register qubit `q`.
    Stabilizer(usize),
    /// An earlier case-(iii) step.
    Measured(usize),
}

/// Result of [`PbcFrame::classify`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Classification {
    Anticommuting { witness: Witness },
    /// `subset` lists step ids; `outcome` is the inferred bit.
    Dependent { subset: Vec<usize>, outcome: bool },
    Quantum { magic: PauliOperator },
}

#[derive(Debug, Clone)]
struct MeasuredEntry {
    step: usize,
    full: PauliOperator,
    magic: PauliOperator,
    outcome: bool,
}

/// Incremental GF(2) row basis with combination masks.
#[derive(Debug, Clone, Default)]
struct Gf2Basis {
    rows: Vec<(usize, Vec<u64>, Vec<u64>)>,
}

fn pack(p: &PauliOperator) -> Vec<u64> {
    p.x_words().iter().chain(p.z_words()).copied().collect()
}

fn bit(v: &[u64], i: usize) -> bool {
    (v[i / 64] >> (i % 64)) & 1 == 1
}

fn xor_into(a: &mut [u64], b: &[u64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x ^= y;
    }
}

impl Gf2Basis {
    /// Reduces `v`; returns the residue and the mask of combined entries.
    fn reduce(&self, mut v: Vec<u64>, mask_words: usize) -> (Vec<u64>, Vec<u64>) {
        let mut combo = vec![0u64; mask_words];
        for (pivot, row, rc) in &self.rows {
            if bit(&v, *pivot) {
                xor_into(&mut v, row);
                xor_into(&mut combo, rc);
            }
        }
        (v, combo)
    }

    fn insert(&mut self, v: Vec<u64>, index: usize, mask_words: usize) {
        let (res, mut combo) = self.reduce(v, mask_words);
        let pivot = res
            .iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
            .expect("inserting a dependent vector");
        combo[index / 64] ^= 1 << (index % 64);
        self.rows.push((pivot, res, combo));
    }
}

#[derive(Debug, Clone)]
struct VEntry {
    v: VUnitary,
    step: usize,
    form_deps: BTreeSet<usize>,
    sign_deps: BTreeSet<usize>,
}

/// Stabilizer record of one shot: the stabilizer register `Z_0..Z_{n-1}`,
/// the case-(iii) measurements with outcomes, and the V-corrections.
#[derive(Debug, Clone)]
pub struct PbcFrame {
    n: usize,
    t: usize,
    measured: Vec<MeasuredEntry>,
    basis: Gf2Basis,
    v_stack: Vec<VEntry>,
    deps: Vec<(BTreeSet<usize>, BTreeSet<usize>)>,
}

impl PbcFrame {
    pub fn new(num_data: usize, magic_count: usize) -> Self {
        Self {
            n: num_data,
            t: magic_count,
            measured: Vec::new(),
            basis: Gf2Basis::default(),
            v_stack: Vec::new(),
            deps: Vec::new(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.n + self.t
    }

    fn mask_words(&self) -> usize {
        self.t.div_ceil(64).max(1)
    }

    pub fn measured_count(&self) -> usize {
        self.measured.len()
    }

    /// Magic-register operators and outcomes of the case-(iii) steps so far.
    pub fn measured_magic(&self) -> (Vec<PauliOperator>, Vec<bool>) {
        (
            self.measured.iter().map(|m| m.magic.clone()).collect(),
            self.measured.iter().map(|m| m.outcome).collect(),
        )
    }

    /// Records a case-(iii) measurement. `full` must act as `Z`/`I` on the
    /// stabilizer register; only its magic part is kept.
    pub fn record_measured(&mut self, full: &PauliOperator, outcome: bool, step: usize) {
        let magic = full.restrict(self.n..self.n + self.t);
        let words = self.mask_words();
        self.basis.insert(pack(&magic), self.measured.len(), words);
        self.measured.push(MeasuredEntry {
            step,
            full: magic.embed(self.num_qubits(), self.n),
            magic,
            outcome,
        });
    }

    /// Classification of a Hermitian operator already at the circuit front.
    pub fn classify(&self, p: &PauliOperator) -> Result<Classification, EngineError> {
        if !p.is_hermitian() {
            return Err(EngineError::NotHermitian(p.to_string()));
        }
        if let Some(d) = (0..self.n).find(|&d| p.x_bit(d)) {
            return Ok(Classification::Anticommuting { witness: Witness::Stabilizer(d) });
        }
        let magic = p.restrict(self.n..self.n + self.t);
        if let Some(m) = self.measured.iter().find(|m| !m.magic.commutes_with(&magic)) {
            return Ok(Classification::Anticommuting { witness: Witness::Measured(m.step) });
        }
        let (res, combo) = self.basis.reduce(pack(&magic), self.mask_words());
        if res.iter().any(|&w| w != 0) {
            return Ok(Classification::Quantum { magic });
        }
        let mut prod = PauliOperator::identity(self.t);
        let mut parity = false;
        let mut subset = Vec::new();
        for (j, m) in self.measured.iter().enumerate() {
            if bit(&combo, j) {
                prod = prod.multiply(&m.magic);
                parity ^= m.outcome;
                subset.push(m.step);
            }
        }
        debug_assert!(prod.same_letters(&magic));
        let flip = prod.phase_exp() != magic.phase_exp();
        Ok(Classification::Dependent { subset, outcome: parity ^ flip })
    }

    fn witness_operator(&self, w: Witness) -> (PauliOperator, bool) {
        match w {
            Witness::Stabilizer(d) => (PauliOperator::single(self.num_qubits(), d, Pauli::Z), false),
            Witness::Measured(step) => {
                let m = self.measured.iter().find(|m| m.step == step).expect("witness step");
                (m.full.clone(), m.outcome)
            }
        }
    }
}

/// Source of measurement outcomes for case (i) coins and case (iii) measurements.
pub trait OutcomeBackend {
    fn coin(&mut self) -> bool;
    fn measure(&mut self, p_magic: &PauliOperator) -> Result<bool, EngineError>;
}

/// Uniform outcomes, ignoring the state.
pub struct DummyBackend<R: Rng> {
    rng: R,
}

impl<R: Rng> DummyBackend<R> {
    pub fn new(rng: R) -> Self {
        Self { rng }
    }
}

impl<R: Rng> OutcomeBackend for DummyBackend<R> {
    fn coin(&mut self) -> bool {
        self.rng.gen()
    }

    fn measure(&mut self, _p: &PauliOperator) -> Result<bool, EngineError> {
        Ok(self.rng.gen())
    }
}

/// Every outcome is 0.
#[derive(Debug, Default, Clone, Copy)]
pub struct FixedPathBackend;

impl OutcomeBackend for FixedPathBackend {
    fn coin(&mut self) -> bool {
        false
    }

    fn measure(&mut self, _p: &PauliOperator) -> Result<bool, EngineError> {
        Ok(false)
    }
}

/// Coins taken from a fixed script (then from `rng` once exhausted);
/// measurements drawn uniformly from `rng`.
pub struct ScriptedBackend<R: Rng> {
    coins: Vec<bool>,
    pos: usize,
    rng: R,
}

impl<R: Rng> ScriptedBackend<R> {
    pub fn new(coins: Vec<bool>, rng: R) -> Self {
        Self { coins, pos: 0, rng }
    }
}

impl<R: Rng> OutcomeBackend for ScriptedBackend<R> {
    fn coin(&mut self) -> bool {
        let c = self.coins.get(self.pos).copied().unwrap_or_else(|| self.rng.gen());
        self.pos += 1;
        c
    }

    fn measure(&mut self, _p: &PauliOperator) -> Result<bool, EngineError> {
        Ok(self.rng.gen())
    }
}

/// Projective measurements on `|T⟩^{⊗t}`.
pub struct StatevectorBackend<R: Rng> {
    state: StateVector,
    rng: R,
    history: Vec<PauliOperator>,
}

impl<R: Rng> StatevectorBackend<R> {
    pub fn new(t: usize, cap: usize, rng: R) -> Result<Self, EngineError> {
        if t > cap {
            return Err(EngineError::TooManyMagicQubits { t, cap });
        }
        Ok(Self { state: StateVector::magic(t)?, rng, history: Vec::new() })
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }
}

impl<R: Rng> OutcomeBackend for StatevectorBackend<R> {
    fn coin(&mut self) -> bool {
        self.rng.gen()
    }

    fn measure(&mut self, p: &PauliOperator) -> Result<bool, EngineError> {
        if let Some(h) = self.history.iter().find(|h| !h.commutes_with(p)) {
            return Err(EngineError::Backend(format!("{p} anti-commutes with earlier {h}")));
        }
        self.history.push(p.clone());
        Ok(self.state.measure_pauli(p, &mut self.rng)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    #[default]
    Dummy,
    FixedPath,
    Statevector,
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "dummy" => Ok(Self::Dummy),
            "fixed-path" => Ok(Self::FixedPath),
            "statevector" => Ok(Self::Statevector),
            _ => Err(format!("unknown backend '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PbcStep {
    pub id: usize,
    pub source: BitId,
    /// Instruction index of the measurement in the adaptive circuit.
    pub instruction: usize,
    /// The operator after the circuit gates, before the V-corrections.
    #[serde(serialize_with = "pauli_text")]
    pub front: PauliOperator,
    #[serde(serialize_with = "pauli_text")]
    pub pauli_full: PauliOperator,
    #[serde(serialize_with = "pauli_text")]
    pub pauli_magic: PauliOperator,
    /// What the backend measured (case iii), after any greedy substitution.
    #[serde(serialize_with = "opt_pauli_text")]
    pub measured: Option<PauliOperator>,
    pub case: Case,
    pub witness: Option<Witness>,
    /// Case (ii): the steps whose product reproduces this operator.
    pub subset: Vec<usize>,
    pub outcome: bool,
    /// Steps whose outcomes change the letters of this operator.
    pub depends_on: BTreeSet<usize>,
    /// Steps whose outcomes only change its sign or inferred value.
    pub sign_depends_on: BTreeSet<usize>,
    /// Case-(i) steps whose V-correction acted non-trivially.
    pub v_applied: Vec<usize>,
    pub layer: usize,
    /// Layer after which the outcome value is known classically.
    pub available_after: usize,
    pub original_weight: usize,
    pub weight: usize,
    pub greedy_visits: u64,
    pub greedy_distinct: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShotStats {
    pub r: usize,
    pub avg_weight: f64,
    pub avg_weight_original: f64,
    pub max_weight: usize,
    pub d_pbc: usize,
    /// Depth when case-(ii) inferences are also charged a layer.
    pub d_pbc_conservative: usize,
    pub case_ii_changes_depth: bool,
    pub greedy_visits: u64,
    pub greedy_distinct: u64,
}

pub const PROGRAM_FORMAT: &str = "pbc-program";
pub const PROGRAM_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct PbcProgram {
    pub format: &'static str,
    pub version: u32,
    pub model: &'static str,
    pub num_data: usize,
    pub magic_count: usize,
    pub steps: Vec<PbcStep>,
    /// Readout bits of data qubits 0..n−1 (`-` for unmeasured).
    pub sample: String,
    #[serde(skip)]
    pub readout: Outcome,
    pub stats: ShotStats,
}

impl PbcProgram {
    pub fn quantum_steps(&self) -> impl Iterator<Item = &PbcStep> {
        self.steps.iter().filter(|s| s.case == Case::Quantum)
    }

    pub fn step_for(&self, bit: BitId) -> Option<&PbcStep> {
        self.steps.iter().find(|s| s.source == bit)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("program serializes")
    }
}

/// Measurement instruction indices in circuit order.
pub fn circuit_order(ac: &AdaptiveCliffordCircuit) -> Vec<usize> {
    ac.instructions()
        .iter()
        .enumerate()
        .filter(|(_, i)| matches!(i, Instruction::Measure { .. }))
        .map(|(k, _)| k)
        .collect()
}

fn validate_order(ac: &AdaptiveCliffordCircuit, order: &[usize]) -> Result<(), EngineError> {
    let mut expect = circuit_order(ac);
    let mut got = order.to_vec();
    expect.sort_unstable();
    got.sort_unstable();
    if expect != got {
        return Err(EngineError::InvalidOrder(
            "order must be a permutation of the measurement instructions".into(),
        ));
    }
    Ok(())
}

/// Runs one shot in circuit order.
pub fn run_shot(
    ac: &AdaptiveCliffordCircuit,
    backend: &mut dyn OutcomeBackend,
    greedy: &GreedyConfig,
    greedy_rng: &mut dyn rand::RngCore,
) -> Result<PbcProgram, EngineError> {
    let order = circuit_order(ac);
    run_shot_ordered(ac, &order, backend, greedy, greedy_rng)
}

/// Runs one shot processing measurements in `order` (instruction indices).
pub fn run_shot_ordered(
    ac: &AdaptiveCliffordCircuit,
    order: &[usize],
    backend: &mut dyn OutcomeBackend,
    greedy: &GreedyConfig,
    greedy_rng: &mut dyn rand::RngCore,
) -> Result<PbcProgram, EngineError> {
    validate_order(ac, order)?;
    let n = ac.num_data;
    let t = ac.magic_count;
    let nq = ac.num_qubits();
    let insts = ac.instructions();
    let mut frame = PbcFrame::new(n, t);
    let mut log: HashMap<BitId, (bool, usize)> = HashMap::new();
    let mut steps: Vec<PbcStep> = Vec::with_capacity(order.len());

    for &k in order {
        let id = steps.len();
        let (qubit, source) = match insts[k] {
            Instruction::Measure { qubit, bit } => (qubit, bit),
            _ => unreachable!("validated order"),
        };
        let mut op = PauliOperator::single(nq, qubit, Pauli::Z);
        let mut form_deps = BTreeSet::new();
        let mut sign_deps = BTreeSet::new();
        for (i, inst) in insts[..k].iter().enumerate().rev() {
            match inst {
                Instruction::Clifford(g) => op.conjugate_in_place(g, Direction::Backward),
                Instruction::Measure { .. } => {}
                Instruction::T(_) | Instruction::Tdg(_) => return Err(EngineError::NonClifford(i)),
                Instruction::Controlled { gate, condition } => {
                    let conj = op.conjugate_by_gate(gate, Direction::Backward);
                    if conj == op {
                        continue;
                    }
                    let fire = condition.evaluate(|b| log.get(&b).map(|e| e.0));
                    let Some(fire) = fire else {
                        let bit = *condition
                            .bits
                            .iter()
                            .find(|b| !log.contains_key(b))
                            .expect("some bit unresolved");
                        return Err(EngineError::UnresolvedBit { step: id, bit });
                    };
                    let target = if conj.same_letters(&op) { &mut sign_deps } else { &mut form_deps };
                    for b in &condition.bits {
                        target.insert(log[b].1);
                    }
                    if fire {
                        op = conj;
                    }
                }
            }
        }
        let front = op.clone();
        let mut v_applied = Vec::new();
        for ve in &frame.v_stack {
            let c1 = op.commutes_with(&ve.v.first);
            let c2 = op.commutes_with(&ve.v.second);
            if c1 && c2 {
                continue;
            }
            v_applied.push(ve.step);
            if !c1 && !c2 {
                sign_deps.extend(ve.form_deps.iter().copied());
            } else {
                form_deps.extend(ve.form_deps.iter().copied());
                sign_deps.extend(ve.sign_deps.iter().copied());
                sign_deps.insert(ve.step);
            }
            op = ve.v.conjugate(&op);
        }

        let class = frame.classify(&op)?;
        let magic = op.restrict(n..nq);
        let mut step = PbcStep {
            id,
            source,
            instruction: k,
            front,
            pauli_full: op.clone(),
            pauli_magic: magic.clone(),
            measured: None,
            case: Case::Quantum,
            witness: None,
            subset: Vec::new(),
            outcome: false,
            depends_on: BTreeSet::new(),
            sign_depends_on: BTreeSet::new(),
            v_applied,
            layer: 0,
            available_after: 0,
            original_weight: magic.weight(),
            weight: magic.weight(),
            greedy_visits: 0,
            greedy_distinct: 0,
        };
        match class {
            Classification::Anticommuting { witness } => {
                let coin = backend.coin();
                let (first, sigma_first) = frame.witness_operator(witness);
                let v = VUnitary::new(first, op.clone(), sigma_first, coin)
                    .map_err(|e| EngineError::Backend(e.to_string()))?;
                let mut vf = form_deps.clone();
                let mut vs = sign_deps.clone();
                if let Witness::Measured(w) = witness {
                    vf.extend(frame.deps[w].0.iter().copied());
                    vs.extend(frame.deps[w].1.iter().copied());
                    vs.insert(w);
                }
                frame.v_stack.push(VEntry { v, step: id, form_deps: vf, sign_deps: vs });
                step.case = Case::Anticommuting;
                step.witness = Some(witness);
                step.outcome = coin;
            }
            Classification::Dependent { subset, outcome } => {
                step.case = Case::Dependent;
                sign_deps.extend(subset.iter().copied());
                step.subset = subset;
                step.outcome = outcome;
            }
            Classification::Quantum { magic } => {
                let (lp, ls) = frame.measured_magic();
                let g = greedy::reduce(greedy, &lp, &ls, &magic, greedy_rng)?;
                let outcome = backend.measure(&g.operator)?;
                step.weight = g.weight;
                step.greedy_visits = g.visits;
                step.greedy_distinct = g.distinct;
                step.measured = Some(g.operator);
                step.outcome = outcome;
                frame.record_measured(&op, outcome, id);
            }
        }
        frame.deps.push((form_deps.clone(), sign_deps.clone()));
        step.depends_on = form_deps;
        step.sign_depends_on = sign_deps;
        log.insert(source, (step.outcome, id));
        steps.push(step);
    }

    let (d_pbc, d_cons) = assign_layers(&mut steps)?;
    let mut readout: Outcome = 0;
    let mut sample = vec!['-'; n];
    for (bit, (v, _)) in &log {
        if let BitId::Readout(q) = bit {
            if *q < n {
                sample[*q] = if *v { '1' } else { '0' };
                if *v {
                    readout |= 1 << q;
                }
            }
        }
    }
    let q: Vec<&PbcStep> = steps.iter().filter(|s| s.case == Case::Quantum).collect();
    let r = q.len();
    let mean = |f: &dyn Fn(&PbcStep) -> usize| {
        if r == 0 {
            0.0
        } else {
            q.iter().map(|s| f(s)).sum::<usize>() as f64 / r as f64
        }
    };
    let stats = ShotStats {
        r,
        avg_weight: mean(&|s| s.weight),
        avg_weight_original: mean(&|s| s.original_weight),
        max_weight: q.iter().map(|s| s.weight).max().unwrap_or(0),
        d_pbc,
        d_pbc_conservative: d_cons,
        case_ii_changes_depth: d_pbc != d_cons,
        greedy_visits: q.iter().map(|s| s.greedy_visits).sum(),
        greedy_distinct: q.iter().map(|s| s.greedy_distinct).sum(),
    };
    Ok(PbcProgram {
        format: PROGRAM_FORMAT,
        version: PROGRAM_VERSION,
        model: "pbc",
        num_data: n,
        magic_count: t,
        steps,
        sample: sample.into_iter().collect(),
        readout,
        stats,
    })
}

/// Assigns layers and returns `(d_pbc, d_pbc_conservative)`.
///
/// A case-(iii) step sits one layer after the latest availability among its
/// `depends_on`; its value becomes available at
/// `max(layer, availability of sign_depends_on)`. Coins are available at 0,
/// inferred outcomes when all their inputs are.
pub fn assign_layers(steps: &mut [PbcStep]) -> Result<(usize, usize), EngineError> {
    let mut avail = vec![0usize; steps.len()];
    let mut avail_c = vec![0usize; steps.len()];
    let mut d = 0;
    let mut d_c = 0;
    for i in 0..steps.len() {
        let s = &steps[i];
        for &dep in s.depends_on.iter().chain(&s.sign_depends_on) {
            if dep >= i {
                return Err(EngineError::CyclicDependency { step: i, dep });
            }
        }
        let max_of = |a: &[usize], set: &BTreeSet<usize>| set.iter().map(|&j| a[j]).max().unwrap_or(0);
        let form = max_of(&avail, &s.depends_on);
        let sign = max_of(&avail, &s.sign_depends_on);
        let form_c = max_of(&avail_c, &s.depends_on);
        let sign_c = max_of(&avail_c, &s.sign_depends_on);
        let (layer, av, av_c) = match s.case {
            Case::Quantum => {
                let l = form + 1;
                let l_c = form_c + 1;
                d = d.max(l);
                d_c = d_c.max(l_c);
                (l, l.max(sign), l_c.max(sign_c))
            }
            Case::Anticommuting => (form, 0, 0),
            Case::Dependent => {
                let l_c = form_c.max(sign_c) + 1;
                d_c = d_c.max(l_c);
                (form.max(sign), form.max(sign), l_c)
            }
        };
        avail[i] = av;
        avail_c[i] = av_c;
        steps[i].layer = layer;
        steps[i].available_after = av;
    }
    Ok((d, d_c.max(d)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub shots: usize,
    pub seed: u64,
    pub backend: BackendKind,
    pub greedy: GreedyConfig,
    pub statevector_cap: usize,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            shots: 1024,
            seed: 0,
            backend: BackendKind::Dummy,
            greedy: GreedyConfig::default(),
            statevector_cap: DEFAULT_STATEVECTOR_CAP,
        }
    }
}

/// Outcome RNG of shot `shot`: the base seed with the shot index as stream.
pub fn shot_rng(seed: u64, shot: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot as u64);
    rng
}

/// One shot with freshly derived RNGs; identical inputs give identical programs.
pub fn run_seeded_shot(
    ac: &AdaptiveCliffordCircuit,
    order: Option<&[usize]>,
    cfg: &SampleConfig,
    shot: usize,
) -> Result<PbcProgram, EngineError> {
    let rng = shot_rng(cfg.seed, shot);
    let mut grng = shot_rng(cfg.greedy.seed ^ 0x9e37_79b9_7f4a_7c15, shot);
    let default_order;
    let order = match order {
        Some(o) => o,
        None => {
            default_order = circuit_order(ac);
            &default_order
        }
    };
    match cfg.backend {
        BackendKind::Dummy => {
            run_shot_ordered(ac, order, &mut DummyBackend::new(rng), &cfg.greedy, &mut grng)
        }
        BackendKind::FixedPath => {
            run_shot_ordered(ac, order, &mut FixedPathBackend, &cfg.greedy, &mut grng)
        }
        BackendKind::Statevector => {
            let mut b = StatevectorBackend::new(ac.magic_count, cfg.statevector_cap, rng)?;
            run_shot_ordered(ac, order, &mut b, &cfg.greedy, &mut grng)
        }
    }
}

/// All shots, in parallel, returned in shot order.
pub fn run_shots(
    ac: &AdaptiveCliffordCircuit,
    order: Option<&[usize]>,
    cfg: &SampleConfig,
) -> Result<Vec<PbcProgram>, EngineError> {
    (0..cfg.shots)
        .into_par_iter()
        .map(|s| run_seeded_shot(ac, order, cfg, s))
        .collect()
}

/// Readout histogram over shots.
pub fn histogram(programs: &[PbcProgram]) -> BTreeMap<Outcome, usize> {
    let mut h = BTreeMap::new();
    for p in programs {
        *h.entry(p.readout).or_insert(0) += 1;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Circuit;
    use crate::gadget::gadgetize;

    fn p(s: &str, n: usize) -> PauliOperator {
        PauliOperator::parse(s, n).unwrap()
    }

    #[test]
    fn classify_fresh_frame() {
        let f = PbcFrame::new(2, 2);
        assert_eq!(
            f.classify(&p("X1", 4)).unwrap(),
            Classification::Anticommuting { witness: Witness::Stabilizer(0) }
        );
        assert!(matches!(f.classify(&p("Z1Z3", 4)).unwrap(), Classification::Quantum { .. }));
        assert!(f.classify(&p("iZ1", 4)).is_err());
    }

    #[test]
    fn classify_dependent_with_phase() {
        let mut f = PbcFrame::new(2, 2);
        f.record_measured(&p("Z3Z4", 4), true, 0);
        assert_eq!(
            f.classify(&p("Z3Z4", 4)).unwrap(),
            Classification::Dependent { subset: vec![0], outcome: true }
        );
        let mut f = PbcFrame::new(2, 2);
        f.record_measured(&p("X3X4", 4), false, 0);
        f.record_measured(&p("Z3Z4", 4), true, 1);
        // (X3X4)(Z3Z4) = -Y3Y4, so -Y3Y4 has eigenvalue (+1)(-1).
        assert_eq!(
            f.classify(&p("-Y3Y4", 4)).unwrap(),
            Classification::Dependent { subset: vec![0, 1], outcome: true }
        );
        assert_eq!(
            f.classify(&p("Y3Y4", 4)).unwrap(),
            Classification::Dependent { subset: vec![0, 1], outcome: false }
        );
        // A data Z factor is stabilized and drops out.
        assert_eq!(
            f.classify(&p("-Z1Z3Z4", 4)).unwrap(),
            Classification::Dependent { subset: vec![1], outcome: false }
        );
    }

    #[test]
    fn layering_examples() {
        let c = Circuit::parse("qubits 1\nh 0\nt 0\nh 0\nmeasure 0").unwrap();
        let ac = gadgetize(&c);
        let prog = run_shot(
            &ac,
            &mut FixedPathBackend,
            &GreedyConfig::off(),
            &mut rand::rngs::mock::StepRng::new(0, 1),
        )
        .unwrap();
        assert!(prog.stats.r <= 1);
        assert!(prog.stats.d_pbc <= 1);
    }

    #[test]
    fn clifford_only_has_no_quantum_steps() {
        let c = Circuit::parse("qubits 3\nh 0\ncx 0 1\ns 1\ncz 1 2\nh 2\nmeasure 0\nmeasure 1\nmeasure 2")
            .unwrap();
        let ac = gadgetize(&c);
        let cfg = SampleConfig { shots: 64, ..Default::default() };
        for prog in run_shots(&ac, None, &cfg).unwrap() {
            assert_eq!(prog.stats.r, 0);
            assert_eq!(prog.stats.d_pbc, 0);
        }
    }

    #[test]
    fn chain_layering() {
        let mk = |id: usize, deps: &[usize]| PbcStep {
            id,
            source: BitId::Gadget(id),
            instruction: id,
            front: PauliOperator::identity(1),
            pauli_full: PauliOperator::identity(1),
            pauli_magic: PauliOperator::identity(1),
            measured: None,
            case: Case::Quantum,
            witness: None,
            subset: vec![],
            outcome: false,
            depends_on: deps.iter().copied().collect(),
            sign_depends_on: BTreeSet::new(),
            v_applied: vec![],
            layer: 0,
            available_after: 0,
            original_weight: 0,
            weight: 0,
            greedy_visits: 0,
            greedy_distinct: 0,
        };
        let mut indep: Vec<PbcStep> = (0..4).map(|i| mk(i, &[])).collect();
        assert_eq!(assign_layers(&mut indep).unwrap().0, 1);
        let mut chain: Vec<PbcStep> = (0..4).map(|i| mk(i, &[])).collect();
        let chain_deps: Vec<Vec<usize>> = (0..4).map(|i| if i == 0 { vec![] } else { vec![i - 1] }).collect();
        for (s, d) in chain.iter_mut().zip(&chain_deps) {
            s.depends_on = d.iter().copied().collect();
        }
        assert_eq!(assign_layers(&mut chain).unwrap().0, 4);
        let mut bad = vec![mk(0, &[1]), mk(1, &[])];
        assert!(assign_layers(&mut bad).is_err());
    }
}
