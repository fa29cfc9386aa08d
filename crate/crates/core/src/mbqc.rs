//! One-way (1WQC) pre-compilation: measurement patterns on a graph state,
//! their adaptive circuits, PBC under the processing orders O1/O2/O3, bound
//! checks and closed-form oracles for the arriving operators.
//!
//! Qubits are 0-based. Layers are contiguous index blocks: layer `i` holds
//! qubits `Σ_{j<i} κ_j .. Σ_{j≤i} κ_j`. Data qubit `k` of the circuit is
//! graph vertex `k`; its magic qubit is `t + k`.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{BitId, Circuit, Condition, Instruction};
use crate::engine::{self, Case, EngineError, OutcomeBackend, PbcProgram};
use crate::gadget::{gadgetize, AdaptiveCliffordCircuit};
use crate::greedy::GreedyConfig;
use crate::pauli::{CliffordGate, Direction, Pauli, PauliOperator, VUnitary};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatternError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid pattern: {0}")]
    Invalid(String),
    #[error("oracle requires a single-layer pattern, got {0} layers")]
    NotSingleLayer(usize),
    #[error("inconsistent anti-commuting set: {0}")]
    InconsistentSet(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementPattern {
    pub t: usize,
    /// Layer sizes κ_1..κ_d.
    pub layers: Vec<usize>,
    /// Undirected edges, stored with `a < b`, sorted.
    pub edges: Vec<(usize, usize)>,
    /// `deps[k]` = I_k, the earlier-layer qubits whose outcome parity is f_k.
    pub deps: Vec<Vec<usize>>,
}

impl MeasurementPattern {
    pub fn new(
        t: usize,
        layers: Vec<usize>,
        edges: Vec<(usize, usize)>,
        deps: Vec<Vec<usize>>,
    ) -> Result<Self, PatternError> {
        let mut edges: Vec<(usize, usize)> = edges.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
        edges.sort_unstable();
        edges.dedup();
        let mut deps = deps;
        for d in &mut deps {
            d.sort_unstable();
            d.dedup();
        }
        let p = Self { t, layers, edges, deps };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), PatternError> {
        let bad = |s: String| Err(PatternError::Invalid(s));
        if self.layers.iter().sum::<usize>() != self.t {
            return bad(format!("layer sizes sum to {} not t = {}", self.layers.iter().sum::<usize>(), self.t));
        }
        if self.layers.contains(&0) {
            return bad("empty layer".into());
        }
        if self.deps.len() != self.t {
            return bad(format!("{} dependency sets for {} qubits", self.deps.len(), self.t));
        }
        for &(a, b) in &self.edges {
            if a == b {
                return bad(format!("self-edge on {a}"));
            }
            if b >= self.t {
                return bad(format!("edge ({a},{b}) out of range"));
            }
        }
        for (k, d) in self.deps.iter().enumerate() {
            for &j in d {
                if j >= self.t || self.layer_of(j) >= self.layer_of(k) {
                    return bad(format!("qubit {k} depends on {j}, which is not in an earlier layer"));
                }
            }
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// 0-based layer index of qubit `k`.
    pub fn layer_of(&self, k: usize) -> usize {
        let mut acc = 0;
        for (i, &kappa) in self.layers.iter().enumerate() {
            acc += kappa;
            if k < acc {
                return i;
            }
        }
        panic!("qubit {k} outside pattern");
    }

    pub fn layer_range(&self, i: usize) -> std::ops::Range<usize> {
        let start: usize = self.layers[..i].iter().sum();
        start..start + self.layers[i]
    }

    pub fn neighbors(&self, k: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == k {
                    Some(b)
                } else if b == k {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn max_degree(&self) -> usize {
        (0..self.t).map(|k| self.neighbors(k).len()).max().unwrap_or(0)
    }

    pub fn parse(text: &str) -> Result<Self, PatternError> {
        let mut t = None;
        let mut layers = None;
        let mut edges = Vec::new();
        let mut deps_raw: Vec<(usize, Vec<usize>)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let perr = |reason: &str| PatternError::Parse { line: idx + 1, reason: reason.to_string() };
            let mut w = line.split_whitespace();
            let head = w.next().unwrap();
            let nums: Vec<usize> = w
                .map(|x| x.parse::<usize>().map_err(|_| perr("expected integer")))
                .collect::<Result<_, _>>()?;
            match head {
                "t" if nums.len() == 1 => t = Some(nums[0]),
                "layers" if !nums.is_empty() => layers = Some(nums),
                "edge" if nums.len() == 2 => edges.push((nums[0], nums[1])),
                "dep" if !nums.is_empty() => deps_raw.push((nums[0], nums[1..].to_vec())),
                _ => return Err(perr("unknown directive or wrong arity")),
            }
        }
        let t = t.ok_or(PatternError::Parse { line: 0, reason: "missing 't'".into() })?;
        let layers = layers.unwrap_or_else(|| vec![t]);
        let mut deps = vec![Vec::new(); t];
        for (k, d) in deps_raw {
            if k >= t {
                return Err(PatternError::Invalid(format!("dep for qubit {k} out of range")));
            }
            deps[k].extend(d);
        }
        Self::new(t, layers, edges, deps)
    }

    pub fn serialize(&self) -> String {
        let mut s = format!("t {}\n", self.t);
        let ls: Vec<String> = self.layers.iter().map(|k| k.to_string()).collect();
        s.push_str(&format!("layers {}\n", ls.join(" ")));
        for (a, b) in &self.edges {
            s.push_str(&format!("edge {a} {b}\n"));
        }
        for (k, d) in self.deps.iter().enumerate() {
            if !d.is_empty() {
                let ds: Vec<String> = d.iter().map(|j| j.to_string()).collect();
                s.push_str(&format!("dep {k} {}\n", ds.join(" ")));
            }
        }
        s
    }

    /// Graph-state generator `G_k = X_k ∏_{d∈N(k)} Z_d` on `nq` qubits.
    pub fn generator(&self, k: usize, nq: usize) -> PauliOperator {
        let mut g = PauliOperator::single(nq, k, Pauli::X);
        for d in self.neighbors(k) {
            g.set(d, Pauli::Z);
        }
        g
    }
}

impl fmt::Display for MeasurementPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

/// `H` on every qubit, `CZ` per edge, then per qubit in index order:
/// `T†`, `S` conditioned on `f_k`, `H`, readout. `S·T† = T`, so the
/// conditioned correction selects between the two ±π/4 bases.
pub fn pattern_to_circuit(p: &MeasurementPattern) -> Circuit {
    let mut c = Circuit::new(p.t);
    c.name = format!("pattern t={} layers={:?}", p.t, p.layers);
    for q in 0..p.t {
        c.push(Instruction::Clifford(CliffordGate::H(q)));
    }
    for &(a, b) in &p.edges {
        c.push(Instruction::Clifford(CliffordGate::CZ(a, b)));
    }
    for k in 0..p.t {
        c.push(Instruction::Tdg(k));
        if !p.deps[k].is_empty() {
            c.push(Instruction::Controlled {
                gate: CliffordGate::S(k),
                condition: Condition {
                    bits: p.deps[k].iter().map(|&j| BitId::Readout(j)).collect(),
                    negate: false,
                },
            });
        }
        c.push(Instruction::Clifford(CliffordGate::H(k)));
        c.push(Instruction::Measure { qubit: k, bit: BitId::Readout(k) });
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProcessingOrder {
    O1,
    O2,
    O3,
}

impl std::str::FromStr for ProcessingOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "o1" => Ok(Self::O1),
            "o2" => Ok(Self::O2),
            "o3" => Ok(Self::O3),
            _ => Err(format!("unknown processing order '{s}'")),
        }
    }
}

/// The gadgetized pattern circuit with per-qubit measurement positions.
#[derive(Debug, Clone)]
pub struct CompiledPattern {
    pub pattern: MeasurementPattern,
    pub circuit: AdaptiveCliffordCircuit,
    /// Instruction index of the gadget measurement `m_k`.
    pub gadget_at: Vec<usize>,
    /// Instruction index of the readout `r_k`.
    pub readout_at: Vec<usize>,
}

impl CompiledPattern {
    pub fn new(p: &MeasurementPattern) -> Self {
        let ac = gadgetize(&pattern_to_circuit(p));
        let mut gadget_at = vec![0; p.t];
        let mut readout_at = vec![0; p.t];
        for (i, inst) in ac.instructions().iter().enumerate() {
            if let Instruction::Measure { bit, .. } = inst {
                match *bit {
                    BitId::Gadget(k) => gadget_at[k] = i,
                    BitId::Readout(k) => readout_at[k] = i,
                }
            }
        }
        Self { pattern: p.clone(), circuit: ac, gadget_at, readout_at }
    }

    /// Processing sequence as instruction indices.
    pub fn order(&self, order: ProcessingOrder) -> Vec<usize> {
        let t = self.pattern.t;
        match order {
            ProcessingOrder::O1 => (0..t).flat_map(|k| [self.gadget_at[k], self.readout_at[k]]).collect(),
            ProcessingOrder::O2 => {
                let mut o: Vec<usize> = self.gadget_at.clone();
                o.extend(&self.readout_at);
                o
            }
            ProcessingOrder::O3 => (0..self.pattern.depth())
                .flat_map(|i| {
                    let r = self.pattern.layer_range(i);
                    r.clone()
                        .map(|k| self.gadget_at[k])
                        .chain(r.map(|k| self.readout_at[k]))
                        .collect::<Vec<_>>()
                })
                .collect(),
        }
    }

    pub fn run(
        &self,
        order: ProcessingOrder,
        backend: &mut dyn OutcomeBackend,
    ) -> Result<(PbcProgram, BoundReport), PatternError> {
        let seq = self.order(order);
        let mut sink = rand::rngs::mock::StepRng::new(0, 0);
        let prog = engine::run_shot_ordered(&self.circuit, &seq, backend, &GreedyConfig::off(), &mut sink)?;
        let report = check_bounds(&self.pattern, order, &prog);
        Ok((prog, report))
    }
}

/// One shot of the pattern under `order` with coins and outcomes from `backend`.
pub fn run_pattern_pbc(
    p: &MeasurementPattern,
    order: ProcessingOrder,
    backend: &mut dyn OutcomeBackend,
) -> Result<(PbcProgram, BoundReport), PatternError> {
    CompiledPattern::new(p).run(order, backend)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    /// 1-based position in the processing sequence.
    pub position: usize,
    pub step: usize,
    pub source: BitId,
    pub weight: usize,
    pub bound: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub order: ProcessingOrder,
    pub t: usize,
    pub d_1w: usize,
    pub d_pbc: usize,
    pub depth_bound: Option<usize>,
    pub depth_exact: Option<usize>,
    pub avg_weight: f64,
    /// `3t/4 + 1/2` under O1.
    pub avg_weight_bound: Option<f64>,
    pub checks: Vec<BoundCheck>,
    pub violations: Vec<String>,
}

impl BoundReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_bounds(p: &MeasurementPattern, order: ProcessingOrder, prog: &PbcProgram) -> BoundReport {
    let t = p.t;
    let mut checks = Vec::new();
    let mut violations = Vec::new();
    let prefix: Vec<usize> = p
        .layers
        .iter()
        .scan(0, |acc, k| {
            *acc += k;
            Some(*acc)
        })
        .collect();
    for (pos, s) in prog.steps.iter().enumerate() {
        let qubit = match s.source {
            BitId::Gadget(k) | BitId::Readout(k) => k,
        };
        let bound = match order {
            ProcessingOrder::O1 => (pos + 1).div_ceil(2),
            ProcessingOrder::O2 => t,
            ProcessingOrder::O3 => prefix[p.layer_of(qubit)],
        };
        let weight = s.pauli_magic.weight();
        if weight > bound {
            violations.push(format!(
                "position {} ({}) has magic weight {weight} > {bound}: {}",
                pos + 1,
                s.source,
                s.pauli_magic
            ));
        }
        checks.push(BoundCheck { position: pos + 1, step: s.id, source: s.source, weight, bound });
    }
    let d = p.depth();
    let (depth_bound, depth_exact) = match order {
        ProcessingOrder::O1 => (None, None),
        ProcessingOrder::O2 => (None, Some(d)),
        ProcessingOrder::O3 => (Some((2 * d - 1).min(t)), None),
    };
    if let Some(b) = depth_bound {
        if prog.stats.d_pbc > b {
            violations.push(format!("d_PBC = {} exceeds min(2d-1, t) = {b}", prog.stats.d_pbc));
        }
    }
    if let Some(e) = depth_exact {
        if prog.stats.d_pbc != e {
            violations.push(format!("d_PBC = {} differs from d_1W = {e}", prog.stats.d_pbc));
        }
    }
    let avg = prog.stats.avg_weight_original;
    let avg_bound = (order == ProcessingOrder::O1).then_some(0.75 * t as f64 + 0.5);
    if let Some(b) = avg_bound {
        if avg > b + 1e-12 {
            violations.push(format!("average weight {avg} exceeds 3t/4 + 1/2 = {b}"));
        }
    }
    BoundReport {
        order,
        t,
        d_1w: d,
        d_pbc: prog.stats.d_pbc,
        depth_bound,
        depth_exact,
        avg_weight: avg,
        avg_weight_bound: avg_bound,
        checks,
        violations,
    }
}

/// Random layered pattern. Every qubit outside the first layer depends on at
/// least one qubit of the previous layer, so the 1WQC depth is `d_1w`.
pub fn generate_random_pattern(
    t: usize,
    d_1w: usize,
    edge_prob: f64,
    seed: u64,
) -> Result<MeasurementPattern, PatternError> {
    if d_1w == 0 || d_1w > t {
        return Err(PatternError::Invalid(format!("need 1 <= d_1W <= t, got d_1W = {d_1w}, t = {t}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cuts = index::sample(&mut rng, t - 1, d_1w - 1).into_vec();
    cuts.sort_unstable();
    let mut layers = Vec::with_capacity(d_1w);
    let mut prev = 0;
    for c in cuts.iter().map(|c| c + 1).chain(std::iter::once(t)) {
        layers.push(c - prev);
        prev = c;
    }
    let mut edges = Vec::new();
    for a in 0..t {
        for b in a + 1..t {
            if rng.gen_bool(edge_prob) {
                edges.push((a, b));
            }
        }
    }
    let starts: Vec<usize> = layers
        .iter()
        .scan(0, |acc, k| {
            let s = *acc;
            *acc += k;
            Some(s)
        })
        .collect();
    let mut deps = vec![Vec::new(); t];
    for i in 1..d_1w {
        let prev_range = starts[i - 1]..starts[i - 1] + layers[i - 1];
        for dk in deps.iter_mut().skip(starts[i]).take(layers[i]) {
            let mut set: BTreeSet<usize> =
                (0..starts[i]).filter(|_| rng.gen_bool(0.3)).collect();
            set.insert(rng.gen_range(prev_range.clone()));
            *dk = set.into_iter().collect();
        }
    }
    MeasurementPattern::new(t, layers, edges, deps)
}

/// `R_i` restricted to the neighbours in `within`, on `2t` qubits in the
/// graph-state frame: `(-1)^{Σ m_a} ∏ G_b ∏ Z_{t+b}`.
fn r_factor(p: &MeasurementPattern, i: usize, m: &[bool], within: &dyn Fn(usize) -> bool) -> PauliOperator {
    let nq = 2 * p.t;
    let mut r = PauliOperator::identity(nq);
    let mut sign = false;
    for b in p.neighbors(i).into_iter().filter(|&b| within(b)) {
        sign ^= m[b];
        r = r.multiply(&p.generator(b, nq));
        r = r.multiply(&PauliOperator::single(nq, p.t + b, Pauli::Z));
    }
    r.negate_if(sign);
    r
}

/// Closed-form readout operators for a layered pattern whose gadget
/// measurements were all processed first: `R_i Y_{t+i}` when
/// `m_i ⊕ f_i = 0`, `G_i R_i X_{t+i}` otherwise. Operators live on `2t`
/// qubits in the graph-state frame; `s` holds readout outcomes (for `f_i`).
pub fn layered_oracle_b1(p: &MeasurementPattern, m: &[bool], s: &[bool]) -> Vec<PauliOperator> {
    let nq = 2 * p.t;
    (0..p.t)
        .map(|i| {
            let f = p.deps[i].iter().fold(false, |acc, &j| acc ^ s[j]);
            let r = r_factor(p, i, m, &|_| true);
            if m[i] ^ f {
                p.generator(i, nq)
                    .multiply(&r)
                    .multiply(&PauliOperator::single(nq, p.t + i, Pauli::X))
            } else {
                r.multiply(&PauliOperator::single(nq, p.t + i, Pauli::Y))
            }
        })
        .collect()
}

/// The single-layer closed form (`f_i = 0` for every qubit).
pub fn single_layer_oracle(p: &MeasurementPattern, m: &[bool]) -> Result<Vec<PauliOperator>, PatternError> {
    if p.depth() != 1 {
        return Err(PatternError::NotSingleLayer(p.depth()));
    }
    Ok(layered_oracle_b1(p, m, &vec![false; p.t]))
}

/// Readout operators of the qubits in `targets` when only the gadget
/// corrections of the set `a_set` have been applied:
///
/// * `m_i = 0`: `R_i (∏_{c∈N(i)\A} Z_c) Y_{t+i}`
/// * `m_i = 1`: `R_i (∏_{c∈N(i)∩A} Z_c) X_i X_{t+i}`
///
/// with `R_i = (-1)^{Σ_{a∈N(i)∩A} m_a} ∏_{b∈N(i)∩A} G_b Z_{t+b}`.
/// Requires `i ∈ A` and `f_i = 0` for each target.
pub fn layered_oracle_b2(
    p: &MeasurementPattern,
    m: &[bool],
    a_set: &BTreeSet<usize>,
    targets: &[usize],
) -> Result<Vec<PauliOperator>, PatternError> {
    let nq = 2 * p.t;
    let mut out = Vec::with_capacity(targets.len());
    for &i in targets {
        if !a_set.contains(&i) {
            return Err(PatternError::InconsistentSet(format!("qubit {i} is not in A")));
        }
        if !p.deps[i].is_empty() {
            return Err(PatternError::InconsistentSet(format!("qubit {i} has f_i dependencies")));
        }
        let r = r_factor(p, i, m, &|b| a_set.contains(&b));
        let mut zs = PauliOperator::identity(nq);
        for c in p.neighbors(i) {
            if a_set.contains(&c) == m[i] {
                zs.set(c, Pauli::Z);
            }
        }
        let tail = if m[i] {
            let mut x = PauliOperator::single(nq, i, Pauli::X);
            x.set(p.t + i, Pauli::X);
            x
        } else {
            PauliOperator::single(nq, p.t + i, Pauli::Y)
        };
        out.push(r.multiply(&zs).multiply(&tail));
    }
    Ok(out)
}

/// Maps a graph-state-frame operator to the engine's circuit-front frame by
/// pulling it back through the preparation (`H` on all qubits, then `CZ`s).
pub fn to_front_frame(p: &MeasurementPattern, op: &PauliOperator) -> PauliOperator {
    let mut o = op.clone();
    for &(a, b) in p.edges.iter().rev() {
        o.conjugate_in_place(&CliffordGate::CZ(a, b), Direction::Backward);
    }
    for q in (0..p.t).rev() {
        o.conjugate_in_place(&CliffordGate::H(q), Direction::Backward);
    }
    o
}

/// Gadget coin string `m` of a program (false for gadgets that were not coins).
pub fn gadget_coins(prog: &PbcProgram, t: usize) -> Vec<bool> {
    let mut m = vec![false; t];
    for s in &prog.steps {
        if let BitId::Gadget(k) = s.source {
            m[k] = s.outcome;
        }
    }
    m
}

/// Readout outcomes `s` of a program.
pub fn readout_bits(prog: &PbcProgram, t: usize) -> Vec<bool> {
    (0..t).map(|k| prog.readout >> k & 1 == 1).collect()
}

/// The readout step `r_i` pushed through the V-corrections of case-(i)
/// gadget steps only (in processing order), starting from its front form.
pub fn through_gadget_corrections(prog: &PbcProgram, readout: usize) -> PauliOperator {
    let step = prog.step_for(BitId::Readout(readout)).expect("readout step");
    let nq = step.front.num_qubits();
    let mut op = step.front.clone();
    for g in prog.steps[..step.id].iter() {
        if !matches!(g.source, BitId::Gadget(_)) || g.case != Case::Anticommuting {
            continue;
        }
        let Some(engine::Witness::Stabilizer(d)) = g.witness else { continue };
        let v = VUnitary::new(PauliOperator::single(nq, d, Pauli::Z), g.pauli_full.clone(), false, g.outcome)
            .expect("gadget correction");
        op = v.conjugate(&op);
    }
    op
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{FixedPathBackend, ScriptedBackend};

    #[test]
    fn parse_serialize_round_trip() {
        let text = "t 4\nlayers 2 2\nedge 0 1\nedge 1 2\nedge 2 3\ndep 2 0\ndep 3 0 1\n";
        let p = MeasurementPattern::parse(text).unwrap();
        assert_eq!(p.serialize(), text);
        assert!(MeasurementPattern::parse("t 2\nlayers 2\ndep 1 0").is_err());
        assert!(MeasurementPattern::parse("t 2\nedge 1 1").is_err());
        assert!(MeasurementPattern::parse("t 2\nlayers 1 2").is_err());
    }

    #[test]
    fn smallest_circuit() {
        let p = MeasurementPattern::new(1, vec![1], vec![], vec![vec![]]).unwrap();
        let c = pattern_to_circuit(&p);
        assert_eq!(c.serialize().lines().skip(2).collect::<Vec<_>>(), ["h 0", "tdg 0", "h 0", "measure 0"]);
        let p = MeasurementPattern::new(2, vec![1, 1], vec![(0, 1)], vec![vec![], vec![0]]).unwrap();
        let c = pattern_to_circuit(&p);
        assert!(c.serialize().contains("c-s 1 @ r0"));
        assert_eq!(c.metrics().t, 2);
        assert_eq!(c.metrics().w, 2);
    }

    #[test]
    fn eq7_instances() {
        let p = MeasurementPattern::new(1, vec![1], vec![], vec![vec![]]).unwrap();
        let o = single_layer_oracle(&p, &[false]).unwrap();
        assert_eq!(o[0], PauliOperator::parse("Y2", 2).unwrap());
        let o = single_layer_oracle(&p, &[true]).unwrap();
        assert_eq!(o[0], PauliOperator::parse("X1X2", 2).unwrap());
        for m in [false, true] {
            let mut b = ScriptedBackend::new(vec![m], rand::rngs::mock::StepRng::new(0, 0));
            let (prog, _) = run_pattern_pbc(&p, ProcessingOrder::O2, &mut b).unwrap();
            let r = prog.step_for(BitId::Readout(0)).unwrap();
            let expect = to_front_frame(&p, &single_layer_oracle(&p, &[m]).unwrap()[0]);
            assert_eq!(r.pauli_full, expect);
        }
    }

    #[test]
    fn generator_properties() {
        let p = generate_random_pattern(9, 3, 0.3, 5).unwrap();
        assert_eq!(p, generate_random_pattern(9, 3, 0.3, 5).unwrap());
        assert_eq!(p.depth(), 3);
        for k in p.layer_range(1).chain(p.layer_range(2)) {
            let l = p.layer_of(k);
            assert!(p.deps[k].iter().any(|&j| p.layer_of(j) == l - 1));
        }
        let single = generate_random_pattern(5, 1, 0.0, 1).unwrap();
        assert!(single.edges.is_empty() && single.deps.iter().all(|d| d.is_empty()));
        assert!(generate_random_pattern(3, 4, 0.1, 0).is_err());
    }

    #[test]
    fn single_layer_is_depth_one() {
        let p = generate_random_pattern(6, 1, 0.4, 2).unwrap();
        for order in [ProcessingOrder::O2, ProcessingOrder::O3] {
            let (prog, rep) = run_pattern_pbc(&p, order, &mut FixedPathBackend).unwrap();
            assert!(rep.ok(), "{:?}", rep.violations);
            assert_eq!(prog.stats.d_pbc, 1, "{order:?}");
        }
        // Under O1 a gadget measurement may be quantum, and the readout of the
        // same qubit then waits for it.
        let (prog, rep) = run_pattern_pbc(&p, ProcessingOrder::O1, &mut FixedPathBackend).unwrap();
        assert!(rep.ok(), "{:?}", rep.violations);
        assert_eq!(prog.stats.d_pbc, 2);
    }
}
