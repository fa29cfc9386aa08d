//! incPBC: Clifford+T circuits compiled to weight-1/2 Pauli measurements.
//!
//! Every logical qubit lives in a physical slot together with a single-qubit
//! Clifford frame `F` (logical state = `F` · physical state). Logical
//! Cliffords only update frames; a logical measurement of `M` is performed
//! physically as `F† M F`, which has the same weight. CNOT and T are realised
//! by measurement gadgets whose Pauli byproducts are folded into the frames.

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::circuit::{Circuit, CircuitMetrics, Instruction};
use crate::engine::shot_rng;
use crate::pauli::{CliffordGate, Direction, Pauli, PauliOperator};
use crate::statevec::{Outcome, StateError, StateVector};

pub const DEFAULT_SLOT_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IncPbcError {
    #[error("incPBC compilation does not accept classically controlled gates")]
    ClassicalControl,
    #[error("{slots} slots exceed the simulation cap of {cap}")]
    SlotCap { slots: usize, cap: usize },
    #[error("invalid circuit: {0}")]
    Circuit(String),
    #[error(transparent)]
    State(#[from] StateError),
}

/// Single-qubit Clifford stored as its backward action `P ↦ F† P F` on X and Z.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    x_img: PauliOperator,
    z_img: PauliOperator,
}

impl Default for Frame {
    fn default() -> Self {
        Self {
            x_img: PauliOperator::single(1, 0, Pauli::X),
            z_img: PauliOperator::single(1, 0, Pauli::Z),
        }
    }
}

impl Frame {
    /// `F† P F` for a single-qubit operator `P` (phase kept).
    pub fn pull(&self, p: &PauliOperator) -> PauliOperator {
        let out = match p.get(0) {
            Pauli::I => PauliOperator::identity(1),
            Pauli::X => self.x_img.clone(),
            Pauli::Z => self.z_img.clone(),
            // Y = i X Z
            Pauli::Y => {
                let xz = self.x_img.multiply(&self.z_img);
                let p = xz.phase_exp();
                xz.with_phase_exp((p + 1) & 3)
            }
        };
        let phase = (out.phase_exp() + p.phase_exp()) & 3;
        out.with_phase_exp(phase)
    }

    /// `F ← G F` for a single-qubit Clifford `G` (given on qubit 0).
    pub fn apply(&mut self, g: &CliffordGate) {
        let x = PauliOperator::single(1, 0, Pauli::X).conjugate_by_gate(g, Direction::Backward);
        let z = PauliOperator::single(1, 0, Pauli::Z).conjugate_by_gate(g, Direction::Backward);
        let (nx, nz) = (self.pull(&x), self.pull(&z));
        self.x_img = nx;
        self.z_img = nz;
    }

    pub fn is_identity(&self) -> bool {
        *self == Frame::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Prep {
    Zero,
    Magic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    CnotZz,
    CnotXx,
    CnotZ,
    TZz,
    TX,
    SXy,
    SZ,
    Readout(usize),
}

fn gate_name<S: Serializer>(g: &CliffordGate, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(g.mnemonic())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum IncOp {
    Prepare { slot: usize, state: Prep },
    /// Logical single-qubit Clifford absorbed into the frame of `slot`.
    Frame {
        slot: usize,
        #[serde(serialize_with = "gate_name")]
        gate: CliffordGate,
    },
    /// Logical Pauli measurement; physically `⊗ F_s† P_s F_s`.
    Measure { id: usize, terms: Vec<(usize, Pauli)>, role: Role, layer: usize },
    /// `F ← P^{parity} F` with parity over the listed measurement outcomes.
    Byproduct { slot: usize, pauli: Pauli, parity_of: Vec<usize> },
    /// T-gadget correction on the receiving slot.
    TCorrection { slot: usize, zz: usize, x: usize },
    Free { slot: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct IncPbcProgram {
    pub format: &'static str,
    pub version: u32,
    pub model: &'static str,
    pub num_logical: usize,
    pub slots: usize,
    pub max_live: usize,
    pub ops: Vec<IncOp>,
    pub measurement_count: usize,
    pub depth: usize,
    pub metrics: CircuitMetrics,
    /// Slot holding each logical qubit's readout, in qubit order.
    pub readout_slots: Vec<Option<usize>>,
}

impl IncPbcProgram {
    pub fn measurements(&self) -> impl Iterator<Item = (usize, &Vec<(usize, Pauli)>, Role)> {
        self.ops.iter().filter_map(|op| match op {
            IncOp::Measure { id, terms, role, .. } => Some((*id, terms, *role)),
            _ => None,
        })
    }

    pub fn weights(&self) -> Vec<usize> {
        self.measurements()
            .map(|(_, terms, _)| terms.iter().filter(|(_, p)| *p != Pauli::I).count())
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("program serializes")
    }
}

struct Compiler {
    ops: Vec<IncOp>,
    next_id: usize,
    slots: usize,
    free: VecDeque<usize>,
    ready: Vec<usize>,
    live: usize,
    max_live: usize,
    depth: usize,
    cap: usize,
}

impl Compiler {
    fn alloc(&mut self, prep: Prep, not_before: usize) -> usize {
        let pick = self
            .free
            .iter()
            .enumerate()
            .min_by_key(|(_, &s)| self.ready[s])
            .map(|(i, &s)| (i, s));
        let slot = match pick {
            Some((i, s)) if self.ready[s] <= not_before || self.slots >= self.cap => {
                self.free.remove(i);
                s
            }
            _ => {
                self.slots += 1;
                self.ready.push(0);
                self.slots - 1
            }
        };
        self.live += 1;
        self.max_live = self.max_live.max(self.live);
        self.ops.push(IncOp::Prepare { slot, state: prep });
        slot
    }

    fn release(&mut self, slot: usize) {
        self.live -= 1;
        self.free.push_back(slot);
        self.ops.push(IncOp::Free { slot });
    }

    fn measure(&mut self, terms: Vec<(usize, Pauli)>, role: Role) -> usize {
        let id = self.next_id;
        self.next_id += 1;
        let layer = if matches!(role, Role::Readout(_)) {
            0
        } else {
            let l = terms.iter().map(|(s, _)| self.ready[*s]).max().unwrap_or(0) + 1;
            for (s, _) in &terms {
                self.ready[*s] = l;
            }
            self.depth = self.depth.max(l);
            l
        };
        self.ops.push(IncOp::Measure { id, terms, role, layer });
        id
    }

    fn frame(&mut self, slot: usize, gate: CliffordGate) {
        self.ops.push(IncOp::Frame { slot, gate });
    }

    fn cnot(&mut self, c: usize, t: usize) {
        let start = self.ready[c].max(self.ready[t]);
        let a = self.alloc(Prep::Zero, start);
        self.frame(a, CliffordGate::H(0));
        let a1 = self.measure(vec![(c, Pauli::Z), (a, Pauli::Z)], Role::CnotZz);
        let a2 = self.measure(vec![(a, Pauli::X), (t, Pauli::X)], Role::CnotXx);
        let a3 = self.measure(vec![(a, Pauli::Z)], Role::CnotZ);
        self.ops.push(IncOp::Byproduct { slot: c, pauli: Pauli::Z, parity_of: vec![a2] });
        self.ops.push(IncOp::Byproduct { slot: t, pauli: Pauli::X, parity_of: vec![a1, a3] });
        self.release(a);
    }

    /// Returns the slot that now holds the logical qubit.
    fn t_gate(&mut self, q: usize) -> usize {
        let m = self.alloc(Prep::Magic, self.ready[q]);
        let zz = self.measure(vec![(q, Pauli::Z), (m, Pauli::Z)], Role::TZz);
        let x = self.measure(vec![(q, Pauli::X)], Role::TX);
        self.ops.push(IncOp::TCorrection { slot: m, zz, x });
        self.release(q);
        m
    }

    /// S via measurements: returns the receiving slot.
    fn s_gate(&mut self, q: usize) -> usize {
        let a = self.alloc(Prep::Zero, self.ready[q]);
        let b1 = self.measure(vec![(q, Pauli::X), (a, Pauli::Y)], Role::SXy);
        let b2 = self.measure(vec![(q, Pauli::Z)], Role::SZ);
        self.ops.push(IncOp::Byproduct { slot: a, pauli: Pauli::X, parity_of: vec![b2] });
        self.ops.push(IncOp::Byproduct { slot: a, pauli: Pauli::Z, parity_of: vec![b1, b2] });
        self.release(q);
        a
    }
}

fn new_compiler(n: usize) -> Compiler {
    Compiler {
        ops: Vec::new(),
        next_id: 0,
        slots: n,
        free: VecDeque::new(),
        ready: vec![0; n],
        live: n,
        max_live: n,
        depth: 0,
        cap: 2 * n.max(1),
    }
}

pub fn compile_incpbc(c: &Circuit) -> Result<IncPbcProgram, IncPbcError> {
    compile_with(c, false)
}

/// Like [`compile_incpbc`] but S and S† are realised by the measurement
/// gadget instead of the frame (S† as S followed by a frame Z).
pub fn compile_incpbc_with_s_gadget(c: &Circuit) -> Result<IncPbcProgram, IncPbcError> {
    compile_with(c, true)
}

fn compile_with(c: &Circuit, s_gadget: bool) -> Result<IncPbcProgram, IncPbcError> {
    c.validate().map_err(|e| IncPbcError::Circuit(e.to_string()))?;
    if c.has_classical_control() {
        return Err(IncPbcError::ClassicalControl);
    }
    let n = c.num_qubits;
    let mut k = new_compiler(n);
    if s_gadget {
        k.cap = usize::MAX;
    }
    let mut loc: Vec<usize> = (0..n).collect();
    for q in 0..n {
        k.ops.push(IncOp::Prepare { slot: q, state: Prep::Zero });
    }
    let mut readout_slots = vec![None; n];
    for inst in &c.instructions {
        match *inst {
            Instruction::Clifford(g) => match g {
                CliffordGate::CX { control, target } => k.cnot(loc[control], loc[target]),
                CliffordGate::CZ(a, b) => {
                    k.frame(loc[b], CliffordGate::H(0));
                    k.cnot(loc[a], loc[b]);
                    k.frame(loc[b], CliffordGate::H(0));
                }
                CliffordGate::S(q) if s_gadget => loc[q] = k.s_gate(loc[q]),
                CliffordGate::Sdg(q) if s_gadget => {
                    loc[q] = k.s_gate(loc[q]);
                    k.frame(loc[q], CliffordGate::Z(0));
                }
                g => {
                    let q = g.qubits()[0];
                    let local_gate = match g {
                        CliffordGate::H(_) => CliffordGate::H(0),
                        CliffordGate::S(_) => CliffordGate::S(0),
                        CliffordGate::Sdg(_) => CliffordGate::Sdg(0),
                        CliffordGate::X(_) => CliffordGate::X(0),
                        CliffordGate::Z(_) => CliffordGate::Z(0),
                        _ => unreachable!(),
                    };
                    k.frame(loc[q], local_gate);
                }
            },
            Instruction::T(q) => loc[q] = k.t_gate(loc[q]),
            Instruction::Tdg(q) => {
                loc[q] = k.t_gate(loc[q]);
                k.frame(loc[q], CliffordGate::Sdg(0));
            }
            Instruction::Measure { qubit, .. } => {
                k.measure(vec![(loc[qubit], Pauli::Z)], Role::Readout(qubit));
                readout_slots[qubit] = Some(loc[qubit]);
            }
            Instruction::Controlled { .. } => unreachable!("rejected above"),
        }
    }
    let measurement_count = k.next_id;
    Ok(IncPbcProgram {
        format: crate::engine::PROGRAM_FORMAT,
        version: crate::engine::PROGRAM_VERSION,
        model: "incpbc",
        num_logical: n,
        slots: k.slots,
        max_live: k.max_live,
        ops: k.ops,
        measurement_count,
        depth: k.depth,
        metrics: c.metrics(),
        readout_slots,
    })
}

/// Physical operator of a logical measurement under the current frames.
pub fn physical_operator(terms: &[(usize, Pauli)], frames: &[Frame], slots: usize) -> PauliOperator {
    let mut out = PauliOperator::identity(slots);
    for &(s, p) in terms {
        let img = frames[s].pull(&PauliOperator::single(1, 0, p));
        out = out.multiply(&img.embed(slots, s));
    }
    out
}

fn apply_t_correction(f: &mut Frame, zz: bool, x: bool) {
    if zz {
        // F ← S Z^x X F
        f.apply(&CliffordGate::X(0));
        if x {
            f.apply(&CliffordGate::Z(0));
        }
        f.apply(&CliffordGate::S(0));
    } else if x {
        f.apply(&CliffordGate::Z(0));
    }
}

/// One shot: returns the readout bit string and the physical operators measured.
pub fn simulate_shot<R: Rng>(
    prog: &IncPbcProgram,
    rng: &mut R,
) -> Result<(Outcome, Vec<PauliOperator>), IncPbcError> {
    let mut state = StateVector::zero(prog.slots)?;
    let mut frames = vec![Frame::default(); prog.slots];
    let mut outcomes: Vec<bool> = vec![false; prog.measurement_count];
    let mut physical = Vec::with_capacity(prog.measurement_count);
    let mut readout: Outcome = 0;
    for op in &prog.ops {
        match op {
            IncOp::Prepare { slot, state: prep } => {
                let z = PauliOperator::single(prog.slots, *slot, Pauli::Z);
                if state.measure_pauli(&z, rng)? {
                    state.apply_gate(&CliffordGate::X(*slot));
                }
                if *prep == Prep::Magic {
                    state.apply_gate(&CliffordGate::H(*slot));
                    state.apply_t(*slot, false);
                }
                frames[*slot] = Frame::default();
            }
            IncOp::Frame { slot, gate } => frames[*slot].apply(gate),
            IncOp::Measure { id, terms, role, .. } => {
                let p = physical_operator(terms, &frames, prog.slots);
                let o = state.measure_pauli(&p, rng)?;
                outcomes[*id] = o;
                physical.push(p);
                if let Role::Readout(q) = role {
                    if o {
                        readout |= 1 << q;
                    }
                }
            }
            IncOp::Byproduct { slot, pauli, parity_of } => {
                if parity_of.iter().fold(false, |acc, &j| acc ^ outcomes[j]) {
                    let g = if *pauli == Pauli::X { CliffordGate::X(0) } else { CliffordGate::Z(0) };
                    frames[*slot].apply(&g);
                }
            }
            IncOp::TCorrection { slot, zz, x } => {
                apply_t_correction(&mut frames[*slot], outcomes[*zz], outcomes[*x]);
            }
            IncOp::Free { .. } => {}
        }
    }
    Ok((readout, physical))
}

/// Readout histogram over `shots` shots (parallel, seeded per shot).
pub fn simulate_incpbc(
    prog: &IncPbcProgram,
    shots: usize,
    seed: u64,
) -> Result<BTreeMap<Outcome, usize>, IncPbcError> {
    if prog.slots > DEFAULT_SLOT_CAP {
        return Err(IncPbcError::SlotCap { slots: prog.slots, cap: DEFAULT_SLOT_CAP });
    }
    let results: Result<Vec<Outcome>, IncPbcError> = (0..shots)
        .into_par_iter()
        .map(|s| simulate_shot(prog, &mut shot_rng(seed, s)).map(|r| r.0))
        .collect();
    let mut h = BTreeMap::new();
    for r in results? {
        *h.entry(r).or_insert(0) += 1;
    }
    Ok(h)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResourceRow {
    pub model: &'static str,
    pub qubits: String,
    pub measurements: String,
    pub weight: String,
    pub depth: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResourceTable {
    pub metrics: CircuitMetrics,
    pub rows: Vec<ResourceRow>,
    /// Measurement count when S and H are also realised by gadgets.
    pub strict_incpbc_measurements: usize,
}

pub const RESOURCE_CSV_HEADER: &str = "model,qubits,measurements,weight,depth";

impl ResourceTable {
    pub fn to_csv(&self) -> String {
        let mut s = format!("{RESOURCE_CSV_HEADER}\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{},{},{}\n", r.model, r.qubits, r.measurements, r.weight, r.depth));
        }
        s
    }

    pub fn row(&self, model: &str) -> Option<&ResourceRow> {
        self.rows.iter().find(|r| r.model == model)
    }
}

/// Resource comparison for a circuit; `d_1w` fills the 1WQC depth if known.
pub fn resource_table(c: &Circuit, d_1w: Option<usize>) -> ResourceTable {
    let m = c.metrics();
    let rows = vec![
        ResourceRow {
            model: "1wqc",
            qubits: m.t.to_string(),
            measurements: m.t.to_string(),
            weight: "1".into(),
            depth: d_1w.map_or_else(|| "n/a".into(), |d| d.to_string()),
        },
        ResourceRow {
            model: "pbc",
            qubits: m.t.to_string(),
            measurements: if m.t == 0 { "0".into() } else { format!("<={}", m.t) },
            weight: format!("<={}", m.t),
            depth: format!("<={}", m.t),
        },
        ResourceRow {
            model: "incpbc",
            qubits: (2 * m.n).to_string(),
            measurements: (m.w + 2 * m.t + 3 * m.c2).to_string(),
            weight: "{1,2}".into(),
            depth: (3 * m.d_l).to_string(),
        },
    ];
    ResourceTable {
        metrics: m,
        rows,
        strict_incpbc_measurements: m.w + 2 * m.t + 4 * m.c2 + 3 * m.c1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevec::exact_distribution;

    #[test]
    fn frame_composition_matches_conjugation() {
        // F = S H: F† X F = H S† X S H
        let mut f = Frame::default();
        f.apply(&CliffordGate::H(0));
        f.apply(&CliffordGate::S(0));
        let x = PauliOperator::single(1, 0, Pauli::X);
        let expect = x
            .conjugate_by_gate(&CliffordGate::S(0), Direction::Backward)
            .conjugate_by_gate(&CliffordGate::H(0), Direction::Backward);
        assert_eq!(f.pull(&x), expect);
        let y = PauliOperator::single(1, 0, Pauli::Y);
        let expect = y
            .conjugate_by_gate(&CliffordGate::S(0), Direction::Backward)
            .conjugate_by_gate(&CliffordGate::H(0), Direction::Backward);
        assert_eq!(f.pull(&y), expect);
    }

    #[test]
    fn counts_for_reference_circuit() {
        let c = Circuit::parse("qubits 2\nh 0\ncx 0 1\nt 1\nmeasure 0\nmeasure 1").unwrap();
        let p = compile_incpbc(&c).unwrap();
        assert_eq!(p.measurement_count, 7);
        assert!(p.weights().iter().all(|&w| w == 1 || w == 2));
        assert!(p.max_live <= 4);
        assert!(p.depth <= 9);
        let t = resource_table(&c, None);
        let row = t.row("incpbc").unwrap();
        assert_eq!(
            (row.qubits.as_str(), row.measurements.as_str(), row.weight.as_str(), row.depth.as_str()),
            ("4", "7", "{1,2}", "9")
        );
    }

    #[test]
    fn single_cnot_has_three_measurements_with_a_weight_two_middle() {
        let c = Circuit::parse("qubits 2\ncx 0 1").unwrap();
        let p = compile_incpbc(&c).unwrap();
        assert_eq!(p.weights(), vec![2, 2, 1]);
    }

    #[test]
    fn t_on_plus_then_h() {
        let c = Circuit::parse("qubits 1\nh 0\nt 0\nh 0\nmeasure 0").unwrap();
        let p = compile_incpbc(&c).unwrap();
        let h = simulate_incpbc(&p, 4000, 11).unwrap();
        let p0 = h.get(&0).copied().unwrap_or(0) as f64 / 4000.0;
        let expect = (std::f64::consts::PI / 8.0).cos().powi(2);
        assert!((p0 - expect).abs() < 0.03, "{p0} vs {expect}");
    }

    #[test]
    fn s_gadget_matches_direct_simulation() {
        let c = Circuit::parse("qubits 2\nh 0\ns 0\ncx 0 1\nh 1\nsdg 1\nh 1\nh 0\nmeasure 0\nmeasure 1").unwrap();
        let exact = exact_distribution(&c).unwrap();
        let p = compile_incpbc_with_s_gadget(&c).unwrap();
        assert!(p.measurements().any(|(_, _, r)| r == Role::SXy));
        let h = simulate_incpbc(&p, 4000, 5).unwrap();
        let tvd = crate::statevec::total_variation(&exact, &h);
        assert!(tvd < 0.05, "tvd {tvd}");
    }

    #[test]
    fn rejects_classical_control() {
        let c = Circuit::parse("qubits 2\nmeasure 0\nc-s 1 @ r0").unwrap();
        assert_eq!(compile_incpbc(&c).unwrap_err(), IncPbcError::ClassicalControl);
    }
}
