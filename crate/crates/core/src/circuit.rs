//! Clifford+T circuit IR, the line-oriented text format, metrics and the
//! family-2 random circuit generator.

use std::collections::HashSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pauli::CliffordGate;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CircuitError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("qubit {qubit} out of range (circuit has {num_qubits} qubits)")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("gate on qubit {0} after its measurement")]
    GateAfterMeasure(usize),
    #[error("bit {0} referenced before it is produced")]
    UnknownBit(BitId),
    #[error("bit {0} produced twice")]
    DuplicateBit(BitId),
    #[error("two-qubit gate with repeated operand {0}")]
    RepeatedOperand(usize),
}

/// Classical bit produced by a measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BitId {
    /// Outcome `m_i` of the i-th T gadget (0-based).
    Gadget(usize),
    /// Readout of data qubit `q`.
    Readout(usize),
}

impl fmt::Display for BitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BitId::Gadget(i) => write!(f, "m{i}"),
            BitId::Readout(q) => write!(f, "r{q}"),
        }
    }
}

impl BitId {
    pub fn parse(s: &str) -> Option<Self> {
        let (head, tail) = s.split_at(1.min(s.len()));
        let idx: usize = tail.parse().ok()?;
        match head {
            "m" => Some(BitId::Gadget(idx)),
            "r" => Some(BitId::Readout(idx)),
            _ => None,
        }
    }
}

/// Fires when `parity(bits) XOR negate == 1`. An empty bit list with
/// `negate = false` never fires.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Condition {
    pub bits: Vec<BitId>,
    pub negate: bool,
}

impl Condition {
    pub fn on(bit: BitId) -> Self {
        Self { bits: vec![bit], negate: false }
    }

    pub fn on_zero(bit: BitId) -> Self {
        Self { bits: vec![bit], negate: true }
    }

    pub fn evaluate(&self, lookup: impl Fn(BitId) -> Option<bool>) -> Option<bool> {
        let mut acc = self.negate;
        for &b in &self.bits {
            acc ^= lookup(b)?;
        }
        Some(acc)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negate {
            write!(f, "!")?;
        }
        if self.bits.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.bits.iter().map(|b| b.to_string()).collect();
        write!(f, "{}", parts.join("^"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Instruction {
    Clifford(CliffordGate),
    T(usize),
    Tdg(usize),
    Measure { qubit: usize, bit: BitId },
    Controlled { gate: CliffordGate, condition: Condition },
}

impl Instruction {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Instruction::Clifford(g) | Instruction::Controlled { gate: g, .. } => g.qubits(),
            Instruction::T(q) | Instruction::Tdg(q) | Instruction::Measure { qubit: q, .. } => {
                vec![*q]
            }
        }
    }
}

fn gate_text(g: &CliffordGate) -> String {
    let ops: Vec<String> = g.qubits().iter().map(|q| q.to_string()).collect();
    format!("{} {}", g.mnemonic(), ops.join(" "))
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::Clifford(g) => write!(f, "{}", gate_text(g)),
            Instruction::T(q) => write!(f, "t {q}"),
            Instruction::Tdg(q) => write!(f, "tdg {q}"),
            Instruction::Measure { qubit, bit } => {
                if *bit == BitId::Readout(*qubit) {
                    write!(f, "measure {qubit}")
                } else {
                    write!(f, "measure {qubit} -> {bit}")
                }
            }
            Instruction::Controlled { gate, condition } => {
                write!(f, "c-{} @ {condition}", gate_text(gate))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circuit {
    pub num_qubits: usize,
    pub instructions: Vec<Instruction>,
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CircuitMetrics {
    pub n: usize,
    pub t: usize,
    pub c1: usize,
    pub c2: usize,
    pub w: usize,
    pub d_l: usize,
}

fn parse_gate(mnemonic: &str, ops: &[usize]) -> Option<CliffordGate> {
    Some(match (mnemonic, ops) {
        ("h", [q]) => CliffordGate::H(*q),
        ("s", [q]) => CliffordGate::S(*q),
        ("sdg", [q]) => CliffordGate::Sdg(*q),
        ("x", [q]) => CliffordGate::X(*q),
        ("z", [q]) => CliffordGate::Z(*q),
        ("cx", [c, t]) => CliffordGate::CX { control: *c, target: *t },
        ("cz", [a, b]) => CliffordGate::CZ(*a, *b),
        _ => return None,
    })
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            instructions: Vec::new(),
            name: String::new(),
        }
    }

    pub fn push(&mut self, inst: Instruction) {
        self.instructions.push(inst);
    }

    pub fn measure_all(&mut self) {
        for q in 0..self.num_qubits {
            self.push(Instruction::Measure { qubit: q, bit: BitId::Readout(q) });
        }
    }

    /// Checks index ranges, terminal measurements and bit availability.
    pub fn validate(&self) -> Result<(), CircuitError> {
        let mut measured = HashSet::new();
        let mut bits = HashSet::new();
        for inst in &self.instructions {
            let qs = inst.qubits();
            for &q in &qs {
                if q >= self.num_qubits {
                    return Err(CircuitError::QubitOutOfRange { qubit: q, num_qubits: self.num_qubits });
                }
                if measured.contains(&q) {
                    return Err(CircuitError::GateAfterMeasure(q));
                }
            }
            if qs.len() == 2 && qs[0] == qs[1] {
                return Err(CircuitError::RepeatedOperand(qs[0]));
            }
            match inst {
                Instruction::Measure { qubit, bit } => {
                    measured.insert(*qubit);
                    if !bits.insert(*bit) {
                        return Err(CircuitError::DuplicateBit(*bit));
                    }
                }
                Instruction::Controlled { condition, .. } => {
                    for b in &condition.bits {
                        if !bits.contains(b) {
                            return Err(CircuitError::UnknownBit(*b));
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, CircuitError> {
        let mut circuit: Option<Circuit> = None;
        let mut name = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let perr = |reason: String| CircuitError::Parse { line: line_no, reason };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut words = line.split_whitespace();
            let head = words.next().unwrap();
            if head == "name" {
                name = line[4..].trim().to_string();
                continue;
            }
            if head == "qubits" {
                if circuit.is_some() {
                    return Err(perr("duplicate qubits header".into()));
                }
                let n = words
                    .next()
                    .and_then(|w| w.parse::<usize>().ok())
                    .ok_or_else(|| perr("expected qubit count".into()))?;
                circuit = Some(Circuit::new(n));
                continue;
            }
            let c = circuit
                .as_mut()
                .ok_or_else(|| perr("instruction before qubits header".into()))?;
            let inst = Self::parse_instruction(line).map_err(perr)?;
            c.instructions.push(inst);
            c.validate().map_err(|e| perr(e.to_string()))?;
        }
        let mut c = circuit.ok_or(CircuitError::Parse {
            line: 0,
            reason: "missing qubits header".into(),
        })?;
        c.name = name;
        Ok(c)
    }

    fn parse_instruction(line: &str) -> Result<Instruction, String> {
        let (body, cond) = match line.split_once('@') {
            Some((b, c)) => (b.trim(), Some(c.trim())),
            None => (line, None),
        };
        let (body, target_bit) = match body.split_once("->") {
            Some((b, t)) => (b.trim(), Some(t.trim())),
            None => (body, None),
        };
        let mut words = body.split_whitespace();
        let mnemonic = words.next().ok_or("empty instruction")?;
        let ops: Vec<usize> = words
            .map(|w| w.parse::<usize>().map_err(|_| format!("bad operand '{w}'")))
            .collect::<Result<_, _>>()?;
        if let Some(gate_name) = mnemonic.strip_prefix("c-") {
            let cond = cond.ok_or("controlled gate without '@ condition'")?;
            let gate = parse_gate(gate_name, &ops)
                .ok_or_else(|| format!("unknown controlled gate '{mnemonic}'"))?;
            let (negate, rest) = match cond.strip_prefix('!') {
                Some(r) => (true, r),
                None => (false, cond),
            };
            let bits = if rest == "0" {
                Vec::new()
            } else {
                rest.split('^')
                    .map(|b| BitId::parse(b.trim()).ok_or_else(|| format!("bad bit id '{b}'")))
                    .collect::<Result<_, _>>()?
            };
            return Ok(Instruction::Controlled {
                gate,
                condition: Condition { bits, negate },
            });
        }
        if cond.is_some() {
            return Err("'@' only allowed on c- gates".into());
        }
        match (mnemonic, ops.as_slice()) {
            ("t", [q]) => Ok(Instruction::T(*q)),
            ("tdg", [q]) => Ok(Instruction::Tdg(*q)),
            ("measure", [q]) => {
                let bit = match target_bit {
                    Some(b) => BitId::parse(b).ok_or_else(|| format!("bad bit id '{b}'"))?,
                    None => BitId::Readout(*q),
                };
                Ok(Instruction::Measure { qubit: *q, bit })
            }
            _ => parse_gate(mnemonic, &ops)
                .map(Instruction::Clifford)
                .ok_or_else(|| format!("unknown mnemonic or arity: '{body}'")),
        }
    }

    pub fn serialize(&self) -> String {
        let mut out = format!("qubits {}\n", self.num_qubits);
        if !self.name.is_empty() {
            out.push_str(&format!("name {}\n", self.name));
        }
        for inst in &self.instructions {
            out.push_str(&inst.to_string());
            out.push('\n');
        }
        out
    }

    pub fn t_count(&self) -> usize {
        self.instructions
            .iter()
            .filter(|i| matches!(i, Instruction::T(_) | Instruction::Tdg(_)))
            .count()
    }

    pub fn has_classical_control(&self) -> bool {
        self.instructions
            .iter()
            .any(|i| matches!(i, Instruction::Controlled { .. }))
    }

    pub fn metrics(&self) -> CircuitMetrics {
        let mut m = CircuitMetrics { n: self.num_qubits, ..Default::default() };
        let mut front = vec![0usize; self.num_qubits];
        for inst in &self.instructions {
            match inst {
                Instruction::Measure { .. } => {
                    m.w += 1;
                    continue;
                }
                Instruction::T(_) | Instruction::Tdg(_) => m.t += 1,
                Instruction::Clifford(g) | Instruction::Controlled { gate: g, .. } => {
                    if g.is_two_qubit() {
                        m.c2 += 1;
                    } else {
                        m.c1 += 1;
                    }
                }
            }
            let qs = inst.qubits();
            let layer = qs.iter().map(|&q| front[q]).max().unwrap_or(0) + 1;
            for q in qs {
                front[q] = layer;
            }
            m.d_l = m.d_l.max(layer);
        }
        m
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

/// Generator settings for the family-2 random circuits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Family2Config {
    /// Total gate budget per circuit, as a multiple of `n`.
    pub budget_per_qubit: usize,
}

impl Default for Family2Config {
    fn default() -> Self {
        Self { budget_per_qubit: 10 }
    }
}

pub fn generate_random_family2(n: usize, target_t: usize, seed: u64) -> Circuit {
    generate_random_family2_with(n, target_t, seed, Family2Config::default())
}

/// Gates from `{H, S, CX, T}` with probabilities `(1-p)/3, (1-p)/3, (1-p)/3, p`,
/// `p = target_t / budget`, until exactly `target_t` T gates are placed; then
/// Clifford-only gates until the budget is reached; then every qubit is measured.
pub fn generate_random_family2_with(
    n: usize,
    target_t: usize,
    seed: u64,
    cfg: Family2Config,
) -> Circuit {
    assert!(n >= 2, "family-2 circuits need at least two qubits");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let budget = (cfg.budget_per_qubit * n).max(target_t).max(1);
    let p = target_t as f64 / budget as f64;
    let mut c = Circuit::new(n);
    c.name = format!(
        "family2 n={n} t={target_t} seed={seed} budget={budget} p={p:.6}"
    );
    let mut placed = 0;
    let clifford = |rng: &mut ChaCha8Rng| -> Instruction {
        match rng.gen_range(0..3) {
            0 => Instruction::Clifford(CliffordGate::H(rng.gen_range(0..n))),
            1 => Instruction::Clifford(CliffordGate::S(rng.gen_range(0..n))),
            _ => {
                let a = rng.gen_range(0..n);
                let mut b = rng.gen_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                Instruction::Clifford(CliffordGate::CX { control: a, target: b })
            }
        }
    };
    while placed < target_t {
        if rng.gen_bool(p) {
            c.push(Instruction::T(rng.gen_range(0..n)));
            placed += 1;
        } else {
            let g = clifford(&mut rng);
            c.push(g);
        }
    }
    while c.instructions.len() < budget {
        let g = clifford(&mut rng);
        c.push(g);
    }
    c.measure_all();
    c
}

/// CNOT+T circuit: each T on a random qubit is followed by a random CX.
/// With no H anywhere every gadget measurement is quantum, so `r = t`.
pub fn generate_cnot_t(n: usize, t: usize, seed: u64) -> Circuit {
    assert!(n >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Circuit::new(n);
    c.name = format!("cnot-t n={n} t={t} seed={seed}");
    for _ in 0..t {
        c.push(Instruction::T(rng.gen_range(0..n)));
        let a = rng.gen_range(0..n);
        let mut b = rng.gen_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        c.push(Instruction::Clifford(CliffordGate::CX { control: a, target: b }));
    }
    c.measure_all();
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = "qubits 2\nh 0\ncx 0 1\nt 1\nmeasure 0\nmeasure 1";

    #[test]
    fn parse_example_and_metrics() {
        let c = Circuit::parse(EXAMPLE).unwrap();
        let m = c.metrics();
        assert_eq!(m, CircuitMetrics { n: 2, t: 1, c1: 1, c2: 1, w: 2, d_l: 3 });
    }

    #[test]
    fn empty_and_parallel() {
        let c = Circuit::parse("qubits 3\n").unwrap();
        assert_eq!(c.metrics(), CircuitMetrics { n: 3, ..Default::default() });
        let c = Circuit::parse("qubits 3\nh 0\nh 1\nh 2").unwrap();
        assert_eq!(c.metrics().d_l, 1);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = Circuit::parse("qubits 2\nt 5").unwrap_err();
        assert!(matches!(e, CircuitError::Parse { line: 2, .. }));
        let e = Circuit::parse("qubits 2\nmeasure 0\nh 0").unwrap_err();
        assert!(matches!(e, CircuitError::Parse { line: 3, .. }));
        assert!(Circuit::parse("qubits 2\nfoo 1").is_err());
        assert!(Circuit::parse("qubits 2\ncx 1 1").is_err());
        assert!(Circuit::parse("qubits 2\nc-s 0 @ m0").is_err());
    }

    #[test]
    fn round_trip_is_canonical() {
        let text = "qubits 3\n# comment\nname demo\nh 0\n  cx 0 2\nmeasure 2 -> m0\nc-s 0 @ m0\nc-sdg 1 @ !m0\nmeasure 0\n";
        let c = Circuit::parse(text).unwrap();
        let s = c.serialize();
        assert_eq!(Circuit::parse(&s).unwrap(), c);
        assert_eq!(Circuit::parse(&s).unwrap().serialize(), s);
    }

    #[test]
    fn family2_is_reproducible_and_exact() {
        let a = generate_random_family2(25, 22, 9);
        let b = generate_random_family2(25, 22, 9);
        assert_eq!(a, b);
        assert_eq!(a.metrics().t, 22);
        assert_eq!(a.metrics().w, 25);
        let z = generate_random_family2(4, 0, 1);
        assert_eq!(z.metrics().t, 0);
        assert!(z.validate().is_ok());
    }
}
