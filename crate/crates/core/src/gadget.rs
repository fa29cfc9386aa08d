//! T-gadgetization: Clifford+T circuit to an adaptive Clifford circuit on
//! `n + t` qubits with the magic register appended after the data qubits.

use serde::{Deserialize, Serialize};

use crate::circuit::{BitId, Circuit, CircuitError, Condition, Instruction};
use crate::pauli::CliffordGate;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdaptiveCliffordCircuit {
    /// Data qubits `0..num_data`, magic qubits `num_data..num_data + magic_count`.
    pub circuit: Circuit,
    pub num_data: usize,
    pub magic_count: usize,
}

impl AdaptiveCliffordCircuit {
    pub fn num_qubits(&self) -> usize {
        self.circuit.num_qubits
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.circuit.instructions
    }

    pub fn magic_qubit(&self, gadget: usize) -> usize {
        self.num_data + gadget
    }

    pub fn serialize(&self) -> String {
        self.circuit.serialize()
    }

    /// Parses the extended line format. Qubits past `num_data` are magic.
    pub fn parse(text: &str, num_data: usize) -> Result<Self, CircuitError> {
        let circuit = Circuit::parse(text)?;
        if circuit.t_count() != 0 {
            return Err(CircuitError::Parse {
                line: 0,
                reason: "adaptive circuits may not contain T gates".into(),
            });
        }
        let magic_count = circuit.num_qubits.saturating_sub(num_data);
        Ok(Self { circuit, num_data, magic_count })
    }
}

/// Replaces the i-th T (or T†) gate by its gadget on magic qubit `n + i`.
///
/// T on `q`:  `cx q n+i; measure n+i -> m_i; c-s q @ m_i`.
/// T† on `q`: `cx q n+i; measure n+i -> m_i; c-sdg q @ !m_i`.
///
/// Conditions already present in the source are copied unchanged.
pub fn gadgetize(c: &Circuit) -> AdaptiveCliffordCircuit {
    let n = c.num_qubits;
    let t = c.t_count();
    let mut out = Circuit::new(n + t);
    out.name = c.name.clone();
    let mut next = 0;
    for inst in &c.instructions {
        match *inst {
            Instruction::T(q) | Instruction::Tdg(q) => {
                let magic = n + next;
                let bit = BitId::Gadget(next);
                out.push(Instruction::Clifford(CliffordGate::CX { control: q, target: magic }));
                out.push(Instruction::Measure { qubit: magic, bit });
                let (gate, condition) = if matches!(inst, Instruction::T(_)) {
                    (CliffordGate::S(q), Condition::on(bit))
                } else {
                    (CliffordGate::Sdg(q), Condition::on_zero(bit))
                };
                out.push(Instruction::Controlled { gate, condition });
                next += 1;
            }
            _ => out.push(inst.clone()),
        }
    }
    AdaptiveCliffordCircuit { circuit: out, num_data: n, magic_count: t }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_t_matches_reference_layout() {
        let c = Circuit::parse("qubits 1\nt 0").unwrap();
        let ac = gadgetize(&c);
        assert_eq!(ac.num_qubits(), 2);
        assert_eq!(ac.magic_count, 1);
        assert_eq!(
            ac.serialize(),
            "qubits 2\ncx 0 1\nmeasure 1 -> m0\nc-s 0 @ m0\n"
        );
        let back = AdaptiveCliffordCircuit::parse(&ac.serialize(), 1).unwrap();
        assert_eq!(back, ac);
    }

    #[test]
    fn clifford_only_passes_through() {
        let c = Circuit::parse("qubits 2\nh 0\ncx 0 1\nmeasure 0\nmeasure 1").unwrap();
        let ac = gadgetize(&c);
        assert_eq!(ac.magic_count, 0);
        assert_eq!(ac.circuit.instructions, c.instructions);
    }

    #[test]
    fn counts_for_three_t() {
        let c = Circuit::parse("qubits 2\nt 0\ntdg 1\nh 0\nt 0\nmeasure 0").unwrap();
        let ac = gadgetize(&c);
        assert_eq!(ac.magic_count, 3);
        let insts = ac.instructions();
        let magic_measures = insts
            .iter()
            .filter(|i| matches!(i, Instruction::Measure { qubit, .. } if *qubit >= 2))
            .count();
        let controlled = insts
            .iter()
            .filter(|i| matches!(i, Instruction::Controlled { .. }))
            .count();
        assert_eq!((magic_measures, controlled), (3, 3));
        assert_eq!(ac.circuit.t_count(), 0);
        assert!(ac.circuit.validate().is_ok());
    }
}
