//! Dense statevector simulation. Used as the quantum backend on the magic
//! register and for exact output distributions of small circuits.
//!
//! Basis index bit `q` holds qubit `q`.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::circuit::{BitId, Circuit, Instruction};
use crate::pauli::{CliffordGate, PauliOperator};

pub const MAX_QUBITS: usize = 30;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StateError {
    #[error("{requested} qubits exceeds the statevector cap of {cap}")]
    TooManyQubits { requested: usize, cap: usize },
    #[error("operator acts on {got} qubits, state has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operator {0} is not Hermitian")]
    NotHermitian(String),
    #[error("circuit uses bit {0} before it is measured")]
    UnresolvedBit(BitId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

fn i_pow(k: u32) -> Complex64 {
    match k & 3 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

impl StateVector {
    pub fn zero(num_qubits: usize) -> Result<Self, StateError> {
        if num_qubits > MAX_QUBITS {
            return Err(StateError::TooManyQubits { requested: num_qubits, cap: MAX_QUBITS });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { num_qubits, amps })
    }

    /// `|T⟩^{⊗t}` with `|T⟩ = (|0⟩ + e^{iπ/4}|1⟩)/√2`.
    pub fn magic(t: usize) -> Result<Self, StateError> {
        let mut s = Self::zero(t)?;
        let norm = (0.5f64).powf(t as f64 / 2.0);
        let w = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        let powers: Vec<Complex64> = (0..=t as i32).map(|k| w.powi(k) * norm).collect();
        for (b, a) in s.amps.iter_mut().enumerate() {
            *a = powers[b.count_ones() as usize];
        }
        Ok(s)
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Self {
        assert!(amps.len().is_power_of_two());
        let num_qubits = amps.len().trailing_zeros() as usize;
        Self { num_qubits, amps }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn masks(&self, p: &PauliOperator) -> Result<(usize, usize), StateError> {
        if p.num_qubits() != self.num_qubits {
            return Err(StateError::DimensionMismatch {
                expected: self.num_qubits,
                got: p.num_qubits(),
            });
        }
        if self.num_qubits == 0 {
            return Ok((0, 0));
        }
        Ok((p.x_words()[0] as usize, p.z_words()[0] as usize))
    }

    /// Returns `P|ψ⟩`.
    pub fn apply_pauli(&self, p: &PauliOperator) -> Result<Vec<Complex64>, StateError> {
        let (x, z) = self.masks(p)?;
        let ny = (x & z).count_ones();
        let pre = i_pow(p.phase_exp() as u32 + ny);
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (b, &a) in self.amps.iter().enumerate() {
            let sign = if (b & z).count_ones() & 1 == 1 { -pre } else { pre };
            out[b ^ x] = a * sign;
        }
        Ok(out)
    }

    pub fn expectation(&self, p: &PauliOperator) -> Result<f64, StateError> {
        let pp = self.apply_pauli(p)?;
        let v: Complex64 = self.amps.iter().zip(&pp).map(|(a, b)| a.conj() * b).sum();
        Ok(v.re)
    }

    /// Probability of the `+1` eigenvalue (outcome bit 0).
    pub fn prob_zero(&self, p: &PauliOperator) -> Result<f64, StateError> {
        Ok(((1.0 + self.expectation(p)?) / 2.0).clamp(0.0, 1.0))
    }

    /// Projects onto the eigenspace `(-1)^outcome` and renormalizes. Returns
    /// the probability of that outcome before projection.
    pub fn project(&mut self, p: &PauliOperator, outcome: bool) -> Result<f64, StateError> {
        if !p.is_hermitian() {
            return Err(StateError::NotHermitian(p.to_string()));
        }
        let pp = self.apply_pauli(p)?;
        let s = if outcome { -1.0 } else { 1.0 };
        for (a, b) in self.amps.iter_mut().zip(&pp) {
            *a = (*a + b * s) * 0.5;
        }
        let prob = self.norm_sqr();
        if prob > 0.0 {
            let k = 1.0 / prob.sqrt();
            for a in &mut self.amps {
                *a *= k;
            }
        }
        Ok(prob)
    }

    /// Projective measurement of a Hermitian Pauli.
    pub fn measure_pauli<R: Rng + ?Sized>(
        &mut self,
        p: &PauliOperator,
        rng: &mut R,
    ) -> Result<bool, StateError> {
        if !p.is_hermitian() {
            return Err(StateError::NotHermitian(p.to_string()));
        }
        let p0 = self.prob_zero(p)?;
        let outcome = rng.gen::<f64>() >= p0;
        self.project(p, outcome)?;
        Ok(outcome)
    }

    pub fn apply_gate(&mut self, g: &CliffordGate) {
        match *g {
            CliffordGate::H(q) => {
                let bit = 1 << q;
                for b in 0..self.amps.len() {
                    if b & bit == 0 {
                        let (a0, a1) = (self.amps[b], self.amps[b | bit]);
                        self.amps[b] = (a0 + a1) * FRAC_1_SQRT_2;
                        self.amps[b | bit] = (a0 - a1) * FRAC_1_SQRT_2;
                    }
                }
            }
            CliffordGate::S(q) => self.phase_on(1 << q, Complex64::new(0.0, 1.0)),
            CliffordGate::Sdg(q) => self.phase_on(1 << q, Complex64::new(0.0, -1.0)),
            CliffordGate::Z(q) => self.phase_on(1 << q, Complex64::new(-1.0, 0.0)),
            CliffordGate::X(q) => {
                let bit = 1 << q;
                for b in 0..self.amps.len() {
                    if b & bit == 0 {
                        self.amps.swap(b, b | bit);
                    }
                }
            }
            CliffordGate::CX { control, target } => {
                let (c, t) = (1 << control, 1 << target);
                for b in 0..self.amps.len() {
                    if b & c != 0 && b & t == 0 {
                        self.amps.swap(b, b | t);
                    }
                }
            }
            CliffordGate::CZ(a, b2) => {
                let m = (1 << a) | (1 << b2);
                for b in 0..self.amps.len() {
                    if b & m == m {
                        self.amps[b] = -self.amps[b];
                    }
                }
            }
        }
    }

    pub fn apply_t(&mut self, q: usize, dagger: bool) {
        let angle = if dagger { -1.0 } else { 1.0 } * std::f64::consts::FRAC_PI_4;
        self.phase_on(1 << q, Complex64::from_polar(1.0, angle));
    }

    fn phase_on(&mut self, bit: usize, phase: Complex64) {
        for (b, a) in self.amps.iter_mut().enumerate() {
            if b & bit != 0 {
                *a *= phase;
            }
        }
    }
}

/// Readout bit string: bit `q` carries the readout of data qubit `q`.
pub type Outcome = u64;

/// Exact output distribution of a circuit (unmeasured qubits are ignored).
/// Mid-circuit measurements and classically controlled gates are handled by
/// branching; branches below `1e-15` probability are dropped.
pub fn exact_distribution(c: &Circuit) -> Result<BTreeMap<Outcome, f64>, StateError> {
    let state = StateVector::zero(c.num_qubits)?;
    let mut branches = vec![(state, 1.0f64, BTreeMap::<BitId, bool>::new())];
    for inst in &c.instructions {
        match inst {
            Instruction::Clifford(g) => branches.iter_mut().for_each(|b| b.0.apply_gate(g)),
            Instruction::T(q) => branches.iter_mut().for_each(|b| b.0.apply_t(*q, false)),
            Instruction::Tdg(q) => branches.iter_mut().for_each(|b| b.0.apply_t(*q, true)),
            Instruction::Controlled { gate, condition } => {
                for b in branches.iter_mut() {
                    let fire = condition
                        .evaluate(|bit| b.2.get(&bit).copied())
                        .ok_or_else(|| StateError::UnresolvedBit(condition.bits[0]))?;
                    if fire {
                        b.0.apply_gate(gate);
                    }
                }
            }
            Instruction::Measure { qubit, bit } => {
                let z = PauliOperator::single(c.num_qubits, *qubit, crate::pauli::Pauli::Z);
                let mut next = Vec::with_capacity(branches.len() * 2);
                for (state, w, bits) in branches {
                    for outcome in [false, true] {
                        let mut s = state.clone();
                        let p = s.project(&z, outcome)?;
                        if w * p > 1e-15 {
                            let mut nb = bits.clone();
                            nb.insert(*bit, outcome);
                            next.push((s, w * p, nb));
                        }
                    }
                }
                branches = next;
            }
        }
    }
    let mut dist = BTreeMap::new();
    for (_, w, bits) in branches {
        let mut key = 0u64;
        for (bit, v) in bits {
            if let BitId::Readout(q) = bit {
                if v {
                    key |= 1 << q;
                }
            }
        }
        *dist.entry(key).or_insert(0.0) += w;
    }
    Ok(dist)
}

/// Total variation distance between a reference distribution and empirical counts.
pub fn total_variation(exact: &BTreeMap<Outcome, f64>, counts: &BTreeMap<Outcome, usize>) -> f64 {
    let shots: usize = counts.values().sum();
    let mut keys: Vec<Outcome> = exact.keys().chain(counts.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    let mut tv = 0.0;
    for k in keys {
        let p = exact.get(&k).copied().unwrap_or(0.0);
        let q = counts.get(&k).copied().unwrap_or(0) as f64 / shots.max(1) as f64;
        tv += (p - q).abs();
    }
    tv / 2.0
}
