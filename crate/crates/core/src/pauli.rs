//! Symplectic Pauli operators with exact phase tracking.
//!
//! An operator on `n` qubits is stored as two packed bit vectors plus an
//! exponent of `i`:
//!
//! ```text
//!   P = i^phase_exp · ⊗_q L_q,   L_q = I (x=0,z=0), X (1,0), Z (0,1), Y (1,1)
//! ```
//!
//! The letters are the physical single-qubit Paulis, so `phase_exp` is the
//! physical phase of the operator: Hermitian operators have `phase_exp ∈ {0, 2}`
//! and their sign is `(-1)^(phase_exp / 2)`.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PauliError {
    #[error("dimension mismatch: {left} qubits vs {right} qubits")]
    DimensionMismatch { left: usize, right: usize },
    #[error("qubit {qubit} out of range for {num_qubits}-qubit operator")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("cannot parse Pauli '{text}': {reason}")]
    Parse { text: String, reason: String },
    #[error("operator {0} is not Hermitian")]
    NotHermitian(String),
    #[error("V-unitary operands must anti-commute: {0} and {1} commute")]
    OperandsCommute(String, String),
}

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

#[inline]
fn words_for(n: usize) -> usize {
    n.div_ceil(64)
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliOperator {
    num_qubits: usize,
    phase: u8,
    x: Vec<u64>,
    z: Vec<u64>,
}

impl PauliOperator {
    pub fn identity(num_qubits: usize) -> Self {
        let w = words_for(num_qubits);
        Self {
            num_qubits,
            phase: 0,
            x: vec![0; w],
            z: vec![0; w],
        }
    }

    /// A single-qubit letter on `qubit` (0-based), identity elsewhere.
    pub fn single(num_qubits: usize, qubit: usize, letter: Pauli) -> Self {
        let mut p = Self::identity(num_qubits);
        p.set(qubit, letter);
        p
    }

    pub fn from_letters(letters: &[Pauli]) -> Self {
        let mut p = Self::identity(letters.len());
        for (q, &l) in letters.iter().enumerate() {
            p.set(q, l);
        }
        p
    }

    /// Builds an operator from explicit bit vectors (given as per-qubit bools).
    pub fn from_bits(phase_exp: u8, x: &[bool], z: &[bool]) -> Result<Self, PauliError> {
        if x.len() != z.len() {
            return Err(PauliError::DimensionMismatch {
                left: x.len(),
                right: z.len(),
            });
        }
        let mut p = Self::identity(x.len());
        for q in 0..x.len() {
            p.set(q, Pauli::from_bits(x[q], z[q]));
        }
        p.phase = phase_exp & 3;
        Ok(p)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn phase_exp(&self) -> u8 {
        self.phase
    }

    pub fn with_phase_exp(mut self, phase_exp: u8) -> Self {
        self.phase = phase_exp & 3;
        self
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase & 1 == 0
    }

    /// `+1` / `-1` for Hermitian operators, `None` otherwise.
    pub fn sign(&self) -> Option<i8> {
        match self.phase {
            0 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }

    pub fn is_negative(&self) -> bool {
        self.phase == 2
    }

    pub fn x_words(&self) -> &[u64] {
        &self.x
    }

    pub fn z_words(&self) -> &[u64] {
        &self.z
    }

    pub fn get(&self, q: usize) -> Pauli {
        let (w, b) = (q / 64, q % 64);
        Pauli::from_bits((self.x[w] >> b) & 1 == 1, (self.z[w] >> b) & 1 == 1)
    }

    /// Overwrites the letter on `q`; the phase exponent is left untouched.
    pub fn set(&mut self, q: usize, letter: Pauli) {
        assert!(q < self.num_qubits, "qubit {q} out of range");
        let (w, b) = (q / 64, q % 64);
        let (xb, zb) = letter.bits();
        self.x[w] = (self.x[w] & !(1 << b)) | ((xb as u64) << b);
        self.z[w] = (self.z[w] & !(1 << b)) | ((zb as u64) << b);
    }

    pub fn x_bit(&self, q: usize) -> bool {
        (self.x[q / 64] >> (q % 64)) & 1 == 1
    }

    pub fn z_bit(&self, q: usize) -> bool {
        (self.z[q / 64] >> (q % 64)) & 1 == 1
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().all(|&w| w == 0) && self.z.iter().all(|&w| w == 0)
    }

    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum()
    }

    /// Number of non-identity factors on qubits inside `range`.
    pub fn weight_in(&self, range: Range<usize>) -> usize {
        range.filter(|&q| self.x_bit(q) || self.z_bit(q)).count()
    }

    /// Qubits carrying a non-identity letter, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.num_qubits)
            .filter(|&q| self.x_bit(q) || self.z_bit(q))
            .collect()
    }

    pub fn negated(&self) -> Self {
        let mut p = self.clone();
        p.phase = (p.phase + 2) & 3;
        p
    }

    pub fn negate_if(&mut self, cond: bool) {
        if cond {
            self.phase = (self.phase + 2) & 3;
        }
    }

    /// Equality of the letter strings, ignoring the phase.
    pub fn same_letters(&self, other: &Self) -> bool {
        self.num_qubits == other.num_qubits && self.x == other.x && self.z == other.z
    }

    /// The operator on qubits `range`, reindexed from zero, phase preserved.
    pub fn restrict(&self, range: Range<usize>) -> Self {
        let mut out = Self::identity(range.len());
        for (i, q) in range.enumerate() {
            out.set(i, self.get(q));
        }
        out.phase = self.phase;
        out
    }

    /// Places this operator on qubits `offset..offset+n` of a larger register.
    pub fn embed(&self, total_qubits: usize, offset: usize) -> Self {
        assert!(offset + self.num_qubits <= total_qubits);
        let mut out = Self::identity(total_qubits);
        for q in 0..self.num_qubits {
            out.set(offset + q, self.get(q));
        }
        out.phase = self.phase;
        out
    }

    fn check_dims(&self, other: &Self) -> Result<(), PauliError> {
        if self.num_qubits != other.num_qubits {
            Err(PauliError::DimensionMismatch {
                left: self.num_qubits,
                right: other.num_qubits,
            })
        } else {
            Ok(())
        }
    }

    /// Operator product `self · other` with exact phase.
    pub fn try_multiply(&self, other: &Self) -> Result<Self, PauliError> {
        self.check_dims(other)?;
        Ok(self.mul_unchecked(other))
    }

    /// Operator product; panics if the qubit counts differ.
    pub fn multiply(&self, other: &Self) -> Self {
        self.try_multiply(other).expect("Pauli dimension mismatch")
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let mut plus = 0u32;
        let mut minus = 0u32;
        let mut x = Vec::with_capacity(self.x.len());
        let mut z = Vec::with_capacity(self.z.len());
        for w in 0..self.x.len() {
            let (x1, z1, x2, z2) = (self.x[w], self.z[w], other.x[w], other.z[w]);
            let (px, py, pz) = (x1 & !z1, x1 & z1, !x1 & z1);
            let (qx, qy, qz) = (x2 & !z2, x2 & z2, !x2 & z2);
            // XY = iZ, YZ = iX, ZX = iY and the reversed orders give -i.
            plus += ((px & qy) | (py & qz) | (pz & qx)).count_ones();
            minus += ((py & qx) | (pz & qy) | (px & qz)).count_ones();
            x.push(x1 ^ x2);
            z.push(z1 ^ z2);
        }
        let phase = (self.phase as u32 + other.phase as u32 + plus + 3 * minus) & 3;
        Self {
            num_qubits: self.num_qubits,
            phase: phase as u8,
            x,
            z,
        }
    }

    pub fn try_commutes(&self, other: &Self) -> Result<bool, PauliError> {
        self.check_dims(other)?;
        Ok(self.commutes_with(other))
    }

    /// Symplectic commutation test; panics on dimension mismatch.
    pub fn commutes_with(&self, other: &Self) -> bool {
        assert_eq!(self.num_qubits, other.num_qubits, "Pauli dimension mismatch");
        let mut parity = 0u32;
        for w in 0..self.x.len() {
            parity ^= ((self.x[w] & other.z[w]) ^ (self.z[w] & other.x[w])).count_ones();
        }
        parity & 1 == 0
    }

    /// Conjugation by an elementary Clifford gate.
    ///
    /// `Backward` returns `g† P g` (Heisenberg pull-back of a later measurement);
    /// `Forward` returns `g P g†`.
    pub fn conjugate_by_gate(&self, gate: &CliffordGate, direction: Direction) -> Self {
        let mut p = self.clone();
        p.conjugate_in_place(gate, direction);
        p
    }

    pub fn conjugate_in_place(&mut self, gate: &CliffordGate, direction: Direction) {
        let backward = direction == Direction::Backward;
        match *gate {
            CliffordGate::H(q) => {
                let (x, z) = (self.x_bit(q), self.z_bit(q));
                self.negate_if(x && z);
                self.set(q, Pauli::from_bits(z, x));
            }
            CliffordGate::S(q) => self.phase_gate(q, backward),
            CliffordGate::Sdg(q) => self.phase_gate(q, !backward),
            CliffordGate::X(q) => {
                let z = self.z_bit(q);
                self.negate_if(z);
            }
            CliffordGate::Z(q) => {
                let x = self.x_bit(q);
                self.negate_if(x);
            }
            CliffordGate::CX { control: c, target: t } => {
                let (xc, zc, xt, zt) = (self.x_bit(c), self.z_bit(c), self.x_bit(t), self.z_bit(t));
                self.negate_if(xc && zt && !(xt ^ zc));
                self.set(t, Pauli::from_bits(xt ^ xc, zt));
                self.set(c, Pauli::from_bits(xc, zc ^ zt));
            }
            CliffordGate::CZ(a, b) => {
                let (xa, za, xb, zb) = (self.x_bit(a), self.z_bit(a), self.x_bit(b), self.z_bit(b));
                self.negate_if(xa && xb && (za ^ zb));
                self.set(a, Pauli::from_bits(xa, za ^ xb));
                self.set(b, Pauli::from_bits(xb, zb ^ xa));
            }
        }
    }

    // S P S† when `inverse` is false, S† P S otherwise.
    fn phase_gate(&mut self, q: usize, inverse: bool) {
        let (x, z) = (self.x_bit(q), self.z_bit(q));
        if inverse {
            self.negate_if(x && !z);
        } else {
            self.negate_if(x && z);
        }
        self.set(q, Pauli::from_bits(x, z ^ x));
    }

    /// Parses the text form (`-X1Y3Z4`, `+I`, `+iZ2`) onto `num_qubits` qubits.
    /// Subscripts are 1-based.
    pub fn parse(text: &str, num_qubits: usize) -> Result<Self, PauliError> {
        let err = |reason: &str| PauliError::Parse {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let s = text.trim();
        let mut chars = s.chars().peekable();
        let mut phase = 0u8;
        match chars.peek() {
            Some('+') => {
                chars.next();
            }
            Some('-') => {
                chars.next();
                phase = 2;
            }
            _ => {}
        }
        if chars.peek() == Some(&'i') {
            chars.next();
            phase += 1;
        }
        let rest: String = chars.collect();
        let mut p = Self::identity(num_qubits);
        p.phase = phase & 3;
        if rest == "I" {
            return Ok(p);
        }
        if rest.is_empty() {
            return Err(err("empty operator"));
        }
        let bytes = rest.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let letter = match bytes[i] {
                b'X' => Pauli::X,
                b'Y' => Pauli::Y,
                b'Z' => Pauli::Z,
                _ => return Err(err("expected X, Y or Z")),
            };
            i += 1;
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if start == i {
                return Err(err("missing qubit subscript"));
            }
            let idx: usize = rest[start..i].parse().map_err(|_| err("bad subscript"))?;
            if idx == 0 || idx > num_qubits {
                return Err(PauliError::QubitOutOfRange {
                    qubit: idx,
                    num_qubits,
                });
            }
            if p.get(idx - 1) != Pauli::I {
                return Err(err("repeated qubit"));
            }
            p.set(idx - 1, letter);
        }
        Ok(p)
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.phase >= 2 { '-' } else { '+' };
        write!(f, "{sign}")?;
        if self.phase & 1 == 1 {
            write!(f, "i")?;
        }
        if self.is_identity() {
            return write!(f, "I");
        }
        for q in 0..self.num_qubits {
            let l = self.get(q);
            if l != Pauli::I {
                write!(f, "{}{}", l.letter(), q + 1)?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pauli[{}]({})", self.num_qubits, self)
    }
}

impl std::ops::Mul for &PauliOperator {
    type Output = PauliOperator;

    fn mul(self, rhs: Self) -> PauliOperator {
        self.multiply(rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

/// Elementary Clifford gates. T is deliberately absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CliffordGate {
    H(usize),
    S(usize),
    Sdg(usize),
    X(usize),
    Z(usize),
    CX { control: usize, target: usize },
    CZ(usize, usize),
}

impl CliffordGate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            CliffordGate::H(q)
            | CliffordGate::S(q)
            | CliffordGate::Sdg(q)
            | CliffordGate::X(q)
            | CliffordGate::Z(q) => vec![q],
            CliffordGate::CX { control, target } => vec![control, target],
            CliffordGate::CZ(a, b) => vec![a, b],
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, CliffordGate::CX { .. } | CliffordGate::CZ(..))
    }

    pub fn inverse(&self) -> Self {
        match *self {
            CliffordGate::S(q) => CliffordGate::Sdg(q),
            CliffordGate::Sdg(q) => CliffordGate::S(q),
            g => g,
        }
    }

    /// Checks operand distinctness and range against a host register size.
    pub fn validate(&self, num_qubits: usize) -> Result<(), PauliError> {
        let qs = self.qubits();
        for &q in &qs {
            if q >= num_qubits {
                return Err(PauliError::QubitOutOfRange { qubit: q, num_qubits });
            }
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(PauliError::Parse {
                text: format!("{self:?}"),
                reason: "two-qubit gate on a single qubit".into(),
            });
        }
        Ok(())
    }

    pub fn mnemonic(&self) -> &'static str {
        match self {
            CliffordGate::H(_) => "h",
            CliffordGate::S(_) => "s",
            CliffordGate::Sdg(_) => "sdg",
            CliffordGate::X(_) => "x",
            CliffordGate::Z(_) => "z",
            CliffordGate::CX { .. } => "cx",
            CliffordGate::CZ(..) => "cz",
        }
    }
}

/// `V = ((-1)^σ₁ F + (-1)^σ₂ G) / √2` for anti-commuting Hermitian `F`, `G`.
///
/// `first` is the stabilizer (or earlier measurement) that witnessed the
/// anti-commutation; `second` is the dropped measurement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VUnitary {
    pub first: PauliOperator,
    pub second: PauliOperator,
    pub sigma_first: bool,
    pub sigma_second: bool,
}

impl VUnitary {
    pub fn new(
        first: PauliOperator,
        second: PauliOperator,
        sigma_first: bool,
        sigma_second: bool,
    ) -> Result<Self, PauliError> {
        first.check_dims(&second)?;
        for p in [&first, &second] {
            if !p.is_hermitian() {
                return Err(PauliError::NotHermitian(p.to_string()));
            }
        }
        if first.commutes_with(&second) {
            return Err(PauliError::OperandsCommute(
                first.to_string(),
                second.to_string(),
            ));
        }
        Ok(Self {
            first,
            second,
            sigma_first,
            sigma_second,
        })
    }

    /// `V† R V`. V is Hermitian and squares to the identity, so this is also
    /// the forward conjugation `V R V†`.
    ///
    /// Four cases by commutation of `R` with (`first`, `second`):
    /// both commute → `R`; both anti-commute → `-R`; exactly one anti-commutes →
    /// `α · R · C · A` with `C` the commuting operand, `A` the anti-commuting one
    /// and `α = (-1)^(σ₁+σ₂)`.
    pub fn conjugate(&self, r: &PauliOperator) -> PauliOperator {
        let c1 = r.commutes_with(&self.first);
        let c2 = r.commutes_with(&self.second);
        match (c1, c2) {
            (true, true) => r.clone(),
            (false, false) => r.negated(),
            (true, false) => self.one_sided(r, &self.first, &self.second),
            (false, true) => self.one_sided(r, &self.second, &self.first),
        }
    }

    fn one_sided(
        &self,
        r: &PauliOperator,
        commuting: &PauliOperator,
        anti: &PauliOperator,
    ) -> PauliOperator {
        let mut out = r.multiply(commuting).multiply(anti);
        out.negate_if(self.sigma_first ^ self.sigma_second);
        out
    }
}

/// Free-function form of [`VUnitary::conjugate`].
pub fn conjugate_by_v(r: &PauliOperator, v: &VUnitary) -> Result<PauliOperator, PauliError> {
    r.check_dims(&v.first)?;
    Ok(v.conjugate(r))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str, n: usize) -> PauliOperator {
        PauliOperator::parse(s, n).unwrap()
    }

    #[test]
    fn x_times_z_is_minus_i_y() {
        let r = p("X1", 1).multiply(&p("Z1", 1));
        assert_eq!(r.phase_exp(), 3);
        assert_eq!(r.get(0), Pauli::Y);
        assert_eq!(r.to_string(), "-iY1");
    }

    #[test]
    fn involution_and_identity() {
        let xx = p("X1X2", 2);
        assert_eq!(xx.multiply(&xx), PauliOperator::identity(2));
        let q = p("-Y1Z2", 2);
        assert_eq!(PauliOperator::identity(2).multiply(&q), q);
    }

    #[test]
    fn commutation_examples() {
        assert!(!p("X1", 1).commutes_with(&p("Z1", 1)));
        assert!(p("X1X2", 2).commutes_with(&p("Z1Z2", 2)));
        assert!(p("X1Y3Z4", 4).commutes_with(&p("Z1Z3", 4)));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let e = p("X1", 1).try_multiply(&p("X1", 2)).unwrap_err();
        assert_eq!(e, PauliError::DimensionMismatch { left: 1, right: 2 });
        assert!(p("X1", 1).try_commutes(&p("X1", 3)).is_err());
    }

    #[test]
    fn weights() {
        assert_eq!(p("X1Y3Z4", 4).weight(), 3);
        assert_eq!(PauliOperator::identity(7).weight(), 0);
        // qubits 2..4 in 1-based notation are indices 1..4
        assert_eq!(p("Z1Z2", 4).weight_in(1..4), 1);
    }

    #[test]
    fn parse_print_round_trip() {
        for s in ["+I", "-X1Y3Z4", "+iZ2", "-iX1X70"] {
            assert_eq!(p(s, 70).to_string(), s);
        }
        assert!(PauliOperator::parse("X0", 3).is_err());
        assert!(PauliOperator::parse("X4", 3).is_err());
        assert!(PauliOperator::parse("X1X1", 3).is_err());
        assert!(PauliOperator::parse("Q1", 3).is_err());
    }

    #[test]
    fn gadget_measurement_pulls_back_through_cx() {
        let z_aux = p("Z2", 2);
        let q = z_aux.conjugate_by_gate(
            &CliffordGate::CX { control: 0, target: 1 },
            Direction::Backward,
        );
        assert_eq!(q, p("Z1Z2", 2));
    }

    #[test]
    fn hadamard_and_phase_rules() {
        let h = CliffordGate::H(0);
        assert_eq!(p("X1", 1).conjugate_by_gate(&h, Direction::Backward), p("Z1", 1));
        assert_eq!(p("Y1", 1).conjugate_by_gate(&h, Direction::Backward), p("-Y1", 1));
        let s = CliffordGate::S(0);
        assert_eq!(p("X1", 1).conjugate_by_gate(&s, Direction::Backward), p("-Y1", 1));
        assert_eq!(p("X1", 1).conjugate_by_gate(&s, Direction::Forward), p("Y1", 1));
        assert_eq!(
            p("Y1", 1).conjugate_by_gate(&CliffordGate::Sdg(0), Direction::Backward),
            p("-X1", 1)
        );
    }

    #[test]
    fn v_unitary_cases() {
        // first = Z1 (witness), second = X1X2 (dropped).
        let v = VUnitary::new(p("Z1", 2), p("X1X2", 2), false, true).unwrap();
        assert_eq!(v.conjugate(&p("Z1Z2", 2)), p("Z1Z2", 2));
        assert_eq!(v.conjugate(&p("Y1", 2)), p("-Y1", 2));
        // [R, second] = 0, {R, first} = 0 -> α R · second · first
        let r = p("X1", 2);
        let expect = {
            let mut e = r.multiply(&p("X1X2", 2)).multiply(&p("Z1", 2));
            e.negate_if(true);
            e
        };
        assert_eq!(v.conjugate(&r), expect);
        assert!(VUnitary::new(p("Z1", 2), p("Z2", 2), false, false).is_err());
    }
}
