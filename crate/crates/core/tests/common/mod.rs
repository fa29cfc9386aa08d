//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;
use pbc_core::circuit::{Circuit, Instruction};
use pbc_core::engine::{EngineError, OutcomeBackend};
use pbc_core::{CliffordGate, Pauli, PauliOperator};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Dense row-major `dim × dim` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub dim: usize,
    pub a: Vec<Complex64>,
}

const I: Complex64 = Complex64::new(0.0, 1.0);

impl Dense {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, a: vec![Complex64::new(0.0, 0.0); dim * dim] }
    }

    pub fn mul(&self, o: &Dense) -> Dense {
        let n = self.dim;
        let mut out = Dense::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let x = self.a[i * n + k];
                if x.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.a[i * n + j] += x * o.a[k * n + j];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Dense {
        let n = self.dim;
        let mut out = Dense::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.a[j * n + i] = self.a[i * n + j].conj();
            }
        }
        out
    }

    pub fn add(&self, o: &Dense, s: Complex64) -> Dense {
        Dense { dim: self.dim, a: self.a.iter().zip(&o.a).map(|(x, y)| x + s * y).collect() }
    }

    pub fn scale(&self, s: Complex64) -> Dense {
        Dense { dim: self.dim, a: self.a.iter().map(|x| x * s).collect() }
    }

    pub fn approx_eq(&self, o: &Dense) -> bool {
        self.a.iter().zip(&o.a).all(|(x, y)| (x - y).norm() < 1e-9)
    }
}

/// Matrix of a Pauli operator; qubit `q` is bit `q` of the basis index.
pub fn pauli_dense(p: &PauliOperator) -> Dense {
    let n = p.num_qubits();
    let dim = 1 << n;
    let mut m = Dense::zeros(dim);
    let global = I.powu(p.phase_exp() as u32);
    for b in 0..dim {
        let mut amp = global;
        let mut row = b;
        for q in 0..n {
            let bit = b >> q & 1 == 1;
            let sgn = if bit { -1.0 } else { 1.0 };
            match p.get(q) {
                Pauli::I => {}
                Pauli::X => row ^= 1 << q,
                Pauli::Z => amp *= sgn,
                Pauli::Y => {
                    row ^= 1 << q;
                    amp *= I * sgn;
                }
            }
        }
        m.a[row * dim + b] = amp;
    }
    m
}

pub fn gate_dense(g: &CliffordGate, n: usize) -> Dense {
    let dim = 1 << n;
    let mut m = Dense::zeros(dim);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for b in 0..dim {
        let bit = |q: usize| b >> q & 1 == 1;
        let mut set = |row: usize, v: Complex64| m.a[row * dim + b] += v;
        let one = Complex64::new(1.0, 0.0);
        match *g {
            CliffordGate::H(q) => {
                set(b & !(1 << q), one * h);
                set(b | 1 << q, one * if bit(q) { -h } else { h });
            }
            CliffordGate::S(q) => set(b, if bit(q) { I } else { one }),
            CliffordGate::Sdg(q) => set(b, if bit(q) { -I } else { one }),
            CliffordGate::X(q) => set(b ^ 1 << q, one),
            CliffordGate::Z(q) => set(b, if bit(q) { -one } else { one }),
            CliffordGate::CX { control, target } => {
                set(if bit(control) { b ^ 1 << target } else { b }, one)
            }
            CliffordGate::CZ(a, c) => set(b, if bit(a) && bit(c) { -one } else { one }),
        }
    }
    m
}

/// Every operator on `n` qubits: all letter strings times all four phases.
pub fn all_paulis(n: usize) -> Vec<PauliOperator> {
    let letters = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    let mut out = Vec::new();
    for code in 0..(1usize << (2 * n)) {
        let ls: Vec<Pauli> = (0..n).map(|q| letters[code >> (2 * q) & 3]).collect();
        let base = PauliOperator::from_letters(&ls);
        for ph in 0..4 {
            out.push(base.clone().with_phase_exp(ph));
        }
    }
    out
}

pub fn all_gates(n: usize) -> Vec<CliffordGate> {
    let mut g = Vec::new();
    for q in 0..n {
        g.extend([
            CliffordGate::H(q),
            CliffordGate::S(q),
            CliffordGate::Sdg(q),
            CliffordGate::X(q),
            CliffordGate::Z(q),
        ]);
        for r in 0..n {
            if r != q {
                g.push(CliffordGate::CX { control: q, target: r });
                if q < r {
                    g.push(CliffordGate::CZ(q, r));
                }
            }
        }
    }
    g
}

/// Replays a fixed prefix of outcomes (coins and measurements alike), then
/// answers 0, counting how many outcomes were drawn.
pub struct TreeBackend {
    pub prefix: Vec<bool>,
    pub drawn: usize,
}

impl TreeBackend {
    pub fn new(prefix: Vec<bool>) -> Self {
        Self { prefix, drawn: 0 }
    }

    fn next(&mut self) -> bool {
        let v = self.prefix.get(self.drawn).copied().unwrap_or(false);
        self.drawn += 1;
        v
    }
}

impl OutcomeBackend for TreeBackend {
    fn coin(&mut self) -> bool {
        self.next()
    }

    fn measure(&mut self, _p: &PauliOperator) -> Result<bool, EngineError> {
        Ok(self.next())
    }
}

/// Visits every leaf of the outcome tree once. `run` executes one path for
/// the given prefix and returns the number of outcomes it drew.
pub fn for_each_path(mut run: impl FnMut(&[bool]) -> usize) -> usize {
    let mut stack = vec![Vec::new()];
    let mut leaves = 0;
    while let Some(prefix) = stack.pop() {
        let drawn = run(&prefix);
        leaves += 1;
        for j in prefix.len()..drawn {
            let mut child = prefix.clone();
            child.resize(j, false);
            child.push(true);
            stack.push(child);
        }
    }
    leaves
}

/// Random Clifford+T circuit with exactly `t` T/T† gates and `c2` two-qubit
/// gates among `extra` random single-qubit Cliffords; all qubits measured.
pub fn small_circuit(n: usize, t: usize, c2: usize, extra: usize, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kinds: Vec<u8> = std::iter::repeat_n(0, t)
        .chain(std::iter::repeat_n(1, if n > 1 { c2 } else { 0 }))
        .chain(std::iter::repeat_n(2, extra))
        .collect();
    for i in (1..kinds.len()).rev() {
        kinds.swap(i, rng.gen_range(0..=i));
    }
    let mut c = Circuit::new(n);
    c.push(Instruction::Clifford(CliffordGate::H(0)));
    for k in kinds {
        let q = rng.gen_range(0..n);
        let inst = match k {
            0 if rng.gen() => Instruction::T(q),
            0 => Instruction::Tdg(q),
            1 => {
                let mut r = rng.gen_range(0..n - 1);
                if r >= q {
                    r += 1;
                }
                if rng.gen() {
                    Instruction::Clifford(CliffordGate::CX { control: q, target: r })
                } else {
                    Instruction::Clifford(CliffordGate::CZ(q, r))
                }
            }
            _ => Instruction::Clifford(match rng.gen_range(0..5) {
                0 => CliffordGate::H(q),
                1 => CliffordGate::S(q),
                2 => CliffordGate::Sdg(q),
                3 => CliffordGate::X(q),
                _ => CliffordGate::Z(q),
            }),
        };
        c.push(inst);
    }
    c.measure_all();
    c
}
