//! Circuit IR, the protocol's circuit builders and the full-matrix
//! verification oracle.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gate::{GateKind, GateOp};

/// Largest circuit [`circuit_to_matrix`] will expand.
pub const MATRIX_CAPACITY: usize = 10;

/// A named list of qubit indices, e.g. the home register `h`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Register {
    pub name: String,
    pub qubits: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    qubit_count: usize,
    ops: Vec<GateOp>,
    registers: Vec<Register>,
}

impl Circuit {
    pub fn new(qubit_count: usize) -> Self {
        Self {
            qubit_count,
            ops: Vec::new(),
            registers: Vec::new(),
        }
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn register(&self, name: &str) -> Option<&[usize]> {
        self.registers
            .iter()
            .find(|r| r.name == name)
            .map(|r| r.qubits.as_slice())
    }

    /// Appends `op`, rejecting qubits outside the circuit.
    pub fn push(&mut self, op: GateOp) -> Result<()> {
        if let Some(q) = op.qubits().find(|&q| q >= self.qubit_count) {
            return Err(Error::QubitOutOfRange {
                index: q,
                qubit_count: self.qubit_count,
            });
        }
        self.ops.push(op);
        Ok(())
    }

    /// Declares a named register; registers must be pairwise disjoint.
    pub fn add_register(&mut self, name: &str, qubits: &[usize]) -> Result<()> {
        check_register(qubits)?;
        if let Some(&q) = qubits.iter().find(|&&q| q >= self.qubit_count) {
            return Err(Error::QubitOutOfRange {
                index: q,
                qubit_count: self.qubit_count,
            });
        }
        let clash = self
            .registers
            .iter()
            .any(|r| r.name == name || r.qubits.iter().any(|q| qubits.contains(q)));
        if clash {
            return Err(Error::RegisterOverlap(name.to_string()));
        }
        self.registers.push(Register {
            name: name.to_string(),
            qubits: qubits.to_vec(),
        });
        Ok(())
    }

    pub fn with_register(mut self, name: &str, qubits: &[usize]) -> Result<Self> {
        self.add_register(name, qubits)?;
        Ok(self)
    }

    /// Widens the circuit to at least `qubit_count` qubits.
    pub fn widen(&mut self, qubit_count: usize) {
        self.qubit_count = self.qubit_count.max(qubit_count);
    }

    /// Appends the gates of `other`, widening as needed. Registers of `other`
    /// are not copied.
    pub fn append(&mut self, other: &Circuit) {
        self.widen(other.qubit_count);
        self.ops.extend(other.ops.iter().cloned());
    }

    /// The inverse circuit: reversed order, each gate inverted.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            qubit_count: self.qubit_count,
            ops: self.ops.iter().rev().map(GateOp::inverse).collect(),
            registers: self.registers.clone(),
        }
    }

    /// Maps logical qubit `q` to `layout[q]` on a circuit of `qubit_count` qubits.
    pub fn relabel(&self, layout: &[usize], qubit_count: usize) -> Result<Circuit> {
        if layout.len() < self.qubit_count {
            return Err(Error::DimensionMismatch(layout.len(), self.qubit_count));
        }
        check_register(layout)?;
        if let Some(&q) = layout.iter().find(|&&q| q >= qubit_count) {
            return Err(Error::QubitOutOfRange {
                index: q,
                qubit_count,
            });
        }
        Ok(Circuit {
            qubit_count,
            ops: self.ops.iter().map(|op| op.relabel(layout)).collect(),
            registers: self
                .registers
                .iter()
                .map(|r| Register {
                    name: r.name.clone(),
                    qubits: r.qubits.iter().map(|&q| layout[q]).collect(),
                })
                .collect(),
        })
    }

    pub(crate) fn from_parts(
        qubit_count: usize,
        ops: Vec<GateOp>,
        registers: Vec<Register>,
    ) -> Self {
        Self {
            qubit_count,
            ops,
            registers,
        }
    }

    /// Plain-text export: `qubits N`, optional `reg` lines, then one gate per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("qubits {}\n", self.qubit_count);
        for r in &self.registers {
            let _ = write!(out, "reg {}", r.name);
            for q in &r.qubits {
                let _ = write!(out, " q[{q}]");
            }
            out.push('\n');
        }
        for op in &self.ops {
            let _ = writeln!(out, "{op}");
        }
        out
    }

    /// Parses the format written by [`Circuit::to_text`]. Blank lines and `#`
    /// comments are ignored; angles may be decimal or multiples of `pi`.
    pub fn parse_text(text: &str) -> Result<Circuit> {
        let mut circuit: Option<Circuit> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let mut words = line.split_whitespace();
            let head = words.next().unwrap_or_default();
            let Some(c) = circuit.as_mut() else {
                let n = match (head, words.next(), words.next()) {
                    ("qubits", Some(n), None) => n
                        .parse::<usize>()
                        .map_err(|_| err(format!("bad qubit count {n:?}")))?,
                    _ => return Err(err("expected header `qubits N`".into())),
                };
                circuit = Some(Circuit::new(n));
                continue;
            };
            if head == "reg" {
                let name = words
                    .next()
                    .ok_or_else(|| err("register needs a name".into()))?;
                let qubits = words
                    .map(parse_qubit)
                    .collect::<std::result::Result<Vec<_>, _>>();
                let qubits = qubits.map_err(err)?;
                c.add_register(name, &qubits)
                    .map_err(|e| err(e.to_string()))?;
                continue;
            }
            let qubits = words
                .map(parse_qubit)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(err)?;
            let (name, angle) = match head.split_once('(') {
                Some((name, rest)) => {
                    let arg = rest
                        .strip_suffix(')')
                        .ok_or_else(|| err(format!("unclosed angle in {head:?}")))?;
                    (name, Some(parse_angle(arg).map_err(err)?))
                }
                None => (head, None),
            };
            let kind = match (name.to_ascii_lowercase().as_str(), angle) {
                ("h", None) => GateKind::H,
                ("x", None) => GateKind::X,
                ("cx" | "cnot", None) => GateKind::Cnot,
                ("cz", None) => GateKind::Cz,
                ("swap", None) => GateKind::Swap,
                ("p" | "phase" | "u1", Some(t)) => GateKind::Phase(t),
                ("cp" | "cphase" | "cu1", Some(t)) => GateKind::CPhase(t),
                ("z", None) => GateKind::Phase(PI),
                _ => return Err(err(format!("unknown gate {head:?}"))),
            };
            let (nc, _) = kind.arity();
            if qubits.len() < nc {
                return Err(err(format!("{head} needs more qubits")));
            }
            let op = GateOp::new(kind, qubits[..nc].to_vec(), qubits[nc..].to_vec())
                .map_err(|e| err(e.to_string()))?;
            c.push(op).map_err(|e| err(e.to_string()))?;
        }
        circuit.ok_or(Error::Parse {
            line: 0,
            message: "empty circuit file".into(),
        })
    }
}

fn parse_qubit(word: &str) -> std::result::Result<usize, String> {
    word.strip_prefix("q[")
        .and_then(|w| w.strip_suffix(']'))
        .and_then(|w| w.parse().ok())
        .ok_or_else(|| format!("expected qubit like q[3], got {word:?}"))
}

/// Accepts `0.5`, `pi`, `-pi/4`, `3*pi/2`.
fn parse_angle(text: &str) -> std::result::Result<f64, String> {
    let t = text.trim().replace(' ', "");
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    let bad = || format!("bad angle {text:?}");
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.as_str()),
    };
    let (num, den) = match body.split_once('/') {
        Some((n, d)) => (n, d.parse::<f64>().map_err(|_| bad())?),
        None => (body, 1.0),
    };
    let mult = match num.strip_suffix("pi") {
        Some("") => 1.0,
        Some(m) => m
            .strip_suffix('*')
            .and_then(|m| m.parse::<f64>().ok())
            .ok_or_else(bad)?,
        None => return Err(bad()),
    };
    let v = mult * PI / den;
    Ok(if neg { -v } else { v })
}

fn check_register(qubits: &[usize]) -> Result<()> {
    for (k, q) in qubits.iter().enumerate() {
        if qubits[..k].contains(q) {
            return Err(Error::DuplicateQubit(*q));
        }
    }
    Ok(())
}

fn circuit_over(register: &[usize]) -> Result<Circuit> {
    if register.is_empty() {
        return Err(Error::EmptyRegister);
    }
    check_register(register)?;
    let n = register.iter().max().map_or(0, |m| m + 1);
    Ok(Circuit::new(n))
}

/// Quantum Fourier transform on `register` (`register[0]` least significant):
/// |y⟩ ↦ Σ_j e^{2πi·y·j/2^n} |j⟩ / √(2^n). Trailing swaps restore the bit order.
pub fn qft(register: &[usize]) -> Result<Circuit> {
    let mut c = circuit_over(register)?;
    let n = register.len();
    for i in (0..n).rev() {
        c.push(GateOp::h(register[i]))?;
        for k in (0..i).rev() {
            let theta = PI / (1u64 << (i - k)) as f64;
            c.push(GateOp::cphase(register[k], register[i], theta)?)?;
        }
    }
    for i in 0..n / 2 {
        c.push(GateOp::swap(register[i], register[n - 1 - i])?)?;
    }
    Ok(c)
}

/// Inverse of [`qft`].
pub fn iqft(register: &[usize]) -> Result<Circuit> {
    Ok(qft(register)?.inverse())
}

/// CNOT from each home qubit onto its transmitted partner:
/// Σ c_j |j⟩_h |0⟩_t ↦ Σ c_j |j⟩_h |j⟩_t.
pub fn entangle_registers(home: &[usize], transmitted: &[usize]) -> Result<Circuit> {
    if home.len() != transmitted.len() {
        return Err(Error::RegisterLengthMismatch(home.len(), transmitted.len()));
    }
    let all: Vec<usize> = home.iter().chain(transmitted).copied().collect();
    let mut c = circuit_over(&all)?;
    for (&h, &t) in home.iter().zip(transmitted) {
        c.push(GateOp::cnot(h, t)?)?;
    }
    Ok(c)
}

/// How a party's controlled-U^j is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    /// Controlled gates onto an explicit secret register holding |y⟩.
    Literal,
    /// Phase rotations directly on the transmitted register.
    #[default]
    Kickback,
}

impl std::str::FromStr for OracleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "literal" => Ok(OracleMode::Literal),
            "kickback" => Ok(OracleMode::Kickback),
            _ => Err(Error::Config(format!("unknown oracle mode {s:?}"))),
        }
    }
}

/// Fraction r/N (as r) of a full turn for `2^shift` units modulo N = 2^n.
fn turn_numerator(shift: usize, n: usize) -> u64 {
    if shift >= n {
        0
    } else {
        1u64 << shift
    }
}

/// Party oracle multiplying each |j⟩_t branch by e^{2πi·y·j/2^n}.
///
/// Kickback mode emits `PHASE(2π·y·2^k/2^n)` on transmitted qubit `k`.
/// Literal mode emits controlled-U^(2^k) from transmitted qubit `k` onto the
/// bits of `scratch` that are set in `secret`, assuming the caller prepared
/// `scratch` in |y⟩. Factors equal to the identity are omitted, and half-turn
/// controlled phases are written as H·CNOT·H on the secret qubit.
pub fn oracle_circuit(
    secret: u64,
    transmitted: &[usize],
    mode: OracleMode,
    scratch: Option<&[usize]>,
) -> Result<Circuit> {
    let n = transmitted.len();
    let modulus = 1u64 << n;
    if secret >= modulus {
        return Err(Error::SecretOutOfRange { modulus });
    }
    match mode {
        OracleMode::Kickback => {
            let mut c = circuit_over(transmitted)?;
            for (k, &t) in transmitted.iter().enumerate() {
                let r = (secret << k) % modulus;
                if r != 0 {
                    c.push(GateOp::phase(t, TAU * r as f64 / modulus as f64))?;
                }
            }
            Ok(c)
        }
        OracleMode::Literal => {
            let scratch = scratch.ok_or(Error::MissingScratch)?;
            if scratch.len() != n {
                return Err(Error::RegisterLengthMismatch(n, scratch.len()));
            }
            let all: Vec<usize> = transmitted.iter().chain(scratch).copied().collect();
            let mut c = circuit_over(&all)?;
            for (k, &t) in transmitted.iter().enumerate() {
                for (b, &s) in scratch.iter().enumerate() {
                    if (secret >> b) & 1 == 0 {
                        continue;
                    }
                    let r = turn_numerator(b + k, n);
                    if r == 0 {
                        continue;
                    }
                    if 2 * r == modulus {
                        c.push(GateOp::h(s))?;
                        c.push(GateOp::cnot(t, s)?)?;
                        c.push(GateOp::h(s))?;
                    } else {
                        c.push(GateOp::cphase(t, s, TAU * r as f64 / modulus as f64)?)?;
                    }
                }
            }
            Ok(c)
        }
    }
}

/// Local matrix of a gate over its qubits in `GateOp::qubits()` order
/// (local bit i ↔ i-th listed qubit).
fn local_matrix(op: &GateOp) -> Vec<Complex64> {
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let perm4 = |p: [usize; 4]| {
        let mut m = vec![z; 16];
        for (col, &row) in p.iter().enumerate() {
            m[row * 4 + col] = o;
        }
        m
    };
    let diag4 = |d: Complex64| {
        let mut m = vec![z; 16];
        for i in 0..3 {
            m[i * 4 + i] = o;
        }
        m[15] = d;
        m
    };
    match op.kind() {
        GateKind::H => vec![s, s, s, -s],
        GateKind::X => vec![z, o, o, z],
        GateKind::Phase(t) => vec![o, z, z, Complex64::from_polar(1.0, t)],
        // local index = control + 2·target
        GateKind::Cnot => perm4([0, 3, 2, 1]),
        GateKind::Cz => diag4(-o),
        GateKind::CPhase(t) => diag4(Complex64::from_polar(1.0, t)),
        GateKind::Swap => perm4([0, 2, 1, 3]),
    }
}

/// Left-multiplies `m` (dim × cols, rows indexed by basis state) by `op`.
fn apply_local(m: &mut DMatrix<Complex64>, op: &GateOp) {
    let qubits: Vec<usize> = op.qubits().collect();
    let k = qubits.len();
    let local = local_matrix(op);
    let ldim = 1usize << k;
    let mask: usize = qubits.iter().map(|q| 1usize << q).sum();
    let offsets: Vec<usize> = (0..ldim)
        .map(|l| {
            qubits
                .iter()
                .enumerate()
                .fold(0, |acc, (i, &q)| acc | (((l >> i) & 1) << q))
        })
        .collect();
    let mut buf = vec![Complex64::new(0.0, 0.0); ldim];
    for col in 0..m.ncols() {
        for base in 0..m.nrows() {
            if base & mask != 0 {
                continue;
            }
            for (l, off) in offsets.iter().enumerate() {
                buf[l] = m[(base | off, col)];
            }
            for (r, off) in offsets.iter().enumerate() {
                m[(base | off, col)] = (0..ldim).map(|c| local[r * ldim + c] * buf[c]).sum();
            }
        }
    }
}

/// Full 2^q × 2^q unitary of `circuit` (q ≤ [`MATRIX_CAPACITY`]). Built from
/// per-gate local matrices, independently of the statevector kernels.
pub fn circuit_to_matrix(circuit: &Circuit) -> Result<DMatrix<Complex64>> {
    let q = circuit.qubit_count();
    if q > MATRIX_CAPACITY {
        return Err(Error::Capacity {
            qubit_count: q,
            capacity: MATRIX_CAPACITY,
        });
    }
    let mut m = DMatrix::identity(1 << q, 1 << q);
    for op in circuit.ops() {
        apply_local(&mut m, op);
    }
    Ok(m)
}

/// True when `a = λ·b` for some unit-modulus λ, element-wise within `tol`.
pub fn equal_up_to_global_phase(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>, tol: f64) -> bool {
    if a.shape() != b.shape() {
        return false;
    }
    let Some((idx, _)) = b
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))
    else {
        return true;
    };
    if b[idx].norm() < tol {
        return a.iter().all(|z| z.norm() <= tol);
    }
    let lambda = a[idx] / b[idx];
    if (lambda.norm() - 1.0).abs() > tol {
        return false;
    }
    a.iter()
        .zip(b.iter())
        .all(|(x, y)| (x - lambda * y).norm() <= tol)
}

/// Largest element-wise deviation of U†U from the identity.
pub fn unitarity_error(u: &DMatrix<Complex64>) -> f64 {
    let p = u.adjoint() * u;
    let id = DMatrix::<Complex64>::identity(p.nrows(), p.ncols());
    (p - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Block of `u` acting on the remaining qubits when the qubits in `fixed` are
/// held in basis value `value` on both input and output. Remaining qubits keep
/// their relative order.
pub fn fixed_register_block(
    u: &DMatrix<Complex64>,
    fixed: &[usize],
    value: u64,
) -> DMatrix<Complex64> {
    let q = u.nrows().trailing_zeros() as usize;
    let fixed_bits = fixed.iter().enumerate().fold(0usize, |acc, (k, &b)| {
        acc | ((((value >> k) & 1) as usize) << b)
    });
    let fixed_mask: usize = fixed.iter().map(|b| 1 << b).sum();
    let indices: Vec<usize> = (0..1usize << q)
        .filter(|i| i & fixed_mask == fixed_bits)
        .collect();
    DMatrix::from_fn(indices.len(), indices.len(), |r, c| {
        u[(indices[r], indices[c])]
    })
}
