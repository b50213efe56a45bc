//! Rewriting circuits onto a directed CNOT coupling map.
//!
//! The physical gate set is {H, X, CNOT, PHASE}. Rewriting runs in a fixed
//! order: non-physical gates are decomposed (CZ, CPHASE, SWAP), CNOTs whose
//! edge only exists in the reverse direction are conjugated by Hadamards, and
//! CNOTs between non-adjacent qubits are routed with SWAP chains. Adjacent H
//! pairs introduced by the rewrites are cancelled at the end.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::gate::{GateKind, GateOp};

/// Directed CNOT adjacency: an edge (a, b) means CNOT with control a and
/// target b is native.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingMap {
    qubit_count: usize,
    edges: BTreeSet<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct CouplingMapFile {
    qubits: usize,
    edges: Vec<[usize; 2]>,
}

impl CouplingMap {
    pub fn new(
        qubit_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let edges: BTreeSet<_> = edges.into_iter().collect();
        for &(a, b) in &edges {
            if a == b {
                return Err(Error::CouplingMap(format!("self-edge on qubit {a}")));
            }
            if a >= qubit_count || b >= qubit_count {
                return Err(Error::CouplingMap(format!(
                    "edge ({a}, {b}) outside {qubit_count} qubits"
                )));
            }
        }
        Ok(Self { qubit_count, edges })
    }

    /// The five-qubit ibmqx2 device: {0: [1, 2], 1: [2], 3: [2, 4], 4: [2]}.
    pub fn ibmqx2() -> Self {
        Self::new(5, [(0, 1), (0, 2), (1, 2), (3, 2), (3, 4), (4, 2)]).expect("static map")
    }

    /// Reads `{"qubits": N, "edges": [[a, b], ...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let f: CouplingMapFile =
            serde_json::from_str(text).map_err(|e| Error::CouplingMap(e.to_string()))?;
        Self::new(f.qubits, f.edges.into_iter().map(|[a, b]| (a, b)))
    }

    pub fn to_json(&self) -> String {
        let f = CouplingMapFile {
            qubits: self.qubit_count,
            edges: self.edges.iter().map(|&(a, b)| [a, b]).collect(),
        };
        serde_json::to_string(&f).expect("plain data serializes")
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, control: usize, target: usize) -> bool {
        self.edges.contains(&(control, target))
    }

    pub fn connected(&self, a: usize, b: usize) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a)
    }

    /// Undirected neighbours of `q`.
    pub fn neighbors(&self, q: usize) -> Vec<usize> {
        (0..self.qubit_count)
            .filter(|&o| o != q && self.connected(q, o))
            .collect()
    }

    pub fn degree(&self, q: usize) -> usize {
        self.neighbors(q).len()
    }

    /// Shortest undirected path from `from` to `to`. Among equally short
    /// paths, higher-degree vertices win, then lower indices.
    pub fn shortest_path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        if from >= self.qubit_count || to >= self.qubit_count {
            return None;
        }
        let mut parent = vec![usize::MAX; self.qubit_count];
        parent[from] = from;
        let mut queue = VecDeque::from([from]);
        while let Some(v) = queue.pop_front() {
            if v == to {
                let mut path = vec![to];
                let mut cur = to;
                while cur != from {
                    cur = parent[cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            let mut next = self.neighbors(v);
            next.sort_by_key(|&u| (std::cmp::Reverse(self.degree(u)), u));
            for u in next {
                if parent[u] == usize::MAX {
                    parent[u] = v;
                    queue.push_back(u);
                }
            }
        }
        None
    }
}

/// Why an op is not executable on the device.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// Gate outside {H, X, CNOT, PHASE}.
    NonPhysicalGate {
        op_index: usize,
        gate: String,
    },
    /// CNOT whose (control, target) is not an edge.
    MissingEdge {
        op_index: usize,
        control: usize,
        target: usize,
    },
    QubitOutsideMap {
        op_index: usize,
        qubit: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPhysicalGate { op_index, gate } => {
                write!(f, "op {op_index}: {gate} is not a physical gate")
            }
            Violation::MissingEdge {
                op_index,
                control,
                target,
            } => write!(f, "op {op_index}: no coupling edge {control}->{target}"),
            Violation::QubitOutsideMap { op_index, qubit } => {
                write!(f, "op {op_index}: qubit {qubit} not on the device")
            }
        }
    }
}

/// All reasons `circuit` cannot run as-is on `map`; empty means legal.
pub fn validate(circuit: &Circuit, map: &CouplingMap) -> Vec<Violation> {
    let mut out = Vec::new();
    for (op_index, op) in circuit.ops().iter().enumerate() {
        if let Some(qubit) = op.qubits().find(|&q| q >= map.qubit_count()) {
            out.push(Violation::QubitOutsideMap { op_index, qubit });
            continue;
        }
        match op.kind() {
            GateKind::H | GateKind::X | GateKind::Phase(_) => {}
            GateKind::Cnot => {
                let (control, target) = (op.controls()[0], op.target());
                if !map.has_edge(control, target) {
                    out.push(Violation::MissingEdge {
                        op_index,
                        control,
                        target,
                    });
                }
            }
            k => out.push(Violation::NonPhysicalGate {
                op_index,
                gate: k.name().to_string(),
            }),
        }
    }
    out
}

fn cz_sequence(control: usize, target: usize) -> Vec<GateOp> {
    vec![
        GateOp::h(target),
        GateOp::cnot(control, target).expect("distinct qubits"),
        GateOp::h(target),
    ]
}

/// Replaces each CZ by H(target)·CNOT·H(target); other gates are untouched.
pub fn decompose_cz(circuit: &Circuit) -> Circuit {
    let ops = circuit
        .ops()
        .iter()
        .flat_map(|op| match op.kind() {
            GateKind::Cz => cz_sequence(op.controls()[0], op.target()),
            _ => vec![op.clone()],
        })
        .collect();
    Circuit::from_parts(circuit.qubit_count(), ops, circuit.registers().to_vec())
}

/// CNOT(control → target) written with the opposite CNOT:
/// H(a)·H(b)·CNOT(b → a)·H(a)·H(b).
pub fn reverse_cnot(control: usize, target: usize) -> Result<Vec<GateOp>> {
    Ok(vec![
        GateOp::h(control),
        GateOp::h(target),
        GateOp::cnot(target, control)?,
        GateOp::h(control),
        GateOp::h(target),
    ])
}

/// Name of a rewrite applied by [`transpile`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RewriteRule {
    DecomposeCz,
    DecomposeCphase,
    DecomposeSwap,
    ReverseCnot,
    RouteCnot,
    CancelHadamards,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rewrite {
    pub rule: RewriteRule,
    /// Index of the op in the input circuit the rewrite came from.
    pub site: usize,
    pub qubits: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranspileReport {
    pub original_gate_count: usize,
    pub rewritten_gate_count: usize,
    pub rewrites: Vec<Rewrite>,
    /// Logical → physical qubit map, when one was applied.
    pub layout: Option<Vec<usize>>,
}

struct Emitter<'a> {
    map: &'a CouplingMap,
    /// (gate, produced by a rewrite)
    ops: Vec<(GateOp, bool)>,
    rewrites: Vec<Rewrite>,
}

impl Emitter<'_> {
    fn note(&mut self, rule: RewriteRule, site: usize, qubits: Vec<usize>) {
        self.rewrites.push(Rewrite { rule, site, qubits });
    }

    fn synthetic(&mut self, op: GateOp) {
        self.ops.push((op, true));
    }

    /// Emits a CNOT legal on the map, rewriting as needed.
    fn cnot(&mut self, control: usize, target: usize, site: usize, original: bool) -> Result<()> {
        if self.map.has_edge(control, target) {
            self.ops.push((GateOp::cnot(control, target)?, !original));
            return Ok(());
        }
        if self.map.has_edge(target, control) {
            self.note(RewriteRule::ReverseCnot, site, vec![control, target]);
            for op in reverse_cnot(control, target)? {
                self.synthetic(op);
            }
            return Ok(());
        }
        let path = self
            .map
            .shortest_path(control, target)
            .ok_or(Error::Unroutable(control, target))?;
        self.note(RewriteRule::RouteCnot, site, path.clone());
        // Walk the control's state along the path until it neighbours the target.
        let hops: Vec<(usize, usize)> = path[..path.len() - 1]
            .windows(2)
            .map(|w| (w[0], w[1]))
            .collect();
        for &(a, b) in &hops {
            self.swap(a, b, site)?;
        }
        self.cnot(path[path.len() - 2], target, site, false)?;
        for &(a, b) in hops.iter().rev() {
            self.swap(a, b, site)?;
        }
        Ok(())
    }

    /// SWAP over an existing edge as three CNOTs, two of them native.
    fn swap(&mut self, a: usize, b: usize, site: usize) -> Result<()> {
        let (x, y) = if self.map.has_edge(a, b) {
            (a, b)
        } else {
            (b, a)
        };
        self.cnot(x, y, site, false)?;
        self.cnot(y, x, site, false)?;
        self.cnot(x, y, site, false)
    }

    /// Drops adjacent synthetic H pairs on the same qubit.
    fn cancel_hadamards(&mut self) {
        let width = self
            .ops
            .iter()
            .map(|(op, _)| op.max_qubit() + 1)
            .max()
            .unwrap_or(0);
        let mut kept: Vec<Option<(GateOp, bool)>> = Vec::with_capacity(self.ops.len());
        let mut last_on: Vec<Vec<usize>> = vec![Vec::new(); width];
        let mut cancelled = Vec::new();
        for (op, synth) in self.ops.drain(..) {
            if synth && op.kind() == GateKind::H {
                let q = op.target();
                if let Some(&j) = last_on[q].last() {
                    if let Some((prev, true)) = &kept[j] {
                        if prev.kind() == GateKind::H {
                            kept[j] = None;
                            last_on[q].pop();
                            cancelled.push(q);
                            continue;
                        }
                    }
                }
            }
            for q in op.qubits() {
                last_on[q].push(kept.len());
            }
            kept.push(Some((op, synth)));
        }
        self.ops = kept.into_iter().flatten().collect();
        for q in cancelled {
            self.note(RewriteRule::CancelHadamards, usize::MAX, vec![q]);
        }
    }
}

/// Rewrites `circuit` so every gate is physical and every CNOT follows an
/// edge of `map`. The result is matrix-equivalent to the input.
pub fn transpile(circuit: &Circuit, map: &CouplingMap) -> Result<(Circuit, TranspileReport)> {
    transpile_with_layout(circuit, map, None)
}

/// As [`transpile`], first moving logical qubit `q` to physical `layout[q]`.
pub fn transpile_with_layout(
    circuit: &Circuit,
    map: &CouplingMap,
    layout: Option<&[usize]>,
) -> Result<(Circuit, TranspileReport)> {
    let placed = match layout {
        Some(l) => circuit.relabel(l, circuit.qubit_count().max(map.qubit_count()))?,
        None => circuit.clone(),
    };
    if let Some(op) = placed
        .ops()
        .iter()
        .find(|op| op.max_qubit() >= map.qubit_count())
    {
        return Err(Error::QubitOutOfRange {
            index: op.max_qubit(),
            qubit_count: map.qubit_count(),
        });
    }
    let mut em = Emitter {
        map,
        ops: Vec::with_capacity(placed.len()),
        rewrites: Vec::new(),
    };
    for (site, op) in placed.ops().iter().enumerate() {
        match op.kind() {
            GateKind::H | GateKind::X | GateKind::Phase(_) => em.ops.push((op.clone(), false)),
            GateKind::Cnot => em.cnot(op.controls()[0], op.target(), site, true)?,
            GateKind::Cz => {
                let (c, t) = (op.controls()[0], op.target());
                em.note(RewriteRule::DecomposeCz, site, vec![c, t]);
                em.synthetic(GateOp::h(t));
                em.cnot(c, t, site, false)?;
                em.synthetic(GateOp::h(t));
            }
            GateKind::CPhase(theta) => {
                let (c, t) = (op.controls()[0], op.target());
                em.note(RewriteRule::DecomposeCphase, site, vec![c, t]);
                em.synthetic(GateOp::phase(c, theta / 2.0));
                em.cnot(c, t, site, false)?;
                em.synthetic(GateOp::phase(t, -theta / 2.0));
                em.cnot(c, t, site, false)?;
                em.synthetic(GateOp::phase(t, theta / 2.0));
            }
            GateKind::Swap => {
                let (a, b) = (op.targets()[0], op.targets()[1]);
                em.note(RewriteRule::DecomposeSwap, site, vec![a, b]);
                em.cnot(a, b, site, false)?;
                em.cnot(b, a, site, false)?;
                em.cnot(a, b, site, false)?;
            }
        }
    }
    em.cancel_hadamards();
    let ops: Vec<GateOp> = em.ops.into_iter().map(|(op, _)| op).collect();
    let width = ops
        .iter()
        .map(|op| op.max_qubit() + 1)
        .fold(placed.qubit_count(), usize::max);
    let report = TranspileReport {
        original_gate_count: circuit.len(),
        rewritten_gate_count: ops.len(),
        rewrites: em.rewrites,
        layout: layout.map(<[usize]>::to_vec),
    };
    let out = Circuit::from_parts(width, ops, placed.registers().to_vec());
    debug_assert!(validate(&out, map).is_empty());
    Ok((out, report))
}
