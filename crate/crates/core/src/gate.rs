use std::fmt;

use crate::error::{Error, Result};

/// Gate vocabulary of the simulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateKind {
    H,
    X,
    Cnot,
    Cz,
    /// diag(1, e^{iθ}), θ in radians.
    Phase(f64),
    /// Controlled [`GateKind::Phase`].
    CPhase(f64),
    Swap,
}

impl GateKind {
    pub fn name(&self) -> &'static str {
        match self {
            GateKind::H => "h",
            GateKind::X => "x",
            GateKind::Cnot => "cx",
            GateKind::Cz => "cz",
            GateKind::Phase(_) => "p",
            GateKind::CPhase(_) => "cp",
            GateKind::Swap => "swap",
        }
    }

    /// (controls, targets) required by the kind.
    pub fn arity(&self) -> (usize, usize) {
        match self {
            GateKind::H | GateKind::X | GateKind::Phase(_) => (0, 1),
            GateKind::Cnot | GateKind::Cz | GateKind::CPhase(_) => (1, 1),
            GateKind::Swap => (0, 2),
        }
    }
}

/// One gate application.
///
/// Construct through the named constructors or [`GateOp::new`], which checks
/// arity and that controls and targets are disjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct GateOp {
    kind: GateKind,
    controls: Vec<usize>,
    targets: Vec<usize>,
}

impl GateOp {
    pub fn new(kind: GateKind, controls: Vec<usize>, targets: Vec<usize>) -> Result<Self> {
        let (nc, nt) = kind.arity();
        if controls.len() != nc || targets.len() != nt {
            return Err(Error::GateArity {
                kind: kind.name(),
                expected_controls: nc,
                expected_targets: nt,
            });
        }
        if let Some(&q) = controls.iter().find(|q| targets.contains(q)) {
            return Err(Error::ControlIsTarget(q));
        }
        if nt == 2 && targets[0] == targets[1] {
            return Err(Error::DuplicateQubit(targets[0]));
        }
        Ok(Self {
            kind,
            controls,
            targets,
        })
    }

    pub fn h(q: usize) -> Self {
        Self::single(GateKind::H, q)
    }

    pub fn x(q: usize) -> Self {
        Self::single(GateKind::X, q)
    }

    pub fn phase(q: usize, theta: f64) -> Self {
        Self::single(GateKind::Phase(theta), q)
    }

    pub fn cnot(control: usize, target: usize) -> Result<Self> {
        Self::new(GateKind::Cnot, vec![control], vec![target])
    }

    pub fn cz(control: usize, target: usize) -> Result<Self> {
        Self::new(GateKind::Cz, vec![control], vec![target])
    }

    pub fn cphase(control: usize, target: usize, theta: f64) -> Result<Self> {
        Self::new(GateKind::CPhase(theta), vec![control], vec![target])
    }

    pub fn swap(a: usize, b: usize) -> Result<Self> {
        Self::new(GateKind::Swap, vec![], vec![a, b])
    }

    fn single(kind: GateKind, q: usize) -> Self {
        Self {
            kind,
            controls: Vec::new(),
            targets: vec![q],
        }
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn controls(&self) -> &[usize] {
        &self.controls
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// The single control of a two-qubit controlled gate.
    pub fn control(&self) -> Option<usize> {
        self.controls.first().copied()
    }

    /// The first (for most kinds, only) target.
    pub fn target(&self) -> usize {
        self.targets[0]
    }

    /// Every qubit the gate touches, controls first.
    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.controls.iter().chain(self.targets.iter()).copied()
    }

    pub fn max_qubit(&self) -> usize {
        self.qubits().max().unwrap_or(0)
    }

    pub fn inverse(&self) -> Self {
        let kind = match self.kind {
            GateKind::Phase(t) => GateKind::Phase(-t),
            GateKind::CPhase(t) => GateKind::CPhase(-t),
            k => k,
        };
        Self {
            kind,
            controls: self.controls.clone(),
            targets: self.targets.clone(),
        }
    }

    /// Same gate with every qubit `q` replaced by `layout[q]`.
    pub fn relabel(&self, layout: &[usize]) -> Self {
        Self {
            kind: self.kind,
            controls: self.controls.iter().map(|&q| layout[q]).collect(),
            targets: self.targets.iter().map(|&q| layout[q]).collect(),
        }
    }
}

impl fmt::Display for GateOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            GateKind::Phase(t) | GateKind::CPhase(t) => write!(f, "{}({})", self.kind.name(), t)?,
            _ => f.write_str(self.kind.name())?,
        }
        for q in self.qubits() {
            write!(f, " q[{q}]")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arity_is_enforced() {
        assert!(GateOp::new(GateKind::H, vec![0], vec![1]).is_err());
        assert!(GateOp::new(GateKind::Cnot, vec![], vec![1]).is_err());
        assert!(GateOp::new(GateKind::Swap, vec![], vec![1]).is_err());
        assert_eq!(GateOp::cnot(2, 2), Err(Error::ControlIsTarget(2)));
        assert_eq!(GateOp::swap(1, 1), Err(Error::DuplicateQubit(1)));
    }

    #[test]
    fn display_matches_text_format() {
        assert_eq!(GateOp::h(0).to_string(), "h q[0]");
        assert_eq!(GateOp::cnot(1, 2).unwrap().to_string(), "cx q[1] q[2]");
        assert_eq!(GateOp::phase(3, 0.5).to_string(), "p(0.5) q[3]");
    }

    #[test]
    fn inverse_negates_angles_only() {
        assert_eq!(GateOp::phase(0, 1.0).inverse(), GateOp::phase(0, -1.0));
        assert_eq!(GateOp::h(2).inverse(), GateOp::h(2));
    }
}
