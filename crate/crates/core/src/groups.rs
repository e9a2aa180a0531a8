//! Finite gate groups as multiplication tables over their transfer matrices.
//!
//! Elements are identified at the channel level, so unitaries that differ by
//! a global phase are the same element. Element order is frozen:
//!
//! * T-Pauli: index `4 t + b` for `T^t P_b`, with `(P_0, .., P_3) = (I, X, Y, Z)`.
//! * Clifford: breadth-first closure of `{I}` under left multiplication by
//!   `H` then `S`, keeping the first unitary found for each channel.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::chanalg::{gates, CMatrix, SuperOp};
use crate::error::{Error, Result};
use crate::rng::{self, Domain};

const MATCH_TOL: f64 = 1e-9;
const HOMOMORPHISM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GateId(pub usize);

impl fmt::Display for GateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKind {
    TPauli,
    Clifford,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ElementLabel {
    /// `T^t P_pauli`.
    TPauli { t: u8, pauli: u8 },
    /// Generator word, leftmost factor applied last.
    Word(String),
}

impl fmt::Display for ElementLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementLabel::TPauli { t, pauli } => {
                write!(f, "T^{t} {}", ["I", "X", "Y", "Z"][*pauli as usize])
            }
            ElementLabel::Word(w) if w.is_empty() => f.write_str("I"),
            ElementLabel::Word(w) => f.write_str(w),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GroupTable {
    kind: GroupKind,
    dim: usize,
    mult: Vec<usize>,
    inv: Vec<usize>,
    identity: usize,
    ideal: Vec<SuperOp>,
    unitaries: Vec<CMatrix>,
    labels: Vec<ElementLabel>,
}

impl GroupTable {
    /// Builds the table of a set of unitaries closed under multiplication
    /// (up to phase), checking the group axioms on the way.
    pub fn from_unitaries(
        kind: GroupKind,
        unitaries: Vec<CMatrix>,
        labels: Vec<ElementLabel>,
    ) -> Result<Self> {
        const OP: &str = "GroupTable::from_unitaries";
        let fail = |msg: String| Error::Construction { op: OP, msg };
        if unitaries.is_empty() || unitaries.len() != labels.len() {
            return Err(fail("need one label per element and at least one element".into()));
        }
        let dim = unitaries[0].nrows();
        let ideal = unitaries
            .iter()
            .map(SuperOp::from_unitary)
            .collect::<Result<Vec<_>>>()?;
        let n = ideal.len();
        for i in 0..n {
            for j in 0..i {
                if ideal[i].max_abs_diff(&ideal[j]) < MATCH_TOL {
                    return Err(fail(format!("elements {j} and {i} are the same channel")));
                }
            }
        }
        let find = |s: &SuperOp| ideal.iter().position(|e| e.max_abs_diff(s) < MATCH_TOL);

        let mut mult = vec![0usize; n * n];
        for g in 0..n {
            for h in 0..n {
                let prod = ideal[g].compose(&ideal[h])?;
                let k = find(&prod).ok_or_else(|| fail(format!("product of {g} and {h} not in set")))?;
                if ideal[k].max_abs_diff(&prod) > HOMOMORPHISM_TOL {
                    return Err(fail(format!("ideal[{g}*{h}] differs from the product")));
                }
                mult[g * n + h] = k;
            }
        }
        let identity = find(&SuperOp::identity(dim)).ok_or_else(|| fail("no identity element".into()))?;
        let mut inv = vec![0usize; n];
        for g in 0..n {
            inv[g] = (0..n)
                .find(|&h| mult[g * n + h] == identity)
                .ok_or_else(|| fail(format!("element {g} has no inverse")))?;
            if mult[inv[g] * n + g] != identity {
                return Err(fail(format!("left and right inverse of {g} differ")));
            }
        }
        for a in 0..n {
            for b in 0..n {
                let ab = mult[a * n + b];
                for c in 0..n {
                    if mult[ab * n + c] != mult[a * n + mult[b * n + c]] {
                        return Err(fail(format!("associativity fails at ({a}, {b}, {c})")));
                    }
                }
            }
        }
        Ok(Self { kind, dim, mult, inv, identity, ideal, unitaries, labels })
    }

    /// `{T^t P : t in Z_3, P in {I, X, Y, Z}}`.
    pub fn t_pauli() -> Result<Self> {
        let t = gates::t_gate();
        let paulis = gates::paulis();
        let mut unitaries = Vec::with_capacity(12);
        let mut labels = Vec::with_capacity(12);
        let mut t_pow = gates::identity2();
        for ti in 0..3u8 {
            for (b, p) in paulis.iter().enumerate() {
                unitaries.push(&t_pow * p);
                labels.push(ElementLabel::TPauli { t: ti, pauli: b as u8 });
            }
            t_pow = &t_pow * &t;
        }
        let g = Self::from_unitaries(GroupKind::TPauli, unitaries, labels)?;
        if g.order() != 12 {
            return Err(Error::Construction { op: "build_t_pauli_group", msg: format!("order {}", g.order()) });
        }
        Ok(g)
    }

    /// The 24-element single-qubit Clifford group.
    pub fn clifford() -> Result<Self> {
        let generators = [("H", gates::hadamard()), ("S", gates::phase_s())];
        let mut unitaries = vec![gates::identity2()];
        let mut labels = vec![ElementLabel::Word(String::new())];
        let mut channels = vec![SuperOp::identity(2)];
        let mut next = 0;
        while next < unitaries.len() {
            for (name, gen) in &generators {
                let cand = gen * &unitaries[next];
                let ch = SuperOp::from_unitary(&cand)?;
                if channels.iter().all(|c| c.max_abs_diff(&ch) >= MATCH_TOL) {
                    let ElementLabel::Word(w) = &labels[next] else { unreachable!() };
                    labels.push(ElementLabel::Word(format!("{name}{w}")));
                    unitaries.push(cand);
                    channels.push(ch);
                }
            }
            next += 1;
            if unitaries.len() > 64 {
                break;
            }
        }
        let g = Self::from_unitaries(GroupKind::Clifford, unitaries, labels)?;
        if g.order() != 24 {
            return Err(Error::Construction { op: "build_clifford_group", msg: format!("order {}", g.order()) });
        }
        Ok(g)
    }

    /// The four Paulis. Not a 2-design; used to exercise the rejection path.
    pub fn pauli() -> Result<Self> {
        let labels = ["I", "X", "Y", "Z"].iter().map(|s| ElementLabel::Word(s.to_string())).collect();
        Self::from_unitaries(GroupKind::Custom, gates::paulis().to_vec(), labels)
    }

    pub fn build(kind: GroupKind) -> Result<Self> {
        match kind {
            GroupKind::TPauli => Self::t_pauli(),
            GroupKind::Clifford => Self::clifford(),
            GroupKind::Custom => Err(Error::validation("GroupTable::build", "custom groups need explicit elements")),
        }
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.ideal.len()
    }

    pub fn ids(&self) -> impl ExactSizeIterator<Item = GateId> {
        (0..self.order()).map(GateId)
    }

    pub fn identity(&self) -> GateId {
        GateId(self.identity)
    }

    /// `g h` (apply `h` first).
    pub fn mul(&self, g: GateId, h: GateId) -> GateId {
        GateId(self.mult[g.0 * self.order() + h.0])
    }

    pub fn inv(&self, g: GateId) -> GateId {
        GateId(self.inv[g.0])
    }

    pub fn ideal(&self, g: GateId) -> &SuperOp {
        &self.ideal[g.0]
    }

    pub fn ideals(&self) -> &[SuperOp] {
        &self.ideal
    }

    pub fn unitary(&self, g: GateId) -> &CMatrix {
        &self.unitaries[g.0]
    }

    pub fn label(&self, g: GateId) -> &ElementLabel {
        &self.labels[g.0]
    }

    /// Element whose transfer matrix matches `c` within `1e-9`.
    pub fn find(&self, c: &SuperOp) -> Option<GateId> {
        self.ideal.iter().position(|g| g.max_abs_diff(c) < 1e-9).map(GateId)
    }

    /// Index of `T^t P_b` in the T-Pauli group.
    pub fn t_pauli_id(t: u8, pauli: u8) -> GateId {
        GateId(4 * (t as usize % 3) + pauli as usize % 4)
    }

    /// `G_{m+1} = (G_m ... G_1)^dag` for the sequence `gates = (G_1, ..., G_m)`.
    pub fn sequence_inverse(&self, gates: &[GateId]) -> GateId {
        let total = gates.iter().fold(self.identity(), |acc, &g| self.mul(g, acc));
        self.inv(total)
    }

    /// `E_G (G^dag C G)`.
    pub fn twirl(&self, c: &SuperOp) -> Result<SuperOp> {
        if c.dim() != self.dim {
            return Err(Error::DimensionMismatch { op: "twirl", left: c.dim(), right: self.dim });
        }
        let conj: Vec<SuperOp> = self
            .ideal
            .iter()
            .map(|g| SuperOp::compose_all([&g.adjoint(), c, g]))
            .collect::<Result<_>>()?;
        SuperOp::mean(&conj)
    }

    /// Largest `||twirl(C) - D_{p(C), t(C)}||` over `trials` random mixtures
    /// of Haar-random unitary channels. Errors with the offending residual when
    /// it exceeds `tol`.
    pub fn verify_two_design(&self, trials: usize, tol: f64, seed: u64) -> Result<f64> {
        if trials == 0 {
            return Err(Error::validation("verify_two_design", "trials must be at least 1"));
        }
        if self.dim != 2 {
            return Err(Error::UnsupportedDimension { op: "verify_two_design", dim: self.dim });
        }
        let mut worst = 0.0_f64;
        for i in 0..trials {
            let mut rng = rng::stream(seed, Domain::TestChannels, i as u32, 0);
            let c = crate::noise::random_unitary_mixture(&mut rng, 3);
            worst = worst.max(twirl_residual(self, &c)?);
        }
        if worst > tol {
            return Err(Error::NotTwoDesign { op: "verify_two_design", residual: worst });
        }
        Ok(worst)
    }
}

/// `||twirl(C) - D_{p(C), t(C)}||` in operator norm.
pub fn twirl_residual(group: &GroupTable, c: &SuperOp) -> Result<f64> {
    let tw = group.twirl(c)?;
    let dep = c.decay_params().depolarizing(c.dim());
    Ok(tw.sub(&dep)?.operator_norm())
}
