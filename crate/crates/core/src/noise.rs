//! Gate-dependent noise models.
//!
//! A [`GateSet`] pairs a group with one fixed noisy transfer matrix per
//! element. Noise is drawn once at construction: the resulting maps are
//! time-independent and Markovian but may differ arbitrarily between gates.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chanalg::{gates, CMatrix, OperatorVec, SuperOp, C64};
use crate::error::{Error, Result};
use crate::groups::{ElementLabel, GateId, GroupKind, GroupTable};
use crate::rng::{self, Domain};

/// Haar-random element of SU(2), from a uniformly random unit quaternion.
pub fn haar_su2<R: Rng + ?Sized>(rng: &mut R) -> CMatrix {
    let mut q = [0.0f64; 4];
    let mut norm2 = 0.0;
    while norm2 < 1e-300 {
        for x in q.iter_mut() {
            *x = StandardNormal.sample(rng);
        }
        norm2 = q.iter().map(|x| x * x).sum();
    }
    let n = norm2.sqrt();
    let [a, b, c, d] = q.map(|x| x / n);
    CMatrix::from_row_slice(
        2,
        2,
        &[C64::new(a, b), C64::new(c, d), C64::new(-c, d), C64::new(a, -b)],
    )
}

/// Rotation angle giving a unitary of infidelity `r`: `theta = arcsin sqrt(3r/2)`.
pub fn infidelity_angle(r: f64) -> Result<f64> {
    if !(0.0..=2.0 / 3.0).contains(&r) {
        return Err(Error::validation("fixed_infidelity_unitary", format!("r = {r} outside [0, 2/3]")));
    }
    Ok((1.5 * r).sqrt().min(1.0).asin())
}

/// `U = V exp(-i theta Z) V^dag` with Haar-random `V`; every such `U` has
/// average infidelity exactly `r`.
pub fn fixed_infidelity_unitary<R: Rng + ?Sized>(r: f64, rng: &mut R) -> Result<CMatrix> {
    let theta = infidelity_angle(r)?;
    let v = haar_su2(rng);
    if theta == 0.0 {
        return Ok(gates::identity2());
    }
    Ok(&v * gates::exp_z(theta) * v.adjoint())
}

/// Convex mixture of `k` Haar-random unitary channels with random weights.
pub fn random_unitary_mixture<R: Rng + ?Sized>(rng: &mut R, k: usize) -> SuperOp {
    let weights: Vec<f64> = (0..k.max(1)).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut acc = SuperOp::zero(2);
    for w in weights {
        let u = SuperOp::from_unitary(&haar_su2(rng)).expect("Haar sample is unitary");
        acc = acc.add(&u.scale(w / total)).expect("same dimension");
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    RandomUnitary,
    DepolZ,
    GateIndependent,
}

/// Flat noise configuration as read from a run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub model: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Gate-independent model: map applied after every ideal gate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left: Option<SuperOp>,
    /// Gate-independent model: map applied before every ideal gate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right: Option<SuperOp>,
}

impl NoiseSpec {
    pub fn random_unitary(r: f64, seed: u64) -> Self {
        Self { r: Some(r), seed: Some(seed), ..Self::empty(ModelKind::RandomUnitary) }
    }

    pub fn depol_z(nu: f64, theta: f64) -> Self {
        Self { nu: Some(nu), theta: Some(theta), ..Self::empty(ModelKind::DepolZ) }
    }

    pub fn gate_independent(left: Option<SuperOp>, right: Option<SuperOp>) -> Self {
        Self { left, right, ..Self::empty(ModelKind::GateIndependent) }
    }

    fn empty(model: ModelKind) -> Self {
        Self { model, r: None, nu: None, theta: None, partition: None, seed: None, left: None, right: None }
    }

    /// Same model with a different noise seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed: Some(seed), ..self.clone() }
    }

    pub fn build(&self, group: Arc<GroupTable>) -> Result<GateSet> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::validation("NoiseSpec::build", format!("model {:?} requires \"{name}\"", self.model)))
        };
        match self.model {
            ModelKind::RandomUnitary => {
                random_unitary_gateset(group, need(self.r, "r")?, self.seed.unwrap_or(0))
            }
            ModelKind::DepolZ => depol_z_gateset(
                group,
                need(self.nu, "nu")?,
                need(self.theta, "theta")?,
                self.partition.as_deref(),
            ),
            ModelKind::GateIndependent => {
                let dim = group.dim();
                let left = self.left.clone().unwrap_or_else(|| SuperOp::identity(dim));
                let right = self.right.clone().unwrap_or_else(|| SuperOp::identity(dim));
                gate_independent_gateset(group, Placement::Both(left, right))
            }
        }
    }
}

/// Where a gate-independent noise map sits relative to the ideal gate.
#[derive(Debug, Clone)]
pub enum Placement {
    /// `E G`
    Left(SuperOp),
    /// `G E`
    Right(SuperOp),
    /// `L G R`
    Both(SuperOp, SuperOp),
}

/// A group with one noisy implementation per element.
///
/// `frame` records the accumulated gauge `S` when the set was produced by
/// [`crate::decomp::gauge_transform`]; states of the physical frame map into
/// this one as `S^{-1} |rho>>` and observables as `S^T |Q>>`.
#[derive(Debug, Clone)]
pub struct GateSet {
    group: Arc<GroupTable>,
    noisy: Vec<SuperOp>,
    description: String,
    frame: SuperOp,
}

impl GateSet {
    pub fn new(group: Arc<GroupTable>, noisy: Vec<SuperOp>, description: impl Into<String>) -> Result<Self> {
        const OP: &str = "GateSet::new";
        if noisy.len() != group.order() {
            return Err(Error::validation(OP, format!("{} maps for a group of order {}", noisy.len(), group.order())));
        }
        if let Some(bad) = noisy.iter().find(|s| s.dim() != group.dim()) {
            return Err(Error::DimensionMismatch { op: OP, left: bad.dim(), right: group.dim() });
        }
        let frame = SuperOp::identity(group.dim());
        Ok(Self { group, noisy, description: description.into(), frame })
    }

    pub(crate) fn with_frame(mut self, frame: SuperOp) -> Self {
        self.frame = frame;
        self
    }

    /// Noiseless implementation of `group`.
    pub fn ideal(group: Arc<GroupTable>) -> Self {
        let noisy = group.ideals().to_vec();
        Self::new(group, noisy, "ideal").expect("consistent by construction")
    }

    pub fn group(&self) -> &GroupTable {
        &self.group
    }

    pub fn group_arc(&self) -> &Arc<GroupTable> {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.group.dim()
    }

    pub fn noisy(&self, g: GateId) -> &SuperOp {
        &self.noisy[g.0]
    }

    pub fn noisy_all(&self) -> &[SuperOp] {
        &self.noisy
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn frame(&self) -> &SuperOp {
        &self.frame
    }

    /// `S^{-1} |rho>>`: a physical-frame state expressed in this set's gauge.
    pub fn state_in_frame(&self, rho: &OperatorVec) -> Result<OperatorVec> {
        let inv = self
            .frame
            .try_inverse()
            .ok_or(Error::Gauge { op: "state_in_frame", cond: f64::INFINITY })?;
        inv.apply(rho)
    }

    /// `S^T |Q>>`: a physical-frame observable expressed in this set's gauge.
    pub fn observable_in_frame(&self, q: &OperatorVec) -> Result<OperatorVec> {
        self.frame.adjoint().apply(q)
    }

    /// True if every noisy map has first row `e_1^T` within `tol`.
    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        self.noisy.iter().all(|s| {
            let row = s.mat().row(0);
            (row[0] - 1.0).abs() <= tol && row.iter().skip(1).all(|x| x.abs() <= tol)
        })
    }
}

/// Each `G = T^t P` is implemented as `U_G T^t V_G P`, where `U_G`, `V_G` are
/// independent infidelity-`r` unitaries drawn from the stream keyed by
/// `(seed, G)`.
pub fn random_unitary_gateset(group: Arc<GroupTable>, r: f64, seed: u64) -> Result<GateSet> {
    const OP: &str = "random_unitary_gateset";
    if group.kind() != GroupKind::TPauli {
        return Err(Error::validation(OP, "random unitary noise is defined for the T-Pauli group"));
    }
    infidelity_angle(r)?;
    let t = gates::t_gate();
    let paulis = gates::paulis();
    let noisy = group
        .ids()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|g| {
            let ElementLabel::TPauli { t: tp, pauli } = group.label(g) else {
                return Err(Error::validation(OP, "element without a T-Pauli label"));
            };
            let mut rng = rng::stream(seed, Domain::GateNoise, g.0 as u32, 0);
            let u = fixed_infidelity_unitary(r, &mut rng)?;
            let v = fixed_infidelity_unitary(r, &mut rng)?;
            let mut t_pow = gates::identity2();
            for _ in 0..*tp {
                t_pow = &t_pow * &t;
            }
            let implemented = u * t_pow * v * &paulis[*pauli as usize];
            SuperOp::from_unitary(&implemented)
        })
        .collect::<Result<Vec<_>>>()?;
    GateSet::new(group, noisy, format!("random_unitary(r={r}, seed={seed})"))
}

/// Default element set carrying the extra rotation: odd indices.
pub fn default_partition(order: usize) -> Vec<usize> {
    (1..order).step_by(2).collect()
}

/// `G D_nu` on every element, with an extra `Z_theta` (`G D_nu Z_theta`) on
/// the elements listed in `partition`.
pub fn depol_z_gateset(
    group: Arc<GroupTable>,
    nu: f64,
    theta: f64,
    partition: Option<&[usize]>,
) -> Result<GateSet> {
    const OP: &str = "depol_z_gateset";
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::validation(OP, format!("nu = {nu} outside (0, 1]")));
    }
    if !(0.0..FRAC_PI_2).contains(&theta) {
        return Err(Error::validation(OP, format!("theta = {theta} outside [0, pi/2)")));
    }
    if group.dim() != 2 {
        return Err(Error::UnsupportedDimension { op: OP, dim: group.dim() });
    }
    let n = group.order();
    let partition = partition.map(<[usize]>::to_vec).unwrap_or_else(|| default_partition(n));
    let mut rotated = vec![false; n];
    for &i in &partition {
        if i >= n {
            return Err(Error::validation(OP, format!("partition index {i} out of range for order {n}")));
        }
        if rotated[i] {
            return Err(Error::validation(OP, format!("partition index {i} repeated")));
        }
        rotated[i] = true;
    }
    let dep = SuperOp::depolarizing(nu, 1.0, 2);
    let dep_z = dep.compose(&SuperOp::from_unitary(&gates::z_theta(theta))?)?;
    let noisy = group
        .ideals()
        .iter()
        .zip(&rotated)
        .map(|(g, &rot)| g.compose(if rot { &dep_z } else { &dep }))
        .collect::<Result<Vec<_>>>()?;
    GateSet::new(group, noisy, format!("depol_z(nu={nu}, theta={theta}, |partition|={})", partition.len()))
}

pub fn gate_independent_gateset(group: Arc<GroupTable>, placement: Placement) -> Result<GateSet> {
    let dim = group.dim();
    let (left, right) = match placement {
        Placement::Left(e) => (e, SuperOp::identity(dim)),
        Placement::Right(e) => (SuperOp::identity(dim), e),
        Placement::Both(l, r) => (l, r),
    };
    let noisy = group
        .ideals()
        .iter()
        .map(|g| SuperOp::compose_all([&left, g, &right]))
        .collect::<Result<Vec<_>>>()?;
    GateSet::new(group, noisy, "gate_independent")
}
